"""Greedy action selection over a linear value function.

DAS and LSAPA exploit that, for control-affine dynamics and quadratic
features, ``Q(s, u e_i)`` is a univariate quadratic along every action axis.
DAS interpolates it through three equispaced samples; LSAPA fits it by least
squares to many samples simulated under the disturbance distribution, which
moves the fitted vertex to cancel a biased disturbance.  Both combine the
per-axis maxima into the sum policy ``pi_n`` and its scaled version
``pi_c = pi_n / d_a`` and keep whichever scores higher.

``hoot`` is a deterministic hierarchical grid refinement of the action box.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dynamics import ControlAffineDynamics, GaussianDisturbance, estimate_disturbance
from .features import Preference, values

__all__ = [
    "AxialQuadratic",
    "PolicyConfig",
    "RankDeficientFit",
    "fit_axial_quadratic",
    "axis_maximum",
    "QObjective",
    "axial_maxima",
    "combine_axial",
    "das",
    "lsapa",
    "hoot",
    "das_batch",
    "Trajectory",
    "plan_trajectory",
]

METHODS = ("das", "lsapa", "hoot-grid")


class RankDeficientFit(ValueError):
    """The quadratic design matrix does not have full column rank."""


@dataclass(frozen=True)
class AxialQuadratic:
    p2: float
    p1: float
    p0: float

    def __call__(self, u):
        return (self.p2 * u + self.p1) * u + self.p0

    @property
    def concave(self) -> bool:
        return self.p2 < 0


@dataclass
class PolicyConfig:
    method: str = "das"
    samples_per_axis: int = 3
    hoot_levels: int = 3
    hoot_branching: int = 10
    lower: np.ndarray | float = -3.0
    upper: np.ndarray | float = 3.0
    window: int = 100
    planner_disturbance: str = "estimate"  # estimate | oracle | none

    def __post_init__(self):
        if self.method == "hoot":
            self.method = "hoot-grid"
        if self.method not in METHODS:
            raise ValueError(f"unknown policy method {self.method!r}")
        if self.samples_per_axis < 3:
            raise ValueError("samples_per_axis must be at least 3")
        if self.hoot_levels < 1 or self.hoot_branching < 2:
            raise ValueError("hoot needs at least one level and two branches")
        if self.planner_disturbance not in ("estimate", "oracle", "none"):
            raise ValueError(f"unknown planner_disturbance {self.planner_disturbance!r}")

    def bounds(self, n_action: int) -> tuple[np.ndarray, np.ndarray]:
        lo = np.broadcast_to(np.asarray(self.lower, float), (n_action,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, float), (n_action,)).copy()
        return lo, hi


def fit_axial_quadratic(u_samples, q_samples) -> AxialQuadratic:
    """Least-squares fit of ``q ~ p2 u^2 + p1 u + p0``.

    With three distinct samples this is Lagrange interpolation.  The fit is
    done in centred and scaled coordinates and mapped back.
    """
    u = np.asarray(u_samples, dtype=float)
    q = np.asarray(q_samples, dtype=float)
    if u.shape != q.shape or u.ndim != 1:
        raise ValueError("u and q samples must be 1-D arrays of equal length")
    if u.size < 3:
        raise RankDeficientFit("need at least 3 samples for a quadratic fit")
    m = u.mean()
    sc = np.abs(u - m).max()
    if not sc > 0:
        raise RankDeficientFit("all axis samples coincide")
    x = (u - m) / sc
    qm = q.mean()
    C = np.column_stack([x * x, x, np.ones_like(x)])
    coef, _, rank, _ = np.linalg.lstsq(C, q - qm, rcond=None)
    if rank < 3:
        raise RankDeficientFit("fewer than three distinct axis samples")
    a, b, c = coef
    c += qm
    p2 = a / sc**2
    p1 = b / sc - 2.0 * a * m / sc**2
    p0 = a * m * m / sc**2 - b * m / sc + c
    return AxialQuadratic(float(p2), float(p1), float(p0))


def axis_maximum(coef: AxialQuadratic, lo: float, hi: float) -> float:
    """Maximiser of the fitted restriction on ``[lo, hi]``.

    A concave fit gives the clamped vertex; otherwise the better endpoint.
    """
    if coef.p2 < 0:
        return float(min(max(-coef.p1 / (2.0 * coef.p2), lo), hi))
    return float(lo if coef(lo) > coef(hi) else hi)


class QObjective:
    """Batched ``Q(s, a) = theta . F(D(s, a))`` for one fixed state."""

    def __init__(self, s, dyn: ControlAffineDynamics, theta, prefs: Sequence[Preference],
                 refs: Mapping[str, np.ndarray] | None = None):
        self.s = np.asarray(s, dtype=float)
        self.dyn = dyn
        self.theta = np.asarray(theta, dtype=float)
        self.prefs = prefs
        self.refs = refs or {}

    def __call__(self, U: np.ndarray) -> np.ndarray:
        U = np.atleast_2d(U)
        return values(self.dyn.step_batch(self.s[None, :], U), self.theta, self.prefs, self.refs)


def _resolve_bounds(dyn, cfg: PolicyConfig, bounds):
    if bounds is None:
        return cfg.bounds(dyn.n_action)
    lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    return np.broadcast_to(lo, (dyn.n_action,)), np.broadcast_to(hi, (dyn.n_action,))


def axial_maxima(obj: QObjective, lo, hi, n_samples: int, rng: np.random.Generator | None = None,
                 dist: GaussianDisturbance | None = None, spacing: str = "equispaced") -> np.ndarray:
    """Per-axis maximisers of the fitted Q restrictions ``Q(s, u e_i)``.

    ``spacing='equispaced'`` places samples on a uniform grid including the
    bounds (DAS); ``'random'`` draws them uniformly (LSAPA).  When ``dist`` is
    given, each simulated sample gets its own disturbance draw.
    """
    d_a = obj.dyn.n_action
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    if spacing == "equispaced":
        t = np.linspace(0.0, 1.0, n_samples)
        u = lo[:, None] + (hi - lo)[:, None] * t[None, :]
    else:
        u = lo[:, None] + (hi - lo)[:, None] * rng.random((d_a, n_samples))
    U = np.zeros((d_a, n_samples, d_a))
    U[np.arange(d_a), :, np.arange(d_a)] = u
    U = U.reshape(-1, d_a)
    if dist is not None and not dist.is_zero:
        U = U + dist.draw(rng, U.shape[0])
    q = obj(U).reshape(d_a, n_samples)
    out = np.empty(d_a)
    for i in range(d_a):
        if not hi[i] > lo[i]:
            out[i] = lo[i]
            continue
        try:
            out[i] = axis_maximum(fit_axial_quadratic(u[i], q[i]), lo[i], hi[i])
        except RankDeficientFit:
            out[i] = u[i, np.argmax(q[i])]
    return out


@dataclass
class Combined:
    action: np.ndarray
    q: float
    q_convex: float
    q_sum: float


def combine_axial(u_hat, obj: QObjective, lo, hi, rng: np.random.Generator | None = None,
                  dist: GaussianDisturbance | None = None, n_eval: int = 1) -> Combined:
    """Pick between the sum policy and its convex scaling.

    Both candidates are scored on the same disturbance draws, so the choice
    is a plain pairwise maximum.
    """
    u_hat = np.asarray(u_hat, float)
    pi_n = u_hat
    pi_c = np.clip(u_hat / u_hat.size, lo, hi)
    if dist is not None and not dist.is_zero:
        xi = dist.draw(rng, n_eval)
        q_c = float(obj(pi_c + xi).mean())
        q_n = float(obj(pi_n + xi).mean())
    else:
        q_c, q_n = obj(np.stack([pi_c, pi_n]))
        q_c, q_n = float(q_c), float(q_n)
    if q_c >= q_n:
        return Combined(pi_c, q_c, q_c, q_n)
    return Combined(pi_n.copy(), q_n, q_c, q_n)


def das(s, dyn, theta, prefs, cfg: PolicyConfig | None = None, refs=None, bounds=None,
        info: bool = False):
    """Deterministic axial sum: 3-point interpolation per axis, no disturbance."""
    cfg = cfg or PolicyConfig()
    lo, hi = _resolve_bounds(dyn, cfg, bounds)
    obj = QObjective(s, dyn, theta, prefs, refs)
    u_hat = axial_maxima(obj, lo, hi, 3, spacing="equispaced")
    res = combine_axial(u_hat, obj, lo, hi)
    return res if info else res.action


def lsapa(s, dyn, theta, prefs, dist: GaussianDisturbance | None, cfg: PolicyConfig | None = None,
          rng: np.random.Generator | None = None, refs=None, bounds=None, info: bool = False):
    """Least-squares axial policy approximation under a Gaussian input disturbance."""
    cfg = cfg or PolicyConfig(method="lsapa", samples_per_axis=100)
    rng = rng if rng is not None else np.random.default_rng()
    lo, hi = _resolve_bounds(dyn, cfg, bounds)
    obj = QObjective(s, dyn, theta, prefs, refs)
    n = cfg.samples_per_axis
    u_hat = axial_maxima(obj, lo, hi, n, rng=rng, dist=dist, spacing="random")
    res = combine_axial(u_hat, obj, lo, hi, rng=rng, dist=dist, n_eval=n)
    return res if info else res.action


def das_batch(S, dyn, theta, prefs, lo, hi, refs=None) -> tuple[np.ndarray, np.ndarray]:
    """DAS for a stack of states at once; returns actions ``(B, d_a)`` and their Q values.

    Uses the closed-form three-point interpolation, so it agrees with
    :func:`das` up to round-off.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    B, d_a = S.shape[0], dyn.n_action
    lo = np.broadcast_to(np.asarray(lo, float), (d_a,))
    hi = np.broadcast_to(np.asarray(hi, float), (d_a,))
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    u = np.stack([lo, mid, hi], axis=1)  # (d_a, 3)
    U = np.zeros((d_a, 3, d_a))
    U[np.arange(d_a), :, np.arange(d_a)] = u
    U = U.reshape(-1, d_a)
    nxt = dyn.step_batch(np.repeat(S, U.shape[0], axis=0), np.tile(U, (B, 1)))
    q = values(nxt, theta, prefs, refs).reshape(B, d_a, 3)
    a2 = 0.5 * (q[..., 0] - 2.0 * q[..., 1] + q[..., 2])
    a1 = 0.5 * (q[..., 2] - q[..., 0])
    concave = a2 < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        vertex = np.clip(mid - half * a1 / (2.0 * a2), lo, hi)
    endpoint = np.where(q[..., 0] > q[..., 2], lo, hi)
    u_hat = np.where(concave, vertex, endpoint)
    u_hat = np.where(half > 0, u_hat, lo)
    pi_c = np.clip(u_hat / d_a, lo, hi)
    qq = values(dyn.step_batch(np.concatenate([S, S]), np.concatenate([pi_c, u_hat])),
                theta, prefs, refs)
    q_c, q_n = qq[:B], qq[B:]
    take_c = q_c >= q_n
    return np.where(take_c[:, None], pi_c, u_hat), np.where(take_c, q_c, q_n)


MAX_HOOT_POINTS = 2_000_000


def hoot(s, dyn, theta, prefs, cfg: PolicyConfig | None = None, rng: np.random.Generator | None = None,
         refs=None, bounds=None, dist: GaussianDisturbance | None = None) -> np.ndarray:
    """Hierarchical grid search, each level 1/branching finer than the last.

    Level one samples cell centres of a ``branching^d_a`` grid over the whole
    box, later levels re-grid the winning cell.  With a disturbance, every
    grid point is scored under its own draw.
    """
    cfg = cfg or PolicyConfig(method="hoot-grid")
    lo, hi = _resolve_bounds(dyn, cfg, bounds)
    lo, hi = lo.astype(float).copy(), hi.astype(float).copy()
    d_a, b = dyn.n_action, cfg.hoot_branching
    if b**d_a > MAX_HOOT_POINTS:
        raise ValueError(f"hoot grid of {b}^{d_a} points is too large")
    obj = QObjective(s, dyn, theta, prefs, refs)
    noisy = dist is not None and not dist.is_zero
    if noisy and rng is None:
        rng = np.random.default_rng()
    centres = (np.arange(b) + 0.5) / b
    best_u, best_q = None, -np.inf
    for _ in range(cfg.hoot_levels):
        width = hi - lo
        axes = [lo[i] + width[i] * centres for i in range(d_a)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d_a)
        q = obj(grid + dist.draw(rng, grid.shape[0])) if noisy else obj(grid)
        k = int(np.argmax(q))
        if q[k] > best_q:
            best_q, best_u = float(q[k]), grid[k].copy()
        cell = width / b
        lo, hi = grid[k] - cell / 2, grid[k] + cell / 2
    return best_u


# --------------------------------------------------------------------------
# closed-loop planning


@dataclass
class Trajectory:
    """Per-step record of a closed-loop run.

    Row ``n`` holds the state observed at ``t[n]``, the action chosen for it,
    the state value, the wall-clock action-selection time and the realised
    disturbance.  ``final_state`` is the state after the last action.
    """

    t: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    values: np.ndarray
    plan_ms: np.ndarray
    xi: np.ndarray
    final_state: np.ndarray
    status: str
    dt: float
    refs: list = field(default_factory=list, repr=False)
    final_refs: dict = field(default_factory=dict, repr=False)

    @property
    def success(self) -> bool:
        return self.status == "goal"

    @property
    def duration(self) -> float:
        return len(self.t) * self.dt

    def __len__(self):
        return len(self.t)

    def all_states(self) -> np.ndarray:
        return np.vstack([self.states, self.final_state[None, :]])


def select_action(method: str, s, task, prefs, theta, cfg: PolicyConfig, refs, rng, belief):
    dyn = task.model
    refs = task.lookahead_refs(refs)
    bounds = task.action_bounds(s, cfg)
    if method == "das":
        return das(s, dyn, theta, prefs, cfg, refs=refs, bounds=bounds)
    if method == "lsapa":
        return lsapa(s, dyn, theta, prefs, belief, cfg, rng, refs=refs, bounds=bounds)
    if method == "hoot-grid":
        return hoot(s, dyn, theta, prefs, cfg, rng, refs=refs, bounds=bounds, dist=belief)
    raise ValueError(f"unknown policy method {method!r}")


def plan_trajectory(s0, task, theta=None, cfg: PolicyConfig | None = None,
                    dist: GaussianDisturbance | None = None, horizon: float | None = None,
                    rng: np.random.Generator | None = None, world=None, controller=None,
                    stop_at_goal: bool | None = None, keep_refs: bool = False,
                    prefs=None) -> Trajectory:
    """Closed-loop greedy control of ``task`` from ``s0``.

    Each step observes the state and the current references, selects an
    action, and applies it to the plant with an independent disturbance draw.
    ``theta=None`` uses the task's own (possibly phase-scheduled) weights.
    ``controller`` replaces the greedy policy by a baseline callable
    ``controller(s, refs, bounds) -> action``.  ``prefs`` overrides the task's
    preferences when ``theta`` is given.
    """
    cfg = cfg or PolicyConfig()
    horizon = task.horizon if horizon is None else horizon
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    stop_at_goal = task.stop_at_goal if stop_at_goal is None else stop_at_goal
    rng = rng if rng is not None else np.random.default_rng()
    world_rng, plant_rng, plan_rng = rng.spawn(3)
    world = task.reset(world_rng) if world is None else world
    dt = task.plant.dt
    n_steps = int(round(horizon / dt))
    n_a = task.plant.n_action
    s = np.asarray(s0, dtype=float).copy()
    errors: list = []
    rows_t, rows_s, rows_a, rows_v, rows_ms, rows_xi, ref_log = [], [], [], [], [], [], []
    status = "horizon"
    for n in range(n_steps):
        t = n * dt
        refs = world.refs
        if theta is None:
            prefs_t, th = task.phase(t)
        else:
            prefs_t, th = (task.prefs if prefs is None else prefs), np.asarray(theta, float)
        if stop_at_goal and task.in_goal(s, refs):
            status = "goal"
            break
        if task.failed(s, refs):
            status = "collision"
            break
        belief = None
        if dist is not None and cfg.planner_disturbance == "oracle":
            belief = dist
        elif dist is not None and cfg.planner_disturbance == "estimate" and len(errors) >= 2:
            belief = estimate_disturbance(errors, cfg.window)
        t0 = time.perf_counter()
        if controller is not None:
            a = np.asarray(controller(s, refs, task.action_bounds(s, cfg)), dtype=float)
        else:
            a = select_action(cfg.method, s, task, prefs_t, th, cfg, refs, plan_rng, belief)
        ms = 1e3 * (time.perf_counter() - t0)
        xi = dist.draw(plant_rng) if dist is not None else np.zeros(n_a)
        rows_t.append(t)
        rows_s.append(s)
        rows_a.append(a)
        rows_v.append(float(values(s, th, prefs_t, refs)[0]))
        rows_ms.append(ms)
        rows_xi.append(xi)
        if keep_refs:
            ref_log.append({k: np.array(v, copy=True) for k, v in refs.items()})
        s = task.plant.step_batch(s, a + xi)
        if dist is not None:
            errors.append((a, a + xi))
            if len(errors) > cfg.window:
                del errors[0]
        world = world.advance(world_rng)
        if not np.all(np.isfinite(s)):
            status = "diverged"
            break
        if not task.state_ok(s):
            status = "diverged"
            break
    else:
        refs = world.refs
        if n_steps == 0:
            pass  # nothing was planned; the horizon is exhausted as given
        elif task.failed(s, refs):
            status = "collision"
        elif task.in_goal(s, refs):
            status = "goal"
    d = task.plant.n_state

    def arr(rows, width):
        return np.array(rows, dtype=float).reshape(len(rows), width)

    return Trajectory(
        t=np.array(rows_t, dtype=float),
        states=arr(rows_s, d),
        actions=arr(rows_a, n_a),
        values=np.array(rows_v, dtype=float),
        plan_ms=np.array(rows_ms, dtype=float),
        xi=arr(rows_xi, n_a),
        final_state=s,
        status=status,
        dt=dt,
        refs=ref_log,
        final_refs=world.refs,
    )
