"""Task-preference features, the linear value function and the action value.

A preference is an intent (attractor or repeller) over a projection of the
joint state.  The projection is stored as an integer array ``index`` of shape
``(n_agents, k)``: row ``j`` lists the state coordinates of agent ``j`` that the
preference looks at.  An index equal to the state length reads a constant 0,
which lets a planar robot stand in for a 3-D one (e.g. ground-robot height).

Attractor:  F = sum_j ||proj_j(s) - p||^2
Repeller:   F = sum_j (beta + ||proj_j(s) - p||^2)^-1

Targets ``p`` can be a fixed point, a per-step reference looked up in
``refs``, another projection of the same state (inter-robot relation), the
other agents of the same preference (pairwise spacing), or the nearest of a
set of reference points (closest obstacle).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dynamics import ControlAffineDynamics

__all__ = [
    "ATTRACTOR",
    "REPELLER",
    "TARGETS",
    "StateLayout",
    "Preference",
    "attractor_feature",
    "repeller_feature",
    "feature_vector",
    "feature_matrix",
    "value",
    "values",
    "q_value",
    "goal_state",
    "check_well_formed",
]

ATTRACTOR = "attractor"
REPELLER = "repeller"
TARGETS = ("point", "reference", "relation", "pairwise", "nearest")

Refs = Mapping[str, np.ndarray]


@dataclass(frozen=True)
class StateLayout:
    """Joint state layout: positions of every body, then velocities.

    ``bodies`` is a tuple of ``(name, dof)`` pairs in state order.
    """

    bodies: tuple[tuple[str, int], ...]

    @property
    def n_pos(self) -> int:
        return sum(d for _, d in self.bodies)

    @property
    def n_state(self) -> int:
        return 2 * self.n_pos

    @property
    def names(self) -> list[str]:
        return [b for b, _ in self.bodies]

    def column_names(self) -> list[str]:
        """``body_x`` style names for positions, then ``body_vx`` for velocities."""
        pos = [f"{b}_{ax}" for b, d in self.bodies for ax in "xyz"[:d]]
        vel = [f"{b}_v{ax}" for b, d in self.bodies for ax in "xyz"[:d]]
        return pos + vel

    def coords(self, body: str, part: str = "position", axes: str | None = None) -> np.ndarray:
        offset = 0
        for name, dof in self.bodies:
            if name == body:
                break
            offset += dof
        else:
            raise KeyError(f"unknown body {body!r}")
        if part in ("position", "pos"):
            base = offset
        elif part in ("velocity", "vel"):
            base = self.n_pos + offset
        else:
            raise ValueError(f"unknown selector part {part!r}")
        axes = "xyz"[:dof] if axes is None else axes
        out = []
        for ax in axes:
            i = "xyz".index(ax)
            # axes a body does not have read as a constant zero
            out.append(base + i if i < dof else self.n_state)
        return np.array(out, dtype=int)

    def select(self, bodies: Sequence[str], part: str = "position", axes: str | None = None) -> np.ndarray:
        if len(bodies) == 0:
            raise ValueError("preference needs at least one agent")
        return np.stack([self.coords(b, part, axes) for b in bodies])


@dataclass(frozen=True, eq=False)
class Preference:
    kind: str
    index: np.ndarray
    target: str = "point"
    point: np.ndarray | None = None
    reference: str | None = None
    other: np.ndarray | None = None
    offset: np.ndarray | None = None
    beta: float = 1.0
    variant: str = "shared"
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        index = np.atleast_2d(np.asarray(self.index, dtype=int))
        object.__setattr__(self, "index", index)
        if self.kind not in (ATTRACTOR, REPELLER):
            raise ValueError(f"unknown preference kind {self.kind!r}")
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}")
        if index.shape[0] < 1:
            raise ValueError(f"preference {self.name!r}: agent set is empty")
        if index.shape[1] < 1:
            raise ValueError(f"preference {self.name!r}: selector keeps no coordinate")
        if np.any(index < 0):
            raise ValueError(f"preference {self.name!r}: negative coordinate index")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        k = index.shape[1]
        if self.target == "point":
            p = np.zeros(k) if self.point is None else np.asarray(self.point, dtype=float)
            if p.shape != (k,):
                raise ValueError(f"preference {self.name!r}: target has {p.size} coordinates, selector {k}")
            object.__setattr__(self, "point", p)
        if self.target in ("reference", "nearest") and not self.reference:
            raise ValueError(f"preference {self.name!r}: missing reference key")
        if self.target == "relation":
            other = np.atleast_2d(np.asarray(self.other, dtype=int))
            if other.shape != index.shape:
                raise ValueError(f"preference {self.name!r}: relation shape mismatch")
            object.__setattr__(self, "other", other)
            off = np.zeros(k) if self.offset is None else np.asarray(self.offset, dtype=float)
            object.__setattr__(self, "offset", np.broadcast_to(off, (k,)).copy())
        if self.target == "pairwise" and self.variant not in ("shared", "per_agent"):
            raise ValueError(f"unknown pairwise variant {self.variant!r}")

    @property
    def is_attractor(self) -> bool:
        return self.kind == ATTRACTOR

    @property
    def n_agents(self) -> int:
        return self.index.shape[0]

    def coordinates(self) -> np.ndarray:
        """Every state coordinate the preference reads."""
        idx = self.index.ravel()
        if self.target == "relation":
            idx = np.concatenate([idx, self.other.ravel()])
        return np.unique(idx)


def _take(S: np.ndarray, idx: np.ndarray) -> np.ndarray:
    n = S.shape[-1]
    if idx.max() >= n:
        S = np.concatenate([S, np.zeros(S.shape[:-1] + (1,))], axis=-1)
        idx = np.minimum(idx, n)
    return S[:, idx]


def _sq_dist(S: np.ndarray, pref: Preference, refs: Refs) -> np.ndarray:
    """Per-agent squared distance to the target, shape (B, n_agents)."""
    proj = _take(S, pref.index)
    t = pref.target
    if t == "point":
        d = proj - pref.point
    elif t == "reference":
        d = proj - np.asarray(refs[pref.reference], dtype=float)
    elif t == "relation":
        d = proj - _take(S, pref.other) - pref.offset
    elif t == "nearest":
        pts = np.asarray(refs[pref.reference], dtype=float).reshape(-1, proj.shape[-1])
        if len(pts) == 0:
            return np.full(proj.shape[:2], np.inf)
        # (B, agents, N): linear scan over all points
        diff = proj[:, :, None, :] - pts[None, None, :, :]
        return np.einsum("banc,banc->ban", diff, diff).min(axis=2)
    else:
        raise ValueError(f"target {t!r} has no per-agent distance")
    return np.einsum("bak,bak->ba", d, d)


def _pairwise(S: np.ndarray, pref: Preference) -> np.ndarray:
    proj = _take(S, pref.index)
    n = proj.shape[1]
    dev = proj - proj.mean(axis=1, keepdims=True)
    dev2 = np.einsum("bak,bak->ba", dev, dev)
    if pref.variant == "shared":
        # sum over ordered pairs i, j of ||p_i - p_j||^2 = 2n sum_i ||p_i - mean||^2
        return 1.0 / (pref.beta + 2.0 * n * dev2.sum(axis=1))
    per_agent = n * dev2 + dev2.sum(axis=1, keepdims=True)
    return (1.0 / (pref.beta + per_agent)).sum(axis=1)


def _feature_batch(S: np.ndarray, pref: Preference, refs: Refs) -> np.ndarray:
    if pref.target == "pairwise":
        if pref.is_attractor:
            raise ValueError("pairwise target is only defined for repellers")
        return _pairwise(S, pref)
    d2 = _sq_dist(S, pref, refs)
    if pref.is_attractor:
        return d2.sum(axis=1)
    return (1.0 / (pref.beta + d2)).sum(axis=1)


def _as_batch(s) -> np.ndarray:
    S = np.asarray(s, dtype=float)
    return S[None, :] if S.ndim == 1 else S


def attractor_feature(s, pref: Preference, refs: Refs | None = None) -> float:
    if not pref.is_attractor:
        raise ValueError("attractor_feature called with a repeller")
    _check_range(s, pref)
    return float(_feature_batch(_as_batch(s), pref, refs or {})[0])


def repeller_feature(s, pref: Preference, refs: Refs | None = None) -> float:
    if pref.is_attractor:
        raise ValueError("repeller_feature called with an attractor")
    _check_range(s, pref)
    return float(_feature_batch(_as_batch(s), pref, refs or {})[0])


def _check_range(s, pref: Preference) -> None:
    n = np.shape(s)[-1]
    if pref.coordinates().max() > n:
        raise ValueError(f"preference {pref.name!r} selects coordinates beyond the state length {n}")


def feature_matrix(S, prefs: Sequence[Preference], refs: Refs | None = None) -> np.ndarray:
    """Features of a batch of states, shape (B, n_p)."""
    S = _as_batch(S)
    refs = refs or {}
    out = np.empty((S.shape[0], len(prefs)))
    for i, p in enumerate(prefs):
        out[:, i] = _feature_batch(S, p, refs)
    return out


def feature_vector(s, prefs: Sequence[Preference], refs: Refs | None = None) -> np.ndarray:
    for p in prefs:
        _check_range(s, p)
    return feature_matrix(s, prefs, refs)[0]


def _theta(theta, prefs) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (len(prefs),):
        raise ValueError(f"weight vector has length {theta.size}, expected {len(prefs)}")
    return theta


def values(S, theta, prefs, refs=None) -> np.ndarray:
    return feature_matrix(S, prefs, refs) @ _theta(theta, prefs)


def value(s, theta, prefs, refs=None) -> float:
    """Linear state value ``theta . F(s)``."""
    return float(feature_vector(s, prefs, refs) @ _theta(theta, prefs))


def q_value(s, a, dyn: ControlAffineDynamics, theta, prefs, refs=None, xi=None) -> float:
    """Value of the state reached by applying ``a`` (plus ``xi``) for one step."""
    from .dynamics import step, step_disturbed

    nxt = step(dyn, s, a) if xi is None else step_disturbed(dyn, s, a, xi)
    return value(nxt, theta, prefs, refs)


def goal_state(prefs: Sequence[Preference], n_state: int, refs: Refs | None = None):
    """Minimum-norm state zeroing every attractor, and its residual.

    Attractor constraints are linear in the state, so the goal set is an affine
    subspace; an empty intersection shows up as a non-zero residual.
    """
    refs = refs or {}
    rows, rhs = [], []
    for p in prefs:
        if not p.is_attractor:
            continue
        for j in range(p.n_agents):
            for c in range(p.index.shape[1]):
                row = np.zeros(n_state + 1)
                row[p.index[j, c]] += 1.0
                if p.target == "point":
                    b = p.point[c]
                elif p.target == "reference":
                    b = np.asarray(refs[p.reference], dtype=float)[c]
                elif p.target == "relation":
                    row[p.other[j, c]] -= 1.0
                    b = p.offset[c]
                else:
                    raise ValueError(f"attractor target {p.target!r} has no linear goal set")
                rows.append(row[:n_state])
                # the padding coordinate is identically zero
                rhs.append(b)
    if not rows:
        raise ValueError("no attractor preferences")
    M, y = np.array(rows), np.array(rhs)
    s, *_ = np.linalg.lstsq(M, y, rcond=None)
    return s, float(np.linalg.norm(M @ s - y))


def check_well_formed(
    prefs: Sequence[Preference],
    n_state: int,
    refs: Refs | None = None,
    rng: np.random.Generator | None = None,
    n_samples: int = 256,
    tol: float = 1e-9,
) -> np.ndarray:
    """Check the attractors share a goal that repellers do not fully occlude.

    Samples the goal subspace around the minimum-norm goal; the task is well
    formed when some sample sits off every point/reference repeller target.
    Returns a goal state, raises ``ValueError`` otherwise.
    """
    g, resid = goal_state(prefs, n_state, refs)
    if resid > tol * max(1.0, np.linalg.norm(g)):
        raise ValueError(f"attractor targets do not intersect (residual {resid:.3g})")
    reps = [p for p in prefs if not p.is_attractor and p.target in ("point", "reference")]
    if not reps:
        return g
    rng = rng or np.random.default_rng(0)
    # directions keeping every attractor at zero: null space of the constraint rows
    rows = []
    for p in prefs:
        if p.is_attractor:
            for j in range(p.n_agents):
                for c in range(p.index.shape[1]):
                    r = np.zeros(n_state + 1)
                    r[p.index[j, c]] += 1
                    if p.target == "relation":
                        r[p.other[j, c]] -= 1
                    rows.append(r[:n_state])
    _, sv, vt = np.linalg.svd(np.array(rows))
    null = vt[np.sum(sv > 1e-12):]
    cands = [g] + [g + null.T @ rng.standard_normal(len(null)) for _ in range(n_samples if len(null) else 0)]
    for c in cands:
        occluded = any(np.all(_sq_dist(c[None], p, refs or {}) < tol) for p in reps)
        if not occluded:
            return c
    raise ValueError("attractor region is fully occluded by repellers")
