"""Command-line entry point: ``pearl train|plan|bench|analyze``.

Exit codes: 0 success, 2 configuration or usage error, 3 numeric failure.
Batch work over trials runs in a process pool capped by ``PEARL_THREADS``;
trial ``k`` always draws from ``default_rng([seed, k])`` so results do not
depend on the pool size.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .analysis import critical_points
from .config import ConfigError, TaskConfig, load_config, preset_path, serialize_config

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
POLICIES = ("das", "lsapa", "hoot-grid", "boids", "apf")
SUMMARY_COLUMNS = ["trial", "seed", "status", "success", "steps", "duration", "final_goal_distance",
                   "mean_plan_ms"]
EXTREMA_COLUMNS = ["c", "d", "n_roots", "n_min", "n_max", "roots", "kinds"]
STATUS_TEXT = {"horizon": "horizon exhausted"}


class NumericFailure(RuntimeError):
    pass


# --------------------------------------------------------------------------
# plumbing


def worker_count(n_jobs: int) -> int:
    raw = os.environ.get("PEARL_THREADS")
    if raw is None:
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigError(f"PEARL_THREADS must be a positive integer, got {raw!r}") from None
        if cap < 1:
            raise ConfigError(f"PEARL_THREADS must be a positive integer, got {raw!r}")
    return max(1, min(cap, n_jobs))


@contextmanager
def pool_map(n_jobs: int):
    """A ``map`` that fans out to processes when more than one worker is allowed."""
    n = worker_count(n_jobs)
    if n == 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=n) as ex:
        yield ex.map


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, columns, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns] if isinstance(row, dict) else [_fmt(v) for v in row])


def read_csv(path) -> tuple[list[str], list[dict]]:
    with Path(path).open(newline="") as fh:
        r = csv.DictReader(fh)
        return list(r.fieldnames or []), list(r)


def resolve_config(spec: str) -> TaskConfig:
    """A config path, or the bare name of a shipped preset."""
    p = Path(spec)
    if not p.exists() and p.suffix == "" and "/" not in spec:
        p = preset_path(spec)
    return load_config(p)


def load_weights(path) -> np.ndarray:
    try:
        data = json.loads(Path(path).read_text())
        theta = np.asarray(data["theta"], float)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot read weights: {exc}", source=str(path)) from None
    if theta.ndim != 1 or not np.all(np.isfinite(theta)):
        raise ConfigError("weights must be a finite vector", source=str(path))
    return theta


def trajectory_columns(task) -> list[str]:
    n_a = task.plant.n_action
    return (["t"] + task.layout.column_names() + [f"a{i}" for i in range(n_a)] + ["V", "plan_ms"]
            + [f"xi{i}" for i in range(n_a)])


def trajectory_rows(traj):
    for k in range(len(traj)):
        yield ([traj.t[k], *traj.states[k], *traj.actions[k], traj.values[k], traj.plan_ms[k], *traj.xi[k]])


# --------------------------------------------------------------------------
# train


def cmd_train(cfg: TaskConfig, out, seed: int | None = None, trials: int | None = None) -> dict:
    from .learning import TrainingConfig, make_training_domain, train_monte_carlo
    from .policies import PolicyConfig

    task = cfg.make_task(training=True)
    tc = cfg.training()
    if seed is not None:
        tc = TrainingConfig(**{**tc.__dict__, "seed": seed})
    if trials is not None:
        tc = TrainingConfig(**{**tc.__dict__, "n_mc": trials})
    margin = cfg.get("training", "margin", 0.5)
    speed = cfg.get("training", "speed_limit")
    refs = task.reset(np.random.default_rng(tc.seed)).refs
    try:
        domain = make_training_domain(task.prefs, margin, task.n_state, refs, speed_limit=speed,
                                      action_low=-task.accel, action_high=task.accel,
                                      n_action=task.n_action)
    except ValueError as exc:
        raise cfg.error(str(exc), "training", "margin") from None
    with pool_map(tc.n_mc) as map_fn:
        mc = train_monte_carlo(task, domain, tc, cfg=PolicyConfig(method="das"), map_fn=map_fn)
    if all(len(r.theta_norms) == 0 and tc.iterations > 0 for r in mc.runs):
        raise NumericFailure("every training run diverged or was singular")

    def num(x):
        return None if not np.isfinite(x) else float(x)

    record = {
        "task": cfg.task_name,
        "theta": [float(v) for v in mc.theta],
        "preferences": [p.name for p in task.prefs],
        "seed": tc.seed,
        "fittest": mc.index,
        "runs": [
            {"theta": [float(v) for v in r.theta], "intercept": r.intercept,
             "success_rate": rate, "mean_duration": num(dur), "theta_norms": r.theta_norms}
            for r, (_, rate, dur) in zip(mc.runs, mc.candidates)
        ],
        "config": serialize_config(cfg),
    }
    if out is not None:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(json.dumps(record, indent=2) + "\n")
    return record


# --------------------------------------------------------------------------
# plan


def _plan_job(job):
    from .policies import plan_trajectory
    from .tasks import apf_controller, boids_controller

    cfg, theta, policy, alpha, s0, seed, k, horizon = job
    task = cfg.make_task(theta=theta)
    rng = np.random.default_rng([seed, k])
    if s0 is None:
        s0 = task.initial_state(rng)
    controller = None
    if policy == "apf":
        controller = apf_controller(task, alpha)
    elif policy == "boids":
        controller = boids_controller(task)
    pcfg = cfg.policy(None if policy in (None, "apf", "boids") else policy)
    dist = cfg.disturbance(task.n_action)
    traj = plan_trajectory(s0, task, cfg=pcfg, dist=dist, horizon=horizon, rng=rng, controller=controller)
    return traj, task.goal_distance(traj.final_state, traj.final_refs)


def cmd_plan(cfg: TaskConfig, out, weights=None, seed: int | None = None, trials: int | None = None,
             horizon: float | None = None, policy: str | None = None, initial=None,
             alpha: float = 1.0, echo=print) -> list[dict]:
    theta = load_weights(weights) if weights is not None else None
    task = cfg.make_task(theta=theta)
    if theta is not None and len(theta) != len(task.prefs):
        raise ConfigError(f"weights have length {len(theta)} but the task has {len(task.prefs)} preferences",
                          source=str(weights))
    if policy == "apf" and not hasattr(task, "max_speed"):
        raise ConfigError("the apf baseline needs the obstacles task")
    if policy == "boids" and task.name != "pursuit":
        raise ConfigError("the boids baseline needs the pursuit task")
    seed = int(cfg.run("seed", 0)) if seed is None else seed
    if horizon is not None and horizon < 0:
        raise ConfigError("horizon must be non-negative")
    if initial is not None:
        starts = np.atleast_2d(np.loadtxt(initial, delimiter=",", ndmin=2))
        if starts.shape[1] != task.n_state:
            raise ConfigError(f"initial states need {task.n_state} columns", source=str(initial))
        starts = list(starts)
    else:
        n = int(cfg.run("trials", 1)) if trials is None else trials
        if n < 1:
            raise ConfigError("trials must be at least 1")
        starts = [None] * n
    # surface policy and disturbance errors before any work is farmed out
    cfg.policy(None if policy in (None, "apf", "boids") else policy)
    cfg.disturbance(task.n_action)
    jobs = [(cfg, theta, policy, alpha, s0, seed, k, horizon) for k, s0 in enumerate(starts)]
    with pool_map(len(jobs)) as map_fn:
        results = list(map_fn(_plan_job, jobs))
    out = Path(out) if out is not None else None
    columns = trajectory_columns(task)
    summary, numeric_bad = [], False
    for k, (traj, dist) in enumerate(results):
        if out is not None:
            write_csv(out / f"trajectory_{k:03d}.csv", columns, trajectory_rows(traj))
        finite = bool(np.all(np.isfinite(traj.final_state)))
        numeric_bad |= not finite
        row = dict(trial=k, seed=seed, status=STATUS_TEXT.get(traj.status, traj.status),
                   success=int(traj.success), steps=len(traj), duration=float(traj.duration),
                   final_goal_distance=float(dist),
                   mean_plan_ms=float(np.mean(traj.plan_ms)) if len(traj) else 0.0)
        summary.append(row)
        echo(f"trial {k}: {row['status']} success={row['success']} duration={row['duration']:.2f}s "
             f"final_distance={row['final_goal_distance']:.4f}")
    rate = float(np.mean([r["success"] for r in summary]))
    echo(f"success rate {rate:.3f} over {len(summary)} trials")
    if out is not None:
        write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary)
    if numeric_bad:
        raise NumericFailure("a trajectory produced non-finite states")
    return summary


# --------------------------------------------------------------------------
# bench and analyze


def cmd_bench(suite: str, out, seed: int = 0) -> list[dict]:
    from .bench import BENCH_COLUMNS, SUITES, run_suite

    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; expected one of {sorted(SUITES)}")
    rows = run_suite(suite, seed=seed)
    if out is not None:
        write_csv(out, BENCH_COLUMNS, rows)
    return rows


def parse_range(text: str) -> np.ndarray:
    """``start:stop:num`` (inclusive linspace), a comma list, or one number."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            vals = np.linspace(float(a), float(b), int(n))
        else:
            vals = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError(f"cannot parse range {text!r}; use start:stop:num or a comma list") from None
    if vals.size == 0 or not np.all(np.isfinite(vals)):
        raise ConfigError(f"empty or non-finite range {text!r}")
    return vals


def cmd_analyze(c_values, d_values, out, search=(-10.0, 10.0)) -> list[dict]:
    c_values, d_values = np.asarray(c_values, float), np.asarray(d_values, float)
    if np.any(c_values < 0) or np.any(d_values < 0):
        raise ConfigError("c and d ranges must be non-negative")
    rows = []
    for c in c_values:
        for d in d_values:
            pts = critical_points((c, d), search_interval=search)
            kinds = [k for _, k in pts]
            rows.append(dict(c=float(c), d=float(d), n_roots=len(pts), n_min=kinds.count("min"),
                             n_max=kinds.count("max"), roots=";".join(repr(x) for x, _ in pts),
                             kinds=";".join(kinds)))
    if out is not None:
        write_csv(out, EXTREMA_COLUMNS, rows)
    return rows


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pearl", description="Train and run preference-balancing planners.")
    sub = ap.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="learn feature weights and write a weights file")
    tr.add_argument("--config", required=True, help="config path or preset name")
    tr.add_argument("--out", required=True, help="weights file (JSON)")
    tr.add_argument("--seed", type=int)
    tr.add_argument("--trials", type=int, help="number of independent training runs")

    pl = sub.add_parser("plan", help="run closed-loop trajectories and write CSVs")
    pl.add_argument("--config", required=True)
    pl.add_argument("--weights", help="weights file overriding the config weights")
    pl.add_argument("--out", help="output directory for trajectory_NNN.csv and summary.csv")
    pl.add_argument("--seed", type=int)
    pl.add_argument("--trials", type=int)
    pl.add_argument("--horizon", type=float, help="seconds")
    pl.add_argument("--policy", choices=POLICIES)
    pl.add_argument("--initial", help="CSV of initial states, one per row")
    pl.add_argument("--alpha", type=float, default=1.0, help="goal weight of the apf baseline")

    be = sub.add_parser("bench", help="timing benchmarks with scaling fits")
    be.add_argument("--suite", required=True)
    be.add_argument("--out")
    be.add_argument("--seed", type=int, default=0)

    an = sub.add_parser("analyze", help="critical points of the restricted obstacle value")
    an.add_argument("--c-range", required=True, help="start:stop:num or comma list")
    an.add_argument("--d-range", required=True, help="start:stop:num or comma list")
    an.add_argument("--search", default="-10,10", help="search interval lo,hi")
    an.add_argument("--out")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            rec = cmd_train(resolve_config(args.config), args.out, args.seed, args.trials)
            print("theta = " + ", ".join(f"{v:.6g}" for v in rec["theta"]))
        elif args.command == "plan":
            cmd_plan(resolve_config(args.config), args.out, args.weights, args.seed, args.trials,
                     args.horizon, args.policy, args.initial, args.alpha)
        elif args.command == "bench":
            rows = cmd_bench(args.suite, args.out, args.seed)
            for r in rows:
                if r["kind"] == "fit":
                    print(", ".join(f"{k}={_fmt(v)}" for k, v in r.items() if v != ""))
        elif args.command == "analyze":
            lo, hi = parse_range(args.search)
            rows = cmd_analyze(parse_range(args.c_range), parse_range(args.d_range), args.out, (lo, hi))
            print(f"{len(rows)} (c, d) pairs analysed")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
