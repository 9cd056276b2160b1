"""An inverted pendulum on a quadrotor, displaced 23 degrees, under N(1, 1) disturbance."""
import numpy as np

from pearl import GaussianDisturbance, PolicyConfig, plan_trajectory
from pearl.tasks import PendulumTask

task = PendulumTask()
dist = GaussianDisturbance.isotropic(2, 1.0, 1.0)
for method in ("das", "lsapa"):
    cfg = PolicyConfig(method, samples_per_axis=100 if method == "lsapa" else 3)
    ok, late = 0, []
    for seed in range(5):
        traj = plan_trajectory(task.initial_state(), task, cfg=cfg, dist=dist, rng=np.random.default_rng(seed))
        ok += task.balanced(traj, settle=5.0)
        late.append(task.pole_offset(traj.states[traj.t >= 5.0]).mean())
    print(f"{method:5s}: balanced {ok}/5, mean pole offset after 5 s {np.mean(late):.4f} m "
          f"(tolerance {task.goal_tolerance:.3f} m)")
