"""Suspended-load delivery under a biased acceleration disturbance."""
import numpy as np

from pearl import GaussianDisturbance, PolicyConfig, plan_trajectory
from pearl.tasks import CargoTask

task = CargoTask()
dist = GaussianDisturbance.isotropic(3, mean=2.0, std=0.5)
for method in ("das", "lsapa"):
    cfg = PolicyConfig(method, samples_per_axis=100 if method == "lsapa" else 3)
    for seed in range(3):
        rng = np.random.default_rng(seed)
        traj = plan_trajectory(task.initial_state(rng), task, cfg=cfg, dist=dist, rng=rng, stop_at_goal=False)
        late = traj.states[traj.t >= traj.t[-1] - 1.0]
        d = np.linalg.norm(late[:, :3] - task.goal, axis=1).mean()
        swing = np.degrees(np.abs(traj.states[:, 3:5]).max())
        print(f"{method:5s} seed {seed}: final-second distance {d:.3f} m, peak swing {swing:.1f} deg")
