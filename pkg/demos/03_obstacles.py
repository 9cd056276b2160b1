"""Crossing a field of 300 moving obstacles: PEARL against a Gaussian potential field."""
import numpy as np

from pearl import plan_trajectory
from pearl.tasks import ObstacleTask, apf_controller

task = ObstacleTask(n_obstacles=300)
seeds = range(10)
runs = [plan_trajectory(task.initial_state(), task, rng=np.random.default_rng(k)) for k in seeds]
print(f"PEARL: {sum(r.success for r in runs)}/{len(runs)} reached the goal; "
      f"outcomes {[r.status for r in runs]}")
for alpha in (0.1, 1.0, 10.0):
    ctl = apf_controller(task, alpha)
    apf = [plan_trajectory(task.initial_state(), task, rng=np.random.default_rng(k), controller=ctl) for k in seeds]
    print(f"APF alpha={alpha:<4g}: {sum(r.success for r in apf)}/{len(apf)} reached the goal")
