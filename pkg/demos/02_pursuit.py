"""Twenty-five pursuers chase a spiralling prey; compare with Boids flocking."""
import numpy as np

from pearl import plan_trajectory
from pearl.tasks import PursuitTask, boids_controller, nearest_neighbour_distance

task = PursuitTask(n_agents=25, prey="spiral")
for label, controller in [("PEARL/DAS", None), ("Boids", boids_controller(task))]:
    finals, spacing, ms = [], [], []
    for seed in range(3):
        rng = np.random.default_rng(seed)
        traj = plan_trajectory(task.initial_state(rng), task, rng=rng, controller=controller)
        finals.append(task.goal_distance(traj.final_state, traj.final_refs))
        spacing.append(nearest_neighbour_distance(task.positions(traj.final_state)))
        ms.append(traj.plan_ms.sum() / 1e3)
    print(f"{label:10s} prey distance {np.mean(finals):.2f} m, nearest team mate {np.mean(spacing):.2f} m, "
          f"planning {np.mean(ms):.1f} s per 20 s run")
