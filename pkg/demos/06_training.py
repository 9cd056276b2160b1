"""Learn pursuit weights on three agents and a static prey, then reuse them on a full team."""
import numpy as np

from pearl import plan_trajectory
from pearl.learning import TrainingConfig, make_training_domain, train_monte_carlo
from pearl.tasks import PursuitTask

small = PursuitTask(n_agents=3, prey="static")
domain = make_training_domain(small.prefs, 0.4, small.n_state, small.reset().refs)
result = train_monte_carlo(small, domain, TrainingConfig(iterations=300, n_mc=2))
for (theta, rate, dur) in result.candidates:
    print(f"candidate theta={np.round(theta, 3)}, success {rate:.2f}, mean time {dur:.1f} s")
print("fittest:", np.round(result.theta, 3))

big = PursuitTask(n_agents=15, prey="line", theta=result.theta)
rng = np.random.default_rng(0)
traj = plan_trajectory(big.initial_state(rng), big, rng=rng)
print(f"15 agents, line prey: final prey distance {big.goal_distance(traj.final_state, traj.final_refs):.2f} m")
