"""Greedy action selection on a planar double integrator.

The value of the next state is quadratic along every action axis, so three
samples per axis pin it down (DAS).  With an input disturbance, least-squares
fits over many noisy samples (LSAPA) recover the bias-corrected action.
"""
import numpy as np

from pearl import DoubleIntegrator, GaussianDisturbance, PolicyConfig, Preference, StateLayout, das, hoot, lsapa
from pearl.features import ATTRACTOR
from pearl.policies import QObjective, fit_axial_quadratic

layout = StateLayout((("robot", 2),))
dyn = DoubleIntegrator(2, dt=0.1)
prefs = [
    Preference(ATTRACTOR, layout.select(["robot"]), point=np.array([1.0, -1.0]), name="goal"),
    Preference(ATTRACTOR, layout.select(["robot"], "velocity"), name="at_rest"),
]
theta = np.array([-1.0, -0.4])
s = np.array([0.0, 0.0, 0.2, 0.0])

# Q along the first action axis, fitted from three points, checked on nine
obj = QObjective(s, dyn, theta, prefs)
u = np.linspace(-3, 3, 9)
U = np.column_stack([u, np.zeros_like(u)])
fit = fit_axial_quadratic(u[[0, 4, 8]], obj(U)[[0, 4, 8]])
print("max deviation of the 3-point fit on 9 points:", np.abs(fit(u) - obj(U)).max())

print("DAS action  :", das(s, dyn, theta, prefs))
print("HOOT action :", hoot(s, dyn, theta, prefs))

dist = GaussianDisturbance.isotropic(2, mean=1.0, std=0.5)
rng = np.random.default_rng(0)
cfg = PolicyConfig("lsapa", samples_per_axis=200)
acts = np.array([lsapa(s, dyn, theta, prefs, dist, cfg, rng) for _ in range(20)])
print("LSAPA under a +1 m/s^2 bias, mean action:", acts.mean(axis=0))
