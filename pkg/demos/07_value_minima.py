"""Where a greedy agent can stall: minima of x^2 + c / ((x - 1)^2 + d^2)."""
import numpy as np

from pearl.analysis import critical_points, satisfies_minimum_conditions

for d in (0.5, 1.0, 2.0, 5.0):
    pts = critical_points((100.0, d))
    desc = ", ".join(f"{k} at {x:+.3f}" for x, k in pts)
    flags = [satisfies_minimum_conditions(x, d) for x, k in pts if k == "min"]
    print(f"c=100 d={d:<3g}: {desc}  (location conditions hold: {flags})")
