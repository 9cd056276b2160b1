"""Preference-based value learning and greedy planning for control-affine robots."""
from .dynamics import (ControlAffineDynamics, DoubleIntegrator, GaussianDisturbance, LinearDynamics,
                       estimate_disturbance, sample_disturbance, step, step_disturbed)
from .features import (Preference, StateLayout, attractor_feature, feature_matrix, feature_vector,
                       q_value, repeller_feature, value, values)
from .policies import (AxialQuadratic, PolicyConfig, Trajectory, axis_maximum, das,
                       fit_axial_quadratic, hoot, lsapa, plan_trajectory)

__version__ = "0.1.0"
