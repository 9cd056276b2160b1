"""The five planning tasks, their baselines, and a name-based factory."""
from .aerial import (CargoTask, PendulumTask, RendezvousTask, cargo_step, inverted_pendulum_model,
                     pendulum_step, rendezvous_model, rendezvous_step, suspended_load_model)
from .base import StaticWorld, Task
from .baselines import (apf_controller, boids_controller, boids_policy, gaussian_apf_policy)
from .obstacles import (ObstacleTask, ObstacleWorld, make_obstacle_world, obstacle_step,
                        training_obstacle_task)
from .pursuit import PreyParams, PreyWorld, PursuitTask, nearest_neighbour_distance, prey_reference

TASKS = {
    "pursuit": PursuitTask,
    "obstacles": ObstacleTask,
    "cargo": CargoTask,
    "rendezvous": RendezvousTask,
    "pendulum": PendulumTask,
}


def make_task(name: str, **params) -> Task:
    try:
        cls = TASKS[name]
    except KeyError:
        raise ValueError(f"unknown task {name!r}; expected one of {sorted(TASKS)}") from None
    return cls(**params)


__all__ = [
    "Task", "StaticWorld", "TASKS", "make_task",
    "PursuitTask", "PreyWorld", "PreyParams", "prey_reference", "nearest_neighbour_distance",
    "ObstacleTask", "ObstacleWorld", "make_obstacle_world", "obstacle_step", "training_obstacle_task",
    "CargoTask", "RendezvousTask", "PendulumTask", "cargo_step", "rendezvous_step", "pendulum_step",
    "suspended_load_model", "rendezvous_model", "inverted_pendulum_model",
    "boids_policy", "gaussian_apf_policy", "apf_controller", "boids_controller",
]
