"""Named experiment presets.

Each preset bundles a model, cost weights, start/goal, and horizon. The
single-agent and three-agent car settings, the trailer rig, and the
quadrotor ship with the exact weight/bound values used throughout the test
suite; the obstacle scenario adds two documented ellipsoids to the car
problem.
"""

import math

import numpy as np

from . import models
from .costs import CostSpec, Obstacle, quadratic_cost
from .montecarlo import Scenario
from .policies import MultiAgentProblem

CAR_WX = (20.0, 20.0, 0.0, 0.0)
CAR_WU = (20.0, 200.0)
CAR_WXF = (7000.0, 7000.0, 10000.0, 1000.0)

TRAILERS_WX = (10.0, 10.0, 1.0, 1.0, 1.0, 1.0)
TRAILERS_WU = (5.0, 5.0)
TRAILERS_WXF = (1000.0, 1000.0, 1000.0, 100.0, 100.0, 100.0)

QUAD_WX = (10.0, 10.0, 10.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
QUAD_WU = (5.0, 10.0, 10.0, 10.0)
QUAD_WXF = tuple([1000.0] * 12)

# illustrative ellipsoids flanking the corridor from (3, 1) to (3.5, 7)
CAR_OBSTACLES = (
    Obstacle(center=np.array([3.0, 3.5]), shape=np.diag([4.0, 1.0])),
    Obstacle(center=np.array([4.5, 5.5]), shape=np.diag([2.0, 2.0])),
)


def car_single():
    return Scenario(
        name="car_single",
        horizon=35,
        model=models.car4d(dt=0.1),
        cost=quadratic_cost(CAR_WX, CAR_WU, CAR_WXF,
                            goal=[3.5, 7.0, math.pi / 2.0, 0.0]),
        x0=np.array([3.0, 1.0, 0.0, 0.0]),
    )


def car_obstacles():
    # the penalty scale must rival the quadratic terms (which reach into the
    # thousands here) or the planner just drives through the soft walls
    base = car_single()
    cost = CostSpec(Wx=base.cost.Wx, Wu=base.cost.Wu, Wxf=base.cost.Wxf,
                    goal=base.cost.goal, obstacles=CAR_OBSTACLES,
                    collision_scale=2000.0, r_thresh=0.5)
    return Scenario(name="car_obstacles", horizon=base.horizon,
                    model=base.model, cost=cost, x0=base.x0)


def trailers_single():
    return Scenario(
        name="trailers_single",
        horizon=40,
        model=models.car_trailers6d(dt=0.1),
        cost=quadratic_cost(TRAILERS_WX, TRAILERS_WU, TRAILERS_WXF,
                            goal=[2.0, 2.0, 0.0, 0.0, 0.0, 0.0]),
        x0=np.array([0.0, 0.0, math.pi / 3.0, 0.0, 0.0, 0.0]),
    )


def quad_single():
    return Scenario(
        name="quad_single",
        horizon=30,
        model=models.quadrotor12d(dt=0.1),
        cost=quadratic_cost(QUAD_WX, QUAD_WU, QUAD_WXF,
                            goal=[2.0, 2.0, 2.0] + [0.0] * 9),
        x0=np.zeros(12),
    )


def car_multi3():
    car = models.car4d(dt=0.1)
    starts = np.array([
        [3.0, 1.0, math.pi / 2.0, 0.0],
        [5.0, 1.0, 0.0, 0.0],
        [6.0, 8.0, 0.0, 0.0],
    ])
    goals = [
        [3.5, 7.0, 0.0, 0.0],
        [2.0, 8.0, 0.0, 0.0],
        [8.0, 1.5, 0.0, 0.0],
    ]
    agent_costs = tuple(
        quadratic_cost(CAR_WX, CAR_WU, CAR_WXF, goal=g) for g in goals
    )
    problem = MultiAgentProblem(model=car, agent_costs=agent_costs,
                                starts=starts, collision_scale=100.0,
                                r_thresh=0.5)
    return Scenario(name="car_multi3", horizon=35, multi=problem)


PRESETS = {
    "car_single": car_single,
    "car_obstacles": car_obstacles,
    "trailers_single": trailers_single,
    "quad_single": quad_single,
    "car_multi3": car_multi3,
}


def load(name):
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
