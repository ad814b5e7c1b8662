"""Stochastic trajectory planning with decoupled feedback and replanning."""

from .costs import (CostSpec, Obstacle, collision_penalty, obstacle_penalty,
                    quadratic_cost, stage_cost, terminal_cost,
                    trajectory_cost)
from .feedback import GainSchedule, LqrWeights, default_weights, lqr_gains, tpfc_gains
from .kernels import BACKEND
from .models import (LinearizedSystem, ModelSpec, NumericError, car4d,
                     car_trailers6d, linear_model, linearize, quadrotor12d,
                     stack_agents, step)
from .montecarlo import (NoiseStream, Scenario, SweepSummary,
                         high_noise_check, run_rollout, run_sweep,
                         sample_noise, verify_decoupling)
from .policies import (MultiAgentProblem, NominalPlan, PolicyConfig,
                       ReplanEvent, RolloutRecord, execute, execute_joint,
                       execute_mpc, execute_tlqr2, make_plan, plan_joint,
                       tlqr_control)
from .trajopt import (OcpProblem, OcpSolution, SolverError, SolverOptions,
                      rollout_nominal, solve_ocp)

__version__ = "0.1.0"
