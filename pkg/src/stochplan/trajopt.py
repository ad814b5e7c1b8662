"""Deterministic open-loop optimal control.

The solver runs iterative LQR (successive linearization, quadratic
subproblem, backtracking line search) inside an augmented-Lagrangian outer
loop that enforces control box bounds and slew-rate limits. It is the single
computational core every execution policy calls; per-solve wall time is
reported so the harness can account planning effort.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .models import NumericError


class SolverError(RuntimeError):
    """Raised when the objective diverges; carries the iteration cost trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


@dataclass(frozen=True)
class SolverOptions:
    tol_cost: float = 1e-9        # relative objective decrease
    tol_step: float = 1e-9        # control-update infinity norm
    max_inner: int = 200
    max_outer: int = 25
    mu_init: float = 10.0
    mu_growth: float = 10.0
    reg_init: float = 1e-6
    reg_growth: float = 10.0
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 25
    feas_tol: float = 1e-8
    polish_iters: int = 0         # extra descent-to-failure iterations at the
                                  # final multipliers (first-order stationarity)


@dataclass(frozen=True)
class OcpProblem:
    model: object
    cost: object
    x0: np.ndarray
    horizon: int
    u_prev: np.ndarray | None = None   # slew anchor for t = 0
    u_guess: np.ndarray | None = None  # (T, n_u) warm start

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        if self.x0.shape != (self.model.n_x,):
            raise ValueError("x0 does not match the model's state dimension")
        if self.u_guess is not None:
            guess = np.asarray(self.u_guess, dtype=float)
            if guess.shape != (self.horizon, self.model.n_u):
                raise ValueError("u_guess must be empty or (horizon, n_u)")
            object.__setattr__(self, "u_guess", guess)
        if self.u_prev is not None:
            prev = np.asarray(self.u_prev, dtype=float)
            if prev.shape != (self.model.n_u,):
                raise ValueError("u_prev must match the control dimension")
            object.__setattr__(self, "u_prev", prev)


@dataclass
class OcpSolution:
    controls: np.ndarray
    states: np.ndarray
    nominal_cost: float
    iterations: int
    converged: bool
    solve_time: float
    constraint_violation: float
    cost_trace: list = field(default_factory=list)
    multipliers: np.ndarray | None = None  # AL state for warm restarts
    mu: float = 0.0


def rollout_nominal(model, x0, controls):
    """Noise-free forward simulation of a control sequence."""
    x0 = np.asarray(x0, dtype=float)
    controls = np.ascontiguousarray(controls, dtype=float)
    xs = kernels.rollout(model.model_id, model.params, model.dt, x0, controls)
    if not np.all(np.isfinite(xs)):
        raise NumericError("non-finite state during nominal rollout")
    return xs


def _has_constraints(model):
    return (np.any(np.isfinite(model.u_min)) or np.any(np.isfinite(model.u_max))
            or np.any(np.isfinite(model.du_max)))


def solve_ocp(problem, options=None, warm=None):
    """Locally optimal controls for the deterministic problem.

    Deterministic given identical inputs. ``warm`` may carry a previous
    OcpSolution whose constraint multipliers seed the outer loop (used by the
    receding-horizon policies so re-solves of an unchanged problem terminate
    immediately).
    """
    opts = options or SolverOptions()
    model = problem.model
    cost = problem.cost
    horizon = problem.horizon
    m = model.n_u

    t_start = time.perf_counter()

    if problem.u_guess is not None:
        us = problem.u_guess.copy()
    else:
        us = np.zeros((horizon, m))
    # infeasible guesses slow the outer loop down; clip to the box up front
    us = np.minimum(np.maximum(us, model.u_min), model.u_max)
    xs = rollout_nominal(model, problem.x0, us)

    u_prev = (problem.u_prev if problem.u_prev is not None
              else np.zeros(m))

    constrained = _has_constraints(model)
    # warm multipliers accelerate re-solves; the inherited penalty weight is
    # capped so a previously inflated mu cannot stiffen this solve
    if warm is not None and warm.multipliers is not None \
            and warm.multipliers.shape == (horizon, 4, m):
        lam = warm.multipliers.copy()
        mu = min(warm.mu, 1e6) if warm.mu > 0 else opts.mu_init
    else:
        lam = np.zeros((horizon, 4, m))
        mu = opts.mu_init

    cost_args = cost.kernel_args()

    def true_cost(xs_, us_):
        return float(kernels.traj_cost(xs_, us_, *cost_args))

    def objective(xs_, us_):
        j = true_cost(xs_, us_)
        if constrained:
            j += float(kernels.al_value(us_, u_prev, model.u_min, model.u_max,
                                        model.du_max, lam, mu))
        return j

    trace = [true_cost(xs, us)]
    total_iters = 0
    inner_converged = False
    prev_violation = math.inf
    n_outer = opts.max_outer if constrained else 1

    def descent_step(xs_, us_, obj_):
        """One linearize/backward/line-search iteration of the current
        penalized objective. Returns (accepted, xs, us, obj)."""
        lin_a, lin_b = kernels.linearize_seq(
            model.model_id, model.params, model.dt, xs_, us_)
        lx, lxx, lu, luu = kernels.cost_derivs_seq(xs_, us_, *cost_args)
        if constrained:
            al_g, al_h = kernels.al_derivs(us_, u_prev, model.u_min,
                                           model.u_max, model.du_max,
                                           lam, mu)
            lu = lu + al_g
            luu = luu.copy()
            for t in range(horizon):
                luu[t] += np.diag(al_h[t])

        reg = 0.0
        while True:
            ks, gains, dv1, dv2, ok = kernels.ilqr_backward(
                lin_a, lin_b, lx, lxx, lu, luu, reg)
            if ok:
                alpha = 1.0
                for _ in range(opts.max_backtracks):
                    xs_new, us_new = kernels.ilqr_forward(
                        model.model_id, model.params, model.dt,
                        xs_, us_, ks, gains, alpha)
                    if np.all(np.isfinite(xs_new)):
                        obj_new = objective(xs_new, us_new)
                        expected = -(alpha * dv1 + alpha * alpha * dv2)
                        if (math.isfinite(obj_new)
                                and obj_ - obj_new >= opts.armijo * max(expected, 0.0)
                                and obj_new <= obj_):
                            return True, xs_new, us_new, obj_new
                    alpha *= opts.backtrack
            # raise the Levenberg term on the control Hessian and retry
            reg = opts.reg_init if reg == 0.0 else reg * opts.reg_growth
            if reg > 1e10:
                return False, xs_, us_, obj_

    for outer in range(n_outer):
        obj = objective(xs, us)
        if not math.isfinite(obj):
            raise SolverError("objective is non-finite at the initial iterate",
                              trace)
        inner_converged = False
        for _ in range(opts.max_inner):
            total_iters += 1
            accepted, xs_new, us_new, obj_new = descent_step(xs, us, obj)
            if not accepted:
                # no descent direction: treat the iterate as stationary
                inner_converged = True
                break

            step_inf = float(np.max(np.abs(us_new - us)))
            rel_drop = (obj - obj_new) / max(1.0, abs(obj))
            xs, us, obj = xs_new, us_new, obj_new
            trace.append(true_cost(xs, us))
            if not math.isfinite(obj):
                raise SolverError("objective diverged to non-finite values",
                                  trace)
            if rel_drop < opts.tol_cost or step_inf < opts.tol_step:
                inner_converged = True
                break

        if not constrained:
            break
        violation = float(kernels.al_violation(us, u_prev, model.u_min,
                                               model.u_max, model.du_max))
        if violation <= opts.feas_tol:
            break
        lam = kernels.al_update_multipliers(us, u_prev, model.u_min,
                                            model.u_max, model.du_max, lam, mu)
        # grow the penalty only when the multiplier update alone is not
        # shrinking the violation fast enough
        if violation > 0.25 * prev_violation:
            mu = min(mu * opts.mu_growth, 1e8)
        prev_violation = violation

    # optional polish: with the multipliers frozen, squeeze out descent the
    # tolerance-based stops above leave behind, until the line search fails;
    # this is what pushes the first-order residual toward rounding level
    if opts.polish_iters > 0:
        obj = objective(xs, us)
        for _ in range(opts.polish_iters):
            accepted, xs_new, us_new, obj_new = descent_step(xs, us, obj)
            if not accepted or not obj_new < obj:
                break
            total_iters += 1
            xs, us, obj = xs_new, us_new, obj_new
            trace.append(true_cost(xs, us))

    # exact projection onto the box; the AL loop already drove violations to
    # ~feas_tol so this is a bit-level cleanup, then re-roll for consistency
    us = np.minimum(np.maximum(us, model.u_min), model.u_max)
    xs = rollout_nominal(model, problem.x0, us)
    violation = float(kernels.al_violation(us, u_prev, model.u_min,
                                           model.u_max, model.du_max))
    final_cost = true_cost(xs, us)
    if not math.isfinite(final_cost):
        raise SolverError("final objective is non-finite", trace)

    return OcpSolution(
        controls=us,
        states=xs,
        nominal_cost=final_cost,
        iterations=total_iters,
        converged=inner_converged and violation <= 1e-6,
        solve_time=time.perf_counter() - t_start,
        constraint_violation=violation,
        cost_trace=trace,
        multipliers=lam,
        mu=mu,
    )


def shift_warm(solution, steps=1):
    """Shift a solution for a receding-horizon warm start.

    Drops the first ``steps`` controls and multiplier slices; callers pad the
    control tail themselves when the new horizon is longer than the remainder.
    """
    if steps < 1:
        return solution
    controls = solution.controls[steps:]
    lam = (solution.multipliers[steps:]
           if solution.multipliers is not None else None)
    return replace(solution, controls=controls, multipliers=lam)


def fit_guess(controls, horizon):
    """Pad (repeating the last control) or truncate a guess to a horizon."""
    controls = np.asarray(controls, dtype=float)
    if controls.shape[0] >= horizon:
        return controls[:horizon].copy()
    if controls.shape[0] == 0:
        raise ValueError("cannot extend an empty control sequence")
    pad = np.repeat(controls[-1][None, :], horizon - controls.shape[0], axis=0)
    return np.concatenate((controls, pad), axis=0)
