"""Execution policies.

Four single-agent policies share this module: open-loop tracking with
time-varying LQR feedback ("tlqr"), the same with event-triggered replanning
when the realized running cost deviates from the nominal by more than a
fractional threshold ("tlqr2"), and receding-horizon re-solving over the
full remaining horizon ("mpc") or a short control horizon ("mpc_sh").

Multi-agent problems stack transition-independent agents into one joint
model; the tracking policies then use per-agent decoupled feedback gains and
a centralized joint replan trigger, while "mpc" re-solves the joint problem
every step. Communication events are counted as 1 (initial joint plan) plus
the number of joint replans.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import costs as costs_mod
from . import models as models_mod
from . import trajopt
from .feedback import GainSchedule, default_weights, lqr_gains, tpfc_gains
from .models import linearize
from .trajopt import OcpProblem, SolverError, SolverOptions, solve_ocp

POLICY_KINDS = ("tlqr", "tlqr2", "mpc", "mpc_sh")
GAIN_SOURCES = ("surrogate_lqr", "tpfc")

_TINY = 1e-12


@dataclass(frozen=True)
class PolicyConfig:
    kind: str
    j_thresh: float = 0.02
    control_horizon: int | None = None
    gain_source: str = "surrogate_lqr"

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.j_thresh < 0:
            raise ValueError("j_thresh must be nonnegative")
        if self.control_horizon is not None and self.control_horizon < 1:
            raise ValueError("control_horizon must be at least 1")
        if self.gain_source not in GAIN_SOURCES:
            raise ValueError(f"unknown gain source {self.gain_source!r}")

    @property
    def effective_j_thresh(self):
        return math.inf if self.kind == "tlqr" else self.j_thresh

    def label(self):
        """Distinct per configuration so sweep rows never collide."""
        if self.kind == "mpc_sh" and self.control_horizon is not None:
            return f"mpc_sh{self.control_horizon}"
        if self.kind == "tlqr2":
            return f"tlqr2_t{self.j_thresh:g}"
        return self.kind


@dataclass(frozen=True)
class ReplanEvent:
    time: int
    trigger: float | None     # None for unconditional (receding-horizon) solves
    solve_ms: float
    skipped: bool = False     # trigger fired but the tail was too short to solve
    failed: bool = False      # solver error; execution continued on the stale plan


@dataclass(frozen=True)
class NominalPlan:
    """Nominal trajectory with feedback gains and running-cost prefixes."""

    xbar: np.ndarray           # (T+1, n_x)
    ubar: np.ndarray           # (T, n_u)
    gains: GainSchedule
    prefix_costs: np.ndarray   # (T,) cumulative stage costs
    nominal_cost: float        # full cost including the terminal term

    @property
    def horizon(self):
        return self.ubar.shape[0]


@dataclass
class RolloutRecord:
    policy: str
    states: np.ndarray
    controls: np.ndarray
    cost: float
    nominal_cost: float
    ratio: float
    replan_events: list
    step_plan_ms: np.ndarray
    terminal_error: float
    comm_events: int | None = None
    failed: bool = False

    @property
    def replan_count(self):
        """Replan solves actually performed (skipped/failed triggers excluded)."""
        return sum(1 for e in self.replan_events if not e.skipped and not e.failed)


@dataclass
class WarmStart:
    multipliers: np.ndarray | None
    mu: float


def _shift_multipliers(solution, drop, horizon):
    """Tail of a solution's constraint multipliers, zero-padded to a horizon."""
    if solution is None or solution.multipliers is None:
        return None
    lam = solution.multipliers[drop:]
    if lam.shape[0] >= horizon:
        lam = lam[:horizon]
    else:
        pad = np.zeros((horizon - lam.shape[0],) + lam.shape[1:])
        lam = np.concatenate((lam, pad), axis=0)
    return WarmStart(multipliers=lam.copy(), mu=solution.mu)


def build_gains(model, cost, xbar, ubar, gain_source="surrogate_lqr",
                weights=None):
    """Feedback gains about a nominal trajectory (single-agent problems)."""
    if gain_source == "tpfc":
        return tpfc_gains(xbar, ubar, model, cost)
    lin = linearize(model, xbar, ubar)
    return lqr_gains(lin, weights or default_weights(cost, model.n_x))


def plan_from_solution(model, cost, sol, gain_source="surrogate_lqr",
                       weights=None, gain_builder=None):
    """Attach gains and running-cost prefixes to a solved nominal.

    Returns (plan, seconds) where the timing covers gain synthesis only.
    """
    t0 = time.perf_counter()
    if gain_builder is None:
        gains = build_gains(model, cost, sol.states, sol.controls,
                            gain_source=gain_source, weights=weights)
    else:
        gains = gain_builder(model, cost, sol.states, sol.controls, gain_source)
    prefix = costs_mod.stage_cost_prefix(cost, sol.states, sol.controls)
    plan = NominalPlan(xbar=sol.states, ubar=sol.controls, gains=gains,
                       prefix_costs=prefix, nominal_cost=sol.nominal_cost)
    return plan, time.perf_counter() - t0


def make_plan(model, cost, x0, horizon, u_prev=None, u_guess=None, warm=None,
              gain_source="surrogate_lqr", weights=None, options=None,
              gain_builder=None):
    """Solve the deterministic problem and attach gains and cost prefixes.

    Returns (plan, solution, plan_time_seconds); the timing covers the solve
    plus gain synthesis, which is the planning work the harness accounts.
    """
    sol = solve_ocp(
        OcpProblem(model=model, cost=cost, x0=x0, horizon=horizon,
                   u_prev=u_prev, u_guess=u_guess),
        options=options, warm=warm)
    plan, gain_s = plan_from_solution(model, cost, sol,
                                      gain_source=gain_source,
                                      weights=weights,
                                      gain_builder=gain_builder)
    return plan, sol, sol.solve_time + gain_s


@dataclass(frozen=True)
class SharedPlan:
    """Initial plan shared across a sweep's rollouts.

    The first plan depends only on (model, cost, x0, horizon, solver), so the
    harness computes it once; its measured time is what every rollout reports
    for step 0.
    """

    plan: NominalPlan
    solution: object
    seconds: float
    gain_source: str = "surrogate_lqr"


def tlqr_control(plan, t, x, model):
    """Feedback command ubar_t - L_t (x - xbar_t), clamped to the box bounds.

    The slew-rate limit is enforced inside the planner, not on the feedback
    correction.
    """
    u = plan.ubar[t] - plan.gains.L[t] @ (x - plan.xbar[t])
    return np.minimum(np.maximum(u, model.u_min), model.u_max)


def execute_tlqr2(model, cost, x0, horizon, cfg, noise, eps,
                  weights=None, options=None, gain_builder=None,
                  count_comm=False, j_nominal=None, initial=None):
    """Track a nominal plan; replan from the current state when the realized
    running cost exceeds the nominal prefix by more than ``cfg.j_thresh``.

    With an infinite threshold this is pure tracking; the replan baseline is
    re-anchored after every replan so a single early excursion does not force
    replanning at every subsequent step.
    """
    if cfg.kind not in ("tlqr", "tlqr2"):
        raise ValueError("execute_tlqr2 expects a tracking policy config")
    j_thresh = cfg.effective_j_thresh
    x0 = np.asarray(x0, dtype=float)

    if initial is not None and initial.gain_source == cfg.gain_source:
        plan, sol, plan_s = initial.plan, initial.solution, initial.seconds
    else:
        plan, sol, plan_s = make_plan(
            model, cost, x0, horizon, gain_source=cfg.gain_source,
            weights=weights, options=options, gain_builder=gain_builder)
    j_bar_total = plan.nominal_cost if j_nominal is None else j_nominal
    last_sol = sol

    n, m = model.n_x, model.n_u
    xs = np.empty((horizon + 1, n))
    us = np.empty((horizon, m))
    step_plan_ms = np.zeros(horizon)
    step_plan_ms[0] = plan_s * 1e3
    events = []

    xs[0] = x0
    x = x0
    t_plan = 0          # global time at which the active plan starts
    anchor = 0.0        # realized cost accumulated before the active plan
    j_real = 0.0
    for t in range(horizon):
        tau = t - t_plan
        u = tlqr_control(plan, tau, x, model)
        us[t] = u
        w = noise.draw(t)
        x = models_mod.step(model, x, u, w=w, eps=eps)
        xs[t + 1] = x
        j_real += costs_mod.stage_cost(cost, xs[t], u)

        if t < horizon - 1:
            j_bar_prefix = anchor + plan.prefix_costs[tau]
            trigger = (j_real - j_bar_prefix) / max(j_bar_prefix, _TINY)
            if trigger > j_thresh:
                remaining = horizon - t - 1
                if remaining <= 1:
                    events.append(ReplanEvent(time=t, trigger=trigger,
                                              solve_ms=0.0, skipped=True))
                else:
                    guess = trajopt.fit_guess(plan.ubar[tau + 1:], remaining)
                    warm = _shift_multipliers(last_sol, tau + 1, remaining)
                    try:
                        plan_new, sol_new, secs = make_plan(
                            model, cost, x, remaining, u_prev=u,
                            u_guess=guess, warm=warm,
                            gain_source=cfg.gain_source, weights=weights,
                            options=options, gain_builder=gain_builder)
                    except SolverError:
                        events.append(ReplanEvent(time=t, trigger=trigger,
                                                  solve_ms=0.0, failed=True))
                    else:
                        events.append(ReplanEvent(time=t, trigger=trigger,
                                                  solve_ms=secs * 1e3))
                        step_plan_ms[t + 1] += secs * 1e3
                        plan, last_sol = plan_new, sol_new
                        t_plan = t + 1
                        anchor = j_real

    j = j_real + costs_mod.terminal_cost(cost, xs[horizon])
    comm = 1 + sum(1 for e in events if not e.skipped and not e.failed)
    return RolloutRecord(
        policy=cfg.label(),
        states=xs,
        controls=us,
        cost=j,
        nominal_cost=j_bar_total,
        ratio=j / max(j_bar_total, _TINY),
        replan_events=events,
        step_plan_ms=step_plan_ms,
        terminal_error=float(np.linalg.norm(xs[horizon] - cost.goal)),
        comm_events=comm if count_comm else None,
    )


def execute_mpc(model, cost, x0, horizon, cfg, noise, eps,
                options=None, count_comm=False, j_nominal=None, initial=None):
    """Receding-horizon execution: re-solve the deterministic problem from
    the measured state every step and apply the first control.

    The horizon is the full remainder for "mpc" and min(H_c, remainder) for
    "mpc_sh"; each solve is warm-started with the shifted previous solution.
    """
    if cfg.kind not in ("mpc", "mpc_sh"):
        raise ValueError("execute_mpc expects a receding-horizon config")
    h_c = cfg.control_horizon if cfg.kind == "mpc_sh" else None
    if h_c is not None and h_c > horizon:
        raise ValueError("control_horizon cannot exceed the mission horizon")
    x0 = np.asarray(x0, dtype=float)

    n, m = model.n_x, model.n_u
    xs = np.empty((horizon + 1, n))
    us = np.empty((horizon, m))
    step_plan_ms = np.zeros(horizon)
    events = []

    j_bar_total = j_nominal
    if j_bar_total is None and h_c is not None:
        # short-horizon runs still normalize by the full-horizon nominal cost
        full = solve_ocp(OcpProblem(model=model, cost=cost, x0=x0,
                                    horizon=horizon), options=options)
        j_bar_total = full.nominal_cost

    xs[0] = x0
    x = x0
    u_prev = np.zeros(m)
    sol = None
    j_real = 0.0
    for t in range(horizon):
        remaining = horizon - t
        h = remaining if h_c is None else min(h_c, remaining)
        guess = None
        warm = None
        if sol is not None and sol.controls.shape[0] > 1:
            guess = trajopt.fit_guess(sol.controls[1:], h)
            warm = _shift_multipliers(sol, 1, h)
        t0 = time.perf_counter()
        try:
            if t == 0 and h_c is None and initial is not None:
                sol = initial.solution
                secs = sol.solve_time
            else:
                sol = solve_ocp(OcpProblem(model=model, cost=cost, x0=x,
                                           horizon=h, u_prev=u_prev,
                                           u_guess=guess),
                                options=options, warm=warm)
                secs = time.perf_counter() - t0
            u = sol.controls[0]
            failed = False
        except SolverError:
            secs = time.perf_counter() - t0
            u = guess[0] if guess is not None else np.zeros(m)
            u = np.minimum(np.maximum(u, model.u_min), model.u_max)
            failed = True
        step_plan_ms[t] = secs * 1e3
        if t == 0:
            if j_bar_total is None:
                j_bar_total = sol.nominal_cost
        else:
            events.append(ReplanEvent(time=t, trigger=None,
                                      solve_ms=secs * 1e3, failed=failed))
        us[t] = u
        w = noise.draw(t)
        x = models_mod.step(model, x, u, w=w, eps=eps)
        xs[t + 1] = x
        j_real += costs_mod.stage_cost(cost, xs[t], u)
        u_prev = u

    j = j_real + costs_mod.terminal_cost(cost, xs[horizon])
    comm = 1 + sum(1 for e in events if not e.failed)
    return RolloutRecord(
        policy=cfg.label(),
        states=xs,
        controls=us,
        cost=j,
        nominal_cost=j_bar_total,
        ratio=j / max(j_bar_total, _TINY),
        replan_events=events,
        step_plan_ms=step_plan_ms,
        terminal_error=float(np.linalg.norm(xs[horizon] - cost.goal)),
        comm_events=comm if count_comm else None,
    )


def execute(model, cost, x0, horizon, cfg, noise, eps, options=None,
            j_nominal=None, count_comm=False, gain_builder=None,
            initial=None):
    """Dispatch a rollout to the policy named by ``cfg.kind``."""
    if cfg.kind in ("tlqr", "tlqr2"):
        return execute_tlqr2(model, cost, x0, horizon, cfg, noise, eps,
                             options=options, j_nominal=j_nominal,
                             count_comm=count_comm, gain_builder=gain_builder,
                             initial=initial)
    return execute_mpc(model, cost, x0, horizon, cfg, noise, eps,
                       options=options, j_nominal=j_nominal,
                       count_comm=count_comm, initial=initial)


# ---------------------------------------------------------------------------
# multi-agent problems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiAgentProblem:
    """Labeled point-to-point problem for identical transition-independent
    agents; coupling enters only through the pairwise collision penalty."""

    model: object                 # per-agent model
    agent_costs: tuple            # per-agent CostSpec (goal per agent)
    starts: np.ndarray            # (M, n_x)
    collision_scale: float = 100.0
    r_thresh: float = 0.5

    def __post_init__(self):
        starts = np.asarray(self.starts, dtype=float)
        if starts.ndim != 2 or starts.shape[1] != self.model.n_x:
            raise ValueError("starts must have shape (n_agents, n_x)")
        if starts.shape[0] != len(self.agent_costs):
            raise ValueError("one cost spec per agent is required")
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "agent_costs", tuple(self.agent_costs))

    @property
    def n_agents(self):
        return self.starts.shape[0]

    def joint_model(self):
        return models_mod.stack_agents(self.model, self.n_agents)

    def joint_cost(self):
        return costs_mod.joint_cost(self.agent_costs,
                                    collision_scale=self.collision_scale,
                                    r_thresh=self.r_thresh)

    def joint_x0(self):
        return self.starts.ravel()


def decoupled_gain_builder(problem):
    """Gain builder for joint plans: per-agent Riccati designs assembled into
    a block-diagonal joint schedule (the cross-agent blocks are zero)."""
    base = problem.model
    n, m = base.n_x, base.n_u

    def builder(joint_model, joint_cost_spec, xbar, ubar, gain_source):
        n_ag = problem.n_agents
        horizon = ubar.shape[0]
        joint_l = np.zeros((horizon, m * n_ag, n * n_ag))
        joint_p = np.zeros((horizon + 1, n * n_ag, n * n_ag))
        for a in range(n_ag):
            sx = slice(a * n, (a + 1) * n)
            su = slice(a * m, (a + 1) * m)
            sched = build_gains(base, problem.agent_costs[a],
                                np.ascontiguousarray(xbar[:, sx]),
                                np.ascontiguousarray(ubar[:, su]),
                                gain_source=gain_source)
            joint_l[:, su, sx] = sched.L
            joint_p[:, sx, sx] = sched.P
        return GainSchedule(L=joint_l, P=joint_p)

    return builder


def plan_joint(problem, horizon, options=None, gain_source="surrogate_lqr"):
    """Solve the joint deterministic problem once and split it per agent.

    Returns (joint_plan, per_agent_plans, joint_solution). The joint plan
    carries the decoupled block-diagonal gains used during execution; the
    per-agent plans carry each agent's own slice and gains.
    """
    joint_model = problem.joint_model()
    joint_cost_spec = problem.joint_cost()
    builder = decoupled_gain_builder(problem)
    plan, sol, _ = make_plan(joint_model, joint_cost_spec, problem.joint_x0(),
                             horizon, gain_source=gain_source, options=options,
                             gain_builder=builder)
    base = problem.model
    n, m = base.n_x, base.n_u
    per_agent = []
    for a in range(problem.n_agents):
        sx = slice(a * n, (a + 1) * n)
        su = slice(a * m, (a + 1) * m)
        xbar_a = np.ascontiguousarray(plan.xbar[:, sx])
        ubar_a = np.ascontiguousarray(plan.ubar[:, su])
        cost_a = problem.agent_costs[a]
        gains_a = build_gains(base, cost_a, xbar_a, ubar_a,
                              gain_source=gain_source)
        prefix_a = costs_mod.stage_cost_prefix(cost_a, xbar_a, ubar_a)
        per_agent.append(NominalPlan(
            xbar=xbar_a, ubar=ubar_a, gains=gains_a, prefix_costs=prefix_a,
            nominal_cost=float(costs_mod.trajectory_cost(cost_a, base,
                                                         xbar_a, ubar_a))))
    return plan, per_agent, sol


@dataclass
class MultiAgentRollout:
    joint: RolloutRecord
    per_agent: list

    @property
    def comm_events(self):
        return self.joint.comm_events


def execute_joint(problem, horizon, cfg, noise, eps, options=None,
                  j_nominal=None, initial=None):
    """Run a policy on the joint problem and split per-agent records.

    Tracking policies replan jointly (all agents together) when the joint
    realized-vs-nominal deviation crosses the threshold; "mpc" re-solves the
    joint problem every step.
    """
    joint_model = problem.joint_model()
    joint_cost_spec = problem.joint_cost()
    x0 = problem.joint_x0()
    if cfg.kind in ("tlqr", "tlqr2"):
        joint = execute_tlqr2(joint_model, joint_cost_spec, x0, horizon, cfg,
                              noise, eps, options=options,
                              gain_builder=decoupled_gain_builder(problem),
                              count_comm=True, j_nominal=j_nominal,
                              initial=initial)
    else:
        joint = execute_mpc(joint_model, joint_cost_spec, x0, horizon, cfg,
                            noise, eps, options=options, count_comm=True,
                            j_nominal=j_nominal, initial=initial)
    base = problem.model
    n, m = base.n_x, base.n_u
    agents = []
    for a in range(problem.n_agents):
        sx = slice(a * n, (a + 1) * n)
        su = slice(a * m, (a + 1) * m)
        xs_a = joint.states[:, sx]
        us_a = joint.controls[:, su]
        cost_a = problem.agent_costs[a]
        j_a = costs_mod.trajectory_cost(cost_a, base, xs_a, us_a)
        agents.append(RolloutRecord(
            policy=joint.policy,
            states=xs_a,
            controls=us_a,
            cost=j_a,
            nominal_cost=math.nan,
            ratio=math.nan,
            replan_events=joint.replan_events,
            step_plan_ms=joint.step_plan_ms,
            terminal_error=float(np.linalg.norm(xs_a[horizon] - cost_a.goal)),
        ))
    return MultiAgentRollout(joint=joint, per_agent=agents)
