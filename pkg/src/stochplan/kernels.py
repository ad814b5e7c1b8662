"""Hot numerical kernels.

Everything in this module is written in the numba-compatible subset of
numpy and compiled with ``@njit`` at import time. Set the environment
variable ``STOCHPLAN_BACKEND=numpy`` before import to skip compilation and
run the same code as plain numpy (useful for debugging and as a reference
path; ``benchmarks/bench_kernels.py`` compares the two).

Kernels are pure functions of their arguments and never allocate shared
state, so they are safe to call from concurrent rollouts.
"""

import math
import os

import numpy as np

BACKEND = os.environ.get("STOCHPLAN_BACKEND", "numba").strip().lower()
if BACKEND not in ("numba", "numpy"):
    raise RuntimeError(
        "STOCHPLAN_BACKEND must be 'numba' or 'numpy', got %r" % BACKEND
    )

if BACKEND == "numba":
    try:
        import numba as _numba

        def _jit(fn):
            return _numba.njit(cache=True, fastmath=False)(fn)

    except ImportError:  # pragma: no cover - numba is a declared dependency
        BACKEND = "numpy"

if BACKEND == "numpy":

    def _jit(fn):
        return fn


# Model identifiers used for dispatch inside kernels.
MODEL_LINEAR = 0
MODEL_CAR4D = 1
MODEL_TRAILERS6D = 2
MODEL_QUAD12D = 3
MODEL_STACKED = 4


# ---------------------------------------------------------------------------
# dynamics
# ---------------------------------------------------------------------------

@_jit
def _drift_one(mid, params, dt, x):
    """Uncontrolled part of one Euler step for an atomic (non-stacked) model."""
    n = x.shape[0]
    out = np.empty(n)
    if mid == MODEL_LINEAR:
        m = int(params[0])
        a = params[1:1 + n * n].reshape((n, n))
        out[:] = a @ x
    elif mid == MODEL_CAR4D or mid == MODEL_TRAILERS6D:
        out[:] = x
    elif mid == MODEL_QUAD12D:
        # state: position (0:3), roll/pitch/yaw (3:6), velocity (6:9),
        # body rates (9:12); gravity enters the drift, thrust/torque the input.
        gz = params[1]
        phi = x[3]
        th = x[4]
        sphi = math.sin(phi)
        cphi = math.cos(phi)
        tth = math.tan(th)
        cth = math.cos(th)
        out[:] = x
        out[0] += x[6] * dt
        out[1] += x[7] * dt
        out[2] += x[8] * dt
        # body rates -> Euler-angle rates (roll-pitch-yaw sequence)
        p = x[9]
        q = x[10]
        r = x[11]
        out[3] += (p + sphi * tth * q + cphi * tth * r) * dt
        out[4] += (cphi * q - sphi * r) * dt
        out[5] += (sphi / cth * q + cphi / cth * r) * dt
        out[8] += gz * dt
    else:
        out[:] = x
    return out


@_jit
def _input_one(mid, params, dt, x, m):
    """Input matrix B(x) of one atomic model; step is drift(x) + B(x) @ u."""
    n = x.shape[0]
    b = np.zeros((n, m))
    if mid == MODEL_LINEAR:
        b[:, :] = params[1 + n * n:1 + n * n + n * m].reshape((n, m))
    elif mid == MODEL_CAR4D:
        wheelbase = params[0]
        th = x[2]
        phi = x[3]
        b[0, 0] = math.cos(th) * dt
        b[1, 0] = math.sin(th) * dt
        b[2, 0] = math.tan(phi) / wheelbase * dt
        b[3, 1] = dt
    elif mid == MODEL_TRAILERS6D:
        wheelbase = params[0]
        th = x[2]
        phi = x[3]
        th1 = x[4]
        th2 = x[5]
        b[0, 0] = math.cos(th) * dt
        b[1, 0] = math.sin(th) * dt
        b[2, 0] = math.tan(phi) / wheelbase * dt
        b[3, 1] = dt
        b[4, 0] = math.sin(th - th1) / wheelbase * dt
        b[5, 0] = math.cos(th - th1) * math.sin(th1 - th2) / wheelbase * dt
    elif mid == MODEL_QUAD12D:
        mass = params[0]
        ix = params[2]
        iy = params[3]
        iz = params[4]
        phi = x[3]
        th = x[4]
        psi = x[5]
        # third column of Rz(psi) Ry(th) Rx(phi): thrust direction in world frame
        b[6, 0] = (math.cos(psi) * math.sin(th) * math.cos(phi)
                   + math.sin(psi) * math.sin(phi)) / mass * dt
        b[7, 0] = (math.sin(psi) * math.sin(th) * math.cos(phi)
                   - math.cos(psi) * math.sin(phi)) / mass * dt
        b[8, 0] = math.cos(th) * math.cos(phi) / mass * dt
        b[9, 1] = dt / ix
        b[10, 2] = dt / iy
        b[11, 3] = dt / iz
    return b


@_jit
def step(mid, params, dt, x, u):
    """One discrete step x_next = f(x) + B(x) @ u (exact control-affine form)."""
    if mid == MODEL_STACKED:
        n_ag = int(params[0])
        bmid = int(params[1])
        bn = int(params[2])
        bm = int(params[3])
        bp = params[4:]
        out = np.empty(x.shape[0])
        for a in range(n_ag):
            xa = x[a * bn:(a + 1) * bn]
            ua = u[a * bm:(a + 1) * bm]
            out[a * bn:(a + 1) * bn] = (
                _drift_one(bmid, bp, dt, xa) + _input_one(bmid, bp, dt, xa, bm) @ ua
            )
        return out
    return _drift_one(mid, params, dt, x) + _input_one(mid, params, dt, x, u.shape[0]) @ u


@_jit
def drift(mid, params, dt, x, m):
    if mid == MODEL_STACKED:
        n_ag = int(params[0])
        bmid = int(params[1])
        bn = int(params[2])
        bp = params[4:]
        out = np.empty(x.shape[0])
        for a in range(n_ag):
            out[a * bn:(a + 1) * bn] = _drift_one(bmid, bp, dt, x[a * bn:(a + 1) * bn])
        return out
    return _drift_one(mid, params, dt, x)


@_jit
def input_matrix(mid, params, dt, x, m):
    if mid == MODEL_STACKED:
        n_ag = int(params[0])
        bmid = int(params[1])
        bn = int(params[2])
        bm = int(params[3])
        bp = params[4:]
        b = np.zeros((x.shape[0], m))
        for a in range(n_ag):
            b[a * bn:(a + 1) * bn, a * bm:(a + 1) * bm] = _input_one(
                bmid, bp, dt, x[a * bn:(a + 1) * bn], bm
            )
        return b
    return _input_one(mid, params, dt, x, m)


@_jit
def rollout(mid, params, dt, x0, us):
    """Noise-free forward simulation; returns states with shape (T+1, n_x)."""
    horizon = us.shape[0]
    n = x0.shape[0]
    xs = np.empty((horizon + 1, n))
    xs[0] = x0
    for t in range(horizon):
        xs[t + 1] = step(mid, params, dt, xs[t], us[t])
    return xs


@_jit
def linearize_seq(mid, params, dt, xs, us):
    """Jacobians along a trajectory.

    A_t is a central finite difference of the full step map in x (per-state
    step max(1e-6, 1e-6*|x_i|)); B_t is the exact input matrix at x_t.
    """
    horizon = us.shape[0]
    n = xs.shape[1]
    m = us.shape[1]
    a_seq = np.empty((horizon, n, n))
    b_seq = np.empty((horizon, n, m))
    for t in range(horizon):
        x = xs[t]
        u = us[t]
        for i in range(n):
            h = 1e-6
            scale = 1e-6 * abs(x[i])
            if scale > h:
                h = scale
            xp = x.copy()
            xm = x.copy()
            xp[i] += h
            xm[i] -= h
            fp = step(mid, params, dt, xp, u)
            fm = step(mid, params, dt, xm, u)
            for k in range(n):
                a_seq[t, k, i] = (fp[k] - fm[k]) / (2.0 * h)
        b_seq[t] = input_matrix(mid, params, dt, x, m)
    return a_seq, b_seq


# ---------------------------------------------------------------------------
# costs
# ---------------------------------------------------------------------------

@_jit
def _obstacle_penalty(px, py, obs, m_pen):
    total = 0.0
    for k in range(obs.shape[0]):
        dx = px - obs[k, 0]
        dy = py - obs[k, 1]
        q = (dx * (obs[k, 2] * dx + obs[k, 3] * dy)
             + dy * (obs[k, 4] * dx + obs[k, 5] * dy))
        total += m_pen * math.exp(-(q - 1.0))
    return total


@_jit
def stage_cost(x, u, goal, wx, wu, obs, m_pen, r2_thresh, n_agents, agent_nx):
    e = x - goal
    c = e @ (wx @ e) + u @ (wu @ u)
    if obs.shape[0] > 0:
        if n_agents > 1:
            for a in range(n_agents):
                c += _obstacle_penalty(x[a * agent_nx], x[a * agent_nx + 1], obs, m_pen)
        else:
            c += _obstacle_penalty(x[0], x[1], obs, m_pen)
    if n_agents > 1:
        for i in range(n_agents):
            for j in range(i + 1, n_agents):
                dx = x[i * agent_nx] - x[j * agent_nx]
                dy = x[i * agent_nx + 1] - x[j * agent_nx + 1]
                c += m_pen * math.exp(-(dx * dx + dy * dy - r2_thresh))
    return c


@_jit
def terminal_cost(x, goal, wxf):
    e = x - goal
    return e @ (wxf @ e)


@_jit
def stage_cost_seq(xs, us, goal, wx, wu, obs, m_pen, r2_thresh, n_agents, agent_nx):
    horizon = us.shape[0]
    out = np.empty(horizon)
    for t in range(horizon):
        out[t] = stage_cost(xs[t], us[t], goal, wx, wu, obs, m_pen, r2_thresh,
                            n_agents, agent_nx)
    return out


@_jit
def traj_cost(xs, us, goal, wx, wu, wxf, obs, m_pen, r2_thresh, n_agents, agent_nx):
    total = 0.0
    for t in range(us.shape[0]):
        total += stage_cost(xs[t], us[t], goal, wx, wu, obs, m_pen, r2_thresh,
                            n_agents, agent_nx)
    return total + terminal_cost(xs[us.shape[0]], goal, wxf)


@_jit
def cost_derivs_seq(xs, us, goal, wx, wu, wxf, obs, m_pen, r2_thresh,
                    n_agents, agent_nx):
    """Analytic gradients/Hessians of the stage and terminal costs.

    Returns (lx (T+1,n), lxx (T+1,n,n), lu (T,m), luu (T,m,m)); the terminal
    slot of lx/lxx holds the terminal-cost derivatives.
    """
    horizon = us.shape[0]
    n = xs.shape[1]
    m = us.shape[1]
    lx = np.empty((horizon + 1, n))
    lxx = np.empty((horizon + 1, n, n))
    lu = np.empty((horizon, m))
    luu = np.empty((horizon, m, m))
    for t in range(horizon):
        e = xs[t] - goal
        lx[t] = 2.0 * (wx @ e)
        lxx[t] = 2.0 * wx
        lu[t] = 2.0 * (wu @ us[t])
        luu[t] = 2.0 * wu
        x = xs[t]
        if obs.shape[0] > 0:
            n_slots = n_agents if n_agents > 1 else 1
            span = agent_nx if n_agents > 1 else n
            for a in range(n_slots):
                i0 = a * span
                px = x[i0]
                py = x[i0 + 1]
                for k in range(obs.shape[0]):
                    dx = px - obs[k, 0]
                    dy = py - obs[k, 1]
                    gx = obs[k, 2] * dx + obs[k, 3] * dy
                    gy = obs[k, 4] * dx + obs[k, 5] * dy
                    q = dx * gx + dy * gy
                    w = m_pen * math.exp(-(q - 1.0))
                    lx[t, i0] += -2.0 * w * gx
                    lx[t, i0 + 1] += -2.0 * w * gy
                    lxx[t, i0, i0] += w * (4.0 * gx * gx - 2.0 * obs[k, 2])
                    lxx[t, i0, i0 + 1] += w * (4.0 * gx * gy - 2.0 * obs[k, 3])
                    lxx[t, i0 + 1, i0] += w * (4.0 * gy * gx - 2.0 * obs[k, 4])
                    lxx[t, i0 + 1, i0 + 1] += w * (4.0 * gy * gy - 2.0 * obs[k, 5])
        if n_agents > 1:
            for i in range(n_agents):
                for j in range(i + 1, n_agents):
                    ii = i * agent_nx
                    jj = j * agent_nx
                    dx = x[ii] - x[jj]
                    dy = x[ii + 1] - x[jj + 1]
                    w = m_pen * math.exp(-(dx * dx + dy * dy - r2_thresh))
                    # gradient wrt p_i is -2 w d; wrt p_j is +2 w d
                    lx[t, ii] += -2.0 * w * dx
                    lx[t, ii + 1] += -2.0 * w * dy
                    lx[t, jj] += 2.0 * w * dx
                    lx[t, jj + 1] += 2.0 * w * dy
                    hxx = w * (4.0 * dx * dx - 2.0)
                    hyy = w * (4.0 * dy * dy - 2.0)
                    hxy = w * 4.0 * dx * dy
                    # same-agent blocks add H, cross blocks subtract H
                    lxx[t, ii, ii] += hxx
                    lxx[t, ii + 1, ii + 1] += hyy
                    lxx[t, ii, ii + 1] += hxy
                    lxx[t, ii + 1, ii] += hxy
                    lxx[t, jj, jj] += hxx
                    lxx[t, jj + 1, jj + 1] += hyy
                    lxx[t, jj, jj + 1] += hxy
                    lxx[t, jj + 1, jj] += hxy
                    lxx[t, ii, jj] -= hxx
                    lxx[t, jj, ii] -= hxx
                    lxx[t, ii + 1, jj + 1] -= hyy
                    lxx[t, jj + 1, ii + 1] -= hyy
                    lxx[t, ii, jj + 1] -= hxy
                    lxx[t, jj + 1, ii] -= hxy
                    lxx[t, ii + 1, jj] -= hxy
                    lxx[t, jj, ii + 1] -= hxy
    ef = xs[horizon] - goal
    lx[horizon] = 2.0 * (wxf @ ef)
    lxx[horizon] = 2.0 * wxf
    return lx, lxx, lu, luu


# ---------------------------------------------------------------------------
# augmented-Lagrangian terms for box and slew-rate control constraints
# ---------------------------------------------------------------------------
# Constraint order per step and component: 0 upper box, 1 lower box,
# 2 upper slew, 3 lower slew. lam has shape (T, 4, m).

@_jit
def al_value(us, u_prev, u_min, u_max, du_max, lam, mu):
    total = 0.0
    horizon = us.shape[0]
    m = us.shape[1]
    for t in range(horizon):
        for i in range(m):
            prev = u_prev[i] if t == 0 else us[t - 1, i]
            s = us[t, i] - prev
            g0 = us[t, i] - u_max[i]
            g1 = u_min[i] - us[t, i]
            g2 = s - du_max[i]
            g3 = -s - du_max[i]
            for c in range(4):
                if c == 0:
                    g = g0
                elif c == 1:
                    g = g1
                elif c == 2:
                    g = g2
                else:
                    g = g3
                z = lam[t, c, i] + mu * g
                if z > 0.0:
                    total += (z * z - lam[t, c, i] * lam[t, c, i]) / (2.0 * mu)
                else:
                    total += -(lam[t, c, i] * lam[t, c, i]) / (2.0 * mu)
    return total


@_jit
def al_derivs(us, u_prev, u_min, u_max, du_max, lam, mu):
    """Gradient and (block-diagonal) Hessian of the constraint penalty wrt us.

    Slew terms couple adjacent controls; cross-step Hessian blocks are
    dropped (the gradient stays exact, so line-searched steps still descend).
    """
    horizon = us.shape[0]
    m = us.shape[1]
    grad = np.zeros((horizon, m))
    hess = np.zeros((horizon, m))
    for t in range(horizon):
        for i in range(m):
            prev = u_prev[i] if t == 0 else us[t - 1, i]
            s = us[t, i] - prev
            z0 = lam[t, 0, i] + mu * (us[t, i] - u_max[i])
            if z0 > 0.0:
                grad[t, i] += z0
                hess[t, i] += mu
            z1 = lam[t, 1, i] + mu * (u_min[i] - us[t, i])
            if z1 > 0.0:
                grad[t, i] -= z1
                hess[t, i] += mu
            z2 = lam[t, 2, i] + mu * (s - du_max[i])
            if z2 > 0.0:
                grad[t, i] += z2
                hess[t, i] += mu
                if t > 0:
                    grad[t - 1, i] -= z2
                    hess[t - 1, i] += mu
            z3 = lam[t, 3, i] + mu * (-s - du_max[i])
            if z3 > 0.0:
                grad[t, i] -= z3
                hess[t, i] += mu
                if t > 0:
                    grad[t - 1, i] += z3
                    hess[t - 1, i] += mu
    return grad, hess


@_jit
def al_violation(us, u_prev, u_min, u_max, du_max):
    worst = 0.0
    horizon = us.shape[0]
    m = us.shape[1]
    for t in range(horizon):
        for i in range(m):
            prev = u_prev[i] if t == 0 else us[t - 1, i]
            s = us[t, i] - prev
            for g in (us[t, i] - u_max[i], u_min[i] - us[t, i],
                      s - du_max[i], -s - du_max[i]):
                if g > worst:
                    worst = g
    return worst


@_jit
def al_update_multipliers(us, u_prev, u_min, u_max, du_max, lam, mu):
    horizon = us.shape[0]
    m = us.shape[1]
    out = np.empty_like(lam)
    for t in range(horizon):
        for i in range(m):
            prev = u_prev[i] if t == 0 else us[t - 1, i]
            s = us[t, i] - prev
            g0 = us[t, i] - u_max[i]
            g1 = u_min[i] - us[t, i]
            g2 = s - du_max[i]
            g3 = -s - du_max[i]
            out[t, 0, i] = max(0.0, lam[t, 0, i] + mu * g0)
            out[t, 1, i] = max(0.0, lam[t, 1, i] + mu * g1)
            out[t, 2, i] = max(0.0, lam[t, 2, i] + mu * g2)
            out[t, 3, i] = max(0.0, lam[t, 3, i] + mu * g3)
    return out


# ---------------------------------------------------------------------------
# LQ machinery
# ---------------------------------------------------------------------------

@_jit
def ilqr_backward(a_seq, b_seq, lx, lxx, lu, luu, reg):
    """Backward pass of the quadratic subproblem.

    Returns (k, K, dv1, dv2, ok). ok is False when a control Hessian fails
    the positive-definiteness check, in which case the caller should raise
    the regularization and retry.
    """
    horizon = a_seq.shape[0]
    n = a_seq.shape[1]
    m = b_seq.shape[2]
    ks = np.zeros((horizon, m))
    gains = np.zeros((horizon, m, n))
    vx = lx[horizon].copy()
    vxx = lxx[horizon].copy()
    dv1 = 0.0
    dv2 = 0.0
    for t in range(horizon - 1, -1, -1):
        a = a_seq[t]
        b = b_seq[t]
        qx = lx[t] + a.T @ vx
        qu = lu[t] + b.T @ vx
        qxx = lxx[t] + a.T @ (vxx @ a)
        quu = luu[t] + b.T @ (vxx @ b)
        qux = b.T @ (vxx @ a)
        for i in range(m):
            quu[i, i] += reg
        quu = 0.5 * (quu + quu.T)
        evals = np.linalg.eigvalsh(quu)
        if evals[0] <= 1e-12:
            return ks, gains, dv1, dv2, False
        kff = -np.linalg.solve(quu, qu)
        kfb = -np.linalg.solve(quu, qux)
        ks[t] = kff
        gains[t] = kfb
        dv1 += kff @ qu
        dv2 += 0.5 * (kff @ (quu @ kff))
        vx = qx + kfb.T @ (quu @ kff) + kfb.T @ qu + qux.T @ kff
        vxx = qxx + kfb.T @ (quu @ kfb) + kfb.T @ qux + qux.T @ kfb
        vxx = 0.5 * (vxx + vxx.T)
    return ks, gains, dv1, dv2, True


@_jit
def ilqr_forward(mid, params, dt, xs, us, ks, gains, alpha):
    horizon = us.shape[0]
    xs_new = np.empty_like(xs)
    us_new = np.empty_like(us)
    xs_new[0] = xs[0]
    for t in range(horizon):
        du = alpha * ks[t] + gains[t] @ (xs_new[t] - xs[t])
        us_new[t] = us[t] + du
        xs_new[t + 1] = step(mid, params, dt, xs_new[t], us_new[t])
    return xs_new, us_new


@_jit
def riccati_lqr(a_seq, b_seq, q, r, qf):
    """Finite-horizon discrete Riccati recursion.

    Gains satisfy u = -L_t x; value Hessians P_t are symmetrized each step.
    """
    horizon = a_seq.shape[0]
    n = a_seq.shape[1]
    m = b_seq.shape[2]
    gains = np.empty((horizon, m, n))
    values = np.empty((horizon + 1, n, n))
    values[horizon] = qf
    for t in range(horizon - 1, -1, -1):
        a = a_seq[t]
        b = b_seq[t]
        p_next = values[t + 1]
        s = r + b.T @ (p_next @ b)
        gains[t] = np.linalg.solve(s, b.T @ (p_next @ a))
        p = a.T @ (p_next @ a) - a.T @ (p_next @ b) @ gains[t] + q
        values[t] = 0.5 * (p + p.T)
    return gains, values


# ---------------------------------------------------------------------------
# closed-loop rollouts
# ---------------------------------------------------------------------------

@_jit
def tracking_rollout(mid, params, dt, xbar, ubar, gains, x0, noise, eps,
                     u_min, u_max):
    """Track a nominal trajectory with time-varying linear feedback.

    Commands are clamped to the box bounds before actuator noise is added
    (noise row t is the already-scaled disturbance u_max * nu_t).
    """
    horizon = ubar.shape[0]
    n = x0.shape[0]
    m = ubar.shape[1]
    xs = np.empty((horizon + 1, n))
    us = np.empty((horizon, m))
    xs[0] = x0
    for t in range(horizon):
        u = ubar[t] - gains[t] @ (xs[t] - xbar[t])
        for i in range(m):
            if u[i] > u_max[i]:
                u[i] = u_max[i]
            elif u[i] < u_min[i]:
                u[i] = u_min[i]
        us[t] = u
        xs[t + 1] = step(mid, params, dt, xs[t], u + eps * noise[t])
    return xs, us


@_jit
def linear_perturbation_rollout(abar_seq, b_seq, noise, eps):
    """Propagate the exactly-linear closed-loop perturbation system.

    dx_{t+1} = (A_t - B_t L_t) dx_t + eps * B_t w_t, dx_0 = 0; abar_seq holds
    the closed-loop matrices A_t - B_t L_t.
    """
    horizon = abar_seq.shape[0]
    n = abar_seq.shape[1]
    dxl = np.zeros((horizon + 1, n))
    for t in range(horizon):
        dxl[t + 1] = abar_seq[t] @ dxl[t] + eps * (b_seq[t] @ noise[t])
    return dxl


_WARMED = False


def warmup():
    """Trigger compilation (or cache load) of every kernel signature.

    Call before timing-sensitive work so JIT latency never lands inside a
    measured planning interval. Idempotent and cheap once compiled.
    """
    global _WARMED
    if _WARMED:
        return
    a = np.array([[1.0, 0.1], [0.0, 1.0]])
    b = np.array([[0.0], [0.1]])
    params = np.concatenate(([1.0], a.ravel(), b.ravel()))
    x = np.zeros(2)
    u = np.zeros(1)
    us = np.zeros((2, 1))
    lam = np.zeros((2, 4, 1))
    lo = np.array([-1.0])
    hi = np.array([1.0])
    du = np.array([1.0])
    goal = np.zeros(2)
    wx = np.eye(2)
    wu = np.eye(1)
    wxf = np.eye(2)
    obs = np.array([[5.0, 5.0, 1.0, 0.0, 0.0, 1.0]])

    step(MODEL_LINEAR, params, 1.0, x, u)
    drift(MODEL_LINEAR, params, 1.0, x, 1)
    input_matrix(MODEL_LINEAR, params, 1.0, x, 1)
    xs = rollout(MODEL_LINEAR, params, 1.0, x, us)
    a_seq, b_seq = linearize_seq(MODEL_LINEAR, params, 1.0, xs, us)
    stage_cost(x, u, goal, wx, wu, obs, 1.0, 0.25, 1, 2)
    terminal_cost(x, goal, wxf)
    stage_cost_seq(xs, us, goal, wx, wu, obs, 1.0, 0.25, 1, 2)
    traj_cost(xs, us, goal, wx, wu, wxf, obs, 1.0, 0.25, 1, 2)
    lx, lxx, lu, luu = cost_derivs_seq(xs, us, goal, wx, wu, wxf, obs,
                                       1.0, 0.25, 1, 2)
    al_value(us, u, lo, hi, du, lam, 10.0)
    al_derivs(us, u, lo, hi, du, lam, 10.0)
    al_violation(us, u, lo, hi, du)
    al_update_multipliers(us, u, lo, hi, du, lam, 10.0)
    ks, gains, _, _, _ = ilqr_backward(a_seq, b_seq, lx, lxx, lu, luu, 0.0)
    ilqr_forward(MODEL_LINEAR, params, 1.0, xs, us, ks, gains, 1.0)
    riccati_lqr(a_seq, b_seq, wx, wu, wxf)
    tracking_rollout(MODEL_LINEAR, params, 1.0, xs, us, gains, x,
                     np.zeros((2, 1)), 0.0, lo, hi)
    linear_perturbation_rollout(a_seq, b_seq, np.zeros((2, 1)), 0.0)
    _WARMED = True
