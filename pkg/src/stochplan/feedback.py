"""Linear feedback synthesis around a nominal trajectory.

Two designs are available: the standard time-varying LQR Riccati gains used
by the tracking policies, and a second-order recursion that propagates the
gradient and Hessian of the deterministic value function along the nominal
(accounting for dynamics curvature). Both return gains in the convention
u = ubar - L @ (x - xbar).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .models import linearize


@dataclass(frozen=True)
class LqrWeights:
    Q: np.ndarray
    R: np.ndarray
    Qf: np.ndarray

    def __post_init__(self):
        for name in ("Q", "R", "Qf"):
            w = np.asarray(getattr(self, name), dtype=float)
            if not np.allclose(w, w.T):
                raise ValueError(f"{name} must be symmetric")
            object.__setattr__(self, name, w)
        if np.linalg.eigvalsh(self.R)[0] <= 0:
            raise ValueError("R must be positive definite")


@dataclass(frozen=True)
class GainSchedule:
    """Time-varying feedback gains L_t with the value Hessians P_t.

    ``G`` holds the value-function gradients when produced by the
    second-order design, plus the first-order-condition residual observed
    while building them (a warning indicator, not an error).
    """

    L: np.ndarray              # (T, n_u, n_x)
    P: np.ndarray              # (T+1, n_x, n_x)
    G: np.ndarray | None = None
    foc_residual: float = 0.0

    @property
    def horizon(self):
        return self.L.shape[0]

    def to_record(self):
        """JSON-compatible dump for run artifacts."""
        out = {"L": self.L.tolist(), "P": self.P.tolist()}
        if self.G is not None:
            out["G"] = self.G.tolist()
            out["foc_residual"] = self.foc_residual
        return out


def default_weights(cost, n_x=None):
    """Surrogate tracking weights derived from the planning cost.

    Q gets a small identity shim so it stays positive definite on models
    whose state weight has zero rows.
    """
    n = cost.Wx.shape[0] if n_x is None else n_x
    return LqrWeights(Q=cost.Wx + 1e-3 * np.eye(n), R=cost.Wu, Qf=cost.Wxf)


def lqr_gains(lin, weights):
    """Riccati gains for tracking a nominal trajectory.

    L_t = (R + B' P_{t+1} B)^-1 B' P_{t+1} A, computed backward from
    P_T = Qf; P is symmetrized each step.
    """
    a_seq = np.ascontiguousarray(lin.A, dtype=float)
    b_seq = np.ascontiguousarray(lin.B, dtype=float)
    n = a_seq.shape[1]
    if weights.Q.shape != (n, n) or weights.Qf.shape != (n, n):
        raise ValueError("weight dimensions do not match the system")
    gains, values = kernels.riccati_lqr(
        a_seq, b_seq, weights.Q, weights.R, weights.Qf)
    if not np.all(np.isfinite(gains)):
        raise ArithmeticError("Riccati recursion produced non-finite gains")
    return GainSchedule(L=gains, P=values)


def _dynamics_hessians(model, x, u, h=1e-4):
    """Second derivatives of the step map by central finite differences.

    Returns (hxx (n,n,n), hxu (n,n,m)): hxx[k] is the state Hessian of the
    k-th next-state component, hxu[k] its state/control cross block.
    """
    n = model.n_x
    m = model.n_u
    mid, params, dt = model.model_id, model.params, model.dt

    def f(xv, uv):
        return kernels.step(mid, params, dt, xv, uv)

    hxx = np.zeros((n, n, n))
    for i in range(n):
        for j in range(i, n):
            xpp = x.copy(); xpp[i] += h; xpp[j] += h
            xpm = x.copy(); xpm[i] += h; xpm[j] -= h
            xmp = x.copy(); xmp[i] -= h; xmp[j] += h
            xmm = x.copy(); xmm[i] -= h; xmm[j] -= h
            d2 = (f(xpp, u) - f(xpm, u) - f(xmp, u) + f(xmm, u)) / (4 * h * h)
            hxx[:, i, j] = d2
            hxx[:, j, i] = d2
    hxu = np.zeros((n, n, m))
    for i in range(n):
        xp = x.copy(); xp[i] += h
        xm = x.copy(); xm[i] -= h
        bp = kernels.input_matrix(mid, params, dt, xp, m)
        bm = kernels.input_matrix(mid, params, dt, xm, m)
        hxu[:, i, :] = (bp - bm) / (2 * h)
    return hxx, hxu


def tpfc_gains(plan_states, plan_controls, model, cost, foc_tol=1e-3):
    """Second-order perturbation-feedback gains about an optimal nominal.

    Propagates the gradient G_t and Hessian P_t of the deterministic value
    function backward along the nominal, contracting G with the dynamics
    curvature tensors. Valid when the nominal satisfies the first-order
    stationarity condition; the observed residual is recorded on the result
    (gains are still returned when it exceeds ``foc_tol``).
    """
    xs = np.ascontiguousarray(plan_states, dtype=float)
    us = np.ascontiguousarray(plan_controls, dtype=float)
    horizon = us.shape[0]
    n = model.n_x
    m = model.n_u

    lin = linearize(model, xs, us)
    lx, lxx, lu, luu = kernels.cost_derivs_seq(xs, us, *cost.kernel_args())

    gains = np.zeros((horizon, m, n))
    values = np.zeros((horizon + 1, n, n))
    grads = np.zeros((horizon + 1, n))
    values[horizon] = lxx[horizon]
    grads[horizon] = lx[horizon]
    worst_foc = 0.0
    for t in range(horizon - 1, -1, -1):
        a = lin.A[t]
        b = lin.B[t]
        p_next = values[t + 1]
        g_next = grads[t + 1]
        # residual of R ubar + B' G'; zero on a converged open-loop optimum
        foc = lu[t] + b.T @ g_next
        worst_foc = max(worst_foc, float(np.max(np.abs(foc))))
        hxx, hxu = _dynamics_hessians(model, xs[t], us[t])
        g_dot_hxx = np.einsum("k,kij->ij", g_next, hxx)
        g_dot_hxu = np.einsum("k,kij->ij", g_next, hxu)
        s = luu[t] + b.T @ (p_next @ b)
        k_t = -np.linalg.solve(s, b.T @ (p_next @ a) + g_dot_hxu.T)
        p = lxx[t] + a.T @ (p_next @ a) - k_t.T @ (s @ k_t) + g_dot_hxx
        values[t] = 0.5 * (p + p.T)
        grads[t] = lx[t] + g_next @ a
        gains[t] = -k_t  # store in the u = ubar - L dx convention
    return GainSchedule(L=gains, P=values, G=grads, foc_residual=worst_foc)
