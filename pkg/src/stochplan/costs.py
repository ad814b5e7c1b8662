"""Quadratic stage/terminal costs with soft obstacle and collision penalties.

The state cost is quadratic in the deviation from the goal; obstacle and
inter-agent collision penalties are added to the stage cost (never as hard
constraints). For joint multi-agent problems, ``n_agents``/``agent_nx``
describe the block structure of the stacked state so the collision term can
locate each agent's planar position.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels

_NO_OBS = np.zeros((0, 6))


@dataclass(frozen=True)
class Obstacle:
    """Ellipsoidal obstacle: boundary is (p-center)' shape (p-center) = 1."""

    center: np.ndarray  # (2,)
    shape: np.ndarray   # (2, 2) symmetric positive definite

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float).reshape(2)
        shape = np.asarray(self.shape, dtype=float).reshape(2, 2)
        if not np.allclose(shape, shape.T):
            raise ValueError("obstacle shape matrix must be symmetric")
        if np.linalg.eigvalsh(shape)[0] <= 0:
            raise ValueError("obstacle shape matrix must be positive definite")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "shape", shape)


@dataclass(frozen=True)
class CostSpec:
    Wx: np.ndarray
    Wu: np.ndarray
    Wxf: np.ndarray
    goal: np.ndarray
    obstacles: tuple = ()
    collision_scale: float = 100.0
    r_thresh: float = 0.5
    n_agents: int = 1
    agent_nx: int = 0

    def __post_init__(self):
        for name in ("Wx", "Wu", "Wxf"):
            w = np.asarray(getattr(self, name), dtype=float)
            if not np.allclose(w, w.T):
                raise ValueError(f"{name} must be symmetric")
            object.__setattr__(self, name, w)
        if np.linalg.eigvalsh(self.Wx)[0] < -1e-12:
            raise ValueError("Wx must be positive semidefinite")
        if np.linalg.eigvalsh(self.Wxf)[0] < -1e-12:
            raise ValueError("Wxf must be positive semidefinite")
        if np.linalg.eigvalsh(self.Wu)[0] <= 0:
            raise ValueError("Wu must be positive definite")
        if self.collision_scale <= 0:
            raise ValueError("collision_scale must be positive")
        if self.r_thresh <= 0:
            raise ValueError("r_thresh must be positive")
        object.__setattr__(self, "goal", np.asarray(self.goal, dtype=float))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        for name in ("Wx", "Wu", "Wxf", "goal"):
            getattr(self, name).setflags(write=False)

    @property
    def obstacle_array(self):
        """Obstacles flattened to the (n, 6) layout the kernels consume."""
        if not self.obstacles:
            return _NO_OBS
        rows = [
            np.concatenate((o.center, o.shape.ravel())) for o in self.obstacles
        ]
        return np.asarray(rows)

    def kernel_args(self):
        return (self.goal, self.Wx, self.Wu, self.Wxf, self.obstacle_array,
                self.collision_scale, self.r_thresh ** 2,
                self.n_agents, self.agent_nx)


def stage_cost(spec, x, u):
    """Quadratic deviation cost plus obstacle/collision penalties."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    goal, wx, wu, _, obs, m_pen, r2, n_ag, ag_nx = spec.kernel_args()
    return float(kernels.stage_cost(x, u, goal, wx, wu, obs, m_pen, r2, n_ag, ag_nx))


def terminal_cost(spec, x):
    x = np.asarray(x, dtype=float)
    return float(kernels.terminal_cost(x, spec.goal, spec.Wxf))


def obstacle_penalty(spec, p):
    """Sum over obstacles of M * exp(-((p-o)' E (p-o) - 1))."""
    p = np.asarray(p, dtype=float)
    return float(kernels._obstacle_penalty(
        p[0], p[1], spec.obstacle_array, spec.collision_scale))


def collision_penalty(spec, p_i, p_j):
    """Pairwise proximity penalty M * exp(-(|p_i-p_j|^2 - r_thresh^2))."""
    d = np.asarray(p_i, dtype=float) - np.asarray(p_j, dtype=float)
    return float(spec.collision_scale
                 * np.exp(-(d @ d - spec.r_thresh ** 2)))


def stage_cost_prefix(spec, xs, us):
    """Cumulative stage costs: entry t is the running cost through step t."""
    xs = np.ascontiguousarray(xs, dtype=float)
    us = np.ascontiguousarray(us, dtype=float)
    goal, wx, wu, _, obs, m_pen, r2, n_ag, ag_nx = spec.kernel_args()
    per_step = kernels.stage_cost_seq(xs, us, goal, wx, wu, obs, m_pen, r2,
                                      n_ag, ag_nx)
    return np.cumsum(per_step)


def trajectory_cost(spec, model, xs, us):
    """Total cost: sum of stage costs plus the terminal cost, applied once."""
    xs = np.ascontiguousarray(xs, dtype=float)
    us = np.ascontiguousarray(us, dtype=float)
    if xs.shape[0] != us.shape[0] + 1:
        raise ValueError("need len(xs) == len(us) + 1")
    if model is not None and xs.shape[1] != model.n_x:
        raise ValueError("state dimension does not match model")
    return float(kernels.traj_cost(xs, us, *spec.kernel_args()))


def quadratic_cost(wx, wu, wxf, goal, **kwargs):
    """Convenience constructor for a plain quadratic cost."""
    wx = np.asarray(wx, dtype=float)
    wu = np.asarray(wu, dtype=float)
    wxf = np.asarray(wxf, dtype=float)
    if wx.ndim == 1:
        wx = np.diag(wx)
    if wu.ndim == 1:
        wu = np.diag(wu)
    if wxf.ndim == 1:
        wxf = np.diag(wxf)
    return CostSpec(Wx=wx, Wu=wu, Wxf=wxf, goal=np.asarray(goal, dtype=float),
                    **kwargs)


def joint_cost(per_agent, collision_scale=100.0, r_thresh=0.5):
    """Stack per-agent quadratic costs into one joint cost with collisions.

    Weight matrices become block-diagonal; the collision penalty couples the
    planar positions of every unordered agent pair.
    """
    n_agents = len(per_agent)
    agent_nx = per_agent[0].Wx.shape[0]
    blocks = lambda mats: _block_diag(mats)
    return CostSpec(
        Wx=blocks([c.Wx for c in per_agent]),
        Wu=blocks([c.Wu for c in per_agent]),
        Wxf=blocks([c.Wxf for c in per_agent]),
        goal=np.concatenate([c.goal for c in per_agent]),
        obstacles=per_agent[0].obstacles,
        collision_scale=collision_scale,
        r_thresh=r_thresh,
        n_agents=n_agents,
        agent_nx=agent_nx,
    )


def _block_diag(mats):
    n = sum(m.shape[0] for m in mats)
    out = np.zeros((n, n))
    i = 0
    for m in mats:
        k = m.shape[0]
        out[i:i + k, i:i + k] = m
        i += k
    return out
