"""Discrete-time control-affine robot models.

Every model is an exact Euler map x_{t+1} = f(x_t) + B(x_t) @ (u_t + eps*w_t)
with actuator noise entering through the input matrix. Three concrete
vehicles are provided (kinematic car, car with two trailers, quadrotor)
plus a generic linear map for oracle tests and a block-diagonal stacking of
identical agents for joint planning.

ModelSpec is immutable and safe to share across concurrent rollouts; all
operations here are pure functions of their inputs.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels


class NumericError(RuntimeError):
    """A dynamics or linearization evaluation produced non-finite values."""


@dataclass(frozen=True)
class ModelSpec:
    """Immutable description of one discrete-time model.

    ``params`` is the flat constant vector consumed by the kernels (wheelbase,
    mass, inertia, ...). ``du_max`` entries of +inf disable the slew-rate
    constraint for that input.
    """

    name: str
    model_id: int
    n_x: int
    n_u: int
    dt: float
    params: np.ndarray
    u_min: np.ndarray
    u_max: np.ndarray
    du_max: np.ndarray

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not np.all(self.u_min < self.u_max):
            raise ValueError("u_min must be componentwise below u_max")
        if not np.all(self.du_max >= 0):
            raise ValueError("du_max must be nonnegative")
        for name in ("params", "u_min", "u_max", "du_max"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    def drift(self, x):
        """Uncontrolled part f(x) of the step map."""
        x = self._check_state(x)
        return kernels.drift(self.model_id, self.params, self.dt, x, self.n_u)

    def input_matrix(self, x, t=0):
        """Input matrix B at state x (models here are time-invariant)."""
        x = self._check_state(x)
        return kernels.input_matrix(self.model_id, self.params, self.dt, x, self.n_u)

    def _check_state(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_x,):
            raise ValueError(
                f"state has shape {x.shape}, expected ({self.n_x},)")
        return x

    def _check_control(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n_u,):
            raise ValueError(
                f"control has shape {u.shape}, expected ({self.n_u},)")
        return u


@dataclass(frozen=True)
class LinearizedSystem:
    """Time-varying Jacobian sequences about a nominal trajectory."""

    A: np.ndarray  # (T, n_x, n_x)
    B: np.ndarray  # (T, n_x, n_u)

    @property
    def horizon(self):
        return self.A.shape[0]


def step(model, x, u, w=None, eps=0.0):
    """One noisy Euler step: f(x) + B(x) @ (u + eps*w)."""
    x = model._check_state(x)
    u = model._check_control(u)
    if w is None:
        u_eff = u
    else:
        w = model._check_control(w)
        u_eff = u + eps * w
    out = kernels.step(model.model_id, model.params, model.dt, x, u_eff)
    if not np.all(np.isfinite(out)):
        raise NumericError(f"non-finite state after step of model {model.name!r}")
    return out


def linearize(model, xbar, ubar):
    """Jacobian sequences (A_t, B_t) about a nominal trajectory.

    A_t comes from central finite differences of the full step map; B_t is
    the model's exact input matrix at xbar_t.
    """
    xbar = np.ascontiguousarray(xbar, dtype=float)
    ubar = np.ascontiguousarray(ubar, dtype=float)
    if xbar.shape[0] != ubar.shape[0] + 1:
        raise ValueError("need len(xbar) == len(ubar) + 1")
    a_seq, b_seq = kernels.linearize_seq(
        model.model_id, model.params, model.dt, xbar, ubar)
    if not np.all(np.isfinite(a_seq)):
        bad = np.argwhere(~np.isfinite(a_seq))[0]
        raise NumericError(f"non-finite Jacobian entry at (t, row, col) = {tuple(bad)}")
    return LinearizedSystem(A=a_seq, B=b_seq)


# -- concrete models ---------------------------------------------------------

WHEELBASE = 1.0  # meters; shared by the car and trailer hitches

# micro-quad constants: hover thrust m*|g| = 0.981 sits inside the [0, 1.5]
# thrust bound, so the vehicle can actually hold altitude
QUADROTOR_MASS = 0.1          # kg
QUADROTOR_GRAVITY = -9.81     # m/s^2, world z
QUADROTOR_INERTIA = 1e-3      # kg m^2, isotropic diagonal


def car4d(dt=0.1):
    """Kinematic car: state (x, y, heading, steering angle), inputs (v, omega)."""
    return ModelSpec(
        name="car4d",
        model_id=kernels.MODEL_CAR4D,
        n_x=4,
        n_u=2,
        dt=dt,
        params=np.array([WHEELBASE]),
        u_min=np.array([-4.0, -math.pi / 12.0]),
        u_max=np.array([4.0, math.pi / 12.0]),
        du_max=np.array([math.inf, math.inf]),
    )


def car_trailers6d(dt=0.1):
    """Car towing two trailers; state appends the trailer headings."""
    return ModelSpec(
        name="car_trailers6d",
        model_id=kernels.MODEL_TRAILERS6D,
        n_x=6,
        n_u=2,
        dt=dt,
        params=np.array([WHEELBASE]),
        u_min=np.array([-0.8, -math.pi / 6.0]),
        u_max=np.array([0.8, math.pi / 6.0]),
        du_max=np.array([math.inf, math.inf]),
    )


def quadrotor12d(dt=0.1):
    """Quadrotor with state (position, roll/pitch/yaw, velocity, body rates).

    Inputs are body-frame thrust and three torques; Euler discretization of
    the rigid-body ODEs at dt.
    """
    return ModelSpec(
        name="quadrotor12d",
        model_id=kernels.MODEL_QUAD12D,
        n_x=12,
        n_u=4,
        dt=dt,
        params=np.array([
            QUADROTOR_MASS,
            QUADROTOR_GRAVITY,
            QUADROTOR_INERTIA,
            QUADROTOR_INERTIA,
            QUADROTOR_INERTIA,
        ]),
        u_min=np.array([0.0, -0.05, -0.05, -0.05]),
        u_max=np.array([1.5, 0.05, 0.05, 0.05]),
        du_max=np.array([math.inf, math.inf, math.inf, math.inf]),
    )


def linear_model(a, b, dt=1.0, u_min=None, u_max=None, du_max=None):
    """Generic discrete linear map x_next = A x + B u (oracle/test model)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = b.shape
    if a.shape != (n, n):
        raise ValueError("A must be square and conform with B")
    params = np.concatenate(([float(m)], a.ravel(), b.ravel()))
    inf = np.full(m, math.inf)
    return ModelSpec(
        name="linear",
        model_id=kernels.MODEL_LINEAR,
        n_x=n,
        n_u=m,
        dt=dt,
        params=params,
        u_min=-inf if u_min is None else np.asarray(u_min, dtype=float),
        u_max=inf if u_max is None else np.asarray(u_max, dtype=float),
        du_max=inf if du_max is None else np.asarray(du_max, dtype=float),
    )


def stack_agents(base, n_agents):
    """Block-diagonal stacking of n identical transition-independent agents."""
    if n_agents < 1:
        raise ValueError("need at least one agent")
    params = np.concatenate((
        [float(n_agents), float(base.model_id), float(base.n_x), float(base.n_u)],
        base.params,
    ))
    return ModelSpec(
        name=f"{base.name}_x{n_agents}",
        model_id=kernels.MODEL_STACKED,
        n_x=base.n_x * n_agents,
        n_u=base.n_u * n_agents,
        dt=base.dt,
        params=params,
        u_min=np.tile(base.u_min, n_agents),
        u_max=np.tile(base.u_max, n_agents),
        du_max=np.tile(base.du_max, n_agents),
    )


_FACTORIES = {
    "car4d": car4d,
    "car_trailers6d": car_trailers6d,
    "quadrotor12d": quadrotor12d,
}


def by_name(name, dt=0.1):
    """Model lookup used by the experiment config loader."""
    try:
        return _FACTORIES[name](dt=dt)
    except KeyError:
        raise ValueError(
            f"unknown model {name!r}; choose from {sorted(_FACTORIES)}") from None
