import math

import numpy as np
import pytest

from stochplan import models
from stochplan.models import (NumericError, car4d, car_trailers6d, linear_model,
                              linearize, quadrotor12d, stack_agents, step)


def analytic_car_jacobian(x, u, dt, wheelbase=1.0):
    """Hand-derived Jacobian of the car step map, used as the oracle for the
    finite-difference path."""
    _, _, th, phi = x
    v, _ = u
    a = np.eye(4)
    a[0, 2] = -v * math.sin(th) * dt
    a[1, 2] = v * math.cos(th) * dt
    a[2, 3] = v / (wheelbase * math.cos(phi) ** 2) * dt
    return a


class TestCar:
    def test_dimensions(self):
        car = car4d()
        assert (car.n_x, car.n_u) == (4, 2)

    def test_default_bounds(self):
        car = car4d()
        assert np.allclose(car.u_min, [-4.0, -math.pi / 12])
        assert np.allclose(car.u_max, [4.0, math.pi / 12])

    def test_zero_velocity_fixed_point(self):
        car = car4d()
        x = np.array([3.0, 1.0, 0.0, 0.0])
        assert np.array_equal(step(car, x, np.zeros(2)), x)

    def test_straight_line(self):
        car = car4d()
        nxt = step(car, np.zeros(4), np.array([1.0, 0.0]))
        assert np.allclose(nxt, [0.1, 0.0, 0.0, 0.0])

    def test_pure_y_motion(self):
        car = car4d()
        x = np.array([0.0, 0.0, math.pi / 2, 0.0])
        nxt = step(car, x, np.array([2.0, 0.0]))
        assert np.allclose(nxt, [0.0, 0.2, math.pi / 2, 0.0], atol=1e-15)

    def test_zero_steering_zero_heading_rate(self):
        car = car4d()
        x = np.array([1.0, 2.0, 0.7, 0.0])
        nxt = step(car, x, np.array([3.0, 0.0]))
        assert nxt[2] == x[2]

    def test_step_deterministic(self):
        car = car4d()
        x = np.array([0.3, -1.2, 0.4, 0.05])
        u = np.array([1.5, 0.1])
        w = np.array([0.2, -0.3])
        a = step(car, x, u, w=w, eps=0.7)
        b = step(car, x, u, w=w, eps=0.7)
        assert np.array_equal(a, b)

    def test_noise_enters_through_input_matrix(self):
        car = car4d()
        x = np.array([0.3, -1.2, 0.4, 0.05])
        u = np.array([1.5, 0.1])
        w = np.array([0.2, -0.3])
        expected = step(car, x, u + 0.7 * w)
        assert np.allclose(step(car, x, u, w=w, eps=0.7), expected)

    def test_dimension_mismatch(self):
        car = car4d()
        with pytest.raises(ValueError):
            step(car, np.zeros(3), np.zeros(2))
        with pytest.raises(ValueError):
            step(car, np.zeros(4), np.zeros(3))

    def test_nonfinite_rejected(self):
        car = car4d()
        with pytest.raises(NumericError):
            step(car, np.array([0.0, 0.0, 0.0, np.inf]), np.ones(2))


class TestTrailers:
    def test_dimensions(self):
        rig = car_trailers6d()
        assert (rig.n_x, rig.n_u) == (6, 2)

    def test_aligned_headings_do_not_turn(self):
        rig = car_trailers6d()
        x = np.array([0.0, 0.0, 0.9, 0.0, 0.9, 0.9])
        nxt = step(rig, x, np.array([0.5, 0.0]))
        assert nxt[4] == pytest.approx(x[4], abs=1e-15)
        assert nxt[5] == pytest.approx(x[5], abs=1e-15)

    def test_first_trailer_rate(self):
        # one step from (0, 0, pi/3, 0, 0, 0) at v = 0.8:
        # theta1 advances by (v/L) sin(pi/3) dt = 0.04 * sqrt(3)
        rig = car_trailers6d()
        x = np.array([0.0, 0.0, math.pi / 3, 0.0, 0.0, 0.0])
        nxt = step(rig, x, np.array([0.8, 0.0]))
        assert nxt[4] == pytest.approx(0.04 * math.sqrt(3.0), rel=1e-12)

    def test_second_trailer_rate(self):
        rig = car_trailers6d()
        x = np.array([0.0, 0.0, 0.6, 0.0, 0.2, -0.1])
        v = 0.5
        nxt = step(rig, x, np.array([v, 0.0]))
        expect = -0.1 + v * math.cos(0.6 - 0.2) * math.sin(0.2 + 0.1) * 0.1
        assert nxt[5] == pytest.approx(expect, rel=1e-12)


class TestQuadrotor:
    def test_dimensions_and_bounds(self):
        quad = quadrotor12d()
        assert (quad.n_x, quad.n_u) == (12, 4)
        assert quad.u_min[0] == 0.0 and quad.u_max[0] == 1.5
        assert np.allclose(quad.u_min[1:], -0.05)
        assert np.allclose(quad.u_max[1:], 0.05)

    def test_hover(self):
        quad = quadrotor12d()
        x = np.zeros(12)
        hover = np.array([models.QUADROTOR_MASS * 9.81, 0.0, 0.0, 0.0])
        assert np.allclose(step(quad, x, hover), x, atol=1e-12)

    def test_free_fall(self):
        quad = quadrotor12d()
        nxt = step(quad, np.zeros(12), np.zeros(4))
        assert nxt[8] == pytest.approx(-9.81 * quad.dt)
        assert np.allclose(np.delete(nxt, 8), 0.0)

    def test_torque_spins_body_rate(self):
        quad = quadrotor12d()
        nxt = step(quad, np.zeros(12), np.array([0.0, 0.01, 0.0, 0.0]))
        assert nxt[9] == pytest.approx(0.01 / models.QUADROTOR_INERTIA * quad.dt)


class TestLinearize:
    def test_linear_model_recovered(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(3, 3))
        b = rng.normal(size=(3, 2))
        mod = linear_model(a, b)
        us = rng.normal(size=(4, 2))
        xs = np.vstack([rng.normal(size=3)[None, :]] * 5)
        lin = linearize(mod, xs, us)
        assert np.allclose(lin.A, a[None], atol=1e-6)
        assert np.allclose(lin.B, b[None], atol=1e-12)

    def test_shapes(self):
        car = car4d()
        us = np.zeros((7, 2))
        xs = np.zeros((8, 4))
        lin = linearize(car, xs, us)
        assert lin.A.shape == (7, 4, 4)
        assert lin.B.shape == (7, 4, 2)
        assert lin.horizon == 7

    def test_heading_sensitivity_at_zero(self):
        car = car4d()
        xs = np.array([[0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]])
        us = np.array([[1.0, 0.0]])
        lin = linearize(car, xs, us)
        assert lin.A[0, 0, 2] == pytest.approx(0.0, abs=1e-9)

    def test_heading_sensitivity_at_quarter_pi(self):
        car = car4d()
        xs = np.array([[0.0, 0.0, math.pi / 4, 0.0]] * 2)
        us = np.array([[2.0, 0.0]])
        lin = linearize(car, xs, us)
        # d x_next / d theta = -v sin(theta) dt
        assert lin.A[0, 0, 2] == pytest.approx(-2 * math.sin(math.pi / 4) * 0.1,
                                               rel=1e-7)

    def test_matches_analytic_car_jacobian(self):
        car = car4d()
        rng = np.random.default_rng(3)
        xs = rng.normal(size=(6, 4))
        us = rng.uniform(-1, 1, size=(5, 2))
        lin = linearize(car, xs, us)
        for t in range(5):
            expect = analytic_car_jacobian(xs[t], us[t], car.dt)
            assert np.allclose(lin.A[t], expect, rtol=1e-5, atol=1e-7)

    def test_length_mismatch_rejected(self):
        car = car4d()
        with pytest.raises(ValueError):
            linearize(car, np.zeros((4, 4)), np.zeros((4, 2)))


class TestStacking:
    def test_block_structure(self):
        car = car4d()
        joint = stack_agents(car, 3)
        assert (joint.n_x, joint.n_u) == (12, 6)
        x = np.arange(12.0) * 0.1
        u = np.arange(6.0) * 0.05
        nxt = step(joint, x, u)
        for a in range(3):
            solo = step(car, x[a * 4:(a + 1) * 4], u[a * 2:(a + 1) * 2])
            assert np.allclose(nxt[a * 4:(a + 1) * 4], solo)

    def test_input_matrix_block_diagonal(self):
        car = car4d()
        joint = stack_agents(car, 2)
        b = joint.input_matrix(np.arange(8.0) * 0.1)
        assert np.allclose(b[:4, 2:], 0.0)
        assert np.allclose(b[4:, :2], 0.0)


def test_model_lookup():
    assert models.by_name("car4d").name == "car4d"
    with pytest.raises(ValueError):
        models.by_name("unicycle")


def test_model_bound_validation():
    with pytest.raises(ValueError):
        linear_model(np.eye(1), np.eye(1), u_min=[1.0], u_max=[-1.0])
