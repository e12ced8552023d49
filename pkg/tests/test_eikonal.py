import math

import numpy as np
import pytest
from scipy.optimize import brentq

from condred.eikonal import (
    PhaseProvider,
    action_along_ray,
    caustic_time,
    gaussian_bump_phase,
    hamilton_flow,
    invert_ray_map,
    jacobian,
    linear_phase,
    phase_on_grid,
    quadratic_phase,
    zero_phase,
)
from condred.errors import CausticError, ConfigError, NewtonError
from condred.fields import GridSpec


def catalog_phases():
    return [zero_phase(), linear_phase(0.5), quadratic_phase(0.4),
            quadratic_phase(-0.3), gaussian_bump_phase(0.5, 1.5)]


def hamilton_ode_oracle(t, y0, xi0, steps=4000):
    """RK4 on Hamilton's equations xdot = xi, xidot = -x."""
    h = t / steps
    x, xi = np.asarray(y0, float).copy(), np.asarray(xi0, float).copy()

    def rhs(state):
        return np.array([state[1], -state[0]])

    state = np.array([x, xi])
    for _ in range(steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * h * k1)
        k3 = rhs(state + 0.5 * h * k2)
        k4 = rhs(state + h * k3)
        state = state + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return state[0], state[1]


class TestHamiltonFlow:
    def test_zero_phase_quarter_period(self):
        x, xi = hamilton_flow(math.pi / 2, np.array([[1.0]]), zero_phase())
        assert abs(x[0, 0]) < 1e-12
        assert xi[0, 0] == pytest.approx(-1.0, abs=1e-12)

    def test_linear_phase_from_origin(self):
        s0 = linear_phase(2.0)
        for t in (0.3, 1.1):
            x, xi = hamilton_flow(t, np.array([[0.0]]), s0)
            assert x[0, 0] == pytest.approx(2 * math.sin(t), abs=1e-14)
            assert xi[0, 0] == pytest.approx(2 * math.cos(t), abs=1e-14)

    def test_quadratic_phase_vs_ode_oracle(self):
        s0 = quadratic_phase(0.7)
        y = np.array([[1.3]])
        t = 1.1
        x, xi = hamilton_flow(t, y, s0)
        ox, oxi = hamilton_ode_oracle(t, y[0], 0.7 * y[0])
        assert abs(x[0, 0] - ox[0]) < 1e-10
        assert abs(xi[0, 0] - oxi[0]) < 1e-10

    def test_2d_flow(self):
        s0 = quadratic_phase(0.5)
        y = np.array([[0.8, -1.2]])
        x, xi = hamilton_flow(0.6, y, s0)
        expected_x = y * math.cos(0.6) + 0.5 * y * math.sin(0.6)
        assert np.max(np.abs(x - expected_x)) < 1e-14


class TestJacobian:
    def test_zero_phase_is_cosine_power(self):
        y1 = np.array([[0.4]])
        y2 = np.array([[0.4, -2.0]])
        for t in (0.0, 0.5, 1.2):
            assert jacobian(t, y1, zero_phase()) == pytest.approx(
                math.cos(t), abs=1e-14)
            assert jacobian(t, y2, zero_phase()) == pytest.approx(
                math.cos(t) ** 2, abs=1e-14)

    def test_quadratic_closed_form(self):
        for c in (1.0, -0.3):
            for t in (0.2, 0.9):
                j = jacobian(t, np.array([[2.0]]), quadratic_phase(c))
                assert j == pytest.approx(math.cos(t) + c * math.sin(t), abs=1e-14)

    def test_identity_at_time_zero(self):
        rng = np.random.default_rng(0)
        y = rng.standard_normal((7, 1)) * 3
        for s0 in catalog_phases():
            assert np.max(np.abs(jacobian(0.0, y, s0) - 1.0)) < 1e-14


class TestAction:
    def test_time_zero_returns_initial_phase(self):
        y = np.array([[1.5], [-0.3]])
        for s0 in catalog_phases():
            assert np.array_equal(action_along_ray(0.0, y, s0), s0.value(y))

    def test_zero_phase_closed_form(self):
        # z(t, y) = -(y^2/2) sin t cos t, i.e. S = -x^2/2 tan t at x = y cos t
        y = np.array([[0.5], [1.7], [3.0]])
        for t in (0.3, 0.8):
            z = action_along_ray(t, y, zero_phase())
            expected = -0.5 * y[:, 0] ** 2 * math.sin(t) * math.cos(t)
            assert np.max(np.abs(z - expected)) < 1e-10

    def test_quadratic_phase_riccati_form(self):
        # sigma' + sigma^2 + 1 = 0, sigma(0) = c  =>  sigma = tan(arctan c - t)
        c = 0.6
        s0 = quadratic_phase(c)
        y = np.array([[0.9], [2.2]])
        for t in (0.25, 0.7):
            z = action_along_ray(t, y, s0)
            x, _ = hamilton_flow(t, y, s0)
            sigma = math.tan(math.atan(c) - t)
            assert np.max(np.abs(z - 0.5 * sigma * x[:, 0] ** 2)) < 1e-8


class TestInvertRayMap:
    def test_zero_phase_explicit_inverse(self):
        t = 0.8
        x = np.array([[2.0], [-5.5]])
        y = invert_ray_map(t, x, zero_phase())
        assert np.max(np.abs(y - x / math.cos(t))) < 1e-12

    def test_linear_phase_affine_inverse(self):
        t, b = 0.5, 1.5
        x = np.array([[0.7], [-3.0]])
        y = invert_ray_map(t, x, linear_phase(b))
        assert np.max(np.abs(y - (x - b * math.sin(t)) / math.cos(t))) < 1e-12

    def test_gaussian_bump_round_trip(self):
        rng = np.random.default_rng(1)
        s0 = gaussian_bump_phase(0.5, 1.5)
        x = rng.uniform(-8, 8, size=(25, 1))
        y = invert_ray_map(0.6, x, s0, tol=1e-12)
        xf, _ = hamilton_flow(0.6, y, s0)
        assert np.max(np.abs(xf - x)) < 1e-12

    def test_caustic_detected(self):
        # cos(1.48) < 0.1: the zero-phase Jacobian is under the floor
        with pytest.raises(CausticError):
            invert_ray_map(1.48, np.array([[1.0]]), zero_phase())

    def test_newton_iteration_budget(self):
        with pytest.raises(NewtonError):
            invert_ray_map(0.7, np.array([[4.0]]), quadratic_phase(0.5),
                           max_iter=1)


class TestPhaseOnGrid:
    def test_zero_phase_closed_form_all_times(self, grid256):
        # acceptance: S = -|x|^2/2 tan t to 1e-10 at t in {0.2, 0.5, 1.0}
        x = grid256.x_axis
        for t in (0.2, 0.5, 1.0):
            ph = phase_on_grid(t, grid256, zero_phase())
            assert np.max(np.abs(ph.s_values + 0.5 * x ** 2 * math.tan(t))) < 1e-10
            assert np.max(np.abs(ph.grad_s[:, 0] + x * math.tan(t))) < 1e-10
            assert np.max(np.abs(ph.lap_s + math.tan(t))) < 1e-12
            assert ph.min_jacobian == pytest.approx(math.cos(t), abs=1e-12)

    def test_time_zero_exact(self, grid256):
        for s0 in catalog_phases():
            ph = phase_on_grid(0.0, grid256, s0)
            pts = np.stack([grid256.x_axis], axis=-1)
            assert np.array_equal(ph.s_values, s0.value(pts))

    def test_quadratic_phase_riccati_on_grid(self, grid256):
        c, t = 0.6, 0.4
        ph = phase_on_grid(t, grid256, quadratic_phase(c))
        sigma = math.tan(math.atan(c) - t)
        assert np.max(np.abs(ph.s_values - 0.5 * sigma * grid256.x_axis ** 2)) < 1e-8

    @pytest.mark.parametrize("s0", catalog_phases(),
                             ids=lambda p: p.kind + str(p.params.get("c", "")))
    def test_eikonal_residual(self, grid256, s0):
        # dS/dt + |grad S|^2/2 + |x|^2/2 = 0; dS/dt by 5-point centered
        # difference (h^4 accurate) so the quadrature noise dominates
        t, h = 0.45, 1e-3
        fields = {dt: phase_on_grid(t + dt, grid256, s0, tol=1e-13)
                  for dt in (-2 * h, -h, h, 2 * h)}
        ph = phase_on_grid(t, grid256, s0, tol=1e-13)
        dsdt = (fields[-2 * h].s_values - 8 * fields[-h].s_values
                + 8 * fields[h].s_values - fields[2 * h].s_values) / (12 * h)
        residual = dsdt + 0.5 * ph.grad_s[:, 0] ** 2 + 0.5 * grid256.x_axis ** 2
        assert np.max(np.abs(residual)) < 1e-6

    def test_zero_phase_residual_tight(self, grid256):
        t, h = 0.5, 1e-3
        s0 = zero_phase()
        fields = {dt: phase_on_grid(t + dt, grid256, s0, tol=1e-13)
                  for dt in (-2 * h, -h, h, 2 * h)}
        ph = phase_on_grid(t, grid256, s0, tol=1e-13)
        dsdt = (fields[-2 * h].s_values - 8 * fields[-h].s_values
                + 8 * fields[h].s_values - fields[2 * h].s_values) / (12 * h)
        residual = dsdt + 0.5 * ph.grad_s[:, 0] ** 2 + 0.5 * grid256.x_axis ** 2
        assert np.max(np.abs(residual)) < 1e-8

    def test_gradient_matches_grid_difference(self, grid256):
        ph = phase_on_grid(0.3, grid256, gaussian_bump_phase(0.5, 1.5))
        s = ph.s_values
        centered = (s[2:] - s[:-2]) / (2 * grid256.dx)
        # O(dx^2) agreement in the interior
        assert np.max(np.abs(ph.grad_s[1:-1, 0] - centered)) < 1e-3

    def test_subquadratic_gradient_bound(self, grid256):
        for s0 in catalog_phases():
            ph = phase_on_grid(0.5, grid256, s0)
            ratio = np.abs(ph.grad_s[:, 0]) / (1.0 + np.abs(grid256.x_axis))
            assert np.max(ratio) < 10.0

    def test_warm_start_matches_cold(self, grid256):
        s0 = gaussian_bump_phase(0.5, 1.5)
        cold = phase_on_grid(0.5, grid256, s0)
        warm_guess = phase_on_grid(0.45, grid256, s0).y_map
        warm = phase_on_grid(0.5, grid256, s0, guess=warm_guess)
        assert np.max(np.abs(cold.s_values - warm.s_values)) < 1e-11

    def test_caustic_raises(self, grid256):
        with pytest.raises(CausticError):
            phase_on_grid(1.48, grid256, zero_phase())

    def test_2d_zero_phase(self):
        grid = GridSpec(dim_n=2, dim_d=1, nx=32, half_width=8.0)
        t = 0.4
        ph = phase_on_grid(t, grid, zero_phase())
        r2 = grid.x_norm_sq()
        assert np.max(np.abs(ph.s_values + 0.5 * r2 * math.tan(t))) < 1e-10
        assert np.max(np.abs(ph.lap_s + 2 * math.tan(t))) < 1e-12


class TestCausticTime:
    def test_zero_phase_arccos(self, grid256):
        t = caustic_time(zero_phase(), grid256, 0.1)
        assert t == pytest.approx(math.acos(0.1), abs=2e-6)

    def test_quadratic_positive_c_root_oracle(self, grid256):
        # J = cos t + sin t; first |J| = 0.1 crossing from the root of
        # cos t + sin t - 0.1 on [pi/2, pi]
        oracle = brentq(lambda t: math.cos(t) + math.sin(t) - 0.1, 1.5, 3.0)
        t = caustic_time(quadratic_phase(1.0), grid256, 0.1)
        assert t == pytest.approx(oracle, abs=2e-6)

    def test_quadratic_negative_c_before_quarter_turn(self, grid256):
        oracle = brentq(lambda t: math.cos(t) - math.sin(t) - 0.1, 0.1, 1.5)
        t = caustic_time(quadratic_phase(-1.0), grid256, 0.1)
        assert t == pytest.approx(oracle, abs=2e-6)
        assert t < math.pi / 4 + 0.05

    def test_floor_validation(self, grid256):
        with pytest.raises(ConfigError):
            caustic_time(zero_phase(), grid256, 1.5)


class TestPhaseProvider:
    def test_caches_and_matches_direct(self, grid256):
        prov = PhaseProvider(grid256, quadratic_phase(0.3))
        a = prov(0.25)
        b = prov(0.25)
        assert a is b
        direct = phase_on_grid(0.25, grid256, quadratic_phase(0.3))
        assert np.max(np.abs(a.s_values - direct.s_values)) < 1e-11

    def test_caustic_time_passthrough(self, grid256):
        prov = PhaseProvider(grid256, zero_phase())
        assert prov.caustic_time() == pytest.approx(math.acos(0.1), abs=2e-6)
