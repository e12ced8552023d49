"""End-to-end acceptance gate for the solver hierarchy.

One test per numbered criterion.  Each prints a single
``criterion NN [PASS|FAIL]`` line (shown under ``pytest -v -s`` or on
failure) and asserts the same condition, so the verbose test listing reads
as the acceptance report.  The expensive shared artefacts -- the default
convergence study and its discretization guard -- run once per module.
"""
import math
import time

import numpy as np
import pytest

from conftest import decaying_coefficients
from condred.config import StudyConfig, make_basis
from condred.convergence import (
    discretization_guard,
    equivalence_gap,
    run_study,
    setup_from_config,
)
from condred.dynamics import (
    SolverParams,
    from_envelope,
    solve_envelope,
    solve_gpe,
    solve_rays,
)
from condred.eikonal import (
    PhaseProvider,
    gaussian_bump_phase,
    linear_phase,
    phase_on_grid,
    quadratic_phase,
    zero_phase,
)
from condred.fields import interpolate_periodic
from condred.hermite import propagate
from condred.nonlinearity import (
    averaged_cubic_quadrature_coeffs,
    averaged_cubic_resonance_coeffs,
    filtered_cubic_coeffs,
)

SLOPE_SECOND_ORDER = (1.7, 2.3)
SLOPE_FIRST_ORDER = (0.8, 1.2)
STUDY_BUDGET_SECONDS = 600.0
GUARD_LIMIT = 0.10


def _verdict(num, name, ok, detail):
    line = f"criterion {num:02d} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def default_study():
    """Full default study, wall-clock timed; shared by criteria 1-4."""
    t0 = time.perf_counter()
    report = run_study(StudyConfig())
    return report, time.perf_counter() - t0


@pytest.fixture(scope="module")
def guard():
    return discretization_guard(StudyConfig())


@pytest.fixture(scope="module")
def default_setup():
    return setup_from_config(StudyConfig())


def test_criterion_01_averaging_rate(default_study, guard):
    report, seconds = default_study
    fit = report.slopes["eq17"]
    lo, hi = SLOPE_SECOND_ORDER
    ok = (lo <= fit.value <= hi
          and seconds <= STUDY_BUDGET_SECONDS
          and guard.relative_change < GUARD_LIMIT)
    _verdict(1, "averaging error second order in eps at fixed alpha", ok,
             f"slope {fit.value:.4f} +/- {fit.stderr:.4f} in [{lo}, {hi}], "
             f"study {seconds:.1f} s (budget {STUDY_BUDGET_SECONDS:.0f}), "
             f"guard change {guard.relative_change:.2e} < {GUARD_LIMIT}")


def test_criterion_02_averaging_rate_zero_dispersion(default_study):
    report, _ = default_study
    fit = report.slopes["eq18"]
    lo, hi = SLOPE_SECOND_ORDER
    ok = lo <= fit.value <= hi
    _verdict(2, "averaging error second order in eps at zero dispersion", ok,
             f"slope {fit.value:.4f} +/- {fit.stderr:.4f} in [{lo}, {hi}]")


def test_criterion_03_dispersion_rates(default_study):
    report, _ = default_study
    lo, hi = SLOPE_FIRST_ORDER
    f_osc = report.slopes["eq19"]
    f_avg = report.slopes["eq20"]
    ok = lo <= f_osc.value <= hi and lo <= f_avg.value <= hi
    _verdict(3, "small-dispersion error first order in alpha", ok,
             f"slopes {f_osc.value:.4f} (oscillatory pair) and "
             f"{f_avg.value:.4f} (averaged pair) in [{lo}, {hi}]")


def test_criterion_04_combined_rate_on_diagonal(default_study):
    report, _ = default_study
    fit = report.slopes["eq21"]
    lo, hi = SLOPE_SECOND_ORDER
    ok = lo <= fit.value <= hi
    _verdict(4, "full-vs-limit error second order along alpha = eps^2", ok,
             f"slope {fit.value:.4f} +/- {fit.stderr:.4f} in [{lo}, {hi}]")


def test_criterion_05_rotating_frame_equivalence(default_setup):
    coarse, dt_coarse = equivalence_gap(0.5, 0.2, default_setup)
    fine, dt_fine = equivalence_gap(0.5, 0.2, default_setup, refine=True)
    shrink = coarse / fine
    ok = coarse <= 1e-3 and shrink >= 3.0
    _verdict(5, "full solve equals envelope solve through the frame maps", ok,
             f"gap {coarse:.3e} <= 1e-3 at dt {dt_coarse:.5f}, refined "
             f"{fine:.3e} at dt {dt_fine:.5f}, shrink {shrink:.2f}x >= 3")


def _eikonal_residual(grid, s0, t=0.45, h=1e-3):
    """Max residual of d_t S + |grad S|^2/2 + |x|^2/2 via 5-point stencil."""
    fields = {dt: phase_on_grid(t + dt, grid, s0, tol=1e-13)
              for dt in (-2 * h, -h, h, 2 * h)}
    ph = phase_on_grid(t, grid, s0, tol=1e-13)
    dsdt = (fields[-2 * h].s_values - 8 * fields[-h].s_values
            + 8 * fields[h].s_values - fields[2 * h].s_values) / (12 * h)
    residual = dsdt + 0.5 * ph.grad_s[..., 0] ** 2 + 0.5 * grid.x_norm_sq()
    return float(np.max(np.abs(residual)))


def test_criterion_06_phase_solver_exactness(default_setup):
    grid = default_setup.grid
    worst_closed = 0.0
    for t in (0.2, 0.5, 1.0):
        ph = phase_on_grid(t, grid, zero_phase(), tol=1e-13)
        exact = -0.5 * grid.x_norm_sq() * math.tan(t)
        worst_closed = max(worst_closed,
                           float(np.max(np.abs(ph.s_values - exact))))
    worst_resid = 0.0
    for s0 in (zero_phase(), linear_phase(0.5), quadratic_phase(-0.3),
               gaussian_bump_phase(0.3, 1.5)):
        worst_resid = max(worst_resid, _eikonal_residual(grid, s0))
    ok = worst_closed <= 1e-10 and worst_resid <= 1e-6
    _verdict(6, "ray-traced phase exact for the harmonic flow", ok,
             f"closed-form gap {worst_closed:.2e} <= 1e-10, catalog "
             f"residual {worst_resid:.2e} <= 1e-6")


def test_criterion_07_averaged_field_cross_checks():
    basis = make_basis(StudyConfig())
    rng = np.random.default_rng(7)
    worst_pair = 0.0
    for _ in range(100):
        c = decaying_coefficients(rng, basis.num_modes)
        q = averaged_cubic_quadrature_coeffs(c, basis)
        r = averaged_cubic_resonance_coeffs(c, basis)
        worst_pair = max(worst_pair, float(np.max(np.abs(q - r))))
    u = decaying_coefficients(rng, basis.num_modes, lead_shape=(6,))
    s = rng.uniform(-3, 3, size=(6, 1))
    unit = np.exp(1j * s / 0.27)
    gauge = float(np.max(np.abs(
        filtered_cubic_coeffs(0.63, u * unit, basis)
        - unit * filtered_cubic_coeffs(0.63, u, basis))))
    c = decaying_coefficients(rng, basis.num_modes)
    period = float(np.max(np.abs(
        filtered_cubic_coeffs(1.234, c, basis)
        - filtered_cubic_coeffs(1.234 + 2 * np.pi, c, basis))))
    ok = worst_pair <= 1e-12 and gauge <= 1e-13 and period <= 1e-13
    _verdict(7, "quadrature and resonance averages agree; symmetries hold",
             ok, f"pairwise gap {worst_pair:.2e} <= 1e-12 on 100 fields, "
                 f"gauge {gauge:.2e} <= 1e-13, period {period:.2e} <= 1e-13")


def test_criterion_08_polarization_preserved(default_setup):
    grid, basis = default_setup.grid, default_setup.basis
    a0 = default_setup.initial
    worst_off = 0.0
    for equation, alpha in (("env_averaged", 0.2), ("env_limit", 0.0)):
        p = SolverParams(equation=equation, epsilon=0.35, alpha=alpha,
                         t_final=0.5)
        traj = solve_envelope(a0, p, PhaseProvider(grid, zero_phase()), basis)
        for f in traj.fields:
            off = float(np.sum(np.abs(f.data[:, 1:]) ** 2) * grid.dx)
            worst_off = max(worst_off, off)
    phi = 1.3 - 0.6j
    c = np.zeros(basis.num_modes, dtype=complex)
    c[0] = phi
    out = averaged_cubic_resonance_coeffs(c, basis)
    cube = (2.0 * np.pi) ** -0.5 * abs(phi) ** 2 * phi
    coeff_gap = abs(out[0] - cube)
    ok = worst_off <= 1e-10 and coeff_gap <= 1e-12
    _verdict(8, "ground-mode data stays on the ground mode", ok,
             f"off-mode mass {worst_off:.2e} <= 1e-10 over both averaged "
             f"runs, scalar coefficient gap {coeff_gap:.2e} <= 1e-12")


def test_criterion_09_conservation(default_setup):
    grid, basis = default_setup.grid, default_setup.basis
    psi0 = from_envelope(default_setup.initial, 0.0,
                         PhaseProvider(grid, zero_phase())(0.0),
                         0.5, 0.2, basis)
    p = SolverParams(equation="gpe_full", epsilon=0.5, alpha=0.2, t_final=0.5)
    traj = solve_gpe(psi0, p, basis)
    m0 = traj.mass_history[0]
    drift = max(abs(m - m0) for m in traj.mass_history) / m0
    rng = np.random.default_rng(9)
    c = decaying_coefficients(rng, basis.num_modes)
    n0 = np.linalg.norm(c)
    unitarity = abs(np.linalg.norm(propagate(2.31, c, basis)) - n0) / n0
    ok = drift <= 1e-10 and unitarity <= 1e-13
    _verdict(9, "mass and transverse flow norm conserved", ok,
             f"relative mass drift {drift:.2e} <= 1e-10, propagation "
             f"norm defect {unitarity:.2e} <= 1e-13")


def test_criterion_10_ray_oracle(default_setup):
    grid, basis = default_setup.grid, default_setup.basis
    a0 = default_setup.initial
    t_final = 0.4
    p = SolverParams(equation="env_limit", alpha=0.0, t_final=t_final)
    grid_traj = solve_envelope(a0, p, PhaseProvider(grid, zero_phase()),
                               basis)
    sol = solve_rays(a0, p, zero_phase(), basis)
    inside = np.abs(sol.y[:, 0]) < 8.0
    grid_vals = interpolate_periodic(grid_traj.final,
                                     sol.final_positions[:, 0])
    num = np.sum(np.abs(grid_vals - sol.final_amplitude)[inside] ** 2)
    den = np.sum(np.abs(sol.final_amplitude)[inside] ** 2)
    rel = math.sqrt(float(num / den))

    p_lin = SolverParams(equation="env_limit", alpha=0.0, t_final=t_final,
                         coupling=0.0, dt=0.002)
    lin = solve_rays(a0, p_lin, zero_phase(), basis)
    expected = (np.abs(a0.data.reshape(-1, grid.total_modes))
                / np.sqrt(lin.jacobians[-1])[:, None])
    law = float(np.max(np.abs(np.abs(lin.final_amplitude) - expected)))
    ok = rel <= 1e-4 and law <= 1e-10
    _verdict(10, "characteristic solver reproduces the grid solver", ok,
             f"relative L2 gap {rel:.2e} <= 1e-4, amplitude transport law "
             f"defect {law:.2e} <= 1e-10")
