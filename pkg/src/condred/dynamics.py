"""Time integrators for the full model and its four envelope reductions.

Five equation tags:

* ``gpe_full`` — the rescaled condensate equation itself, advanced by
  Strang splitting whose two substeps are both exact flows: the linear
  part is diagonal in (Fourier-x) x (transverse eigenmodes), and the
  potential+cubic part is an exact pointwise phase rotation because it
  conserves |Psi| pointwise.  Mass is conserved to roundoff.

* ``env_full`` / ``env_averaged`` / ``env_oscillatory`` / ``env_limit``
  — envelope equations in the rotating WKB frame,

      dA/dt + grad S . grad A + (1/2)(Lap S) A = i(alpha/2) Lap A - i N(t, A),

  advanced by classical RK4 in coefficient space with spectral x-calculus
  and the phase fields S, grad S, Lap S supplied at every stage time by a
  PhaseProvider.  N is the filtered cubic at theta = t/eps^2 for the
  oscillatory pair (env_full, env_oscillatory) and the theta-average for
  the mean pair (env_averaged, env_limit); the second member of each pair
  has alpha = 0 (no dispersion).

A Lagrangian oracle (``solve_rays``) integrates the alpha = 0 equations
independently along characteristics, where advection disappears and the
Laplacian of the phase is a closed-form expression — no grid, no caustic
sensitivity beyond the Jacobian itself.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .eikonal import hamilton_flow, jacobian
from .errors import CausticError, ConfigError, StepSizeError
from .fields import Field, check_decay, mass
from .hermite import propagate, to_coefficients, to_node_values
from .nonlinearity import (
    averaged_cubic_quadrature_coeffs,
    averaged_cubic_resonance_coeffs,
    filtered_cubic_coeffs,
)

EQUATIONS = ("gpe_full", "env_full", "env_averaged", "env_oscillatory",
             "env_limit")
OSCILLATORY_EQUATIONS = ("gpe_full", "env_full", "env_oscillatory")
AVERAGED_EQUATIONS = ("env_averaged", "env_limit")

# dt caps: resolve the t/eps^2 oscillation, keep the dispersive RK4
# eigenvalues inside the stability region, respect the advection CFL,
# and never exceed a base cap (covers equations where no other
# mechanism applies, e.g. env_limit).
OSC_RESOLUTION = 20.0
BASE_DT_CAP = 0.02
CAUSTIC_MARGIN = 0.05
DEFAULT_RECORDS = 50
MASS_BLOWUP_LIMIT = 1e-8


@dataclass
class SolverParams:
    """One solver run: which equation, which regime, which resolution."""

    equation: str
    epsilon: float = 0.35
    alpha: float = 0.2
    t_final: float = 0.5
    dt: float = None            # None: dt_cap * dt_safety
    dt_safety: float = 1.0
    record_every: int = None    # None: aim for ~DEFAULT_RECORDS records
    coupling: float = 1.0       # 0 disables the nonlinearity (linear runs)

    def __post_init__(self):
        if self.equation not in EQUATIONS:
            raise ConfigError(
                f"unknown equation {self.equation!r}; choose from {EQUATIONS}")
        if not 0.0 < self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must be in (0, 1], got {self.epsilon}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.equation == "gpe_full" and self.alpha == 0.0:
            raise ConfigError("gpe_full requires alpha > 0")
        if self.equation in ("env_oscillatory", "env_limit") and self.alpha != 0.0:
            raise ConfigError(
                f"{self.equation} is an alpha = 0 equation, got alpha = {self.alpha}")
        if self.t_final <= 0.0:
            raise ConfigError(f"t_final must be positive, got {self.t_final}")
        if not 0.0 < self.dt_safety <= 1.0:
            raise ConfigError(f"dt_safety must be in (0, 1], got {self.dt_safety}")


def scaling_beta(epsilon, alpha, n, d):
    """Interaction-strength parameter beta = eps^d alpha^{-n/2}."""
    if epsilon <= 0 or alpha <= 0:
        raise ConfigError(
            f"scaling_beta needs positive inputs, got eps={epsilon}, alpha={alpha}")
    return epsilon ** d * alpha ** (-0.5 * n)


def alpha_from_beta(epsilon, beta, n, d):
    """Inverse scaling relation: alpha = eps^{2d/n} beta^{-2/n}."""
    if epsilon <= 0 or beta <= 0:
        raise ConfigError(
            f"alpha_from_beta needs positive inputs, got eps={epsilon}, beta={beta}")
    return epsilon ** (2.0 * d / n) * beta ** (-2.0 / n)


def dt_cap(params, grid, max_grad_s=0.0):
    """Largest admissible time step for a run (the stiffest mechanism wins)."""
    cap = BASE_DT_CAP
    if params.equation in OSCILLATORY_EQUATIONS:
        cap = min(cap, params.epsilon ** 2 / OSC_RESOLUTION)
    if params.equation in ("env_full", "env_averaged") and params.alpha > 0:
        xi_max = np.pi / grid.dx
        cap = min(cap, 5.0 / (params.alpha * xi_max ** 2))
    if params.equation.startswith("env") and max_grad_s > 0:
        cap = min(cap, grid.dx / (2.0 * max_grad_s))
    return cap


def _resolve_dt(params, cap):
    """Actual (dt, steps): land exactly on t_final, never exceed the cap."""
    if params.dt is not None:
        if params.dt > cap * (1 + 1e-9):
            raise StepSizeError(
                f"dt = {params.dt:.3e} exceeds the cap {cap:.3e} for "
                f"{params.equation}")
        target = params.dt
    else:
        target = cap * params.dt_safety
    steps = max(1, math.ceil(params.t_final / target - 1e-9))
    return params.t_final / steps, steps


def _resolve_record_every(params, steps):
    if params.record_every is not None:
        if params.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        return params.record_every
    return max(1, round(steps / DEFAULT_RECORDS))


@dataclass
class Trajectory:
    """Recorded snapshots of one solver run."""

    equation: str
    times: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    mass_history: list = field(default_factory=list)
    dt: float = 0.0

    def record(self, f):
        self.times.append(f.time)
        self.fields.append(f)

    @property
    def final(self):
        return self.fields[-1]


# ---------------------------------------------------------------------------
# full model: Strang splitting


def solve_gpe(psi0, params, basis):
    """Advance the full model; both substeps exact, mass to roundoff."""
    if params.equation != "gpe_full":
        raise ConfigError(f"solve_gpe got equation {params.equation!r}")
    grid = psi0.grid
    cap = dt_cap(params, grid)
    dt, steps = _resolve_dt(params, cap)
    every = _resolve_record_every(params, steps)

    eps2 = params.epsilon ** 2
    alpha = params.alpha
    k = grid.wavenumbers
    if grid.dim_n == 1:
        xi_sq = (k ** 2)[:, None]
    else:
        xi_sq = (k[:, None] ** 2 + k[None, :] ** 2)[..., None]
    eig = basis.eigenvalues.reshape((1,) * grid.dim_n + (-1,))
    x_axes = tuple(range(grid.dim_n))

    def linear_step(c, tau):
        mult = np.exp(-1j * tau * (eig / eps2 + 0.5 * alpha * xi_sq))
        return np.fft.ifftn(np.fft.fftn(c, axes=x_axes) * mult, axes=x_axes)

    vsq = grid.x_norm_sq()[..., None]

    def potential_step(c, tau):
        vals = to_node_values(c, basis)
        rot = np.exp(-1j * tau * (vsq / (2.0 * alpha)
                                  + params.coupling * np.abs(vals) ** 2))
        return to_coefficients(vals * rot, basis)

    traj = Trajectory(equation=params.equation, dt=dt)
    c = psi0.data.astype(complex).copy()
    t = 0.0
    m0 = mass(psi0, basis)
    traj.mass_history.append(m0)
    traj.record(Field(grid, c.copy(), 0.0))
    for step in range(1, steps + 1):
        c = linear_step(c, 0.5 * dt)
        c = potential_step(c, dt)
        c = linear_step(c, 0.5 * dt)
        t = step * dt
        m = float(np.sum(np.abs(c) ** 2) * grid.dx ** grid.dim_n)
        traj.mass_history.append(m)
        if abs(m - m0) > MASS_BLOWUP_LIMIT * max(1.0, m0):
            raise StepSizeError(
                f"mass drifted by {abs(m - m0):.3e} at t = {t:.4f}; "
                "the splitting step went unstable")
        if step % every == 0 or step == steps:
            f = Field(grid, c.copy(), t)
            check_decay(f, basis, where=f" at t = {t:.4f}")
            traj.record(f)
    return traj


# ---------------------------------------------------------------------------
# envelope equations: RK4 method of lines


def _estimate_max_grad(provider, t_final, samples=8):
    worst = 0.0
    for j in range(samples + 1):
        ph = provider(t_final * j / samples)
        worst = max(worst, float(np.max(np.abs(ph.grad_s))))
    return worst


def _make_nonlinearity(params, basis):
    if params.coupling == 0.0:
        return None
    eps2 = params.epsilon ** 2
    if params.equation in ("env_full", "env_oscillatory"):
        def n_term(t, c):
            return params.coupling * filtered_cubic_coeffs(t / eps2, c, basis)
    elif basis.dim_d == 1:
        def n_term(t, c):
            return params.coupling * averaged_cubic_resonance_coeffs(c, basis)
    else:
        def n_term(t, c):
            return params.coupling * averaged_cubic_quadrature_coeffs(c, basis)
    return n_term


def solve_envelope(a0, params, provider, basis):
    """RK4 on the envelope equation selected by params.equation."""
    if params.equation not in ("env_full", "env_averaged", "env_oscillatory",
                               "env_limit"):
        raise ConfigError(f"solve_envelope got equation {params.equation!r}")
    grid = a0.grid
    t_caustic = provider.caustic_time()
    if params.t_final >= t_caustic - CAUSTIC_MARGIN:
        raise CausticError(
            f"t_final = {params.t_final} is inside the caustic margin "
            f"(caustic at {t_caustic:.4f}, margin {CAUSTIC_MARGIN})")

    max_grad = _estimate_max_grad(provider, params.t_final)
    cap = dt_cap(params, grid, max_grad)
    dt, steps = _resolve_dt(params, cap)
    every = _resolve_record_every(params, steps)

    k = grid.wavenumbers
    k_first = k.copy()
    k_first[grid.nx // 2] = 0.0  # Nyquist carries no odd derivative
    x_axes = tuple(range(grid.dim_n))
    alpha = params.alpha
    n_term = _make_nonlinearity(params, basis)

    def rhs(t, c):
        ph = provider(t)
        out = np.zeros_like(c)
        chat_axes = [np.fft.fft(c, axis=a) for a in x_axes]
        lap = np.zeros_like(c)
        for a in x_axes:
            shape = [1] * c.ndim
            shape[a] = grid.nx
            d1 = np.fft.ifft(chat_axes[a] * (1j * k_first).reshape(shape), axis=a)
            out -= ph.grad_s[..., a, None] * d1
            lap += np.fft.ifft(chat_axes[a] * (-(k ** 2)).reshape(shape), axis=a)
        out -= 0.5 * ph.lap_s[..., None] * c
        if alpha > 0:
            out += 0.5j * alpha * lap
        if n_term is not None:
            out -= 1j * n_term(t, c)
        return out

    traj = Trajectory(equation=params.equation, dt=dt)
    c = a0.data.astype(complex).copy()
    traj.record(Field(grid, c.copy(), 0.0))
    for step in range(1, steps + 1):
        t = (step - 1) * dt
        k1 = rhs(t, c)
        k2 = rhs(t + 0.5 * dt, c + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, c + 0.5 * dt * k2)
        k4 = rhs(t + dt, c + dt * k3)
        c = c + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if step % every == 0 or step == steps:
            f = Field(grid, c.copy(), step * dt)
            check_decay(f, basis, where=f" at t = {step * dt:.4f}")
            traj.record(f)
    return traj


# ---------------------------------------------------------------------------
# frame changes


def to_envelope(psi, t, phase, epsilon, alpha, basis):
    """Rotating-frame envelope A = e^{i t H / eps^2} e^{-i S/alpha} Psi."""
    if alpha <= 0:
        raise ConfigError("to_envelope requires alpha > 0")
    if abs(phase.time - t) > 1e-12:
        raise ValueError(
            f"phase is at time {phase.time}, field transform requested at {t}")
    rotated = psi.data * np.exp(-1j * phase.s_values / alpha)[..., None]
    # e^{+i t H / eps^2} is propagate with negated angle
    data = propagate(-t / epsilon ** 2, rotated, basis)
    return Field(psi.grid, data, t)


def from_envelope(a, t, phase, epsilon, alpha, basis):
    """Inverse frame change: Psi = e^{i S/alpha} e^{-i t H / eps^2} A."""
    if alpha <= 0:
        raise ConfigError("from_envelope requires alpha > 0")
    if abs(phase.time - t) > 1e-12:
        raise ValueError(
            f"phase is at time {phase.time}, field transform requested at {t}")
    data = propagate(t / epsilon ** 2, a.data, basis)
    data = data * np.exp(1j * phase.s_values / alpha)[..., None]
    return Field(a.grid, data, t)


# ---------------------------------------------------------------------------
# Lagrangian oracle for the alpha = 0 equations


@dataclass
class RaySolution:
    """Per-ray amplitudes along the characteristic flow."""

    equation: str
    y: np.ndarray               # launch points, (npts, n)
    times: list = field(default_factory=list)
    amplitudes: list = field(default_factory=list)   # (npts, modes) each
    positions: list = field(default_factory=list)    # (npts, n) each
    jacobians: list = field(default_factory=list)    # (npts,) each
    dt: float = 0.0

    @property
    def final_amplitude(self):
        return self.amplitudes[-1]

    @property
    def final_positions(self):
        return self.positions[-1]


def solve_rays(a0, params, s0, basis):
    """Integrate dA/dt = -(1/2)(Lap S along ray) A - i N(t, A) per ray.

    Along characteristics the advection term vanishes and Lap S is a
    closed-form function of t and the launch point, so the rays are
    fully decoupled — an independent oracle for the alpha = 0 grid
    solvers.
    """
    if params.equation not in ("env_oscillatory", "env_limit"):
        raise ConfigError(
            f"solve_rays integrates the alpha = 0 equations, got "
            f"{params.equation!r}")
    grid = a0.grid
    from .eikonal import caustic_time as _caustic_time
    t_caustic = _caustic_time(s0, grid)
    if params.t_final >= t_caustic - CAUSTIC_MARGIN:
        raise CausticError(
            f"t_final = {params.t_final} is inside the caustic margin "
            f"(caustic at {t_caustic:.4f})")

    y = np.stack([c.reshape(-1) for c in grid.x_mesh()], axis=-1)
    hess = s0.hessian(y)
    eye = np.eye(grid.dim_n)

    def lap_along_ray(t):
        ct, st = math.cos(t), math.sin(t)
        m2 = eye * ct + hess * st
        m1 = -eye * st + hess * ct
        if grid.dim_n == 1:
            return (m1[..., 0, 0] / m2[..., 0, 0])
        det = m2[..., 0, 0] * m2[..., 1, 1] - m2[..., 0, 1] * m2[..., 1, 0]
        tr_adj = (m1[..., 0, 0] * m2[..., 1, 1] - m1[..., 0, 1] * m2[..., 1, 0]
                  - m1[..., 1, 0] * m2[..., 0, 1] + m1[..., 1, 1] * m2[..., 0, 0])
        return tr_adj / det

    cap = dt_cap(params, grid)   # no advection term along rays
    dt, steps = _resolve_dt(params, cap)
    every = _resolve_record_every(params, steps)
    n_term = _make_nonlinearity(params, basis)

    def rhs(t, c):
        out = -0.5 * lap_along_ray(t)[:, None] * c
        if n_term is not None:
            out = out - 1j * n_term(t, c)
        return out

    sol = RaySolution(equation=params.equation, y=y, dt=dt)

    def record(t, c):
        x, _ = hamilton_flow(t, y, s0)
        jac = jacobian(t, y, s0)
        if float(np.min(np.abs(jac))) < 0.1:
            raise CausticError(f"ray Jacobian under the floor at t = {t:.4f}")
        sol.times.append(t)
        sol.amplitudes.append(c.copy())
        sol.positions.append(x)
        sol.jacobians.append(jac)

    c = a0.data.reshape(-1, basis.total_modes).astype(complex).copy()
    record(0.0, c)
    for step in range(1, steps + 1):
        t = (step - 1) * dt
        k1 = rhs(t, c)
        k2 = rhs(t + 0.5 * dt, c + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, c + 0.5 * dt * k2)
        k4 = rhs(t + dt, c + dt * k3)
        c = c + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if step % every == 0 or step == steps:
            record(step * dt, c)
    return sol


def make_params(equation, **kw):
    """Convenience constructor mirroring SolverParams defaults."""
    return SolverParams(equation=equation, **kw)
