"""Grids, mixed-representation fields, and the confinement-adapted norms.

A field lives on a periodic x-box [-L, L)^n (uniform grid, FFT
differentiation) times a truncated transverse eigenbasis: ``data`` is
complex with shape  (nx,)*dim_n + (num_modes**dim_d,) — x-major, the
transverse coefficients contiguous per column, which is the layout the
propagator and nonlinearity want.

The B^m norm combines x-derivatives up to order m, the |x|^m moment
weight, and the transverse regularity weight (1+H)^{m/2}:

    ||u||_{B^m}^2 = sum_{|kappa|<=m} ||d^kappa u||^2 + || |x|^m u ||^2
                    + ||(1+H)^{m/2} u||^2

with the convention that m = 0 is the plain L² norm (not the threefold
sum, which would triple-count it).
"""

import csv
import itertools
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DecayError
from .hermite import lambda_weights, to_node_values

BOUNDARY_DECAY_LIMIT = 1e-8
SPECTRAL_DECAY_LIMIT = 1e-8


@dataclass(frozen=True)
class GridSpec:
    """Discretization of the periodic x-box times the transverse truncation."""

    dim_n: int = 1
    dim_d: int = 1
    nx: int = 256
    half_width: float = 12.0
    num_modes: int = 32
    num_quad: int = 96

    def __post_init__(self):
        if self.dim_n not in (1, 2) or self.dim_d not in (1, 2):
            raise ConfigError(
                f"dimensions must be 1 or 2, got n={self.dim_n}, d={self.dim_d}")
        if self.dim_n + self.dim_d > 3:
            raise ConfigError(
                f"total dimension n+d must be <= 3, got {self.dim_n + self.dim_d}")
        if self.nx < 16 or (self.nx & (self.nx - 1)) != 0:
            raise ConfigError(f"nx must be a power of two >= 16, got {self.nx}")
        if self.half_width <= 0:
            raise ConfigError(f"half_width must be positive, got {self.half_width}")

    @property
    def dx(self):
        return 2.0 * self.half_width / self.nx

    @property
    def x_shape(self):
        return (self.nx,) * self.dim_n

    @property
    def total_modes(self):
        return self.num_modes ** self.dim_d

    @property
    def x_axis(self):
        """Grid points of one x-axis: -L, -L+dx, ..., L-dx."""
        return -self.half_width + self.dx * np.arange(self.nx)

    def x_mesh(self):
        """List of dim_n coordinate arrays, each of shape x_shape."""
        axes = [self.x_axis] * self.dim_n
        return list(np.meshgrid(*axes, indexing="ij"))

    def x_norm_sq(self):
        """|x|^2 on the grid, shape x_shape."""
        out = np.zeros(self.x_shape)
        for c in self.x_mesh():
            out = out + c * c
        return out

    @property
    def wavenumbers(self):
        """Fourier wavenumbers of one axis (angular, FFT ordering)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)


@dataclass
class Field:
    """A mixed-representation snapshot: x on the grid, z in coefficients."""

    grid: GridSpec
    data: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        expected = self.grid.x_shape + (self.grid.total_modes,)
        if self.data.shape != expected:
            raise ValueError(
                f"field data shape {self.data.shape} does not match grid "
                f"(expected {expected})")

    def copy(self):
        return Field(self.grid, self.data.copy(), self.time)


@dataclass(frozen=True)
class InitialAmplitude:
    """Catalog entry for the initial envelope A0(x, z)."""

    kind: str
    params: dict = field(default_factory=dict)


def polarized_gaussian(width=1.0):
    """Normalized Gaussian x-profile on the transverse ground mode."""
    return InitialAmplitude("polarized_gaussian", {"width": float(width)})


def two_mode(w0=0.8, w2=0.6):
    """Gaussian x-profile shared between transverse modes 0 and 2,
    normalized so the total mass is 1 with mode ratio w0^2 : w2^2."""
    return InitialAmplitude("two_mode", {"w0": float(w0), "w2": float(w2)})


def custom_amplitude(data):
    """Directly supplied coefficient data (copied on sampling)."""
    return InitialAmplitude("custom", {"data": np.asarray(data, dtype=complex)})


def _gaussian_profile(grid, width):
    prof = np.ones(grid.x_shape)
    for c in grid.x_mesh():
        prof = prof * (np.pi * width ** 2) ** (-0.25) * np.exp(-c * c / (2 * width ** 2))
    return prof


def sample_initial(amp, grid, basis):
    """Sample an InitialAmplitude catalog entry onto a grid at time 0."""
    data = np.zeros(grid.x_shape + (grid.total_modes,), dtype=complex)
    if amp.kind == "polarized_gaussian":
        data[..., 0] = _gaussian_profile(grid, amp.params.get("width", 1.0))
    elif amp.kind == "two_mode":
        if grid.dim_d != 1:
            raise ConfigError("two_mode amplitude is defined for dim_d = 1 only")
        w0 = amp.params.get("w0", 0.8)
        w2 = amp.params.get("w2", 0.6)
        norm = np.hypot(w0, w2)
        prof = _gaussian_profile(grid, amp.params.get("width", 1.0))
        data[..., 0] = prof * (w0 / norm)
        data[..., 2] = prof * (w2 / norm)
    elif amp.kind == "custom":
        raw = amp.params["data"]
        if raw.shape != data.shape:
            raise ConfigError(
                f"custom amplitude shape {raw.shape} does not match grid "
                f"(expected {data.shape})")
        data = raw.astype(complex).copy()
    else:
        raise ConfigError(f"unknown amplitude kind {amp.kind!r}")
    return Field(grid, data, 0.0)


def mass(f, basis, route="coefficient"):
    """Total squared L² mass, by Parseval in coefficients or by transverse
    quadrature in node space (the two must agree to roundoff)."""
    w = f.grid.dx ** f.grid.dim_n
    if route == "coefficient":
        return float(np.sum(np.abs(f.data) ** 2) * w)
    if route == "node":
        vals = to_node_values(f.data, basis)
        if basis.dim_d == 1:
            qw = basis.weights
        else:
            qw = np.outer(basis.weights, basis.weights).ravel()
        return float(np.sum(qw * np.abs(vals) ** 2) * w)
    raise ValueError(f"unknown mass route {route!r}")


def boundary_decay_ratio(f):
    """Max field magnitude on the outermost x-layer over the overall max."""
    mag = np.abs(f.data)
    peak = mag.max()
    if peak == 0.0:
        return 0.0
    edge = 0.0
    for axis in range(f.grid.dim_n):
        edge = max(edge, np.take(mag, 0, axis=axis).max(),
                   np.take(mag, f.grid.nx - 1, axis=axis).max())
    return float(edge / peak)


def spectral_tail_ratio(f, basis):
    """Mass fraction in the top quarter of the transverse spectrum."""
    total = np.sum(np.abs(f.data) ** 2)
    if total == 0.0:
        return 0.0
    cutoff = 0.75 * (basis.num_modes - 1) * basis.dim_d
    tail = basis.eigenvalues >= cutoff
    return float(np.sum(np.abs(f.data[..., tail]) ** 2) / total)


def check_decay(f, basis, where=""):
    """Raise DecayError when the box or the truncation stopped being adequate."""
    br = boundary_decay_ratio(f)
    if br > BOUNDARY_DECAY_LIMIT:
        raise DecayError(
            f"boundary decay violated{where}: edge/peak ratio {br:.3e} "
            f"> {BOUNDARY_DECAY_LIMIT:.0e}")
    sr = spectral_tail_ratio(f, basis)
    if sr > SPECTRAL_DECAY_LIMIT:
        raise DecayError(
            f"spectral decay violated{where}: tail mass fraction {sr:.3e} "
            f"> {SPECTRAL_DECAY_LIMIT:.0e}")


def derivative_x(f, axis=0, order=1):
    """Spectral x-derivative along one axis.  Refuses fields that do not
    decay at the box edge — periodic differentiation would be spurious."""
    if order == 0:
        return f.copy()
    if not 0 <= axis < f.grid.dim_n:
        raise ValueError(f"axis {axis} out of range for dim_n = {f.grid.dim_n}")
    br = boundary_decay_ratio(f)
    if br > BOUNDARY_DECAY_LIMIT:
        raise DecayError(
            f"cannot differentiate: boundary decay ratio {br:.3e} exceeds "
            f"{BOUNDARY_DECAY_LIMIT:.0e}")
    k = f.grid.wavenumbers.copy()
    if order % 2 == 1:
        k[f.grid.nx // 2] = 0.0  # unmatched Nyquist mode has no odd derivative
    mult = (1j * k) ** order
    shape = [1] * f.data.ndim
    shape[axis] = f.grid.nx
    out = np.fft.ifft(np.fft.fft(f.data, axis=axis) * mult.reshape(shape), axis=axis)
    return Field(f.grid, out, f.time)


def _l2_sq(grid, data):
    return float(np.sum(np.abs(data) ** 2) * grid.dx ** grid.dim_n)


def bm_norm(f, m, basis):
    """The confinement-adapted Sobolev norm of order m (m = 0: plain L²)."""
    if m < 0:
        raise ValueError(f"norm order must be >= 0, got {m}")
    if m == 0:
        return float(np.sqrt(mass(f, basis)))
    total = 0.0
    # derivative part: all x multi-indices with |kappa| <= m
    for kappa in itertools.product(range(m + 1), repeat=f.grid.dim_n):
        if sum(kappa) > m:
            continue
        g = f
        for axis, order in enumerate(kappa):
            if order:
                g = derivative_x(g, axis=axis, order=order)
        total += _l2_sq(f.grid, g.data)
    # moment part
    weight = f.grid.x_norm_sq() ** (0.5 * m)
    total += _l2_sq(f.grid, f.data * weight[..., None])
    # transverse regularity part
    total += _l2_sq(f.grid, f.data * lambda_weights(m, basis))
    return float(np.sqrt(total))


def bm_error(f1, f2, m, basis):
    """bm_norm of the difference; demands matching grids and times."""
    if f1.grid != f2.grid:
        raise ValueError("bm_error requires identical grids")
    if abs(f1.time - f2.time) > 1e-12:
        raise ValueError(
            f"bm_error requires matching times, got {f1.time} vs {f2.time}")
    return bm_norm(Field(f1.grid, f1.data - f2.data, f1.time), m, basis)


def write_field_csv(f, path):
    """Field snapshot as CSV plus a JSON sidecar carrying the grid spec.

    Columns: one coordinate column per x-axis, then mode_index, re, im.
    """
    coord_names = ["x"] if f.grid.dim_n == 1 else ["x0", "x1"]
    mesh = f.grid.x_mesh()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(coord_names + ["mode_index", "re", "im"])
        flat = f.data.reshape(-1, f.grid.total_modes)
        coords = [c.reshape(-1) for c in mesh]
        for i in range(flat.shape[0]):
            pos = [repr(float(c[i])) for c in coords]
            for mode in range(f.grid.total_modes):
                v = flat[i, mode]
                writer.writerow(pos + [mode, repr(v.real), repr(v.imag)])
    sidecar = {
        "grid": {
            "dim_n": f.grid.dim_n,
            "dim_d": f.grid.dim_d,
            "nx": f.grid.nx,
            "half_width": f.grid.half_width,
            "num_modes": f.grid.num_modes,
            "num_quad": f.grid.num_quad,
        },
        "time": f.time,
    }
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def interpolate_periodic(f, points):
    """Evaluate a grid field at arbitrary x locations (dim_n = 1).

    Trigonometric interpolation through the FFT coefficients — spectrally
    accurate for fields that decay at the box edge, which is exactly what
    the decay invariant guarantees.  Returns an array (npts, total_modes).
    """
    if f.grid.dim_n != 1:
        raise ConfigError("periodic interpolation implemented for dim_n = 1")
    pts = np.asarray(points, dtype=float).reshape(-1)
    nx, half = f.grid.nx, f.grid.half_width
    fhat = np.fft.fft(f.data, axis=0)
    freqs = np.fft.fftfreq(nx) * nx          # signed integer frequencies
    angle = np.pi * (pts[:, None] + half) / half
    kernel = np.exp(1j * angle * freqs[None, :])
    # the unmatched Nyquist frequency interpolates as a pure cosine
    kernel[:, nx // 2] = np.cos(angle[:, 0] * abs(freqs[nx // 2]))
    return kernel @ fhat / nx


def refined(grid, factor=2):
    """The same box with factor-times more x-points (for refinement checks)."""
    return replace(grid, nx=grid.nx * factor)
