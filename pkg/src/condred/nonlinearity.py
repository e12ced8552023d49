"""The cubic interaction, its filtered form, and the theta-averaged field.

The filtered nonlinearity conjugates the cubic by the confinement
propagator:

    F(theta, Phi) = e^{i theta H} ( |e^{-i theta H} Phi|^2 e^{-i theta H} Phi ),

2*pi-periodic in theta because the spectrum of H is integer.  Its
average over one period keeps exactly the resonant mode interactions
p - q + r = m, weighted by the quartic overlap integrals gamma[p,q,r,m].

Two independent algorithms compute the average: uniform trapezoid
quadrature in theta applied to F (any transverse dimension), and the
direct resonance sum (dim_d = 1).  Both use the quartic-exact Gauss
rule for the cubic's Galerkin projection, so they agree to roundoff —
a standing cross-check, not a tolerance to tune.

All evaluations act on the trailing mode axis and are local in x: any
leading axes (grid columns, rays) are carried along elementwise.
"""

import warnings

import numpy as np

from .errors import ConfigError
from .fields import Field


def cubic(values):
    """Pointwise |u|^2 u."""
    values = np.asarray(values)
    return np.abs(values) ** 2 * values


def default_num_theta(basis):
    """Safely above the trigonometric exactness degree of the average."""
    return 3 * basis.num_modes + 4


def _cubic_node_synthesis(coeffs, basis):
    """Coefficients -> values at the quartic-exact nodes (per axis tensor)."""
    if basis.dim_d == 1:
        return coeffs @ basis.cubic_values.T
    lead = coeffs.shape[:-1]
    n = basis.num_modes
    c = coeffs.reshape(lead + (n, n))
    v = np.einsum("...pq,ip,jq->...ij", c, basis.cubic_values, basis.cubic_values,
                  optimize=True)
    return v.reshape(lead + (basis.num_quad ** 2,))


def _cubic_node_analysis(values, basis):
    """Galerkin projection from quartic-exact node values to coefficients."""
    analysis = basis.cubic_weights[:, None] * basis.cubic_values
    if basis.dim_d == 1:
        return values @ analysis
    lead = values.shape[:-1]
    nq = basis.num_quad
    v = values.reshape(lead + (nq, nq))
    c = np.einsum("...ij,ip,jq->...pq", v, analysis, analysis, optimize=True)
    return c.reshape(lead + (basis.num_modes ** 2,))


def filtered_cubic_coeffs(theta, coeffs, basis):
    """F(theta, .) on raw coefficient arrays (mode axis last)."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape[-1] != basis.total_modes:
        raise ValueError(
            f"coefficient axis has length {coeffs.shape[-1]}, expected "
            f"{basis.total_modes}")
    phase = np.exp(-1j * theta * basis.eigenvalues)
    rotated = coeffs * phase
    projected = _cubic_node_analysis(cubic(_cubic_node_synthesis(rotated, basis)),
                                     basis)
    return projected * np.conj(phase)


def _resonance_tables(basis):
    """Per-shift coupling matrices W_s[q, r] = gamma[q+s, q, r, r+s].

    Built once per basis by the quartic-exact rule and cached on it;
    works for any truncation size without materializing the dense
    overlap tensor.
    """
    tables = basis._shift_tables.get("resonance")
    if tables is not None:
        return tables
    n = basis.num_modes
    v = basis.cubic_values
    cw = basis.cubic_weights
    tables = []
    for s in range(-(n - 1), n):
        lo = max(0, -s)
        hi = n - 1 - max(0, s)
        idx = np.arange(lo, hi + 1)
        pair = v[:, idx + s] * v[:, idx]          # (nq, L_s)
        w_s = (pair.T * cw) @ pair                # gamma[q+s, q, r, r+s]
        tables.append((s, idx, w_s))
    basis._shift_tables["resonance"] = tables
    return tables


def averaged_cubic_resonance_coeffs(coeffs, basis):
    """Resonance-sum average: out_m = sum_{p-q+r=m} gamma[p,q,r,m] c_p cbar_q c_r.

    Organized by the shift s = p - q = m - r, turning the quadruple sum
    into one small matmul per shift.
    """
    if basis.dim_d != 1:
        raise ConfigError(
            "resonance averaging supports dim_d = 1 only; use the "
            "quadrature algorithm for tensor-product bases")
    coeffs = np.asarray(coeffs)
    if coeffs.shape[-1] != basis.num_modes:
        raise ValueError(
            f"coefficient axis has length {coeffs.shape[-1]}, expected "
            f"{basis.num_modes}")
    lead = coeffs.shape[:-1]
    flat = coeffs.reshape(-1, basis.num_modes)
    out = np.zeros_like(flat)
    for s, idx, w_s in _resonance_tables(basis):
        excite = flat[:, idx + s] * np.conj(flat[:, idx])
        out[:, idx + s] += (excite @ w_s) * flat[:, idx]
    return out.reshape(lead + (basis.num_modes,))


def averaged_cubic_quadrature_coeffs(coeffs, basis, num_theta=None, offset=0.0):
    """Trapezoid average of F over one period: (1/2pi) integral of
    F(theta, .) d theta, exact once num_theta exceeds the trigonometric
    degree 3(num_modes - 1) of the integrand."""
    if num_theta is None:
        num_theta = default_num_theta(basis)
    floor = 3 * basis.num_modes + 1
    if num_theta < floor:
        warnings.warn(
            f"num_theta = {num_theta} is below the exactness bound {floor}; "
            "the theta average will carry aliasing error", stacklevel=2)
    coeffs = np.asarray(coeffs)
    acc = np.zeros(coeffs.shape, dtype=complex)
    for j in range(num_theta):
        theta = offset + 2.0 * np.pi * j / num_theta
        acc += filtered_cubic_coeffs(theta, coeffs, basis)
    return acc / num_theta


def filtered_cubic(theta, field, basis):
    """Field-level F(theta, .)."""
    return Field(field.grid, filtered_cubic_coeffs(theta, field.data, basis),
                 field.time)


def averaged_cubic_resonance(field, basis):
    """Field-level resonance average (dim_d = 1)."""
    return Field(field.grid,
                 averaged_cubic_resonance_coeffs(field.data, basis), field.time)


def averaged_cubic_quadrature(field, basis, num_theta=None):
    """Field-level trapezoid average."""
    return Field(
        field.grid,
        averaged_cubic_quadrature_coeffs(field.data, basis, num_theta),
        field.time)
