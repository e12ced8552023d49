"""Hermite spectral calculus for the transverse confinement directions.

The transverse Hamiltonian  H = -(1/2) d²/dz² + |z|²/2 - d/2  has the
normalized Hermite functions as eigenbasis with *integer* eigenvalues
0, 1, 2, ...  (the d/2 shift removes the zero-point offset), so the
confinement propagator e^{-i theta H} is 2*pi periodic in theta.  All
transverse fields are stored as coefficient vectors in that eigenbasis.

Two Gauss-Hermite rules live on a basis object:

* the *transform* rule (``nodes``/``weights``): plain Gauss-Hermite
  abscissas with weights multiplied by e^{u²}, which integrates
  f(z) = poly(z) e^{-z²} exactly — pairwise products of basis functions,
  hence an exactly orthonormal discrete transform;
* the *cubic* rule (``cubic_nodes``/``cubic_weights``): abscissas
  compressed by sqrt(2), which integrates poly(z) e^{-2z²} exactly —
  quartic products of basis functions, hence an exact Galerkin
  projection of the cubic nonlinearity and an exact overlap tensor.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

# Dense storage of the quartic overlap tensor is O(N^4); past this many
# modes the per-shift slices are built on demand instead.
DENSE_OVERLAP_LIMIT = 48


def hermite_values(z, num_modes):
    """Values h_k(z) of the normalized Hermite functions, k < num_modes.

    Returns an array of shape z.shape + (num_modes,).  Uses the stable
    normalized recurrence
        h_{k+1}(z) = z sqrt(2/(k+1)) h_k(z) - sqrt(k/(k+1)) h_{k-1}(z)
    seeded with h_0(z) = pi^{-1/4} e^{-z²/2}.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape + (num_modes,))
    h_prev = np.pi ** (-0.25) * np.exp(-0.5 * z * z)
    out[..., 0] = h_prev
    if num_modes == 1:
        return out
    h_cur = np.sqrt(2.0) * z * h_prev
    out[..., 1] = h_cur
    for k in range(1, num_modes - 1):
        h_next = z * np.sqrt(2.0 / (k + 1)) * h_cur - np.sqrt(k / (k + 1.0)) * h_prev
        out[..., k + 1] = h_next
        h_prev, h_cur = h_cur, h_next
    return out


@dataclass
class HermiteBasis:
    """Discrete Hermite eigenbasis of the transverse Hamiltonian.

    Immutable after construction; safe to share between worker threads.
    ``basis_values`` and friends are per-axis matrices — for dim_d == 2
    the basis is the tensor product of the 1-D objects with flattened
    mode index m = k1 * num_modes + k2.
    """

    dim_d: int
    num_modes: int
    num_quad: int
    nodes: np.ndarray        # transform-rule abscissas, shape (num_quad,)
    weights: np.ndarray      # transform-rule weights (e^{u²}-modified)
    basis_values: np.ndarray  # h_k at nodes, shape (num_quad, num_modes)
    cubic_nodes: np.ndarray   # quartic-exact abscissas nodes/sqrt(2)
    cubic_weights: np.ndarray
    cubic_values: np.ndarray  # h_k at cubic_nodes
    eigenvalues: np.ndarray   # per flattened mode, shape (num_modes**dim_d,)
    quartic_overlap: np.ndarray | None = None  # (N,N,N,N) for dim_d == 1
    # per-shift resonance tables, filled lazily by the nonlinearity module
    _shift_tables: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def total_modes(self):
        return self.num_modes ** self.dim_d


def build_basis(dim_d=1, num_modes=32, num_quad=96):
    """Construct a HermiteBasis.

    num_quad must be at least 2 * num_modes + 1 so that both quadrature
    rules are exact for the polynomial degrees they are asked to handle.
    """
    if dim_d not in (1, 2):
        raise ConfigError(f"dim_d must be 1 or 2, got {dim_d!r}")
    if num_modes < 1:
        raise ConfigError(f"num_modes must be positive, got {num_modes}")
    if num_quad < 2 * num_modes + 1:
        raise ConfigError(
            f"num_quad = {num_quad} is insufficient for num_modes = {num_modes}; "
            f"need num_quad >= {2 * num_modes + 1}"
        )

    u, w = np.polynomial.hermite.hermgauss(num_quad)
    weights = w * np.exp(u * u)
    basis_values = hermite_values(u, num_modes)

    cubic_nodes = u / np.sqrt(2.0)
    cubic_weights = weights / np.sqrt(2.0)
    cubic_values = hermite_values(cubic_nodes, num_modes)

    k = np.arange(num_modes)
    if dim_d == 1:
        eigenvalues = k.astype(float)
    else:
        eigenvalues = np.add.outer(k, k).ravel().astype(float)

    overlap = None
    if dim_d == 1 and num_modes <= DENSE_OVERLAP_LIMIT:
        overlap = _quartic_overlap_dense(cubic_values, cubic_weights)

    return HermiteBasis(
        dim_d=dim_d,
        num_modes=num_modes,
        num_quad=num_quad,
        nodes=u,
        weights=weights,
        basis_values=basis_values,
        cubic_nodes=cubic_nodes,
        cubic_weights=cubic_weights,
        cubic_values=cubic_values,
        eigenvalues=eigenvalues,
        quartic_overlap=overlap,
    )


def _quartic_overlap_dense(cubic_values, cubic_weights):
    """gamma[p,q,r,m] = integral of h_p h_q h_r h_m over the line.

    Exact because the integrand is poly * e^{-2z²} and the cubic rule
    integrates that class exactly.
    """
    nq, n = cubic_values.shape
    pair = np.einsum("ip,iq->ipq", cubic_values, cubic_values).reshape(nq, n * n)
    gram = (pair.T * cubic_weights) @ pair
    return gram.reshape(n, n, n, n)


def quartic_overlap_entry(basis, p, q, r, m):
    """Single overlap entry, usable even when dense storage is disabled."""
    if basis.quartic_overlap is not None:
        return basis.quartic_overlap[p, q, r, m]
    v = basis.cubic_values
    return float(np.sum(basis.cubic_weights * v[:, p] * v[:, q] * v[:, r] * v[:, m]))


def _check_last_axis(arr, expected, what):
    if arr.shape[-1] != expected:
        raise ValueError(
            f"{what}: last axis has length {arr.shape[-1]}, expected {expected}"
        )


def to_coefficients(node_values, basis):
    """Project node values (last axis = flattened transverse nodes) onto
    eigenbasis coefficients.  Exact left inverse of to_node_values."""
    node_values = np.asarray(node_values)
    analysis = basis.weights[:, None] * basis.basis_values
    if basis.dim_d == 1:
        _check_last_axis(node_values, basis.num_quad, "to_coefficients")
        return node_values @ analysis
    _check_last_axis(node_values, basis.num_quad ** 2, "to_coefficients")
    lead = node_values.shape[:-1]
    v = node_values.reshape(lead + (basis.num_quad, basis.num_quad))
    c = np.einsum("...ij,ip,jq->...pq", v, analysis, analysis, optimize=True)
    return c.reshape(lead + (basis.num_modes ** 2,))


def to_node_values(coefficients, basis):
    """Evaluate a coefficient vector (last axis = flattened modes) at the
    transform-rule nodes."""
    coefficients = np.asarray(coefficients)
    if basis.dim_d == 1:
        _check_last_axis(coefficients, basis.num_modes, "to_node_values")
        return coefficients @ basis.basis_values.T
    _check_last_axis(coefficients, basis.num_modes ** 2, "to_node_values")
    lead = coefficients.shape[:-1]
    c = coefficients.reshape(lead + (basis.num_modes, basis.num_modes))
    v = np.einsum("...pq,ip,jq->...ij", c, basis.basis_values, basis.basis_values,
                  optimize=True)
    return v.reshape(lead + (basis.num_quad ** 2,))


def propagate(theta, coefficients, basis):
    """Apply the confinement propagator e^{-i theta H} in coefficient space.

    Diagonal with integer spectrum, hence exactly 2*pi periodic in theta
    and exactly unitary.
    """
    coefficients = np.asarray(coefficients)
    _check_last_axis(coefficients, basis.total_modes, "propagate")
    phase = np.exp(-1j * theta * basis.eigenvalues)
    return coefficients * phase


def lambda_weights(m, basis):
    """Diagonal weights (1 + |k|)^{m/2} of the transverse regularity
    operator of order m, per flattened mode."""
    return (1.0 + basis.eigenvalues) ** (0.5 * m)
