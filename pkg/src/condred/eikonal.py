"""Phase transport: solve  dS/dt + |grad S|^2/2 + |x|^2/2 = 0  by rays.

With a harmonic background the bicharacteristics are explicit,

    x(t,y)  =  y cos t + grad S0(y) sin t,
    xi(t,y) = -y sin t + grad S0(y) cos t,

so the phase S(t, x), its gradient, and its Laplacian all come from
closed-form flow maps plus one scalar quadrature (the action) per ray.
No differencing of S on the grid is ever needed — S grows quadratically
in x, so periodic spectral calculus does not apply to it.

Everything here works for subquadratic initial phases (bounded Hessian);
the ray map stays invertible up to the first caustic, monitored through
the Jacobian determinant  J_t(y) = det(I cos t + Hess S0(y) sin t).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CausticError, ConfigError, NewtonError

JACOBIAN_FLOOR = 0.1
ACTION_STEPS_PER_UNIT = 512
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50


@dataclass(frozen=True)
class InitialPhase:
    """Catalog entry for S0 with closed-form value/gradient/Hessian.

    Point arrays carry the space dimension on the last axis: y has shape
    (..., n); value returns (...,), gradient (..., n), hessian (..., n, n).
    """

    kind: str
    params: dict = field(default_factory=dict)

    def value(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "zero":
            return np.zeros(y.shape[:-1])
        if self.kind == "linear":
            b = self._b(y.shape[-1])
            return y @ b
        if self.kind == "quadratic":
            return 0.5 * self.params["c"] * np.sum(y * y, axis=-1)
        if self.kind == "gaussian_bump":
            a, w = self.params["a"], self.params["w"]
            return a * np.exp(-np.sum(y * y, axis=-1) / (2 * w * w))
        raise ConfigError(f"unknown phase kind {self.kind!r}")

    def gradient(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(y)
        if self.kind == "linear":
            b = self._b(y.shape[-1])
            return np.broadcast_to(b, y.shape).copy()
        if self.kind == "quadratic":
            return self.params["c"] * y
        if self.kind == "gaussian_bump":
            w = self.params["w"]
            return self.value(y)[..., None] * (-y / (w * w))
        raise ConfigError(f"unknown phase kind {self.kind!r}")

    def hessian(self, y):
        y = np.asarray(y, dtype=float)
        n = y.shape[-1]
        eye = np.eye(n)
        if self.kind == "zero" or self.kind == "linear":
            return np.zeros(y.shape[:-1] + (n, n))
        if self.kind == "quadratic":
            return np.broadcast_to(self.params["c"] * eye, y.shape[:-1] + (n, n)).copy()
        if self.kind == "gaussian_bump":
            w2 = self.params["w"] ** 2
            v = self.value(y)
            outer = y[..., :, None] * y[..., None, :]
            return v[..., None, None] * (outer / w2 ** 2 - eye / w2)
        raise ConfigError(f"unknown phase kind {self.kind!r}")

    def _b(self, n):
        b = np.atleast_1d(np.asarray(self.params["b"], dtype=float))
        if b.size == 1 and n > 1:
            b = np.full(n, b[0])
        if b.size != n:
            raise ConfigError(f"linear phase slope has size {b.size}, need {n}")
        return b


def zero_phase():
    return InitialPhase("zero")


def linear_phase(b):
    return InitialPhase("linear", {"b": b})


def quadratic_phase(c):
    return InitialPhase("quadratic", {"c": float(c)})


def gaussian_bump_phase(a, w):
    if w <= 0:
        raise ConfigError(f"bump width must be positive, got {w}")
    return InitialPhase("gaussian_bump", {"a": float(a), "w": float(w)})


PHASE_CATALOG = {
    "zero": zero_phase,
    "linear": linear_phase,
    "quadratic": quadratic_phase,
    "gaussian_bump": gaussian_bump_phase,
}


@dataclass
class PhaseField:
    """Phase data on the x-grid at one time, with ray-map diagnostics."""

    time: float
    s_values: np.ndarray   # shape x_shape
    grad_s: np.ndarray     # shape x_shape + (n,)
    lap_s: np.ndarray      # shape x_shape
    min_jacobian: float
    caustic_flag: bool
    y_map: np.ndarray = None  # launch points y(t, x), for warm restarts


def hamilton_flow(t, y, s0):
    """Closed-form bicharacteristic flow: returns (x, xi) at time t."""
    y = np.asarray(y, dtype=float)
    g = s0.gradient(y)
    ct, st = math.cos(t), math.sin(t)
    return y * ct + g * st, -y * st + g * ct


def _flow_matrices(t, y, s0):
    """d x/d y and d xi/d y along the flow (closed form)."""
    n = y.shape[-1]
    eye = np.eye(n)
    h = s0.hessian(y)
    ct, st = math.cos(t), math.sin(t)
    return eye * ct + h * st, -eye * st + h * ct


def _det(mat):
    n = mat.shape[-1]
    if n == 1:
        return mat[..., 0, 0]
    return (mat[..., 0, 0] * mat[..., 1, 1] - mat[..., 0, 1] * mat[..., 1, 0])


def jacobian(t, y, s0):
    """Ray-map Jacobian determinant J_t(y) = det(I cos t + Hess S0 sin t)."""
    y = np.asarray(y, dtype=float)
    dxdy, _ = _flow_matrices(t, y, s0)
    return _det(dxdy)


def action_along_ray(t, y, s0, steps=None):
    """Action z(t, y): integral of |xi|^2/2 - |x|^2/2 from S0(y).

    Classical RK4 on the closed-form integrand (which collapses to
    composite Simpson since the integrand depends on time only).
    """
    y = np.asarray(y, dtype=float)
    if steps is None:
        steps = max(1, math.ceil(ACTION_STEPS_PER_UNIT * abs(t)))
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    z = s0.value(y)
    if t == 0.0:
        return z
    h = t / steps

    def integrand(s):
        x, xi = hamilton_flow(s, y, s0)
        return 0.5 * (np.sum(xi * xi, axis=-1) - np.sum(x * x, axis=-1))

    f_lo = integrand(0.0)
    for j in range(steps):
        mid = integrand((j + 0.5) * h)
        f_hi = integrand((j + 1.0) * h)
        z = z + (h / 6.0) * (f_lo + 4.0 * mid + f_hi)
        f_lo = f_hi
    return z


def invert_ray_map(t, x, s0, guess=None, tol=NEWTON_TOL,
                   jacobian_floor=JACOBIAN_FLOOR, max_iter=NEWTON_MAX_ITER):
    """Solve x(t, y) = x for the launch points y by vectorized Newton.

    The Newton matrix is the closed-form flow differential, so each
    iteration is exact-derivative Newton (quadratic convergence away
    from caustics).
    """
    x = np.asarray(x, dtype=float)
    y = x.copy() if guess is None else np.array(guess, dtype=float)
    for _ in range(max_iter):
        xf, _ = hamilton_flow(t, y, s0)
        res = xf - x
        err = np.max(np.abs(res))
        if err < tol:
            jac = jacobian(t, y, s0)
            if np.min(np.abs(jac)) < jacobian_floor:
                raise CausticError(
                    f"ray-map Jacobian {np.min(np.abs(jac)):.3e} below floor "
                    f"{jacobian_floor} at t = {t}")
            return y
        dxdy, _ = _flow_matrices(t, y, s0)
        jac = _det(dxdy)
        if np.min(np.abs(jac)) < jacobian_floor:
            raise CausticError(
                f"ray-map Jacobian {np.min(np.abs(jac)):.3e} below floor "
                f"{jacobian_floor} during inversion at t = {t}")
        n = x.shape[-1]
        if n == 1:
            step = res / dxdy[..., 0, 0, None]
        else:
            step = np.linalg.solve(dxdy, res[..., None])[..., 0]
        y = y - step
    raise NewtonError(
        f"ray-map inversion did not converge after {max_iter} iterations "
        f"at t = {t} (last residual {err:.3e})")


def phase_on_grid(t, grid, s0, guess=None, action_steps=None,
                  tol=NEWTON_TOL, jacobian_floor=JACOBIAN_FLOOR):
    """PhaseField at time t: S, grad S, Lap S on the grid via rays.

    grad S(t, x) is the momentum xi at the inverted launch point (the
    Hamilton–Jacobi identity); Lap S comes from the closed-form flow
    differentials, never from grid differencing.
    """
    pts = np.stack([c.reshape(-1) for c in grid.x_mesh()], axis=-1)
    if t == 0.0:
        s = s0.value(pts)
        g = s0.gradient(pts)
        h = s0.hessian(pts)
        lap = np.trace(h, axis1=-2, axis2=-1)
        return PhaseField(
            time=0.0,
            s_values=s.reshape(grid.x_shape),
            grad_s=g.reshape(grid.x_shape + (grid.dim_n,)),
            lap_s=lap.reshape(grid.x_shape),
            min_jacobian=1.0,
            caustic_flag=False,
            y_map=pts.reshape(grid.x_shape + (grid.dim_n,)),
        )
    if guess is not None:
        guess = guess.reshape(pts.shape)
    try:
        y = invert_ray_map(t, pts, s0, guess=guess, tol=tol,
                           jacobian_floor=jacobian_floor)
    except (CausticError, NewtonError) as exc:
        raise CausticError(f"caustic reached on grid at t = {t}: {exc}") from exc
    z = action_along_ray(t, y, s0, steps=action_steps)
    _, xi = hamilton_flow(t, y, s0)
    dxdy, dxidy = _flow_matrices(t, y, s0)
    jac = _det(dxdy)
    n = grid.dim_n
    if n == 1:
        lap = dxidy[..., 0, 0] / dxdy[..., 0, 0]
    else:
        # trace(dxidy @ adj(dxdy)) / det(dxdy) for 2x2 blocks
        tr_adj = (dxidy[..., 0, 0] * dxdy[..., 1, 1]
                  - dxidy[..., 0, 1] * dxdy[..., 1, 0]
                  - dxidy[..., 1, 0] * dxdy[..., 0, 1]
                  + dxidy[..., 1, 1] * dxdy[..., 0, 0])
        lap = tr_adj / jac
    return PhaseField(
        time=float(t),
        s_values=z.reshape(grid.x_shape),
        grad_s=xi.reshape(grid.x_shape + (n,)),
        lap_s=lap.reshape(grid.x_shape),
        min_jacobian=float(np.min(np.abs(jac))),
        caustic_flag=False,
        y_map=y.reshape(grid.x_shape + (n,)),
    )


def caustic_time(s0, grid, jacobian_floor=JACOBIAN_FLOOR, scan_step=0.01):
    """First time the min-over-grid |Jacobian| hits the floor.

    Scans [0, pi] and bisects the bracketing interval down to 1e-6;
    returns math.inf when the floor is never reached before pi.
    """
    if not 0.0 < jacobian_floor < 1.0:
        raise ConfigError(
            f"jacobian_floor must be in (0, 1), got {jacobian_floor}")
    pts = np.stack([c.reshape(-1) for c in grid.x_mesh()], axis=-1)

    def clearance(t):
        return float(np.min(np.abs(jacobian(t, pts, s0)))) - jacobian_floor

    t_lo = 0.0
    t_hi = None
    t = scan_step
    while t <= math.pi + 1e-12:
        if clearance(t) <= 0.0:
            t_hi = t
            break
        t_lo = t
        t += scan_step
    if t_hi is None:
        return math.inf
    while t_hi - t_lo > 1e-6:
        mid = 0.5 * (t_lo + t_hi)
        if clearance(mid) <= 0.0:
            t_hi = mid
        else:
            t_lo = mid
    return 0.5 * (t_lo + t_hi)


class PhaseProvider:
    """Time-indexed PhaseField source for the envelope solvers.

    Recomputes the closed-form ray composition at every requested time
    (cheap), warm-starting the Newton inversion from the nearest
    already-computed time level.  Instances are not thread-safe; use one
    per solver run.
    """

    def __init__(self, grid, s0, jacobian_floor=JACOBIAN_FLOOR,
                 action_steps=None, tol=NEWTON_TOL):
        self.grid = grid
        self.s0 = s0
        self.jacobian_floor = jacobian_floor
        self.action_steps = action_steps
        self.tol = tol
        self._cache = {}

    def caustic_time(self):
        return caustic_time(self.s0, self.grid, self.jacobian_floor)

    def __call__(self, t):
        key = round(float(t), 12)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        guess = None
        if self._cache:
            nearest = min(self._cache, key=lambda s: abs(s - key))
            guess = self._cache[nearest].y_map
        ph = phase_on_grid(t, self.grid, self.s0, guess=guess,
                           action_steps=self.action_steps, tol=self.tol,
                           jacobian_floor=self.jacobian_floor)
        self._cache[key] = ph
        return ph
