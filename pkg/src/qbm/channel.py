"""Single-mode Gaussian probes under the weak-coupling QBM channel.

The channel acts on first moments ``d`` and covariance ``sigma`` as

    d(tau) = S d(0),    sigma(tau) = S sigma(0) S^T + T(tau)

with ``S = exp(-Gamma_tilde / 2) R(tau)`` and, keeping only the leading
weak-coupling term,

    T(tau) = R(tau) [int_0^tau R(t)^T M(t) R(t) dt] R(tau)^T,
    M = [[Delta, -Pi / 2], [-Pi / 2, 0]].

``R`` is the clockwise rotation by ``tau / x``. Covariances use the vacuum
normalisation ``sigma = I / 2``.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .coeffs import BathSpec, closed_form_coefficients
from .quadrature import DEFAULT_QUAD, QuadSpec, cumulative_integral, integrate_on_mesh
from .specfun import DEFAULT_ACCURACY, AccuracySpec

__all__ = [
    "CovMatrix",
    "GaussianState",
    "ProbeSpec",
    "ChannelMatrices",
    "ChannelCurve",
    "WignerGrid",
    "PhysicalityWarning",
    "StateDomainError",
    "PHYSICALITY_TOL",
    "rotation",
    "initial_correlated_state",
    "channel_curve",
    "drift_matrix",
    "noise_matrix",
    "channel_matrices",
    "evolve",
    "evolve_cov",
    "purity",
    "purity_from_cov",
    "squeezed_cov",
    "free_evolution_cov",
    "wigner_grid",
    "moment_ode_oracle",
]

# relative slack below the uncertainty bound det(sigma) >= 1/4
PHYSICALITY_TOL = 1e-3


class PhysicalityWarning(UserWarning):
    """An evolved covariance violates det(sigma) >= 1/4 beyond PHYSICALITY_TOL."""


class StateDomainError(ValueError):
    """Covariance is singular or not positive definite."""


@dataclass(frozen=True)
class CovMatrix:
    """Symmetric 2x2 covariance ``[[m11, m12], [m12, m22]]``."""

    m11: float
    m12: float
    m22: float

    def __post_init__(self):
        for name in ("m11", "m12", "m22"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.m11 > 0 and self.m22 > 0):
            raise StateDomainError(f"diagonal entries must be positive, got {self.m11}, {self.m22}")

    @classmethod
    def from_array(cls, arr, sym_tol: float = 1e-12) -> "CovMatrix":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (2, 2):
            raise ValueError(f"expected a 2x2 array, got shape {arr.shape}")
        if abs(arr[0, 1] - arr[1, 0]) > sym_tol * max(1.0, np.abs(arr).max()):
            raise ValueError("covariance array is not symmetric")
        return cls(arr[0, 0], 0.5 * (arr[0, 1] + arr[1, 0]), arr[1, 1])

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m12, self.m22]])

    @property
    def det(self) -> float:
        return self.m11 * self.m22 - self.m12**2


@dataclass(frozen=True)
class GaussianState:
    """First moments ``d`` and covariance ``sigma`` of a one-mode Gaussian state."""

    sigma: CovMatrix
    d: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float).reshape(2)
        object.__setattr__(self, "d", d)
        if not self.sigma.det > 0:
            raise StateDomainError(f"det(sigma) must be positive, got {self.sigma.det}")

    @property
    def purity(self) -> float:
        return purity(self)


@dataclass(frozen=True)
class ProbeSpec:
    """Initial probe with position-momentum correlation ``gamma``.

    ``d0`` displaces the probe; every physical scenario here uses the origin.
    """

    gamma: float = 0.0
    d0: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not np.isfinite(self.gamma):
            raise ValueError(f"gamma must be finite, got {self.gamma!r}")
        d0 = tuple(float(v) for v in self.d0)
        if len(d0) != 2 or not all(np.isfinite(d0)):
            raise ValueError(f"d0 must be two finite numbers, got {self.d0!r}")
        object.__setattr__(self, "d0", d0)


@dataclass(frozen=True)
class ChannelMatrices:
    """Drift ``s_mat`` and symmetric noise ``t_mat`` at one time.

    ``t_mat`` is an array because it vanishes at ``tau = 0`` and can be
    indefinite shortly after.
    """

    s_mat: np.ndarray
    t_mat: np.ndarray
    tau: float


@dataclass(frozen=True)
class WignerGrid:
    q_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray  # indexed [i_q, i_p]

    def riemann_sum(self) -> float:
        dq = np.gradient(self.q_axis)
        dp = np.gradient(self.p_axis)
        return float(np.einsum("i,ij,j->", dq, self.values, dp))


def rotation(angle):
    """Stack of matrices ``[[cos, sin], [-sin, cos]]``; shape ``angle.shape + (2, 2)``."""
    angle = np.asarray(angle, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)


def initial_correlated_state(probe: ProbeSpec) -> GaussianState:
    """Pure state ``sigma = [[1, g], [g, 1 + g^2]] / 2`` centred at ``probe.d0``."""
    g = float(probe.gamma)
    return GaussianState(CovMatrix(0.5, 0.5 * g, 0.5 * (1.0 + g * g)), np.array(probe.d0))


# --------------------------------------------------------------------------
# channel matrices on a tau grid


@dataclass(frozen=True)
class ChannelCurve:
    """Drift and noise matrices on a grid of times.

    Attributes:
        tau: Nondecreasing times starting at 0, shape (n,).
        gamma_tilde: Accumulated damping at each time.
        s_mats: Drift matrices, shape (n, 2, 2).
        t_mats: Noise matrices, shape (n, 2, 2).
        inner: The rotating-frame noise integral ``int_0^tau R^T M R``,
            so that ``t_mats = R inner R^T``.
        mesh: Quadrature breakpoints; passing it back to :func:`channel_curve`
            reproduces the integration with identical nodes.
    """

    tau: np.ndarray
    gamma_tilde: np.ndarray
    s_mats: np.ndarray
    t_mats: np.ndarray
    inner: np.ndarray
    mesh: np.ndarray


def _noise_integrand(bath: BathSpec, acc: AccuracySpec):
    def f(t):
        cf = closed_form_coefficients(t, bath, acc, stable=True)
        c, s = np.cos(t / bath.x), np.sin(t / bath.x)
        # R^T M R for M = [[D, -P/2], [-P/2, 0]], R = [[c, s], [-s, c]]
        d, p = cf.delta, cf.pi
        y11 = c * c * d + c * s * p
        y12 = c * s * d - 0.5 * p * (c * c - s * s)
        y22 = s * s * d - c * s * p
        return np.stack([cf.gamma, y11, y12, y22], axis=1)

    return f


def _grid_from_zero(tau):
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if tau.ndim != 1:
        raise ValueError("tau must be one-dimensional")
    if np.any(tau < 0):
        raise ValueError("tau must be non-negative")
    if np.any(np.diff(tau) < 0):
        raise ValueError("tau must be nondecreasing")
    prepend = tau.size == 0 or tau[0] != 0.0
    grid = np.concatenate([[0.0], tau]) if prepend else tau
    return grid, int(prepend)


@functools.lru_cache(maxsize=256)
def _cached_curve(tau_bytes, bath, quad, acc, mesh_bytes):
    tau = np.frombuffer(tau_bytes, dtype=float)
    grid, skip = _grid_from_zero(tau)
    f = _noise_integrand(bath, acc)
    if mesh_bytes is None:
        res = cumulative_integral(f, grid, quad)
        vals, mesh = res.values, res.mesh
    else:
        mesh = np.frombuffer(mesh_bytes, dtype=float)
        vals = integrate_on_mesh(f, grid, mesh)
    vals = vals[skip:]
    gt = 2.0 * vals[:, 0]
    inner = np.empty((tau.size, 2, 2))
    inner[:, 0, 0] = vals[:, 1]
    inner[:, 0, 1] = inner[:, 1, 0] = vals[:, 2]
    inner[:, 1, 1] = vals[:, 3]
    rot = rotation(tau / bath.x)
    s_mats = np.exp(-0.5 * gt)[:, None, None] * rot
    t_mats = rot @ inner @ np.swapaxes(rot, -1, -2)
    t_mats = 0.5 * (t_mats + np.swapaxes(t_mats, -1, -2))
    curve = ChannelCurve(tau.copy(), gt, s_mats, t_mats, inner, np.asarray(mesh).copy())
    for arr in (curve.tau, curve.gamma_tilde, curve.s_mats, curve.t_mats, curve.inner, curve.mesh):
        arr.setflags(write=False)
    return curve


def channel_curve(tau, bath: BathSpec, quad: QuadSpec = DEFAULT_QUAD,
                  acc: AccuracySpec = DEFAULT_ACCURACY, mesh=None) -> ChannelCurve:
    """Compute ``S`` and ``T`` at every point of a nondecreasing tau array.

    One cumulative integral covers the whole grid, so coefficient evaluations
    are shared between output times. Results are memoised per process.

    Args:
        tau: Nondecreasing non-negative times.
        bath: Bath parameters.
        quad: Quadrature tolerances (ignored when ``mesh`` is given).
        acc: Special-function accuracy.
        mesh: Optional fixed breakpoints from an earlier curve. The mesh must
            contain 0 and every point of ``tau``.
    """
    tau = np.ascontiguousarray(np.atleast_1d(np.asarray(tau, dtype=float)))
    mesh_bytes = None if mesh is None else np.ascontiguousarray(mesh, dtype=float).tobytes()
    return _cached_curve(tau.tobytes(), bath, quad, acc, mesh_bytes)


def channel_matrices(tau: float, bath: BathSpec, quad: QuadSpec = DEFAULT_QUAD,
                     acc: AccuracySpec = DEFAULT_ACCURACY) -> ChannelMatrices:
    curve = channel_curve([tau], bath, quad, acc)
    return ChannelMatrices(np.array(curve.s_mats[0]), np.array(curve.t_mats[0]), float(tau))


def drift_matrix(tau: float, bath: BathSpec, quad: QuadSpec = DEFAULT_QUAD,
                 acc: AccuracySpec = DEFAULT_ACCURACY) -> np.ndarray:
    """``S(tau) = exp(-Gamma_tilde / 2) R(tau)``."""
    return np.array(channel_curve([tau], bath, quad, acc).s_mats[0])


def noise_matrix(tau: float, bath: BathSpec, quad: QuadSpec = DEFAULT_QUAD,
                 acc: AccuracySpec = DEFAULT_ACCURACY):
    """Leading-order noise matrix ``T(tau)`` as a 2x2 array.

    ``T`` need not be positive definite (``T(0) = 0`` and ``M`` is indefinite),
    so it is returned as an array rather than a :class:`CovMatrix`.
    """
    return np.array(channel_curve([tau], bath, quad, acc).t_mats[0])


def evolve_cov(sigma0, curve: ChannelCurve) -> np.ndarray:
    """``S sigma0 S^T + T`` at every time of ``curve``; shape (n, 2, 2)."""
    sigma0 = np.asarray(sigma0, dtype=float)
    s = curve.s_mats
    return s @ sigma0 @ np.swapaxes(s, -1, -2) + curve.t_mats


def _check_physical(sigma, tau):
    det = sigma[..., 0, 0] * sigma[..., 1, 1] - sigma[..., 0, 1] * sigma[..., 1, 0]
    bad = det < 0.25 * (1.0 - PHYSICALITY_TOL)
    if np.any(bad):
        i = int(np.argmax(bad))
        warnings.warn(
            f"det(sigma) = {np.ravel(det)[i]:.6g} < 1/4 at tau = {np.ravel(tau)[i]:.6g}; "
            "weak-coupling truncation is unphysical here",
            PhysicalityWarning,
            stacklevel=3,
        )


def evolve(state: GaussianState, tau: float, bath: BathSpec, quad: QuadSpec = DEFAULT_QUAD,
           acc: AccuracySpec = DEFAULT_ACCURACY) -> GaussianState:
    """Apply the channel for time ``tau``.

    Warns with :class:`PhysicalityWarning` when the result violates the
    uncertainty bound by more than ``PHYSICALITY_TOL``; the state is never
    clamped.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    curve = channel_curve([tau], bath, quad, acc)
    sigma = evolve_cov(state.sigma.as_array(), curve)[0]
    _check_physical(sigma, np.array([tau]))
    d = curve.s_mats[0] @ state.d
    return GaussianState(CovMatrix.from_array(sigma), d)


def purity_from_cov(sigma):
    """``1 / (2 sqrt(det sigma))`` for one matrix or a stack of them."""
    sigma = np.asarray(sigma, dtype=float)
    det = sigma[..., 0, 0] * sigma[..., 1, 1] - sigma[..., 0, 1] * sigma[..., 1, 0]
    if np.any(det <= 0):
        raise StateDomainError("purity requires det(sigma) > 0")
    mu = 0.5 / np.sqrt(det)
    return float(mu) if mu.ndim == 0 else mu


def purity(state: GaussianState) -> float:
    return purity_from_cov(state.sigma.as_array())


def squeezed_cov(r: float, phi: float) -> CovMatrix:
    """Covariance of squeezed vacuum with squeezing ``r`` at angle ``phi``."""
    if r < 0:
        raise ValueError("r must be non-negative")
    ch, sh = np.cosh(2 * r), np.sinh(2 * r)
    return CovMatrix(0.5 * (ch - sh * np.cos(phi)), 0.5 * sh * np.sin(phi), 0.5 * (ch + sh * np.cos(phi)))


def free_evolution_cov(t_over_tau0: float) -> CovMatrix:
    """Free-particle spreading of vacuum after ``u = t / tau0``."""
    u = float(t_over_tau0)
    return CovMatrix(0.5 * (1.0 + u * u), 0.5 * u, 0.5)


def wigner_grid(state: GaussianState, q_axis, p_axis) -> WignerGrid:
    """Sample the Gaussian Wigner function on the product grid ``q_axis x p_axis``."""
    q_axis = np.asarray(q_axis, dtype=float)
    p_axis = np.asarray(p_axis, dtype=float)
    for name, ax in (("q_axis", q_axis), ("p_axis", p_axis)):
        if ax.ndim != 1 or ax.size < 2 or np.any(np.diff(ax) <= 0):
            raise ValueError(f"{name} must be strictly increasing with at least two points")
    sigma = state.sigma.as_array()
    det = state.sigma.det
    if not det > 0:
        raise StateDomainError("Wigner function needs det(sigma) > 0")
    inv = np.array([[sigma[1, 1], -sigma[0, 1]], [-sigma[1, 0], sigma[0, 0]]]) / det
    dq = q_axis[:, None] - state.d[0]
    dp = p_axis[None, :] - state.d[1]
    quad_form = inv[0, 0] * dq * dq + 2 * inv[0, 1] * dq * dp + inv[1, 1] * dp * dp
    values = np.exp(-0.5 * quad_form) / (2 * np.pi * np.sqrt(det))
    return WignerGrid(q_axis, p_axis, values)


# --------------------------------------------------------------------------
# reference dynamics


def moment_ode_oracle(sigma0, tau, bath: BathSpec, rtol: float = 1e-11, atol: float = 1e-13,
                      acc: AccuracySpec = DEFAULT_ACCURACY) -> np.ndarray:
    """Integrate the covariance equations of motion directly.

    Solves ``dsigma/dt = A sigma + sigma A^T - 2 Gamma sigma + M`` with
    ``A = [[0, 1], [-1, 0]] / x`` by an eighth-order Runge-Kutta method. This
    is the generator of the untruncated channel, so it differs from
    :func:`evolve_cov` by the dropped higher-order noise terms.

    Returns:
        Array of shape (len(tau), 2, 2).
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    sigma0 = np.asarray(sigma0, dtype=float)
    gen = np.array([[0.0, 1.0], [-1.0, 0.0]]) / bath.x

    def rhs(t, y):
        s = y.reshape(2, 2)
        cf = closed_form_coefficients(t, bath, acc, stable=True)
        m = np.array([[cf.delta[0], -0.5 * cf.pi[0]], [-0.5 * cf.pi[0], 0.0]])
        return (gen @ s + s @ gen.T - 2.0 * cf.gamma[0] * s + m).ravel()

    sol = solve_ivp(rhs, (0.0, float(tau.max())), sigma0.ravel(), t_eval=tau,
                    method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"moment ODE integration failed: {sol.message}")
    return sol.y.T.reshape(-1, 2, 2)
