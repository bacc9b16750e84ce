"""Quantum Fisher information of the evolved probe.

For a one-mode Gaussian state with purity ``mu``,

    F = Tr[(sigma^-1 d sigma)^2] / (2 (1 + mu^2))
        + 2 (d mu)^2 / (1 - mu^4)
        + 2 (d d)^T sigma^-1 (d d)

where ``d`` denotes the derivative with respect to the estimated parameter.
The derivative in ``gamma`` is propagated exactly through the linear channel.
Derivatives in temperature and ``x`` are central differences evaluated on a
frozen quadrature mesh so that adaptive refinement cannot leak into the
quotient. Writing ``sigma = R (exp(-Gamma_tilde) sigma0 + X) R^T``, only the
integrals ``Gamma_tilde`` and ``X`` are differenced; the rotation ``R`` by
``tau / x`` is differentiated exactly. Differencing ``sigma`` as a whole would
subtract two O(1) matrices whose difference is far smaller, which at short
times leaves nothing but rounding error.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import (
    ProbeSpec,
    StateDomainError,
    channel_curve,
    evolve_cov,
    initial_correlated_state,
    rotation,
)
from .coeffs import BathSpec
from .quadrature import DEFAULT_QUAD, QuadSpec
from .specfun import DEFAULT_ACCURACY, AccuracySpec

__all__ = [
    "EstimationTarget",
    "FdSpec",
    "QfiResult",
    "QfiCurve",
    "SingularPurityError",
    "ReferenceZeroError",
    "FdDomainError",
    "PURE_TOL",
    "PURE_DMU_TOL",
    "partial_sigma",
    "partial_sigma_curve",
    "qfi",
    "qfi_curve",
    "qcrb",
    "snl_gain",
    "snl_gain_curve",
    "fd_step_change",
]

# 0/0 guard on the purity term
PURE_TOL = 1e-10
PURE_DMU_TOL = 1e-14


class EstimationTarget(str, enum.Enum):
    TEMPERATURE = "Temperature"
    WITNESS_X = "WitnessX"
    CORRELATION_GAMMA = "CorrelationGamma"


class SingularPurityError(ArithmeticError):
    """Pure state whose purity still moves with the parameter (divergent term)."""


class ReferenceZeroError(ZeroDivisionError):
    """The uncorrelated-probe reference QFI vanishes."""


class FdDomainError(ValueError):
    """A finite-difference stencil point leaves the parameter's domain."""


@dataclass(frozen=True)
class FdSpec:
    """Central-difference step ``h = max(rel_step * |theta|, min_step)``."""

    rel_step: float = 1e-5
    min_step: float = 1e-10

    def __post_init__(self):
        if not 0 < self.rel_step <= 1e-2:
            raise ValueError(f"rel_step must lie in (0, 1e-2], got {self.rel_step!r}")
        if not self.min_step > 0:
            raise ValueError(f"min_step must be positive, got {self.min_step!r}")

    def step(self, theta: float) -> float:
        return max(self.rel_step * abs(theta), self.min_step)

    def halved(self) -> "FdSpec":
        return FdSpec(0.5 * self.rel_step, 0.5 * self.min_step)


DEFAULT_FD = FdSpec()


@dataclass(frozen=True)
class QfiResult:
    f_value: float
    term_cov: float
    term_purity: float
    term_disp: float
    mu: float
    tau: float


@dataclass(frozen=True)
class QfiCurve:
    """QFI terms on a tau grid; every field is an array of the grid's length."""

    tau: np.ndarray
    f_value: np.ndarray
    term_cov: np.ndarray
    term_purity: np.ndarray
    term_disp: np.ndarray
    mu: np.ndarray

    def at(self, i: int) -> QfiResult:
        return QfiResult(*(float(getattr(self, k)[i]) for k in
                           ("f_value", "term_cov", "term_purity", "term_disp", "mu", "tau")))


# --------------------------------------------------------------------------
# derivatives


def _stencil_baths(target, bath, fd):
    if target is EstimationTarget.TEMPERATURE:
        theta, name = bath.theta_T, "theta_T"
    else:
        theta, name = bath.x, "x"
    h = fd.step(theta)
    if not theta - h > 0:
        raise FdDomainError(f"{name} - h = {theta - h!r} leaves the domain {name} > 0")
    return bath.with_(**{name: theta + h}), bath.with_(**{name: theta - h}), h


_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _state_and_derivatives(target, probe, bath, tau, fd, quad, acc, analytic_gamma=True):
    """Return (sigma, dsigma, d, dd), each stacked over tau."""
    target = EstimationTarget(target)
    state = initial_correlated_state(probe)
    sigma0 = state.sigma.as_array()
    base = channel_curve(tau, bath, quad, acc)
    sigma = evolve_cov(sigma0, base)
    d = base.s_mats @ state.d

    if target is EstimationTarget.CORRELATION_GAMMA:
        if analytic_gamma:
            g = float(probe.gamma)
            dsig0 = 0.5 * np.array([[0.0, 1.0], [1.0, 2.0 * g]])
            dsigma = base.s_mats @ dsig0 @ np.swapaxes(base.s_mats, -1, -2)
        else:
            # gamma is O(1) and may be zero: floor its scale at 1
            h = fd.step(max(abs(probe.gamma), 1.0))
            plus = initial_correlated_state(ProbeSpec(probe.gamma + h, probe.d0)).sigma.as_array()
            minus = initial_correlated_state(ProbeSpec(probe.gamma - h, probe.d0)).sigma.as_array()
            dsigma = (evolve_cov(plus, base) - evolve_cov(minus, base)) / (2 * h)
        return sigma, dsigma, d, np.zeros_like(d)

    bath_p, bath_m, h = _stencil_baths(target, bath, fd)
    # the stencil reuses the base mesh: identical nodes on both sides
    cp = channel_curve(tau, bath_p, quad, acc, mesh=base.mesh)
    cm = channel_curve(tau, bath_m, quad, acc, mesh=base.mesh)
    d_gt = (cp.gamma_tilde - cm.gamma_tilde) / (2 * h)
    d_inner = (cp.inner - cm.inner) / (2 * h)
    if target is EstimationTarget.WITNESS_X:
        d_angle = -tau / bath.x**2
    else:
        d_angle = np.zeros_like(tau)

    damp = np.exp(-base.gamma_tilde)[:, None, None]
    frame = damp * sigma0 + base.inner
    d_frame = -d_gt[:, None, None] * damp * sigma0 + d_inner
    rot = rotation(tau / bath.x)
    # dR/dangle = R J
    spin = _J @ frame
    d_frame = d_frame + d_angle[:, None, None] * (spin + np.swapaxes(spin, -1, -2))
    dsigma = rot @ d_frame @ np.swapaxes(rot, -1, -2)

    rd0 = rot @ state.d
    dd = np.exp(-0.5 * base.gamma_tilde)[:, None] * (
        -0.5 * d_gt[:, None] * rd0 + d_angle[:, None] * (rot @ (_J @ state.d))
    )
    return sigma, dsigma, d, dd


def partial_sigma_curve(target, probe: ProbeSpec, bath: BathSpec, tau, fd: FdSpec = DEFAULT_FD,
                        quad: QuadSpec = DEFAULT_QUAD, acc: AccuracySpec = DEFAULT_ACCURACY,
                        analytic: bool = True) -> np.ndarray:
    """Derivative of the evolved covariance at every tau; shape (n, 2, 2).

    ``analytic`` only affects the ``CorrelationGamma`` target, where ``False``
    selects a central difference in ``gamma`` instead of exact propagation.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    return _state_and_derivatives(target, probe, bath, tau, fd, quad, acc, analytic)[1]


def partial_sigma(target, probe: ProbeSpec, bath: BathSpec, tau: float, fd: FdSpec = DEFAULT_FD,
                  quad: QuadSpec = DEFAULT_QUAD, acc: AccuracySpec = DEFAULT_ACCURACY,
                  analytic: bool = True) -> np.ndarray:
    """Derivative of ``sigma(tau)`` with respect to the target parameter."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return partial_sigma_curve(target, probe, bath, [tau], fd, quad, acc, analytic)[0]


# --------------------------------------------------------------------------
# Fisher information


def _inv2(m):
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    if np.any(det <= 0):
        raise StateDomainError("QFI requires det(sigma) > 0")
    inv = np.empty_like(m)
    inv[..., 0, 0] = m[..., 1, 1]
    inv[..., 1, 1] = m[..., 0, 0]
    inv[..., 0, 1] = -m[..., 0, 1]
    inv[..., 1, 0] = -m[..., 1, 0]
    return inv / det[..., None, None], det


def _qfi_terms(sigma, dsigma, d, dd):
    inv, det = _inv2(sigma)
    a = inv @ dsigma
    tr_a = np.trace(a, axis1=-2, axis2=-1)
    tr_a2 = np.einsum("nij,nji->n", a, a)
    mu = 0.5 / np.sqrt(det)
    dmu = -0.5 * mu * tr_a
    term_cov = tr_a2 / (2.0 * (1.0 + mu**2))
    one_minus = 1.0 - mu**4
    pure = one_minus < PURE_TOL
    divergent = pure & (dmu**2 >= PURE_DMU_TOL)
    if np.any(divergent):
        i = int(np.argmax(divergent))
        raise SingularPurityError(
            f"purity term diverges: 1 - mu^4 = {one_minus[i]:.3g}, (d mu)^2 = {dmu[i]**2:.3g}"
        )
    safe = np.where(pure, 1.0, one_minus)
    term_purity = np.where(pure, 0.0, 2.0 * dmu**2 / safe)
    term_disp = 2.0 * np.einsum("ni,nij,nj->n", dd, inv, dd)
    f_value = term_cov + term_purity + term_disp
    return f_value, term_cov, term_purity, term_disp, mu


def qfi_curve(target, probe: ProbeSpec, bath: BathSpec, tau, fd: FdSpec = DEFAULT_FD,
              quad: QuadSpec = DEFAULT_QUAD, acc: AccuracySpec = DEFAULT_ACCURACY) -> QfiCurve:
    """QFI for the target parameter on a nondecreasing tau grid."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    sigma, dsigma, d, dd = _state_and_derivatives(target, probe, bath, tau, fd, quad, acc)
    return QfiCurve(tau, *_qfi_terms(sigma, dsigma, d, dd))


def qfi(target, probe: ProbeSpec, bath: BathSpec, tau: float, fd: FdSpec = DEFAULT_FD,
        quad: QuadSpec = DEFAULT_QUAD, acc: AccuracySpec = DEFAULT_ACCURACY) -> QfiResult:
    """QFI at a single time."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return qfi_curve(target, probe, bath, [tau], fd, quad, acc).at(0)


def qcrb(f_value: float, n_trials: int = 1) -> float:
    """Cramer-Rao bound ``1 / sqrt(n F)`` on the standard deviation."""
    if not f_value > 0:
        raise ValueError(f"QCRB needs a positive Fisher information, got {f_value!r}")
    if int(n_trials) != n_trials or n_trials < 1:
        raise ValueError(f"n_trials must be a positive integer, got {n_trials!r}")
    return 1.0 / np.sqrt(n_trials * f_value)


def snl_gain_curve(target, gamma: float, bath: BathSpec, tau, fd: FdSpec = DEFAULT_FD,
                   quad: QuadSpec = DEFAULT_QUAD, acc: AccuracySpec = DEFAULT_ACCURACY) -> np.ndarray:
    """``F(gamma) / F(0)`` on a tau grid.

    Raises:
        ReferenceZeroError: Where ``F(gamma = 0) < 1e-30``.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    ref = qfi_curve(target, ProbeSpec(0.0), bath, tau, fd, quad, acc).f_value
    if np.any(ref < 1e-30):
        i = int(np.argmax(ref < 1e-30))
        raise ReferenceZeroError(f"reference QFI {ref[i]:.3g} vanishes at tau = {tau[i]}")
    if gamma == 0:
        return np.ones_like(ref)
    return qfi_curve(target, ProbeSpec(gamma), bath, tau, fd, quad, acc).f_value / ref


def snl_gain(target, gamma: float, bath: BathSpec, tau: float, fd: FdSpec = DEFAULT_FD,
             quad: QuadSpec = DEFAULT_QUAD, acc: AccuracySpec = DEFAULT_ACCURACY) -> float:
    """Gain over the shot-noise limit, ``F(gamma) / F(0)`` at one time."""
    return float(snl_gain_curve(target, gamma, bath, [tau], fd, quad, acc)[0])


def fd_step_change(target, probe: ProbeSpec, bath: BathSpec, tau, fd: FdSpec = DEFAULT_FD,
                   quad: QuadSpec = DEFAULT_QUAD, acc: AccuracySpec = DEFAULT_ACCURACY) -> np.ndarray:
    """Relative change of the QFI when the step is halved (step validation).

    Small values confirm that the step sits on the plateau between
    truncation and rounding error.
    """
    full = qfi_curve(target, probe, bath, tau, fd, quad, acc).f_value
    half = qfi_curve(target, probe, bath, tau, fd.halved(), quad, acc).f_value
    scale = np.maximum(np.abs(full), np.finfo(float).tiny)
    return np.abs(half - full) / scale
