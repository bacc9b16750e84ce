"""Time-dependent coefficients of the weak-coupling QBM master equation.

Units: hbar = k_B = omega_c = 1. Time is ``tau = omega_c t``, the probe
frequency is ``1/x`` and the coefficients carry units of omega_c. Only the
Ohmic spectral density ``J(w) = w exp(-w)`` is supported in closed form.

The diffusion coefficients use one of two approximations of the thermal
factor ``coth(w / 2 theta_T)``:

* ``HighT``: ``2 theta_T / w``
* ``LowT``:  ``1 + 2 exp(-w / theta_T)``
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .quadrature import DEFAULT_QUAD, QuadSpec, QuadratureError, cumulative_integral
from .specfun import (
    DEFAULT_ACCURACY,
    AccuracySpec,
    cosint_ci,
    expint_e1,
    expint_ei,
    sinhint_shi,
    sinint_si,
)

__all__ = [
    "Regime",
    "CoeffKind",
    "BathSpec",
    "ChannelCoefficients",
    "NmResult",
    "RealnessError",
    "IndeterminateError",
    "REALNESS_TOL",
    "closed_form_coefficients",
    "gamma_coeff",
    "delta_coeff",
    "pi_coeff",
    "coeff_oracle",
    "gamma_tilde",
    "gamma_tilde_curve",
    "channel_coefficients",
    "quantifier",
    "nonmarkovianity",
]

REALNESS_TOL = 1e-8


class Regime(str, enum.Enum):
    HIGH_T = "HighT"
    LOW_T = "LowT"


class CoeffKind(str, enum.Enum):
    GAMMA = "Gamma"
    DELTA = "Delta"
    PI = "Pi"


class RealnessError(ArithmeticError):
    """A closed form that must be real came out with a sizeable imaginary part."""


class IndeterminateError(ArithmeticError):
    """The non-Markovianity ratio is 0/0."""


@dataclass(frozen=True)
class BathSpec:
    """Bath and coupling parameters.

    Attributes:
        x: Witness parameter omega_c / omega_0.
        alpha: Dimensionless system-bath coupling.
        theta_T: Temperature ratio k_B T / (hbar omega_c).
        regime: Which thermal-factor approximation to use.
        s: Ohmic exponent; the closed forms require ``s == 1``.
    """

    x: float
    alpha: float = 0.1
    theta_T: float = 1000.0
    regime: Regime = Regime.HIGH_T
    s: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        bad = [name for name in ("x", "alpha", "theta_T") if not getattr(self, name) > 0]
        if bad:
            raise ValueError(f"BathSpec fields must be positive: {', '.join(bad)}")

    def with_(self, **changes) -> "BathSpec":
        return replace(self, **changes)


@dataclass(frozen=True)
class ChannelCoefficients:
    gamma: float
    delta: float
    pi: float
    gamma_tilde: float
    tau: float


@dataclass(frozen=True)
class NmResult:
    n_value: float
    tau: float
    coefficients: ChannelCoefficients


class ClosedForms(NamedTuple):
    """Closed-form coefficients on a tau array, with their imaginary residuals."""

    gamma: np.ndarray
    delta: np.ndarray
    pi: np.ndarray
    residual: np.ndarray


def _require_ohmic(bath: BathSpec):
    if bath.s != 1:
        raise ValueError(f"closed forms exist only for the Ohmic case s = 1, got s = {bath.s}")


def _args(re, im):
    # explicit construction keeps the sign of a zero imaginary part
    z = np.empty(np.broadcast(re, im).shape, dtype=complex)
    z.real = re
    z.imag = im
    return z


def closed_form_coefficients(tau, bath: BathSpec, acc: AccuracySpec = DEFAULT_ACCURACY,
                             stable: bool = False) -> ClosedForms:
    """Evaluate Gamma, Delta and Pi on an array of tau >= 0.

    The returned values are real parts; ``residual`` holds the largest
    imaginary part (relative to ``max(1, |value|)``) among the three.

    Args:
        tau: Non-negative times.
        bath: Bath parameters (Ohmic only).
        acc: Special-function accuracy.
        stable: Use the cancellation-free rearrangement in terms of ``E1``
            instead of the Ei/Ci/Si/Shi expressions as written. The printed
            LowT expressions multiply Ci/Si values of size ~exp(b/x) by
            cosh(b/x) and sinh(b/x), so for small ``x`` they lose up to
            ``2 b/x / ln 10`` digits; the rearranged form loses none and
            is what the dynamics use. Its ``residual`` is identically zero.
    """
    _require_ohmic(bath)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau < 0):
        raise ValueError("tau must be non-negative")
    if stable:
        return _stable_forms(tau, bath, acc)
    x = bath.x
    a = 1.0 / x
    a2 = bath.alpha**2
    at = a * tau

    e_p = expint_ei(_args(a, at), acc)
    e_m = expint_ei(_args(a, -at), acc)
    f_p = expint_ei(_args(-a, at), acc)
    f_m = expint_ei(_args(-a, -at), acc)
    ei_a = expint_ei(a, acc).real
    # real (principal-value) Ei on the negative axis
    ei_ma = expint_ei(-a, acc).real

    grow, decay = np.exp(a), np.exp(-a)
    sin_t, cos_t = np.sin(at), np.cos(at)
    odd = 1j * decay * (e_m - e_p) + grow * (2 * np.pi + 1j * f_p - 1j * f_m)
    real_axis = -decay * (e_m + e_p - 2 * ei_a)
    left_axis = grow * (f_p + f_m - 2 * ei_ma)

    gamma = a2 / (4 * x) * (odd - 4 * x * sin_t / (1 + tau**2))

    if bath.regime is Regime.HIGH_T:
        delta = a2 * bath.theta_T / 2 * odd
        pi = a2 * bath.theta_T / 2 * (real_axis + left_axis)
    else:
        b = 1.0 + 1.0 / bath.theta_T
        big = b / x
        z_m = _args(at, -big)
        z_p = _args(at, big)
        ci_m, ci_p = cosint_ci(z_m, acc), cosint_ci(z_p, acc)
        si_m, si_p = sinint_si(z_m, acc), sinint_si(z_p, acc)
        ch, sh = np.cosh(big), np.sinh(big)
        lorentz = 2 * a2 * tau / (tau**2 + b**2)

        delta = (
            a2 / (4 * x) * (4 * x * tau * cos_t / (1 + tau**2) + 1j * decay * (e_m - e_p)
                            - grow * (2 * np.pi + 1j * f_p - 1j * f_m))
            + lorentz * cos_t
            + a2 / x * ((1j * ci_m - 1j * ci_p - np.pi) * sh + ch * (si_m + si_p))
        )
        ci_axis = cosint_ci(complex(0.0, -big), acc) + cosint_ci(complex(0.0, big), acc)
        shi_b = sinhint_shi(big, acc)
        pi = (
            a2 / (4 * x) * (4 * x * tau * sin_t / (1 + tau**2) + real_axis - left_axis)
            + lorentz * sin_t
            + a2 / x * (ch * (ci_axis - ci_m - ci_p) + sh * (-2 * shi_b + 1j * si_m - 1j * si_p))
        )

    gamma, delta, pi = (np.asarray(v, dtype=complex) for v in (gamma, delta, pi))
    residual = np.max(
        [np.abs(v.imag) / np.maximum(1.0, np.abs(v.real)) for v in (gamma, delta, pi)],
        axis=0,
    )
    return ClosedForms(gamma.real, delta.real, pi.real, residual)


def _stable_forms(tau, bath, acc):
    # With p = a(1 + i tau): Ei(a(1 -+ i tau)) pair up as conjugates and
    # Ei(-a(1 -+ i tau)) = -E1(a(1 +- i tau)) + i pi, so every exp(+a) factor
    # multiplies an E1 of size exp(-a) and vice versa.
    x = bath.x
    a = 1.0 / x
    a2 = bath.alpha**2
    at = a * tau
    p = _args(a, at)
    ei_p = expint_ei(p, acc)
    e1_p = expint_e1(p, acc)
    e1_a = expint_e1(a, acc).real
    ei_a = expint_ei(a, acc).real
    grow, decay = np.exp(a), np.exp(-a)
    sin_t, cos_t = np.sin(at), np.cos(at)

    odd_e = 2 * decay * ei_p.imag
    odd_f = 2 * grow * e1_p.imag
    real_axis = -2 * decay * (ei_p.real - ei_a)
    left_axis = 2 * grow * (e1_a - e1_p.real)

    gamma = a2 / (4 * x) * (odd_e - odd_f - 4 * x * sin_t / (1 + tau**2))
    if bath.regime is Regime.HIGH_T:
        delta = a2 * bath.theta_T / 2 * (odd_e - odd_f)
        pi = a2 * bath.theta_T / 2 * (real_axis + left_axis)
    else:
        b = 1.0 + 1.0 / bath.theta_T
        big = b / x
        lorentz = 2 * a2 * tau / (tau**2 + b**2)
        # Ci, Si at (a tau +- i b/x) through E1(i z) (large) and E1(-i z) (small)
        big_e1 = expint_e1(_args(-big, at), acc)
        small_e1 = expint_e1(_args(big, -at), acc)
        up, down = np.exp(big), np.exp(-big)
        delta = (
            a2 / (4 * x) * (4 * x * tau * cos_t / (1 + tau**2) + odd_e + odd_f)
            + lorentz * cos_t
            + a2 / x * (down * (np.pi + big_e1.imag) - up * small_e1.imag)
        )
        axis = down * expint_ei(big, acc).real - up * expint_e1(big, acc).real
        pi = (
            a2 / (4 * x) * (4 * x * tau * sin_t / (1 + tau**2) + real_axis - left_axis)
            + lorentz * sin_t
            + a2 / x * (axis + down * big_e1.real + up * small_e1.real)
        )
    return ClosedForms(gamma, delta, pi, np.zeros_like(tau))


# beyond exp(20) the printed forms lose more digits than the realness check allows
_PRINTED_MAX_EXPONENT = 20.0


def _printed_is_conditioned(bath: BathSpec) -> bool:
    growth = 1.0 / bath.x
    if bath.regime is Regime.LOW_T:
        growth = max(growth, (1.0 + 1.0 / bath.theta_T) / bath.x)
    return growth <= _PRINTED_MAX_EXPONENT


def _scalar_coeff(kind: CoeffKind, tau, bath, acc):
    if _printed_is_conditioned(bath):
        printed = closed_form_coefficients(tau, bath, acc)
        if printed.residual[0] > REALNESS_TOL:
            raise RealnessError(
                f"imaginary residual {printed.residual[0]:.3g} at tau={tau}, bath={bath}"
            )
    forms = closed_form_coefficients(tau, bath, acc, stable=True)
    return float({CoeffKind.GAMMA: forms.gamma, CoeffKind.DELTA: forms.delta,
                  CoeffKind.PI: forms.pi}[kind][0])


def gamma_coeff(tau: float, bath: BathSpec, acc: AccuracySpec = DEFAULT_ACCURACY) -> float:
    """Damping coefficient Gamma(tau); independent of temperature."""
    return _scalar_coeff(CoeffKind.GAMMA, tau, bath, acc)


def delta_coeff(tau: float, bath: BathSpec, acc: AccuracySpec = DEFAULT_ACCURACY) -> float:
    """Normal-diffusion coefficient Delta(tau) in the bath's regime."""
    return _scalar_coeff(CoeffKind.DELTA, tau, bath, acc)


def pi_coeff(tau: float, bath: BathSpec, acc: AccuracySpec = DEFAULT_ACCURACY) -> float:
    """Anomalous-diffusion coefficient Pi(tau) in the bath's regime."""
    return _scalar_coeff(CoeffKind.PI, tau, bath, acc)


# --------------------------------------------------------------------------
# quadrature oracle


def _thermal_weight(bath: BathSpec):
    """J(w) * (2 N(w) + 1) with the regime's approximation, finite at w = 0."""
    if bath.regime is Regime.HIGH_T:
        return lambda w: 2.0 * bath.theta_T * np.exp(-w)
    return lambda w: w * np.exp(-w) * (1.0 + 2.0 * np.exp(-w / bath.theta_T))


def coeff_oracle(kind, tau: float, bath: BathSpec, quad: QuadSpec = DEFAULT_QUAD):
    """Evaluate a coefficient straight from its double-integral definition.

    Both integrals use QUADPACK (``scipy.integrate.quad``); the frequency
    integral is truncated at ``quad.omega_max``. This path shares no code with
    the closed forms.

    Returns:
        (value, abserr)

    Raises:
        QuadratureError: If QUADPACK reports failure to converge.
    """
    _require_ohmic(bath)
    kind = CoeffKind(kind)
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if tau == 0:
        return 0.0, 0.0
    w0 = 1.0 / bath.x
    wmax = quad.omega_max
    if kind is CoeffKind.GAMMA:
        weight = lambda w: w * np.exp(-w)  # noqa: E731
        bath_trig, sys_trig = np.sin, np.sin
    else:
        weight = _thermal_weight(bath)
        bath_trig = np.cos
        sys_trig = np.cos if kind is CoeffKind.DELTA else np.sin

    inner_err = [0.0]

    def checked(res, where):
        value, err = res[0], res[1]
        # QUADPACK's roundoff flag (ier=2) is harmless when the estimate is tight
        if len(res) > 3 and not (res[2].get("ier", 0) == 2
                                 and err <= 10 * max(quad.oracle_abs_tol, quad.oracle_rel_tol * abs(value))):
            raise QuadratureError(f"oracle {where} integral failed: {res[3]}")
        return value, err

    def inner(t):
        value, err = checked(
            integrate.quad(lambda w: weight(w) * bath_trig(w * t), 0.0, wmax,
                           epsabs=0.01 * quad.oracle_abs_tol, epsrel=0.01 * quad.oracle_rel_tol,
                           limit=400, full_output=1),
            f"inner (t={t})",
        )
        inner_err[0] = max(inner_err[0], err)
        return value * sys_trig(w0 * t)

    res = integrate.quad(inner, 0.0, tau, epsabs=quad.oracle_abs_tol, epsrel=quad.oracle_rel_tol,
                         limit=400, full_output=1)
    res = (*checked(res, "outer"),)
    value, err = res[0], res[1]
    a2 = bath.alpha**2
    return a2 * value, a2 * (err + tau * inner_err[0])


# --------------------------------------------------------------------------
# accumulated damping and the quantifier


def gamma_tilde_curve(tau, bath: BathSpec, quad: QuadSpec = DEFAULT_QUAD,
                      acc: AccuracySpec = DEFAULT_ACCURACY) -> np.ndarray:
    """``2 * int_0^tau Gamma`` at every point of a nondecreasing tau array."""
    tau = np.asarray(tau, dtype=float)
    grid = np.concatenate([[0.0], tau]) if tau.size == 0 or tau[0] != 0 else tau
    res = cumulative_integral(lambda t: closed_form_coefficients(t, bath, acc, stable=True).gamma,
                              grid, quad)
    out = 2.0 * res.values
    return out[-tau.size:] if tau.size else out[:0]


def gamma_tilde(tau: float, bath: BathSpec, quad: QuadSpec = DEFAULT_QUAD,
                acc: AccuracySpec = DEFAULT_ACCURACY) -> float:
    """Accumulated damping ``2 int_0^tau Gamma(t) dt``."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if tau == 0:
        return 0.0
    return float(gamma_tilde_curve(np.array([0.0, tau]), bath, quad, acc)[-1])


def channel_coefficients(tau: float, bath: BathSpec, acc: AccuracySpec = DEFAULT_ACCURACY,
                         quad: QuadSpec = DEFAULT_QUAD) -> ChannelCoefficients:
    return ChannelCoefficients(
        gamma=gamma_coeff(tau, bath, acc),
        delta=delta_coeff(tau, bath, acc),
        pi=pi_coeff(tau, bath, acc),
        gamma_tilde=gamma_tilde(tau, bath, quad, acc),
        tau=float(tau),
    )


def quantifier(gamma, delta, pi):
    """Divisibility-violation measure ``(1 - Delta / |(Delta, Gamma, Pi)|) / 2``.

    Works elementwise on arrays.

    Raises:
        IndeterminateError: If ``Delta**2 + Gamma**2 + Pi**2 < 1e-30``.
    """
    gamma, delta, pi = (np.asarray(v, dtype=float) for v in (gamma, delta, pi))
    norm2 = delta**2 + gamma**2 + pi**2
    if np.any(norm2 < 1e-30):
        raise IndeterminateError("Delta^2 + Gamma^2 + Pi^2 vanishes; quantifier is 0/0")
    n = 0.5 * (1.0 - delta / np.sqrt(norm2))
    n = np.clip(n, 0.0, 1.0)
    return float(n) if n.ndim == 0 else n


def nonmarkovianity(tau: float, bath: BathSpec, acc: AccuracySpec = DEFAULT_ACCURACY,
                    quad: QuadSpec = DEFAULT_QUAD) -> NmResult:
    """Non-Markovianity quantifier at one tau > 0."""
    if not tau > 0:
        raise ValueError("nonmarkovianity is undefined at tau = 0 (all coefficients vanish)")
    c = channel_coefficients(tau, bath, acc, quad)
    return NmResult(n_value=quantifier(c.gamma, c.delta, c.pi), tau=float(tau), coefficients=c)
