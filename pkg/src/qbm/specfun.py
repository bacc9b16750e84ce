"""Complex exponential, cosine, sine and hyperbolic-sine integrals.

Every function here is built on the entire function

    Ein(w) = sum_{k>=1} (-1)**(k+1) w**k / (k * k!) = int_0^w (1 - e^{-t}) / t dt,

which is evaluated by its Maclaurin series where that series is well
conditioned and through ``Ein(w) = E1(w) + Log(w) + euler_gamma`` elsewhere.
``E1`` comes from a continued fraction or, beyond ``r_switch``, from its
asymptotic expansion.

Branch conventions: ``Ei`` and ``Ci`` use the principal logarithm, so the cut
lies on the negative real axis. A point on the cut is read from the sign of
its imaginary zero, like :func:`cmath.log`: ``+0.0`` (the default for real
input) gives the limit from above, ``-0.0`` the limit from below.

All functions accept Python scalars or numpy arrays and are vectorised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AccuracySpec",
    "SpecialFunctionError",
    "DomainError",
    "ConvergenceError",
    "DEFAULT_ACCURACY",
    "expint_ei",
    "expint_e1",
    "cosint_ci",
    "sinint_si",
    "sinhint_shi",
    "ein",
]

EULER_GAMMA = 0.57721566490153286060651209008240243

# Ein series is used while the estimated loss exp(|w| + Re w) stays below ~e^6.
_SERIES_LOSS_EXPONENT = 6.0
_SERIES_RADIUS = 4.0
_TINY = 1e-300


class SpecialFunctionError(ArithmeticError):
    """Base class for special-function evaluation failures."""


class DomainError(SpecialFunctionError, ValueError):
    """Argument lies at a singularity of the function."""


class ConvergenceError(SpecialFunctionError):
    """No evaluation regime reached the requested accuracy."""


@dataclass(frozen=True)
class AccuracySpec:
    """Target accuracy for the special functions.

    Attributes:
        rel_tol: Target relative error, in ``(0, 1e-3]``.
        max_terms: Cap on series terms and continued-fraction levels.
        r_switch: Radius beyond which the asymptotic expansion of ``E1`` is
            tried before the continued fraction.
    """

    rel_tol: float = 1e-12
    max_terms: int = 500
    r_switch: float = 25.0

    def __post_init__(self):
        if not 0.0 < self.rel_tol <= 1e-3:
            raise ValueError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol!r}")
        if self.max_terms < 1:
            raise ValueError(f"max_terms must be >= 1, got {self.max_terms!r}")
        if self.r_switch <= 0:
            raise ValueError(f"r_switch must be positive, got {self.r_switch!r}")


DEFAULT_ACCURACY = AccuracySpec()


# --------------------------------------------------------------------------
# evaluation kernels (array in, array out, no region logic)


def _ein_series(w, acc):
    """Maclaurin series of Ein; returns (value, largest |term|)."""
    w = np.asarray(w, dtype=complex)
    term = w.copy()
    total = w.copy()
    biggest = np.abs(w)
    active = np.abs(w) > 0
    for k in range(2, acc.max_terms + 1):
        if not active.any():
            break
        term = np.where(active, -term * w / k, 0)
        contrib = term / k
        total = total + contrib
        mag = np.abs(contrib)
        biggest = np.maximum(biggest, mag)
        active &= mag > 0.25 * acc.rel_tol * np.abs(total)
    if active.any():
        raise ConvergenceError(
            f"Ein series did not converge in {acc.max_terms} terms "
            f"(|w| up to {np.abs(w[active]).max():.3g})"
        )
    return total, biggest


def _e1_continued_fraction(w, acc):
    """E1 by the modified Lentz method on its even continued fraction.

    Valid off the negative real axis; converges quickly for Re w > 0 and more
    slowly as arg w approaches +-pi.
    """
    w = np.asarray(w, dtype=complex)
    b = w + 1.0
    c = np.full_like(w, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(w.shape, dtype=bool)
    eps = 0.25 * acc.rel_tol
    for i in range(1, acc.max_terms + 1):
        if not active.any():
            break
        an = -float(i * i)
        b = b + 2.0
        d_new = an * d + b
        d_new = np.where(np.abs(d_new) < _TINY, _TINY, d_new)
        d = np.where(active, 1.0 / d_new, d)
        c_new = b + an / c
        c_new = np.where(np.abs(c_new) < _TINY, _TINY, c_new)
        c = np.where(active, c_new, c)
        delta = np.where(active, c * d, 1.0)
        h = h * delta
        active &= np.abs(delta - 1.0) > eps
    if active.any():
        raise ConvergenceError(
            f"E1 continued fraction did not converge in {acc.max_terms} levels "
            f"(w = {w[active].ravel()[0]!r})"
        )
    return h * np.exp(-w)


def _e1_asymptotic(w, acc):
    """Asymptotic expansion of E1 for large |w|, Re w >= 0.

    Returns (value, converged mask).  The series is cut at its smallest term;
    entries whose smallest term still exceeds rel_tol are flagged.
    """
    w = np.asarray(w, dtype=complex)
    term = np.ones_like(w)
    total = np.ones_like(w)
    active = np.ones(w.shape, dtype=bool)
    converged = np.zeros(w.shape, dtype=bool)
    eps = 0.25 * acc.rel_tol
    for k in range(1, acc.max_terms + 1):
        if not active.any():
            break
        nxt = -term * k / w
        growing = np.abs(nxt) >= np.abs(term)
        active &= ~growing
        term = np.where(active, nxt, term)
        total = np.where(active, total + term, total)
        done = active & (np.abs(term) <= eps * np.abs(total))
        converged |= done
        active &= ~done
    return np.exp(-w) / w * total, converged


# --------------------------------------------------------------------------
# region logic


def _use_series(w):
    aw = np.abs(w)
    return (aw <= _SERIES_RADIUS) | (aw + w.real <= _SERIES_LOSS_EXPONENT)


def _e1_far(w, acc):
    """E1 for points outside the series region."""
    out = np.empty(w.shape, dtype=complex)
    todo = np.ones(w.shape, dtype=bool)
    big = (np.abs(w) > acc.r_switch) & (w.real >= 0)
    if big.any():
        val, ok = _e1_asymptotic(w[big], acc)
        idx = np.flatnonzero(big)
        out.flat[idx[ok]] = val[ok]
        todo.flat[idx[ok]] = False
    if todo.any():
        out[todo] = _e1_continued_fraction(w[todo], acc)
    return out


def _ein_parts(w, acc):
    """Ein(w) split into a series part and an E1 part.

    Returns (value, series mask, largest intermediate magnitude).
    """
    w = np.asarray(w, dtype=complex)
    value = np.empty(w.shape, dtype=complex)
    scale = np.empty(w.shape, dtype=float)
    ser = _use_series(w)
    if ser.any():
        value[ser], scale[ser] = _ein_series(w[ser], acc)
    far = ~ser
    if far.any():
        wf = w[far]
        e1 = _e1_far(wf, acc)
        lg = np.log(wf)
        value[far] = e1 + lg + EULER_GAMMA
        scale[far] = np.maximum(np.abs(e1), np.abs(lg))
    return value, ser, scale


def _as_complex(z):
    arr = np.asarray(z)
    if not np.iscomplexobj(arr):
        # real input sits on the upper lip of any cut
        arr = arr.astype(float) + 0.0j
    return np.asarray(arr, dtype=complex)


def _finish(value, scale, scalar, full_output, method):
    if not np.all(np.isfinite(value)):
        raise SpecialFunctionError("non-finite result (argument too large)")
    if scalar:
        value = complex(value.reshape(()))
    if not full_output:
        return value
    mag = np.abs(value)
    cond = np.where(mag > 0, scale / np.where(mag > 0, mag, 1.0), np.inf)
    info = {
        "method": method,
        "cond": float(cond) if scalar else cond,
        "cancellation": bool(mag < 1e-8 * scale) if scalar else mag < 1e-8 * scale,
    }
    return value, info


def ein(w, acc: AccuracySpec = DEFAULT_ACCURACY):
    """Entire exponential integral ``Ein(w) = int_0^w (1 - exp(-t))/t dt``."""
    scalar = np.ndim(w) == 0
    value, _, _ = _ein_parts(_as_complex(w), acc)
    return complex(value.reshape(())) if scalar else value


def expint_ei(z, acc: AccuracySpec = DEFAULT_ACCURACY, full_output: bool = False):
    """Exponential integral ``Ei(z) = euler_gamma + Log z + sum z**k/(k k!)``.

    Args:
        z: Complex scalar or array, nonzero.
        acc: Accuracy target.
        full_output: If true, also return a dict with the evaluation method and
            an estimated condition number (largest intermediate / |result|).

    Returns:
        ``Ei(z)`` on the principal branch, with the same shape as ``z``.

    Raises:
        DomainError: If any ``z == 0``.
        ConvergenceError: If no regime reached ``acc.rel_tol``.
    """
    scalar = np.ndim(z) == 0
    z = _as_complex(z)
    if np.any(z == 0):
        raise DomainError("Ei has a logarithmic singularity at z = 0")
    w = -z
    value = np.empty(z.shape, dtype=complex)
    scale = np.empty(z.shape, dtype=float)
    ser = _use_series(w)
    if ser.any():
        s, big = _ein_series(w[ser], acc)
        lg = np.log(z[ser])
        value[ser] = EULER_GAMMA + lg - s
        scale[ser] = np.maximum(big, np.abs(lg))
    far = ~ser
    if far.any():
        zf = z[far]
        e1 = _e1_far(w[far], acc)
        # Ei(z) = -E1(-z) + i*pi*sgn(Im z) off the real axis
        value[far] = -e1 + 1j * np.pi * np.copysign(1.0, zf.imag)
        scale[far] = np.maximum(np.abs(e1), np.pi)
    return _finish(value, scale, scalar, full_output, "ei")


def expint_e1(w, acc: AccuracySpec = DEFAULT_ACCURACY, full_output: bool = False):
    """Exponential integral ``E1(w) = -euler_gamma - Log w + Ein(w)``.

    Principal branch, cut along the negative real axis (side chosen by the
    sign of a zero imaginary part).

    Raises:
        DomainError: If any ``w == 0``.
    """
    scalar = np.ndim(w) == 0
    w = _as_complex(w)
    if np.any(w == 0):
        raise DomainError("E1 has a logarithmic singularity at w = 0")
    value = np.empty(w.shape, dtype=complex)
    scale = np.empty(w.shape, dtype=float)
    # E1 ~ exp(-w) is a small difference of series terms once Re w > 1
    ser = _use_series(w) & (w.real <= 1.0)
    if ser.any():
        s, big = _ein_series(w[ser], acc)
        lg = np.log(w[ser])
        value[ser] = s - lg - EULER_GAMMA
        scale[ser] = np.maximum(big, np.abs(lg))
    far = ~ser
    if far.any():
        value[far] = _e1_far(w[far], acc)
        scale[far] = np.abs(value[far])
    return _finish(value, scale, scalar, full_output, "e1")


def cosint_ci(z, acc: AccuracySpec = DEFAULT_ACCURACY, full_output: bool = False):
    """Cosine integral ``Ci(z) = euler_gamma + Log z + int_0^z (cos u - 1)/u du``.

    Raises:
        DomainError: If any ``z == 0``.
    """
    scalar = np.ndim(z) == 0
    z = _as_complex(z)
    if np.any(z == 0):
        raise DomainError("Ci has a logarithmic singularity at z = 0")
    plus, _, sp = _ein_parts(1j * z, acc)
    minus, _, sm = _ein_parts(-1j * z, acc)
    lg = np.log(z)
    value = EULER_GAMMA + lg - 0.5 * (plus + minus)
    scale = np.maximum(np.maximum(sp, sm), np.abs(lg))
    return _finish(value, scale, scalar, full_output, "ci")


def sinint_si(z, acc: AccuracySpec = DEFAULT_ACCURACY, full_output: bool = False):
    """Sine integral ``Si(z) = int_0^z sin(u)/u du`` (entire)."""
    scalar = np.ndim(z) == 0
    z = _as_complex(z)
    plus, _, sp = _ein_parts(1j * z, acc)
    minus, _, sm = _ein_parts(-1j * z, acc)
    value = (plus - minus) / 2j
    return _finish(value, np.maximum(sp, sm), scalar, full_output, "si")


def sinhint_shi(z, acc: AccuracySpec = DEFAULT_ACCURACY, full_output: bool = False):
    """Hyperbolic sine integral ``Shi(z) = int_0^z sinh(u)/u du`` (entire)."""
    scalar = np.ndim(z) == 0
    z = _as_complex(z)
    plus, _, sp = _ein_parts(z, acc)
    minus, _, sm = _ein_parts(-z, acc)
    value = 0.5 * (plus - minus)
    return _finish(value, np.maximum(sp, sm), scalar, full_output, "shi")
