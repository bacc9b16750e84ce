import numpy as np
import pytest
from scipy import integrate

from qbm.coeffs import (
    REALNESS_TOL,
    BathSpec,
    CoeffKind,
    IndeterminateError,
    Regime,
    closed_form_coefficients,
    coeff_oracle,
    delta_coeff,
    gamma_coeff,
    gamma_tilde,
    gamma_tilde_curve,
    nonmarkovianity,
    pi_coeff,
    quantifier,
)

HIGH = BathSpec(x=0.15, alpha=0.1, theta_T=1000.0, regime=Regime.HIGH_T)
LOW = BathSpec(x=0.5, alpha=0.1, theta_T=10.0, regime=Regime.LOW_T)
COEFFS = (gamma_coeff, delta_coeff, pi_coeff)


def rel(a, b, floor=1e-10):
    return abs(a - b) / max(abs(b), floor)


@pytest.mark.parametrize("fn", COEFFS)
@pytest.mark.parametrize("bath", [HIGH, LOW])
def test_zero_at_origin(fn, bath):
    assert fn(0.0, bath) == 0.0


@pytest.mark.parametrize("kind", list(CoeffKind))
def test_oracle_zero_at_origin(kind):
    assert coeff_oracle(kind, 0.0, HIGH) == (0.0, 0.0)


def test_gamma_against_oracle():
    bath = BathSpec(x=0.15, alpha=0.1)
    ref, _ = coeff_oracle(CoeffKind.GAMMA, 1.0, bath)
    assert rel(gamma_coeff(1.0, bath), ref) < 1e-6


def test_delta_lowt_against_oracle():
    ref, _ = coeff_oracle(CoeffKind.DELTA, 2.0, LOW)
    assert rel(delta_coeff(2.0, LOW), ref) < 1e-6


def test_pi_hight_against_oracle():
    ref, _ = coeff_oracle(CoeffKind.PI, 1.0, HIGH)
    assert rel(pi_coeff(1.0, HIGH), ref) < 1e-6


def test_oracle_gamma_ignores_temperature():
    a, _ = coeff_oracle(CoeffKind.GAMMA, 0.7, HIGH.with_(theta_T=10.0))
    b, _ = coeff_oracle(CoeffKind.GAMMA, 0.7, HIGH.with_(theta_T=1000.0))
    assert a == b


@pytest.mark.parametrize("fn", COEFFS)
@pytest.mark.parametrize("bath", [HIGH, LOW])
def test_alpha_squared_scaling(fn, bath):
    for tau in (0.3, 1.7, 4.2):
        assert rel(fn(tau, bath.with_(alpha=0.2)), 4 * fn(tau, bath)) < 1e-13


@pytest.mark.parametrize("fn", (delta_coeff, pi_coeff))
def test_hight_linear_in_temperature(fn):
    for tau in (0.5, 2.0, 6.0):
        assert rel(fn(tau, HIGH.with_(theta_T=2000.0)), 2 * fn(tau, HIGH)) < 1e-13


def test_gamma_independent_of_temperature_and_regime():
    for tau in (0.5, 3.0):
        vals = {gamma_coeff(tau, HIGH.with_(theta_T=t, regime=r))
                for t in (10.0, 1000.0) for r in Regime}
        assert max(vals) - min(vals) <= 1e-15 * max(abs(v) for v in vals)


@pytest.mark.parametrize("x", [0.15, 0.5, 1.0, 5.0])
@pytest.mark.parametrize("theta", [10.0, 1000.0])
@pytest.mark.parametrize("regime", list(Regime))
def test_printed_forms_real_and_match_stable(x, theta, regime):
    bath = BathSpec(x=x, theta_T=theta, regime=regime)
    tau = np.linspace(0.0, 10.0, 41)
    printed = closed_form_coefficients(tau, bath)
    stable = closed_form_coefficients(tau, bath, stable=True)
    scale = np.maximum(1.0, np.abs(printed.delta))
    assert np.all(printed.residual <= REALNESS_TOL * scale)
    assert np.all(stable.residual == 0.0)
    for p, s in zip(printed[:3], stable[:3]):
        assert np.all(np.abs(p - s) <= np.maximum(1e-6 * np.abs(s), 1e-10))


def test_stable_forms_survive_cold_bath():
    # exp(B) with B ~ 73 destroys the printed forms; the stable ones stay on the oracle
    bath = BathSpec(x=0.15, theta_T=0.1, regime=Regime.LOW_T)
    ref, _ = coeff_oracle(CoeffKind.PI, 1.5, bath)
    assert rel(pi_coeff(1.5, bath), ref) < 1e-6


def test_gamma_tilde_against_simpson():
    bath = BathSpec(x=0.15, alpha=0.1)
    t = np.linspace(0.0, 3.0, 6001)
    ref = 2 * integrate.simpson(closed_form_coefficients(t, bath, stable=True).gamma, x=t)
    assert abs(gamma_tilde(3.0, bath) - ref) < 1e-8


def test_gamma_tilde_basics():
    assert gamma_tilde(0.0, HIGH) == 0.0
    assert rel(gamma_tilde(2.5, HIGH.with_(alpha=0.3)), 9 * gamma_tilde(2.5, HIGH)) < 1e-12
    curve = gamma_tilde_curve(np.array([0.0, 1.0, 2.5]), HIGH)
    assert curve[0] == 0.0 and rel(curve[-1], gamma_tilde(2.5, HIGH)) < 1e-12
    with pytest.raises(ValueError):
        gamma_tilde(-1.0, HIGH)


def test_quantifier_synthetic():
    assert quantifier(0.0, 0.3, 0.0) == 0.0
    assert quantifier(0.0, -0.1, 0.0) == 1.0
    with pytest.raises(IndeterminateError):
        quantifier(0.0, 0.0, 0.0)


def test_nonmarkovianity_rejects_origin():
    with pytest.raises(ValueError):
        nonmarkovianity(0.0, HIGH)


def test_nonmarkovianity_echoes_coefficients():
    res = nonmarkovianity(1.2, HIGH)
    c = res.coefficients
    assert res.tau == c.tau == 1.2
    assert 0.0 <= res.n_value <= 1.0
    assert res.n_value == quantifier(c.gamma, c.delta, c.pi)


def test_memory_raises_quantifier():
    tau = np.linspace(0.05, 5.0, 100)
    peak = {x: max(nonmarkovianity(t, HIGH.with_(x=x)).n_value for t in tau) for x in (0.15, 5.0)}
    assert peak[0.15] > peak[5.0]


@pytest.mark.parametrize("regime", list(Regime))
def test_markovian_limit(regime):
    bath = BathSpec(x=100.0, theta_T=1000.0 if regime is Regime.HIGH_T else 10.0, regime=regime)
    for t in np.linspace(0.5, 5.0, 10):
        assert nonmarkovianity(t, bath).n_value < 0.02


def test_bath_validation():
    with pytest.raises(ValueError, match="x, alpha"):
        BathSpec(x=0.0, alpha=-1.0)
    with pytest.raises(ValueError, match="Ohmic"):
        gamma_coeff(1.0, HIGH.with_(s=0.5))
