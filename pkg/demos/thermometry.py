# %% [markdown]
# # Thermometry with correlated probes
#
# The quantum Fisher information ``F_T`` bounds how well a probe that has
# touched the bath can estimate its temperature. We compare correlated
# probes with the uncorrelated one, whose information sets the shot-noise
# reference.
#
# Run: ``python demos/thermometry.py``

# %%
import numpy as np

from qbm import BathSpec, EstimationTarget, ProbeSpec, Regime, qcrb, qfi_curve
from qbm.metrology import snl_gain_curve
from qbm.scenario import gain_window

T = EstimationTarget.TEMPERATURE
tau = np.linspace(0.0, 5.0, 201)

# %% [markdown]
# ## Scaled information ``theta_T^2 F_T``
#
# The product is independent of the temperature unit.

# %%
for theta, regime in ((1000.0, Regime.HIGH_T), (10.0, Regime.LOW_T)):
    bath = BathSpec(x=0.15, theta_T=theta, regime=regime)
    for g in (0.0, 2.0):
        f = qfi_curve(T, ProbeSpec(g), bath, tau).f_value
        scaled = theta**2 * f
        print(f"{regime.value:5s} gamma={g}: max theta^2 F_T = {scaled.max():.4e} at tau = {tau[scaled.argmax()]:.3f}")

# %% [markdown]
# ## Gain over the uncorrelated probe
#
# ``F(gamma) / F(0) > 1`` marks times where correlations help. In the
# nearly Markovian bath the window is narrower at high temperature.

# %%
for theta, regime in ((1000.0, Regime.HIGH_T), (10.0, Regime.LOW_T)):
    bath = BathSpec(x=5.0, theta_T=theta, regime=regime)
    gain = snl_gain_curve(T, 2.0, bath, tau[1:])
    print(f"x=5 {regime.value:5s}: max gain {gain.max():.3f}, window length {gain_window(tau[1:], gain):.3f}")

# %% [markdown]
# ## Cramer-Rao bound
#
# With ``n`` repetitions the temperature error is at least ``1/sqrt(n F)``.

# %%
bath = BathSpec(x=0.15, theta_T=10.0, regime=Regime.LOW_T)
res = qfi_curve(T, ProbeSpec(2.0), bath, tau)
i = int(np.argmax(res.f_value))
for n in (1, 100, 10000):
    print(f"n={n:<6d} delta theta_T >= {qcrb(res.f_value[i], n):.4g} (at tau = {tau[i]:.3f})")
