"""Mean photon number and g2 from zero-photon probabilities alone.

Both quantities are derivatives of p0 with respect to the detector
efficiency, evaluated here by finite differences with one Richardson step.
No photon-number distribution is computed.
"""

# %%
import math

import numpy as np

from zpgsim import EmitterNetwork, g2, mean_photon_number, photon_number_distribution, two_level_source

# %% An emitter prepared in |e> emits exactly one photon
ideal = EmitterNetwork((two_level_source(1.0, initial="e"),))
print("ideal: mu =", mean_photon_number(ideal), " g2 =", g2(ideal))

# %% Pulsed excitation: re-excitation during the pulse raises g2
for tau in (0.05, 0.2, 1.0):
    net = EmitterNetwork((two_level_source(1.0, theta=math.pi, tau=tau),))
    print(f"tau = {tau:4.2f}: mu = {mean_photon_number(net).value:.4f}, g2 = {g2(net).value:.4f}")

# %% Cross-check against moments of the full distribution
net = EmitterNetwork((two_level_source(1.0, theta=10 * math.pi, tau=2.0),))
p = photon_number_distribution(net, 14).probs
n = np.arange(p.size)
mu = n @ p
print(f"finite difference g2 = {g2(net).value:.6f}, from p(n): {(n * (n - 1)) @ p / mu**2:.6f}")
