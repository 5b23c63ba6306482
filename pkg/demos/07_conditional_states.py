"""Source states conditioned on the number of detected photons.

Inverting the final states (not only their traces) gives the unnormalized
state rho^(n) left behind after n detections during a partially elapsed pulse.
"""

# %%
import math

import numpy as np

from zpgsim import (
    EmitterNetwork,
    PropagationSettings,
    batch_generating_solutions,
    fourier_grid,
    invert_states,
    two_level_source,
)

net = EmitterNetwork((two_level_source(1.0, theta=3 * math.pi, tau=2.0),))
# stop halfway through the pulse
table = batch_generating_solutions(net, fourier_grid([10]), PropagationSettings(t1=1.0), want_states=True)
states = invert_states(table)

# %%
for n in range(5):
    rho = states[n]
    p = np.trace(rho).real
    print(f"n = {n}: p = {p:.5f}, excited population given n = {rho[1, 1].real / p:.4f}")
print("hermiticity deviation:", states.hermiticity_deviation)
