"""Two-photon interference of two emitters on a balanced beam splitter.

Threshold detectors only need the four loss corners of the virtual
efficiency space, so the coincidence probability costs four solves.
"""

# %%
import math

from zpgsim import hom_coincidence, hom_reference_ratio, two_level_source

# %% Shorter pulses give cleaner single photons and a deeper dip
for tau in (0.5, 0.2, 0.1, 0.05, 0.02):
    src = two_level_source(1.0, theta=math.pi, tau=tau)
    print(f"tau = {tau:4.2f}: coincidence = {hom_coincidence(src):.5f}")

# %% A twin with a detuned transition makes the photons distinguishable
src = two_level_source(1.0, theta=math.pi, tau=0.05)
twin = two_level_source(1.0, theta=math.pi, tau=0.05, detuning=20.0)
print(f"distinguishable twin: coincidence = {hom_coincidence(src, twin):.4f}")
print(f"identical / distinguishable ratio = {hom_reference_ratio(src, twin):.4f}")

# %% Pure dephasing degrades indistinguishability
for rate in (0.0, 0.1, 0.5):
    noisy = two_level_source(1.0, theta=math.pi, tau=0.05, dephasing=rate)
    print(f"dephasing {rate:.1f}: coincidence = {hom_coincidence(noisy):.4f}")
