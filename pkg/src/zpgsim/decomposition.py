"""Reconstruction of photon-counting statistics from generating tables."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .liouville import vec
from .dynamics import (
    GeneratingTable,
    PropagationSettings,
    batch_generating_solutions,
    zero_photon_probability,
)
from .zpg import (
    EmitterNetwork,
    SourceSpec,
    balanced_splitter,
    fourier_grid,
    threshold_corner_grid,
)

__all__ = [
    "AliasingError",
    "PhotonNumberDistribution",
    "ConditionalStateSet",
    "ThresholdDistribution",
    "Estimate",
    "invert_distribution",
    "invert_states",
    "threshold_distribution",
    "threshold_from_numbers",
    "photon_number_distribution",
    "mean_photon_number",
    "g2",
    "hom_coincidence",
    "hom_reference_ratio",
    "parity",
    "tvd",
]

logger = logging.getLogger(__name__)

ALIASING_RESIDUE = 1e-4
CLAMP_LIMIT = 1e-9


class AliasingError(RuntimeError):
    """Imaginary residue of an inversion is too large to be roundoff."""


@dataclass
class PhotonNumberDistribution:
    """``probs[n_1, ..., n_M]`` for ``0 <= n_j < N_j``.

    ``residue`` is the largest imaginary part dropped by the inversion plus
    the magnitude of any clamped negative probability. ``tail_mass`` is the
    total probability on outcomes where some ``n_j`` sits at its truncation
    edge ``N_j - 1``; a large value signals aliasing.
    """

    truncations: tuple[int, ...]
    probs: np.ndarray
    residue: float = 0.0
    tail_mass: float = 0.0

    def __getitem__(self, n) -> float:
        if isinstance(n, (int, np.integer)):
            n = (int(n),)
        n = tuple(n)
        if any(nj >= Nj for nj, Nj in zip(n, self.truncations)):
            return 0.0
        return float(self.probs[n])

    @property
    def n_modes(self) -> int:
        return len(self.truncations)

    def total(self) -> float:
        return float(self.probs.sum())

    def to_dict(self, cutoff: float = 0.0) -> dict[tuple[int, ...], float]:
        return {
            tuple(int(i) for i in n): float(p)
            for n, p in np.ndenumerate(self.probs)
            if abs(p) > cutoff
        }

    def mean(self) -> np.ndarray:
        """Mean photon number at each detector."""
        out = np.zeros(self.n_modes)
        for axis, N in enumerate(self.truncations):
            marginal = self.probs.sum(axis=tuple(a for a in range(self.n_modes) if a != axis))
            out[axis] = np.arange(N) @ marginal
        return out

    def total_counts(self) -> np.ndarray:
        """Distribution of the total photon number ``sum_j n_j``."""
        n_max = sum(N - 1 for N in self.truncations)
        out = np.zeros(n_max + 1)
        for n, p in np.ndenumerate(self.probs):
            out[sum(n)] += p
        return out


@dataclass
class ConditionalStateSet:
    """Unnormalized source states ``rho^(n)`` (and optionally maps) per outcome."""

    truncations: tuple[int, ...]
    states: np.ndarray
    maps: np.ndarray | None = None
    residue: float = 0.0
    hermiticity_deviation: float = 0.0

    def __getitem__(self, n) -> np.ndarray:
        if isinstance(n, (int, np.integer)):
            n = (int(n),)
        return self.states[tuple(n)]

    def probabilities(self) -> np.ndarray:
        return np.trace(self.states, axis1=-2, axis2=-1).real


@dataclass
class ThresholdDistribution:
    """``probs[m_1, ..., m_M]`` over click patterns ``m in {0, 1}^M``."""

    probs: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.probs.ndim

    @property
    def brightness(self) -> float:
        if self.n_modes != 1:
            raise ValueError("brightness is defined for a single detector")
        return float(self.probs[1])

    def __getitem__(self, m) -> float:
        if isinstance(m, (int, np.integer)):
            m = (int(m),)
        return float(self.probs[tuple(m)])

    def to_dict(self) -> dict[tuple[int, ...], float]:
        return {tuple(int(i) for i in m): float(p) for m, p in np.ndenumerate(self.probs)}


@dataclass(frozen=True)
class Estimate:
    """Finite-difference estimate with a step-halving error gauge."""

    value: float
    error: float

    def __float__(self) -> float:
        return self.value


def _require_fourier(table: GeneratingTable) -> None:
    if table.grid.kind != "fourier":
        raise ValueError(f"inversion needs a fourier grid, got {table.grid.kind!r}")


def _edge_mask(truncations: tuple[int, ...]) -> np.ndarray:
    mask = np.zeros(truncations, dtype=bool)
    for axis, N in enumerate(truncations):
        if N > 1:
            idx = [slice(None)] * len(truncations)
            idx[axis] = N - 1
            mask[tuple(idx)] = True
    return mask


def _inverse_dft(values: np.ndarray, n_axes: int) -> np.ndarray:
    # traces are sum_n p(n) exp(+2 pi i k.n / N); the forward FFT kernel
    # exp(-2 pi i k.n / N) with 1/D normalization inverts that.
    axes = tuple(range(n_axes))
    return np.fft.fftn(values, axes=axes) / np.prod(values.shape[:n_axes])


def invert_distribution(table: GeneratingTable) -> PhotonNumberDistribution:
    """Photon-number distribution from generating traces on a Fourier grid."""
    _require_fourier(table)
    shape = table.grid.truncations
    raw = _inverse_dft(table.traces.reshape(shape), len(shape))
    residue = float(np.abs(raw.imag).max())
    if residue > ALIASING_RESIDUE:
        raise AliasingError(f"imaginary residue {residue:.3g} exceeds {ALIASING_RESIDUE:g}")
    probs = raw.real.copy()
    small_neg = (probs < 0) & (probs >= -CLAMP_LIMIT)
    if small_neg.any():
        residue += float(-probs[small_neg].min())
        probs[small_neg] = 0.0
    tail = float(probs[_edge_mask(shape)].sum())
    return PhotonNumberDistribution(shape, probs, residue, tail)


def invert_states(table: GeneratingTable) -> ConditionalStateSet:
    """Conditional states ``rho^(n)`` (and maps ``P^(n)`` when present)."""
    _require_fourier(table)
    if table.final_states is None and table.final_maps is None:
        raise ValueError("table carries neither states nor maps; rerun with want_states or want_maps")
    shape = table.grid.truncations
    n_axes = len(shape)
    maps = None
    if table.final_maps is not None:
        maps = _inverse_dft(table.final_maps.reshape(shape + table.final_maps.shape[1:]), n_axes)
    if table.final_states is not None:
        raw = _inverse_dft(table.final_states.reshape(shape + table.final_states.shape[1:]), n_axes)
    else:
        d = table.initial_state.shape[0]
        flat = maps @ vec(table.initial_state)
        raw = flat.reshape(shape + (d, d), order="C")
        raw = np.swapaxes(raw, -1, -2)  # undo column stacking
    herm = 0.5 * (raw + np.swapaxes(raw.conj(), -1, -2))
    deviation = float(np.abs(raw - herm).max())
    residue = float(np.abs(np.trace(raw, axis1=-2, axis2=-1).imag).max())
    if residue > ALIASING_RESIDUE:
        raise AliasingError(f"imaginary trace residue {residue:.3g} exceeds {ALIASING_RESIDUE:g}")
    return ConditionalStateSet(shape, herm, maps, residue, deviation)


def threshold_distribution(corner_table: GeneratingTable) -> ThresholdDistribution:
    """Click-pattern distribution from the ``2**M`` loss corners.

    ``probs(m) = sum_L trace(L) prod_i (-1)^(m_i + L_i) (1 - L_i)^(1 - m_i)``
    with ``0**0 = 1``, where ``trace(L)`` is the generating trace at
    ``eta = 1 - L``.
    """
    grid = corner_table.grid
    if grid.kind != "threshold_corners":
        raise ValueError(f"threshold inversion needs a threshold_corners grid, got {grid.kind!r}")
    M = grid.n_modes
    if len(grid) != 2**M:
        raise ValueError(f"expected {2**M} corners, got {len(grid)}")
    traces = {L: corner_table.traces[c].real for c, L in enumerate(grid.indices)}
    probs = np.zeros((2,) * M)
    for m in itertools.product((0, 1), repeat=M):
        total = 0.0
        for L, tr in traces.items():
            coeff = 1
            for mi, Li in zip(m, L):
                if mi == 0 and Li == 1:
                    coeff = 0
                    break
                coeff *= (-1) ** (mi + Li)
            if coeff:
                total += coeff * tr
        probs[m] = total
    return ThresholdDistribution(probs)


def threshold_from_numbers(dist: PhotonNumberDistribution) -> ThresholdDistribution:
    """Coarse-grain a photon-number distribution into click patterns."""
    probs = np.zeros((2,) * dist.n_modes)
    for n, p in np.ndenumerate(dist.probs):
        probs[tuple(int(nj > 0) for nj in n)] += p
    return ThresholdDistribution(probs)


def photon_number_distribution(
    network: EmitterNetwork,
    truncations=8,
    settings: PropagationSettings | None = None,
    *,
    auto: bool = False,
    tail_tol: float = 1e-9,
    max_truncation: int = 64,
) -> PhotonNumberDistribution:
    """Solve and invert in one call.

    With ``auto=True`` every ``N_j`` is doubled until the tail mass drops
    below ``tail_tol`` (or a truncation would exceed ``max_truncation``).
    """
    truncations = tuple(np.broadcast_to(np.asarray(truncations, dtype=int), (network.n_modes,)))
    while True:
        table = batch_generating_solutions(network, fourier_grid(truncations), settings)
        dist = invert_distribution(table)
        if not auto or dist.tail_mass < tail_tol:
            return dist
        bigger = tuple(2 * N for N in truncations)
        if max(bigger) > max_truncation:
            logger.warning("tail mass %.3g above tolerance at the truncation cap", dist.tail_mass)
            return dist
        truncations = bigger


def mean_photon_number(
    network: EmitterNetwork,
    eta_real: float = 1.0,
    eta_step: float = 1e-3,
    settings: PropagationSettings | None = None,
) -> Estimate:
    """Mean detected photon number from zero-photon probabilities alone.

    Uses ``mu = (1 - p0(h * eta)) / h`` at ``h = eta_step`` and ``h/2``
    combined by one Richardson step. All detectors share the efficiency.
    """
    if not 0 < eta_step <= 1e-2:
        raise ValueError(f"eta_step must lie in (0, 1e-2], got {eta_step}")

    def raw(h):
        return (1.0 - zero_photon_probability(network, h * eta_real, settings)) / h

    coarse, fine = raw(eta_step), raw(eta_step / 2)
    return Estimate(2 * fine - coarse, abs(fine - coarse))


def _g2_raw(p_half: float, p_full: float, eta: float) -> tuple[float, float]:
    mu_half = (1 - p_half) / (eta / 2)
    mu_full = (1 - p_full) / eta
    mu = 2 * mu_half - mu_full
    second = 4 * (1 - 2 * p_half + p_full) / eta**2
    return second, mu


def g2(
    network: EmitterNetwork,
    eta_step: float = 1e-2,
    settings: PropagationSettings | None = None,
) -> Estimate:
    """Integrated intensity autocorrelation from zero-photon probabilities.

    Evaluates ``4 (1 - 2 p0(eta/2) + p0(eta)) / eta**2 / mu**2`` at
    ``eta = eta_step`` and ``eta_step / 2`` (three ZPG solves in total), with
    ``mu`` taken from the same solves, and Richardson-combines both.
    """
    if network.n_modes != 1:
        raise ValueError("g2 expects a single collected mode")
    if eta_step <= 0:
        raise ValueError("eta_step must be positive")
    p = {k: zero_photon_probability(network, eta_step / k, settings) for k in (1, 2, 4)}
    second_c, mu_c = _g2_raw(p[2], p[1], eta_step)
    second_f, mu_f = _g2_raw(p[4], p[2], eta_step / 2)
    mu = 2 * mu_f - mu_c
    if abs(mu) < 1e-12:
        raise ZeroDivisionError("mean photon number vanishes; g2 is undefined")
    coarse = second_c / mu**2
    fine = second_f / mu**2
    return Estimate(2 * fine - coarse, abs(fine - coarse))


def hom_network(source: SourceSpec, twin: SourceSpec | Mapping | None = None) -> EmitterNetwork:
    """Two sources on a balanced splitter; ``twin`` is a source or field overrides."""
    if twin is None:
        twin = source
    elif isinstance(twin, Mapping):
        twin = replace(source, **twin)
    return EmitterNetwork((source, twin), balanced_splitter())


def hom_coincidence(
    source: SourceSpec,
    twin_modifier: SourceSpec | Mapping | None = None,
    settings: PropagationSettings | None = None,
) -> float:
    """Coincidence probability ``beta^(1,1)`` after Hong-Ou-Mandel interference."""
    net = hom_network(source, twin_modifier)
    table = batch_generating_solutions(net, threshold_corner_grid(2), settings)
    return threshold_distribution(table)[1, 1]


def hom_reference_ratio(
    source: SourceSpec,
    distinguishable_twin: SourceSpec | Mapping,
    settings: PropagationSettings | None = None,
) -> float:
    """``beta^(1,1)`` of identical twins over that of a distinguishable reference."""
    same = hom_coincidence(source, None, settings)
    ref = hom_coincidence(source, distinguishable_twin, settings)
    return same / ref


def parity(network: EmitterNetwork, settings: PropagationSettings | None = None) -> float:
    """``sum_n (-1)^n p(n)``, i.e. the generating trace at ``z = -1``."""
    if network.n_modes != 1:
        raise ValueError("parity expects a single detector")
    return float(np.real(zero_photon_probability(network, 2.0, settings)))


def _as_mapping(dist) -> Mapping:
    if isinstance(dist, (PhotonNumberDistribution, ThresholdDistribution)):
        return dist.to_dict()
    return dist


def tvd(P, Q) -> float:
    """Total variation distance ``sum |P - Q| / 2`` over the union of supports."""
    P, Q = _as_mapping(P), _as_mapping(Q)
    keys = set(P) | set(Q)
    return 0.5 * float(sum(abs(P.get(k, 0.0) - Q.get(k, 0.0)) for k in keys))
