"""Sources, emitter networks, virtual detector grids and zero-photon generators.

A virtual detector with parameter ``z`` has efficiency ``eta = 1 - 1/z``.
Physical detectors have ``0 <= eta <= 1``; the Fourier grids used for
reconstruction place ``1/z`` on roots of unity, which makes ``eta`` complex.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .liouville import (
    HilbertSpace,
    TimeDependentGenerator,
    embed_operator,
    lindbladian,
    projector,
    sandwich_superop,
    sigma_minus,
    sigma_x,
)
from .pulses import PulseShape, square_pulse

__all__ = [
    "SourceSpec",
    "two_level_source",
    "vacuum_source",
    "EmitterNetwork",
    "VirtualDetectorConfig",
    "VirtualGrid",
    "effective_efficiency_matrix",
    "build_zpg",
    "fourier_grid",
    "threshold_corner_grid",
    "custom_grid",
    "balanced_splitter",
]


@dataclass(frozen=True)
class SourceSpec:
    """One emitter.

    Parameters
    ----------
    dim : int
        Local Hilbert-space dimension.
    hamiltonian_terms : sequence of (operator, coefficient)
        ``H(t) = sum coeff(t) * op``. A coefficient is a real number or a
        callable of time returning a real number.
    dissipation_channels : sequence of (operator, rate)
        Unmonitored Lindblad channels (dephasing, non-radiative decay, ...).
    collection_op, collection_rate : operator, float
        Operator ``c`` coupled to the collected mode at rate ``gamma``. A rate
        of zero makes the source an uncorrelated vacuum input.
    initial_state : density matrix
    breakpoints : times where a Hamiltonian coefficient is discontinuous.
    """

    dim: int
    hamiltonian_terms: tuple = ()
    dissipation_channels: tuple = ()
    collection_op: np.ndarray | None = None
    collection_rate: float = 0.0
    initial_state: np.ndarray | None = None
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self):
        d = int(self.dim)
        if d < 1:
            raise ValueError("source dimension must be >= 1")
        object.__setattr__(self, "hamiltonian_terms", tuple(self.hamiltonian_terms))
        object.__setattr__(self, "dissipation_channels", tuple(self.dissipation_channels))
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        c = np.zeros((d, d), complex) if self.collection_op is None else np.asarray(self.collection_op, complex)
        if c.shape != (d, d):
            raise ValueError(f"collection operator has shape {c.shape}, expected {(d, d)}")
        object.__setattr__(self, "collection_op", c)
        if self.collection_rate < 0:
            raise ValueError(f"collection rate must be >= 0, got {self.collection_rate}")
        rho = projector(0, d) if self.initial_state is None else np.asarray(self.initial_state, complex)
        if rho.shape != (d, d):
            raise ValueError(f"initial state has shape {rho.shape}, expected {(d, d)}")
        if not np.allclose(rho, rho.conj().T, atol=1e-10, rtol=0):
            raise ValueError("initial state is not Hermitian")
        if abs(np.trace(rho) - 1) > 1e-10:
            raise ValueError(f"initial state has trace {np.trace(rho).real}")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("initial state is not positive semidefinite")
        object.__setattr__(self, "initial_state", rho)
        for op, rate in self.dissipation_channels:
            if rate < 0:
                raise ValueError(f"negative dissipation rate {rate}")


class _Drive:
    """Coefficient ``factor * Omega(t) * trig(detuning * t)``."""

    def __init__(self, pulse: PulseShape, factor: float, detuning: float = 0.0, trig: Callable = math.cos):
        self.pulse = pulse
        self.factor = factor
        self.detuning = detuning
        self.trig = trig

    def __call__(self, t: float) -> float:
        omega = self.pulse(t)
        if omega == 0.0:
            return 0.0
        if self.detuning == 0.0:
            return self.factor * omega * self.trig(0.0)
        return self.factor * omega * self.trig(self.detuning * t)

    def constant_on(self, a: float, b: float) -> float | None:
        omega = self.pulse.constant_on(a, b)
        if omega is None:
            return None
        if omega == 0.0:
            return 0.0
        if self.detuning:
            return None
        return self.factor * omega * self.trig(0.0)


def two_level_source(
    gamma: float = 1.0,
    pulse: PulseShape | None = None,
    *,
    theta: float | None = None,
    tau: float | None = None,
    t_start: float = 0.0,
    detuning: float = 0.0,
    dephasing: float = 0.0,
    initial: str | np.ndarray = "g",
) -> SourceSpec:
    """Two-level emitter decaying into the collected mode at rate ``gamma``.

    The drive ``Omega(t)/2 (sigma e^{i detuning t} + h.c.)`` is resonant with
    the emitter, whose transition sits at ``detuning`` from the common
    reference frame shared by all sources of a network. ``dephasing`` adds the
    pure-dephasing channel ``dephasing * D[|e><e|]``.
    """
    if pulse is None and theta is not None:
        pulse = square_pulse(theta, tau, t_start)
    terms = []
    if detuning:
        terms.append((projector(1), float(detuning)))
    breakpoints: tuple[float, ...] = ()
    if pulse is not None:
        breakpoints = pulse.breakpoints
        terms.append((sigma_x(), _Drive(pulse, 0.5, detuning, math.cos)))
        if detuning:
            # i(sigma - sigma^dagger) is Hermitian
            sy = 1j * (sigma_minus() - sigma_minus().conj().T)
            terms.append((sy, _Drive(pulse, 0.5, detuning, math.sin)))
    channels = []
    if dephasing:
        channels.append((projector(1), float(dephasing)))
    if isinstance(initial, str):
        if initial not in ("g", "e"):
            raise ValueError(f"initial must be 'g', 'e' or a density matrix, got {initial!r}")
        rho0 = projector(0 if initial == "g" else 1)
    else:
        rho0 = np.asarray(initial, complex)
    return SourceSpec(
        dim=2,
        hamiltonian_terms=tuple(terms),
        dissipation_channels=tuple(channels),
        collection_op=sigma_minus(),
        collection_rate=float(gamma),
        initial_state=rho0,
        breakpoints=breakpoints,
    )


def vacuum_source() -> SourceSpec:
    """One-dimensional placeholder that injects vacuum into its input port."""
    return SourceSpec(dim=1, collection_rate=0.0)


def balanced_splitter() -> np.ndarray:
    """``[[1, 1], [1, -1]] / sqrt(2)``."""
    return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True)
class EmitterNetwork:
    """``M`` sources feeding an ``M x M`` linear-optical unitary.

    Output mode ``j`` is ``d_j = sum_i U[j, i] a_i`` and is monitored by
    detector ``j``.
    """

    sources: tuple[SourceSpec, ...]
    unitary: np.ndarray | None = None

    def __post_init__(self):
        sources = tuple(self.sources)
        if not sources:
            raise ValueError("a network needs at least one source")
        object.__setattr__(self, "sources", sources)
        m = len(sources)
        U = np.eye(m, dtype=complex) if self.unitary is None else np.asarray(self.unitary, complex)
        if U.shape != (m, m):
            raise ValueError(f"unitary has shape {U.shape}, expected {(m, m)}")
        if not np.allclose(U.conj().T @ U, np.eye(m), atol=1e-10, rtol=0):
            raise ValueError("circuit matrix is not unitary")
        object.__setattr__(self, "unitary", U)

    @property
    def n_modes(self) -> int:
        return len(self.sources)

    @cached_property
    def space(self) -> HilbertSpace:
        return HilbertSpace(tuple(s.dim for s in self.sources))

    @cached_property
    def joint_initial_state(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for s in self.sources:
            out = np.kron(out, s.initial_state)
        return out

    @cached_property
    def lindbladian(self) -> TimeDependentGenerator:
        return lindbladian(self.sources, self.space)

    @cached_property
    def collection_operators(self) -> tuple[np.ndarray, ...]:
        """Embedded ``sqrt(gamma_i) c_i`` for every source."""
        return tuple(
            np.sqrt(s.collection_rate) * embed_operator(s.collection_op, i, self.space)
            for i, s in enumerate(self.sources)
        )

    @cached_property
    def _jump_blocks(self) -> dict[tuple[int, int], np.ndarray]:
        # (i, j) -> rho |-> sqrt(g_i g_j) c_j rho c_i^dagger
        ops = self.collection_operators
        blocks = {}
        for i, j in itertools.product(range(self.n_modes), repeat=2):
            if self.sources[i].collection_rate > 0 and self.sources[j].collection_rate > 0:
                blocks[i, j] = sandwich_superop(ops[j], ops[i])
        return blocks

    @property
    def gamma_min(self) -> float:
        rates = [s.collection_rate for s in self.sources if s.collection_rate > 0]
        return min(rates) if rates else 1.0

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return self.lindbladian.breakpoints


@dataclass(frozen=True)
class VirtualDetectorConfig:
    """Virtual parameters ``z`` and efficiencies ``eta = 1 - 1/z`` of all detectors.

    ``z = inf`` is the lossless limit and maps exactly to ``eta = 1``.
    """

    z: tuple[complex, ...]
    eta: tuple[complex, ...]

    @classmethod
    def from_z(cls, z: Sequence[complex]) -> "VirtualDetectorConfig":
        zs, etas = [], []
        for zj in z:
            zj = complex(zj)
            if zj == 0:
                raise ValueError("z = 0 is not an admissible virtual parameter")
            if cmath.isinf(zj):
                zs.append(complex(math.inf))
                etas.append(1.0 + 0j)
            else:
                zs.append(zj)
                etas.append(1.0 - 1.0 / zj)
        return cls(tuple(zs), tuple(etas))

    @classmethod
    def from_eta(cls, eta: Sequence[complex]) -> "VirtualDetectorConfig":
        zs, etas = [], []
        for ej in eta:
            ej = complex(ej)
            etas.append(ej)
            zs.append(complex(math.inf) if ej == 1 else 1.0 / (1.0 - ej))
        return cls(tuple(zs), tuple(etas))

    @classmethod
    def from_inverse_z(cls, zinv: Sequence[complex]) -> "VirtualDetectorConfig":
        zs, etas = [], []
        for w in zinv:
            w = complex(w)
            etas.append(1.0 - w)
            zs.append(complex(math.inf) if w == 0 else 1.0 / w)
        return cls(tuple(zs), tuple(etas))

    @property
    def n_modes(self) -> int:
        return len(self.eta)


@dataclass(frozen=True)
class VirtualGrid:
    """Ordered set of virtual configurations.

    ``indices[c]`` is the multi-index of config ``c``: the frequency vector
    ``(k_1, ..., k_M)`` for Fourier grids, the loss bit-vector ``L`` for
    threshold corners.
    """

    kind: str
    truncations: tuple[int, ...]
    configs: tuple[VirtualDetectorConfig, ...]
    indices: tuple[tuple[int, ...], ...] = field(default=())

    @property
    def n_modes(self) -> int:
        return self.configs[0].n_modes

    @property
    def shape(self) -> tuple[int, ...]:
        return self.truncations

    def __len__(self) -> int:
        return len(self.configs)

    def conjugate_partner(self, c: int) -> int | None:
        """Index of the config whose ``z`` is the complex conjugate of config ``c``."""
        if self.kind == "threshold_corners":
            return c
        if self.kind != "fourier":
            return None
        k = self.indices[c]
        partner = tuple((-kj) % nj for kj, nj in zip(k, self.truncations))
        return int(np.ravel_multi_index(partner, self.truncations))


def _root_of_unity(k: int, n: int) -> complex:
    """``exp(2 pi i k / n)`` with exact values on the real and imaginary axes."""
    k %= n
    if (4 * k) % n == 0:
        return (1, 1j, -1, -1j)[(4 * k) // n]
    return cmath.exp(2j * math.pi * k / n)


def fourier_grid(truncations: Sequence[int]) -> VirtualGrid:
    """Tensor grid with ``1/z_j = exp(2 pi i k_j / N_j)``, row-major in ``k``."""
    truncations = tuple(int(n) for n in truncations)
    if not truncations or any(n < 1 for n in truncations):
        raise ValueError(f"truncations must be >= 1, got {truncations}")
    indices = tuple(itertools.product(*(range(n) for n in truncations)))
    configs = tuple(
        VirtualDetectorConfig.from_inverse_z([_root_of_unity(kj, nj) for kj, nj in zip(k, truncations)])
        for k in indices
    )
    return VirtualGrid("fourier", truncations, configs, indices)


def threshold_corner_grid(n_modes: int) -> VirtualGrid:
    """The ``2**M`` corners ``eta_i = 1 - L_i``, ordered by ``L`` read as a binary number."""
    if n_modes < 1:
        raise ValueError("threshold grid needs at least one detector")
    indices = tuple(itertools.product((0, 1), repeat=n_modes))
    configs = tuple(VirtualDetectorConfig.from_eta([1 - L for L in bits]) for bits in indices)
    return VirtualGrid("threshold_corners", (2,) * n_modes, configs, indices)


def custom_grid(configs: Sequence[VirtualDetectorConfig]) -> VirtualGrid:
    """Arbitrary list of configurations, indexed by position."""
    configs = tuple(configs)
    if not configs:
        raise ValueError("custom grid needs at least one config")
    if len({c.n_modes for c in configs}) != 1:
        raise ValueError("all configs of a grid must have the same number of detectors")
    return VirtualGrid("custom", (), configs, tuple((i,) for i in range(len(configs))))


def effective_efficiency_matrix(network: EmitterNetwork, config: VirtualDetectorConfig) -> np.ndarray:
    """``U^dagger diag(eta) U``."""
    if config.n_modes != network.n_modes:
        raise ValueError(f"config has {config.n_modes} detectors, network has {network.n_modes}")
    U = network.unitary
    return U.conj().T @ np.diag(np.asarray(config.eta, dtype=complex)) @ U


def build_zpg(network: EmitterNetwork, config: VirtualDetectorConfig) -> TimeDependentGenerator:
    """Zero-photon generator ``L - sum_ij eta'_ij sqrt(g_i g_j) (rho -> c_j rho c_i^dagger)``."""
    eta_p = effective_efficiency_matrix(network, config)
    L = network.lindbladian
    n = L.constant.shape[0]
    delta = np.zeros((n, n), dtype=complex)
    for (i, j), block in network._jump_blocks.items():
        if eta_p[i, j] != 0:
            delta -= eta_p[i, j] * block
    return L.shifted(delta)
