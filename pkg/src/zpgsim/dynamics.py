"""Time propagation of effective master equations over grids of virtual detectors."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import expm_multiply

from .liouville import TimeDependentGenerator, trace_row, unvec, vec
from .pulses import PulseShape, square_pulse
from .zpg import EmitterNetwork, VirtualDetectorConfig, VirtualGrid, build_zpg

__all__ = [
    "PulseShape",
    "square_pulse",
    "PropagationSettings",
    "GeneratingTable",
    "IntegrationError",
    "BatchError",
    "propagate",
    "batch_generating_solutions",
    "zero_photon_probability",
    "DEFAULT_TAIL_LIFETIMES",
]

logger = logging.getLogger(__name__)

# above this superoperator size, vectors are advanced with sparse
# exponential actions instead of dense exponentials
_SPARSE_ACTION_MIN_DIM = 256

# lifetimes integrated past the last drive discontinuity when t1 is not given;
# residual excited population ~ exp(-40) is far below double-precision noise
DEFAULT_TAIL_LIFETIMES = 40.0


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (t = {t:.6g})")
        self.t = t


class BatchError(RuntimeError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"virtual config {index} failed: {cause}")
        self.index = index
        self.cause = cause


@dataclass(frozen=True)
class PropagationSettings:
    """Integrator settings; times are in units of ``1/gamma``.

    Segments on which the generator is provably constant are propagated with
    a matrix exponential when ``exact_constant_segments`` is set; all other
    segments use the adaptive Runge-Kutta ``method``.

    ``t1=None`` is resolved per network to the last drive breakpoint plus
    ``tail_lifetimes / gamma_min``.
    """

    t0: float = 0.0
    t1: float | None = None
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = math.inf
    method: str = "DOP853"
    workers: int = 1
    conjugate_shortcut: bool = True
    exact_constant_segments: bool = True
    tail_lifetimes: float = DEFAULT_TAIL_LIFETIMES

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("integrator tolerances must be positive")
        if self.t1 is not None and self.t1 <= self.t0:
            raise ValueError(f"t1 = {self.t1} must exceed t0 = {self.t0}")
        if self.method not in ("DOP853", "RK45"):
            raise ValueError(f"unsupported stepper {self.method!r}; use an explicit RK of order >= 4")

    def resolve(self, network: EmitterNetwork) -> "PropagationSettings":
        if self.t1 is not None:
            return self
        last = max((b for b in network.breakpoints), default=self.t0)
        return replace(self, t1=max(last, self.t0) + self.tail_lifetimes / network.gamma_min)


@dataclass
class GeneratingTable:
    """Generating traces (and optionally states and maps) over a virtual grid."""

    grid: VirtualGrid
    traces: np.ndarray
    t0: float
    t1: float
    final_states: np.ndarray | None = None
    final_maps: np.ndarray | None = None
    initial_state: np.ndarray | None = None
    n_solves: int = 0

    def trace_array(self) -> np.ndarray:
        """Traces reshaped onto the grid's index space."""
        return self.traces.reshape(self.grid.shape)


def _segments(t0: float, t1: float, breakpoints) -> list[tuple[float, float]]:
    cuts = [t0] + sorted(b for b in set(breakpoints) if t0 < b < t1) + [t1]
    return list(zip(cuts[:-1], cuts[1:]))


def propagate(
    generator: TimeDependentGenerator,
    state: np.ndarray,
    settings: PropagationSettings,
) -> np.ndarray:
    """Solve ``d rho/dt = L(t) rho`` from ``settings.t0`` to ``settings.t1``.

    ``state`` is a ``d x d`` matrix, or a ``d**2 x k`` block of vectorized
    operators (used to propagate whole maps). Steps never straddle the
    generator's breakpoints; coefficients are evaluated from inside the
    current segment so a jump at a segment end is never sampled.
    """
    if settings.t1 is None:
        raise ValueError("settings.t1 must be resolved before propagating")
    d = generator.space.total_dim
    state = np.asarray(state, dtype=complex)
    if state.shape == (d, d):
        y = vec(state).copy()
        shape = None
    elif state.ndim == 2 and state.shape[0] == d * d:
        shape = state.shape
        y = state.reshape(-1).copy()
    else:
        raise ValueError(f"state of shape {state.shape} does not fit dimension {d}")

    for a, b in _segments(settings.t0, settings.t1, generator.breakpoints):
        if settings.exact_constant_segments:
            frozen = generator.constant_on(a, b)
            if frozen is not None:
                y = _exact_step(frozen, b - a, y.reshape(shape or (-1,))).reshape(-1)
                continue
        lo, hi = np.nextafter(a, b), np.nextafter(b, a)

        if shape is None:
            def rhs(t, v, lo=lo, hi=hi):
                return generator.apply(min(max(t, lo), hi), v)
        else:
            def rhs(t, v, lo=lo, hi=hi):
                return generator.apply(min(max(t, lo), hi), v.reshape(shape)).reshape(-1)

        sol = solve_ivp(
            rhs, (a, b), y,
            method=settings.method, rtol=settings.rtol, atol=settings.atol,
            max_step=settings.max_step, t_eval=[b],
        )
        if sol.status != 0:
            t_fail = float(sol.t[-1]) if sol.t.size else a
            raise IntegrationError(sol.message, t_fail)
        y = sol.y[:, -1]

    if shape is None:
        return unvec(y, d)
    return y.reshape(shape)


def _exact_step(generator: np.ndarray, dt: float, y: np.ndarray) -> np.ndarray:
    narrow = y.ndim == 1 or y.shape[1] <= 4
    if narrow and generator.shape[0] >= _SPARSE_ACTION_MIN_DIM:
        return expm_multiply(dt * csr_matrix(generator), y)
    return expm(dt * generator) @ y


def _dagger_permutation(d: int) -> np.ndarray:
    """Index permutation ``p`` with ``vec(X.T) == vec(X)[p]``."""
    idx = np.arange(d * d).reshape((d, d), order="F")
    return vec(idx.T)


def _solve_config(network, config, settings, want_maps):
    gen = build_zpg(network, config)
    state = propagate(gen, network.joint_initial_state, settings)
    gmap = None
    if want_maps:
        d = network.space.total_dim
        gmap = propagate(gen, np.eye(d * d, dtype=complex), settings)
    return state, gmap


def batch_generating_solutions(
    network: EmitterNetwork,
    grid: VirtualGrid,
    settings: PropagationSettings | None = None,
    want_states: bool = False,
    want_maps: bool = False,
) -> GeneratingTable:
    """Solve the zero-photon generator at every configuration of ``grid``.

    Configs are solved independently, each with its own adaptive step
    sequence, so results do not depend on ``settings.workers``. With
    ``conjugate_shortcut`` only one member of each complex-conjugate pair is
    integrated; its partner follows from ``G_{conj z}(X) = G_z(X^dagger)^dagger``,
    which holds for any Hermiticity-preserving Lindbladian.
    """
    settings = (settings or PropagationSettings()).resolve(network)
    if grid.n_modes != network.n_modes:
        raise ValueError(f"grid has {grid.n_modes} detectors, network has {network.n_modes}")
    d = network.space.total_dim
    n_cfg = len(grid)

    todo = list(range(n_cfg))
    partner = list(range(n_cfg))
    if settings.conjugate_shortcut:
        for c in range(n_cfg):
            p = grid.conjugate_partner(c)
            if p is not None:
                partner[c] = p
        todo = [c for c in range(n_cfg) if partner[c] >= c]

    def work(c):
        try:
            return _solve_config(network, grid.configs[c], settings, want_maps)
        except Exception as exc:  # noqa: BLE001
            raise BatchError(c, exc) from exc

    if settings.workers > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            solved = list(pool.map(work, todo))
    else:
        solved = [work(c) for c in todo]
    logger.debug("solved %d of %d virtual configs", len(todo), n_cfg)

    states = np.empty((n_cfg, d, d), dtype=complex)
    maps = np.empty((n_cfg, d * d, d * d), dtype=complex) if want_maps else None
    perm = _dagger_permutation(d) if want_maps else None
    for c, (state, gmap) in zip(todo, solved):
        states[c] = state
        if want_maps:
            maps[c] = gmap
        p = partner[c]
        if p != c:
            states[p] = state.conj().T
            if want_maps:
                maps[p] = gmap.conj()[np.ix_(perm, perm)]

    traces = np.trace(states, axis1=1, axis2=2)
    return GeneratingTable(
        grid=grid,
        traces=traces,
        t0=settings.t0,
        t1=settings.t1,
        final_states=states if want_states else None,
        final_maps=maps,
        initial_state=network.joint_initial_state,
        n_solves=len(todo),
    )


def zero_photon_probability(
    network: EmitterNetwork,
    eta,
    settings: PropagationSettings | None = None,
) -> complex:
    """``Tr[G_z rho(t0)]`` for detector efficiencies ``eta`` (scalar or one per detector)."""
    settings = (settings or PropagationSettings()).resolve(network)
    eta = np.broadcast_to(np.asarray(eta, dtype=complex), (network.n_modes,))
    gen = build_zpg(network, VirtualDetectorConfig.from_eta(eta))
    rho = propagate(gen, network.joint_initial_state, settings)
    d = network.space.total_dim
    value = complex(trace_row(d) @ vec(rho))
    if np.all(np.isreal(eta)):
        return value.real
    return value
