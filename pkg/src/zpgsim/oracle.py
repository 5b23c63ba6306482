"""Independent reference calculations for small problems.

Nothing here calls the Fourier/ZPG pipeline. Photon-number probabilities
are computed by brute-force nested quadrature over ordered jump times, with
zero-photon propagators built from matrix exponentials on a mesh; ideal
interference uses matrix permanents.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .liouville import sandwich_superop, trace_row, vec
from .zpg import EmitterNetwork

__all__ = [
    "OracleCostError",
    "QuadratureSettings",
    "RecursiveResult",
    "recursive_pn",
    "decay_reference",
    "permanent",
    "ideal_interference_distribution",
    "haar_unitary",
]


class OracleCostError(RuntimeError):
    """The requested nested quadrature exceeds the evaluation budget."""

    def __init__(self, estimate: float, budget: float):
        super().__init__(f"estimated {estimate:.3g} integrand evaluations exceed the budget of {budget:.3g}")
        self.estimate = estimate
        self.budget = budget


@dataclass(frozen=True)
class QuadratureSettings:
    """Composite-trapezoid mesh for :func:`recursive_pn`.

    The mesh spacing is at most ``1 / (points_per_lifetime * gamma_max)`` and
    every drive breakpoint is a mesh node. With ``richardson`` the result on
    the mesh and on its bisection are combined as ``(4 I_{h/2} - I_h) / 3``.
    """

    points_per_lifetime: int = 50
    n_max: int = 2
    richardson: bool = False
    max_evaluations: float = 1e8


@dataclass
class RecursiveResult:
    probs: dict[tuple[int, ...], float]
    evaluations: int
    mesh_points: int

    def __getitem__(self, n) -> float:
        if isinstance(n, (int, np.integer)):
            n = (int(n),)
        return self.probs[tuple(n)]


def _mesh(t0: float, t1: float, breakpoints, h_max: float) -> np.ndarray:
    cuts = [t0] + sorted(b for b in set(breakpoints) if t0 < b < t1) + [t1]
    pieces = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        k = max(1, math.ceil((b - a) / h_max - 1e-9))
        pieces.append(np.linspace(a, b, k + 1)[:-1])
    pieces.append(np.array([t1]))
    return np.concatenate(pieces)


def _trapezoid_weight(dt: np.ndarray, ls: np.ndarray, k: int) -> np.ndarray:
    """Weights of nodes ``ls`` in the trapezoid rule over mesh nodes ``0..k``."""
    if k == 0:
        return np.zeros(len(ls))
    w = np.empty(len(ls))
    interior = (ls > 0) & (ls < k)
    w[interior] = 0.5 * (dt[ls[interior] - 1] + dt[ls[interior]])
    w[ls == 0] = 0.5 * dt[0]
    w[ls == k] = 0.5 * dt[k - 1]
    return w


class _Branches:
    """Growable column store of conditional states with their jump bookkeeping."""

    def __init__(self, n: int):
        self.x = np.empty((n, 16), dtype=complex)
        self.weight = np.empty(16)
        self.last = np.empty(16, dtype=int)
        self.size = 0

    def add(self, x: np.ndarray, weight: np.ndarray, last: np.ndarray) -> None:
        k = x.shape[1]
        if k == 0:
            return
        need = self.size + k
        if need > self.weight.size:
            cap = max(need, 2 * self.weight.size)
            self.x = np.concatenate([self.x, np.empty((self.x.shape[0], cap - self.weight.size), complex)], axis=1)
            self.weight = np.concatenate([self.weight, np.empty(cap - self.weight.size)])
            self.last = np.concatenate([self.last, np.empty(cap - self.last.size, dtype=int)])
        sl = slice(self.size, need)
        self.x[:, sl] = x
        self.weight[sl] = weight
        self.last[sl] = last
        self.size = need

    def view(self):
        s = slice(0, self.size)
        return self.x[:, s], self.weight[s], self.last[s]


def _estimate_evaluations(K: int, M: int, n_max: int) -> float:
    # ordered jump-time tuples with repetition, one detector label per jump
    return sum(M**r * math.comb(K + r - 1, r) for r in range(1, n_max + 1))


def _nested_trapezoid(network: EmitterNetwork, mesh: np.ndarray, n_max: int) -> tuple[dict, int]:
    space = network.space
    d = space.total_dim
    M = network.n_modes
    L = network.lindbladian
    # detector-side jumps: d_j = sum_i U_ji sqrt(g_i) c_i
    ops = network.collection_operators
    outs = [sum(network.unitary[j, i] * ops[i] for i in range(M)) for j in range(M)]
    jumps = [sandwich_superop(dj, dj) for dj in outs]
    L0_shift = -sum(jumps)

    K = len(mesh) - 1
    dt = np.diff(mesh)
    steps = []
    for k in range(K):
        mid = 0.5 * (mesh[k] + mesh[k + 1])
        steps.append(expm(dt[k] * (L(mid) + L0_shift)))

    # backward trace functionals E_k = Tr[P0(T, t_k) .]
    E = np.empty((K + 1, d * d), dtype=complex)
    E[K] = trace_row(d)
    for k in range(K - 1, -1, -1):
        E[k] = E[k + 1] @ steps[k]
    EJ = [[E[k] @ J for J in jumps] for k in range(K + 1)]

    zero = tuple([0] * M)
    probs: dict[tuple[int, ...], complex] = {zero: complex(E[0] @ vec(network.joint_initial_state))}
    # branch pools keyed by count vector, for orders 1 .. n_max - 1
    pools: dict[tuple[int, ...], _Branches] = {}
    by_order: list[list[tuple[int, ...]]] = [[] for _ in range(n_max + 1)]
    for r in range(1, n_max + 1):
        for counts in itertools.product(range(r + 1), repeat=M):
            if sum(counts) == r:
                by_order[r].append(counts)
                probs[counts] = 0j
                if r < n_max:
                    pools[counts] = _Branches(d * d)

    rho0 = vec(network.joint_initial_state).astype(complex)
    evaluations = 0
    for k in range(K + 1):
        wK = _trapezoid_weight(dt, np.array([k]), K)[0]
        # spawn order r branches at t_k from order r - 1 states at t_k
        for r in range(1, n_max + 1):
            for counts in by_order[r - 1] if r > 1 else [zero]:
                if r == 1:
                    parent_x = rho0[:, None]
                    parent_w = np.ones(1)
                else:
                    parent_x, pw, plast = pools[counts].view()
                    if parent_x.shape[1] == 0:
                        continue
                    parent_w = pw * _trapezoid_weight(dt, plast, k)
                for j in range(M):
                    child = list(counts)
                    child[j] += 1
                    child = tuple(child)
                    evaluations += parent_x.shape[1]
                    probs[child] += wK * np.sum(parent_w * (EJ[k][j] @ parent_x))
                    if r < n_max:
                        new_x = jumps[j] @ parent_x
                        pools[child].add(new_x, parent_w, np.full(parent_x.shape[1], k))
        if k == K:
            break
        rho0 = steps[k] @ rho0
        for pool in pools.values():
            if pool.size:
                pool.x[:, : pool.size] = steps[k] @ pool.x[:, : pool.size]
    return {n: float(p.real) for n, p in probs.items()}, evaluations


def recursive_pn(
    network: EmitterNetwork,
    n_max: int | None = None,
    quad: QuadratureSettings | None = None,
    t0: float = 0.0,
    t1: float | None = None,
) -> RecursiveResult:
    """Photon-number probabilities with ``sum(n) <= n_max`` by nested quadrature.

    Every ordered tuple of jump times on the mesh is evaluated separately,
    so the cost grows as ``(mesh points)**n_max``. Conditional states are
    propagated between jumps with cached one-step zero-photon maps
    ``expm(dt * L0(t_mid))``, exact for piecewise-constant drives.
    """
    quad = quad or QuadratureSettings()
    n_max = quad.n_max if n_max is None else n_max
    if t1 is None:
        from .dynamics import PropagationSettings

        t1 = PropagationSettings(t0=t0).resolve(network).t1
    rates = [s.collection_rate for s in network.sources if s.collection_rate > 0]
    gamma_max = max(rates) if rates else 1.0
    h = 1.0 / (quad.points_per_lifetime * gamma_max)
    mesh = _mesh(t0, t1, network.breakpoints, h)
    K = len(mesh) - 1

    cost = _estimate_evaluations(K, network.n_modes, n_max)
    if quad.richardson:
        cost += _estimate_evaluations(2 * K, network.n_modes, n_max)
    if cost > quad.max_evaluations:
        raise OracleCostError(cost, quad.max_evaluations)

    coarse, evals = _nested_trapezoid(network, mesh, n_max)
    if not quad.richardson:
        return RecursiveResult(coarse, evals, len(mesh))
    fine_mesh = np.sort(np.concatenate([mesh, 0.5 * (mesh[1:] + mesh[:-1])]))
    fine, evals_f = _nested_trapezoid(network, fine_mesh, n_max)
    probs = {n: (4 * fine[n] - coarse[n]) / 3 for n in coarse}
    return RecursiveResult(probs, evals + evals_f, len(fine_mesh))


def decay_reference(gamma: float, eta: float, t: float) -> float:
    """Zero-photon probability of a two-level emitter decaying from ``|e>``."""
    if gamma < 0 or t < 0:
        raise ValueError("gamma and t must be non-negative")
    survive = math.exp(-gamma * t)
    return survive + (1 - eta) * (1 - survive)


def permanent(A: np.ndarray) -> complex:
    """Ryser's formula with Gray-code updates, ``O(2**n n)``."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("permanent needs a square matrix")
    if n == 0:
        return 1.0 + 0j
    total = 0j
    row_sums = np.zeros(n, dtype=complex)
    subset = 0
    for g in range(1, 2**n):
        # flip the column that changes between Gray codes g-1 and g
        col = (g & -g).bit_length() - 1
        bit = 1 << col
        if subset & bit:
            row_sums -= A[:, col]
        else:
            row_sums += A[:, col]
        subset ^= bit
        sign = -1 if bin(subset).count("1") % 2 else 1
        total += sign * np.prod(row_sums)
    return (-1) ** n * total


def ideal_interference_distribution(U: np.ndarray, occupied) -> "PhotonNumberDistribution":
    """Output photon-number distribution of ideal indistinguishable single photons.

    ``occupied[i] = 1`` puts one photon in input ``i``; output mode ``j``
    receives ``sum_i U[j, i] a_i``.
    """
    from .decomposition import PhotonNumberDistribution

    U = np.asarray(U, dtype=complex)
    M = U.shape[0]
    if M > 6:
        raise ValueError("permanent oracle is limited to M <= 6 modes")
    occupied = np.asarray(occupied, dtype=int)
    if occupied.shape != (M,) or np.any((occupied != 0) & (occupied != 1)):
        raise ValueError("occupied must be a 0/1 vector with one entry per mode")
    cols = np.flatnonzero(occupied)
    n = len(cols)
    probs = np.zeros((n + 1,) * M)
    for out in itertools.product(range(n + 1), repeat=M):
        if sum(out) != n:
            continue
        rows = np.repeat(np.arange(M), out)
        amp = permanent(U[np.ix_(rows, cols)])
        probs[out] = abs(amp) ** 2 / np.prod([math.factorial(k) for k in out])
    return PhotonNumberDistribution((n + 1,) * M, probs)


def haar_unitary(M: int, seed: int) -> np.ndarray:
    """Haar-random ``M x M`` unitary via QR with the phases of ``diag(R)`` removed."""
    if M < 1:
        raise ValueError("M must be >= 1")
    rng = np.random.default_rng(seed)
    Z = (rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    phases = np.diag(R) / np.abs(np.diag(R))
    return Q * phases
