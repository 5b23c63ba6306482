"""Hilbert-space bookkeeping and superoperator construction.

Density matrices are vectorized by column stacking, ``vec(rho) =
rho.reshape(-1, order="F")``, so that ``vec(a @ rho @ b) = kron(b.T, a) @
vec(rho)``.  Operators are plain complex ``numpy`` arrays; superoperators are
``d**2 x d**2`` arrays acting on such vectors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "HilbertSpace",
    "TimeDependentGenerator",
    "sigma_minus",
    "sigma_plus",
    "sigma_x",
    "sigma_z",
    "projector",
    "vec",
    "unvec",
    "embed_operator",
    "commutator_superop",
    "dissipator_superop",
    "sandwich_superop",
    "lindbladian",
    "trace_row",
]


@dataclass(frozen=True)
class HilbertSpace:
    """Tensor-product space of several sources.

    ``dims[i]`` is the local dimension of source ``i``; a dimension of 1 is a
    vacuum placeholder.
    """

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValueError("a Hilbert space needs at least one slot")
        if any(d < 1 for d in dims):
            raise ValueError(f"local dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_slots(self) -> int:
        return len(self.dims)

    def identity(self) -> np.ndarray:
        return np.eye(self.total_dim, dtype=complex)


# Two-level catalog. Basis ordering is (|g>, |e>).
def sigma_minus() -> np.ndarray:
    """Lowering operator ``|g><e|``."""
    return np.array([[0, 1], [0, 0]], dtype=complex)


def sigma_plus() -> np.ndarray:
    return sigma_minus().conj().T


def sigma_x() -> np.ndarray:
    return sigma_minus() + sigma_plus()


def sigma_z() -> np.ndarray:
    """``|e><e| - |g><g|``."""
    return np.diag([-1.0, 1.0]).astype(complex)


def projector(index: int, dim: int = 2) -> np.ndarray:
    out = np.zeros((dim, dim), dtype=complex)
    out[index, index] = 1.0
    return out


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if dim is None:
        dim = int(round(np.sqrt(v.shape[0])))
    return v.reshape((dim, dim) + v.shape[1:], order="F")


def trace_row(dim: int) -> np.ndarray:
    """Row vector ``t`` with ``t @ vec(rho) == Tr[rho]``."""
    return vec(np.eye(dim, dtype=complex))


def _check_square(op: np.ndarray, dim: int, what: str = "operator") -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    if op.shape != (dim, dim):
        raise ValueError(f"{what} has shape {op.shape}, expected ({dim}, {dim})")
    return op


def embed_operator(local_op: np.ndarray, slot: int, space: HilbertSpace) -> np.ndarray:
    """Place ``local_op`` on ``slot`` of ``space``, identities elsewhere.

    Slot 0 is the leftmost Kronecker factor.
    """
    if not 0 <= slot < space.n_slots:
        raise IndexError(f"slot {slot} out of range for {space.n_slots} sources")
    local_op = _check_square(local_op, space.dims[slot], "local operator")
    factors = [
        local_op if i == slot else np.eye(d, dtype=complex)
        for i, d in enumerate(space.dims)
    ]
    return reduce(np.kron, factors)


def sandwich_superop(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> a @ rho @ b^dagger``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"incompatible shapes {a.shape} and {b.shape}")
    return np.kron(b.conj(), a)


def commutator_superop(H: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> -i (H rho - rho H)``."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"H must be square, got shape {H.shape}")
    if not np.allclose(H, H.conj().T, atol=1e-10, rtol=0):
        warnings.warn("commutator_superop called with a non-Hermitian H", stacklevel=2)
    eye = np.eye(H.shape[0], dtype=complex)
    return -1j * (np.kron(eye, H) - np.kron(H.T, eye))


def dissipator_superop(c: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> c rho c^dagger - {c^dagger c, rho} / 2``."""
    c = np.asarray(c, dtype=complex)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"c must be square, got shape {c.shape}")
    eye = np.eye(c.shape[0], dtype=complex)
    cdc = c.conj().T @ c
    return sandwich_superop(c, c) - 0.5 * (np.kron(eye, cdc) + np.kron(cdc.T, eye))


@dataclass(frozen=True)
class TimeDependentGenerator:
    """``L(t) = constant + sum_k coeff_k(t) * part_k``.

    ``breakpoints`` lists times where some coefficient is discontinuous; time
    integrators must not step across them.
    """

    space: HilbertSpace
    constant: np.ndarray
    driven: tuple[tuple[np.ndarray, Callable[[float], float]], ...] = ()
    breakpoints: tuple[float, ...] = field(default=())

    def __post_init__(self):
        n = self.space.total_dim**2
        if self.constant.shape != (n, n):
            raise ValueError(f"constant part has shape {self.constant.shape}, expected {(n, n)}")
        for part, _ in self.driven:
            if part.shape != (n, n):
                raise ValueError(f"driven part has shape {part.shape}, expected {(n, n)}")

    def __call__(self, t: float) -> np.ndarray:
        out = self.constant.copy()
        for part, coeff in self.driven:
            out += coeff(t) * part
        return out

    def apply(self, t: float, v: np.ndarray) -> np.ndarray:
        out = self.constant @ v
        for part, coeff in self.driven:
            f = coeff(t)
            if f != 0:
                out += f * (part @ v)
        return out

    def constant_on(self, a: float, b: float) -> np.ndarray | None:
        """The generator matrix if it provably does not vary on ``(a, b)``.

        Coefficients opt in by exposing ``constant_on(a, b)``; plain callables
        are treated as time-varying.
        """
        out = self.constant.copy()
        for part, coeff in self.driven:
            probe = getattr(coeff, "constant_on", None)
            value = probe(a, b) if probe is not None else None
            if value is None:
                return None
            if value != 0:
                out += value * part
        return out

    def shifted(self, delta: np.ndarray) -> "TimeDependentGenerator":
        """Same generator with ``delta`` added to the constant part."""
        return TimeDependentGenerator(
            self.space, self.constant + delta, self.driven, self.breakpoints
        )


def lindbladian(sources: Sequence, space: HilbertSpace) -> TimeDependentGenerator:
    """Total Lindbladian of independent sources on ``space``.

    Each source contributes ``-i[H_i(t), .]``, its extra dissipation channels
    and, when ``collection_rate > 0``, ``collection_rate * D[c_i]``.  Sources
    are duck-typed; see :class:`zpgsim.zpg.SourceSpec` for the fields used.
    """
    if len(sources) != space.n_slots:
        raise ValueError(f"{len(sources)} sources for a {space.n_slots}-slot space")
    n = space.total_dim**2
    constant = np.zeros((n, n), dtype=complex)
    driven = []
    breakpoints: set[float] = set()
    for slot, src in enumerate(sources):
        if src.collection_rate < 0:
            raise ValueError(f"source {slot}: negative collection rate")
        for op, rate in src.dissipation_channels:
            if rate < 0:
                raise ValueError(f"source {slot}: negative dissipation rate {rate}")
            if rate > 0:
                constant += rate * dissipator_superop(embed_operator(op, slot, space))
        if src.collection_rate > 0:
            c = embed_operator(src.collection_op, slot, space)
            constant += src.collection_rate * dissipator_superop(c)
        for op, coeff in src.hamiltonian_terms:
            part = commutator_superop(embed_operator(op, slot, space))
            if callable(coeff):
                driven.append((part, coeff))
            else:
                constant += complex(coeff) * part
        breakpoints.update(float(b) for b in getattr(src, "breakpoints", ()))
    return TimeDependentGenerator(space, constant, tuple(driven), tuple(sorted(breakpoints)))
