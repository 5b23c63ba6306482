"""Reusable experiment drivers: interference benchmarks and cost scaling."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .decomposition import (
    invert_distribution,
    threshold_distribution,
    threshold_from_numbers,
    tvd,
)
from .dynamics import PropagationSettings, batch_generating_solutions
from .oracle import (
    QuadratureSettings,
    haar_unitary,
    ideal_interference_distribution,
    recursive_pn,
)
from .zpg import (
    EmitterNetwork,
    SourceSpec,
    fourier_grid,
    threshold_corner_grid,
    two_level_source,
)

__all__ = [
    "TvdRecord",
    "interference_network",
    "tvd_benchmark",
    "ScalingReport",
    "scaling_benchmark",
    "mode_scaling",
]


def _best_time(fn, repeats: int = 3):
    best = math.inf
    out = None
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return out, best


@dataclass
class TvdRecord:
    tau: float
    seed: int
    tvd_pnr: float
    tvd_threshold: float
    residue: float
    seconds_pnr: float
    seconds_threshold: float


def interference_network(M: int, seed: int, tau: float, theta: float = math.pi, gamma: float = 1.0) -> EmitterNetwork:
    """``M`` identical pulsed two-level emitters feeding a Haar-random circuit."""
    src = two_level_source(gamma, theta=theta, tau=tau)
    return EmitterNetwork((src,) * M, haar_unitary(M, seed))


def tvd_benchmark(
    modes: int = 3,
    seeds=(0, 1, 2, 3, 4),
    taus=(0.5, 0.1, 0.02),
    theta: float = math.pi,
    extra_truncation: int = 2,
    settings: PropagationSettings | None = None,
) -> list[TvdRecord]:
    """TVD of simulated PNR and threshold statistics against ideal interference.

    Each detector is truncated at ``modes + extra_truncation`` counts.
    """
    records = []
    N = modes + extra_truncation
    for tau in taus:
        for seed in seeds:
            net = interference_network(modes, seed, tau, theta)
            ideal = ideal_interference_distribution(net.unitary, [1] * modes)
            start = time.perf_counter()
            dist = invert_distribution(batch_generating_solutions(net, fourier_grid([N] * modes), settings))
            t_pnr = time.perf_counter() - start
            start = time.perf_counter()
            thr = threshold_distribution(batch_generating_solutions(net, threshold_corner_grid(modes), settings))
            t_thr = time.perf_counter() - start
            records.append(
                TvdRecord(
                    tau=tau,
                    seed=seed,
                    tvd_pnr=tvd(dist, ideal),
                    tvd_threshold=tvd(thr, threshold_from_numbers(ideal)),
                    residue=dist.residue,
                    seconds_pnr=t_pnr,
                    seconds_threshold=t_thr,
                )
            )
    return records


@dataclass
class ScalingReport:
    n_max: int
    reference: float
    zpg_seconds: float
    zpg_value: float
    oracle_seconds: float | None
    oracle_value: float | None
    oracle_points_per_lifetime: int | None
    zpg_rk_seconds: float | None = None
    zpg_truncation: int | None = None
    sweep: list[dict] = field(default_factory=list)

    @property
    def speedup(self) -> float:
        if self.oracle_seconds is None:
            return math.nan
        return self.oracle_seconds / self.zpg_seconds


def scaling_benchmark(
    source: SourceSpec | None = None,
    n_max: int = 3,
    points_per_lifetime=(4, 6, 8, 10, 12, 16, 20),
    rel_accuracy: float = 5e-3,
    tail: float = 15.0,
    zpg_settings: PropagationSettings | None = None,
    max_evaluations: float = 1e8,
) -> ScalingReport:
    """Time ZPG and nested quadrature on ``p^(n_max)`` at a matched accuracy.

    The reference value comes from a well-converged ZPG run (truncation 20).
    Both methods are timed at their cheapest setting meeting ``rel_accuracy``:
    the smallest DFT truncation for ZPG, the coarsest mesh for the oracle.
    The ZPG path is timed with exact exponentials on constant segments and,
    for comparison, with the adaptive Runge-Kutta stepper throughout.
    The oracle mesh is refined through ``points_per_lifetime`` and the first
    mesh reaching ``rel_accuracy`` is the one timed. Every sweep entry
    records evaluation counts, so the growth with mesh size is visible.
    """
    if source is None:
        source = two_level_source(1.0, theta=10 * math.pi, tau=2.0)
    net = EmitterNetwork((source,))
    last = max(net.breakpoints, default=0.0)
    t1 = last + tail / net.gamma_min
    base = zpg_settings or PropagationSettings()
    settings = PropagationSettings(**{**base.__dict__, "t1": t1})
    n = (n_max,)

    ref = invert_distribution(batch_generating_solutions(net, fourier_grid([20]), settings))[n]
    # cheapest truncation that meets the target, mirroring the oracle mesh search
    N = n_max + 1
    while N < 20:
        value = invert_distribution(batch_generating_solutions(net, fourier_grid([N]), settings))[n]
        if abs(value - ref) <= rel_accuracy * abs(ref):
            break
        N += 1
    dist, zpg_seconds = _best_time(
        lambda: invert_distribution(batch_generating_solutions(net, fourier_grid([N]), settings)), repeats=5
    )
    report = ScalingReport(n_max, ref, zpg_seconds, dist[n], None, None, None, zpg_truncation=N)
    rk = PropagationSettings(**{**settings.__dict__, "exact_constant_segments": False})
    _, report.zpg_rk_seconds = _best_time(
        lambda: invert_distribution(batch_generating_solutions(net, fourier_grid([N]), rk))
    )
    for ppl in points_per_lifetime:
        quad = QuadratureSettings(ppl, n_max, max_evaluations=max_evaluations)
        res, secs = _best_time(lambda: recursive_pn(net, n_max, quad, t1=t1), repeats=1)
        err = abs(res[n] - ref) / abs(ref)
        report.sweep.append(
            dict(points_per_lifetime=ppl, mesh_points=res.mesh_points, evaluations=res.evaluations,
                 seconds=secs, value=res[n], rel_error=err)
        )
        if err <= rel_accuracy and report.oracle_seconds is None:
            res, secs = _best_time(lambda: recursive_pn(net, n_max, quad, t1=t1), repeats=3)
            report.oracle_seconds = secs
            report.oracle_value = res[n]
            report.oracle_points_per_lifetime = ppl
    return report


def mode_scaling(modes=(1, 2, 3), tau: float = 0.1, seed: int = 0, extra_truncation: int = 2,
                 settings: PropagationSettings | None = None) -> list[dict]:
    """Wall time of full PNR and threshold distributions against the number of emitters."""
    rows = []
    for M in modes:
        net = interference_network(M, seed, tau)
        grid = fourier_grid([M + extra_truncation] * M)
        _, t_pnr = _best_time(lambda: invert_distribution(batch_generating_solutions(net, grid, settings)), 1)
        _, t_thr = _best_time(
            lambda: threshold_distribution(batch_generating_solutions(net, threshold_corner_grid(M), settings)), 1
        )
        rows.append(dict(modes=M, configs_pnr=len(grid), configs_threshold=2**M,
                         seconds_pnr=t_pnr, seconds_threshold=t_thr))
    return rows
