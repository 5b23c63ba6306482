"""Config-driven experiment runner.

Usage::

    zpgsim pn-dist --config run.json --out results/ [--workers 4] [--seed 7]

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 oracle cost
guard refusal.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import platform
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np
import pydantic
import scipy

from . import __version__
from .config import (
    ExperimentConfig,
    build_network,
    build_source,
    load_config,
    source_configs,
)
from .decomposition import (
    AliasingError,
    g2,
    hom_coincidence,
    hom_network,
    invert_distribution,
    mean_photon_number,
    photon_number_distribution,
    threshold_distribution,
    threshold_from_numbers,
)
from .dynamics import BatchError, IntegrationError, PropagationSettings, batch_generating_solutions
from .experiments import mode_scaling, scaling_benchmark, tvd_benchmark
from .oracle import OracleCostError
from .zpg import threshold_corner_grid

__all__ = ["main", "run_experiment", "StageError", "ReportBundle"]

logger = logging.getLogger(__name__)

SUBCOMMANDS = {
    "pn-dist": "pn_dist",
    "threshold": "threshold",
    "fom": "fom",
    "hom": "hom",
    "tvd-benchmark": "tvd_benchmark",
    "bench": "bench_scaling",
}

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_GUARD = 0, 2, 3, 4


class StageError(RuntimeError):
    """A numerical failure tagged with the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class ReportBundle:
    """In-memory result of one run: tables, summary and manifest."""

    def __init__(self, task: str):
        self.task = task
        self.tables: dict[str, tuple[list[str], list[list]]] = {}
        self.summary: dict = {}
        self.timings: dict[str, float] = {}
        self.diagnostics: dict = {}

    def add_table(self, name: str, header: list[str], rows: list[list]) -> None:
        self.tables[name] = (header, rows)


class _Stage:
    def __init__(self, bundle: ReportBundle, name: str):
        self.bundle = bundle
        self.name = name

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.bundle.timings[self.name] = time.perf_counter() - self.start
        if exc is None or isinstance(exc, (OracleCostError, StageError)):
            return False
        if isinstance(exc, (IntegrationError, BatchError, AliasingError, ZeroDivisionError, FloatingPointError)):
            raise StageError(self.name, exc) from exc
        return False


def _settings(cfg: ExperimentConfig) -> PropagationSettings:
    r = cfg.run
    return PropagationSettings(t0=r.t0, t1=r.t1, rtol=r.rtol, atol=r.atol, workers=r.workers)


def _truncations(cfg: ExperimentConfig, M: int) -> tuple[int, ...]:
    t = cfg.detectors.truncations
    if isinstance(t, int):
        return (t,) * M
    if len(t) != M:
        raise ValueError(f"detectors.truncations has {len(t)} entries for {M} modes")
    return tuple(t)


def _distribution_rows(dist) -> list[list]:
    return [[*map(int, n), float(p), dist.residue] for n, p in np.ndenumerate(dist.probs)]


def _threshold_rows(thr, residue: float) -> list[list]:
    return [[*map(int, m), float(p), residue] for m, p in np.ndenumerate(thr.probs)]


def _keyed(d: dict) -> dict[str, float]:
    return {",".join(map(str, k)): float(v) for k, v in d.items()}


def _run_pn_dist(cfg, bundle, settings):
    if cfg.detectors.threshold:
        return _run_threshold(cfg, bundle, settings)
    net = build_network(cfg)
    M = net.n_modes
    with _Stage(bundle, "solve+invert"):
        dist = photon_number_distribution(
            net, _truncations(cfg, M), settings, auto=cfg.detectors.auto, tail_tol=cfg.detectors.tail_tol
        )
    bundle.add_table("results", [f"n{j + 1}" for j in range(M)] + ["probability", "residue"], _distribution_rows(dist))
    summary = dict(
        distribution=_keyed(dist.to_dict()),
        mu=dist.mean().tolist(),
        threshold=_keyed(threshold_from_numbers(dist).to_dict()),
    )
    if M == 1:
        counts = np.arange(dist.probs.shape[0])
        mu = float(np.sum(counts * dist.probs))
        summary["g2"] = float(np.sum(counts * (counts - 1) * dist.probs)) / mu**2 if mu > 1e-12 else None
    bundle.summary.update(summary)
    bundle.diagnostics.update(residue=dist.residue, tail_mass=dist.tail_mass, truncations=list(dist.truncations),
                              n_configs=int(np.prod(dist.truncations)))


def _run_threshold(cfg, bundle, settings):
    net = build_network(cfg)
    M = net.n_modes
    with _Stage(bundle, "solve"):
        table = batch_generating_solutions(net, threshold_corner_grid(M), settings)
    residue = float(np.max(np.abs(table.traces.imag)))
    with _Stage(bundle, "invert"):
        thr = threshold_distribution(table)
    bundle.add_table("results", [f"m{j + 1}" for j in range(M)] + ["probability", "residue"],
                     _threshold_rows(thr, residue))
    bundle.summary["threshold"] = _keyed(thr.to_dict())
    if M == 1:
        bundle.summary["brightness"] = thr.brightness
    bundle.diagnostics.update(residue=residue, n_configs=2**M)


def _run_fom(cfg, bundle, settings):
    net = build_network(cfg)
    with _Stage(bundle, "mean_photon_number"):
        mu = mean_photon_number(net, eta_step=cfg.fom.eta_mu, settings=settings)
    with _Stage(bundle, "g2"):
        g = g2(net, eta_step=cfg.fom.eta_g2, settings=settings)
    bundle.add_table("results", ["quantity", "value", "error"],
                     [["mu", mu.value, mu.error], ["g2", g.value, g.error]])
    bundle.summary.update(mu=asdict(mu), g2=asdict(g))
    bundle.diagnostics.update(n_configs=5)


def _run_hom(cfg, bundle, settings):
    srcs = source_configs(cfg)
    source = build_source(srcs[0])
    twin = build_source(cfg.hom.twin) if cfg.hom.twin is not None else (
        build_source(srcs[1]) if len(srcs) > 1 else None
    )
    net = hom_network(source, twin)
    with _Stage(bundle, "solve"):
        table = batch_generating_solutions(net, threshold_corner_grid(2), settings)
    residue = float(np.max(np.abs(table.traces.imag)))
    with _Stage(bundle, "invert"):
        thr = threshold_distribution(table)
    bundle.add_table("results", ["m1", "m2", "probability", "residue"], _threshold_rows(thr, residue))
    bundle.summary.update(threshold=_keyed(thr.to_dict()), coincidence=thr[1, 1])
    if cfg.hom.reference_detuning is not None:
        ref_cfg = srcs[0].model_copy(update={"detuning": cfg.hom.reference_detuning})
        with _Stage(bundle, "reference"):
            ref = hom_coincidence(source, build_source(ref_cfg), settings)
        bundle.summary.update(reference_coincidence=ref, ratio=thr[1, 1] / ref if ref > 0 else None)
    bundle.diagnostics.update(residue=residue, n_configs=4)


def _tvd_seeds(cfg) -> list[int]:
    s = cfg.tvd.seeds
    if isinstance(s, int):
        return [cfg.circuit.seed + i for i in range(s)]
    return list(s)


def _run_tvd(cfg, bundle, settings):
    seeds = _tvd_seeds(cfg)
    with _Stage(bundle, "tvd_benchmark"):
        recs = tvd_benchmark(cfg.tvd.modes, seeds, cfg.tvd.taus, cfg.tvd.theta_pi * math.pi,
                             cfg.tvd.extra_truncation, settings)
    bundle.add_table("results", ["tau", "seed", "tvd_pnr", "tvd_threshold", "residue"],
                     [[r.tau, r.seed, r.tvd_pnr, r.tvd_threshold, r.residue] for r in recs])
    curve = []
    for tau in cfg.tvd.taus:
        sel = [r for r in recs if r.tau == tau]
        curve.append([tau, float(np.mean([r.tvd_pnr for r in sel])), float(np.max([r.tvd_pnr for r in sel])),
                      float(np.mean([r.tvd_threshold for r in sel]))])
    bundle.add_table("tvd_vs_tau", ["tau", "mean_tvd_pnr", "max_tvd_pnr", "mean_tvd_threshold"], curve)
    bundle.summary.update(seeds=seeds, tvd_vs_tau=[dict(zip(["tau", "mean", "max", "threshold_mean"], c))
                                                    for c in curve])
    bundle.timings.update({f"pnr_tau{r.tau}_seed{r.seed}": r.seconds_pnr for r in recs})
    bundle.diagnostics.update(residue=max(r.residue for r in recs),
                              n_configs=(cfg.tvd.modes + cfg.tvd.extra_truncation) ** cfg.tvd.modes)


def _run_bench(cfg, bundle, settings):
    b = cfg.bench
    source = build_source(source_configs(cfg)[0]) if cfg.model is not None else None
    with _Stage(bundle, "bench_n"):
        rep = scaling_benchmark(source, b.n_max, b.points_per_lifetime, b.rel_accuracy, b.tail, settings)
    with _Stage(bundle, "bench_modes"):
        rows = mode_scaling(b.modes, settings=settings)
    sweep_cols = ["points_per_lifetime", "mesh_points", "evaluations", "rel_error", "value"]
    bundle.add_table("results", sweep_cols, [[s[c] for c in sweep_cols] for s in rep.sweep])
    bundle.add_table("scaling", ["points_per_lifetime", "mesh_points", "evaluations", "seconds"],
                     [[s["points_per_lifetime"], s["mesh_points"], s["evaluations"], s["seconds"]] for s in rep.sweep])
    bundle.add_table("runtime_vs_modes", ["modes", "configs_pnr", "configs_threshold", "seconds_pnr",
                                          "seconds_threshold"], [list(r.values()) for r in rows])
    meshes = [s["mesh_points"] for s in rep.sweep]
    evals = [s["evaluations"] for s in rep.sweep]
    slope = float(np.polyfit(np.log(meshes), np.log(evals), 1)[0]) if len(meshes) > 1 else None
    bundle.summary.update(n_max=rep.n_max, reference=rep.reference, zpg_value=rep.zpg_value,
                          oracle_value=rep.oracle_value, zpg_truncation=rep.zpg_truncation,
                          oracle_points_per_lifetime=rep.oracle_points_per_lifetime,
                          cost_exponent=slope)
    bundle.timings.update(zpg=rep.zpg_seconds, zpg_rk=rep.zpg_rk_seconds,
                          oracle=rep.oracle_seconds if rep.oracle_seconds is not None else math.nan,
                          speedup=rep.speedup)


_RUNNERS = {
    "pn_dist": _run_pn_dist,
    "threshold": _run_threshold,
    "fom": _run_fom,
    "hom": _run_hom,
    "tvd_benchmark": _run_tvd,
    "bench_scaling": _run_bench,
}


def run_experiment(config: ExperimentConfig) -> ReportBundle:
    """Execute ``config.task`` and return its tables, summary and diagnostics."""
    bundle = ReportBundle(config.task)
    start = time.perf_counter()
    _RUNNERS[config.task](config, bundle, _settings(config))
    bundle.timings["total"] = time.perf_counter() - start
    return bundle


def _versions() -> dict[str, str]:
    return dict(zpgsim=__version__, python=platform.python_version(), numpy=np.__version__,
                scipy=scipy.__version__, pydantic=pydantic.VERSION)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_bundle(bundle: ReportBundle, config: ExperimentConfig, out: Path) -> list[Path]:
    """Write results CSVs, ``summary.json`` and ``manifest.json`` into ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    written = []
    formats = config.output.formats
    if "csv" in formats:
        for name, (header, rows) in bundle.tables.items():
            path = out / f"{name}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                w.writerows([[_fmt(v) for v in row] for row in rows])
            written.append(path)
    if "json" in formats:
        path = out / "summary.json"
        path.write_text(json.dumps({"task": bundle.task, **bundle.summary, "timings": bundle.timings},
                                   indent=2, default=float))
        written.append(path)
    manifest = dict(
        task=bundle.task,
        config=json.loads(config.to_json()),
        versions=_versions(),
        seeds=dict(circuit=config.circuit.seed, tvd=_tvd_seeds(config) if config.task == "tvd_benchmark" else None),
        workers=config.run.workers,
        timings=bundle.timings,
        diagnostics=bundle.diagnostics,
        files=[p.name for p in written],
    )
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, default=float))
    written.append(path)
    return written


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zpgsim", description="Photon-counting statistics of quantum emitters.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="JSON experiment config")
        p.add_argument("--out", type=Path, default=None, help="output directory (overrides output.directory)")
        p.add_argument("--workers", type=int, default=None, help="parallel virtual-config workers")
        p.add_argument("--seed", type=int, default=None, help="circuit / benchmark base seed (u64)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _config_error(path: Path, exc: Exception) -> str:
    if isinstance(exc, json.JSONDecodeError):
        return f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"
    if isinstance(exc, pydantic.ValidationError):
        lines = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            lines.append(f"{path}: {loc}: {err['msg']}")
        return "\n".join(lines)
    return f"{path}: {exc}"


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        update = {"task": SUBCOMMANDS[args.command]}
        if args.workers is not None:
            if args.workers < 1:
                raise ValueError("--workers must be >= 1")
            update["run"] = cfg.run.model_copy(update={"workers": args.workers})
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ValueError("--seed must be an unsigned 64-bit integer")
            update["circuit"] = cfg.circuit.model_copy(update={"seed": args.seed})
        if args.out is not None:
            update["output"] = cfg.output.model_copy(update={"directory": str(args.out)})
        cfg = ExperimentConfig.model_validate({**cfg.model_dump(), **{k: v if isinstance(v, str) else v.model_dump()
                                                                       for k, v in update.items()}})
        if cfg.task not in ("tvd_benchmark", "bench_scaling"):
            build_network(cfg)
    except (OSError, json.JSONDecodeError, pydantic.ValidationError, ValueError) as exc:
        print(_config_error(args.config, exc), file=sys.stderr)
        return EXIT_CONFIG

    try:
        bundle = run_experiment(cfg)
    except StageError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OracleCostError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ValueError as exc:
        print(_config_error(args.config, exc), file=sys.stderr)
        return EXIT_CONFIG

    for path in write_bundle(bundle, cfg, Path(cfg.output.directory)):
        logger.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
