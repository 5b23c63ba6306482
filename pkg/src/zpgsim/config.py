"""Experiment configuration schema.

A config is one JSON document. Unknown keys are rejected. Rates are in
units of ``gamma_ref`` and times in units of ``1 / gamma_ref``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Annotated, Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Discriminator, Field, Tag, model_validator

from .oracle import haar_unitary
from .zpg import EmitterNetwork, SourceSpec, two_level_source, vacuum_source

__all__ = [
    "ExperimentConfig",
    "load_config",
    "build_network",
    "build_source",
]

Complex = Union[float, tuple[float, float]]
Matrix = list[list[Complex]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _to_array(m: Matrix) -> np.ndarray:
    return np.array(
        [[complex(*v) if isinstance(v, (tuple, list)) else complex(v) for v in row] for row in m],
        dtype=complex,
    )


class TwoLevelSourceConfig(_Strict):
    kind: Literal["two_level"] = "two_level"
    gamma: float = Field(1.0, ge=0)
    theta_pi: float = Field(0.0, description="pulse area in units of pi")
    tau: float = Field(1.0, gt=0)
    t_start: float = 0.0
    detuning: float = 0.0
    dephasing: float = Field(0.0, ge=0)
    initial: Literal["g", "e"] = "g"


class DissipationConfig(_Strict):
    op: Matrix
    rate: float = Field(ge=0)


class CustomSourceConfig(_Strict):
    kind: Literal["custom"]
    dim: int = Field(ge=1)
    hamiltonian: Optional[Matrix] = None
    collection_op: Optional[Matrix] = None
    collection_rate: float = Field(0.0, ge=0)
    dissipation: list[DissipationConfig] = []
    initial_state: Optional[Matrix] = None


class VacuumSourceConfig(_Strict):
    kind: Literal["vacuum"]


def _source_kind(v: Any) -> str:
    if isinstance(v, dict):
        return v.get("kind", "two_level")
    return getattr(v, "kind", "two_level")


SourceConfig = Annotated[
    Union[
        Annotated[TwoLevelSourceConfig, Tag("two_level")],
        Annotated[CustomSourceConfig, Tag("custom")],
        Annotated[VacuumSourceConfig, Tag("vacuum")],
    ],
    Discriminator(_source_kind),
]


class ModelConfig(_Strict):
    sources: list[SourceConfig] = Field(min_length=1)
    copies: Optional[int] = Field(None, ge=1, description="replicate the first source this many times")


class CircuitConfig(_Strict):
    kind: Literal["identity", "haar", "explicit", "balanced"] = "identity"
    seed: int = 0
    matrix: Optional[Matrix] = None

    @model_validator(mode="after")
    def _matrix_given(self):
        if self.kind == "explicit" and self.matrix is None:
            raise ValueError("explicit circuit needs 'matrix'")
        return self


class DetectorConfig(_Strict):
    truncations: Union[int, list[int]] = 8
    threshold: bool = False
    auto: bool = False
    tail_tol: float = Field(1e-9, gt=0)


class RunConfig(_Strict):
    t0: float = 0.0
    t1: Optional[float] = None
    rtol: float = Field(1e-10, gt=0)
    atol: float = Field(1e-12, gt=0)
    workers: int = Field(1, ge=1)


class FomConfig(_Strict):
    eta_mu: float = Field(1e-3, gt=0, le=1e-2)
    eta_g2: float = Field(1e-2, gt=0)


class HomConfig(_Strict):
    twin: Optional[SourceConfig] = None
    reference_detuning: Optional[float] = Field(None, description="detuning of a distinguishable reference twin")


class TvdConfig(_Strict):
    modes: int = Field(3, ge=1, le=6)
    seeds: Union[int, list[int]] = 5
    taus: list[float] = [0.5, 0.1, 0.02]
    theta_pi: float = 1.0
    extra_truncation: int = Field(2, ge=1)


class BenchConfig(_Strict):
    n_max: int = Field(3, ge=1)
    points_per_lifetime: list[int] = [4, 6, 8, 10, 12, 16, 20]
    rel_accuracy: float = Field(5e-3, gt=0)
    tail: float = Field(15.0, gt=0)
    modes: list[int] = [1, 2, 3]


class OutputConfig(_Strict):
    directory: str = "results"
    formats: list[Literal["csv", "json"]] = ["csv", "json"]


TaskName = Literal["pn_dist", "threshold", "fom", "hom", "tvd_benchmark", "bench_scaling"]


class ExperimentConfig(_Strict):
    gamma_ref: float = Field(1.0, gt=0)
    task: TaskName = "pn_dist"
    model: Optional[ModelConfig] = None
    circuit: CircuitConfig = CircuitConfig()
    detectors: DetectorConfig = DetectorConfig()
    run: RunConfig = RunConfig()
    fom: FomConfig = FomConfig()
    hom: HomConfig = HomConfig()
    tvd: TvdConfig = TvdConfig()
    bench: BenchConfig = BenchConfig()
    output: OutputConfig = OutputConfig()

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate; raises ``json.JSONDecodeError`` or ``pydantic.ValidationError``."""
    text = Path(path).read_text()
    return ExperimentConfig.model_validate(json.loads(text))


def build_source(cfg: SourceConfig) -> SourceSpec:
    if isinstance(cfg, VacuumSourceConfig):
        return vacuum_source()
    if isinstance(cfg, TwoLevelSourceConfig):
        return two_level_source(
            cfg.gamma,
            theta=cfg.theta_pi * math.pi if cfg.theta_pi else None,
            tau=cfg.tau,
            t_start=cfg.t_start,
            detuning=cfg.detuning,
            dephasing=cfg.dephasing,
            initial=cfg.initial,
        )
    terms = () if cfg.hamiltonian is None else ((_to_array(cfg.hamiltonian), 1.0),)
    return SourceSpec(
        dim=cfg.dim,
        hamiltonian_terms=terms,
        dissipation_channels=tuple((_to_array(d.op), d.rate) for d in cfg.dissipation),
        collection_op=None if cfg.collection_op is None else _to_array(cfg.collection_op),
        collection_rate=cfg.collection_rate,
        initial_state=None if cfg.initial_state is None else _to_array(cfg.initial_state),
    )


def build_unitary(cfg: CircuitConfig, M: int) -> np.ndarray:
    if cfg.kind == "identity":
        return np.eye(M, dtype=complex)
    if cfg.kind == "haar":
        return haar_unitary(M, cfg.seed)
    if cfg.kind == "balanced":
        if M != 2:
            raise ValueError("balanced circuit needs exactly 2 modes")
        return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    return _to_array(cfg.matrix)


def source_configs(cfg: ExperimentConfig) -> list[SourceConfig]:
    if cfg.model is None:
        raise ValueError(f"task {cfg.task!r} needs a 'model' section")
    srcs = list(cfg.model.sources)
    if cfg.model.copies:
        srcs = [srcs[0]] * cfg.model.copies
    return srcs


def build_network(cfg: ExperimentConfig) -> EmitterNetwork:
    sources = [build_source(s) for s in source_configs(cfg)]
    return EmitterNetwork(tuple(sources), build_unitary(cfg.circuit, len(sources)))
