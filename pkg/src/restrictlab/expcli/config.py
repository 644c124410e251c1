"""Experiment configuration schema (one YAML file per experiment)."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .. import __version__

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _grid(min_length: int = 1):
    return Field(min_length=min_length)


class ImagesVerifyParams(_Params):
    lambdas: list[float] = _grid()
    Ts: list[float] = _grid()
    n_pairs: int = Field(20, ge=1)
    seed: int = 0
    rel_tol: float = 1e-6
    zero_floor: float = Field(1e-6, gt=0, description="relative error denominator floor, "
                              "as a fraction of the diagonal value K(x, x)")
    max_seconds: float = 60.0


class SphereSaturationParams(_Params):
    ls: list[int] = _grid(4)
    midpoint_phi: float = 0.0
    target: float = 0.25
    tol: float = 0.03
    max_seconds: float = 60.0


class SphereZonalParams(_Params):
    ls: list[int] = _grid(4)
    linf_target: float = 0.5
    linf_tol: float = 0.02
    l4_target: float = 0.125
    l4_tol: float = 0.03
    pole_tol: float = 1e-8


class TorusL4Params(_Params):
    n_max: int = Field(10_000, ge=25)
    slope_lo: float = -0.02
    slope_hi: float = 0.02
    oracle_n: int = 25
    oracle_tol: float = 1e-10


class TorusRestrictionParams(_Params):
    n_max: int = Field(10_000, ge=1)
    base: float = 0.0
    bound: float = 1.4142135623730951
    slack: float = 1e-9


class GuntherParams(_Params):
    t_max: float = Field(10.0, gt=0)
    ode_tol: float = 1e-13
    grid: int = Field(2001, ge=2)
    sinh_tol: float = 1e-8
    n_profiles: int = Field(5, ge=1)
    seed: int = 0
    margin_tol: float = 1e-8


class StationaryPhaseParams(_Params):
    w_min: float = 2.0
    w_max: float = 200.0
    n: int = Field(20001, ge=2)
    bound: float = 2.0
    quad_points: int = Field(201, ge=2)
    quad_tol: float = 1e-8


class KernelDecayParams(_Params):
    lambdas: list[float] = _grid(2)
    Ts: list[float] = _grid()
    n_d: int = Field(60, ge=4)
    d_max: float = 1.0
    angle: float = 0.3
    max_spread: float = 2.0
    check_d: float = 0.2
    cross_tol: float = 1e-8


class DeckGrowthParams(_Params):
    preset: str = "genus2"
    r_max: float = 10.0
    rate_lo: float = 0.8
    rate_hi: float = 1.2
    lattice_r_max: float = 50.0
    degree_target: float = 2.0
    degree_tol: float = 0.1
    budget: int = 2_000_000


class HadamardTailsParams(_Params):
    nus: list[int] = _grid()
    lambdas: list[float] = _grid(3)
    r: float = 1.0
    width: float = 0.25
    tol: float = 0.15
    agreement_tol: float = 1e-6


class FilterBoundednessParams(_Params):
    ns: list[int] = _grid(4)
    eps: float = 0.1
    max_slope: float = 0.05


class TubeConcentrationParams(_Params):
    l: int = 64
    deltas: list[float] = _grid(2)
    min_fraction: float = 0.5


PARAMS = {
    "images-verify": ImagesVerifyParams,
    "sphere-saturation": SphereSaturationParams,
    "sphere-zonal": SphereZonalParams,
    "torus-l4": TorusL4Params,
    "torus-restriction": TorusRestrictionParams,
    "gunther": GuntherParams,
    "stationary-phase": StationaryPhaseParams,
    "kernel-decay": KernelDecayParams,
    "deck-growth": DeckGrowthParams,
    "hadamard-tails": HadamardTailsParams,
    "filter-boundedness": FilterBoundednessParams,
    "tube-concentration": TubeConcentrationParams,
}

EXPERIMENTS = tuple(PARAMS)


class ExperimentConfig(BaseModel):
    """Validated experiment configuration; ``params`` is typed per experiment."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    experiment: str
    params: Any = None
    output_dir: Optional[str] = None
    cache: bool = True

    @model_validator(mode="before")
    @classmethod
    def _typed_params(cls, data):
        if not isinstance(data, dict):
            return data
        name = data.get("experiment")
        if name not in PARAMS:
            raise ValueError(f"unknown experiment {name!r}")
        raw = data.get("params") or {}
        if not isinstance(raw, BaseModel):
            data = dict(data)
            data["params"] = PARAMS[name](**raw)
        return data

    def content_hash(self) -> str:
        """Hash of everything that determines the results (not paths or cache flags)."""
        payload = {"experiment": self.experiment, "params": self.params.model_dump(),
                   "version": __version__}
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def echo(self) -> dict:
        return {"experiment": self.experiment, "params": self.params.model_dump()}


def default_config_path(experiment: str) -> Path:
    return CONFIG_DIR / f"{experiment}.yaml"


def load_config(path: Optional[str | Path] = None, experiment: Optional[str] = None
                ) -> ExperimentConfig:
    """Read a YAML config; without a path, the bundled default for ``experiment``."""
    if path is None:
        if experiment is None:
            raise ValueError("need a config path or an experiment name")
        path = default_config_path(experiment)
    data = yaml.safe_load(Path(path).read_text()) or {}
    if experiment is not None:
        if data.get("experiment", experiment) != experiment:
            raise ValueError(f"config is for {data.get('experiment')!r}, not {experiment!r}")
        data["experiment"] = experiment
    return ExperimentConfig(**data)
