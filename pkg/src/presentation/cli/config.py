"""Run configuration: per-subcommand parameter schemas, file loading and flag overrides."""

import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Type, Union

from pydantic import BaseModel, ConfigDict, Field, SerializeAsAny, ValidationError, field_validator

from ...domain.entities import Equation, PerturbationKind, ProblemKind, Suite
from ...domain.exceptions import ConfigError


class Subcommand(str, Enum):
    """CLI subcommands."""
    SOLVE = "solve"
    SPECTRUM = "spectrum"
    SWEEP = "sweep"
    EVOLVE = "evolve"
    STABILITY = "stability"
    VERIFY = "verify"


class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class SolveParams(_Params):
    alpha: float = Field(..., gt=0.5, le=2, description="Dispersion order")
    lambda_: float = Field(..., alias="lambda", gt=0, description="Squared L^2 norm")
    a: float = Field(0.0, description="Integration constant")
    half_period: float = Field(1.0, gt=0, description="Half period T")
    n: int = Field(256, description="Grid size")
    tol: float = Field(1e-12, gt=0, description="Newton residual target")
    seeds: int = Field(3, ge=1, description="Multi-start seeds")
    max_iters: int = Field(5000, ge=1, description="Descent iteration cap")


class SpectrumParams(_Params):
    profile: str = Field(..., description="Profile JSON written by solve")
    n_eigs: Union[int, str] = Field("all", description="Eigenvalues listed on screen, or 'all'")
    problem: ProblemKind = Field(ProblemKind.KDV, description="kdv or nls linearization")

    @field_validator("n_eigs")
    @classmethod
    def _check_n_eigs(cls, value):
        if isinstance(value, str) and value != "all":
            return int(value)
        return value


class SweepParams(_Params):
    alpha: float = Field(..., gt=0.5, le=2, description="Dispersion order")
    a: float = Field(0.0, description="Integration constant")
    lambda_min: float = Field(..., gt=0, description="First lambda")
    lambda_max: float = Field(..., gt=0, description="Last lambda")
    count: int = Field(..., ge=3, description="Number of lambda values")
    half_period: float = Field(1.0, gt=0, description="Half period T")
    n: int = Field(128, description="Grid size")
    warm_start: bool = Field(True, description="Seed each lambda with the previous profile")
    cross_validate: bool = Field(False, description="Repeat the sweep cold and compare m(lambda)")


class EvolveParams(_Params):
    profile: str = Field(..., description="Profile JSON written by solve")
    equation: Equation = Field(..., description="kdv or nls")
    delta: float = Field(0.0, ge=0, description="Perturbation size in H^{alpha/2}")
    t_final: float = Field(..., gt=0, description="Final time")
    dt: Optional[float] = Field(None, gt=0, description="Time step; default from the wave amplitude")
    record_every: int = Field(100, ge=1, description="Steps between records")
    perturbation: PerturbationKind = Field(PerturbationKind.RANDOM, description="random or directed")
    dealias: bool = Field(True, description="2/3 rule on the nonlinearity")

    @field_validator("equation", mode="before")
    @classmethod
    def _parse_equation(cls, value):
        return Equation.parse(value) if isinstance(value, str) else value


class StabilityBatch(_Params):
    equation: Equation = Field(..., description="kdv or nls")
    deltas: List[float] = Field(..., min_length=1, description="Perturbation sizes")
    seeds: int = Field(1, ge=1, description="Random perturbations per delta")
    t_final: float = Field(..., gt=0, description="Final time")
    dt: Optional[float] = Field(None, gt=0, description="Time step; default from the wave amplitude")
    record_every: int = Field(100, ge=1, description="Steps between records")
    perturbation: PerturbationKind = Field(PerturbationKind.RANDOM, description="random or directed")

    @field_validator("equation", mode="before")
    @classmethod
    def _parse_equation(cls, value):
        return Equation.parse(value) if isinstance(value, str) else value

    @field_validator("deltas")
    @classmethod
    def _check_deltas(cls, value):
        if any(d < 0 for d in value):
            raise ValueError("deltas must be non-negative")
        return value


class StabilityParams(_Params):
    profile: str = Field(..., description="Profile JSON written by solve")
    batch: StabilityBatch = Field(..., description="Batch description")


class VerifyParams(_Params):
    suite: Suite = Field(Suite.FAST, description="fast or full")


PARAMETER_MODELS: Dict[Subcommand, Type[_Params]] = {
    Subcommand.SOLVE: SolveParams,
    Subcommand.SPECTRUM: SpectrumParams,
    Subcommand.SWEEP: SweepParams,
    Subcommand.EVOLVE: EvolveParams,
    Subcommand.STABILITY: StabilityParams,
    Subcommand.VERIFY: VerifyParams,
}

class RunConfig(BaseModel):
    """Validated configuration of one CLI invocation."""

    subcommand: Subcommand = Field(..., description="Subcommand to run")
    parameters: SerializeAsAny[_Params] = Field(..., description="Subcommand parameters")
    output_paths: Dict[str, str] = Field(default_factory=dict, description="Output files by role")
    rng_seed: int = Field(0, description="Seed of every random draw")


def _expected_type(model: Type[BaseModel], key: str) -> str:
    field = model.model_fields.get(key)
    if field is None:
        for name, info in model.model_fields.items():
            if info.alias == key:
                field = info
                break
    if field is None:
        return "no such key"
    annotation = field.annotation
    return getattr(annotation, "__name__", str(annotation))


def _config_error(model: Type[BaseModel], error: ValidationError) -> ConfigError:
    first = error.errors()[0]
    location = [str(part) for part in first["loc"]]
    key = location[0] if location else "?"
    if first["type"] == "extra_forbidden":
        expected = "no such key"
    elif first["type"] == "missing":
        expected = f"a value of type {_expected_type(model, key)}"
    else:
        expected = _expected_type(model, key)
    dotted = ".".join(location)
    return ConfigError(dotted, expected, f"invalid configuration key '{dotted}': {first['msg']} (expected {expected})")


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as stream:
            payload = json.load(stream)
    except OSError as e:
        raise ConfigError("config", "a readable JSON file", f"cannot read config file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError("config", "valid JSON", f"config file {path} is not valid JSON: {e}") from e
    if not isinstance(payload, dict):
        raise ConfigError("config", "a JSON object", f"config file {path} must hold a JSON object")
    return payload


def parse_config(
    subcommand: Union[Subcommand, str],
    flags: Optional[Mapping[str, Any]] = None,
    config_file: Optional[Union[str, Path]] = None,
) -> RunConfig:
    """Merge file values with flags (flags win; None means not given) and validate them."""
    subcommand = Subcommand(subcommand)
    values: Dict[str, Any] = load_config_file(config_file) if config_file else {}
    values.update({key: value for key, value in (flags or {}).items() if value is not None})

    output_paths: Dict[str, str] = {}
    if "out" in values:
        output_paths["out"] = str(values.pop("out"))
    seed = values.pop("rng_seed", 0)
    try:
        rng_seed = int(seed)
    except (TypeError, ValueError):
        raise ConfigError("rng_seed", "int", f"invalid configuration key 'rng_seed': expected int, got {seed!r}")

    model = PARAMETER_MODELS[subcommand]
    if subcommand == Subcommand.STABILITY and isinstance(values.get("batch"), (str, Path)):
        values["batch"] = load_config_file(values["batch"])
    try:
        parameters = model.model_validate(values)
    except ValidationError as e:
        raise _config_error(model, e) from e
    return RunConfig(subcommand=subcommand, parameters=parameters, output_paths=output_paths, rng_seed=rng_seed)
