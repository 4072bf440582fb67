"""
Typed configuration models validated with pydantic
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.config.settings import (
    BLOCKING_TIME, CG_DEFAULTS, DISTURBANCE_DEFAULTS, PROFILE_DEFAULTS,
    SCENARIO_FORMAT_VERSION, SOLVER_BACKEND, THREADS,
)
from src.data.schema import SCENARIO_SCHEMA, validate_document
from src.utils.errors import ConfigError


class BlockingTimes(BaseModel):
    """Simplified blocking time components in whole seconds"""
    model_config = ConfigDict(frozen=True)

    setup_margin: int = Field(default=BLOCKING_TIME["setup_margin"], ge=0)
    release_margin: int = Field(default=BLOCKING_TIME["release_margin"], ge=0)
    clear_time: int = Field(default=BLOCKING_TIME["clear_time"], ge=0)


class ProfileOptions(BaseModel):
    """Variation settings for speed-profile generation"""
    model_config = ConfigDict(frozen=True)

    k: Optional[int] = Field(default=PROFILE_DEFAULTS["k"], ge=1)
    speed_levels: Tuple[float, ...] = PROFILE_DEFAULTS["speed_levels"]
    detour_factor: float = Field(default=PROFILE_DEFAULTS["detour_factor"], ge=1.0)
    max_inserted_halts: int = Field(default=PROFILE_DEFAULTS["max_inserted_halts"], ge=0, le=1)
    blocking: BlockingTimes = BlockingTimes()

    @field_validator("speed_levels")
    @classmethod
    def _levels_are_fractions(cls, value):
        if not value:
            raise ValueError("at least one speed level is required")
        if any(level <= 0 or level > 1 for level in value):
            raise ValueError("speed levels must lie in (0, 1]")
        return tuple(sorted(set(value), reverse=True))


class CgConfig(BaseModel):
    """Column generation run settings"""
    model_config = ConfigDict(frozen=True)

    gap_target: float = Field(default=CG_DEFAULTS["gap_target"], ge=0.0, le=1.0)
    time_limit: Optional[float] = Field(default=None, gt=0)
    pricing_time_limit: Optional[float] = Field(default=CG_DEFAULTS["pricing_time_limit"], gt=0)
    threads: int = Field(default=THREADS, ge=1)
    seed: int = CG_DEFAULTS["seed"]
    horizon: int = Field(default=DISTURBANCE_DEFAULTS["horizon"], gt=0)
    negative_rc_tol: float = Field(default=CG_DEFAULTS["negative_rc_tol"], gt=0)
    fcfs_penalty: float = Field(default=CG_DEFAULTS["fcfs_penalty"], gt=0)
    tailing_off_window: int = Field(default=CG_DEFAULTS["tailing_off_window"], ge=1)
    tailing_off_rel: float = Field(default=CG_DEFAULTS["tailing_off_rel"], ge=0)
    reconcile_every: int = Field(default=CG_DEFAULTS["reconcile_every"], ge=0)
    epsilon: int = Field(default=CG_DEFAULTS["epsilon"], ge=1)
    clip_early_arrivals: bool = CG_DEFAULTS["clip_early_arrivals"]
    skip_inactive_cliques: bool = CG_DEFAULTS["skip_inactive_cliques"]
    solver_backend: str = SOLVER_BACKEND

    @field_validator("solver_backend")
    @classmethod
    def _known_backend(cls, value):
        if value not in ("bundled", "highs"):
            raise ValueError(f"unknown solver backend '{value}'")
        return value


class ScenarioConfig(BaseModel):
    """A disturbance scenario over one network, encoded as NN-n-k"""
    model_config = ConfigDict(frozen=True)

    format_version: int = SCENARIO_FORMAT_VERSION
    name: Optional[str] = None
    network: Path
    n: int = Field(ge=1)
    k: Optional[int] = Field(default=PROFILE_DEFAULTS["k"], ge=1)
    detour_factor: float = Field(default=PROFILE_DEFAULTS["detour_factor"], ge=1.0)
    speed_levels: Tuple[float, ...] = PROFILE_DEFAULTS["speed_levels"]
    q: float = Field(default=DISTURBANCE_DEFAULTS["q"], ge=0.0, le=1.0)
    rate: float = Field(default=DISTURBANCE_DEFAULTS["rate"], gt=0)
    horizon: int = Field(default=DISTURBANCE_DEFAULTS["horizon"], gt=0)
    seed: int = CG_DEFAULTS["seed"]
    replications: int = Field(default=DISTURBANCE_DEFAULTS["replications"], ge=1)
    gap_target: float = Field(default=CG_DEFAULTS["gap_target"], ge=0.0, le=1.0)
    time_limit: Optional[float] = Field(default=None, gt=0)
    pricing_time_limit: Optional[float] = Field(default=CG_DEFAULTS["pricing_time_limit"], gt=0)
    threads: int = Field(default=THREADS, ge=1)
    parallel_reps: bool = False
    solver_backend: str = SOLVER_BACKEND
    blocking: BlockingTimes = BlockingTimes()

    @model_validator(mode="after")
    def _supported_version(self):
        if self.format_version != SCENARIO_FORMAT_VERSION:
            raise ValueError(f"unsupported scenario format_version {self.format_version}")
        return self

    @property
    def code(self) -> str:
        """Scenario code in the NN-n-k form (k='all' when unlimited)"""
        network_name = self.name or self.network.stem
        return f"{network_name}-{self.n}-{self.k if self.k is not None else 'all'}"

    def profile_options(self) -> ProfileOptions:
        return ProfileOptions(
            k=self.k, speed_levels=self.speed_levels,
            detour_factor=self.detour_factor, blocking=self.blocking,
        )

    def cg_config(self, threads: Optional[int] = None) -> CgConfig:
        return CgConfig(
            gap_target=self.gap_target, time_limit=self.time_limit,
            pricing_time_limit=self.pricing_time_limit,
            threads=threads or self.threads, seed=self.seed, horizon=self.horizon,
            solver_backend=self.solver_backend,
        )

    def with_overrides(self, **overrides: Any) -> "ScenarioConfig":
        """Return a copy with every non-None override applied and re-validated"""
        values = self.model_dump()
        values.update({key: value for key, value in overrides.items() if value is not None})
        return build_config(ScenarioConfig, values)


def build_config(model_cls, values: Dict[str, Any]):
    """Validate values into model_cls, converting pydantic failures into ConfigError"""
    try:
        return model_cls.model_validate(values)
    except ValidationError as exc:
        raise ConfigError(f"invalid {model_cls.__name__}: {exc}") from exc


def load_scenario(path) -> ScenarioConfig:
    """Load a scenario file; relative network paths resolve against the file's folder"""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc

    problems = validate_document(raw, SCENARIO_SCHEMA)
    if problems:
        raise ConfigError(f"scenario file {path} is invalid: " + "; ".join(problems))

    network = Path(raw["network"])
    if not network.is_absolute():
        raw["network"] = str((path.parent / network).resolve())
    return build_config(ScenarioConfig, raw)
