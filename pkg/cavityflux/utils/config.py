"""
Configuration manager for cavityflux.

Settings are resolved from the following sources (in order of increasing precedence):

1. DEFAULT VALUES: pydantic field defaults below (they describe the S2-1 model)
2. PRESET: one of the named models in ``cavityflux.harness.presets`` (``--model``)
3. FILE-BASED CONFIGURATION: a single JSON file (``--config`` or CAVITYFLUX_CONFIG)
4. ENVIRONMENT VARIABLES: ``CAVITYFLUX_*`` variables, including those from a ``.env`` file
5. EXPLICIT OVERRIDES: values passed by the CLI (``--k``, ``--samples``, ``--seeds`` ...)

Every merge is re-validated by the pydantic models, so a bad value anywhere surfaces as a
ConfigurationError rather than as a late numerical failure.
"""

import copy
import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigurationError

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

SOLVER_IDS = ("nr", "pcg", "iht", "niht", "cgiht", "sp", "cgstp")


class AppSettings(BaseModel):
    """Application settings."""
    name: str = "cavityflux"
    log_level: str = "INFO"
    workers: int = 4

    @field_validator("workers")
    @classmethod
    def validate_workers(cls, v: int) -> int:
        """Worker pools need at least one thread."""
        if v < 1:
            raise ValueError("workers must be a positive integer")
        return v


class GeometrySettings(BaseModel):
    """Physical cavity dimensions in micrometres."""
    cavity_radius_um: float = 400.0
    cavity_half_height_um: float = 850.0
    capsule_radius_um: float = 120.0
    leh_radius_um: float = 190.0

    @model_validator(mode="after")
    def check_nesting(self) -> "GeometrySettings":
        if not 0 < self.capsule_radius_um < self.cavity_radius_um:
            raise ValueError("capsule radius must lie in (0, cavity radius)")
        if not 0 <= self.leh_radius_um < self.cavity_radius_um:
            raise ValueError("LEH radius must lie in [0, cavity radius)")
        if self.cavity_half_height_um <= self.capsule_radius_um:
            raise ValueError("cavity half-height must exceed the capsule radius")
        return self


class MeshSettings(BaseModel):
    """Element resolutions plus explicit count overrides."""
    capsule_dtheta_deg: float = 5.0
    capsule_dphi_deg: float = 5.0
    end_dr_um: float = 15.0
    end_dphi_deg: float = 2.5
    wall_dz_um: Optional[float] = None
    wall_dphi_deg: float = 5.0
    end_rings: Optional[int] = None
    wall_rows: Optional[int] = 44
    wall_azimuth: Optional[int] = None
    wall_guard_azimuth: Optional[int] = 64

    @model_validator(mode="after")
    def check_positive(self) -> "MeshSettings":
        for name in ("capsule_dtheta_deg", "capsule_dphi_deg", "end_dr_um", "end_dphi_deg",
                     "wall_dphi_deg"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.wall_dz_um is None and self.wall_rows is None:
            raise ValueError("either wall_dz_um or wall_rows must be given")
        for name in ("end_rings", "wall_rows", "wall_azimuth", "wall_guard_azimuth"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"{name} must be a positive integer")
        return self


class SourceSettings(BaseModel):
    """Laser spot model on the wall."""
    beams: int = 8
    ring_fraction: float = 0.45
    azimuth_offset_deg: float = 45.0
    spot_radius_um: float = 90.0
    beam_flux: float = 1.0
    beam_power: Optional[float] = None
    profile: Literal["uniform", "gaussian"] = "uniform"

    @field_validator("beams")
    @classmethod
    def validate_beams(cls, v: int) -> int:
        """Beams are split evenly between the two entrance holes."""
        if v < 2 or v % 2:
            raise ValueError("beams must be a positive even number")
        return v


class MaterialSettings(BaseModel):
    """Albedo material constants and the time snapshot."""
    upsilon: float = 4.87
    alpha: float = 8.0 / 13.0
    beta: float = 16.0 / 13.0
    t: float = 1.0

    @model_validator(mode="after")
    def check_bounds(self) -> "MaterialSettings":
        for name in ("upsilon", "t"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.beta < 1:
            raise ValueError("beta must be at least 1")
        return self


class BasisSettings(BaseModel):
    """Expansion term counts per family."""
    capsule_terms: int = 400
    end_face_terms: int = 325
    wall_terms: int = 1225

    @model_validator(mode="after")
    def check_terms(self) -> "BasisSettings":
        for name in ("capsule_terms", "end_face_terms", "wall_terms"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        return self


class SamplingSettings(BaseModel):
    """Per-region sparsity estimates and sample count overrides (capsule, top, bottom, wall)."""
    sparsity: Tuple[int, int, int, int] = (30, 35, 35, 100)
    samples: Optional[Tuple[int, int, int, int]] = (150, 150, 150, 400)
    seed: int = 0


class SolverSettings(BaseModel):
    """Tolerances and iteration caps."""
    newton_tol: float = 1e-8
    newton_max_iter: int = 30
    pcg_inner_tol: float = 1e-8
    pcg_max_inner: int = 2000
    pcg_max_outer: int = 60
    inner_tol: float = 1e-8
    iht_max_iter: int = 5000
    pursuit_max_iter: int = 200
    iht_step: float = 1.0
    outer_tol: float = 1e-6
    outer_max: int = 50
    max_damping: int = 20


class BenchSettings(BaseModel):
    """Benchmark orchestration."""
    solvers: List[str] = Field(default_factory=lambda: ["nr", "pcg", "iht", "cgiht", "cgstp"])
    seeds: int = 20
    out_dir: str = "results"
    cache_dir: Optional[str] = None
    max_matrix_gib: float = 8.0
    reference: str = "nr"

    @field_validator("solvers")
    @classmethod
    def validate_solvers(cls, v: List[str]) -> List[str]:
        """Solver identifiers must be known and the list non-empty."""
        names = [s.strip().lower() for s in v if s.strip()]
        if not names:
            raise ValueError("at least one solver is required")
        unknown = sorted(set(names) - set(SOLVER_IDS))
        if unknown:
            raise ValueError(f"unknown solvers: {unknown}")
        return names

    @field_validator("seeds")
    @classmethod
    def validate_seeds(cls, v: int) -> int:
        """At least one seed per solver."""
        if v < 1:
            raise ValueError("seeds must be a positive integer")
        return v


class Settings(BaseModel):
    """Main settings class combining all sections."""
    app: AppSettings = Field(default_factory=AppSettings)
    geometry: GeometrySettings = Field(default_factory=GeometrySettings)
    mesh: MeshSettings = Field(default_factory=MeshSettings)
    source: SourceSettings = Field(default_factory=SourceSettings)
    material: MaterialSettings = Field(default_factory=MaterialSettings)
    basis: BasisSettings = Field(default_factory=BasisSettings)
    sampling: SamplingSettings = Field(default_factory=SamplingSettings)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    bench: BenchSettings = Field(default_factory=BenchSettings)
    model_name: Optional[str] = None


def _merge(base: Dict[str, Any], data: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merge ``data`` into a copy of ``base``."""
    result = copy.deepcopy(base)
    for key, value in data.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = _merge(result[key], value)
        else:
            result[key] = value
    return result


def _parse_int_tuple(text: str) -> Tuple[int, ...]:
    return tuple(int(part) for part in text.replace(" ", "").split(",") if part)


class Config:
    """Configuration manager for a cavityflux run."""

    # "ENV_VAR": (["section", "key"], converter)
    ENV_VAR_MAPPING = {
        "CAVITYFLUX_LOG_LEVEL": (["app", "log_level"], str),
        "CAVITYFLUX_WORKERS": (["app", "workers"], int),
        "CAVITYFLUX_SEED": (["sampling", "seed"], int),
        "CAVITYFLUX_SEEDS": (["bench", "seeds"], int),
        "CAVITYFLUX_OUT_DIR": (["bench", "out_dir"], str),
        "CAVITYFLUX_CACHE_DIR": (["bench", "cache_dir"], str),
        "CAVITYFLUX_MAX_MATRIX_GIB": (["bench", "max_matrix_gib"], float),
        "CAVITYFLUX_TIME": (["material", "t"], float),
    }

    def __init__(self, config_file: Optional[str] = None, preset: Optional[str] = None,
                 use_environment: bool = True):
        """
        Build the settings from defaults, preset, file and environment.

        Args:
            config_file: Optional JSON configuration file
            preset: Optional model preset name (s2-1, s2-2, s3-1, s3-2)
            use_environment: Read CAVITYFLUX_* variables (and .env) when True
        """
        if use_environment:
            load_dotenv()
            config_file = config_file or os.getenv("CAVITYFLUX_CONFIG")

        # 1. DEFAULT VALUES
        self._data: Dict[str, Any] = Settings().model_dump()

        # 2. PRESET
        if preset:
            self.apply_preset(preset)

        # 3. FILE-BASED CONFIGURATION
        self.config_file = Path(config_file) if config_file else None
        if self.config_file is not None:
            self._load_config_file(self.config_file)

        # 4. ENVIRONMENT VARIABLES
        if use_environment:
            self._load_environment_variables()

        self.settings = self._validate(self._data)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Config":
        """Build a configuration from a plain dictionary (no file, no environment)."""
        config = cls(use_environment=False)
        config.update(data)
        return config

    def _validate(self, data: Dict[str, Any]) -> Settings:
        try:
            return Settings.model_validate(data)
        except ValidationError as error:
            raise ConfigurationError(f"invalid configuration: {error}") from error

    def apply_preset(self, name: str) -> None:
        """Overlay one of the named model presets."""
        from ..harness.presets import preset_settings

        self._data = _merge(self._data, preset_settings(name))
        self._data["model_name"] = name
        logger.debug("Applied preset %s", name)

    def _load_config_file(self, path: Path) -> None:
        if not path.exists():
            raise ConfigurationError(f"config file not found: {path}")
        try:
            with open(path, "r", encoding="utf-8") as file_handle:
                user_config = json.load(file_handle)
        except (json.JSONDecodeError, OSError) as error:
            raise ConfigurationError(f"error loading config file {path}: {error}") from error
        if not isinstance(user_config, dict):
            raise ConfigurationError(f"config file {path} must hold a JSON object")
        preset = user_config.pop("model", None)
        if preset:
            self.apply_preset(preset)
        self._data = _merge(self._data, user_config)
        logger.info("Loaded configuration from %s", path)

    def _load_environment_variables(self) -> None:
        for env_var, (config_path, converter) in self.ENV_VAR_MAPPING.items():
            value = os.getenv(env_var)
            if value is None:
                continue
            try:
                self._set_value(config_path, converter(value.split("#")[0].strip()))
            except (ValueError, TypeError) as error:
                logger.warning("Invalid value for %s: %s - %s", env_var, value, error)
        samples = os.getenv("CAVITYFLUX_SAMPLES")
        if samples:
            try:
                self._set_value(["sampling", "samples"], _parse_int_tuple(samples))
            except ValueError:
                logger.warning("Invalid CAVITYFLUX_SAMPLES value: %s", samples)

    def _set_value(self, config_path: List[str], value: Any) -> None:
        current = self._data
        for key in config_path[:-1]:
            current = current.setdefault(key, {})
        current[config_path[-1]] = value

    def update(self, overrides: Dict[str, Any]) -> None:
        """Merge explicit overrides (highest precedence) and re-validate."""
        self._data = _merge(self._data, overrides)
        self.settings = self._validate(self._data)

    def get(self, section: str, key: str, default: Any = None) -> Any:
        """Get a configuration value by section and key."""
        section_obj = getattr(self.settings, section, None)
        if section_obj is None:
            logger.warning("Configuration section not found: %s, using default: %s",
                           section, default)
            return default
        return getattr(section_obj, key, default)

    def to_dict(self) -> Dict[str, Any]:
        """Plain dictionary view of the validated settings."""
        return self.settings.model_dump()

    def geometry_hash(self) -> str:
        """Stable hash of everything that determines the view-factor matrix."""
        payload = {
            "geometry": self.settings.geometry.model_dump(),
            "mesh": self.settings.mesh.model_dump(),
        }
        text = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

    def save(self, path: Path) -> None:
        """Write the resolved configuration as JSON."""
        with open(path, "w", encoding="utf-8") as file_handle:
            json.dump(self.to_dict(), file_handle, indent=2)
        logger.info("Saved configuration to %s", path)

    def configure_logging(self) -> None:
        """Configure the root logger from ``app.log_level``."""
        log_level = getattr(logging, self.settings.app.log_level.upper(), logging.INFO)
        logging.basicConfig(level=log_level, format=LOG_FORMAT)
        logging.getLogger().setLevel(log_level)
        logger.debug("Logging configured with level: %s", self.settings.app.log_level)
