"""Declarative problem configuration (YAML or JSON) validated with pydantic."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .assembly import ConfigError
from .laminate import MATERIALS, InadmissibleMaterialError, Lamina

SCHEMA_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GeometryConfig(_Strict):
    shape: Literal["rectangle", "circle"] = "rectangle"
    Lx: Optional[float] = Field(None, gt=0)
    Ly: Optional[float] = Field(None, gt=0)
    R: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _dims(self):
        if self.shape == "rectangle":
            if self.Lx is None:
                raise ValueError("rectangle needs Lx")
            if self.Ly is None:
                self.Ly = self.Lx
            if self.R is not None:
                raise ValueError("R applies to circles only")
        else:
            if self.R is None:
                raise ValueError("circle needs R")
            if self.Lx is not None or self.Ly is not None:
                raise ValueError("Lx/Ly apply to rectangles only")
        return self

    @property
    def length(self) -> float:
        return self.Lx if self.shape == "rectangle" else self.R


class MaterialConfig(_Strict):
    E1: float
    E2: float
    G12: float
    G13: float
    G23: float
    nu12: float
    rho: float = 0.0

    def lamina(self) -> Lamina:
        return Lamina(**self.model_dump())


class IsotropicMaterialConfig(_Strict):
    E: float
    nu: float
    rho: float = 0.0

    def lamina(self) -> Lamina:
        return Lamina.isotropic(self.E, self.nu, self.rho)


class LayupConfig(_Strict):
    """Plies bottom to top; ``materials`` is one name or one name per ply."""

    angles: List[float] = Field(min_length=1)
    materials: Union[str, List[str]]
    fractions: Optional[List[float]] = None

    @model_validator(mode="after")
    def _lengths(self):
        n = len(self.angles)
        if isinstance(self.materials, list) and len(self.materials) != n:
            raise ValueError("one material per ply is required")
        if self.fractions is not None:
            if len(self.fractions) != n:
                raise ValueError("one fraction per ply is required")
            if any(f <= 0 for f in self.fractions) or abs(sum(self.fractions) - 1) > 1e-12:
                raise ValueError("fractions must be positive and sum to 1")
        return self

    def material_names(self) -> List[str]:
        if isinstance(self.materials, str):
            return [self.materials] * len(self.angles)
        return list(self.materials)


DofName = Literal["u0", "v0", "w", "beta_x", "beta_y"]
EdgeName = Literal["left", "right", "lower", "upper"]


class BoundaryConfig(_Strict):
    preset: Optional[Literal["SSSS", "SSSS2", "CCCC"]] = "SSSS"
    edges: Optional[Dict[EdgeName, List[DofName]]] = None
    clamp_ring: Optional[bool] = None


class HistoryConfig(_Strict):
    """``t1`` and ``alpha`` default to the first period ``T1`` and ``2/T1``."""

    kind: Literal["step", "triangular", "sine", "blast"] = "step"
    t1: Optional[float] = Field(None, gt=0)
    alpha: Optional[float] = Field(None, gt=0)


class LoadConfig(_Strict):
    kind: Literal["uniform", "sinusoidal"] = "uniform"
    levels: List[float] = Field(default_factory=list)
    level_units: Literal["P_bar", "q0"] = "P_bar"
    a: Optional[float] = Field(None, gt=0)
    b: Optional[float] = Field(None, gt=0)
    history: HistoryConfig = HistoryConfig()

    @field_validator("levels")
    @classmethod
    def _levels(cls, v):
        if any(x < 0 for x in v):
            raise ValueError("load levels must be non-negative")
        if any(b < a for a, b in zip(v[:-1], v[1:])):
            raise ValueError("load levels must be non-decreasing")
        return v


class MeshConfig(_Strict):
    elements: Tuple[int, int] = (11, 11)
    degree: int = Field(3, ge=2, le=6)

    @field_validator("elements")
    @classmethod
    def _positive(cls, v):
        if min(v) < 1:
            raise ValueError("need at least one element per direction")
        return v


class SolverConfig(_Strict):
    method: Literal["newton", "picard"] = "newton"
    tol: float = Field(0.01, gt=0)
    max_iter: int = Field(50, ge=1)
    n_load_steps: int = Field(1, ge=1)
    max_halvings: int = Field(6, ge=0)
    relaxation: Union[Literal["auto"], float] = "auto"

    @field_validator("relaxation")
    @classmethod
    def _relax(cls, v):
        if v != "auto" and not 0 < v <= 1:
            raise ValueError("relaxation must be in (0, 1] or 'auto'")
        return v


class TimeConfig(_Strict):
    """Step size and horizon; ``None`` means ``T1/100`` and ``1.2 * T1``."""

    dt: Optional[float] = Field(None, gt=0)
    t_end: Optional[float] = Field(None, gt=0)
    periods: float = Field(1.2, gt=0)
    steps_per_period: int = Field(100, ge=1)
    beta: float = 0.25
    gamma: float = 0.5


class NormalizationConfig(_Strict):
    kind: Optional[Literal["identity", "isotropic-table1", "circular-table2",
                           "composite-tables", "pagano-hat"]] = None
    length: Optional[float] = Field(None, gt=0)
    modulus: Optional[float] = Field(None, gt=0)


class OutputConfig(_Strict):
    """Evaluation point (plate center by default) and stress height (top)."""

    point: Optional[Tuple[float, float]] = None
    z: Optional[float] = None


AnalysisType = Literal["linear-static", "nonlinear-static", "linear-transient",
                       "nonlinear-transient"]


class ProblemConfig(_Strict):
    version: int = SCHEMA_VERSION
    name: str = "problem"
    analysis: AnalysisType = "nonlinear-static"
    geometry: GeometryConfig
    thickness: float = Field(gt=0)
    materials: Dict[str, Union[MaterialConfig, IsotropicMaterialConfig]] = Field(default_factory=dict)
    layup: LayupConfig
    boundary: BoundaryConfig = BoundaryConfig()
    load: LoadConfig = LoadConfig()
    mesh: MeshConfig = MeshConfig()
    solver: SolverConfig = SolverConfig()
    time: TimeConfig = TimeConfig()
    normalization: NormalizationConfig = NormalizationConfig()
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def _consistency(self):
        if self.version != SCHEMA_VERSION:
            raise ValueError("unsupported config version %d" % self.version)
        for name in self.layup.material_names():
            if name not in self.materials and name not in MATERIALS:
                raise ValueError("unknown material %r" % name)
        if self.geometry.shape == "circle":
            if self.boundary.preset not in (None, "CCCC") or self.boundary.edges:
                raise ValueError("circular plates support only the CCCC preset")
            if self.load.kind != "uniform":
                raise ValueError("circular plates support only uniform loads")
        if self.output.z is not None and abs(self.output.z) > self.thickness / 2:
            raise ValueError("output z outside the laminate")
        if self.transient and len(self.load.levels) > 1:
            raise ValueError("transient analyses take a single load level")
        return self

    @property
    def transient(self) -> bool:
        return self.analysis.endswith("transient")

    @property
    def nonlinear(self) -> bool:
        return self.analysis.startswith("nonlinear")

    def laminas(self) -> List[Lamina]:
        out = []
        for name in self.layup.material_names():
            entry = self.materials.get(name)
            out.append(entry.lamina() if entry is not None else MATERIALS[name])
        return out


def parse_config(data: dict) -> ProblemConfig:
    """Validate a mapping; every failure surfaces as ``ConfigError``."""
    try:
        cfg = ProblemConfig.model_validate(data)
        cfg.laminas()
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    except InadmissibleMaterialError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path: str | Path) -> ProblemConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("cannot read %s: %s" % (path, exc)) from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("malformed config: %s" % exc) from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    return parse_config(data)


def config_hash(cfg: ProblemConfig) -> str:
    canon = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def json_schema() -> dict:
    return ProblemConfig.model_json_schema()
