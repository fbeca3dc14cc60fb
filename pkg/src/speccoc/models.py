# src/speccoc/models.py

from __future__ import annotations

from typing import Any, ClassVar, Dict, List, Literal, Optional, Set, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# ------------------------------------------------------------
# Small parsers shared by the config models and the CLI
# ------------------------------------------------------------

def parse_complex(value: Union[str, float, int, complex, List[float]]) -> complex:
    """
    Accept 1.5, "1.5", "1-2i", "1-2j", "-0.5i" or [re, im].
    """
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex pair must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float, complex)):
        return complex(value)
    text = str(value).strip().replace(" ", "").replace("i", "j")
    return complex(text)


def parse_csv_floats(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def parse_csv_ints(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x.strip()]


# ------------------------------------------------------------
# Directive source
# ------------------------------------------------------------

SubstitutionInput = Union[str, Dict[str, Any]]


class DirectiveConfig(BaseModel):
    """
    {"type": "periodic", "subs": [...]}
    {"type": "explicit", "subs": [...]}
    {"type": "rauzy", "perm": [...], "lambda": [...] | "random_seed": 7, "accel": "zorich"}

    Each entry of subs is a stock name ("fibonacci"), the text form
    "1:12;2:1" or the JSON form {"m": 2, "images": [[1, 2], [1]]}.
    """

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    type: Literal["periodic", "explicit", "rauzy"]
    subs: List[SubstitutionInput] = Field(default_factory=list)
    perm: Optional[List[int]] = None
    lam: Optional[List[float]] = Field(default=None, alias="lambda")
    random_seed: Optional[int] = None
    accel: Literal["none", "zorich"] = "none"
    recognizability_asserted: bool = False

    @model_validator(mode="after")
    def check_source(self) -> "DirectiveConfig":
        if self.type in ("periodic", "explicit") and not self.subs:
            raise ValueError(f"'subs' is required for a {self.type} directive sequence")
        if self.type == "rauzy":
            if self.perm is None:
                raise ValueError("'perm' is required for a rauzy directive sequence")
            if self.lam is None and self.random_seed is None:
                raise ValueError("rauzy directive needs 'lambda' or 'random_seed'")
            if self.lam is not None and len(self.lam) != len(self.perm):
                raise ValueError("'lambda' and 'perm' must have the same length")
            if self.lam is not None and any(x <= 0 for x in self.lam):
                raise ValueError("'lambda' entries must be strictly positive")
        return self


# ------------------------------------------------------------
# Suspension / test function
# ------------------------------------------------------------

class SuspensionConfig(BaseModel):
    """s omitted: all-ones roof, or the self-similar roof when self_similar is set."""

    model_config = ConfigDict(extra="forbid")

    s: Optional[List[float]] = None
    level: int = Field(default=0, ge=0)
    self_similar: bool = False

    @field_validator("s")
    @classmethod
    def roof_positive(cls, v):
        if v is not None and any(x <= 0 for x in v):
            raise ValueError("roof vector entries must be strictly positive")
        return v


class FunctionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["simple", "lipschitz"] = "simple"
    b: Optional[List[Union[str, float, List[float]]]] = None
    profile_path: Optional[str] = None

    @model_validator(mode="after")
    def check_kind(self) -> "FunctionConfig":
        if self.kind == "lipschitz" and not self.profile_path:
            raise ValueError("'profile_path' is required for kind=lipschitz")
        if self.b is not None:
            for x in self.b:
                parse_complex(x)
        return self

    def b_complex(self) -> Optional[List[complex]]:
        return None if self.b is None else [parse_complex(x) for x in self.b]


# ------------------------------------------------------------
# Analysis
# ------------------------------------------------------------

class OmegaGrid(BaseModel):
    model_config = ConfigDict(extra="forbid")

    start: float
    stop: float
    count: int = Field(ge=1, le=1_000_000)
    spacing: Literal["linear", "log"] = "linear"

    @model_validator(mode="after")
    def check_range(self) -> "OmegaGrid":
        if self.spacing == "log" and (self.start <= 0 or self.stop <= 0):
            raise ValueError("log-spaced grids need positive endpoints")
        return self


Command = Literal["lyapunov", "dimension", "singularity", "gr", "rauzy", "verify"]


class AnalysisConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    STOCHASTIC: ClassVar[Set[str]] = {"dimension", "singularity", "gr"}

    command: Command
    n: int = Field(default=30, ge=1, le=100_000)
    xi: Optional[List[float]] = None
    omega: Optional[float] = None
    omega_grid: Optional[Union[OmegaGrid, List[float]]] = None
    vector: Optional[List[Union[str, float, List[float]]]] = None
    variant: Literal["vector", "matrix"] = "vector"
    depth: int = Field(default=40, ge=1, le=10_000)
    R_list: Optional[List[float]] = None
    samples: int = Field(default=64, ge=1, le=1_000_000)
    taper: Literal["fejer", "hann"] = "hann"
    seed: Optional[int] = Field(default=None, ge=0)
    margin: float = Field(default=0.01, ge=0.0)
    steps: int = Field(default=20, ge=1, le=1_000_000)
    rauzy_class: bool = False
    suite: Literal["identities", "oracles", "towers", "all"] = "all"
    fixtures: List[str] = Field(default_factory=list)
    generic: bool = True
    length_cap: int = Field(default=10_000_000, ge=1)
    threads: Optional[int] = Field(default=None, ge=1)

    @field_validator("R_list")
    @classmethod
    def r_list_increasing(cls, v):
        if v is None:
            return v
        if len(v) < 3:
            raise ValueError("R_list needs at least 3 points")
        if any(r <= 0 for r in v) or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("R_list must be positive and strictly increasing")
        return v

    @model_validator(mode="after")
    def check_command(self) -> "AnalysisConfig":
        cmd = self.command
        if cmd in self.STOCHASTIC and self.seed is None:
            raise ValueError(f"'seed' is mandatory for the {cmd} command")
        if cmd == "lyapunov":
            if (self.xi is None) == (self.omega is None):
                raise ValueError("lyapunov needs exactly one of 'xi' or 'omega'")
            if self.omega is not None and self.omega != 0 and self.seed is None:
                raise ValueError("'seed' is mandatory for lyapunov runs along omega s")
        if cmd in ("dimension", "singularity") and self.omega is None and self.omega_grid is None:
            raise ValueError(f"{cmd} needs 'omega' or 'omega_grid'")
        if cmd == "gr":
            if self.R_list is None:
                raise ValueError("gr needs 'R_list'")
            if self.omega is None:
                raise ValueError("gr needs 'omega'")
        if self.vector is not None:
            for x in self.vector:
                parse_complex(x)
        return self


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    json_path: Optional[str] = None
    csv_path: Optional[str] = None


# ------------------------------------------------------------
# RunConfig: root schema object
# ------------------------------------------------------------

class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directive: Optional[DirectiveConfig] = None
    suspension: SuspensionConfig = Field(default_factory=SuspensionConfig)
    function: FunctionConfig = Field(default_factory=FunctionConfig)
    analysis: AnalysisConfig
    output: OutputConfig = Field(default_factory=OutputConfig)

    @model_validator(mode="after")
    def check_directive(self) -> "RunConfig":
        cmd = self.analysis.command
        if cmd != "verify" and self.directive is None:
            raise ValueError(f"'directive' is required for the {cmd} command")
        if cmd == "rauzy" and self.directive.type != "rauzy":
            raise ValueError("the rauzy command needs a directive of type 'rauzy'")
        if cmd == "singularity" and (self.directive.type != "periodic" or len(self.directive.subs) != 1):
            raise ValueError("singularity scans need a periodic directive with one substitution")
        return self


# ------------------------------------------------------------
# Result record (one per run)
# ------------------------------------------------------------

class ResultRecord(BaseModel):
    command: Command
    inputs: Dict[str, Any]
    outputs: Dict[str, Any]
    rows: List[Dict[str, Any]] = Field(default_factory=list)
    versions: Dict[str, str] = Field(default_factory=dict)
    wall_time: float = 0.0
    exit_code: int = 0
