"""Pydantic request/response models for the service surface."""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field


class ConfigModel(BaseModel):
    """Wire form of an experiment configuration (flat keys)."""

    model_config = ConfigDict(extra="forbid")

    K: int
    mu: list[float]
    T: int
    algorithm: Literal["reg-exp3", "exp3", "ucb"] = "reg-exp3"
    alpha: float = 1.0
    mode: Literal["uncorrupted", "corrupted"] = "uncorrupted"
    beta: Optional[float] = None
    arm_kind: Union[str, list[str]] = "bernoulli"
    reps: int = 1
    seed: int = 0
    corruption: Literal["none", "flip-best", "targeted-ucb"] = "none"
    out_dir: Optional[str] = None
    snapshot_stride: int = 1000
    levels: list[float] = Field(default_factory=lambda: [0.9, 0.95])
    directions: Optional[list[list[float]]] = None
    gamma_override: Optional[float] = None


class ScheduleRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    T: int
    K: int
    alpha: float = 1.0
    mode: Literal["uncorrupted", "corrupted"] = "uncorrupted"
    beta: Optional[float] = None
    gamma_override: Optional[float] = None


class ScheduleResponse(BaseModel):
    T: int
    K: int
    alpha: float
    eta: float
    epsilon: float
    lam: float
    gamma: float
    mode: str
    beta: Optional[float] = None


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ConfigModel
    rep_index: int = 0


class ArmSummary(BaseModel):
    arm: int
    mu_true: float
    pulls: int
    mean: Optional[float]
    variance: Optional[float]
    std_error: Optional[float]
    ci: dict[str, Optional[list[float]]]


class StabilitySummary(BaseModel):
    ratio_pulls: list[float]
    ratio_oracle: list[float]
    is_to_oracle: float
    n_star: list[float]


class RunSummaryResponse(BaseModel):
    rep: int
    seed: int
    algorithm: str
    per_arm: list[ArmSummary]
    pseudo_regret: float
    corruption_spent: float
    xbar: list[float]
    stability: StabilitySummary
    wall_time_s: float
    directions: Optional[list[dict]] = None


class McRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ConfigModel
    out_dir: str
    workers: int = 1
    format: Literal["csv", "json"] = "csv"
    write_rows: bool = True


class McResponse(BaseModel):
    aggregate_path: str
    rows_path: Optional[str]
    reps: int
    failed_reps: int
    regret_mean: Optional[float]
    coverage_by_level: dict
    ks: list[dict]


class SelftestCheck(BaseModel):
    name: str
    ok: bool
    detail: str


class SelftestResponse(BaseModel):
    ok: bool
    checks: list[SelftestCheck]
