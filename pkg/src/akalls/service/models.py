"""Request/response schemas of the HTTP facade."""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class ProblemInfo(BaseModel):
    name: str
    dim: int
    declared_smoothness: Optional[List[float]] = None
    declared_noise: Optional[List[float]] = None


class ProblemListResponse(BaseModel):
    problems: List[str]


class RunRequest(BaseModel):
    """Experiment config: same keys as the CLI config file."""

    config: Dict[str, Any]
    workers: int = 1


class RunRecordModel(BaseModel):
    config_hash: str
    budget: int
    trial: int
    seed: int
    algo: str
    charged_requests: int
    distinct_reveals: int
    s_size: int
    s_nois_size: int
    excess_risk: Optional[float] = None
    std_error: Optional[float] = None
    wall_ms: float
    fallback: bool = False
    error: Optional[str] = None


class RunResponse(BaseModel):
    config_hash: str
    records: List[RunRecordModel]


class AuditH2Request(BaseModel):
    problem: str
    alpha: float
    L: float = Field(ge=1.0)
    pairs: int = 10_000
    seed: int = 0


class AuditH4Request(BaseModel):
    problem: str
    beta: float
    C: float = Field(default=1.0, ge=1.0)
    epsilons: Optional[List[float]] = None
    m: int = 200_000
    seed: int = 0


class AuditResponse(BaseModel):
    assumption: str
    tested: int
    violations: int
    passed: bool
    worst: Optional[Dict[str, Any]] = None
    details: List[Dict[str, Any]] = []


class NoiseFitRequest(BaseModel):
    problem: str
    epsilons: Optional[List[float]] = None
    m: int = 200_000
    seed: int = 0


class NoiseFitResponse(BaseModel):
    beta: float
    C: float


class RateFitRequest(BaseModel):
    records: List[RunRecordModel]
    algo: str = "akalls"


class RateFitResponse(BaseModel):
    algo: str
    slope: float
    intercept: float
    r_squared: float
    failed_trials: int
    curve: List[List[float]]
    theoretical_slope: Optional[float] = None


class ReportRequest(BaseModel):
    records: List[RunRecordModel]
    format: str = "csv"  # csv | json | svg
    config: Optional[Dict[str, Any]] = None


class ReportResponse(BaseModel):
    format: str
    content: str
