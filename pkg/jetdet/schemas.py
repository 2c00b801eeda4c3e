from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

Pair = Tuple[str, str]  # exact [re, im] as rational strings


class NormReport(BaseModel):
    norm_kind: str
    s: float
    value: float
    trunc: int


class JetRecord(BaseModel):
    n_vars: int
    trunc: int
    terms: List[Tuple[List[int], Pair]] = []


class NormRecord(BaseModel):
    k: int
    tau: float
    C: float


class StepRecord(BaseModel):
    n: int
    u: List[JetRecord]  # components of u = Σ u_i ∂_i
    ord_b: Optional[int] = None  # None once b vanished
    norm: NormRecord


class ScheduleStepRecord(BaseModel):
    n: int
    s_n: float
    sigma_n: float
    norm: float
    bound: float
    ok: bool


class CriterionRecord(BaseModel):
    sum: float
    s: float
    margin: float
    ok: bool


class GridCheckRecord(BaseModel):
    s: float
    sum: float
    margin: float
    ok: bool


class CertificateRecord(BaseModel):
    """Serialized normalization run."""
    f: JetRecord
    g: JetRecord
    trunc: int
    work_trunc: Optional[int] = None
    mode: str = "jacobian"
    ideal: Optional[List[JetRecord]] = None
    steps: List[StepRecord] = []
    phi: List[JetRecord]
    inverse_phi: List[JetRecord]
    residual: JetRecord
    residual_is_zero: bool
    success: bool
    failure_degree: Optional[int] = None
    scale_factor: float = 1.0
    schedule: List[ScheduleStepRecord] = []
    schedule_offset: Optional[int] = None
    loss_k: Optional[int] = None
    m: Optional[float] = None
    criterion: Optional[CriterionRecord] = None
    grid_checks: List[GridCheckRecord] = []
    note: str = ""


class MilnorReport(BaseModel):
    f: str
    trunc: int
    mu: Optional[int] = None
    det_exp: Optional[int] = None
    perturbation_space: Optional[str] = None
    certified_degree: Optional[int] = None
    reason: str = ""


class MembershipRecord(BaseModel):
    monomial: List[int]
    generator: int
    coeff: Pair


class FourierRecord(BaseModel):
    trunc_r: int
    band: int
    terms: List[Tuple[Tuple[int, int], Pair]] = []


class CircleCertificateRecord(BaseModel):
    k: int
    g: FourierRecord
    trunc_r: int
    band: int
    steps: List[FourierRecord] = []  # coefficient a of each u = a ∂_r
    phi: FourierRecord  # r ↦ phi(r, θ)
    verified: bool
    matches_oracle: bool


class BenchEntry(BaseModel):
    name: str
    f: str
    n_vars: int
    trunc: int
    mu: Optional[int] = None
    det_exp: Optional[int] = None
    steps: int = 0
    order_gains: List[int] = []
    verified: bool = False
    criterion_ok: Optional[bool] = None
    seconds: float = 0.0
    error: Optional[str] = None


class BenchReport(BaseModel):
    system: Dict[str, Any]
    seed: int
    entries: List[BenchEntry] = []
    total_seconds: float = 0.0


class RunConfig(BaseModel):
    """Settings for one CLI invocation"""
    command: str
    trunc: int = Field(default=10, ge=2)
    scale_s: float = Field(default=0.45, gt=0)  # upper end S of the scale interval
    grid: List[float] = []  # sample radii, strictly increasing inside ]0, S[
    seed: int = 0
    radius: str = "1/4"  # rational radius for the least-squares weights
    ideal: Optional[List[str]] = None  # generators; None selects the Jacobian mode
    loss_k: int = Field(default=1, ge=0)
    m: Optional[float] = None
    output: Optional[str] = None

    @field_validator("grid")
    @classmethod
    def grid_increasing(cls, grid: List[float]) -> List[float]:
        for a, b in zip(grid, grid[1:]):
            if not a < b:
                raise ValueError("grid must be strictly increasing")
        return grid

    @model_validator(mode="after")
    def grid_inside_scale(self) -> "RunConfig":
        if any(not 0 < s < self.scale_s for s in self.grid):
            raise ValueError(f"grid points must lie in ]0, {self.scale_s}[")
        return self
