"""Request and response models for the HTTP service.

Responses carry structured rows; clients render CSV/JSON text
themselves so output bytes do not depend on where the computation ran.
"""

from __future__ import annotations

import math
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field

Method = Literal["CRLB", "CFI", "Bayesian"]
Estimator = Literal["posterior_mean", "map", "max_likelihood"]


class ScalingRequest(BaseModel):
    n_values: List[int] = Field(min_length=1)
    u0n: float = 1.0
    t_bs: float = 2.0
    t_phase: float = 10.0
    theta: float = 0.01
    xi_in: float = 0.0
    sigma: float = 0.0
    method: Method = "CFI"
    seed: int = 0
    # Bayesian-path controls
    m: int = 20
    trials: int = 500
    window: Tuple[float, float] = (-math.pi / 4, math.pi / 4)
    n_grid: int = 1001


class ScalingRow(BaseModel):
    N: int
    u0n: float
    t_bs: float
    t_phase: float
    theta: float
    xi_in: float
    sigma: float
    method: str
    sqrt_m_dtheta: float
    fisher_value: float
    seed: int


class PointError(BaseModel):
    point: dict
    error: str


class ScalingResponse(BaseModel):
    rows: List[ScalingRow]
    errors: List[PointError] = []


class PrefactorRequest(ScalingRequest):
    pass


class FitResult(BaseModel):
    beta: float
    exponent: float
    residual: float
    n_range: List[int]
    beta_free: float


class PrefactorResponse(BaseModel):
    fit: FitResult
    rows: List[ScalingRow]
    errors: List[PointError] = []


class TeScanRequest(BaseModel):
    n_atoms: int
    u0n: float = 1.0
    t_bs: float = 1.0
    t_phase_values: List[float] = Field(min_length=1)
    theta: float = 0.01
    xi_in: float = 0.0
    sigma: float = 0.0
    seed: int = 0


class TeScanResponse(BaseModel):
    t_e_best: float
    t_e_worst: float
    rows: List[ScalingRow]


class XiScanRequest(BaseModel):
    n_atoms: int
    u0n: float = 1.0
    t_bs: float = 20.0
    t_phase_values: List[float] = Field(min_length=1)
    xi_values: List[float] = Field(min_length=1)
    method: Literal["CRLB", "CFI"] = "CFI"
    theta: float = 0.01
    seed: int = 0


class XiScanRow(ScalingRow):
    xi_after_bs: float


class XiScanResponse(BaseModel):
    rows: List[XiScanRow]
    errors: List[PointError] = []


class ProbmapRequest(BaseModel):
    n_atoms: int
    u0n: float = 1.0
    t_bs: float = 1.0
    t_phase: float = 1.0
    xi_in: float = 0.0
    theta_values: List[float] = Field(min_length=1)


class ProbmapResponse(BaseModel):
    n_atoms: int
    xi_in: float
    theta_axis: List[float]
    n_axis: List[int]
    p: List[List[float]]


class BayesRequest(BaseModel):
    n_atoms: int = 100
    u0n: float = 1.0
    t_bs: float = 1.0
    t_phase: float = 1.0
    xi_in: float = 0.0
    theta_true: float = 0.01
    m: int = 20
    trials: int = 500
    seed: int = 0
    window: Tuple[float, float] = (-math.pi / 4, math.pi / 4)
    n_grid: int = 1001
    estimator: Estimator = "posterior_mean"
    sigma: float = 0.0
    include_estimates: bool = False


class BayesResponse(BaseModel):
    rms_error: float
    mean_bias: float
    trials_used: int
    trials_discarded: int
    m: int
    sqrt_m_dtheta: float
    cfi_bound: float
    row: ScalingRow
    estimates: Optional[List[float]] = None


class HusimiRequest(BaseModel):
    n_atoms: int = 100
    xi_in: float = 0.0
    n_polar: int = 61
    n_azimuth: int = 121
    evolve: bool = False
    u0n: float = 1.0
    t_bs: float = 1.0
    t_phase: float = 1.0
    theta: float = 0.0


class HusimiResponse(BaseModel):
    n_atoms: int
    polar_axis: List[float]
    azimuth_axis: List[float]
    q: List[List[float]]


class HealthResponse(BaseModel):
    status: str
    version: str
