"""HTTP service wrapping the simulator.

Each endpoint is a stateless computation; determinism comes from the
request's seed.  Error mapping: invalid configurations answer 422,
numerical failures 500, both with a ``kind`` field the CLI translates
to its exit codes.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..dynamics import SequenceParams, mz_sequence
from ..errors import ConfigurationError, NumericalFailure
from ..estimation import EstimationRun, monte_carlo_sensitivity
from ..experiments import (
    ScanSpec,
    fit_prefactor,
    husimi_map,
    input_state,
    probability_map,
    scan_scaling,
    scan_te_optimum,
    scan_xi_transition,
)
from ..io import scaling_row_dict
from ..metrology import SensitivityResult, cfi, detection_kernel
from . import schemas

app = FastAPI(title="mzbec", version=__version__)


@app.exception_handler(ConfigurationError)
async def _config_error(request: Request, exc: ConfigurationError):
    return JSONResponse(
        status_code=422,
        content={"detail": str(exc), "kind": "invalid-configuration"},
    )


@app.exception_handler(NumericalFailure)
async def _numerical_error(request: Request, exc: NumericalFailure):
    return JSONResponse(
        status_code=500,
        content={"detail": str(exc), "kind": "numerical-failure"},
    )


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


def _scan_spec(req: schemas.ScalingRequest) -> ScanSpec:
    return ScanSpec(
        n_values=tuple(req.n_values),
        u0n=req.u0n,
        t_bs_values=(req.t_bs,),
        t_phase_values=(req.t_phase,),
        theta_values=(req.theta,),
        xi_values=(req.xi_in,),
        sigma_values=(req.sigma,),
        method=req.method,
        seed=req.seed,
        m=req.m,
        n_trials=req.trials,
        window=tuple(req.window),
        n_grid=req.n_grid,
    )


def _row_models(rows, seed):
    return [schemas.ScalingRow(**scaling_row_dict(r, seed)) for r in rows]


def _error_models(failures):
    return [
        schemas.PointError(point=dict(f.coords), error=f.message) for f in failures
    ]


@app.post("/scaling", response_model=schemas.ScalingResponse)
def scaling(req: schemas.ScalingRequest) -> schemas.ScalingResponse:
    table = scan_scaling(_scan_spec(req))
    return schemas.ScalingResponse(
        rows=_row_models(table.rows, req.seed),
        errors=_error_models(table.failures),
    )


@app.post("/prefactor", response_model=schemas.PrefactorResponse)
def prefactor(req: schemas.PrefactorRequest) -> schemas.PrefactorResponse:
    table = scan_scaling(_scan_spec(req))
    fit = fit_prefactor(table)
    return schemas.PrefactorResponse(
        fit=schemas.FitResult(
            beta=fit.beta,
            exponent=fit.exponent,
            residual=fit.residual,
            n_range=list(fit.n_range),
            beta_free=fit.beta_free,
        ),
        rows=_row_models(table.rows, req.seed),
        errors=_error_models(table.failures),
    )


@app.post("/te-scan", response_model=schemas.TeScanResponse)
def te_scan(req: schemas.TeScanRequest) -> schemas.TeScanResponse:
    psi = input_state(req.n_atoms, req.xi_in)
    params = SequenceParams.standard(
        req.n_atoms,
        u0n=req.u0n,
        t_bs=req.t_bs,
        t_phase=req.t_phase_values[0],
        theta=req.theta,
    )
    kernel = detection_kernel(req.sigma, req.n_atoms) if req.sigma > 0 else None
    result = scan_te_optimum(psi, params, req.t_phase_values, req.theta, kernel)
    return schemas.TeScanResponse(
        t_e_best=result.t_e_best,
        t_e_worst=result.t_e_worst,
        rows=_row_models(result.rows, req.seed),
    )


@app.post("/xi-scan", response_model=schemas.XiScanResponse)
def xi_scan(req: schemas.XiScanRequest) -> schemas.XiScanResponse:
    table = scan_xi_transition(
        req.n_atoms,
        req.u0n,
        req.t_bs,
        req.t_phase_values,
        req.xi_values,
        method=req.method,
        theta=req.theta,
    )
    rows = [
        schemas.XiScanRow(
            N=req.n_atoms,
            u0n=req.u0n,
            t_bs=req.t_bs,
            t_phase=r.t_phase,
            theta=req.theta,
            xi_in=r.xi_in,
            sigma=0.0,
            method=r.method,
            sqrt_m_dtheta=r.sqrt_m_dtheta,
            fisher_value=r.fisher_value,
            seed=req.seed,
            xi_after_bs=r.xi_after_bs,
        )
        for r in table.rows
    ]
    return schemas.XiScanResponse(rows=rows, errors=_error_models(table.failures))


@app.post("/probmap", response_model=schemas.ProbmapResponse)
def probmap(req: schemas.ProbmapRequest) -> schemas.ProbmapResponse:
    psi = input_state(req.n_atoms, req.xi_in)
    params = SequenceParams.standard(
        req.n_atoms,
        u0n=req.u0n,
        t_bs=req.t_bs,
        t_phase=req.t_phase,
        theta=req.theta_values[0],
    )
    pmap = probability_map(psi, params, req.theta_values)
    return schemas.ProbmapResponse(
        n_atoms=pmap.n_atoms,
        xi_in=pmap.xi_in,
        theta_axis=list(pmap.theta_axis),
        n_axis=list(pmap.n_axis),
        p=[list(row) for row in pmap.p],
    )


@app.post("/bayes", response_model=schemas.BayesResponse)
def bayes(req: schemas.BayesRequest) -> schemas.BayesResponse:
    psi = input_state(req.n_atoms, req.xi_in)
    params = SequenceParams.standard(
        req.n_atoms,
        u0n=req.u0n,
        t_bs=req.t_bs,
        t_phase=req.t_phase,
        theta=req.theta_true,
    )
    kernel = detection_kernel(req.sigma, req.n_atoms) if req.sigma > 0 else None
    run = EstimationRun(
        theta_true=req.theta_true,
        m=req.m,
        n_trials=req.trials,
        theta_lo=req.window[0],
        theta_hi=req.window[1],
        n_grid=req.n_grid,
        seed=req.seed,
        estimator=req.estimator,
    )
    outcome = monte_carlo_sensitivity(run, psi, params, kernel)
    bound = cfi(psi, params, req.theta_true, kernel)
    value = outcome.sqrt_m_dtheta
    row = SensitivityResult(
        sqrt_m_dtheta=value,
        method="Bayesian",
        params=params,
        xi_in=req.xi_in,
        theta=req.theta_true,
        detection_sigma=req.sigma,
        fisher_value=0.0 if value == 0 else value**-2,
    )
    return schemas.BayesResponse(
        rms_error=outcome.rms_error,
        mean_bias=outcome.mean_bias,
        trials_used=outcome.trials_used,
        trials_discarded=outcome.trials_discarded,
        m=outcome.m,
        sqrt_m_dtheta=outcome.sqrt_m_dtheta,
        cfi_bound=bound.sqrt_m_dtheta,
        row=schemas.ScalingRow(**scaling_row_dict(row, req.seed)),
        estimates=list(outcome.estimates) if req.include_estimates else None,
    )


@app.post("/husimi", response_model=schemas.HusimiResponse)
def husimi(req: schemas.HusimiRequest) -> schemas.HusimiResponse:
    psi = input_state(req.n_atoms, req.xi_in)
    if req.evolve:
        params = SequenceParams.standard(
            req.n_atoms,
            u0n=req.u0n,
            t_bs=req.t_bs,
            t_phase=req.t_phase,
            theta=req.theta,
        )
        psi = mz_sequence(psi, params)
    hmap = husimi_map(psi, req.n_polar, req.n_azimuth)
    return schemas.HusimiResponse(
        n_atoms=hmap.n_atoms,
        polar_axis=list(hmap.polar_axis),
        azimuth_axis=list(hmap.azimuth_axis),
        q=[list(row) for row in hmap.q],
    )
