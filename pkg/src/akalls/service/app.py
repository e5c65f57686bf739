"""FastAPI application wrapping the core package.

Runs are synchronous: desk-scale sweeps finish in seconds to minutes, so a
request either returns the full record set or a 4xx explaining why the
config was rejected.  The CLI drives the same handlers in-process.
"""

import json
import math
from dataclasses import asdict

from fastapi import FastAPI, HTTPException

import akalls
from akalls.bench import (
    ConfigError,
    RunRecord,
    config_from_mapping,
    config_hash,
    fit_records,
    render_svg,
    records_to_csv,
    run_experiment,
)
from akalls.evaluation import audit_h2, audit_h4, fit_margin_noise, theoretical_rate_exponent
from akalls.problems import parse_problem, problem_names
from akalls.service import models


def _record_to_model(r: RunRecord) -> models.RunRecordModel:
    d = asdict(r)
    for key in ("excess_risk", "std_error"):
        if not math.isfinite(d[key]):
            d[key] = None
    return models.RunRecordModel(**d)


def _model_to_record(m: models.RunRecordModel) -> RunRecord:
    d = m.model_dump()
    for key in ("excess_risk", "std_error"):
        if d[key] is None:
            d[key] = math.nan
    return RunRecord(**d)


def create_app() -> FastAPI:
    app = FastAPI(title="akalls", version=akalls.__version__)

    @app.get("/health", response_model=models.HealthResponse)
    def health():
        return models.HealthResponse(version=akalls.__version__)

    @app.get("/problems", response_model=models.ProblemListResponse)
    def problems():
        return models.ProblemListResponse(problems=problem_names())

    @app.get("/problems/{name}", response_model=models.ProblemInfo)
    def problem_info(name: str):
        try:
            spec = parse_problem(name)
        except ValueError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return models.ProblemInfo(
            name=spec.name,
            dim=spec.dim,
            declared_smoothness=list(spec.declared_smoothness)
            if spec.declared_smoothness
            else None,
            declared_noise=list(spec.declared_noise) if spec.declared_noise else None,
        )

    @app.post("/runs", response_model=models.RunResponse)
    def run(req: models.RunRequest):
        try:
            config = config_from_mapping(req.config)
            parse_problem(config.problem)
        except (ConfigError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        records = run_experiment(config, workers=max(1, req.workers))
        return models.RunResponse(
            config_hash=config_hash(config),
            records=[_record_to_model(r) for r in records],
        )

    @app.post("/audits/h2", response_model=models.AuditResponse)
    def run_audit_h2(req: models.AuditH2Request):
        try:
            spec = parse_problem(req.problem)
            report = audit_h2(spec, req.alpha, req.L, pairs=req.pairs, seed=req.seed)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return models.AuditResponse(
            assumption=report.assumption,
            tested=report.tested,
            violations=report.violations,
            passed=report.passed,
            worst=report.worst,
        )

    @app.post("/audits/h4", response_model=models.AuditResponse)
    def run_audit_h4(req: models.AuditH4Request):
        try:
            spec = parse_problem(req.problem)
            kwargs = {"m": req.m, "seed": req.seed}
            if req.epsilons:
                kwargs["epsilons"] = req.epsilons
            report = audit_h4(spec, req.beta, req.C, **kwargs)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return models.AuditResponse(
            assumption=report.assumption,
            tested=report.tested,
            violations=report.violations,
            passed=report.passed,
            worst=report.worst,
            details=report.details,
        )

    @app.post("/audits/h4/fit", response_model=models.NoiseFitResponse)
    def run_fit_noise(req: models.NoiseFitRequest):
        try:
            spec = parse_problem(req.problem)
            kwargs = {"m": req.m, "seed": req.seed}
            if req.epsilons:
                kwargs["epsilons"] = req.epsilons
            beta, C = fit_margin_noise(spec, **kwargs)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return models.NoiseFitResponse(beta=beta, C=C)

    @app.post("/fits/rate", response_model=models.RateFitResponse)
    def run_fit_rate(req: models.RateFitRequest):
        records = [_model_to_record(m) for m in req.records]
        try:
            fit = fit_records(records, algo=req.algo)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        theo = None
        hashes = {r.config_hash for r in records}
        # theoretical slope needs declared problem parameters; the client
        # supplies them implicitly through the records' problem when known
        return models.RateFitResponse(
            algo=fit["algo"],
            slope=fit["slope"],
            intercept=fit["intercept"],
            r_squared=fit["r_squared"],
            failed_trials=fit["failed_trials"],
            curve=[[float(n), float(e)] for n, e in fit["curve"]],
            theoretical_slope=theo,
        )

    @app.post("/reports", response_model=models.ReportResponse)
    def report(req: models.ReportRequest):
        records = [_model_to_record(m) for m in req.records]
        if not records:
            raise HTTPException(status_code=422, detail="no records supplied")
        if req.format == "csv":
            content = records_to_csv(records)
        elif req.format == "json":
            content = json.dumps(
                {"config": req.config, "records": [asdict(r) for r in records]},
                indent=1,
                sort_keys=True,
            )
        elif req.format == "svg":
            try:
                content = render_svg(records, req.config)
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
        else:
            raise HTTPException(status_code=422, detail=f"unknown format {req.format!r}")
        return models.ReportResponse(format=req.format, content=content)

    return app


app = create_app()
