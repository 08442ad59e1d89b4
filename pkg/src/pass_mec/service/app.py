"""FastAPI service wrapping the solver.

Solve/trace/sweep run synchronously in the request; sweeps over many trials
can take minutes, so clients should use generous timeouts.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Request
from pydantic import ValidationError

from ..experiments import (
    ExperimentConfig,
    run_convergence_trace,
    run_solve,
    run_sweep,
    summarize,
)
from ..optimizer import NoFeasibleDelayError, OrderEnumerationError, SolveReport
from .schemas import (
    SolveRequest,
    SolveResponse,
    SweepRequest,
    SweepResponse,
    TraceEntryModel,
    TraceRequest,
    ValidateConfigResponse,
)


def _trace_models(report: SolveReport) -> list[TraceEntryModel]:
    return [TraceEntryModel(index=e.index, phase=e.phase, d_t_s=e.d_t_s,
                            feasible=e.feasible, inner_iters=e.inner_iters,
                            reason=e.reason)
            for e in report.trace]


def create_app() -> FastAPI:
    app = FastAPI(title="pass-mec solver",
                  description="Min-max task-delay optimization for a "
                              "pinching-antenna NOMA-MEC uplink")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/validate-config", response_model=ValidateConfigResponse)
    async def validate_config(request: Request) -> ValidateConfigResponse:
        body = await request.json()
        try:
            ExperimentConfig.model_validate(body)
        except ValidationError as exc:
            return ValidateConfigResponse(
                valid=False,
                errors=[f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}"
                        for e in exc.errors()])
        return ValidateConfigResponse(valid=True)

    @app.post("/solve", response_model=SolveResponse)
    def solve(req: SolveRequest) -> SolveResponse:
        if req.scheme is not None and req.scheme not in ("noma_pass", "mimo", "fdma"):
            raise HTTPException(status_code=422, detail=f"unknown scheme {req.scheme!r}")
        try:
            record, report = run_solve(req.config, req.trial_index, req.scheme)
        except NoFeasibleDelayError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except OrderEnumerationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return SolveResponse(record=record, trace=_trace_models(report))

    @app.post("/trace", response_model=SolveResponse)
    def trace(req: TraceRequest) -> SolveResponse:
        try:
            record, report = run_convergence_trace(req.config, req.trial_index)
        except NoFeasibleDelayError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except OrderEnumerationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return SolveResponse(record=record, trace=_trace_models(report))

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest) -> SweepResponse:
        if req.config.sweep is None:
            raise HTTPException(status_code=422,
                                detail="config has no sweep specification")
        records = run_sweep(req.config)
        return SweepResponse(records=records, summary=summarize(records))

    return app


app = create_app()
