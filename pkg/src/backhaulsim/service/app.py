"""FastAPI wiring around the simulator.

Every endpoint is a thin adapter: parse the request model, call the core
package, shape the result. No simulation logic lives here. Domain rejections
(bad configs, malformed tensors) surface as HTTP 422 with the message from
the core exception.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..game import epsilon_cce_gap
from ..harness import apply_override, result_to_dict, run_experiment
from ..learning import Schedules, matrix_selfplay, validate_schedules
from ..topology import ConfigurationError
from .models import (
    CceRequest,
    CceResponse,
    HealthResponse,
    RunRequest,
    RunResponse,
    SchedulesRequest,
    SchedulesResponse,
    SweepPoint,
    SweepRequest,
    SweepResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="backhaulsim",
        version=__version__,
        description="Two-tier small-cell uplink simulator: rate splitting, "
        "relay backhauls, and regret-based learning.",
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/experiments/run", response_model=RunResponse)
    def run(request: RunRequest) -> RunResponse:
        config = request.to_config()
        try:
            config.validate()
        except ConfigurationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        result = run_experiment(config)
        return RunResponse.model_validate(result_to_dict(result))

    @app.post("/experiments/sweep", response_model=SweepResponse)
    def sweep(request: SweepRequest) -> SweepResponse:
        base = request.base.to_config()
        points = []
        for raw in request.values:
            try:
                config = apply_override(base, request.param, str(raw))
                config.validate()
            except (ConfigurationError, ValueError) as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            result = run_experiment(config)
            points.append(
                SweepPoint(
                    value=str(raw),
                    result=RunResponse.model_validate(result_to_dict(result)),
                )
            )
        return SweepResponse(param=request.param, points=points)

    @app.post("/schedules/validate", response_model=SchedulesResponse)
    def schedules(request: SchedulesRequest) -> SchedulesResponse:
        sch = Schedules(**request.schedules.model_dump())
        try:
            report = validate_schedules(
                sch.utility_step, sch.regret_step, sch.strategy_step, request.horizon
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return SchedulesResponse(
            ok=report.ok,
            horizon=report.horizon,
            step_sums=report.step_sums,
            step_sums_half=report.step_sums_half,
            failures=list(report.failures),
        )

    @app.post("/cce/gap", response_model=CceResponse)
    def cce(request: CceRequest) -> CceResponse:
        try:
            utilities = [np.asarray(u, dtype=float) for u in request.utilities]
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=f"bad payoff tensor: {exc}") from exc
        try:
            if request.joint is not None:
                joint = np.asarray(request.joint, dtype=float)
                steps = None
            else:
                joint = matrix_selfplay(utilities, request.steps, seed=request.seed)
                steps = request.steps
            gaps = epsilon_cce_gap(joint, utilities)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return CceResponse(
            gaps=[float(g) for g in gaps],
            epsilon=float(gaps.max()),
            joint=joint.tolist(),
            steps=steps,
        )

    return app
