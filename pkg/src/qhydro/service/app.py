"""FastAPI service exposing the scenario library and the run pipeline.

The service is stateless: every run recomputes from the scenario
constructors (instances are memoized in-process). Configuration problems
map to 422 with code "invalid_config"; grid-cap refusals map to 413 with
code "cap_exceeded" and name the override to use.
"""

import json

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse

from ..errors import CapExceededError, ConfigError
from ..runner import RunConfig, run
from ..scenarios import SCENARIOS, gaussian_reference_values, get_scenario, list_scenarios
from .models import RunRequest, RunResponse, ScenarioDetail, ScenarioInfo

app = FastAPI(
    title="qhydro",
    description="Grid-based quantum-hydrodynamics field diagnostics",
    version="0.1.0",
)


@app.exception_handler(CapExceededError)
async def _cap_handler(_, exc):
    return JSONResponse(
        status_code=413, content={"code": "cap_exceeded", "detail": str(exc)}
    )


@app.exception_handler(ConfigError)
async def _config_handler(_, exc):
    return JSONResponse(
        status_code=422, content={"code": "invalid_config", "detail": str(exc)}
    )


@app.get("/health")
def health():
    return {"status": "ok", "scenarios": len(SCENARIOS)}


@app.get("/scenarios", response_model=list[ScenarioInfo])
def scenarios(filter: str = Query(default="")):
    return list_scenarios(filter)


@app.get("/scenarios/{name}", response_model=ScenarioDetail)
def scenario_detail(name: str):
    scen = get_scenario(name)
    return ScenarioDetail(
        name=scen.name,
        description=scen.description,
        base_points=scen.base_points,
        eps=scen.eps,
        checks=list(scen.checks),
        curl=scen.curl,
        cylindrical=scen.cylindrical,
        max_level=scen.max_level,
        grid_plan=list(scen.convergence_plan(scen.max_level)),
        expected=[
            {"quantity": q, "value": v, "basis": b} for q, v, b in scen.expected
        ],
        tolerances=dict(scen.tolerances),
    )


@app.get("/scenarios/gaussian1d/reference")
def reference_table():
    return gaussian_reference_values()


@app.post("/runs", response_model=RunResponse)
def create_run(request: RunRequest):
    config = RunConfig(
        scenario=request.scenario,
        operations=tuple(request.operations),
        levels=request.levels,
        eps=request.eps,
        seed=request.seed,
        cap_override=request.cap_override,
        include_artifacts=request.include_artifacts,
    )
    result = run(config)
    # round-trip through the canonical JSON encoding so numpy scalars are
    # gone and the summary the client sees is byte-stable
    summary = json.loads(result.summary_json())
    return RunResponse(
        summary=summary,
        artifacts=[a.__dict__ for a in result.artifacts],
        all_passed=bool(summary["all_passed"]),
    )
