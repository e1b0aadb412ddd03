"""HTTP service exposing the analysis pipeline.

POST /analyze takes CSV content plus a model specification and returns the
full report; GET /health is a liveness probe.  Data-shape problems map to
422 with a structured error body; everything the pipeline itself catches is
embedded in the report's error block with a stage tag.
"""

from __future__ import annotations

import json
from typing import Literal, Optional, Union

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .design import ModelSpec, Predictor, ingest_design_text
from .errors import ParseError, RankError
from .expfam import Family
from .fitting import FitConfig
from .pipeline import (
    PipelineOptions,
    Report,
    _json_default,
    run_pipeline,
    sanitize_floats,
)

app = FastAPI(title="boundarymle", version="1.0.0")


class PredictorSpec(BaseModel):
    name: str
    kind: Literal["auto", "numeric", "categorical"] = "auto"


class AnalyzeRequest(BaseModel):
    csv_text: str
    response: str
    predictors: list[PredictorSpec]
    family: Literal["bernoulli", "poisson"]
    trials_column: Optional[str] = None
    interactions: int = Field(default=1, ge=1)
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    epsilon: Union[Literal["auto"], float] = "auto"
    targets: Union[Literal["boundary-means"], list[int]] = "boundary-means"
    compute_intervals: bool = True
    verify_oracle: bool = False
    max_iterations: int = Field(default=200, ge=1)


class AnalyzeResponse(BaseModel):
    report: dict
    column_names: list[str]
    dropped_names: list[str]
    row_labels: list[str]


class ErrorBody(BaseModel):
    stage: str
    error: str
    message: str
    row: Optional[int] = None
    column: Optional[str] = None


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/analyze", response_model=AnalyzeResponse, responses={422: {"model": ErrorBody}})
def analyze(req: AnalyzeRequest):
    family = Family.bernoulli() if req.family == "bernoulli" else Family.poisson()
    spec = ModelSpec(
        response=req.response,
        predictors=[Predictor(p.name, p.kind) for p in req.predictors],
        family=family,
        interaction_order=req.interactions,
        trials_column=req.trials_column,
    )
    try:
        design = ingest_design_text(req.csv_text, spec)
    except (ParseError, RankError) as exc:
        body = ErrorBody(
            stage="parse",
            error=type(exc).__name__,
            message=str(exc),
            row=getattr(exc, "row", None),
            column=getattr(exc, "column", None),
        )
        return JSONResponse(status_code=422, content=body.model_dump())
    except ValueError as exc:
        body = ErrorBody(stage="parse", error="ValueError", message=str(exc))
        return JSONResponse(status_code=422, content=body.model_dump())

    options = PipelineOptions(
        alpha=req.alpha,
        epsilon=None if req.epsilon == "auto" else float(req.epsilon),
        targets=req.targets,
        compute_intervals=req.compute_intervals,
        verify_oracle=req.verify_oracle,
        fit_config=FitConfig(max_iterations=req.max_iterations),
    )
    report: Report = run_pipeline(
        design.model, options, column_names=design.column_names, row_labels=design.row_labels
    )
    report_dict = sanitize_floats(
        json.loads(json.dumps(report.to_dict(), default=_json_default))
    )
    return AnalyzeResponse(
        report=report_dict,
        column_names=design.column_names,
        dropped_names=design.dropped_names,
        row_labels=design.row_labels,
    )
