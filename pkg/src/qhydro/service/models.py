"""Pydantic request/response models for the HTTP service."""

from typing import Optional

from pydantic import BaseModel, Field


class ScenarioInfo(BaseModel):
    name: str
    description: str


class ScenarioDetail(BaseModel):
    name: str
    description: str
    base_points: int
    eps: float
    checks: list[str]
    curl: bool
    cylindrical: bool
    max_level: int
    grid_plan: list[int]
    expected: list[dict]
    tolerances: dict


class RunRequest(BaseModel):
    scenario: str
    operations: list[str] = Field(default=["check"])
    levels: int = 0
    eps: Optional[float] = None
    seed: int = 0
    cap_override: Optional[int] = None
    include_artifacts: bool = True


class ArtifactModel(BaseModel):
    name: str
    media_type: str
    content: str


class RunResponse(BaseModel):
    summary: dict
    artifacts: list[ArtifactModel]
    all_passed: bool


class ErrorBody(BaseModel):
    code: str  # "invalid_config" | "cap_exceeded" | "internal"
    detail: str
