"""Request/response models for the solver service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

from ..experiments import ExperimentConfig, TrialRecord


class SolveRequest(BaseModel):
    config: ExperimentConfig
    trial_index: int = Field(default=0, ge=0)
    scheme: Optional[str] = None


class TraceRequest(BaseModel):
    config: ExperimentConfig
    trial_index: int = Field(default=0, ge=0)


class SweepRequest(BaseModel):
    config: ExperimentConfig


class TraceEntryModel(BaseModel):
    index: int
    phase: str
    d_t_s: float
    feasible: bool
    inner_iters: int
    reason: Optional[str] = None


class SolveResponse(BaseModel):
    record: TrialRecord
    trace: list[TraceEntryModel]


class SweepResponse(BaseModel):
    records: list[TrialRecord]
    summary: list[dict]


class ValidateConfigResponse(BaseModel):
    valid: bool
    errors: list[str] = []
