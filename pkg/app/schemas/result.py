from pydantic import BaseModel, Field
from typing import Any, Dict, List, Optional

from app.schemas.config import ExperimentConfig


class EnsembleStat(BaseModel):
    mean: float = Field(..., description="Mean over realizations, summed in stream-id order")
    stderr: float = Field(..., description="Sample standard deviation / sqrt(n); 0 when n = 1")
    n: int = Field(..., description="Number of realizations")
    single: bool = Field(False, description="Set when n = 1 and the standard error is meaningless")


class ItemTiming(BaseModel):
    item: int = Field(..., description="Work item (stream id or launch index)")
    label: str = Field(..., description="Human-readable work item name")
    seconds: float = Field(..., description="Wall-clock time of the work item")


class Timings(BaseModel):
    started_at: str = Field(..., description="UTC start timestamp, ISO 8601")
    finished_at: str = Field(..., description="UTC end timestamp, ISO 8601")
    wall_seconds: float = Field(..., description="Total wall-clock time")
    items: List[ItemTiming] = Field(default_factory=list, description="Per work item timings")


class RunManifest(BaseModel):
    run_id: str = Field(..., description="Digest of the validated config")
    kind: str = Field(..., description="Experiment kind")
    version: str = Field(..., description="git-describe style version of the code")
    status: str = Field('ok', description="'ok' or 'aborted'")
    config: ExperimentConfig = Field(..., description="The full validated config")
    summary: Dict[str, Any] = Field(default_factory=dict, description="Headline numbers of the run")
    statistics: Dict[str, EnsembleStat] = Field(default_factory=dict, description="Ensemble averages")
    artifacts: List[str] = Field(default_factory=list, description="Files written, relative to the run directory")
    error: Optional[str] = Field(None, description="Failure message when the run aborted")
    timings: Optional[Timings] = Field(None, description="Wall-clock timings; excluded from determinism checks")
