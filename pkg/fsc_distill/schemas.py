"""Pydantic documents for the JSON files fsc_distill reads and writes."""
import math
from typing import Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_serializer


class StateEntry(BaseModel):
    id: str
    observation: str


class SuccessorEntry(BaseModel):
    state: str
    prob: float


class TransitionEntry(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    source: str = Field(alias='from')
    action: str
    to: List[SuccessorEntry]


class RewardEntry(BaseModel):
    state: str
    action: str
    value: float


class ModelDocument(BaseModel):
    """The model file: a POMDP with observation labels and targets."""
    states: List[StateEntry]
    actions: List[str]
    transitions: List[TransitionEntry]
    initial: str
    targets: List[str] = []
    rewards: Optional[List[RewardEntry]] = None
    cutoff_strategies: List[Dict[str, Dict[str, float]]] = []


class FscTransitionEntry(BaseModel):
    node: int
    observation: str
    output: str
    next: int


class FscDocument(BaseModel):
    nodes: List[int]
    initial: int
    transitions: List[FscTransitionEntry]


def _finite_or_label(value):
    if value is not None and math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return value


class ValueReport(BaseModel):
    """Value, size and time of one evaluated controller."""
    objective: str
    value: float
    mc_states: int
    fsc_nodes: int
    wall_time: float = 0.0
    heuristic: Optional[str] = None

    @field_serializer('value')
    def serialize_value(self, value):
        return _finite_or_label(value)


class SimulationReport(BaseModel):
    episodes: int
    horizon: int
    frequency: float
    frequency_stderr: float
    mean_reward: float
    reward_stderr: float


class PipelineReport(BaseModel):
    model: str
    objective: str
    mode: str
    heuristic: str
    chosen: str
    value: float
    fsc_nodes: int
    learned_nodes: int
    learning_rounds: int
    equivalent: bool
    learned_outputs: Dict[str, int] = {}
    strategy_value: Optional[float] = None
    belief_mc_states: Optional[int] = None
    cutoff_beliefs: Optional[int] = None
    reports: List[ValueReport] = []
    simulation: Optional[SimulationReport] = None

    @field_serializer('value', 'strategy_value')
    def serialize_values(self, value):
        return _finite_or_label(value)


class ErrorDocument(BaseModel):
    error: str
    message: str
    details: Optional[Dict[str, Union[str, int]]] = None
