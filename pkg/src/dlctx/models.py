"""Request, options and report models shared by the CLI and the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

Stage = Literal["cycles", "initial-tasks", "contexts", "explore"]

STAGE_ORDER: tuple[Stage, ...] = ("cycles", "initial-tasks", "contexts", "explore")


class AnalyzeOptions(BaseModel):
    cardinalities: dict[str, tuple[int, int]] = Field(
        default_factory=dict, description="per-task (min, max) overrides, keyed Class.method"
    )
    expand_wiring: bool = False
    partial: bool = False
    max_states: int = Field(default=10_000, gt=0)
    max_depth: int = Field(default=100_000, gt=0)
    dump_facts: bool = False
    trace_worklist: bool = False
    include_timing: bool = True


class AnalyzeRequest(BaseModel):
    source: str
    stages: list[Stage] = Field(default_factory=lambda: ["cycles", "initial-tasks", "contexts"])
    options: AnalyzeOptions = Field(default_factory=AnalyzeOptions)


# ---------------------------------------------------------------------------
# Report sections
# ---------------------------------------------------------------------------


class NodeModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    kind: Literal["location", "task"]
    name: str
    class_name: Optional[str] = Field(default=None, alias="class")
    pp: Optional[str] = None  # locations: creation point
    method: Optional[str] = None  # tasks


class EdgeModel(BaseModel):
    source: int
    target: int
    kind: str
    pp: str
    task: str
    call_pp: Optional[str] = None
    rendered: str


class CyclesSection(BaseModel):
    nodes: list[NodeModel]
    edges: list[EdgeModel]
    cycles: list[list[int]]  # edge indices into `edges`
    rendered: list[str]
    count: int


class TaskCardModel(BaseModel):
    task: str
    min: int
    max: int


class CycleTasksModel(BaseModel):
    cycle: int
    tasks: list[TaskCardModel]


class InitialTasksSection(BaseModel):
    per_cycle: list[CycleTasksModel]
    union: list[TaskCardModel]


class WorklistEventModel(BaseModel):
    task: str
    pp: str


class WorklistStepModel(BaseModel):
    task: str
    pp: str
    awaited: bool
    fields: list[str]
    added: list[WorklistEventModel]


class WorklistCycleModel(BaseModel):
    cycle: int
    init_events: list[WorklistEventModel]
    init_answers: list[WorklistEventModel]
    steps: list[WorklistStepModel]
    processed: int


class ContextTaskModel(BaseModel):
    method: str
    args: dict[str, Union[int, bool, None, str]]


class ContextLocationModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    id: str
    class_name: str = Field(alias="class")
    fields: dict[str, str]
    tasks: list[ContextTaskModel]


class ContextModel(BaseModel):
    locations: list[ContextLocationModel]
    rendered: str


class CycleContextsModel(BaseModel):
    cycle: int
    contexts: list[ContextModel]


class ContextsSection(BaseModel):
    per_cycle: list[CycleContextsModel]
    union: list[ContextModel]


class TraceStepModel(BaseModel):
    location: str
    task: str
    pp: str
    action: str
    rendered: str


class TraceModel(BaseModel):
    kind: str
    steps: list[TraceStepModel]


class ExplorationModel(BaseModel):
    context: str
    verdict: str
    states: int
    bound_hit: bool
    traces: list[TraceModel]


class ExploreSection(BaseModel):
    explorations: list[ExplorationModel]
    any_deadlock: bool


class FactRowModel(BaseModel):
    task: str
    pp: str
    fields: list[str]
    await_before: bool


class FactsSection(BaseModel):
    rows: list[FactRowModel]


class Report(BaseModel):
    input: Optional[str] = None
    facts: Optional[FactsSection] = None
    cycles: Optional[CyclesSection] = None
    initial_tasks: Optional[InitialTasksSection] = None
    worklist: Optional[list[WorklistCycleModel]] = None
    contexts: Optional[ContextsSection] = None
    explore: Optional[ExploreSection] = None
    timing: Optional[dict[str, float]] = None

    def to_json(self, indent: int = 2) -> str:
        return self.model_dump_json(indent=indent, by_alias=True, exclude_none=True)
