"""Static deadlock-cycle inference, interfering-task and initial-context
generation, and exhaustive interleaving exploration for a small asynchronous
actor language."""

__version__ = "0.1.0"

from .absdom import (
    MAIN_TASK, AbstractLocation, AbstractTask, PointsTo, ProgramFacts,
    accessed_fields, field_modifiers, has_await_before, resolve_references,
)
from .contexts import (
    InitialContext, LocationInstance, TaskInstance, canonicalize,
    generate_contexts, most_general_tasks,
)
from .depgraph import (
    DeadlockCycle, DepEdge, DepGraph, EdgeKind, build_dependency_graph,
    enumerate_cycles,
)
from .errors import AnalysisError, ContextError, DlctxError, ExploreError, ParseError
from .explorer import (
    ExplorationReport, Trace, Transition, Verdict, enabled_transitions,
    explore, init_state, init_state_from_main, is_deadlock, replay,
)
from .interfering import (
    Event, TaskCardinality, initial_tasks, initial_tasks_naive,
    initial_tasks_with_trace,
)
from .syntax import Program, parse, pretty_print

__all__ = [
    "MAIN_TASK", "AbstractLocation", "AbstractTask", "AnalysisError",
    "ContextError", "DeadlockCycle", "DepEdge", "DepGraph", "DlctxError",
    "EdgeKind", "Event", "ExplorationReport", "ExploreError",
    "InitialContext", "LocationInstance", "ParseError", "PointsTo",
    "Program", "ProgramFacts", "TaskCardinality", "TaskInstance", "Trace",
    "Transition", "Verdict", "accessed_fields", "build_dependency_graph",
    "canonicalize", "enabled_transitions", "enumerate_cycles", "explore",
    "field_modifiers", "generate_contexts", "has_await_before",
    "init_state", "init_state_from_main", "initial_tasks",
    "initial_tasks_naive", "initial_tasks_with_trace", "is_deadlock",
    "most_general_tasks", "parse", "pretty_print", "replay",
    "resolve_references",
]
