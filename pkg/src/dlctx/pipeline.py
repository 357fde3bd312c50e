"""Stage orchestration: parse -> facts -> graph -> cycles -> tasks -> contexts -> explore.

Later stages consume earlier outputs even when the earlier stage was not
requested for the report.  With several abstract cycles, interfering tasks
and contexts are computed per cycle and also reported as a union; contexts
of the union are explored.
"""

from __future__ import annotations

import time
from typing import Optional

from .absdom import AbstractLocation, AbstractTask, ProgramFacts, resolve_references
from .contexts import InitialContext, generate_contexts
from .depgraph import DeadlockCycle, DepGraph, build_dependency_graph, enumerate_cycles
from .errors import AnalysisError
from .explorer import Verdict, explore
from .interfering import TaskCardinality, WorklistTrace, initial_tasks_with_trace
from .models import (
    AnalyzeOptions, AnalyzeRequest, ContextLocationModel, ContextModel,
    ContextsSection, ContextTaskModel, CycleContextsModel, CyclesSection,
    CycleTasksModel, EdgeModel, ExplorationModel, ExploreSection,
    FactRowModel, FactsSection, InitialTasksSection, NodeModel, Report,
    TaskCardModel, TraceModel, TraceStepModel, WorklistCycleModel,
    WorklistEventModel, WorklistStepModel,
)
from .syntax import parse


def _node_model(node) -> NodeModel:
    if isinstance(node, AbstractLocation):
        return NodeModel(
            kind="location", name=node.render(), class_name=node.class_name or None,
            pp=node.creation_pp.render(),
        )
    return NodeModel(
        kind="task", name=node.render(), class_name=node.class_name or None,
        method=node.method_name,
    )


def _cycles_section(graph: DepGraph, cycles: list[DeadlockCycle]) -> CyclesSection:
    node_idx = {n: i for i, n in enumerate(graph.nodes)}
    edge_idx = {e: i for i, e in enumerate(graph.edges)}
    return CyclesSection(
        nodes=[_node_model(n) for n in graph.nodes],
        edges=[
            EdgeModel(
                source=node_idx[e.src],
                target=node_idx[e.dst],
                kind=e.kind.value,
                pp=e.pp.render(),
                task=e.in_task.render(),
                call_pp=e.call_pp.render() if e.call_pp else None,
                rendered=e.render(),
            )
            for e in graph.edges
        ],
        cycles=[[edge_idx[e] for e in c.edges] for c in cycles],
        rendered=[c.render() for c in cycles],
        count=len(cycles),
    )


def _card_models(cards: frozenset[TaskCardinality]) -> list[TaskCardModel]:
    ordered = sorted(cards, key=lambda tc: tc.task.render())
    return [TaskCardModel(task=tc.task.render(), min=tc.min, max=tc.max) for tc in ordered]


def _event_models(events) -> list[WorklistEventModel]:
    return [WorklistEventModel(task=e.task.render(), pp=e.pp.render()) for e in events]


def _worklist_model(i: int, trace: WorklistTrace) -> WorklistCycleModel:
    return WorklistCycleModel(
        cycle=i,
        init_events=_event_models(trace.init_events),
        init_answers=_event_models(trace.init_answers),
        steps=[
            WorklistStepModel(
                task=s.event.task.render(),
                pp=s.event.pp.render(),
                awaited=s.awaited,
                fields=list(s.fields),
                added=_event_models(s.added),
            )
            for s in trace.steps
        ],
        processed=trace.processed,
    )


def _context_model(ctx: InitialContext) -> ContextModel:
    return ContextModel(
        locations=[
            ContextLocationModel(
                id=loc.name,
                class_name=loc.class_name,
                fields=dict(loc.fields),
                tasks=[
                    ContextTaskModel(method=t.task.method_name, args=dict(t.args))
                    for t in loc.tasks
                ],
            )
            for loc in ctx.locations
        ],
        rendered=ctx.render(),
    )


def apply_card_overrides(
    cards: frozenset[TaskCardinality], overrides: dict[str, tuple[int, int]]
) -> frozenset[TaskCardinality]:
    out = set()
    for tc in cards:
        bounds = overrides.get(tc.task.render())
        out.add(TaskCardinality(tc.task, *bounds) if bounds else tc)
    return frozenset(out)


def validate_card_overrides(overrides: dict[str, tuple[int, int]], program) -> None:
    declared = {
        f"{c.name}.{m.name}" for c in program.classes for m in c.methods
    }
    for name, (lo, hi) in overrides.items():
        if name not in declared:
            raise AnalysisError(f"unknown task {name!r} in cardinality override")
        if not (1 <= lo <= hi):
            raise AnalysisError(
                f"cardinality override for {name} must satisfy 1 <= min <= max"
            )


def run_pipeline(request: AnalyzeRequest, input_name: Optional[str] = None) -> Report:
    opts = request.options
    stages = set(request.stages)
    if opts.trace_worklist:
        stages.add("initial-tasks")
    timing: dict[str, float] = {}

    def timed(stage: str, fn):
        start = time.perf_counter()
        result = fn()
        timing[stage] = time.perf_counter() - start
        return result

    program = timed("parse", lambda: parse(request.source))
    validate_card_overrides(opts.cardinalities, program)
    report = Report(input=input_name)

    if opts.dump_facts:
        facts = ProgramFacts(program)
        report.facts = FactsSection(
            rows=[
                FactRowModel(
                    task=task.render(),
                    pp=pp.render(),
                    fields=sorted(fields),
                    await_before=awaited,
                )
                for task, pp, fields, awaited in facts.facts_table()
            ]
        )

    need_cycles = bool(stages & {"cycles", "initial-tasks", "contexts", "explore"})
    cycles: list[DeadlockCycle] = []
    if need_cycles:
        pts = timed("points-to", lambda: resolve_references(program))
        graph = timed("graph", lambda: build_dependency_graph(program, pts))
        cycles = timed("cycles", lambda: enumerate_cycles(graph))
        if "cycles" in stages:
            report.cycles = _cycles_section(graph, cycles)

    need_tasks = bool(stages & {"initial-tasks", "contexts", "explore"})
    per_cycle_cards: list[frozenset[TaskCardinality]] = []
    union_cards: frozenset[TaskCardinality] = frozenset()
    if need_tasks:
        def compute_tasks():
            results = []
            for cycle in cycles:
                results.append(initial_tasks_with_trace(program, cycle))
            return results

        task_results = timed("initial-tasks", compute_tasks)
        per_cycle_cards = [
            apply_card_overrides(cards, opts.cardinalities) for cards, _ in task_results
        ]
        union_tasks: set[AbstractTask] = set()
        for cards in per_cycle_cards:
            union_tasks |= {tc.task for tc in cards}
        union_cards = apply_card_overrides(
            frozenset(TaskCardinality(t, 1, 1) for t in union_tasks), opts.cardinalities
        )
        if "initial-tasks" in stages:
            report.initial_tasks = InitialTasksSection(
                per_cycle=[
                    CycleTasksModel(cycle=i, tasks=_card_models(cards))
                    for i, cards in enumerate(per_cycle_cards)
                ],
                union=_card_models(union_cards),
            )
        if opts.trace_worklist:
            report.worklist = [
                _worklist_model(i, trace) for i, (_, trace) in enumerate(task_results)
            ]

    need_contexts = bool(stages & {"contexts", "explore"})
    union_contexts: list[InitialContext] = []
    if need_contexts:
        def compute_contexts():
            per_cycle = [
                generate_contexts(program, cards, expand_wiring=opts.expand_wiring)
                for cards in per_cycle_cards
            ]
            merged: dict[str, InitialContext] = {}
            for ctxs in per_cycle:
                for ctx in ctxs:
                    merged.setdefault(ctx.render(), ctx)
            return per_cycle, [merged[k] for k in sorted(merged)]

        per_cycle_ctxs, union_contexts = timed("contexts", compute_contexts)
        if "contexts" in stages:
            report.contexts = ContextsSection(
                per_cycle=[
                    CycleContextsModel(cycle=i, contexts=[_context_model(c) for c in ctxs])
                    for i, ctxs in enumerate(per_cycle_ctxs)
                ],
                union=[_context_model(c) for c in union_contexts],
            )

    if "explore" in stages:
        def run_explorations():
            out = []
            for ctx in union_contexts:
                rep = explore(
                    program, ctx,
                    max_states=opts.max_states,
                    max_depth=opts.max_depth,
                    partial=opts.partial,
                )
                out.append(
                    ExplorationModel(
                        context=ctx.render(),
                        verdict=rep.verdict.value,
                        states=rep.states_explored,
                        bound_hit=rep.bound_hit,
                        traces=[
                            TraceModel(
                                kind=tr.kind,
                                steps=[
                                    TraceStepModel(
                                        location=s.transition.location,
                                        task=s.task.render(),
                                        pp=s.pp.render(),
                                        action=s.transition.kind.value,
                                        rendered=s.render(),
                                    )
                                    for s in tr.steps
                                ],
                            )
                            for tr in rep.traces
                        ],
                    )
                )
            return out

        explorations = timed("explore", run_explorations)
        report.explore = ExploreSection(
            explorations=explorations,
            any_deadlock=any(e.verdict == Verdict.DEADLOCK_FOUND.value for e in explorations),
        )

    if opts.include_timing:
        report.timing = {k: round(v, 6) for k, v in timing.items()}
    return report


# ---------------------------------------------------------------------------
# Text rendering (every printed datum also lives in the JSON report)
# ---------------------------------------------------------------------------


def render_text(report: Report, stages: list[str]) -> str:
    lines: list[str] = []

    if report.facts is not None:
        lines.append("== facts ==")
        lines.append("task\tpp\tfields\tawait_before")
        for row in report.facts.rows:
            lines.append(
                f"{row.task}\t{row.pp}\t{','.join(row.fields)}\t"
                f"{'true' if row.await_before else 'false'}"
            )

    if report.cycles is not None:
        lines.append("== cycles ==")
        lines.append(f"{report.cycles.count} cycles")
        for rendered in report.cycles.rendered:
            lines.append(rendered)

    if report.worklist is not None:
        lines.append("== worklist ==")
        for wl in report.worklist:
            lines.append(f"cycle {wl.cycle}:")
            lines.append(
                "init events: " + " ".join(f"({e.task},{e.pp})" for e in wl.init_events)
            )
            lines.append(
                "init answers: " + " ".join(f"({e.task},{e.pp})" for e in wl.init_answers)
            )
            for s in wl.steps:
                if s.awaited:
                    added = " ".join(f"({e.task},{e.pp})" for e in s.added) or "-"
                    lines.append(
                        f"process ({s.task},{s.pp}): await-before, "
                        f"fields=[{','.join(s.fields)}], added {added}"
                    )
                else:
                    lines.append(f"process ({s.task},{s.pp}): no await before, unchanged")
            lines.append(f"processed {wl.processed} events")

    if report.initial_tasks is not None:
        lines.append("== initial tasks ==")
        if len(report.initial_tasks.per_cycle) > 1:
            for entry in report.initial_tasks.per_cycle:
                lines.append(f"cycle {entry.cycle}:")
                for tc in entry.tasks:
                    lines.append(f"{tc.task} min={tc.min} max={tc.max}")
            lines.append("union:")
        for tc in report.initial_tasks.union:
            lines.append(f"{tc.task} min={tc.min} max={tc.max}")

    if report.contexts is not None:
        lines.append("== contexts ==")
        if len(report.contexts.per_cycle) > 1:
            for entry in report.contexts.per_cycle:
                lines.append(f"cycle {entry.cycle}: {len(entry.contexts)} contexts")
                for ctx in entry.contexts:
                    lines.append(ctx.rendered)
            lines.append("union:")
        lines.append(f"{len(report.contexts.union)} contexts")
        for ctx in report.contexts.union:
            lines.append(ctx.rendered)

    if report.explore is not None:
        lines.append("== explore ==")
        for ex in report.explore.explorations:
            lines.append(f"context {ex.context}: {ex.verdict} states={ex.states}")
            for i, tr in enumerate(ex.traces, 1):
                lines.append(f"  trace {i} ({tr.kind}):")
                for j, step in enumerate(tr.steps, 1):
                    lines.append(f"    {j}. {step.rendered}")
        lines.append(
            "deadlock found" if report.explore.any_deadlock else "no deadlock found"
        )

    if report.timing is not None:
        lines.append("== timing ==")
        for stage, seconds in report.timing.items():
            lines.append(f"{stage}: {seconds:.6f}s")

    return "\n".join(lines) + "\n"
