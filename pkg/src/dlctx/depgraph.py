"""Abstract dependency graph over locations and tasks, plus cycle enumeration.

Edge taste:

* ``LocTask``: a location is frozen by a blocking ``get`` inside a task it
  runs, waiting for the called task to finish;
* ``TaskTask``: a task awaits another task;
* ``TaskLoc``: a task is queued on a location and waits for it to be idle
  (annotated with the task's entry point).

Location-location edges cannot arise and are rejected at construction.
Cycles are elementary, chained edge sequences in canonical rotation
(starting at the least node), enumerated in a deterministic order.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from .absdom import (
    MAIN_LOCATION, MAIN_TASK, AbstractLocation, AbstractTask, PointsTo,
    ProgramFacts,
)
from .errors import AnalysisError
from .syntax.ast import AsyncCall, AwaitFut, GetFut, Program, ProgramPoint, iter_stmts

DepNode = Union[AbstractLocation, AbstractTask]


class EdgeKind(str, Enum):
    LOC_TASK = "loc-task"
    TASK_TASK = "task-task"
    TASK_LOC = "task-loc"


def node_key(node: DepNode) -> tuple:
    """Total order: locations first (by creation point), then tasks."""
    if isinstance(node, AbstractLocation):
        return (0, node.creation_pp.id)
    return (1, node.class_name, node.method_name)


def render_node(node: DepNode) -> str:
    return node.render()


@dataclass(frozen=True)
class DepEdge:
    src: DepNode
    dst: DepNode
    kind: EdgeKind
    pp: ProgramPoint  # synchronization point (LocTask/TaskTask) or callee entry (TaskLoc)
    in_task: AbstractTask  # task whose instruction produced the edge
    call_pp: Optional[ProgramPoint] = None  # async call paired with the sync point

    def __post_init__(self):
        src_loc = isinstance(self.src, AbstractLocation)
        dst_loc = isinstance(self.dst, AbstractLocation)
        if src_loc and dst_loc:
            raise AnalysisError("location-location dependency cannot happen")
        expected = {
            (True, False): EdgeKind.LOC_TASK,
            (False, False): EdgeKind.TASK_TASK,
            (False, True): EdgeKind.TASK_LOC,
        }[(src_loc, dst_loc)]
        if self.kind != expected:
            raise AnalysisError(
                f"edge kind {self.kind} inconsistent with endpoints "
                f"{render_node(self.src)} -> {render_node(self.dst)}"
            )

    def sort_key(self) -> tuple:
        return (node_key(self.src), node_key(self.dst), self.pp.id, node_key(self.in_task))

    def render(self) -> str:
        return (
            f"{render_node(self.src)} -[{self.pp.render()}:{self.in_task.render()}]-> "
            f"{render_node(self.dst)}"
        )


@dataclass(frozen=True)
class DeadlockCycle:
    edges: tuple[DepEdge, ...]

    def __post_init__(self):
        if not self.edges:
            raise AnalysisError("a deadlock cycle needs at least one edge")
        for a, b in zip(self.edges, self.edges[1:]):
            if a.dst != b.src:
                raise AnalysisError("cycle edges do not chain")
        if self.edges[-1].dst != self.edges[0].src:
            raise AnalysisError("cycle does not close")
        nodes = [e.src for e in self.edges]
        if len(set(nodes)) != len(nodes):
            raise AnalysisError("cycle is not elementary")

    @property
    def nodes(self) -> tuple[DepNode, ...]:
        return tuple(e.src for e in self.edges)

    def rotated_canonical(self) -> "DeadlockCycle":
        """Rotation starting at the least node under the node order."""
        start = min(range(len(self.edges)), key=lambda i: node_key(self.edges[i].src))
        return DeadlockCycle(self.edges[start:] + self.edges[:start])

    def sort_key(self) -> tuple:
        return (
            len(self.edges),
            tuple(node_key(n) for n in self.nodes),
            tuple(e.pp.id for e in self.edges),
        )

    def render(self) -> str:
        parts = []
        for e in self.edges:
            parts.append(f"{render_node(e.src)} -[{e.pp.render()}:{e.in_task.render()}]-> ")
        return "".join(parts) + render_node(self.edges[0].src)


@dataclass(frozen=True)
class DepGraph:
    nodes: tuple[DepNode, ...]
    edges: tuple[DepEdge, ...]

    def edges_between(self, src: DepNode, dst: DepNode) -> list[DepEdge]:
        return [e for e in self.edges if e.src == src and e.dst == dst]

    def successors(self, node: DepNode) -> list[DepNode]:
        seen = []
        for e in self.edges:
            if e.src == node and e.dst not in seen:
                seen.append(e.dst)
        return sorted(seen, key=node_key)


def build_dependency_graph(program: Program, pts: PointsTo) -> DepGraph:
    """Dependency edges of the whole program under *pts*.

    The main block behaves as a pseudo-task running on a distinguished main
    location, so its synchronizations contribute edges like any other task.
    """
    facts = ProgramFacts(program)
    edges: set[DepEdge] = set()

    def callees(owner, call: AsyncCall) -> list[AbstractTask]:
        found = []
        for loc in pts.target_of(program, owner, call.target):
            cls = program.class_named(loc.class_name)
            if cls is not None and cls.method_named(call.method):
                task = AbstractTask(loc.class_name, call.method)
                if task not in found:
                    found.append(task)
        return sorted(found, key=node_key)

    # invocation edges; they also define which locations a task runs on
    runs_on: dict[AbstractTask, set[AbstractLocation]] = {MAIN_TASK: {MAIN_LOCATION}}
    for owner, body in program.bodies():
        for s in iter_stmts(body):
            if not isinstance(s, AsyncCall):
                continue
            for loc in pts.target_of(program, owner, s.target):
                cls = program.class_named(loc.class_name)
                method = cls.method_named(s.method) if cls else None
                if method is None:
                    continue  # over-approximate points-to; no such callee here
                task = AbstractTask(loc.class_name, s.method)
                runs_on.setdefault(task, set()).add(loc)
                edges.add(
                    DepEdge(task, loc, EdgeKind.TASK_LOC, method.entry_pp, task)
                )

    # synchronization edges
    for owner, body in program.bodies():
        task = AbstractTask(owner[0], owner[1]) if owner else MAIN_TASK
        for s in iter_stmts(body):
            if isinstance(s, GetFut):
                call = facts.defining_call(task, s.fut_var)
                for callee in callees(owner, call):
                    for loc in sorted(runs_on.get(task, set()), key=node_key):
                        edges.add(
                            DepEdge(loc, callee, EdgeKind.LOC_TASK, s.pp, task, call.pp)
                        )
            elif isinstance(s, AwaitFut):
                call = facts.defining_call(task, s.fut_var)
                for callee in callees(owner, call):
                    edges.add(
                        DepEdge(task, callee, EdgeKind.TASK_TASK, s.pp, task, call.pp)
                    )

    nodes: list[DepNode] = []
    for e in sorted(edges, key=DepEdge.sort_key):
        for n in (e.src, e.dst):
            if n not in nodes:
                nodes.append(n)
    nodes.sort(key=node_key)
    return DepGraph(tuple(nodes), tuple(sorted(edges, key=DepEdge.sort_key)))


def enumerate_cycles(graph: DepGraph) -> list[DeadlockCycle]:
    """All elementary cycles, canonically rotated, deterministically ordered.

    Node cycles are found by a Johnson-style blocked search; parallel edges
    between consecutive nodes then fan out into distinct annotated cycles.
    """
    order = {n: i for i, n in enumerate(sorted(graph.nodes, key=node_key))}
    succ: dict[DepNode, list[DepNode]] = {n: graph.successors(n) for n in graph.nodes}

    node_cycles: list[list[DepNode]] = []

    def search(start: DepNode, node: DepNode, path: list[DepNode],
               blocked: set[DepNode], blocked_by: dict[DepNode, set[DepNode]]) -> bool:
        found = False
        path.append(node)
        blocked.add(node)
        for nxt in succ[node]:
            if order[nxt] < order[start]:
                continue  # only cycles whose least node is `start`
            if nxt == start:
                node_cycles.append(path.copy())
                found = True
            elif nxt not in blocked:
                if search(start, nxt, path, blocked, blocked_by):
                    found = True
        if found:
            unblock = [node]
            while unblock:
                u = unblock.pop()
                if u in blocked:
                    blocked.discard(u)
                    unblock.extend(blocked_by.pop(u, ()))
        else:
            for nxt in succ[node]:
                if order[nxt] >= order[start]:
                    blocked_by.setdefault(nxt, set()).add(node)
        path.pop()
        return found

    for start in sorted(graph.nodes, key=node_key):
        search(start, start, [], set(), {})

    cycles: list[DeadlockCycle] = []
    for nodes in node_cycles:
        hops = list(zip(nodes, nodes[1:] + nodes[:1]))
        choices = [sorted(graph.edges_between(a, b), key=DepEdge.sort_key) for a, b in hops]

        def expand(i: int, acc: list[DepEdge]) -> None:
            if i == len(choices):
                cycles.append(DeadlockCycle(tuple(acc)).rotated_canonical())
                return
            for e in choices[i]:
                expand(i + 1, acc + [e])

        expand(0, [])
    cycles.sort(key=DeadlockCycle.sort_key)
    return cycles
