"""Shared sources, independent oracles and the random-program generator."""

from __future__ import annotations

import itertools
import random
from collections import Counter

from dlctx import AbstractTask
from dlctx.depgraph import DeadlockCycle, DepEdge, DepGraph, EdgeKind, node_key
from dlctx.syntax import ProgramPoint

# Each class blocks with a get on a method of the other: the smallest program
# with a location-task / task-location cycle between two classes.
MUTUAL_GET = """\
class A {
  B b;
  Unit ma() {
    Fut f = b ! mb(this);  @pp:callmb
    f.get;                 @pp:geta
  }
}
class B {
  Unit mb(A back) {
    Fut f = back ! ma();   @pp:callma
    f.get;                 @pp:getb
  }
}
main {
  B y = new B();           @pp:newb
  A x = new A(y);          @pp:newa
  Fut f = x ! ma();
}
"""

# caller sits in the cycle only through await edges: its second call is
# await-preceded but touches no modified field, so the recursive clause adds
# nothing for it and caller itself never becomes an answer.
AWAIT_ONLY_CALLER = """\
class A {
  B b;
  Unit caller() {
    Fut f = this ! prep();   @pp:callprep
    await f?;                @pp:aw1
    Fut g = b ! pong(this);  @pp:callpong
    await g?;                @pp:aw2
  }
  Unit prep() { skip; }      @pp:prep
}
class B {
  Unit pong(A back) {
    Fut h = back ! caller(); @pp:callback
    h.get;                   @pp:getcaller
  }
}
main {
  B y = new B();             @pp:newb
  A x = new A(y);            @pp:newa
  Fut m = x ! caller();
}
"""

NO_SYNC = """\
class C {
  Unit m() { skip; }  @pp:mbody
}
main {
  C c = new C();      @pp:newc
  Fut f = c ! m();
}
"""

EMPTY = "main { }\n"


# ---------------------------------------------------------------------------
# Brute-force elementary-circuit oracle
# ---------------------------------------------------------------------------


def brute_force_node_cycles(nodes, edge_pairs) -> set[tuple]:
    """Every elementary circuit as a canonically rotated node tuple.

    Checks all permutations of all node subsets; fine up to ~7 nodes.
    """
    edge_set = set(edge_pairs)
    found: set[tuple] = set()
    for k in range(1, len(nodes) + 1):
        for subset in itertools.combinations(nodes, k):
            for perm in itertools.permutations(subset):
                if all(
                    (perm[i], perm[(i + 1) % k]) in edge_set for i in range(k)
                ):
                    start = min(range(k), key=lambda i: node_key(perm[i]))
                    found.add(perm[start:] + perm[:start])
    return found


def task_graph(n: int, edge_pairs) -> DepGraph:
    """A dependency graph over task nodes only (synthetic annotations)."""
    tasks = [AbstractTask("T", f"m{i}") for i in range(n)]
    edges = []
    for serial, (a, b) in enumerate(sorted(edge_pairs)):
        edges.append(
            DepEdge(
                tasks[a], tasks[b], EdgeKind.TASK_TASK,
                ProgramPoint(1000 + serial), tasks[a], ProgramPoint(2000 + serial),
            )
        )
    return DepGraph(tuple(tasks), tuple(edges))


def cycle_node_tuples(cycles: list[DeadlockCycle]) -> set[tuple]:
    return {c.nodes for c in cycles}


# ---------------------------------------------------------------------------
# Brute-force grouping-count oracle
# ---------------------------------------------------------------------------


def brute_force_grouping_count(instances: list[str]) -> int:
    """Distinct ways to group instances, up to renaming the groups.

    Enumerates every labeled assignment and collapses by the multiset of
    group contents; equals the Bell number when instances are distinct.
    """
    n = len(instances)
    if n == 0:
        return 1
    seen = set()
    for assignment in itertools.product(range(n), repeat=n):
        groups: dict[int, list[str]] = {}
        for inst, g in zip(instances, assignment):
            groups.setdefault(g, []).append(inst)
        key = frozenset(Counter(tuple(sorted(v)) for v in groups.values()).items())
        seen.add(key)
    return len(seen)


# ---------------------------------------------------------------------------
# Random-program generator
# ---------------------------------------------------------------------------


class _MethodPlan:
    def __init__(self, cls_i: int, name: str, ref_param: int | None):
        self.cls_i = cls_i
        self.name = name
        self.ref_param = ref_param  # class index of the single ref param, if any


def random_program(rng: random.Random) -> str:
    """A 2-3 class program: parseable, reference-resolvable, sync-heavy.

    Reference topology: class i may hold class i-1 through a constructor
    field, methods may receive any class by parameter, and main instantiates
    every class and calls every method at least once, so async-call targets
    always resolve.
    """
    n_classes = rng.randint(2, 3)
    has_prev = [False] + [rng.random() < 0.8 for _ in range(1, n_classes)]
    plans: list[_MethodPlan] = []
    for ci in range(n_classes):
        for mi in range(rng.randint(2, 3)):
            ref_param = None
            if rng.random() < 0.55:
                ref_param = rng.randrange(n_classes)
            plans.append(_MethodPlan(ci, f"m{ci}{mi}", ref_param))

    def methods_of(ci: int) -> list[_MethodPlan]:
        return [p for p in plans if p.cls_i == ci]

    def body_lines(plan: _MethodPlan) -> list[str]:
        # accessible references: expression -> class index
        refs: list[tuple[str, int]] = [("this", plan.cls_i)]
        if has_prev[plan.cls_i]:
            refs.append(("prev", plan.cls_i - 1))
        if plan.ref_param is not None:
            refs.append(("r", plan.ref_param))
        fut_counter = itertools.count()
        lines: list[str] = []

        def call_stmt(sync: str) -> list[str]:
            target, t_cls = rng.choice(refs)
            callee = rng.choice(methods_of(t_cls))
            if callee.ref_param is not None:
                matching = [e for e, c in refs if c == callee.ref_param]
                if not matching:
                    return []
                arg = rng.choice(matching)
                call = f"{target} ! {callee.name}({arg})"
            else:
                call = f"{target} ! {callee.name}()"
            f = f"f{next(fut_counter)}"
            out = [f"Fut {f} = {call};"]
            if sync == "await":
                out.append(f"await {f}?;")
            elif sync == "get":
                out.append(f"{f}.get;")
            return out

        def simple_stmt() -> list[str]:
            return [
                rng.choice(
                    [
                        "flag = true;",
                        "flag = false;",
                        "count = count + 1;",
                        "skip;",
                    ]
                )
            ]

        for _ in range(rng.randint(2, 4)):
            kind = rng.random()
            if kind < 0.55:
                lines.extend(call_stmt(rng.choice(["none", "await", "get", "get"])))
            elif kind < 0.8:
                lines.extend(simple_stmt())
            elif kind < 0.92:
                inner = simple_stmt() + (call_stmt("get") if rng.random() < 0.5 else [])
                lines.append("if (flag) {")
                lines.extend("  " + ln for ln in inner)
                if rng.random() < 0.5:
                    lines.append("} else {")
                    lines.extend("  " + ln for ln in simple_stmt())
                lines.append("}")
            else:
                lines.append("while (count < 2) {")
                lines.append("  count = count + 1;")
                lines.append("}")
        if not lines:
            lines = ["skip;"]
        return lines

    out: list[str] = []
    for ci in range(n_classes):
        out.append(f"class C{ci} {{")
        out.append("  Bool flag = false;")
        out.append("  Int count = 0;")
        if has_prev[ci]:
            out.append(f"  C{ci - 1} prev;")
        for plan in methods_of(ci):
            param = f"C{plan.ref_param} r" if plan.ref_param is not None else ""
            out.append(f"  Unit {plan.name}({param}) {{")
            for ln in body_lines(plan):
                out.append(f"    {ln}")
            out.append("  }")
        out.append("}")

    out.append("main {")
    for ci in range(n_classes):
        ctor = f"x{ci - 1}" if has_prev[ci] else ""
        out.append(f"  C{ci} x{ci} = new C{ci}({ctor});")
    # every method gets called from main so reference parameters resolve
    for fi, plan in enumerate(plans):
        arg = f"x{plan.ref_param}" if plan.ref_param is not None else ""
        out.append(f"  Fut g{fi} = x{plan.cls_i} ! {plan.name}({arg});")
    out.append("}")
    return "\n".join(out) + "\n"
