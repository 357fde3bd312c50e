"""Enumeration of initial distributed contexts from a task-cardinality set.

For every admissible per-task instance count, the task instances of each
class are distributed over location instances of that class in all possible
groupings (set partitions); groupings equal up to location renaming collapse
to one canonical representative.  Reference parameters and constructor-wired
reference fields are bound to a compatible location already in the context
(an auxiliary, initially-empty location is added when none exists); by
default these wiring choices are collapsed under the same canonical symmetry
and only enumerated with ``expand_wiring``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Union

from .absdom import AbstractTask
from .errors import ContextError
from .interfering import TaskCardinality
from .syntax.ast import ClassDecl, Program

ArgValue = Union[int, bool, None, str]  # None = unit, str = location instance name


@dataclass(frozen=True)
class TaskInstance:
    task: AbstractTask
    args: tuple[tuple[str, ArgValue], ...] = ()

    def render(self) -> str:
        return self.task.method_name


@dataclass(frozen=True)
class LocationInstance:
    name: str  # e.g. "db1"
    class_name: str
    fields: tuple[tuple[str, str], ...] = ()  # reference field -> instance name
    tasks: tuple[TaskInstance, ...] = ()

    def render(self) -> str:
        inner = ",".join(t.render() for t in self.tasks)
        return f"[{inner}]_{self.name}"


@dataclass(frozen=True)
class InitialContext:
    locations: tuple[LocationInstance, ...]

    def render(self) -> str:
        return "{" + ", ".join(loc.render() for loc in self.locations) + "}"

    def location_named(self, name: str) -> LocationInstance:
        for loc in self.locations:
            if loc.name == name:
                return loc
        raise ContextError(f"no location named {name!r} in context")

    def task_count(self, task: AbstractTask) -> int:
        return sum(1 for loc in self.locations for t in loc.tasks if t.task == task)


def class_abbreviations(program: Program) -> dict[str, str]:
    """Short instance-name prefixes: capital letters of the class name."""
    used: set[str] = set()
    abbrevs: dict[str, str] = {}
    for i, cls in enumerate(program.classes):
        cand = "".join(ch for ch in cls.name if ch.isupper()).lower() or cls.name[:1].lower()
        if cand in used:
            cand = cls.name.lower()
        if cand in used:
            cand = f"{cls.name.lower()}{i}"
        used.add(cand)
        abbrevs[cls.name] = cand
    return abbrevs


def most_general_tasks(program: Program) -> frozenset[TaskCardinality]:
    """Every declared method with the default (1, 1) cardinality."""
    return frozenset(
        TaskCardinality(AbstractTask(c.name, m.name), 1, 1)
        for c in program.classes
        for m in c.methods
    )


def set_partitions(items: list) -> Iterable[list[list]]:
    """All set partitions of *items* via restricted growth strings."""
    n = len(items)
    if n == 0:
        yield []
        return
    growth = [0] * n

    def rec(i: int, max_used: int):
        if i == n:
            groups: dict[int, list] = {}
            for idx, g in enumerate(growth):
                groups.setdefault(g, []).append(items[idx])
            yield [groups[g] for g in sorted(groups)]
            return
        for g in range(max_used + 2):
            growth[i] = g
            yield from rec(i + 1, max(max_used, g))

    yield from rec(0, -1)


def _primitive_default(type_name: str) -> ArgValue:
    return {"Int": 0, "Bool": False, "Unit": None}[type_name]


def _declaration_index(program: Program) -> dict[str, int]:
    return {c.name: i for i, c in enumerate(program.classes)}


def _method_index(cls: ClassDecl) -> dict[str, int]:
    return {m.name: i for i, m in enumerate(cls.methods)}


class _Builder:
    def __init__(self, program: Program, expand_wiring: bool):
        self.program = program
        self.expand_wiring = expand_wiring
        self.abbrevs = class_abbreviations(program)
        self.cls_idx = _declaration_index(program)

    # -- wiring ------------------------------------------------------------

    def _ref_slots(self, locations: list[dict]) -> list[tuple]:
        """(kind, holder index, slot name, wanted class) for every unwired ref."""
        slots = []
        for i, loc in enumerate(locations):
            cls = self.program.class_named(loc["class"])
            for fname, ftype in cls.ctor_params:
                if self.program.class_named(ftype) and fname not in loc["fields"]:
                    slots.append(("field", i, fname, ftype))
            for j, ti in enumerate(loc["tasks"]):
                method = cls.method_named(ti.task.method_name)
                for pname, ptype in method.params:
                    if self.program.class_named(ptype) and not any(
                        a == pname for a, _ in ti.args
                    ):
                        slots.append(("arg", i, (j, pname), ptype))
        return slots

    def _ensure_candidates(self, locations: list[dict]) -> None:
        """Add auxiliary empty locations until every ref slot has a target."""
        for _ in range(len(self.program.classes) + 1):
            missing = []
            for _, _, _, wanted in self._ref_slots(locations):
                if not any(loc["class"] == wanted for loc in locations):
                    if wanted not in missing:
                        missing.append(wanted)
            if not missing:
                return
            for cls_name in missing:
                idx = sum(1 for loc in locations if loc["class"] == cls_name) + 1
                locations.append(
                    {
                        "class": cls_name,
                        "name": f"{self.abbrevs[cls_name]}{idx}",
                        "fields": {},
                        "tasks": [],
                    }
                )
        raise ContextError("unconstructible reference fields")  # pragma: no cover

    def wire(self, locations: list[dict]) -> list[list[dict]]:
        self._ensure_candidates(locations)
        slots = self._ref_slots(locations)
        candidate_lists = []
        for _, _, _, wanted in slots:
            names = [loc["name"] for loc in locations if loc["class"] == wanted]
            candidate_lists.append(names if self.expand_wiring else names[:1])
        variants = []
        for choice in itertools.product(*candidate_lists):
            wired = [
                {
                    "class": loc["class"],
                    "name": loc["name"],
                    "fields": dict(loc["fields"]),
                    "tasks": list(loc["tasks"]),
                }
                for loc in locations
            ]
            for (kind, i, slot, _), target in zip(slots, choice):
                if kind == "field":
                    wired[i]["fields"][slot] = target
                else:
                    j, pname = slot
                    ti = wired[i]["tasks"][j]
                    wired[i]["tasks"][j] = replace(ti, args=ti.args + ((pname, target),))
            variants.append(wired)
        return variants

    # -- assembly ----------------------------------------------------------

    def finish(self, locations: list[dict]) -> InitialContext:
        """Fill primitive arguments with defaults and freeze."""
        out = []
        for loc in locations:
            cls = self.program.class_named(loc["class"])
            tasks = []
            for ti in loc["tasks"]:
                method = cls.method_named(ti.task.method_name)
                given = dict(ti.args)
                args = []
                for pname, ptype in method.params:
                    if pname in given:
                        args.append((pname, given[pname]))
                    else:
                        args.append((pname, _primitive_default(ptype)))
                tasks.append(TaskInstance(ti.task, tuple(args)))
            out.append(
                LocationInstance(
                    loc["name"], loc["class"], tuple(sorted(loc["fields"].items())), tuple(tasks)
                )
            )
        return InitialContext(tuple(out))


def _context_sort_key(program: Program, ctx: InitialContext) -> tuple:
    cls_idx = _declaration_index(program)
    return tuple(
        (
            cls_idx[loc.class_name],
            loc.name,
            tuple(t.task.method_name for t in loc.tasks),
            tuple((t.task.method_name, t.args) for t in loc.tasks),
            loc.fields,
        )
        for loc in ctx.locations
    )


def canonicalize(program: Program, ctx: InitialContext) -> InitialContext:
    """Relabel location instances into the canonical form; idempotent.

    Classes are processed in declaration order; within a class, locations are
    ordered by the sorted multiset of their task names, ties resolved by the
    relabeling that minimizes the full serialization (wiring included).
    """
    cls_idx = _declaration_index(program)
    abbrevs = class_abbreviations(program)
    by_class: dict[str, list[LocationInstance]] = {}
    for loc in ctx.locations:
        by_class.setdefault(loc.class_name, []).append(loc)

    def group_sig(loc: LocationInstance) -> tuple:
        cls = program.class_named(loc.class_name)
        midx = _method_index(cls)
        return tuple(sorted(midx[t.task.method_name] for t in loc.tasks))

    # per class: locations bucketed by task-name signature, in signature order
    ordered_buckets: list[list[LocationInstance]] = []
    class_of_bucket: list[str] = []
    for cls_name in sorted(by_class, key=lambda c: cls_idx[c]):
        locs = by_class[cls_name]
        buckets: dict[tuple, list[LocationInstance]] = {}
        for loc in locs:
            buckets.setdefault(group_sig(loc), []).append(loc)
        for sig in sorted(buckets):
            ordered_buckets.append(buckets[sig])
            class_of_bucket.append(cls_name)

    best: Optional[tuple] = None
    best_ctx: Optional[InitialContext] = None
    for perm_combo in itertools.product(
        *(itertools.permutations(range(len(b))) for b in ordered_buckets)
    ):
        arranged: dict[str, list[LocationInstance]] = {}
        for bucket, cls_name, perm in zip(ordered_buckets, class_of_bucket, perm_combo):
            arranged.setdefault(cls_name, []).extend(bucket[i] for i in perm)
        renaming: dict[str, str] = {}
        new_order: list[tuple[str, LocationInstance]] = []
        for cls_name in sorted(arranged, key=lambda c: cls_idx[c]):
            for i, loc in enumerate(arranged[cls_name]):
                new_name = f"{abbrevs[cls_name]}{i + 1}"
                renaming[loc.name] = new_name
                new_order.append((new_name, loc))
        relabeled = []
        for new_name, loc in new_order:
            cls = program.class_named(loc.class_name)
            midx = _method_index(cls)
            tasks = tuple(
                sorted(
                    (
                        TaskInstance(
                            t.task,
                            tuple(
                                (p, renaming.get(v, v) if isinstance(v, str) else v)
                                for p, v in t.args
                            ),
                        )
                        for t in loc.tasks
                    ),
                    key=lambda t: (midx[t.task.method_name], t.args),
                )
            )
            fields = tuple(sorted((f, renaming[v]) for f, v in loc.fields))
            relabeled.append(LocationInstance(new_name, loc.class_name, fields, tasks))
        cand = InitialContext(tuple(relabeled))
        key = _context_sort_key(program, cand)
        if best is None or key < best:
            best = key
            best_ctx = cand
    assert best_ctx is not None
    return best_ctx


def generate_contexts(
    program: Program,
    t_ini: Iterable[TaskCardinality],
    expand_wiring: bool = False,
) -> list[InitialContext]:
    """All canonical initial contexts admitted by *t_ini*, deterministic order."""
    cards = sorted(
        t_ini,
        key=lambda tc: (tc.task.class_name, tc.task.method_name),
    )
    cls_idx = _declaration_index(program)
    for tc in cards:
        cls = program.class_named(tc.task.class_name)
        if cls is None or cls.method_named(tc.task.method_name) is None:
            raise ContextError(f"task {tc.task.render()} not declared in the program")
    cards.sort(key=lambda tc: (cls_idx[tc.task.class_name], tc.task.method_name))

    builder = _Builder(program, expand_wiring)
    results: dict[tuple, InitialContext] = {}
    count_ranges = [range(tc.min, tc.max + 1) for tc in cards]
    for counts in itertools.product(*count_ranges):
        instances_per_class: dict[str, list[AbstractTask]] = {}
        for tc, k in zip(cards, counts):
            instances_per_class.setdefault(tc.task.class_name, []).extend([tc.task] * k)
        class_names = sorted(instances_per_class, key=lambda c: cls_idx[c])
        partition_lists = [
            list(set_partitions(instances_per_class[c])) for c in class_names
        ]
        for combo in itertools.product(*partition_lists):
            locations: list[dict] = []
            for cls_name, groups in zip(class_names, combo):
                cls = program.class_named(cls_name)
                midx = _method_index(cls)
                # name groups in signature order so default wiring targets the
                # canonically-first location of each class
                ordered = sorted(
                    groups, key=lambda g: tuple(sorted(midx[t.method_name] for t in g))
                )
                for i, group in enumerate(ordered):
                    locations.append(
                        {
                            "class": cls_name,
                            "name": f"{builder.abbrevs[cls_name]}{i + 1}",
                            "fields": {},
                            "tasks": [TaskInstance(t) for t in group],
                        }
                    )
            for wired in builder.wire(locations):
                ctx = canonicalize(program, builder.finish(wired))
                results.setdefault(_context_sort_key(program, ctx), ctx)
    return [results[k] for k in sorted(results)]
