"""Invariant checkers over execution traces.

``check_trace(trace, suite, **params)`` runs one named suite and returns the
violations found, each pointing at the event index where it shows.  Suites
that need layout knowledge (which registers are dedicated, where Help
lives, ...) take it as keyword parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable

from .simcore import ConfigurationError, ExecutionTrace, Null

MEMORY_KINDS = ("read", "write", "update", "scan")


@dataclass(frozen=True)
class Violation:
    check: str
    index: int | None
    message: str

    def __str__(self) -> str:
        at = "" if self.index is None else f" at event {self.index}"
        return f"{self.check}{at}: {self.message}"


# -- core ---------------------------------------------------------------------------------


def check_registers(trace: ExecutionTrace, initial: dict | None = None, **_) -> list[Violation]:
    """Each read returns the latest preceding write to that register, else Null."""
    mem = dict(initial or {})
    out = []
    for i, e in enumerate(trace.events):
        if e.kind == "write":
            mem[e.reg] = e.val
        elif e.kind == "read" and mem.get(e.reg, Null) != e.val:
            out.append(Violation("registers", i, f"read {e.val!r} from {e.reg}, expected {mem.get(e.reg)!r}"))
    return out


def check_snapshots(trace: ExecutionTrace, n: int | None = None, **_) -> list[Violation]:
    """Each scan returns the segments as left by the updates before it."""
    width = n or max((len(e.val) for e in trace.events if e.kind == "scan"), default=0)
    objs: dict[Any, list] = {}
    out = []
    for i, e in enumerate(trace.events):
        if e.kind == "update":
            objs.setdefault(e.reg, [Null] * width)[e.slot - 1] = e.val
        elif e.kind == "scan":
            expect = tuple(objs.get(e.reg, [Null] * width))
            if tuple(e.val) != expect:
                out.append(Violation("snapshot", i, f"scan returned {e.val!r}, state was {expect!r}"))
    return out


def check_steps(trace: ExecutionTrace, **_) -> list[Violation]:
    """Step counts match the memory events; local indices strictly increase."""
    out = []
    counts: dict[int, int] = {}
    last: dict[int, int] = {}
    for i, e in enumerate(trace.events):
        if e.kind in MEMORY_KINDS:
            counts[e.slot] = counts.get(e.slot, 0) + 1
        if e.slot in last and e.step <= last[e.slot]:
            out.append(Violation("steps", i, f"local index {e.step} after {last[e.slot]} for slot {e.slot}"))
        last[e.slot] = e.step
    for slot in set(counts) | set(trace.step_counts):
        if trace.step_counts.get(slot, 0) != counts.get(slot, 0):
            out.append(Violation(
                "steps", None,
                f"slot {slot} reports {trace.step_counts.get(slot, 0)} steps, trace has {counts.get(slot, 0)}",
            ))
    return out


def check_crashes(trace: ExecutionTrace, **_) -> list[Violation]:
    dead: set[int] = set()
    out = []
    for i, e in enumerate(trace.events):
        if e.slot in dead:
            out.append(Violation("crash", i, f"slot {e.slot} acts after crashing"))
        if e.kind == "crash":
            dead.add(e.slot)
    return out


# -- selection ------------------------------------------------------------------------------------


def _injective(trace: ExecutionTrace, label: str, check: str) -> list[Violation]:
    owner: dict[Any, int] = {}
    out = []
    for i, e in enumerate(trace.events):
        if e.kind != "decide" or e.reg != label or e.val is None:
            continue
        if e.val in owner and owner[e.val] != e.slot:
            out.append(Violation(check, i, f"{e.val!r} taken by slot {e.slot} after slot {owner[e.val]}"))
        elif e.val in owner:
            out.append(Violation(check, i, f"slot {e.slot} took {e.val!r} twice"))
        owner.setdefault(e.val, e.slot)
    return out


def check_exclusive(trace: ExecutionTrace, **_) -> list[Violation]:
    return _injective(trace, "name", "exclusive")


def check_range(trace: ExecutionTrace, lo: int = 1, hi: int | None = None, **_) -> list[Violation]:
    out = []
    for i, e in enumerate(trace.events):
        if e.kind == "decide" and e.reg == "name" and e.val is not None:
            if e.val < lo or (hi is not None and e.val > hi):
                out.append(Violation("range", i, f"name {e.val} outside [{lo}, {hi}]"))
    return out


def check_liveness(trace: ExecutionTrace, slots: Iterable[int] | None = None, **_) -> list[Violation]:
    """Every process that did not crash decided a name."""
    named = {e.slot for e in trace.decisions("name") if e.val is not None}
    every = set(slots) if slots is not None else {e.slot for e in trace.events}
    return [
        Violation("liveness", None, f"slot {s} ended without a name")
        for s in sorted(every - trace.crashed - named)
    ]


def check_compete(trace: ExecutionTrace, **_) -> list[Violation]:
    wins = [i for i, e in enumerate(trace.events) if e.kind == "decide" and e.reg == "win"]
    return [Violation("compete", i, "second winner") for i in wins[1:]]


def check_splitter(trace: ExecutionTrace, **_) -> list[Violation]:
    """At most one process stops at any splitter (a cell is identified by its name)."""
    return [
        Violation("splitter", v.index, v.message)
        for v in _injective(trace, "name", "splitter")
    ]


# -- repository -------------------------------------------------------------------------------------


def check_persistence(trace: ExecutionTrace, dedicated: int = 0, **_) -> list[Violation]:
    """A dedicated register is written once, and never after its acknowledgment."""
    acked: dict[int, int] = {}
    written: dict[int, int] = {}
    out = []
    for i, e in enumerate(trace.events):
        if e.kind == "decide" and e.reg == "ack":
            acked.setdefault(dedicated + e.val - 1, i)
        elif e.kind == "write" and isinstance(e.reg, int) and e.reg >= dedicated:
            name = f"R_{e.reg - dedicated + 1}"
            if e.reg in acked:
                out.append(Violation("persistence", i, f"write to {name} after its ack at event {acked[e.reg]}"))
            elif e.reg in written:
                out.append(Violation("persistence", i, f"second write to {name} (first at event {written[e.reg]})"))
            written.setdefault(e.reg, i)
    return out


def check_exclusive_deposit(trace: ExecutionTrace, **_) -> list[Violation]:
    return _injective(trace, "ack", "exclusive-deposit")


def check_naming(trace: ExecutionTrace, **_) -> list[Violation]:
    return _injective(trace, "commit", "naming")


def check_help(trace: ExecutionTrace, help: int | None = None, n: int = 1, **_) -> list[Violation]:
    """Help[i, j]: i writes names into empty cells, j clears; nobody else writes."""
    if help is None:
        return []
    cells: dict[int, Any] = {}
    out = []
    for idx, e in enumerate(trace.events):
        if e.kind != "write" or not isinstance(e.reg, int) or not help <= e.reg < help + n * n:
            continue
        i, j = divmod(e.reg - help, n)
        i, j = i + 1, j + 1
        current = cells.get(e.reg, Null)
        if e.slot == i and e.val is not Null:
            if current is not Null:
                out.append(Violation("help", idx, f"Help[{i},{j}] overwritten while holding {current!r}"))
        elif e.slot == j and e.val is Null:
            pass
        else:
            out.append(Violation("help", idx, f"slot {e.slot} wrote {e.val!r} to Help[{i},{j}]"))
        cells[e.reg] = e.val
    return out


def check_pipelining(trace: ExecutionTrace, **_) -> list[Violation]:
    """A process queries for a new value only after its previous deposit was acknowledged."""
    waiting: set[int] = set()
    out = []
    for i, e in enumerate(trace.events):
        if e.kind != "decide":
            continue
        if e.reg == "query":
            if e.slot in waiting:
                out.append(Violation("pipelining", i, f"slot {e.slot} queried before its ack"))
            if e.val is not None:
                waiting.add(e.slot)
        elif e.reg == "ack":
            waiting.discard(e.slot)
    return out


# -- store & collect ---------------------------------------------------------------------------------


def _operations(trace: ExecutionTrace) -> list[tuple[int, str, int, int, Any]]:
    """(slot, label, first event, closing decide, value) for each store/collect."""
    ops = []
    start: dict[int, int] = {}
    for i, e in enumerate(trace.events):
        if e.kind == "crash":
            continue
        start.setdefault(e.slot, i)
        if e.kind == "decide" and e.reg in ("stored", "collect"):
            ops.append((e.slot, e.reg, start.pop(e.slot), i, e.val))
    return ops


def check_collect(
    trace: ExecutionTrace, controls: Iterable[int] = (), slot_names: dict | None = None, **_
) -> list[Violation]:
    """Control flags only rise, and collects see every store completed before them.

    For each slot whose latest completed store precedes the collect, the
    collect must return a value that slot wrote no earlier than the start of
    that store and no later than the end of the collect.  Stores cut short by
    a crash count once their write happened.  ``slot_names`` maps slots to
    the keys used in collect results (identity when omitted).
    """
    controls = set(controls)
    names = slot_names or {}
    out = [
        Violation("control", i, f"control register {e.reg} set to {e.val!r}")
        for i, e in enumerate(trace.events)
        if e.kind == "write" and e.reg in controls and e.val != 1
    ]
    ops = _operations(trace)
    stores: dict[int, list[tuple[int, int]]] = {}
    for slot, label, begin, end, val in ops:
        if label == "stored" and val is not None:
            stores.setdefault(slot, []).append((begin, end))
    written: dict[int, list[tuple[int, Any]]] = {}
    for i, e in enumerate(trace.events):
        if e.kind == "write" and isinstance(e.val, tuple) and len(e.val) == 2:
            if e.val[0] == names.get(e.slot, e.slot):
                written.setdefault(e.slot, []).append((i, e.val[1]))
    for slot, label, begin, end, val in ops:
        if label != "collect":
            continue
        got = dict(val)
        for s, seq in stores.items():
            done = [b for b, fin in seq if fin < begin]
            if not done:
                continue
            ok = {v for i, v in written.get(s, []) if done[-1] <= i <= end}
            key = names.get(s, s)
            if key not in got:
                out.append(Violation("collect", end, f"completed store by slot {s} missing"))
            elif got[key] not in ok:
                out.append(Violation("collect", end, f"stale value {got[key]!r} for slot {s}"))
    return out


# -- registry -------------------------------------------------------------------------------------------

Checker = Callable[..., list[Violation]]

SUITES: dict[str, tuple[Checker, ...]] = {
    "core": (check_registers, check_snapshots, check_steps, check_crashes),
    "renaming": (check_exclusive, check_range, check_liveness),
    "exclusive": (check_exclusive,),
    "compete": (check_compete,),
    "splitter": (check_splitter,),
    "persistence": (check_persistence, check_exclusive_deposit),
    "help": (check_help,),
    "pipelining": (check_pipelining,),
    "naming": (check_naming,),
    "storecollect": (check_collect,),
}


def check_trace(trace: ExecutionTrace, suite: str = "core", **params) -> list[Violation]:
    """Run ``suite`` (or several, comma-separated) over ``trace``."""
    found: list[Violation] = []
    for name in suite.split(","):
        name = name.strip()
        if name not in SUITES:
            raise ConfigurationError(f"unknown invariant suite {name!r}; known: {sorted(SUITES)}")
        for checker in SUITES[name]:
            found.extend(checker(trace, **params))
    return found
