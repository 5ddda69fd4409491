"""Deterministic simulation of asynchronous crash-prone processes over shared memory.

Processes are generator functions.  Each ``yield`` hands one operation to the
simulator (:class:`Read`, :class:`Write`, :class:`Update`, :class:`Scan` or
:class:`Decide`) and receives the operation's result back, so one activation
of a process executes exactly one atomic event.  Sub-protocols compose with
``yield from`` and return their outcome as the generator's return value.

The only channel between processes is a :class:`SharedMemory`: an array of
last-writer-wins registers plus atomic-snapshot objects with one segment per
process slot.
"""

from __future__ import annotations

import copy
import json
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Generator, Iterable, Iterator, Mapping, NamedTuple

Null = None

Machine = Generator[Any, Any, Any]
MachineFactory = Callable[[], Machine]


class ConfigurationError(ValueError):
    """A simulation was set up inconsistently (unknown slot, bad layout, ...)."""


class ExplorationLimit(RuntimeError):
    """Exhaustive exploration produced more traces than the configured cap."""


@dataclass(frozen=True)
class ProcessId:
    original_name: int
    slot: int


# -- operations a machine may yield ------------------------------------------


@dataclass(frozen=True)
class Read:
    reg: int


@dataclass(frozen=True)
class Write:
    reg: int
    value: Any


@dataclass(frozen=True)
class Update:
    """Write the caller's own segment of snapshot object ``obj``."""

    value: Any
    obj: int = 0


@dataclass(frozen=True)
class Scan:
    obj: int = 0


@dataclass(frozen=True)
class Decide:
    """A local outcome event (name adopted, deposit acknowledged, ...).

    Costs an activation but is not a shared-memory step.
    """

    value: Any
    label: str = "name"


MEMORY_OPS = (Read, Write, Update, Scan)


# -- shared memory -------------------------------------------------------------


class SharedMemory:
    """Registers addressed by dense integer ids, plus snapshot objects.

    Registers are materialized lazily; an unread register holds ``Null``.
    ``allocate`` hands out disjoint id ranges and records them so layouts can
    be audited.  ``allocate_unbounded`` opens an infinite region starting at
    the returned base; it must be the last allocation.
    """

    def __init__(self, register_count: int = 0, n: int = 1):
        if register_count < 0:
            raise ConfigurationError("register_count must be nonnegative")
        if n < 1:
            raise ConfigurationError("need at least one process slot")
        self.n = n
        self.size = register_count
        self.tail: int | None = None
        self.registers: dict[int, Any] = {}
        self.snapshots: list[list[Any]] = [[Null] * n]
        self.allocations: list[tuple[str, int, int | None]] = []
        if register_count:
            self.allocations.append(("initial", 0, register_count))

    def allocate(self, count: int, label: str = "") -> int:
        if self.tail is not None:
            raise ConfigurationError("cannot allocate after the unbounded region")
        base = self.size
        self.size += count
        self.allocations.append((label, base, count))
        return base

    def allocate_unbounded(self, label: str = "") -> int:
        if self.tail is not None:
            raise ConfigurationError("only one unbounded region per memory")
        self.tail = self.size
        self.allocations.append((label, self.tail, None))
        return self.tail

    def add_snapshot(self) -> int:
        self.snapshots.append([Null] * self.n)
        return len(self.snapshots) - 1

    @property
    def registers_used(self) -> int:
        """Finite register count plus one register per snapshot segment."""
        return self.size + sum(len(s) for s in self.snapshots)

    def _check(self, reg: int) -> None:
        if reg < 0 or (reg >= self.size and (self.tail is None or reg < self.tail)):
            raise ConfigurationError(f"register {reg} is not allocated")

    def read(self, reg: int) -> Any:
        self._check(reg)
        return self.registers.get(reg, Null)

    def write(self, reg: int, value: Any) -> None:
        self._check(reg)
        self.registers[reg] = value

    def update(self, obj: int, slot: int, value: Any) -> None:
        self.snapshots[obj][slot - 1] = value

    def scan(self, obj: int) -> tuple:
        return tuple(self.snapshots[obj])

    def copy(self) -> "SharedMemory":
        return copy.deepcopy(self)

    def state_key(self) -> tuple:
        regs = tuple(sorted((r, v) for r, v in self.registers.items() if v is not Null))
        return regs, tuple(tuple(s) for s in self.snapshots)


def create_memory(register_count: int, n: int) -> SharedMemory:
    return SharedMemory(register_count, n)


# -- traces ------------------------------------------------------------------


class Event(NamedTuple):
    seq: int
    slot: int
    kind: str  # read | write | update | scan | decide | crash
    reg: Any  # register id, snapshot object id, or the decide label
    val: Any
    step: int  # per-process event index, 1-based


@dataclass
class ExecutionTrace:
    events: list[Event] = field(default_factory=list)
    step_counts: dict[int, int] = field(default_factory=dict)
    scan_counts: dict[int, int] = field(default_factory=dict)
    skipped: list[int] = field(default_factory=list)
    crashed: set[int] = field(default_factory=set)
    terminated: set[int] = field(default_factory=set)
    results: dict[int, Any] = field(default_factory=dict)

    def decisions(self, label: str | None = "name") -> list[Event]:
        return [
            e for e in self.events if e.kind == "decide" and (label is None or e.reg == label)
        ]

    def key(self) -> tuple:
        return tuple(self.events)

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(dict(zip(Event._fields, _jsonable(e))), sort_keys=True)
            for e in self.events
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str) -> "ExecutionTrace":
        trace = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            raw = json.loads(line)
            e = Event(*(_tupled(raw[f]) for f in Event._fields))
            trace.events.append(e)
            if e.kind in ("read", "write", "update", "scan"):
                trace.step_counts[e.slot] = trace.step_counts.get(e.slot, 0) + 1
            if e.kind == "scan":
                trace.scan_counts[e.slot] = trace.scan_counts.get(e.slot, 0) + 1
            if e.kind == "crash":
                trace.crashed.add(e.slot)
        return trace


def _jsonable(value: Any) -> Any:
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    if isinstance(value, frozenset):
        return sorted(_jsonable(v) for v in value)
    if isinstance(value, dict):
        return [[_jsonable(k), _jsonable(v)] for k, v in sorted(value.items())]
    return value


def _tupled(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


# -- schedules -----------------------------------------------------------------


@dataclass(frozen=True)
class Activate:
    slot: int


@dataclass(frozen=True)
class Crash:
    slot: int


class Schedule:
    """Source of directives.  ``next`` sees the simulation; ``None`` ends the run."""

    def next(self, sim: "Simulation") -> Activate | Crash | None:
        raise NotImplementedError


class RoundRobin(Schedule):
    def __init__(self) -> None:
        self._last = 0

    def next(self, sim):
        live = sim.live()
        if not live:
            return None
        after = [s for s in live if s > self._last]
        self._last = after[0] if after else live[0]
        return Activate(self._last)


class SeededRandom(Schedule):
    """Uniform choice among live processes, with optional random crashes.

    At most ``crashes`` crashes happen; each directive is a crash with
    probability ``crash_rate`` while budget remains, and at least
    ``keep_alive`` processes are never crashed.
    """

    def __init__(self, seed: int, crashes: int = 0, crash_rate: float = 0.05, keep_alive: int = 1):
        self.rng = random.Random(seed)
        self.crashes = crashes
        self.crash_rate = crash_rate
        self.keep_alive = keep_alive

    def next(self, sim):
        live = sim.live()
        if not live:
            return None
        if (
            self.crashes > 0
            and len(live) > self.keep_alive
            and self.rng.random() < self.crash_rate
        ):
            self.crashes -= 1
            return Crash(self.rng.choice(live))
        return Activate(self.rng.choice(live))


class Scripted(Schedule):
    def __init__(self, directives: Iterable[Activate | Crash]):
        self.directives = list(directives)
        self._pos = 0

    def next(self, sim):
        if self._pos >= len(self.directives):
            return None
        d = self.directives[self._pos]
        self._pos += 1
        return d


class Chain(Schedule):
    """Run each schedule until it is exhausted, then move to the next."""

    def __init__(self, *schedules: Schedule):
        self.schedules = list(schedules)

    def next(self, sim):
        while self.schedules:
            d = self.schedules[0].next(sim)
            if d is not None:
                return d
            self.schedules.pop(0)
        return None


class Prefix(Schedule):
    """The first ``length`` directives of another schedule."""

    def __init__(self, inner: Schedule, length: int):
        self.inner = inner
        self.left = length

    def next(self, sim):
        if self.left <= 0:
            return None
        self.left -= 1
        return self.inner.next(sim)


def parse_schedule(text: str) -> Scripted:
    """Parse ``A <slot>`` / ``X <slot>`` lines; ``#`` starts a comment."""
    directives: list[Activate | Crash] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in ("A", "X") or not parts[1].isdigit():
            raise ConfigurationError(f"line {lineno}: expected 'A <slot>' or 'X <slot>'")
        cls = Activate if parts[0] == "A" else Crash
        directives.append(cls(int(parts[1])))
    return Scripted(directives)


def format_schedule(directives: Iterable[Activate | Crash]) -> str:
    return "".join(
        f"{'A' if isinstance(d, Activate) else 'X'} {d.slot}\n" for d in directives
    )


# -- simulation ------------------------------------------------------------------


_DONE = object()


class Simulation:
    """Drives a set of machines one directive at a time."""

    def __init__(self, machines: Mapping[int, MachineFactory], memory: SharedMemory):
        for slot in machines:
            if not 1 <= slot <= memory.n:
                raise ConfigurationError(f"slot {slot} outside 1..{memory.n}")
        self.memory = memory
        self.trace = ExecutionTrace()
        self._gens: dict[int, Machine] = {}
        self._pending: dict[int, Any] = {}
        self._events: dict[int, int] = {}
        for slot in sorted(machines):
            gen = machines[slot]()
            self._gens[slot] = gen
            self._events[slot] = 0
            self.trace.step_counts[slot] = 0
            self.trace.scan_counts[slot] = 0
            self._advance(slot, gen, None, first=True)
        self.directives = 0

    def _advance(self, slot: int, gen: Machine, value: Any, first: bool = False) -> None:
        try:
            op = next(gen) if first else gen.send(value)
        except StopIteration as stop:
            self._pending[slot] = _DONE
            self.trace.terminated.add(slot)
            self.trace.results[slot] = stop.value
            return
        self._pending[slot] = op

    @property
    def slots(self) -> list[int]:
        return sorted(self._gens)

    def live(self) -> list[int]:
        return [
            s for s in sorted(self._gens)
            if s not in self.trace.crashed and self._pending[s] is not _DONE
        ]

    def pending(self, slot: int) -> Any:
        op = self._pending[slot]
        return None if op is _DONE else op

    @property
    def done(self) -> bool:
        return not self.live()

    def _record(self, slot: int, kind: str, reg: Any, val: Any) -> Event:
        self._events[slot] += 1
        e = Event(len(self.trace.events), slot, kind, reg, val, self._events[slot])
        self.trace.events.append(e)
        return e

    def apply(self, directive: Activate | Crash) -> Event | None:
        slot = directive.slot
        if slot not in self._gens:
            raise ConfigurationError(f"directive for unknown slot {slot}")
        index = self.directives
        self.directives += 1
        if slot in self.trace.crashed or self._pending[slot] is _DONE:
            self.trace.skipped.append(index)
            return None
        if isinstance(directive, Crash):
            self.trace.crashed.add(slot)
            return self._record(slot, "crash", None, None)
        return self.activate(slot)

    def activate(self, slot: int) -> Event:
        op = self._pending[slot]
        mem = self.memory
        result = None
        if isinstance(op, Read):
            result = mem.read(op.reg)
            e = self._record(slot, "read", op.reg, result)
        elif isinstance(op, Write):
            mem.write(op.reg, op.value)
            e = self._record(slot, "write", op.reg, op.value)
        elif isinstance(op, Update):
            mem.update(op.obj, slot, op.value)
            e = self._record(slot, "update", op.obj, op.value)
        elif isinstance(op, Scan):
            result = mem.scan(op.obj)
            e = self._record(slot, "scan", op.obj, result)
            self.trace.scan_counts[slot] += 1
        elif isinstance(op, Decide):
            e = self._record(slot, "decide", op.label, op.value)
        else:
            raise ConfigurationError(f"slot {slot} yielded {op!r}, not an operation")
        if not isinstance(op, Decide):
            self.trace.step_counts[slot] += 1
        self._advance(slot, self._gens[slot], result)
        return e

    def run(self, schedule: Schedule, max_directives: int | None = None) -> ExecutionTrace:
        while not self.done:
            if max_directives is not None and self.directives >= max_directives:
                break
            d = schedule.next(self)
            if d is None:
                break
            self.apply(d)
        return self.trace


def run(
    machines: Mapping[int, MachineFactory],
    schedule: Schedule,
    memory: SharedMemory,
    max_directives: int | None = 10_000_000,
) -> ExecutionTrace:
    """Execute ``machines`` under ``schedule``; stops when all are done or the schedule ends."""
    return Simulation(machines, memory).run(schedule, max_directives)


def execute_solo(gen: Machine, memory: SharedMemory, slot: int = 1) -> tuple[Any, list[Event]]:
    """Run one generator to completion against ``memory`` with no interference."""
    sim = Simulation({slot: lambda: gen}, memory)
    while not sim.done:
        sim.activate(slot)
    return sim.trace.results[slot], sim.trace.events


# -- exhaustive exploration ----------------------------------------------------------


class _Replayer:
    """Maps a machine's history of results to the operation it yields next.

    A machine is deterministic in the results it has received, so that
    history is its whole local state.
    """

    def __init__(self, machines: Mapping[int, MachineFactory]):
        self.machines = machines
        self.cache: dict[tuple[int, tuple], Any] = {}

    def op(self, slot: int, history: tuple) -> Any:
        key = (slot, history)
        if key not in self.cache:
            gen = self.machines[slot]()
            try:
                op = next(gen)
                for value in history:
                    op = gen.send(value)
            except StopIteration:
                op = _DONE
            self.cache[key] = op
        return self.cache[key]


def _step(memory: SharedMemory, slot: int, op: Any) -> tuple[str, Any, Any, Any]:
    """Apply ``op`` to ``memory``; returns (kind, reg, logged value, result)."""
    if isinstance(op, Read):
        v = memory.read(op.reg)
        return "read", op.reg, v, v
    if isinstance(op, Write):
        memory.write(op.reg, op.value)
        return "write", op.reg, op.value, None
    if isinstance(op, Update):
        memory.update(op.obj, slot, op.value)
        return "update", op.obj, op.value, None
    if isinstance(op, Scan):
        v = memory.scan(op.obj)
        return "scan", op.obj, v, v
    if isinstance(op, Decide):
        return "decide", op.label, op.value, None
    raise ConfigurationError(f"slot {slot} yielded {op!r}, not an operation")


@dataclass
class _Node:
    memory: SharedMemory
    histories: dict[int, tuple]
    crashed: frozenset
    crashes_left: int

    def key(self) -> tuple:
        return (
            self.memory.state_key(),
            tuple(sorted(self.histories.items())),
            self.crashed,
            self.crashes_left,
        )


def _moves(node: _Node, replay: _Replayer, bound: int) -> Iterator[tuple[str, int]]:
    for slot in sorted(node.histories):
        if slot in node.crashed:
            continue
        h = node.histories[slot]
        if len(h) >= bound or replay.op(slot, h) is _DONE:
            continue
        yield "A", slot
        if node.crashes_left:
            yield "X", slot


def _successor(node: _Node, move: tuple[str, int], replay: _Replayer) -> tuple[_Node, tuple]:
    kind, slot = move
    if kind == "X":
        nxt = _Node(node.memory, node.histories, node.crashed | {slot}, node.crashes_left - 1)
        return nxt, ("crash", None, None)
    mem = node.memory.copy()
    ekind, reg, val, result = _step(mem, slot, replay.op(slot, node.histories[slot]))
    histories = dict(node.histories)
    histories[slot] = node.histories[slot] + (result,)
    return _Node(mem, histories, node.crashed, node.crashes_left), (ekind, reg, val)


def _root(machines: Mapping[int, MachineFactory], memory: SharedMemory, crash_budget: int) -> _Node:
    return _Node(memory.copy(), {s: () for s in machines}, frozenset(), crash_budget)


def explore_all_interleavings(
    machines: Mapping[int, MachineFactory],
    memory: SharedMemory,
    per_process_step_bound: int,
    crash_budget: int = 0,
    cap: int = 200_000,
) -> list[ExecutionTrace]:
    """Every distinct trace reachable within the bounds, in deterministic DFS order.

    A process stops being schedulable once it has produced
    ``per_process_step_bound`` events or terminated.
    """
    replay = _Replayer(machines)
    traces: list[ExecutionTrace] = []
    path: list[Event] = []

    def finish(node: _Node) -> None:
        if len(traces) >= cap:
            raise ExplorationLimit(f"more than {cap} traces")
        t = ExecutionTrace(events=list(path))
        for s in machines:
            t.step_counts[s] = sum(
                1 for e in path if e.slot == s and e.kind in ("read", "write", "update", "scan")
            )
            t.scan_counts[s] = sum(1 for e in path if e.slot == s and e.kind == "scan")
        t.crashed = {e.slot for e in path if e.kind == "crash"}
        t.terminated = {
            s for s in machines
            if s not in t.crashed and replay.op(s, node.histories[s]) is _DONE
        }
        traces.append(t)

    def dfs(node: _Node) -> None:
        moves = list(_moves(node, replay, per_process_step_bound))
        if not moves:
            finish(node)
            return
        for move in moves:
            nxt, (kind, reg, val) = _successor(node, move, replay)
            slot = move[1]
            step = sum(1 for e in path if e.slot == slot) + 1
            path.append(Event(len(path), slot, kind, reg, val, step))
            dfs(nxt)
            path.pop()

    dfs(_root(machines, memory, crash_budget))
    return traces


@dataclass
class Certificate:
    """Outcome of :func:`certify_interleavings`."""

    traces: int
    states: int
    violations: int
    counterexample: list[tuple[str, int]] | None = None

    @property
    def holds(self) -> bool:
        return self.violations == 0


@dataclass(frozen=True)
class FinalState:
    """What a property sees at the end of an explored trace."""

    decisions: dict[int, tuple]
    histories: dict[int, tuple]
    crashed: frozenset
    terminated: frozenset
    memory: SharedMemory


def certify_interleavings(
    machines: Mapping[int, MachineFactory],
    memory: SharedMemory,
    per_process_step_bound: int,
    crash_budget: int,
    prop: Callable[[FinalState], bool],
    state_cap: int = 5_000_000,
) -> Certificate:
    """Check ``prop`` at the end of every trace, counting traces exactly.

    Equivalent to running :func:`explore_all_interleavings` and testing each
    trace, but shares work between traces that reach the same global state
    (memory contents plus every process's history of results), which keeps
    three-process explorations tractable.
    """
    replay = _Replayer(machines)
    memo: dict[tuple, tuple[int, int, tuple | None]] = {}

    def decisions_of(slot: int, history: tuple) -> tuple:
        out = []
        for i in range(len(history)):
            op = replay.op(slot, history[:i])
            if isinstance(op, Decide):
                out.append((op.label, op.value))
        return tuple(out)

    def visit(node: _Node) -> tuple[int, int, tuple | None]:
        key = node.key()
        if key in memo:
            return memo[key]
        if len(memo) >= state_cap:
            raise ExplorationLimit(f"more than {state_cap} states")
        moves = list(_moves(node, replay, per_process_step_bound))
        if not moves:
            final = FinalState(
                decisions={s: decisions_of(s, h) for s, h in node.histories.items()},
                histories=dict(node.histories),
                crashed=node.crashed,
                terminated=frozenset(
                    s for s, h in node.histories.items()
                    if s not in node.crashed and replay.op(s, h) is _DONE
                ),
                memory=node.memory,
            )
            ok = prop(final)
            result = (1, 0 if ok else 1, None if ok else ())
        else:
            count = bad = 0
            witness = None
            for move in moves:
                nxt, _ = _successor(node, move, replay)
                c, b, w = visit(nxt)
                count += c
                bad += b
                if witness is None and w is not None:
                    witness = (move,) + w
            result = (count, bad, witness)
        memo[key] = result
        return result

    count, bad, witness = visit(_root(machines, memory, crash_budget))
    return Certificate(count, len(memo), bad, list(witness) if witness is not None else None)


def replay_moves(
    machines: Mapping[int, MachineFactory], memory: SharedMemory, moves: Iterable[tuple[str, int]]
) -> ExecutionTrace:
    """Turn a counterexample move list into a concrete trace."""
    directives = [Activate(s) if k == "A" else Crash(s) for k, s in moves]
    return run(machines, Scripted(directives), memory)
