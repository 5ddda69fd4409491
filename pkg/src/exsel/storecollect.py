"""Store&Collect on top of renaming.

A process's first store acquires a new name from a renaming backend; the
name selects a register in a layout of consecutive intervals of lengths
2, 4, 8, ..., each preceded by a control register.  The storer raises the
control flag of every interval up to and including its own, then writes.
Later stores are a single write.  A collect reads intervals in order and
stops at the first control flag that is still down.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

from . import renaming as rn
from . import simcore as sc
from .simcore import Decide, Null, ProcessId, Read, Write

BACKENDS = {"polylog": "polylog", "almost_adaptive": "almost-adaptive", "adaptive": "adaptive"}


class CollectLayout:
    """Registers for names 1..max_name: interval i holds 2**(i+1) names."""

    def __init__(self, memory: sc.SharedMemory, max_name: int):
        self.controls: list[int] = []
        self.intervals: list[range] = []
        covered = 0
        i = 0
        while covered < max_name:
            length = 2 ** (i + 1)
            base = memory.allocate(1 + length, f"collect/interval{i}")
            self.controls.append(base)
            self.intervals.append(range(base + 1, base + 1 + length))
            covered += length
            i += 1
        self.max_name = covered
        self.registers = sum(1 + len(r) for r in self.intervals)

    @staticmethod
    def interval_of(name: int) -> int:
        # interval i covers names 2^(i+1) - 1 .. 2^(i+2) - 2
        return (name + 1).bit_length() - 2

    def register_of(self, name: int) -> int:
        i = self.interval_of(name)
        return self.intervals[i][name - (2 ** (i + 1) - 1)]

    def collect_cost(self, flags_up: int) -> int:
        """Reads made by a collect that finds exactly ``flags_up`` leading flags raised."""
        reads = sum(1 + len(self.intervals[i]) for i in range(flags_up))
        return reads + (1 if flags_up < len(self.intervals) else 0)


@dataclass
class StoreState:
    """Per-process memory of the register won by its first store."""

    register: int | None = None
    name: int | None = None


def store(layout: CollectLayout, plan: rn.Plan, pid: ProcessId, state: StoreState, value: Any):
    if state.register is None:
        name = yield from rn.run_plan(plan, pid.original_name, pid.original_name)
        if name is None:
            return False
        for i in range(layout.interval_of(name) + 1):
            if (yield Read(layout.controls[i])) != 1:
                yield Write(layout.controls[i], 1)
        state.name = name
        state.register = layout.register_of(name)
    yield Write(state.register, (pid.original_name, value))
    return True


def collect(layout: CollectLayout):
    seen: dict[int, Any] = {}
    for control, interval in zip(layout.controls, layout.intervals):
        if (yield Read(control)) != 1:
            break
        for reg in interval:
            cell = yield Read(reg)
            if cell is not Null:
                seen[cell[0]] = cell[1]
    return seen


def parse_ops(text: str) -> list[tuple]:
    """Parse ``S p v`` / ``C p`` requests, one per line or separated by ';'."""
    ops: list[tuple] = []
    for raw in text.replace(";", "\n").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "S" and len(parts) == 3:
            ops.append(("S", int(parts[1]), _value(parts[2])))
        elif parts[0] == "C" and len(parts) == 2:
            ops.append(("C", int(parts[1])))
        else:
            raise sc.ConfigurationError(f"bad request {line!r}; expected 'S p v' or 'C p'")
    return ops


def _value(token: str) -> Any:
    try:
        return int(token)
    except ValueError:
        return token


@dataclass
class StoreCollectSystem:
    backend: str
    pids: list[ProcessId]
    memory: sc.SharedMemory
    plan: rn.Plan
    layout: CollectLayout
    provider: rn.GraphProvider
    registers_used: int = field(init=False)

    def __post_init__(self):
        self.registers_used = self.plan.registers + self.layout.registers

    def machines(self, ops: Sequence[tuple]) -> dict[int, sc.MachineFactory]:
        """One machine per process running its requests in script order.

        Requests name processes by slot.
        """
        per: dict[int, list[tuple]] = {p.slot: [] for p in self.pids}
        for op in ops:
            if op[1] not in per:
                raise sc.ConfigurationError(f"request for unknown process {op[1]}")
            per[op[1]].append(op)
        by_slot = {p.slot: p for p in self.pids}
        return {s: self._factory(by_slot[s], reqs) for s, reqs in per.items()}

    def _factory(self, pid: ProcessId, reqs: list[tuple]):
        def make():
            return self._body(pid, reqs)
        return make

    def _body(self, pid: ProcessId, reqs: list[tuple]):
        state = StoreState()
        for op in reqs:
            if op[0] == "S":
                ok = yield from store(self.layout, self.plan, pid, state, op[2])
                yield Decide(op[2] if ok else None, "stored")
            else:
                seen = yield from collect(self.layout)
                yield Decide(tuple(sorted(seen.items())), "collect")
        return state.name

    def run(self, ops: Sequence[tuple], schedule: sc.Schedule | None = None) -> sc.ExecutionTrace:
        return sc.run(self.machines(ops), schedule or sc.RoundRobin(), self.memory.copy())


def build_system(
    backend: str,
    originals: Sequence[int],
    N: int | None = None,
    k: int | None = None,
    profile: str | rn.Profile = "scaled",
    graph_seed: int = 0,
) -> StoreCollectSystem:
    if backend not in BACKENDS:
        raise sc.ConfigurationError(f"unknown backend {backend!r}; pick one of {sorted(BACKENDS)}")
    originals = [int(o) for o in originals]
    if len(set(originals)) != len(originals) or not originals or min(originals) < 1:
        raise sc.ConfigurationError("original names must be distinct positive integers")
    n = len(originals)
    N = max(originals) if N is None else N
    memory = sc.create_memory(0, n)
    provider = rn.GraphProvider(profile, graph_seed)
    plan = rn.build_plan(BACKENDS[backend], memory, provider, originals, N, k or n)
    layout = CollectLayout(memory, plan.names.hi)
    pids = [ProcessId(o, s) for s, o in enumerate(originals, 1)]
    return StoreCollectSystem(backend, pids, memory, plan, layout, provider)


@dataclass
class OpRecord:
    slot: int
    kind: str  # "S" or "C"
    start: int  # seq of the operation's first event
    end: int  # seq of its closing decide
    steps: int
    value: Any


def operations(trace: sc.ExecutionTrace) -> list[OpRecord]:
    """Split each process's events into its store and collect operations."""
    out: list[OpRecord] = []
    open_ops: dict[int, list[sc.Event]] = {}
    for e in trace.events:
        if e.kind == "crash":
            continue
        cur = open_ops.setdefault(e.slot, [])
        cur.append(e)
        if e.kind == "decide" and e.reg in ("stored", "collect"):
            steps = sum(1 for x in cur if x.kind != "decide")
            out.append(OpRecord(
                e.slot, "S" if e.reg == "stored" else "C", cur[0].seq, e.seq, steps, e.val,
            ))
            open_ops[e.slot] = []
    return out
