"""Renaming algorithms as step machines over :mod:`exsel.simcore`.

Every algorithm is compiled into a *plan*: a static register layout and name
ranges allocated on a memory template, plus (for expander-based algorithms)
the certified graphs.  ``plan.machine(ident, name)`` is a generator that a
process runs with its unique identifier and its current input name; it
returns the new name or ``None`` when the process ended without one (only
possible when more processes participate than the plan was built for, or a
grid overflow).

Plans nest: a polylog plan is a sequence of basic plans, an adaptive plan a
sequence of efficient plans, and so on.  :func:`prepare` builds the plan for
a full run and returns a :class:`RenamingSetup` that can be executed under
any number of schedules.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from . import simcore as sc
from .expander import (
    FULL_C_DELTA,
    FULL_C_W,
    DEFAULT_EPSILON,
    BipartiteGraph,
    ExpanderParams,
    build_lossless_expander,
    exact_subset_count,
    lg_plus,
)
from .simcore import Decide, Null, ProcessId, Read, Scan, Update, Write

ALGORITHMS = (
    "compete", "majority", "basic", "polylog", "ma", "snapshot",
    "efficient", "almost-adaptive", "adaptive",
)

WITHDRAWN = "withdrawn"


def ceil_lg(x: int) -> int:
    """Smallest i with 2**i >= x (0 for x <= 1)."""
    return max(0, (int(x) - 1).bit_length())


@dataclass(frozen=True)
class NameRange:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty name range [{self.lo}, {self.hi}]")

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, name: object) -> bool:
        return isinstance(name, int) and self.lo <= name <= self.hi

    def overlaps(self, other: "NameRange") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi


@dataclass(frozen=True)
class Profile:
    """Expander constants: |W| = c_w L lg(V/L), degree c_delta lg(V/L)."""

    name: str
    c_w: float
    c_delta: float
    epsilon: float = DEFAULT_EPSILON

    def threshold(self, k: int) -> float:
        """Range at which polylog renaming stops shrinking (768e^4 k under the full profile)."""
        return 64 * self.c_w * k


FULL = Profile("paper", FULL_C_W, FULL_C_DELTA)
SCALED = Profile("scaled", 8.0, 2.0)
PROFILES = {"paper": FULL, "scaled": SCALED}


def get_profile(profile: str | Profile) -> Profile:
    if isinstance(profile, Profile):
        return profile
    try:
        return PROFILES[profile]
    except KeyError:
        raise sc.ConfigurationError(f"unknown profile {profile!r}") from None


# -- graphs ------------------------------------------------------------------------


@dataclass
class GraphRecord:
    tag: tuple
    v_size: int
    L: int
    delta: int
    w_size: int
    mode: str
    attempts: int


def _seed_word(part: Any) -> int:
    return part if isinstance(part, int) else zlib.crc32(str(part).encode())


class GraphProvider:
    """Builds certified expanders on demand, each from a seed derived from its tag.

    A graph is certified exactly over all inputs when that is at most
    ``exact_cap`` subsets.  Otherwise, if the inputs that can occur are known,
    it is certified exactly on those; failing both, it gets a sampled
    (statistical) certificate.
    """

    def __init__(
        self,
        profile: str | Profile = SCALED,
        seed: int = 0,
        exact_cap: int = 200_000,
        trials: int = 2000,
    ):
        self.profile = get_profile(profile)
        self.seed = seed
        self.exact_cap = exact_cap
        self.trials = trials
        self.records: list[GraphRecord] = []

    def params(self, v_size: int, L: int) -> ExpanderParams:
        p = self.profile
        return ExpanderParams.derive(v_size, L, p.c_w, p.c_delta, p.epsilon)

    def graph(self, tag: Sequence[int], v_size: int, L: int, inputs: Iterable[int] | None = None) -> BipartiteGraph:
        params = self.params(v_size, L)
        known = None if inputs is None else sorted(set(inputs))
        if exact_subset_count(v_size, params.L) <= self.exact_cap:
            mode, restrict = "exact", None
        elif known is not None and exact_subset_count(len(known), min(params.L, len(known))) <= self.exact_cap:
            mode, restrict = "exact-participants", known
        else:
            mode, restrict = "sampled", None
        g = build_lossless_expander(
            params,
            seed=[self.seed, *(_seed_word(t) for t in tag)],
            verify_mode="sampled" if mode == "sampled" else "exact",
            trials=self.trials,
            inputs=restrict,
            exact_cap=self.exact_cap,
        )
        self.records.append(
            GraphRecord(tuple(tag), v_size, params.L, params.delta, params.w_size, mode, g.attempts)
        )
        return g


# -- the competition for one register ---------------------------------------------------


def compete_for_register(p: Any, R: int, H: int):
    """Try to win register ``R`` using its placeholder ``H``; returns "win" or "exit".

    Takes at most five steps.
    """
    if (yield Read(H)) is not Null:
        return "exit"
    yield Write(H, p)
    if (yield Read(R)) is not Null:
        return "exit"
    yield Write(R, p)
    if (yield Read(H)) == p:
        return "win"
    return "exit"


def compete_machine(p: Any, R: int, H: int):
    outcome = yield from compete_for_register(p, R, H)
    yield Decide(p, "win" if outcome == "win" else "exit")
    return outcome


# -- plans ----------------------------------------------------------------------------


class Plan:
    """Static layout of one renaming instance."""

    registers: int = 0
    names: NameRange
    step_bound: int | None = None

    def machine(self, ident: Any, name: int):
        raise NotImplementedError

    def parts(self) -> list["Plan"]:
        return []

    def walk(self) -> Iterable["Plan"]:
        yield self
        for part in self.parts():
            yield from part.walk()


class MajorityPlan(Plan):
    """One (R_w, H_w) pair per output of the graph; inputs are names 1..v_size."""

    def __init__(self, memory: sc.SharedMemory, graph: BipartiteGraph, offset: int = 0, label: str = "majority"):
        self.graph = graph
        self.base = memory.allocate(2 * graph.w_size, label)
        self.registers = 2 * graph.w_size
        self.names = NameRange(offset + 1, offset + graph.w_size)
        self.step_bound = 5 * graph.delta

    def pair(self, w: int) -> tuple[int, int]:
        return self.base + 2 * w, self.base + 2 * w + 1

    def machine(self, ident, name):
        for w in self.graph.neighbors(name - 1):
            R, H = self.pair(w)
            if (yield from compete_for_register(ident, R, H)) == "win":
                return self.names.lo + w
        return None


def stage_sizes(k: int) -> list[int]:
    """Contention bound of each basic stage: ceil(k / 2^i) for i = 0..ceil(lg k)."""
    return [-(-k // 2**i) for i in range(ceil_lg(k) + 1)]


class BasicPlan(Plan):
    def __init__(
        self,
        memory: sc.SharedMemory,
        provider: GraphProvider,
        k: int,
        N: int,
        offset: int = 0,
        tag: tuple = (),
        inputs: Iterable[int] | None = None,
    ):
        self.k, self.N = k, N
        inputs = None if inputs is None else [v - 1 for v in inputs]
        self.stages: list[MajorityPlan] = []
        at = offset
        for i, ell in enumerate(stage_sizes(k)):
            g = provider.graph((*tag, i), N, ell, inputs)
            stage = MajorityPlan(memory, g, at, f"basic{tag}/stage{i}")
            self.stages.append(stage)
            at = stage.names.hi
        self.names = NameRange(offset + 1, at)
        self.registers = sum(s.registers for s in self.stages)
        self.step_bound = sum(s.step_bound for s in self.stages)

    def parts(self):
        return list(self.stages)

    def machine(self, ident, name):
        for stage in self.stages:
            new = yield from stage.machine(ident, name)
            if new is not None:
                return new
        return None


def basic_bound(profile: Profile, k: int, N: int) -> int:
    """Exact name range of a basic plan: the sum of its stages' output counts."""
    total = 0
    for ell in stage_sizes(k):
        ell = min(ell, N)
        total += math.ceil(profile.c_w * ell * lg_plus(N / ell))
    return total


def epoch_plan(profile: Profile, k: int, N: int) -> list[int]:
    """Input ranges N_1, N_2, ... of the epochs, followed by the final range.

    Epochs run while the current range exceeds the threshold and an epoch
    still shrinks it; the returned list always ends with the final range.
    """
    ranges = [N]
    limit = profile.threshold(k)
    while ranges[-1] > limit:
        nxt = basic_bound(profile, k, ranges[-1])
        if nxt >= ranges[-1]:
            break
        ranges.append(nxt)
    return ranges


class PolylogPlan(Plan):
    """Basic renaming repeated on shrinking ranges; zero epochs when N is already small."""

    def __init__(
        self,
        memory: sc.SharedMemory,
        provider: GraphProvider,
        k: int,
        N: int,
        offset: int = 0,
        tag: tuple = (),
        inputs: Iterable[int] | None = None,
    ):
        self.k, self.N = k, N
        self.ranges = epoch_plan(provider.profile, k, N)
        self.epochs: list[BasicPlan] = []
        for j, Nj in enumerate(self.ranges[:-1], 1):
            epoch = BasicPlan(memory, provider, k, Nj, 0, (*tag, j), inputs if j == 1 else None)
            assert epoch.names.size == self.ranges[j]
            self.epochs.append(epoch)
        self.offset = offset
        self.names = NameRange(offset + 1, offset + self.ranges[-1])
        self.registers = sum(e.registers for e in self.epochs)
        self.step_bound = sum(e.step_bound for e in self.epochs)

    def parts(self):
        return list(self.epochs)

    def machine(self, ident, name):
        for epoch in self.epochs:
            name = yield from epoch.machine(ident, name)
            if name is None:
                return None
        return self.offset + name


class GridPlan(Plan):
    """Triangular grid of splitters; cell (r, c) with r + c <= k - 1."""

    def __init__(self, memory: sc.SharedMemory, k: int, offset: int = 0, label: str = "grid"):
        self.k = k
        cells = k * (k + 1) // 2
        self.base = memory.allocate(2 * cells, label)
        self.registers = 2 * cells
        self.offset = offset
        self.names = NameRange(offset + 1, offset + cells)
        self.step_bound = 4 * k

    @staticmethod
    def cell_index(r: int, c: int) -> int:
        d = r + c
        return d * (d + 1) // 2 + r

    def cell(self, r: int, c: int) -> tuple[int, int]:
        i = self.base + 2 * self.cell_index(r, c)
        return i, i + 1

    def machine(self, ident, name=None):
        r = c = 0
        while r + c < self.k:
            X, Y = self.cell(r, c)
            yield Write(X, ident)
            if (yield Read(Y)) is not Null:
                c += 1
                continue
            yield Write(Y, True)
            if (yield Read(X)) == ident:
                return self.offset + self.cell_index(r, c) + 1
            r += 1
        return None  # left the grid


class FinisherPlan(Plan):
    """Snapshot-based renaming into 2k - 1 names.

    Each round a process publishes (input name, proposal) and scans.  A
    proposal nobody else holds is decided; otherwise the process proposes
    the r-th free name, r being its rank among the input names it saw.  If
    the range runs out (more than k participants), it withdraws.
    """

    def __init__(self, memory: sc.SharedMemory, k: int, offset: int = 0, size: int | None = None):
        self.k = k
        self.obj = memory.add_snapshot()
        self.registers = memory.n
        self.names = NameRange(offset + 1, offset + (size if size is not None else 2 * k - 1))

    def machine(self, ident, name):
        proposal = None
        while True:
            yield Update((name, proposal), self.obj)
            view = yield Scan(self.obj)
            others = [s for s in view if s is not Null and s[0] != name and s[1] != WITHDRAWN]
            taken = {s[1] for s in others if s[1] is not None}
            if proposal is not None and proposal not in taken:
                return proposal
            rank = sorted([name] + [s[0] for s in others]).index(name) + 1
            free = [x for x in range(self.names.lo, self.names.hi + 1) if x not in taken]
            if rank > len(free):
                yield Update((name, WITHDRAWN), self.obj)
                return None
            proposal = free[rank - 1]


def counted(gen, counts: dict, key: str):
    """Forward ``gen`` while counting its shared-memory operations under ``key``."""
    try:
        op = next(gen)
    except StopIteration as stop:
        return stop.value
    while True:
        if isinstance(op, sc.MEMORY_OPS):
            counts[key] = counts.get(key, 0) + 1
        result = yield op
        try:
            op = gen.send(result)
        except StopIteration as stop:
            return stop.value


class EfficientPlan(Plan):
    """Splitter grid, then polylog renaming on k^2, then the 2k - 1 finisher."""

    def __init__(self, memory: sc.SharedMemory, provider: GraphProvider, k: int, offset: int = 0, tag: tuple = ()):
        self.k = k
        self.grid = GridPlan(memory, k, 0, f"efficient{tag}/grid")
        self.polylog = PolylogPlan(memory, provider, k, k * k, 0, (*tag, "polylog"))
        self.finisher = FinisherPlan(memory, k, offset)
        self.names = self.finisher.names
        self.registers = self.grid.registers + self.polylog.registers + self.finisher.registers

    def parts(self):
        return [self.grid, self.polylog, self.finisher]

    def machine(self, ident, name=None, phases: dict | None = None):
        phases = {} if phases is None else phases
        name = yield from counted(self.grid.machine(ident), phases, "grid")
        if name is None:
            return None
        name = yield from counted(self.polylog.machine(ident, name), phases, "polylog")
        if name is None:
            return None
        return (yield from counted(self.finisher.machine(ident, name), phases, "finisher"))


class AdaptivePlan(Plan):
    """Efficient renaming for 2^i, i = 0..ceil(lg n), on names intervals of size 2^(i+1) - 1."""

    def __init__(self, memory: sc.SharedMemory, provider: GraphProvider, n: int):
        self.rounds: list[EfficientPlan] = []
        at = 0
        for i in range(ceil_lg(n) + 1):
            plan = EfficientPlan(memory, provider, 2**i, at, ("adaptive", i))
            assert plan.names.size == 2 ** (i + 1) - 1
            self.rounds.append(plan)
            at = plan.names.hi
        self.names = NameRange(1, at)
        self.registers = sum(r.registers for r in self.rounds)

    def parts(self):
        return list(self.rounds)

    def machine(self, ident, name=None, phases: dict | None = None):
        for plan in self.rounds:
            new = yield from plan.machine(ident, None, phases)
            if new is not None:
                return new
        return None


class AlmostAdaptivePlan(Plan):
    """Polylog renaming for 2^j, j = 0..ceil(lg n), on consecutive name intervals."""

    def __init__(self, memory: sc.SharedMemory, provider: GraphProvider, n: int, N: int, inputs=None):
        self.instances: list[PolylogPlan] = []
        at = 0
        for j in range(ceil_lg(n) + 1):
            plan = PolylogPlan(memory, provider, min(2**j, N), N, at, ("almost", j), inputs)
            self.instances.append(plan)
            at = plan.names.hi
        self.names = NameRange(1, at)
        self.registers = sum(p.registers for p in self.instances)

    def parts(self):
        return list(self.instances)

    def machine(self, ident, name):
        for plan in self.instances:
            new = yield from plan.machine(ident, name)
            if new is not None:
                return new
        return None


def adaptive_bound(k: int) -> int:
    """Largest name adaptive renaming can hand out at contention k."""
    i = ceil_lg(k)
    return 2 ** (i + 2) - (i + 1)


# -- running ------------------------------------------------------------------------------


@dataclass
class RenamingOutcome:
    algo: str
    assignments: dict[ProcessId, int]
    steps: dict[int, int]
    registers_used: int
    range_bound: int
    unnamed: list[ProcessId] = field(default_factory=list)
    phase_steps: dict[int, dict[str, int]] = field(default_factory=dict)
    trace: sc.ExecutionTrace | None = field(default=None, repr=False)

    @property
    def max_name(self) -> int:
        return max(self.assignments.values(), default=0)

    @property
    def max_steps(self) -> int:
        return max(self.steps.values(), default=0)

    def to_dict(self) -> dict:
        return {
            "algo": self.algo,
            "assignments": {str(p.original_name): v for p, v in sorted(
                self.assignments.items(), key=lambda kv: kv[0].slot)},
            "steps": {str(s): v for s, v in sorted(self.steps.items())},
            "registers_used": self.registers_used,
            "range_bound": self.range_bound,
            "max_name": self.max_name,
            "unnamed": [p.original_name for p in self.unnamed],
            "phase_steps": {str(s): dict(sorted(v.items())) for s, v in sorted(self.phase_steps.items())},
        }


@dataclass
class RenamingSetup:
    """A built plan plus the memory template it was laid out on."""

    algo: str
    pids: list[ProcessId]
    plan: Plan | None
    memory: sc.SharedMemory
    range_bound: int
    registers_used: int
    provider: GraphProvider | None = None
    compete_pair: tuple[int, int] | None = None

    def machines(self, phases: dict[int, dict] | None = None) -> dict[int, sc.MachineFactory]:
        out = {}
        for pid in self.pids:
            box = None if phases is None else phases.setdefault(pid.slot, {})
            out[pid.slot] = self._factory(pid, box)
        return out

    def _factory(self, pid: ProcessId, box: dict | None):
        def make():
            return self._body(pid, box)
        return make

    def _body(self, pid: ProcessId, box: dict | None):
        if self.algo == "compete":
            return (yield from compete_machine(pid.original_name, *self.compete_pair))
        name = yield from run_plan(self.plan, pid.original_name, pid.original_name, box)
        yield Decide(name, "name")
        return name

    def run(self, schedule: sc.Schedule | None = None, max_directives: int | None = 10_000_000) -> RenamingOutcome:
        phases: dict[int, dict] = {}
        trace = sc.run(
            self.machines(phases), schedule or sc.RoundRobin(), self.memory.copy(), max_directives
        )
        return self.outcome(trace, phases)

    def outcome(self, trace: sc.ExecutionTrace, phases: dict | None = None) -> RenamingOutcome:
        by_slot = {p.slot: p for p in self.pids}
        assignments = {}
        if self.algo == "compete":
            for e in trace.decisions("win"):
                assignments[by_slot[e.slot]] = 1
        else:
            for e in trace.decisions("name"):
                if e.val is not None:
                    assignments[by_slot[e.slot]] = e.val
        unnamed = [
            p for p in self.pids
            if p.slot not in trace.crashed and p not in assignments and self.algo != "compete"
        ]
        return RenamingOutcome(
            self.algo, assignments, dict(trace.step_counts), self.registers_used,
            self.range_bound, unnamed, phases or {}, trace,
        )


def default_originals(n: int, N: int | None) -> list[int]:
    """Spread n distinct original names over [N] deterministically."""
    if N is None or N <= n:
        return list(range(1, n + 1))
    return [1 + (i * (N - 1)) // max(1, n - 1) if n > 1 else 1 for i in range(n)]


def prepare(
    algo: str,
    originals: Sequence[int],
    N: int | None = None,
    k: int | None = None,
    profile: str | Profile = "scaled",
    graph_seed: int = 0,
    exact_cap: int = 200_000,
) -> RenamingSetup:
    """Lay out ``algo`` for processes with the given original names (slots 1..n).

    ``k`` is the contention the plan is built for (defaults to n).  ``N``
    bounds original names where the algorithm uses it (defaults to the
    largest original name).
    """
    if algo not in ALGORITHMS:
        raise sc.ConfigurationError(f"unknown algorithm {algo!r}")
    originals = [int(x) for x in originals]
    n = len(originals)
    if n < 1 or len(set(originals)) != n or min(originals) < 1:
        raise sc.ConfigurationError("original names must be distinct positive integers")
    N = max(originals) if N is None else N
    if max(originals) > N:
        raise sc.ConfigurationError(f"original name {max(originals)} exceeds N={N}")
    k = n if k is None else k
    if k < 1:
        raise sc.ConfigurationError("k must be positive")
    pids = [ProcessId(o, s) for s, o in enumerate(originals, 1)]
    memory = sc.create_memory(0, n)
    provider = GraphProvider(profile, graph_seed, exact_cap)

    if algo == "compete":
        base = memory.allocate(2, "compete")
        return RenamingSetup(algo, pids, None, memory, 1, 2, provider, (base, base + 1))
    plan = build_plan(algo, memory, provider, originals, N, k)
    return RenamingSetup(algo, pids, plan, memory, plan.names.hi, plan.registers, provider)


def build_plan(
    algo: str,
    memory: sc.SharedMemory,
    provider: GraphProvider,
    originals: Sequence[int],
    N: int,
    k: int,
) -> Plan:
    """Lay out the plan of one renaming algorithm on ``memory``."""
    n = len(originals)
    if algo == "majority":
        g = provider.graph(("majority",), N, min(k, N), [o - 1 for o in originals])
        plan: Plan = MajorityPlan(memory, g)
    elif algo == "basic":
        plan = BasicPlan(memory, provider, k, N, tag=("basic",), inputs=originals)
    elif algo == "polylog":
        plan = PolylogPlan(memory, provider, k, N, tag=("polylog",), inputs=originals)
    elif algo == "ma":
        plan = GridPlan(memory, k)
    elif algo == "snapshot":
        plan = FinisherPlan(memory, k)
    elif algo == "efficient":
        plan = EfficientPlan(memory, provider, k, tag=("efficient",))
    elif algo == "almost-adaptive":
        plan = AlmostAdaptivePlan(memory, provider, n, N, originals)
    elif algo == "adaptive":
        plan = AdaptivePlan(memory, provider, n)
    else:
        raise sc.ConfigurationError(f"{algo!r} has no renaming plan")
    return plan


def run_plan(plan: Plan, ident: Any, name: int | None, phases: dict | None = None):
    """Run any plan's machine; returns the new name or None."""
    if isinstance(plan, (EfficientPlan, AdaptivePlan)):
        return (yield from plan.machine(ident, None, phases))
    return (yield from plan.machine(ident, name))


def _run(algo, originals, schedule, **kw) -> RenamingOutcome:
    return prepare(algo, originals, **kw).run(schedule)


def majority(originals, N=None, ell=None, schedule=None, **kw) -> RenamingOutcome:
    return _run("majority", originals, schedule, N=N, k=ell, **kw)


def basic_rename(originals, N=None, k=None, schedule=None, **kw) -> RenamingOutcome:
    return _run("basic", originals, schedule, N=N, k=k, **kw)


def polylog_rename(originals, N=None, k=None, schedule=None, **kw) -> RenamingOutcome:
    return _run("polylog", originals, schedule, N=N, k=k, **kw)


def ma_grid_rename(originals, k=None, schedule=None, **kw) -> RenamingOutcome:
    return _run("ma", originals, schedule, k=k, **kw)


def snapshot_rename(originals, k=None, schedule=None, **kw) -> RenamingOutcome:
    return _run("snapshot", originals, schedule, k=k, **kw)


def efficient_rename(originals, k=None, schedule=None, **kw) -> RenamingOutcome:
    return _run("efficient", originals, schedule, k=k, **kw)


def almost_adaptive(originals, N=None, schedule=None, **kw) -> RenamingOutcome:
    return _run("almost-adaptive", originals, schedule, N=N, **kw)


def adaptive_rename(originals, schedule=None, **kw) -> RenamingOutcome:
    return _run("adaptive", originals, schedule, **kw)


def declared_bound(algo: str, k: int, setup: RenamingSetup | None = None) -> int:
    """The hard bound on names checked for ``algo`` at contention k."""
    if algo == "ma":
        return k * (k + 1) // 2
    if algo in ("snapshot", "efficient"):
        return 2 * k - 1
    if algo == "adaptive":
        return adaptive_bound(k)
    if setup is None:
        raise ValueError(f"{algo} needs its setup to report a bound")
    return setup.range_bound


def check_disjoint(setup: RenamingSetup) -> list[str]:
    """Static audit: register allocations never overlap, nor do sibling name ranges."""
    problems = []
    spans = sorted((base, base + (count or 0), label) for label, base, count in setup.memory.allocations)
    for (a0, a1, la), (b0, b1, lb) in zip(spans, spans[1:]):
        if b0 < a1:
            problems.append(f"registers of {la} and {lb} overlap")
    if setup.plan is None:
        return problems
    for plan in setup.plan.walk():
        siblings = {
            AdaptivePlan: lambda p: p.rounds,
            AlmostAdaptivePlan: lambda p: p.instances,
            BasicPlan: lambda p: p.stages,
        }.get(type(plan))
        if siblings is None:
            continue
        ranges = [s.names for s in siblings(plan)]
        for i, a in enumerate(ranges):
            for b in ranges[i + 1:]:
                if a.overlaps(b):
                    problems.append(f"name ranges {a} and {b} overlap")
    return problems
