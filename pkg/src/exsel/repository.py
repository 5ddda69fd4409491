"""Unbounded selection: depositing into never-reused registers, and unbounded naming.

Dedicated registers R_1, R_2, ... live in the memory's unbounded region.
Processes claim indices through an atomic-snapshot object W: propose an
index from a private sorted list, scan, and treat an index that nobody else
holds as acquired.  Three algorithms share that core:

* selfish deposit: acquire an index i, re-read R_i, deposit if still empty;
* unbounded naming: acquire an index, then check every other process's
  public availability board B_q before committing to it;
* altruistic deposit: names committed through the naming layer are handed to
  other processes through an n x n ``Help`` matrix, which makes deposits
  wait-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from . import simcore as sc
from .simcore import Decide, Null, Read, Scan, Update, Write

ALGORITHMS = ("selfish", "altruistic", "naming")
RULES = ("fresh", "literal")


# -- requests --------------------------------------------------------------------------


class QueryCursor:
    """One process's view of its request script; flags pipelined queries."""

    def __init__(self, values: Sequence[Any]):
        self.values = list(values)
        self.pos = 0
        self.in_flight = False
        self.violations: list[int] = []

    def query(self) -> Any:
        if self.in_flight:
            self.violations.append(self.pos)
            return None
        if self.pos >= len(self.values):
            return None
        value = self.values[self.pos]
        self.pos += 1
        self.in_flight = True
        return value

    def ack(self) -> None:
        self.in_flight = False


class RequestScript:
    """Values each process will be asked to deposit, in order."""

    def __init__(self, values: Mapping[int, Sequence[Any]]):
        self.values = {int(s): list(v) for s, v in values.items()}
        self._cursors: dict[int, QueryCursor] = {}

    def cursor(self, slot: int) -> QueryCursor:
        return QueryCursor(self.values.get(slot, []))

    def query(self, slot: int) -> Any:
        return self._cursors.setdefault(slot, self.cursor(slot)).query()

    def ack(self, slot: int) -> None:
        self._cursors.setdefault(slot, self.cursor(slot)).ack()

    def violations(self, slot: int) -> list[int]:
        cur = self._cursors.get(slot)
        return [] if cur is None else list(cur.violations)

    @property
    def total(self) -> int:
        return sum(len(v) for v in self.values.values())

    @classmethod
    def uniform(cls, n: int, per_process: int) -> "RequestScript":
        return cls({s: [s * 1_000_000 + i for i in range(per_process)] for s in range(1, n + 1)})

    @classmethod
    def parse(cls, text: str) -> "RequestScript":
        """Lines ``<slot> <value> [<value> ...]``; ``#`` comments; repeated slots append."""
        values: dict[int, list] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if not parts[0].isdigit():
                raise sc.ConfigurationError(f"line {lineno}: expected '<slot> <value> ...'")
            values.setdefault(int(parts[0]), []).extend(_value(t) for t in parts[1:])
        return cls(values)


def _value(token: str) -> Any:
    try:
        return int(token)
    except ValueError:
        return token


# -- local state and the shared layout ----------------------------------------------------------


@dataclass
class LocalNamingState:
    """A process's candidate list L (kept as board slots) and pointer A."""

    n: int
    slots: list[int] = field(default_factory=list)
    pointer: int = 0
    view: tuple | None = None

    def __post_init__(self):
        if not self.slots:
            self.slots = list(range(1, 2 * self.n))
        if not self.pointer:
            self.pointer = 2 * self.n

    @property
    def entries(self) -> list[int]:
        return sorted(self.slots)


@dataclass
class Layout:
    """Where everything lives: W, the boards, Help, and the dedicated region."""

    n: int
    obj: int
    boards: int | None
    help: int | None
    dedicated: int

    def R(self, i: int) -> int:
        return self.dedicated + i - 1

    def board(self, q: int, s: int) -> int:
        return self.boards + (q - 1) * 2 * self.n + s

    def help_cell(self, i: int, j: int) -> int:
        return self.help + (i - 1) * self.n + (j - 1)


def make_layout(memory: sc.SharedMemory, algo: str) -> Layout:
    n = memory.n
    obj = memory.add_snapshot()
    boards = memory.allocate(2 * n * n, "boards") if algo in ("naming", "altruistic") else None
    helps = memory.allocate(n * n, "help") if algo == "altruistic" else None
    dedicated = memory.allocate_unbounded("dedicated")
    return Layout(n, obj, boards, helps, dedicated)


# -- choosing ------------------------------------------------------------------------------


def is_unique(view: Sequence[Any], slot: int, value: Any) -> bool:
    return all(w != value for q, w in enumerate(view, 1) if q != slot)


def rank_in_view(slot: int, view: Sequence[Any], entries: Iterable[int]) -> int:
    """Rank of ``slot`` among the slots whose W holds an entry of the list."""
    listed = set(entries)
    holders = {q for q, w in enumerate(view, 1) if w in listed} | {slot}
    return sorted(holders).index(slot) + 1


def choose_by_rank(slot: int, view: Sequence[Any], entries: Sequence[int]) -> int:
    """The r-th smallest list entry absent from the view, r being the slot's rank."""
    entries = sorted(entries)
    r = rank_in_view(slot, view, entries)
    seen = set(view)
    free = [x for x in entries if x not in seen]
    if r > len(free):
        raise ValueError(f"list of {len(entries)} entries too short for rank {r}")
    return free[r - 1]


def first_choice(st: LocalNamingState, slot: int, rule: str) -> int:
    """Proposal that opens an acquisition.

    ``literal`` always takes the smallest entry.  ``fresh`` skips entries that
    other processes held in the last snapshot, so a survivor does not keep
    colliding with indices pinned by crashed processes.
    """
    entries = st.entries
    if rule == "literal" or st.view is None:
        return entries[0]
    held = {w for q, w in enumerate(st.view, 1) if q != slot}
    return next((x for x in entries if x not in held), entries[0])


# -- selfish deposit -------------------------------------------------------------------------------


def verify_list(lay: Layout, st: LocalNamingState):
    """Replace every listed index whose register is occupied by the next empty one from A."""
    for j in st.entries:
        if (yield Read(lay.R(j))) is Null:
            continue
        pos = st.slots.index(j)
        while True:
            k = st.pointer
            st.pointer += 1
            if (yield Read(lay.R(k))) is Null:
                st.slots[pos] = k
                break


def selfish_deposit(lay: Layout, st: LocalNamingState, slot: int, value: Any, rule: str = "fresh"):
    """Deposit ``value``; returns the index i of the register R_i used."""
    prop = first_choice(st, slot, rule)
    while True:
        yield Update(prop, lay.obj)
        view = yield Scan(lay.obj)
        st.view = view
        if is_unique(view, slot, prop):
            if (yield Read(lay.R(prop))) is Null:
                yield Write(lay.R(prop), value)
                yield Decide(prop, "ack")
                return prop
            yield from verify_list(lay, st)
            prop = first_choice(st, slot, rule)
        else:
            prop = choose_by_rank(slot, view, st.entries)


# -- unbounded naming --------------------------------------------------------------------------------


@dataclass(frozen=True)
class Board:
    """What a process read from another's board: listed entries and pointer."""

    entries: frozenset
    pointer: int

    def available(self, x: int) -> bool:
        return x in self.entries or x >= self.pointer


def read_board(lay: Layout, q: int):
    """Pointer first, then the slots.

    The owner writes slots before raising its pointer, so anything below
    the pointer read here that is missing from the slots read afterwards
    really has left the owner's list.
    """
    n = lay.n
    a = yield Read(lay.board(q, 2 * n - 1))
    entries = []
    for s in range(2 * n - 1):
        v = yield Read(lay.board(q, s))
        entries.append(s + 1 if v is Null else v)
    return Board(frozenset(entries), 2 * n if a is Null else a)


def commit_name(lay: Layout, st: LocalNamingState, slot: int, rule: str = "fresh"):
    """Acquire and commit a fresh integer; returns it.

    Once an index is unique in a snapshot, every other board is read; the
    index is committed only if all of them still list it as available.
    Entries any board marks unavailable were committed elsewhere, so they
    are dropped and replaced from the pointer.  The own board is updated
    before W_p can change again.
    """
    prop = first_choice(st, slot, rule)
    while True:
        yield Update(prop, lay.obj)
        view = yield Scan(lay.obj)
        st.view = view
        if not is_unique(view, slot, prop):
            prop = choose_by_rank(slot, view, st.entries)
            continue
        boards = []
        for q in range(1, lay.n + 1):
            if q != slot:
                boards.append((yield from read_board(lay, q)))

        def available(x: int) -> bool:
            return all(b.available(x) for b in boards)

        ok = available(prop)
        if ok:
            yield Decide(prop, "commit")
        dead = [x for x in st.slots if x == prop and ok or not available(x)]
        old_pointer = st.pointer
        for x in dead:
            pos = st.slots.index(x)
            while not available(st.pointer):
                st.pointer += 1
            st.slots[pos] = st.pointer
            st.pointer += 1
            yield Write(lay.board(slot, pos), st.slots[pos])
        if st.pointer != old_pointer:
            yield Write(lay.board(slot, 2 * lay.n - 1), st.pointer)
        if ok:
            return prop
        prop = first_choice(st, slot, rule)


# -- altruistic deposit --------------------------------------------------------------------------------


def help_producer(lay: Layout, st: LocalNamingState, slot: int, rule: str, stop):
    """Keep row Help[p, *] filled with committed names; ends once ``stop()`` holds
    and a full pass found the row full."""
    while True:
        full = True
        for q in range(1, lay.n + 1):
            cell = lay.help_cell(slot, q)
            if (yield Read(cell)) is Null:
                full = False
                name = yield from commit_name(lay, st, slot, rule)
                yield Write(cell, name)
        if full and stop():
            return


def help_consumer(lay: Layout, slot: int, cursor: QueryCursor, done: list):
    """Deposit each requested value at a name found in column Help[*, p]."""
    r = 1
    while True:
        value = cursor.query()
        yield Decide(value, "query")
        if value is None:
            done.append(True)
            return
        while True:
            cell = lay.help_cell(r, slot)
            x = yield Read(cell)
            if x is not Null:
                yield Write(lay.R(x), value)
                yield Decide(x, "ack")
                cursor.ack()
                yield Write(cell, Null)
                r = r % lay.n + 1
                break
            r = r % lay.n + 1


def alternate(first, second):
    """Interleave two machines one event at a time until both have finished."""
    gens = [first, second]
    pending: list[Any] = [None, None]
    live = [True, True]
    for i in range(2):
        try:
            pending[i] = next(gens[i])
        except StopIteration:
            live[i] = False
    turn = 0
    while any(live):
        if not live[turn]:
            turn = 1 - turn
        result = yield pending[turn]
        try:
            pending[turn] = gens[turn].send(result)
        except StopIteration:
            live[turn] = False
        turn = 1 - turn


# -- systems --------------------------------------------------------------------------------------


@dataclass
class RepositorySystem:
    algo: str
    n: int
    memory: sc.SharedMemory
    layout: Layout
    script: RequestScript
    rule: str = "fresh"

    def machines(self) -> dict[int, sc.MachineFactory]:
        return {s: self._factory(s) for s in range(1, self.n + 1)}

    def _factory(self, slot: int):
        def make():
            return self._body(slot)
        return make

    def _body(self, slot: int):
        lay = self.layout
        st = LocalNamingState(self.n)
        cursor = self.script.cursor(slot)
        if self.algo == "selfish":
            while True:
                value = cursor.query()
                yield Decide(value, "query")
                if value is None:
                    return st
                yield from selfish_deposit(lay, st, slot, value, self.rule)
                cursor.ack()
        if self.algo == "naming":
            # for naming the script only says how many names each process wants
            for _ in range(len(self.script.values.get(slot, []))):
                yield from commit_name(lay, st, slot, self.rule)
            return st
        done: list = []
        yield from alternate(
            help_producer(lay, st, slot, self.rule, lambda: bool(done)),
            help_consumer(lay, slot, cursor, done),
        )
        return st

    def run(self, schedule: sc.Schedule | None = None, max_directives: int | None = 10_000_000):
        return sc.run(self.machines(), schedule or sc.RoundRobin(), self.memory.copy(), max_directives)

    def check_params(self) -> dict:
        lay = self.layout
        return {
            "n": self.n,
            "dedicated": lay.dedicated,
            "help": lay.help,
        }


def build_repository(
    algo: str, n: int, script: RequestScript | None = None, rule: str = "fresh"
) -> RepositorySystem:
    if algo not in ALGORITHMS:
        raise sc.ConfigurationError(f"unknown repository algorithm {algo!r}")
    if rule not in RULES:
        raise sc.ConfigurationError(f"unknown proposal rule {rule!r}")
    if n < 1:
        raise sc.ConfigurationError("need at least one process")
    memory = sc.create_memory(0, n)
    layout = make_layout(memory, algo)
    script = script or RequestScript({})
    for s in script.values:
        if not 1 <= s <= n:
            raise sc.ConfigurationError(f"script names slot {s} outside 1..{n}")
    return RepositorySystem(algo, n, memory, layout, script, rule)


# -- measurements ----------------------------------------------------------------------------


def dedicated_contents(trace: sc.ExecutionTrace, base: int) -> dict[int, Any]:
    """Index -> last value written, for every dedicated register ever written."""
    out: dict[int, Any] = {}
    for e in trace.events:
        if e.kind == "write" and isinstance(e.reg, int) and e.reg >= base:
            out[e.reg - base + 1] = e.val
    return out


def frontier(trace: sc.ExecutionTrace, base: int) -> int:
    used = [i for i, v in dedicated_contents(trace, base).items() if v is not Null]
    return max(used, default=0)


def waste(trace: sc.ExecutionTrace, base: int) -> int:
    """Dedicated registers at or below the frontier that are still empty."""
    used = {i for i, v in dedicated_contents(trace, base).items() if v is not Null}
    top = max(used, default=0)
    return top - len(used)


def committed(trace: sc.ExecutionTrace) -> list[int]:
    return [e.val for e in trace.decisions("commit")]


def skipped(trace: sc.ExecutionTrace) -> int:
    """Positive integers up to the largest committed one that nobody committed."""
    names = set(committed(trace))
    return max(names, default=0) - len(names)


def acks(trace: sc.ExecutionTrace) -> list[int]:
    return [e.val for e in trace.decisions("ack")]


def quiescent(trace: sc.ExecutionTrace, slots: Iterable[int]) -> bool:
    """Every process has crashed or finished its script."""
    return all(s in trace.crashed or s in trace.terminated for s in slots)
