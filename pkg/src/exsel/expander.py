"""Lossless bipartite expanders: random construction, certification, unique neighbors.

A graph has inputs ``0..v_size-1`` and outputs ``0..w_size-1``; every input
has exactly ``delta`` distinct neighbors.  Neighbor lists are drawn from a
seeded generator per input, so a graph over a huge input set costs memory only
for the inputs actually touched.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

E4 = math.e**4
FULL_C_W = 12 * E4
FULL_C_DELTA = 4.0
DEFAULT_EPSILON = 0.25

DEFAULT_EXACT_CAP = 2_000_000


class ConstructionFailed(RuntimeError):
    def __init__(self, attempts: int, message: str = ""):
        super().__init__(message or f"no certified expander after {attempts} attempts")
        self.attempts = attempts


class SizeExceeded(ValueError):
    pass


def lg_plus(x: float) -> float:
    """Base-2 logarithm floored at 1, so degenerate ratios still give degree >= 1."""
    return max(1.0, math.log2(x)) if x > 0 else 1.0


@dataclass(frozen=True)
class ExpanderParams:
    v_size: int
    L: int
    delta: int
    w_size: int
    epsilon: float = DEFAULT_EPSILON
    c_w: float | None = None
    c_delta: float | None = None

    def __post_init__(self):
        if not 1 <= self.L <= self.v_size:
            raise ValueError(f"need 1 <= L <= v_size, got L={self.L}, v_size={self.v_size}")
        if not 1 <= self.delta <= self.w_size:
            raise ValueError(f"need 1 <= delta <= w_size, got {self.delta}, {self.w_size}")

    @classmethod
    def derive(
        cls,
        v_size: int,
        L: int,
        c_w: float = FULL_C_W,
        c_delta: float = FULL_C_DELTA,
        epsilon: float = DEFAULT_EPSILON,
    ) -> "ExpanderParams":
        """Size a graph from the constants: |W| = c_w L lg(V/L), degree = c_delta lg(V/L)."""
        L = min(L, v_size)
        lg = lg_plus(v_size / L)
        w = math.ceil(c_w * L * lg)
        d = min(math.ceil(c_delta * lg), w)
        return cls(v_size, L, d, w, epsilon, c_w, c_delta)


class BipartiteGraph:
    """Neighbor lists generated on demand from ``seed``, with explicit overrides."""

    def __init__(
        self,
        v_size: int,
        w_size: int,
        delta: int,
        L: int = 1,
        seed: int | Sequence[int] | None = None,
        lists: dict[int, Sequence[int]] | None = None,
    ):
        if delta > w_size:
            raise ValueError("delta cannot exceed w_size with distinct neighbors")
        self.v_size = v_size
        self.w_size = w_size
        self.delta = delta
        self.L = L
        self.seed = tuple(seed) if isinstance(seed, (list, tuple)) else seed
        self._lists: dict[int, tuple[int, ...]] = {}
        self._overrides: set[int] = set()
        self.attempts = 1
        if lists is not None:
            for v, nb in lists.items():
                self.set_neighbors(v, nb)
        elif seed is None:
            raise ValueError("need either a seed or explicit neighbor lists")

    def _entropy(self, v: int) -> list[int]:
        base = list(self.seed) if isinstance(self.seed, tuple) else [self.seed]
        return base + [v]

    def neighbors(self, v: int) -> tuple[int, ...]:
        nb = self._lists.get(v)
        if nb is None:
            if not 0 <= v < self.v_size:
                raise IndexError(f"input {v} outside 0..{self.v_size - 1}")
            if self.seed is None:
                raise KeyError(f"no neighbor list for input {v}")
            rng = np.random.default_rng(self._entropy(v))
            nb = tuple(int(w) for w in rng.choice(self.w_size, self.delta, replace=False))
            self._lists[v] = nb
        return nb

    def set_neighbors(self, v: int, nb: Sequence[int]) -> None:
        nb = tuple(int(w) for w in nb)
        if len(nb) != self.delta or len(set(nb)) != self.delta:
            raise ValueError(f"input {v} needs {self.delta} distinct neighbors")
        if any(not 0 <= w < self.w_size for w in nb):
            raise ValueError(f"input {v} has a neighbor outside 0..{self.w_size - 1}")
        self._lists[v] = nb
        self._overrides.add(v)

    def resample(self, v: int, rng: np.random.Generator) -> None:
        self.set_neighbors(v, rng.choice(self.w_size, self.delta, replace=False))

    def array(self, inputs: Iterable[int] | None = None) -> np.ndarray:
        ids = range(self.v_size) if inputs is None else inputs
        return np.array([self.neighbors(v) for v in ids], dtype=np.int64).reshape(-1, self.delta)

    def materialize(self) -> dict[int, tuple[int, ...]]:
        return {v: self.neighbors(v) for v in range(self.v_size)}

    def __eq__(self, other):
        if not isinstance(other, BipartiteGraph):
            return NotImplemented
        return (
            (self.v_size, self.w_size, self.delta, self.L)
            == (other.v_size, other.w_size, other.delta, other.L)
            and self.materialize() == other.materialize()
        )

    def __repr__(self):
        return (
            f"BipartiteGraph(v_size={self.v_size}, w_size={self.w_size}, "
            f"delta={self.delta}, L={self.L})"
        )

    # text format: header line then one neighbor list per input
    def to_text(self) -> str:
        lines = [f"EXP {self.v_size} {self.w_size} {self.delta} {self.L}"]
        lines += [" ".join(map(str, self.neighbors(v))) for v in range(self.v_size)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BipartiteGraph":
        rows = [r for r in text.splitlines() if r.strip()]
        head = rows[0].split() if rows else []
        if len(head) != 5 or head[0] != "EXP":
            raise ValueError("graph file must start with 'EXP v_size w_size delta L'")
        v, w, d, L = map(int, head[1:])
        if len(rows) - 1 != v:
            raise ValueError(f"expected {v} neighbor lines, found {len(rows) - 1}")
        lists = {i: [int(x) for x in row.split()] for i, row in enumerate(rows[1:])}
        return cls(v, w, d, L, lists=lists)


def sample_graph(params: ExpanderParams, seed: int | Sequence[int]) -> BipartiteGraph:
    return BipartiteGraph(params.v_size, params.w_size, params.delta, params.L, seed=seed)


# -- certification -------------------------------------------------------------


@dataclass
class Verdict:
    passed: bool
    mode: str
    checked: int
    witness: tuple[int, ...] | None = None
    statistical: bool = False
    violations: list[tuple[int, ...]] = field(default_factory=list, repr=False)

    def __bool__(self) -> bool:
        return self.passed


def _needed(size: int, delta: int, epsilon: float) -> Fraction:
    return (1 - Fraction(epsilon).limit_denominator(10**6)) * size * delta


def neighborhood_sizes(g: BipartiteGraph, subsets: np.ndarray) -> np.ndarray:
    """|N(X)| for each row X of ``subsets`` (an int array of input ids)."""
    if len(subsets) == 0:
        return np.zeros(0, dtype=np.int64)
    ids = np.unique(subsets)
    table = g.array(ids.tolist())
    rows = np.searchsorted(ids, subsets)
    out = np.empty(len(subsets), dtype=np.int64)
    chunk = max(1, 4_000_000 // max(1, subsets.shape[1] * g.delta))
    for lo in range(0, len(subsets), chunk):
        block = table[rows[lo : lo + chunk]].reshape(min(chunk, len(subsets) - lo), -1)
        block.sort(axis=1)
        out[lo : lo + chunk] = 1 + np.count_nonzero(np.diff(block, axis=1), axis=1)
    return out


def exact_subset_count(v: int, L: int) -> int:
    return sum(math.comb(v, x) for x in range(1, L + 1))


def _combinations(pool: Sequence[int], size: int) -> np.ndarray:
    flat = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(pool, size)), dtype=np.int64
    )
    return flat.reshape(-1, size)


def expansion_table(
    g: BipartiteGraph, L: int, inputs: Sequence[int] | None = None
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per size x = 1..L: every x-subset (lexicographic order) and its neighborhood size."""
    pool = list(range(g.v_size)) if inputs is None else sorted(set(inputs))
    return [
        (subs, neighborhood_sizes(g, subs))
        for subs in (_combinations(pool, x) for x in range(1, min(L, len(pool)) + 1))
    ]


def verify_expansion(
    g: BipartiteGraph,
    L: int,
    epsilon: float = DEFAULT_EPSILON,
    mode: str = "exact",
    trials: int = 1000,
    seed: int = 0,
    inputs: Sequence[int] | None = None,
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> Verdict:
    """Check that every X with |X| <= L has more than (1 - epsilon)|X|delta neighbors.

    ``mode="exact"`` enumerates all subsets (of ``inputs`` when given, else of
    every input) and refuses with :class:`SizeExceeded` beyond ``exact_cap``.
    ``mode="sampled"`` tests ``trials`` uniformly drawn subsets and is only a
    statistical certificate.
    """
    pool_size = g.v_size if inputs is None else len(set(inputs))
    if mode == "exact":
        total = exact_subset_count(pool_size, min(L, pool_size))
        if total > exact_cap:
            raise SizeExceeded(f"{total} subsets exceed the exact-mode cap {exact_cap}")
        pool = list(range(g.v_size)) if inputs is None else sorted(set(inputs))
        bad: list[tuple[int, ...]] = []
        # lists are duplicate-free, so a single input always has delta neighbors
        if g.delta <= _needed(1, g.delta, epsilon):
            bad.extend((v,) for v in pool)
        for x in range(2, min(L, len(pool)) + 1):
            subs = _combinations(pool, x)
            sizes = neighborhood_sizes(g, subs)
            need = _needed(x, g.delta, epsilon)
            # |N| > need  <=>  |N| * den > need * den, all integers
            fails = np.flatnonzero(sizes * need.denominator <= need.numerator)
            bad.extend(tuple(int(v) for v in subs[i]) for i in fails)
        return Verdict(not bad, "exact", total, bad[0] if bad else None, False, bad)
    if mode == "sampled":
        rng = np.random.default_rng(seed)
        pool = None if inputs is None else sorted(set(inputs))
        cap = min(L, pool_size)
        bad = []
        for _ in range(trials):
            x = int(rng.integers(1, cap + 1))
            picked: set[int] = set()
            while len(picked) < x:
                i = int(rng.integers(pool_size))
                picked.add(i if pool is None else pool[i])
            X = tuple(sorted(picked))
            size = int(neighborhood_sizes(g, np.array([X]))[0])
            if size <= _needed(x, g.delta, epsilon):
                bad.append(X)
        return Verdict(not bad, "sampled", trials, bad[0] if bad else None, True, bad)
    raise ValueError(f"unknown verification mode {mode!r}")


def build_lossless_expander(
    params: ExpanderParams,
    seed: int | Sequence[int] = 0,
    max_attempts: int = 20,
    verify_mode: str = "exact",
    trials: int = 1000,
    inputs: Sequence[int] | None = None,
    repairs: int = 2000,
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> BipartiteGraph:
    """Sample a graph and resample offending inputs until it verifies.

    Each attempt draws a fresh graph; within an attempt, an input taken from
    a random violating subset gets a fresh neighbor list, up to ``repairs``
    times (resampling in the style of Moser and Tardos).  ``inputs`` restricts
    certification to subsets of those inputs.
    """
    base = list(seed) if isinstance(seed, (list, tuple)) else [seed]
    for attempt in range(max_attempts):
        g = sample_graph(params, base + [attempt])
        rng = np.random.default_rng(base + [attempt, 1 << 30])
        for _ in range(repairs + 1):
            verdict = verify_expansion(
                g, params.L, params.epsilon, verify_mode, trials,
                seed=int(rng.integers(1 << 31)), inputs=inputs, exact_cap=exact_cap,
            )
            if verdict.passed:
                g.attempts = attempt + 1
                return g
            X = verdict.violations[int(rng.integers(len(verdict.violations)))]
            g.resample(X[int(rng.integers(len(X)))], rng)
    raise ConstructionFailed(max_attempts)


# -- unique neighbors ------------------------------------------------------------


def unique_neighbors(g: BipartiteGraph, X: Iterable[int]) -> dict[int, list[int]]:
    """For each input of X, its neighbors adjacent to no other member of X (list order)."""
    X = list(dict.fromkeys(X))
    counts: dict[int, int] = {}
    for v in X:
        for w in g.neighbors(v):
            counts[w] = counts.get(w, 0) + 1
    return {v: [w for w in g.neighbors(v) if counts[w] == 1] for v in X}


def unique_neighbor_matching(g: BipartiteGraph, X: Iterable[int]) -> dict[int, int]:
    """Match each input of X that has a unique neighbor to its first one.

    Unique neighbors belong to a single input, so the result is a matching.
    """
    return {v: ws[0] for v, ws in unique_neighbors(g, X).items() if ws}
