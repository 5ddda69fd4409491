"""Experiment orchestration: run renaming grids, check every trace, report bounds.

A run writes one CSV row per grid point and seed and a JSON summary with a
:class:`BoundReport`.  Measured step counts are compared with each
algorithm's asymptotic step formula through a fitted constant (the largest
measured/formula ratio on the grid), and shown next to the renaming lower
bound 1 + min{k - 2, log_2r(N / 2M)}.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import checks
from . import renaming as rn
from . import simcore as sc
from .expander import lg_plus

CSV_FIELDS = (
    "algo", "k", "N", "n", "seed", "max_steps", "max_name",
    "range_bound", "registers_used", "violations",
)


def step_formula(algo: str, k: int, N: int) -> float:
    """The asymptotic local-step bound of ``algo`` with constants dropped."""
    lk, lN = lg_plus(k), lg_plus(N)
    llN = lg_plus(lN)
    if algo == "compete":
        return 1.0
    if algo == "majority":
        return lN
    if algo == "basic":
        return lk * lN
    if algo == "polylog":
        return lk * (lN + lk * llN)
    if algo == "almost-adaptive":
        return lk * lk * (lN + lk * llN)
    if algo in ("ma", "efficient", "adaptive", "snapshot"):
        return float(k)
    raise sc.ConfigurationError(f"no step formula for {algo!r}")


def lower_bound(k: int, N: int, M: int, r: int) -> float:
    """1 + min{k - 2, log_{2r}(N / 2M)} with r registers and names in [M]."""
    r = max(r, 1)
    return 1 + min(k - 2, math.log(N / (2 * max(M, 1))) / math.log(2 * r))


@dataclass
class ExperimentConfig:
    algo: str
    ks: list[int] = field(default_factory=lambda: [1, 2, 4, 8])
    Ns: list[int] = field(default_factory=lambda: [2**16])
    seeds: list[int] = field(default_factory=lambda: list(range(100)))
    repetitions: int | None = None  # overrides seeds with range(repetitions)
    crashes: int = -1  # -1 means k - 1
    crash_script: str | None = None  # schedule prefix in "A <slot>" / "X <slot>" lines
    crash_rate: float = 0.05
    scheduler: str = "random"
    profile: str = "scaled"
    graph_seed: int = 0
    mode: str = "random"  # or "exhaustive"
    bound: int = 6
    crash_budget: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.algo not in rn.ALGORITHMS:
            raise sc.ConfigurationError(f"unknown algorithm {self.algo!r}")
        if self.scheduler not in ("random", "round_robin"):
            raise sc.ConfigurationError(f"unknown scheduler {self.scheduler!r}")
        if self.mode not in ("random", "exhaustive"):
            raise sc.ConfigurationError(f"unknown mode {self.mode!r}")
        if not self.ks or min(self.ks) < 1 or not self.Ns:
            raise sc.ConfigurationError("grid needs k >= 1 and at least one N")
        for k in self.ks:
            for N in self.Ns:
                if N < k:
                    raise sc.ConfigurationError(f"N={N} cannot host k={k} distinct names")
        rn.get_profile(self.profile)
        if self.repetitions is not None:
            if self.repetitions < 1:
                raise sc.ConfigurationError("repetitions must be positive")
            self.seeds = list(range(self.repetitions))
        if self.crash_script is not None:
            sc.parse_schedule(self.crash_script)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise sc.ConfigurationError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        extra = set(raw) - known
        if extra:
            raise sc.ConfigurationError(f"unknown config keys {sorted(extra)}")
        return cls(**raw)

    def crashes_for(self, k: int) -> int:
        return k - 1 if self.crashes < 0 else min(self.crashes, k - 1)


@dataclass
class GridPoint:
    k: int
    N: int
    runs: int
    max_steps: int
    max_name: int
    range_bound: int
    registers_used: int
    step_formula: float
    ratio: float
    lower_bound: float
    violations: int


@dataclass
class BoundReport:
    algo: str
    points: list[GridPoint]

    @property
    def fitted_c(self) -> float:
        return max((p.ratio for p in self.points), default=0.0)

    def to_dict(self) -> dict:
        return {
            "algo": self.algo,
            "fitted_c": round(self.fitted_c, 6),
            "points": [
                {**asdict(p), "ratio": round(p.ratio, 6), "lower_bound": round(p.lower_bound, 6),
                 "step_formula": round(p.step_formula, 6)}
                for p in self.points
            ],
        }


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[dict]
    report: BoundReport | None
    violations: list[dict]
    exhaustive: list[dict] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.violations

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows)
        return buf.getvalue()

    def summary(self) -> dict:
        cfg = asdict(self.config)
        cfg.pop("out", None)
        return {
            "config": cfg,
            "rows": len(self.rows),
            "violations": self.violations,
            "report": self.report.to_dict() if self.report else None,
            "exhaustive": self.exhaustive,
        }


def _schedule(cfg: ExperimentConfig, k: int, seed: int) -> sc.Schedule:
    if cfg.scheduler == "round_robin":
        rest: sc.Schedule = sc.RoundRobin()
    else:
        rest = sc.SeededRandom(seed, crashes=cfg.crashes_for(k), crash_rate=cfg.crash_rate)
    if cfg.crash_script:
        return sc.Chain(sc.parse_schedule(cfg.crash_script), rest)
    return rest


def renaming_suite(algo: str) -> str:
    if algo == "compete":
        return "core,compete"
    if algo == "ma":
        return "core,renaming,splitter"
    return "core,renaming"


def run_experiment(config: ExperimentConfig, out: str | Path | None = None) -> ExperimentResult:
    """Execute the grid; every trace goes through the invariant suites."""
    out = out if out is not None else config.out
    if config.mode == "exhaustive":
        result = _run_exhaustive(config)
    else:
        result = _run_random(config, out)
    if out is not None:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        if result.rows:
            (path / "results.csv").write_text(result.csv_text())
        (path / "summary.json").write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n")
    return result


def _run_random(cfg: ExperimentConfig, out: str | Path | None) -> ExperimentResult:
    rows: list[dict] = []
    points: list[GridPoint] = []
    bad: list[dict] = []
    for N in cfg.Ns:
        for k in cfg.ks:
            originals = rn.default_originals(k, N)
            setup = rn.prepare(cfg.algo, originals, N=N, k=k, profile=cfg.profile, graph_seed=cfg.graph_seed)
            bound = rn.declared_bound(cfg.algo, k, setup)
            worst_steps = worst_name = nviol = 0
            for seed in cfg.seeds:
                outcome = setup.run(_schedule(cfg, k, seed))
                found = checks.check_trace(
                    outcome.trace, renaming_suite(cfg.algo),
                    hi=bound, slots=[p.slot for p in setup.pids], n=k,
                )
                if found:
                    nviol += len(found)
                    entry = {"k": k, "N": N, "seed": seed, "violations": [str(v) for v in found]}
                    if out is not None:
                        name = f"traces/{cfg.algo}-k{k}-N{N}-s{seed}.jsonl"
                        target = Path(out) / name
                        target.parent.mkdir(parents=True, exist_ok=True)
                        target.write_text(outcome.trace.to_jsonl())
                        entry["trace"] = name
                    bad.append(entry)
                worst_steps = max(worst_steps, outcome.max_steps)
                worst_name = max(worst_name, outcome.max_name)
                rows.append({
                    "algo": cfg.algo, "k": k, "N": N, "n": k, "seed": seed,
                    "max_steps": outcome.max_steps, "max_name": outcome.max_name,
                    "range_bound": bound, "registers_used": setup.registers_used,
                    "violations": len(found),
                })
            formula = step_formula(cfg.algo, k, N)
            points.append(GridPoint(
                k, N, len(cfg.seeds), worst_steps, worst_name, bound, setup.registers_used,
                formula, worst_steps / formula, lower_bound(k, N, bound, setup.registers_used), nviol,
            ))
    return ExperimentResult(cfg, rows, BoundReport(cfg.algo, points), bad)


def _run_exhaustive(cfg: ExperimentConfig) -> ExperimentResult:
    results = []
    bad = []
    for N in cfg.Ns:
        for k in cfg.ks:
            setup = rn.prepare(cfg.algo, rn.default_originals(k, N), N=N, k=k,
                               profile=cfg.profile, graph_seed=cfg.graph_seed)
            cert = sc.certify_interleavings(
                setup.machines(), setup.memory, cfg.bound, cfg.crash_budget, exclusive_property,
            )
            entry = {
                "k": k, "N": N, "bound": cfg.bound, "crash_budget": cfg.crash_budget,
                "traces": cert.traces, "states": cert.states, "violations": cert.violations,
            }
            results.append(entry)
            if not cert.holds:
                bad.append({**entry, "counterexample": cert.counterexample})
    return ExperimentResult(cfg, [], None, bad, results)


def exclusive_property(final: sc.FinalState) -> bool:
    """No name, commit or acked index decided twice, and at most one winner."""
    for label in ("name", "commit", "ack"):
        got = [v for d in final.decisions.values() for lab, v in d if lab == label and v is not None]
        if len(got) != len(set(got)):
            return False
    wins = [s for s, d in final.decisions.items() if any(lab == "win" for lab, _ in d)]
    return len(wins) <= 1


def fitted_constant(algo: str, ks: Sequence[int], Ns: Sequence[int], seeds: Sequence[int], **kw: Any) -> float:
    cfg = ExperimentConfig(algo, list(ks), list(Ns), list(seeds), **kw)
    return run_experiment(cfg).report.fitted_c
