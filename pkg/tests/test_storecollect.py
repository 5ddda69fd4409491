import pytest
from hypothesis import given, settings, strategies as st

from exsel import simcore as sc
from exsel import storecollect as scl
from exsel.checks import check_trace
from exsel.simcore import Activate


def system(backend="adaptive", k=3, N=None):
    originals = list(range(1, k + 1)) if N is None else [1 + i * (N - 1) // max(1, k - 1) for i in range(k)]
    return scl.build_system(backend, originals, N=N)


def params(sys):
    return {"controls": sys.layout.controls,
            "slot_names": {p.slot: p.original_name for p in sys.pids},
            "n": len(sys.pids)}


def test_layout_interval_lengths():
    mem = sc.create_memory(0, 1)
    lay = scl.CollectLayout(mem, 20)
    assert [len(r) for r in lay.intervals] == [2, 4, 8, 16]
    for c, r in zip(lay.controls, lay.intervals):
        assert r.start == c + 1


@pytest.mark.parametrize("name,interval", [(1, 0), (2, 0), (3, 1), (6, 1), (7, 2), (14, 2), (15, 3)])
def test_interval_of(name, interval):
    assert scl.CollectLayout.interval_of(name) == interval


def test_register_of_is_injective():
    lay = scl.CollectLayout(sc.create_memory(0, 1), 62)
    regs = [lay.register_of(x) for x in range(1, 63)]
    assert len(set(regs)) == 62
    assert not set(regs) & set(lay.controls)


def test_solo_store_uses_name_one():
    sys = system(k=1)
    trace = sys.run([("S", 1, 5)])
    reg = sys.layout.register_of(1)
    writes = [e for e in trace.events if e.kind == "write"]
    assert writes[-1].reg == reg and writes[-1].val == (1, 5)
    assert any(e.reg == sys.layout.controls[0] and e.val == 1 for e in writes)


def test_second_store_is_one_step():
    sys = system(k=1)
    trace = sys.run([("S", 1, 5), ("S", 1, 6), ("S", 1, 7)])
    ops = scl.operations(trace)
    assert [o.steps for o in ops][1:] == [1, 1]


def test_collect_with_no_stores_reads_one_flag():
    sys = system(k=2)
    trace = sys.run([("C", 1)])
    op = scl.operations(trace)[0]
    assert op.steps == 1 and op.value == ()


def test_two_stores_then_collect():
    sys = system(k=3)
    ops = [("S", 1, "a"), ("S", 2, "b"), ("C", 3)]
    sched = sc.Chain(sc.Scripted([Activate(1)] * 200 + [Activate(2)] * 200), sc.RoundRobin())
    trace = sys.run(ops, sched)
    collect = [o for o in scl.operations(trace) if o.kind == "C"][0]
    assert dict(collect.value) == {1: "a", 2: "b"}


def test_collect_cost_four_stores():
    sys = system(k=4)
    ops = [("S", s, s * 10) for s in (1, 2, 3, 4)] + [("C", 1)]
    trace = sys.run(ops, sc.RoundRobin())
    op = [o for o in scl.operations(trace) if o.kind == "C"][0]
    assert op.steps <= (2 + 4 + 8) + 3
    # exact layout arithmetic: reads stop at the first lowered flag
    up = len({e.reg for e in trace.events if e.kind == "write" and e.reg in sys.layout.controls})
    assert op.steps == sys.layout.collect_cost(up)


def test_k3_random_distinct_registers():
    sys = system(k=3)
    ops = [("S", s, s) for s in (1, 2, 3)]
    for seed in range(200):
        trace = sys.run(ops, sc.SeededRandom(seed))
        regs = {e.reg for e in trace.events if e.kind == "write" and isinstance(e.val, tuple)}
        assert len(regs) == 3


@pytest.mark.parametrize("backend", sorted(scl.BACKENDS))
def test_backends_pass_invariants(backend):
    N = 2**16 if backend != "adaptive" else None
    sys = system(backend, k=4, N=N)
    ops = scl.parse_ops("S 1 1; S 2 2; C 3; S 3 3; S 1 4; C 2; S 4 5; C 1; C 4; S 2 6; C 3")
    for seed in range(30):
        trace = sys.run(ops, sc.SeededRandom(seed, crashes=2, crash_rate=0.02))
        assert check_trace(trace, "core,storecollect", **params(sys)) == []


def test_parse_ops():
    assert scl.parse_ops("S 1 10\nC 2 # note\n;S 3 x") == [("S", 1, 10), ("C", 2), ("S", 3, "x")]
    for bad in ("S 1", "C", "Q 1 2"):
        with pytest.raises(sc.ConfigurationError):
            scl.parse_ops(bad)


def test_unknown_backend_and_process():
    with pytest.raises(sc.ConfigurationError):
        scl.build_system("magic", [1, 2])
    with pytest.raises(sc.ConfigurationError):
        system(k=2).machines([("S", 3, 1)])


def test_control_flags_only_rise_checker_catches_reset():
    sys = system(k=1)
    trace = sys.run([("S", 1, 1)])
    bad = sc.ExecutionTrace(events=list(trace.events))
    bad.events.append(sc.Event(len(bad.events), 1, "write", sys.layout.controls[0], 0, 99))
    found = check_trace(bad, "storecollect", **params(sys))
    assert [v.check for v in found] == ["control"]


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.tuples(st.sampled_from("SC"), st.integers(1, 4), st.integers(0, 99)), min_size=1, max_size=20),
    st.integers(0, 10**6),
)
def test_random_scripts_satisfy_collect_semantics(script, seed):
    sys = system(k=4)
    ops = [("S", p, v) if kind == "S" else ("C", p) for kind, p, v in script]
    trace = sys.run(ops, sc.SeededRandom(seed, crashes=1, crash_rate=0.02))
    assert check_trace(trace, "core,storecollect", **params(sys)) == []
    raised: set[int] = set()
    for e in trace.events:
        if e.kind == "write" and e.reg in sys.layout.controls:
            raised.add(e.reg)
    for o in scl.operations(trace):
        if o.kind == "C":
            # a collect never reads further than the flags raised by the end of the run
            assert o.steps <= sys.layout.collect_cost(len(raised))


def solo_first(slot, count=500):
    return sc.Chain(sc.Scripted([Activate(slot)] * count), sc.RoundRobin())


def test_stale_value_is_flagged():
    sys = system(k=2)
    trace = sys.run([("S", 1, "old"), ("S", 1, "new"), ("C", 2)], solo_first(1))
    events = []
    for e in trace.events:
        if e.kind == "decide" and e.reg == "collect":
            assert e.val == ((1, "new"),)
            e = e._replace(val=((1, "old"),))
        events.append(e)
    found = check_trace(sc.ExecutionTrace(events=events), "storecollect", **params(sys))
    assert [v.check for v in found] == ["collect"]


def test_crash_after_write_value_may_appear():
    sys = system(k=2)
    ops = [("S", 1, "a"), ("S", 1, "b"), ("C", 2)]
    solo = sys.run(ops[:2], sc.RoundRobin())
    cut = next(i for i, e in enumerate(solo.events) if e.kind == "write" and e.val == (1, "b")) + 1
    sched = sc.Chain(sc.Scripted([Activate(1)] * cut + [sc.Crash(1)]), sc.RoundRobin())
    trace = sys.run(ops, sched)
    assert 1 in trace.crashed and [e.val for e in trace.decisions("stored")] == ["a"]
    assert dict(trace.decisions("collect")[0].val) == {1: "b"}
    assert check_trace(trace, "core,storecollect", **params(sys)) == []
