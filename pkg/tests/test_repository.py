import pytest
from hypothesis import given, settings, strategies as st

from exsel import harness
from exsel import repository as rp
from exsel import simcore as sc
from exsel.checks import check_trace
from exsel.simcore import Activate, Crash, Null


def suite(algo):
    return {"naming": "core,naming", "altruistic": "core,persistence,pipelining,help"}.get(
        algo, "core,persistence,pipelining")


def clean(system, trace):
    found = check_trace(trace, suite(system.algo), **system.check_params())
    assert found == [], found[:3]


def run_solo(gen, memory):
    return sc.execute_solo(gen, memory)


# -- requests ---------------------------------------------------------------------------


def test_query_script():
    cur = rp.QueryCursor([42])
    assert cur.query() == 42
    cur.ack()
    assert cur.query() is None


def test_query_before_ack_is_recorded():
    cur = rp.QueryCursor([1, 2])
    cur.query()
    assert cur.query() is None and cur.violations == [1]


def test_request_script_parse():
    script = rp.RequestScript.parse("1 10 11\n2 x  # comment\n1 12\n")
    assert script.values == {1: [10, 11, 12], 2: ["x"]} and script.total == 4
    with pytest.raises(sc.ConfigurationError):
        rp.RequestScript.parse("one 2")


def test_uniform_script_values_distinct():
    vals = [v for vs in rp.RequestScript.uniform(3, 5).values.values() for v in vs]
    assert len(vals) == 15 == len(set(vals))


# -- local list and choosing --------------------------------------------------------------------


def test_initial_list_and_pointer():
    st_ = rp.LocalNamingState(3)
    assert st_.entries == [1, 2, 3, 4, 5] and st_.pointer == 6


def layout(n, algo="selfish"):
    mem = sc.create_memory(0, n)
    return mem, rp.make_layout(mem, algo)


def test_verify_list_all_empty_is_noop():
    mem, lay = layout(2)
    st_ = rp.LocalNamingState(2)
    run_solo(rp.verify_list(lay, st_), mem)
    assert st_.entries == [1, 2, 3] and st_.pointer == 4


def test_verify_list_replaces_occupied_entry():
    mem, lay = layout(2)
    mem.write(lay.R(2), "v")
    st_ = rp.LocalNamingState(2)
    run_solo(rp.verify_list(lay, st_), mem)
    assert st_.entries == [1, 3, 4] and st_.pointer == 5


def test_verify_list_fully_occupied():
    mem, lay = layout(2)
    for i in (1, 2, 3, 5):
        mem.write(lay.R(i), "v")
    st_ = rp.LocalNamingState(2)
    run_solo(rp.verify_list(lay, st_), mem)
    assert st_.entries == [4, 6, 7] and st_.pointer == 8


def test_choose_by_rank_examples():
    assert rp.choose_by_rank(1, (Null, Null), [1, 2, 3]) == 1
    assert rp.choose_by_rank(2, (1, 1), [1, 2, 3]) == 3


def test_choose_by_rank_worst_case_uses_last_entry():
    n = 4
    entries = list(range(1, 2 * n))
    view = (1, 2, 3, 3)  # slot n duplicates slot n-1, everyone holds a list entry
    assert rp.choose_by_rank(n, view, entries) == entries[-1]


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 6), st.data())
def test_choose_by_rank_defined_and_distinct_after_collisions(n, data):
    # ranking only happens after a collision: the chooser's own value sits in
    # another W too, so the view holds at most n - 1 distinct values
    entries = sorted(data.draw(st.lists(st.integers(1, 40), min_size=2 * n - 1, max_size=2 * n - 1, unique=True)))
    value = st.one_of(st.sampled_from(entries), st.integers(1, 60))
    view = data.draw(st.lists(st.one_of(st.none(), value), min_size=n, max_size=n))
    i, j = data.draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
    view[i] = view[j] = data.draw(value)
    view = tuple(view)
    colliding = [q for q, w in enumerate(view, 1) if w is not None and not rp.is_unique(view, q, w)]
    picks = {q: rp.choose_by_rank(q, view, entries) for q in colliding}
    assert all(x in entries and x not in view for x in picks.values())
    # ranks separate only the processes holding entries of the common list
    listed = [picks[q] for q in colliding if view[q - 1] in entries]
    assert len(set(listed)) == len(listed)


def test_first_choice_rules():
    st_ = rp.LocalNamingState(3)
    st_.view = (1, 2, None)
    assert rp.first_choice(st_, 3, "literal") == 1
    assert rp.first_choice(st_, 3, "fresh") == 3


def test_board_availability():
    b = rp.Board(frozenset({2, 5}), 9)
    assert b.available(2) and b.available(9) and b.available(100)
    assert not b.available(3) and not b.available(8)


def test_board_read_pointer_first():
    mem, lay = layout(2, "naming")
    _, events = sc.execute_solo(rp.read_board(lay, 1), mem)
    assert events[0].reg == lay.board(1, 3)
    board, _ = sc.execute_solo(rp.read_board(lay, 1), mem)
    assert board == rp.Board(frozenset({1, 2, 3}), 4)


# -- selfish deposit -----------------------------------------------------------------------------


def test_selfish_solo_n1():
    sys_ = rp.build_repository("selfish", 1, rp.RequestScript({1: ["v"]}))
    trace = sys_.run()
    assert rp.acks(trace) == [1] and trace.scan_counts[1] == 1
    clean(sys_, trace)


def test_selfish_n2_exhaustive_small_bound():
    sys_ = rp.build_repository("selfish", 2, rp.RequestScript.uniform(2, 1))
    cert = sc.certify_interleavings(sys_.machines(), sys_.memory, 12, 1, harness.exclusive_property)
    assert cert.holds and cert.traces > 1000


def test_selfish_n2_colliding_proposals_both_deposit():
    sys_ = rp.build_repository("selfish", 2, rp.RequestScript.uniform(2, 1))
    # both publish index 1 before either scans
    sched = sc.Chain(sc.Scripted([Activate(1), Activate(2), Activate(1), Activate(2)]), sc.RoundRobin())
    trace = sys_.run(sched)
    assert sorted(rp.acks(trace)) == [2, 3] or len(set(rp.acks(trace))) == 2
    clean(sys_, trace)


def test_selfish_survivor_10k_deposits_two_crashes():
    sys_ = rp.build_repository("selfish", 3, rp.RequestScript({1: [1], 2: [2], 3: list(range(10_000))}))
    for seed in range(3):
        prefix = sc.Prefix(sc.SeededRandom(seed), 5 + 3 * seed)
        trace = sys_.run(sc.Chain(prefix, sc.Scripted([Crash(1), Crash(2)]), sc.RoundRobin()))
        assert rp.quiescent(trace, (1, 2, 3))
        assert len(rp.acks(trace)) >= 10_000
        assert rp.waste(trace, sys_.layout.dedicated) <= 2
        clean(sys_, trace)


LITERAL_TRAP = "A 1\nA 1\nX 1\nA 2\nA 2\nA 2\nA 2\nX 2\n"


def test_literal_rule_counterexample():
    # p1 pins index 1 and crashes; p2 collides with it, moves to index 3 by
    # rank and crashes; a survivor that always restarts at the smallest entry
    # loses the empty registers below its frontier beyond n - 1
    script = rp.RequestScript({1: [1], 2: [2], 3: list(range(40))})
    waste = {}
    for rule in rp.RULES:
        sys_ = rp.build_repository("selfish", 3, script, rule)
        trace = sys_.run(sc.Chain(sc.parse_schedule(LITERAL_TRAP), sc.RoundRobin()))
        clean(sys_, trace)
        waste[rule] = rp.waste(trace, sys_.layout.dedicated)
    assert waste["fresh"] <= 2
    assert waste["literal"] == 4


def test_lockstep_survivors_leave_a_transient_hole():
    # after p2 crashes, p1 and p3 run in lockstep: both keep proposing the
    # same smallest entry, so one index stays empty for good next to the one
    # p2 pins; the last round's skipped index is only filled by later deposits
    def run(per):
        sys_ = rp.build_repository("selfish", 3, rp.RequestScript.uniform(3, per))
        prefix = sc.Prefix(sc.SeededRandom(0), 27)
        trace = sys_.run(sc.Chain(prefix, sc.Scripted([Crash(2)]), sc.RoundRobin()))
        clean(sys_, trace)
        used = set(rp.dedicated_contents(trace, sys_.layout.dedicated))
        return {i for i in range(1, max(used)) if i not in used}

    short, long_ = run(60), run(90)
    assert len(short) == 3
    assert len(short & long_) == 2


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 2), st.sampled_from(rp.RULES))
def test_selfish_random_schedules(seed, crashes, rule):
    sys_ = rp.build_repository("selfish", 3, rp.RequestScript.uniform(3, 15), rule)
    trace = sys_.run(sc.SeededRandom(seed, crashes=crashes, crash_rate=0.01))
    clean(sys_, trace)
    assert len(rp.acks(trace)) >= 15 * (3 - len(trace.crashed))


# -- altruistic deposit ----------------------------------------------------------------------------


def test_altruistic_solo_self_help():
    sys_ = rp.build_repository("altruistic", 1, rp.RequestScript({1: ["v"]}))
    trace = sys_.run()
    cell = sys_.layout.help_cell(1, 1)
    writes = [e for e in trace.events if e.kind == "write" and e.reg == cell]
    assert writes[0].val is not Null and writes[1].val is Null
    assert rp.acks(trace) == [writes[0].val]
    clean(sys_, trace)


def test_altruistic_survives_crash_from_start():
    sys_ = rp.build_repository("altruistic", 2, rp.RequestScript.uniform(2, 10))
    trace = sys_.run(sc.Chain(sc.Scripted([Crash(2)]), sc.RoundRobin()))
    assert len([e for e in trace.decisions("ack") if e.slot == 1]) == 10
    assert 1 in trace.terminated
    clean(sys_, trace)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 2))
def test_altruistic_random_schedules(seed, crashes):
    sys_ = rp.build_repository("altruistic", 3, rp.RequestScript.uniform(3, 6))
    trace = sys_.run(sc.SeededRandom(seed, crashes=crashes, crash_rate=0.01))
    clean(sys_, trace)
    for s in (1, 2, 3):
        if s not in trace.crashed:
            assert len([e for e in trace.decisions("ack") if e.slot == s]) == 6


# -- unbounded naming --------------------------------------------------------------------------------


def test_naming_solo_commits_in_order():
    sys_ = rp.build_repository("naming", 1, rp.RequestScript({1: [0, 0, 0]}))
    trace = sys_.run()
    assert rp.committed(trace) == [1, 2, 3]


def test_naming_solo_among_three():
    sys_ = rp.build_repository("naming", 3, rp.RequestScript({1: [0] * 4}))
    assert rp.committed(sys_.run()) == [1, 2, 3, 4]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 2), st.sampled_from(rp.RULES))
def test_naming_random_schedules(seed, crashes, rule):
    sys_ = rp.build_repository("naming", 3, rp.RequestScript.uniform(3, 12), rule)
    trace = sys_.run(sc.SeededRandom(seed, crashes=crashes, crash_rate=0.01))
    clean(sys_, trace)


def test_naming_skips_bounded_fresh_rule():
    sys_ = rp.build_repository("naming", 3, rp.RequestScript.uniform(3, 100))
    for seed in range(20):
        trace = sys_.run(sc.SeededRandom(seed, crashes=2, crash_rate=0.01))
        assert rp.skipped(trace) <= 2


# -- construction errors and measurements ---------------------------------------------------------------


def test_build_errors():
    with pytest.raises(sc.ConfigurationError):
        rp.build_repository("hoarding", 2)
    with pytest.raises(sc.ConfigurationError):
        rp.build_repository("selfish", 2, rule="random")
    with pytest.raises(sc.ConfigurationError):
        rp.build_repository("selfish", 0)
    with pytest.raises(sc.ConfigurationError):
        rp.build_repository("selfish", 2, rp.RequestScript({3: [1]}))


def test_waste_counts_holes_below_frontier():
    base = 100
    events = [sc.Event(i, 1, "write", base + r - 1, "v", i + 1) for i, r in enumerate((1, 2, 5, 7))]
    trace = sc.ExecutionTrace(events=events)
    assert rp.frontier(trace, base) == 7
    assert rp.waste(trace, base) == 3


def test_skipped_counts_missing_integers():
    events = [sc.Event(i, 1, "decide", "commit", v, i + 1) for i, v in enumerate((1, 2, 4, 6))]
    assert rp.skipped(sc.ExecutionTrace(events=events)) == 2
