"""Acceptance suite: one test per acceptance criterion, in order.

Each test prints a single PASS line on success (visible with -s; under -v the
test outcome itself is the per-criterion line).  Criterion 4's round-limit
clause is an expected failure with the impossibility argument documented on
the marker.
"""

import time

import pytest

import fixtures
from conftest import sample_prices
from sgsmarket.auctions import ascending, descending, descending_start, greedy, two_phase
from sgsmarket.cli import generate_instance
from sgsmarket.core_model import RoundLimitExceeded, add_scaled, chi
from sgsmarket.demand_sets import (
    exchange_graph_from_weights,
    is_covering,
    lyapunov,
    min_max_overdemanded,
    min_max_underdemanded,
    overdemanded_from_solution,
    overdemandedness,
    underdemandedness,
)
from sgsmarket.oracle_bruteforce import (
    DemandDecrease,
    EnumerationBudget,
    SupplyDecrease,
    brute_min_max_set,
    brute_polymatroid_sum,
    brute_walrasian,
    check_covering_extremes,
    check_packing_extremes,
    monotonicity_harness,
    price_survey,
    walrasian_lattice_closed,
)
from sgsmarket.polymatroid_sum import SumMode, solve
from sgsmarket.valuations import (
    DemandSide,
    OracleCounters,
    buyer_valuation,
    check_m_convex,
    check_mnat_concave,
    copy_to_unit_supply,
    enumerate_demand_local,
)


def _report(name, started, limit):
    elapsed = time.perf_counter() - started
    assert elapsed < limit, f"{name} took {elapsed:.1f}s (limit {limit}s)"
    print(f"PASS {name} ({elapsed:.2f}s)")


def test_criterion_01_recorded_exchange_graph_and_overdemanded_set():
    started = time.perf_counter()
    graph = exchange_graph_from_weights(
        6,
        fixtures.SCRIPTED_SUPPLY,
        fixtures.SCRIPTED_BUNDLES,
        fixtures.scripted_weight,
    )
    assert frozenset(graph.arcs) == fixtures.SCRIPTED_ARCS
    assert len(graph.arcs) == 9
    items = overdemanded_from_solution(graph, fixtures.SCRIPTED_OVERSOLD)
    assert items == frozenset({0, 1, 2, 3})
    _report("criterion 1: recorded exchange graph", started, 1.0)


def test_criterion_02_ascending_on_walkthrough_family():
    started = time.perf_counter()
    for v1, want in [
        ((2, 3, 0), (0, 1, 1)),
        ((2, 2, 0), (0, 0, 0)),
        ((1, 2, 0), (0, 1, 1)),
    ]:
        p, trace = ascending(fixtures.walkthrough_market(v1))
        assert p == want and trace.walrasian
    _report("criterion 2: ascending walkthrough family", started, 1.0)


def test_criterion_03_descending_reproduces_four_rows():
    started = time.perf_counter()
    for v1, want in fixtures.FOUR_ROW_CASES:
        p, trace = descending(fixtures.four_row_market(v1))
        assert p == want and trace.walrasian
    _report("criterion 3: descending four-row table", started, 1.0)


def test_criterion_04_no_equilibrium_market():
    started = time.perf_counter()
    inst = fixtures.no_equilibrium_market()
    found, lo, hi = brute_walrasian(inst)
    assert found == [] and lo is None and hi is None
    # the ascending auction halts at a packing but non-Walrasian price
    p, trace = ascending(inst)
    assert not trace.walrasian
    _report("criterion 4: empty Walrasian set", started, 5.0)


@pytest.mark.xfail(
    strict=True,
    reason="unattainable: the ascending auction terminates on every input. "
    "Prices only rise, an item priced above every buyer's value for the full "
    "supply is demanded by nobody and can never enter a maximal overdemanded "
    "set, so each coordinate is bounded and the auction stops (here at a "
    "packing, non-Walrasian vector) long before the round limit.",
)
def test_criterion_04_no_equilibrium_round_limit():
    with pytest.raises(RoundLimitExceeded):
        ascending(fixtures.no_equilibrium_market())


def test_criterion_05_covering_join_market():
    started = time.perf_counter()
    inst = fixtures.covering_join_market()
    assert is_covering(inst, (6, 7, 7))
    assert is_covering(inst, (7, 6, 7))
    assert not is_covering(inst, (7, 7, 7))
    budget = EnumerationBudget(max_price=20, max_subsets=262144)
    _, _, p_max = brute_walrasian(inst, budget)
    assert p_max == (7, 7, 8)
    _report("criterion 5: covering join market", started, 1.0)


def test_criterion_06_oracle_equivalence_on_corpus(corpus):
    started = time.perf_counter()
    assert len(corpus) >= 200
    for inst in corpus:
        for p in sample_prices(inst):
            for side in DemandSide:
                sol = solve(inst, p, side)
                brute_value, _, _ = brute_polymatroid_sum(inst, p, side)
                assert sol.value == brute_value
            over = min_max_overdemanded(inst, p)
            assert over.items == brute_min_max_set(inst, p, "over")[0]
            under = min_max_underdemanded(inst, p)
            assert under.items == brute_min_max_set(inst, p, "under")[0]
        found, lo, hi = brute_walrasian(inst)
        assert found
        pa, _ = ascending(inst, extract=False)
        assert pa == lo
        pd, _ = descending(inst, extract=False)
        assert pd == hi
        pool = set(found)
        mid = tuple(q // 2 for q in descending_start(inst))
        pt, _ = two_phase(inst, mid, extract=False)
        assert pt in pool
        pg, _ = greedy(inst, mid, extract=False)
        assert pg in pool
    _report("criterion 6: oracle equivalence, 200 instances", started, 60.0)


def test_criterion_07_counter_bounds(corpus):
    started = time.perf_counter()
    for inst in corpus:
        for p in sample_prices(inst, extra=1):
            for side in DemandSide:
                counters = OracleCounters()
                sol = solve(inst, p, side, counters=counters)
                assert sol.nonsaturating_pushes <= inst.m**3
                assert counters.do_calls == inst.n
    # bench sweep to m = 12; unit supply exercises the per-level push bound
    # (always-on) and the level-insertion potential assertion (debug)
    for m in range(4, 13):
        inst = generate_instance("matroid_rank", m, 3, 1, 6, seed=100 + m)
        for p in [(0,) * m, (1,) * m]:
            counters = OracleCounters()
            sol = solve(inst, p, DemandSide.MINIMAL, counters=counters,
                        debug=(m <= 8))
            assert sol.nonsaturating_pushes <= m**3
            assert counters.do_calls == inst.n
    _report("criterion 7: counter bounds and bench sweep", started, 60.0)


def test_criterion_08_invariant_suites(corpus):
    started = time.perf_counter()
    # debug mode replays L1/L2 after every push/relabel, runs the
    # lexicographic shadow scan, and cross-checks the exchange-weight
    # binary search against a linear scan
    for inst in corpus[:60]:
        for p in sample_prices(inst, extra=1):
            for side in DemandSide:
                solve(inst, p, side, debug=True)
                for i in range(inst.n):
                    dset = enumerate_demand_local(
                        buyer_valuation(inst, i), p, inst.supply, side
                    )
                    assert check_m_convex(dset)
    for inst in corpus:
        assert all(check_mnat_concave(v, inst.supply) for v in inst.buyers)
    # Lyapunov difference identities on full subset enumeration
    for inst in corpus[:60]:
        p = tuple(q // 2 for q in descending_start(inst))
        base = lyapunov(inst, p)
        for mask in range(1, 1 << inst.m):
            S = [e for e in range(inst.m) if mask >> e & 1]
            up = add_scaled(p, chi(inst.m, S))
            assert lyapunov(inst, up) - base == -overdemandedness(inst, p, S)
            if all(p[e] >= 1 for e in S):
                down = add_scaled(p, chi(inst.m, S), -1)
                assert (
                    lyapunov(inst, down) - base
                    == -underdemandedness(inst, p, S)
                )
    _report("criterion 8: invariant suites", started, 60.0)


def test_criterion_09_lattice_and_extremal_theorems(corpus):
    started = time.perf_counter()
    for inst in corpus:
        survey = price_survey(inst)
        found, _, _ = brute_walrasian(inst, survey=survey)
        assert walrasian_lattice_closed(found)
        assert check_packing_extremes(inst, survey=survey)
        assert check_covering_extremes(inst, survey=survey)
    _report("criterion 9: lattice and extremal prices", started, 120.0)


def test_criterion_10_monotonicity_harness(corpus):
    started = time.perf_counter()
    for inst in corpus:
        for e in range(inst.m):
            assert monotonicity_harness(inst, SupplyDecrease(e)).ok
        for i in range(inst.n):
            assert monotonicity_harness(inst, DemandDecrease(i)).ok
    _report("criterion 10: monotonicity harness", started, 120.0)


def test_criterion_11_unit_supply_copy_reduction():
    started = time.perf_counter()
    budget = EnumerationBudget(max_subsets=262144)
    for inst in fixtures.copy_reduction_fixtures():
        _, lo, hi = brute_walrasian(inst, budget)
        copied, projection = copy_to_unit_supply(inst)
        _, copy_lo, copy_hi = brute_walrasian(copied, budget)
        for extreme, copy_extreme in [(lo, copy_lo), (hi, copy_hi)]:
            # fiber-constant: all copies of one item share a price
            for k, e in enumerate(projection):
                assert copy_extreme[k] == extreme[e]
        # the copied instance solves with the unit-supply fast path; at
        # Walrasian prices the maximal-side optimum sells every copy
        assert copied.max_supply == 1
        sol = solve(copied, copy_lo, DemandSide.MAXIMAL,
                    mode=SumMode.UNIT_SUPPLY)
        assert sol.value == sum(copied.supply)
    _report("criterion 11: unit-supply copy reduction", started, 10.0)
