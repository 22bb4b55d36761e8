import fixtures
from conftest import sample_prices
from sgsmarket.core_model import add_scaled, chi
from sgsmarket.demand_sets import (
    build_exchange_graph,
    exchange_graph_from_weights,
    is_covering,
    is_packing,
    is_walrasian,
    lyapunov,
    min_max_overdemanded,
    min_max_underdemanded,
    overdemanded_from_solution,
    overdemandedness,
    reach_from,
    reach_into,
    underdemanded_from_solution,
    underdemandedness,
)
from sgsmarket.oracle_bruteforce import brute_min_max_set
from sgsmarket.polymatroid_sum import solve
from sgsmarket.valuations import DemandSide


def test_scripted_graph_reproduces_recorded_arcs():
    graph = exchange_graph_from_weights(
        6,
        fixtures.SCRIPTED_SUPPLY,
        fixtures.SCRIPTED_BUNDLES,
        fixtures.scripted_weight,
    )
    assert frozenset(graph.arcs) == fixtures.SCRIPTED_ARCS
    # one arc is contributed by two buyers
    assert graph.arcs[(3, 1)] == frozenset({0, 2})


def test_scripted_graph_overdemanded_set():
    graph = exchange_graph_from_weights(
        6,
        fixtures.SCRIPTED_SUPPLY,
        fixtures.SCRIPTED_BUNDLES,
        fixtures.scripted_weight,
    )
    items = overdemanded_from_solution(graph, fixtures.SCRIPTED_OVERSOLD)
    assert items == fixtures.SCRIPTED_MIN_MAX_OVERDEMANDED
    # no path from the undersold item to an oversold one at optimality
    assert not (reach_from(graph, fixtures.SCRIPTED_UNDERSOLD)
                & fixtures.SCRIPTED_OVERSOLD)


def test_reachability_helpers():
    graph = exchange_graph_from_weights(
        3, (1, 1, 1), [(0, 1, 1)], lambda i, e, f: 1 if (e, f) == (0, 1) else 0
    )
    assert reach_from(graph, {0}) == {0, 1}
    assert reach_into(graph, {0}) == {0}
    assert reach_into(graph, {1}) == {0, 1}
    assert underdemanded_from_solution(graph, frozenset()) == frozenset()
    assert overdemanded_from_solution(graph, frozenset()) == frozenset()


def test_walkthrough_overdemanded_steps():
    inst = fixtures.walkthrough_market()
    report = min_max_overdemanded(inst, (0, 0, 0), debug=True)
    assert report.items == {1, 2}
    assert report.magnitude == 1
    report = min_max_overdemanded(inst, (0, 1, 1), debug=True)
    assert report.items == frozenset()


def test_reports_match_brute_on_corpus_sample(corpus):
    for inst in corpus[:40]:
        for p in sample_prices(inst, extra=1):
            over = min_max_overdemanded(inst, p)
            want_over, mag_over = brute_min_max_set(inst, p, "over")
            assert over.items == want_over
            if over.items:
                assert over.magnitude == mag_over
            under = min_max_underdemanded(inst, p)
            want_under, mag_under = brute_min_max_set(inst, p, "under")
            assert under.items == want_under
            if under.items:
                assert under.magnitude == mag_under


def test_exchange_graph_queries_only_nontrivial_pairs():
    calls = []

    def weight(i, e, f):
        calls.append((i, e, f))
        return 0

    bundles = [(2, 0, 1)]
    exchange_graph_from_weights(3, (2, 2, 2), bundles, weight)
    for i, e, f in calls:
        assert bundles[i][f] > 0 and bundles[i][e] < 2


def test_packing_covering_fallback_on_tables():
    inst = fixtures.packing_no_lattice_market()
    assert is_packing(inst, (0, 2, 6, 0))
    assert is_packing(inst, (0, 6, 2, 0))
    assert not is_packing(inst, (0, 2, 2, 0))
    cov = fixtures.covering_join_market()
    assert is_covering(cov, (6, 7, 7))
    assert not is_covering(cov, (7, 7, 7))
    assert is_walrasian(cov, (7, 7, 8))


def test_lyapunov_difference_identities():
    inst = fixtures.walkthrough_market()
    p = (1, 1, 1)
    base = lyapunov(inst, p)
    for mask in range(1, 1 << inst.m):
        S = [e for e in range(inst.m) if mask >> e & 1]
        up = add_scaled(p, chi(inst.m, S))
        assert lyapunov(inst, up) - base == -overdemandedness(inst, p, S)
        down = add_scaled(p, chi(inst.m, S), -1)
        assert lyapunov(inst, down) - base == -underdemandedness(inst, p, S)


def test_solver_graph_matches_scripted_query_filter(corpus):
    # build_exchange_graph only queries pairs the bundle can trade
    inst = corpus[0]
    p = (0,) * inst.m
    sol = solve(inst, p, DemandSide.MINIMAL)
    graph = build_exchange_graph(inst, p, sol.bundles, DemandSide.MINIMAL)
    for (e, f), owners in graph.arcs.items():
        for i in owners:
            assert sol.bundles[i][f] > 0
            assert sol.bundles[i][e] < inst.supply[e]
