"""Over/underdemanded sets via exchange-graph reachability.

Builds the exchange graph of an optimal polymatroid-sum solution and extracts
the inclusion-wise minimal maximal overdemanded (or underdemanded) set by a
breadth-first search, plus the formula-based functionals used as test
oracles and the Lyapunov potential.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum

from .core_model import EnumerationLimit, InternalInvariantError, classify_items, dot
from .polymatroid_sum import SumSolution, solve
from .valuations import (
    DemandSide,
    OracleCounters,
    buyer_valuation,
    enumerate_demand_local,
    exchange_weight,
    indirect_utility,
)


class ReportKind(Enum):
    OVERDEMANDED = "overdemanded"
    UNDERDEMANDED = "underdemanded"


@dataclass(frozen=True)
class ExchangeGraph:
    """Arcs (e, f) present when some buyer can swap units of f for units of e
    while staying in her demand set; buyers annotated per arc."""

    m: int
    arcs: dict  # (e, f) -> frozenset of buyers
    side: DemandSide

    def successors(self, e):
        return [f for (src, f) in self.arcs if src == e]

    def predecessors(self, f):
        return [e for (e, dst) in self.arcs if dst == f]


@dataclass(frozen=True)
class DemandReport:
    """The extracted set, its kind and magnitude, plus the witness solution."""

    items: frozenset
    kind: ReportKind
    magnitude: int
    witness: SumSolution = None


def exchange_graph_from_weights(m, b, bundles, weight_fn, side=DemandSide.MINIMAL):
    """Build the graph from an arbitrary weight callback (i, e, f) -> int.

    Queries exactly the pairs with z_i(f) > 0 and z_i(e) < b(e); other pairs
    are zero by the box bounds.
    """
    arcs = {}
    for i, z in enumerate(bundles):
        for e in range(m):
            if z[e] >= b[e]:
                continue
            for f in range(m):
                if f == e or z[f] == 0:
                    continue
                if weight_fn(i, e, f) > 0:
                    arcs.setdefault((e, f), set()).add(i)
    return ExchangeGraph(
        m=m,
        arcs={arc: frozenset(owners) for arc, owners in arcs.items()},
        side=side,
    )


def build_exchange_graph(inst, p, bundles, side, counters=None, debug=False):
    """Exchange graph of an allocation whose bundles lie in the selected
    demand sets; one exchange-oracle query per nontrivial pair."""
    vals = [buyer_valuation(inst, i) for i in range(inst.n)]

    def weight(i, e, f):
        return exchange_weight(
            vals[i], p, tuple(bundles[i]), e, f, side, inst.supply, counters, debug
        )

    return exchange_graph_from_weights(inst.m, inst.supply, bundles, weight, side)


def reach_into(graph, sources):
    """Items with a directed path to some source (BFS on reversed arcs)."""
    reached = set(sources)
    queue = deque(sources)
    preds = {}
    for (e, f) in graph.arcs:
        preds.setdefault(f, []).append(e)
    while queue:
        f = queue.popleft()
        for e in preds.get(f, ()):
            if e not in reached:
                reached.add(e)
                queue.append(e)
    return frozenset(reached)


def reach_from(graph, sources):
    """Items reachable from some source along directed arcs (forward BFS)."""
    reached = set(sources)
    queue = deque(sources)
    succs = {}
    for (e, f) in graph.arcs:
        succs.setdefault(e, []).append(f)
    while queue:
        e = queue.popleft()
        for f in succs.get(e, ()):
            if f not in reached:
                reached.add(f)
                queue.append(f)
    return frozenset(reached)


def overdemanded_from_solution(graph, oversold):
    """Minimal maximal overdemanded set: items from which an oversold item of
    an optimal minimal-side solution is reachable."""
    if not oversold:
        return frozenset()
    return reach_into(graph, oversold)


def underdemanded_from_solution(graph, undersold):
    """Minimal maximal underdemanded set: items reachable from an undersold
    item of an optimal maximal-side solution."""
    if not undersold:
        return frozenset()
    return reach_from(graph, undersold)


def min_max_overdemanded(inst, p, counters=None, debug=False):
    """Solve the minimal-side polymatroid sum, then BFS in its exchange graph.

    The magnitude is the maximal overdemandedness, recovered from the sum
    optimum: sum of minimal demand cardinalities minus the optimal value.
    """
    if counters is None:
        counters = OracleCounters()
    sol = solve(inst, p, DemandSide.MINIMAL, counters=counters, debug=debug)
    oversold, _, _ = classify_items(
        tuple(sum(z[e] for z in sol.bundles) for e in range(inst.m)), inst.supply
    )
    magnitude = sum(sum(z) for z in sol.bundles) - sol.value
    if not oversold:
        return DemandReport(frozenset(), ReportKind.OVERDEMANDED, 0, sol)
    graph = build_exchange_graph(
        inst, p, sol.bundles, DemandSide.MINIMAL, counters, debug
    )
    items = overdemanded_from_solution(graph, oversold)
    if debug:
        _assert_closed(graph, items)
        _, undersold, _ = classify_items(
            tuple(sum(z[e] for z in sol.bundles) for e in range(inst.m)),
            inst.supply,
        )
        if undersold & items:
            raise InternalInvariantError(
                "an undersold item reaches an oversold one at optimality"
            )
    return DemandReport(items, ReportKind.OVERDEMANDED, magnitude, sol)


def min_max_underdemanded(inst, p, counters=None, debug=False):
    """Maximal-side analogue: forward reachability from undersold items; the
    magnitude is total supply minus the optimal value."""
    if counters is None:
        counters = OracleCounters()
    sol = solve(inst, p, DemandSide.MAXIMAL, counters=counters, debug=debug)
    _, undersold, _ = classify_items(
        tuple(sum(z[e] for z in sol.bundles) for e in range(inst.m)), inst.supply
    )
    magnitude = sum(inst.supply) - sol.value
    if not undersold:
        return DemandReport(frozenset(), ReportKind.UNDERDEMANDED, 0, sol)
    graph = build_exchange_graph(
        inst, p, sol.bundles, DemandSide.MAXIMAL, counters, debug
    )
    items = underdemanded_from_solution(graph, undersold)
    return DemandReport(items, ReportKind.UNDERDEMANDED, magnitude, sol)


def _assert_closed(graph, items):
    """No arc from outside the extracted set into it (debug)."""
    for (e, f) in graph.arcs:
        if f in items and e not in items:
            raise InternalInvariantError("extracted set is not arc-closed")


# ---------------------------------------------------------------------------
# Formula-based functionals (enumeration; test support).  For valuations
# without a substitutes guarantee the od/ud formulas are not equivalent to the
# packing/covering definitions, so the predicates below fall back to an
# explicit allocation-existence search over the full demand sets.


def _demand_sets(inst, p, side, max_bundles):
    return [
        enumerate_demand_local(buyer_valuation(inst, i), p, inst.supply, side,
                               max_bundles)
        for i in range(inst.n)
    ]


def overdemandedness(inst, p, S, max_bundles=4096):
    """od(S) = sum_i theta_i(S) - b(S) from enumerated minimal demands."""
    S = frozenset(S)
    dsets = _demand_sets(inst, p, DemandSide.MINIMAL, max_bundles)
    total = 0
    for dset in dsets:
        full = max(sum(z) for z in dset)
        rest = max(sum(q for e, q in enumerate(z) if e not in S) for z in dset)
        total += full - rest
    return total - sum(inst.supply[e] for e in S)


def underdemandedness(inst, p, S, max_bundles=4096):
    """ud(S) = b(S) - sum_i rho-hat_i(S) from enumerated maximal demands."""
    S = frozenset(S)
    dsets = _demand_sets(inst, p, DemandSide.MAXIMAL, max_bundles)
    total = sum(inst.supply[e] for e in S)
    for dset in dsets:
        total -= max(sum(q for e, q in enumerate(z) if e in S) for z in dset)
    return total


def _certified_substitutes(inst):
    return all(getattr(v, "substitutes_family", False) for v in inst.buyers)


def _max_functional(inst, p, fn, max_bundles):
    if inst.m > 16:
        raise EnumerationLimit("too many items for subset enumeration")
    best = 0
    for mask in range(1, 1 << inst.m):
        S = [e for e in range(inst.m) if mask >> e & 1]
        best = max(best, fn(inst, p, S, max_bundles))
    return best


def _exists_allocation(inst, p, covering, max_bundles):
    """Search for a packing (totals <= b) or covering (totals cover b)
    allocation with every bundle drawn from the full demand set."""
    b = inst.supply
    m = inst.m
    reachable = {(0,) * m}
    for i in range(inst.n):
        dset = enumerate_demand_local(buyer_valuation(inst, i), p, b, None,
                                      max_bundles)
        nxt = set()
        for t in reachable:
            for z in dset:
                if covering:
                    nxt.add(tuple(min(a + c, q) for a, c, q in zip(t, z, b)))
                else:
                    t2 = tuple(a + c for a, c in zip(t, z))
                    if all(a <= q for a, q in zip(t2, b)):
                        nxt.add(t2)
        reachable = nxt
        if not reachable:
            return False
    if covering:
        return tuple(b) in reachable
    return bool(reachable)


def is_packing(inst, p, counters=None, max_bundles=4096):
    """Some allocation of preferred bundles never oversells an item.

    Equivalent to "no overdemanded set exists" for substitutes valuations, so
    certified families use the solver-based extraction; table-backed
    instances (possibly not substitutes) get the allocation-existence search.
    """
    if _certified_substitutes(inst):
        return not min_max_overdemanded(inst, p, counters).items
    return _exists_allocation(inst, p, covering=False, max_bundles=max_bundles)


def is_covering(inst, p, counters=None, max_bundles=4096):
    """Some allocation of preferred bundles sells every item's full supply
    (same dual-route policy as is_packing)."""
    if _certified_substitutes(inst):
        return not min_max_underdemanded(inst, p, counters).items
    return _exists_allocation(inst, p, covering=True, max_bundles=max_bundles)


def is_walrasian(inst, p, counters=None, max_bundles=4096):
    """A single allocation of preferred bundles sells the supply exactly.

    For substitutes valuations this is packing and covering together; without
    that guarantee the two searches may use different allocations, so the
    fallback looks for one allocation with totals equal to the supply.
    """
    if _certified_substitutes(inst):
        return is_packing(inst, p, counters, max_bundles) and is_covering(
            inst, p, counters, max_bundles
        )
    b = inst.supply
    reachable = {(0,) * inst.m}
    for i in range(inst.n):
        dset = enumerate_demand_local(buyer_valuation(inst, i), p, b, None,
                                      max_bundles)
        nxt = set()
        for t in reachable:
            for z in dset:
                t2 = tuple(a + c for a, c in zip(t, z))
                if all(a <= q for a, q in zip(t2, b)):
                    nxt.add(t2)
        reachable = nxt
    return tuple(b) in reachable


def lyapunov(inst, p, counters=None):
    """L(p) = sum_i V_i(p) + <p, b>; its minimizers are the Walrasian prices."""
    total = dot(p, inst.supply)
    for i in range(inst.n):
        v, _, _ = indirect_utility(buyer_valuation(inst, i), p, inst.supply,
                                   counters)
        total += v
    return total
