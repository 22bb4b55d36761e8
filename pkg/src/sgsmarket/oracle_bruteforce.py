"""Exhaustive oracles for desk-scale instances.

Everything the main modules claim is recomputed here from the definitions:
demand sets by box enumeration, the polymatroid sum by trying all bundle
tuples and all dual sets, Walrasian prices by a full grid sweep with an
allocation search, and the minimal maximal over/underdemanded sets by
intersecting all maximizers.  Shares only core_model and the value oracle
with the solver code paths.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core_model import EnumerationLimit, dot, meet_join
from .valuations import (
    DemandSide,
    Valuation,
    box_size,
    buyer_valuation,
    iter_box,
)


@dataclass(frozen=True)
class EnumerationBudget:
    """Operations refuse rather than truncate when a cap is exceeded."""

    max_bundles: int = 4096
    max_price: int = 16
    max_subsets: int = 65536


DEFAULT_BUDGET = EnumerationBudget()


def _check_box(b, budget):
    if box_size(b) > budget.max_bundles:
        raise EnumerationLimit(
            f"bundle box larger than the budget of {budget.max_bundles}"
        )


def enumerate_demand(v, p, b, side, budget=DEFAULT_BUDGET, cross_check=False):
    """Exact demand set by enumeration.

    side None returns the full preferred set; Minimal/Maximal filter by
    componentwise minimality/maximality.  With cross_check=True the
    cardinality-based filter must agree (true for substitutes valuations).
    """
    _check_box(b, budget)
    best = None
    preferred = []
    for z in iter_box(b):
        u = v.value(z) - dot(p, z)
        if best is None or u > best:
            best, preferred = u, [z]
        elif u == best:
            preferred.append(z)
    if side is None:
        return set(preferred)
    if side is DemandSide.MINIMAL:
        out = {
            z
            for z in preferred
            if not any(y != z and all(a <= c for a, c in zip(y, z))
                       for y in preferred)
        }
        by_card = {z for z in preferred if sum(z) == min(map(sum, preferred))}
    else:
        out = {
            z
            for z in preferred
            if not any(y != z and all(a >= c for a, c in zip(y, z))
                       for y in preferred)
        }
        by_card = {z for z in preferred if sum(z) == max(map(sum, preferred))}
    if cross_check and out != by_card:
        raise AssertionError(
            f"componentwise and cardinality demand filters disagree at {p}: "
            f"{sorted(out)} vs {sorted(by_card)}"
        )
    return out


def brute_polymatroid_sum(inst, p, side, budget=DEFAULT_BUDGET):
    """Primal max over all demand-set tuples and dual min over all item sets;
    equality is asserted.  Returns (value, witness tuple, dual set)."""
    b = inst.supply
    m, n = inst.m, inst.n
    dsets = [
        sorted(enumerate_demand(buyer_valuation(inst, i), p, b, side, budget))
        for i in range(n)
    ]
    tuples = 1
    for dset in dsets:
        tuples *= len(dset)
    if tuples > budget.max_subsets:
        raise EnumerationLimit("too many bundle tuples for the primal sweep")
    best_value, best_witness = None, None
    for combo in itertools.product(*dsets):
        totals = [sum(z[e] for z in combo) for e in range(m)]
        val = sum(min(t, q) for t, q in zip(totals, b))
        if best_value is None or val > best_value:
            best_value, best_witness = val, combo
    if 1 << m > budget.max_subsets:
        raise EnumerationLimit("too many item sets for the dual sweep")
    best_dual, best_set = None, None
    for mask in range(1 << m):
        S = frozenset(e for e in range(m) if mask >> e & 1)
        rest = [e for e in range(m) if e not in S]
        dual = sum(b[e] for e in S)
        for dset in dsets:
            dual += max(sum(z[e] for e in rest) for z in dset)
        if best_dual is None or dual < best_dual:
            best_dual, best_set = dual, S
    assert best_value == best_dual, (
        f"min-max gap at {p}: primal {best_value}, dual {best_dual}"
    )
    return best_value, best_witness, best_set


def brute_min_max_set(inst, p, kind, budget=DEFAULT_BUDGET):
    """Intersection of all maximizers of od (kind 'over') or ud ('under');
    returns (item set, maximal magnitude).  Empty set when the maximum is
    not positive."""
    b = inst.supply
    m, n = inst.m, inst.n
    if 1 << m > budget.max_subsets:
        raise EnumerationLimit("too many item sets")
    side = DemandSide.MINIMAL if kind == "over" else DemandSide.MAXIMAL
    dsets = [
        sorted(enumerate_demand(buyer_valuation(inst, i), p, b, side, budget))
        for i in range(n)
    ]
    best, argmax = None, []
    for mask in range(1 << m):
        S = frozenset(e for e in range(m) if mask >> e & 1)
        if kind == "over":
            rest = [e for e in range(m) if e not in S]
            val = -sum(b[e] for e in S)
            for dset in dsets:
                full = max(sum(z) for z in dset)
                val += full - max(sum(z[e] for e in rest) for z in dset)
        else:
            val = sum(b[e] for e in S)
            for dset in dsets:
                val -= max(sum(z[e] for e in S) for z in dset)
        if best is None or val > best:
            best, argmax = val, [S]
        elif val == best:
            argmax.append(S)
    if best <= 0:
        return frozenset(), best
    out = frozenset.intersection(*argmax)
    assert out in argmax, "maximizers are not closed under intersection"
    return out, best


@dataclass
class PriceSurvey:
    """Status of every grid price vector of one instance."""

    grid_bound: int  # prices swept over [0, grid_bound]^m
    walrasian: list
    packing: list
    covering: list


def _grid_bound(inst):
    return max(buyer_valuation(inst, i).value(inst.supply) for i in range(inst.n))


def price_survey(inst, budget=DEFAULT_BUDGET):
    """Classify every price vector on the grid [0, max_i v_i(b)]^m as
    Walrasian / packing / covering by explicit allocation search."""
    b = inst.supply
    m, n = inst.m, inst.n
    _check_box(b, budget)
    bound = _grid_bound(inst)
    if bound + 1 > budget.max_price:
        raise EnumerationLimit(f"price grid side {bound + 1} over budget")
    if (bound + 1) ** m > 4 * budget.max_subsets:
        raise EnumerationLimit("price grid too large")

    bundles = list(iter_box(b))
    Z = np.array(bundles, dtype=np.int64)
    vals = [
        np.array([buyer_valuation(inst, i).value(z) for z in bundles],
                 dtype=np.int64)
        for i in range(n)
    ]
    prices = list(itertools.product(range(bound + 1), repeat=m))
    P = np.array(prices, dtype=np.int64)
    cost = P @ Z.T  # grid x bundles
    demand_idx = []
    for i in range(n):
        util = vals[i][None, :] - cost
        best = util.max(axis=1, keepdims=True)
        demand_idx.append([np.nonzero(row)[0] for row in util == best])

    survey = PriceSurvey(bound, [], [], [])
    cache = {}
    for g, p in enumerate(prices):
        profile = tuple(tuple(demand_idx[i][g]) for i in range(n))
        if profile not in cache:
            dsets = [[bundles[k] for k in idx] for idx in profile]
            cache[profile] = _allocation_statuses(dsets, b)
        walr, pack, cover = cache[profile]
        if walr:
            survey.walrasian.append(p)
        if pack:
            survey.packing.append(p)
        if cover:
            survey.covering.append(p)
    return survey


def _allocation_statuses(dsets, b):
    """(walrasian, packing, covering) existence flags for demand sets dsets."""
    m = len(b)
    # packing / walrasian: totals never exceed the supply
    reachable = {(0,) * m}
    for dset in dsets:
        nxt = set()
        for t in reachable:
            for z in dset:
                t2 = tuple(a + c for a, c in zip(t, z))
                if all(a <= q for a, q in zip(t2, b)):
                    nxt.add(t2)
        reachable = nxt
        if not reachable:
            break
    packing = bool(reachable)
    walrasian = tuple(b) in reachable
    # covering: totals capped at the supply must reach it exactly
    reachable = {(0,) * m}
    for dset in dsets:
        nxt = set()
        for t in reachable:
            for z in dset:
                nxt.add(tuple(min(a + c, q) for a, c, q in zip(t, z, b)))
        reachable = nxt
    covering = tuple(b) in reachable
    return walrasian, packing, covering


def brute_walrasian(inst, budget=DEFAULT_BUDGET, survey=None):
    """All Walrasian grid prices plus the extreme members.

    Returns (walrasian list, minimal member or None, maximal member or None);
    an extreme is reported only when the componentwise bound is itself
    Walrasian (always the case for substitutes valuations).
    """
    if survey is None:
        survey = price_survey(inst, budget)
    found = survey.walrasian
    if not found:
        return [], None, None
    lo = tuple(min(p[e] for p in found) for e in range(inst.m))
    hi = tuple(max(p[e] for p in found) for e in range(inst.m))
    pool = set(found)
    return found, (lo if lo in pool else None), (hi if hi in pool else None)


def walrasian_lattice_closed(prices):
    """Closure of a price set under componentwise meet and join."""
    pool = set(prices)
    for p in prices:
        for q in prices:
            meet, join = meet_join(p, q)
            if meet not in pool or join not in pool:
                return False
    return True


def check_packing_extremes(inst, budget=DEFAULT_BUDGET, survey=None):
    """Every packing grid price dominates the minimal Walrasian prices."""
    if survey is None:
        survey = price_survey(inst, budget)
    _, p_min, _ = brute_walrasian(inst, budget, survey)
    if p_min is None:
        return False
    return all(
        all(a >= c for a, c in zip(p, p_min)) for p in survey.packing
    )


def check_covering_extremes(inst, budget=DEFAULT_BUDGET, survey=None):
    """Every covering grid price is dominated by the maximal Walrasian
    prices."""
    if survey is None:
        survey = price_survey(inst, budget)
    _, _, p_max = brute_walrasian(inst, budget, survey)
    if p_max is None:
        return False
    return all(
        all(a <= c for a, c in zip(p, p_max)) for p in survey.covering
    )


# ---------------------------------------------------------------------------
# Monotonicity harness


@dataclass(frozen=True)
class SupplyDecrease:
    item: int


@dataclass(frozen=True)
class DemandDecrease:
    buyer: int


@dataclass
class MonotonicityVerdict:
    ok: bool
    before: tuple  # (p_min, p_max)
    after: tuple
    compared_items: tuple
    detail: str = ""


class _DropItem(Valuation):
    """View of a valuation with one item removed from the ground set."""

    def __init__(self, inner, dropped, m):
        self.inner = inner
        self.dropped = dropped
        self.m = m
        self.substitutes_family = inner.substitutes_family

    def value(self, z):
        full = list(z[: self.dropped]) + [0] + list(z[self.dropped :])
        return self.inner.value(tuple(full))


def monotonicity_harness(inst, perturbation, budget=DEFAULT_BUDGET):
    """Extreme Walrasian prices must move weakly up when supply shrinks and
    weakly down when a demand cap shrinks (surviving items compared)."""
    from .core_model import Instance

    before = brute_walrasian(inst, budget)
    _, lo0, hi0 = before
    if lo0 is None or hi0 is None:
        return MonotonicityVerdict(
            False, (lo0, hi0), (None, None), (), "no Walrasian extremes before"
        )

    if isinstance(perturbation, SupplyDecrease):
        e = perturbation.item
        if inst.supply[e] > 1:
            supply = tuple(
                q - 1 if idx == e else q for idx, q in enumerate(inst.supply)
            )
            new_inst = Instance(supply, inst.buyers, inst.demand_caps)
            compared = tuple(range(inst.m))
            project = {idx: idx for idx in compared}
        elif inst.m == 1:
            return MonotonicityVerdict(
                True, (lo0, hi0), (lo0, hi0), (), "no surviving items; skipped"
            )
        else:
            supply = tuple(q for idx, q in enumerate(inst.supply) if idx != e)
            buyers = tuple(
                _DropItem(buyer_valuation(inst, i), e, inst.m - 1)
                for i in range(inst.n)
            )
            new_inst = Instance(supply, buyers)
            compared = tuple(idx for idx in range(inst.m) if idx != e)
            project = {idx: (idx if idx < e else idx - 1) for idx in compared}
        expect_up = True
    elif isinstance(perturbation, DemandDecrease):
        i = perturbation.buyer
        caps = list(inst.demand_caps or [sum(inst.supply)] * inst.n)
        if caps[i] == 0:
            return MonotonicityVerdict(
                True, (lo0, hi0), (lo0, hi0), (), "cap already zero; skipped"
            )
        caps[i] -= 1
        new_inst = Instance(inst.supply, inst.buyers, tuple(caps))
        compared = tuple(range(inst.m))
        project = {idx: idx for idx in compared}
        expect_up = False
    else:
        raise ValueError(f"unknown perturbation {perturbation!r}")

    after = brute_walrasian(new_inst, budget)
    _, lo1, hi1 = after
    if lo1 is None or hi1 is None:
        return MonotonicityVerdict(
            False, (lo0, hi0), (lo1, hi1), compared, "no Walrasian extremes after"
        )
    ok = True
    for idx in compared:
        jdx = project[idx]
        if expect_up:
            ok = ok and lo1[jdx] >= lo0[idx] and hi1[jdx] >= hi0[idx]
        else:
            ok = ok and lo1[jdx] <= lo0[idx] and hi1[jdx] <= hi0[idx]
    return MonotonicityVerdict(ok, (lo0, hi0), (lo1, hi1), compared)
