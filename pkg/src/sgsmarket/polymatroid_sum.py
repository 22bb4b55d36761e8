"""Push-relabel solver for the polymatroid sum over n demand-set polymatroids.

Maximizes sum_e min(sum_i z_i(e), b(e)) over tuples of minimal (or maximal)
preferred bundles.  Two scan strategies: a unit-supply fast path (matroid
union) and a lexicographic multi-supply implementation.  Both are
instrumented with the complexity counters asserted by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .core_model import InternalInvariantError, exchange
from .valuations import (
    OracleCounters,
    buyer_valuation,
    demand,
    exchange_weight,
    rank,
    tight_set,
)


class SumMode(Enum):
    UNIT_SUPPLY = "unit_supply"
    MULTI_SUPPLY = "multi_supply"


@dataclass
class LevelState:
    """Mutable push-relabel state for one solver run."""

    levels: list  # item -> level in [0, m]
    pointers: list  # item -> flat lexicographic pointer in [0, n*m]
    relabels: int = 0
    saturating_pushes: int = 0
    nonsaturating_pushes: int = 0
    pushes_per_level: dict = field(default_factory=dict)
    steps: int = 0


@dataclass
class SumSolution:
    """Optimal bundles, final levels, dual certificate set and counters."""

    bundles: tuple
    levels: tuple
    certificate_set: frozenset
    value: int
    relabels: int
    saturating_pushes: int
    nonsaturating_pushes: int
    oracle_counters: OracleCounters


def solution_value(totals, b):
    return sum(min(t, q) for t, q in zip(totals, b))


def select_work_item(levels, totals, b, m):
    """Undersold item of maximal level < m, ties to the lowest index."""
    best = None
    for e in range(m):
        if totals[e] < b[e] and levels[e] < m:
            if best is None or levels[e] > levels[best]:
                best = e
    return best


def certificate_set(levels, m):
    """Items below the first empty level (smallest such level)."""
    occupied = set(levels)
    ell = next(k for k in range(m + 1) if k not in occupied)
    return frozenset(e for e in range(m) if levels[e] < ell)


def check_certificate(bundles, S, inst, p, side, max_bundles=4096):
    """Verify the min-max optimality certificate (z, S).

    Items of S are sold out, no item off S is oversold, and every bundle
    spans the complement (rank via enumeration; test support).
    """
    m = inst.m
    totals = [sum(z[e] for z in bundles) for e in range(m)]
    for e in range(m):
        if e in S and totals[e] < inst.supply[e]:
            return False
        if e not in S and totals[e] > inst.supply[e]:
            return False
    complement = [e for e in range(m) if e not in S]
    for i, z in enumerate(bundles):
        v = buyer_valuation(inst, i)
        rho = rank(v, p, complement, side, inst.supply, max_bundles)
        if sum(z[e] for e in complement) != rho:
            return False
    return True


def solve(inst, p, side, mode=None, counters=None, debug=False):
    """Run the push-relabel algorithm and return an optimal SumSolution.

    Initial bundles come from one demand-oracle call per buyer.  Levels start
    at zero; the loop pushes units of an undersold item in along eligible
    exchanges one level down, or relabels when none exists.
    """
    if counters is None:
        counters = OracleCounters()
    m, n, b = inst.m, inst.n, inst.supply
    if mode is None:
        mode = SumMode.UNIT_SUPPLY if all(q == 1 for q in b) else SumMode.MULTI_SUPPLY
    if mode is SumMode.UNIT_SUPPLY and any(q != 1 for q in b):
        raise ValueError("unit-supply mode requires b = 1 everywhere")

    vals = [buyer_valuation(inst, i) for i in range(n)]
    bundles = [list(demand(vals[i], p, b, side, counters)) for i in range(n)]
    totals = [sum(z[e] for z in bundles) for e in range(m)]
    state = LevelState(levels=[0] * m, pointers=[0] * m)
    # insertion levels for the unit-supply potential assertion
    insert_level = [dict() for _ in range(n)]

    step_guard = 8 * (m + 1) * (m + 1) * (n * m + 2)
    while True:
        e = select_work_item(state.levels, totals, b, m)
        if e is None:
            break
        state.steps += 1
        if state.steps > step_guard:
            raise InternalInvariantError("push-relabel did not terminate")
        if mode is SumMode.MULTI_SUPPLY:
            _scan_multi(
                inst, p, side, vals, bundles, totals, state, e, counters, debug,
                insert_level,
            )
        else:
            _scan_unit(
                inst, p, side, vals, bundles, totals, state, e, counters, debug,
                insert_level,
            )
        if debug:
            _assert_level_invariants(inst, p, side, vals, bundles, totals, state)
    if state.relabels > m * (m + 1):
        raise InternalInvariantError("relabel bound exceeded")

    levels = tuple(state.levels)
    sol = SumSolution(
        bundles=tuple(tuple(z) for z in bundles),
        levels=levels,
        certificate_set=certificate_set(state.levels, m),
        value=solution_value(totals, b),
        relabels=state.relabels,
        saturating_pushes=state.saturating_pushes,
        nonsaturating_pushes=state.nonsaturating_pushes,
        oracle_counters=counters.snapshot(),
    )
    if sol.nonsaturating_pushes > m ** 3:
        raise InternalInvariantError("non-saturating push bound exceeded")
    return sol


def _apply_push(bundles, totals, b, state, i, e, f, w, insert_level):
    """Perform one push; returns True when e's deficit is now zero."""
    deficit = b[e] - totals[e]
    alpha = min(deficit, w)
    bundles[i] = list(exchange(tuple(bundles[i]), e, f, alpha, b))
    totals[e] += alpha
    totals[f] -= alpha
    level = state.levels[e]
    state.pushes_per_level[level] = state.pushes_per_level.get(level, 0) + 1
    insert_level[i][e] = level
    if deficit < w:
        state.nonsaturating_pushes += 1
        return True
    state.saturating_pushes += 1
    return totals[e] == b[e]


def _scan_multi(inst, p, side, vals, bundles, totals, state, e, counters, debug,
                insert_level):
    """One selection of item e: scan buyer-item pairs lexicographically from
    the stored pointer, pushing until e is filled or the pairs run out."""
    m, n, b = inst.m, inst.n, inst.supply
    theta_e = state.levels[e]
    pushed = False
    k = state.pointers[e]
    while k < n * m:
        i, f = divmod(k, m)
        if (
            f != e
            and state.levels[f] == theta_e - 1
            and bundles[i][f] > 0
            and bundles[i][e] < b[e]
        ):
            if debug:
                _assert_lexicographic_minimality(
                    inst, p, side, vals, bundles, state, e, k, counters
                )
            w = exchange_weight(
                vals[i], p, tuple(bundles[i]), e, f, side, b, counters, debug
            )
            if w > 0:
                pushed = True
                deficit = b[e] - totals[e]
                filled = _apply_push(bundles, totals, b, state, i, e, f, w,
                                     insert_level)
                if deficit < w:
                    state.pointers[e] = k  # non-saturating: revisit this pair
                else:
                    state.pointers[e] = k + 1  # saturating: next pair
                if filled:
                    return
                k = state.pointers[e]
                continue
        k += 1
    if not pushed:
        _relabel(state, e, inst.m)
    else:
        state.pointers[e] = n * m


def _scan_unit(inst, p, side, vals, bundles, totals, state, e, counters, debug,
               insert_level):
    """Unit-supply scan: at level 1 try all buyer-item pairs; at level >= 2
    each sold item one level down has a unique owner."""
    m, n, b = inst.m, inst.n, inst.supply
    theta_e = state.levels[e]
    if theta_e == 0:
        _relabel(state, e, m)
        return
    if theta_e == 1:
        candidates = (
            (i, f)
            for i in range(n)
            for f in range(m)
            if f != e and state.levels[f] == 0 and bundles[i][f] > 0
        )
    else:
        def owner_pairs():
            for f in range(m):
                if f == e or state.levels[f] != theta_e - 1 or totals[f] == 0:
                    continue
                i = next(j for j in range(n) if bundles[j][f] > 0)
                yield i, f

        candidates = owner_pairs()
    phi_before = _phi_potentials(insert_level, state.levels, m) if debug else None
    for i, f in candidates:
        if bundles[i][e] >= b[e]:
            continue
        w = exchange_weight(
            vals[i], p, tuple(bundles[i]), e, f, side, b, counters, debug
        )
        if w > 0:
            _apply_push(bundles, totals, b, state, i, e, f, w, insert_level)
            if debug:
                phi_after = _phi_potentials(insert_level, state.levels, m)
                for ell in range(1, m + 1):
                    if phi_after[ell] < phi_before[ell]:
                        raise InternalInvariantError(
                            "unit-supply potential decreased"
                        )
            if state.pushes_per_level.get(theta_e, 0) > m:
                raise InternalInvariantError("unit-supply per-level push bound")
            return
    _relabel(state, e, m)


def _relabel(state, e, m):
    if state.levels[e] >= m:
        raise InternalInvariantError("cannot relabel past the top level")
    state.levels[e] += 1
    state.pointers[e] = 0
    state.relabels += 1


def _phi_potentials(insert_level, levels, m):
    """Phi(level) = number of owned items inserted at that level or higher."""
    phi = {ell: 0 for ell in range(m + 1)}
    for per_buyer in insert_level:
        for _, at in per_buyer.items():
            for ell in range(1, at + 1):
                phi[ell] += 1
    return phi


def _assert_level_invariants(inst, p, side, vals, bundles, totals, state):
    """Replay L1 and L2 from the definitions (debug only)."""
    m, b = inst.m, inst.supply
    for e in range(m):
        if totals[e] > b[e] and state.levels[e] != 0:
            raise InternalInvariantError(f"oversold item {e} has level > 0")
    for i, z in enumerate(bundles):
        for e in range(m):
            tset = tight_set(vals[i], p, tuple(z), e, side, b)
            theta_min = min(state.levels[f] for f in tset)
            if theta_min < state.levels[e] - 1:
                raise InternalInvariantError(
                    f"level invariant violated at buyer {i}, item {e}"
                )


def _assert_lexicographic_minimality(inst, p, side, vals, bundles, state, e, k,
                                     counters):
    """Shadow full scan: no eligible pair lexicographically before the
    pointer (debug replay of the monotonicity lemma)."""
    m, n, b = inst.m, inst.n, inst.supply
    theta_e = state.levels[e]
    for kk in range(k):
        i, f = divmod(kk, m)
        if f == e or state.levels[f] != theta_e - 1:
            continue
        if bundles[i][f] == 0 or bundles[i][e] >= b[e]:
            continue
        w = exchange_weight(vals[i], p, tuple(bundles[i]), e, f, side, b)
        if w > 0:
            raise InternalInvariantError(
                f"eligible pair {(i, f)} precedes pointer for item {e}"
            )
