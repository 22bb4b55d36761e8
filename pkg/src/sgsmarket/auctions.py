"""Dynamic auction drivers over the integer price lattice.

Four drivers: ascending (to the minimal Walrasian prices), descending (to the
maximal ones), two-phase (ascend then descend from any start) and greedy
(steeper of the two steps each round).  Each produces a full per-round trace
and, on Walrasian termination, an allocation extracted by the
packing-meets-covering repair loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core_model import Allocation, NotWalrasian, RoundLimitExceeded
from .demand_sets import (
    lyapunov,
    min_max_overdemanded,
    min_max_underdemanded,
)
from .polymatroid_sum import solve
from .valuations import (
    DemandSide,
    OracleCounters,
    buyer_valuation,
    utility,
    value,
)


@dataclass
class Round:
    index: int
    direction: int  # +1 or -1
    items: frozenset
    magnitude: int
    lyapunov_before: int
    lyapunov_after: int
    prices_after: tuple
    counters: OracleCounters


@dataclass
class AuctionTrace:
    mode: str
    start: tuple
    rounds: list = field(default_factory=list)
    final_prices: tuple = None
    walrasian: bool = None
    allocation: Allocation = None
    counters: OracleCounters = None


def default_round_limit(inst):
    """Generous multiple of the pseudo-polynomial bound; converts
    non-substitutes divergence into a clean error."""
    top = max(value(buyer_valuation(inst, i), inst.supply) for i in range(inst.n))
    return 4 * inst.n * inst.m * (top + 1)


def descending_start(inst):
    """Uniform price above any buyer's value for the whole supply."""
    top = max(value(buyer_valuation(inst, i), inst.supply) for i in range(inst.n))
    return (top + 1,) * inst.m


def _apply_step(p, items, direction):
    return tuple(q + direction * (1 if e in items else 0) for e, q in enumerate(p))


def _record(inst, trace, p_old, p_new, report, direction, counters):
    trace.rounds.append(
        Round(
            index=len(trace.rounds),
            direction=direction,
            items=report.items,
            magnitude=report.magnitude,
            lyapunov_before=lyapunov(inst, p_old),
            lyapunov_after=lyapunov(inst, p_new),
            prices_after=p_new,
            counters=counters.snapshot(),
        )
    )


def _finalize(inst, trace, p, counters, extract=True):
    from .demand_sets import is_walrasian

    trace.final_prices = p
    trace.walrasian = is_walrasian(inst, p, counters)
    if extract and trace.walrasian:
        trace.allocation = extract_allocation(inst, p, counters)
    trace.counters = counters.snapshot()
    return p, trace


def ascending(inst, start=None, counters=None, round_limit=None, extract=True):
    """Raise prices on the minimal maximal overdemanded set until none
    exists; from a start below the minimal Walrasian prices this terminates
    at exactly those prices."""
    counters = counters or OracleCounters()
    p = start if start is not None else (0,) * inst.m
    limit = round_limit if round_limit is not None else default_round_limit(inst)
    trace = AuctionTrace(mode="ascending", start=p)
    while True:
        report = min_max_overdemanded(inst, p, counters)
        if not report.items:
            return _finalize(inst, trace, p, counters, extract)
        if len(trace.rounds) >= limit:
            raise RoundLimitExceeded(
                f"ascending auction exceeded {limit} rounds (input is likely "
                "not strong gross substitutes)"
            )
        p_new = _apply_step(p, report.items, +1)
        _record(inst, trace, p, p_new, report, +1, counters)
        p = p_new


def descending(inst, start=None, counters=None, round_limit=None, extract=True):
    """Lower prices on the minimal maximal underdemanded set until none
    exists; from a start above the maximal Walrasian prices this terminates
    at exactly those prices."""
    counters = counters or OracleCounters()
    p = start if start is not None else descending_start(inst)
    limit = round_limit if round_limit is not None else default_round_limit(inst)
    trace = AuctionTrace(mode="descending", start=p)
    while True:
        report = min_max_underdemanded(inst, p, counters)
        if not report.items:
            return _finalize(inst, trace, p, counters, extract)
        if len(trace.rounds) >= limit:
            raise RoundLimitExceeded(
                f"descending auction exceeded {limit} rounds (input is likely "
                "not strong gross substitutes)"
            )
        p_new = _apply_step(p, report.items, -1)
        _record(inst, trace, p, p_new, report, -1, counters)
        p = p_new


def two_phase(inst, start, counters=None, round_limit=None, extract=True):
    """Ascend while an overdemanded set exists, then descend while an
    underdemanded set exists; Walrasian from any start."""
    counters = counters or OracleCounters()
    p = tuple(start)
    limit = round_limit if round_limit is not None else default_round_limit(inst)
    trace = AuctionTrace(mode="two_phase", start=p)
    while True:
        report = min_max_overdemanded(inst, p, counters)
        if not report.items:
            break
        if len(trace.rounds) >= limit:
            raise RoundLimitExceeded(f"two-phase auction exceeded {limit} rounds")
        p_new = _apply_step(p, report.items, +1)
        _record(inst, trace, p, p_new, report, +1, counters)
        p = p_new
    while True:
        report = min_max_underdemanded(inst, p, counters)
        if not report.items:
            return _finalize(inst, trace, p, counters, extract)
        if len(trace.rounds) >= limit:
            raise RoundLimitExceeded(f"two-phase auction exceeded {limit} rounds")
        p_new = _apply_step(p, report.items, -1)
        _record(inst, trace, p, p_new, report, -1, counters)
        p = p_new


def greedy(inst, start, counters=None, round_limit=None, extract=True):
    """Each round take the step (up on the overdemanded set or down on the
    underdemanded one) with the larger magnitude; ties increase."""
    counters = counters or OracleCounters()
    p = tuple(start)
    limit = round_limit if round_limit is not None else default_round_limit(inst)
    trace = AuctionTrace(mode="greedy", start=p)
    while True:
        over = min_max_overdemanded(inst, p, counters)
        under = min_max_underdemanded(inst, p, counters)
        if not over.items and not under.items:
            return _finalize(inst, trace, p, counters, extract)
        if len(trace.rounds) >= limit:
            raise RoundLimitExceeded(f"greedy auction exceeded {limit} rounds")
        if over.items and over.magnitude >= under.magnitude:
            report, direction = over, +1
        else:
            report, direction = under, -1
        p_new = _apply_step(p, report.items, direction)
        _record(inst, trace, p, p_new, report, direction, counters)
        p = p_new


def extract_allocation(inst, p, counters=None, max_steps=None):
    """Turn Walrasian prices into a Walrasian allocation.

    Seeds: a packing allocation from the minimal-side sum optimum and a
    covering one from the maximal-side optimum.  The repair loop moves one
    unit of an under-covered item into the packing allocation via the
    M-natural exchange conditions, strictly decreasing the total distance to
    the covering seed, until the packing allocation covers as well.
    """
    from .demand_sets import is_walrasian

    counters = counters or OracleCounters()
    if not is_walrasian(inst, p, counters):
        raise NotWalrasian(f"prices {p} are not Walrasian")
    b = inst.supply
    m, n = inst.m, inst.n
    vals = [buyer_valuation(inst, i) for i in range(n)]
    packing = [list(z) for z in solve(inst, p, DemandSide.MINIMAL, counters=counters).bundles]
    covering = [tuple(z) for z in solve(inst, p, DemandSide.MAXIMAL, counters=counters).bundles]

    def totals(bundles):
        return [sum(z[e] for z in bundles) for e in range(m)]

    def distance():
        return sum(
            abs(packing[i][e] - covering[i][e]) for i in range(n) for e in range(m)
        )

    if max_steps is None:
        max_steps = distance() + 1
    steps = 0
    while True:
        t = totals(packing)
        deficient = [e for e in range(m) if t[e] < b[e]]
        if not deficient:
            break
        steps += 1
        if steps > max_steps:
            raise NotWalrasian("allocation repair loop failed to make progress")
        e = deficient[0]
        j = next(i for i in range(n) if packing[i][e] < covering[i][e])
        before = distance()
        _repair_step(vals[j], p, packing[j], covering[j], e, b, counters)
        if distance() >= before:
            raise NotWalrasian("allocation repair loop failed to make progress")
    bundles = tuple(tuple(z) for z in packing)
    if totals(bundles) != list(b):
        raise NotWalrasian("repaired allocation does not match supply")
    return Allocation(bundles=bundles)


def _repair_step(v, p, y, z, e, b, counters):
    """One M-natural exchange moving y one unit toward z at item e.

    y (mutable) is the packing bundle, z the covering one, with y(e) < z(e);
    both maximize the buyer's utility, so whichever exchange condition holds
    keeps y preferred.
    """
    uy = utility(v, p, tuple(y), counters)
    uz = utility(v, p, tuple(z), counters)
    y_up = list(y)
    y_up[e] += 1
    z_dn = list(z)
    z_dn[e] -= 1
    if (
        utility(v, p, tuple(z_dn), counters) + utility(v, p, tuple(y_up), counters)
        >= uz + uy
    ):
        y[e] += 1
        return
    for f in range(len(b)):
        if y[f] <= z[f]:
            continue
        y2 = list(y_up)
        y2[f] -= 1
        z2 = list(z_dn)
        z2[f] += 1
        if (
            utility(v, p, tuple(z2), counters) + utility(v, p, tuple(y2), counters)
            >= uz + uy
        ):
            y[e] += 1
            y[f] -= 1
            return
    raise NotWalrasian(
        "no exchange condition applies; valuation is not strong gross substitutes"
    )
