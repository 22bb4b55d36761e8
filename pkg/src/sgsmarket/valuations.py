"""Substitutes valuation families and the buyer oracles consumed by the solver.

Three oracles: value, demand (DO) and exchange_weight (ExO), plus validity
checkers (M-natural concavity, M-convexity of enumerated demand sets) and the
two instance transformations (demand truncation, unit-supply copying).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

from .core_model import (
    EnumerationLimit,
    Instance,
    InternalInvariantError,
    NotPreferredBundle,
    dot,
    exchange,
)


class DemandSide(Enum):
    """Selects the minimal or the maximal preferred-bundle set."""

    MINIMAL = "minimal"
    MAXIMAL = "maximal"


@dataclass
class OracleCounters:
    """Accumulators for demand-oracle, exchange-oracle and value queries."""

    do_calls: int = 0
    exo_calls: int = 0
    value_calls: int = 0

    def snapshot(self):
        return OracleCounters(self.do_calls, self.exo_calls, self.value_calls)


# ---------------------------------------------------------------------------
# Matroids


class Matroid:
    """Matroid on ground set {0, .., m-1} given by an independence oracle."""

    def __init__(self, m):
        self.m = m

    def independent(self, items):
        raise NotImplementedError

    def rank(self, items):
        picked = []
        for e in sorted(items):
            if self.independent(picked + [e]):
                picked.append(e)
        return len(picked)


class UniformMatroid(Matroid):
    def __init__(self, m, rank):
        super().__init__(m)
        self.k = rank

    def independent(self, items):
        return len(set(items)) == len(items) and len(items) <= self.k


class PartitionMatroid(Matroid):
    def __init__(self, m, blocks, caps):
        super().__init__(m)
        self.blocks = [frozenset(blk) for blk in blocks]
        self.caps = list(caps)
        covered = set().union(*self.blocks) if self.blocks else set()
        if covered != set(range(m)):
            raise ValueError("blocks must partition the ground set")
        if sum(len(blk) for blk in self.blocks) != m:
            raise ValueError("blocks must be disjoint")

    def independent(self, items):
        s = set(items)
        if len(s) != len(items):
            return False
        return all(len(s & blk) <= cap for blk, cap in zip(self.blocks, self.caps))


class GraphicMatroid(Matroid):
    """Edges of a multigraph as ground set; independent sets are forests."""

    def __init__(self, m, edges):
        super().__init__(m)
        if len(edges) != m:
            raise ValueError("one edge per ground-set element required")
        self.edges = [tuple(uv) for uv in edges]

    def independent(self, items):
        if len(set(items)) != len(items):
            return False
        parent = {}

        def find(v):
            while parent.setdefault(v, v) != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for e in items:
            u, v = self.edges[e]
            ru, rv = find(u), find(v)
            if ru == rv:
                return False
            parent[ru] = rv
        return True


# ---------------------------------------------------------------------------
# Valuation families


class Valuation:
    """Base class: a monotone integer valuation with v(0) = 0.

    substitutes_family is True when the construction guarantees strong gross
    substitutes; Table valuations may or may not be substitutes.
    """

    substitutes_family = False

    def value(self, z):
        raise NotImplementedError


class UnitDemand(Valuation):
    """Buyer wants at most one unit overall: v(z) = max weight in supp(z)."""

    substitutes_family = True

    def __init__(self, weights):
        self.weights = tuple(weights)
        _check_weights(self.weights)

    def value(self, z):
        vals = [w for w, q in zip(self.weights, z) if q > 0]
        return max(vals, default=0)


class Additive(Valuation):
    substitutes_family = True

    def __init__(self, weights):
        self.weights = tuple(weights)
        _check_weights(self.weights)

    def value(self, z):
        return dot(self.weights, z)


class WeightedMatroidRank(Valuation):
    """v(z) = max total weight of an independent set inside supp(z)."""

    substitutes_family = True

    def __init__(self, matroid, weights):
        self.matroid = matroid
        self.weights = tuple(weights)
        _check_weights(self.weights)
        if len(self.weights) != matroid.m:
            raise ValueError("weight vector length must match ground set")

    def value(self, z):
        order = sorted(
            (e for e in range(len(z)) if z[e] > 0),
            key=lambda e: (-self.weights[e], e),
        )
        picked, total = [], 0
        for e in order:
            if self.matroid.independent(picked + [e]):
                picked.append(e)
                total += self.weights[e]
        return total


class OXS(Valuation):
    """Max-weight matching of the units in z against a fixed right side.

    edges: mapping (item, right_node) -> nonnegative integer weight.
    """

    substitutes_family = True

    def __init__(self, m, right_size, edges):
        self.m = m
        self.right_size = right_size
        self.edges = {}
        for (e, r), w in dict(edges).items():
            if not (0 <= e < m and 0 <= r < right_size):
                raise ValueError("edge endpoint out of range")
            if w < 0:
                raise ValueError("edge weights must be nonnegative")
            if w > 0:
                self.edges[(e, r)] = w

    def value(self, z):
        # Expand units into left slots and augment while the best
        # augmenting path still has positive gain (simple Bellman-Ford
        # search per augmentation; desk scale only).
        left = [e for e in range(self.m) for _ in range(z[e])]
        match_right = [None] * self.right_size  # right -> left slot
        match_left = [None] * len(left)  # left slot -> right
        total = 0
        for _ in range(min(len(left), self.right_size)):
            gain, path = self._best_augmenting_path(left, match_left, match_right)
            if gain <= 0:
                break
            total += gain
            for slot, r in path:
                match_left[slot] = r
                match_right[r] = slot
        return total

    def _best_augmenting_path(self, left, match_left, match_right):
        # dist[slot] = best gain of an alternating path ending by matching
        # this free slot chain; classic Bellman-Ford over slot nodes.
        n_slots = len(left)
        best_gain, best_path = 0, None
        free_slots = [s for s in range(n_slots) if match_left[s] is None]
        # dedupe identical free slots (same item type)
        seen_items = set()
        starts = []
        for s in free_slots:
            if left[s] not in seen_items:
                seen_items.add(left[s])
                starts.append(s)
        for s in starts:
            gain, path = self._search(s, left, match_left, match_right, set(), 0)
            if gain > best_gain:
                best_gain, best_path = gain, path
        return best_gain, best_path or []

    def _search(self, slot, left, match_left, match_right, used, depth):
        if depth > self.right_size:
            return 0, None
        best_gain, best_path = 0, None
        for r in range(self.right_size):
            if r in used:
                continue
            w = self.edges.get((left[slot], r), 0)
            if w == 0:
                continue
            occupant = match_right[r]
            if occupant is None:
                if w > best_gain:
                    best_gain, best_path = w, [(slot, r)]
            else:
                w_old = self.edges.get((left[occupant], r), 0)
                sub_gain, sub_path = self._search(
                    occupant, left, match_left, match_right, used | {r}, depth + 1
                )
                if sub_path is not None:
                    gain = w - w_old + sub_gain
                    if gain > best_gain:
                        best_gain, best_path = gain, [(slot, r)] + sub_path
        return best_gain, best_path


class Table(Valuation):
    """Explicit valuation table on the full box [0, b].

    Monotonicity and v(0) = 0 are validated at construction; substitutes
    validation is opt-in via check_mnat_concave (some fixtures are
    deliberately not substitutes).
    """

    substitutes_family = False

    def __init__(self, box, values):
        self.box = tuple(box)
        self.values = {tuple(k): int(v) for k, v in dict(values).items()}
        for z in iter_box(self.box):
            if z not in self.values:
                raise ValueError(f"table misses bundle {z}")
            if self.values[z] < 0:
                raise ValueError("table values must be nonnegative")
        if self.values[(0,) * len(self.box)] != 0:
            raise ValueError("table must have v(0) = 0")
        for z in iter_box(self.box):
            for e in range(len(self.box)):
                if z[e] < self.box[e]:
                    up = z[:e] + (z[e] + 1,) + z[e + 1 :]
                    if self.values[up] < self.values[z]:
                        raise ValueError("table must be monotone")

    @classmethod
    def from_set_function(cls, m, set_value):
        """Build a unit-box table from a function on item subsets."""
        values = {}
        for z in iter_box((1,) * m):
            s = frozenset(e for e in range(m) if z[e])
            values[z] = set_value(s)
        return cls((1,) * m, values)

    def value(self, z):
        key = tuple(min(q, cap) for q, cap in zip(z, self.box))
        return self.values[key]


class Truncated(Valuation):
    """Demand truncation: v^d(z) = max{v(y) : y <= z, y(E) <= d}."""

    def __init__(self, inner, cap):
        if cap < 0:
            raise ValueError("cap must be nonnegative")
        self.inner = inner
        self.cap = cap
        self.substitutes_family = inner.substitutes_family

    def value(self, z):
        best = 0
        for y in _iter_sub_bundles(z, self.cap):
            best = max(best, self.inner.value(y))
        return best


class CopyProjected(Valuation):
    """Valuation on unit-supply copy items, evaluated through a projection."""

    def __init__(self, inner, projection):
        self.inner = inner
        self.projection = tuple(projection)
        self.substitutes_family = inner.substitutes_family
        self.original_m = max(self.projection) + 1 if self.projection else 0

    def value(self, z):
        proj = [0] * self.original_m
        for copy_item, q in enumerate(z):
            proj[self.projection[copy_item]] += q
        return self.inner.value(tuple(proj))


def _check_weights(weights):
    if any(w < 0 for w in weights):
        raise ValueError("weights must be nonnegative")


def iter_box(b):
    """All integer bundles in [0, b], lexicographically."""
    return itertools.product(*(range(q + 1) for q in b))


def box_size(b):
    size = 1
    for q in b:
        size *= q + 1
    return size


def _iter_sub_bundles(z, cap):
    for y in itertools.product(*(range(q + 1) for q in z)):
        if sum(y) <= cap:
            yield y


def buyer_valuation(inst, i):
    """Buyer i's effective valuation, applying the instance demand cap."""
    v = inst.buyers[i]
    if inst.demand_caps is not None:
        return Truncated(v, inst.demand_caps[i])
    return v


# ---------------------------------------------------------------------------
# Oracles


def value(v, z, counters=None):
    """Value oracle with optional call counting."""
    if counters is not None:
        counters.value_calls += 1
    return v.value(z)


def utility(v, p, z, counters=None):
    return value(v, z, counters) - dot(p, z)


def indirect_utility(v, p, b, counters=None):
    """Greedy evaluation of V(p) plus the minimal/maximal demand cardinality.

    Repeatedly adds one unit of maximal marginal utility (ties to the lowest
    item index); strictly positive marginals count toward min_size, zero
    marginals extend max_size only.  Correct for substitutes valuations;
    other valuations are evaluated by enumeration.
    """
    m = len(b)
    if not getattr(v, "substitutes_family", False):
        best, preferred = None, []
        for z in iter_box(b):
            u = value(v, z, counters) - dot(p, z)
            if best is None or u > best:
                best, preferred = u, [z]
            elif u == best:
                preferred.append(z)
        return best, min(map(sum, preferred)), max(map(sum, preferred))
    z = [0] * m
    best_u = 0
    min_size = 0
    size = 0
    while True:
        best_gain, best_e = None, None
        val_z = value(v, tuple(z), counters)
        for e in range(m):
            if z[e] >= b[e]:
                continue
            z[e] += 1
            gain = value(v, tuple(z), counters) - val_z - p[e]
            z[e] -= 1
            if best_gain is None or gain > best_gain:
                best_gain, best_e = gain, e
        if best_e is None or best_gain < 0:
            break
        z[best_e] += 1
        size += 1
        if best_gain > 0:
            best_u += best_gain
            min_size = size
    return best_u, min_size, size


def demand(v, p, b, side, counters=None):
    """Demand oracle: one minimal or maximal preferred bundle.

    Greedy for substitutes families; valuations without that guarantee fall
    back to enumeration (greedy is not optimal for them), returning the
    lexicographically smallest bundle of the selected demand set.
    """
    if counters is not None:
        counters.do_calls += 1
    if not getattr(v, "substitutes_family", False):
        return min(enumerate_demand_local(v, p, b, side))
    m = len(b)
    z = [0] * m
    while True:
        best_gain, best_e = None, None
        val_z = value(v, tuple(z), counters)
        for e in range(m):
            if z[e] >= b[e]:
                continue
            z[e] += 1
            gain = value(v, tuple(z), counters) - val_z - p[e]
            z[e] -= 1
            if best_gain is None or gain > best_gain:
                best_gain, best_e = gain, e
        if best_e is None:
            break
        if best_gain > 0 or (best_gain == 0 and side is DemandSide.MAXIMAL):
            z[best_e] += 1
        else:
            break
    return tuple(z)


def exchange_weight(v, p, z, e, f, side, b, counters=None, debug=False):
    """Exchange oracle: largest alpha with z - alpha*chi_f + alpha*chi_e
    still in the selected demand set.

    Membership of a candidate is tested by utility equality (exchanges
    preserve cardinality, so staying preferred keeps the bundle minimal or
    maximal).  Binary search over the feasibility interval.
    """
    if counters is not None:
        counters.exo_calls += 1
    if e == f:
        raise ValueError("exchange weight requires distinct items")
    hi = min(z[f], b[e] - z[e])
    if hi <= 0:
        return 0
    u_star = utility(v, p, z, counters)

    def feasible(alpha):
        cand = exchange(z, e, f, alpha, b)
        return utility(v, p, cand, counters) == u_star

    if debug:
        _assert_preferred(v, p, z, side, b, u_star)
        # linear scan; cross-checked against the binary search below
        linear = 0
        for alpha in range(1, hi + 1):
            if feasible(alpha):
                linear = alpha
            else:
                break

    lo, high = 0, hi
    while lo < high:
        mid = (lo + high + 1) // 2
        if feasible(mid):
            lo = mid
        else:
            high = mid - 1
    if debug and lo != linear:
        raise InternalInvariantError(
            f"exchange feasibility is not an interval: linear {linear}, "
            f"binary {lo}"
        )
    return lo


def _assert_preferred(v, p, z, side, b, u_star):
    best, min_size, max_size = indirect_utility(v, p, b)
    if u_star != best:
        raise NotPreferredBundle(f"bundle {z} is not preferred at {p}")
    want = min_size if side is DemandSide.MINIMAL else max_size
    if sum(z) != want:
        raise NotPreferredBundle(
            f"bundle {z} has cardinality {sum(z)}, expected {want} for {side}"
        )


def tight_set(v, p, z, e, side, b, counters=None):
    """Unique minimal tight set containing e: {e} plus items with positive
    exchange weight into e."""
    out = {e}
    for f in range(len(b)):
        if f == e or z[f] == 0:
            continue
        if exchange_weight(v, p, z, e, f, side, b, counters) > 0:
            out.add(f)
    return frozenset(out)


def enumerate_demand_local(v, p, b, side, max_bundles=4096):
    """Enumerated minimal or maximal preferred bundles (test support).

    Filters by componentwise minimality/maximality, the definition used in
    the underdemandedness formulas.
    """
    if box_size(b) > max_bundles:
        raise EnumerationLimit(f"box has more than {max_bundles} bundles")
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
    out = set()
    for z in preferred:
        if side is DemandSide.MINIMAL:
            dominated = any(
                y != z and all(a <= c for a, c in zip(y, z)) for y in preferred
            )
        else:
            dominated = any(
                y != z and all(a >= c for a, c in zip(y, z)) for y in preferred
            )
        if not dominated:
            out.add(z)
    return out


def rank(v, p, S, side, b, max_bundles=4096):
    """Rank of the demand-set polymatroid: max of z(S) over the enumerated
    minimal or maximal preferred bundles (test support)."""
    dset = enumerate_demand_local(v, p, b, side, max_bundles)
    return max(sum(z[e] for e in S) for z in dset) if dset else 0


def theta(v, p, S, b, max_bundles=4096):
    """Minimal number of items of S in every minimal preferred bundle:
    rank(E) - rank(E minus S) on the minimal side."""
    m = len(b)
    full = rank(v, p, range(m), DemandSide.MINIMAL, b, max_bundles)
    rest = rank(
        v, p, [e for e in range(m) if e not in set(S)], DemandSide.MINIMAL, b,
        max_bundles,
    )
    return full - rest


def check_mnat_concave(v, b, max_bundles=4096):
    """Exhaustively verify the M-natural concavity exchange conditions."""
    if box_size(b) > max_bundles:
        raise EnumerationLimit("box too large for pairwise enumeration")
    vals = {z: v.value(z) for z in iter_box(b)}
    bundles = list(vals)
    for x in bundles:
        for y in bundles:
            for e in range(len(b)):
                if x[e] <= y[e]:
                    continue
                base = vals[x] + vals[y]
                xe = x[:e] + (x[e] - 1,) + x[e + 1 :]
                ye = y[:e] + (y[e] + 1,) + y[e + 1 :]
                if base <= vals[xe] + vals[ye]:
                    continue
                ok = False
                for f in range(len(b)):
                    if x[f] >= y[f]:
                        continue
                    xf = xe[:f] + (xe[f] + 1,) + xe[f + 1 :]
                    yf = ye[:f] + (ye[f] - 1,) + ye[f + 1 :]
                    if base <= vals[xf] + vals[yf]:
                        ok = True
                        break
                if not ok:
                    return False
    return True


def check_m_convex(demand_set):
    """Exchange axiom for a finite set of integer vectors."""
    bundles = list(demand_set)
    pool = set(bundles)
    for x in bundles:
        for y in bundles:
            for e in range(len(x)):
                if x[e] <= y[e]:
                    continue
                ok = False
                for f in range(len(x)):
                    if x[f] >= y[f]:
                        continue
                    xf = list(x)
                    xf[e] -= 1
                    xf[f] += 1
                    yf = list(y)
                    yf[e] += 1
                    yf[f] -= 1
                    if tuple(xf) in pool and tuple(yf) in pool:
                        ok = True
                        break
                if not ok:
                    return False
    return True


def truncate(v, cap):
    return Truncated(v, cap)


def copy_to_unit_supply(inst):
    """Split each item into b(e) unit-supply copies.

    Returns the copied instance and the projection (copy item -> original
    item).  Buyer valuations are evaluated through the projection.
    """
    projection = tuple(
        e for e in range(inst.m) for _ in range(inst.supply[e])
    )
    buyers = tuple(CopyProjected(buyer_valuation(inst, i), projection)
                   for i in range(inst.n))
    copied = Instance(supply=(1,) * len(projection), buyers=buyers)
    return copied, projection

