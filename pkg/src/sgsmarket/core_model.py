"""Market instance representation and integer bundle/price arithmetic.

Items and buyers are 0-based dense indices.  Bundles and price vectors are
plain tuples of nonnegative integers, one entry per item type.
"""

from __future__ import annotations

from dataclasses import dataclass

Bundle = tuple  # tuple of m nonnegative integers
PriceVector = tuple  # tuple of m nonnegative integers


class MarketError(Exception):
    """Base class for all errors raised by this package."""


class BundleOutOfBounds(MarketError):
    """A bundle operation left the box [0, b]."""


class NotPreferredBundle(MarketError):
    """A bundle claimed to lie in a demand set does not."""


class EnumerationLimit(MarketError):
    """An exhaustive operation refused to run because the instance is too big."""


class RoundLimitExceeded(MarketError):
    """An auction did not terminate within its round limit (non-substitutes input)."""


class NotWalrasian(MarketError):
    """Prices handed to an allocation extraction are not Walrasian."""


class InternalInvariantError(MarketError):
    """An internal solver invariant was violated (never expected at runtime)."""


@dataclass(frozen=True)
class Instance:
    """A market: integer supply per item and one valuation per buyer.

    supply: length-m tuple of positive integers (units of each item type).
    buyers: length-n tuple of valuation objects (see the valuations module).
    demand_caps: optional length-n tuple capping each buyer's total units.
    """

    supply: tuple
    buyers: tuple
    demand_caps: tuple = None

    def __post_init__(self):
        if len(self.supply) < 1:
            raise ValueError("need at least one item")
        if len(self.buyers) < 1:
            raise ValueError("need at least one buyer")
        if any(q < 1 for q in self.supply):
            raise ValueError("supply must be positive for every item")
        if self.demand_caps is not None:
            if len(self.demand_caps) != len(self.buyers):
                raise ValueError("demand_caps length must match buyer count")
            if any(d < 0 for d in self.demand_caps):
                raise ValueError("demand caps must be nonnegative")

    @property
    def m(self):
        return len(self.supply)

    @property
    def n(self):
        return len(self.buyers)

    @property
    def max_supply(self):
        return max(self.supply)


@dataclass
class Allocation:
    """An n-tuple of bundles with derived per-item totals."""

    bundles: tuple

    def totals(self):
        m = len(self.bundles[0])
        return tuple(sum(z[e] for z in self.bundles) for e in range(m))


def zero_bundle(m):
    return (0,) * m


def chi(m, items):
    """Characteristic vector of an item set as a length-m tuple."""
    s = set(items)
    return tuple(1 if e in s else 0 for e in range(m))


def add_scaled(p, q, scale=1):
    return tuple(a + scale * c for a, c in zip(p, q))


def dot(p, z):
    return sum(a * c for a, c in zip(p, z))


def bundle_leq(x, y):
    return all(a <= c for a, c in zip(x, y))


def exchange(z, e, f, alpha, b=None):
    """Return z - alpha*chi_f + alpha*chi_e (give up alpha units of f, gain e).

    Raises BundleOutOfBounds if the result leaves [0, b] (b optional).
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0:
        return z
    if e == f:
        raise ValueError("exchange requires distinct items")
    if z[f] < alpha:
        raise BundleOutOfBounds(f"cannot give up {alpha} units of item {f}")
    out = list(z)
    out[f] -= alpha
    out[e] += alpha
    if b is not None and out[e] > b[e]:
        raise BundleOutOfBounds(f"item {e} exceeds supply bound {b[e]}")
    return tuple(out)


def classify_items(allocation, b):
    """Partition items into (oversold, undersold, exact) by totals vs supply."""
    t = allocation.totals() if isinstance(allocation, Allocation) else allocation
    oversold = frozenset(e for e in range(len(b)) if t[e] > b[e])
    undersold = frozenset(e for e in range(len(b)) if t[e] < b[e])
    exact = frozenset(e for e in range(len(b)) if t[e] == b[e])
    return oversold, undersold, exact


def meet_join(p, q):
    """Component-wise (min, max) of two equal-length price vectors."""
    if len(p) != len(q):
        raise ValueError("price vectors must have equal length")
    meet = tuple(min(a, c) for a, c in zip(p, q))
    join = tuple(max(a, c) for a, c in zip(p, q))
    return meet, join
