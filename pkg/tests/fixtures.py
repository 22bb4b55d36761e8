"""Hand-built market fixtures used across the test suite.

Each builder returns a ready Instance (or raw data for the scripted
exchange-graph fixture) together with the externally known expected results.
"""

from sgsmarket.core_model import Instance
from sgsmarket.valuations import Additive, Table, Truncated, UnitDemand


def walkthrough_market(v1=(2, 3, 0)):
    """Three unit-demand buyers on three unit-supply items.

    Known minimal Walrasian prices: v1=(2,3,0) -> (0,1,1);
    v1=(2,2,0) -> (0,0,0); v1=(1,2,0) -> (0,1,1).
    """
    return Instance(
        (1, 1, 1),
        (UnitDemand(v1), UnitDemand((0, 1, 1)), UnitDemand((0, 1, 1))),
    )


FOUR_ROW_CASES = [
    ((0, 9, 1, 1), (4, 8, 0, 0)),
    ((0, 9, 2, 1), (3, 7, 0, 0)),
    ((0, 9, 2, 2), (3, 7, 0, 0)),
    ((0, 10, 2, 2), (4, 8, 0, 0)),
]


def four_row_market(v1):
    """Unit-demand market whose maximal Walrasian prices flip non-monotonically
    as buyer 1's valuation changes (see FOUR_ROW_CASES)."""
    return Instance(
        (1, 1, 1, 1),
        (UnitDemand(v1), UnitDemand((6, 10, 0, 0)), UnitDemand((4, 0, 1, 1))),
    )


def no_equilibrium_market():
    """Two complementary table buyers with no Walrasian price vector."""

    def v1(S):
        if {0, 1} <= S:
            return 2
        if 2 in S:
            return 1
        return 0

    def v2(S):
        if {1, 2} <= S:
            return 2
        if 0 in S:
            return 1
        return 0

    return Instance(
        (1, 1, 1),
        (Table.from_set_function(3, v1), Table.from_set_function(3, v2)),
    )


def packing_no_lattice_market():
    """Two buyers with non-matroidal independence families: the componentwise
    minimum (0,2,2,0) of the packing prices (0,2,6,0) and (0,6,2,0) is not
    itself packing."""

    def make(tilde, families):
        def f(S):
            return max(sum(tilde[e] for e in S & F) for F in families)

        return Table.from_set_function(4, f)

    return Instance(
        (1, 1, 1, 1),
        (
            make((6, 6, 6, 10), [frozenset({0, 1, 2}), frozenset({3})]),
            make((10, 6, 6, 6), [frozenset({0}), frozenset({1, 2, 3})]),
        ),
    )


def covering_join_market():
    """Two identical non-substitutes table buyers: (6,7,7) and (7,6,7) are
    covering but their join (7,7,7) is not; the maximal Walrasian prices are
    (7,7,8)."""
    table = {
        frozenset(): 0,
        frozenset({0}): 7,
        frozenset({1}): 7,
        frozenset({2}): 8,
        frozenset({0, 1}): 14,
        frozenset({0, 2}): 13,
        frozenset({1, 2}): 13,
        frozenset({0, 1, 2}): 18,
    }
    v = Table.from_set_function(3, lambda S: table[frozenset(S)])
    return Instance((1, 1, 1), (v, v))


# Scripted exchange-graph fixture: six items of supply 2, three buyers
# (indices 0=B, 1=R, 2=G) holding the recorded allocation, with the buyers'
# exchange-weight answers given as a lookup table.  The table is the raw
# oracle transcript of one auction stage; it is not realizable by any
# M-natural concave valuation, so graph construction is exercised directly
# through the weight callback.
SCRIPTED_SUPPLY = (2, 2, 2, 2, 2, 2)

SCRIPTED_BUNDLES = (
    (2, 2, 2, 1, 0, 0),
    (2, 1, 0, 0, 1, 1),
    (0, 2, 0, 1, 1, 0),
)

SCRIPTED_WEIGHTS = {
    (0, 3, 0): 1,
    (0, 3, 1): 1,
    (0, 3, 2): 1,
    (1, 2, 0): 2,
    (1, 2, 1): 1,
    (1, 4, 5): 1,
    (2, 0, 4): 1,
    (2, 2, 3): 1,
    (2, 3, 1): 1,
    (2, 3, 4): 1,
}

SCRIPTED_ARCS = frozenset(
    {(0, 4), (2, 0), (2, 1), (2, 3), (3, 0), (3, 1), (3, 2), (3, 4), (4, 5)}
)

SCRIPTED_OVERSOLD = frozenset({0, 1})
SCRIPTED_UNDERSOLD = frozenset({5})
SCRIPTED_MIN_MAX_OVERDEMANDED = frozenset({0, 1, 2, 3})


def scripted_weight(i, e, f):
    return SCRIPTED_WEIGHTS.get((i, e, f), 0)


def copy_reduction_fixtures():
    """Small multi-supply markets for the unit-supply copy reduction."""
    return [
        Instance((2, 2), (Truncated(Additive((4, 3)), 3), UnitDemand((2, 5)))),
        Instance((3, 1), (Truncated(Additive((2, 6)), 2), UnitDemand((3, 3)))),
        Instance(
            (2, 1, 2),
            (UnitDemand((4, 1, 3)), Truncated(Additive((1, 2, 3)), 2)),
        ),
    ]
