"""Shared corpus of seeded random substitutes instances.

The corpus is the single source of randomized instances for the oracle
equivalence, lattice, counter-bound and monotonicity suites; it is generated
once per session from fixed seeds and filtered to stay within the brute-force
budget (box size, value bound) and to be verified M-natural concave.
"""

import pytest

from sgsmarket.cli import PCG32, generate_instance
from sgsmarket.valuations import box_size, buyer_valuation, check_mnat_concave

CORPUS_SIZE = 200
CORPUS_SEED = 999
VALUE_BOUND = 6


def build_corpus(size=CORPUS_SIZE):
    corpus = []
    rng = PCG32(CORPUS_SEED)
    seed = 0
    while len(corpus) < size:
        if seed >= 100 * size:
            raise RuntimeError("corpus generation did not converge")
        m = rng.randint(1, 4)
        n = rng.randint(1, 3)
        max_supply = rng.randint(1, 2)
        inst = generate_instance("mixed", m, n, max_supply, VALUE_BOUND, seed)
        seed += 1
        top = max(
            buyer_valuation(inst, i).value(inst.supply) for i in range(inst.n)
        )
        if top > VALUE_BOUND or box_size(inst.supply) > 4096:
            continue
        if all(check_mnat_concave(v, inst.supply) for v in inst.buyers):
            corpus.append(inst)
    return corpus


@pytest.fixture(scope="session")
def corpus():
    return build_corpus()


def sample_prices(inst, extra=3, seed=42):
    """Deterministic price sample: zero, the descending start, and a few
    uniform draws below it."""
    from sgsmarket.auctions import descending_start

    rng = PCG32(seed)
    top = descending_start(inst)
    prices = [(0,) * inst.m, top]
    for _ in range(extra):
        prices.append(tuple(rng.randint(0, top[0]) for _ in range(inst.m)))
    return prices
