"""Command-line entry point and the JSON file formats.

Commands: gen (seeded instance generation), solve (run an auction and write a
trace), verify (cross-check against the brute-force oracles), bench (counter
and wall-time sweep of the polymatroid-sum solver).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

from .auctions import ascending, descending, descending_start, greedy, two_phase
from .core_model import (
    EnumerationLimit,
    Instance,
    MarketError,
    RoundLimitExceeded,
)
from .demand_sets import min_max_overdemanded, min_max_underdemanded
from .oracle_bruteforce import (
    DemandDecrease,
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
from .polymatroid_sum import solve
from .valuations import (
    OXS,
    Additive,
    DemandSide,
    GraphicMatroid,
    OracleCounters,
    PartitionMatroid,
    Table,
    UniformMatroid,
    UnitDemand,
    WeightedMatroidRank,
    iter_box,
)

FILE_VERSION = 1


class PCG32:
    """Permuted congruential generator (XSH-RR, 64/32): the fixed recipe that
    keeps generated fixtures portable across implementations."""

    MULT = 6364136223846793005
    MASK = (1 << 64) - 1

    def __init__(self, seed, seq=0):
        self.state = 0
        self.inc = ((seq << 1) | 1) & self.MASK
        self._step()
        self.state = (self.state + (seed & self.MASK)) & self.MASK
        self._step()

    def _step(self):
        self.state = (self.state * self.MULT + self.inc) & self.MASK

    def next32(self):
        old = self.state
        self._step()
        xorshifted = (((old >> 18) ^ old) >> 27) & 0xFFFFFFFF
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << (-rot & 31))) & 0xFFFFFFFF

    def randint(self, lo, hi):
        """Uniform integer in [lo, hi], rejection-sampled to avoid bias."""
        span = hi - lo + 1
        limit = (1 << 32) - (1 << 32) % span
        while True:
            r = self.next32()
            if r < limit:
                return lo + r % span

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]


# ---------------------------------------------------------------------------
# Valuation descriptors


def valuation_to_descriptor(v):
    if isinstance(v, UnitDemand):
        return {"kind": "unit_demand", "weights": list(v.weights)}
    if isinstance(v, Additive):
        return {"kind": "additive", "weights": list(v.weights)}
    if isinstance(v, WeightedMatroidRank):
        mat = v.matroid
        if isinstance(mat, UniformMatroid):
            desc = {"kind": "uniform", "rank": mat.k}
        elif isinstance(mat, PartitionMatroid):
            desc = {
                "kind": "partition",
                "blocks": [sorted(blk) for blk in mat.blocks],
                "caps": list(mat.caps),
            }
        elif isinstance(mat, GraphicMatroid):
            desc = {"kind": "graphic", "edges": [list(uv) for uv in mat.edges]}
        else:
            raise ValueError(f"unsupported matroid {type(mat).__name__}")
        return {"kind": "matroid_rank", "matroid": desc, "weights": list(v.weights)}
    if isinstance(v, OXS):
        return {
            "kind": "oxs",
            "right_size": v.right_size,
            "edges": sorted([e, r, w] for (e, r), w in v.edges.items()),
        }
    if isinstance(v, Table):
        return {
            "kind": "table",
            "box": list(v.box),
            "values": {
                ",".join(map(str, z)): val for z, val in sorted(v.values.items())
            },
        }
    raise ValueError(f"unsupported valuation {type(v).__name__}")


def descriptor_to_valuation(desc, m):
    kind = desc["kind"]
    if kind == "unit_demand":
        return UnitDemand(desc["weights"])
    if kind == "additive":
        return Additive(desc["weights"])
    if kind == "matroid_rank":
        md = desc["matroid"]
        if md["kind"] == "uniform":
            mat = UniformMatroid(m, md["rank"])
        elif md["kind"] == "partition":
            mat = PartitionMatroid(m, md["blocks"], md["caps"])
        elif md["kind"] == "graphic":
            mat = GraphicMatroid(m, md["edges"])
        else:
            raise ValueError(f"unknown matroid kind {md['kind']!r}")
        return WeightedMatroidRank(mat, desc["weights"])
    if kind == "oxs":
        edges = {(e, r): w for e, r, w in desc["edges"]}
        return OXS(m, desc["right_size"], edges)
    if kind == "table":
        values = {
            tuple(int(q) for q in key.split(",")): val
            for key, val in desc["values"].items()
        }
        return Table(desc["box"], values)
    raise ValueError(f"unknown valuation kind {kind!r}")


def instance_to_json(inst):
    doc = {
        "version": FILE_VERSION,
        "items": inst.m,
        "supply": list(inst.supply),
        "buyers": [valuation_to_descriptor(v) for v in inst.buyers],
    }
    if inst.demand_caps is not None:
        doc["demand_caps"] = list(inst.demand_caps)
    return doc


def instance_from_json(doc):
    if doc.get("version") != FILE_VERSION:
        raise ValueError(f"unsupported file version {doc.get('version')!r}")
    m = doc["items"]
    supply = tuple(doc["supply"])
    if len(supply) != m:
        raise ValueError("supply length does not match the item count")
    buyers = tuple(descriptor_to_valuation(d, m) for d in doc["buyers"])
    caps = tuple(doc["demand_caps"]) if "demand_caps" in doc else None
    return Instance(supply, buyers, caps)


def instance_digest(doc):
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def trace_to_json(inst_doc, trace, push_counters=None):
    final_counters = {
        "do": trace.counters.do_calls,
        "exo": trace.counters.exo_calls,
    }
    if push_counters is not None:
        final_counters.update(push_counters)
    return {
        "version": FILE_VERSION,
        "instance_digest": instance_digest(inst_doc),
        "mode": trace.mode,
        "start": list(trace.start),
        "rounds": [
            {
                "index": r.index,
                "direction": r.direction,
                "items": sorted(r.items),
                "magnitude": r.magnitude,
                "lyapunov_before": r.lyapunov_before,
                "lyapunov_after": r.lyapunov_after,
                "prices_after": list(r.prices_after),
            }
            for r in trace.rounds
        ],
        "final": {
            "prices": list(trace.final_prices),
            "walrasian": trace.walrasian,
            "allocation": (
                [list(z) for z in trace.allocation.bundles]
                if trace.allocation is not None
                else None
            ),
            "counters": final_counters,
        },
    }


def replay_trace(inst, trace_doc):
    """Re-derive every recorded round; returns the first divergence or None."""
    p = tuple(trace_doc["start"])
    for rnd in trace_doc["rounds"]:
        if rnd["direction"] == 1:
            report = min_max_overdemanded(inst, p)
        else:
            report = min_max_underdemanded(inst, p)
        if sorted(report.items) != rnd["items"]:
            return rnd["index"], "items", sorted(report.items)
        p = tuple(
            q + rnd["direction"] * (1 if e in report.items else 0)
            for e, q in enumerate(p)
        )
        if list(p) != rnd["prices_after"]:
            return rnd["index"], "prices", list(p)
    if list(p) != trace_doc["final"]["prices"]:
        return len(trace_doc["rounds"]), "final prices", list(p)
    return None


# ---------------------------------------------------------------------------
# gen


def generate_instance(family, m, n, max_supply, value_cap, seed):
    rng = PCG32(seed)
    supply = tuple(rng.randint(1, max_supply) for _ in range(m))

    def weights():
        return [rng.randint(0, value_cap) for _ in range(m)]

    buyers = []
    for _ in range(n):
        fam = rng.choice(
            ["unit_demand", "additive", "matroid_rank", "oxs", "table"]
        ) if family == "mixed" else family
        if fam == "unit_demand":
            buyers.append(UnitDemand(weights()))
        elif fam == "additive":
            buyers.append(Additive(weights()))
        elif fam == "matroid_rank":
            if m >= 2 and rng.randint(0, 1):
                cut = rng.randint(1, m - 1)
                blocks = [list(range(cut)), list(range(cut, m))]
                caps = [rng.randint(1, max(1, cut)),
                        rng.randint(1, max(1, m - cut))]
                mat = PartitionMatroid(m, blocks, caps)
            else:
                mat = UniformMatroid(m, rng.randint(1, m))
            buyers.append(WeightedMatroidRank(mat, weights()))
        elif fam == "oxs":
            right = rng.randint(1, m)
            edges = {}
            for e in range(m):
                for r in range(right):
                    if rng.randint(0, 2) == 0:
                        edges[(e, r)] = rng.randint(1, value_cap) if value_cap else 0
            buyers.append(OXS(m, right, edges))
        elif fam == "table":
            buyers.append(_random_monotone_table(supply, value_cap, rng))
        else:
            raise ValueError(f"unknown family {fam!r}")
    return Instance(supply, tuple(buyers))


def _random_monotone_table(box, value_cap, rng):
    values = {(0,) * len(box): 0}
    for z in iter_box(box):
        if z in values:
            continue
        floor = max(
            values[z[:e] + (z[e] - 1,) + z[e + 1 :]]
            for e in range(len(box))
            if z[e] > 0
        )
        values[z] = min(value_cap, floor + rng.randint(0, 2))
    return Table(box, values)


def cmd_gen(args):
    inst = generate_instance(
        args.family, args.m, args.n, args.B, args.value_cap, args.seed
    )
    doc = instance_to_json(inst)
    blob = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(blob)
        print(f"{instance_digest(doc)} {args.out}")
    else:
        sys.stdout.write(blob)
    return 0


# ---------------------------------------------------------------------------
# solve


AUCTIONS = {
    "ascending": ascending,
    "descending": descending,
    "two-phase": two_phase,
    "greedy": greedy,
}


def cmd_solve(args):
    with open(args.instance) as fh:
        doc = json.load(fh)
    inst = instance_from_json(doc)
    counters = OracleCounters()
    run = AUCTIONS[args.mode]
    kwargs = {"counters": counters}
    if args.start is not None:
        kwargs["start"] = tuple(args.start)
    elif args.mode in ("two-phase", "greedy"):
        kwargs["start"] = descending_start(inst)
    try:
        p, trace = run(inst, **kwargs)
    except RoundLimitExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    # push counters come from one certification solve at the final prices
    cert = solve(inst, p, DemandSide.MINIMAL, counters=counters)
    push_counters = {
        "pushes_sat": cert.saturating_pushes,
        "pushes_nonsat": cert.nonsaturating_pushes,
        "relabels": cert.relabels,
    }
    out_doc = trace_to_json(doc, trace, push_counters)
    if args.trace_out:
        with open(args.trace_out, "w") as fh:
            json.dump(out_doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.json:
        print(json.dumps(out_doc["final"], sort_keys=True))
    else:
        print(f"final prices: {p}")
        print(f"walrasian: {trace.walrasian}")
        print(
            f"rounds: {len(trace.rounds)}  do: {counters.do_calls}  "
            f"exo: {counters.exo_calls}"
        )
    return 0 if trace.walrasian else 1


# ---------------------------------------------------------------------------
# verify


def _sample_prices(inst, rng, count=4):
    top = descending_start(inst)
    prices = [(0,) * inst.m, top]
    for _ in range(count):
        prices.append(tuple(rng.randint(0, top[0]) for _ in range(inst.m)))
    return prices


def _verify_sum(inst, rng):
    failures = []
    for p in _sample_prices(inst, rng):
        for side in DemandSide:
            sol = solve(inst, p, side)
            value, _, _ = brute_polymatroid_sum(inst, p, side)
            if sol.value != value:
                failures.append(
                    f"sum value mismatch at p={p} side={side.value}: "
                    f"solver {sol.value}, brute {value}"
                )
    return failures


def _verify_sets(inst, rng):
    failures = []
    for p in _sample_prices(inst, rng):
        got_over = min_max_overdemanded(inst, p).items
        want_over, _ = brute_min_max_set(inst, p, "over")
        if got_over != want_over:
            failures.append(
                f"overdemanded set mismatch at p={p}: "
                f"{sorted(got_over)} vs {sorted(want_over)}"
            )
        got_under = min_max_underdemanded(inst, p).items
        want_under, _ = brute_min_max_set(inst, p, "under")
        if got_under != want_under:
            failures.append(
                f"underdemanded set mismatch at p={p}: "
                f"{sorted(got_under)} vs {sorted(want_under)}"
            )
    return failures


def _verify_walrasian(inst, rng):
    failures = []
    survey = price_survey(inst)
    found, p_min, p_max = brute_walrasian(inst, survey=survey)
    if not found:
        failures.append("no Walrasian prices on the grid")
        return failures
    asc, _ = ascending(inst, extract=True)
    if asc != p_min:
        failures.append(f"ascending gave {asc}, brute minimum is {p_min}")
    desc, _ = descending(inst, extract=False)
    if desc != p_max:
        failures.append(f"descending gave {desc}, brute maximum is {p_max}")
    if not walrasian_lattice_closed(found):
        failures.append("Walrasian grid set is not lattice-closed")
    if not check_packing_extremes(inst, survey=survey):
        failures.append("a packing grid price is below the minimum")
    if not check_covering_extremes(inst, survey=survey):
        failures.append("a covering grid price is above the maximum")
    return failures


def _verify_monotonicity(inst, rng):
    failures = []
    for e in range(inst.m):
        verdict = monotonicity_harness(inst, SupplyDecrease(e))
        if not verdict.ok:
            failures.append(
                f"supply decrease at item {e} broke monotonicity: "
                f"{verdict.before} -> {verdict.after} {verdict.detail}"
            )
    for i in range(inst.n):
        verdict = monotonicity_harness(inst, DemandDecrease(i))
        if not verdict.ok:
            failures.append(
                f"demand-cap decrease for buyer {i} broke monotonicity: "
                f"{verdict.before} -> {verdict.after} {verdict.detail}"
            )
    return failures


SCOPES = {
    "sum": _verify_sum,
    "sets": _verify_sets,
    "walrasian": _verify_walrasian,
    "monotonicity": _verify_monotonicity,
}


def cmd_verify(args):
    with open(args.instance) as fh:
        doc = json.load(fh)
    inst = instance_from_json(doc)
    scopes = list(SCOPES) if args.scope == "all" else [args.scope]
    verdict = {"instance_digest": instance_digest(doc), "checks": {}}
    ok = True
    try:
        for scope in scopes:
            failures = SCOPES[scope](inst, PCG32(args.seed))
            verdict["checks"][scope] = {"pass": not failures, "failures": failures}
            ok = ok and not failures
        if args.trace:
            with open(args.trace) as fh:
                trace_doc = json.load(fh)
            divergence = replay_trace(inst, trace_doc)
            verdict["checks"]["replay"] = {
                "pass": divergence is None,
                "failures": (
                    []
                    if divergence is None
                    else [
                        f"round {divergence[0]}: {divergence[1]} diverged, "
                        f"replay got {divergence[2]}"
                    ]
                ),
            }
            ok = ok and divergence is None
    except EnumerationLimit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    verdict["pass"] = ok
    print(json.dumps(verdict, sort_keys=True))
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# bench


def cmd_bench(args):
    sizes = [int(s) for s in args.m_values.split(",")]
    writer = sys.stdout
    writer.write(
        "m,n,B,do_calls,exo_calls,pushes_sat,pushes_nonsat,relabels,"
        "wall_s,exo_per_nm3,exo_per_unit_bound\n"
    )
    for m in sizes:
        inst = generate_instance(
            args.family, m, args.n, args.B, args.value_cap, args.seed + m
        )
        counters = OracleCounters()
        t0 = time.perf_counter()
        sol = solve(inst, (0,) * m, DemandSide.MINIMAL, counters=counters)
        wall = time.perf_counter() - t0
        unit_ratio = ""
        if all(q == 1 for q in inst.supply):
            unit_ratio = f"{counters.exo_calls / (m**3 + args.n * m * m):.4f}"
        writer.write(
            f"{m},{args.n},{args.B},{counters.do_calls},{counters.exo_calls},"
            f"{sol.saturating_pushes},{sol.nonsaturating_pushes},{sol.relabels},"
            f"{wall:.4f},{counters.exo_calls / (args.n * m**3):.4f},"
            f"{unit_ratio}\n"
        )
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sgsmarket",
        description="Walrasian equilibrium prices for strong gross substitutes "
        "markets via push-relabel dynamic auctions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a seeded random instance")
    gen.add_argument("--family", default="mixed",
                     choices=["mixed", "unit_demand", "additive",
                              "matroid_rank", "oxs", "table"])
    gen.add_argument("--m", type=int, default=3)
    gen.add_argument("--n", type=int, default=3)
    gen.add_argument("--B", type=int, default=1, help="maximum supply per item")
    gen.add_argument("--value-cap", type=int, default=6)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out")
    gen.set_defaults(func=cmd_gen)

    slv = sub.add_parser("solve", help="run a dynamic auction")
    slv.add_argument("instance")
    slv.add_argument("--mode", default="ascending", choices=sorted(AUCTIONS))
    slv.add_argument("--start", type=int, nargs="+")
    slv.add_argument("--trace-out")
    slv.add_argument("--json", action="store_true")
    slv.set_defaults(func=cmd_solve)

    ver = sub.add_parser("verify", help="cross-check against brute force")
    ver.add_argument("instance")
    ver.add_argument("--scope", default="all",
                     choices=["all"] + sorted(SCOPES))
    ver.add_argument("--trace", help="trace file to replay")
    ver.add_argument("--seed", type=int, default=0)
    ver.set_defaults(func=cmd_verify)

    ben = sub.add_parser("bench", help="counter sweep of the sum solver")
    ben.add_argument("--family", default="matroid_rank",
                     choices=["mixed", "unit_demand", "additive",
                              "matroid_rank", "oxs", "table"])
    ben.add_argument("--m-values", default="4,6,8,10,12")
    ben.add_argument("--n", type=int, default=3)
    ben.add_argument("--B", type=int, default=1)
    ben.add_argument("--value-cap", type=int, default=6)
    ben.add_argument("--seed", type=int, default=0)
    ben.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, json.JSONDecodeError, MarketError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
