"""Randomized sweep of the zero-gap identity and the certificate iff.

    python scripts/duality_sweep.py --count 2000 --seed 1
"""

from __future__ import annotations

import argparse
import random
import time
from collections import Counter

from eqcouple.acceptance import oracle_value, random_instance, rotations
from eqcouple.certificate import verify_minimizer
from eqcouple.coupling import cost, optimal_coupling
from eqcouple.oracle import TransportProblem, equivalence_cost, solve_transport
from eqcouple.quotient import tv_invariant


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    tally: Counter[str] = Counter()
    t0 = time.perf_counter()
    for _ in range(args.count):
        inst = random_instance(rng)
        tv = tv_invariant(inst.mu, inst.nu).value
        opt = oracle_value(inst.mu, inst.nu)
        tally["gap_zero"] += opt == tv
        tally["constructed_optimal"] += cost(optimal_coupling(inst.mu, inst.nu)) == opt
        table = equivalence_cost(inst.space)
        argmin = solve_transport(TransportProblem(table, inst.mu, inst.nu)).argmin
        tally["argmin_certified"] += verify_minimizer(argmin).is_minimizer
        for Q in rotations(argmin, table):
            tally["perturbed"] += 1
            tally["perturbed_rejected"] += not verify_minimizer(Q).is_minimizer
        tally["tv_positive"] += tv > 0
    dt = time.perf_counter() - t0
    print(f"instances: {args.count}  seed: {args.seed}  time: {dt:.2f}s")
    for key in ("gap_zero", "constructed_optimal", "argmin_certified", "tv_positive"):
        print(f"  {key:22s} {tally[key]}/{args.count}")
    print(f"  {'perturbed_rejected':22s} {tally['perturbed_rejected']}/{tally['perturbed']}")


if __name__ == "__main__":
    main()
