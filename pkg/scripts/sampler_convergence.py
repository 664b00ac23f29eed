"""Empirical leave rate of the maximal-coupling sampler against its exact value.

    python scripts/sampler_convergence.py --instance data/running_instance.json
"""

from __future__ import annotations

import argparse
import math

from eqcouple.acceptance import running_instance
from eqcouple.core import load_instance
from eqcouple.coupling import kl8_plan, kl8_sample


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instance", help="instance JSON (default: built-in running instance)")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    inst = load_instance(args.instance) if args.instance else running_instance()
    plan = kl8_plan(inst.mu, inst.nu)
    p = float(plan.tv)
    print(f"exact leave probability: {plan.tv} = {p:.6f}")
    print(f"{'n':>9} {'mean rate':>11} {'max |err|':>10} {'4-sigma':>9} {'inside':>7}")
    for n in (10**3, 10**4, 10**5, 10**6):
        rates = [kl8_sample(plan, inst.mu, n, seed, args.workers).empirical_leave_rate for seed in range(args.seeds)]
        band = 4 * math.sqrt(p * (1 - p) / n)
        worst = max(abs(r - p) for r in rates)
        inside = sum(abs(r - p) <= band for r in rates)
        print(f"{n:>9} {sum(rates) / len(rates):>11.6f} {worst:>10.6f} {band:>9.6f} {inside:>4}/{args.seeds}")


if __name__ == "__main__":
    main()
