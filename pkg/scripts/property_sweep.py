"""Run randomized hypothesis-satisfying scenarios and tally check failures.

    python3 scripts/property_sweep.py --count 150
    python3 scripts/property_sweep.py --count 60 --dt 1e-4 --base-seed 3
"""
import argparse
import time
from collections import Counter

from ftrc.analysis import verify_ftrc
from ftrc.experiments import random_scenario
from ftrc.sim import run

CHECKS = {
    "invariant": lambda r: r.invariant_set_ok,
    "M": lambda r: r.M_monotone_ok,
    "m": lambda r: r.m_monotone_ok,
    "rate": lambda r: r.lyapunov_rate_ok,
    "bound": lambda r: r.bound_ok,
    "post": lambda r: r.post_consensus_ok,
}


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--count", type=int, default=60)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--dt", type=float, default=None, help="force one step size for every scenario")
    p.add_argument("--verbose", action="store_true", help="print every scenario, not only failures")
    args = p.parse_args()

    fails: Counter = Counter()
    start = time.perf_counter()
    for i in range(args.count):
        cfg = random_scenario(i, args.base_seed, args.dt)
        log = run(cfg)
        report = verify_ftrc(log, cfg)
        broken = [k for k, ok in CHECKS.items() if not ok(report)]
        fails.update(broken)
        if broken or args.verbose:
            print(
                f"{i:4d} F={cfg.F} n={cfg.digraph.n} |A|={len(cfg.adversaries)} dt={cfg.dt:g} "
                f"alpha={cfg.alpha:g} failed={','.join(broken) or '-'} excursion={report.invariant_worst_excursion:.3g} "
                f"V_end/(alpha*dt)={log.V[-1] / (cfg.alpha * cfg.dt):.3g}"
            )
    print(f"{args.count} scenarios in {time.perf_counter() - start:.1f}s; failures per check: {dict(fails) or 'none'}")


if __name__ == "__main__":
    main()
