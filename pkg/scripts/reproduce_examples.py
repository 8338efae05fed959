"""Run the three worked configurations and print their theorem verdicts and key constants.

Usage: python scripts/reproduce_examples.py [--out DIR] [--samples N]
"""

from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

from tailconv.presets import preset
from tailconv.random_sum import random_sum_tail
from tailconv.tail_classify import classify
from tailconv.tailgrid import hybrid_grid
from tailconv.theorem_check import cesaro_condition, check_theorem4, check_theorem5, check_theorem6, successor_scan
from tailconv.mc_oracle import simulate_random_sum


def summarize(example_id: int, samples: int) -> dict:
    p = preset(example_id)
    out: dict = {"id": example_id, "name": p.name, "kappa": p.kappa}
    if example_id == 1:
        rep = check_theorem4(p.spec, p.counting, p.kappa, x_max=50.0, k_max=200)
        out["T4"] = rep.overall
        out["successor_sup"] = rep.condition(3).evidence["sup"]
        out["bound_max_2alpha_elam"] = max(2.0 ** p.params["alpha"], math.exp(p.params["lam"]))
    elif example_id == 2:
        out["T5"] = check_theorem5(p.spec, p.counting, p.kappa, p.D).overall
    else:
        out["T6"] = check_theorem6(p.spec, p.counting, p.kappa).overall
        out["T4"] = check_theorem4(p.spec, p.counting, p.kappa).overall
        scan = successor_scan(p.spec, p.kappa, range(1, 10_001), x_max=200.0, x_min=1.0)
        out["successor_sup_from_x_1"] = math.exp(float(scan.log_sup.max()))
        out["cesaro_mean_k_10000"] = cesaro_condition(p.spec, p.kappa, 10_000)
        out["one_minus_inv_e"] = 1.0 - 1.0 / math.e
    xs = hybrid_grid(50.0)
    tail = random_sum_tail(p.spec, p.counting, xs)
    out["random_sum_OL"] = classify(tail, "OL").verdict
    out["random_sum_abs_error_bound"] = tail.abs_error_bound
    if samples > 0:
        mc = simulate_random_sum(p.spec, p.counting, samples, 0, xs)
        keep = (tail.survival >= 1e-4) & (mc.se > 0)
        out["mc_max_abs_z"] = float((abs(mc.estimate - tail.survival)[keep] / mc.se[keep]).max())
    return out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=None, help="write examples.json here")
    parser.add_argument("--samples", type=int, default=10**5, help="Monte Carlo draws per example (0 skips)")
    args = parser.parse_args()
    results = [summarize(i, args.samples) for i in (1, 2, 3)]
    for r in results:
        print(json.dumps(r, sort_keys=True))
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "examples.json").write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
