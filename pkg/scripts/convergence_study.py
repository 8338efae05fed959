"""Two finite-size studies: the Cesaro mean of the square-spike configuration against k_max,
and the lattice convolution error against the Erlang closed form as the tolerance shrinks.

Usage: python scripts/convergence_study.py [--csv DIR]
"""

from __future__ import annotations

import argparse
import math
from pathlib import Path

import numpy as np

from tailconv.convolve import Erlang, conv_chain
from tailconv.dist_core import Exponential, SequenceSpec
from tailconv.presets import preset
from tailconv.tailgrid import hybrid_grid
from tailconv.theorem_check import cesaro_condition


def cesaro_rows(k_values) -> list[tuple[int, float, float]]:
    p = preset(3)
    limit = 1.0 - 1.0 / math.e
    return [(k, v, v - limit) for k in k_values for v in [cesaro_condition(p.spec, p.kappa, k)]]


def erlang_rows(tols, n: int = 5, x_max: float = 50.0) -> list[tuple[float, float, float]]:
    xs = hybrid_grid(x_max)
    exact = Erlang(n, 1.0).survival(xs)
    rows = []
    for tol in tols:
        g = conv_chain(SequenceSpec.iid(Exponential(1.0)), n, xs, tol=tol)
        rows.append((tol, g.abs_error_bound, float(np.max(np.abs(g.survival - exact)))))
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--csv", type=Path, default=None, help="write cesaro.csv and erlang.csv here")
    args = parser.parse_args()
    ces = cesaro_rows([10, 100, 1000, 10_000, 100_000])
    erl = erlang_rows([1e-4, 1e-6, 1e-8])
    print("k_max,cesaro_mean,excess_over_limit")
    for row in ces:
        print(f"{row[0]},{row[1]:.9f},{row[2]:.3e}")
    print("tol,abs_error_bound,max_error_vs_closed_form")
    for row in erl:
        print(f"{row[0]:.0e},{row[1]:.3e},{row[2]:.3e}")
    if args.csv is not None:
        args.csv.mkdir(parents=True, exist_ok=True)
        (args.csv / "cesaro.csv").write_text("k_max,cesaro_mean,excess_over_limit\n"
                                             + "".join(f"{a},{b!r},{c!r}\n" for a, b, c in ces))
        (args.csv / "erlang.csv").write_text("tol,abs_error_bound,max_error\n"
                                             + "".join(f"{a!r},{b!r},{c!r}\n" for a, b, c in erl))


if __name__ == "__main__":
    main()
