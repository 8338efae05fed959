"""Monte Carlo estimates of random-sum tails and concentration functions.

Replicates are processed in fixed-size blocks.  Block ``b`` draws from its own
counter-based stream ``(seed, b)``, so any split of the blocks across workers
reproduces the sequential result bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .convolve import _as_nodes
from .dist_core import CountingDist, SequenceSpec, stream
from .random_sum import DEFAULT_N_MAX, NumericalBudgetError

__all__ = ["BLOCK_SIZE", "MCTail", "MCConcentration", "simulate_random_sum", "sample_partial_sums",
           "estimate_concentration"]

BLOCK_SIZE = 1 << 16


@dataclass(frozen=True)
class MCTail:
    xs: np.ndarray
    estimate: np.ndarray
    se: np.ndarray
    n_samples: int
    seed: int
    meta: dict[str, Any] = field(default_factory=dict)

    def to_csv(self, header: str | None = None) -> str:
        lines = [f"# {h}" for h in (header.splitlines() if header else [])]
        lines.append("x,estimate,se,n")
        lines += [f"{x!r},{p!r},{s!r},{self.n_samples}" for x, p, s in zip(self.xs, self.estimate, self.se)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class MCConcentration:
    estimate: float
    se: float
    width: float
    n_samples: int
    seed: int
    window_step: float
    bias_note: str = "the sliding window is offset by at most one step from the optimum"

    def to_dict(self) -> dict[str, Any]:
        return {"estimate": self.estimate, "se": self.se, "width": self.width, "n_samples": self.n_samples,
                "seed": self.seed, "window_step": self.window_step, "bias_note": self.bias_note}


def _blocks(n_samples: int):
    start = 0
    b = 0
    while start < n_samples:
        size = min(BLOCK_SIZE, n_samples - start)
        yield b, size
        start += size
        b += 1


def _random_sums(spec: SequenceSpec, counting: CountingDist, n_samples: int, seed: int, n_max: int) -> np.ndarray:
    out = np.empty(n_samples)
    pos = 0
    for b, size in _blocks(n_samples):
        rng = stream(seed, b)
        eta = np.asarray(counting.sample(rng, size), dtype=np.int64)
        top = int(eta.max()) if size else 0
        if top > n_max:
            raise NumericalBudgetError(f"a counting draw of {top} exceeds the cap N_max={n_max}", float("nan"))
        total = np.zeros(size)
        for n in range(1, top + 1):
            live = np.nonzero(eta >= n)[0]
            total[live] += spec.resolve(n).sample(rng, live.size)
        out[pos:pos + size] = total
        pos += size
    return out


def simulate_random_sum(
    spec: SequenceSpec,
    counting: CountingDist,
    n_samples: int,
    seed: int,
    x_grid=None,
    n_max: int = DEFAULT_N_MAX,
) -> MCTail:
    """Empirical ``P(S_eta > x)`` with binomial standard errors ``sqrt(p (1 - p) / n)``."""
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    xs = _as_nodes(x_grid)
    sums = np.sort(_random_sums(spec, counting, int(n_samples), int(seed), n_max))
    exceed = n_samples - np.searchsorted(sums, xs, side="right")
    p = exceed / n_samples
    se = np.sqrt(p * (1.0 - p) / n_samples)
    return MCTail(xs, p, se, int(n_samples), int(seed), {"block_size": BLOCK_SIZE})


def sample_partial_sums(spec: SequenceSpec, n_terms: int, n_samples: int, seed: int) -> np.ndarray:
    """Draws of ``xi_1 + ... + xi_{n_terms}``, block-seeded like :func:`simulate_random_sum`."""
    out = np.empty(n_samples)
    pos = 0
    for b, size in _blocks(n_samples):
        rng = stream(seed, b)
        total = np.zeros(size)
        for n in range(1, n_terms + 1):
            total += spec.resolve(n).sample(rng, size)
        out[pos:pos + size] = total
        pos += size
    return out


def estimate_concentration(
    spec: SequenceSpec,
    n_terms: int,
    width: float,
    n_samples: int,
    seed: int,
    max_windows: int = 200_000,
) -> MCConcentration:
    """Estimate ``Q_{Z_n}(width) = sup_x P(x <= Z_n <= x + width)`` from samples.

    Window starts run over a grid of step ``width / 16``; when that grid would
    exceed ``max_windows`` starts (very spread samples), the starts are the
    sample points themselves, which is exact for the empirical law.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    if width < 0:
        raise ValueError("width must be nonnegative")
    z = np.sort(sample_partial_sums(spec, int(n_terms), int(n_samples), int(seed)))
    step = width / 16.0
    if width == 0 or (z[-1] - z[0]) / max(step, 1e-300) > max_windows:
        starts = z
        step_used = 0.0
    else:
        lo = math.floor(z[0] / step) * step
        starts = lo + step * np.arange(int(math.ceil((z[-1] - lo) / step)) + 1)
        step_used = step
    counts = np.searchsorted(z, starts + width, side="right") - np.searchsorted(z, starts, side="left")
    p = float(counts.max()) / n_samples
    return MCConcentration(p, math.sqrt(p * (1.0 - p) / n_samples), float(width), int(n_samples), int(seed),
                           step_used)
