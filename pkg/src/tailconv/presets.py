"""The three worked configurations as parametric presets.

Each preset bundles a summand sequence, a counting law, the index ``kappa``
used by the theorem checks and the theorem that is expected to apply.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .dist_core import (
    CountingDist,
    Exponential,
    FamilyTemplate,
    FiniteTable,
    Geometric,
    IndexExpr,
    IndexInRange,
    IndexIsPerfectSquare,
    Otherwise,
    Poisson,
    SequenceSpec,
    Uniform,
    UniformRange,
    WeibullRoot,
)

__all__ = ["Preset", "pareto_then_exponential", "exponential_then_uniforms", "weibull_with_square_spikes",
           "preset", "PRESET_IDS"]

PRESET_IDS = (1, 2, 3)


@dataclass(frozen=True)
class Preset:
    id: int
    name: str
    spec: SequenceSpec
    counting: CountingDist
    kappa: int
    theorem: int
    params: dict[str, Any] = field(default_factory=dict)
    D: int | None = None


def pareto_then_exponential(alpha: float = 2.0, lam: float = 1.0, D: int = 3, kappa: int = 1,
                            counting: CountingDist | None = None) -> Preset:
    """Pareto(scale=k, shape=alpha) for k <= D, then Exponential(lam / (k - D)).

    The default counting law is Geometric(1/2) on {0, 1, ...}, which charges
    every index and so exercises the whole infinite successor sequence.
    """
    if not 1 <= kappa <= D:
        raise ValueError("kappa must lie in 1..D")
    spec = SequenceSpec((
        (IndexInRange(1, D), FamilyTemplate("Pareto", {"scale": IndexExpr(1.0, 0.0), "shape": float(alpha)})),
        (Otherwise(), FamilyTemplate("Exponential", {"rate": IndexExpr(1.0, -float(D), numerator=float(lam))})),
    ))
    eta = counting if counting is not None else Geometric(0.5)
    return Preset(1, "pareto_then_exponential", spec, eta, kappa, 4,
                  {"alpha": alpha, "lam": lam, "D": D, "kappa": kappa}, D=D)


def exponential_then_uniforms(D: int = 5, rate: float = 1.0, kappa: int = 1) -> Preset:
    """Exponential(rate) first, Uniform(0, 1) after, with eta uniform on 1..D."""
    if D < 2:
        raise ValueError("D must be at least 2")
    spec = SequenceSpec((
        (IndexInRange(1, 1), Exponential(rate)),
        (Otherwise(), Uniform(0.0, 1.0)),
    ))
    return Preset(2, "exponential_then_uniforms", spec, UniformRange(D), kappa, 5,
                  {"D": D, "rate": rate, "kappa": kappa}, D=D)


def weibull_with_square_spikes(kappa: int = 2, lam: float = 1.0,
                               prefix: FiniteTable | None = None) -> Preset:
    """Finitely supported prefix, WeibullRoot at ``kappa``, PiecewiseExample3(m^2) at ``kappa + m^2``.

    All remaining indices are Exponential(1) and eta is Poisson(lam).
    """
    if kappa < 2:
        raise ValueError("kappa must be at least 2")
    head = prefix if prefix is not None else FiniteTable(((0.0, 0.5), (1.0, 0.5)))
    spec = SequenceSpec((
        (IndexInRange(1, kappa - 1), head),
        (IndexInRange(kappa, kappa), WeibullRoot()),
        (IndexIsPerfectSquare(offset=kappa, min_root=2),
         FamilyTemplate("PiecewiseExample3", {"level": IndexExpr(1.0, -float(kappa))})),
        (Otherwise(), Exponential(1.0)),
    ))
    return Preset(3, "weibull_with_square_spikes", spec, Poisson(lam), kappa, 6,
                  {"kappa": kappa, "lam": lam}, D=None)


def preset(example_id: int, **overrides: Any) -> Preset:
    """Build preset 1, 2 or 3; keyword overrides go to the matching builder."""
    builders = {1: pareto_then_exponential, 2: exponential_then_uniforms, 3: weibull_with_square_spikes}
    if example_id not in builders:
        raise ValueError(f"unknown example id {example_id}; expected one of {PRESET_IDS}")
    return builders[example_id](**overrides)
