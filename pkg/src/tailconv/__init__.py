"""Tails of sums and random sums of independent, non-identically distributed nonnegative variables.

The package computes survival functions of ``xi_1 + ... + xi_eta`` and checks
sufficient conditions under which the sum keeps an O-exponential tail, that is
``sup_x P(S > x - 1) / P(S > x) < inf``.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .dist_core import (  # noqa: E402
    COUNTING_FAMILIES,
    FAMILIES,
    CountingDist,
    SequenceSpec,
    TailModel,
    make_model,
    resolve,
)
from .tailgrid import TailGrid, hybrid_grid  # noqa: E402
from .convolve import conv_chain, conv_pair, exact_tail_oracle  # noqa: E402
from .random_sum import NumericalBudgetError, decomposition_trace, random_sum_tail  # noqa: E402
from .tail_classify import ClassVerdict, classify, comparability, ratio_profile  # noqa: E402
from .theorem_check import (  # noqa: E402
    ConditionReport,
    cesaro_condition,
    check_theorem4,
    check_theorem5,
    check_theorem6,
    lemma1_bound,
    rogozin_bound,
)
from .mc_oracle import estimate_concentration, simulate_random_sum  # noqa: E402
from .presets import preset  # noqa: E402

__all__ = [
    "__version__",
    "COUNTING_FAMILIES", "FAMILIES", "CountingDist", "SequenceSpec", "TailModel", "make_model", "resolve",
    "TailGrid", "hybrid_grid",
    "conv_chain", "conv_pair", "exact_tail_oracle",
    "NumericalBudgetError", "decomposition_trace", "random_sum_tail",
    "ClassVerdict", "classify", "comparability", "ratio_profile",
    "ConditionReport", "cesaro_condition", "check_theorem4", "check_theorem5", "check_theorem6",
    "lemma1_bound", "rogozin_bound",
    "estimate_concentration", "simulate_random_sum",
    "preset",
]
