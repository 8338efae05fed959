"""Tails of random sums ``S_eta`` as truncated mixtures of partial-sum tails."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .convolve import _as_nodes, lattice_partial_sum_tails
from .dist_core import CountingDist, SequenceSpec
from .tailgrid import TailGrid

__all__ = [
    "NumericalBudgetError",
    "DEFAULT_N_MAX",
    "truncation_plan",
    "random_sum_tail",
    "DecompositionTrace",
    "decomposition_trace",
    "j_split",
]

DEFAULT_N_MAX = 100_000


class NumericalBudgetError(RuntimeError):
    """Raised when the requested accuracy needs more summands than allowed."""

    def __init__(self, message: str, attained_bound: float):
        super().__init__(message)
        self.attained_bound = attained_bound


def truncation_plan(counting: CountingDist, eps: float, n_max: int = DEFAULT_N_MAX) -> int:
    """Smallest ``N`` with ``P(eta > N) <= eps``; refuses when ``N`` would exceed ``n_max``."""
    n = counting.truncation_level(eps, n_max)
    if n > n_max:
        attained = float(counting.tail(n_max))
        raise NumericalBudgetError(
            f"P(eta > N) <= {eps:g} needs N > {n_max}; the best attainable remainder is {attained:.3e}",
            attained,
        )
    return int(n)


def _mixture_rows(spec: SequenceSpec, counting: CountingDist, xs: np.ndarray, tol: float, n_max: int,
                  n_floor: int = 0):
    """Partial-sum tails for n = 1..N with the counting pmf and the truncation remainder."""
    n_trunc = max(truncation_plan(counting, tol / 2.0, n_max), n_floor)
    pmf = np.asarray(counting.pmf(np.arange(n_trunc + 1)), dtype=float)
    remainder = float(counting.tail(n_trunc))
    if n_trunc == 0:
        return pmf, np.zeros((0, xs.size)), np.zeros((0, xs.size)), remainder, None
    models = spec.models(n_trunc)
    if n_trunc == 1:
        tails = models[0].survival(xs)[None, :]
        return pmf, tails, 4.0 * np.finfo(float).eps * tails, remainder, None
    res = lattice_partial_sum_tails(models, xs, tol / 2.0, weights=pmf[1:])
    return pmf, res.tails, res.errors, remainder, res


def random_sum_tail(
    spec: SequenceSpec,
    counting: CountingDist,
    x_grid=None,
    tol: float = 1e-6,
    n_max: int = DEFAULT_N_MAX,
) -> TailGrid:
    """``P(S_eta > x) = sum_n P(eta = n) P(S_n > x)`` on ``x_grid``.

    The sum stops at the smallest ``N`` with ``P(eta > N) <= tol / 2``; the
    discarded mass is charged in full (``P(S_n > x) <= 1``).  The other half of
    the budget goes to the partial-sum tails, weighted by the counting pmf.
    ``S_0 = 0`` contributes nothing for ``x >= 0``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    xs = _as_nodes(x_grid)
    pmf, tails, errors, remainder, res = _mixture_rows(spec, counting, xs, tol, n_max)
    weights = pmf[1:]
    values = weights @ tails if tails.size else np.zeros(xs.size)
    node_err = (weights @ errors if errors.size else np.zeros(xs.size)) + remainder
    attained = res.tol_attained if res is not None else True
    prov: dict[str, Any] = {
        "operation": "random_sum_tail",
        "tol": tol,
        "truncation_N": int(pmf.size - 1),
        "truncation_remainder": remainder,
        "method": "lattice" if res is not None else "exact",
    }
    if res is not None:
        prov["step"] = res.step
        prov["tilt"] = res.tilt
    bound = float(node_err.max())
    return TailGrid.from_survival(xs, values, abs_error_bound=bound, tol_attained=bool(attained and bound <= tol),
                                  node_errors=node_err, provenance=prov)


@dataclass(frozen=True)
class DecompositionTrace:
    """The four-term split of ``P(S_eta > x - 1)`` around the index ``kappa``."""

    x: float
    kappa: int
    K: float
    K1: float
    K2: float
    K3: float
    K4: float
    total: float
    tail_at_x: float
    error_bound: float
    split_index: float
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def terms(self) -> tuple[float, float, float, float]:
        return (self.K1, self.K2, self.K3, self.K4)

    def to_dict(self) -> dict[str, Any]:
        return {
            "x": self.x,
            "kappa": self.kappa,
            "K": self.K,
            "K1": self.K1,
            "K2": self.K2,
            "K3": self.K3,
            "K4": self.K4,
            "sum": math.fsum(self.terms),
            "tail_at_x_minus_1": self.total,
            "tail_at_x": self.tail_at_x,
            "K4_over_tail_at_x": self.K4 / self.tail_at_x if self.tail_at_x > 0 else None,
            "error_bound": self.error_bound,
            "split_index": self.split_index,
            **self.extras,
        }


def _check_kappa(counting: CountingDist, kappa: int) -> None:
    if int(kappa) != kappa or kappa < 1 or not counting.pmf(kappa) > 0:
        raise ValueError(f"kappa={kappa} must be a positive integer in the support of the counting law")


def decomposition_trace(
    spec: SequenceSpec,
    counting: CountingDist,
    kappa: int,
    K: float,
    x: float,
    tol: float = 1e-8,
    n_max: int = DEFAULT_N_MAX,
) -> DecompositionTrace:
    """Split ``P(S_eta > x - 1)`` into the four proof terms.

    * ``K1``: indices ``n <= kappa``;
    * ``K2``: ``n = kappa + k`` with ``1 <= k <= (x - 1) / (K - 1)``;
    * ``K3``: larger ``k``, the window probability ``P(x - 1 < S_n <= x)``;
    * ``K4``: larger ``k``, the excess probability ``P(S_n > x)``.

    Requires ``K > 2`` and ``x >= 2K``.
    """
    if not K > 2:
        raise ValueError("K must exceed 2")
    if x < 2 * K:
        raise ValueError(f"x={x} must be at least 2K={2 * K}")
    _check_kappa(counting, kappa)
    xs = np.array([x - 1.0, x])
    pmf, tails, errors, remainder, _ = _mixture_rows(spec, counting, xs, tol, n_max, n_floor=kappa)
    n_idx = np.arange(1, pmf.size)
    w = pmf[1:]
    above = tails[:, 0]
    above_x = tails[:, 1]
    split = (x - 1.0) / (K - 1.0)
    k = n_idx - kappa
    low = n_idx <= kappa
    mid = (k >= 1) & (k <= split)
    high = k > split
    k1 = float(np.dot(w[low], above[low]))
    k2 = float(np.dot(w[mid], above[mid]))
    k3 = float(np.dot(w[high], np.maximum(above[high] - above_x[high], 0.0)))
    k4 = float(np.dot(w[high], above_x[high]))
    total = float(np.dot(w, above))
    tail_x = float(np.dot(w, above_x))
    err = float(np.dot(w, errors.max(axis=1))) + remainder if errors.size else remainder
    return DecompositionTrace(x=float(x), kappa=int(kappa), K=float(K), K1=k1, K2=k2, K3=k3, K4=k4, total=total,
                              tail_at_x=tail_x, error_bound=err, split_index=split,
                              extras={"truncation_N": int(pmf.size - 1)})


def j_split(spec: SequenceSpec, counting: CountingDist, kappa: int, x: float, tol: float = 1e-8,
            n_max: int = DEFAULT_N_MAX) -> dict[str, float]:
    """``J1``/``J2``: the parts of ``P(S_eta > x - 1) / P(S_eta > x)`` from ``eta <= kappa`` and ``eta > kappa``.

    Also reports the bound ``P(S_kappa > x-1) / P(S_kappa > x) * P(eta <= kappa) / P(eta = kappa)``
    that dominates ``J1``.
    """
    _check_kappa(counting, kappa)
    xs = np.array([max(x - 1.0, 0.0), x])
    pmf, tails, errors, remainder, _ = _mixture_rows(spec, counting, xs, tol, n_max, n_floor=kappa)
    w = pmf[1:]
    n_idx = np.arange(1, pmf.size)
    denom = float(np.dot(w, tails[:, 1]))
    low = n_idx <= kappa
    j1 = float(np.dot(w[low], tails[low, 0])) / denom
    j2 = float(np.dot(w[~low], tails[~low, 0])) / denom
    sk = tails[kappa - 1]
    bound = (sk[0] / sk[1]) * float(counting.tail(-1) - counting.tail(kappa)) / float(counting.pmf(kappa))
    return {"x": float(x), "kappa": int(kappa), "J1": j1, "J2": j2, "J1_bound": float(bound),
            "error_bound": float(np.dot(w, errors.max(axis=1))) + remainder if errors.size else remainder}
