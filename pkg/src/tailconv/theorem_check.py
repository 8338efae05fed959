"""Mechanical checks of the hypothesis lists of the three random-sum closure theorems.

Every condition gets a verdict ``pass``, ``fail`` or ``inconclusive`` with its
numeric evidence.  Limits are judged by :func:`tail_classify.window_trend`
over dyadic windows, in ``x`` and, for conditions uniform in the summand
index, also in ``k``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .dist_core import CountingDist, SequenceSpec, TailModel
from .tail_classify import (
    DEFAULT_X_MAX,
    _json_default,
    classify,
    comparability,
    dyadic_windows,
    window_trend,
)
from .tailgrid import hybrid_grid

__all__ = [
    "DEFAULT_K_MAX",
    "DEFAULT_DELTAS",
    "DEFAULT_ROGOZIN_A",
    "Condition",
    "ConditionReport",
    "SuccessorScan",
    "successor_scan",
    "check_theorem4",
    "check_theorem5",
    "check_theorem6",
    "cesaro_condition",
    "cesaro_running_means",
    "lemma1_bound",
    "lemma1_terms",
    "rogozin_bound",
]

DEFAULT_K_MAX = 10_000
DEFAULT_DELTAS = (0.1, 0.25, 0.5, 0.75, 0.9)
DEFAULT_ROGOZIN_A = 2.0
CESARO_MARGIN = 1e-9
# Condition 5 only involves closed-form tails, so its windows can reach far past x_max.
DOMINATION_X_MAX = 1e7


@dataclass(frozen=True)
class Condition:
    label: str
    verdict: str
    evidence: dict[str, Any] = field(default_factory=dict)

    def to_dict(self):
        return {"label": self.label, "verdict": self.verdict, "evidence": self.evidence}


@dataclass(frozen=True)
class ConditionReport:
    theorem: str
    kappa: int
    conditions: tuple[Condition, ...]
    parameters: dict[str, Any] = field(default_factory=dict)

    @property
    def overall(self) -> str:
        verdicts = [c.verdict for c in self.conditions]
        if any(v == "fail" for v in verdicts):
            return "does_not_apply"
        if all(v == "pass" for v in verdicts):
            return "applies"
        return "inconclusive"

    def condition(self, index: int) -> Condition:
        """1-based access in the order of the theorem's hypothesis list."""
        return self.conditions[index - 1]

    def to_dict(self):
        return {"theorem": self.theorem, "kappa": self.kappa, "overall": self.overall,
                "parameters": self.parameters, "conditions": [c.to_dict() for c in self.conditions]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_default)


def _require_support(counting: CountingDist, kappa: int) -> None:
    if int(kappa) != kappa or kappa < 1 or not counting.pmf(int(kappa)) > 0:
        raise ValueError(f"kappa={kappa} must be a positive integer with P(eta = kappa) > 0")


def _fin(v: float) -> float | str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return float(v)


# ---------------------------------------------------------------------------
# individual conditions
# ---------------------------------------------------------------------------


def _ol_condition(spec: SequenceSpec, kappa: int, x_max: float) -> Condition:
    v = classify(spec.resolve(kappa), "OL", x_max=x_max)
    verdict = {"member": "pass", "non_member": "fail"}.get(v.verdict, "inconclusive")
    ev = v.evidence.to_dict()
    return Condition(f"xi_{kappa} has an O-exponential tail", verdict,
                     {"model": spec.resolve(kappa).to_dict(), "class_verdict": v.verdict, "ratio_evidence": ev})


def _comparability_condition(spec: SequenceSpec, kappa: int, indices: Iterable[int], x_max: float,
                             label: str) -> Condition:
    ref = spec.resolve(kappa)
    per_k = []
    for k in indices:
        model = spec.resolve(k)
        cmp = comparability(model, ref, x_max)
        if cmp.verdict == "vanishing":
            per_k.append({"k": k, "verdict": "pass", "reason": "tail ratio vanishes", "comparability": cmp.verdict})
            continue
        ol = classify(model, "OL", x_max=x_max)
        if ol.verdict == "member":
            per_k.append({"k": k, "verdict": "pass", "reason": "O-exponential", "comparability": cmp.verdict})
        elif ol.verdict == "non_member" and cmp.verdict in ("bounded", "diverging"):
            per_k.append({"k": k, "verdict": "fail", "reason": "neither vanishing nor O-exponential",
                          "comparability": cmp.verdict})
        else:
            per_k.append({"k": k, "verdict": "inconclusive", "comparability": cmp.verdict, "OL": ol.verdict})
    verdicts = [p["verdict"] for p in per_k]
    verdict = "fail" if "fail" in verdicts else ("pass" if all(v == "pass" for v in verdicts) else "inconclusive")
    return Condition(label, verdict, {"per_index": per_k})


@dataclass(frozen=True, eq=False)
class SuccessorScan:
    """Per-successor log sups of ``survival(x - 1) / survival(x)`` for ``xi_{kappa + k}``."""

    ks: np.ndarray
    log_sup: np.ndarray  # sup over the whole x range
    argmax_x: np.ndarray
    late_log_sups: np.ndarray  # shape (len(ks), 3): sup over each late x window
    xs: np.ndarray
    x_windows: list[tuple[float, float]]


def successor_scan(spec: SequenceSpec, kappa: int, ks: Sequence[int], x_max: float, x_min: float = 0.0,
                   xs: np.ndarray | None = None) -> SuccessorScan:
    """Sup over ``x in [x_min, x_max]`` of the unit-shift ratio for ``xi_{kappa+k}``, ``k`` in ``ks``.

    Models repeated across indices are evaluated once.
    """
    grid = hybrid_grid(x_max) if xs is None else np.asarray(xs, dtype=float)
    grid = grid[grid >= x_min - 1e-12]
    wins = dyadic_windows(x_max)
    masks = [(grid >= lo - 1e-12) & (grid <= hi + 1e-12) for lo, hi in wins]
    cache: dict[Any, tuple[float, float, tuple[float, float, float]]] = {}
    ks = np.asarray(list(ks), dtype=np.int64)
    log_sup = np.empty(ks.size)
    arg = np.empty(ks.size)
    late = np.empty((ks.size, 3))
    for i, k in enumerate(ks):
        model = spec.resolve(int(kappa + k))
        if model not in cache:
            num, den = model.log_survival(grid - 1.0), model.log_survival(grid)
            with np.errstate(invalid="ignore"):
                lr = num - den
            lr = np.where(np.isneginf(den) & np.isfinite(num), np.inf, lr)
            lr = np.where(np.isnan(lr), -np.inf, lr)
            j = int(np.argmax(lr))
            cache[model] = (float(lr[j]), float(grid[j]),
                            tuple(float(np.max(lr[m])) if m.any() else math.nan for m in masks))
        log_sup[i], arg[i], late[i] = cache[model][0], cache[model][1], cache[model][2]
    return SuccessorScan(ks, log_sup, arg, late, grid, wins)


def _index_windows(k_max: int) -> list[tuple[float, float]]:
    return dyadic_windows(float(k_max))


def _k_trend(ks: np.ndarray, values: np.ndarray, k_max: int) -> tuple[str, list[float]]:
    """Window trend of per-k log values over ``k`` windows; tiny scans only need finiteness."""
    if k_max < 8:
        top = float(np.max(values)) if values.size else -math.inf
        return ("bounded" if math.isfinite(top) or top == -math.inf else "unbounded"), [top]
    sups = []
    for lo, hi in _index_windows(k_max):
        sel = (ks >= lo) & (ks <= hi)
        sups.append(float(np.max(values[sel])) if sel.any() else math.nan)
    return window_trend(sups), sups


def _square_indices(spec: SequenceSpec, kappa: int, k_max: int, min_terms: int = 64) -> list[np.ndarray]:
    """Successor offsets ``k`` hitting each perfect-square rule, always at least ``min_terms`` of them."""
    out = []
    for rule in spec.square_rules():
        m = np.arange(rule.min_root, rule.min_root + max(min_terms, math.isqrt(max(k_max, 1)) + 2))
        k = rule.offset + m * m - kappa
        k = k[k >= 1]
        # keep only indices actually governed by this rule (earlier rules win)
        k = np.array([kk for kk in k if _rule_of(spec, int(kappa + kk)) is rule], dtype=np.int64)
        if k.size:
            out.append(k)
    return out


def _rule_of(spec: SequenceSpec, index: int):
    for pred, _ in spec.rules:
        if pred.matches(index):
            return pred
    return None


def _square_trend(ks: np.ndarray, values: np.ndarray) -> tuple[str, list[float]]:
    """Trend along the subsequence ordered by position, in dyadic windows of the position."""
    n = values.size
    sups = []
    for lo, hi in dyadic_windows(float(n)):
        sel = np.arange(1, n + 1)
        sel = (sel >= lo) & (sel <= hi)
        sups.append(float(np.max(values[sel])) if sel.any() else math.nan)
    return window_trend(sups), sups


def _successor_condition(spec, kappa, x_max, k_max, late: bool) -> Condition:
    ks = np.arange(1, k_max + 1)
    scan = successor_scan(spec, kappa, ks, x_max)
    values = np.max(scan.late_log_sups, axis=1) if late else scan.log_sup
    k_trend, k_sups = _k_trend(ks, values, k_max)
    ev: dict[str, Any] = {"x_max": x_max, "k_max": k_max, "k_windows": [list(w) for w in _index_windows(k_max)],
                          "k_window_sups": [_fin(math.exp(s)) if s < 709 else "inf" for s in k_sups],
                          "k_trend": k_trend}
    finite = np.all(np.isfinite(values))
    j = int(np.argmax(values))
    ev["sup"] = _fin(math.exp(values[j])) if values[j] < 709 else "inf"
    ev["argmax_k"] = int(ks[j])
    verdict_parts = [k_trend]
    if late:
        x_sups = [float(np.max(scan.late_log_sups[:, w])) for w in range(3)]
        x_trend = window_trend(x_sups)
        ev.update(x_windows=[list(w) for w in scan.x_windows], x_window_sups=[_fin(math.exp(min(s, 709))) for s in x_sups],
                  x_trend=x_trend)
        verdict_parts.append(x_trend)
    else:
        ev["argmax_x"] = float(scan.argmax_x[j])
    squares = []
    for sq in _square_indices(spec, kappa, k_max):
        sq_scan = successor_scan(spec, kappa, sq, x_max)
        sv = np.max(sq_scan.late_log_sups, axis=1) if late else sq_scan.log_sup
        trend, sups = _square_trend(sq, sv)
        squares.append({"k_first": int(sq[0]), "k_last": int(sq[-1]), "n_terms": int(sq.size), "trend": trend,
                        "window_sups": [_fin(math.exp(min(s, 709))) for s in sups],
                        "diverging": trend == "unbounded"})
        verdict_parts.append(trend)
    if squares:
        ev["perfect_square_subsequence"] = squares
        ev["diverging_on_perfect_squares"] = any(s["diverging"] for s in squares)
    if not finite or "unbounded" in verdict_parts:
        verdict = "fail"
    elif all(p == "bounded" for p in verdict_parts):
        verdict = "pass"
    else:
        verdict = "inconclusive"
    label = ("limsup over x of the sup over k of the successor unit-shift ratio is finite" if late
             else "sup over x >= 0 and k >= 1 of the successor unit-shift ratio is finite")
    return Condition(label, verdict, ev)


def cesaro_running_means(spec: SequenceSpec, kappa: int, k_max: int) -> np.ndarray:
    """Running means ``(1/k) sum_{l<=k} sup_x (S(x-1) - S(x))`` of ``xi_{kappa+l}``, k = 1..k_max."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    cache: dict[Any, float] = {}
    vals = np.empty(k_max)
    for l in range(1, k_max + 1):
        model = spec.resolve(kappa + l)
        if model not in cache:
            cache[model] = float(model.unit_window_sup(1.0))
        vals[l - 1] = cache[model]
    return np.cumsum(vals) / np.arange(1, k_max + 1)


def cesaro_condition(spec: SequenceSpec, kappa: int, k_max: int = DEFAULT_K_MAX) -> float:
    """``(1/k_max) sum_{l=1}^{k_max} sup_{x >= 0} (S(x - 1) - S(x))`` over the successors of ``kappa``.

    Windows are half-open, ``(x - 1, x]``, matching the survival difference.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    sups: dict[Any, float] = {}
    counts: dict[Any, int] = {}
    for l in range(1, k_max + 1):
        model = spec.resolve(kappa + l)
        if model not in sups:
            sups[model] = float(model.unit_window_sup(1.0))
            counts[model] = 0
        counts[model] += 1
    # weights first, so a single repeated model returns its sup unchanged
    return min(1.0, math.fsum(sups[m] * (counts[m] / k_max) for m in sups))


def _cesaro_condition_report(spec, kappa, k_max) -> Condition:
    means = cesaro_running_means(spec, kappa, k_max)
    value = cesaro_condition(spec, kappa, k_max)
    ks = np.arange(1, k_max + 1)
    last = [float(np.max(means[(ks >= lo) & (ks <= hi)])) if ((ks >= lo) & (ks <= hi)).any() else math.nan
            for lo, hi in _index_windows(k_max)] if k_max >= 8 else [float(means[-1])]
    late_sup = max(v for v in last if not math.isnan(v))
    if late_sup <= 1.0 - CESARO_MARGIN:
        verdict = "pass"
    elif float(np.min(means[k_max // 2:])) >= 1.0 - 1e-12:
        verdict = "fail"
    else:
        verdict = "inconclusive"
    return Condition("limsup of the Cesaro means of successor unit-window masses is below 1", verdict,
                     {"k_max": k_max, "value_at_k_max": value, "late_window_sups": last, "margin": 1.0 - late_sup})


def _counting_domination(counting: CountingDist, spec: SequenceSpec, kappa: int, x_max: float,
                         deltas: Sequence[float]) -> Condition:
    xs = hybrid_grid(min(x_max, DEFAULT_X_MAX))
    if x_max > DEFAULT_X_MAX:
        xs = np.concatenate([xs, np.geomspace(xs[-1], x_max, 4001)[1:]])
    xs = xs[xs > 0]
    ref = spec.resolve(kappa).log_survival(xs)
    per = []
    for d in deltas:
        if not 0 < d < 1:
            raise ValueError("every delta must lie in (0, 1)")
        lt = np.asarray(counting.log_tail(d * xs), dtype=float)
        with np.errstate(invalid="ignore"):
            g = lt - 0.5 * np.log(xs) - ref
        g = np.where(np.isneginf(ref) & ~np.isneginf(lt), np.inf, g)
        g = np.where(np.isnan(g), -np.inf, g)
        sups = []
        for lo, hi in dyadic_windows(x_max):
            sel = (xs >= lo - 1e-12) & (xs <= hi + 1e-12)
            sups.append(float(np.max(g[sel])))
        trend = window_trend(sups)
        per.append({"delta": d, "window_log_sups": [_fin(s) for s in sups], "trend": trend,
                    "verdict": {"bounded": "pass", "unbounded": "fail"}.get(trend, "inconclusive")})
    verdicts = [p["verdict"] for p in per]
    verdict = "fail" if "fail" in verdicts else ("pass" if all(v == "pass" for v in verdicts) else "inconclusive")
    return Condition("P(eta > delta x) = O(sqrt(x) survival_kappa(x)) for each delta", verdict,
                     {"x_max": x_max, "per_delta": per})


# ---------------------------------------------------------------------------
# theorem checkers
# ---------------------------------------------------------------------------


def _support_upto(counting: CountingDist, kappa: int) -> list[int]:
    return [k for k in range(1, kappa + 1) if counting.pmf(k) > 0]


def check_theorem4(spec: SequenceSpec, counting: CountingDist, kappa: int, x_max: float = DEFAULT_X_MAX,
                   k_max: int = DEFAULT_K_MAX) -> ConditionReport:
    """Three conditions: ``xi_kappa`` in OL; earlier support indices vanish or are OL; the
    successor unit-shift ratios are bounded uniformly in ``x >= 0`` and ``k >= 1``.
    """
    _require_support(counting, kappa)
    conds = (
        _ol_condition(spec, kappa, x_max),
        _comparability_condition(spec, kappa, _support_upto(counting, kappa), x_max,
                                 "each support index k <= kappa has a vanishing tail ratio or an OL tail"),
        _successor_condition(spec, kappa, x_max, int(k_max), late=False),
    )
    return ConditionReport("T4", int(kappa), conds, {"x_max": x_max, "k_max": int(k_max)})


def check_theorem5(spec: SequenceSpec, counting: CountingDist, kappa: int, D: int,
                   x_max: float = DEFAULT_X_MAX) -> ConditionReport:
    """Three conditions: ``P(eta <= D) = 1``; ``xi_kappa`` in OL for a support index; every
    index ``1..D`` vanishes against ``xi_kappa`` or is OL.
    """
    tail_d = float(counting.tail(D))
    c1 = Condition("P(eta <= D) = 1", "pass" if tail_d == 0.0 else "fail", {"D": int(D), "P(eta > D)": tail_d})
    if int(kappa) != kappa or kappa < 1 or not counting.pmf(int(kappa)) > 0:
        c2 = Condition(f"xi_{kappa} has an O-exponential tail", "fail", {"reason": "kappa outside supp(eta)"})
    else:
        c2 = _ol_condition(spec, int(kappa), x_max)
    c3 = _comparability_condition(spec, int(kappa), range(1, int(D) + 1), x_max,
                                  "each index k <= D has a vanishing tail ratio or an OL tail")
    return ConditionReport("T5", int(kappa), (c1, c2, c3), {"x_max": x_max, "D": int(D)})


def check_theorem6(spec: SequenceSpec, counting: CountingDist, kappa: int, x_max: float = DEFAULT_X_MAX,
                   k_max: int = DEFAULT_K_MAX, deltas: Sequence[float] = DEFAULT_DELTAS,
                   domination_x_max: float = DOMINATION_X_MAX) -> ConditionReport:
    """Five conditions: the first two as for the three-condition theorem, a limsup-in-x version
    of the successor bound, the Cesaro condition below 1 and the counting-tail domination.

    The domination windows run up to ``max(x_max, domination_x_max)``: a Poisson
    tail at ``0.1 x`` only drops below ``exp(-x)`` past ``x ~ 2e5``.
    """
    _require_support(counting, kappa)
    conds = (
        _ol_condition(spec, kappa, x_max),
        _comparability_condition(spec, kappa, _support_upto(counting, kappa), x_max,
                                 "each support index k <= kappa has a vanishing tail ratio or an OL tail"),
        _successor_condition(spec, kappa, x_max, int(k_max), late=True),
        _cesaro_condition_report(spec, kappa, int(k_max)),
        _counting_domination(counting, spec, kappa, max(x_max, domination_x_max), deltas),
    )
    return ConditionReport("T6", int(kappa), conds, {"x_max": x_max, "k_max": int(k_max), "deltas": list(deltas),
                                                    "domination_x_max": max(x_max, domination_x_max)})


# ---------------------------------------------------------------------------
# supporting bounds
# ---------------------------------------------------------------------------


def _ratio_sup_from(model: TailModel, start: float, t: float, span: float) -> float:
    ys = start + hybrid_grid(span)
    num, den = model.log_survival(ys - t), model.log_survival(ys)
    if np.any(np.isneginf(den)):
        return math.inf
    return float(np.exp(np.max(num - den)))


def lemma1_terms(tail_f: TailModel, tail_g: TailModel, x: float, v: float, t: float,
                 span: float | None = None) -> dict[str, Any]:
    """Both sups of the convolution-ratio bound and a flag when a tail vanishes on its range."""
    if not t > 0:
        raise ValueError("t must be positive")
    reach = span if span is not None else max(200.0, 4.0 * abs(x) + 4.0 * abs(v))
    sup_f = _ratio_sup_from(tail_f, v, t, reach)
    sup_g = _ratio_sup_from(tail_g, x - v + t, t, reach)
    return {"sup_f": sup_f, "sup_g": sup_g, "bound": max(sup_f, sup_g),
            "vanishing_tail": math.isinf(sup_f) or math.isinf(sup_g), "span": reach}


def lemma1_bound(tail_f: TailModel, tail_g: TailModel, x: float, v: float, t: float,
                 span: float | None = None) -> float:
    """``max{sup_{y>=v} F(y-t)/F(y), sup_{y>=x-v+t} G(y-t)/G(y)}`` on a grid of length ``span``.

    Returns ``inf`` when a tail vanishes on its range (see :func:`lemma1_terms` for the flag).
    """
    return lemma1_terms(tail_f, tail_g, x, v, t, span)["bound"]


def rogozin_bound(models: Sequence[TailModel], lam: float, lam_k: Sequence[float],
                  A: float = DEFAULT_ROGOZIN_A) -> float:
    """``A lam / sqrt(sum_k lam_k^2 (1 - Q_k(lam_k)))``, or ``inf`` when the sum vanishes."""
    if not A > 0:
        raise ValueError("A must be positive")
    if len(models) != len(lam_k):
        raise ValueError("need one lam_k per model")
    total = 0.0
    for m, lk in zip(models, lam_k):
        if not 0 < lk <= lam:
            raise ValueError(f"each lam_k must lie in (0, lam]; got {lk}")
        total += lk * lk * (1.0 - m.concentration(lk))
    if total <= 0:
        return math.inf
    return A * lam / math.sqrt(total)
