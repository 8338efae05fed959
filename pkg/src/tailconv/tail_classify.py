"""Finite-grid verdicts for the tail classes OL, L, L(gamma), D, S and S*.

All asymptotic statements are judged by one rule over three dyadic windows
``[x_max/8, x_max/4]``, ``[x_max/4, x_max/2]`` and ``[x_max/2, x_max]``:

* **bounded**: the window sups are finite and none exceeds its predecessor by
  more than 5%;
* **unbounded**: each window sup exceeds its predecessor by at least 25%;
* **inconclusive**: anything else.

The comparison works on log values, so a ratio of ``1e300`` is as easy to
judge as a ratio of 3.  ``inconclusive`` is a first-class answer.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .convolve import conv_pair
from .dist_core import TabulatedTail, TailModel
from .tailgrid import TailGrid, hybrid_grid

__all__ = [
    "DEFAULT_X_MAX",
    "BOUNDED_GROWTH",
    "DIVERGING_GROWTH",
    "EPS_L",
    "L_DECAY",
    "RELIABILITY_FACTOR",
    "CLASS_NAMES",
    "RatioReport",
    "ClassVerdict",
    "Comparison",
    "dyadic_windows",
    "window_trend",
    "reliable_x_max",
    "ratio_profile",
    "classify",
    "comparability",
]

DEFAULT_X_MAX = 200.0
BOUNDED_GROWTH = 1.05
DIVERGING_GROWTH = 1.25
EPS_L = 0.01
L_DECAY = 0.8
S_TARGET_TOL = 0.05
S_MISS_TOL = 0.25
RELIABILITY_FACTOR = 1000.0
MIN_X_MAX = 8.0

CLASS_NAMES = ("OL", "L", "L(gamma)", "D", "S", "Sstar")
_ALIASES = {
    "OL": "OL", "L": "L", "L(gamma)": "L(gamma)", "L(γ)": "L(gamma)", "Lgamma": "L(gamma)",
    "D": "D", "S": "S", "Sstar": "Sstar", "S*": "Sstar",
}


def dyadic_windows(x_max: float) -> list[tuple[float, float]]:
    return [(x_max / 8, x_max / 4), (x_max / 4, x_max / 2), (x_max / 2, x_max)]


def _window_stats(xs: np.ndarray, values: np.ndarray, x_max: float):
    sups, infs, means = [], [], []
    for lo, hi in dyadic_windows(x_max):
        sel = (xs >= lo - 1e-12) & (xs <= hi + 1e-12)
        v = values[sel]
        v = v[~np.isnan(v)]
        if v.size == 0:
            sups.append(math.nan)
            infs.append(math.nan)
            means.append(math.nan)
        else:
            sups.append(float(np.max(v)))
            infs.append(float(np.min(v)))
            means.append(float(np.mean(v)) if np.all(np.isfinite(v)) else float(np.max(v)))
    return sups, infs, means


def window_trend(log_sups: list[float]) -> str:
    """Apply the three-window rule to log-scale window sups."""
    if any(math.isnan(s) for s in log_sups):
        return "inconclusive"
    if any(s == math.inf for s in log_sups):
        return "unbounded"
    up, down = math.log(DIVERGING_GROWTH), math.log(BOUNDED_GROWTH)
    steps = [(a, b) for a, b in zip(log_sups, log_sups[1:])]
    if all(b == -math.inf or (a != -math.inf and b <= a + down) or (a == -math.inf and b == -math.inf)
           for a, b in steps):
        return "bounded"
    if all(a != -math.inf and b >= a + up for a, b in steps):
        return "unbounded"
    return "inconclusive"


_TREND_WORD = {"bounded": "stabilizing", "unbounded": "diverging", "inconclusive": "oscillating"}


def _log_tail(tail) -> Any:
    if isinstance(tail, TailGrid):
        return tail.log_survival_at
    if isinstance(tail, TailModel):
        return tail.log_survival
    raise TypeError("tail must be a TailModel or a TailGrid")


def reliable_x_max(tail, x_max: float) -> float:
    """For grids: the largest node up to which survival stays >= 1000 x the error bound."""
    if not isinstance(tail, TailGrid):
        return float(x_max)
    s = tail.survival
    # per-node bounds, when the grid has them, are sharper than the uniform one in the deep tail
    bound = tail.node_errors if tail.node_errors is not None else tail.abs_error_bound
    ok = s >= RELIABILITY_FACTOR * bound
    if tail.abs_error_bound == 0:
        ok = np.isfinite(tail.log_survival) | (tail.xs <= tail.xs[0])
    bad = np.nonzero(~ok)[0]
    last = tail.xs[bad[0] - 1] if bad.size and bad[0] > 0 else (tail.xs[0] if bad.size else tail.xs[-1])
    return float(min(x_max, last))


@dataclass(frozen=True, eq=False)
class RatioReport:
    """The ratio ``survival(x - a) / survival(x)`` (or ``survival(a x) / survival(x)``) on a grid."""

    offset: float
    mode: str
    xs: np.ndarray
    log_ratio: np.ndarray
    window_log_sups: tuple[float, float, float]
    window_log_infs: tuple[float, float, float]
    window_log_means: tuple[float, float, float]
    x_max: float
    trend: str
    verdict: str
    bounded_support: bool = False

    @property
    def ratios(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_ratio)

    @property
    def grid(self) -> list[tuple[float, float]]:
        return list(zip(self.xs.tolist(), self.ratios.tolist()))

    @property
    def windowed_sup(self) -> float:
        return _exp(self.window_log_sups[-1])

    @property
    def global_sup(self) -> float:
        lr = self.log_ratio[~np.isnan(self.log_ratio)]
        return _exp(float(np.max(lr))) if lr.size else math.nan

    def to_dict(self) -> dict[str, Any]:
        return {
            "offset": self.offset,
            "mode": self.mode,
            "x_max": self.x_max,
            "windows": [list(w) for w in dyadic_windows(self.x_max)],
            "window_sups": [_exp(v) for v in self.window_log_sups],
            "window_log_sups": list(self.window_log_sups),
            "windowed_sup": self.windowed_sup,
            "global_sup": self.global_sup,
            "trend": self.trend,
            "verdict": self.verdict,
            "bounded_support": self.bounded_support,
            "n_points": int(self.xs.size),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,log_ratio,ratio\n")
        for x, lr, r in zip(self.xs, self.log_ratio, self.ratios):
            buf.write(f"{x!r},{float(lr)!r},{float(r)!r}\n")
        return buf.getvalue()


def _exp(v: float) -> float:
    if math.isnan(v):
        return math.nan
    if v > 709.0:
        return math.inf
    return math.exp(v)


def ratio_profile(tail, a: float = 1.0, x_max: float = DEFAULT_X_MAX, mode: str = "additive",
                  xs: np.ndarray | None = None) -> RatioReport:
    """Profile ``r(x) = survival(x - a) / survival(x)`` on the hybrid grid up to ``x_max``.

    ``mode="multiplicative"`` uses ``survival(a x) / survival(x)`` instead.
    ``survival`` is 1 left of 0, so ``r = 1 / survival(x)`` on ``[0, a)``.  A
    tail that hits zero inside the range gives an infinite ratio, the verdict
    ``unbounded`` and ``bounded_support=True``.  Grid tails are only read up
    to their reliable range.
    """
    if a == 0:
        raise ValueError("offset a must be nonzero")
    if mode not in ("additive", "multiplicative"):
        raise ValueError("mode must be 'additive' or 'multiplicative'")
    x_top = reliable_x_max(tail, x_max)
    if xs is None:
        xs = hybrid_grid(x_top)
    xs = np.asarray(xs, dtype=float)
    xs = xs[xs <= x_top + 1e-12]
    ls = _log_tail(tail)
    shifted = xs - a if mode == "additive" else a * xs
    num, den = np.asarray(ls(shifted)), np.asarray(ls(xs))
    with np.errstate(invalid="ignore"):
        lr = num - den
    lr = np.where(np.isneginf(den) & np.isfinite(num), np.inf, lr)
    bounded_support = bool(np.any(np.isneginf(den)))
    sups, infs, means = _window_stats(xs, lr, x_top)
    verdict = "unbounded" if bounded_support else window_trend(sups)
    return RatioReport(float(a), mode, xs, lr, tuple(sups), tuple(infs), tuple(means), float(x_top),
                       _TREND_WORD[verdict], verdict, bounded_support)


@dataclass(frozen=True, eq=False)
class ClassVerdict:
    class_name: str
    verdict: str
    evidence: Any
    gamma_estimate: float | None = None
    rule: str = ""
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        ev = self.evidence.to_dict() if hasattr(self.evidence, "to_dict") else self.evidence
        out = {"class_name": self.class_name, "verdict": self.verdict, "rule": self.rule, "evidence": ev,
               "details": self.details}
        if self.gamma_estimate is not None:
            out["gamma_estimate"] = self.gamma_estimate
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o).__name__)


@dataclass(frozen=True, eq=False)
class SeriesEvidence:
    """A diagnostic series judged against a target limit."""

    name: str
    xs: np.ndarray
    values: np.ndarray
    target: float
    window_sups: tuple[float, ...]
    window_devs: tuple[float, ...]
    window_min_devs: tuple[float, ...]
    x_max: float
    trend: str

    def to_dict(self):
        return {"name": self.name, "target": self.target, "x_max": self.x_max,
                "windows": [list(w) for w in dyadic_windows(self.x_max)],
                "window_sups": list(self.window_sups), "window_deviation_sups": list(self.window_devs),
                "window_deviation_infs": list(self.window_min_devs), "trend": self.trend,
                "final_value": float(self.values[-1]) if self.values.size else None}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"x,{self.name}\n")
        for x, v in zip(self.xs, self.values):
            buf.write(f"{x!r},{float(v)!r}\n")
        return buf.getvalue()


def _as_model(tail) -> TailModel:
    return TabulatedTail(tail) if isinstance(tail, TailGrid) else tail


def _target_series_verdict(name, xs, values, target, x_top):
    """Judge a series that should tend to ``target`` (2 for S, 1 for S*)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        logv = np.log(values)
    sups, _, _ = _window_stats(xs, logv, x_top)
    dev = np.abs(values - target)
    dsup, dinf, _ = _window_stats(xs, dev, x_top)
    trend = window_trend(sups)
    ev = SeriesEvidence(name, xs, values, target, tuple(_exp(s) for s in sups), tuple(dsup), tuple(dinf), x_top,
                        _TREND_WORD[trend])
    if x_top < MIN_X_MAX or any(math.isnan(d) for d in dsup):
        return "inconclusive", ev
    if trend == "unbounded":
        return "non_member", ev
    if dsup[2] <= S_TARGET_TOL * target and dsup[2] <= dsup[1] <= dsup[0]:
        return "member", ev
    # a settled limit away from the target: no progress between windows nor inside the last one
    stalled = dsup[2] >= 0.95 * dsup[1] and dsup[1] >= 0.95 * dsup[0] and dinf[2] >= 0.9 * dsup[2]
    if trend == "bounded" and dinf[2] >= S_MISS_TOL * target and stalled:
        return "non_member", ev
    return "inconclusive", ev


def _classify_s(tail, x_max):
    model = _as_model(tail)
    x_top = reliable_x_max(tail, x_max)
    xs = hybrid_grid(x_top)
    conv = conv_pair(model, model, xs, tol=1e-300, rtol=1e-9)
    ls = model.log_survival(xs)
    with np.errstate(invalid="ignore"):
        logr = conv.log_survival - ls
    ok = np.isfinite(logr)
    rel_err = conv.node_errors / np.maximum(conv.survival, 1e-300)
    ok &= rel_err <= 1e-6
    bad = np.nonzero(~ok)[0]
    if bad.size:
        first = bad[0]
        x_top = float(xs[first - 1]) if first > 0 else 0.0
    keep = xs <= x_top
    with np.errstate(over="ignore"):
        values = np.exp(logr[keep])
    return _target_series_verdict("self_convolution_ratio", xs[keep], values, 2.0, x_top)


def _integrated_product(model: TailModel, x: float, rtol: float = 1e-10) -> float:
    """``int_0^x S(x - y) S(y) dy`` by composite Gauss-Legendre with panel doubling.

    By symmetry only ``[0, x/2]`` is integrated, in the variable ``u = sqrt(y)``
    so that square-root behaviour at the origin becomes smooth; kinks of the
    tail are panel breakpoints.
    """
    gx, gw = np.polynomial.legendre.leggauss(16)
    u_top = math.sqrt(0.5 * x)
    kinks = np.array([k for k in model.kinks() if 0 < k < x], dtype=float)
    marks = np.concatenate([np.sqrt(kinks), np.sqrt(np.maximum(x - kinks, 0.0))])
    marks = marks[(marks > 0) & (marks < u_top)]

    def est(panels):
        edges = np.unique(np.concatenate([np.linspace(0.0, u_top, panels + 1), marks]))
        mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
        u = mid[:, None] + half[:, None] * gx[None, :]
        y = u * u
        vals = 2.0 * u * np.exp(model.log_survival(x - y) + model.log_survival(y))
        return 2.0 * float(np.sum(half[:, None] * gw[None, :] * vals))

    panels = 8
    prev = est(panels)
    while panels < 1 << 12:
        panels *= 2
        cur = est(panels)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    return prev


def _classify_sstar(tail, x_max):
    model = _as_model(tail)
    mu = model.mean
    if mu is None or not math.isfinite(mu):
        raise ValueError("the S* diagnostic needs a tail with finite mean")
    x_top = reliable_x_max(tail, x_max)
    xs = hybrid_grid(x_top)
    xs = xs[xs > 0]
    ls = model.log_survival(xs)
    ok = np.isfinite(ls) & (ls > -700)
    if not ok.all():
        x_top = float(xs[np.nonzero(~ok)[0][0] - 1]) if (~ok).nonzero()[0][0] > 0 else 0.0
    keep = xs <= x_top
    xs = xs[keep]
    vals = np.array([_integrated_product(model, float(x)) for x in xs]) / (2.0 * mu * np.exp(ls[keep]))
    return _target_series_verdict("integrated_product_ratio", xs, vals, 1.0, x_top)


def classify(tail, class_name: str, params: dict[str, Any] | None = None,
             x_max: float = DEFAULT_X_MAX) -> ClassVerdict:
    """Numerical class-membership verdict with its evidence.

    ``params``: ``eps_L`` (default 0.01) for L, ``gamma`` (optional target)
    for L(gamma), ``a`` (default 1/2) for D.
    """
    params = dict(params or {})
    if class_name not in _ALIASES:
        raise ValueError(f"unknown class {class_name!r}; expected one of {CLASS_NAMES}")
    name = _ALIASES[class_name]
    if name == "OL":
        rp = ratio_profile(tail, 1.0, x_max)
        v = {"bounded": "member", "unbounded": "non_member"}.get(rp.verdict, "inconclusive")
        return ClassVerdict("OL", v, rp, rule="bounded ratio survival(x-1)/survival(x) over the three windows")
    if name == "D":
        a = float(params.get("a", 0.5))
        if not 0 < a < 1:
            raise ValueError("D needs a multiplicative offset in (0, 1)")
        rp = ratio_profile(tail, a, x_max, mode="multiplicative")
        v = {"bounded": "member", "unbounded": "non_member"}.get(rp.verdict, "inconclusive")
        return ClassVerdict("D", v, rp, rule=f"bounded ratio survival({a} x)/survival(x)")
    if name == "L":
        return _classify_l(tail, x_max, float(params.get("eps_L", EPS_L)))
    if name == "L(gamma)":
        return _classify_lgamma(tail, x_max, params.get("gamma"))
    if name in ("S", "Sstar") and np.isneginf(_log_tail(tail)(reliable_x_max(tail, x_max))):
        # both classes sit inside L, which needs a tail positive everywhere
        ev = ratio_profile(tail, 1.0, x_max)
        return ClassVerdict(name, "non_member", ev, rule="tail reaches zero (bounded support)")
    if name == "S":
        v, ev = _classify_s(tail, x_max)
        return ClassVerdict("S", v, ev, rule="self-convolution ratio tends to 2")
    v, ev = _classify_sstar(tail, x_max)
    return ClassVerdict("Sstar", v, ev, rule="integrated product over 2 mu survival tends to 1")


def _classify_l(tail, x_max, eps):
    rp = ratio_profile(tail, 1.0, x_max)
    s = rp.window_log_sups
    lo = rp.window_log_infs
    limit = math.log1p(eps)
    rule = (f"final-window log ratio within log(1+{eps}) of 0, or window sups of the log ratio shrinking by "
            f"a factor <= {L_DECAY} per window")
    if rp.bounded_support or rp.verdict == "unbounded":
        return ClassVerdict("L", "non_member", rp, rule=rule)
    if any(math.isnan(v) for v in s):
        return ClassVerdict("L", "inconclusive", rp, rule=rule)
    decaying = s[0] > 0 and s[1] <= L_DECAY * s[0] and s[2] <= L_DECAY * s[1]
    if (s[2] <= limit and lo[2] >= -limit) or (decaying and lo[2] >= -limit):
        return ClassVerdict("L", "member", rp, rule=rule)
    if lo[2] > limit and not decaying and rp.verdict == "bounded":
        return ClassVerdict("L", "non_member", rp, rule=rule)
    return ClassVerdict("L", "inconclusive", rp, rule=rule)


def _classify_lgamma(tail, x_max, gamma):
    rp = ratio_profile(tail, 1.0, x_max)
    rule = "log ratio survival(x-1)/survival(x) settles to gamma across the three windows (5% + 1e-3)"
    if rp.bounded_support or rp.verdict == "unbounded":
        return ClassVerdict("L(gamma)", "non_member", rp, rule=rule)
    m = rp.window_log_means
    s, lo = rp.window_log_sups, rp.window_log_infs
    if any(math.isnan(v) for v in m):
        return ClassVerdict("L(gamma)", "inconclusive", rp, rule=rule)
    estimate = float(m[2])

    def close(u, v):
        return abs(u - v) <= 0.05 * max(abs(u), abs(v)) + 1e-3

    settled = close(m[2], m[1]) and close(m[1], m[0]) and close(s[2], lo[2])
    if not settled and _classify_l(tail, x_max, EPS_L).verdict == "member":
        settled = True
    details = {"window_means": list(m)}
    if not settled:
        return ClassVerdict("L(gamma)", "inconclusive", rp, gamma_estimate=estimate, rule=rule, details=details)
    if gamma is not None:
        details["gamma_target"] = float(gamma)
        v = "member" if close(estimate, float(gamma)) else "non_member"
        return ClassVerdict("L(gamma)", v, rp, gamma_estimate=estimate, rule=rule, details=details)
    return ClassVerdict("L(gamma)", "member", rp, gamma_estimate=estimate, rule=rule, details=details)


@dataclass(frozen=True, eq=False)
class Comparison:
    """Late-window behaviour of ``log survival_a(x) - log survival_b(x)``."""

    verdict: str
    window_sups: tuple[float, float, float]
    window_infs: tuple[float, float, float]
    x_max: float
    note: str = ""

    def __str__(self) -> str:
        return self.verdict

    def __eq__(self, other):
        if isinstance(other, str):
            return self.verdict == other
        return NotImplemented

    __hash__ = None

    def to_dict(self):
        return {"verdict": self.verdict, "window_log_diff_sups": list(self.window_sups),
                "window_log_diff_infs": list(self.window_infs), "x_max": self.x_max, "note": self.note}


def comparability(tail_a, tail_b, x_max: float = DEFAULT_X_MAX) -> Comparison:
    """Classify ``survival_a / survival_b`` at infinity: vanishing, bounded, diverging or inconclusive.

    ``vanishing``: the window sups of the log difference fall by at least
    log 1.25 per window (or ``a`` hits zero while ``b`` does not);
    ``diverging``: the window infs rise by at least log 1.25 per window (or
    ``b`` hits zero first); ``bounded``: sups do not rise and infs do not fall
    by more than log 1.05.
    """
    x_top = min(reliable_x_max(tail_a, x_max), reliable_x_max(tail_b, x_max))
    xs = hybrid_grid(x_top)
    la, lb = np.asarray(_log_tail(tail_a)(xs)), np.asarray(_log_tail(tail_b)(xs))
    last = xs >= x_top / 2
    a_dead, b_dead = np.isneginf(la[last]).any(), np.isneginf(lb[last]).any()
    with np.errstate(invalid="ignore"):
        d = la - lb
    sups, infs, _ = _window_stats(xs, d, x_top)
    if a_dead and not b_dead:
        return Comparison("vanishing", tuple(sups), tuple(infs), x_top, "tail a reaches zero")
    if b_dead and not a_dead:
        return Comparison("diverging", tuple(sups), tuple(infs), x_top, "tail b reaches zero")
    if a_dead and b_dead:
        return Comparison("inconclusive", tuple(sups), tuple(infs), x_top, "both tails reach zero")
    up, small = math.log(DIVERGING_GROWTH), math.log(BOUNDED_GROWTH)
    if sups[1] <= sups[0] - up and sups[2] <= sups[1] - up:
        return Comparison("vanishing", tuple(sups), tuple(infs), x_top)
    if infs[1] >= infs[0] + up and infs[2] >= infs[1] + up:
        return Comparison("diverging", tuple(sups), tuple(infs), x_top)
    if sups[1] <= sups[0] + small and sups[2] <= sups[1] + small and infs[1] >= infs[0] - small \
            and infs[2] >= infs[1] - small:
        return Comparison("bounded", tuple(sups), tuple(infs), x_top)
    return Comparison("inconclusive", tuple(sups), tuple(infs), x_top)
