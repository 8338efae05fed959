"""Tail models, index-dependent summand sequences and counting distributions.

Every model is described by its log-survival function ``log P(X > x)``; the
value is exactly 0 for ``x < 0`` because all supports are nonnegative.  Models
are immutable and hashable, so resolved sequences can be cached freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, ClassVar, Sequence, Union

import numpy as np
from scipy import optimize, special, stats

from .tailgrid import TailGrid

__all__ = [
    "TailModel",
    "Pareto",
    "Exponential",
    "WeibullRoot",
    "Uniform",
    "PointMass",
    "FiniteTable",
    "PiecewiseExample3",
    "TabulatedTail",
    "GaussType",
    "FAMILIES",
    "make_model",
    "CountingDist",
    "Degenerate",
    "UniformRange",
    "Poisson",
    "Geometric",
    "Table",
    "COUNTING_FAMILIES",
    "IndexExpr",
    "FamilyTemplate",
    "IndexInRange",
    "IndexIsPerfectSquare",
    "Otherwise",
    "SequenceSpec",
    "log_survival",
    "sample",
    "concentration",
    "counting_tail",
    "resolve",
    "stream",
]


def stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Counter-based generator for the stream ``(seed, stream_id)``.

    Distinct stream ids give statistically independent Philox streams, so
    work split across processes reproduces sequential results exactly as long
    as every unit of work is keyed by its own id.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream_id,))))


def _prep(x):
    a = np.asarray(x, dtype=float)
    return np.atleast_1d(a), a.ndim == 0, a.shape


def _out(v: np.ndarray, scalar: bool, shape):
    return float(v[0]) if scalar else v.reshape(shape)


class TailModel:
    """Base class; subclasses fill in the family-specific pieces on ``x >= 0``."""

    family: ClassVar[str] = ""

    # -- family hooks --------------------------------------------------
    def _log_sf(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _int_sf(self, x: np.ndarray) -> np.ndarray:
        """Antiderivative ``int_0^x survival`` for ``x >= 0``."""
        raise NotImplementedError

    def atoms(self) -> tuple[tuple[float, float], ...]:
        return ()

    def kinks(self) -> tuple[float, ...]:
        """Points where the survival function is not smooth (atoms included)."""
        return (0.0,)

    def cont_log_survival(self, y):
        """Log-survival of the normalized continuous component."""
        return self.log_survival(y)

    def cont_inverse_survival(self, v):
        """Inverse of the continuous-component survival on ``(0, 1]``."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def mean(self) -> float | None:
        return None

    def params(self) -> dict[str, Any]:
        return {}

    # -- shared behaviour ----------------------------------------------
    def log_survival(self, x):
        a, scalar, shape = _prep(x)
        out = np.zeros(a.shape)
        pos = a >= 0
        if pos.any():
            with np.errstate(divide="ignore", over="ignore"):
                out[pos] = self._log_sf(a[pos])
        return _out(out, scalar, shape)

    def survival(self, x):
        return np.exp(self.log_survival(x))

    def cdf(self, x):
        return 1.0 - self.survival(x)

    def integrated_survival(self, lo, hi):
        """``int_lo^hi survival(t) dt`` (vectorized)."""
        return self._antiderivative(hi) - self._antiderivative(lo)

    def cell_integrals(self, edges) -> np.ndarray:
        """``int`` of the survival over consecutive cells ``[edges[i], edges[i+1]]``."""
        e = np.asarray(edges, dtype=float)
        return np.diff(self._antiderivative(e))

    def _antiderivative(self, x):
        a, scalar, shape = _prep(x)
        out = a.copy()
        pos = a >= 0
        if pos.any():
            out[pos] = self._int_sf(a[pos])
        return _out(out, scalar, shape)

    @property
    def cont_weight(self) -> float:
        return 1.0 - sum(p for _, p in self.atoms())

    def atom_mass_at(self, x) -> np.ndarray:
        a, scalar, shape = _prep(x)
        out = np.zeros(a.shape)
        for c, p in self.atoms():
            out[a == c] += p
        return _out(out, scalar, shape)

    def reach(self) -> float:
        """A point beyond which the remaining mass is below 1e-15."""
        r = max((c for c, _ in self.atoms()), default=0.0)
        if self.cont_weight > 0:
            r = max(r, float(self.cont_inverse_survival(1e-15)))
        return r

    def concentration(self, width: float) -> float:
        """Levy concentration ``sup_x P(x <= X <= x + width)``."""
        return _window_sup(self, width, closed=True)

    def unit_window_sup(self, width: float = 1.0) -> float:
        """``sup_{x >= 0} (survival(x - width) - survival(x))``, i.e. half-open windows."""
        return _window_sup(self, width, closed=False)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"family": self.family, "params": self.params()}
        if self.mean is not None:
            d["mean"] = self.mean
        return d


def _window_sup(model: TailModel, width: float, closed: bool) -> float:
    """Grid maximization (step width/64) of window mass with local refinement."""
    if width < 0:
        raise ValueError("width must be nonnegative")
    atoms = model.atoms()
    if width == 0:
        return max((p for _, p in atoms), default=0.0)

    def mass(x):
        x = np.asarray(x, dtype=float)
        if closed:
            return model.survival(x) + model.atom_mass_at(x) - model.survival(x + width)
        return model.survival(x - width) - model.survival(x)

    hi = model.reach() + width
    step = width / 64.0
    n = int(math.ceil(hi / step)) + 2
    if n > 400_000:
        xs = np.unique(np.concatenate([np.arange(0, 64 * width, step), np.linspace(0, hi, 400_000)]))
    else:
        xs = np.arange(n) * step
    xs = np.concatenate([xs, [c for c, _ in atoms]])
    vals = mass(xs)
    best = int(np.argmax(vals))
    top = float(vals[best])
    x0 = float(xs[best])
    lo_b, hi_b = max(0.0, x0 - step), x0 + step
    if hi_b > lo_b:
        res = optimize.minimize_scalar(lambda t: -float(mass(t)), bounds=(lo_b, hi_b), method="bounded",
                                       options={"xatol": 1e-12})
        top = max(top, -float(res.fun))
    return float(min(max(top, 0.0), 1.0))


def _check_pos(name: str, v: float) -> float:
    v = float(v)
    if not v > 0 or not math.isfinite(v):
        raise ValueError(f"{name} must be a positive finite number, got {v}")
    return v


@dataclass(frozen=True)
class Pareto(TailModel):
    """Survival ``(scale / (scale + x)) ** shape``."""

    scale: float
    shape: float
    family: ClassVar[str] = "Pareto"

    def __post_init__(self):
        object.__setattr__(self, "scale", _check_pos("scale", self.scale))
        object.__setattr__(self, "shape", _check_pos("shape", self.shape))

    def _log_sf(self, x):
        return -self.shape * np.log1p(x / self.scale)

    def _int_sf(self, x):
        k, a = self.scale, self.shape
        if a == 1.0:
            return k * np.log1p(x / k)
        return k / (a - 1.0) * -np.expm1((1.0 - a) * np.log1p(x / k))

    def cont_inverse_survival(self, v):
        return self.scale * np.expm1(-np.log(v) / self.shape)

    def cell_integrals(self, edges):
        if self.shape <= 1.0:
            return super().cell_integrals(edges)
        e = np.asarray(edges, dtype=float)
        k, a = self.scale, self.shape
        ep = np.maximum(e, 0.0)
        upper = k / (a - 1.0) * np.exp((1.0 - a) * np.log1p(ep / k))  # int_x^inf
        return (upper[:-1] - upper[1:]) + (np.minimum(e[1:], 0) - np.minimum(e[:-1], 0))

    def sample(self, rng, size):
        u = 1.0 - rng.random(size)
        return self.scale * np.expm1(-np.log(u) / self.shape)

    @property
    def mean(self):
        return self.scale / (self.shape - 1.0) if self.shape > 1 else None

    def concentration(self, width):
        # decreasing density: the window [0, width] is optimal
        return float(1.0 - self.survival(width))

    unit_window_sup = concentration

    def params(self):
        return {"scale": self.scale, "shape": self.shape}


@dataclass(frozen=True)
class Exponential(TailModel):
    rate: float
    family: ClassVar[str] = "Exponential"

    def __post_init__(self):
        object.__setattr__(self, "rate", _check_pos("rate", self.rate))

    def _log_sf(self, x):
        return -self.rate * x

    def _int_sf(self, x):
        return -np.expm1(-self.rate * x) / self.rate

    def cont_inverse_survival(self, v):
        return -np.log(v) / self.rate

    def cell_integrals(self, edges):
        raw = np.asarray(edges, dtype=float)
        e = np.maximum(raw, 0.0)
        lo, w = e[:-1], np.diff(e)
        neg = np.minimum(raw[1:], 0) - np.minimum(raw[:-1], 0)
        return np.exp(-self.rate * lo) * -np.expm1(-self.rate * w) / self.rate + neg

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    @property
    def mean(self):
        return 1.0 / self.rate

    def concentration(self, width):
        return float(-math.expm1(-self.rate * width))

    unit_window_sup = concentration

    def params(self):
        return {"rate": self.rate}


@dataclass(frozen=True)
class WeibullRoot(TailModel):
    """Survival ``exp(-sqrt(x))``."""

    family: ClassVar[str] = "WeibullRoot"

    def _log_sf(self, x):
        return -np.sqrt(x)

    def _int_sf(self, x):
        r = np.sqrt(x)
        return 2.0 * (1.0 - (1.0 + r) * np.exp(-r))

    def cont_inverse_survival(self, v):
        return np.log(v) ** 2

    def cell_integrals(self, edges):
        e = np.asarray(edges, dtype=float)
        r = np.sqrt(np.maximum(e, 0.0))
        upper = 2.0 * (1.0 + r) * np.exp(-r)
        return (upper[:-1] - upper[1:]) + (np.minimum(e[1:], 0) - np.minimum(e[:-1], 0))

    def sample(self, rng, size):
        return rng.exponential(1.0, size) ** 2

    @property
    def mean(self):
        return 2.0

    def concentration(self, width):
        return float(-math.expm1(-math.sqrt(width)))

    unit_window_sup = concentration


@dataclass(frozen=True)
class GaussType(TailModel):
    """Survival ``exp(-x**2)``; light enough to fall outside OL."""

    family: ClassVar[str] = "GaussType"

    def _log_sf(self, x):
        return -(x * x)

    def _int_sf(self, x):
        return 0.5 * math.sqrt(math.pi) * special.erf(x)

    def cont_inverse_survival(self, v):
        return np.sqrt(-np.log(v))

    def sample(self, rng, size):
        return np.sqrt(rng.exponential(1.0, size))

    @property
    def mean(self):
        return 0.5 * math.sqrt(math.pi)


@dataclass(frozen=True)
class Uniform(TailModel):
    low: float
    high: float
    family: ClassVar[str] = "Uniform"

    def __post_init__(self):
        lo, hi = float(self.low), float(self.high)
        if not (0 <= lo < hi < math.inf):
            raise ValueError("Uniform needs 0 <= low < high")
        object.__setattr__(self, "low", lo)
        object.__setattr__(self, "high", hi)

    def _log_sf(self, x):
        a, b = self.low, self.high
        out = np.zeros_like(x)
        mid = (x >= a) & (x < b)
        out[mid] = np.log((b - x[mid]) / (b - a))
        out[x >= b] = -np.inf
        return out

    def _int_sf(self, x):
        a, b = self.low, self.high
        t = np.clip(x, a, b) - a
        return np.minimum(x, a) + t - t * t / (2.0 * (b - a))

    def kinks(self):
        return (self.low, self.high)

    def cont_inverse_survival(self, v):
        return self.high - np.asarray(v) * (self.high - self.low)

    def sample(self, rng, size):
        return rng.uniform(self.low, self.high, size)

    @property
    def mean(self):
        return 0.5 * (self.low + self.high)

    def concentration(self, width):
        return float(min(1.0, width / (self.high - self.low)))

    unit_window_sup = concentration

    def params(self):
        return {"low": self.low, "high": self.high}


@dataclass(frozen=True)
class PointMass(TailModel):
    location: float
    family: ClassVar[str] = "PointMass"

    def __post_init__(self):
        c = float(self.location)
        if not (0 <= c < math.inf):
            raise ValueError("PointMass location must be finite and nonnegative")
        object.__setattr__(self, "location", c)

    def _log_sf(self, x):
        return np.where(x < self.location, 0.0, -np.inf)

    def _int_sf(self, x):
        return np.minimum(x, self.location)

    def atoms(self):
        return ((self.location, 1.0),)

    def kinks(self):
        return (self.location,)

    def sample(self, rng, size):
        return np.full(size, self.location)

    @property
    def mean(self):
        return self.location

    def concentration(self, width):
        return 1.0

    def unit_window_sup(self, width=1.0):
        return 1.0 if width > 0 else 0.0

    def params(self):
        return {"location": self.location}


@dataclass(frozen=True)
class FiniteTable(TailModel):
    """Finitely supported law given as ``((value, prob), ...)``."""

    points: tuple[tuple[float, float], ...]
    family: ClassVar[str] = "FiniteTable"

    def __post_init__(self):
        merged: dict[float, float] = {}
        for v, p in self.points:
            v, p = float(v), float(p)
            if v < 0 or p < 0 or not math.isfinite(v):
                raise ValueError("FiniteTable needs finite nonnegative values and probabilities")
            if p > 0:
                merged[v] = merged.get(v, 0.0) + p
        total = math.fsum(merged.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"FiniteTable probabilities sum to {total}, not 1")
        object.__setattr__(self, "points", tuple(sorted(merged.items())))

    @property
    def _values(self):
        return np.array([v for v, _ in self.points])

    @property
    def _probs(self):
        return np.array([p for _, p in self.points])

    def _log_sf(self, x):
        probs = self._probs
        suffix = np.concatenate([np.cumsum(probs[::-1])[::-1], [0.0]])
        idx = np.searchsorted(self._values, x, side="right")
        with np.errstate(divide="ignore"):
            return np.log(np.minimum(suffix[idx], 1.0))

    def _int_sf(self, x):
        return np.minimum(x[:, None], self._values[None, :]) @ self._probs

    def atoms(self):
        return self.points

    def kinks(self):
        return tuple(self._values)

    def sample(self, rng, size):
        return rng.choice(self._values, size=size, p=self._probs)

    @property
    def mean(self):
        return float(self._values @ self._probs)

    def concentration(self, width):
        v, p = self._values, self._probs
        return float(max(p[(v >= c) & (v <= c + width)].sum() for c in v))

    def unit_window_sup(self, width=1.0):
        v, p = self._values, self._probs
        return float(max(p[(v > c - width) & (v <= c)].sum() for c in v))

    def params(self):
        return {"points": [list(t) for t in self.points]}


@dataclass(frozen=True)
class PiecewiseExample3(TailModel):
    """Atom ``1 - 1/level`` at 0 and an exponential tail from ``level`` on.

    Survival is ``1/level`` on ``[0, level)`` and ``exp(-(x - level)) / level``
    from ``level`` onward.
    """

    level: float
    family: ClassVar[str] = "PiecewiseExample3"

    def __post_init__(self):
        k = float(self.level)
        if not (2 <= k < math.inf):
            raise ValueError("PiecewiseExample3 level must be >= 2")
        object.__setattr__(self, "level", k)

    def _log_sf(self, x):
        k = self.level
        return -math.log(k) - np.maximum(x - k, 0.0)

    def _int_sf(self, x):
        k = self.level
        return (np.minimum(x, k) - np.expm1(-np.maximum(x - k, 0.0))) / k

    def atoms(self):
        return ((0.0, 1.0 - 1.0 / self.level),)

    def kinks(self):
        return (0.0, self.level)

    def cont_log_survival(self, y):
        a, scalar, shape = _prep(y)
        return _out(-np.maximum(a - self.level, 0.0), scalar, shape)

    def cont_inverse_survival(self, v):
        return self.level - np.log(v)

    def sample(self, rng, size):
        u = rng.random(size)
        e = rng.exponential(1.0, size)
        return np.where(u < 1.0 - 1.0 / self.level, 0.0, self.level + e)

    @property
    def mean(self):
        return (self.level + 1.0) / self.level

    def concentration(self, width):
        k = self.level
        with_atom = 1.0 - 1.0 / k + -math.expm1(-max(width - k, 0.0)) / k
        return float(max(with_atom, -math.expm1(-width) / k))

    def unit_window_sup(self, width=1.0):
        # half-open windows (x - w, x] with x >= 0 that contain 0 need x < w
        k = self.level
        with_atom = 1.0 - 1.0 / k + -math.expm1(-max(width - k, 0.0)) / k
        return float(max(with_atom, -math.expm1(-width) / k))

    def params(self):
        return {"level": self.level}


@dataclass(frozen=True, eq=False)
class TabulatedTail(TailModel):
    """A model backed by a :class:`TailGrid` (log-linear between nodes).

    A jump at the first node is an atom of mass ``1 - survival(xs[0])``.
    """

    grid: TailGrid
    family: ClassVar[str] = "TabulatedTail"

    @property
    def _s0(self) -> float:
        return float(np.exp(self.grid.log_survival[0]))

    def _log_sf(self, x):
        return self.grid.log_survival_at(x)

    def _segments(self):
        xs, ls = self.grid.xs, self.grid.log_survival
        dx = np.diff(xs)
        with np.errstate(invalid="ignore", divide="ignore"):
            slope = (ls[1:] - ls[:-1]) / dx
            e0 = np.exp(ls[:-1])
            seg = np.where(slope == 0, e0 * dx, e0 * np.expm1(slope * dx) / slope)
        seg = np.where(np.isneginf(ls[1:]), 0.0, seg)
        seg = np.nan_to_num(seg, nan=0.0)
        cum = np.concatenate([[xs[0]], xs[0] + np.cumsum(seg)])
        return slope, cum

    def _int_sf(self, x):
        xs, ls = self.grid.xs, self.grid.log_survival
        slope, cum = self._segments()
        out = np.array(x, dtype=float)
        left = x < xs[0]
        out[left] = x[left]
        inside = (x >= xs[0]) & (x <= xs[-1])
        if inside.any():
            xi = x[inside]
            i = np.clip(np.searchsorted(xs, xi, side="right") - 1, 0, xs.size - 2) if xs.size > 1 else np.zeros(xi.size, int)
            if xs.size == 1:
                out[inside] = cum[0]
            else:
                s = slope[i]
                d = xi - xs[i]
                with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
                    part = np.where(s == 0, np.exp(ls[i]) * d, np.exp(ls[i]) * np.expm1(s * d) / s)
                part = np.where(np.isneginf(ls[i + 1]) & (d > 0), 0.0, np.nan_to_num(part, nan=0.0))
                out[inside] = cum[i] + part
        beyond = x > xs[-1]
        if beyond.any():
            s = self.grid._last_slope()
            d = x[beyond] - xs[-1]
            tail0 = math.exp(ls[-1]) if np.isfinite(ls[-1]) else 0.0
            if s == 0:
                extra = tail0 * d
            elif np.isneginf(s):
                extra = np.zeros_like(d)
            else:
                extra = tail0 * np.expm1(s * d) / s
            out[beyond] = cum[-1] + extra
        return out

    def atoms(self):
        m = 1.0 - self._s0
        return ((float(self.grid.xs[0]), m),) if m > 0 else ()

    def kinks(self):
        return tuple(self.grid.xs)

    def cont_log_survival(self, y):
        a, scalar, shape = _prep(y)
        out = np.where(a < self.grid.xs[0], 0.0, self.grid.log_survival_at(a) - self.grid.log_survival[0])
        return _out(np.minimum(out, 0.0), scalar, shape)

    def _inverse_full(self, level_log):
        """x with log-survival equal to ``level_log`` (continuous region)."""
        xs, ls = self.grid.xs, self.grid.log_survival
        lv = np.asarray(level_log, dtype=float)
        fin = np.isfinite(ls)
        xr, lr = xs[fin][::-1], ls[fin][::-1]
        out = np.interp(lv, lr, xr)
        s = self.grid._last_slope()
        below = lv < lr[0]
        if np.any(below) and s < 0 and np.isfinite(s):
            out = np.where(below, xs[fin][-1] + (lv - lr[0]) / s, out)
        return out

    def cont_inverse_survival(self, v):
        return self._inverse_full(np.log(v) + self.grid.log_survival[0])

    def reach(self):
        return float(self.grid.xs[-1])

    def sample(self, rng, size):
        u = rng.random(size)
        with np.errstate(divide="ignore"):
            inner = self._inverse_full(np.log(np.maximum(u, 1e-300)))
        return np.where(u >= self._s0, self.grid.xs[0], inner)

    @property
    def mean(self):
        s = self.grid._last_slope()
        if not s < 0:
            return None
        return float(self._antiderivative(self.grid.xs[-1] + 800.0 / -s if np.isfinite(s) else self.grid.xs[-1]))

    def params(self):
        return {"xs": self.grid.xs.tolist(),
                "log_survival": [float(v) if np.isfinite(v) else "-inf" for v in self.grid.log_survival],
                "abs_error_bound": self.grid.abs_error_bound}


FAMILIES: dict[str, type[TailModel]] = {
    cls.family: cls
    for cls in (Pareto, Exponential, WeibullRoot, Uniform, PointMass, FiniteTable,
                PiecewiseExample3, TabulatedTail, GaussType)
}

_PARAM_NAMES = {
    "Pareto": ("scale", "shape"),
    "Exponential": ("rate",),
    "WeibullRoot": (),
    "Uniform": ("low", "high"),
    "PointMass": ("location",),
    "FiniteTable": ("points",),
    "PiecewiseExample3": ("level",),
    "TabulatedTail": ("xs", "log_survival", "abs_error_bound"),
    "GaussType": (),
}


def make_model(family: str, **params: Any) -> TailModel:
    """Instantiate a family by name, e.g. ``make_model("Pareto", scale=1, shape=2)``."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {sorted(FAMILIES)}")
    allowed = _PARAM_NAMES[family]
    unknown = set(params) - set(allowed)
    if unknown:
        raise ValueError(f"{family}: unknown parameter(s) {sorted(unknown)}")
    if family == "TabulatedTail":
        grid = TailGrid.from_dict({"xs": params["xs"], "log_survival": params["log_survival"],
                                   "abs_error_bound": params.get("abs_error_bound", 0.0)})
        return TabulatedTail(grid)
    if family == "FiniteTable":
        return FiniteTable(tuple((float(v), float(p)) for v, p in params["points"]))
    missing = set(allowed) - set(params)
    if missing:
        raise ValueError(f"{family}: missing parameter(s) {sorted(missing)}")
    return FAMILIES[family](**params)


# ---------------------------------------------------------------------------
# counting distributions
# ---------------------------------------------------------------------------


class CountingDist:
    """Law of the number of summands on {0, 1, 2, ...}."""

    family: ClassVar[str] = ""
    support_max: ClassVar[int | None] = None

    def pmf(self, n):
        raise NotImplementedError

    def tail(self, n):
        """``P(eta > n)``; non-integer arguments are floored."""
        raise NotImplementedError

    def log_tail(self, n):
        with np.errstate(divide="ignore"):
            return np.log(self.tail(n))

    def sample(self, rng, size):
        raise NotImplementedError

    @property
    def upper(self) -> int | None:
        return None

    def params(self) -> dict[str, Any]:
        return {}

    def to_dict(self):
        return {"family": self.family, "params": self.params()}

    def in_support(self, n: int) -> bool:
        return bool(self.pmf(n) > 0)

    def truncation_level(self, eps: float, n_max: int | None = None) -> int:
        """Smallest ``N >= 0`` with ``P(eta > N) <= eps`` (searched up to ``n_max``)."""
        if self.upper is not None:
            ns = np.arange(self.upper + 1)
            ok = np.nonzero(self.tail(ns) <= eps)[0]
            return int(ns[ok[0]])
        cap = n_max if n_max is not None else 10**9
        hi = 1
        while self.tail(hi) > eps:
            if hi > cap:
                return hi
            hi *= 2
        lo = hi // 2
        while lo < hi:
            mid = (lo + hi) // 2
            if self.tail(mid) <= eps:
                hi = mid
            else:
                lo = mid + 1
        return lo


def _floor_counts(n):
    a = np.asarray(n, dtype=float)
    return np.floor(a), a.ndim == 0


@dataclass(frozen=True)
class Degenerate(CountingDist):
    n: int
    family: ClassVar[str] = "Degenerate"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("Degenerate count must be an integer >= 1")
        object.__setattr__(self, "n", int(self.n))

    def pmf(self, n):
        return np.where(np.asarray(n) == self.n, 1.0, 0.0) * 1.0

    def tail(self, n):
        f, _ = _floor_counts(n)
        return np.where(f < self.n, 1.0, 0.0) * 1.0

    @property
    def upper(self):
        return self.n

    def sample(self, rng, size):
        return np.full(size, self.n, dtype=np.int64)

    @property
    def mean(self):
        return float(self.n)

    def params(self):
        return {"n": self.n}


@dataclass(frozen=True)
class UniformRange(CountingDist):
    """Uniform on ``{1, ..., D}``."""

    D: int
    family: ClassVar[str] = "UniformRange"

    def __post_init__(self):
        if int(self.D) != self.D or self.D < 1:
            raise ValueError("UniformRange needs an integer D >= 1")
        object.__setattr__(self, "D", int(self.D))

    def pmf(self, n):
        n = np.asarray(n)
        return np.where((n >= 1) & (n <= self.D), 1.0 / self.D, 0.0)

    def tail(self, n):
        f, _ = _floor_counts(n)
        return np.clip((self.D - np.maximum(f, 0.0)) / self.D, 0.0, 1.0)

    @property
    def upper(self):
        return self.D

    def sample(self, rng, size):
        return rng.integers(1, self.D + 1, size)

    @property
    def mean(self):
        return 0.5 * (self.D + 1)

    def params(self):
        return {"D": self.D}


@dataclass(frozen=True)
class Poisson(CountingDist):
    mean: float
    family: ClassVar[str] = "Poisson"

    def __post_init__(self):
        object.__setattr__(self, "mean", _check_pos("mean", self.mean))

    def pmf(self, n):
        return stats.poisson.pmf(n, self.mean)

    def tail(self, n):
        f, _ = _floor_counts(n)
        return np.where(f < 0, 1.0, stats.poisson.sf(f, self.mean))

    def log_tail(self, n):
        f, scalar = _floor_counts(n)
        f = np.atleast_1d(f)
        out = np.where(f < 0, 0.0, stats.poisson.logsf(f, self.mean))
        deep = (f >= 0) & ~(out > -700.0)
        if np.any(deep):
            out[deep] = self._deep_log_tail(f[deep])
        return float(out[0]) if scalar else out

    def _deep_log_tail(self, f, terms: int = 256):
        """``log P(eta > f)`` as ``log pmf(f+1)`` plus the log of the ratio series, far past underflow.

        The series ``sum_i prod_{r<=i} mean / (f + 1 + r)`` is summed to ``terms``
        terms and closed with its geometric majorant.
        """
        f = np.asarray(f, dtype=float)[:, None]
        r = np.arange(1, terms)[None, :]
        log_t = np.concatenate([np.zeros((f.shape[0], 1)), np.cumsum(np.log(self.mean / (f + 1.0 + r)), axis=1)],
                               axis=1)
        ratio = self.mean / (f[:, 0] + 1.0 + terms)
        closing = log_t[:, -1] + np.log(ratio / (1.0 - ratio)) if np.all(ratio < 1) else np.full(f.shape[0], np.inf)
        series = np.logaddexp(special.logsumexp(log_t, axis=1), closing)
        return stats.poisson.logpmf(f[:, 0] + 1.0, self.mean) + series

    def sample(self, rng, size):
        return rng.poisson(self.mean, size)

    def params(self):
        return {"mean": self.mean}


@dataclass(frozen=True)
class Geometric(CountingDist):
    """``P(eta = n) = p (1 - p)**n`` for ``n = 0, 1, ...``."""

    p: float
    family: ClassVar[str] = "Geometric"

    def __post_init__(self):
        p = float(self.p)
        if not 0 < p < 1:
            raise ValueError("Geometric success probability must lie in (0, 1)")
        object.__setattr__(self, "p", p)

    def pmf(self, n):
        n = np.asarray(n)
        return np.where(n >= 0, self.p * (1.0 - self.p) ** np.maximum(n, 0), 0.0)

    def tail(self, n):
        return np.exp(self.log_tail(n))

    def log_tail(self, n):
        f, _ = _floor_counts(n)
        return np.where(f < 0, 0.0, (np.maximum(f, 0.0) + 1.0) * math.log1p(-self.p))

    def sample(self, rng, size):
        return rng.geometric(self.p, size) - 1

    @property
    def mean(self):
        return (1.0 - self.p) / self.p

    def params(self):
        return {"p": self.p}


@dataclass(frozen=True)
class Table(CountingDist):
    """Explicit pmf on ``{0, ..., len(pmf) - 1}``."""

    pmf_values: tuple[float, ...]
    family: ClassVar[str] = "Table"

    def __post_init__(self):
        vals = tuple(float(v) for v in self.pmf_values)
        if not vals or any(v < 0 for v in vals):
            raise ValueError("Table pmf must be a nonempty list of nonnegative numbers")
        total = math.fsum(vals)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"Table pmf sums to {total}, not 1")
        object.__setattr__(self, "pmf_values", vals)

    @property
    def _arr(self):
        return np.array(self.pmf_values)

    def pmf(self, n):
        n = np.asarray(n)
        idx = np.clip(n, 0, len(self.pmf_values) - 1).astype(int)
        return np.where((n >= 0) & (n < len(self.pmf_values)), self._arr[idx], 0.0)

    def tail(self, n):
        f, _ = _floor_counts(n)
        p = self._arr
        suffix = np.concatenate([np.cumsum(p[::-1])[::-1], [0.0]])  # suffix[i] = P(eta >= i)
        idx = np.clip(f + 1, 0, p.size).astype(int)
        return np.minimum(suffix[idx], 1.0)

    @property
    def upper(self):
        nz = np.nonzero(self._arr)[0]
        return int(nz[-1])

    def sample(self, rng, size):
        return rng.choice(self._arr.size, size=size, p=self._arr)

    @property
    def mean(self):
        return float(np.arange(self._arr.size) @ self._arr)

    def params(self):
        return {"pmf": list(self.pmf_values)}


COUNTING_FAMILIES: dict[str, type[CountingDist]] = {
    c.family: c for c in (Degenerate, UniformRange, Poisson, Geometric, Table)
}


# ---------------------------------------------------------------------------
# index-dependent sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndexExpr:
    """``coef * i + offset``, or ``numerator / (coef * i + offset)`` when a numerator is set."""

    coef: float = 1.0
    offset: float = 0.0
    numerator: float | None = None

    def at(self, index: int) -> float:
        base = self.coef * index + self.offset
        if self.numerator is None:
            return base
        if base == 0:
            raise ZeroDivisionError(f"index expression vanishes at index {index}")
        return self.numerator / base

    def to_dict(self):
        d: dict[str, Any] = {"index": self.coef, "offset": self.offset}
        if self.numerator is not None:
            d["over"] = self.numerator
        return d


ParamValue = Union[float, int, IndexExpr, tuple]


@dataclass(frozen=True)
class FamilyTemplate:
    family: str
    params: tuple[tuple[str, ParamValue], ...] = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", tuple(sorted(self.params.items())))

    def instantiate(self, index: int) -> TailModel:
        kw = {k: (v.at(index) if isinstance(v, IndexExpr) else v) for k, v in self.params}
        return make_model(self.family, **kw)

    def to_dict(self):
        out = {}
        for k, v in self.params:
            if isinstance(v, IndexExpr):
                out[k] = v.to_dict()
            elif isinstance(v, tuple):
                out[k] = [list(t) if isinstance(t, tuple) else t for t in v]
            else:
                out[k] = v
        return {"family": self.family, "params": out}


@dataclass(frozen=True)
class IndexInRange:
    lo: int
    hi: int | None = None

    def matches(self, i: int) -> bool:
        return i >= self.lo and (self.hi is None or i <= self.hi)

    def to_dict(self):
        return {"type": "index_in_range", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class IndexIsPerfectSquare:
    """Matches ``index = offset + m*m`` with ``m >= min_root``."""

    offset: int = 0
    min_root: int = 2

    def matches(self, i: int) -> bool:
        k = i - self.offset
        if k < self.min_root**2:
            return False
        r = math.isqrt(k)
        return r * r == k

    def to_dict(self):
        return {"type": "index_is_perfect_square", "offset": self.offset, "min_root": self.min_root}


@dataclass(frozen=True)
class Otherwise:
    def matches(self, i: int) -> bool:
        return True

    def to_dict(self):
        return "otherwise"


Predicate = Union[IndexInRange, IndexIsPerfectSquare, Otherwise]
Template = Union[FamilyTemplate, TailModel]


@dataclass(frozen=True)
class SequenceSpec:
    """Ordered rules mapping a summand index ``k >= 1`` to a tail model.

    The first matching rule wins and the last rule must be ``Otherwise``.
    """

    rules: tuple[tuple[Predicate, Template], ...]

    def __post_init__(self):
        rules = tuple((p, t) for p, t in self.rules)
        if not rules or not isinstance(rules[-1][0], Otherwise):
            raise ValueError("a SequenceSpec must end with an 'otherwise' rule")
        if any(isinstance(p, Otherwise) for p, _ in rules[:-1]):
            raise ValueError("'otherwise' may only appear as the final rule")
        object.__setattr__(self, "rules", rules)

    @classmethod
    def iid(cls, model: TailModel) -> "SequenceSpec":
        return cls(((Otherwise(), model),))

    @classmethod
    def from_models(cls, models: Sequence[TailModel], otherwise: TailModel | None = None) -> "SequenceSpec":
        """Explicit models for indices 1..len(models); later indices reuse the last one."""
        rules = [(IndexInRange(i, i), m) for i, m in enumerate(models, start=1)]
        rules.append((Otherwise(), otherwise if otherwise is not None else models[-1]))
        return cls(tuple(rules))

    def resolve(self, index: int) -> TailModel:
        return _resolve(self, int(index))

    def models(self, n: int) -> list[TailModel]:
        return [self.resolve(i) for i in range(1, n + 1)]

    def has_square_rule(self) -> bool:
        return any(isinstance(p, IndexIsPerfectSquare) for p, _ in self.rules)

    def square_rules(self) -> list[IndexIsPerfectSquare]:
        return [p for p, _ in self.rules if isinstance(p, IndexIsPerfectSquare)]

    def to_dict(self):
        out = []
        for p, t in self.rules:
            rule = t.to_dict()
            rule = {"family": rule["family"], "params": rule["params"]}
            rule["predicate"] = p.to_dict()
            out.append(rule)
        return {"rules": out}


@lru_cache(maxsize=200_000)
def _resolve(spec: SequenceSpec, index: int) -> TailModel:
    if index < 1:
        raise ValueError("summand indices start at 1")
    for pred, tmpl in spec.rules:
        if pred.matches(index):
            return tmpl.instantiate(index) if isinstance(tmpl, FamilyTemplate) else tmpl
    raise AssertionError("unreachable: the final rule always matches")


# ---------------------------------------------------------------------------
# functional surface
# ---------------------------------------------------------------------------


def log_survival(model: TailModel, x):
    return model.log_survival(x)


def sample(model: TailModel, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    return model.sample(rng, size)


def concentration(model: TailModel, width: float) -> float:
    if width < 0:
        raise ValueError("width must be nonnegative")
    return model.concentration(width)


def counting_tail(counting: CountingDist, n):
    """Exact ``P(eta > n)``."""
    t = counting.tail(n)
    return float(t) if np.ndim(t) == 0 else t


def resolve(spec: SequenceSpec, index: int) -> TailModel:
    return spec.resolve(index)
