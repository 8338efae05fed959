"""Tabulated tails on an x-grid with an attached uniform error bound."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = ["TailGrid", "hybrid_grid"]


def hybrid_grid(
    x_max: float = 200.0,
    step: float = 0.05,
    linear_end: float = 20.0,
    ratio: float = 1.05,
) -> np.ndarray:
    """Linear nodes of width ``step`` on [0, linear_end], then geometric up to ``x_max``.

    Linear nodes are computed as ``round(i * step, 12)`` so that integer and
    half-integer abscissae are represented exactly.
    """
    if x_max <= 0:
        raise ValueError("x_max must be positive")
    end = min(linear_end, x_max)
    n_lin = int(round(end / step))
    lin = np.round(np.arange(n_lin + 1) * step, 12)
    lin = lin[lin <= end + 1e-12]
    if x_max <= linear_end + 1e-12:
        if lin[-1] < x_max - 1e-12:
            lin = np.append(lin, x_max)
        return lin
    geo = [lin[-1]]
    while geo[-1] * ratio < x_max:
        geo.append(geo[-1] * ratio)
    geo = np.array(geo[1:] + [x_max])
    return np.concatenate([lin, geo])


@dataclass(frozen=True, eq=False)
class TailGrid:
    """Log-survival values on a strictly increasing grid of nonnegative abscissae.

    Between nodes the tail is log-linear; left of the first node the survival is
    1; beyond the last node the last finite log-slope is extrapolated (callers
    can test :meth:`extrapolates`).  ``abs_error_bound`` bounds
    ``|survival_true - survival_grid|`` at the nodes.
    """

    xs: np.ndarray
    log_survival: np.ndarray
    abs_error_bound: float = 0.0
    tol_attained: bool = True
    node_errors: np.ndarray | None = None
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        xs = np.asarray(self.xs, dtype=float)
        ls = np.asarray(self.log_survival, dtype=float)
        if xs.ndim != 1 or xs.shape != ls.shape or xs.size == 0:
            raise ValueError("xs and log_survival must be equal-length 1-D arrays")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("xs must be strictly increasing")
        if xs[0] < 0:
            raise ValueError("grid must have nonnegative support")
        if np.any(np.isnan(ls)) or np.any(ls > 1e-12):
            raise ValueError("log_survival values must lie in [-inf, 0]")
        ls = np.minimum(ls, 0.0)
        with np.errstate(invalid="ignore"):
            rising = np.diff(ls) > 1e-12
        if np.any(rising):
            raise ValueError("log_survival must be non-increasing")
        if not self.abs_error_bound >= 0:
            raise ValueError("abs_error_bound must be nonnegative")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "log_survival", ls)
        if self.node_errors is not None:
            object.__setattr__(self, "node_errors", np.asarray(self.node_errors, dtype=float))

    @classmethod
    def from_survival(cls, xs, survival, **kwargs) -> "TailGrid":
        """Build from plain survival values, projecting onto [0, 1] and monotone order.

        The running-minimum projection cannot increase the distance to any
        non-increasing tail, so an error bound valid before projection stays valid.
        """
        s = np.clip(np.asarray(survival, dtype=float), 0.0, 1.0)
        s = np.minimum.accumulate(s)
        with np.errstate(divide="ignore"):
            ls = np.log(s)
        return cls(np.asarray(xs, dtype=float), ls, **kwargs)

    @property
    def survival(self) -> np.ndarray:
        return np.exp(self.log_survival)

    @property
    def x_last(self) -> float:
        return float(self.xs[-1])

    def extrapolates(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) > self.xs[-1]

    def _last_slope(self) -> float:
        ls = self.log_survival
        if np.isneginf(ls[-1]):
            return -np.inf
        if ls.size < 2 or np.isneginf(ls[-2]):
            return 0.0
        return float((ls[-1] - ls[-2]) / (self.xs[-1] - self.xs[-2]))

    def log_survival_at(self, x):
        """Interpolated log-survival; 0 for x < xs[0]."""
        a = np.asarray(x, dtype=float)
        scalar = a.ndim == 0
        a = np.atleast_1d(a)
        xs, ls = self.xs, self.log_survival
        out = np.zeros(a.shape)
        inside = (a >= xs[0]) & (a <= xs[-1])
        if inside.any():
            xi = a[inside]
            i = np.clip(np.searchsorted(xs, xi, side="right") - 1, 0, xs.size - 1)
            j = np.minimum(i + 1, xs.size - 1)
            span = np.where(j > i, xs[j] - xs[i], 1.0)
            t = np.where(j > i, (xi - xs[i]) / span, 0.0)
            li, lj = ls[i], ls[j]
            with np.errstate(invalid="ignore"):
                val = li + t * (lj - li)
            val = np.where(t == 0.0, li, val)
            val = np.where((t > 0.0) & np.isneginf(lj), -np.inf, val)
            out[inside] = val
        beyond = a > xs[-1]
        if beyond.any():
            slope = self._last_slope()
            if np.isneginf(slope):
                out[beyond] = -np.inf
            else:
                out[beyond] = ls[-1] + slope * (a[beyond] - xs[-1])
        return float(out[0]) if scalar else out

    def survival_at(self, x):
        return np.exp(self.log_survival_at(x))

    def to_dict(self) -> dict[str, Any]:
        return {
            "xs": self.xs.tolist(),
            "log_survival": [float(v) if np.isfinite(v) else "-inf" for v in self.log_survival],
            "abs_error_bound": float(self.abs_error_bound),
            "tol_attained": bool(self.tol_attained),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TailGrid":
        ls = [(-np.inf if v in ("-inf", "-Infinity", None) else float(v)) for v in d["log_survival"]]
        return cls(
            np.asarray(d["xs"], dtype=float),
            np.asarray(ls, dtype=float),
            abs_error_bound=float(d.get("abs_error_bound", 0.0)),
            tol_attained=bool(d.get("tol_attained", True)),
            provenance=dict(d.get("provenance", {})),
        )

    def to_json(self, **extra: Any) -> str:
        payload = self.to_dict()
        payload.update(extra)
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_csv(self, header: str | None = None) -> str:
        buf = io.StringIO()
        if header:
            for line in header.splitlines():
                buf.write(f"# {line}\n")
        buf.write("x,log_survival,survival\n")
        for x, l, s in zip(self.xs, self.log_survival, self.survival):
            buf.write(f"{x!r},{l!r},{s!r}\n")
        return buf.getvalue()
