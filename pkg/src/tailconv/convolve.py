"""Tails of independent sums: pairwise quadrature, lattice chains and closed-form oracles.

Two engines live here.

``conv_pair`` evaluates the Stieltjes integral of ``survival_a(x - y)`` against
the law of ``b`` node by node.  Atoms of ``b`` are summed exactly; the continuous
part is integrated in its survival variable ``v = P(B_c > y)``, which makes the
integrand bounded and monotone, with composite Gauss-Legendre panels whose
breakpoints mix uniform-in-``v``, uniform-in-``y`` and the kinks of ``a``.  It is
accurate in the relative sense far into the tail, which the subexponentiality
diagnostics rely on.

Chains of convolutions are computed on an equispaced lattice instead
(:func:`lattice_partial_sum_tails`).  Each summand is discretized by the
mean-preserving linear split of every cell's mass onto its two endpoints, the
lattice laws are multiplied by FFT, and the final summand enters exactly
through its survival function.  The result is second order in the step, so the
difference between step ``h`` and ``2h`` is used as the error bound and the
step is halved until that bound meets the tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, ClassVar, Sequence

import numpy as np
from scipy import signal, special, stats

from .dist_core import Exponential, SequenceSpec, TailModel, Uniform
from .tailgrid import TailGrid, hybrid_grid

__all__ = [
    "conv_pair",
    "conv_chain",
    "exact_tail_oracle",
    "lattice_partial_sum_tails",
    "LatticeResult",
    "Erlang",
    "Hypoexponential",
    "IrwinHall",
    "BASE_STEP",
]

BASE_STEP = 0.05
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)
_EPS = np.finfo(float).eps
_CLUSTER = np.concatenate([-(2.0 ** -np.arange(0, 30)), [0.0], 2.0 ** -np.arange(0, 30)])


# ---------------------------------------------------------------------------
# closed-form oracles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Erlang(TailModel):
    """Sum of ``n`` iid Exponential(rate) variables."""

    n: int
    rate: float = 1.0
    family: ClassVar[str] = "Erlang"

    def _log_sf(self, x):
        return stats.gamma.logsf(x, self.n, scale=1.0 / self.rate)

    def _int_sf(self, x):
        # int_0^x P(G > t) dt = E[min(G, x)]
        g = stats.gamma
        mean = self.n / self.rate
        return mean * g.cdf(x, self.n + 1, scale=1.0 / self.rate) + x * g.sf(x, self.n, scale=1.0 / self.rate)

    def cont_inverse_survival(self, v):
        return stats.gamma.isf(v, self.n, scale=1.0 / self.rate)

    def sample(self, rng, size):
        return rng.gamma(self.n, 1.0 / self.rate, size)

    @property
    def mean(self):
        return self.n / self.rate

    def params(self):
        return {"n": self.n, "rate": self.rate}


@dataclass(frozen=True)
class Hypoexponential(TailModel):
    """Sum of independent exponentials with pairwise distinct rates."""

    rates: tuple[float, ...]
    family: ClassVar[str] = "Hypoexponential"

    def __post_init__(self):
        r = tuple(float(v) for v in self.rates)
        if len(set(r)) != len(r):
            raise ValueError("Hypoexponential rates must be distinct")
        object.__setattr__(self, "rates", r)

    @property
    def _coef(self) -> np.ndarray:
        lam = np.array(self.rates)
        out = np.empty_like(lam)
        for i, li in enumerate(lam):
            others = np.delete(lam, i)
            out[i] = np.prod(others / (others - li))
        return out

    def _log_sf(self, x):
        lam, c = np.array(self.rates), self._coef
        # factor out the slowest decay for stability in the far tail
        j = int(np.argmin(lam))
        s = np.exp(-np.outer(x, lam - lam[j])) @ c
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(s > 0, np.log(np.maximum(s, 1e-300)) - lam[j] * x, -np.inf)

    def _int_sf(self, x):
        lam, c = np.array(self.rates), self._coef
        return (-np.expm1(-np.outer(x, lam)) / lam) @ c

    def cont_inverse_survival(self, v):
        from scipy.optimize import brentq

        def one(t):
            if t >= 1.0:
                return 0.0
            hi = 1.0
            while self.survival(hi) > t:
                hi *= 2
            return brentq(lambda z: self.survival(z) - t, 0.0, hi, xtol=1e-14)

        return np.vectorize(one)(v)

    def sample(self, rng, size):
        return sum(rng.exponential(1.0 / r, size) for r in self.rates)

    @property
    def mean(self):
        return float(sum(1.0 / r for r in self.rates))

    def params(self):
        return {"rates": list(self.rates)}


@dataclass(frozen=True)
class IrwinHall(TailModel):
    """Sum of ``n`` iid Uniform(0, 1) variables."""

    n: int
    family: ClassVar[str] = "IrwinHall"

    def _cdf_raw(self, x):
        n = self.n
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for k in range(n + 1):
            term = (-1) ** k * special.comb(n, k) * np.maximum(x - k, 0.0) ** n
            out += term
        return out / math.factorial(n)

    def _log_sf(self, x):
        n = self.n
        lower = x <= n / 2.0
        sf = np.where(lower, 1.0 - self._cdf_raw(np.where(lower, x, 0.0)),
                      self._cdf_raw(np.where(lower, 0.0, n - x)))
        sf = np.where(x >= n, 0.0, np.clip(sf, 0.0, 1.0))
        with np.errstate(divide="ignore"):
            return np.log(sf)

    def _int_sf(self, x):
        edges = np.linspace(0.0, self.n, 64 * self.n + 1)
        gx, gw = np.polynomial.legendre.leggauss(8)
        out = np.empty_like(x)
        for i, xi in enumerate(x):
            top = min(xi, self.n)
            e = edges[edges < top]
            e = np.append(e, top)
            mid, half = 0.5 * (e[1:] + e[:-1]), 0.5 * np.diff(e)
            pts = mid[:, None] + half[:, None] * gx[None, :]
            out[i] = float(np.sum(half[:, None] * gw[None, :] * self.survival(pts)))
        return out

    def kinks(self):
        return tuple(float(k) for k in range(self.n + 1))

    def cont_inverse_survival(self, v):
        from scipy.optimize import brentq

        return np.vectorize(lambda t: self.n if t <= 0 else (0.0 if t >= 1 else brentq(lambda z: self.survival(z) - t, 0.0, self.n)))(v)

    def sample(self, rng, size):
        return rng.random((size, self.n)).sum(axis=1)

    @property
    def mean(self):
        return 0.5 * self.n

    def params(self):
        return {"n": self.n}


def exact_tail_oracle(spec: SequenceSpec, n: int) -> TailModel | None:
    """Closed-form tail of ``xi_1 + ... + xi_n`` when one is registered, else ``None``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    models = spec.models(n)
    if n == 1:
        return models[0]
    if all(isinstance(m, Exponential) for m in models):
        rates = [m.rate for m in models]
        if len(set(rates)) == 1:
            return Erlang(n, rates[0])
        if len(set(rates)) == n:
            return Hypoexponential(tuple(rates))
        return None
    if all(isinstance(m, Uniform) and m.low == 0.0 and m.high == 1.0 for m in models):
        return IrwinHall(n)
    return None


# ---------------------------------------------------------------------------
# pairwise quadrature
# ---------------------------------------------------------------------------


def _as_nodes(x_grid) -> np.ndarray:
    xs = hybrid_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    if xs.ndim != 1 or xs.size == 0 or np.any(np.diff(xs) <= 0) or xs[0] < 0:
        raise ValueError("x_grid must be a strictly increasing array of nonnegative reals")
    return xs


def _cont_integral(sf_a: Callable, kinks_a: np.ndarray, b: TailModel, xs: np.ndarray, panels: int,
                   cluster: bool = False) -> np.ndarray:
    """``int_{v_lo(x)}^1 sf_a(x - Qb(v)) dv`` for each x, with ``panels`` base panels.

    With ``cluster`` the breakpoints also accumulate geometrically on both
    sides of every kink of ``a``, which tames square-root type singularities.
    """
    y_lo = float(b.cont_inverse_survival(1.0))
    kinks_b = np.array([k for k in b.kinks() if k > y_lo], dtype=float)
    out = np.zeros(xs.size)
    active = xs > y_lo
    if not active.any():
        return out
    xa = xs[active]
    v_lo = np.exp(b.cont_log_survival(xa))
    t = np.linspace(0.0, 1.0, panels + 1)
    v_uni = v_lo[:, None] + t[None, :] * (1.0 - v_lo[:, None])
    y_uni = y_lo + t[None, :] * (xa[:, None] - y_lo)
    near = kinks_a[None, :] if not cluster else (kinks_a[:, None] + _CLUSTER[None, :]).ravel()[None, :]
    y_kinks = np.concatenate([xa[:, None] - near, np.broadcast_to(kinks_b, (xa.size, kinks_b.size))], axis=1)
    y_kinks = np.clip(y_kinks, y_lo, xa[:, None])
    ys = np.concatenate([y_uni, y_kinks], axis=1)
    v_from_y = np.exp(b.cont_log_survival(ys.ravel())).reshape(ys.shape)
    bps = np.sort(np.concatenate([v_uni, v_from_y], axis=1), axis=1)
    bps = np.clip(bps, v_lo[:, None], 1.0)
    lo, hi = bps[:, :-1], bps[:, 1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    vals = np.zeros(lo.shape)
    for g, w in zip(_GL_NODES, _GL_WEIGHTS):
        v = mid + half * g
        with np.errstate(divide="ignore", invalid="ignore"):
            y = b.cont_inverse_survival(np.maximum(v, 1e-320))
        z = xa[:, None] - y
        vals += w * sf_a(z.ravel()).reshape(z.shape)
    out[active] = np.sum(half * vals, axis=1)
    return out


def _pair_core(sf_a, kinks_a, b: TailModel, xs, tol, rtol, max_panels):
    atom_part = np.zeros(xs.size)
    for c, p in b.atoms():
        atom_part += p * sf_a(xs - c)
    w = b.cont_weight
    if w <= 0:
        return atom_part, np.zeros(xs.size), True
    base = np.exp(b.cont_log_survival(xs))
    cluster = kinks_a.size <= 8
    chunk = max(1, int(4e6 // (max_panels * 3 + kinks_a.size + 8) // 10))
    result = np.empty(xs.size)
    err = np.empty(xs.size)
    converged = True
    for s in range(0, xs.size, chunk):
        idx = np.arange(s, min(s + chunk, xs.size))
        panels = 16
        prev = _cont_integral(sf_a, kinks_a, b, xs[idx], panels, cluster)
        todo = idx
        res_c = np.array(prev)
        err_c = np.full(idx.size, np.inf)
        pos = np.arange(idx.size)
        while todo.size and panels < max_panels:
            panels *= 2
            cur = _cont_integral(sf_a, kinks_a, b, xs[todo], panels, cluster)
            e = np.abs(cur - prev)
            res_c[pos] = cur
            err_c[pos] = e
            total = base[todo] + cur
            done = e * w <= np.maximum(tol, rtol * w * total)
            todo, pos, prev = todo[~done], pos[~done], cur[~done]
        if todo.size:
            converged = False
        result[idx] = res_c
        err[idx] = err_c
    return atom_part + w * (base + result), w * err, converged


def _enclosure_error(grid: TailGrid, b: TailModel, xs: np.ndarray) -> np.ndarray:
    """Rigorous bound on the error from using the interpolated grid tail inside the integral.

    Between nodes the true tail lies in ``[S(x_{i+1}) - beta, S(x_i) + beta]``,
    as does the interpolant, so each cell contributes its survival drop times
    the probability that ``x - B`` falls in it.
    """
    gx, s = grid.xs, grid.survival
    beta = grid.abs_error_bound
    drop = s[:-1] - s[1:]
    lo = xs[:, None] - gx[None, 1:]
    hi = xs[:, None] - gx[None, :-1]
    mass = b.survival(lo) + b.atom_mass_at(lo) - b.survival(hi)
    err = np.sum(np.maximum(mass, 0.0) * drop[None, :], axis=1)
    # beyond the last node the extrapolation and the truth both lie in [0, S_last + beta]
    beyond = 1.0 - b.survival(xs - gx[-1])
    err += (s[-1] + beta) * np.clip(beyond, 0.0, 1.0)
    if gx[0] > 0:
        left = b.survival(xs - gx[0]) + b.atom_mass_at(xs - gx[0]) - b.survival(xs)
        err += (1.0 - s[0]) * np.clip(left, 0.0, 1.0)
    return err + beta


def conv_pair(
    tail_a: TailModel | TailGrid,
    dist_b: TailModel,
    x_grid=None,
    tol: float = 1e-8,
    rtol: float = 0.0,
    max_panels: int = 2048,
) -> TailGrid:
    """Tail of ``A + B`` for independent nonnegative ``A`` and ``B`` on ``x_grid``.

    ``tol`` is the absolute quadrature target per node; ``rtol`` optionally
    relaxes it to a relative target, which is what far-tail ratio diagnostics
    need.  When ``tail_a`` is a grid its own error bound and an interpolation
    enclosure are added.  If the target is missed within ``max_panels`` the
    grid is still returned, with the honest larger bound and
    ``tol_attained=False``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not isinstance(dist_b, TailModel):
        raise TypeError("dist_b must be a TailModel")
    xs = _as_nodes(x_grid)
    if isinstance(tail_a, TailGrid):
        grid_a = tail_a

        def sf_a(z):
            return np.where(z < 0, 1.0, grid_a.survival_at(z))

        kinks_a = grid_a.xs
        source = "grid"
    elif isinstance(tail_a, TailModel):
        model_a = tail_a
        sf_a = model_a.survival
        kinks_a = np.asarray(model_a.kinks(), dtype=float)
        source = model_a.family
    else:
        raise TypeError("tail_a must be a TailModel or a TailGrid")
    values, node_err, converged = _pair_core(sf_a, kinks_a, dist_b, xs, tol, rtol, max_panels)
    if isinstance(tail_a, TailGrid):
        node_err = node_err + _enclosure_error(tail_a, dist_b, xs)
    bound = float(np.max(node_err)) if node_err.size else 0.0
    target = tol + (tail_a.abs_error_bound if isinstance(tail_a, TailGrid) else 0.0)
    attained = converged and (bound <= target or rtol > 0)
    return TailGrid.from_survival(
        xs, values, abs_error_bound=bound, tol_attained=bool(attained), node_errors=node_err,
        provenance={"operation": "conv_pair", "a": source, "b": dist_b.family, "tol": tol, "rtol": rtol},
    )


# ---------------------------------------------------------------------------
# lattice engine
# ---------------------------------------------------------------------------


def _aligned_atoms(model: TailModel, h: float, m: int) -> dict[int, float]:
    out: dict[int, float] = {}
    for c, p in model.atoms():
        k = int(round(c / h))
        if abs(k * h - c) <= 1e-9 * max(1.0, c) and k <= m:
            out[k] = out.get(k, 0.0) + p
    return out


def _discretize(model: TailModel, h: float, m: int) -> tuple[np.ndarray, float]:
    """Mean-preserving split of each cell's mass onto its endpoints.

    Returns masses at ``0, h, ..., m h`` and the mass beyond ``m h``.  The
    upper endpoint of a cell receives ``int_cell S / h - S(right)`` and the
    lower endpoint ``S(left) - int_cell S / h``; atoms on lattice points are
    kept exactly.
    """
    edges = np.arange(m + 1) * h
    s = model.survival(edges)
    avg = model.cell_integrals(edges) / h
    upper = np.clip(avg - s[1:], 0.0, None)
    lower = np.clip(s[:-1] - avg, 0.0, None)
    masses = np.zeros(m + 1)
    masses[:-1] += lower
    masses[1:] += upper
    masses[0] += 1.0 - s[0]
    return masses, float(s[-1])


def _fold(masses: np.ndarray, over: float, other: np.ndarray, over_other: float,
          tilt: np.ndarray, untilt: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Convolve two lattice laws in tilted coordinates; also returns the tilted peak."""
    m = masses.size
    full_t = np.clip(signal.fftconvolve(masses * tilt[:m], other * tilt[:m]), 0.0, None)
    full = full_t * untilt[: full_t.size]
    spill = float(full[m:].sum())
    return full[:m], over + over_other * (1.0 - over) + spill, float(full_t.max(initial=0.0))


def _fold_atoms(d: dict[int, float], a: dict[int, float], m: int) -> dict[int, float]:
    out: dict[int, float] = {}
    for i, p in d.items():
        for k, q in a.items():
            j = i + k
            if j <= m and p * q > 1e-300:
                out[j] = out.get(j, 0.0) + p * q
    return out


def _lagrange_eval(values: np.ndarray, h: float, x: np.ndarray) -> np.ndarray:
    """Evaluate lattice values at arbitrary points; exact on lattice points."""
    j = x / h
    jr = np.rint(j)
    on = np.abs(j - jr) <= 1e-9 * np.maximum(1.0, j)
    out = np.empty(x.size)
    ji = jr.astype(np.int64)
    out[on] = values[np.clip(ji[on], 0, values.size - 1)]
    off = ~on
    if off.any():
        base = np.floor(j[off]).astype(np.int64) - 1
        base = np.clip(base, 0, values.size - 4)
        t = j[off] - base
        acc = np.zeros(t.size)
        for a in range(4):
            w = np.ones(t.size)
            for b in range(4):
                if b != a:
                    w *= (t - b) / (a - b)
            acc += w * values[base + a]
        out[off] = acc
    return out


def _tilt_rate(models: Sequence[TailModel], top: float) -> float:
    """Exponential tilt for the lattice FFTs: the slowest local tail decay rate near ``top``.

    Multiplying every lattice array by ``exp(theta x)`` before the FFT and
    dividing afterwards turns the FFT's absolute rounding floor into one
    relative to ``exp(-theta x)``, so light tails stay accurate far below
    ``1e-10``.  Bounded-support summands decay faster than any exponential and
    do not constrain ``theta``.
    """
    if top <= 0:
        return 0.0
    rates = []
    for model in models:
        a, b = model.log_survival(np.array([0.75 * top, top]))
        if np.isfinite(b):
            rates.append(max(0.0, float(a - b) / (0.25 * top)))
    theta = min(rates) if rates else 0.0
    return min(theta, _MAX_TILT_EXPONENT / top)


_MAX_TILT_EXPONENT = 600.0


def _tails_one_step(models: Sequence[TailModel], xs: np.ndarray, h: float,
                    theta: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Rows ``T[n-1] ~ P(S_n > x)`` for n = 1..len(models) at nodes ``xs`` with step ``h``.

    Also returns rows of the rounding scale at each node: the largest tilted
    FFT value seen so far, untilted to that node.
    """
    top = float(max(xs.max(), 0.0))
    m = int(math.ceil(top / h)) + 4
    n_tot = len(models)
    rows = np.empty((n_tot, xs.size))
    scales = np.empty((n_tot, xs.size))
    lattice = np.arange(2 * m + 2) * h
    tilt = np.exp(theta * lattice)
    untilt = np.exp(-theta * lattice)
    lattice = lattice[: m + 1]
    masses = np.zeros(m + 1)
    masses[0] = 1.0
    over = 0.0
    peak = 1.0
    atoms = {0: 1.0}
    for n, model in enumerate(models, start=1):
        sf = model.survival(lattice)
        # P(D + xi > j h) = sum_{i<=j} m_i S((j-i)h) + sum_{i>j} m_i + overflow
        conv_t = np.clip(signal.fftconvolve(masses * tilt[: m + 1], sf * tilt[: m + 1])[: m + 1], 0.0, None)
        conv = conv_t * untilt[: m + 1]
        rest = np.concatenate([np.cumsum(masses[::-1])[::-1][1:], [0.0]])
        t = conv + rest + over
        smear = masses.copy()
        for i, p in atoms.items():
            smear[i] -= p
        for k, p in _aligned_atoms(model, h, m).items():
            t[k:] += 0.5 * p * smear[: m + 1 - k]
        peak = max(peak, float(conv_t.max(initial=0.0)))
        rows[n - 1] = _lagrange_eval(np.clip(t, 0.0, 1.0), h, xs)
        scales[n - 1] = peak * np.exp(-theta * xs) + rows[n - 1]
        if n < n_tot:
            disc, over_x = _discretize(model, h, m)
            masses, over, fold_peak = _fold(masses, over, disc, over_x, tilt, untilt)
            peak = max(peak, fold_peak)
            atoms = _fold_atoms(atoms, _aligned_atoms(model, h, m), m)
    return rows, scales


def _tails_merged(models: Sequence[TailModel], xs: np.ndarray, h: float, theta: float):
    """Untilted and tilted passes, keeping at each node the one with the smaller rounding scale.

    Tilting helps deep in a light tail but inflates the rounding near the
    origin by the tilted peak, so neither pass wins everywhere.
    """
    rows, scale = _tails_one_step(models, xs, h, 0.0)
    if theta > 0:
        rows_t, scale_t = _tails_one_step(models, xs, h, theta)
        pick = scale_t < scale
        rows = np.where(pick, rows_t, rows)
        scale = np.where(pick, scale_t, scale)
    return rows, scale


@dataclass(frozen=True)
class LatticeResult:
    """Partial-sum tails ``P(S_n > x)`` for n = 1..N with per-entry error estimates."""

    xs: np.ndarray
    tails: np.ndarray  # shape (N, len(xs)); row n-1 is S_n
    errors: np.ndarray
    step: float
    tol_attained: bool
    levels: tuple[float, ...]
    tilt: float = 0.0


def lattice_partial_sum_tails(
    models: Sequence[TailModel],
    x_grid=None,
    tol: float = 1e-6,
    weights: Sequence[float] | None = None,
    step0: float = BASE_STEP / 16,
    min_step: float = BASE_STEP / 256,
) -> LatticeResult:
    """Tails of every partial sum of ``models`` on ``x_grid``.

    The step halves from ``step0`` until ``sum_n weights[n] * err_n(x) <= tol``
    at every node, where ``err_n`` is the step-doubling difference plus a
    rounding allowance.  Row 1 (a single summand) is exact.  ``weights``
    defaults to charging only the last row, which is what a plain chain needs.
    """
    if not models:
        raise ValueError("need at least one summand")
    xs = _as_nodes(x_grid)
    n = len(models)
    w = np.zeros(n) if weights is None else np.asarray(weights, dtype=float)
    if weights is None:
        w[-1] = 1.0
    h = step0
    theta = _tilt_rate(models, float(xs.max()))
    coarse, _ = _tails_merged(models, xs, 2 * h, theta)
    levels = [2 * h]
    while True:
        fine, scale = _tails_merged(models, xs, h, theta)
        levels.append(h)
        m = int(math.ceil(xs.max() / h)) + 4
        rounding = 8.0 * _EPS * m * np.arange(1, n + 1)[:, None] * scale
        err = np.abs(fine - coarse) + rounding
        err[0] = 0.0
        exact0 = models[0].survival(xs)
        fine[0] = exact0
        total = w @ err
        if float(total.max()) <= tol or h / 2 < min_step * (1 - 1e-12):
            attained = float(total.max()) <= tol
            return LatticeResult(xs, np.clip(fine, 0.0, 1.0), err, h, attained, tuple(levels), theta)
        coarse = fine
        h /= 2


def conv_chain(spec: SequenceSpec, n: int, x_grid=None, tol: float = 1e-6) -> TailGrid:
    """Tail of ``S_n = xi_1 + ... + xi_n`` on ``x_grid`` with ``abs_error_bound <= tol``.

    ``n = 1`` returns the model tail itself with a rounding-level bound.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be an integer >= 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    xs = _as_nodes(x_grid)
    models = spec.models(int(n))
    prov = {"operation": "conv_chain", "n": int(n), "tol": tol}
    if n == 1:
        # closed form, up to the rounding of evaluating it
        ls = models[0].log_survival(xs)
        node_err = 4.0 * _EPS * np.exp(ls)
        return TailGrid(xs, ls, float(node_err.max()), True, node_err, {**prov, "method": "exact"})
    res = lattice_partial_sum_tails(models, xs, tol)
    err = res.errors[-1]
    prov.update(method="lattice", step=res.step, tilt=res.tilt)
    return TailGrid.from_survival(xs, res.tails[-1], abs_error_bound=float(err.max()),
                                  tol_attained=res.tol_attained, node_errors=err, provenance=prov)
