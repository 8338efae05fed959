from __future__ import annotations

import math

import numpy as np
import pytest

from tailconv.convolve import Erlang, conv_chain
from tailconv.dist_core import (
    Degenerate,
    Exponential,
    Geometric,
    Pareto,
    Poisson,
    SequenceSpec,
    Table,
    Uniform,
    UniformRange,
)
from tailconv.presets import preset
from tailconv.random_sum import (
    NumericalBudgetError,
    decomposition_trace,
    j_split,
    random_sum_tail,
    truncation_plan,
)
from tailconv.tailgrid import hybrid_grid

EXP = SequenceSpec.iid(Exponential(1.0))


def test_degenerate_one_gives_the_first_summand():
    xs = hybrid_grid(50.0)
    spec = SequenceSpec.from_models([Pareto(1.0, 2.0)], Exponential(1.0))
    g = random_sum_tail(spec, Degenerate(1), xs)
    np.testing.assert_allclose(g.survival, Pareto(1.0, 2.0).survival(xs), rtol=1e-14)


def test_two_term_exponential_mixture():
    g = random_sum_tail(EXP, UniformRange(2), [1.0])
    exact = 0.5 * math.exp(-1.0) + 0.5 * 2 * math.exp(-1.0)
    assert exact == pytest.approx(0.5518192, abs=1e-7)
    assert abs(float(g.survival[0]) - exact) <= g.abs_error_bound
    assert g.abs_error_bound <= 1e-6


def test_poisson_truncation_remainder():
    assert Poisson(1.0).tail(30) < 1e-30
    n = truncation_plan(Poisson(1.0), 1e-30)
    assert n <= 30


def test_geometric_mixture_of_exponentials_is_exponential():
    # a geometric number (>= 1) of unit exponentials is exponential with rate p
    counting = Table(tuple([0.0] + [0.5**n for n in range(1, 80)]))
    xs = np.linspace(0.0, 30.0, 31)
    g = random_sum_tail(EXP, counting, xs)
    assert np.all(np.abs(g.survival - np.exp(-0.5 * xs)) <= g.abs_error_bound + 1e-15)


def test_zero_count_contributes_nothing_at_nonnegative_x():
    # Geometric starts at 0 with mass p there
    g = random_sum_tail(EXP, Geometric(0.5), [0.0])
    assert float(g.survival[0]) == pytest.approx(0.5, abs=g.abs_error_bound + 1e-12)


def test_tolerance_passes_through():
    g = random_sum_tail(EXP, Poisson(2.0), hybrid_grid(40.0), tol=1e-8)
    assert g.abs_error_bound <= 1e-8


def test_refuses_when_truncation_exceeds_budget():
    with pytest.raises(NumericalBudgetError) as info:
        random_sum_tail(EXP, Geometric(1e-6), [1.0], tol=1e-6, n_max=1000)
    assert info.value.attained_bound > 1e-6


@pytest.mark.parametrize("example_id", [1, 2, 3])
def test_mixture_bound_for_every_support_index(example_id):
    p = preset(example_id)
    xs = hybrid_grid(30.0)
    g = random_sum_tail(p.spec, p.counting, xs)
    for kappa in range(1, 6):
        w = float(p.counting.pmf(kappa))
        if w == 0:
            continue
        partial = conv_chain(p.spec, kappa, xs)
        lower = w * partial.survival - w * partial.abs_error_bound - g.abs_error_bound
        assert np.all(g.survival >= lower)
    assert np.all(g.survival <= 1.0 + g.abs_error_bound)


def test_shifting_the_count_up_never_decreases_the_tail():
    base = np.array([0.0, 0.2, 0.3, 0.5])
    xs = np.linspace(0.0, 20.0, 41)
    spec = SequenceSpec.from_models([Exponential(1.0), Uniform(0.0, 2.0)], Pareto(1.0, 3.0))
    lo = random_sum_tail(spec, Table(tuple(base)), xs)
    hi = random_sum_tail(spec, Table(tuple(np.r_[0.0, base])), xs)
    assert np.all(hi.survival + hi.abs_error_bound + lo.abs_error_bound >= lo.survival)


@pytest.mark.parametrize("example_id,x", [(1, 12.0), (2, 9.0), (3, 15.0)])
def test_decomposition_terms_sum_to_the_tail_at_x_minus_one(example_id, x):
    p = preset(example_id)
    tol = 1e-8
    tr = decomposition_trace(p.spec, p.counting, p.kappa, 3.0, x, tol=tol)
    assert all(t >= 0 for t in tr.terms)
    ref = random_sum_tail(p.spec, p.counting, [x - 1.0], tol=tol)
    assert abs(math.fsum(tr.terms) - float(ref.survival[0])) <= 2 * tol
    assert tr.K4 <= tr.tail_at_x + tr.error_bound
    d = tr.to_dict()
    assert {"K1", "K2", "K3", "K4", "sum"} <= set(d)


def test_decomposition_with_degenerate_count_has_only_the_first_term():
    tr = decomposition_trace(EXP, Degenerate(3), 3, 3.0, 8.0)
    assert tr.K2 == tr.K3 == tr.K4 == 0.0
    assert tr.K1 == pytest.approx(float(Erlang(3, 1.0).survival(7.0)), abs=1e-8)


def test_decomposition_preconditions():
    with pytest.raises(ValueError):
        decomposition_trace(EXP, Poisson(1.0), 1, 3.0, 5.0)
    with pytest.raises(ValueError):
        decomposition_trace(EXP, Poisson(1.0), 1, 2.0, 10.0)
    with pytest.raises(ValueError):
        decomposition_trace(EXP, UniformRange(3), 5, 3.0, 10.0)


def test_j_split_first_part_is_dominated():
    p = preset(3)
    out = j_split(p.spec, p.counting, p.kappa, 20.0)
    assert out["J1"] <= out["J1_bound"] * (1 + 1e-9)
    assert out["J1"] + out["J2"] >= 1.0 - 1e-6
