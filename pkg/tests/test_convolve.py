from __future__ import annotations

import math

import numpy as np
import pytest

from tailconv.convolve import (
    Erlang,
    Hypoexponential,
    IrwinHall,
    conv_chain,
    conv_pair,
    exact_tail_oracle,
    lattice_partial_sum_tails,
)
from tailconv.dist_core import (
    Exponential,
    FiniteTable,
    Pareto,
    PiecewiseExample3,
    PointMass,
    SequenceSpec,
    Uniform,
    WeibullRoot,
)
from tailconv.tailgrid import TailGrid, hybrid_grid


def test_closed_form_oracles():
    assert Erlang(2, 1.0).survival(1.0) == pytest.approx(2 * math.exp(-1.0), rel=1e-14)
    assert Erlang(3, 1.0).survival(2.0) == pytest.approx(5 * math.exp(-2.0), rel=1e-14)
    assert Hypoexponential((1.0, 2.0)).survival(1.0) == pytest.approx(2 * math.exp(-1.0) - math.exp(-2.0), rel=1e-14)
    assert IrwinHall(2).survival(1.0) == pytest.approx(0.5, abs=1e-14)
    assert IrwinHall(3).survival(1.5) == pytest.approx(0.5, abs=1e-14)


def test_conv_pair_two_unit_exponentials():
    g = conv_pair(Exponential(1.0), Exponential(1.0), [1.0])
    assert abs(float(g.survival_at(1.0)) - 2 * math.exp(-1.0)) <= max(g.abs_error_bound, 1e-8)
    assert g.abs_error_bound <= 1e-8


def test_conv_pair_hypoexponential():
    g = conv_pair(Exponential(1.0), Exponential(2.0), [1.0])
    assert float(g.survival_at(1.0)) == pytest.approx(0.6004236, abs=1e-7)


@pytest.mark.parametrize("model", [Exponential(1.0), Pareto(1.0, 2.0), Uniform(0.0, 1.0), PiecewiseExample3(4)],
                         ids=lambda m: m.family)
def test_point_mass_at_zero_is_the_identity(model):
    xs = np.linspace(0.0, 10.0, 41)
    g = conv_pair(model, PointMass(0.0), xs)
    np.testing.assert_allclose(g.survival, model.survival(xs), atol=1e-12)


def test_point_mass_shifts_the_tail():
    xs = np.linspace(0.0, 10.0, 41)
    g = conv_pair(Exponential(1.0), PointMass(2.0), xs)
    np.testing.assert_allclose(g.survival, Exponential(1.0).survival(xs - 2.0), atol=1e-12)


PAIRS = [
    (Exponential(1.0), Exponential(2.0)),
    (Pareto(1.0, 2.0), Exponential(1.0)),
    (Uniform(0.0, 1.0), WeibullRoot()),
    (PiecewiseExample3(4), Exponential(1.0)),
    (FiniteTable(((0.0, 0.5), (1.0, 0.5))), Pareto(2.0, 1.5)),
]


@pytest.mark.parametrize("a,b", PAIRS, ids=lambda m: m.family)
def test_superadditivity_and_union_bound(a, b):
    xs = np.linspace(0.0, 30.0, 61)
    g = conv_pair(a, b, xs)
    s, err = g.survival, g.abs_error_bound
    assert np.all(s + err >= np.maximum(a.survival(xs), b.survival(xs)) - 1e-12)
    assert np.all(s - err <= a.survival(xs / 2) + b.survival(xs / 2) + 1e-12)


@pytest.mark.parametrize("a,b", PAIRS[:3], ids=lambda m: m.family)
def test_conv_pair_is_commutative(a, b):
    xs = np.linspace(0.0, 20.0, 21)
    ab, ba = conv_pair(a, b, xs), conv_pair(b, a, xs)
    assert np.all(np.abs(ab.survival - ba.survival) <= ab.abs_error_bound + ba.abs_error_bound + 1e-12)


def test_conv_pair_accepts_a_tailgrid_first_argument():
    xs = hybrid_grid(30.0)
    first = TailGrid.from_survival(xs, Exponential(1.0).survival(xs))
    g = conv_pair(first, Exponential(1.0), [1.0, 5.0])
    exact = Erlang(2, 1.0).survival(np.array([1.0, 5.0]))
    assert np.all(np.abs(g.survival - exact) <= g.abs_error_bound + 1e-12)
    # the enclosure of a log-linear grid is conservative, but it must stay informative
    assert g.abs_error_bound < 5e-2


def test_conv_chain_single_term_is_the_summand():
    xs = hybrid_grid(50.0)
    g = conv_chain(SequenceSpec.iid(Pareto(1.0, 2.0)), 1, xs)
    np.testing.assert_allclose(g.survival, Pareto(1.0, 2.0).survival(xs), rtol=1e-14, atol=1e-300)


def test_conv_chain_erlang_and_irwin_hall():
    g = conv_chain(SequenceSpec.iid(Exponential(1.0)), 3, [2.0])
    assert abs(float(g.survival[0]) - 5 * math.exp(-2.0)) <= g.abs_error_bound
    u = conv_chain(SequenceSpec.iid(Uniform(0.0, 1.0)), 2, [1.0])
    assert abs(float(u.survival[0]) - 0.5) <= max(u.abs_error_bound, 1e-12)


def test_conv_chain_monotone_in_n():
    xs = hybrid_grid(40.0)
    spec = SequenceSpec.from_models([Pareto(1.0, 2.0), Exponential(1.0), Uniform(0.0, 2.0)], Exponential(0.5))
    prev = conv_chain(spec, 1, xs)
    for n in range(2, 5):
        cur = conv_chain(spec, n, xs)
        assert np.all(cur.survival + cur.abs_error_bound + prev.abs_error_bound >= prev.survival)
        prev = cur


@pytest.mark.parametrize("n", [2, 3, 4])
def test_oracle_equivalence_for_uniform_chains(n):
    xs = np.linspace(0.0, n, 81)
    g = conv_chain(SequenceSpec.iid(Uniform(0.0, 1.0)), n, xs)
    exact = IrwinHall(n).survival(xs)
    assert np.all(np.abs(g.survival - exact) <= g.abs_error_bound + 1e-12)


def test_tolerance_passes_through():
    g = conv_chain(SequenceSpec.iid(Exponential(1.0)), 3, hybrid_grid(30.0), tol=1e-8)
    assert g.abs_error_bound <= 1e-8
    assert g.tol_attained


def test_exact_tail_oracle_cases():
    assert exact_tail_oracle(SequenceSpec.iid(Pareto(1.0, 2.0)), 1) == Pareto(1.0, 2.0)
    hypo = exact_tail_oracle(SequenceSpec.from_models([Exponential(1.0), Exponential(2.0)]), 2)
    assert float(hypo.survival(1.0)) == pytest.approx(0.6004236, abs=1e-7)
    assert exact_tail_oracle(SequenceSpec.iid(Pareto(1.0, 2.0)), 2) is None
    assert isinstance(exact_tail_oracle(SequenceSpec.iid(Exponential(1.0)), 4), Erlang)


def test_atoms_are_kept_exact():
    # two Example-3 summands at level 4: mass (3/4)^2 sits at 0, so P(S > 0) = 1 - 9/16
    g = conv_chain(SequenceSpec.iid(PiecewiseExample3(4)), 2, [0.0, 0.5])
    np.testing.assert_allclose(g.survival, 7 / 16, atol=g.abs_error_bound + 1e-12)


def test_lattice_tails_are_reported_per_prefix():
    res = lattice_partial_sum_tails([Exponential(1.0)] * 3, np.array([1.0, 2.0, 5.0]))
    assert res.tails.shape == (3, 3)
    for n in range(1, 4):
        exact = Erlang(n, 1.0).survival(res.xs)
        assert np.all(np.abs(res.tails[n - 1] - exact) <= res.errors[n - 1] + 1e-15)


def test_tailgrid_serializes_to_csv_and_json():
    g = conv_chain(SequenceSpec.iid(Exponential(1.0)), 2, [0.0, 1.0])
    lines = g.to_csv().strip().splitlines()
    assert lines[0] == "x,log_survival,survival"
    assert len(lines) == 3
    back = TailGrid.from_dict(g.to_dict())
    np.testing.assert_array_equal(back.log_survival, g.log_survival)
    assert back.abs_error_bound == g.abs_error_bound
