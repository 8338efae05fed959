from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from tailconv.dist_core import (
    Degenerate,
    Exponential,
    FiniteTable,
    GaussType,
    Geometric,
    Pareto,
    PiecewiseExample3,
    PointMass,
    Poisson,
    SequenceSpec,
    Table,
    Uniform,
    UniformRange,
    WeibullRoot,
    concentration,
    counting_tail,
    log_survival,
    make_model,
    resolve,
    sample,
    stream,
)
from tailconv.presets import preset

CORPUS = [
    Pareto(1.0, 2.0),
    Exponential(1.0),
    Exponential(0.5),
    WeibullRoot(),
    GaussType(),
    Uniform(0.0, 1.0),
    Uniform(0.5, 2.0),
    PointMass(3.0),
    FiniteTable(((0.0, 0.25), (1.5, 0.75))),
    PiecewiseExample3(4),
]


def test_log_survival_closed_forms():
    assert log_survival(Pareto(1.0, 2.0), 1.0) == pytest.approx(math.log(0.25), abs=1e-14)
    assert log_survival(Exponential(1.0), 2.0) == pytest.approx(-2.0, abs=1e-14)
    assert log_survival(PiecewiseExample3(4), 4.0) == pytest.approx(math.log(0.25), abs=1e-14)
    assert log_survival(PiecewiseExample3(4), 2.0) == pytest.approx(math.log(0.25), abs=1e-14)
    assert log_survival(PiecewiseExample3(4), 6.0) == pytest.approx(math.log(0.25) - 2.0, abs=1e-14)
    assert log_survival(WeibullRoot(), 9.0) == pytest.approx(-3.0, abs=1e-14)
    assert log_survival(GaussType(), 3.0) == pytest.approx(-9.0, abs=1e-14)


def test_log_survival_stays_finite_deep_in_the_tail():
    assert log_survival(Exponential(1.0), 1000.0) == pytest.approx(-1000.0)
    assert log_survival(GaussType(), 40.0) == pytest.approx(-1600.0)


@pytest.mark.parametrize("model", CORPUS, ids=lambda m: m.family)
def test_log_survival_is_zero_left_of_support_and_non_increasing(model):
    xs = np.linspace(-5.0, 60.0, 2001)
    ls = np.asarray(log_survival(model, xs))
    assert np.all(ls[xs < 0] == 0.0)
    assert np.all(ls[1:] <= ls[:-1] + 1e-15)
    assert np.all(ls <= 0.0)


def test_sample_support_and_point_mass():
    rng = stream(7)
    u = sample(Uniform(0.0, 1.0), rng, 1000)
    assert np.all((u >= 0.0) & (u <= 1.0))
    assert np.all(sample(PointMass(3.0), rng, 10) == 3.0)


def test_exponential_empirical_survival_within_three_se():
    draws = sample(Exponential(1.0), stream(11), 10**6)
    p = math.exp(-1.0)
    se = math.sqrt(p * (1 - p) / draws.size)
    assert abs(np.mean(draws > 1.0) - p) <= 3 * se


@pytest.mark.parametrize("model", [Pareto(1.0, 2.0), Exponential(2.0), WeibullRoot(), GaussType(), Uniform(0.5, 2.0)],
                         ids=lambda m: m.family)
def test_samples_pass_ks_against_model(model):
    draws = sample(model, stream(2026, 3), 10**5)
    result = stats.kstest(draws, lambda x: 1.0 - np.exp(np.asarray(log_survival(model, x))))
    assert result.pvalue > 1e-3


def test_samples_with_atoms_match_atom_masses():
    draws = sample(PiecewiseExample3(4), stream(5), 10**5)
    # atom 3/4 at zero, then 1/4 of the mass above 4
    assert abs(np.mean(draws == 0.0) - 0.75) < 0.01
    assert np.all((draws == 0.0) | (draws >= 4.0))
    table = sample(FiniteTable(((0.0, 0.25), (1.5, 0.75))), stream(5), 10**5)
    assert set(np.unique(table)) == {0.0, 1.5}
    assert abs(np.mean(table == 1.5) - 0.75) < 0.01


def test_stream_is_deterministic_and_ids_differ():
    a = stream(3, 1).random(5)
    assert np.array_equal(a, stream(3, 1).random(5))
    assert not np.array_equal(a, stream(3, 2).random(5))


def test_concentration_closed_forms():
    assert concentration(Exponential(1.0), 1.0) == pytest.approx(1 - math.exp(-1.0), abs=1e-14)
    assert concentration(Uniform(0.0, 1.0), 0.5) == pytest.approx(0.5, abs=1e-14)
    for k in (2, 4, 9, 100):
        assert concentration(PiecewiseExample3(k), 1.0) == pytest.approx(1 - 1 / k, abs=1e-14)
    assert concentration(PointMass(2.0), 0.0) == 1.0
    assert concentration(Exponential(1.0), 0.0) == 0.0
    assert concentration(FiniteTable(((0.0, 0.25), (1.5, 0.75))), 0.0) == pytest.approx(0.75)
    assert concentration(FiniteTable(((0.0, 0.25), (1.5, 0.75))), 2.0) == pytest.approx(1.0)


@pytest.mark.parametrize("model", CORPUS, ids=lambda m: m.family)
def test_concentration_non_decreasing_in_width(model):
    widths = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 50.0]
    q = [concentration(model, w) for w in widths]
    assert all(b >= a - 1e-12 for a, b in zip(q, q[1:]))
    assert all(0.0 <= v <= 1.0 + 1e-12 for v in q)


def test_concentration_rejects_negative_width():
    with pytest.raises(ValueError):
        concentration(Exponential(1.0), -1.0)


def test_counting_tails():
    assert counting_tail(UniformRange(5), 5) == 0.0
    assert counting_tail(UniformRange(5), 2) == pytest.approx(0.6)
    exact = math.fsum(math.exp(-1.0) / math.factorial(j) for j in range(11, 60))
    assert counting_tail(Poisson(1.0), 10) == pytest.approx(exact, rel=1e-10)
    assert counting_tail(Poisson(1.0), 10) == pytest.approx(1.0e-8, rel=0.01)
    assert counting_tail(Degenerate(3), 2) == 1.0
    assert counting_tail(Degenerate(3), 3) == 0.0
    assert counting_tail(Geometric(0.5), 3) == pytest.approx(0.5**4)
    assert counting_tail(Table((0.0, 0.5, 0.5)), 1) == pytest.approx(0.5)


def test_poisson_log_tail_is_finite_past_underflow():
    lt = Poisson(1.0).log_tail(np.array([10, 100, 400]))
    assert np.all(np.isfinite(lt))
    assert np.all(np.diff(lt) < 0)
    assert lt[0] == pytest.approx(math.log(counting_tail(Poisson(1.0), 10)), rel=1e-10)
    # the leading term of the series: log P(eta = 401)
    assert lt[2] == pytest.approx(stats.poisson.logpmf(401, 1.0), abs=1e-2)


def test_truncation_level_is_minimal():
    p = Poisson(1.0)
    n = p.truncation_level(1e-10)
    assert p.tail(n) <= 1e-10 < p.tail(n - 1)
    assert UniformRange(5).truncation_level(1e-12) == 5


def test_resolve_example_three_indices():
    p = preset(3)
    assert resolve(p.spec, p.kappa + 4) == PiecewiseExample3(4)
    assert resolve(p.spec, p.kappa + 9) == PiecewiseExample3(9)
    assert resolve(p.spec, p.kappa + 3) == Exponential(1.0)
    assert resolve(p.spec, p.kappa) == WeibullRoot()


def test_resolve_example_one_rate_scales_with_index():
    p = preset(1, D=3, lam=2.0)
    assert resolve(p.spec, 7) == Exponential(0.5)
    assert isinstance(resolve(p.spec, 1), Pareto)


def test_resolve_is_deterministic_over_a_long_range():
    spec = preset(3).spec
    idx = list(range(1, 10**6 + 1, 997)) + [10**6]
    first = [resolve(spec, i) for i in idx]
    assert first == [resolve(spec, i) for i in idx]


def test_sequence_spec_rejects_missing_otherwise():
    with pytest.raises(ValueError):
        SequenceSpec(())


@pytest.mark.parametrize("model", CORPUS, ids=lambda m: m.family)
def test_model_round_trips_through_dict(model):
    d = model.to_dict()
    assert make_model(d["family"], **d["params"]) == model


@pytest.mark.parametrize("bad", [lambda: Exponential(0.0), lambda: Pareto(-1.0, 2.0), lambda: Uniform(1.0, 1.0),
                                 lambda: Uniform(-1.0, 1.0), lambda: PointMass(-1.0), lambda: PiecewiseExample3(1)])
def test_invalid_parameters_raise(bad):
    with pytest.raises(ValueError):
        bad()
