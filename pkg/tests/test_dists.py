import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from bettest import dists
from bettest.dists import ChiSquaredModel, DiscreteDistribution, NormalModel
from bettest.errors import DomainError


def chisq_sf_even(k: int, x: float) -> float:
    """Closed form for even df: a Poisson(x/2) cdf at k/2 - 1."""
    lam = mpmath.mpf(x) / 2
    return float(mpmath.exp(-lam) * mpmath.fsum(lam**j / mpmath.factorial(j) for j in range(k // 2)))


def test_normal_tail_three_sd():
    assert NormalModel(0, 10).upper_tail(30) == pytest.approx(0.0013498980316301, rel=1e-12)


@given(st.floats(-37, 37))
def test_normal_sf_matches_mpmath(z):
    with mpmath.workdps(40):
        exact = float(mpmath.ncdf(-z))
    # rounding z / sqrt(2) costs about z**2 ulps far out in the tail
    assert dists.normal_sf(z) == pytest.approx(exact, rel=1e-12, abs=1e-300)
    assert dists.normal_cdf(z) + dists.normal_sf(z) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("k", [2, 4, 10, 12, 30])
@pytest.mark.parametrize("x", [0.1, 1.0, 5.0, 11.0, 40.748, 120.0])
def test_chisq_even_df_against_poisson_sum(k, x):
    assert ChiSquaredModel(k).upper_tail(x) == pytest.approx(chisq_sf_even(k, x), rel=1e-11)


@given(st.integers(1, 60), st.floats(0.0, 400.0))
def test_chisq_matches_mpmath(k, x):
    with mpmath.workdps(40):
        exact = float(mpmath.gammainc(k / 2, x / 2, mpmath.inf, regularized=True))
    got = ChiSquaredModel(k).upper_tail(x)
    assert got == pytest.approx(exact, rel=1e-10, abs=1e-300)
    assert ChiSquaredModel(k).cdf(x) == pytest.approx(1.0 - exact, abs=1e-12)


def test_chisq_eleven_at_40_748():
    # mpmath reference value; the historical table rounds this to 0.00003
    exact = float(mpmath.gammainc(5.5, 40.748 / 2, mpmath.inf, regularized=True))
    assert exact == pytest.approx(2.6629e-5, rel=1e-4)
    assert ChiSquaredModel(11).upper_tail(40.748) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("k", [1, 3, 11, 50])
def test_chisq_quantile_roundtrip(k):
    m = ChiSquaredModel(k)
    for q in (1e-6, 0.05, 0.5, 0.95, 1 - 1e-9):
        assert m.cdf(m.quantile(q)) == pytest.approx(q, rel=1e-9)
    assert m.quantile(0.95) == pytest.approx(stats.chi2.ppf(0.95, k), rel=1e-10)


def test_chisq_density_integrates_to_one():
    for k in (1, 2, 3, 11):
        assert dists.expect(ChiSquaredModel(k), lambda y: 1.0) == pytest.approx(1.0, abs=1e-9)
        assert dists.expect(ChiSquaredModel(k), lambda y: y) == pytest.approx(k, rel=1e-8)


@given(st.floats(-50, 50), st.floats(0.01, 100))
def test_normal_moments_by_quadrature(mu, sd):
    m = NormalModel(mu, sd)
    assert dists.expect(m, lambda y: 1.0) == pytest.approx(1.0, abs=1e-10)
    assert dists.expect(m, lambda y: y) == pytest.approx(mu, abs=1e-8 * (abs(mu) + sd))
    assert dists.expect(m, lambda y: (y - mu) ** 2) == pytest.approx(sd * sd, rel=1e-8)


def test_expect_with_breakpoint_step():
    m = NormalModel(0, 1)
    got = dists.expect(m, lambda y: 1.0 if y >= 1.2345 else 0.0, (1.2345,))
    assert got == pytest.approx(stats.norm.sf(1.2345), rel=1e-10)


def test_discrete_expect_and_mapping():
    m = DiscreteDistribution(("a", "b"), (0.3, 0.7))
    assert dists.expect(m, {"a": 10.0, "b": 0.0}) == pytest.approx(3.0)
    assert m.density("b") == 0.7
    with pytest.raises(DomainError):
        m.density("c")


@pytest.mark.parametrize("outcomes, probs", [
    ((1, 2), (0.5, 0.6)),
    ((1, 1), (0.5, 0.5)),
    ((1, 2), (-0.1, 1.1)),
    ((), ()),
    ((1,), (1.0, 0.0)),
])
def test_discrete_rejects_bad_tables(outcomes, probs):
    with pytest.raises(DomainError):
        DiscreteDistribution(outcomes, probs)


@pytest.mark.parametrize("mean, sd", [(0, 0), (0, -1), (math.inf, 1), (0, math.nan)])
def test_normal_rejects_bad_parameters(mean, sd):
    with pytest.raises(DomainError):
        NormalModel(mean, sd)


@pytest.mark.parametrize("df", [0, -3, 2.5, True])
def test_chisq_rejects_bad_df(df):
    with pytest.raises(DomainError):
        ChiSquaredModel(df)


def test_interval_probability():
    m = NormalModel(0, 10)
    assert dists.interval_probability(m, -math.inf, math.inf) == 1.0
    assert dists.interval_probability(m, 16.5, math.inf) == pytest.approx(stats.norm.sf(1.65), rel=1e-12)
    assert dists.interval_probability(m, 5, 1) == 0.0
    d = DiscreteDistribution((0, 1, 2), (0.2, 0.3, 0.5))
    assert dists.interval_probability(d, 1, 2) == pytest.approx(0.8)


@pytest.mark.parametrize("text, expected", [
    ("normal:0,10", NormalModel(0.0, 10.0)),
    ("chisq:11", ChiSquaredModel(11)),
    ("discrete:H=0.5,T=0.5", DiscreteDistribution(("H", "T"), (0.5, 0.5))),
    ("discrete:0=0.25,1=0.75", DiscreteDistribution((0, 1), (0.25, 0.75))),
])
def test_parse_model_spec(text, expected):
    assert dists.parse_model_spec(text) == expected


@pytest.mark.parametrize("text", ["normal:0", "gamma:1,2", "normal0,1", "chisq:2.5", "discrete:a",
                                  "normal:0,inf", "normal:x,1"])
def test_parse_model_spec_errors(text):
    with pytest.raises(DomainError):
        dists.parse_model_spec(text)


def test_parse_discrete_from_file(tmp_path):
    path = tmp_path / "p.json"
    path.write_text('{"outcomes": ["a", "b"], "probabilities": [0.25, 0.75]}')
    assert dists.parse_model_spec(f"discrete:@{path}") == DiscreteDistribution(("a", "b"), (0.25, 0.75))
    path.write_text('{"1": 0.5, "2": 0.5}')
    assert dists.parse_model_spec(f"discrete:@{path}").outcomes == (1, 2)


@pytest.mark.parametrize("model", [NormalModel(3, 2), ChiSquaredModel(4),
                                   DiscreteDistribution((0, 1), (0.5, 0.5))])
def test_spec_roundtrip(model):
    assert dists.parse_model_spec(model.spec()) == model


def test_seeded_uniform_is_reproducible():
    assert np.array_equal(dists.seeded_uniform(7, 5), dists.seeded_uniform(7, 5))
    assert not np.array_equal(dists.seeded_uniform(7, 5), dists.seeded_uniform(8, 5))
