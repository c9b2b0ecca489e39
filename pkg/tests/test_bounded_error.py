import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from bettest.bounded_error import (LEVEL_20_CONSTANT, HoeffdingStrategy, MixtureHoeffdingStrategy,
                                   feasible_band, guarantee_bound, level_constant,
                                   measurement_capital_curve, run_bounded, warranty_interval)
from bettest.errors import DomainError, InconsistentDataError
from bettest.protocol import CapitalProcess
from bettest.warranty import multiply_curves, warranty_points, warranty_set

ERROR_LAWS = {
    "uniform": lambda rng, size: rng.uniform(-1, 1, size),
    "two-point": lambda rng, size: rng.choice([-1.0, 1.0], size),
    "truncated-normal": lambda rng, size: stats.truncnorm.rvs(-2, 2, scale=0.5, size=size, random_state=rng),
}


def test_level_constant():
    assert level_constant(20) == pytest.approx(math.sqrt(2 * math.log(40)), rel=1e-15)
    assert round(level_constant(20), 2) == LEVEL_20_CONSTANT
    assert level_constant(1) == pytest.approx(math.sqrt(2 * math.log(2)))
    assert level_constant(1) == pytest.approx(1.177, abs=1e-3)
    with pytest.raises(DomainError):
        level_constant(0.5)


def test_zero_tilt_keeps_capital():
    process = run_bounded(HoeffdingStrategy(0.0), [0.5, -1.0, 1.0])
    assert process.capitals == [1.0] * 4


def test_constant_errors_product():
    lam, e = 0.272, [0.272] * 100
    one = run_bounded(HoeffdingStrategy(lam, "positive"), e).final_capital
    two = run_bounded(HoeffdingStrategy(lam), e).final_capital
    assert one == pytest.approx((1 + math.tanh(lam) * 0.272) ** 100, rel=1e-12)
    assert one == pytest.approx(1.07e3, rel=0.01)
    assert two == pytest.approx(0.5 * one + 0.5 * (1 - math.tanh(lam) * 0.272) ** 100, rel=1e-12)
    assert two == pytest.approx(5.3e2, rel=0.01)
    assert min(one, two) >= 20


@pytest.mark.parametrize("lam", [0.1, 0.5, 2.0])
def test_alternating_errors_telescope(lam):
    e = [1.0, -1.0] * 10
    got = run_bounded(HoeffdingStrategy(lam), e).final_capital
    assert got == pytest.approx((1 - math.tanh(lam) ** 2) ** 10, rel=1e-12)
    assert got < 1


def test_negative_side():
    got = run_bounded(HoeffdingStrategy(0.3, "negative"), [-0.5, -0.5]).final_capital
    assert got == pytest.approx((1 + 0.5 * math.tanh(0.3)) ** 2)


def test_errors_outside_range_name_the_round():
    with pytest.raises(DomainError, match="round 3"):
        run_bounded(HoeffdingStrategy(0.3), [0.0, 0.5, 1.5])
    with pytest.raises(DomainError):
        HoeffdingStrategy(-0.1)
    with pytest.raises(DomainError):
        HoeffdingStrategy(0.1, "sideways")


def test_rounds_record_stake_fraction():
    process = run_bounded(HoeffdingStrategy(0.4, "positive"), [0.2, -0.3])
    for r in process.rounds:
        assert r.stake_fraction == pytest.approx(math.tanh(0.4))
        assert r.capital_after == pytest.approx(r.capital_before * (1 + r.stake_fraction * r.error))
    assert CapitalProcess.from_dict(process.to_dict()) == process


def test_for_horizon():
    s = HoeffdingStrategy.for_horizon(100)
    assert s.lam == pytest.approx(0.2716, abs=1e-4)
    assert s.horizon == 100


def test_guarantee_bound_values():
    s = HoeffdingStrategy(0.272)
    assert guarantee_bound(s, 100, 27.2) == pytest.approx(0.5 * math.exp(0.272 * 27.2 - 100 * 0.272**2 / 2))
    assert guarantee_bound(s, 100, 27.2) == pytest.approx(20.2, abs=0.05)
    assert guarantee_bound(s, 100, 0.0) <= 0.5
    exact = HoeffdingStrategy.for_horizon(100)
    assert guarantee_bound(exact, 100, level_constant(20) * 10) == pytest.approx(20.0, rel=1e-12)
    with pytest.raises(DomainError):
        guarantee_bound(s, 10, 11.0)


def test_tilt_inequality_on_grid():
    e = np.linspace(-1, 1, 100)
    lam = np.linspace(0, 3, 101)[1:]
    E, L = np.meshgrid(e, lam)
    assert np.all(1 + E * np.tanh(L) >= np.exp(L * E - L * L / 2) * (1 - 1e-12))


def test_capital_dominates_guarantee():
    rng = np.random.default_rng(41)
    for i in range(10_000 // 50):
        n = int(rng.integers(1, 60))
        lam = float(rng.uniform(0.01, 2))
        for side in ("positive", "negative", "two-sided"):
            e = rng.uniform(-1, 1, n) ** int(rng.integers(1, 4))
            s = HoeffdingStrategy(lam, side)
            k = run_bounded(s, e).final_capital
            assert k >= guarantee_bound(s, n, float(e.sum())) * (1 - 1e-12)
    mix = MixtureHoeffdingStrategy()
    e = rng.uniform(-1, 1, 50)
    assert run_bounded(mix, e).final_capital >= guarantee_bound(mix, 50, float(e.sum())) * (1 - 1e-12)


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=50), st.floats(0, 5))
def test_capital_never_negative(errors, lam):
    process = run_bounded(HoeffdingStrategy(lam), errors)
    assert all(k >= 0 for k in process.capitals)


@pytest.mark.parametrize("law", sorted(ERROR_LAWS))
def test_supermartingale_monte_carlo(law):
    rng = np.random.default_rng(42)
    runs, n = 100_000, 20
    e = ERROR_LAWS[law](rng, (runs, n))
    lam = HoeffdingStrategy.for_horizon(n).lam
    t = math.tanh(lam)
    capital = 0.5 * np.prod(1 + t * e, axis=1) + 0.5 * np.prod(1 - t * e, axis=1)
    spot = run_bounded(HoeffdingStrategy(lam), e[0]).final_capital
    assert spot == pytest.approx(capital[0], rel=1e-12)
    assert capital.mean() <= 1 + 3 * capital.std(ddof=1) / math.sqrt(runs)


def test_mixture_strategy():
    mix = MixtureHoeffdingStrategy(depth=3)
    assert mix.lambdas == pytest.approx([2.72, 2.72 / math.sqrt(2), 1.36, 2.72 / math.sqrt(8)])
    assert sum(w for w, _, _ in mix.accounts()) == pytest.approx(1.0)
    e = [0.3, -0.2, 0.9]
    got = run_bounded(mix, e).final_capital
    expected = np.mean([run_bounded(HoeffdingStrategy(l), e).final_capital for l in mix.lambdas])
    assert got == pytest.approx(expected, rel=1e-12)


def test_feasible_band():
    assert feasible_band([0.2, 0.5, 1.0]) == pytest.approx((0.0, 1.2))
    with pytest.raises(InconsistentDataError):
        feasible_band([0.0, 2.5])
    with pytest.raises(InconsistentDataError):
        measurement_capital_curve([0.0, 1.0], HoeffdingStrategy(0.3), mu_grid=[5.0])


def test_constant_measurements():
    curve = measurement_capital_curve([0.7] * 10, HoeffdingStrategy(0.3), mu_grid=[0.7])
    assert curve.capital == (1.0,)


def test_measurement_curve_matches_runs():
    rng = np.random.default_rng(43)
    y = (0.4 + rng.uniform(-0.5, 0.5, 30)).tolist()
    s = HoeffdingStrategy(0.35)
    curve = measurement_capital_curve(y, s, grid_points=21)
    for mu, k in zip(curve.grid, curve.capital):
        direct = run_bounded(s, [v - mu for v in y]).final_capital
        assert k == pytest.approx(direct, rel=1e-12)


def test_warranty_interval():
    y = np.linspace(0, 1, 100)
    lo, hi = warranty_interval(y, level=20)
    assert (hi - lo) / 2 == pytest.approx(0.272, abs=2e-3)
    assert (lo + hi) / 2 == pytest.approx(0.5)
    lo, hi = warranty_interval(np.zeros(400), level=20)
    assert hi == pytest.approx(0.136, abs=1e-3)
    with pytest.raises(DomainError):
        warranty_interval([], level=20)
    with pytest.raises(DomainError):
        warranty_interval([1.0], level=0.9)


def test_warranty_outside_interval_uniform_errors():
    rng = np.random.default_rng(44)
    for _ in range(20):
        y = 0.5 + rng.uniform(-1, 1, 100)
        s = HoeffdingStrategy.for_horizon(100)
        curve = measurement_capital_curve(y, s)
        lo, hi = warranty_interval(y, level=20)
        kept = warranty_points(curve, 1 / 20)
        assert all(lo <= mu <= hi for mu in kept)


def test_product_of_two_studies_is_no_wider():
    rng = np.random.default_rng(45)
    s = HoeffdingStrategy.for_horizon(100)

    def width(curve):
        return sum(b - a for a, b in warranty_set(curve, 1 / 20))

    for _ in range(100):
        y1, y2 = 0.3 + rng.uniform(-0.4, 0.4, (2, 100))
        lo = max(feasible_band(y1)[0], feasible_band(y2)[0])
        hi = min(feasible_band(y1)[1], feasible_band(y2)[1])
        grid = np.linspace(lo, hi, 801)
        c1 = measurement_capital_curve(y1, s, grid)
        c2 = measurement_capital_curve(y2, s, grid)
        both = multiply_curves([c1, c2])
        assert width(both) <= min(width(c1), width(c2)) + 1e-12
