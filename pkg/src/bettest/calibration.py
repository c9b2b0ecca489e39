"""Turning p-values into betting scores.

The calibrator used throughout is ``S = 1/sqrt(p) - 1``.  Applied to the
p-value function of a test it is itself a bet against the test statistic's
null distribution, so it implies an alternative hypothesis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .betting import Bet, ImpliedDensity, implied_alternative
from .dists import DistributionModel, NormalModel, expect, normal_sf
from .errors import CalibrationError, DomainError, InvalidBetError

#: p-values tabulated when comparing the two scales
TABLE_PVALUES = (0.10, 0.05, 0.01, 0.005, 0.001, 0.000001)

CALIBRATION_SLACK = 1e-3


def shrink_pvalue(p: float) -> float:
    """Betting score ``1/sqrt(p) - 1`` for a p-value in ``(0, 1]``."""
    if not (isinstance(p, (int, float)) and 0.0 < p <= 1.0):
        raise DomainError(f"p-value must lie in (0, 1], got {p!r}")
    return 1.0 / math.sqrt(p) - 1.0


def calibration_table(pvalues=TABLE_PVALUES) -> list[tuple[float, float, float]]:
    """Rows of ``(p, 1/p, 1/sqrt(p) - 1)``."""
    return [(p, 1.0 / p, shrink_pvalue(p)) for p in pvalues]


@dataclass(frozen=True)
class PValueFunction:
    """P-value of an observed statistic under its null distribution.

    ``sidedness`` is ``"upper"`` (large values discredit the null) or
    ``"two-sided"`` (normal models only, deviations from ``center`` in
    either direction).
    """

    statistic_model: DistributionModel
    sidedness: str = "upper"
    center: float | None = None

    def __post_init__(self):
        if self.sidedness not in ("upper", "two-sided"):
            raise DomainError(f"unknown sidedness {self.sidedness!r}")
        if self.sidedness == "two-sided":
            if not isinstance(self.statistic_model, NormalModel):
                raise DomainError("two-sided p-values are supported for normal models only")
            if self.center is None:
                object.__setattr__(self, "center", self.statistic_model.mean)
            if not math.isfinite(self.center):
                raise DomainError("two-sided center must be finite")

    def __call__(self, y: float) -> float:
        return pvalue(self, y)


def pvalue(f: PValueFunction, y: float) -> float:
    if f.sidedness == "upper":
        return f.statistic_model.upper_tail(y)
    z = abs(y - f.center) / f.statistic_model.sd
    return min(1.0, 2.0 * normal_sf(z))


def calibrated_bet(f: PValueFunction) -> Bet:
    """The bet ``y -> 1/sqrt(p(y)) - 1`` against the statistic's null.

    Raises :class:`CalibrationError` if its null expectation exceeds 1 by
    more than ``1e-3`` (the p-value would then not be valid).
    """
    model = f.statistic_model

    def payoff(y):
        return shrink_pvalue(pvalue(f, y))

    breakpoints = (f.center,) if f.sidedness == "two-sided" else ()
    price = expect(model, payoff, breakpoints)
    if price > 1.0 + CALIBRATION_SLACK:
        raise CalibrationError(f"calibrated payoff has null expectation {price!r} > 1")
    try:
        return Bet(payoff, model, breakpoints, label="calibrated p-value 1/sqrt(p)-1", subfair=True)
    except InvalidBetError as exc:
        raise CalibrationError(str(exc)) from exc


def calibrated_alternative(f: PValueFunction):
    """Alternative implied by using the calibrated p-value as a bet."""
    return implied_alternative(calibrated_bet(f))


def calibrated_alternative_tail(f: PValueFunction, deviation: float) -> float:
    """Probability under the calibrated alternative of ``|Y - center| >= deviation``."""
    if f.sidedness != "two-sided":
        raise DomainError("tail of the calibrated alternative needs a two-sided normal p-value")
    if deviation < 0:
        raise DomainError("deviation must be non-negative")
    alt = calibrated_alternative(f)
    assert isinstance(alt, ImpliedDensity)
    c = f.center
    if deviation == 0:
        return alt.expect(lambda y: 1.0)
    return alt.expect(lambda y: 1.0 if abs(y - c) >= deviation else 0.0,
                      (c - deviation, c + deviation))


def proportion_sd(n: int, p: float) -> float:
    """Standard deviation of a binomial frequency ``X/n``."""
    return math.sqrt(p * (1.0 - p) / n)


def binomial_standard_error(n: int, p: float) -> float:
    """Standard deviation of a binomial count."""
    return math.sqrt(n * p * (1.0 - p))
