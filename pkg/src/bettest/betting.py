"""Bets against a null distribution and what they imply.

A :class:`Bet` is a non-negative payoff priced at 1 under its reference
(null) model, so its value at the observed outcome is the betting score.
Multiplying the null by the payoff gives the implied alternative, and
``exp(E_P[S ln S])`` is the implied target.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import optimize

from . import dists
from .dists import (
    ChiSquaredModel,
    DiscreteDistribution,
    DistributionModel,
    NormalModel,
    expect,
    interval_probability,
)
from .errors import AbsoluteContinuityError, DomainError, InvalidBetError, NumericError

#: relative tolerance on a bet's unit price
PRICE_RTOL = 1e-6
#: relative slack when comparing a score with 1/alpha
THRESHOLD_RTOL = 1e-9


def _lookup(table: Mapping) -> Callable:
    def payoff(y):
        try:
            return table[y]
        except KeyError:
            raise DomainError(f"payoff undefined at outcome {y!r}") from None
    return payoff


def _check_in_support(model: DistributionModel, y) -> None:
    if isinstance(model, DiscreteDistribution):
        model.density(y)
    elif isinstance(model, ChiSquaredModel) and y < 0:
        raise DomainError(f"outcome {y!r} lies outside the chi-squared support")


def _payoff_values(payoff: Callable, points: list) -> np.ndarray:
    """Evaluate a payoff on many points, vectorised when the payoff allows it."""
    if points and all(isinstance(y, float) for y in points):
        try:
            values = np.asarray(payoff(np.asarray(points)), dtype=float)
        except Exception:
            values = None
        if values is not None and values.shape == (len(points),):
            return values
    return np.array([float(payoff(y)) for y in points])


@dataclass(frozen=True, eq=False)
class Bet:
    """A non-negative payoff bought for 1 under ``reference``.

    ``breakpoints`` lists points where a continuous payoff jumps, so that
    expectations can split their quadrature there.  A ``subfair`` bet may
    cost less than 1 under the null (a calibrated p-value whose p-value is
    conservative, say); using it at price 1 is then merely wasteful.
    ``log_payoff``, when given, is used for expectations under continuous
    nulls so that payoffs overflowing far out in the tails stay tractable.
    """

    payoff: Callable[[Any], float]
    reference: DistributionModel
    breakpoints: tuple = ()
    label: str = ""
    subfair: bool = False
    log_payoff: Callable[[float], float] | None = field(default=None, repr=False)
    price: float = field(init=False)

    def __post_init__(self):
        if isinstance(self.payoff, Mapping):
            object.__setattr__(self, "payoff", _lookup(dict(self.payoff)))
        object.__setattr__(self, "breakpoints", tuple(sorted(float(b) for b in self.breakpoints)))
        values = _payoff_values(self.payoff, dists.support_grid(self.reference))
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise InvalidBetError("payoff must be finite and non-negative on the support")
        price = self.expect(lambda y: 1.0)
        too_high = price > 1.0 + PRICE_RTOL
        too_low = price < 1.0 - PRICE_RTOL and not self.subfair
        if too_high or too_low:
            raise InvalidBetError(f"payoff has null expectation {price!r}, not 1")
        object.__setattr__(self, "price", price)

    def __call__(self, y) -> float:
        return float(self.payoff(y))

    @property
    def _log_weighted(self) -> bool:
        return self.log_payoff is not None and self.reference.is_continuous

    def expect(self, f: Callable, breakpoints: Sequence[float] = ()) -> float:
        """``E_P[S(Y) f(Y)]`` under the reference model."""
        points = self.breakpoints + tuple(breakpoints)
        if self._log_weighted:
            return expect(self.reference, f, points, log_weight=self.log_payoff)
        return expect(self.reference, lambda y: self(y) * f(y), points)


def make_bet(raw_payoff, null: DistributionModel, breakpoints: Sequence[float] = (),
             label: str = "") -> Bet:
    """Rescale a non-negative payoff so that it costs exactly 1 under ``null``."""
    raw = _lookup(dict(raw_payoff)) if isinstance(raw_payoff, Mapping) else raw_payoff
    values = _payoff_values(raw, dists.support_grid(null))
    if np.any(values < 0):
        raise InvalidBetError("raw payoff is negative somewhere on the support")
    total = expect(null, raw, breakpoints)
    if not math.isfinite(total) or total <= 0:
        raise InvalidBetError(f"raw payoff has null expectation {total!r}; cannot price it at 1")

    if isinstance(null, DiscreteDistribution):
        table = {y: float(raw(y)) / total for y in null.outcomes}
        return Bet(table, null, breakpoints, label)
    return Bet(lambda y: float(raw(y)) / total, null, breakpoints, label)


def constant_bet(null: DistributionModel) -> Bet:
    return Bet(lambda y: 1.0, null, label="constant")


def all_or_nothing_bet(null: DistributionModel, region, alpha: float | None = None,
                       label: str = "all-or-nothing") -> Bet:
    """Pay ``1/P(E)`` on the event ``E`` and nothing elsewhere.

    For discrete nulls ``region`` is a collection of outcome labels; for
    continuous nulls it is a sequence of closed intervals ``(lo, hi)``.
    """
    if isinstance(null, DiscreteDistribution):
        members = set(region)
        size = math.fsum(null.density(y) for y in members)
        if size <= 0:
            raise DomainError("rejection region has null probability 0")
        table = {y: (1.0 / size if y in members else 0.0) for y in null.outcomes}
        return Bet(table, null, label=label)
    intervals = tuple((float(lo), float(hi)) for lo, hi in region)
    size = math.fsum(interval_probability(null, lo, hi) for lo, hi in intervals)
    if size <= 0:
        raise DomainError("rejection region has null probability 0")
    if alpha is not None and abs(size - alpha) > 1e-9:
        raise DomainError(f"rejection region has null probability {size!r}, not {alpha!r}")
    stake = 1.0 / size

    def payoff(y):
        return stake if any(lo <= y <= hi for lo, hi in intervals) else 0.0

    edges = [b for iv in intervals for b in iv if math.isfinite(b)]
    return Bet(payoff, null, tuple(edges), label=label)


def score(bet: Bet, y) -> float:
    """Betting score: the factor by which the bet multiplied the money it risked."""
    _check_in_support(bet.reference, y)
    return bet(y)


class ImpliedDensity:
    """Alternative with density ``S(y) p(y)`` for a bet against a continuous null."""

    is_continuous = True

    def __init__(self, bet: Bet):
        self.bet = bet
        self.null = bet.reference

    def __repr__(self):
        return f"ImpliedDensity({self.bet.label or 'bet'} against {self.null!r})"

    def density(self, y: float) -> float:
        if self.bet._log_weighted:
            lw = self.bet.log_payoff(y) + self.null.log_density(y)
            return 0.0 if lw == -math.inf else math.exp(lw)
        p = self.null.density(y)
        return 0.0 if p == 0.0 else self.bet(y) * p

    def expect(self, f: Callable, breakpoints: Sequence[float] = ()) -> float:
        return self.bet.expect(f, breakpoints)

    def upper_tail(self, t: float) -> float:
        return self.expect(lambda y: 1.0 if y >= t else 0.0, (t,))

    def cdf(self, t: float) -> float:
        return self.expect(lambda y: 1.0 if y <= t else 0.0, (t,))

    def window(self):
        return self.null.window()

    def mean(self) -> float:
        return self.expect(lambda y: y)

    def sd(self) -> float:
        m = self.mean()
        return math.sqrt(self.expect(lambda y: (y - m) ** 2))


def implied_alternative(bet: Bet):
    """The law ``Q = S P`` under which ``bet`` is log-optimal."""
    null = bet.reference
    if bet.price < 1.0 - PRICE_RTOL:
        raise InvalidBetError("a sub-fair bet does not imply a probability distribution")
    if isinstance(null, DiscreteDistribution):
        masses = [bet(y) * p / bet.price for y, p in zip(null.outcomes, null.probabilities)]
        return DiscreteDistribution(null.outcomes, tuple(masses))
    return ImpliedDensity(bet)


def _s_log_s(s: float) -> float:
    return 0.0 if s == 0.0 else s * math.log(s)


def implied_target(bet: Bet) -> float:
    """``exp(E_P[S ln S])``, which equals ``exp(E_Q[ln S])``; uses ``0 ln 0 = 0``."""
    if bet._log_weighted:
        value = bet.expect(bet.log_payoff)
    else:
        value = expect(bet.reference, lambda y: _s_log_s(bet(y)), bet.breakpoints)
    if not math.isfinite(value):
        raise NumericError(f"E_P[S ln S] is not finite ({value!r})")
    return math.exp(value)


def _log_density(model: DistributionModel, y) -> float:
    if hasattr(model, "log_density"):
        return model.log_density(y)
    d = model.density(y)
    return math.log(d) if d > 0 else -math.inf


def _normal_ratio(null: NormalModel, alt: NormalModel) -> Callable:
    # log q - log p is the quadratic a*y**2 + b*y + c
    a = 0.5 / null.sd**2 - 0.5 / alt.sd**2
    b = alt.mean / alt.sd**2 - null.mean / null.sd**2
    c = (math.log(null.sd / alt.sd) + 0.5 * null.mean**2 / null.sd**2
         - 0.5 * alt.mean**2 / alt.sd**2)

    def log_payoff(y):
        return (a * y + b) * y + c

    def payoff(y):
        with np.errstate(over="ignore"):
            return np.exp(log_payoff(y))

    return payoff, log_payoff


def likelihood_ratio_bet(null: DistributionModel, alt: DistributionModel) -> Bet:
    """The bet ``q/p``, log-optimal when ``alt`` is true."""
    label = f"likelihood ratio {alt.spec()} / {null.spec()}"
    if isinstance(null, DiscreteDistribution) != isinstance(alt, DiscreteDistribution):
        raise DomainError("null and alternative must both be discrete or both continuous")

    if isinstance(null, DiscreteDistribution):
        known = set(null.outcomes)
        table = {}
        for y, q in zip(alt.outcomes, alt.probabilities):
            if q > 0 and (y not in known or null.density(y) == 0):
                raise AbsoluteContinuityError(f"alternative has mass at {y!r} where the null has none")
        for y, p in zip(null.outcomes, null.probabilities):
            q = alt.density(y) if y in alt.outcomes else 0.0
            table[y] = q / p if p > 0 else 0.0
        return Bet(table, null, label=label)

    # where the alternative reaches past the null's window, integrate out to its edge
    lo, hi = null.window()
    reach = tuple(t for t in alt.segments() if t < lo or t > hi)
    if isinstance(null, NormalModel) and isinstance(alt, NormalModel):
        payoff, log_payoff = _normal_ratio(null, alt)
        return Bet(payoff, null, reach, label=label, log_payoff=log_payoff)

    for y in dists.support_grid(alt, 2001):
        if alt.density(y) > 0 and null.density(y) == 0 and _log_density(null, y) == -math.inf:
            raise AbsoluteContinuityError(f"alternative has density at {y!r} where the null has none")

    def log_payoff(y):
        lq = _log_density(alt, y)
        return -math.inf if lq == -math.inf else lq - _log_density(null, y)

    def payoff(y):
        v = log_payoff(y)
        return math.inf if v > 709.0 else math.exp(v)

    return Bet(payoff, null, reach, label=label, log_payoff=log_payoff)


# -- Neyman-Pearson ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NeymanPearsonBet:
    """Level-alpha all-or-nothing bet together with its rejection region.

    ``region`` holds closed intervals for continuous nulls and outcome
    labels for discrete ones.  ``size`` is the null probability of the
    region, ``lr_cutoff`` the smallest likelihood ratio inside it.
    """

    bet: Bet
    region: tuple
    size: float
    lr_cutoff: float

    @property
    def threshold(self) -> float:
        """Outcome threshold of a one-tailed continuous region."""
        if len(self.region) != 1:
            raise DomainError("region is not a single tail")
        lo, hi = self.region[0]
        if hi == math.inf:
            return lo
        if lo == -math.inf:
            return hi
        raise DomainError("region is not a single tail")

    def boundary(self) -> list[float]:
        """Finite edges of a continuous region."""
        return [b for iv in self.region for b in iv if math.isfinite(b)]


def _best_discrete_region(items, alpha):
    """Maximise Q(E) subject to P(E) <= alpha by branch and bound.

    ``items`` are (label, p, q) sorted by decreasing likelihood ratio, so
    the fractional-knapsack bound is the randomised Neyman-Pearson power
    of the remaining items.
    """
    cap = alpha * (1.0 + 1e-12)
    n = len(items)
    best_q = -1.0
    best: list[int] = []

    def bound(i, room):
        total = 0.0
        for _, p, q in items[i:]:
            if p <= room:
                room -= p
                total += q
            else:
                return total + q * room / p
        return total

    def search(i, used, gained, chosen):
        nonlocal best_q, best
        if gained > best_q + 1e-15:
            best_q, best = gained, list(chosen)
        if i == n or gained + bound(i, cap - used) <= best_q + 1e-15:
            return
        _, p, q = items[i]
        if used + p <= cap:
            chosen.append(i)
            search(i + 1, used + p, gained + q, chosen)
            chosen.pop()
        search(i + 1, used, gained, chosen)

    search(0, 0.0, 0.0, [])
    return [items[i] for i in best]


def _discrete_np(null: DiscreteDistribution, alt: DiscreteDistribution, alpha: float):
    known = set(null.outcomes)
    for y, q in zip(alt.outcomes, alt.probabilities):
        if q > 0 and y not in known:
            raise AbsoluteContinuityError(f"alternative has mass at {y!r} outside the null's support")
    items = []
    for y, p in zip(null.outcomes, null.probabilities):
        q = alt.density(y) if y in alt.outcomes else 0.0
        if q == 0.0:
            continue
        ratio = math.inf if p == 0 else q / p
        items.append((ratio, y, p, q))
    # stable sort keeps outcome order among ties
    items.sort(key=lambda t: -t[0])
    chosen = _best_discrete_region([(y, p, q) for _, y, p, q in items], alpha)
    size = math.fsum(p for _, p, _ in chosen)
    if size <= 0:
        raise DomainError(f"no region with positive null probability fits within alpha={alpha}")
    labels = tuple(y for y, _, _ in chosen)
    cutoff = min((q / p if p > 0 else math.inf) for _, p, q in chosen)
    bet = all_or_nothing_bet(null, labels, label=f"Neyman-Pearson level {alpha!r}")
    return NeymanPearsonBet(bet, labels, size, cutoff)


def _solve(fn, lo, hi):
    return optimize.brentq(fn, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)


def _normal_np_region(null: NormalModel, alt: NormalModel, alpha: float):
    m0, s0, m1, s1 = null.mean, null.sd, alt.mean, alt.sd
    a = 0.5 / s0**2 - 0.5 / s1**2
    b = m1 / s1**2 - m0 / s0**2
    if a == 0.0:
        if b > 0:
            return ((null.quantile(1.0 - alpha), math.inf),)
        if b < 0:
            return ((-math.inf, null.quantile(alpha)),)
        raise DomainError("null and alternative coincide; the likelihood ratio is constant")
    v = -b / (2.0 * a)
    big = abs(v - m0) + 40.0 * s0
    if a > 0:
        def size(r):
            return null.cdf(v - r) + null.upper_tail(v + r) - alpha
        r = _solve(size, 0.0, big)
        return ((-math.inf, v - r), (v + r, math.inf))

    def size(r):
        return interval_probability(null, v - r, v + r) - alpha
    r = _solve(size, 0.0, big)
    return ((v - r, v + r),)


def _chisq_np_region(null: ChiSquaredModel, alt: ChiSquaredModel, alpha: float):
    k0, k1 = null.degrees_of_freedom, alt.degrees_of_freedom
    if k1 > k0:
        return ((null.quantile(1.0 - alpha), math.inf),)
    if k1 < k0:
        return ((-math.inf, null.quantile(alpha)),)
    raise DomainError("null and alternative coincide; the likelihood ratio is constant")


def neyman_pearson_bet(null: DistributionModel, alt: DistributionModel, alpha: float) -> NeymanPearsonBet:
    """All-or-nothing bet paying ``1/alpha`` where the likelihood ratio is largest.

    Continuous nulls get the exact level-alpha region (normal/normal and
    chi-squared/chi-squared pairs).  Discrete nulls get the region of
    largest alternative probability among those with null probability at
    most alpha, with the payoff rescaled to ``1/P(E)``.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if isinstance(null, DiscreteDistribution) and isinstance(alt, DiscreteDistribution):
        return _discrete_np(null, alt, alpha)
    if isinstance(null, NormalModel) and isinstance(alt, NormalModel):
        region = _normal_np_region(null, alt, alpha)
    elif isinstance(null, ChiSquaredModel) and isinstance(alt, ChiSquaredModel):
        region = _chisq_np_region(null, alt, alpha)
    else:
        raise DomainError("Neyman-Pearson regions need a matching pair of model kinds")
    bet = all_or_nothing_bet(null, region, alpha, label=f"Neyman-Pearson level {alpha!r}")
    size = math.fsum(interval_probability(null, lo, hi) for lo, hi in region)
    edge = next(b for iv in region for b in iv if math.isfinite(b))
    log_ratio = alt.log_density(edge) - null.log_density(edge)
    return NeymanPearsonBet(bet, region, size, math.exp(min(log_ratio, 709.0)))


# -- power -------------------------------------------------------------------

def superlevel_intervals(func: Callable[[float], float], level: float, lo: float, hi: float,
                         points: int = 10_001, extend: bool = True) -> list[tuple[float, float]]:
    """Intervals of ``[lo, hi]`` where ``func >= level``, edges refined by bisection.

    With ``extend`` an interval that touches an end of the scan window is
    taken to continue to infinity on that side.
    """
    grid = np.linspace(lo, hi, points)
    inside = np.array([func(y) >= level for y in grid])

    def edge(a, b, a_inside):
        for _ in range(200):
            mid = 0.5 * (a + b)
            if mid in (a, b):
                break
            if (func(mid) >= level) == a_inside:
                a = mid
            else:
                b = mid
        return b if not a_inside else a

    out = []
    start = None
    for i, flag in enumerate(inside):
        if flag and start is None:
            start = -math.inf if (i == 0 and extend) else (
                grid[0] if i == 0 else edge(grid[i - 1], grid[i], False))
        if not flag and start is not None:
            out.append((start, edge(grid[i - 1], grid[i], True)))
            start = None
    if start is not None:
        out.append((start, math.inf if extend else grid[-1]))
    return out


def power(null: DistributionModel, alt: DistributionModel, bet: Bet, alpha: float) -> float:
    """Alternative probability that the bet multiplies its stake by at least ``1/alpha``."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if bet.reference != null:
        raise DomainError("bet is not priced against this null")
    level = (1.0 / alpha) * (1.0 - THRESHOLD_RTOL)
    if isinstance(alt, DiscreteDistribution):
        return math.fsum(q for y, q in zip(alt.outcomes, alt.probabilities) if q > 0 and bet(y) >= level)
    lo, hi = alt.window()
    intervals = superlevel_intervals(bet, level, lo, hi)
    return math.fsum(interval_probability(alt, a, b) for a, b in intervals)


# -- reporting ---------------------------------------------------------------

@dataclass(frozen=True)
class TestReport:
    """The elements of a study that tests a distribution by betting."""

    __test__ = False  # not a pytest class

    null_hypothesis: DistributionModel
    bet: Bet | None = field(compare=False)
    implied_alternative: Any = field(compare=False)
    implied_target: float
    outcome: Any
    betting_score: float

    def to_dict(self) -> dict:
        alt = self.implied_alternative
        if isinstance(alt, DiscreteDistribution):
            alt_summary = {"kind": "discrete", "outcomes": list(alt.outcomes),
                           "probabilities": list(alt.probabilities)}
        elif isinstance(alt, ImpliedDensity):
            alt_summary = {"kind": "density", "mean": alt.mean(), "sd": alt.sd()}
        else:
            alt_summary = alt
        return {
            "null_hypothesis": self.null_hypothesis.spec(),
            "bet": self.bet.label if self.bet is not None else None,
            "implied_alternative": alt_summary,
            "implied_target": self.implied_target,
            "outcome": self.outcome,
            "betting_score": self.betting_score,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TestReport":
        alt = data["implied_alternative"]
        if isinstance(alt, Mapping) and alt.get("kind") == "discrete":
            alt = DiscreteDistribution(tuple(alt["outcomes"]), tuple(alt["probabilities"]))
        return cls(dists.parse_model_spec(data["null_hypothesis"]), None, alt,
                   data["implied_target"], data["outcome"], data["betting_score"])


def build_report(null: DistributionModel, bet: Bet, outcome) -> TestReport:
    if bet.reference != null:
        raise DomainError("bet is not priced against this null")
    s = score(bet, outcome)
    return TestReport(null, bet, implied_alternative(bet), implied_target(bet), outcome, s)
