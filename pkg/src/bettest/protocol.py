"""Multi-round testing protocols.

Skeptic starts with capital 1 and on round ``n`` buys a non-negative payoff
whose (conditional) null expectation equals his current capital; Reality
then announces the outcome and the payoff becomes his new capital.

A *null provider* maps the outcomes seen so far to the null distribution of
the next outcome, which covers both i.i.d. and general stochastic-process
nulls.  A *strategy* maps ``(history, capital)`` to a payoff function.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import dists
from .betting import Bet, _check_in_support
from .dists import DiscreteDistribution, DistributionModel, expect
from .errors import DomainError, InvalidBetError, ProtocolViolation

PRICE_RTOL = 1e-6
EXHAUSTIVE_LIMIT = 10**6

History = tuple
NullProvider = Callable[[History], DistributionModel]
SkepticStrategy = Callable[[History, float], Callable[[Any], float]]


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    outcome: Any
    capital_before: float
    capital_after: float
    payoff: Callable | None = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {"round_index": self.round_index, "outcome": self.outcome,
                "capital_before": self.capital_before, "capital_after": self.capital_after}


@dataclass(frozen=True)
class CapitalProcess:
    """Capital trajectory ``K_0, ..., K_N`` of one protocol run."""

    initial_capital: float = 1.0
    rounds: tuple = ()

    @property
    def capitals(self) -> list[float]:
        return [self.initial_capital] + [r.capital_after for r in self.rounds]

    @property
    def final_capital(self) -> float:
        return self.rounds[-1].capital_after if self.rounds else self.initial_capital

    @property
    def outcomes(self) -> list:
        return [r.outcome for r in self.rounds]

    def score_ratios(self) -> list[float]:
        """Per-round factors ``K_n / K_{n-1}`` (0 once capital is exhausted)."""
        return [r.capital_after / r.capital_before if r.capital_before > 0 else 0.0
                for r in self.rounds]

    def prefix(self, n: int) -> "CapitalProcess":
        return CapitalProcess(self.initial_capital, self.rounds[:n])

    def to_dict(self) -> dict:
        return {"initial_capital": self.initial_capital,
                "rounds": [r.to_dict() for r in self.rounds],
                "final_capital": self.final_capital}

    @classmethod
    def from_dict(cls, data: Mapping) -> "CapitalProcess":
        from .bounded_error import BoundedErrorRound

        rounds = []
        for r in data["rounds"]:
            if "stake_fraction" in r:
                rounds.append(BoundedErrorRound(**r))
            else:
                rounds.append(RoundRecord(**r))
        return cls(data["initial_capital"], tuple(rounds))


# -- null providers and strategies --------------------------------------------

def iid(model: DistributionModel) -> NullProvider:
    """Provider returning the same null on every round."""
    return lambda history: model


def _as_provider(null) -> NullProvider:
    if callable(null) and not hasattr(null, "density"):
        return null
    return iid(null)


class ScaledPayoff:
    """``factor`` times a unit bet; keeps the bet's breakpoints for quadrature."""

    def __init__(self, bet: Bet, factor: float):
        self.bet = bet
        self.factor = factor
        self.breakpoints = bet.breakpoints

    def __call__(self, y) -> float:
        return self.factor * self.bet(y)


def constant_strategy() -> SkepticStrategy:
    """Keep all capital in cash: the payoff is the current capital itself."""
    return lambda history, capital: (lambda y: capital)


def unit_bet_strategy(choose: Callable[[History], Bet]) -> SkepticStrategy:
    """Reinvest all capital in a unit bet chosen from the history."""
    return lambda history, capital: ScaledPayoff(choose(history), capital)


def repeat_bet(bet: Bet) -> SkepticStrategy:
    return unit_bet_strategy(lambda history: bet)


# -- running -----------------------------------------------------------------

def _validate_payoff(payoff, model: DistributionModel, capital: float, n: int) -> None:
    if isinstance(payoff, ScaledPayoff) and payoff.bet.reference == model:
        # a Bet is already known to be non-negative with the recorded price
        price = payoff.factor * payoff.bet.price
        if payoff.factor < 0 or abs(price - capital) > PRICE_RTOL * capital:
            raise ProtocolViolation(
                f"round {n}: payoff costs {price!r} but current capital is {capital!r}", round_index=n)
        return
    values = np.array([float(payoff(y)) for y in dists.support_grid(model)])
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise ProtocolViolation(f"round {n}: payoff is negative or non-finite", round_index=n)
    price = expect(model, payoff, getattr(payoff, "breakpoints", ()))
    if abs(price - capital) > PRICE_RTOL * capital:
        raise ProtocolViolation(
            f"round {n}: payoff costs {price!r} but current capital is {capital!r}", round_index=n)


def run_protocol(null, strategy: SkepticStrategy, outcomes: Sequence,
                 initial_capital: float = 1.0) -> CapitalProcess:
    """Play ``strategy`` against the outcomes and return the capital process.

    ``null`` is a distribution (i.i.d. rounds) or a provider mapping the
    history to the next round's null.  Once capital reaches 0 the strategy
    is no longer consulted and capital stays 0.
    """
    provider = _as_provider(null)
    capital = float(initial_capital)
    history: tuple = ()
    rounds = []
    for n, y in enumerate(outcomes, start=1):
        model = provider(history)
        try:
            _check_in_support(model, y)
        except DomainError as exc:
            raise ProtocolViolation(f"round {n}: {exc}", round_index=n) from None
        if capital == 0.0:
            rounds.append(RoundRecord(n, y, 0.0, 0.0))
        else:
            payoff = strategy(history, capital)
            _validate_payoff(payoff, model, capital, n)
            after = float(payoff(y))
            if not after >= 0.0:
                raise ProtocolViolation(f"round {n}: payoff {after!r} at the outcome", round_index=n)
            rounds.append(RoundRecord(n, y, capital, after, payoff))
            capital = after
        history = history + (y,)
    return CapitalProcess(float(initial_capital), tuple(rounds))


def combine_sequential(scores: Sequence[float]) -> float:
    """Capital after reinvesting all winnings in each successive bet."""
    if any(s < 0 for s in scores):
        raise DomainError("betting scores are non-negative")
    return math.prod(scores)


def combine_parallel(scores: Sequence[float]) -> float:
    """Total winnings over total stake when each bet is bought for 1."""
    if len(scores) == 0:
        raise DomainError("need at least one score")
    if any(s < 0 for s in scores):
        raise DomainError("betting scores are non-negative")
    return math.fsum(scores) / len(scores)


# -- joint payoffs played round by round -------------------------------------

def _positive_support(model: DiscreteDistribution):
    return [(y, p) for y, p in zip(model.outcomes, model.probabilities) if p > 0]


def lift_joint_bet(joint, null: DiscreteDistribution, N: int) -> SkepticStrategy:
    """Sequential strategy whose final capital is ``joint(y_1, ..., y_N)``.

    Round ``n`` buys ``y -> E[joint | y_1..y_{n-1}, y]`` under the i.i.d.
    product of ``null``.
    """
    if not isinstance(null, DiscreteDistribution):
        raise DomainError("joint payoffs can only be lifted over discrete nulls")
    if N < 1:
        raise DomainError("N must be positive")
    func = joint.__getitem__ if isinstance(joint, Mapping) else joint
    support = _positive_support(null)
    cache: dict[tuple, float] = {}

    def conditional(prefix: tuple) -> float:
        if prefix in cache:
            return cache[prefix]
        if len(prefix) == N:
            value = float(func(prefix))
            if not value >= 0:
                raise InvalidBetError(f"joint payoff is negative at {prefix!r}")
        else:
            value = math.fsum(p * conditional(prefix + (y,)) for y, p in support)
        cache[prefix] = value
        return value

    if len(support) ** N <= EXHAUSTIVE_LIMIT:
        total = conditional(())
        if abs(total - 1.0) > PRICE_RTOL:
            raise InvalidBetError(f"joint payoff has expectation {total!r} under the product null, not 1")

    def strategy(history, capital):
        prefix = tuple(history)
        return lambda y: conditional(prefix + (y,))

    return strategy


def expected_final_capital(null, strategy: SkepticStrategy, N: int) -> float:
    """Exact null expectation of ``K_N`` by enumerating every outcome path.

    ``null`` is a discrete distribution or a provider returning discrete
    conditionals; under a valid protocol the answer is the initial capital.
    """
    provider = _as_provider(null)

    def walk(history: tuple, weight: float) -> list[tuple[tuple, float]]:
        if len(history) == N:
            return [(history, weight)]
        out = []
        for y, p in _positive_support(provider(history)):
            out.extend(walk(history + (y,), weight * p))
        return out

    paths = walk((), 1.0)
    return math.fsum(w * run_protocol(provider, strategy, path).final_capital for path, w in paths)
