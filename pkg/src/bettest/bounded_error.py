"""Betting on bounded measurement errors.

Each round Skeptic may buy any multiple ``M_n`` of the next error
``e_n in [-1, 1]`` at price 0, with ``|M_n| <= K_{n-1}``.  The Hoeffding
strategies here hold one or more *accounts*, each staking a fixed fraction
``tanh(lam)`` of its own capital on the sign it backs.  Because
``1 + e tanh(lam) >= exp(lam e - lam**2 / 2)`` on ``[-1, 1]``, an account
started with ``s`` ends with at least ``s exp(lam S_n - n lam**2 / 2)``
where ``S_n`` is the partial sum of the errors it backs.

Note on the threshold: the guarantee ``K_n >= 20`` whenever
``|S_n| > 2.72 sqrt(n)`` uses the *partial sum* ``S_n = e_1 + ... + e_n``.
For ``n = 100`` it becomes a half-width of ``2.72 / sqrt(100) = 0.272``
around the sample mean.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InconsistentDataError
from .protocol import CapitalProcess
from .warranty import DEFAULT_GRID_POINTS, WarrantyCurve, make_grid, multiply_curves  # noqa: F401

SIDES = ("positive", "negative", "two-sided")

#: rounded constant for a 20-fold warranty, as usually quoted
LEVEL_20_CONSTANT = 2.72


def level_constant(level: float) -> float:
    """``c`` with ``exp(c**2 / 2) / 2 == level``: the two-sided warranty constant."""
    if not level >= 1.0:
        raise DomainError(f"warranty level must be at least 1, got {level!r}")
    return math.sqrt(2.0 * math.log(2.0 * level))


@dataclass(frozen=True)
class BoundedErrorRound:
    round_index: int
    stake_fraction: float
    error: float
    capital_before: float
    capital_after: float

    def to_dict(self) -> dict:
        return {"round_index": self.round_index, "stake_fraction": self.stake_fraction,
                "error": self.error, "capital_before": self.capital_before,
                "capital_after": self.capital_after}

    @property
    def outcome(self) -> float:
        return self.error


@dataclass(frozen=True)
class HoeffdingStrategy:
    """Stake ``tanh(lam)`` of capital on the errors being positive, negative, or
    (two-sided) split the capital half and half between both bets."""

    lam: float
    side: str = "two-sided"
    horizon: int | None = None

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise DomainError("lam must be a non-negative real")
        if self.side not in SIDES:
            raise DomainError(f"side must be one of {SIDES}")
        if self.horizon is not None and self.horizon < 1:
            raise DomainError("horizon must be positive")

    @classmethod
    def for_horizon(cls, n: int, level: float = 20.0, side: str = "two-sided") -> "HoeffdingStrategy":
        """Tilt ``c / sqrt(n)`` that secures ``level`` once ``|S_n| >= c sqrt(n)``."""
        if n < 1:
            raise DomainError("horizon must be positive")
        return cls(level_constant(level) / math.sqrt(n), side, n)

    def accounts(self) -> list[tuple[float, float, float]]:
        """``(initial share, stake fraction, lam)`` per account."""
        t = math.tanh(self.lam)
        if self.side == "positive":
            return [(1.0, t, self.lam)]
        if self.side == "negative":
            return [(1.0, -t, -self.lam)]
        return [(0.5, t, self.lam), (0.5, -t, -self.lam)]


@dataclass(frozen=True)
class MixtureHoeffdingStrategy:
    """Equal-weight average of two-sided Hoeffding strategies with
    ``lam_k = constant / sqrt(2**k)``, ``k = 0..depth``.

    One way to hedge over the unknown stopping time; the weight ``1/(depth+1)``
    per tilt costs a factor ``depth + 1`` in the guaranteed capital.
    """

    constant: float = LEVEL_20_CONSTANT
    depth: int = 10

    def __post_init__(self):
        if not self.constant > 0 or self.depth < 0:
            raise DomainError("need constant > 0 and depth >= 0")

    @property
    def lambdas(self) -> list[float]:
        return [self.constant / math.sqrt(2.0**k) for k in range(self.depth + 1)]

    def accounts(self) -> list[tuple[float, float, float]]:
        w = 1.0 / (self.depth + 1)
        out = []
        for lam in self.lambdas:
            out += [(0.5 * w, math.tanh(lam), lam), (0.5 * w, -math.tanh(lam), -lam)]
        return out


def _check_errors(errors: Sequence[float]) -> np.ndarray:
    e = np.asarray(errors, dtype=float)
    for i, v in enumerate(e, start=1):
        if not (math.isfinite(v) and -1.0 <= v <= 1.0):
            raise DomainError(f"round {i}: error {v!r} lies outside [-1, 1]")
    return e


def run_bounded(strategy, errors: Sequence[float]) -> CapitalProcess:
    """Play ``strategy`` on the error sequence; capital is the sum of its accounts."""
    e = _check_errors(errors)
    accounts = strategy.accounts()
    balances = np.array([w for w, _, _ in accounts])
    fractions = np.array([t for _, t, _ in accounts])
    capital = float(balances.sum())
    rounds = []
    for i, err in enumerate(e, start=1):
        stake = float(balances @ fractions)
        fraction = stake / capital if capital > 0 else 0.0
        balances = balances * (1.0 + fractions * err)
        after = float(balances.sum())
        assert after >= 0.0
        rounds.append(BoundedErrorRound(i, fraction, float(err), capital, after))
        capital = after
    return CapitalProcess(1.0, tuple(rounds))


def guarantee_bound(strategy, n: int, partial_sum: float) -> float:
    """Lower bound on capital after ``n`` rounds whose errors sum to ``partial_sum``.

    Two-sided: ``exp(lam |S| - n lam**2 / 2) / 2`` (the better half alone).
    """
    if abs(partial_sum) > n * (1.0 + 1e-12):
        raise DomainError("|partial_sum| cannot exceed n")
    if isinstance(strategy, HoeffdingStrategy):
        lam = strategy.lam
        if strategy.side == "positive":
            return math.exp(lam * partial_sum - n * lam * lam / 2.0)
        if strategy.side == "negative":
            return math.exp(-lam * partial_sum - n * lam * lam / 2.0)
        return 0.5 * math.exp(lam * abs(partial_sum) - n * lam * lam / 2.0)
    return math.fsum(w * math.exp(lam * partial_sum - n * lam * lam / 2.0)
                     for w, _, lam in strategy.accounts())


def _capital_on_grid(strategy, y: np.ndarray, mu: np.ndarray) -> np.ndarray:
    errors = y[None, :] - mu[:, None]
    total = np.zeros(len(mu))
    with np.errstate(divide="ignore"):
        for w, t, _ in strategy.accounts():
            total += w * np.exp(np.log1p(t * errors).sum(axis=1))
    return total


def feasible_band(measurements: Sequence[float]) -> tuple[float, float]:
    """Values of the measured quantity that keep every error inside ``[-1, 1]``."""
    y = np.asarray(measurements, dtype=float)
    if y.size == 0:
        raise DomainError("no measurements")
    lo, hi = float(y.max()) - 1.0, float(y.min()) + 1.0
    if lo > hi:
        raise InconsistentDataError(
            f"measurements span {float(y.max() - y.min())!r} > 2; no value keeps all errors in [-1, 1]")
    return lo, hi


def measurement_capital_curve(measurements: Sequence[float], strategy,
                              mu_grid: Sequence[float] | None = None,
                              grid_points: int = DEFAULT_GRID_POINTS) -> WarrantyCurve:
    """Capital ``K(mu)`` computed on the errors ``y_i - mu``.

    Grid values outside the feasible band are dropped; without ``mu_grid``
    the band itself is gridded.
    """
    lo, hi = feasible_band(measurements)
    y = np.asarray(measurements, dtype=float)
    if mu_grid is None:
        grid = np.asarray(make_grid(lo, hi, grid_points if hi > lo else 1))
    else:
        grid = np.asarray(mu_grid, dtype=float)
        grid = grid[(grid >= lo) & (grid <= hi)]
        if grid.size == 0:
            raise InconsistentDataError("no grid value lies in the feasible band")
    capital = _capital_on_grid(strategy, y, grid)
    return WarrantyCurve(tuple(grid.tolist()), tuple(capital.tolist()), tuple(y.tolist()))


def warranty_interval(measurements: Sequence[float], n: int | None = None,
                      level: float = 20.0) -> tuple[float, float]:
    """``mean +- c / sqrt(n)`` with ``c = sqrt(2 ln(2 level))``."""
    y = np.asarray(measurements, dtype=float)
    if y.size == 0:
        raise DomainError("no measurements")
    n = y.size if n is None else n
    if n < 1:
        raise DomainError("n must be positive")
    half = level_constant(level) / math.sqrt(n)
    mean = float(y.mean())
    return mean - half, mean + half
