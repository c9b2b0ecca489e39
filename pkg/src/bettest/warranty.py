"""Warranty sets from a betting strategy played against a parametric model.

The statistician fixes, for every parameter value on a grid, a Skeptic
strategy valid under that parameter.  After the data arrive she knows the
final capital only as a function of the parameter; the values at which the
capital stayed below ``1/alpha`` form the ``(1/alpha)``-warranty set.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .dists import DistributionModel, interval_probability
from .errors import DomainError, ProtocolViolation
from .protocol import SkepticStrategy, run_protocol

DEFAULT_GRID_POINTS = 2001


def _strict_grid(values: Sequence[float]) -> tuple:
    grid = tuple(float(t) for t in values)
    if not grid:
        raise DomainError("parameter grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("parameter grid must be strictly increasing")
    return grid


@dataclass(frozen=True)
class ParametricStrategy:
    parameter_grid: tuple
    per_theta: Callable[[float], SkepticStrategy]

    def __post_init__(self):
        object.__setattr__(self, "parameter_grid", _strict_grid(self.parameter_grid))


@dataclass(frozen=True)
class WarrantyCurve:
    """Final capital ``K(theta)`` on a parameter grid."""

    grid: tuple
    capital: tuple
    observations: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(t) for t in self.grid))
        object.__setattr__(self, "capital", tuple(float(k) for k in self.capital))
        object.__setattr__(self, "observations", tuple(self.observations))
        if len(self.grid) != len(self.capital):
            raise DomainError("grid and capital differ in length")
        if any(not k >= 0 for k in self.capital):
            raise DomainError("capital values must be non-negative")

    def to_dict(self) -> dict:
        return {"grid": list(self.grid), "capital": list(self.capital),
                "observations": list(self.observations)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "WarrantyCurve":
        return cls(tuple(data["grid"]), tuple(data["capital"]), tuple(data.get("observations", ())))


def make_grid(lo: float, hi: float, points: int = DEFAULT_GRID_POINTS) -> tuple:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise DomainError(f"bad grid bounds [{lo}, {hi}]")
    if points < 1 or (points == 1 and hi != lo):
        raise DomainError("grid needs at least two points unless the bounds coincide")
    return tuple(np.linspace(lo, hi, points).tolist())


def capital_curve(strategy: ParametricStrategy, model_family: Callable, outcomes: Sequence) -> WarrantyCurve:
    """Run the per-parameter strategy once for each grid value.

    ``model_family(theta)`` returns a distribution (i.i.d. rounds) or a null
    provider.  Protocol violations are re-raised tagged with ``theta``.
    """
    capital = []
    for theta in strategy.parameter_grid:
        try:
            process = run_protocol(model_family(theta), strategy.per_theta(theta), outcomes)
        except ProtocolViolation as exc:
            raise ProtocolViolation(f"theta={theta!r}: {exc}", exc.round_index, theta) from exc
        capital.append(process.final_capital)
    return WarrantyCurve(strategy.parameter_grid, tuple(capital), tuple(outcomes))


def _runs(grid: Sequence[float], keep: Sequence[bool]) -> list[tuple[float, float]]:
    out = []
    start = None
    for i, flag in enumerate(keep):
        if flag and start is None:
            start = i
        if not flag and start is not None:
            out.append((grid[start], grid[i - 1]))
            start = None
    if start is not None:
        out.append((grid[start], grid[-1]))
    return out


def warranty_points(curve: WarrantyCurve, alpha: float) -> list[float]:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    level = 1.0 / alpha
    return [t for t, k in zip(curve.grid, curve.capital) if k < level]


def warranty_set(curve: WarrantyCurve, alpha: float) -> list[tuple[float, float]]:
    """Grid values with ``K(theta) < 1/alpha``, merged into ``[lo, hi]`` runs.

    Endpoints are grid nodes; nothing is interpolated between them.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    level = 1.0 / alpha
    return _runs(curve.grid, [k < level for k in curve.capital])


def composite_score(curve: WarrantyCurve, subset: Callable[[float], bool]) -> float:
    """Betting score against a composite hypothesis: the least capital over it."""
    selected = [k for t, k in zip(curve.grid, curve.capital) if subset(t)]
    if not selected:
        raise DomainError("subset selects no grid point")
    return min(selected)


@dataclass(frozen=True)
class RejectionRegion:
    """A level-alpha test of one parameter value.

    The test rejects when ``statistic(outcomes)`` falls in one of the closed
    ``intervals``; ``statistic_model`` is the statistic's distribution under
    the parameter value, used to check the size of the region.
    """

    statistic: Callable[[Sequence], float]
    intervals: tuple
    statistic_model: DistributionModel

    def size(self) -> float:
        return math.fsum(interval_probability(self.statistic_model, lo, hi) for lo, hi in self.intervals)

    def rejects(self, outcomes: Sequence) -> bool:
        t = self.statistic(outcomes)
        return any(lo <= t <= hi for lo, hi in self.intervals)


def confidence_to_warranty(per_theta_test: Callable[[float], RejectionRegion], grid: Sequence[float],
                           outcomes: Sequence, alpha: float) -> WarrantyCurve:
    """Capital curve of the all-or-nothing strategy built from level-alpha tests.

    Skeptic pays 1 for ``1/alpha`` on each rejection region, so the
    ``(1/alpha)``-warranty set of the curve is the confidence set.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    grid = _strict_grid(grid)
    capital = []
    for theta in grid:
        region = per_theta_test(theta)
        size = region.size()
        if abs(size - alpha) > 1e-6:
            raise DomainError(f"theta={theta!r}: rejection region has probability {size!r}, not {alpha!r}")
        capital.append(1.0 / alpha if region.rejects(outcomes) else 0.0)
    return WarrantyCurve(grid, tuple(capital), tuple(outcomes))


def multiply_curves(curves: Sequence[WarrantyCurve]) -> WarrantyCurve:
    """Pointwise product of capital curves on a common grid (capital carried study to study)."""
    if not curves:
        raise DomainError("need at least one curve")
    grid = curves[0].grid
    for c in curves[1:]:
        if c.grid != grid:
            raise DomainError("curves are defined on different grids")
    capital = np.prod(np.array([c.capital for c in curves]), axis=0)
    observations = tuple(y for c in curves for y in c.observations)
    return WarrantyCurve(grid, tuple(capital.tolist()), observations)
