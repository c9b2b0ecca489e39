"""Null and alternative distribution models.

Three model kinds are supported: a finite table (:class:`DiscreteDistribution`),
a normal law (:class:`NormalModel`) and a chi-squared law
(:class:`ChiSquaredModel`).  They share a small duck-typed surface
(``density``, ``cdf``, ``upper_tail``) and the module-level functions
:func:`density`, :func:`upper_tail` and :func:`expect` dispatch on it.

Expectations under the continuous models use adaptive Gauss-Kronrod
quadrature on fixed truncation windows, split into short segments so that
payoffs which grow exponentially in the tails are still resolved.
"""

from __future__ import annotations

import json
import math
import numbers
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from statistics import NormalDist
from typing import Any, Union

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NumericError

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

#: relative accuracy demanded from continuous expectations
QUAD_RTOL = 1e-8
NORMAL_WINDOW_SDS = 12.0
CHISQ_WINDOW_SDS = 40.0

_TINY = 1e-300


# -- special functions -------------------------------------------------------

def normal_sf(z: float) -> float:
    """Standard normal upper tail ``P(Z >= z)``, accurate deep into the tail."""
    return 0.5 * math.erfc(z / SQRT2)


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / SQRT2)


def _gamma_p_series(a: float, x: float) -> float:
    term = total = 1.0 / a
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise NumericError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_q_contfrac(a: float, x: float) -> float:
    # modified Lentz evaluation of the Legendre continued fraction
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise NumericError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def regularized_gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma function ``Q(a, x)``.

    Uses the power series for ``P`` when ``x < a + 1`` and the continued
    fraction for ``Q`` otherwise.
    """
    if a <= 0:
        raise DomainError("shape parameter must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_p_series(a, x))
    return _gamma_q_contfrac(a, x)


def regularized_gamma_p(a: float, x: float) -> float:
    if a <= 0:
        raise DomainError("shape parameter must be positive")
    if x <= 0:
        return 0.0
    if x < a + 1.0:
        return _gamma_p_series(a, x)
    return max(0.0, 1.0 - _gamma_q_contfrac(a, x))


# -- models ------------------------------------------------------------------

def _is_number(y: Any) -> bool:
    return isinstance(y, numbers.Real) and not isinstance(y, bool)


@dataclass(frozen=True)
class DiscreteDistribution:
    """A finite probability table over hashable outcome labels."""

    outcomes: tuple
    probabilities: tuple

    def __post_init__(self):
        outcomes = tuple(self.outcomes)
        probs = tuple(float(p) for p in self.probabilities)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "probabilities", probs)
        if len(outcomes) != len(probs):
            raise DomainError("outcomes and probabilities differ in length")
        if not outcomes:
            raise DomainError("a discrete distribution needs at least one outcome")
        if len(set(outcomes)) != len(outcomes):
            raise DomainError("duplicate outcome labels")
        if any(not math.isfinite(p) or p < 0 for p in probs):
            raise DomainError("probabilities must be finite and non-negative")
        total = math.fsum(probs)
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"probabilities sum to {total!r}, not 1")

    @classmethod
    def from_mapping(cls, table: Mapping) -> "DiscreteDistribution":
        return cls(tuple(table), tuple(table.values()))

    def as_dict(self) -> dict:
        return dict(zip(self.outcomes, self.probabilities))

    @property
    def is_continuous(self) -> bool:
        return False

    @property
    def numeric(self) -> bool:
        return all(_is_number(y) for y in self.outcomes)

    def density(self, y) -> float:
        try:
            return self.probabilities[self.outcomes.index(y)]
        except ValueError:
            raise DomainError(f"unknown outcome {y!r}") from None

    def _require_numeric(self):
        if not self.numeric:
            raise DomainError("tail probabilities need numeric outcome labels")

    def upper_tail(self, t: float) -> float:
        self._require_numeric()
        return min(1.0, math.fsum(p for y, p in zip(self.outcomes, self.probabilities) if y >= t))

    def cdf(self, t: float) -> float:
        self._require_numeric()
        return min(1.0, math.fsum(p for y, p in zip(self.outcomes, self.probabilities) if y <= t))

    def spec(self) -> str:
        body = ",".join(f"{y}={p!r}" for y, p in zip(self.outcomes, self.probabilities))
        return f"discrete:{body}"


@dataclass(frozen=True)
class NormalModel:
    mean: float
    sd: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.sd)):
            raise DomainError("normal parameters must be finite")
        if self.sd <= 0:
            raise DomainError("normal sd must be positive")

    @property
    def is_continuous(self) -> bool:
        return True

    def density(self, y: float) -> float:
        z = (y - self.mean) / self.sd
        return INV_SQRT_2PI / self.sd * math.exp(-0.5 * z * z)

    def log_density(self, y: float) -> float:
        z = (y - self.mean) / self.sd
        return -0.5 * z * z - math.log(self.sd) + math.log(INV_SQRT_2PI)

    def cdf(self, t: float) -> float:
        return normal_cdf((t - self.mean) / self.sd)

    def upper_tail(self, t: float) -> float:
        return normal_sf((t - self.mean) / self.sd)

    def quantile(self, q: float) -> float:
        return NormalDist(self.mean, self.sd).inv_cdf(q)

    def window(self) -> tuple[float, float]:
        half = NORMAL_WINDOW_SDS * self.sd
        return self.mean - half, self.mean + half

    def segments(self) -> list[float]:
        lo, _ = self.window()
        n = int(2 * NORMAL_WINDOW_SDS)
        return [lo + k * self.sd for k in range(n + 1)]

    def spec(self) -> str:
        return f"normal:{self.mean!r},{self.sd!r}"


@dataclass(frozen=True)
class ChiSquaredModel:
    degrees_of_freedom: int

    def __post_init__(self):
        df = self.degrees_of_freedom
        if isinstance(df, bool) or int(df) != df or df < 1:
            raise DomainError("degrees of freedom must be a positive integer")
        object.__setattr__(self, "degrees_of_freedom", int(df))

    @property
    def is_continuous(self) -> bool:
        return True

    def density(self, y: float) -> float:
        k = self.degrees_of_freedom
        if y < 0:
            return 0.0
        if y == 0:
            return math.inf if k == 1 else (0.5 if k == 2 else 0.0)
        return math.exp(self.log_density(y))

    def log_density(self, y: float) -> float:
        if y < 0:
            return -math.inf
        if y == 0:
            d = self.density(0.0)
            return math.log(d) if d > 0 else -math.inf
        h = 0.5 * self.degrees_of_freedom
        return (h - 1.0) * math.log(y) - 0.5 * y - h * math.log(2.0) - math.lgamma(h)

    def cdf(self, t: float) -> float:
        return regularized_gamma_p(0.5 * self.degrees_of_freedom, 0.5 * t)

    def upper_tail(self, t: float) -> float:
        return regularized_gamma_q(0.5 * self.degrees_of_freedom, 0.5 * t)

    def quantile(self, q: float) -> float:
        if not 0.0 < q < 1.0:
            raise DomainError("quantile level must lie in (0, 1)")
        _, hi = self.window()
        while self.cdf(hi) < q:
            hi *= 2.0
        return optimize.brentq(lambda t: self.cdf(t) - q, 0.0, hi, xtol=1e-13, rtol=1e-14)

    def window(self) -> tuple[float, float]:
        k = self.degrees_of_freedom
        return 0.0, k + CHISQ_WINDOW_SDS * math.sqrt(k)

    def segments(self) -> list[float]:
        lo, hi = self.window()
        k = self.degrees_of_freedom
        pts = set(np.linspace(lo, hi, 41).tolist())
        pts.update(p for p in (0.5 * k, float(k), 2.0 * k) if lo < p < hi)
        return sorted(pts)

    def spec(self) -> str:
        return f"chisq:{self.degrees_of_freedom}"


DistributionModel = Union[DiscreteDistribution, NormalModel, ChiSquaredModel]


# -- dispatching operations --------------------------------------------------

def density(model: DistributionModel, y) -> float:
    """Mass (discrete) or density (continuous) of ``model`` at ``y``."""
    return model.density(y)


def upper_tail(model: DistributionModel, t: float) -> float:
    """``P(Y >= t)`` under ``model``."""
    return model.upper_tail(t)


def cdf(model: DistributionModel, t: float) -> float:
    return model.cdf(t)


def interval_probability(model: DistributionModel, lo: float, hi: float) -> float:
    """Probability of the closed interval ``[lo, hi]``; endpoints may be infinite."""
    if hi < lo:
        return 0.0
    if isinstance(model, DiscreteDistribution):
        model._require_numeric()
        return math.fsum(p for y, p in zip(model.outcomes, model.probabilities) if lo <= y <= hi)
    upper = 1.0 if lo == -math.inf else model.upper_tail(lo)
    above = 0.0 if hi == math.inf else model.upper_tail(hi)
    return max(0.0, upper - above)


def _as_callable(f) -> Callable:
    if isinstance(f, Mapping):
        return f.__getitem__
    return f


def expect(model: DistributionModel, f, breakpoints: Sequence[float] = (),
           log_weight: Callable | None = None) -> float:
    """Expected value of ``f(Y)`` under ``model``.

    ``f`` may be a callable or, for discrete models, a mapping from outcome to
    value.  ``breakpoints`` lists points where ``f`` jumps; continuous
    quadrature splits its segments there, and breakpoints beyond the model's
    default window extend the integration range to reach them.

    With ``log_weight`` the result is ``E[exp(log_weight(Y)) f(Y)]`` for a
    continuous model, the weight being combined with the log density before
    exponentiating so that huge weights on negligible densities stay finite.

    Raises :class:`NumericError` when the quadrature error estimate exceeds
    :data:`QUAD_RTOL` relative to the integral.
    """
    func = _as_callable(f)
    if isinstance(model, DiscreteDistribution):
        return math.fsum(p * float(func(y)) for y, p in zip(model.outcomes, model.probabilities) if p > 0)

    floor = 0.0 if isinstance(model, ChiSquaredModel) else -math.inf
    pts = set(model.segments())
    pts.update(float(b) for b in breakpoints if math.isfinite(b) and b >= floor)
    pts = sorted(pts)
    lo, hi = pts[0], pts[-1]

    if log_weight is None:
        def integrand(y):
            d = model.density(y)
            return 0.0 if d == 0.0 else float(func(y)) * d
    else:
        def integrand(y):
            lw = log_weight(y) + model.log_density(y)
            return 0.0 if lw == -math.inf else float(func(y)) * math.exp(lw)

    total = 0.0
    scale = 0.0
    err = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b <= a:
            continue
        val, abserr, *_ = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=1e-11,
                                         limit=200, full_output=1)
        total += val
        scale += abs(val)
        err += abserr
    if not math.isfinite(total) or err > QUAD_RTOL * scale + 1e-15:
        raise NumericError(
            f"quadrature did not converge under {model!r}: estimate {total!r}, "
            f"error bound {err!r} over window [{lo!r}, {hi!r}]")
    return total


def support_grid(model: DistributionModel, points: int = 10_001) -> list:
    """Points on which payoff sign checks are made."""
    if isinstance(model, DiscreteDistribution):
        return list(model.outcomes)
    lo, hi = model.window()
    return np.linspace(lo, hi, points).tolist()


def seeded_uniform(seed: int, size: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    """Reproducible uniform draws used by Monte Carlo checks."""
    return np.random.default_rng(seed).uniform(low, high, size)


# -- textual model specs -----------------------------------------------------

def _parse_label(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def _parse_float(text: str, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DomainError(f"cannot parse {what} {text!r} as a number") from None
    if not math.isfinite(value):
        raise DomainError(f"{what} must be finite, got {text!r}")
    return value


def discrete_from_json(data) -> DiscreteDistribution:
    """Accept ``{"outcomes": [...], "probabilities": [...]}`` or a flat mapping."""
    if isinstance(data, Mapping) and set(data) == {"outcomes", "probabilities"}:
        return DiscreteDistribution(tuple(data["outcomes"]), tuple(data["probabilities"]))
    if isinstance(data, Mapping):
        return DiscreteDistribution(tuple(_parse_label(str(k)) for k in data), tuple(data.values()))
    raise DomainError("discrete model JSON must be an object")


def parse_model_spec(text: str) -> DistributionModel:
    """Parse ``kind:params``, e.g. ``normal:0,10``, ``chisq:11``,
    ``discrete:a=0.3,b=0.7`` or ``discrete:@table.json``."""
    kind, sep, body = text.partition(":")
    kind = kind.strip().lower()
    if not sep:
        raise DomainError(f"model spec {text!r} lacks 'kind:' prefix")
    if kind == "normal":
        parts = body.split(",")
        if len(parts) != 2:
            raise DomainError(f"normal spec needs mean,sd: {text!r}")
        return NormalModel(_parse_float(parts[0], "mean"), _parse_float(parts[1], "sd"))
    if kind in ("chisq", "chi2"):
        df = _parse_float(body, "degrees of freedom")
        if df != int(df):
            raise DomainError("degrees of freedom must be an integer")
        return ChiSquaredModel(int(df))
    if kind == "discrete":
        if body.startswith("@"):
            with Path(body[1:]).open(encoding="utf-8") as fh:
                return discrete_from_json(json.load(fh))
        outcomes, probs = [], []
        for item in body.split(","):
            label, eq, p = item.partition("=")
            if not eq:
                raise DomainError(f"discrete entry {item!r} is not label=probability")
            outcomes.append(_parse_label(label.strip()))
            probs.append(_parse_float(p, "probability"))
        return DiscreteDistribution(tuple(outcomes), tuple(probs))
    raise DomainError(f"unknown model kind {kind!r}")
