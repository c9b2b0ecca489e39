import itertools
import math

import numpy as np
from hypothesis import HealthCheck, settings

from bettest.betting import make_bet
from bettest.dists import DiscreteDistribution
from bettest.protocol import unit_bet_strategy

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_discrete(rng: np.random.Generator, k: int, labels=None, floor: float = 0.0) -> DiscreteDistribution:
    """Random table on ``k`` outcomes; ``floor`` keeps every mass at least that large."""
    w = rng.dirichlet(np.ones(k))
    w = floor + (1.0 - k * floor) * w
    w = w / w.sum()
    labels = tuple(range(k)) if labels is None else tuple(labels)
    return DiscreteDistribution(labels, tuple(w.tolist()))


def brute_force_np(null: DiscreteDistribution, alt: DiscreteDistribution, alpha: float) -> float:
    """Largest alternative probability of an event with null probability at most alpha."""
    best = 0.0
    for r in range(1, len(null.outcomes) + 1):
        for subset in itertools.combinations(null.outcomes, r):
            if math.fsum(null.density(y) for y in subset) <= alpha * (1 + 1e-12):
                best = max(best, math.fsum(alt.density(y) for y in subset))
    return best


def random_strategy(null_of, seed):
    """Reinvest everything in a random bet that depends on the history only."""
    def choose(history):
        model = null_of(history)
        rng = np.random.default_rng([seed, len(history)] + [hash(y) % 1000 for y in history])
        weights = rng.exponential(size=len(model.outcomes))
        weights[rng.uniform(size=weights.size) < 0.3] = 0.0
        if not np.any(weights * np.asarray(model.probabilities) > 0):
            weights[:] = 1.0
        return make_bet(dict(zip(model.outcomes, weights)), model)
    return unit_bet_strategy(choose)
