"""Stick-breaking samplers for GEM/PD random partitions and a reference
split-merge chain whose equilibrium reproduces their same-element statistic.

The stick law with parameter theta has tail P(X > s) = (1-s)^theta; chopping
the unit interval with i.i.d. sticks gives GEM(theta), and sorting the pieces
in decreasing order gives PD(theta).  The probability that two independent
uniform points fall in the same piece is 1/(theta+1).
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "StickPartition",
    "sample_beta_theta",
    "sample_gem",
    "gem_to_pd",
    "same_element_probability",
    "analytic_same_element",
    "split_merge_reference_chain",
]

RESIDUAL_FLOOR = 1e-12


@dataclass
class StickPartition:
    """Stick-breaking weights (unsorted = GEM order, sorted = PD order).

    `residual` is the untouched tail mass prod(1 - X_i); weights + residual
    sum to 1 exactly by construction.
    """

    weights: np.ndarray
    theta: float
    residual: float
    sorted: bool = False

    def total(self):
        return float(np.sum(self.weights) + self.residual)


def sample_beta_theta(theta, rng, size=None):
    """Stick variable(s) with tail (1-s)^theta, via inverse CDF."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    u = rng.random(size) if size is not None else rng.random()
    return 1.0 - (1.0 - u) ** (1.0 / theta)


def sample_gem(theta, n_terms, rng):
    """First n_terms stick-breaking weights; stops early once the residual
    drops below the floor (tail bookkeeping stays exact)."""
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    weights = []
    residual = 1.0
    for _ in range(int(n_terms)):
        x = sample_beta_theta(theta, rng)
        weights.append(residual * x)
        residual *= (1.0 - x)
        if residual < RESIDUAL_FLOOR:
            break
    return StickPartition(np.array(weights), float(theta), residual)


def gem_to_pd(partition):
    """Decreasing rearrangement; the weight multiset is preserved."""
    return StickPartition(np.sort(partition.weights)[::-1].copy(),
                          partition.theta, partition.residual, sorted=True)


def same_element_probability(partition):
    """sum of squared weights of the sampled partition.

    The neglected tail contributes at most residual^2; it is available from
    the partition for explicit accounting.
    """
    return float(np.sum(partition.weights ** 2))


def analytic_same_element(theta):
    if theta <= 0:
        raise ValueError("theta must be positive")
    return 1.0 / (theta + 1.0)


def split_merge_reference_chain(initial, rates, steps, rng):
    """Split-merge chain on partitions of [0, 1]; yields the weights after
    every step.

    Each step samples two independent uniform points of [0,1] (size-biased
    part picks).  If they land in the same part, that part is split at a
    uniform point with probability proportional to rates[0]; if in different
    parts, the two parts merge with probability proportional to rates[1].
    Split:merge weighting theta:1 drives the chain to PD(theta), so 2:1 and
    1:1 reproduce same-element statistics 1/3 and 1/2.
    """
    split_rate, merge_rate = float(rates[0]), float(rates[1])
    if split_rate <= 0 or merge_rate <= 0:
        raise ValueError("split and merge rates must be positive")
    scale = max(split_rate, merge_rate)
    p_split = split_rate / scale
    p_merge = merge_rate / scale
    w = np.asarray(initial, dtype=np.float64).copy()
    if w.size == 0 or abs(w.sum() - 1.0) > 1e-9 or (w <= 0).any():
        raise ValueError("initial partition must be positive and sum to 1")

    def locate(u, cums):
        return min(int(np.searchsorted(cums, u, side="right")), len(cums) - 1)

    for _ in range(int(steps)):
        cums = np.cumsum(w)
        i = locate(rng.random() * cums[-1], cums)
        j = locate(rng.random() * cums[-1], cums)
        if i == j:
            if rng.random() < p_split:
                frac = rng.random()
                piece = w[i]
                w[i] = piece * frac
                w = np.append(w, piece * (1.0 - frac))
        else:
            if rng.random() < p_merge:
                w[i] += w[j]
                w = np.delete(w, j)
        yield w
