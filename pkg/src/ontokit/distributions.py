"""Classical probability calculus over finite label sets.

Distributions are weight maps over hashable labels.  Pairwise and n-way
computations first unify supports by label union, with absent labels
carrying weight zero.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

__all__ = [
    "ZERO_WEIGHT",
    "FiniteDistribution",
    "JointDistribution",
    "StochasticKernel",
    "delta",
    "uniform",
    "variational_distance",
    "overlap",
    "overlap_by_partition",
    "mix",
    "product_distribution",
    "apply_stochastic",
    "pair_guess_success",
    "exclusion_failure",
]

# Weights at or below this magnitude count as exact zeros for support
# predicates, so rounding noise cannot fake an overlap.
ZERO_WEIGHT = 1e-15


@dataclass(frozen=True)
class FiniteDistribution:
    """Probability weights over a finite, ordered label set."""

    weights: dict

    def __post_init__(self):
        clean = {}
        for label, w in self.weights.items():
            w = float(w)
            if w < -ZERO_WEIGHT:
                raise ValueError(f"negative weight {w} at label {label!r}")
            clean[label] = max(w, 0.0)
        total = sum(clean.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total}, not 1")
        object.__setattr__(self, "weights", clean)

    def __call__(self, label) -> float:
        return self.weights.get(label, 0.0)

    @property
    def support(self) -> tuple:
        return tuple(l for l, w in self.weights.items() if w > ZERO_WEIGHT)

    def labels(self) -> tuple:
        return tuple(self.weights)


def delta(label) -> FiniteDistribution:
    return FiniteDistribution({label: 1.0})


def uniform(labels) -> FiniteDistribution:
    labels = list(labels)
    return FiniteDistribution({l: 1.0 / len(labels) for l in labels})


def _union_labels(dists) -> list:
    seen = {}
    for d in dists:
        for label in d.weights:
            seen.setdefault(label, None)
    return list(seen)


def variational_distance(mu: FiniteDistribution, nu: FiniteDistribution) -> float:
    """Half the L1 gap between two distributions; 1 means disjoint."""
    labels = _union_labels([mu, nu])
    return 0.5 * sum(abs(mu(l) - nu(l)) for l in labels)


def overlap(mus) -> float:
    """Total pointwise-minimum mass of a set of distributions.

    The n-way generalization of 1 - variational_distance; zero iff the
    set can be perfectly antidistinguished given the label.
    """
    mus = list(mus)
    if not mus:
        raise ValueError("need at least one distribution")
    labels = _union_labels(mus)
    return sum(min(mu(l) for mu in mus) for l in labels)


def overlap_by_partition(mus) -> float:
    """Brute-force oracle: minimize sum_j mu_j(Omega_j) over partitions.

    Enumerates every assignment of support labels to the n cells, so it
    is only usable for small supports (intended for <= 8 labels).
    """
    mus = list(mus)
    n = len(mus)
    labels = _union_labels(mus)
    if len(labels) > 12:
        raise ValueError(f"support of {len(labels)} labels is too large to enumerate")
    best = 1.0
    for assignment in itertools.product(range(n), repeat=len(labels)):
        value = sum(mus[j](l) for l, j in zip(labels, assignment))
        best = min(best, value)
    return best


def mix(p: float, mu: FiniteDistribution, nu: FiniteDistribution) -> FiniteDistribution:
    """Convex combination p*mu + (1-p)*nu."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing weight {p} outside [0, 1]")
    labels = _union_labels([mu, nu])
    return FiniteDistribution({l: p * mu(l) + (1.0 - p) * nu(l) for l in labels})


def product_distribution(mus) -> FiniteDistribution:
    """Independent product over tuple labels (l1, ..., ln)."""
    mus = list(mus)
    if not mus:
        raise ValueError("need at least one distribution")
    weights = {(): 1.0}
    for mu in mus:
        weights = {
            prefix + (label,): w * wl
            for prefix, w in weights.items()
            for label, wl in mu.weights.items()
        }
    return FiniteDistribution(weights)


@dataclass(frozen=True)
class JointDistribution:
    """Distribution over pairs (x, y) from two label sets."""

    weights: dict

    def __post_init__(self):
        clean = {}
        for key, w in self.weights.items():
            x, y = key
            w = float(w)
            if w < -ZERO_WEIGHT:
                raise ValueError(f"negative weight {w} at {key!r}")
            clean[(x, y)] = max(w, 0.0)
        total = sum(clean.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total}, not 1")
        object.__setattr__(self, "weights", clean)

    def marginal_x(self) -> FiniteDistribution:
        out = {}
        for (x, _), w in self.weights.items():
            out[x] = out.get(x, 0.0) + w
        return FiniteDistribution(out)

    def marginal_y(self) -> FiniteDistribution:
        out = {}
        for (_, y), w in self.weights.items():
            out[y] = out.get(y, 0.0) + w
        return FiniteDistribution(out)

    def prob_disagree(self) -> float:
        """P(X != Y)."""
        return sum(w for (x, y), w in self.weights.items() if x != y)


@dataclass(frozen=True)
class StochasticKernel:
    """One target distribution per source label (a Markov kernel)."""

    rows: dict

    def __post_init__(self):
        for label, row in self.rows.items():
            if not isinstance(row, FiniteDistribution):
                raise TypeError(f"row for {label!r} is not a FiniteDistribution")

    def __call__(self, label) -> FiniteDistribution:
        return self.rows[label]


def apply_stochastic(kernel: StochasticKernel, mu: FiniteDistribution) -> FiniteDistribution:
    """Pushforward of mu through the kernel."""
    out = {}
    for label, w in mu.weights.items():
        if w == 0.0:
            continue
        if label not in kernel.rows:
            raise KeyError(f"kernel has no row for source label {label!r}")
        for target, p in kernel(label).weights.items():
            out[target] = out.get(target, 0.0) + w * p
    return FiniteDistribution(out)


def pair_guess_success(mu: FiniteDistribution, nu: FiniteDistribution) -> float:
    """Best probability of guessing which of two equiprobable sources
    produced a revealed label: (1 + D)/2."""
    return 0.5 * (1.0 + variational_distance(mu, nu))


def exclusion_failure(mus) -> float:
    """Minimal failure probability of the exclusion game: L/n.

    The player sees the label and must name one distribution that was
    *not* used; failure probability is overlap/n for n >= 2 sources.
    """
    mus = list(mus)
    if len(mus) < 2:
        raise ValueError(f"exclusion needs at least 2 distributions, got {len(mus)}")
    return overlap(mus) / len(mus)
