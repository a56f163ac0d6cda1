"""Chained Bell measurement families and their correlation measure.

Alice's bases carry even indices and Bob's odd indices; basis vectors
come from half-angles (a/2N + j) * pi on a great circle, so neighboring
indices are nearly aligned.  The correlation measure sums the
disagreement probabilities around the chain plus the agreement
probability across the endpoints; for the maximally entangled state it
equals 2N sin^2(pi/4N).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import born_rule, ket, maximally_entangled, projector, tensor_product

__all__ = [
    "ChainedBases",
    "chained_bases",
    "chained_joint_prob",
    "born_joint_table",
    "closed_form_joint_table",
    "correlation_measure",
    "closed_form_IN",
    "correlation_pairs",
    "max_born_residual",
    "embedded_conditional_table",
]


@dataclass(frozen=True)
class ChainedBases:
    """The 2N two-outcome bases, keyed by their chain index."""

    n_rounds: int
    alice: dict
    bob: dict

    def basis(self, index: int):
        return self.alice[index] if index % 2 == 0 else self.bob[index]


def _chain_vector(n_rounds: int, index: int, outcome: int) -> np.ndarray:
    angle = (index / (2 * n_rounds) + outcome) * np.pi
    return np.array([np.cos(angle / 2), np.sin(angle / 2)], dtype=complex)


def chained_bases(n_rounds: int) -> ChainedBases:
    """Bases for indices 0, 2, ..., 2N-2 (Alice) and 1, 3, ..., 2N-1 (Bob)."""
    if n_rounds < 1:
        raise ValueError(f"need N >= 1, got {n_rounds}")
    alice = {
        a: [_chain_vector(n_rounds, a, j) for j in (0, 1)] for a in range(0, 2 * n_rounds, 2)
    }
    bob = {
        b: [_chain_vector(n_rounds, b, j) for j in (0, 1)] for b in range(1, 2 * n_rounds, 2)
    }
    return ChainedBases(n_rounds=n_rounds, alice=alice, bob=bob)


def _check_indices(n_rounds, a, b, j=0, k=0):
    if a % 2 != 0 or not 0 <= a <= 2 * n_rounds - 2:
        raise ValueError(f"Alice index {a} is not an even chain index for N={n_rounds}")
    if b % 2 != 1 or not 1 <= b <= 2 * n_rounds - 1:
        raise ValueError(f"Bob index {b} is not an odd chain index for N={n_rounds}")
    if j not in (0, 1) or k not in (0, 1):
        raise ValueError(f"outcomes must be 0 or 1, got {(j, k)}")


def chained_joint_prob(n_rounds: int, a: int, b: int, j: int, k: int) -> float:
    """Closed-form joint outcome probability on the maximally entangled
    pair: (1/2) cos^2(((a-b)/2N + j - k) pi/2)."""
    _check_indices(n_rounds, a, b, j, k)
    return 0.5 * float(np.cos(((a - b) / (2 * n_rounds) + j - k) * np.pi / 2) ** 2)


def correlation_pairs(n_rounds: int) -> list:
    """(a, b) pairs entering the correlation measure: all |a-b| = 1
    neighbors plus the endpoint pair (0, 2N-1)."""
    pairs = []
    for a in range(0, 2 * n_rounds, 2):
        for b in (a - 1, a + 1):
            if 1 <= b <= 2 * n_rounds - 1:
                pairs.append((a, b))
    endpoint = (0, 2 * n_rounds - 1)
    if endpoint not in pairs:
        pairs.append(endpoint)
    return pairs


def closed_form_joint_table(n_rounds: int) -> dict:
    """Joint tables {(a, b): {(j, k): p}} for the correlation pairs."""
    return {
        (a, b): {
            (j, k): chained_joint_prob(n_rounds, a, b, j, k) for j in (0, 1) for k in (0, 1)
        }
        for a, b in correlation_pairs(n_rounds)
    }


def born_joint_table(n_rounds: int) -> dict:
    """Same tables computed from the Born rule on constructed bases."""
    bases = chained_bases(n_rounds)
    phi_plus = projector(maximally_entangled(2))
    table = {}
    for a, b in correlation_pairs(n_rounds):
        entry = {}
        for j in (0, 1):
            for k in (0, 1):
                effect = tensor_product(
                    projector(bases.alice[a][j]), projector(bases.bob[b][k])
                )
                entry[(j, k)] = born_rule(phi_plus, effect)
        table[(a, b)] = entry
    return table


def correlation_measure(prob_table: dict, n_rounds: int) -> float:
    """Endpoint agreement plus neighbor disagreements; smaller values
    mean stronger correlation around the chain."""
    endpoint = (0, 2 * n_rounds - 1)
    if endpoint not in prob_table:
        raise KeyError(f"table is missing the endpoint pair {endpoint}")
    total = prob_table[endpoint][(0, 0)] + prob_table[endpoint][(1, 1)]
    for a, b in correlation_pairs(n_rounds):
        if abs(a - b) != 1:
            continue
        entry = prob_table.get((a, b))
        if entry is None:
            raise KeyError(f"table is missing the neighbor pair {(a, b)}")
        total += entry[(0, 1)] + entry[(1, 0)]
    return float(total)


def closed_form_IN(n_rounds: int):
    """(2N sin^2(pi/4N), pi^2/8N); the value never exceeds the bound."""
    if n_rounds < 1:
        raise ValueError(f"need N >= 1, got {n_rounds}")
    value = 2 * n_rounds * float(np.sin(np.pi / (4 * n_rounds)) ** 2)
    bound = float(np.pi**2 / (8 * n_rounds))
    if value > bound + 1e-15:
        raise AssertionError(f"closed form {value} exceeds its bound {bound}")
    return value, bound


def max_born_residual(n_rounds: int) -> float:
    """Largest deviation between the closed-form table and the Born
    table over all correlation pairs and outcomes."""
    closed = closed_form_joint_table(n_rounds)
    born = born_joint_table(n_rounds)
    return max(
        abs(closed[ab][jk] - born[ab][jk]) for ab in closed for jk in closed[ab]
    )


def embedded_conditional_table(n_rounds: int, dim: int, subspace=(0, 1)) -> dict:
    """Chained measurements embedded in dimension d on span{|r>,|s>},
    with the remaining outcomes fixed to the computational projectors.

    Computes Born probabilities on the d-dimensional maximally entangled
    state, conditions on both outcomes landing in the active subspace,
    and returns {"table": ..., "conditioning_prob": ...,
    "marginals": ...}.  The conditioned table reproduces the d=2 case.
    """
    r, s = subspace
    if dim < 3:
        raise ValueError(f"need dimension >= 3, got {dim}")
    if r == s or not (0 <= r < dim and 0 <= s < dim):
        raise ValueError(f"invalid subspace pair {subspace}")

    def embedded_vector(index, outcome):
        v2 = _chain_vector(n_rounds, index, outcome)
        v = np.zeros(dim, dtype=complex)
        v[r] = v2[0]
        v[s] = v2[1]
        return v

    phi_plus = projector(maximally_entangled(dim))
    table = {}
    cond_probs = {}
    marginals = {}
    for a, b in correlation_pairs(n_rounds):
        raw = {}
        for j in (0, 1):
            for k in (0, 1):
                effect = tensor_product(
                    projector(embedded_vector(a, j)), projector(embedded_vector(b, k))
                )
                raw[(j, k)] = born_rule(phi_plus, effect)
        norm = sum(raw.values())
        cond_probs[(a, b)] = norm
        table[(a, b)] = {jk: p / norm for jk, p in raw.items()}
        # Alice-side marginal over her full d-outcome basis
        marg = []
        for j in (0, 1):
            effect = tensor_product(projector(embedded_vector(a, j)), np.eye(dim))
            marg.append(born_rule(phi_plus, effect))
        for m in range(dim):
            if m in (r, s):
                continue
            effect = tensor_product(projector(ket(m, dim)), np.eye(dim))
            marg.append(born_rule(phi_plus, effect))
        marginals[(a, b)] = marg
    return {"table": table, "conditioning_prob": cond_probs, "marginals": marginals}
