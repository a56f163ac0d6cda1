"""Exact rational arithmetic backing the interval-augmented models.

Floats convert to `Fraction` without rounding, so traces, interval
breakpoints and overlaps computed here are exact rationals.  A fragment
is "exactified" by renormalizing each state to unit trace and replacing
each measurement's final effect with identity-minus-the-rest; both
adjustments are at the last-ulp level of the float inputs but make
probability rows sum to exactly one, which is what lets interval models
reproduce them with zero residual.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = ["ExactMatrix", "ExactFragment", "exact_matrix", "exactify_fragment"]


@dataclass(frozen=True)
class ExactMatrix:
    """Complex matrix with Fraction-valued real and imaginary parts."""

    re: tuple
    im: tuple

    @property
    def dim(self) -> int:
        return len(self.re)

    def trace_product_real(self, other: "ExactMatrix") -> Fraction:
        """Re tr(self @ other), exact."""
        d = self.dim
        total = Fraction(0)
        sre, sim, ore, oim = self.re, self.im, other.re, other.im
        for i in range(d):
            for j in range(d):
                total += sre[i][j] * ore[j][i] - sim[i][j] * oim[j][i]
        return total

    def __sub__(self, other: "ExactMatrix") -> "ExactMatrix":
        d = self.dim
        re = tuple(
            tuple(self.re[i][j] - other.re[i][j] for j in range(d)) for i in range(d)
        )
        im = tuple(
            tuple(self.im[i][j] - other.im[i][j] for j in range(d)) for i in range(d)
        )
        return ExactMatrix(re, im)

    def __add__(self, other: "ExactMatrix") -> "ExactMatrix":
        d = self.dim
        re = tuple(
            tuple(self.re[i][j] + other.re[i][j] for j in range(d)) for i in range(d)
        )
        im = tuple(
            tuple(self.im[i][j] + other.im[i][j] for j in range(d)) for i in range(d)
        )
        return ExactMatrix(re, im)


def exact_matrix(m: np.ndarray) -> ExactMatrix:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    re = tuple(tuple(Fraction(float(z.real)) for z in row) for row in m)
    im = tuple(tuple(Fraction(float(z.imag)) for z in row) for row in m)
    return ExactMatrix(re, im)


def exact_identity(d: int) -> ExactMatrix:
    re = tuple(tuple(Fraction(1 if i == j else 0) for j in range(d)) for i in range(d))
    im = tuple(tuple(Fraction(0) for _ in range(d)) for _ in range(d))
    return ExactMatrix(re, im)


def _normalize_trace(m: ExactMatrix) -> ExactMatrix:
    tr = sum(m.re[i][i] for i in range(m.dim))
    if tr <= 0:
        raise ValueError("state has nonpositive trace")
    re = tuple(tuple(x / tr for x in row) for row in m.re)
    im = tuple(tuple(x / tr for x in row) for row in m.im)
    return ExactMatrix(re, im)


@dataclass(frozen=True)
class ExactFragment:
    """Rationalized copy of a PM fragment with exactly complete POVMs."""

    dim: int
    states: dict
    measurements: dict

    def born(self, state_name: str, meas_name: str) -> list:
        """Exact outcome probability row [(label, Fraction), ...].

        The raw trace row sums to exactly one (the POVM is exactly
        complete and the state has exact unit trace), but rounding in
        the float inputs can leave entries negative at the ~1e-16
        level.  The row is sanitized into a true probability vector:
        tiny negatives are clamped to zero and the correction is folded
        into the largest entry.
        """
        rho = self.states[state_name]
        row = [
            (label, effect.trace_product_real(rho))
            for label, effect in self.measurements[meas_name]
        ]
        worst = min(p for _, p in row)
        if worst >= 0:
            return row
        if worst < Fraction(-1, 10**10):
            raise ValueError(
                f"Born probability {float(worst)} for {state_name!r}/{meas_name!r}; invalid inputs"
            )
        excess = sum((-p for _, p in row if p < 0), Fraction(0))
        top = max(range(len(row)), key=lambda i: row[i][1])
        sanitized = []
        for i, (label, p) in enumerate(row):
            if p < 0:
                p = Fraction(0)
            elif i == top:
                p = p - excess
            sanitized.append((label, p))
        return sanitized


def exactify_fragment(fragment) -> ExactFragment:
    """Build the canonical exact-rational copy of a fragment.

    States are rescaled to unit trace; each POVM's last effect is
    replaced by I - sum(previous effects) so that every probability row
    sums to exactly one.
    """
    states = {
        name: _normalize_trace(exact_matrix(rho)) for name, rho in fragment.states.items()
    }
    measurements = {}
    for name, povm in fragment.measurements.items():
        effects = [(label, exact_matrix(m)) for label, m in povm.outcomes]
        rest = exact_identity(fragment.dim)
        for _, e in effects[:-1]:
            rest = rest - e
        effects[-1] = (effects[-1][0], rest)
        measurements[name] = tuple(effects)
    return ExactFragment(dim=fragment.dim, states=states, measurements=measurements)
