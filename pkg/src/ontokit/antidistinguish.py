"""Synthesis and verification of antidistinguishing measurements.

A POVM antidistinguishes a set of states when its j-th outcome never
fires on the j-th state, so each outcome conclusively excludes one
preparation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .linalg import (
    Povm,
    born_rule,
    ket,
    phase_align,
    projector,
    pure_overlap,
    tensor_product,
    validate_povm,
)
from .models import (
    direct_product_model,
    discretize_model,
    measures_overlap,
    measures_overlap_exact,
)
from .report import Report

__all__ = [
    "AntidistinguishingCertificate",
    "verify_antidistinguishes",
    "trine_example",
    "pbr_qubit_basis",
    "pbr_kraus",
    "pbr_povm",
    "tensor_power_reduction",
    "hardy_phases",
    "hardy_construction",
    "inefficiency_overlap_bound",
    "pbr_overlap_witness",
]


@dataclass
class AntidistinguishingCertificate:
    """States, candidate POVM, per-pair residuals tr(E_j rho_j), and the
    POVM validity report."""

    states: list
    povm: Povm
    residuals: list
    valid_povm: Report
    tol: float

    @property
    def valid(self) -> bool:
        return self.valid_povm.passed and all(r <= self.tol for r in self.residuals)

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0


def verify_antidistinguishes(povm: Povm, states, tol: float = 1e-10) -> AntidistinguishingCertificate:
    """Certificate for: outcome j never fires on state j."""
    states = [np.asarray(s, dtype=complex) for s in states]
    states = [projector(s) if s.ndim == 1 else s for s in states]
    if len(povm.outcomes) != len(states):
        raise ValueError(
            f"{len(povm.outcomes)} outcomes for {len(states)} states; need equal counts"
        )
    residuals = [
        abs(float(np.trace(effect @ rho).real))
        for (_, effect), rho in zip(povm.outcomes, states)
    ]
    return AntidistinguishingCertificate(
        states=states,
        povm=povm,
        residuals=residuals,
        valid_povm=validate_povm(povm, tol),
        tol=tol,
    )


def trine_example() -> AntidistinguishingCertificate:
    """Three equatorial qubit states 120 degrees apart, antidistinguished
    by scaling the projectors onto their antipodal partners by 2/3."""
    angles = [0.0, 2 * np.pi / 3, 4 * np.pi / 3]

    def equatorial(theta):
        return np.array([1.0, np.exp(1j * theta)], dtype=complex) / np.sqrt(2)

    states = [equatorial(t) for t in angles]
    effects = [(f"not{j}", (2.0 / 3.0) * projector(equatorial(t + np.pi))) for j, t in enumerate(angles)]
    return verify_antidistinguishes(Povm(tuple(effects)), states, tol=1e-12)


def pbr_qubit_basis() -> list:
    """The four orthonormal two-qubit vectors whose projectors
    antidistinguish {0,+}x{0,+} product states."""
    zero, one = ket(0, 2), ket(1, 2)
    plus = (zero + one) / np.sqrt(2)
    minus = (zero - one) / np.sqrt(2)
    s = 1 / np.sqrt(2)
    return [
        s * (tensor_product(zero, one) + tensor_product(one, zero)),
        s * (tensor_product(zero, minus) + tensor_product(one, plus)),
        s * (tensor_product(plus, one) + tensor_product(minus, zero)),
        s * (tensor_product(plus, minus) + tensor_product(minus, plus)),
    ]


def pbr_kraus(theta: float):
    """The two-operator instrument steering |0> to |0> and the
    sin(theta)-tilted companion state to |+>.

    Valid for 0 <= theta <= pi/4; satisfies M0'M0 + M1'M1 = I.
    """
    if not 0.0 <= theta <= np.pi / 4 + 1e-12:
        raise ValueError(f"theta {theta} outside [0, pi/4]")
    t = np.tan(theta)
    m0 = np.array([[1.0, 0.0], [0.0, t]], dtype=complex)
    c = np.sqrt(max(0.0, (1.0 - t * t) / 2.0))
    m1 = c * np.array([[0.0, 1.0], [0.0, 1.0]], dtype=complex)
    return m0, m1


def _complete_to_basis(vectors, dim: int) -> list:
    """Extend an orthonormal list to a full orthonormal basis."""
    basis = [np.asarray(v, dtype=complex) for v in vectors]
    for k in range(dim):
        cand = ket(k, dim)
        for b in basis:
            cand = cand - np.vdot(b, cand) * b
        norm = np.linalg.norm(cand)
        if norm > 1e-8:
            basis.append(cand / norm)
        if len(basis) == dim:
            break
    if len(basis) != dim:
        raise ValueError("could not complete the basis")
    return basis


def pbr_povm(psi0: np.ndarray, psi1: np.ndarray, tol: float = 1e-10) -> AntidistinguishingCertificate:
    """Four-outcome POVM antidistinguishing the product pairs of two
    states with squared overlap at most 1/2.

    The construction works on the two-dimensional span of the states;
    the projector onto the orthocomplement is folded into the first
    outcome.
    """
    psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
    psi1 = np.asarray(psi1, dtype=complex).reshape(-1)
    overlap = pure_overlap(psi0, psi1)
    if overlap > 0.5 + 1e-12:
        raise ValueError(f"squared overlap {overlap} exceeds 1/2")
    d = psi0.shape[0]

    psi1a = phase_align(psi1, psi0)
    ip = float(np.vdot(psi0, psi1a).real)
    theta = float(np.arcsin(np.clip(ip, 0.0, 1.0 / np.sqrt(2))))

    b0 = psi0
    residual = psi1a - ip * b0
    norm = np.linalg.norm(residual)
    if norm < 1e-12:
        raise ValueError("states are identical; nothing to antidistinguish")
    b1 = residual / norm

    t = np.tan(theta)
    c = np.sqrt(max(0.0, (1.0 - t * t) / 2.0))
    m0 = np.outer(b0, b0.conj()) + t * np.outer(b1, b1.conj())
    m1 = c * np.outer(b0 + b1, b1.conj())

    plus = (b0 + b1) / np.sqrt(2)
    minus = (b0 - b1) / np.sqrt(2)
    s = 1 / np.sqrt(2)
    phis = [
        s * (tensor_product(b0, b1) + tensor_product(b1, b0)),
        s * (tensor_product(b0, minus) + tensor_product(b1, plus)),
        s * (tensor_product(plus, b1) + tensor_product(minus, b0)),
        s * (tensor_product(plus, minus) + tensor_product(minus, plus)),
    ]

    kraus_pairs = [tensor_product(mr, ms) for mr in (m0, m1) for ms in (m0, m1)]
    effects = []
    for phi in phis:
        pphi = projector(phi)
        e = sum(k.conj().T @ pphi @ k for k in kraus_pairs)
        effects.append(e)
    span = np.outer(b0, b0.conj()) + np.outer(b1, b1.conj())
    effects[0] = effects[0] + np.eye(d * d) - tensor_product(span, span)

    povm = Povm(tuple((lab, e) for lab, e in zip(("00", "01", "10", "11"), effects)))
    states = [
        tensor_product(projector(psi0), projector(psi0)),
        tensor_product(projector(psi0), projector(psi1)),
        tensor_product(projector(psi1), projector(psi0)),
        tensor_product(projector(psi1), projector(psi1)),
    ]
    return verify_antidistinguishes(povm, states, tol=tol)


def copies_for_overlap(overlap: float) -> int:
    """Smallest n with overlap^n <= 1/2."""
    if not 0.0 <= overlap < 1.0 - 1e-12:
        raise ValueError(f"need overlap in [0, 1), got {overlap}")
    n = 1
    value = overlap
    while value > 0.5:
        value *= overlap
        n += 1
    return n


def tensor_power_reduction(psi0: np.ndarray, psi1: np.ndarray) -> int:
    """Number of copies after which the product pair of two distinct
    states becomes antidistinguishable: smallest n with
    pure_overlap^n <= 1/2."""
    overlap = pure_overlap(psi0, psi1)
    if overlap >= 1.0 - 1e-12:
        raise ValueError("states are not distinct; overlap never decays below 1/2")
    return copies_for_overlap(overlap)


def hardy_phases(d: int, target: float) -> list:
    """Phases [p_1, ..., p_{d-1}] making the inner product between the
    uniform-amplitude vector and the one-direction-short vector equal to
    `target`.

    Odd d pairs conjugate phases; even d pins the first phase to zero.
    The reachable range is [0, sqrt((d-1)/d)].
    """
    if d < 3:
        raise ValueError(f"need dimension >= 3, got {d}")
    top = np.sqrt((d - 1) / d)
    if not -1e-12 <= target <= top + 1e-12:
        raise ValueError(f"target {target} outside [0, {top}]")
    target = min(max(target, 0.0), top)
    if d % 2 == 1:
        phi = float(np.arccos(np.clip(target / top, -1.0, 1.0)))
        half = (d - 1) // 2
        return [phi] * half + [-phi] * half
    cos_phi = (target * np.sqrt(d * (d - 1)) - 1.0) / (d - 2)
    phi = float(np.arccos(np.clip(cos_phi, -1.0, 1.0)))
    n_plus = d // 2 - 1
    n_minus = d - 1 - 1 - n_plus
    return [0.0] + [phi] * n_plus + [-phi] * n_minus


def hardy_construction(psi: np.ndarray, phi: np.ndarray, tol: float = 1e-10) -> dict:
    """Unitaries fixing psi whose images of phi are antidistinguished by
    a fixed orthonormal basis.

    Returns the unitaries, the basis vectors, the rotated states, and
    the certificate.  Requires d >= 3 and squared overlap at most
    (d-1)/d.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    d = psi.shape[0]
    if d < 3:
        raise ValueError(f"need dimension >= 3, got {d}")
    overlap = pure_overlap(psi, phi)
    if overlap > (d - 1) / d + 1e-12:
        raise ValueError(f"squared overlap {overlap} exceeds (d-1)/d")

    psi_a = phase_align(psi, phi)
    alpha = float(np.vdot(phi, psi_a).real)
    beta = np.sqrt(max(0.0, 1.0 - alpha * alpha))

    # basis in which the fixed state has uniform amplitudes
    uniform = np.ones(d, dtype=complex) / np.sqrt(d)
    src = _complete_to_basis([uniform], d)
    dst = _complete_to_basis([psi_a], d)
    rot = sum(np.outer(t, s.conj()) for s, t in zip(src, dst))
    b = [rot @ ket(j, d) for j in range(d)]

    phases = hardy_phases(d, alpha)
    phi0 = sum(
        np.exp(1j * p) * bj for p, bj in zip(phases, b[1:])
    ) / np.sqrt(d - 1)

    if beta < 1e-8:
        raise ValueError("states are (numerically) identical")
    perp = (phi - alpha * psi_a)
    perp = perp / np.linalg.norm(perp)
    perp0 = phi0 - alpha * psi_a
    perp0 = perp0 / np.linalg.norm(perp0)

    src_pair = _complete_to_basis([psi_a, perp], d)
    dst_pair = _complete_to_basis([psi_a, perp0], d)
    u = sum(np.outer(t, s.conj()) for s, t in zip(src_pair, dst_pair))

    shift = sum(np.outer(b[(j + 1) % d], b[j].conj()) for j in range(d))
    unitaries = []
    rotated = []
    uj = u
    for j in range(d):
        unitaries.append(uj)
        rotated.append(uj @ phi)
        uj = shift @ uj

    povm = Povm(tuple((str(j), projector(bj)) for j, bj in enumerate(b)))
    certificate = verify_antidistinguishes(povm, rotated, tol=tol)
    return {
        "unitaries": unitaries,
        "basis": b,
        "states": rotated,
        "povm": povm,
        "certificate": certificate,
        "alpha": alpha,
    }


def inefficiency_overlap_bound(eta: float) -> float:
    """Overlap ceiling for an antidistinguishable set when a null
    outcome may fire with probability up to eta on every state."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta {eta} outside [0, 1]")
    return eta


def _principal_vector(rho: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(rho)
    return vecs[:, int(np.argmax(vals))]


def pbr_overlap_witness(model) -> dict:
    """Contradiction witness for an overlap-slice qubit model of the
    {|0>,|+>} pair: the four product measures retain overlap L4 = L^2,
    yet the four product states are antidistinguishable, so any product
    model must leak probability into the precluded outcomes.

    The precluded-outcome probabilities are computed with quantum
    (state-readout) responses on the discretized product model; their
    sum is bounded below by the four-way overlap.
    """
    frag = model.fragment
    if frag is None or model.space.kind != "interval":
        raise ValueError("expected an interval-augmented model with a fragment")
    name_a = model.meta.get("state_a")
    name_b = model.meta.get("state_b")
    if name_a is None or name_b is None:
        raise ValueError("model does not record an overlap pair (need an overlap-slice model)")
    zero = ket(0, 2)
    plus = (ket(0, 2) + ket(1, 2)) / np.sqrt(2)
    if (
        float(np.abs(frag.states[name_a] - projector(zero)).max()) > 1e-8
        or float(np.abs(frag.states[name_b] - projector(plus)).max()) > 1e-8
    ):
        raise ValueError("witness expects the overlap pair |0>, |+>")

    mu_a = model.delta[name_a][0]
    mu_b = model.delta[name_b][0]
    l2 = measures_overlap_exact([mu_a, mu_b])

    # exact masses per ontic label
    def label_mass(mu):
        return {
            label: sum((hi - lo) * dens for lo, hi, dens in segs)
            for label, segs in mu.pieces.items()
        }

    mass = {name_a: label_mass(mu_a), name_b: label_mass(mu_b)}

    # brute-force four-way overlap on the product slice grid
    labels = sorted(set(mu_a.pieces) | set(mu_b.pieces), key=str)
    cuts = {}
    for lab in labels:
        pts = {Fraction(0), Fraction(1)}
        for mu in (mu_a, mu_b):
            for lo, hi, _ in mu.pieces.get(lab, ()):
                pts.add(lo)
                pts.add(hi)
        cuts[lab] = sorted(pts)
    pair = (name_a, name_b)
    l4 = Fraction(0)
    for lx in labels:
        for sx_lo, sx_hi in zip(cuts[lx], cuts[lx][1:]):
            dx = {n: model.delta[n][0].density_at(lx, sx_lo) for n in pair}
            for ly in labels:
                for sy_lo, sy_hi in zip(cuts[ly], cuts[ly][1:]):
                    dy = {n: model.delta[n][0].density_at(ly, sy_lo) for n in pair}
                    m = min(dx[j] * dy[k] for j in pair for k in pair)
                    if m > 0:
                        l4 += m * (sx_hi - sx_lo) * (sy_hi - sy_lo)

    # cross-check on the discretized direct product model
    dm = discretize_model(model)
    prod = direct_product_model(dm, dm)
    prod_measures = [
        prod.delta[f"{j}⊗{k}"][0] for j in pair for k in pair
    ]
    l4_discretized = measures_overlap(prod_measures)

    # precluded-outcome probabilities with quantum readout responses
    vectors = {name: _principal_vector(frag.states[name]) for name in labels}
    phis = pbr_qubit_basis()
    order = [(name_a, name_a), (name_a, name_b), (name_b, name_a), (name_b, name_b)]
    precluded = []
    for (j, k), phi in zip(order, phis):
        pred = Fraction(0)
        eff = projector(phi)
        for x in mass[j]:
            for y in mass[k]:
                q = born_rule(tensor_product(projector(vectors[x]), projector(vectors[y])), eff)
                pred += mass[j][x] * mass[k][y] * Fraction(q)
        precluded.append(pred)

    total = sum(precluded, Fraction(0))
    return {
        "L2": float(l2),
        "L4": float(l4),
        "L4_discretized": l4_discretized,
        "precluded_probs": [float(p) for p in precluded],
        "max_precluded_prob": float(max(precluded)),
        "sum_precluded": float(total),
        "bound_holds": total >= l4,
        "factorization_exact": l4 == l2 * l2,
    }
