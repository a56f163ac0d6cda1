"""Complex linear algebra and the quantum probability layer.

States are density operators and pure-state vectors held in dense
``numpy`` arrays (complex128, row-major).  Tensor products follow the
index convention ``|j> ⊗ |k> -> j*dB + k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .report import Report, make_check

DEFAULT_TOL = 1e-10

__all__ = [
    "DEFAULT_TOL",
    "Povm",
    "PMFragment",
    "ket",
    "projector",
    "is_hermitian",
    "is_psd",
    "is_unitary",
    "is_density_operator",
    "born_rule",
    "pure_overlap",
    "tensor_product",
    "partial_trace",
    "conditional_state",
    "validate_povm",
    "phase_align",
    "maximally_entangled",
    "random_state_vector",
    "random_unitary",
    "random_basis",
    "matrix_to_json",
    "matrix_from_json",
    "fragment_to_json",
    "fragment_from_json",
]


def ket(index: int, dim: int) -> np.ndarray:
    """Computational basis vector |index> in dimension dim."""
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(psi: np.ndarray) -> np.ndarray:
    """Rank-1 projector |psi><psi|."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.abs(m - m.conj().T).max() <= tol


def is_psd(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """Positive semidefinite within tol: eigenvalue floor of the Hermitian part."""
    if not is_hermitian(m, tol):
        return False
    herm = (m + m.conj().T) / 2
    return float(np.linalg.eigvalsh(herm).min()) >= -tol


def is_unitary(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return np.abs(m.conj().T @ m - np.eye(m.shape[0])).max() <= tol


def is_density_operator(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return is_psd(m, tol) and abs(np.trace(m).real - 1.0) <= tol


@dataclass(frozen=True)
class Povm:
    """An ordered list of (outcome label, effect matrix) pairs."""

    outcomes: tuple

    def __post_init__(self):
        object.__setattr__(
            self,
            "outcomes",
            tuple((str(label), np.asarray(m, dtype=complex)) for label, m in self.outcomes),
        )

    @property
    def labels(self):
        return tuple(label for label, _ in self.outcomes)

    def effect(self, label: str) -> np.ndarray:
        for lab, m in self.outcomes:
            if lab == label:
                return m
        raise KeyError(f"no outcome labeled {label!r}")

    @property
    def dim(self) -> int:
        return self.outcomes[0][1].shape[0]


@dataclass(frozen=True)
class PMFragment:
    """A Hilbert-space dimension with named states and named POVMs."""

    dim: int
    states: dict
    measurements: dict

    def validate(self, tol: float = DEFAULT_TOL):
        for name, rho in self.states.items():
            if rho.shape != (self.dim, self.dim):
                raise ValueError(f"state {name!r} has shape {rho.shape}, expected {(self.dim,) * 2}")
            if not is_density_operator(rho, tol):
                raise ValueError(f"state {name!r} is not a density operator within {tol}")
        for name, povm in self.measurements.items():
            rep = validate_povm(povm, tol)
            if povm.dim != self.dim:
                raise ValueError(f"measurement {name!r} acts on dimension {povm.dim}")
            if not rep.passed:
                raise ValueError(f"measurement {name!r} is not a valid POVM within {tol}")
        return self


def born_rule(rho: np.ndarray, effect: np.ndarray) -> float:
    """Outcome probability Re tr(E rho), clamped to [0, 1] near the boundary."""
    rho = np.asarray(rho, dtype=complex)
    effect = np.asarray(effect, dtype=complex)
    if rho.shape != effect.shape or rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"dimension mismatch: rho {rho.shape}, effect {effect.shape}")
    p = float(np.trace(effect @ rho).real)
    if p < -1e-10 or p > 1 + 1e-10:
        raise ValueError(f"born probability {p} outside [0,1]; invalid state or effect")
    return min(max(p, 0.0), 1.0)


def pure_overlap(psi: np.ndarray, phi: np.ndarray) -> float:
    """Squared inner product |<phi|psi>|^2 of two pure states."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    if psi.shape != phi.shape:
        raise ValueError(f"dimension mismatch: {psi.shape} vs {phi.shape}")
    return float(abs(np.vdot(phi, psi)) ** 2)


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker composite of two vectors or two operators."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(rho_ab: np.ndarray, dims: tuple, keep: str) -> np.ndarray:
    """Reduced density operator of a bipartite state.

    dims is (dA, dB); keep is "A" or "B".
    """
    d_a, d_b = dims
    rho_ab = np.asarray(rho_ab, dtype=complex)
    if rho_ab.shape != (d_a * d_b, d_a * d_b):
        raise ValueError(f"state shape {rho_ab.shape} does not factor as {d_a}x{d_b}")
    t = rho_ab.reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        return np.einsum("ikjk->ij", t)
    if keep == "B":
        return np.einsum("kikj->ij", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def conditional_state(rho_ab: np.ndarray, effect_on_a: np.ndarray, dims: tuple):
    """Update of the B system given outcome `effect_on_a` on A.

    Returns (normalized conditional state on B, probability of the
    conditioning outcome).  Raises on (near) zero-probability outcomes.
    """
    d_a, d_b = dims
    effect_on_a = np.asarray(effect_on_a, dtype=complex)
    if effect_on_a.shape != (d_a, d_a):
        raise ValueError(f"effect shape {effect_on_a.shape}, expected {(d_a, d_a)}")
    joint = tensor_product(effect_on_a, np.eye(d_b)) @ np.asarray(rho_ab, dtype=complex)
    unnorm = partial_trace(joint, (d_a, d_b), keep="B")
    prob = float(np.trace(unnorm).real)
    if prob <= 1e-12:
        raise ValueError(f"conditioning on outcome of probability {prob}")
    return unnorm / prob, prob


def validate_povm(povm: Povm, tol: float = DEFAULT_TOL) -> Report:
    """Check PSD eigen-floors and completeness of a POVM."""
    report = Report(name="validate_povm", passed=True, tol=tol)
    dim = povm.dim
    total = np.zeros((dim, dim), dtype=complex)
    for label, effect in povm.outcomes:
        herm_res = float(np.abs(effect - effect.conj().T).max())
        report.checks.append(make_check(f"hermitian|{label}", 0.0, herm_res, tol))
        herm = (effect + effect.conj().T) / 2
        floor = float(np.linalg.eigvalsh(herm).min())
        report.checks.append(make_check(f"psd_floor|{label}", 0.0, min(floor, 0.0), tol))
        total = total + effect
    completeness = float(np.abs(total - np.eye(dim)).max())
    report.checks.append(make_check("completeness", 0.0, completeness, tol))
    report.passed = all(c.passed for c in report.checks)
    report.info["completeness_residual"] = completeness
    return report


def phase_align(psi: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Rephase psi so that <phi|psi> is real and nonnegative.

    Orthogonal pairs are returned unchanged.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    ip = np.vdot(phi, psi)
    if abs(ip) < 1e-300:
        return psi.copy()
    return psi * (ip.conjugate() / abs(ip))


def maximally_entangled(d: int) -> np.ndarray:
    """The canonical state (1/sqrt d) sum_j |j>|j>."""
    if d < 2:
        raise ValueError(f"need dimension >= 2, got {d}")
    v = np.zeros(d * d, dtype=complex)
    for j in range(d):
        v[j * d + j] = 1.0
    return v / np.sqrt(d)


def random_state_vector(dim: int, rng) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_unitary(dim: int, rng) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_basis(dim: int, rng) -> list:
    """Columns of a Haar-random unitary, as a list of vectors."""
    u = random_unitary(dim, rng)
    return [u[:, j].copy() for j in range(dim)]


# ---------------------------------------------------------------------------
# JSON encoding: complex numbers as [re, im], matrices as nested row-major
# arrays, fragments as {"dim": d, "states": {...}, "measurements": {...}}.


def matrix_to_json(m: np.ndarray) -> list:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in data], dtype=complex)


def vector_to_json(v: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex).reshape(-1)]


def vector_from_json(data) -> np.ndarray:
    return np.array([complex(re, im) for re, im in data], dtype=complex)


def fragment_to_json(fragment: PMFragment) -> dict:
    return {
        "dim": fragment.dim,
        "states": {name: matrix_to_json(rho) for name, rho in fragment.states.items()},
        "measurements": {
            name: [[label, matrix_to_json(m)] for label, m in povm.outcomes]
            for name, povm in fragment.measurements.items()
        },
    }


def fragment_from_json(data) -> PMFragment:
    states = {name: matrix_from_json(m) for name, m in data["states"].items()}
    measurements = {
        name: Povm(tuple((label, matrix_from_json(m)) for label, m in outcomes))
        for name, outcomes in data["measurements"].items()
    }
    return PMFragment(dim=int(data["dim"]), states=states, measurements=measurements)
