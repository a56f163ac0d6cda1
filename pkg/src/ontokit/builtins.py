"""Constructors for the library of concrete ontological models.

Each constructor returns an `OntologicalModel` with its fragment
attached, built so that verification is exact: finite models use dyadic
or literal-entry matrices whose Born probabilities incur no rounding,
and interval-augmented models are assembled in exact rational
arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .distributions import FiniteDistribution
from .exact import exactify_fragment
from .linalg import PMFragment, Povm, is_psd, projector, random_basis, random_state_vector
from .models import (
    FiniteMeasure,
    FiniteResponse,
    IntervalMeasure,
    IntervalResponse,
    OnticSpace,
    OntologicalModel,
)

__all__ = [
    "BlochVector",
    "bloch_to_state",
    "state_to_bloch",
    "spekkens_toy_bit",
    "beltrametti_bugajski",
    "bell_model",
    "abcl_model",
    "abcl_parameters",
    "ppm_natural_model",
    "KochenSpeckerModel",
    "kochen_specker_qubit",
    "ks_born_quadrature",
    "ks_born_mc",
    "ks_me_integrals",
    "basis_fragment",
    "random_basis_fragment",
]


# ---------------------------------------------------------------------------
# Spekkens toy bit


def _toy_states():
    h = 0.5
    x_plus = np.array([[h, h], [h, h]], dtype=complex)
    x_minus = np.array([[h, -h], [-h, h]], dtype=complex)
    y_plus = np.array([[h, -h * 1j], [h * 1j, h]], dtype=complex)
    y_minus = np.array([[h, h * 1j], [-h * 1j, h]], dtype=complex)
    z_plus = np.array([[1, 0], [0, 0]], dtype=complex)
    z_minus = np.array([[0, 0], [0, 1]], dtype=complex)
    return {
        "x+": x_plus,
        "x-": x_minus,
        "y+": y_plus,
        "y-": y_minus,
        "z+": z_plus,
        "z-": z_minus,
    }


def spekkens_toy_bit() -> OntologicalModel:
    """The toy bit: four ontic states (x sign, y sign), six pure states
    with half/half measures, the maximally mixed state with the uniform
    measure, and deterministic X/Y/Z response tables."""
    pure = _toy_states()
    states = dict(pure)
    states["I/2"] = np.eye(2, dtype=complex) / 2
    measurements = {
        "X": Povm((("x+", pure["x+"]), ("x-", pure["x-"]))),
        "Y": Povm((("y+", pure["y+"]), ("y-", pure["y-"]))),
        "Z": Povm((("z+", pure["z+"]), ("z-", pure["z-"]))),
    }
    fragment = PMFragment(dim=2, states=states, measurements=measurements).validate()

    labels = ("++", "+-", "-+", "--")
    space = OnticSpace("finite", labels)

    def measure(pair):
        return [FiniteMeasure(FiniteDistribution({pair[0]: 0.5, pair[1]: 0.5}))]

    delta = {
        "x+": measure(("++", "+-")),
        "x-": measure(("-+", "--")),
        "y+": measure(("++", "-+")),
        "y-": measure(("+-", "--")),
        "z+": measure(("++", "--")),
        "z-": measure(("+-", "-+")),
        "I/2": [FiniteMeasure(FiniteDistribution({l: 0.25 for l in labels}))],
    }

    def sign_x(label):
        return label[0]

    def sign_y(label):
        return label[1]

    def sign_z(label):
        return "+" if label[0] == label[1] else "-"

    def table(read, plus, minus):
        return {
            l: {plus: 1.0, minus: 0.0} if read(l) == "+" else {plus: 0.0, minus: 1.0}
            for l in labels
        }

    xi = {
        "X": [FiniteResponse(table(sign_x, "x+", "x-"), ("x+", "x-"))],
        "Y": [FiniteResponse(table(sign_y, "y+", "y-"), ("y+", "y-"))],
        "Z": [FiniteResponse(table(sign_z, "z+", "z-"), ("z+", "z-"))],
    }
    return OntologicalModel(space=space, delta=delta, xi=xi, fragment=fragment, name="spekkens")


# ---------------------------------------------------------------------------
# Beltrametti-Bugajski


def beltrametti_bugajski(
    fragment: PMFragment, decompositions: dict | None = None, tol: float = 1e-10
) -> OntologicalModel:
    """Model whose ontic states are the fragment's pure states.

    Pure states get point measures; each supplied convex decomposition
    of a mixed state contributes one additional measure (a mixture of
    point measures), which is what makes the extended model preparation
    contextual.  `decompositions` maps a mixed state name to a list of
    decompositions, each a list of (weight, pure state name) pairs.
    """
    decompositions = decompositions or {}
    pure_names = []
    mixed_names = []
    for name, rho in fragment.states.items():
        purity = float(np.trace(rho @ rho).real)
        (pure_names if abs(purity - 1.0) <= 1e-8 else mixed_names).append(name)
    for name in mixed_names:
        if name not in decompositions:
            raise ValueError(f"mixed state {name!r} needs at least one decomposition")
    for name, decs in decompositions.items():
        for dec in decs:
            total = sum(p for p, _ in dec)
            recon = sum(p * fragment.states[s] for p, s in dec)
            if abs(total - 1.0) > tol or float(np.abs(recon - fragment.states[name]).max()) > tol:
                raise ValueError(f"invalid decomposition of {name!r}")
            for _, s in dec:
                if s not in pure_names:
                    raise ValueError(f"decomposition of {name!r} uses non-pure state {s!r}")

    space = OnticSpace("finite", tuple(pure_names))
    delta = {}
    for name in pure_names:
        delta[name] = [FiniteMeasure(FiniteDistribution({name: 1.0}))]
    for name in fragment.states:
        if name in decompositions:
            measures = delta.get(name, [])
            for dec in decompositions[name]:
                weights = {}
                for p, s in dec:
                    weights[s] = weights.get(s, 0.0) + p
                measures.append(FiniteMeasure(FiniteDistribution(weights)))
            delta[name] = measures

    xi = {}
    for meas, povm in fragment.measurements.items():
        table = {
            lam: {
                label: float(np.trace(effect @ fragment.states[lam]).real)
                for label, effect in povm.outcomes
            }
            for lam in pure_names
        }
        xi[meas] = [FiniteResponse(table, povm.labels)]
    return OntologicalModel(
        space=space, delta=delta, xi=xi, fragment=fragment, name="beltrametti-bugajski"
    )


# ---------------------------------------------------------------------------
# Bell and ABCL interval models


def _check_basis_fragment(fragment: PMFragment, tol: float = 1e-8):
    for name, rho in fragment.states.items():
        purity = float(np.trace(rho @ rho).real)
        if abs(purity - 1.0) > tol:
            raise ValueError(f"state {name!r} is not pure (purity {purity})")
    for meas, povm in fragment.measurements.items():
        if len(povm.outcomes) != fragment.dim:
            raise ValueError(f"measurement {meas!r} is not a complete basis measurement")
        for label, effect in povm.outcomes:
            if abs(float(np.trace(effect).real) - 1.0) > tol or float(
                np.abs(effect @ effect - effect).max()
            ) > tol:
                raise ValueError(f"outcome {label!r} of {meas!r} is not a rank-1 projector")


def bell_model(fragment: PMFragment) -> OntologicalModel:
    """Deterministic interval model: the ontic state is a pure state
    plus a uniform [0,1] coordinate; a basis measurement divides the
    interval into consecutive half-open cells of exact Born length."""
    _check_basis_fragment(fragment)
    exact = exactify_fragment(fragment)
    labels = tuple(fragment.states)
    space = OnticSpace("interval", labels)
    one = Fraction(1)

    delta = {
        name: [IntervalMeasure({name: [(0, 1, one)]})] for name in fragment.states
    }
    xi = {}
    for meas in fragment.measurements:
        intervals = {}
        for lam in labels:
            row = exact.born(lam, meas)
            segs = []
            acc = Fraction(0)
            for label, prob in row:
                segs.append((acc, acc + prob, label))
                acc += prob
            intervals[lam] = segs
        xi[meas] = [IntervalResponse(intervals, fragment.measurements[meas].labels)]
    model = OntologicalModel(space=space, delta=delta, xi=xi, fragment=fragment, name="bell")
    return model


def abcl_parameters(fragment: PMFragment, a: np.ndarray, b: np.ndarray) -> dict:
    """Resolve the overlap slice parameters for an ABCL construction.

    Returns the amplitude bound |<a|b>|/d, its squared (interval-length)
    counterpart, and the exact slice height actually used, which is the
    squared bound clamped by the smallest leading-cell length so the
    slice provably sits inside every measurement's first cell.
    """
    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    d = fragment.dim
    ip = abs(np.vdot(a, b))
    if ip <= 1e-12:
        raise ValueError("the two states must be nonorthogonal")
    name_a = _find_state(fragment, a)
    name_b = _find_state(fragment, b)
    exact = exactify_fragment(fragment)
    eps_amp = ip / d
    eps = Fraction(float(eps_amp * eps_amp))
    min_lead = None
    for meas in fragment.measurements:
        sigma = _abcl_permutation(exact, meas, name_a, name_b)
        row_a = dict(exact.born(name_a, meas))
        row_b = dict(exact.born(name_b, meas))
        lead = min(row_a[sigma[0]], row_b[sigma[0]])
        min_lead = lead if min_lead is None else min(min_lead, lead)
        eps = min(eps, lead)
    if eps <= 0:
        raise ValueError("degenerate fragment: a leading cell has zero length")
    return {
        "state_a": name_a,
        "state_b": name_b,
        "eps_amplitude": eps_amp,
        "eps_squared": float(eps_amp * eps_amp),
        "eps_safe": eps,
        "min_leading_cell": min_lead,
    }


def _find_state(fragment: PMFragment, vec: np.ndarray) -> str:
    target = projector(vec)
    for name, rho in fragment.states.items():
        if float(np.abs(rho - target).max()) <= 1e-8:
            return name
    raise ValueError("vector does not match any fragment state")


def _abcl_permutation(exact, meas: str, name_a: str, name_b: str):
    """Outcome labels sorted by decreasing min Born weight of the two
    target states; ties break on the original outcome position."""
    row_a = exact.born(name_a, meas)
    row_b = exact.born(name_b, meas)
    scored = [
        (min(pa, pb), idx, label)
        for idx, ((label, pa), (_, pb)) in enumerate(zip(row_a, row_b))
    ]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [label for _, _, label in scored]


def abcl_model(fragment: PMFragment, a: np.ndarray, b: np.ndarray) -> OntologicalModel:
    """Bell-model variant in which the two given nonorthogonal states
    share an overlap slice.

    Each measurement's cells are laid out in an order that puts the
    outcome friendliest to both target states first; both states then
    place a common conditional measure (uniform over the two labels) on
    the slice [0, eps_safe], which every first cell contains, so the
    model reproduces the Born probabilities exactly while the two
    measures overlap with mass eps_safe.
    """
    _check_basis_fragment(fragment)
    params = abcl_parameters(fragment, a, b)
    name_a, name_b = params["state_a"], params["state_b"]
    eps = params["eps_safe"]
    exact = exactify_fragment(fragment)
    labels = tuple(fragment.states)
    space = OnticSpace("interval", labels)
    one = Fraction(1)
    half = Fraction(1, 2)

    delta = {}
    for name in fragment.states:
        if name == name_a or name == name_b:
            other = name_b if name == name_a else name_a
            delta[name] = [
                IntervalMeasure(
                    {
                        name: [(0, eps, half), (eps, 1, one)],
                        other: [(0, eps, half)],
                    }
                )
            ]
        else:
            delta[name] = [IntervalMeasure({name: [(0, 1, one)]})]

    xi = {}
    for meas in fragment.measurements:
        order = _abcl_permutation(exact, meas, name_a, name_b)
        intervals = {}
        for lam in labels:
            row = dict(exact.born(lam, meas))
            segs = []
            acc = Fraction(0)
            for label in order:
                prob = row[label]
                segs.append((acc, acc + prob, label))
                acc += prob
            intervals[lam] = segs
        xi[meas] = [IntervalResponse(intervals, fragment.measurements[meas].labels)]
    model = OntologicalModel(space=space, delta=delta, xi=xi, fragment=fragment, name="abcl")
    model.meta.update(params)
    return model


# ---------------------------------------------------------------------------
# Patra-Pironio-Massar natural model


def ppm_natural_model(d: int) -> OntologicalModel:
    """Ball-and-boxes model for the uniform-superposition family.

    The fragment holds the uniform-superposition state, the d states
    that omit one basis direction each, and the computational basis
    measurement.  State matrices carry literal 1/d and 1/(d-1) entries
    so Born values equal the stored measure weights bit for bit.
    """
    if d < 3:
        raise ValueError(f"need dimension >= 3, got {d}")
    states = {"psi": np.full((d, d), 1.0 / d, dtype=complex)}
    for j in range(d):
        m = np.full((d, d), 1.0 / (d - 1), dtype=complex)
        m[j, :] = 0.0
        m[:, j] = 0.0
        states[f"phi_{j}"] = m
    outcomes = []
    for k in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[k, k] = 1.0
        outcomes.append((str(k), e))
    fragment = PMFragment(dim=d, states=states, measurements={"M": Povm(tuple(outcomes))})

    labels = tuple(str(k) for k in range(d))
    space = OnticSpace("finite", labels)
    delta = {"psi": [FiniteMeasure(FiniteDistribution({l: 1.0 / d for l in labels}))]}
    for j in range(d):
        delta[f"phi_{j}"] = [
            FiniteMeasure(
                FiniteDistribution({l: 1.0 / (d - 1) for l in labels if l != str(j)})
            )
        ]
    table = {l: {o: 1.0 if o == l else 0.0 for o in labels} for l in labels}
    xi = {"M": [FiniteResponse(table, labels)]}
    return OntologicalModel(space=space, delta=delta, xi=xi, fragment=fragment, name="ppm")


# ---------------------------------------------------------------------------
# Kochen-Specker qubit model (continuous; verified by quadrature)


@dataclass(frozen=True)
class BlochVector:
    """Unit vector on the Bloch sphere."""

    components: tuple

    def __post_init__(self):
        v = np.asarray(self.components, dtype=float).reshape(3)
        if abs(float(np.linalg.norm(v)) - 1.0) > 1e-12:
            raise ValueError(f"Bloch vector has norm {np.linalg.norm(v)}, not 1")
        object.__setattr__(self, "components", tuple(float(x) for x in v))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.components)


def bloch_to_state(v) -> np.ndarray:
    """Qubit state vector cos(t/2)|0> + e^{i p} sin(t/2)|1> for the
    Bloch direction (sin t cos p, sin t sin p, cos t)."""
    v = np.asarray(v.components if isinstance(v, BlochVector) else v, dtype=float)
    theta = float(np.arccos(np.clip(v[2], -1.0, 1.0)))
    phi = float(np.arctan2(v[1], v[0]))
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], dtype=complex)


def state_to_bloch(psi: np.ndarray) -> BlochVector:
    psi = np.asarray(psi, dtype=complex).reshape(2)
    rho = projector(psi)
    x = float((rho[0, 1] + rho[1, 0]).real)
    y = float((1j * (rho[0, 1] - rho[1, 0])).real)
    z = float((rho[0, 0] - rho[1, 1]).real)
    v = np.array([x, y, z])
    return BlochVector(tuple(v / np.linalg.norm(v)))


def _as_bloch_array(v) -> np.ndarray:
    if isinstance(v, BlochVector):
        return v.array
    v = np.asarray(v, dtype=float).reshape(3)
    if abs(float(np.linalg.norm(v)) - 1.0) > 1e-12:
        raise ValueError("expected a unit Bloch vector")
    return v


def _rotation_to_pole(v: np.ndarray) -> np.ndarray:
    z = np.array([0.0, 0.0, 1.0])
    c = float(np.dot(v, z))
    if c > 1 - 1e-14:
        return np.eye(3)
    if c < -1 + 1e-14:
        return np.diag([1.0, -1.0, -1.0])
    ax = np.cross(v, z)
    ax = ax / np.linalg.norm(ax)
    ang = np.arccos(np.clip(c, -1.0, 1.0))
    k = np.array([[0, -ax[2], ax[1]], [ax[2], 0, -ax[0]], [-ax[1], ax[0], 0]])
    return np.eye(3) + np.sin(ang) * k + (1 - np.cos(ang)) * (k @ k)


def _split_gauss(f, kink: float, nodes: int) -> float:
    """Integrate f over [0,1] with Gauss-Legendre panels on [0,kink] and
    [kink,1], substituting u = end -/+ (len)*s^2 to absorb the
    square-root behavior at the interior kink."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    s = (x + 1) / 2
    ws = w / 2
    total = 0.0
    for lo, hi, at_hi in ((0.0, kink, True), (kink, 1.0, False)):
        length = hi - lo
        if length < 1e-15:
            continue
        if at_hi:
            u = hi - length * s**2
        else:
            u = lo + length * s**2
        jac = 2 * length * s
        total += float(np.sum(ws * jac * np.array([f(float(ui)) for ui in u])))
    return total


def _arc_length(u: float, f: np.ndarray) -> float:
    """Angular measure of {az : f . lambda(u, az) > 0} at height u."""
    rho = float(np.hypot(f[0], f[1]))
    s = np.sqrt(max(0.0, 1.0 - u * u))
    if rho * s < 1e-300:
        return 2 * np.pi if u * f[2] > 0 else 0.0
    t = u * f[2] / (rho * s)
    if t >= 1.0:
        return 2 * np.pi
    if t <= -1.0:
        return 0.0
    return 2 * float(np.arccos(-t))


def _arc_linear_integral(u: float, g: np.ndarray) -> float:
    """Integral of max(g . lambda, 0) over az at height u."""
    rho = float(np.hypot(g[0], g[1]))
    s = np.sqrt(max(0.0, 1.0 - u * u))
    k = rho * s
    c = u * g[2]
    if k < 1e-300:
        return 2 * np.pi * c if c > 0 else 0.0
    t = c / k
    if t >= 1.0:
        return 2 * np.pi * c
    if t <= -1.0:
        return 0.0
    w = float(np.arccos(-t))
    return 2 * k * np.sin(w) + 2 * w * c


def ks_born_quadrature(psi, phi, method: str = "gauss", nodes: int = 200, seed: int = 0) -> float:
    """Outcome probability of the phi direction on a psi preparation in
    the cosine-density hemisphere model, by numerical integration.

    Methods: "gauss" reduces the azimuthal integral to an exact arc
    length and applies split Gauss-Legendre in the polar coordinate
    (accurate to ~1e-10); "product" is a plain two-dimensional
    Gauss-Legendre product rule on the discontinuous integrand (slow to
    converge, kept for comparison); "mc" is Monte Carlo.
    """
    psi_v = _as_bloch_array(psi)
    phi_v = _as_bloch_array(phi)
    if method == "gauss":
        f = _rotation_to_pole(psi_v) @ phi_v
        kink = float(np.hypot(f[0], f[1]))
        return _split_gauss(lambda u: u * _arc_length(u, f), kink, nodes) / np.pi
    if method == "product":
        return _ks_product_rule(psi_v, phi_v, max(nodes, 256))
    if method == "mc":
        return ks_born_mc(psi_v, phi_v, seed=seed)[0]
    raise ValueError(f"unknown quadrature method {method!r}")


def _ks_product_rule(psi: np.ndarray, phi: np.ndarray, n: int) -> float:
    x, w = np.polynomial.legendre.leggauss(n)
    th = (x + 1) * (np.pi / 2)
    wth = w * (np.pi / 2)
    az = x * np.pi
    waz = w * np.pi
    tt, aa = np.meshgrid(th, az, indexing="ij")
    ww = np.outer(wth, waz)
    lam = np.stack([np.sin(tt) * np.cos(aa), np.sin(tt) * np.sin(aa), np.cos(tt)])
    dpsi = np.einsum("i,ijk->jk", psi, lam)
    dphi = np.einsum("i,ijk->jk", phi, lam)
    integrand = (dpsi > 0) * dpsi * (dphi > 0) * np.sin(tt) / np.pi
    return float(np.sum(ww * integrand))


def ks_born_mc(psi, phi, n: int = 200_000, seed: int = 0):
    """Monte Carlo estimate; returns (value, standard error)."""
    psi_v = _as_bloch_array(psi)
    phi_v = _as_bloch_array(phi)
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    dpsi = pts @ psi_v
    dphi = pts @ phi_v
    # sphere area 4*pi; density (1/pi) H(psi.lam) psi.lam
    samples = 4 * np.pi * (dpsi > 0) * dpsi * (dphi > 0) / np.pi
    value = float(np.mean(samples))
    stderr = float(np.std(samples, ddof=1) / np.sqrt(n))
    return value, stderr


def ks_me_integrals(psi, phi, nodes: int = 200):
    """Two routes to the same probability: the full-sphere integral and
    the integral restricted to the support hemisphere of the phi
    preparation.  Their agreement witnesses that all of the outcome
    probability is carried by the overlap region."""
    psi_v = _as_bloch_array(psi)
    phi_v = _as_bloch_array(phi)
    full = ks_born_quadrature(psi_v, phi_v, method="gauss", nodes=nodes)
    g = _rotation_to_pole(phi_v) @ psi_v
    kink = float(np.hypot(g[0], g[1]))
    restricted = _split_gauss(lambda u: _arc_linear_integral(u, g), kink, nodes) / np.pi
    return full, restricted


class KochenSpeckerModel:
    """Handle for the continuous qubit model with cosine densities and
    hemisphere-deterministic responses.

    The ontic space is the Bloch sphere, so this object exposes the
    density, the response rule, and quadrature-based verification
    rather than an enumerated model.
    """

    name = "kochen-specker"

    def density(self, psi, lam) -> float:
        d = float(np.dot(_as_bloch_array(psi), _as_bloch_array(lam)))
        return d / np.pi if d > 0 else 0.0

    def response(self, phi, lam) -> float:
        return 1.0 if float(np.dot(_as_bloch_array(phi), _as_bloch_array(lam))) > 0 else 0.0

    def born(self, psi, phi, method: str = "gauss", nodes: int = 200) -> float:
        return ks_born_quadrature(psi, phi, method=method, nodes=nodes)

    def me_integrals(self, psi, phi, nodes: int = 200):
        return ks_me_integrals(psi, phi, nodes=nodes)

    def analytic_classification(self) -> dict:
        """Known structural facts: every pair of nonorthogonal
        directions has overlapping hemispheres of positive joint mass,
        and no direction owns an exclusive region."""
        return {
            "psi_ontic": False,
            "pairwise_epistemic": True,
            "sometimes_psi_ontic": False,
            "maximally_psi_epistemic": True,
        }


def kochen_specker_qubit() -> KochenSpeckerModel:
    return KochenSpeckerModel()


# ---------------------------------------------------------------------------
# Fragment helpers for seeded sweeps


def basis_fragment(dim: int, states: dict, bases: dict) -> PMFragment:
    """Fragment from pure state vectors and orthonormal bases (each
    basis a list of vectors)."""
    state_mats = {name: projector(v) for name, v in states.items()}
    measurements = {}
    for name, vecs in bases.items():
        outcomes = tuple((f"{name}:{j}", projector(v)) for j, v in enumerate(vecs))
        measurements[name] = Povm(outcomes)
    return PMFragment(dim=dim, states=state_mats, measurements=measurements)


def random_basis_fragment(
    dim: int, n_states: int, n_bases: int, rng, include_states: dict | None = None
) -> PMFragment:
    """Seeded fragment of random pure states and Haar-random bases.

    `include_states` entries (name -> vector) are added verbatim and
    count toward n_states.
    """
    states = dict(include_states or {})
    idx = 0
    while len(states) < n_states:
        states[f"s{idx}"] = random_state_vector(dim, rng)
        idx += 1
    bases = {f"B{k}": random_basis(dim, rng) for k in range(n_bases)}
    return basis_fragment(dim, states, bases)
