"""Ontological models of PM fragments: representation, verification,
classification, and composition.

Two kinds of ontic space are supported.  Finite spaces enumerate their
labels; epistemic states are finite distributions and responses are
per-label outcome tables.  Interval-augmented spaces attach a unit
interval to each label; epistemic states are per-label piecewise
constant densities and responses are per-label outcome indicators on
subintervals.  All interval arithmetic is exact (rational breakpoints
and densities), so verification of interval models carries no
quadrature error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import linalg
from .distributions import ZERO_WEIGHT, FiniteDistribution
from .exact import exactify_fragment
from .linalg import PMFragment, Povm, born_rule
from .report import Report, make_check

__all__ = [
    "OnticSpace",
    "FiniteMeasure",
    "IntervalMeasure",
    "FiniteResponse",
    "IntervalResponse",
    "OntologicalModel",
    "predicted_prob",
    "verify_reproduces",
    "verify_preclusions",
    "measure_distance",
    "measures_overlap",
    "ontologically_distinct",
    "classify",
    "is_maximally_psi_epistemic",
    "detect_preparation_contextuality",
    "cosupport",
    "ks_analysis",
    "is_ks_noncontextual",
    "mix_models",
    "fragment_product",
    "direct_product_model",
    "condition_bell_local_model",
    "verify_bell_conditioning",
    "wpip_composite",
    "discretize_model",
    "model_to_json",
    "model_from_json",
]

# Distinctness verdicts ("D = 1") are decided via overlap <= this
# threshold rather than floating equality with 1.
ZERO_THRESHOLD = 1e-12

# Tolerance for matching a measurement effect against a state projector
# or against an effect from another context.
EFFECT_MATCH_TOL = 1e-8


@dataclass(frozen=True)
class OnticSpace:
    """Either a finite label set or labels x [0,1]."""

    kind: str  # "finite" | "interval"
    labels: tuple

    def __post_init__(self):
        if self.kind not in ("finite", "interval"):
            raise ValueError(f"unknown ontic space kind {self.kind!r}")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("ontic labels must be distinct")
        object.__setattr__(self, "labels", tuple(self.labels))


class FiniteMeasure:
    """Epistemic state on a finite ontic space."""

    kind = "finite"

    def __init__(self, dist: FiniteDistribution):
        if not isinstance(dist, FiniteDistribution):
            dist = FiniteDistribution(dict(dist))
        self.dist = dist

    def mass(self) -> float:
        return sum(self.dist.weights.values())

    def support(self):
        return self.dist.support

    def __call__(self, label) -> float:
        return self.dist(label)

    def __repr__(self):
        return f"FiniteMeasure({self.dist.weights!r})"


class IntervalMeasure:
    """Per-label piecewise-constant density on [0,1], exact rationals.

    pieces maps label -> tuple of (lo, hi, density) with Fraction
    entries, disjoint and sorted within each label.
    """

    kind = "interval"

    def __init__(self, pieces: dict):
        clean = {}
        for label, segs in pieces.items():
            out = []
            for lo, hi, dens in segs:
                lo, hi, dens = Fraction(lo), Fraction(hi), Fraction(dens)
                if dens < 0:
                    raise ValueError(f"negative density {dens} at label {label!r}")
                if hi <= lo or dens == 0:
                    continue
                out.append((lo, hi, dens))
            out.sort()
            for (a, b, _), (c, _, _) in zip(out, out[1:]):
                if c < b:
                    raise ValueError(f"overlapping density pieces at label {label!r}")
            if out:
                clean[label] = tuple(out)
        self.pieces = clean
        total = self.exact_mass()
        if abs(float(total) - 1.0) > 1e-12:
            raise ValueError(f"measure mass {float(total)} is not 1")

    def exact_mass(self) -> Fraction:
        return sum(
            (dens * (hi - lo) for segs in self.pieces.values() for lo, hi, dens in segs),
            Fraction(0),
        )

    def mass(self) -> float:
        return float(self.exact_mass())

    def support(self):
        return tuple(self.pieces)

    def density_at(self, label, point: Fraction) -> Fraction:
        for lo, hi, dens in self.pieces.get(label, ()):
            if lo <= point < hi:
                return dens
        return Fraction(0)

    def __repr__(self):
        return f"IntervalMeasure(labels={list(self.pieces)!r})"


class FiniteResponse:
    """Outcome table Pr(outcome | label) on a finite ontic space."""

    kind = "finite"

    def __init__(self, table: dict, outcomes=None):
        self.table = {label: dict(row) for label, row in table.items()}
        if outcomes is None:
            outcomes = sorted({o for row in self.table.values() for o in row}, key=str)
        self.outcomes = tuple(outcomes)

    def prob(self, outcome, label) -> float:
        return float(self.table.get(label, {}).get(outcome, 0.0))

    def row_sums(self):
        return {label: sum(row.values()) for label, row in self.table.items()}

    def __repr__(self):
        return f"FiniteResponse(labels={list(self.table)!r})"


class IntervalResponse:
    """Per-label outcome indicators on subintervals of [0,1].

    intervals maps label -> tuple of (lo, hi, outcome); the intervals
    are half-open [lo, hi), disjoint, and ordered.  The point 1 belongs
    to the final interval of its label.
    """

    kind = "interval"

    def __init__(self, intervals: dict, outcomes=None):
        clean = {}
        for label, segs in intervals.items():
            out = []
            for lo, hi, outcome in segs:
                lo, hi = Fraction(lo), Fraction(hi)
                if hi <= lo:
                    continue
                out.append((lo, hi, outcome))
            out.sort(key=lambda t: (t[0], t[1]))
            for (a, b, _), (c, _, _) in zip(out, out[1:]):
                if c < b:
                    raise ValueError(f"overlapping response intervals at label {label!r}")
            clean[label] = tuple(out)
        self.intervals = clean
        if outcomes is None:
            outcomes = sorted({o for segs in clean.values() for _, _, o in segs}, key=str)
        self.outcomes = tuple(outcomes)

    def outcome_at(self, label, point: Fraction):
        segs = self.intervals.get(label, ())
        for lo, hi, outcome in segs:
            if lo <= point < hi:
                return outcome
        if segs and point == segs[-1][1]:
            return segs[-1][2]
        return None

    def __repr__(self):
        return f"IntervalResponse(labels={list(self.intervals)!r})"


@dataclass
class OntologicalModel:
    """Ontic space plus state measures (delta) and response sets (xi).

    delta maps state name -> nonempty list of epistemic states; xi maps
    measurement name -> nonempty list of response functions.  Values are
    treated as immutable after construction.
    """

    space: OnticSpace
    delta: dict
    xi: dict
    fragment: PMFragment | None = None
    name: str = "model"
    meta: dict = field(default_factory=dict)
    _exact_fragment: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        label_set = set(self.space.labels)
        for state, measures in self.delta.items():
            if not measures:
                raise ValueError(f"empty measure set for state {state!r}")
            for mu in measures:
                self._check_member(mu.kind, set(mu.support()), label_set, f"state {state!r}")
        for meas, responses in self.xi.items():
            if not responses:
                raise ValueError(f"empty response set for measurement {meas!r}")
            for pr in responses:
                support = set(pr.table if pr.kind == "finite" else pr.intervals)
                self._check_member(pr.kind, support, label_set, f"measurement {meas!r}")

    def _check_member(self, kind, support, label_set, what):
        expected = "finite" if self.space.kind == "finite" else "interval"
        if kind != expected:
            raise ValueError(f"{what}: {kind} object on {self.space.kind} space")
        stray = support - label_set
        if stray:
            raise ValueError(f"{what}: labels {sorted(stray, key=str)!r} outside the ontic space")

    def exact_fragment(self):
        if self._exact_fragment is None and self.fragment is not None:
            object.__setattr__(self, "_exact_fragment", exactify_fragment(self.fragment))
        return self._exact_fragment

    def measures(self, state):
        return self.delta[state]

    def responses(self, measurement):
        return self.xi[measurement]


# ---------------------------------------------------------------------------
# Prediction and verification


def _predicted_exact(mu: IntervalMeasure, pr: IntervalResponse, outcome) -> Fraction:
    total = Fraction(0)
    for label, segs in mu.pieces.items():
        rsegs = [s for s in pr.intervals.get(label, ()) if s[2] == outcome]
        if not rsegs:
            continue
        for lo, hi, dens in segs:
            for rlo, rhi, _ in rsegs:
                a, b = max(lo, rlo), min(hi, rhi)
                if b > a:
                    total += dens * (b - a)
    return total


def predicted_prob(model: OntologicalModel, mu, pr, outcome) -> float:
    """Model probability of `outcome`: the response averaged over mu."""
    if mu.kind != pr.kind:
        raise ValueError(f"measure kind {mu.kind} does not match response kind {pr.kind}")
    expected = "finite" if model.space.kind == "finite" else "interval"
    if mu.kind != expected:
        raise ValueError(f"{mu.kind} objects on a {model.space.kind} space")
    if mu.kind == "finite":
        return sum(pr.prob(outcome, label) * w for label, w in mu.dist.weights.items())
    return float(_predicted_exact(mu, pr, outcome))


def _iter_checks(model: OntologicalModel):
    """Yield (state, i_mu, mu, meas, k_pr, pr, outcome_label, effect)."""
    frag = model.fragment
    if frag is None:
        raise ValueError("model has no fragment attached")
    for state in frag.states:
        if state not in model.delta:
            raise ValueError(f"model has no measures for fragment state {state!r}")
        for meas, povm in frag.measurements.items():
            if meas not in model.xi:
                raise ValueError(f"model has no responses for measurement {meas!r}")
            for i, mu in enumerate(model.delta[state]):
                for k, pr in enumerate(model.xi[meas]):
                    for label, effect in povm.outcomes:
                        yield state, i, mu, meas, k, pr, label, effect


def verify_reproduces(model: OntologicalModel, tol: float = 1e-10) -> Report:
    """Compare model predictions against the Born probabilities.

    For interval models both sides are evaluated in exact rational
    arithmetic (against the exactified fragment), so a correct
    construction shows residuals that are exactly zero.
    """
    report = Report(name=f"verify_reproduces[{model.name}]", passed=True, tol=tol)
    exact = model.exact_fragment() if model.space.kind == "interval" else None
    born_rows = {}
    for state, i, mu, meas, k, pr, label, effect in _iter_checks(model):
        cid = f"{state}|mu{i}|{meas}|pr{k}|{label}"
        if exact is not None:
            if (state, meas) not in born_rows:
                born_rows[(state, meas)] = dict(exact.born(state, meas))
            expected_frac = born_rows[(state, meas)][label]
            predicted_frac = _predicted_exact(mu, pr, label)
            residual = float(abs(predicted_frac - expected_frac))
            report.checks.append(
                _check_with_residual(cid, float(expected_frac), float(predicted_frac), residual, tol)
            )
        else:
            expected = born_rule(model.fragment.states[state], effect)
            predicted = predicted_prob(model, mu, pr, label)
            report.checks.append(make_check(cid, expected, predicted, tol))
    report.passed = all(c.passed for c in report.checks)
    return report


def _check_with_residual(cid, expected, predicted, residual, tol):
    from .report import Check

    return Check(cid, expected, predicted, residual, residual <= tol)


def verify_preclusions(model: OntologicalModel, tol: float = 1e-10) -> Report:
    """Check only the probability-zero predictions: Born-null outcomes
    must be assigned (near-)zero probability by the model."""
    report = Report(name=f"verify_preclusions[{model.name}]", passed=True, tol=tol)
    exact = model.exact_fragment() if model.space.kind == "interval" else None
    born_rows = {}
    for state, i, mu, meas, k, pr, label, effect in _iter_checks(model):
        if exact is not None:
            if (state, meas) not in born_rows:
                born_rows[(state, meas)] = dict(exact.born(state, meas))
            expected = float(born_rows[(state, meas)][label])
            predicted = float(_predicted_exact(mu, pr, label))
        else:
            expected = born_rule(model.fragment.states[state], effect)
            predicted = predicted_prob(model, mu, pr, label)
        if abs(expected) > tol:
            continue
        cid = f"{state}|mu{i}|{meas}|pr{k}|{label}"
        report.checks.append(make_check(cid, 0.0, predicted, tol))
    report.passed = all(c.passed for c in report.checks)
    return report


# ---------------------------------------------------------------------------
# Measure geometry (distance / overlap), uniform over both space kinds


def _merged_breakpoints(measures, label):
    points = set()
    for m in measures:
        for lo, hi, _ in m.pieces.get(label, ()):
            points.add(lo)
            points.add(hi)
    return sorted(points)


def measure_distance(a, b) -> float:
    """Variational distance between two epistemic states."""
    return float(_measure_distance_exact(a, b))


def _measure_distance_exact(a, b):
    if a.kind != b.kind:
        raise ValueError("cannot compare measures of different kinds")
    if a.kind == "finite":
        labels = set(a.dist.weights) | set(b.dist.weights)
        return 0.5 * sum(abs(a(l) - b(l)) for l in labels)
    total = Fraction(0)
    for label in set(a.pieces) | set(b.pieces):
        pts = _merged_breakpoints([a, b], label)
        for lo, hi in zip(pts, pts[1:]):
            total += abs(a.density_at(label, lo) - b.density_at(label, lo)) * (hi - lo)
    return total / 2


def measures_overlap(measures) -> float:
    """n-way overlap: total pointwise-minimum mass."""
    return float(measures_overlap_exact(measures))


def measures_overlap_exact(measures):
    measures = list(measures)
    if not measures:
        raise ValueError("need at least one measure")
    if measures[0].kind == "finite":
        labels = set()
        for m in measures:
            labels |= set(m.dist.weights)
        return sum(min(m(l) for m in measures) for l in labels)
    labels = set()
    for m in measures:
        labels |= set(m.pieces)
    total = Fraction(0)
    for label in labels:
        pts = _merged_breakpoints(measures, label)
        for lo, hi in zip(pts, pts[1:]):
            total += min(m.density_at(label, lo) for m in measures) * (hi - lo)
    return total


# ---------------------------------------------------------------------------
# Classifiers


def _pure_state_names(fragment: PMFragment, tol: float = 1e-10):
    names = []
    for name, rho in fragment.states.items():
        purity = float(np.trace(rho @ rho).real)
        if abs(purity - 1.0) <= max(tol, 1e-8):
            names.append(name)
    return names


def ontologically_distinct(
    model: OntologicalModel, state_a: str, state_b: str, zero_threshold: float = ZERO_THRESHOLD
) -> bool:
    """True iff every cross pair of measures has zero overlap (D = 1)."""
    for mu in model.delta[state_a]:
        for nu in model.delta[state_b]:
            if measures_overlap([mu, nu]) > zero_threshold:
                return False
    return True


def _exclusive_region_exists(model, state, other_pure):
    """Does `state` own an ontic region of positive measure that every
    other pure state's measures assign zero?"""
    others = [nu for name in other_pure for nu in model.delta[name]]
    if model.space.kind == "finite":
        for mu in model.delta[state]:
            for label in mu.support():
                if all(nu(label) <= ZERO_WEIGHT for nu in others):
                    return True
        return False
    for mu in model.delta[state]:
        for label in mu.pieces:
            relevant = [nu for nu in others if label in nu.pieces]
            pts = _merged_breakpoints([mu] + relevant, label)
            for lo, hi in zip(pts, pts[1:]):
                if mu.density_at(label, lo) > 0 and all(
                    nu.density_at(label, lo) == 0 for nu in relevant
                ):
                    return True
    return False


def classify(model: OntologicalModel, zero_threshold: float = ZERO_THRESHOLD) -> dict:
    """Flags {psi_ontic, pairwise_epistemic, sometimes_psi_ontic}.

    psi_ontic: every pair of distinct pure states is ontologically
    distinct.  pairwise_epistemic: every nonorthogonal pure pair is
    ontologically indistinct.  sometimes_psi_ontic: every pure state
    has an exclusive ontic region of positive measure.
    """
    frag = model.fragment
    if frag is None:
        raise ValueError("model has no fragment attached")
    pure = _pure_state_names(frag)
    psi_ontic = True
    pairwise_epistemic = True
    for i, a in enumerate(pure):
        for b in pure[i + 1 :]:
            distinct = ontologically_distinct(model, a, b, zero_threshold)
            if not distinct:
                psi_ontic = False
            overlap_q = born_rule(frag.states[a], frag.states[b])
            if overlap_q > zero_threshold and distinct:
                pairwise_epistemic = False
    sometimes = all(
        _exclusive_region_exists(model, s, [t for t in pure if t != s]) for s in pure
    )
    return {
        "psi_ontic": psi_ontic,
        "pairwise_epistemic": pairwise_epistemic,
        "sometimes_psi_ontic": sometimes,
    }


def _measurements_containing(fragment: PMFragment, projector_matrix):
    """(measurement name, outcome label) pairs whose effect equals the
    given projector within EFFECT_MATCH_TOL."""
    hits = []
    for meas, povm in fragment.measurements.items():
        for label, effect in povm.outcomes:
            if effect.shape == projector_matrix.shape and (
                float(np.abs(effect - projector_matrix).max()) <= EFFECT_MATCH_TOL
            ):
                hits.append((meas, label))
    return hits


def _restricted_prediction(mu, nu, pr, outcome):
    """Prediction of `outcome` with mu restricted to the support of nu."""
    if mu.kind == "finite":
        supp = set(nu.support())
        return sum(
            pr.prob(outcome, label) * w
            for label, w in mu.dist.weights.items()
            if label in supp
        )
    total = Fraction(0)
    for label, segs in mu.pieces.items():
        if label not in nu.pieces:
            continue
        rsegs = [s for s in pr.intervals.get(label, ()) if s[2] == outcome]
        if not rsegs:
            continue
        for lo, hi, dens in segs:
            for rlo, rhi, _ in rsegs:
                for slo, shi, sdens in nu.pieces[label]:
                    if sdens <= 0:
                        continue
                    a = max(lo, rlo, slo)
                    b = min(hi, rhi, shi)
                    if b > a:
                        total += dens * (b - a)
    return float(total)


def is_maximally_psi_epistemic(model: OntologicalModel, tol: float = 1e-10) -> Report:
    """Check that, for every pure pair (psi, phi), the full probability
    of the phi outcome on a psi preparation is carried by the support of
    phi's measures."""
    frag = model.fragment
    if frag is None:
        raise ValueError("model has no fragment attached")
    report = Report(name=f"maximally_psi_epistemic[{model.name}]", passed=True, tol=tol)
    pure = _pure_state_names(frag)
    for phi in pure:
        hits = _measurements_containing(frag, frag.states[phi])
        if not hits:
            raise ValueError(f"no measurement contains the projector onto {phi!r}")
        for psi in pure:
            if psi == phi:
                continue
            for i, mu in enumerate(model.delta[psi]):
                for j, nu in enumerate(model.delta[phi]):
                    for meas, label in hits:
                        for k, pr in enumerate(model.xi[meas]):
                            full = predicted_prob(model, mu, pr, label)
                            restricted = _restricted_prediction(mu, nu, pr, label)
                            cid = f"{psi}|mu{i}|{phi}|nu{j}|{meas}|pr{k}"
                            report.checks.append(make_check(cid, full, restricted, tol))
    report.passed = all(c.passed for c in report.checks)
    return report


def detect_preparation_contextuality(
    model: OntologicalModel, zero_threshold: float = ZERO_THRESHOLD
) -> list:
    """States whose measure sets contain at least two genuinely distinct
    measures (duplicates at distance <= zero_threshold collapse)."""
    contextual = []
    for state, measures in model.delta.items():
        distinct = []
        for mu in measures:
            if all(measure_distance(mu, seen) > zero_threshold for seen in distinct):
                distinct.append(mu)
        if len(distinct) > 1:
            contextual.append(state)
    return contextual


# ---------------------------------------------------------------------------
# Kochen-Specker style analysis (finite models)


def _require_finite(model: OntologicalModel, what: str):
    if model.space.kind != "finite":
        raise ValueError(f"{what} requires a finite model; use discretize_model first")


def _effect_groups(fragment: PMFragment):
    """Group (measurement, outcome label) pairs by matching effect matrix.

    Returns a list of (representative_effect, [(meas, label), ...]).
    """
    groups = []
    for meas, povm in fragment.measurements.items():
        for label, effect in povm.outcomes:
            for rep, members in groups:
                if effect.shape == rep.shape and float(np.abs(effect - rep).max()) <= EFFECT_MATCH_TOL:
                    members.append((meas, label))
                    break
            else:
                groups.append((effect, [(meas, label)]))
    return groups


def cosupport(model: OntologicalModel, outcome_label: str, tol: float = 1e-10) -> frozenset:
    """Ontic states that return the given outcome with certainty in
    every context (measurement and response) containing its effect."""
    _require_finite(model, "cosupport")
    frag = model.fragment
    if frag is None:
        raise ValueError("model has no fragment attached")
    effects = []
    for meas, povm in frag.measurements.items():
        for label, effect in povm.outcomes:
            if label == outcome_label:
                effects.append(effect)
    if not effects:
        raise KeyError(f"no measurement has an outcome labeled {outcome_label!r}")
    for other in effects[1:]:
        if float(np.abs(other - effects[0]).max()) > EFFECT_MATCH_TOL:
            raise ValueError(f"label {outcome_label!r} names different effects in different contexts")
    return _cosupport_of_effect(model, effects[0], tol)


def _cosupport_of_effect(model: OntologicalModel, effect, tol: float) -> frozenset:
    frag = model.fragment
    result = set(model.space.labels)
    for meas, povm in frag.measurements.items():
        for label, candidate in povm.outcomes:
            if candidate.shape != effect.shape or float(np.abs(candidate - effect).max()) > EFFECT_MATCH_TOL:
                continue
            for pr in model.xi[meas]:
                result &= {l for l in model.space.labels if pr.prob(label, l) >= 1.0 - tol}
    return frozenset(result)


def is_ks_noncontextual(model: OntologicalModel, tol: float = 1e-10) -> bool:
    """Outcome deterministic and measurement noncontextual."""
    flags = _ks_flags(model, tol)
    return flags["outcome_deterministic"] and flags["measurement_noncontextual"]


def _ks_flags(model: OntologicalModel, tol: float) -> dict:
    _require_finite(model, "KS analysis")
    deterministic = True
    for responses in model.xi.values():
        for pr in responses:
            for row in pr.table.values():
                for p in row.values():
                    if min(abs(p), abs(p - 1.0)) > tol:
                        deterministic = False
    noncontextual = True
    # each measurement must carry one distinct response
    for meas, responses in model.xi.items():
        distinct = []
        for pr in responses:
            if all(_response_diff(pr, seen, model.space.labels) > tol for seen in distinct):
                distinct.append(pr)
        if len(distinct) > 1:
            noncontextual = False
    # shared effects must respond identically across contexts
    if model.fragment is not None:
        for effect, members in _effect_groups(model.fragment):
            if len(members) < 2:
                continue
            rows = []
            for meas, label in members:
                for pr in model.xi[meas]:
                    rows.append({l: pr.prob(label, l) for l in model.space.labels})
            base = rows[0]
            for row in rows[1:]:
                if any(abs(base[l] - row[l]) > tol for l in model.space.labels):
                    noncontextual = False
    return {
        "outcome_deterministic": deterministic,
        "measurement_noncontextual": noncontextual,
    }


def _response_diff(pr_a: FiniteResponse, pr_b: FiniteResponse, labels) -> float:
    outcomes = set(pr_a.outcomes) | set(pr_b.outcomes)
    return max(
        (abs(pr_a.prob(o, l) - pr_b.prob(o, l)) for l in labels for o in outcomes),
        default=0.0,
    )


def ks_analysis(model: OntologicalModel, tol: float = 1e-10) -> Report:
    """KS-noncontextuality flags, cosupport characterization residuals,
    and (when the characterization holds) a measure-zero revision that
    is KS noncontextual.

    The revision excises, for every measurement, the labels outside the
    union of its outcomes' cosupports.
    """
    _require_finite(model, "ks_analysis")
    frag = model.fragment
    if frag is None:
        raise ValueError("model has no fragment attached")
    report = Report(name=f"ks_analysis[{model.name}]", passed=True, tol=tol)
    report.info.update(_ks_flags(model, tol))

    groups = _effect_groups(frag)
    cosupports = [(_cosupport_of_effect(model, effect, tol), effect, members) for effect, members in groups]

    # characterization residuals: model probability vs cosupport mass
    for gi, (cos, effect, members) in enumerate(cosupports):
        meas0, label0 = members[0]
        for state in frag.states:
            for i, mu in enumerate(model.delta[state]):
                cos_mass = sum(mu(l) for l in cos)
                for meas, label in members:
                    for k, pr in enumerate(model.xi[meas]):
                        predicted = predicted_prob(model, mu, pr, label)
                        cid = f"char|{state}|mu{i}|{meas}|pr{k}|{label}"
                        report.checks.append(make_check(cid, cos_mass, predicted, tol))
    report.passed = all(c.passed for c in report.checks)
    report.info["cosupports"] = {
        f"{members[0][0]}:{members[0][1]}": sorted(cos, key=str)
        for cos, _, members in cosupports
    }

    revision = None
    surviving = None
    if report.passed:
        surviving = set(model.space.labels)
        for meas, povm in frag.measurements.items():
            union = set()
            for cos, effect, members in cosupports:
                if any(m == meas for m, _ in members):
                    union |= cos
            surviving &= union
        revision = _restrict_model(model, surviving, tol)
    report.info["revision_labels"] = sorted(surviving, key=str) if revision is not None else None
    report.info["has_revision"] = revision is not None
    report.info["revision"] = revision
    return report


def _restrict_model(model: OntologicalModel, labels: set, tol: float) -> OntologicalModel:
    """Measure-zero revision: drop all ontic labels outside `labels`."""
    space = OnticSpace("finite", tuple(l for l in model.space.labels if l in labels))
    delta = {}
    for state, measures in model.delta.items():
        out = []
        for mu in measures:
            kept = {l: w for l, w in mu.dist.weights.items() if l in labels}
            total = sum(kept.values())
            if abs(total - 1.0) > tol:
                raise ValueError(
                    f"restriction removes mass {1.0 - total} from state {state!r}; not measure-zero"
                )
            if abs(total - 1.0) > 1e-13:
                kept = {l: w / total for l, w in kept.items()}
            out.append(FiniteMeasure(FiniteDistribution(kept)))
        delta[state] = out
    xi = {}
    for meas, responses in model.xi.items():
        distinct = []
        for pr in responses:
            restricted = FiniteResponse(
                {l: row for l, row in pr.table.items() if l in labels}, pr.outcomes
            )
            if all(_response_diff(restricted, seen, space.labels) > tol for seen in distinct):
                distinct.append(restricted)
        xi[meas] = distinct
    return OntologicalModel(
        space=space, delta=delta, xi=xi, fragment=model.fragment, name=f"{model.name}/revised"
    )


# ---------------------------------------------------------------------------
# Composition


def _tag_measure(mu, tag, weight):
    if mu.kind == "finite":
        return {(tag, l): weight * w for l, w in mu.dist.weights.items()}
    w = Fraction(weight)
    return {
        (tag, l): tuple((lo, hi, dens * w) for lo, hi, dens in segs)
        for l, segs in mu.pieces.items()
    }


def mix_models(p: float, model_a: OntologicalModel, model_b: OntologicalModel) -> OntologicalModel:
    """Convex mixture of two models of the same fragment.

    The ontic space is the disjoint (tagged) union; measures mix with
    weights p and 1-p; responses act as the factor responses on each
    summand.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"mixture weight must lie strictly inside (0,1), got {p}")
    if model_a.space.kind != model_b.space.kind:
        raise ValueError("cannot mix models over different space kinds")
    frag_a, frag_b = model_a.fragment, model_b.fragment
    if frag_a is None or frag_b is None:
        raise ValueError("both models need fragments attached")
    if set(frag_a.states) != set(frag_b.states) or set(frag_a.measurements) != set(
        frag_b.measurements
    ):
        raise ValueError("models must share a fragment (state and measurement names differ)")

    labels = tuple((1, l) for l in model_a.space.labels) + tuple(
        (2, l) for l in model_b.space.labels
    )
    space = OnticSpace(model_a.space.kind, labels)
    finite = model_a.space.kind == "finite"

    delta = {}
    for state in frag_a.states:
        out = []
        for mu1 in model_a.delta[state]:
            for mu2 in model_b.delta[state]:
                merged = {}
                merged.update(_tag_measure(mu1, 1, p))
                merged.update(_tag_measure(mu2, 2, 1.0 - p))
                out.append(
                    FiniteMeasure(FiniteDistribution(merged))
                    if finite
                    else IntervalMeasure(merged)
                )
        delta[state] = out

    xi = {}
    for meas in frag_a.measurements:
        out = []
        for pr1 in model_a.xi[meas]:
            for pr2 in model_b.xi[meas]:
                if finite:
                    table = {(1, l): row for l, row in pr1.table.items()}
                    table.update({(2, l): row for l, row in pr2.table.items()})
                    out.append(FiniteResponse(table, pr1.outcomes))
                else:
                    segs = {(1, l): s for l, s in pr1.intervals.items()}
                    segs.update({(2, l): s for l, s in pr2.intervals.items()})
                    out.append(IntervalResponse(segs, pr1.outcomes))
        xi[meas] = out

    return OntologicalModel(
        space=space,
        delta=delta,
        xi=xi,
        fragment=frag_a,
        name=f"mix({p:g},{model_a.name},{model_b.name})",
    )


def fragment_product(frag_a: PMFragment, frag_b: PMFragment) -> PMFragment:
    """Direct product fragment: product states and local product POVMs.

    States are named "a⊗b" and measurements "Ma⊗Mb" with outcome labels
    "la⊗lb".
    """
    states = {
        f"{a}⊗{b}": linalg.tensor_product(rho_a, rho_b)
        for a, rho_a in frag_a.states.items()
        for b, rho_b in frag_b.states.items()
    }
    measurements = {}
    for ma, povm_a in frag_a.measurements.items():
        for mb, povm_b in frag_b.measurements.items():
            outcomes = tuple(
                (f"{la}⊗{lb}", linalg.tensor_product(ea, eb))
                for la, ea in povm_a.outcomes
                for lb, eb in povm_b.outcomes
            )
            measurements[f"{ma}⊗{mb}"] = Povm(outcomes)
    return PMFragment(dim=frag_a.dim * frag_b.dim, states=states, measurements=measurements)


def direct_product_model(
    model_a: OntologicalModel, model_b: OntologicalModel
) -> OntologicalModel:
    """Model of the direct product fragment on the Cartesian ontic space
    with product measures and factorized responses."""
    _require_finite(model_a, "direct_product_model")
    _require_finite(model_b, "direct_product_model")
    frag_a, frag_b = model_a.fragment, model_b.fragment
    if frag_a is None or frag_b is None:
        raise ValueError("both models need fragments attached")
    frag = fragment_product(frag_a, frag_b)
    labels = tuple(
        (la, lb) for la in model_a.space.labels for lb in model_b.space.labels
    )
    space = OnticSpace("finite", labels)

    delta = {}
    for a in frag_a.states:
        for b in frag_b.states:
            out = []
            for mu_a in model_a.delta[a]:
                for mu_b in model_b.delta[b]:
                    weights = {
                        (la, lb): wa * wb
                        for la, wa in mu_a.dist.weights.items()
                        for lb, wb in mu_b.dist.weights.items()
                    }
                    out.append(FiniteMeasure(FiniteDistribution(weights)))
            delta[f"{a}⊗{b}"] = out

    xi = {}
    for ma in frag_a.measurements:
        for mb in frag_b.measurements:
            out = []
            for pr_a in model_a.xi[ma]:
                for pr_b in model_b.xi[mb]:
                    table = {}
                    for la in model_a.space.labels:
                        row_a = pr_a.table.get(la, {})
                        for lb in model_b.space.labels:
                            row_b = pr_b.table.get(lb, {})
                            table[(la, lb)] = {
                                f"{oa}⊗{ob}": pa * pb
                                for oa, pa in row_a.items()
                                for ob, pb in row_b.items()
                            }
                    out.append(FiniteResponse(table))
            xi[f"{ma}⊗{mb}"] = out

    return OntologicalModel(
        space=space,
        delta=delta,
        xi=xi,
        fragment=frag,
        name=f"product({model_a.name},{model_b.name})",
    )


def _marginal_a_response(product_model: OntologicalModel, meas_name: str, pr, tol=1e-10):
    """Recover Pr_A(E|M_A, la) from a factorized product response."""
    a_labels = sorted({la for la, _ in product_model.space.labels}, key=str)
    b_labels = sorted({lb for _, lb in product_model.space.labels}, key=str)
    a_outcomes = sorted({o.split("⊗")[0] for o in pr.outcomes})
    out = {}
    for la in a_labels:
        out[la] = {}
        for oa in a_outcomes:
            values = []
            for lb in b_labels:
                row = pr.table.get((la, lb), {})
                values.append(sum(p for o, p in row.items() if o.split("⊗")[0] == oa))
            if max(values) - min(values) > tol:
                raise ValueError(
                    f"responses for {meas_name!r} do not factorize (outcome {oa!r} at {la!r})"
                )
            out[la][oa] = values[0]
    return out


def condition_bell_local_model(
    product_model: OntologicalModel,
    joint_measure: FiniteMeasure,
    ma_name: str,
    e_label: str,
    tol: float = 1e-10,
) -> FiniteMeasure:
    """Conditional epistemic state on the product space given Alice's
    outcome: reweight by Pr_A(E|M_A, la) and renormalize.

    `ma_name` is the A-factor measurement name; the response is taken
    from any product measurement with that factor (responses must
    factorize).
    """
    _require_finite(product_model, "condition_bell_local_model")
    candidates = [m for m in product_model.xi if m.split("⊗")[0] == ma_name]
    if not candidates:
        raise KeyError(f"no product measurement has A-factor {ma_name!r}")
    meas = candidates[0]
    pr_a = _marginal_a_response(product_model, meas, product_model.xi[meas][0], tol)
    weights = {}
    norm = 0.0
    for (la, lb), w in joint_measure.dist.weights.items():
        p = pr_a[la].get(e_label, 0.0)
        if p * w > 0.0:
            weights[(la, lb)] = p * w
        norm += p * w
    if norm <= tol:
        raise ValueError(f"outcome {e_label!r} of {ma_name!r} has probability {norm}")
    return FiniteMeasure(FiniteDistribution({k: v / norm for k, v in weights.items()}))


def verify_bell_conditioning(
    product_model: OntologicalModel, joint_measure: FiniteMeasure, tol: float = 1e-10
) -> Report:
    """Check the conditional family derived from a Bell-local model:
    conditional measures are unique per outcome by construction, and for
    every Alice measurement the outcome mixture of the conditional
    measures reconstructs the joint measure (convexity)."""
    report = Report(name="bell_conditioning", passed=True, tol=tol)
    ma_names = sorted({m.split("⊗")[0] for m in product_model.xi})
    for ma in ma_names:
        meas = [m for m in product_model.xi if m.split("⊗")[0] == ma][0]
        pr_a = _marginal_a_response(product_model, meas, product_model.xi[meas][0], tol)
        outcomes = sorted({o for row in pr_a.values() for o in row})
        mixture = {}
        for e_label in outcomes:
            prob_e = sum(
                pr_a[la].get(e_label, 0.0) * w
                for (la, lb), w in joint_measure.dist.weights.items()
            )
            if prob_e <= tol:
                continue
            cond = condition_bell_local_model(product_model, joint_measure, ma, e_label, tol)
            for label, w in cond.dist.weights.items():
                mixture[label] = mixture.get(label, 0.0) + prob_e * w
        residual = max(
            abs(mixture.get(label, 0.0) - joint_measure(label))
            for label in set(mixture) | set(joint_measure.dist.weights)
        )
        report.checks.append(make_check(f"mixture|{ma}", 0.0, residual, tol))
    report.passed = all(c.passed for c in report.checks)
    report.info["conditional_measures_unique"] = True
    return report


def wpip_composite(
    model_a: OntologicalModel, model_b: OntologicalModel, model_nl: OntologicalModel
) -> OntologicalModel:
    """Composite model on labels (la, lb, lnl): local product
    measurements use the factor responses and ignore the third
    coordinate; joint measurements use the third model's responses and
    ignore the local coordinates.

    `model_nl` must model the full product-state fragment (its states
    named "a⊗b" over the factors' states, its measurements including
    the local products "Ma⊗Mb").
    """
    for m, what in ((model_a, "A"), (model_b, "B"), (model_nl, "NL")):
        _require_finite(m, f"wpip_composite (factor {what})")
    frag_a, frag_b, frag = model_a.fragment, model_b.fragment, model_nl.fragment
    if frag_a is None or frag_b is None or frag is None:
        raise ValueError("all three models need fragments attached")
    for a in frag_a.states:
        for b in frag_b.states:
            if f"{a}⊗{b}" not in frag.states:
                raise ValueError(f"joint fragment is missing product state {a}⊗{b}")

    labels = tuple(
        (la, lb, ln)
        for la in model_a.space.labels
        for lb in model_b.space.labels
        for ln in model_nl.space.labels
    )
    space = OnticSpace("finite", labels)

    delta = {}
    for name in frag.states:
        if "⊗" not in name:
            raise ValueError(f"state {name!r} is not a product state")
        a, b = name.split("⊗", 1)
        out = []
        for mu_a in model_a.delta[a]:
            for mu_b in model_b.delta[b]:
                for mu_n in model_nl.delta[name]:
                    weights = {
                        (la, lb, ln): wa * wb * wn
                        for la, wa in mu_a.dist.weights.items()
                        for lb, wb in mu_b.dist.weights.items()
                        for ln, wn in mu_n.dist.weights.items()
                    }
                    out.append(FiniteMeasure(FiniteDistribution(weights)))
        delta[name] = out

    xi = {}
    for meas, povm in frag.measurements.items():
        parts = meas.split("⊗", 1)
        local = (
            len(parts) == 2
            and parts[0] in frag_a.measurements
            and parts[1] in frag_b.measurements
        )
        out = []
        if local:
            ma, mb = parts
            for pr_a in model_a.xi[ma]:
                for pr_b in model_b.xi[mb]:
                    table = {}
                    for la, lb, ln in labels:
                        row_a = pr_a.table.get(la, {})
                        row_b = pr_b.table.get(lb, {})
                        table[(la, lb, ln)] = {
                            f"{oa}⊗{ob}": pa * pb
                            for oa, pa in row_a.items()
                            for ob, pb in row_b.items()
                        }
                    out.append(FiniteResponse(table, povm.labels))
        else:
            for pr_n in model_nl.xi[meas]:
                table = {
                    (la, lb, ln): dict(pr_n.table.get(ln, {}))
                    for la, lb, ln in labels
                }
                out.append(FiniteResponse(table, povm.labels))
        xi[meas] = out

    return OntologicalModel(
        space=space,
        delta=delta,
        xi=xi,
        fragment=frag,
        name=f"wpip({model_a.name},{model_b.name};{model_nl.name})",
    )


# ---------------------------------------------------------------------------
# Exact discretization of interval models


def discretize_model(model: OntologicalModel) -> OntologicalModel:
    """Convert an interval-augmented model to an exactly equivalent
    finite model by cutting [0,1] at every breakpoint that occurs in a
    measure density or response interval.

    Labels of the result are (original label, segment index).  Since
    densities and indicators are constant on segments, the finite model
    reproduces the same probabilities (up to float rounding of the
    per-segment masses).
    """
    if model.space.kind == "finite":
        return model
    cuts = {label: {Fraction(0), Fraction(1)} for label in model.space.labels}
    for measures in model.delta.values():
        for mu in measures:
            for label, segs in mu.pieces.items():
                for lo, hi, _ in segs:
                    cuts[label].add(lo)
                    cuts[label].add(hi)
    for responses in model.xi.values():
        for pr in responses:
            for label, segs in pr.intervals.items():
                for lo, hi, _ in segs:
                    cuts[label].add(lo)
                    cuts[label].add(hi)
    segments = {}
    labels = []
    for label in model.space.labels:
        pts = sorted(cuts[label])
        segs = [(a, b) for a, b in zip(pts, pts[1:]) if b > a]
        segments[label] = segs
        labels.extend((label, i) for i in range(len(segs)))
    space = OnticSpace("finite", tuple(labels))

    delta = {}
    for state, measures in model.delta.items():
        out = []
        for mu in measures:
            weights = {}
            for label, segs in segments.items():
                for i, (a, b) in enumerate(segs):
                    dens = mu.density_at(label, a)
                    if dens > 0:
                        weights[(label, i)] = float(dens * (b - a))
            out.append(FiniteMeasure(FiniteDistribution(weights)))
        delta[state] = out

    xi = {}
    for meas, responses in model.xi.items():
        out = []
        for pr in responses:
            table = {}
            for label, segs in segments.items():
                for i, (a, b) in enumerate(segs):
                    outcome = pr.outcome_at(label, a)
                    table[(label, i)] = {} if outcome is None else {outcome: 1.0}
            out.append(FiniteResponse(table, pr.outcomes))
        xi[meas] = out

    return OntologicalModel(
        space=space, delta=delta, xi=xi, fragment=model.fragment, name=f"{model.name}/finite"
    )


# ---------------------------------------------------------------------------
# JSON encoding.  Labels are stringified, so lossless round trips need
# string labels (builtin models use strings throughout).


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _measure_to_json(mu):
    if mu.kind == "finite":
        return {str(l): w for l, w in mu.dist.weights.items()}
    return {
        str(l): [
            {"lo": _frac_str(lo), "hi": _frac_str(hi), "density": _frac_str(d)}
            for lo, hi, d in segs
        ]
        for l, segs in mu.pieces.items()
    }


def _response_to_json(pr):
    if pr.kind == "finite":
        return {str(l): {str(o): p for o, p in row.items()} for l, row in pr.table.items()}
    return {
        str(l): [
            {"lo": _frac_str(lo), "hi": _frac_str(hi), "outcome": str(o)}
            for lo, hi, o in segs
        ]
        for l, segs in pr.intervals.items()
    }


def model_to_json(model: OntologicalModel) -> dict:
    return {
        "space": {
            "kind": "finite" if model.space.kind == "finite" else "interval_augmented",
            "labels": [str(l) for l in model.space.labels],
        },
        "delta": {
            state: [_measure_to_json(mu) for mu in measures]
            for state, measures in model.delta.items()
        },
        "xi": {
            meas: [_response_to_json(pr) for pr in responses]
            for meas, responses in model.xi.items()
        },
        "name": model.name,
    }


def model_from_json(data: dict, fragment: PMFragment | None = None) -> OntologicalModel:
    kind = {"finite": "finite", "interval_augmented": "interval"}[data["space"]["kind"]]
    space = OnticSpace(kind, tuple(data["space"]["labels"]))
    delta = {}
    for state, measures in data["delta"].items():
        out = []
        for m in measures:
            if kind == "finite":
                out.append(FiniteMeasure(FiniteDistribution(m)))
            else:
                out.append(
                    IntervalMeasure(
                        {
                            l: [
                                (Fraction(seg["lo"]), Fraction(seg["hi"]), Fraction(seg["density"]))
                                for seg in segs
                            ]
                            for l, segs in m.items()
                        }
                    )
                )
        delta[state] = out
    xi = {}
    for meas, responses in data["xi"].items():
        out = []
        for r in responses:
            if kind == "finite":
                out.append(FiniteResponse({l: dict(row) for l, row in r.items()}))
            else:
                out.append(
                    IntervalResponse(
                        {
                            l: [
                                (Fraction(seg["lo"]), Fraction(seg["hi"]), seg["outcome"])
                                for seg in segs
                            ]
                            for l, segs in r.items()
                        }
                    )
                )
        xi[meas] = out
    return OntologicalModel(
        space=space, delta=delta, xi=xi, fragment=fragment, name=data.get("name", "model")
    )
