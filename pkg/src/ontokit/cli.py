"""Command-line interface.

Exit codes: 0 on success or verification pass, 1 on verification
failure (some residual above tolerance), 2 on usage errors (bad flags,
missing or malformed files).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import builtins as models_lib
from . import chained as chained_lib
from .antidistinguish import hardy_construction, hardy_phases, pbr_overlap_witness, pbr_povm
from .distributions import FiniteDistribution, exclusion_failure, overlap, variational_distance
from .linalg import fragment_from_json, fragment_to_json, ket, pure_overlap, random_state_vector
from .models import (
    classify,
    detect_preparation_contextuality,
    is_maximally_psi_epistemic,
    measure_distance,
    measures_overlap,
    model_from_json,
    model_to_json,
    verify_preclusions,
    verify_reproduces,
)
from .report import Check, Report, make_check, render_report

DEMOS = (
    "spekkens",
    "bb",
    "bell",
    "ks",
    "abcl",
    "ppm",
    "pbr",
    "hardy",
    "chained",
    "pbr-witness",
)


class UsageError(Exception):
    pass


def _default_tol() -> float:
    env = os.environ.get("ONTOKIT_TOL")
    if env is None:
        return 1e-10
    try:
        return float(env)
    except ValueError as exc:
        raise UsageError(f"ONTOKIT_TOL is not a number: {env!r}") from exc


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise UsageError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc}") from exc


def _emit(data: bytes, out: str | None):
    if out:
        with open(out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)


def _emit_json(doc, out: str | None):
    _emit((json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8"), out)


# ---------------------------------------------------------------------------
# model command


def _build_model(name: str, args):
    rng = np.random.default_rng(args.seed)
    if name == "spekkens":
        return models_lib.spekkens_toy_bit()
    if name == "bb":
        return _bb_demo_model()
    if name == "bell":
        frag = models_lib.random_basis_fragment(args.dim, args.states, args.bases, rng)
        return models_lib.bell_model(frag)
    if name == "abcl":
        zero = ket(0, args.dim)
        plus = (ket(0, args.dim) + ket(1, args.dim)) / np.sqrt(2)
        frag = models_lib.random_basis_fragment(
            args.dim, args.states, args.bases, rng, include_states={"0": zero, "+": plus}
        )
        return models_lib.abcl_model(frag, zero, plus)
    if name == "ppm":
        return models_lib.ppm_natural_model(args.dim)
    raise UsageError(f"unknown model {name!r}")


def _bb_demo_model():
    """Qubit fragment of the six axis states plus the maximally mixed
    state, modeled with point measures and both axis decompositions."""
    toy = models_lib.spekkens_toy_bit()
    frag = toy.fragment
    decs = {
        "I/2": [
            [(0.5, "x+"), (0.5, "x-")],
            [(0.5, "y+"), (0.5, "y-")],
        ]
    }
    return models_lib.beltrametti_bugajski(frag, decompositions=decs)


def cmd_model(args) -> int:
    if args.which == "ks":
        handle = models_lib.kochen_specker_qubit()
        _emit_json(
            {
                "kind": "kochen-specker",
                "note": "continuous Bloch-sphere model; use `ontokit demo ks` for verification",
                "analytic_classification": handle.analytic_classification(),
            },
            args.out,
        )
        return 0
    model = _build_model(args.which, args)
    doc = {"model": model_to_json(model), "fragment": fragment_to_json(model.fragment)}
    if model.meta:
        doc["meta"] = {
            k: (str(v) if not isinstance(v, (int, float, str, bool)) else v)
            for k, v in model.meta.items()
        }
    _emit_json(doc, args.out)
    return 0


# ---------------------------------------------------------------------------
# verify / classify


def _load_model(args):
    doc = _load_json(args.model)
    frag_doc = doc.get("fragment")
    model_doc = doc.get("model", doc)
    if args.fragment:
        frag_doc = _load_json(args.fragment)
    if frag_doc is None:
        raise UsageError("no fragment: embed one in the model file or pass --fragment")
    try:
        fragment = fragment_from_json(frag_doc)
        return model_from_json(model_doc, fragment=fragment)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed model or fragment document: {exc}") from exc


def cmd_verify(args) -> int:
    model = _load_model(args)
    report = verify_reproduces(model, tol=args.tol)
    if args.preclusions:
        report = verify_preclusions(model, tol=args.tol)
    _emit(render_report(report, args.format), args.out)
    return 0 if report.passed else 1


def cmd_classify(args) -> int:
    model = _load_model(args)
    flags = classify(model)
    doc = dict(flags)
    doc["preparation_contextual_states"] = [
        str(s) for s in detect_preparation_contextuality(model)
    ]
    _emit_json(doc, args.out)
    return 0


# ---------------------------------------------------------------------------
# overlap


def cmd_overlap(args) -> int:
    doc = _load_json(args.input)
    try:
        dists = {
            name: FiniteDistribution(weights) for name, weights in doc["distributions"].items()
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed distributions document: {exc}") from exc
    if not dists:
        raise UsageError("no distributions given")
    names = sorted(dists)
    out = {
        "overlap": overlap([dists[n] for n in names]),
        "pairwise_distance": {
            f"{a}|{b}": variational_distance(dists[a], dists[b])
            for i, a in enumerate(names)
            for b in names[i + 1 :]
        },
    }
    if len(names) >= 2:
        out["exclusion_failure"] = exclusion_failure([dists[n] for n in names])
    _emit_json(out, args.out)
    return 0


# ---------------------------------------------------------------------------
# chained


def cmd_chained(args) -> int:
    value, bound = chained_lib.closed_form_IN(args.n)
    residual = chained_lib.max_born_residual(args.n)
    row = {
        "N": args.n,
        "I_N": value,
        "bound": bound,
        "max_born_residual": residual,
    }
    if args.dim and args.dim >= 3:
        embedded = chained_lib.embedded_conditional_table(args.n, args.dim)
        closed = chained_lib.closed_form_joint_table(args.n)
        embed_residual = max(
            abs(embedded["table"][ab][jk] - closed[ab][jk])
            for ab in closed
            for jk in closed[ab]
        )
        row["embed_residual"] = embed_residual
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(row))
        writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row.values()])
        _emit(buf.getvalue().encode("utf-8"), args.out)
    else:
        _emit_json(row, args.out)
    return 0


# ---------------------------------------------------------------------------
# report re-rendering


def cmd_report(args) -> int:
    doc = _load_json(args.input)
    try:
        report = Report(
            name=doc["name"],
            passed=bool(doc["passed"]),
            tol=float(doc["tol"]),
            checks=[
                Check(
                    c["check_id"],
                    float(c["expected"]),
                    float(c["predicted"]),
                    float(c["residual"]),
                    bool(c["passed"]),
                )
                for c in doc.get("checks", [])
            ],
            info=doc.get("info", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed report document: {exc}") from exc
    _emit(render_report(report, args.format), args.out)
    return 0


# ---------------------------------------------------------------------------
# demos


def _merged(name: str, tol: float, parts, info=None) -> Report:
    checks = []
    for part in parts:
        if isinstance(part, Report):
            checks.extend(part.checks)
        else:
            checks.append(part)
    report = Report(name=name, passed=all(c.passed for c in checks), tol=tol, checks=checks)
    report.info.update(info or {})
    return report


def _bool_check(check_id: str, ok: bool) -> Check:
    return Check(check_id, 1.0, 1.0 if ok else 0.0, 0.0 if ok else 1.0, ok)


def demo_spekkens(args) -> Report:
    model = models_lib.spekkens_toy_bit()
    rep = verify_reproduces(model, tol=args.tol)
    d = measure_distance(model.delta["x+"][0], model.delta["y+"][0])
    d_check = make_check("D|x+|y+", 0.5, d, 0.0)
    me = is_maximally_psi_epistemic(model, tol=0.0)
    return _merged("demo:spekkens", args.tol, [rep, d_check, me])


def demo_bb(args) -> Report:
    model = _bb_demo_model()
    rep = verify_reproduces(model, tol=args.tol)
    flags = classify(model)
    contextual = detect_preparation_contextuality(model)
    checks = [
        _bool_check("classify|psi_ontic", flags["psi_ontic"]),
        _bool_check("classify|not_pairwise_epistemic", not flags["pairwise_epistemic"]),
        _bool_check("preparation_contextual|I/2", contextual == ["I/2"]),
    ]
    return _merged("demo:bb", args.tol, [rep] + checks, info={"classify": flags})


def demo_bell(args) -> Report:
    rng = np.random.default_rng(args.seed)
    frag = models_lib.random_basis_fragment(args.dim, args.states, args.bases, rng)
    model = models_lib.bell_model(frag)
    rep = verify_reproduces(model, tol=0.0)
    flags = classify(model)
    checks = [
        _bool_check("classify|psi_ontic", flags["psi_ontic"]),
        _bool_check("classify|sometimes_psi_ontic", flags["sometimes_psi_ontic"]),
    ]
    return _merged(
        "demo:bell", 0.0, [rep] + checks, info={"seed": args.seed, "classify": flags}
    )


def demo_ks(args) -> Report:
    checks = []
    angles = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
    for ang in angles:
        psi = np.array([1.0, 0.0, 0.0])
        phi = np.array([np.cos(ang), np.sin(ang), 0.0])
        got = models_lib.ks_born_quadrature(psi, phi)
        want = 0.5 * (1 + np.cos(ang))
        checks.append(make_check(f"equatorial|{ang:.6f}", want, got, 1e-8))
    rng = np.random.default_rng(args.seed)
    for idx in range(4):
        v1 = rng.normal(size=3)
        v1 /= np.linalg.norm(v1)
        v2 = rng.normal(size=3)
        v2 /= np.linalg.norm(v2)
        full, restricted = models_lib.ks_me_integrals(v1, v2)
        checks.append(make_check(f"me_integrals|{idx}", full, restricted, 1e-6))
    return _merged("demo:ks", 1e-8, checks, info={"seed": args.seed})


def demo_abcl(args) -> Report:
    rng = np.random.default_rng(args.seed)
    zero = ket(0, args.dim)
    plus = (ket(0, args.dim) + ket(1, args.dim)) / np.sqrt(2)
    frag = models_lib.random_basis_fragment(
        args.dim, args.states, args.bases, rng, include_states={"0": zero, "+": plus}
    )
    model = models_lib.abcl_model(frag, zero, plus)
    rep = verify_reproduces(model, tol=0.0)
    eps = float(model.meta["eps_safe"])
    l_ab = measures_overlap([model.delta["0"][0], model.delta["+"][0]])
    flags = classify(model)
    checks = [
        _bool_check("overlap_at_least_eps", l_ab >= eps > 0.0),
        _bool_check("classify|psi_epistemic", not flags["psi_ontic"]),
    ]
    info = {
        "seed": args.seed,
        "eps_amplitude": model.meta["eps_amplitude"],
        "eps_squared": model.meta["eps_squared"],
        "eps_safe": eps,
        "overlap": l_ab,
        "classify": flags,
    }
    return _merged("demo:abcl", 0.0, [rep] + checks, info=info)


def demo_ppm(args) -> Report:
    model = models_lib.ppm_natural_model(args.dim)
    rep = verify_reproduces(model, tol=0.0)
    d = args.dim
    checks = []
    for j in range(d):
        for k in range(j + 1, d):
            dist = measure_distance(model.delta[f"phi_{j}"][0], model.delta[f"phi_{k}"][0])
            checks.append(make_check(f"D|phi_{j}|phi_{k}", 1.0 / (d - 1), dist, 0.0))
    all_overlap = measures_overlap([model.delta[f"phi_{j}"][0] for j in range(d)])
    checks.append(make_check("overlap|all", 0.0, all_overlap, 0.0))
    flags = classify(model)
    checks.append(_bool_check("classify|psi_epistemic", not flags["psi_ontic"]))
    return _merged("demo:ppm", 0.0, [rep] + checks, info={"classify": flags})


def _random_pair_with_overlap_at_most(dim, cap, rng):
    while True:
        psi0 = random_state_vector(dim, rng)
        psi1 = random_state_vector(dim, rng)
        if pure_overlap(psi0, psi1) <= cap:
            return psi0, psi1


def demo_pbr(args) -> Report:
    rng = np.random.default_rng(args.seed)
    checks = []
    if args.overlap is not None:
        if not 0.0 <= args.overlap <= 0.5:
            raise UsageError(f"--overlap must lie in [0, 0.5], got {args.overlap}")
        psi0 = ket(0, args.dim)
        psi1 = np.sqrt(args.overlap) * ket(0, args.dim) + np.sqrt(1 - args.overlap) * ket(
            1, args.dim
        )
        cert = pbr_povm(psi0, psi1)
        checks.append(make_check("target|max_residual", 0.0, cert.max_residual, 1e-10))
        checks.append(_bool_check("target|povm_valid", cert.valid_povm.passed))
    for idx in range(args.pairs):
        psi0, psi1 = _random_pair_with_overlap_at_most(args.dim, 0.5, rng)
        cert = pbr_povm(psi0, psi1)
        checks.append(make_check(f"pair{idx}|max_residual", 0.0, cert.max_residual, 1e-10))
        checks.append(_bool_check(f"pair{idx}|povm_valid", cert.valid))
    return _merged("demo:pbr", 1e-10, checks, info={"seed": args.seed, "dim": args.dim})


def demo_hardy(args) -> Report:
    rng = np.random.default_rng(args.seed)
    d = args.dim
    checks = []
    top = np.sqrt((d - 1) / d)
    for target in (0.0, top):
        phases = hardy_phases(d, target)
        amps = np.exp(1j * np.array(phases)) / np.sqrt(d - 1)
        inner = abs(np.sum(amps.conj()) / np.sqrt(d))
        checks.append(make_check(f"phases|target={target:.6f}", target, inner, 1e-12))
    for idx in range(args.pairs):
        psi, phi = _random_pair_with_overlap_at_most(d, (d - 1) / d, rng)
        result = hardy_construction(psi, phi)
        checks.append(
            make_check(f"pair{idx}|max_residual", 0.0, result["certificate"].max_residual, 1e-10)
        )
        fix_residual = max(
            float(np.linalg.norm(u @ psi - psi)) for u in result["unitaries"]
        )
        checks.append(make_check(f"pair{idx}|fixes_psi", 0.0, fix_residual, 1e-10))
    return _merged("demo:hardy", 1e-10, checks, info={"seed": args.seed, "dim": d})


def demo_chained(args) -> Report:
    checks = []
    previous = None
    for n in range(1, args.n + 1):
        value, bound = chained_lib.closed_form_IN(n)
        born = chained_lib.correlation_measure(chained_lib.born_joint_table(n), n)
        checks.append(make_check(f"N={n}|born", value, born, 1e-12))
        checks.append(_bool_check(f"N={n}|bounded", value <= bound))
        if previous is not None:
            checks.append(_bool_check(f"N={n}|decreasing", value < previous))
        previous = value
    embedded = chained_lib.embedded_conditional_table(min(args.n, 2), 3)
    closed = chained_lib.closed_form_joint_table(min(args.n, 2))
    residual = max(
        abs(embedded["table"][ab][jk] - closed[ab][jk]) for ab in closed for jk in closed[ab]
    )
    checks.append(make_check("embedded|d=3", 0.0, residual, 1e-12))
    return _merged("demo:chained", 1e-12, checks)


def demo_pbr_witness(args) -> Report:
    rng = np.random.default_rng(args.seed)
    zero = ket(0, 2)
    plus = (ket(0, 2) + ket(1, 2)) / np.sqrt(2)
    frag = models_lib.random_basis_fragment(
        2, 6, 4, rng, include_states={"0": zero, "+": plus}
    )
    model = models_lib.abcl_model(frag, zero, plus)
    witness = pbr_overlap_witness(model)
    checks = [
        _bool_check("L4_positive", witness["L4"] > 0),
        _bool_check("L4_equals_L2_squared", witness["factorization_exact"]),
        make_check("L4_discretized", witness["L4"], witness["L4_discretized"], 1e-12),
        _bool_check("sum_precluded_at_least_L4", witness["bound_holds"]),
    ]
    info = {k: v for k, v in witness.items() if not isinstance(v, list)}
    info["seed"] = args.seed
    return _merged("demo:pbr-witness", 1e-12, checks, info=info)


def cmd_demo(args) -> int:
    runner = {
        "spekkens": demo_spekkens,
        "bb": demo_bb,
        "bell": demo_bell,
        "ks": demo_ks,
        "abcl": demo_abcl,
        "ppm": demo_ppm,
        "pbr": demo_pbr,
        "hardy": demo_hardy,
        "chained": demo_chained,
        "pbr-witness": demo_pbr_witness,
    }[args.which]
    report = runner(args)
    _emit(render_report(report, args.format), args.out)
    verdict = "PASS" if report.passed else "FAIL"
    print(
        f"ontokit demo {args.which}: {verdict} "
        f"({len(report.checks)} checks, max residual {report.max_residual:.3e})",
        file=sys.stderr,
    )
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ontokit",
        description="Ontological-model toolkit for prepare-and-measure quantum experiments",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_model = sub.add_parser("model", help="emit a builtin model as JSON")
    p_model.add_argument("which", choices=("spekkens", "bb", "bell", "ks", "abcl", "ppm"))
    p_model.add_argument("--dim", type=int, default=2)
    p_model.add_argument("--seed", type=int, default=0)
    p_model.add_argument("--states", type=int, default=8)
    p_model.add_argument("--bases", type=int, default=6)
    p_model.add_argument("--out")
    p_model.set_defaults(func=cmd_model)

    p_verify = sub.add_parser("verify", help="verify a model against its fragment")
    p_verify.add_argument("--model", required=True)
    p_verify.add_argument("--fragment")
    p_verify.add_argument("--tol", type=float, default=None)
    p_verify.add_argument("--preclusions", action="store_true")
    p_verify.add_argument("--format", choices=("json", "csv"), default="json")
    p_verify.add_argument("--out")
    p_verify.set_defaults(func=cmd_verify)

    p_classify = sub.add_parser("classify", help="psi-ontic/epistemic flags for a model")
    p_classify.add_argument("--model", required=True)
    p_classify.add_argument("--fragment")
    p_classify.add_argument("--out")
    p_classify.set_defaults(func=cmd_classify)

    p_overlap = sub.add_parser("overlap", help="overlap and distances of distributions")
    p_overlap.add_argument("--input", required=True)
    p_overlap.add_argument("--out")
    p_overlap.set_defaults(func=cmd_overlap)

    p_chained = sub.add_parser("chained", help="chained-correlation closed form and bound")
    p_chained.add_argument("--n", type=int, required=True)
    p_chained.add_argument("--dim", type=int, default=2)
    p_chained.add_argument("--format", choices=("json", "csv"), default="json")
    p_chained.add_argument("--out")
    p_chained.set_defaults(func=cmd_chained)

    p_demo = sub.add_parser("demo", help="run a named demonstration")
    p_demo.add_argument("which", choices=DEMOS)
    p_demo.add_argument("--dim", type=int, default=None)
    p_demo.add_argument("--seed", type=int, default=0)
    p_demo.add_argument("--pairs", type=int, default=20)
    p_demo.add_argument("--overlap", type=float, default=None)
    p_demo.add_argument("--n", type=int, default=8)
    p_demo.add_argument("--states", type=int, default=8)
    p_demo.add_argument("--bases", type=int, default=6)
    p_demo.add_argument("--tol", type=float, default=None)
    p_demo.add_argument("--format", choices=("json", "csv"), default="json")
    p_demo.add_argument("--out")
    p_demo.set_defaults(func=cmd_demo)

    p_report = sub.add_parser("report", help="re-render a report document")
    p_report.add_argument("--input", required=True)
    p_report.add_argument("--format", choices=("json", "csv"), default="csv")
    p_report.add_argument("--out")
    p_report.set_defaults(func=cmd_report)

    return parser


def _fill_defaults(args):
    if getattr(args, "tol", None) is None:
        args.tol = _default_tol()
    if getattr(args, "dim", None) is None:
        args.dim = {"ppm": 3, "hardy": 3}.get(getattr(args, "which", ""), 2)
    if getattr(args, "which", "") == "ppm" and args.dim < 3:
        raise UsageError("ppm needs --dim >= 3")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _fill_defaults(args)
        return args.func(args)
    except UsageError as exc:
        print(f"ontokit: {exc}", file=sys.stderr)
        return 2
    except (KeyError, ValueError, OSError) as exc:
        print(f"ontokit: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
