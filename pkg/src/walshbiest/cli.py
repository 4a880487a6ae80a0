"""Command-line entry point: ``walshbiest <subcommand> [options]``.

Instances travel as JSON (from ``gen``, or any file with the same layout) and
may be piped through stdin.  Every artifact embeds the run configuration and
the library version, and is byte-identical for identical inputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import __version__, checks
from .decomp import abstract_bound_check, full_partition
from .dyadic import DyadicInterval, ExactScalar
from .exponents import REGIMES, Membership, NotOnHyperplane, ThetaOutOfRange, as_fraction, in_D, theta_map
from .norms import BadTheta, norm_report
from .operators import CoeffSeq, bht, bht_trilinear, biest, quad_form
from .phaseplane import collection_from_json, collection_to_json, random_quartiles
from .walsh import StepFunction

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def _pair(text: str, flag: str, conv=Fraction) -> tuple:
    try:
        a, b = (conv(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"{flag} expects two comma-separated numbers, got {text!r}") from None
    return a, b


def _window(args) -> DyadicInterval:
    a, b = _pair(args.window, "--window")
    try:
        return DyadicInterval.from_endpoints(a, b)
    except ValueError as exc:
        raise UsageError(f"--window: {exc}") from None


def _scale_range(args) -> tuple[int, int] | None:
    if args.scale_range is None:
        return None
    lo, hi = _pair(args.scale_range, "--scale-range", int)
    if lo > hi:
        raise UsageError("--scale-range needs kmin <= kmax")
    return lo, hi


def _config(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, payload: dict, summary: str) -> None:
    """Artifact to ``--out`` (or stdout when absent / ``-``); summary to the terminal."""
    doc = {"version": __version__, "config": _config(args), **payload}
    text = json.dumps(doc, sort_keys=True, indent=2, default=str) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
        if summary:
            print(summary, file=sys.stderr)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
        if summary:
            print(summary)


def _read_instance(args) -> dict:
    src = args.input
    try:
        if src in (None, "-"):
            data = sys.stdin.read()
        else:
            with open(src) as fh:
                data = fh.read()
        doc = json.loads(data)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read instance: {exc}") from None
    inst = doc.get("instance", doc)
    for key in ("P", "functions"):
        if key not in inst:
            raise UsageError(f"instance lacks the {key!r} field")
    return inst


def _functions(inst) -> list[StepFunction]:
    return [StepFunction.from_json(f) for f in inst["functions"]]


def _coefficients(inst, coll) -> list[CoeffSeq]:
    if "coefficients" in inst:
        return [CoeffSeq.from_json(c) for c in inst["coefficients"]]
    # fall back to the packet coefficients of the first three functions
    from .operators import coefficients
    fs = _functions(inst)
    return [coefficients(coll, fs[j - 1], j) for j in (1, 2, 3)]


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    W = _window(args)
    K = args.resolution
    kr = _scale_range(args)
    try:
        P = random_quartiles(rng, W, K, args.count, kr)
        Q = random_quartiles(rng, W, K, args.q_count, kr) if args.q_count else []
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ncells = 1 << (W.scale + K)
    fs = [StepFunction.from_values(W, K, [int(v) for v in rng.integers(-2, 3, ncells)]) for _ in range(4)]
    coeffs = []
    for j in (1, 2, 3):
        signs = np.where(rng.random(len(P)) < 0.5, -1, 1)
        mags = rng.integers(1, 5, len(P))
        coeffs.append(CoeffSeq({q: ExactScalar(int(s * m), 0, 2) for q, s, m in zip(P, signs, mags)}, j))
    inst = {
        "window": W.to_json(), "resolution": K,
        "P": collection_to_json(P), "Q": collection_to_json(Q),
        "functions": [f.to_json() for f in fs],
        "coefficients": [c.to_json() for c in coeffs],
    }
    _emit(args, {"instance": inst}, f"generated {len(P)} + {len(Q)} quartiles on {W}")
    return EXIT_OK


def cmd_eval_bht(args) -> int:
    inst = _read_instance(args)
    P = collection_from_json(inst["P"])
    f1, f2, f3 = _functions(inst)[:3]
    out = bht(P, f1, f2)
    lam = bht_trilinear(P, f1, f2, f3)
    _emit(args, {"trilinear": lam.to_json(), "trilinear_float": float(lam), "output": out.to_json()},
          f"bht trilinear form = {float(lam):.12g} over {len(P)} quartiles")
    return EXIT_OK


def cmd_eval_biest(args) -> int:
    inst = _read_instance(args)
    P = collection_from_json(inst["P"])
    Q = collection_from_json(inst.get("Q", []))
    f1, f2, f3, f4 = _functions(inst)[:4]
    res = biest(P, Q, f1, f2, f3)
    lam = quad_form(P, Q, f1, f2, f3, f4)
    _emit(args, {
        "lambda_prime": lam.lam_prime.to_json(), "lambda_double": lam.lam_double.to_json(),
        "lambda_float": float(lam.total),
        "t_prime": res.t_prime.to_json(), "t_double": res.t_double.to_json(),
    }, f"biest quadrilinear form = {float(lam.total):.12g}")
    return EXIT_OK


def cmd_norms(args) -> int:
    inst = _read_instance(args)
    P = collection_from_json(inst["P"])
    rep = norm_report(P, _coefficients(inst, P))
    summary = "  ".join(f"size_{j}={rep.size(j):.6g} energy_{j}={rep.energy(j):.6g}" for j in (1, 2, 3))
    _emit(args, {"norms": rep.to_json()}, summary)
    return EXIT_OK


def cmd_decompose(args) -> int:
    inst = _read_instance(args)
    P = collection_from_json(inst["P"])
    seqs = _coefficients(inst, P)
    part = full_partition(P, *seqs)
    theta = tuple(Fraction(t) for t in args.theta.split(","))
    try:
        chain = abstract_bound_check(P, *seqs, theta)
    except BadTheta as exc:
        raise UsageError(f"--theta: {exc}") from None
    _emit(args, {"partition": part.to_json(), "bound_chain": chain.to_json()},
          f"{len(part.levels)} levels, lhs/final = {chain.ratios()['lhs/final']:.6g}")
    return EXIT_OK


VERIFY_TARGETS = {
    "walsh": lambda a: checks.walsh_identities(),
    "orthonormality": lambda a: checks.packet_orthonormality(tilings=a.trials or 100, seed=a.seed),
    "lacunarity": lambda a: checks.lacunarity_sweep(max_scale=a.max_scale),
    "biest-trick": lambda a: checks.biest_trick_suite(trials=a.trials or 1000, seed=a.seed,
                                                      max_scale=a.max_scale),
    "tree-estimate": lambda a: checks.tree_estimate_suite(trials=a.trials or 500, seed=a.seed),
    "decomp": lambda a: checks.decomp_suite(trials=a.trials or 200, seed=a.seed),
    "bound-chain": lambda a: checks.bound_chain_suite(trials=a.trials or 100, seed=a.seed),
    "abstract": lambda a: checks.abstract_suite(instances=a.trials or 1000, seed=a.seed),
    "lemmas": lambda a: checks.lemma_checks(instances=a.trials or 300, seed=a.seed),
    "restricted-type": lambda a: checks.restricted_type_checks(
        regimes=(a.regime,) if a.regime else ("A1-A4", "A5-A12", "bht"),
        trials=a.trials or 50, scales=_scales(a), seed=a.seed, jobs=a.jobs),
    "polytope": lambda a: checks.polytope_suite(points=a.trials or 10_000, seed=a.seed),
}


def _scales(args) -> tuple[int, ...]:
    kr = _scale_range(args)
    return tuple(range(kr[0], kr[1] + 1)) if kr else tuple(range(9))


def cmd_verify(args) -> int:
    res = VERIFY_TARGETS[args.target](args)
    _emit(args, {"result": res.to_json()}, res.line())
    if not res.passed:
        print(f"first failure: {json.dumps(res.counterexample, default=str)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_polytope(args) -> int:
    try:
        alpha = tuple(as_fraction(x.strip()) for x in args.point.split(","))
    except ValueError:
        raise UsageError(f"--point: cannot parse {args.point!r}") from None
    if len(alpha) != 4:
        raise UsageError("--point needs four coordinates")
    try:
        out = {"point": [str(a) for a in alpha],
               "D": in_D(alpha).value, "D'": in_D(alpha, "D'").value, "D''": in_D(alpha, "D''").value}
    except NotOnHyperplane as exc:
        raise UsageError(f"--point: {exc}") from None
    thetas = {}
    for regime in REGIMES:
        if regime == "bht":
            continue
        try:
            thetas[regime] = theta_map(alpha, regime).to_json()
        except ThetaOutOfRange as exc:
            thetas[regime] = {"rejected": str(exc)}
    out["theta"] = thetas
    where = "interior of D" if out["D"] == Membership.INTERIOR.value else f"{out['D']} of D"
    _emit(args, {"classification": out}, f"{','.join(out['point'])}: {where}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="artifact path; '-' or absent means stdout")
    common.add_argument("--jobs", type=int, default=1)

    inst = argparse.ArgumentParser(add_help=False)
    inst.add_argument("--in", dest="input", default=None, help="instance JSON; '-' or absent reads stdin")

    p = argparse.ArgumentParser(prog="walshbiest", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="random instance")
    g.add_argument("--window", default="0,4")
    g.add_argument("--resolution", type=int, default=4)
    g.add_argument("--scale-range", default=None)
    g.add_argument("--count", type=int, default=32, help="quartiles in P")
    g.add_argument("--q-count", type=int, default=0, help="quartiles in Q")
    g.set_defaults(func=cmd_gen)

    for name, fn, hlp in (("eval-bht", cmd_eval_bht, "evaluate the model bht on an instance"),
                          ("eval-biest", cmd_eval_biest, "evaluate the model biest on an instance"),
                          ("norms", cmd_norms, "size and energy of the instance coefficients")):
        s = sub.add_parser(name, parents=[common, inst], help=hlp)
        s.set_defaults(func=fn)

    d = sub.add_parser("decompose", parents=[common, inst], help="size/energy decomposition")
    d.add_argument("--theta", default="1/3,1/3,1/3")
    d.set_defaults(func=cmd_decompose)

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("target", choices=sorted(VERIFY_TARGETS))
    v.add_argument("--trials", type=int, default=None)
    v.add_argument("--max-scale", type=int, default=3)
    v.add_argument("--regime", choices=("A1-A4", "A5-A12", "bht"), default=None)
    v.add_argument("--scale-range", default=None)
    v.set_defaults(func=cmd_verify)

    q = sub.add_parser("polytope", parents=[common], help="classify an exponent tuple")
    q.add_argument("--point", required=True)
    q.set_defaults(func=cmd_polytope)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"walshbiest {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
