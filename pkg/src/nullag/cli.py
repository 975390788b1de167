"""Command-line front end.

Subcommands: analyze, k1, verify, grassmann-scan, fixtures.  Every command
prints one machine-readable JSON report to stdout (and optionally to
--json-out); timing lives in a dedicated "timings" field so reports are
byte-identical across runs with the same seed once that field is dropped.

Exit codes: 0 trivial certified (or artifact verified), 10 non-trivial
measure found, 20 inconclusive, 2 input/schema violation, 3 construction
precondition failure, 1 verification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .algebra import rat_from_str, rat_to_str
from .certify import (
    MinorCombination,
    Obstruction,
    TrivialityCertificate,
    combination_form,
    grassmann_genericity,
    reduce_chain,
    verify_combination,
)
from .conslaw import (
    AtomConstructionError,
    FluxFunction,
    IterationError,
    build_atoms,
    five_atom_measure,
    iterate_weights,
    negative_branch_evidence,
    push_forward_to_K1,
    support_radius,
)
from .fixtures import builtin, builtin_names, kr_measure
from .measures import DiscreteMeasure, construct_nontrivial_for_subspace, is_null_lagrangian, two_atom_measure
from .subspace import Subspace, find_rank_one

EXIT_TRIVIAL = 0
EXIT_VERIFIED = 0
EXIT_FAILED = 1
EXIT_SCHEMA = 2
EXIT_PRECONDITION = 3
EXIT_NONTRIVIAL = 10
EXIT_INCONCLUSIVE = 20


def worker_count():
    """Parallelism cap from NULLAG_THREADS (default 1: fully deterministic order)."""
    try:
        return max(1, int(os.environ.get("NULLAG_THREADS", "1")))
    except ValueError:
        return 1


def _digest(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


def _emit(report, json_out=None):
    text = json.dumps(report, sort_keys=True, indent=2, default=str)
    print(text)
    if json_out:
        with open(json_out, "w") as fh:
            fh.write(text + "\n")


def _report(command, inputs, seed=None):
    return {
        "command": command,
        "inputs_digest": _digest(inputs),
        "seed": seed,
        "version": __version__,
        "verdicts": [],
        "timings": {},
    }


def _load_json(path):
    if path == "-":
        return json.load(sys.stdin)
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def cmd_analyze(args):
    try:
        obj = _load_json(args.subspace)
        K = Subspace.from_json(obj)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        _emit({"command": "analyze", "error": str(exc)}, args.json_out)
        return EXIT_SCHEMA
    report = _report("analyze", obj, seed=args.seed)
    report["subspace"] = {"m": K.m, "n": K.n, "d": K.d}
    t0 = time.time()

    res = find_rank_one(K, mode="auto", density=args.density, seed=args.seed,
                        tol=args.tol, absent_tol=args.absent_tol)
    report["timings"]["find_rank_one"] = time.time() - t0
    rank_entry = {
        "operation": "find_rank_one",
        "mode": res.mode,
        "found": res.found,
        "is_proof": res.is_proof,
        "residual": res.residual,
        "lower_bound": res.lower_bound,
    }
    if res.witness_float is not None:
        rank_entry["witness_float"] = [float(x) for x in res.witness_float]
    if res.witness is not None:
        rank_entry["witness"] = [rat_to_str(x) for x in res.witness]
    if res.witness_minpoly is not None:
        rank_entry["witness_minpoly"] = {
            "coeffs": [rat_to_str(c) for c in res.witness_minpoly["coeffs"]],
            "branch": res.witness_minpoly["branch"],
            "note": "every order-2 minor polynomial is divisible by this minimal polynomial",
        }
    report["verdicts"].append(rank_entry)

    if res.found and res.witness is not None:
        mu = two_atom_measure(K, res.witness)
        nl = is_null_lagrangian(mu)
        report["verdicts"].append(
            {"operation": "is_null_lagrangian", "exact": True, "verdict": nl.verdict}
        )
        if nl.verdict:
            report["measure"] = mu.to_json()
            report["conclusion"] = "non-trivial measure from a rank-one direction"
            _emit(report, args.json_out)
            return EXIT_NONTRIVIAL
    if res.found and res.witness_minpoly is not None:
        # the direction is a quadratic irrational: existence is proved by
        # divisibility even though no rational-atom measure is emitted
        zf = res.witness_float
        A = (zf @ K.basis_float()).reshape(K.m, K.n)
        mu = DiscreteMeasure([A, -A], [0.5, 0.5])
        report["measure"] = mu.to_json()
        report["conclusion"] = "non-trivial measure from an exactly certified irrational rank-one direction"
        _emit(report, args.json_out)
        return EXIT_NONTRIVIAL

    t1 = time.time()
    chain = reduce_chain(K)
    report["timings"]["reduce_chain"] = time.time() - t1
    if isinstance(chain, TrivialityCertificate):
        report["verdicts"].append(
            {"operation": "reduce_chain", "terminal": True, "chain_length": len(chain.chain)}
        )
        report["certificate"] = chain.to_json(K)
        report["conclusion"] = "trivial: terminal certificate chain"
        _emit(report, args.json_out)
        return EXIT_TRIVIAL
    report["verdicts"].append(
        {
            "operation": "reduce_chain",
            "terminal": False,
            "stuck_cone_dim": len(chain.cone),
            "note": chain.note,
        }
    )
    if chain.rank_one_witness is not None:
        mu = two_atom_measure(K, chain.rank_one_witness)
        if is_null_lagrangian(mu).verdict:
            report["measure"] = mu.to_json()
            report["conclusion"] = "non-trivial measure from a rank-one direction found during reduction"
            _emit(report, args.json_out)
            return EXIT_NONTRIVIAL

    t2 = time.time()
    candidates = [tuple(rat_from_str(x) for x in v) for v in (args.candidates or [])]
    mu = construct_nontrivial_for_subspace(
        K, budget=args.budget, seed=args.seed, candidates=candidates or None
    )
    report["timings"]["construct_nontrivial"] = time.time() - t2
    if mu is not None:
        report["verdicts"].append(
            {"operation": "construct_nontrivial", "found": True, "atoms": len(mu.atoms), "exact": True}
        )
        report["measure"] = mu.to_json()
        report["conclusion"] = "non-trivial measure with barycenter zero"
        _emit(report, args.json_out)
        return EXIT_NONTRIVIAL
    report["verdicts"].append({"operation": "construct_nontrivial", "found": False})
    report["conclusion"] = "inconclusive: no certificate chain and no measure within budget"
    _emit(report, args.json_out)
    return EXIT_INCONCLUSIVE


# ---------------------------------------------------------------------------
# k1
# ---------------------------------------------------------------------------

def cmd_k1(args):
    inputs = {
        "flux": args.flux,
        "alpha": [args.alpha1, args.alpha2],
        "s0": args.s0,
        "t0": args.t0,
        "eps": args.eps,
    }
    report = _report("k1", inputs, seed=args.seed)
    try:
        flux = FluxFunction.named(args.flux)
    except ValueError as exc:
        report["error"] = str(exc)
        _emit(report, args.json_out)
        return EXIT_SCHEMA
    alpha = (args.alpha1, args.alpha2)
    t0 = time.time()
    try:
        system = build_atoms(flux, alpha, args.s0, args.t0)
    except AtomConstructionError as exc:
        report["error"] = str(exc)
        if flux.a_prime(args.alpha2) < 0:
            report["negative_branch_evidence"] = negative_branch_evidence(
                flux, alpha, delta=max(args.s0, args.t0), samples=10000, seed=args.seed
            )
        _emit(report, args.json_out)
        return EXIT_PRECONDITION
    report["system"] = system.to_json()
    eps = system.eps0 / 2 if args.eps == "auto" else float(args.eps)
    try:
        result = iterate_weights(system, eps, tol=args.tol)
        mu_alpha = five_atom_measure(system, result, tol=args.measure_tol)
        pushed = push_forward_to_K1(mu_alpha, flux, alpha, tol=args.measure_tol)
    except (IterationError, ValueError, RuntimeError) as exc:
        report["error"] = str(exc)
        _emit(report, args.json_out)
        return EXIT_PRECONDITION
    report["timings"]["construction"] = time.time() - t0
    rep_alpha = is_null_lagrangian(mu_alpha, orders=2, tol=args.measure_tol)
    rep_pushed = is_null_lagrangian(pushed, orders=2, tol=args.measure_tol)
    report["iteration"] = result.to_json()
    report["measure_stripped"] = mu_alpha.to_json()
    report["measure"] = pushed.to_json()
    report["verdicts"] = [
        {"operation": "iterate_weights", "converged": True, "g_norm": result.g_norm,
         "steps": len(result.trace)},
        {"operation": "five_atom_measure", "max_residual": rep_alpha.max_residual(),
         "verdict": rep_alpha.verdict},
        {"operation": "push_forward_to_K1", "max_residual": rep_pushed.max_residual(),
         "verdict": rep_pushed.verdict, "support_radius": support_radius(pushed)},
    ]
    report["conclusion"] = "five-atom measure constructed and pushed to the full manifold"
    _emit(report, args.json_out)
    return EXIT_VERIFIED


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _verify_measure_obj(obj, tol):
    mu = DiscreteMeasure.from_json(obj)
    rep = is_null_lagrangian(mu, tol=tol)
    entry = {
        "operation": "is_null_lagrangian",
        "exact": rep.exact,
        "verdict": rep.verdict,
        "max_residual": None if rep.exact else rep.max_residual(),
        "checked": rep.checked,
        "skipped": rep.skipped,
    }
    if not rep.verdict:
        worst = max(rep.residuals, key=lambda k: abs(rep.residuals[k]))
        entry["witness_minor"] = {
            "rows": list(worst[0]),
            "cols": list(worst[1]),
            "residual": str(rep.residuals[worst]),
        }
    return rep.verdict, entry


def _verify_certificate_obj(obj, tol):
    K = Subspace.from_json(obj["subspace"])
    chain, terminal = TrivialityCertificate.chain_from_json(obj)
    entries = []
    d = K.d
    expected_cone = [tuple(Fraction(int(i == j)) for i in range(d)) for j in range(d)]
    ok = True
    cone = expected_cone
    for step, (beta, stored_cone) in enumerate(chain):
        if not _same_span(cone, stored_cone, d):
            entries.append({"operation": "verify-cert", "step": step, "error": "cone mismatch"})
            ok = False
            break
        comb = MinorCombination(beta, combination_form(K, beta))
        rep = verify_combination(K, comb, cone)
        entry = {"operation": "verify_combination", "step": step, "verdict": rep.verdict}
        if not rep.ok:
            if rep.neg_witness is not None:
                entry["witness_point"] = [rat_to_str(x) for x in rep.neg_witness]
            entries.append(entry)
            ok = False
            break
        entries.append(entry)
        cone = rep.kernel
    else:
        if terminal and cone:
            entries.append({"operation": "verify-cert", "error": "chain does not terminate at the origin"})
            ok = False
        if not terminal and not cone:
            entries.append({"operation": "verify-cert", "error": "terminal flag understates the chain"})
            ok = False
    return ok, entries


def _same_span(c1, c2, d):
    from .algebra import RationalMatrix

    if not c1 and not c2:
        return True
    if not c1 or not c2:
        return False
    m1 = RationalMatrix([list(v) for v in c1])
    m2 = RationalMatrix([list(v) for v in c2])
    both = RationalMatrix([list(v) for v in list(c1) + list(c2)])
    return m1.rank() == m2.rank() == both.rank()


def cmd_verify(args):
    try:
        obj = _load_json(args.artifact)
    except (OSError, json.JSONDecodeError) as exc:
        _emit({"command": "verify", "error": str(exc)}, args.json_out)
        return EXIT_SCHEMA
    report = _report("verify", obj)
    targets = []
    kind = obj.get("kind")
    if kind == "measure":
        targets.append(("measure", obj))
    elif kind == "triviality-certificate":
        targets.append(("certificate", obj))
    elif kind == "grassmann-scan":
        targets.append(("grassmann", obj))
    elif "measure" in obj or "certificate" in obj or "measure_stripped" in obj:
        # a run report embedding artifacts: verify everything inside
        for key in ("measure", "measure_stripped"):
            if key in obj:
                targets.append(("measure", obj[key]))
        if "certificate" in obj:
            targets.append(("certificate", obj["certificate"]))
    elif "basis" in obj:
        targets.append(("subspace", obj))
    if not targets:
        if "command" in obj and "verdicts" in obj:
            report["conclusion"] = "report carries no re-verifiable artifact; schema accepted"
            report["verdicts"].append({"operation": "report-schema", "verdict": True})
            _emit(report, args.json_out)
            return EXIT_VERIFIED
        report["error"] = "artifact carries nothing verifiable"
        _emit(report, args.json_out)
        return EXIT_SCHEMA
    all_ok = True
    try:
        for kind_i, target in targets:
            if kind_i == "measure":
                ok, entry = _verify_measure_obj(target, args.tol)
                report["verdicts"].append(entry)
                all_ok = all_ok and ok
            elif kind_i == "certificate":
                ok, entries = _verify_certificate_obj(target, args.tol)
                report["verdicts"].extend(entries)
                all_ok = all_ok and ok
            else:
                Subspace.from_json(target)
                report["verdicts"].append({"operation": "subspace-schema", "verdict": True})
    except (ValueError, KeyError) as exc:
        report["error"] = str(exc)
        _emit(report, args.json_out)
        return EXIT_SCHEMA
    report["conclusion"] = "verified" if all_ok else "verification failed"
    _emit(report, args.json_out)
    return EXIT_VERIFIED if all_ok else EXIT_FAILED


# ---------------------------------------------------------------------------
# grassmann scan
# ---------------------------------------------------------------------------

def _scan_one(task):
    k, m, n, seed, lambda_tol = task
    rng = np.random.default_rng(seed)
    p = m * n
    basis = rng.standard_normal((p, p))
    while abs(np.linalg.det(basis)) < 1e-8:
        basis = rng.standard_normal((p, p))
    W0 = [list(v) for v in basis[:k]]
    W1 = [list(v) for v in basis[k:]]
    A = rng.standard_normal((p - k, k))
    rep = grassmann_genericity(k, m, n, (W0, W1), A, lambda_tol=lambda_tol, exact=False)
    return {
        "seed": seed,
        "lambda": rep.lambda_value,
        "span_dim": rep.span_dim,
        "pd_found": bool(rep.beta is not None and rep.min_eigenvalue is not None and rep.min_eigenvalue > 0),
        "min_eigenvalue": rep.min_eigenvalue,
    }


def cmd_grassmann_scan(args):
    k, m, n = args.k, args.m, args.n
    inputs = {"k": k, "m": m, "n": n, "samples": args.samples, "seed": args.seed}
    report = _report("grassmann-scan", inputs, seed=args.seed)
    if k > m * n or k < 1 or m < 2 or n < 2:
        report["error"] = "bad dimensions"
        _emit(report, args.json_out)
        return EXIT_SCHEMA
    t0 = time.time()
    tasks = [(k, m, n, args.seed + i, args.lambda_tol) for i in range(args.samples)]
    threads = worker_count()
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_scan_one, tasks))
    else:
        results = [_scan_one(t) for t in tasks]
    nonzero = sum(1 for r in results if abs(r["lambda"]) > args.lambda_tol)
    pd_found = sum(1 for r in results if r["pd_found"])
    report["kind"] = "grassmann-scan"
    report["inputs"] = inputs
    report["lambda_tol"] = args.lambda_tol
    report["samples"] = results
    report["summary"] = {
        "lambda_nonzero_fraction": nonzero / max(1, len(results)),
        "pd_fraction": pd_found / max(1, len(results)),
        "target_span_dim": k * (k + 1) // 2,
    }
    if 2 * k <= min(m, n):
        from .fixtures import v0_chart

        chart, A0 = v0_chart(k, m, n)
        rep = grassmann_genericity(k, m, n, chart, A0, lambda_tol=args.lambda_tol)
        report["v0_probe"] = {
            "lambda": rep.lambda_value,
            "lambda_nonzero": abs(rep.lambda_value) > args.lambda_tol,
            "span_dim": rep.span_dim,
            "exact_span_dim": rep.exact_span_dim,
        }
    report["timings"]["scan"] = time.time() - t0
    report["verdicts"].append(
        {
            "operation": "grassmann_genericity",
            "fraction_generic": report["summary"]["pd_fraction"],
        }
    )
    _emit(report, args.json_out)
    return EXIT_VERIFIED


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------

def cmd_fixtures(args):
    if args.action == "list":
        entries = []
        for name in builtin_names():
            e = builtin(name)
            entries.append({"name": name, "expected": e.expected, "source": e.source,
                            "shape": [e.subspace.m, e.subspace.n], "d": e.subspace.d})
        _emit({"command": "fixtures", "fixtures": entries}, args.json_out)
        return EXIT_VERIFIED
    try:
        entry = builtin(args.name)
    except KeyError as exc:
        _emit({"command": "fixtures", "error": str(exc)}, args.json_out)
        return EXIT_SCHEMA
    out = {
        "command": "fixtures",
        "name": args.name,
        "expected": entry.expected,
        "source": entry.source,
        "subspace": entry.subspace.to_json(),
    }
    if args.name.startswith("Kr"):
        r = entry.subspace.d - 4
        out["measure"] = kr_measure(r).to_json()
    _emit(out, args.json_out)
    return EXIT_VERIFIED


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="nullag",
        description="Certify triviality of, or construct, commuting measures on matrix subspaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="decide a subspace: certificate, measure, or inconclusive")
    pa.add_argument("subspace", help="subspace JSON path ('-' for stdin)")
    pa.add_argument("--tol", type=float, default=1e-9)
    pa.add_argument("--absent-tol", type=float, default=1e-6)
    pa.add_argument("--density", type=int, default=20000)
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("--budget", type=int, default=512)
    pa.add_argument("--candidates", type=json.loads, default=None,
                    help="extra atom directions as a JSON list of rational-string vectors")
    pa.add_argument("--json-out", default=None)
    pa.set_defaults(func=cmd_analyze)

    pk = sub.add_parser("k1", help="five-atom construction on the conservation-law manifold")
    pk.add_argument("--flux", default="linear", help='"linear", "quadratic:c", "cubic:c", or an expression in v')
    pk.add_argument("--alpha1", type=float, default=0.0)
    pk.add_argument("--alpha2", type=float, default=0.0)
    pk.add_argument("--s0", type=float, default=0.1)
    pk.add_argument("--t0", type=float, default=0.1)
    pk.add_argument("--eps", default="auto", help='mass off the base atom; "auto" = eps0/2')
    pk.add_argument("--tol", type=float, default=1e-12)
    pk.add_argument("--measure-tol", type=float, default=1e-9)
    pk.add_argument("--seed", type=int, default=0)
    pk.add_argument("--json-out", default=None)
    pk.set_defaults(func=cmd_k1)

    pv = sub.add_parser("verify", help="re-verify an emitted artifact")
    pv.add_argument("artifact", help="measure/certificate/report JSON path ('-' for stdin)")
    pv.add_argument("--tol", type=float, default=1e-9)
    pv.add_argument("--json-out", default=None)
    pv.set_defaults(func=cmd_verify)

    pg = sub.add_parser("grassmann-scan", help="genericity scan over random chart points")
    pg.add_argument("k", type=int)
    pg.add_argument("m", type=int)
    pg.add_argument("n", type=int)
    pg.add_argument("--samples", type=int, default=200)
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--lambda-tol", type=float, default=1e-12)
    pg.add_argument("--json-out", default=None)
    pg.set_defaults(func=cmd_grassmann_scan)

    pf = sub.add_parser("fixtures", help="list or dump named fixtures")
    pf.add_argument("action", choices=["list", "dump"])
    pf.add_argument("name", nargs="?", default=None)
    pf.add_argument("--json-out", default=None)
    pf.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "fixtures" and args.action == "dump" and not args.name:
        parser.error("fixtures dump needs a name")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
