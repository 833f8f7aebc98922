"""tmx: reproducible verification runs over the trace-moment testbed.

Four subcommands: verify-lemmas (randomized checker sweep), extremal
(closed-form maximum with its reduction trace), search (adversarial gap
sweep), corollary (binomial moment growth table). Randomized commands
require an explicit --seed, and identical command lines produce
byte-identical output files; manifests therefore carry no wall-clock
fields. JSON reports embed their manifest, CSV tables get a sibling
<out>.manifest.json.

Exit codes: 0 success, 1 validation or I/O error, 2 inequality violation
or checker failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .checks import LemmaId, run_lemma_sweep
from .errors import TracemaxError
from .extremal import (
    BernoulliParams,
    bernoulli_sum_moment_enum,
    corollary_growth,
    partial_sum_moments,
)
from .search import SearchConfig, gap_sweep

VERSION = "0.1.0"

_LEMMA_ORDER = [
    LemmaId.HOLDER,
    LemmaId.ALT,
    LemmaId.ALT_SCHATTEN,
    LemmaId.WORD_BOUND,
    LemmaId.EXPECTATION_WORD_BOUND,
    LemmaId.BINOMIAL_REDUCTION,
]


def _manifest(command: str, parameters: dict, seed: int | None, outputs: list[str]) -> dict:
    return {
        "command": command,
        "parameters": parameters,
        "seed": seed,
        "version": VERSION,
        "outputs": outputs,
    }


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: str, rows: list[str]) -> None:
    path.write_text("\n".join([header, *rows]) + "\n", encoding="utf-8")


def _floats(raw: str) -> list[float]:
    values = [float(v) for v in raw.split(",") if v.strip()]
    if not values:
        raise ValueError(f"empty list argument: {raw!r}")
    return values


def _ints(raw: str) -> list[int]:
    values = [int(v) for v in raw.split(",") if v.strip()]
    if not values:
        raise ValueError(f"empty list argument: {raw!r}")
    return values


def cmd_verify_lemmas(args: argparse.Namespace) -> int:
    summaries = run_lemma_sweep(args.trials, args.dim_max, args.p_max, args.seed)
    ordered = [summaries[lemma] for lemma in _LEMMA_ORDER if lemma in summaries]
    all_passed = all(s.all_passed for s in ordered)
    for s in ordered:
        print(
            f"{s.lemma_id.value}: {s.passes}/{s.trials} passed, "
            f"min slack {s.min_slack:.6e}, min normalized slack {s.min_norm_slack:.6e}, "
            f"worst {s.worst_digest}"
        )
    print("all lemmas passed" if all_passed else "LEMMA CHECK FAILED")
    if args.out:
        parameters = {
            "trials": args.trials, "dim_max": args.dim_max, "p_max": args.p_max,
        }
        doc = {
            "manifest": _manifest("verify-lemmas", parameters, args.seed, [args.out]),
            "lemmas": [
                {
                    "lemma": s.lemma_id.value,
                    "trials": s.trials,
                    "passes": s.passes,
                    "min_slack": s.min_slack,
                    "min_norm_slack": s.min_norm_slack,
                    "worst_digest": s.worst_digest,
                }
                for s in ordered
            ],
            "all_passed": all_passed,
        }
        _write_json(Path(args.out), doc)
    return 0 if all_passed else 2


def cmd_extremal(args: argparse.Namespace) -> int:
    caps = _floats(args.L)
    alphas = _floats(args.alpha)
    params = BernoulliParams(caps=tuple(caps), alphas=tuple(alphas))
    if args.n < 1:
        raise TracemaxError(f"dimension must be positive, got {args.n}")
    history = partial_sum_moments(params, args.p)
    scalar_moment = history[-1][args.p]
    value = args.n * scalar_moment
    steps = []
    for k, (cap, alpha) in enumerate(zip(params.caps, params.alphas), start=1):
        partial = history[k][args.p]
        steps.append({"member": k, "cap": cap, "alpha": alpha, "partial_moment": partial})
        print(
            f"reduce member {k}: cap={cap!r} alpha={alpha!r} -> "
            f"E(f_1+...+f_{k})^{args.p} = {partial!r}"
        )
    print(f"maximum: n * E(f_1+...+f_{params.count})^{args.p} = {value!r}")
    oracle_value = None
    if args.oracle:
        oracle_value = args.n * bernoulli_sum_moment_enum(params, args.p)
        rel = abs(value - oracle_value) / max(abs(oracle_value), 1.0)
        print(f"enumeration oracle: {oracle_value!r} (relative difference {rel:.3e})")
    if args.out:
        parameters = {
            "n": args.n, "L": caps, "alpha": alphas, "p": args.p, "oracle": args.oracle,
        }
        doc = {
            "manifest": _manifest("extremal", parameters, None, [args.out]),
            "n": args.n,
            "p": args.p,
            "caps": caps,
            "alphas": alphas,
            "steps": steps,
            "scalar_moment": scalar_moment,
            "value": value,
        }
        if oracle_value is not None:
            doc["oracle_value"] = oracle_value
        _write_json(Path(args.out), doc)
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    config = SearchConfig(
        restarts=args.restarts,
        steps_per_restart=args.steps,
        seed=args.seed,
        max_atoms=args.atoms,
    )
    outcome = gap_sweep(
        _ints(args.n),
        _ints(args.members),
        _ints(args.p),
        _floats(args.alpha),
        _floats(args.L),
        config,
        sampler_trials=args.sampler_trials,
    )
    out = Path(args.out)
    header = "n,N,p,alphas,Ls,best_value,theorem_value,gap,seed"
    rows = [
        ",".join(
            [
                str(r.n), str(r.members), str(r.p),
                ";".join(repr(a) for a in r.alphas),
                ";".join(repr(c) for c in r.caps),
                repr(r.best_value), repr(r.theorem_value), repr(r.gap), str(r.seed),
            ]
        )
        for r in outcome.rows
    ]
    _write_csv(out, header, rows)
    outputs = [str(out)]

    dump_paths = []
    for i, dump in enumerate(outcome.violations):
        path = out.with_suffix(f".violation{i}.json")
        _write_json(path, dump)
        dump_paths.append(str(path))
        print(f"VIOLATION dumped to {path}", file=sys.stderr)
    for i, dump in enumerate(outcome.near_misses):
        path = out.with_suffix(f".near{i}.json")
        _write_json(path, dump)
        dump_paths.append(str(path))
    outputs.extend(dump_paths)

    parameters = {
        "n": args.n, "members": args.members, "p": args.p,
        "alpha": args.alpha, "L": args.L,
        "restarts": args.restarts, "steps": args.steps, "atoms": args.atoms,
        "sampler_trials": args.sampler_trials,
    }
    manifest_doc = {
        "manifest": _manifest("search", parameters, args.seed, outputs),
        "cells": len(outcome.rows),
        "violations": len(outcome.violations),
        "near_misses": len(outcome.near_misses),
        "errors": [{"cell": cell, "message": msg} for cell, msg in outcome.errors],
    }
    if outcome.audit is not None:
        manifest_doc["sampler_audit"] = {
            "trials": outcome.audit.trials,
            "passes": outcome.audit.passes,
            "min_slack": outcome.audit.min_slack,
            "min_norm_slack": outcome.audit.min_norm_slack,
            "worst_digest": outcome.audit.worst_digest,
        }
    _write_json(out.with_suffix(out.suffix + ".manifest.json"), manifest_doc)

    mins = min((r.gap for r in outcome.rows), default=math.inf)
    print(f"{len(outcome.rows)} cells, min gap {mins!r}")
    if outcome.audit is not None:
        print(
            f"sampler audit: {outcome.audit.passes}/{outcome.audit.trials} passed, "
            f"min normalized slack {outcome.audit.min_norm_slack:.6e}"
        )
    if outcome.errors:
        for cell, msg in outcome.errors:
            print(f"cell error {cell}: {msg}", file=sys.stderr)
    if outcome.violations:
        print("VIOLATION FOUND")
    elif outcome.audit is not None and not outcome.audit.all_passed:
        print("SAMPLER AUDIT FAILED")
    elif outcome.errors:
        print(f"sweep incomplete: {len(outcome.errors)} cells errored")
    else:
        print("no violations")
    return 0 if outcome.clean else 2


def cmd_corollary(args: argparse.Namespace) -> int:
    if args.p_max < 2 or args.n_max < 2:
        raise TracemaxError(
            f"need p_max >= 2 and n_max >= 2, got {args.p_max}, {args.n_max}"
        )
    n_grid = list(range(2, args.n_max + 1))
    p_grid = list(range(2, args.p_max + 1))
    rows, supremum = corollary_growth(n_grid, p_grid)
    print(f"{len(rows)} grid points, ratio supremum {supremum!r}")
    if args.out:
        out = Path(args.out)
        csv_rows = [
            ",".join([str(r.n), str(r.p), repr(r.value), repr(r.ratio)]) for r in rows
        ]
        _write_csv(out, "n,p,value,ratio", csv_rows)
        parameters = {"p_max": args.p_max, "n_max": args.n_max}
        manifest_doc = {
            "manifest": _manifest("corollary", parameters, None, [str(out)]),
            "ratio_supremum": supremum,
            "grid_points": len(rows),
        }
        _write_json(out.with_suffix(out.suffix + ".manifest.json"), manifest_doc)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tmx",
        description="Numerical testbed for the extremal trace-moment inequality.",
    )
    parser.add_argument("--version", action="version", version=f"tmx {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify-lemmas", help="randomized sweep of all lemma checkers")
    verify.add_argument("--trials", type=int, default=10000)
    verify.add_argument("--dim-max", type=int, default=5)
    verify.add_argument("--p-max", type=int, default=8)
    verify.add_argument("--seed", type=int, required=True)
    verify.add_argument("--out", type=str, default="")
    verify.set_defaults(handler=cmd_verify_lemmas)

    extremal = sub.add_parser("extremal", help="closed-form maximum and reduction trace")
    extremal.add_argument("--n", type=int, required=True)
    extremal.add_argument("--L", type=str, required=True, help="comma list of caps")
    extremal.add_argument("--alpha", type=str, required=True, help="comma list of alphas")
    extremal.add_argument("--p", type=int, required=True)
    extremal.add_argument("--oracle", action="store_true",
                          help="cross-check against 2^N enumeration")
    extremal.add_argument("--out", type=str, default="")
    extremal.set_defaults(handler=cmd_extremal)

    search = sub.add_parser("search", help="adversarial gap sweep over a grid")
    search.add_argument("--n", type=str, required=True, help="comma list of dimensions")
    search.add_argument("--members", type=str, required=True, help="comma list of N values")
    search.add_argument("--p", type=str, required=True, help="comma list of powers")
    search.add_argument("--alpha", type=str, default="0.5", help="comma list")
    search.add_argument("--L", type=str, default="1.0", help="comma list")
    search.add_argument("--restarts", type=int, default=20)
    search.add_argument("--steps", type=int, default=500)
    search.add_argument("--atoms", type=int, default=3, help="max atoms per member")
    search.add_argument("--sampler-trials", type=int, default=0,
                        help="extra audit: sampled families checked against the maximum")
    search.add_argument("--seed", type=int, required=True)
    search.add_argument("--out", type=str, required=True, help="output CSV path")
    search.set_defaults(handler=cmd_search)

    corollary = sub.add_parser("corollary", help="binomial moment growth table")
    corollary.add_argument("--p-max", type=int, default=30)
    corollary.add_argument("--n-max", type=int, default=50)
    corollary.add_argument("--out", type=str, default="")
    corollary.set_defaults(handler=cmd_corollary)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except TracemaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


def entry() -> int:
    return main()
