"""Run every verification command at its full budget and collect the outputs.

Produces lemmas.json, sweep.csv (+ manifest and dump files), growth.csv,
and extremal.json under --out-dir. Exit code is the worst exit code of the
individual commands, so a violation anywhere fails the whole run.
"""

import argparse
import sys
import time
from pathlib import Path

from tracemax.cli import main as tmx


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", type=Path, default=Path("results"))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--quick", action="store_true",
        help="reduced budgets for a smoke run (seconds instead of minutes)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    seed = str(args.seed)

    trials = "200" if args.quick else "10000"
    restarts = "2" if args.quick else "20"
    steps = "50" if args.quick else "500"
    audit = "200" if args.quick else "10000"

    commands = [
        ("verify-lemmas", [
            "verify-lemmas", "--trials", trials, "--dim-max", "5", "--p-max", "8",
            "--seed", seed, "--out", str(out / "lemmas.json"),
        ]),
        ("extremal", [
            "extremal", "--n", "3", "--L", "1.0,2.0,0.5", "--alpha", "0.5,0.25,0.75",
            "--p", "6", "--oracle", "--out", str(out / "extremal.json"),
        ]),
        ("search", [
            "search", "--n", "1,2,3", "--members", "1,2,3", "--p", "1,2,3,4,5,6",
            "--alpha", "0.5", "--L", "1.0", "--restarts", restarts, "--steps", steps,
            "--atoms", "3", "--sampler-trials", audit, "--seed", seed,
            "--out", str(out / "sweep.csv"),
        ]),
        ("corollary", [
            "corollary", "--p-max", "30", "--n-max", "50",
            "--out", str(out / "growth.csv"),
        ]),
    ]

    worst = 0
    for name, argv_cmd in commands:
        print(f"=== {name} ===")
        started = time.perf_counter()
        code = tmx(argv_cmd)
        elapsed = time.perf_counter() - started
        print(f"=== {name}: exit {code} in {elapsed:.1f}s ===\n")
        worst = max(worst, code)

    print(f"outputs in {out}/, worst exit code {worst}")
    return worst


if __name__ == "__main__":
    sys.exit(main())
