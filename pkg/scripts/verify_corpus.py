#!/usr/bin/env python3
"""Run every verification suite over a corpus directory and summarise.

Prints one row per choreography with the four suite verdicts and wall
time.  Exit status is nonzero when any projectable program fails a
suite; files that are not projectable are reported and skipped unless
--strict also counts them as failures.
"""

import argparse
import sys
import time
from pathlib import Path

from chorkit.checker import (
    check_cc_confluence,
    check_deadlock_freedom,
    check_sp_confluence,
    verify_epp,
)
from chorkit.projection import epp_program, infer_params, projectable
from chorkit.syntax import ParseError, parse


def short(verdict) -> str:
    if verdict.status == "verified":
        return "ok"
    if verdict.status == "verified-to-depth":
        return f"ok@{verdict.depth}"
    return verdict.status


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("corpus", nargs="?", default="corpus", type=Path)
    ap.add_argument("--depth", type=int, default=10)
    ap.add_argument("--join-depth", type=int, default=4)
    ap.add_argument("--strict", action="store_true",
                    help="count unprojectable files as failures")
    args = ap.parse_args(argv)

    files = sorted(args.corpus.glob("*.chor"))
    if not files:
        print(f"no .chor files under {args.corpus}", file=sys.stderr)
        return 2

    width = max(len(f.stem) for f in files)
    failures = 0
    header = f"{'program':<{width}}  {'epp':<8} {'deadlock':<8} {'confl-c':<8} {'confl-n':<8} time"
    print(header)
    print("-" * len(header))
    for f in files:
        try:
            program = parse(f.read_text(), str(f)).program
        except ParseError as e:
            print(f"{f.stem:<{width}}  parse error: {e}")
            failures += 1
            continue
        xs, ps = infer_params(program)
        if projectable(xs, ps, program):
            print(f"{f.stem:<{width}}  not projectable")
            if args.strict:
                failures += 1
            continue
        t0 = time.perf_counter()
        epp_v = verify_epp(program, depth=args.depth)
        dl_v = check_deadlock_freedom(program, depth=args.depth)
        cc_v = check_cc_confluence(program, depth=args.depth, join_depth=args.join_depth)
        sp_v = check_sp_confluence(
            epp_program(program), depth=args.depth, join_depth=args.join_depth
        )
        dt = time.perf_counter() - t0
        row = (epp_v, dl_v, cc_v, sp_v)
        if not all(v.ok for v in row):
            failures += 1
        cells = "".join(f"{short(v):<9}" for v in row)
        print(f"{f.stem:<{width}}  {cells}{dt:6.2f}s")
        for v in row:
            if not v.ok:
                print(f"{'':<{width}}  -> {v}")
    print("-" * len(header))
    print(f"{len(files)} programs, {failures} failing")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
