#!/usr/bin/env python3
"""Sweep the merge algebra and the branching preorder over small terms.

Enumerates every behaviour up to --depth over two processes, then checks
idempotence and commutativity exhaustively, associativity on a seeded
sample, the characterisation of the preorder against merge on all
pairs, and the lattice lemmas on sampled covers.  Reports throughput so
budget regressions show up early.
"""

import argparse
import random
import time

from chorkit.merge import UNDEFINED, xmerge
from chorkit.net import Branch, Cond, Recv, SelectSend, Send
from chorkit.pruning import xmore_branches
from chorkit.smallterms import behaviour_space


def timed(label, count, fn):
    t0 = time.perf_counter()
    bad = fn()
    dt = time.perf_counter() - t0
    rate = count / dt if dt else float("inf")
    status = "ok" if not bad else f"{bad} VIOLATIONS"
    print(f"{label:<26} {count:>12,} checks  {dt:8.2f}s  {rate:12,.0f}/s  {status}")
    return bad


def prune_randomly(b, rng):
    t = type(b)
    if t is Branch:
        l, r = b.on_left, b.on_right
        if l is not None:
            l = None if rng.random() < 0.3 else prune_randomly(l, rng)
        if r is not None:
            r = None if rng.random() < 0.3 else prune_randomly(r, rng)
        return Branch(b.peer, l, r)
    if t is Send:
        return Send(b.peer, b.expr, prune_randomly(b.cont, rng))
    if t is Recv:
        return Recv(b.peer, b.var, prune_randomly(b.cont, rng))
    if t is SelectSend:
        return SelectSend(b.peer, b.label, prune_randomly(b.cont, rng))
    if t is Cond:
        return Cond(b.guard, prune_randomly(b.then_b, rng), prune_randomly(b.else_b, rng))
    return b


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=int, default=3)
    ap.add_argument("--assoc-samples", type=int, default=100_000)
    ap.add_argument("--cover-samples", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=1906)
    args = ap.parse_args(argv)

    space = behaviour_space(args.depth)
    n = len(space)
    print(f"depth {args.depth}: {n:,} behaviours")
    violations = 0

    def idempotence():
        return sum(1 for a in space if xmerge(a, a) != a)

    violations += timed("idempotence", n, idempotence)

    def commutativity():
        bad = 0
        for i, a in enumerate(space):
            tail = space[i:]
            if [xmerge(a, b) for b in tail] != [xmerge(b, a) for b in tail]:
                bad += 1
        return bad

    violations += timed("commutativity", n * (n + 1) // 2, commutativity)

    rng = random.Random(args.seed)

    def associativity():
        bad = 0
        for _ in range(args.assoc_samples):
            a = space[rng.randrange(n)]
            b = space[rng.randrange(n)]
            c = space[rng.randrange(n)]
            left = xmerge(xmerge(a, b), c)
            right = xmerge(a, xmerge(b, c))
            if left is UNDEFINED:
                bad += right is not UNDEFINED
            else:
                bad += left != right
        return bad

    violations += timed("associativity (sampled)", args.assoc_samples, associativity)

    def characterisation():
        bad = 0
        for a in space:
            for b in space:
                m = xmerge(a, b)
                if xmore_branches(a, b) != (m is a or m == a):
                    bad += 1
        return bad

    violations += timed("characterisation", n * n, characterisation)

    def cover_lemmas():
        bad = 0
        for _ in range(args.cover_samples):
            top = space[rng.randrange(n)]
            b1 = prune_randomly(top, rng)
            b2 = prune_randomly(top, rng)
            m = xmerge(b1, b2)
            if m is UNDEFINED or not xmore_branches(top, m):
                bad += 1
                continue
            if not (xmore_branches(m, b1) and xmore_branches(m, b2)):
                bad += 1
                continue
            ms = xmerge(prune_randomly(b1, rng), prune_randomly(b2, rng))
            if ms is UNDEFINED or not xmore_branches(m, ms):
                bad += 1
        return bad

    violations += timed("cover lemmas (sampled)", args.cover_samples, cover_lemmas)

    print("all clear" if not violations else f"{violations} checks violated")
    return 1 if violations else 0


if __name__ == "__main__":
    raise SystemExit(main())
