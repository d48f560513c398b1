"""Bounded checker for the projection correspondence theorem.

Explores the synchronous product of a choreography and its compiled
network, certifying two directions at every reached pair: every
choreography transition is matched by a network transition with the same
observable label (completeness), and vice versa (soundness).  Matching is
up to pruning: the running network may have fewer branching options than
the freshly projected choreography, because selections already made have
discarded alternatives, so the requirement is that the network after the
step still offers at least the options of the projection of the stepped
choreography.

Exploration is breadth-first with memoisation on canonical forms, so a
reported counterexample is at minimal depth.  When the reachable space is
exhausted below the depth bound the certificate is total for the program;
otherwise it holds up to the bound.  Along the way the checker asserts
per-label determinism and procedure-table stability of the network
semantics, and that every network call label names the acting process;
these counts are reported in the verdict.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Optional, Tuple

from . import projection, pruning
from .chor import (
    ChorProgram,
    Choreography,
    End as ChorEnd,
    cc_check_wf,
    cc_enabled,
    chor_pids,
)
from .core import (
    EMPTY_STATE,
    ObsLabel,
    RichCall,
    State,
    forget,
    obs_label_text,
)
from .merge import UNDEFINED, collapse
from .net import Network, NetProgram, sp_enabled, sp_step


def _prunes(wider: Network, projected: Network) -> bool:
    """The invariant relation: the live network may only have extra options."""
    return pruning.net_more_branches(wider, projected)


@dataclass(frozen=True)
class PairedConfig:
    """One node of the product exploration; the two sides share the state."""

    cc_main: Choreography
    sp_net: Network
    state: State
    depth: int


@dataclass(frozen=True)
class Counterexample:
    direction: str  # completeness | soundness | locality | invariant
    config: PairedConfig
    label: Optional[ObsLabel]
    explanation: str

    def __str__(self) -> str:
        lbl = f" on {obs_label_text(self.label)}" if self.label is not None else ""
        return f"{self.direction} failure at depth {self.config.depth}{lbl}: {self.explanation}"


@dataclass(frozen=True)
class HypothesisFailure:
    name: str
    detail: str

    def __str__(self) -> str:
        return f"{self.name}: {self.detail}"


@dataclass
class Verdict:
    status: str  # verified | verified-to-depth | counterexample | hypotheses-violated
    depth: int
    configs_explored: int = 0
    transitions_matched: int = 0
    counterexample: Optional[Counterexample] = None
    hypothesis_failures: Tuple[HypothesisFailure, ...] = ()
    determinism_checks: int = 0
    determinism_violations: int = 0
    stability_checks: int = 0
    stability_violations: int = 0
    locality_checks: int = 0
    locality_violations: int = 0

    @property
    def ok(self) -> bool:
        return self.status in ("verified", "verified-to-depth")

    def __str__(self) -> str:
        if self.status == "verified":
            return (
                f"verified (space exhausted; {self.configs_explored} configs, "
                f"{self.transitions_matched} transitions)"
            )
        if self.status == "verified-to-depth":
            return (
                f"verified to depth {self.depth} ({self.configs_explored} configs, "
                f"{self.transitions_matched} transitions)"
            )
        if self.status == "hypotheses-violated":
            body = "; ".join(str(h) for h in self.hypothesis_failures)
            return f"hypotheses violated: {body}"
        return f"counterexample: {self.counterexample}"


def check_hypotheses(
    p: ChorProgram, xs, ps
) -> Tuple[HypothesisFailure, ...]:
    """The preconditions under which the correspondence is claimed.

    Well-formedness of the program, declared-parameter coverage of every
    process the program can mention, projectability, and strong
    projectability of main at every listed process.
    """
    out: list = []
    wf = cc_check_wf(p)
    for v in wf.violations:
        name = "well-annotation" if v.rule == "undeclared-process-use" else "well-formedness"
        out.append(HypothesisFailure(name, str(v)))
    if not wf.ok:
        return tuple(out)
    vars_of = lambda name: p.procs[name].params if name in p.procs else ()
    ps_set = set(ps)
    for pid in sorted(chor_pids(p.main, vars_of) - ps_set):
        out.append(
            HypothesisFailure("pid-coverage", f"process {pid} of main not in ps")
        )
    for name in sorted(xs):
        d = p.procs.get(name)
        if d is None:
            out.append(HypothesisFailure("pid-coverage", f"procedure {name} undefined"))
            continue
        for pid in d.params:
            if pid not in ps_set:
                out.append(
                    HypothesisFailure(
                        "pid-coverage", f"declared process {pid} of {name} not in ps"
                    )
                )
    for f in projection.projectable(xs, ps, p):
        out.append(HypothesisFailure("projectability", str(f)))
    for pid in ps:
        if not projection.str_projectable(p.procs, p.main, pid):
            out.append(
                HypothesisFailure(
                    "strong-projectability", f"main not strongly projectable at {pid}"
                )
            )
    return tuple(out)


class _Context:
    """Per-verification immutable inputs plus the projection cache."""

    __slots__ = ("cc_procs", "sp_procs", "xs", "ps", "epp_cache")

    def __init__(self, p: ChorProgram, sp: NetProgram, xs, ps):
        self.cc_procs = p.procs
        self.sp_procs = sp.procs
        self.xs = xs
        self.ps = ps
        self.epp_cache: dict = {}

    def epp_net(self, main: Choreography) -> Optional[Network]:
        """Network of the projection of a reached choreography, or None.

        Only the network depends on the reached term; the compiled
        procedure table is fixed across transitions.
        """
        hit = self.epp_cache.get(main)
        if hit is not None:
            return hit if hit is not _NOT_PROJECTABLE else None
        entries = []
        for pid in self.ps:
            b = collapse(projection.bproj(self.cc_procs, main, pid))
            if b is UNDEFINED:
                self.epp_cache[main] = _NOT_PROJECTABLE
                return None
            entries.append((pid, b))
        net = Network(entries)
        self.epp_cache[main] = net
        return net


_NOT_PROJECTABLE = object()


def check_completeness_step(ctx: _Context, pc: PairedConfig):
    """Match every choreography transition by a network transition.

    Returns (successor configs, matches, counterexample or None).
    """
    cc_trans = cc_enabled(ctx.cc_procs, pc.cc_main, pc.state)
    if not cc_trans:
        return [], 0, None
    sp_trans = sp_enabled(ctx.sp_procs, pc.sp_net, pc.state)
    succs = []
    matched = 0
    for rich_cc, main2, s2cc in cc_trans:
        obs = forget(rich_cc)
        target = ctx.epp_net(main2)
        if target is None:
            return (
                succs,
                matched,
                Counterexample(
                    "completeness",
                    pc,
                    obs,
                    "stepped choreography is no longer projectable",
                ),
            )
        found = None
        reasons = []
        for rich_sp, net2, s2sp in sp_trans:
            if forget(rich_sp) != obs:
                continue
            if s2sp != s2cc:
                reasons.append("candidate changes the state differently")
                continue
            if not _prunes(net2, target):
                reasons.append(
                    "candidate network does not cover the projection of the successor"
                )
                continue
            found = (net2, s2sp)
            break
        if found is None:
            why = reasons[0] if reasons else "no network transition has this label"
            return (
                succs,
                matched,
                Counterexample("completeness", pc, obs, why),
            )
        matched += 1
        succs.append(PairedConfig(main2, found[0], found[1], pc.depth + 1))
    return succs, matched, None


def check_soundness_step(ctx: _Context, pc: PairedConfig):
    """Match every network transition by a choreography transition."""
    sp_trans = sp_enabled(ctx.sp_procs, pc.sp_net, pc.state)
    if not sp_trans:
        return [], 0, None, 0, 0
    cc_trans = cc_enabled(ctx.cc_procs, pc.cc_main, pc.state)
    succs = []
    matched = 0
    locality_checks = 0
    locality_violations = 0
    for rich_sp, net2, s2sp in sp_trans:
        if type(rich_sp) is RichCall:
            locality_checks += 1
            name = rich_sp.proc
            if not (isinstance(name, tuple) and name[1] == rich_sp.pid):
                locality_violations += 1
                return (
                    succs,
                    matched,
                    Counterexample(
                        "locality",
                        pc,
                        forget(rich_sp),
                        f"call label names {name!r} but {rich_sp.pid} acts",
                    ),
                    locality_checks,
                    locality_violations,
                )
        obs = forget(rich_sp)
        found = None
        reasons = []
        for rich_cc, main2, s2cc in cc_trans:
            if forget(rich_cc) != obs:
                continue
            if s2cc != s2sp:
                reasons.append("candidate changes the state differently")
                continue
            target = ctx.epp_net(main2)
            if target is None:
                reasons.append("stepped choreography is no longer projectable")
                continue
            if not _prunes(net2, target):
                reasons.append(
                    "network after the step does not cover the projection of the successor"
                )
                continue
            found = (main2, s2cc)
            break
        if found is None:
            why = reasons[0] if reasons else "no choreography transition has this label"
            return (
                succs,
                matched,
                Counterexample("soundness", pc, obs, why),
                locality_checks,
                locality_violations,
            )
        matched += 1
        succs.append(PairedConfig(found[0], net2, found[1], pc.depth + 1))
    return succs, matched, None, locality_checks, locality_violations


def _sp_self_checks(ctx: _Context, pc: PairedConfig, verdict: Verdict) -> None:
    """Determinism per rich label and procedure-table stability.

    Re-derives every network transition through sp_step and compares; two
    transitions with one label must agree on network and state.
    """
    program = NetProgram(ctx.sp_procs, pc.sp_net)
    trans = sp_enabled(ctx.sp_procs, pc.sp_net, pc.state)
    by_label: dict = {}
    for rich, net2, s2 in trans:
        by_label.setdefault(rich, []).append((net2, s2))
    for rich, succs in by_label.items():
        verdict.determinism_checks += 1
        first = succs[0]
        if any(other != first for other in succs[1:]):
            verdict.determinism_violations += 1
        verdict.stability_checks += 1
        stepped, _s2 = sp_step(program, pc.state, rich)
        if stepped.procs is not ctx.sp_procs or (stepped.net, _s2) != first:
            verdict.stability_violations += 1


def verify_epp(
    p: ChorProgram,
    depth: int = 10,
    s0: State = EMPTY_STATE,
    xs=None,
    ps=None,
) -> Verdict:
    """Certify the correspondence for one program up to a depth bound."""
    if xs is None or ps is None:
        ixs, ips = projection.infer_params(p)
        xs = ixs if xs is None else xs
        ps = ips if ps is None else ps
    failures = check_hypotheses(p, xs, ps)
    if failures:
        return Verdict("hypotheses-violated", depth, hypothesis_failures=failures)
    sp = projection.epp(xs, ps, p)
    ctx = _Context(p, sp, xs, ps)
    verdict = Verdict("verified", depth)
    root = PairedConfig(p.main, sp.net, s0, 0)
    if not _prunes(root.sp_net, ctx.epp_net(p.main) or Network()):
        return Verdict(
            "counterexample",
            depth,
            counterexample=Counterexample(
                "invariant", root, None, "initial network below its own projection"
            ),
        )
    seen = {(root.cc_main, root.sp_net, root.state)}
    queue = deque((root,))
    truncated = False
    while queue:
        pc = queue.popleft()
        verdict.configs_explored += 1
        _sp_self_checks(ctx, pc, verdict)
        comp_succs, comp_matched, cex = check_completeness_step(ctx, pc)
        verdict.transitions_matched += comp_matched
        if cex is not None:
            verdict.status = "counterexample"
            verdict.counterexample = cex
            return verdict
        snd_succs, snd_matched, cex, lc, lv = check_soundness_step(ctx, pc)
        verdict.transitions_matched += snd_matched
        verdict.locality_checks += lc
        verdict.locality_violations += lv
        if cex is not None:
            verdict.status = "counterexample"
            verdict.counterexample = cex
            return verdict
        if pc.depth >= depth:
            if comp_succs or snd_succs:
                truncated = True
            continue
        for succ in comp_succs + snd_succs:
            key = (succ.cc_main, succ.sp_net, succ.state)
            if key not in seen:
                seen.add(key)
                queue.append(succ)
    if verdict.determinism_violations or verdict.stability_violations:
        verdict.status = "counterexample"
        verdict.counterexample = Counterexample(
            "invariant",
            root,
            None,
            "network semantics violated determinism or stability",
        )
        return verdict
    verdict.status = "verified" if not truncated else "verified-to-depth"
    return verdict


# ---------------------------------------------------------------------------
# Deadlock-freedom and confluence suites


def check_deadlock_freedom(
    p: ChorProgram, depth: int = 10, s0: State = EMPTY_STATE
) -> Verdict:
    """Every reachable non-end configuration must have a transition."""
    verdict = Verdict("verified", depth)
    seen = {(p.main, s0)}
    queue = deque(((p.main, s0, 0),))
    truncated = False
    while queue:
        main, s, d = queue.popleft()
        verdict.configs_explored += 1
        trans = cc_enabled(p.procs, main, s)
        if not trans and type(main) is not ChorEnd:
            verdict.status = "counterexample"
            verdict.counterexample = Counterexample(
                "deadlock",
                PairedConfig(main, Network(), s, d),
                None,
                "non-end choreography with no transition",
            )
            return verdict
        if d >= depth:
            if trans:
                truncated = True
            continue
        for _rich, main2, s2 in trans:
            key = (main2, s2)
            if key not in seen:
                seen.add(key)
                queue.append((main2, s2, d + 1))
    verdict.status = "verified" if not truncated else "verified-to-depth"
    return verdict


def _check_confluence(enabled_fn, root_key, depth: int, join_depth: int) -> Verdict:
    """Shared engine: from each reached node, any two one-step successors
    must reach a common node within ``join_depth`` steps each."""
    verdict = Verdict("verified", depth)
    seen = {root_key}
    queue = deque(((root_key, 0),))
    truncated = False
    while queue:
        key, d = queue.popleft()
        verdict.configs_explored += 1
        succ_keys = enabled_fn(key)
        # Configurations are not orderable; dedupe preserving first occurrence.
        picked: set = set()
        distinct = []
        for sk in succ_keys:
            if sk != key and sk not in picked:
                picked.add(sk)
                distinct.append(sk)
        for i in range(len(distinct)):
            for j in range(i + 1, len(distinct)):
                verdict.transitions_matched += 1
                if not _joins(enabled_fn, distinct[i], distinct[j], join_depth):
                    verdict.status = "counterexample"
                    verdict.counterexample = Counterexample(
                        "confluence",
                        PairedConfig(None, None, None, d),  # type: ignore[arg-type]
                        None,
                        f"successors do not join within {join_depth} steps",
                    )
                    return verdict
        if d >= depth:
            if succ_keys:
                truncated = True
            continue
        for sk in succ_keys:
            if sk not in seen:
                seen.add(sk)
                queue.append((sk, d + 1))
    verdict.status = "verified" if not truncated else "verified-to-depth"
    return verdict


def _joins(enabled_fn, a, b, join_depth: int) -> bool:
    reach_a = {a}
    reach_b = {b}
    frontier_a = {a}
    frontier_b = {b}
    if reach_a & reach_b:
        return True
    for _ in range(join_depth):
        frontier_a = {
            s for k in frontier_a for s in enabled_fn(k) if s not in reach_a
        }
        reach_a |= frontier_a
        if reach_a & reach_b:
            return True
        frontier_b = {
            s for k in frontier_b for s in enabled_fn(k) if s not in reach_b
        }
        reach_b |= frontier_b
        if reach_a & reach_b:
            return True
        if not frontier_a and not frontier_b:
            return False
    return False


def check_cc_confluence(
    p: ChorProgram, depth: int = 8, s0: State = EMPTY_STATE, join_depth: int = 4
) -> Verdict:
    def enabled_fn(key):
        main, s = key
        return [(m2, s2) for _t, m2, s2 in cc_enabled(p.procs, main, s)]

    return _check_confluence(enabled_fn, (p.main, s0), depth, join_depth)


def check_sp_confluence(
    p: NetProgram, depth: int = 8, s0: State = EMPTY_STATE, join_depth: int = 4
) -> Verdict:
    def enabled_fn(key):
        net, s = key
        return [(n2, s2) for _t, n2, s2 in sp_enabled(p.procs, net, s)]

    return _check_confluence(enabled_fn, (p.net, s0), depth, join_depth)
