"""Merging of behaviours, with an explicit undefined element.

Merging combines the local views a process has of the two branches of a
conditional it does not decide.  It is partial: both views must agree on
everything except branching options, which are unioned.  Partiality is
made total by extending behaviours with an ``UNDEFINED`` element which is
absorbing and which any failed sub-merge propagates upward.

Extended behaviours reuse the plain behaviour node types; a tree is an
extended behaviour if ``UNDEFINED`` may appear in continuation or option
positions.  ``inject`` is therefore the identity on proper behaviours and
``collapse`` maps any tree containing ``UNDEFINED`` to ``UNDEFINED``.

``xmerge`` is on the hot path of exhaustive algebra sweeps (hundreds of
millions of calls), hence the indexed tuple accesses and the early type
dispatch.  When a merge result would equal one operand, that operand is
returned as-is; this is a pure allocation optimisation, the identity is
only taken when the recursive results are the operand's own children.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple, Union

from .net import SP_END, Branch, Call, Cond, End, Recv, SelectSend, Send


class _Undefined:
    """Singleton marker for a failed merge."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "UNDEFINED"


UNDEFINED = _Undefined()

XBehaviour = object  # Behaviour | _Undefined, possibly with UNDEFINED subterms


def inject(b):
    """Behaviours embed into extended behaviours unchanged."""
    return b


def has_undefined(b) -> bool:
    t = type(b)
    if t is _Undefined:
        return True
    if t is Send or t is Recv or t is SelectSend:
        return has_undefined(b[2])
    if t is Branch:
        l = b[1]
        r = b[2]
        return (l is not None and has_undefined(l)) or (
            r is not None and has_undefined(r)
        )
    if t is Cond:
        return has_undefined(b[1]) or has_undefined(b[2])
    return False  # End, Call


def collapse(b):
    """UNDEFINED anywhere poisons the whole tree; otherwise identity."""
    return UNDEFINED if has_undefined(b) else b


def is_defined(b) -> bool:
    """True when the tree is a proper behaviour (no UNDEFINED subterm)."""
    return not has_undefined(b)


def behaviour_of(b):
    """The unique proper behaviour an extended behaviour collapses to."""
    if has_undefined(b):
        raise ValueError(f"no behaviour: result is undefined ({b!r})")
    return b


def xmerge(a, b):
    """Merge two extended behaviours; total, with UNDEFINED absorbing.

    Equal heads with equal decorations merge homomorphically; branchings
    with the same peer union their options (present beats absent, both
    present merge recursively); anything else is UNDEFINED, and a failed
    or undefined sub-merge makes the whole result UNDEFINED.
    """
    ta = type(a)
    if ta is not type(b):
        return UNDEFINED
    if ta is Branch:
        if a[0] != b[0]:
            return UNDEFINED
        al = a[1]
        bl = b[1]
        if al is None:
            nl = bl
        elif bl is None:
            nl = al
        else:
            nl = xmerge(al, bl)
        if nl is UNDEFINED:
            return UNDEFINED
        ar = a[2]
        br = b[2]
        if ar is None:
            nr = br
        elif br is None:
            nr = ar
        else:
            nr = xmerge(ar, br)
        if nr is UNDEFINED:
            return UNDEFINED
        if nl is al and nr is ar:
            return a
        if nl is bl and nr is br:
            return b
        return Branch(a[0], nl, nr)
    if ta is Cond:
        g = a[0]
        if g is not b[0] and g != b[0]:
            return UNDEFINED
        t1 = xmerge(a[1], b[1])
        if t1 is UNDEFINED:
            return UNDEFINED
        t2 = xmerge(a[2], b[2])
        if t2 is UNDEFINED:
            return UNDEFINED
        if t1 is a[1] and t2 is a[2]:
            return a
        if t1 is b[1] and t2 is b[2]:
            return b
        return Cond(g, t1, t2)
    if ta is Send:
        e = a[1]
        if a[0] != b[0] or (e is not b[1] and e != b[1]):
            return UNDEFINED
        t1 = xmerge(a[2], b[2])
        if t1 is UNDEFINED:
            return UNDEFINED
        if t1 is a[2]:
            return a
        if t1 is b[2]:
            return b
        return Send(a[0], e, t1)
    if ta is Recv:
        if a[0] != b[0] or a[1] != b[1]:
            return UNDEFINED
        t1 = xmerge(a[2], b[2])
        if t1 is UNDEFINED:
            return UNDEFINED
        if t1 is a[2]:
            return a
        if t1 is b[2]:
            return b
        return Recv(a[0], a[1], t1)
    if ta is SelectSend:
        if a[0] != b[0] or a[1] != b[1]:
            return UNDEFINED
        t1 = xmerge(a[2], b[2])
        if t1 is UNDEFINED:
            return UNDEFINED
        if t1 is a[2]:
            return a
        if t1 is b[2]:
            return b
        return SelectSend(a[0], a[1], t1)
    if ta is End:
        return a
    if ta is Call:
        return a if a[0] == b[0] else UNDEFINED
    return UNDEFINED  # both UNDEFINED


def merge(b1, b2):
    """Merge two proper behaviours.  Same as ``xmerge`` after injection."""
    return xmerge(b1, b2)


# ---------------------------------------------------------------------------
# Inversion and conflict reporting


class NotInvertibleError(Exception):
    pass


@dataclass(frozen=True)
class MergeInversion:
    """What a successful merge forces about its operands.

    ``obligations`` pairs the sub-trees whose merges produced the result's
    children.  For a branching result, ``option_origins`` classifies each
    side as ``left-only`` / ``right-only`` / ``both`` / ``absent``
    according to which operand supplied the option.
    """

    result: object
    head: type
    obligations: Tuple[tuple, ...] = ()
    option_origins: Optional[dict] = None


def invert_merge(b1, b2, expect: Optional[type] = None) -> MergeInversion:
    """Decompose a successful merge of ``b1`` and ``b2``.

    Raises NotInvertibleError when the merge is undefined or when the
    result's head is not the expected constructor.
    """
    result = xmerge(b1, b2)
    if result is UNDEFINED:
        raise NotInvertibleError(f"merge of {b1!r} and {b2!r} is undefined")
    head = type(result)
    if expect is not None and head is not expect:
        raise NotInvertibleError(f"result head {head.__name__}, expected {expect.__name__}")
    if head is Send or head is Recv or head is SelectSend:
        # both operands share the decorations and their tails merge to the
        # result's tail
        return MergeInversion(result, head, ((b1[2], b2[2]),))
    if head is Cond:
        return MergeInversion(result, head, ((b1[1], b2[1]), (b1[2], b2[2])))
    if head is Branch:
        origins = {}
        obligations = []
        for idx, side in ((1, "left"), (2, "right")):
            x, y = b1[idx], b2[idx]
            if x is not None and y is not None:
                origins[side] = "both"
                obligations.append((x, y))
            elif x is not None:
                origins[side] = "left-only"
            elif y is not None:
                origins[side] = "right-only"
            else:
                origins[side] = "absent"
        return MergeInversion(result, head, tuple(obligations), origins)
    return MergeInversion(result, head)  # End, Call


def deepest_conflict(b1, b2) -> Optional[tuple]:
    """The smallest operand pair whose merge is undefined, or None.

    Recurses into the first failing sub-merge, so the returned pair is the
    deepest point at which merging actually goes wrong; useful for
    reporting why a projection failed.
    """
    if b1 is UNDEFINED or b2 is UNDEFINED:
        return (b1, b2)
    if xmerge(b1, b2) is not UNDEFINED:
        return None
    ta = type(b1)
    if ta is not type(b2):
        return (b1, b2)
    if ta is Branch:
        if b1[0] != b2[0]:
            return (b1, b2)
        for idx in (1, 2):
            x, y = b1[idx], b2[idx]
            if x is not None and y is not None:
                sub = deepest_conflict(x, y)
                if sub is not None:
                    return sub
        return (b1, b2)
    if ta is Cond:
        if b1[0] != b2[0]:
            return (b1, b2)
        for idx in (1, 2):
            sub = deepest_conflict(b1[idx], b2[idx])
            if sub is not None:
                return sub
        return (b1, b2)
    if ta in (Send, Recv, SelectSend):
        if b1[0] != b2[0] or b1[1] != b2[1]:
            return (b1, b2)
        return deepest_conflict(b1[2], b2[2])
    return (b1, b2)  # mismatching Call names or the like
