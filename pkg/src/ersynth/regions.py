"""Regions of a transition system and separation atoms.

A region assigns a token count (support) to every state and consume/produce
weights to every event, consistently along every edge; it is exactly the
data of one Petri net place.  A region *solves* a state separation atom
(s, s') when the two supports differ, and an event/state separation atom
(e, s) when sup(s) < con(e).  A set of regions solving every atom certifies
that the synthesized net's reachability graph is isomorphic to the TS.

Regions are usually given implicitly: the initial support plus the two
weight maps determine every other support by propagation, provided the
result is coherent (no negative support, no conflict between converging
paths).  :class:`RegionSpec` captures that implicit form, grouping events
into (consume, produce) classes; unlisted events default to (0, 0).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from ersynth.ts import TransitionSystem


class RegionError(Exception):
    """Raised for incoherent region specifications or invalid atoms."""


@dataclass(frozen=True)
class SeparationAtom:
    """SSA ``(a, b)`` (unordered distinct states) or ESSA ``(a=event, b=state)``."""

    kind: str  # "ssa" | "essa"
    a: str
    b: str

    def __str__(self) -> str:
        return f"{self.kind}:{self.a},{self.b}"


def ssa(s: str, t: str) -> SeparationAtom:
    return SeparationAtom("ssa", s, t)


def essa(event: str, state: str) -> SeparationAtom:
    return SeparationAtom("essa", event, state)


def parse_atom(text: str) -> SeparationAtom:
    """Parse the command-line atom syntax ``ssa:s,s'`` / ``essa:e,s``."""
    try:
        kind, rest = text.split(":", 1)
        a, b = rest.split(",", 1)
    except ValueError:
        raise RegionError(f"bad atom spec {text!r}, expected kind:x,y") from None
    kind = kind.strip()
    if kind not in ("ssa", "essa"):
        raise RegionError(f"bad atom kind {kind!r}, expected ssa or essa")
    return SeparationAtom(kind, a.strip(), b.strip())


def canonical_atom(ts: TransitionSystem, atom: SeparationAtom) -> SeparationAtom:
    """Validate an atom against ``ts`` and normalize SSA state order."""
    if atom.kind == "ssa":
        for s in (atom.a, atom.b):
            if s not in ts.state_index:
                raise RegionError(f"unknown state in atom: {s}")
        if atom.a == atom.b:
            raise RegionError(f"states of an SSA must differ: {atom}")
        if ts.state_index[atom.a] > ts.state_index[atom.b]:
            return SeparationAtom("ssa", atom.b, atom.a)
        return atom
    if atom.a not in ts.event_index:
        raise RegionError(f"unknown event in atom: {atom.a}")
    if atom.b not in ts.state_index:
        raise RegionError(f"unknown state in atom: {atom.b}")
    if ts.occurs(atom.a, atom.b):
        raise RegionError(f"not an ESSA, {atom.a} occurs at {atom.b}")
    return atom


def atoms(ts: TransitionSystem) -> list[SeparationAtom]:
    """All separation atoms in canonical order: SSAs first, then ESSAs.

    SSAs are the |S|(|S|-1)/2 unordered state pairs in declaration order;
    ESSAs are the |S||E| - |delta| pairs (event, state) with the event
    undefined at the state, ordered by event then state.
    """
    out: list[SeparationAtom] = []
    for i, s in enumerate(ts.states):
        for t in ts.states[i + 1 :]:
            out.append(SeparationAtom("ssa", s, t))
    for e in ts.events:
        for s in ts.states:
            if not ts.occurs(e, s):
                out.append(SeparationAtom("essa", e, s))
    return out


@dataclass(frozen=True)
class Region:
    """Explicit region: total support/consume/produce mappings."""

    sup: dict[str, int]
    con: dict[str, int]
    pro: dict[str, int]

    def preset(self) -> set[str]:
        return {e for e, w in self.pro.items() if w > 0}

    def postset(self) -> set[str]:
        return {e for e, w in self.con.items() if w > 0}

    def environment(self) -> tuple[int, int]:
        """(|preset|, |postset|) of the corresponding place."""
        return len(self.preset()), len(self.postset())

    def is_pure(self) -> bool:
        return not (self.preset() & self.postset())

    def solves(self, atom: SeparationAtom) -> bool:
        if atom.kind == "ssa":
            return self.sup[atom.a] != self.sup[atom.b]
        return self.sup[atom.b] < self.con[atom.a]

    def fits(self, rho: int | None, kappa: int | None) -> bool:
        npre, npost = self.environment()
        return (rho is None or npre <= rho) and (kappa is None or npost <= kappa)

    def scaled(self, factor: int) -> Region:
        return Region(
            sup={s: v * factor for s, v in self.sup.items()},
            con={e: v * factor for e, v in self.con.items()},
            pro={e: v * factor for e, v in self.pro.items()},
        )

    def vector(self, ts: TransitionSystem) -> tuple[int, ...]:
        """Canonical (sup(initial), con..., pro...) tuple; cache/compare key."""
        return (
            self.sup[ts.initial],
            *(self.con[e] for e in ts.events),
            *(self.pro[e] for e in ts.events),
        )


def region_violations(ts: TransitionSystem, region: Region) -> list[str]:
    """Independent re-check of the two defining conditions on every edge."""
    out = []
    for s in ts.states:
        if region.sup.get(s) is None:
            out.append(f"no support for state {s}")
        elif region.sup[s] < 0:
            out.append(f"negative support at {s}")
    for e in ts.events:
        if region.con.get(e, 0) < 0 or region.pro.get(e, 0) < 0:
            out.append(f"negative weight on event {e}")
    if out:
        return out
    for src, ev, tgt in ts.edges:
        if region.con[ev] > region.sup[src]:
            out.append(f"edge {src} {ev} {tgt}: con({ev})={region.con[ev]} > sup({src})={region.sup[src]}")
        if region.sup[tgt] != region.sup[src] - region.con[ev] + region.pro[ev]:
            out.append(f"edge {src} {ev} {tgt}: support not consistent")
    return out


# ---------------------------------------------------------------------------
# Implicit region specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionSpec:
    """Implicit region: initial support plus (consume, produce) event classes.

    ``classes`` lists (c, p, events); events absent from every class default
    to the (0, 0) class.  Listing a (0, 0) class explicitly is allowed.
    """

    sup_init: int
    classes: tuple[tuple[int, int, tuple[str, ...]], ...]
    name: str = ""

    def weights(self, ts: TransitionSystem) -> tuple[dict[str, int], dict[str, int]]:
        """Total con/pro maps; rejects unknown events and overlapping classes."""
        con = {e: 0 for e in ts.events}
        pro = {e: 0 for e in ts.events}
        assigned: set[str] = set()
        for c, p, events in self.classes:
            if c < 0 or p < 0:
                raise RegionError(f"{self.name or 'region'}: negative class ({c},{p})")
            for e in events:
                if e not in ts.event_index:
                    raise RegionError(f"{self.name or 'region'}: unknown event {e}")
                if e in assigned:
                    raise RegionError(f"{self.name or 'region'}: event {e} in two classes")
                assigned.add(e)
                con[e] = c
                pro[e] = p
        return con, pro


def expand_region_spec(ts: TransitionSystem, spec: RegionSpec) -> Region:
    """Propagate the implicit form into a full region, checking coherence.

    Raises :class:`RegionError` naming the offending edge or state when the
    spec is incoherent: a support would go negative, an edge would consume
    more than its source holds, or two paths to the same state disagree.
    """
    con, pro = spec.weights(ts)
    if spec.sup_init < 0:
        raise RegionError(f"{spec.name or 'region'}: negative initial support")
    sup = _propagate(ts, spec.sup_init, con, pro, raising=spec.name or "region")
    assert sup is not None
    return Region(sup=sup, con=con, pro=pro)


def _propagate(
    ts: TransitionSystem,
    sup_init: int,
    con: dict[str, int],
    pro: dict[str, int],
    raising: str | None = None,
) -> dict[str, int] | None:
    """Push supports from the initial state over every edge.

    Returns the total support map, or None if incoherent (when ``raising``
    is set, raises a descriptive :class:`RegionError` instead).
    """
    sup: dict[str, int] = {ts.initial: sup_init}
    for src, ev, tgt, _ in _schedule(ts):
        value = sup[src] - con[ev] + pro[ev]
        if con[ev] > sup[src]:
            if raising:
                raise RegionError(
                    f"{raising}: edge {src} {ev} {tgt}: con({ev})={con[ev]} exceeds sup({src})={sup[src]}"
                )
            return None
        if value < 0:
            if raising:
                raise RegionError(f"{raising}: edge {src} {ev} {tgt}: support of {tgt} would be {value}")
            return None
        if tgt in sup:
            if sup[tgt] != value:
                if raising:
                    raise RegionError(
                        f"{raising}: edge {src} {ev} {tgt}: support conflict at {tgt} "
                        f"({sup[tgt]} vs {value})"
                    )
                return None
        else:
            sup[tgt] = value
    return sup


@lru_cache(maxsize=128)
def _schedule(ts: TransitionSystem) -> tuple[tuple[str, str, str, bool], ...]:
    """Edges in BFS order; the source's support is always known first.

    The boolean marks edges that discover their target (tree edges).
    """
    out: list[tuple[str, str, str, bool]] = []
    seen = {ts.initial}
    queue = [ts.initial]
    head = 0
    while head < len(queue):
        s = queue[head]
        head += 1
        for ev, tgt in ts.outgoing(s):
            discover = tgt not in seen
            out.append((s, ev, tgt, discover))
            if discover:
                seen.add(tgt)
                queue.append(tgt)
    return tuple(out)


def region_to_spec(ts: TransitionSystem, region: Region, name: str = "") -> RegionSpec:
    """Implicit form of an explicit region (events grouped by weight pair)."""
    groups: dict[tuple[int, int], list[str]] = {}
    for e in ts.events:
        pair = (region.con[e], region.pro[e])
        if pair != (0, 0):
            groups.setdefault(pair, []).append(e)
    classes = tuple((c, p, tuple(events)) for (c, p), events in sorted(groups.items()))
    return RegionSpec(sup_init=region.sup[ts.initial], classes=classes, name=name)


# ---------------------------------------------------------------------------
# Exhaustive region search (test oracles)
# ---------------------------------------------------------------------------


def brute_force_region(
    ts: TransitionSystem,
    atom: SeparationAtom,
    value_bound: int,
    rho: int | None = None,
    kappa: int | None = None,
    pure: bool = False,
) -> Region | None:
    """First region solving ``atom`` in lexicographic enumeration order.

    Enumerates every (sup(initial), con, pro) with all values <= value_bound,
    keeps the coherent ones, and returns the first that solves the atom
    within the environment bounds and purity flag.  Intended as an
    independent oracle for small inputs (|E| <= 4, bound <= 3).
    """
    atom = canonical_atom(ts, atom)
    events = ts.events
    n = len(events)
    rng = range(value_bound + 1)
    need_con = ts.event_index[atom.a] if atom.kind == "essa" else None
    for sup0 in rng:
        for con_vec in itertools.product(rng, repeat=n):
            # an ESSA needs con(e) > sup >= 0, so con(e) = 0 can never solve it
            if need_con is not None and con_vec[need_con] == 0:
                continue
            if kappa is not None and sum(1 for c in con_vec if c > 0) > kappa:
                continue
            con = dict(zip(events, con_vec))
            for pro_vec in itertools.product(rng, repeat=n):
                if rho is not None and sum(1 for p in pro_vec if p > 0) > rho:
                    continue
                if pure and any(c > 0 and p > 0 for c, p in zip(con_vec, pro_vec)):
                    continue
                pro = dict(zip(events, pro_vec))
                sup = _propagate(ts, sup0, con, pro)
                if sup is None:
                    continue
                region = Region(sup=sup, con=con, pro=pro)
                if region.solves(atom):
                    return region
    return None


def coherent_regions(ts: TransitionSystem, value_bound: int) -> list[Region]:
    """All coherent regions with values <= value_bound, lexicographic order."""
    events = ts.events
    n = len(events)
    rng = range(value_bound + 1)
    found = []
    for sup0 in rng:
        for con_vec in itertools.product(rng, repeat=n):
            con = dict(zip(events, con_vec))
            for pro_vec in itertools.product(rng, repeat=n):
                pro = dict(zip(events, pro_vec))
                sup = _propagate(ts, sup0, con, pro)
                if sup is not None:
                    found.append(Region(sup=sup, con=con, pro=pro))
    return found


def iter_regions(
    ts: TransitionSystem,
    value_bound: int,
    rho: int | None = None,
    kappa: int | None = None,
    pure: bool = False,
):
    """Yield every coherent region within the bounds, search-tree order.

    Complete like :func:`coherent_regions` but prunes along the way
    (support propagation, environment budgets, purity), which keeps larger
    systems tractable.  The order is a fixed depth-first order over BFS
    edges, not the lexicographic order of :func:`brute_force_region`.
    """
    events = ts.events
    n = len(events)
    ev_index = ts.event_index
    schedule = _schedule(ts)
    weights: list[tuple[int, int] | None] = [None] * n
    sup: dict[str, int] = {}

    def pair_options(budget_con: bool, budget_pro: bool, cap: int | None = None):
        top = value_bound if cap is None else min(value_bound, cap)
        for c in range(top + 1):
            for p in range(value_bound + 1):
                if c > 0 and p > 0 and pure:
                    continue
                if c > 0 and budget_con:
                    continue
                if p > 0 and budget_pro:
                    continue
                yield c, p

    def emit() -> Region:
        con = {e: weights[i][0] for i, e in enumerate(events)}  # type: ignore[index]
        pro = {e: weights[i][1] for i, e in enumerate(events)}  # type: ignore[index]
        return Region(sup=dict(sup), con=con, pro=pro)

    def count_used() -> tuple[int, int]:
        ncon = sum(1 for w in weights if w is not None and w[0] > 0)
        npro = sum(1 for w in weights if w is not None and w[1] > 0)
        return ncon, npro

    def free_events(start: int):
        # events that label no edge still need weights (they count toward
        # environments); assign them after all edges are satisfied
        for i in range(start, n):
            if weights[i] is None:
                return i
        return None

    def assign_free(i: int | None):
        if i is None:
            yield emit()
            return
        ncon, npro = count_used()
        for c, p in pair_options(kappa is not None and ncon >= kappa, rho is not None and npro >= rho):
            weights[i] = (c, p)
            yield from assign_free(free_events(i + 1))
            weights[i] = None

    def walk(pos: int):
        if pos == len(schedule):
            yield from assign_free(free_events(0))
            return
        src, ev, tgt, discover = schedule[pos]
        i = ev_index[ev]
        if weights[i] is not None:
            c, p = weights[i]
            if c > sup[src]:
                return
            value = sup[src] - c + p
            if tgt in sup:
                if sup[tgt] == value:
                    yield from walk(pos + 1)
            else:
                sup[tgt] = value
                yield from walk(pos + 1)
                del sup[tgt]
            return
        ncon, npro = count_used()
        for c, p in pair_options(
            kappa is not None and ncon >= kappa,
            rho is not None and npro >= rho,
            cap=sup[src],
        ):
            value = sup[src] - c + p
            if tgt in sup and sup[tgt] != value:
                continue
            weights[i] = (c, p)
            if tgt in sup:
                yield from walk(pos + 1)
            else:
                sup[tgt] = value
                yield from walk(pos + 1)
                del sup[tgt]
            weights[i] = None

    for sup0 in range(value_bound + 1):
        sup[ts.initial] = sup0
        yield from walk(0)
        sup.clear()


# ---------------------------------------------------------------------------
# Region file format
#
#   .region <name>
#   .sup_init <N>
#   class <c> <p> : e1 e2 ...
#
# Serialized regions additionally carry .support / .con / .pro lines with
# the expanded values; parsers treat those as informational.
# ---------------------------------------------------------------------------


def parse_region_specs(text: str) -> list[RegionSpec]:
    """Parse one or more region blocks from the region file format."""
    specs: list[RegionSpec] = []
    name = ""
    sup_init: int | None = None
    classes: list[tuple[int, int, tuple[str, ...]]] = []
    started = False

    def flush(lineno: int):
        nonlocal name, sup_init, classes, started
        if not started:
            return
        if sup_init is None:
            raise RegionError(f"line {lineno}: region {name or '?'} has no .sup_init")
        specs.append(RegionSpec(sup_init=sup_init, classes=tuple(classes), name=name))
        name, sup_init, classes, started = "", None, [], False

    lineno = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == ".region":
            flush(lineno)
            started = True
            name = tokens[1] if len(tokens) > 1 else ""
        elif tokens[0] == ".sup_init":
            if len(tokens) != 2 or not tokens[1].isdigit():
                raise RegionError(f"line {lineno}: .sup_init needs one nonnegative integer")
            started = True
            sup_init = int(tokens[1])
        elif tokens[0] == "class":
            try:
                c, p = int(tokens[1]), int(tokens[2])
                if tokens[3] != ":":
                    raise ValueError
            except (IndexError, ValueError):
                raise RegionError(f"line {lineno}: expected `class <c> <p> : events...`") from None
            started = True
            classes.append((c, p, tuple(tokens[4:])))
        elif tokens[0] in (".support", ".con", ".pro"):
            continue  # informational expansion lines
        else:
            raise RegionError(f"line {lineno}: unexpected {tokens[0]!r} in region file")
    flush(lineno + 1)
    if not specs:
        raise RegionError("no region blocks found")
    return specs


def serialize_region(ts: TransitionSystem, region: Region, name: str = "") -> str:
    """Region block in the file format, with the expansion appended."""
    spec = region_to_spec(ts, region, name)
    lines = [f".region {spec.name}" if spec.name else ".region r"]
    lines.append(f".sup_init {spec.sup_init}")
    for c, p, events in spec.classes:
        lines.append(f"class {c} {p} : " + " ".join(events))
    lines.append(".support " + " ".join(f"{s}={region.sup[s]}" for s in ts.states))
    lines.append(".con " + " ".join(f"{e}={region.con[e]}" for e in ts.events if region.con[e]))
    lines.append(".pro " + " ".join(f"{e}={region.pro[e]}" for e in ts.events if region.pro[e]))
    return "\n".join(lines) + "\n"
