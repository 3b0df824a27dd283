"""Finite initialized deterministic labeled transition systems.

A transition system is a directed graph whose edges carry event labels, with
a partial transition function (at most one target per state/event pair) and
an initial state from which every state is reachable.  State and event
identifiers are case-sensitive whitespace-free tokens; their first
declaration fixes the canonical ordering used by every downstream algorithm,
so identical inputs always produce identical outputs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property

Edge = tuple[str, str, str]  # (source, event, target)


class TsError(Exception):
    """Raised for malformed transition systems or files."""


@dataclass(frozen=True)
class TransitionSystem:
    """Immutable transition system; safe to share between workers.

    ``states`` and ``events`` are in canonical (declaration) order and
    ``edges`` in declaration order.  The structure is only guaranteed to be
    deterministic and initialized when built by :func:`parse_ts` or when
    :func:`validate` returns no violations.
    """

    states: tuple[str, ...]
    events: tuple[str, ...]
    edges: tuple[Edge, ...]
    initial: str
    name: str = ""

    @cached_property
    def state_index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def event_index(self) -> dict[str, int]:
        return {e: i for i, e in enumerate(self.events)}

    @cached_property
    def _delta(self) -> dict[tuple[str, str], str]:
        # First declaration wins; validate() reports duplicates separately.
        d: dict[tuple[str, str], str] = {}
        for src, ev, tgt in self.edges:
            d.setdefault((src, ev), tgt)
        return d

    @cached_property
    def _outgoing(self) -> dict[str, tuple[tuple[str, str], ...]]:
        out: dict[str, list[tuple[str, str]]] = {s: [] for s in self.states}
        for (src, ev), tgt in self._delta.items():
            out[src].append((ev, tgt))
        order = self.event_index
        return {s: tuple(sorted(lst, key=lambda p: order[p[0]])) for s, lst in out.items()}

    def target(self, state: str, event: str) -> str | None:
        """delta(state, event), or None where undefined."""
        return self._delta.get((state, event))

    def outgoing(self, state: str) -> tuple[tuple[str, str], ...]:
        """(event, target) pairs defined at ``state``, in canonical event order."""
        return self._outgoing[state]

    def occurs(self, event: str, state: str) -> bool:
        return (state, event) in self._delta

    def num_edges(self) -> int:
        """Number of defined (state, event) pairs."""
        return len(self._delta)


def validate(ts: TransitionSystem) -> list[str]:
    """Check every structural invariant; empty report means the TS is valid.

    Hard errors (unknown identifiers, duplicate declarations, determinism
    violations) and the initialization check all land in the same report;
    any entry blocks downstream use.
    """
    report: list[str] = []
    seen_states: set[str] = set()
    for s in ts.states:
        if s in seen_states:
            report.append(f"duplicate state declaration: {s}")
        seen_states.add(s)
    seen_events: set[str] = set()
    for e in ts.events:
        if e in seen_events:
            report.append(f"duplicate event declaration: {e}")
        seen_events.add(e)
    if ts.initial not in seen_states:
        report.append(f"initial state not declared: {ts.initial}")
    defined: set[tuple[str, str]] = set()
    for src, ev, tgt in ts.edges:
        for endpoint in (src, tgt):
            if endpoint not in seen_states:
                report.append(f"edge {src} {ev} {tgt}: undeclared state {endpoint}")
        if ev not in seen_events:
            report.append(f"edge {src} {ev} {tgt}: undeclared event {ev}")
        if (src, ev) in defined:
            report.append(f"edge {src} {ev} {tgt}: not deterministic, ({src},{ev}) already defined")
        defined.add((src, ev))
    if report:
        return report
    reachable = _reachable_from(ts, ts.initial)
    for s in ts.states:
        if s not in reachable:
            report.append(f"not initialized: state {s} unreachable from {ts.initial}")
    return report


def _reachable_from(ts: TransitionSystem, start: str) -> set[str]:
    seen = {start}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for _, tgt in ts.outgoing(s):
            if tgt not in seen:
                seen.add(tgt)
                queue.append(tgt)
    return seen


def isomorphic(a: TransitionSystem, b: TransitionSystem) -> dict[str, str] | None:
    """Unique isomorphism between two valid TS over the same event set.

    Both systems are deterministic and initialized, so the bijection (if
    any) is forced edge by edge: start from the initial states and match
    the outgoing edges of every mapped pair.  Event identifiers must agree
    literally; no renaming is attempted.
    """
    if set(a.events) != set(b.events) or len(a.states) != len(b.states):
        return None
    phi: dict[str, str] = {a.initial: b.initial}
    image = {b.initial}
    queue = deque([a.initial])
    while queue:
        s = queue.popleft()
        t = phi[s]
        out_a = a.outgoing(s)
        out_b = dict(b.outgoing(t))
        if len(out_a) != len(out_b):
            return None
        for ev, s2 in out_a:
            if ev not in out_b:
                return None
            t2 = out_b[ev]
            if s2 in phi:
                if phi[s2] != t2:
                    return None
            else:
                if t2 in image:
                    return None
                phi[s2] = t2
                image.add(t2)
                queue.append(s2)
    if len(phi) != len(a.states):
        return None
    return phi


# ---------------------------------------------------------------------------
# TS file format
#
#   # comment (anywhere, to end of line)
#   .ts <name>            optional, before any other directive
#   .states s0 s1 ...     one or more lines
#   .events a b ...
#   .initial s0
#   .edges                followed by one `source event target` per line
# ---------------------------------------------------------------------------


def parse_ts(text: str) -> TransitionSystem:
    """Parse the line-oriented TS format, rejecting any invalid system.

    Raises :class:`TsError` with the offending line number on syntax
    errors, undeclared identifiers, duplicate declarations, nondeterministic
    edges and unreachable (not initialized) states.
    """
    name = ""
    states: list[str] = []
    events: list[str] = []
    edges: list[Edge] = []
    initial: str | None = None
    state_lines: dict[str, int] = {}
    event_set: set[str] = set()
    defined: dict[tuple[str, str], int] = {}
    in_edges = False
    saw_any = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]
        if head.startswith("."):
            if in_edges:
                raise TsError(f"line {lineno}: directive {head} after .edges section")
            if head == ".ts":
                if saw_any:
                    raise TsError(f"line {lineno}: .ts must be the first directive")
                if len(tokens) > 2:
                    raise TsError(f"line {lineno}: .ts takes at most one name")
                name = tokens[1] if len(tokens) == 2 else ""
            elif head == ".states":
                for s in tokens[1:]:
                    if s in state_lines:
                        raise TsError(f"line {lineno}: duplicate state declaration {s}")
                    state_lines[s] = lineno
                    states.append(s)
            elif head == ".events":
                for e in tokens[1:]:
                    if e in event_set:
                        raise TsError(f"line {lineno}: duplicate event declaration {e}")
                    event_set.add(e)
                    events.append(e)
            elif head == ".initial":
                if initial is not None:
                    raise TsError(f"line {lineno}: .initial given twice")
                if len(tokens) != 2:
                    raise TsError(f"line {lineno}: .initial takes exactly one state")
                initial = tokens[1]
                if initial not in state_lines:
                    raise TsError(f"line {lineno}: undeclared initial state {initial}")
            elif head == ".edges":
                if len(tokens) != 1:
                    raise TsError(f"line {lineno}: .edges takes no arguments")
                in_edges = True
            else:
                raise TsError(f"line {lineno}: unknown directive {head}")
            saw_any = True
        else:
            if not in_edges:
                raise TsError(f"line {lineno}: expected a directive, got {head!r}")
            if len(tokens) != 3:
                raise TsError(f"line {lineno}: edge needs `source event target`")
            src, ev, tgt = tokens
            if src not in state_lines:
                raise TsError(f"line {lineno}: undeclared state {src}")
            if tgt not in state_lines:
                raise TsError(f"line {lineno}: undeclared state {tgt}")
            if ev not in event_set:
                raise TsError(f"line {lineno}: undeclared event {ev}")
            if (src, ev) in defined:
                raise TsError(
                    f"line {lineno}: not deterministic, ({src},{ev}) already defined "
                    f"on line {defined[src, ev]}"
                )
            defined[src, ev] = lineno
            edges.append((src, ev, tgt))

    if not states:
        raise TsError("no states declared")
    if initial is None:
        raise TsError("missing .initial directive")

    ts = TransitionSystem(
        states=tuple(states),
        events=tuple(events),
        edges=tuple(edges),
        initial=initial,
        name=name,
    )
    reachable = _reachable_from(ts, initial)
    for s in states:
        if s not in reachable:
            raise TsError(f"line {state_lines[s]}: state {s} unreachable from {initial}")
    return ts


def serialize_ts(ts: TransitionSystem) -> str:
    """Render a TS in the file format; parse_ts round-trips it exactly."""
    lines: list[str] = []
    if ts.name:
        lines.append(f".ts {ts.name}")
    lines.append(".states " + " ".join(ts.states) if ts.states else ".states")
    lines.append(".events " + " ".join(ts.events) if ts.events else ".events")
    lines.append(f".initial {ts.initial}")
    lines.append(".edges")
    for src, ev, tgt in ts.edges:
        lines.append(f"{src} {ev} {tgt}")
    return "\n".join(lines) + "\n"
