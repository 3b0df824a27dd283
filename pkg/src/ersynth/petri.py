"""Weighted place/transition nets: firing rule, reachability, verification.

A net here is a list of places over a shared transition alphabet, each
place carrying its initial token count and per-transition consume/produce
weights.  The reachability graph explores markings breadth-first and is
rendered as a transition system whose states are named by their token
vectors, so synthesized nets diff cleanly against the source TS.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from ersynth.ts import TransitionSystem
from ersynth.ts import isomorphic as ts_isomorphic

Marking = tuple[int, ...]


class PetriError(Exception):
    """Raised for malformed nets, net files, or mismatched alphabets."""


class StateCapExceeded(PetriError):
    """Reachability exploration crossed the configured marking cap."""

    def __init__(self, cap: int):
        super().__init__(f"more than {cap} reachable markings; net may be unbounded")
        self.cap = cap


@dataclass(frozen=True)
class Place:
    """One place: initial tokens plus consume/produce weights per transition."""

    name: str
    initial: int
    cons: dict[str, int]  # f(place, t): tokens absorbed by t
    prod: dict[str, int]  # f(t, place): tokens produced by t

    def weight_in(self, t: str) -> int:
        return self.prod.get(t, 0)

    def weight_out(self, t: str) -> int:
        return self.cons.get(t, 0)


@dataclass(frozen=True)
class PetriNet:
    transitions: tuple[str, ...]
    places: tuple[Place, ...]
    name: str = ""

    def initial_marking(self) -> Marking:
        return tuple(p.initial for p in self.places)

    def place_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.places)


def net_violations(net: PetriNet) -> list[str]:
    out = []
    names = set()
    for p in net.places:
        if p.name in names:
            out.append(f"duplicate place name {p.name}")
        names.add(p.name)
        if p.initial < 0:
            out.append(f"place {p.name}: negative initial marking")
        for table in (p.cons, p.prod):
            for t, w in table.items():
                if t not in net.transitions:
                    out.append(f"place {p.name}: unknown transition {t}")
                if w < 0:
                    out.append(f"place {p.name}: negative weight for {t}")
    if names & set(net.transitions):
        out.append("place and transition identifiers overlap")
    return out


def fire(net: PetriNet, marking: Marking, t: str) -> Marking | None:
    """Successor marking, or None when ``t`` is not enabled.

    Enabled means every place holds at least the tokens ``t`` absorbs from
    it; firing subtracts those and adds the produced tokens.
    """
    if t not in net.transitions:
        raise PetriError(f"unknown transition {t}")
    for tokens, place in zip(marking, net.places):
        if tokens < place.weight_out(t):
            return None
    return tuple(
        tokens - place.weight_out(t) + place.weight_in(t)
        for tokens, place in zip(marking, net.places)
    )


def reachability_graph(net: PetriNet, state_cap: int = 10_000) -> TransitionSystem:
    """BFS over markings from the initial one, as a TransitionSystem.

    Transitions are tried in canonical order at every marking, so the
    state/edge declaration order is reproducible.  Raises
    :class:`StateCapExceeded` once more than ``state_cap`` distinct
    markings appear (the guard that keeps unbounded nets finite to check).
    """
    start = net.initial_marking()
    order: list[Marking] = [start]
    seen = {start}
    edges: list[tuple[Marking, str, Marking]] = []
    queue = deque([start])
    while queue:
        m = queue.popleft()
        for t in net.transitions:
            m2 = fire(net, m, t)
            if m2 is None:
                continue
            if m2 not in seen:
                if len(seen) >= state_cap:
                    raise StateCapExceeded(state_cap)
                seen.add(m2)
                order.append(m2)
                queue.append(m2)
            edges.append((m, t, m2))
    names = _marking_names(order)
    return TransitionSystem(
        states=tuple(names[m] for m in order),
        events=net.transitions,
        edges=tuple((names[a], t, names[b]) for a, t, b in edges),
        initial=names[start],
        name=(net.name + "_rg") if net.name else "",
    )


def _marking_names(markings: list[Marking]) -> dict[Marking, str]:
    # token vectors concatenate digit-wise (matching 111/011-style naming)
    # unless some count needs more than one digit, then joined with "-";
    # a net without places has the single empty marking, named "-"
    if markings and len(markings[0]) == 0:
        return {markings[0]: "-"}
    plain = all(v <= 9 for m in markings for v in m)
    sep = "" if plain else "-"
    return {m: sep.join(str(v) for v in m) for m in markings}


def verify(ts: TransitionSystem, net: PetriNet) -> dict[str, str] | None:
    """Isomorphism between ``ts`` and the net's reachability graph, or None.

    The exploration cap is |S|+1: a net whose behavior is isomorphic to
    ``ts`` cannot reach more markings than ``ts`` has states, so crossing
    the cap already refutes isomorphism.
    """
    if set(net.transitions) != set(ts.events):
        raise PetriError("net transitions and TS events differ")
    try:
        graph = reachability_graph(net, state_cap=len(ts.states) + 1)
    except StateCapExceeded:
        return None
    return ts_isomorphic(ts, graph)


def net_environment(net: PetriNet) -> tuple[dict[str, tuple[int, int]], tuple[int, int]]:
    """Per-place (|preset|, |postset|) sizes plus the componentwise maxima."""
    sizes: dict[str, tuple[int, int]] = {}
    max_pre = max_post = 0
    for p in net.places:
        pre = sum(1 for w in p.prod.values() if w > 0)
        post = sum(1 for w in p.cons.values() if w > 0)
        sizes[p.name] = (pre, post)
        max_pre = max(max_pre, pre)
        max_post = max(max_post, post)
    return sizes, (max_pre, max_post)


# ---------------------------------------------------------------------------
# Net file format
#
#   .net <name>
#   .transitions a b ...
#   .place <name> init=<N>
#   cons <event>=<w> ...
#   prod <event>=<w> ...
#
# cons/prod lines attach to the place above them; zero weights are omitted
# and empty lines are dropped entirely.
# ---------------------------------------------------------------------------


def parse_net(text: str) -> PetriNet:
    name = ""
    transitions: list[str] = []
    places: list[Place] = []
    current: dict | None = None

    def flush():
        nonlocal current
        if current is not None:
            places.append(Place(**current))
            current = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]
        if head == ".net":
            name = tokens[1] if len(tokens) > 1 else ""
        elif head == ".transitions":
            for t in tokens[1:]:
                if t in transitions:
                    raise PetriError(f"line {lineno}: duplicate transition {t}")
                transitions.append(t)
        elif head == ".place":
            flush()
            if len(tokens) != 3 or not tokens[2].startswith("init="):
                raise PetriError(f"line {lineno}: expected `.place <name> init=<N>`")
            try:
                initial = int(tokens[2][len("init=") :])
            except ValueError:
                raise PetriError(f"line {lineno}: bad initial marking") from None
            current = {"name": tokens[1], "initial": initial, "cons": {}, "prod": {}}
        elif head in ("cons", "prod"):
            if current is None:
                raise PetriError(f"line {lineno}: {head} before any .place")
            table = current[head]
            for item in tokens[1:]:
                try:
                    ev, w = item.split("=", 1)
                    weight = int(w)
                except ValueError:
                    raise PetriError(f"line {lineno}: expected <event>=<weight>") from None
                if ev not in transitions:
                    raise PetriError(f"line {lineno}: unknown transition {ev}")
                if ev in table:
                    raise PetriError(f"line {lineno}: repeated weight for {ev}")
                table[ev] = weight
        else:
            raise PetriError(f"line {lineno}: unknown directive {head}")
    flush()
    net = PetriNet(transitions=tuple(transitions), places=tuple(places), name=name)
    problems = net_violations(net)
    if problems:
        raise PetriError("; ".join(problems))
    return net


def serialize_net(net: PetriNet) -> str:
    lines = [f".net {net.name}" if net.name else ".net n"]
    lines.append(".transitions " + " ".join(net.transitions))
    for p in net.places:
        lines.append(f".place {p.name} init={p.initial}")
        cons = " ".join(f"{t}={p.cons[t]}" for t in net.transitions if p.cons.get(t))
        prod = " ".join(f"{t}={p.prod[t]}" for t in net.transitions if p.prod.get(t))
        if cons:
            lines.append(f"  cons {cons}")
        if prod:
            lines.append(f"  prod {prod}")
    return "\n".join(lines) + "\n"
