"""Spanning trees, Parikh vectors and fundamental cycles of a TS.

The tree gives every state one canonical path from the initial state; the
per-event occurrence counts along that path (the state's Parikh vector) turn
edge-consistency of token counts into linear algebra.  Every non-tree edge
(chord) closes a fundamental cycle whose signed event counts must have zero
net token effect under any region.

Any spanning tree works; for reproducible output we fix one policy:
breadth-first from the initial state, expanding each state's outgoing edges
in canonical event order, chords kept in examination order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

from ersynth.ts import Edge, TransitionSystem


class TreeError(Exception):
    """Raised for queries about edges outside the chord list."""


@dataclass(frozen=True)
class SpanningTree:
    """BFS spanning tree of a valid TS.

    ``parent`` maps every non-initial state to its unique incoming tree
    edge as (parent state, event).  Self-loops are never tree edges, so
    they always land in ``chords``.
    """

    ts: TransitionSystem
    tree_edges: tuple[Edge, ...]
    parent: dict[str, tuple[str, str]] = field(repr=False)
    chords: tuple[Edge, ...] = ()

    @cached_property
    def _parikh_vecs(self) -> dict[str, tuple[int, ...]]:
        ev_index = self.ts.event_index
        n = len(self.ts.events)
        vecs = {self.ts.initial: (0,) * n}

        def vec_of(state: str) -> tuple[int, ...]:
            if state in vecs:
                return vecs[state]
            parent, event = self.parent[state]
            base = list(vec_of(parent))
            base[ev_index[event]] += 1
            vecs[state] = tuple(base)
            return vecs[state]

        for s in self.ts.states:
            vec_of(s)
        return vecs

    def parikh_vec(self, state: str) -> tuple[int, ...]:
        """Event counts along the tree path to ``state``, in event order."""
        return self._parikh_vecs[state]

    def cycle_vec(self, chord: Edge) -> tuple[int, ...]:
        """Fundamental cycle counts of ``chord``, in event order."""
        if chord not in self.chords:
            raise TreeError(f"not a chord of this tree: {chord}")
        src, event, tgt = chord
        ev_index = self.ts.event_index
        counts = [a - b for a, b in zip(self.parikh_vec(src), self.parikh_vec(tgt))]
        counts[ev_index[event]] += 1
        return tuple(counts)

    def depth(self, state: str) -> int:
        return sum(self.parikh_vec(state))


def spanning_tree(ts: TransitionSystem) -> SpanningTree:
    """Deterministic BFS spanning tree of a valid TS."""
    tree_edges: list[Edge] = []
    chords: list[Edge] = []
    parent: dict[str, tuple[str, str]] = {}
    discovered = {ts.initial}
    queue = deque([ts.initial])
    while queue:
        s = queue.popleft()
        for event, tgt in ts.outgoing(s):
            if tgt in discovered:
                chords.append((s, event, tgt))
            else:
                discovered.add(tgt)
                parent[tgt] = (s, event)
                tree_edges.append((s, event, tgt))
                queue.append(tgt)
    return SpanningTree(ts=ts, tree_edges=tuple(tree_edges), parent=parent, chords=tuple(chords))


def parikh(tree: SpanningTree, state: str) -> dict[str, int]:
    """Parikh vector of ``state`` as an event -> count mapping."""
    vec = tree.parikh_vec(state)
    return {e: vec[i] for i, e in enumerate(tree.ts.events)}


def fundamental_cycle(tree: SpanningTree, chord: Edge) -> dict[str, int]:
    """Fundamental cycle of ``chord`` as an event -> signed count mapping."""
    vec = tree.cycle_vec(chord)
    return {e: vec[i] for i, e in enumerate(tree.ts.events)}
