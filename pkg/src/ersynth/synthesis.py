"""Admissible-set search under place-environment bounds.

Each separation atom of the input TS becomes a homogeneous linear system
over 2n+1 rational variables (initial support, consume and produce weights
per event): one equation per fundamental cycle, nonnegativity for every
variable, one inequality per event occurrence, and the separation
inequality itself (strict comparisons replaced by `<= -1` / the two-sided
split for state separation).  A region within bounds (|preset| <= rho,
|postset| <= kappa) exists iff some choice of allowed preset/postset events
keeps the system feasible once all other weights are pinned to zero; pure
mode additionally requires the two allowed sets to be disjoint, which makes
the otherwise quadratic pureness condition linear.

Strategies:

* ``exhaustive`` -- enumerate allowed-set pairs by size, then
  lexicographically; a no-answer is only reported after the full sweep,
  so it is a proof of unsolvability.
* ``heuristic`` -- solve unrestricted and greedily zero out the weakest
  weights until the environment fits; gives up with "unknown" after a
  fixed budget, never claims unsolvability.
* ``auto`` -- heuristic first, exhaustive fallback; fast positive answers
  with a complete negative decision.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO

from ersynth.linear import EQ, GE, LE, Constraint, LinearSystem, feasible, format_system, rescale_to_integers
from ersynth.petri import PetriNet, Place
from ersynth.regions import Region, SeparationAtom, atoms, canonical_atom, region_violations
from ersynth.tree import SpanningTree, spanning_tree
from ersynth.ts import TransitionSystem


class SelectionCapReached(Exception):
    """The per-atom cap on allowed-set pairs was hit before an answer."""

    def __init__(self, atom: SeparationAtom):
        super().__init__(f"selection cap reached while solving {atom}")
        self.atom = atom


@dataclass(frozen=True)
class Bounds:
    """Environment bounds; ``None`` means unbounded (a bound >= |E| never
    constrains, so unbounded normalizes to |E|)."""

    rho: int | None = None
    kappa: int | None = None
    pure: bool = False

    def effective(self, num_events: int) -> tuple[int, int]:
        rho = num_events if self.rho is None else min(self.rho, num_events)
        kappa = num_events if self.kappa is None else min(self.kappa, num_events)
        return rho, kappa

    def admits(self, region: Region) -> bool:
        return region.fits(self.rho, self.kappa) and (not self.pure or region.is_pure())

    def __str__(self) -> str:
        rho = "unbounded" if self.rho is None else str(self.rho)
        kappa = "unbounded" if self.kappa is None else str(self.kappa)
        return f"(rho={rho}, kappa={kappa}{', pure' if self.pure else ''})"


@dataclass(frozen=True)
class SupportSelection:
    """Events allowed to produce on / consume from the candidate place."""

    allowed_pro: frozenset[str]
    allowed_con: frozenset[str]


@dataclass
class SynthStats:
    atoms_total: int = 0
    atoms_reused: int = 0
    atoms_lp_solved: int = 0
    systems_solved: int = 0
    wall_time: float = 0.0


@dataclass
class SynthesisResult:
    """Outcome of a synthesis run.

    ``solved``: ``regions`` is an admissible set within bounds and ``net``
    its synthesized net.  ``unsolvable``: ``witness`` is an atom proven
    unsolvable by exhaustive enumeration (``failed_atoms`` lists all of
    them when scanning was requested).  ``unknown``: the heuristic budget
    or selection cap gave out on ``witness`` without a decision.
    """

    outcome: str
    bounds: Bounds
    regions: list[Region] = field(default_factory=list)
    net: PetriNet | None = None
    witness: SeparationAtom | None = None
    failed_atoms: list[SeparationAtom] = field(default_factory=list)
    stats: SynthStats = field(default_factory=SynthStats)


def region_from_vector(ts: TransitionSystem, tree: SpanningTree, values: list[int]) -> Region:
    """Region encoded by (sup(initial), con..., pro...); supports follow the
    tree Parikh vectors, which the cycle equations make path-independent."""
    n = len(ts.events)
    sup0 = values[0]
    con = values[1 : n + 1]
    pro = values[n + 1 :]
    effect = [p - c for c, p in zip(con, pro)]
    sup = {}
    for s in ts.states:
        psi = tree.parikh_vec(s)
        sup[s] = sup0 + sum(a * b for a, b in zip(psi, effect))
    return Region(sup=sup, con=dict(zip(ts.events, con)), pro=dict(zip(ts.events, pro)))


class AtomSolver:
    """Shared solving context for all separation atoms of one TS.

    Caches the spanning tree, the constraint rows common to every atom and
    the feasibility verdict per (atom, allowed sets), so sweeps over many
    bound combinations do not repeat LP work.
    """

    def __init__(self, ts: TransitionSystem, tree: SpanningTree | None = None, dump: IO[str] | None = None):
        self.ts = ts
        self.tree = tree if tree is not None else spanning_tree(ts)
        self.n = len(ts.events)
        self.num_vars = 2 * self.n + 1
        self.lp_count = 0
        self._dump = dump
        self._all_events = frozenset(ts.events)
        self._memo: dict[tuple, tuple[Fraction, ...] | None] = {}
        self._base = self._base_rows()

    # -- system construction -------------------------------------------

    def _effect_row(self, weights: tuple[int, ...], with_sup: bool, minus_con: int | None) -> list[int]:
        """Coefficients of [x0 +] sum_i w_i*(pro_i - con_i) [- con_j]."""
        row = [0] * self.num_vars
        if with_sup:
            row[0] = 1
        for i, w in enumerate(weights):
            if w:
                row[1 + i] -= w
                row[1 + self.n + i] += w
        if minus_con is not None:
            row[1 + minus_con] -= 1
        return row

    def _base_rows(self) -> list[Constraint]:
        rows = []
        for chord in self.tree.chords:
            rows.append(Constraint(tuple(self._effect_row(self.tree.cycle_vec(chord), False, None)), EQ, 0))
        for v in range(self.num_vars):
            row = [0] * self.num_vars
            row[v] = 1
            rows.append(Constraint(tuple(row), GE, 0))
        for s in self.ts.states:
            psi = self.tree.parikh_vec(s)
            for event, _ in self.ts.outgoing(s):
                i = self.ts.event_index[event]
                rows.append(Constraint(tuple(self._effect_row(psi, True, i)), GE, 0))
        return rows

    def separation_rows(self, atom: SeparationAtom) -> list[Constraint]:
        """The separation constraint(s); two one-sided rows for an SSA."""
        if atom.kind == "essa":
            j = self.ts.event_index[atom.a]
            psi = self.tree.parikh_vec(atom.b)
            return [Constraint(tuple(self._effect_row(psi, True, j)), LE, -1)]
        diff = tuple(
            a - b for a, b in zip(self.tree.parikh_vec(atom.a), self.tree.parikh_vec(atom.b))
        )
        row = tuple(self._effect_row(diff, False, None))
        return [Constraint(row, LE, -1), Constraint(row, GE, 1)]

    def systems(self, atom: SeparationAtom) -> list[LinearSystem]:
        return [
            LinearSystem(self.num_vars, tuple(self._base) + (sep,))
            for sep in self.separation_rows(atom)
        ]

    def _zero_rows(self, allowed_pro: frozenset[str], allowed_con: frozenset[str]) -> list[Constraint]:
        rows = []
        for i, e in enumerate(self.ts.events):
            if e not in allowed_con:
                row = [0] * self.num_vars
                row[1 + i] = 1
                rows.append(Constraint(tuple(row), EQ, 0))
            if e not in allowed_pro:
                row = [0] * self.num_vars
                row[1 + self.n + i] = 1
                rows.append(Constraint(tuple(row), EQ, 0))
        return rows

    # -- feasibility ----------------------------------------------------

    def _solve_restricted(
        self, atom: SeparationAtom, allowed_pro: frozenset[str], allowed_con: frozenset[str]
    ) -> tuple[Fraction, ...] | None:
        key = (atom, allowed_pro, allowed_con)
        if key in self._memo:
            return self._memo[key]
        zeros = self._zero_rows(allowed_pro, allowed_con)
        point: tuple[Fraction, ...] | None = None
        for branch, sep in enumerate(self.separation_rows(atom)):
            system = LinearSystem(self.num_vars, tuple(self._base) + tuple(zeros) + (sep,))
            if self._dump is not None:
                pro = ",".join(sorted(allowed_pro)) or "-"
                con = ",".join(sorted(allowed_con)) or "-"
                self._dump.write(f"# atom {atom} branch {branch} allowed_pro {pro} allowed_con {con}\n")
                self._dump.write(format_system(system))
            self.lp_count += 1
            x = feasible(system)
            if x is not None:
                point = tuple(x)
                break
        self._memo[key] = point
        return point

    def _make_region(self, atom: SeparationAtom, point: tuple[Fraction, ...]) -> Region:
        ints = rescale_to_integers(list(point))
        region = region_from_vector(self.ts, self.tree, ints)
        problems = region_violations(self.ts, region)
        if problems or not region.solves(atom):
            raise RuntimeError(f"solver returned an invalid region for {atom}: {problems}")
        return region

    # -- strategies -------------------------------------------------------

    def _selections(self, rho_eff: int, kappa_eff: int, pure: bool):
        """Allowed-set pairs by total size, then preset size, then lexicographic."""
        idx = tuple(range(self.n))
        for total in range(rho_eff + kappa_eff + 1):
            for psize in range(max(0, total - kappa_eff), min(total, rho_eff) + 1):
                csize = total - psize
                for pro_idx in itertools.combinations(idx, psize):
                    pro_set = frozenset(self.ts.events[i] for i in pro_idx)
                    for con_idx in itertools.combinations(idx, csize):
                        if pure and any(i in pro_idx for i in con_idx):
                            continue
                        yield pro_set, frozenset(self.ts.events[i] for i in con_idx)

    def _exhaustive(
        self, atom: SeparationAtom, bounds: Bounds, max_selections: int | None
    ) -> Region | None:
        rho_eff, kappa_eff = bounds.effective(self.n)
        # restrictions only add constraints, so an unrestricted failure
        # already proves every selection infeasible
        if self._solve_restricted(atom, self._all_events, self._all_events) is None:
            return None
        count = 0
        for pro_set, con_set in self._selections(rho_eff, kappa_eff, bounds.pure):
            count += 1
            if max_selections is not None and count > max_selections:
                raise SelectionCapReached(atom)
            point = self._solve_restricted(atom, pro_set, con_set)
            if point is not None:
                region = self._make_region(atom, point)
                if not bounds.admits(region):
                    raise RuntimeError(f"restricted solution escaped its bounds for {atom}")
                return region
        return None

    def _heuristic(self, atom: SeparationAtom, bounds: Bounds, budget: int) -> Region | None:
        allowed_pro = set(self.ts.events)
        allowed_con = set(self.ts.events)
        for _ in range(max(1, budget)):
            point = self._solve_restricted(atom, frozenset(allowed_pro), frozenset(allowed_con))
            if point is None:
                return None
            region = self._make_region(atom, point)
            if bounds.admits(region):
                return region
            next_pro, next_con = self._shrink(region, bounds)
            if next_pro == allowed_pro and next_con == allowed_con:
                return None
            allowed_pro, allowed_con = next_pro, next_con
        return None

    def _shrink(self, region: Region, bounds: Bounds) -> tuple[set[str], set[str]]:
        """Drop the weakest offending weights from the allowed sets."""
        order = self.ts.event_index
        pre = sorted(region.preset(), key=lambda e: (-region.pro[e], order[e]))
        post = sorted(region.postset(), key=lambda e: (-region.con[e], order[e]))
        rho_eff, kappa_eff = bounds.effective(self.n)
        if len(pre) > rho_eff:
            pre = pre[:rho_eff]
        if len(post) > kappa_eff:
            post = post[:kappa_eff]
        if bounds.pure:
            overlap = set(pre) & set(post)
            for e in overlap:
                if region.con[e] < region.pro[e]:
                    post.remove(e)
                else:
                    pre.remove(e)
        return set(pre), set(post)

    def solve(
        self,
        atom: SeparationAtom,
        bounds: Bounds,
        strategy: str = "exhaustive",
        max_selections: int | None = None,
        heuristic_budget: int = 8,
    ) -> Region | None:
        """Region within bounds solving ``atom``, or None.

        None from ``exhaustive`` (or ``auto``) proves no such region
        exists; None from ``heuristic`` only means "not found".
        """
        atom = canonical_atom(self.ts, atom)
        if strategy == "exhaustive":
            return self._exhaustive(atom, bounds, max_selections)
        if strategy == "heuristic":
            return self._heuristic(atom, bounds, heuristic_budget)
        if strategy == "auto":
            region = self._heuristic(atom, bounds, heuristic_budget)
            if region is not None:
                return region
            return self._exhaustive(atom, bounds, max_selections)
        raise ValueError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------


def build_system(ts: TransitionSystem, tree: SpanningTree, atom: SeparationAtom) -> list[LinearSystem]:
    """Linear system(s) whose solutions are regions solving ``atom``.

    One system for an ESSA; an SSA splits into two (difference forced
    below -1 or above +1).
    """
    return AtomSolver(ts, tree).systems(canonical_atom(ts, atom))


def restrict_system(system: LinearSystem, ts: TransitionSystem, sel: SupportSelection) -> LinearSystem:
    """Pin produce/consume weights outside the selection to zero."""
    n = len(ts.events)
    rows = list(system.constraints)
    for i, e in enumerate(ts.events):
        if e not in sel.allowed_con:
            row = [0] * system.num_vars
            row[1 + i] = 1
            rows.append(Constraint(tuple(row), EQ, 0))
        if e not in sel.allowed_pro:
            row = [0] * system.num_vars
            row[1 + n + i] = 1
            rows.append(Constraint(tuple(row), EQ, 0))
    return LinearSystem(system.num_vars, tuple(rows))


def solve_atom(
    ts: TransitionSystem,
    tree: SpanningTree,
    atom: SeparationAtom,
    bounds: Bounds,
    strategy: str = "exhaustive",
    max_selections: int | None = None,
    heuristic_budget: int = 8,
) -> Region | None:
    return AtomSolver(ts, tree).solve(atom, bounds, strategy, max_selections, heuristic_budget)


def build_net(ts: TransitionSystem, region_list: list[Region], name: str = "") -> PetriNet:
    """Synthesized net: one place per region, flows from its weight maps."""
    places = []
    for i, region in enumerate(region_list):
        places.append(
            Place(
                name=f"p{i}",
                initial=region.sup[ts.initial],
                cons={e: w for e, w in region.con.items() if w},
                prod={e: w for e, w in region.pro.items() if w},
            )
        )
    return PetriNet(transitions=ts.events, places=tuple(places), name=name)


def _solve_chunk(args):
    ts, chunk, bounds, strategy, max_selections, heuristic_budget = args
    solver = AtomSolver(ts)
    results = []
    for atom in chunk:
        try:
            region = solver.solve(atom, bounds, strategy, max_selections, heuristic_budget)
            results.append((atom, region))
        except SelectionCapReached:
            results.append((atom, "capped"))
    return results, solver.lp_count


def synthesize(
    ts: TransitionSystem,
    bounds: Bounds,
    strategy: str = "auto",
    jobs: int = 1,
    scan_all: bool = False,
    max_selections: int | None = None,
    heuristic_budget: int = 8,
    dump: IO[str] | None = None,
) -> SynthesisResult:
    """Decide/construct an admissible set of bounded regions for ``ts``.

    Walks the atoms in canonical order, reusing any already-found region
    that solves the atom at hand before invoking the solver.  A single
    exhaustively failed atom settles the negative answer (``scan_all``
    keeps going and collects every failing atom).  With ``jobs > 1`` the
    per-atom solving runs speculatively in parallel and the results are
    committed in canonical order, so the outcome is identical to a
    sequential run.
    """
    t0 = time.perf_counter()
    atom_list = atoms(ts)
    stats = SynthStats(atoms_total=len(atom_list))
    solver = AtomSolver(ts, dump=dump)
    speculative: dict[SeparationAtom, Region | None | str] = {}
    if jobs > 1 and atom_list:
        chunks = [atom_list[i::jobs] for i in range(jobs)]
        payload = [
            (ts, chunk, bounds, strategy, max_selections, heuristic_budget)
            for chunk in chunks
            if chunk
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for results, lp_count in pool.map(_solve_chunk, payload):
                stats.systems_solved += lp_count
                for atom, item in results:
                    speculative[atom] = item

    regions: list[Region] = []
    vectors: set[tuple[int, ...]] = set()
    witness: SeparationAtom | None = None
    failed: list[SeparationAtom] = []
    outcome = "solved"

    for atom in atom_list:
        if any(r.solves(atom) for r in regions):
            stats.atoms_reused += 1
            continue
        stats.atoms_lp_solved += 1
        if atom in speculative:
            item = speculative[atom]
        else:
            try:
                item = solver.solve(atom, bounds, strategy, max_selections, heuristic_budget)
            except SelectionCapReached:
                item = "capped"
        if item == "capped" or (item is None and strategy == "heuristic"):
            outcome = "unknown"
            witness = atom
            break
        if item is None:
            if witness is None:
                witness = atom
            failed.append(atom)
            outcome = "unsolvable"
            if not scan_all:
                break
            continue
        assert isinstance(item, Region)
        vec = item.vector(ts)
        if vec not in vectors:
            vectors.add(vec)
            regions.append(item)

    stats.systems_solved += solver.lp_count
    net = None
    if outcome == "solved":
        net = build_net(ts, regions, name=(ts.name + "-synth") if ts.name else "synth")
    stats.wall_time = time.perf_counter() - t0
    return SynthesisResult(
        outcome=outcome,
        bounds=bounds,
        regions=regions,
        net=net,
        witness=witness,
        failed_atoms=failed,
        stats=stats,
    )
