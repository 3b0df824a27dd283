"""Hardness gadget generators and their certificate regions.

Two reductions are implemented as TS builders:

* hitting set -> environment-restricted synthesis (impure).  The gadget
  has one row per set (its elements as events between two occurrences of
  the shared event ``k``), loop gadgets that pin down the postset budget,
  and connector chains; bounds are rho = 2*lambda, kappa = lambda + 1 and
  the distinguished atom is (k, t0_1).  Any suitably bounded region solving
  that atom encodes a hitting set of size <= lambda in the events it
  produces on, and conversely a hitting set instantiates certificate
  regions for the whole event/state separation side.

* cubic monotone one-in-three SAT -> pure environment-restricted
  synthesis.  One row per clause plus a two-state hub; bounds are
  rho = m, kappa = |E|, atom (k, h1), and the produced-on variables of a
  bounded pure region solving it form a one-in-three model (exactly m/3
  variables, one per clause).

Every certificate region from the construction is bundled with the gadget
as an implicit region spec plus the list of atoms it claims to solve, and
is validated computationally rather than trusted: instantiations that do
not exist for a given instance (boundary indices, single-element sets) are
reported, never silently skipped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from ersynth.regions import (
    Region,
    RegionError,
    RegionSpec,
    SeparationAtom,
    atoms,
    canonical_atom,
    essa,
    expand_region_spec,
    region_violations,
    ssa,
)
from ersynth.ts import TransitionSystem, validate


class GadgetError(Exception):
    """Raised for invalid instances or broken reduction preconditions."""


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HittingSetInstance:
    """Universe X0..X{n-1}, subsets as strictly increasing index tuples,
    and the size budget for the sought hitting set."""

    num_vars: int
    sets: tuple[tuple[int, ...], ...]
    budget: int

    def var(self, i: int) -> str:
        return f"X{i}"

    def header(self) -> str:
        return f"hs {self.num_vars} {len(self.sets)} {self.budget}"

    def body_lines(self) -> list[str]:
        return [" ".join(str(i) for i in st) for st in self.sets]


@dataclass(frozen=True)
class OneInThreeInstance:
    """m variables and m 3-clauses; every variable in exactly three clauses."""

    num_vars: int
    clauses: tuple[tuple[int, int, int], ...]

    def var(self, i: int) -> str:
        return f"X{i}"

    def header(self) -> str:
        return f"1in3 {self.num_vars}"

    def body_lines(self) -> list[str]:
        return [" ".join(str(i) for i in cl) for cl in self.clauses]


def parse_hs(text: str) -> HittingSetInstance:
    """Parse `hs <n> <m> <lambda>` plus m index lines; sets are normalized
    to strictly increasing order."""
    lines = _content_lines(text)
    if not lines:
        raise GadgetError("empty instance file")
    lineno, header = lines[0]
    tokens = header.split()
    if len(tokens) != 4 or tokens[0] != "hs":
        raise GadgetError(f"line {lineno}: expected `hs <n> <m> <lambda>`")
    try:
        n, m, budget = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise GadgetError(f"line {lineno}: non-integer header field") from None
    if n < 0 or m < 0 or budget < 0:
        raise GadgetError(f"line {lineno}: negative header field")
    if len(lines) - 1 != m:
        raise GadgetError(f"expected {m} set lines, found {len(lines) - 1}")
    sets = []
    for lineno, line in lines[1:]:
        try:
            idx = [int(t) for t in line.split()]
        except ValueError:
            raise GadgetError(f"line {lineno}: non-integer set element") from None
        if not idx:
            raise GadgetError(f"line {lineno}: empty set")
        if len(set(idx)) != len(idx):
            raise GadgetError(f"line {lineno}: repeated element in set")
        for i in idx:
            if not 0 <= i < n:
                raise GadgetError(f"line {lineno}: index {i} outside universe of {n}")
        sets.append(tuple(sorted(idx)))
    return HittingSetInstance(num_vars=n, sets=tuple(sets), budget=budget)


def parse_1in3(text: str) -> OneInThreeInstance:
    """Parse `1in3 <m>` plus m clause lines of exactly three indices."""
    lines = _content_lines(text)
    if not lines:
        raise GadgetError("empty instance file")
    lineno, header = lines[0]
    tokens = header.split()
    if len(tokens) != 2 or tokens[0] != "1in3":
        raise GadgetError(f"line {lineno}: expected `1in3 <m>`")
    try:
        m = int(tokens[1])
    except ValueError:
        raise GadgetError(f"line {lineno}: non-integer clause count") from None
    if m <= 0 or m % 3:
        raise GadgetError(f"line {lineno}: clause count must be a positive multiple of 3")
    if len(lines) - 1 != m:
        raise GadgetError(f"expected {m} clause lines, found {len(lines) - 1}")
    clauses = []
    occurrences = [0] * m
    for lineno, line in lines[1:]:
        try:
            idx = [int(t) for t in line.split()]
        except ValueError:
            raise GadgetError(f"line {lineno}: non-integer clause element") from None
        if len(idx) != 3 or len(set(idx)) != 3:
            raise GadgetError(f"line {lineno}: clause needs exactly 3 distinct variables")
        for i in idx:
            if not 0 <= i < m:
                raise GadgetError(f"line {lineno}: variable {i} out of range")
            occurrences[i] += 1
        clauses.append(tuple(sorted(idx)))
    for i, count in enumerate(occurrences):
        if count != 3:
            raise GadgetError(f"variable X{i} occurs {count} times, cubic instances need exactly 3")
    return OneInThreeInstance(num_vars=m, clauses=tuple(clauses))


def _content_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((lineno, line))
    return out


def solve_hs_brute(inst: HittingSetInstance) -> tuple[int, ...] | None:
    """Smallest hitting set within the budget, by exhaustive subset search.

    Intended for universes of at most ~20 elements.
    """
    universe = range(inst.num_vars)
    for size in range(min(inst.budget, inst.num_vars) + 1):
        for cand in itertools.combinations(universe, size):
            chosen = set(cand)
            if all(chosen & set(st) for st in inst.sets):
                return cand
    return None


def solve_1in3_brute(inst: OneInThreeInstance) -> tuple[int, ...] | None:
    """A subset meeting every clause exactly once, or None.

    Such a model always has exactly m/3 variables (each chosen variable
    accounts for its three clauses), so only that size is searched.
    """
    m = inst.num_vars
    for cand in itertools.combinations(range(m), m // 3):
        chosen = set(cand)
        if all(len(chosen & set(cl)) == 1 for cl in inst.clauses):
            return cand
    return None


# ---------------------------------------------------------------------------
# Gadget bundles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    """A certificate region spec plus the atoms it claims to solve."""

    name: str
    spec: RegionSpec
    claims: tuple[SeparationAtom, ...]
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class Gadget:
    kind: str  # "hs" | "1in3"
    instance: HittingSetInstance | OneInThreeInstance
    ts: TransitionSystem
    rho: int
    kappa: int
    pure: bool
    atom: SeparationAtom
    witnesses: tuple[Witness, ...]
    notes: tuple[str, ...] = ()


@dataclass
class WitnessReport:
    name: str
    coherent: bool
    error: str | None
    environment: tuple[int, int] | None
    pure: bool | None
    within_bounds: bool | None
    solved: list[SeparationAtom] = field(default_factory=list)
    unsolved: list[SeparationAtom] = field(default_factory=list)
    notes: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return bool(self.coherent and self.within_bounds and not self.unsolved)


def validate_witness(gadget: Gadget, witness: Witness) -> WitnessReport:
    """Expand one bundled witness and check bounds, purity and claims."""
    try:
        region = expand_region_spec(gadget.ts, witness.spec)
    except RegionError as exc:
        return WitnessReport(
            name=witness.name,
            coherent=False,
            error=str(exc),
            environment=None,
            pure=None,
            within_bounds=None,
            unsolved=list(witness.claims),
            notes=witness.notes,
        )
    solved = [a for a in witness.claims if region.solves(a)]
    unsolved = [a for a in witness.claims if not region.solves(a)]
    pure_ok = region.is_pure()
    within = region.fits(gadget.rho, gadget.kappa) and (pure_ok or not gadget.pure)
    return WitnessReport(
        name=witness.name,
        coherent=True,
        error=None,
        environment=region.environment(),
        pure=pure_ok,
        within_bounds=within,
        solved=solved,
        unsolved=unsolved,
        notes=witness.notes,
    )


def validate_witnesses(gadget: Gadget) -> list[WitnessReport]:
    return [validate_witness(gadget, w) for w in gadget.witnesses]


def extract_hitting_set(gadget: Gadget, region: Region) -> list[str]:
    """Variables the region produces on; re-checked against the instance.

    Precondition: a valid region of the gadget TS, within its bounds (and
    pure for the pure gadget), solving the distinguished atom.  The result
    must then hit every set within the budget (hitting set gadget) or meet
    every clause exactly once with exactly m/3 variables (pure gadget);
    any violation is a reduction-correctness failure and raises.
    """
    problems = region_violations(gadget.ts, region)
    if problems:
        raise GadgetError("not a region of the gadget TS: " + "; ".join(problems))
    if not region.solves(gadget.atom):
        raise GadgetError(f"region does not solve the distinguished atom {gadget.atom}")
    if not region.fits(gadget.rho, gadget.kappa):
        raise GadgetError(
            f"region environment {region.environment()} exceeds bounds ({gadget.rho},{gadget.kappa})"
        )
    if gadget.pure and not region.is_pure():
        raise GadgetError("pure gadget requires a pure region")
    inst = gadget.instance
    chosen = [inst.var(i) for i in range(inst.num_vars) if region.pro.get(inst.var(i), 0) > 0]
    chosen_set = set(chosen)
    groups = inst.sets if isinstance(inst, HittingSetInstance) else inst.clauses
    for gi, group in enumerate(groups):
        members = {inst.var(i) for i in group}
        hit = len(chosen_set & members)
        if hit == 0:
            raise GadgetError(f"reduction failure: extracted set misses group {gi}")
        if gadget.kind == "1in3" and hit != 1:
            raise GadgetError(f"reduction failure: group {gi} met {hit} times, expected exactly 1")
    if gadget.kind == "hs" and len(chosen) > gadget.instance.budget:
        raise GadgetError(
            f"reduction failure: extracted set has {len(chosen)} elements, budget {gadget.instance.budget}"
        )
    if gadget.kind == "1in3" and len(chosen) != inst.num_vars // 3:
        raise GadgetError(
            f"reduction failure: model has {len(chosen)} variables, expected {inst.num_vars // 3}"
        )
    return chosen


# ---------------------------------------------------------------------------
# Hitting set gadget
# ---------------------------------------------------------------------------


def hs_gadget_counts(inst: HittingSetInstance) -> tuple[int, int, int]:
    """(states, events, edges) of the gadget, by closed formulas."""
    m = len(inst.sets)
    lam = inst.budget
    occurring = len({i for st in inst.sets for i in st})
    states = sum(len(st) + 3 for st in inst.sets) + m + lam + 2 * lam + (m - 1) + 2 * (m - 1)
    events = 1 + occurring + 4 * lam + m + 5 * (m - 1)
    edges = (
        sum(len(st) + 2 for st in inst.sets)
        + (m - 1)  # row bridges
        + 3 * lam  # loop gadgets
        + 2 * (m - 1)  # u/v gadgets
        + m  # row entries
        + (m - 1)  # base chain
        + lam  # top chain including its entry
        + lam  # loop entries
        + (m - 1 if m >= 2 else 0)  # triangle chain including its entry
        + (m - 1)  # u/v gadget entries
    )
    return states, events, edges


def build_hs_gadget(
    inst: HittingSetInstance, hitting_set: tuple[int, ...] | None = None
) -> Gadget:
    """The hitting set reduction TS with bounds (2*lambda, lambda+1).

    ``hitting_set`` feeds the one certificate region that depends on a
    concrete solution; when omitted it is searched exhaustively for small
    universes, and skipped (with a note) if none exists.
    """
    m = len(inst.sets)
    lam = inst.budget
    if m == 0:
        raise GadgetError("need at least one set")
    if lam < 1:
        raise GadgetError("budget (lambda) must be at least 1")

    def t(i: int, j: int) -> str:
        return f"t{i}_{j}"

    X = inst.var
    states: list[str] = [f"bot{i}" for i in range(m)]
    for i, st in enumerate(inst.sets):
        states.extend(t(i, j) for j in range(len(st) + 3))
    states.extend(f"top{i}" for i in range(lam))
    for i in range(lam):
        states.extend((f"f{i}_0", f"f{i}_1"))
    states.extend(f"tri{i}" for i in range(1, m))
    for i in range(1, m):
        states.extend((f"g{i}_0", f"g{i}_1"))

    occurring = sorted({i for st in inst.sets for i in st})
    events: list[str] = ["k"]
    events.extend(X(i) for i in occurring)
    events.extend(f"k{i}" for i in range(lam))
    events.extend(f"z{i}" for i in range(lam))
    events.extend(f"u{i}" for i in range(1, m))
    events.extend(f"v{i}" for i in range(1, m))
    events.extend(f"y{i}" for i in range(m))
    events.extend(f"w{i}" for i in range(1, m))
    events.extend(f"a{i}" for i in range(lam))
    events.extend(f"b{i}" for i in range(lam))
    events.extend(f"c{i}" for i in range(1, m))
    events.extend(f"d{i}" for i in range(1, m))

    edges: list[tuple[str, str, str]] = []
    for i in range(m):
        edges.append((f"bot{i}", f"y{i}", t(i, 0)))
        if i < m - 1:
            edges.append((f"bot{i}", f"w{i + 1}", f"bot{i + 1}"))
    for i, st in enumerate(inst.sets):
        edges.append((t(i, 0), "k", t(i, 1)))
        for pos, xi in enumerate(st):
            edges.append((t(i, pos + 1), X(xi), t(i, pos + 2)))
        edges.append((t(i, len(st) + 1), "k", t(i, len(st) + 2)))
        if i < m - 1:
            edges.append((t(i, 1), f"u{i + 1}", t(i + 1, 1)))
    edges.append(("bot0", "a0", "top0"))
    for i in range(lam):
        edges.append((f"top{i}", f"b{i}", f"f{i}_0"))
        if i < lam - 1:
            edges.append((f"top{i}", f"a{i + 1}", f"top{i + 1}"))
        edges.append((f"f{i}_0", "k", f"f{i}_1"))
        edges.append((f"f{i}_0", f"k{i}", f"f{i}_1"))
        edges.append((f"f{i}_1", f"z{i}", f"f{i}_0"))
    if m >= 2:
        edges.append(("bot0", "c1", "tri1"))
        for i in range(1, m):
            edges.append((f"tri{i}", f"d{i}", f"g{i}_0"))
            if i < m - 1:
                edges.append((f"tri{i}", f"c{i + 1}", f"tri{i + 1}"))
            edges.append((f"g{i}_1", f"u{i}", f"g{i}_0"))
            edges.append((f"g{i}_0", f"v{i}", f"g{i}_1"))

    ts = TransitionSystem(
        states=tuple(states), events=tuple(events), edges=tuple(edges), initial="bot0", name="hs-gadget"
    )
    problems = validate(ts)
    if problems:
        raise GadgetError("gadget construction broke TS invariants: " + "; ".join(problems))

    notes = []
    if lam < 5:
        notes.append(f"warning: lambda {lam} below 5, the threshold assumed by the hardness equivalence")
        notes.append(
            "threshold notes: the certificate bound lambda+3 <= 2*lambda needs lambda >= 3; "
            "a stricter lambda >= 6 shows up in one bound argument; recorded, not enforced"
        )
    unused = [X(i) for i in range(inst.num_vars) if i not in occurring]
    if unused:
        notes.append("universe variables in no set, omitted from the events: " + " ".join(unused))

    if hitting_set is None and inst.num_vars <= 20:
        hitting_set = solve_hs_brute(inst)
    witnesses, wnotes = _hs_witnesses(inst, ts, hitting_set)
    notes.extend(wnotes)

    return Gadget(
        kind="hs",
        instance=inst,
        ts=ts,
        rho=2 * lam,
        kappa=lam + 1,
        pure=False,
        atom=essa("k", t(0, 1)),
        witnesses=tuple(witnesses),
        notes=tuple(notes),
    )


def _hs_witnesses(
    inst: HittingSetInstance, ts: TransitionSystem, hitting_set: tuple[int, ...] | None
) -> tuple[list[Witness], list[str]]:
    m = len(inst.sets)
    lam = inst.budget
    X = inst.var
    present = set(ts.events)

    def t(i: int, j: int) -> str:
        return f"t{i}_{j}"

    def row_states(i: int) -> list[str]:
        return [t(i, j) for j in range(len(inst.sets[i]) + 3)]

    tops = [f"top{i}" for i in range(lam)]
    tris = [f"tri{i}" for i in range(1, m)]
    g_states = [s for i in range(1, m) for s in (f"g{i}_0", f"g{i}_1")]
    f0 = [f"f{i}_0" for i in range(lam)]
    f1 = [f"f{i}_1" for i in range(lam)]
    ks = ["k"] + [f"k{i}" for i in range(lam)]
    zs = [f"z{i}" for i in range(lam)]
    bs = [f"b{i}" for i in range(lam)]

    out: list[Witness] = []
    gnotes: list[str] = []

    def add(name, sup_init, classes, claims, notes=()):
        filtered = []
        dropped = []
        for c, p, evs in classes:
            keep = tuple(e for e in evs if e in present)
            dropped.extend(e for e in evs if e not in present)
            if keep:
                filtered.append((c, p, keep))
        note_list = list(notes)
        if dropped:
            note_list.append("dropped, no such events here: " + " ".join(dict.fromkeys(dropped)))
        seen: dict[SeparationAtom, None] = {}
        for a in claims:
            seen.setdefault(canonical_atom(ts, a), None)
        out.append(
            Witness(
                name=name,
                spec=RegionSpec(sup_init=sup_init, classes=tuple(filtered), name=name),
                claims=tuple(seen),
                notes=tuple(note_list),
            )
        )

    # -- event k ---------------------------------------------------------
    add(
        "fact1.R0",
        1,
        [(1, 1, ["k"]), (0, 1, bs), (1, 0, ["a0", "c1"])],
        [essa("k", s) for s in g_states + tops + tris],
    )
    if hitting_set is not None:
        add(
            "fact1.R1",
            1,
            [(1, 0, ks), (0, 1, [X(i) for i in hitting_set] + zs)],
            [essa("k", t(i, 1)) for i in range(m)] + [essa("k", s) for s in f1],
            notes=("claims cover every row entry state; the construction lowers them all",),
        )
    else:
        gnotes.append("fact1.R1 skipped: no hitting set within budget is known for this instance")
    add(
        "fact1.R2",
        2,
        [(1, 0, ks), (0, 1, zs)],
        [essa("k", t(i, len(inst.sets[i]) + 2)) for i in range(m)],
        notes=("row entry states keep support 1 here, so only the row exits are claimed",),
    )
    m0 = len(inst.sets[0])
    add(
        "fact1.R3",
        0,
        [
            (1, 1, ["k"]),
            (0, 1, ["y0", "u1", X(inst.sets[0][m0 - 1]), "a0", "c1"]),
            (0, 2, ["w1"]),
            (1, 0, [X(inst.sets[0][0]), "v1"]),
        ],
        [essa("k", "bot0")] + [essa("k", t(0, j)) for j in range(2, m0 + 1)],
    )
    for i in range(1, m):
        st = inst.sets[i]
        mi = len(st)
        add(
            f"fact1.R4[{i}]",
            2,
            [
                (1, 1, ["k"]),
                (2, 0, [f"w{i}"]),
                (0, 2, [f"w{i + 1}"]),
                (0, 1, [f"y{i}", f"v{i}", f"u{i + 1}", X(st[mi - 1])]),
                (1, 0, [f"u{i}", f"v{i + 1}", X(st[0])]),
            ],
            [essa("k", f"bot{i}")] + [essa("k", t(i, j)) for j in range(2, mi + 1)],
        )

    # -- events u1..u{m-1} -------------------------------------------------
    for i in range(1, m):
        excluded = set(row_states(i - 1)) | {f"bot{i - 1}", f"g{i}_1"}
        if i >= 2:
            excluded.add(f"g{i - 1}_0")
        add(
            f"fact2.R5[{i}]",
            1 if i == 1 else 0,
            [
                (1, 0, [f"u{i}", f"w{i}", f"v{i - 1}"] + (["a0", "c1"] if i == 1 else [])),
                (0, 1, [f"w{i - 1}", f"u{i - 1}", f"d{i - 1}", f"v{i}"]),
            ],
            [essa(f"u{i}", s) for s in ts.states if s not in excluded and not ts.occurs(f"u{i}", s)],
            notes=(f"bot{i - 1} keeps support 1 here and is left to fact2.R6[{i}]",),
        )
        claims = [essa(f"u{i}", f"bot{i - 1}"), essa(f"u{i}", t(i - 1, 0))]
        if i >= 2:
            claims.append(essa(f"u{i}", f"g{i - 1}_0"))
        add(
            f"fact2.R6[{i}]",
            0,
            [(1, 1, [f"u{i}"]), (0, 1, [f"d{i}"] + ks), (1, 0, zs)],
            claims,
        )
        prev = inst.sets[i - 1]
        add(
            f"fact2.R7[{i}]",
            1,
            [(1, 1, [f"u{i}"]), (1, 0, [X(prev[0])])],
            [essa(f"u{i}", t(i - 1, j)) for j in range(2, len(prev) + 3)],
            notes=("weight goes on the first element of the row the claims live in",),
        )

    # -- variable events ---------------------------------------------------
    occurring = sorted({i for st in inst.sets for i in st})
    for xi in occurring:
        xname = X(xi)
        for j in range(m):
            if xi in inst.sets[j]:
                continue
            add(
                f"fact3.R8[{xi},{j}]",
                0 if j == 0 else 1,
                [
                    (1, 1, [xname]),
                    (1, 0, [f"w{j}", f"u{j}", f"v{j + 1}"] + (["a0", "c1"] if j > 0 else [])),
                    (0, 1, [f"v{j}", f"w{j + 1}", f"u{j + 1}", f"d{j + 1}"]),
                ],
                [essa(xname, f"bot{j}")] + [essa(xname, s) for s in row_states(j)],
            )
        rows_with = [l for l in range(m) if xi in inst.sets[l]]
        add(
            f"fact3.R9[{xi}]",
            0,
            [(1, 1, [xname]), (1, 0, zs), (0, 1, ks)],
            [essa(xname, f"bot{l}") for l in rows_with]
            + [essa(xname, t(l, 0)) for l in rows_with],
            notes=("one region serves every row containing the variable",),
        )
        r10_claims = []
        for l in rows_with:
            h = inst.sets[l].index(xi)
            r10_claims.extend(essa(xname, t(l, j)) for j in range(h + 2, len(inst.sets[l]) + 3))
        add(
            f"fact3.R10[{xi}]",
            1,
            [(1, 0, [xname, "a0", "c1"])],
            r10_claims,
            notes=("claims are the row states strictly after the variable's edge",),
        )
        for l in rows_with:
            h = inst.sets[l].index(xi)
            if h == 0:
                continue
            before = [essa(xname, t(l, j)) for j in range(1, h + 1)]
            if l == 0:
                add(
                    f"fact3.R11[{xi}]",
                    0,
                    [(1, 0, [xname, "v1"]), (0, 1, ["w1", "u1", "d1", X(inst.sets[0][h - 1])])],
                    before,
                )
            else:
                add(
                    f"fact3.R12[{xi},{l}]",
                    1,
                    [
                        (1, 0, [xname, f"w{l}", f"u{l}", f"v{l + 1}", "a0", "c1"]),
                        (0, 1, [X(inst.sets[l][h - 1]), f"w{l + 1}", f"u{l + 1}", f"v{l}", f"d{l + 1}"]),
                    ],
                    before,
                    notes=("the raising weight goes on the element before the variable in this row",),
                )
        add(
            f"fact3.R13[{xi}]",
            1,
            [(1, 1, [xname]), (1, 0, ["a0", "c1"])],
            [essa(xname, s) for s in tops + f0 + f1 + tris + g_states],
        )

    return out, gnotes


# ---------------------------------------------------------------------------
# One-in-three gadget (pure)
# ---------------------------------------------------------------------------


def one_in_three_gadget_counts(inst: OneInThreeInstance) -> tuple[int, int, int]:
    """(states, events, edges) of the pure gadget, by closed formulas."""
    m = inst.num_vars
    states = 2 + 6 * m
    events = 1 + m + 2 * m // 3 + 2 * m * m // 3
    edges = 1 + 2 * m // 3 + m * (4 + m) + m * m // 3
    return states, events, edges


def build_1in3_gadget(
    inst: OneInThreeInstance, model: tuple[int, ...] | None = None
) -> Gadget:
    """The cubic one-in-three reduction TS with bounds (m, |E|), pure."""
    m = inst.num_vars
    X = inst.var

    def t(i: int, j: int) -> str:
        return f"t{i}_{j}"

    u_events = [f"u{j}" for j in range(2 * m // 3)]
    v_events = {i: [f"v{i}_{j}" for j in range(m // 3)] for i in range(m)}
    w_events = {i: [f"w{i}_{j}" for j in range(m // 3)] for i in range(m)}

    states = ["h0", "h1"]
    for i in range(m):
        states.extend(t(i, j) for j in range(6))
    events = ["k"]
    events.extend(X(i) for i in range(m))
    events.extend(u_events)
    for i in range(m):
        events.extend(v_events[i])
    for i in range(m):
        events.extend(w_events[i])

    edges: list[tuple[str, str, str]] = [("h0", "k", "h1")]
    edges.extend(("h1", u, "h0") for u in u_events)
    for i, clause in enumerate(inst.clauses):
        edges.extend(("h1", w, t(i, 0)) for w in w_events[i])
        for pos, xi in enumerate(clause):
            edges.append((t(i, pos), X(xi), t(i, pos + 1)))
        edges.extend((t(i, 3), v, t(i, 4)) for v in v_events[i])
        edges.append((t(i, 4), "k", t(i, 5)))
        edges.extend((t(i, 5), u, t(i, 4)) for u in u_events)

    ts = TransitionSystem(
        states=tuple(states), events=tuple(events), edges=tuple(edges), initial="h0", name="1in3-gadget"
    )
    problems = validate(ts)
    if problems:
        raise GadgetError("gadget construction broke TS invariants: " + "; ".join(problems))

    notes: list[str] = []
    if model is None:
        model = solve_1in3_brute(inst)
    witnesses, wnotes = _1in3_witnesses(inst, ts, model)
    notes.extend(wnotes)

    return Gadget(
        kind="1in3",
        instance=inst,
        ts=ts,
        rho=m,
        kappa=len(events),
        pure=True,
        atom=essa("k", "h1"),
        witnesses=tuple(witnesses),
        notes=tuple(notes),
    )


def _1in3_witnesses(
    inst: OneInThreeInstance, ts: TransitionSystem, model: tuple[int, ...] | None
) -> tuple[list[Witness], list[str]]:
    m = inst.num_vars
    X = inst.var

    def t(i: int, j: int) -> str:
        return f"t{i}_{j}"

    def row_states(i: int) -> list[str]:
        return [t(i, j) for j in range(6)]

    u_events = [f"u{j}" for j in range(2 * m // 3)]
    v_of = {i: [f"v{i}_{j}" for j in range(m // 3)] for i in range(m)}
    w_of = {i: [f"w{i}_{j}" for j in range(m // 3)] for i in range(m)}
    all_w = [w for i in range(m) for w in w_of[i]]
    exits = [t(i, 5) for i in range(m)]

    out: list[Witness] = []
    gnotes: list[str] = []

    def add(name, sup_init, classes, claims, notes=()):
        seen: dict[SeparationAtom, None] = {}
        for a in claims:
            seen.setdefault(canonical_atom(ts, a), None)
        out.append(
            Witness(
                name=name,
                spec=RegionSpec(
                    sup_init=sup_init,
                    classes=tuple((c, p, tuple(evs)) for c, p, evs in classes if evs),
                    name=name,
                ),
                claims=tuple(seen),
                notes=tuple(notes),
            )
        )

    # -- event k ---------------------------------------------------------
    if model is not None:
        add(
            "fact5.R0",
            1,
            [(1, 0, ["k"]), (0, 1, [X(i) for i in model] + u_events)],
            [essa("k", "h1")],
        )
    else:
        gnotes.append("fact5.R0 skipped: the instance has no one-in-three model")
    for i in range(m):
        add(
            f"fact5.R1[{i}]",
            2,
            [(1, 0, ["k"] + w_of[i]), (0, 1, u_events + v_of[i])],
            [essa("k", t(i, j)) for j in (0, 1, 2, 3, 5)]
            + [ssa("h0", "h1")]
            + [ssa("h0", s) for s in row_states(i)]
            + [ssa("h1", s) for s in exits],
            notes=("also separates the hub from this row and the exits, used by the state side",),
        )

    # -- events u and w ----------------------------------------------------
    add(
        "fact6.R0",
        0,
        [(1, 0, u_events + all_w), (0, 1, ["k"])],
        [essa(u, s) for u in u_events for s in ts.states if not ts.occurs(u, s)]
        + [essa(w, s) for w in all_w for s in ts.states if s != "h1" and s not in exits]
        + [ssa("h1", s) for s in ts.states if s != "h1" and s not in exits],
    )
    add(
        "fact6.R1",
        1,
        [(1, 0, all_w)],
        [essa(w, s) for w in all_w for s in exits],
    )

    # -- variable events ---------------------------------------------------
    for xi in range(m):
        xname = X(xi)
        rows_with = [l for l in range(m) if xi in inst.clauses[l]]
        w_union = [w for l in rows_with for w in w_of[l]]
        claims = [essa(xname, s) for s in ("h0", "h1")]
        for l in range(m):
            if l in rows_with:
                h = inst.clauses[l].index(xi)
                claims.extend(essa(xname, t(l, j)) for j in range(h + 1, 6))
            else:
                claims.extend(essa(xname, s) for s in row_states(l))
        add(f"fact7.R0[{xi}]", 0, [(1, 0, [xname]), (0, 1, w_union)], claims)
    for i, clause in enumerate(inst.clauses):
        for j in (1, 2):
            xname = X(clause[j])
            others = [l for l in range(m) if clause[j] in inst.clauses[l] and l != i]
            add(
                f"fact7.R1[{i},{j}]",
                0,
                [(1, 0, [xname]), (0, 1, [X(clause[j - 1])] + [w for l in others for w in w_of[l]])],
                [essa(xname, t(i, g)) for g in range(j)],
            )

    # -- parallel row events -------------------------------------------------
    for i in range(m):
        add(
            f"fact8.R0[{i}]",
            0,
            [(1, 0, v_of[i]), (0, 1, [X(inst.clauses[i][2])])],
            [essa(v, t(i, j)) for v in v_of[i] for j in (0, 1, 2, 4, 5)],
        )
        add(
            f"fact8.R1[{i}]",
            0,
            [(1, 0, v_of[i]), (0, 1, w_of[i])],
            [essa(v, s) for v in v_of[i] for s in ts.states if s not in set(row_states(i))],
        )

    # -- state separation ----------------------------------------------------
    for i in range(m):
        add(
            f"fact9.R0[{i}]",
            0,
            [(0, 1, w_of[i])],
            [ssa(p, q) for p in row_states(i) for q in ts.states if q not in set(row_states(i))],
        )
        add(
            f"fact9.R1[{i}]",
            0,
            [(0, 1, [X(v) for v in inst.clauses[i]] + v_of[i])],
            [ssa(p, q) for p, q in itertools.combinations([t(i, j) for j in range(5)], 2)],
        )
    add(
        "fact9.R2",
        2,
        [(1, 0, ["k"]), (0, 1, u_events)],
        [ssa(t(i, j), t(i, 5)) for i in range(m) for j in range(5)],
    )

    return out, gnotes


# ---------------------------------------------------------------------------
# Gadget files: TS format plus a `#!` pragma block
# ---------------------------------------------------------------------------


def serialize_gadget(gadget: Gadget) -> str:
    from ersynth.ts import serialize_ts

    lines = [f"#! gadget {gadget.kind}"]
    lines.append(f"#! instance {gadget.instance.header()}")
    lines.extend(f"#! instance-line {body}" for body in gadget.instance.body_lines())
    lines.append(f"#! rho {gadget.rho}")
    lines.append(f"#! kappa {gadget.kappa}")
    lines.append(f"#! pure {'true' if gadget.pure else 'false'}")
    lines.append(f"#! atom {gadget.atom}")
    lines.extend(f"#! note {note}" for note in gadget.notes)
    for w in gadget.witnesses:
        lines.append(f"#! witness {w.name}")
        lines.append(f"#! sup_init {w.spec.sup_init}")
        for c, p, evs in w.spec.classes:
            lines.append(f"#! class {c} {p} : " + " ".join(evs))
        for chunk in _chunks([str(a) for a in w.claims], 12):
            lines.append("#! solves " + " ".join(chunk))
        lines.extend(f"#! wnote {note}" for note in w.notes)
        lines.append("#! end-witness")
    return "\n".join(lines) + "\n" + serialize_ts(gadget.ts)


def _chunks(items: list[str], size: int):
    for i in range(0, len(items), size):
        yield items[i : i + size]


def parse_gadget(text: str) -> Gadget:
    """Rebuild a gadget bundle from a serialized gadget file."""
    from ersynth.regions import parse_atom
    from ersynth.ts import parse_ts

    kind = ""
    instance_lines: list[str] = []
    rho = kappa = None
    pure = False
    atom = None
    notes: list[str] = []
    witnesses: list[Witness] = []
    wname = None
    wsup: int | None = None
    wclasses: list[tuple[int, int, tuple[str, ...]]] = []
    wclaims: list[str] = []
    wnotes: list[str] = []

    def end_witness(lineno):
        nonlocal wname, wsup, wclasses, wclaims, wnotes
        if wname is None:
            return
        if wsup is None:
            raise GadgetError(f"line {lineno}: witness {wname} has no sup_init")
        witnesses.append(
            Witness(
                name=wname,
                spec=RegionSpec(sup_init=wsup, classes=tuple(wclasses), name=wname),
                claims=tuple(parse_atom(a) for a in wclaims),
                notes=tuple(wnotes),
            )
        )
        wname, wsup, wclasses, wclaims, wnotes = None, None, [], [], []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.startswith("#!"):
            continue
        body = raw[2:].strip()
        if not body:
            continue
        head, _, rest = body.partition(" ")
        rest = rest.strip()
        if head == "gadget":
            kind = rest
        elif head == "instance":
            instance_lines.insert(0, rest)
        elif head == "instance-line":
            instance_lines.append(rest)
        elif head == "rho":
            rho = int(rest)
        elif head == "kappa":
            kappa = int(rest)
        elif head == "pure":
            pure = rest == "true"
        elif head == "atom":
            atom = parse_atom(rest)
        elif head == "note":
            notes.append(rest)
        elif head == "witness":
            end_witness(lineno)
            wname = rest
        elif head == "sup_init":
            wsup = int(rest)
        elif head == "class":
            tokens = rest.split()
            if len(tokens) < 3 or tokens[2] != ":":
                raise GadgetError(f"line {lineno}: expected `class <c> <p> : events`")
            wclasses.append((int(tokens[0]), int(tokens[1]), tuple(tokens[3:])))
        elif head == "solves":
            wclaims.extend(rest.split())
        elif head == "wnote":
            wnotes.append(rest)
        elif head == "end-witness":
            end_witness(lineno)
        else:
            raise GadgetError(f"line {lineno}: unknown gadget pragma {head!r}")
    end_witness(0)

    if kind not in ("hs", "1in3"):
        raise GadgetError("gadget file missing its kind pragma")
    if rho is None or kappa is None or atom is None or not instance_lines:
        raise GadgetError("gadget file missing rho/kappa/atom/instance pragmas")
    instance_text = "\n".join(instance_lines)
    instance = parse_hs(instance_text) if kind == "hs" else parse_1in3(instance_text)
    ts = parse_ts(text)
    return Gadget(
        kind=kind,
        instance=instance,
        ts=ts,
        rho=rho,
        kappa=kappa,
        pure=pure,
        atom=canonical_atom(ts, atom),
        witnesses=tuple(witnesses),
        notes=tuple(notes),
    )
