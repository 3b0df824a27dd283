"""Exact rational linear feasibility.

Decides systems of linear equations and inequalities over rational
variables and produces an exact satisfying point when one exists.  All
arithmetic uses :class:`fractions.Fraction`; no floating point enters any
decision.  The main procedure is a phase-one simplex with Bland's rule
(complete and terminating); an independent Fourier-Motzkin eliminator is
kept as a small-system cross-check oracle.

The region systems this package builds are homogeneous with right-hand
sides in {0, -1, +1}: strict comparisons are pre-replaced by the callers
(`expr < 0` becomes `expr <= -1`), which is sound because any rational
solution may be scaled by a positive integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

Rational = int | Fraction

LE, EQ, GE = "<=", "=", ">="
_RELS = (LE, EQ, GE)


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[Rational, ...]
    rel: str
    rhs: Rational

    def holds(self, point: list[Fraction]) -> bool:
        value = sum(c * x for c, x in zip(self.coeffs, point))
        if self.rel == LE:
            return value <= self.rhs
        if self.rel == GE:
            return value >= self.rhs
        return value == self.rhs


@dataclass(frozen=True)
class LinearSystem:
    num_vars: int
    constraints: tuple[Constraint, ...]

    def satisfied_by(self, point: list[Fraction]) -> bool:
        return len(point) == self.num_vars and all(c.holds(point) for c in self.constraints)


def constraint(coeffs, rel: str, rhs) -> Constraint:
    if rel not in _RELS:
        raise ValueError(f"bad relation {rel!r}")
    return Constraint(tuple(coeffs), rel, rhs)


def format_system(sys: LinearSystem) -> str:
    """One constraint per line, coefficients as p/q."""
    lines = []
    for c in sys.constraints:
        lines.append(" ".join(str(Fraction(v)) for v in c.coeffs) + f" {c.rel} {Fraction(c.rhs)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Phase-one simplex
# ---------------------------------------------------------------------------


def feasible(sys: LinearSystem) -> list[Fraction] | None:
    """Exact rational point satisfying every constraint, or None.

    The decision is complete: None is returned only for genuinely
    infeasible systems.  Variables are unrestricted in sign unless the
    system itself bounds them; single-variable rows are folded into bounds
    (and fixed variables substituted away) before the tableau is built,
    which keeps the restricted region systems small.
    """
    n = sys.num_vars
    rows: list[tuple[list[Fraction], str, Fraction]] = []
    lower: list[Fraction | None] = [None] * n
    upper: list[Fraction | None] = [None] * n

    for c in sys.constraints:
        if len(c.coeffs) != n:
            raise ValueError("coefficient vector length mismatch")
        coeffs = [Fraction(v) for v in c.coeffs]
        rhs = Fraction(c.rhs)
        support = [j for j, v in enumerate(coeffs) if v]
        if not support:
            if (c.rel == LE and rhs < 0) or (c.rel == GE and rhs > 0) or (c.rel == EQ and rhs != 0):
                return None
            continue
        if len(support) == 1:
            j = support[0]
            a = coeffs[j]
            bound = rhs / a
            rel = c.rel
            if a < 0 and rel == LE:
                rel = GE
            elif a < 0 and rel == GE:
                rel = LE
            if rel in (GE, EQ):
                if lower[j] is None or bound > lower[j]:
                    lower[j] = bound
            if rel in (LE, EQ):
                if upper[j] is None or bound < upper[j]:
                    upper[j] = bound
            continue
        rows.append((coeffs, c.rel, rhs))

    for j in range(n):
        if lower[j] is not None and upper[j] is not None and lower[j] > upper[j]:
            return None

    fixed: dict[int, Fraction] = {
        j: lower[j]  # type: ignore[misc]
        for j in range(n)
        if lower[j] is not None and lower[j] == upper[j]
    }

    # per-variable encoding into the nonnegative tableau variables:
    #   fixed      -> substituted constant
    #   lower only -> x = lo + y          (one column)
    #   upper only -> x = hi - y          (one column)
    #   both       -> x = lo + y, extra row y <= hi - lo
    #   free       -> x = y+ - y-         (two columns)
    col_of: list[tuple[str, int, Fraction]] = []  # (kind, first column, offset)
    ncols = 0
    extra_rows: list[tuple[list[tuple[int, Fraction]], str, Fraction]] = []
    for j in range(n):
        if j in fixed:
            col_of.append(("fixed", -1, fixed[j]))
        elif lower[j] is not None:
            col_of.append(("shift", ncols, lower[j]))
            if upper[j] is not None:
                extra_rows.append(([(ncols, Fraction(1))], LE, upper[j] - lower[j]))
            ncols += 1
        elif upper[j] is not None:
            col_of.append(("flip", ncols, upper[j]))
            ncols += 1
        else:
            col_of.append(("split", ncols, Fraction(0)))
            ncols += 2

    tableau_rows: list[tuple[list[Fraction], str, Fraction]] = []
    for coeffs, rel, rhs in rows:
        line = [Fraction(0)] * ncols
        shift = Fraction(0)
        for j, v in enumerate(coeffs):
            if not v:
                continue
            kind, col, off = col_of[j]
            if kind == "fixed":
                shift += v * off
            elif kind == "shift":
                line[col] += v
                shift += v * off
            elif kind == "flip":
                line[col] -= v
                shift += v * off
            else:
                line[col] += v
                line[col + 1] -= v
        tableau_rows.append((line, rel, rhs - shift))
    for sparse, rel, rhs in extra_rows:
        line = [Fraction(0)] * ncols
        for col, v in sparse:
            line[col] = v
        tableau_rows.append((line, rel, rhs))

    ys = _phase_one(tableau_rows, ncols)
    if ys is None:
        return None

    point: list[Fraction] = []
    for kind, col, off in col_of:
        if kind == "fixed":
            point.append(off)
        elif kind == "shift":
            point.append(off + ys[col])
        elif kind == "flip":
            point.append(off - ys[col])
        else:
            point.append(ys[col] - ys[col + 1])
    return point


def _phase_one(rows: list[tuple[list[Fraction], str, Fraction]], ncols: int) -> list[Fraction] | None:
    """Feasible point of {rows, y >= 0} via phase-one simplex, or None."""
    zero = Fraction(0)
    one = Fraction(1)
    m = len(rows)
    if m == 0:
        return [zero] * ncols

    # normalize to b >= 0, then append slack/surplus and artificial columns
    norm: list[tuple[list[Fraction], str, Fraction]] = []
    for coeffs, rel, rhs in rows:
        if rhs < 0:
            coeffs = [-v for v in coeffs]
            rhs = -rhs
            rel = LE if rel == GE else GE if rel == LE else EQ
        norm.append((coeffs, rel, rhs))

    nslack = sum(1 for _, rel, _ in norm if rel != EQ)
    nart = sum(1 for _, rel, _ in norm if rel != LE)
    width = ncols + nslack + nart
    tab: list[list[Fraction]] = []
    basis: list[int] = []
    obj = [zero] * (width + 1)

    scol = ncols
    acol = ncols + nslack
    for coeffs, rel, rhs in norm:
        row = list(coeffs) + [zero] * (nslack + nart) + [rhs]
        if rel == LE:
            row[scol] = one
            basis.append(scol)
            scol += 1
        elif rel == GE:
            row[scol] = -one
            scol += 1
            row[acol] = one
            basis.append(acol)
            acol += 1
        else:
            row[acol] = one
            basis.append(acol)
            acol += 1
        tab.append(row)

    # objective: minimize the artificial sum; reduced costs start at the
    # artificial cost vector minus the rows whose artificials are basic
    for j in range(ncols + nslack, width):
        obj[j] = one
    for row, b in zip(tab, basis):
        if b >= ncols + nslack:  # artificial basic row
            for j in range(width + 1):
                if row[j]:
                    obj[j] -= row[j]

    while True:
        enter = -1
        for j in range(width):
            if obj[j] < zero:
                enter = j
                break
        if enter < 0:
            break
        leave = -1
        best: Fraction | None = None
        for i in range(m):
            a = tab[i][enter]
            if a > zero:
                ratio = tab[i][width] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            raise ArithmeticError("phase-one objective unbounded; system malformed")
        _pivot(tab, obj, basis, leave, enter, width)

    if -obj[width] > zero:  # minimal artificial sum is positive
        return None
    ys = [zero] * ncols
    for i, b in enumerate(basis):
        if b < ncols:
            ys[b] = tab[i][width]
    return ys


def _pivot(tab, obj, basis, leave: int, enter: int, width: int) -> None:
    zero = Fraction(0)
    prow = tab[leave]
    piv = prow[enter]
    if piv != 1:
        inv = 1 / piv
        for j in range(width + 1):
            if prow[j]:
                prow[j] *= inv
    for row in tab:
        if row is prow:
            continue
        f = row[enter]
        if f:
            for j in range(width + 1):
                if prow[j]:
                    row[j] -= f * prow[j]
    f = obj[enter]
    if f:
        for j in range(width + 1):
            if prow[j]:
                obj[j] -= f * prow[j]
    basis[leave] = enter


# ---------------------------------------------------------------------------
# Fourier-Motzkin oracle
# ---------------------------------------------------------------------------


def fourier_motzkin_feasible(sys: LinearSystem) -> bool:
    """Exact feasibility decision by variable elimination.

    Equality rows are removed first by Gaussian substitution; the remaining
    variables are eliminated Fourier-Motzkin style, smallest product of
    positive and negative occurrences first.  Doubly exponential in the
    worst case; only meant as an independent oracle for systems with a
    handful of variables.
    """
    n = sys.num_vars
    eqs: list[tuple[list[Fraction], Fraction]] = []
    ineqs: list[tuple[tuple[Fraction, ...], Fraction]] = []  # sum coeffs*x <= rhs
    for c in sys.constraints:
        coeffs = [Fraction(v) for v in c.coeffs]
        rhs = Fraction(c.rhs)
        if c.rel == EQ:
            eqs.append((coeffs, rhs))
        elif c.rel == LE:
            ineqs.append((tuple(coeffs), rhs))
        else:
            ineqs.append((tuple(-v for v in coeffs), -rhs))

    # substitute equalities away (exact Gaussian elimination)
    while eqs:
        coeffs, rhs = eqs.pop()
        pivot = next((j for j, v in enumerate(coeffs) if v), None)
        if pivot is None:
            if rhs != 0:
                return False
            continue
        inv = 1 / coeffs[pivot]
        srow = [v * inv for v in coeffs]
        srhs = rhs * inv

        def subst(row, r):
            f = row[pivot]
            if not f:
                return list(row), r
            return [a - f * b for a, b in zip(row, srow)], r - f * srhs

        eqs = [subst(row, r) for row, r in eqs]
        ineqs = [(tuple(row), r) for row, r in (subst(list(rw), r) for rw, r in ineqs)]

    rows = set()
    for coeffs, rhs in ineqs:
        row = _canonical(list(coeffs), rhs)
        if row == "false":
            return False
        if row is not None:
            rows.add(row)

    while True:
        occupancy: dict[int, tuple[int, int]] = {}
        for coeffs, _ in rows:
            for j in range(n):
                if coeffs[j]:
                    p, m = occupancy.get(j, (0, 0))
                    occupancy[j] = (p + 1, m) if coeffs[j] > 0 else (p, m + 1)
        if not occupancy:
            return all(rhs >= 0 for _, rhs in rows)
        var = min(occupancy, key=lambda j: (occupancy[j][0] * occupancy[j][1], j))
        pos, neg, rest = [], [], []
        for coeffs, rhs in rows:
            a = coeffs[var]
            (pos if a > 0 else neg if a < 0 else rest).append((coeffs, rhs))
        new = set(rest)
        for pc, pr in pos:
            for nc, nr in neg:
                scale_p = -nc[var]
                scale_n = pc[var]
                coeffs = [scale_p * a + scale_n * b for a, b in zip(pc, nc)]
                rhs = scale_p * pr + scale_n * nr
                row = _canonical(coeffs, rhs)
                if row == "false":
                    return False
                if row is not None:
                    new.add(row)
        rows = new


def _canonical(coeffs: list[Fraction], rhs: Fraction):
    """Scale an inequality to a canonical positive multiple; drop truisms."""
    lead = next((v for v in coeffs if v), None)
    if lead is None:
        return "false" if rhs < 0 else None
    scale = 1 / abs(lead)
    return tuple(v * scale for v in coeffs), rhs * scale


# ---------------------------------------------------------------------------
# Integer rescaling
# ---------------------------------------------------------------------------


def rescale_to_integers(values: list[Fraction | int]) -> list[int]:
    """Minimal positive integer multiple of a rational vector.

    Multiplies by the least common multiple of the denominators, then
    divides out the greatest common divisor.  The zero vector is fixed.
    For the homogeneous integer-coefficient systems built here, scaling a
    solution this way preserves feasibility: every row value is an integer
    multiple of the gcd, so dividing keeps `<= -1` rows at or below -1.
    """
    fracs = [Fraction(v) for v in values]
    scale = math.lcm(*(f.denominator for f in fracs)) if fracs else 1
    ints = [int(f * scale) for f in fracs]
    g = math.gcd(*ints) if ints else 0
    if g > 1:
        ints = [v // g for v in ints]
    return ints
