"""Exact feasibility for systems of linear inequalities over the rationals.

Constraints are ``coeffs . x <= bound`` (or strictly ``<`` when flagged).
Feasibility goes through Fourier-Motzkin elimination, which handles mixed
strict and non-strict inequalities exactly: a pairing of a strict bound with
anything stays strict.  Variables are eliminated in a greedy minimum-fill
order and witness points are recovered by back-substitution, preferring
simple values (0, then a closed endpoint, then the midpoint).

Also provided: enumeration of the feasible sign cells of a hyperplane
arrangement restricted to a base system, used to split price space by
willingness and participation predicates.  The walk re-tests the parent
cell's witness before re-running elimination, which keeps the work close to
one elimination per emitted cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .rationals import ZERO


@dataclass(frozen=True)
class Constraint:
    """coeffs . x <= bound, strict when ``strict`` is set."""

    coeffs: tuple[Fraction, ...]
    bound: Fraction
    strict: bool = False

    def normalized(self) -> "Constraint":
        scale = next((abs(c) for c in self.coeffs if c != 0), None)
        if scale is None or scale == 1:
            return self
        return Constraint(
            tuple(c / scale for c in self.coeffs), self.bound / scale, self.strict
        )

    def admits(self, point: Sequence[Fraction]) -> bool:
        total = sum((c * x for c, x in zip(self.coeffs, point) if c != 0), ZERO)
        return total < self.bound or (total == self.bound and not self.strict)


def nonneg_orthant(n: int) -> list[Constraint]:
    """x_i >= 0 for every coordinate."""
    out = []
    for i in range(n):
        coeffs = [ZERO] * n
        coeffs[i] = Fraction(-1)
        out.append(Constraint(tuple(coeffs), ZERO))
    return out


def _constant_holds(c: Constraint) -> bool:
    return c.bound > 0 or (c.bound == 0 and not c.strict)


def _eliminate(constraints: list[Constraint], var: int) -> list[Constraint] | None:
    """Remove one variable; None signals detected infeasibility."""
    uppers: list[Constraint] = []  # positive coefficient on var
    lowers: list[Constraint] = []  # negative coefficient on var
    rest: list[Constraint] = []
    for c in constraints:
        a = c.coeffs[var]
        if a > 0:
            uppers.append(c)
        elif a < 0:
            lowers.append(c)
        else:
            rest.append(c)

    combined: list[Constraint] = []
    for up in uppers:
        au = up.coeffs[var]
        for lo in lowers:
            al = lo.coeffs[var]
            # (-al) * up + au * lo cancels var; both multipliers are positive
            coeffs = tuple(-al * cu + au * cl for cu, cl in zip(up.coeffs, lo.coeffs))
            bound = -al * up.bound + au * lo.bound
            combined.append(Constraint(coeffs, bound, up.strict or lo.strict))

    reduced: dict[tuple, Constraint] = {}
    for c in rest + combined:
        if all(x == 0 for x in c.coeffs):
            if not _constant_holds(c):
                return None
            continue
        c = c.normalized()
        key = (c.coeffs, c.bound)
        prior = reduced.get(key)
        if prior is None or (c.strict and not prior.strict):
            reduced[key] = c
    return list(reduced.values())


def _pick_in_interval(
    lo: tuple[Fraction, bool] | None, hi: tuple[Fraction, bool] | None
) -> Fraction:
    """A rational inside the (guaranteed non-empty) interval."""

    def lo_admits(x: Fraction) -> bool:
        return lo is None or x > lo[0] or (x == lo[0] and not lo[1])

    def hi_admits(x: Fraction) -> bool:
        return hi is None or x < hi[0] or (x == hi[0] and not hi[1])

    if lo_admits(ZERO) and hi_admits(ZERO):
        return ZERO
    if lo is not None and not lo[1] and hi_admits(lo[0]):
        return lo[0]
    if hi is not None and not hi[1] and lo_admits(hi[0]):
        return hi[0]
    if lo is not None and hi is not None:
        return (lo[0] + hi[0]) / 2
    if lo is not None:
        return lo[0] + 1
    assert hi is not None
    return hi[0] - 1


def find_point(constraints: Iterable[Constraint], n_vars: int) -> tuple[Fraction, ...] | None:
    """A rational solution of the system, or None when it is infeasible."""
    system: list[Constraint] = []
    for c in constraints:
        if len(c.coeffs) != n_vars:
            raise ValueError(f"constraint arity {len(c.coeffs)} != {n_vars}")
        if all(x == 0 for x in c.coeffs):
            if not _constant_holds(c):
                return None
            continue
        system.append(c.normalized())

    if n_vars == 0:
        return ()

    levels: list[tuple[int, list[Constraint]]] = []
    remaining = list(range(n_vars))
    while len(remaining) > 1:
        def fill_cost(v: int) -> tuple[int, int]:
            ups = sum(1 for c in system if c.coeffs[v] > 0)
            los = sum(1 for c in system if c.coeffs[v] < 0)
            return (ups * los - ups - los, v)

        var = min(remaining, key=fill_cost)
        levels.append((var, system))
        reduced = _eliminate(system, var)
        if reduced is None:
            return None
        system = reduced
        remaining.remove(var)
    levels.append((remaining[0], system))

    point: list[Fraction] = [ZERO] * n_vars
    for var, level in reversed(levels):
        lo: tuple[Fraction, bool] | None = None
        hi: tuple[Fraction, bool] | None = None
        for c in level:
            a = c.coeffs[var]
            if a == 0:
                continue
            rest = sum(
                (c.coeffs[j] * point[j] for j in range(n_vars) if j != var and c.coeffs[j] != 0),
                ZERO,
            )
            value = (c.bound - rest) / a
            if a > 0:
                if hi is None or value < hi[0] or (value == hi[0] and c.strict):
                    hi = (value, c.strict)
            else:
                if lo is None or value > lo[0] or (value == lo[0] and c.strict):
                    lo = (value, c.strict)
        if lo is not None and hi is not None:
            if lo[0] > hi[0] or (lo[0] == hi[0] and (lo[1] or hi[1])):
                return None  # defensive; elimination should prevent this
        point[var] = _pick_in_interval(lo, hi)
    return tuple(point)


def feasible(constraints: Iterable[Constraint], n_vars: int) -> bool:
    return find_point(constraints, n_vars) is not None


@dataclass(frozen=True)
class Hyperplane:
    """Branching predicate: TRUE means coeffs . x <= bound, FALSE the strict reverse."""

    coeffs: tuple[Fraction, ...]
    bound: Fraction

    def true_constraint(self) -> Constraint:
        return Constraint(self.coeffs, self.bound)

    def false_constraint(self) -> Constraint:
        return Constraint(tuple(-c for c in self.coeffs), -self.bound, strict=True)


def enumerate_cells(
    base: Sequence[Constraint],
    hyperplanes: Sequence[Hyperplane],
    n_vars: int,
) -> Iterator[tuple[tuple[bool, ...], tuple[Fraction, ...]]]:
    """Feasible sign vectors of the arrangement, with a witness point each.

    Branches depth-first over the hyperplanes, pruning branches whose
    accumulated system is infeasible, so the work is proportional to the
    number of non-empty cells rather than 2^len(hyperplanes).
    """
    root = find_point(base, n_vars)
    if root is None:
        return

    stack: list[Constraint] = list(base)
    signs: list[bool] = []

    def walk(index: int, witness: tuple[Fraction, ...]):
        if index == len(hyperplanes):
            yield (tuple(signs), witness)
            return
        h = hyperplanes[index]
        for sign, constraint in ((True, h.true_constraint()), (False, h.false_constraint())):
            if constraint.admits(witness):
                next_witness = witness
            else:
                next_witness = find_point([*stack, constraint], n_vars)
                if next_witness is None:
                    continue
            stack.append(constraint)
            signs.append(sign)
            yield from walk(index + 1, next_witness)
            stack.pop()
            signs.pop()

    yield from walk(0, root)
