"""The boolean constraint language produced by constraint generation.

A constraint is a formula over type equalities, boolean weight variables,
groundness tests, and (for the second migration phase) equalities on
selector chains applied to a type term.  ``evaluate`` gives the reference
semantics of a constraint under a total assignment; it is deliberately
independent of the solver and is used to validate every model the solver
returns.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Mapping

from .types import (
    ANY,
    GROUND_TYPES,
    Arrow,
    Metavar,
    Pair,
    Ref,
    Typ,
    Vector,
    metavars_of_typ,
)


class Constraint:
    __slots__ = ()


@dataclass(frozen=True)
class TRUE_T(Constraint):
    def __repr__(self):
        return "TRUE"


TRUE = TRUE_T()


@dataclass(frozen=True)
class TypEq(Constraint):
    left: Typ
    right: Typ


@dataclass(frozen=True)
class Weight(Constraint):
    id: int


@dataclass(frozen=True)
class And(Constraint):
    left: Constraint
    right: Constraint


@dataclass(frozen=True)
class Or(Constraint):
    left: Constraint
    right: Constraint


@dataclass(frozen=True)
class Not(Constraint):
    inner: Constraint


@dataclass(frozen=True)
class IsGround(Constraint):
    """Shorthand for the disjunction over ground shapes, expanded at
    encoding time.  The unknown type satisfies it: the guard exists to
    forbid coercing *other* structured types to unknown, and an expression
    that is already unknown needs no coercion at all."""

    typ: Typ


@dataclass(frozen=True)
class SelEq(Constraint):
    """``path`` applied to ``base`` equals ``target``; selectors are the
    datatype accessor names.  If the value of ``base`` does not match the
    constructors along the path, the accessor value is unconstrained and
    the atom is satisfiable."""

    path: tuple[str, ...]
    base: Typ
    target: Typ


SELECTORS = {
    "in": (Arrow, "input"),
    "out": (Arrow, "output"),
    "to": (Ref, "content"),
    "left": (Pair, "left"),
    "right": (Pair, "right"),
    "elem": (Vector, "elem"),
}

# Shapes a type term may take when coerced to the unknown type, i.e. the
# ground types plus unknown itself.
GROUNDISH = (ANY,) + GROUND_TYPES


def conj(*cs: Constraint) -> Constraint:
    parts = [c for c in cs if c is not TRUE]
    if not parts:
        return TRUE
    return reduce(And, parts)


def disj(*cs: Constraint) -> Constraint:
    return reduce(Or, cs)


def ground_expansion(t: Typ) -> Constraint:
    return disj(*(TypEq(t, g) for g in GROUNDISH))


def subst_typ(assign: Mapping[int, Typ], t: Typ) -> Typ:
    """Replace metavariables by their assigned types, recursively closing
    the result.  Idempotent once the result is metavariable-free."""
    match t:
        case Metavar(i):
            if i not in assign:
                from .session import MissingAssignment

                raise MissingAssignment(i)
            value = assign[i]
            return value if not metavars_of_typ(value) else subst_typ(assign, value)
        case Arrow(a, b):
            return Arrow(subst_typ(assign, a), subst_typ(assign, b))
        case Ref(c):
            return Ref(subst_typ(assign, c))
        case Pair(a, b):
            return Pair(subst_typ(assign, a), subst_typ(assign, b))
        case Vector(a):
            return Vector(subst_typ(assign, a))
        case _:
            return t


def select(path: Iterable[str], value: Typ) -> Typ | None:
    """Follow a selector chain through a closed type; None on a
    constructor mismatch anywhere along the path."""
    for sel in path:
        cls, field = SELECTORS[sel]
        if not isinstance(value, cls):
            return None
        value = getattr(value, field)
    return value


def evaluate(
    c: Constraint,
    types: Mapping[int, Typ],
    weights: Mapping[int, bool],
) -> bool:
    """Truth of a constraint under a total, closed assignment."""
    match c:
        case TRUE_T():
            return True
        case TypEq(l, r):
            return subst_typ(types, l) == subst_typ(types, r)
        case Weight(i):
            return weights[i]
        case And(l, r):
            return evaluate(l, types, weights) and evaluate(r, types, weights)
        case Or(l, r):
            return evaluate(l, types, weights) or evaluate(r, types, weights)
        case Not(x):
            return not evaluate(x, types, weights)
        case IsGround(t):
            return subst_typ(types, t) in GROUNDISH
        case SelEq(path, base, target):
            picked = select(path, subst_typ(types, base))
            if picked is None:
                return True
            return picked == subst_typ(types, target)
    raise TypeError(f"unknown constraint {c!r}")


def metavars_of(c: Constraint) -> set[int]:
    match c:
        case TypEq(l, r):
            return metavars_of_typ(l) | metavars_of_typ(r)
        case And(l, r) | Or(l, r):
            return metavars_of(l) | metavars_of(r)
        case Not(x):
            return metavars_of(x)
        case IsGround(t):
            return metavars_of_typ(t)
        case SelEq(_, base, target):
            return metavars_of_typ(base) | metavars_of_typ(target)
        case _:
            return set()


def weights_of(c: Constraint) -> set[int]:
    match c:
        case Weight(i):
            return {i}
        case And(l, r) | Or(l, r):
            return weights_of(l) | weights_of(r)
        case Not(x):
            return weights_of(x)
        case _:
            return set()
