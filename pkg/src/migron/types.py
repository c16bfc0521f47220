"""Types of the gradually typed lambda calculus, plus the relations on them.

The type language has base types, the unknown type (spelled ``any`` in
concrete syntax), arrows, mutable references, immutable pairs, mutable
vectors, and metavariables.  Metavariables only exist between constraint
generation and constraint solving; a type without them is "closed".
"""

from __future__ import annotations

from dataclasses import dataclass


class Typ:
    """Base class for all types."""

    __slots__ = ()


@dataclass(frozen=True)
class Unknown(Typ):
    def __repr__(self) -> str:
        return "ANY"


@dataclass(frozen=True)
class Base(Typ):
    name: str  # "int" | "bool" | "str" | "unit"


@dataclass(frozen=True)
class Arrow(Typ):
    input: Typ
    output: Typ


@dataclass(frozen=True)
class Ref(Typ):
    content: Typ


@dataclass(frozen=True)
class Pair(Typ):
    left: Typ
    right: Typ


@dataclass(frozen=True)
class Vector(Typ):
    elem: Typ


@dataclass(frozen=True)
class Metavar(Typ):
    id: int


ANY = Unknown()
INT = Base("int")
BOOL = Base("bool")
STR = Base("str")
UNIT = Base("unit")

BASE_TYPES = (INT, BOOL, STR, UNIT)


@dataclass(frozen=True)
class GroundTy:
    """A runtime-observable type shape: a base type, or the outermost
    constructor of a structured type with unknown components."""

    kind: str  # "int" | "bool" | "str" | "unit" | "fun" | "ref" | "pair" | "vec"


GROUND_INT = GroundTy("int")
GROUND_BOOL = GroundTy("bool")
GROUND_STR = GroundTy("str")
GROUND_UNIT = GroundTy("unit")
GROUND_FUN = GroundTy("fun")
GROUND_REF = GroundTy("ref")
GROUND_PAIR = GroundTy("pair")
GROUND_VEC = GroundTy("vec")

ALL_GROUNDS = (
    GROUND_INT,
    GROUND_BOOL,
    GROUND_STR,
    GROUND_UNIT,
    GROUND_FUN,
    GROUND_REF,
    GROUND_PAIR,
    GROUND_VEC,
)

_GROUND_TO_TYP = {
    GROUND_INT: INT,
    GROUND_BOOL: BOOL,
    GROUND_STR: STR,
    GROUND_UNIT: UNIT,
    GROUND_FUN: Arrow(ANY, ANY),
    GROUND_REF: Ref(ANY),
    GROUND_PAIR: Pair(ANY, ANY),
    GROUND_VEC: Vector(ANY),
}

GROUND_TYPES = tuple(_GROUND_TO_TYP.values())


def typ_of_ground(g: GroundTy) -> Typ:
    return _GROUND_TO_TYP[g]


def ground_of_typ(t: Typ) -> GroundTy | None:
    """The ground shape of a closed type, or None for the unknown type."""
    match t:
        case Base(name):
            return GroundTy(name)
        case Arrow():
            return GROUND_FUN
        case Ref():
            return GROUND_REF
        case Pair():
            return GROUND_PAIR
        case Vector():
            return GROUND_VEC
        case _:
            return None


def is_closed(t: Typ) -> bool:
    """True iff ``t`` contains no metavariables."""
    match t:
        case Metavar():
            return False
        case Arrow(s, u):
            return is_closed(s) and is_closed(u)
        case Ref(c):
            return is_closed(c)
        case Pair(l, r):
            return is_closed(l) and is_closed(r)
        case Vector(e):
            return is_closed(e)
        case _:
            return True


def is_ground(t: Typ) -> bool:
    """True iff ``t`` is a base type or a structured type whose components
    are all the unknown type, i.e. one of the dynamically observable shapes."""
    return t in GROUND_TYPES


def consistent(s: Typ, t: Typ) -> bool:
    """Type consistency: structural equality up to occurrences of the
    unknown type.  Reflexive and symmetric but not transitive."""
    match (s, t):
        case (Unknown(), _) | (_, Unknown()):
            return True
        case (Base(a), Base(b)):
            return a == b
        case (Arrow(s1, t1), Arrow(s2, t2)):
            return consistent(s1, s2) and consistent(t1, t2)
        case (Ref(a), Ref(b)):
            return consistent(a, b)
        case (Pair(a1, b1), Pair(a2, b2)):
            return consistent(a1, a2) and consistent(b1, b2)
        case (Vector(a), Vector(b)):
            return consistent(a, b)
        case _:
            return False


def type_precision(s: Typ, t: Typ) -> bool:
    """The precision partial order: s is less precise than (or equal to) t,
    with the unknown type at the bottom."""
    match (s, t):
        case (Unknown(), _):
            return True
        case (Base(a), Base(b)):
            return a == b
        case (Arrow(s1, t1), Arrow(s2, t2)):
            return type_precision(s1, s2) and type_precision(t1, t2)
        case (Ref(a), Ref(b)):
            return type_precision(a, b)
        case (Pair(a1, b1), Pair(a2, b2)):
            return type_precision(a1, a2) and type_precision(b1, b2)
        case (Vector(a), Vector(b)):
            return type_precision(a, b)
        case _:
            return s == t


def join(s: Typ, t: Typ) -> Typ | None:
    """Least upper bound in the precision order, or None if inconsistent.
    Used to type conditionals whose branches differ only in precision."""
    match (s, t):
        case (Unknown(), _):
            return t
        case (_, Unknown()):
            return s
        case (Base(a), Base(b)):
            return s if a == b else None
        case (Arrow(s1, t1), Arrow(s2, t2)):
            a, b = join(s1, s2), join(t1, t2)
            return Arrow(a, b) if a is not None and b is not None else None
        case (Ref(a), Ref(b)):
            c = join(a, b)
            return Ref(c) if c is not None else None
        case (Pair(a1, b1), Pair(a2, b2)):
            a, b = join(a1, a2), join(b1, b2)
            return Pair(a, b) if a is not None and b is not None else None
        case (Vector(a), Vector(b)):
            c = join(a, b)
            return Vector(c) if c is not None else None
        case _:
            return None


def metavars_of_typ(t: Typ) -> set[int]:
    match t:
        case Metavar(i):
            return {i}
        case Arrow(s, u):
            return metavars_of_typ(s) | metavars_of_typ(u)
        case Ref(c):
            return metavars_of_typ(c)
        case Pair(l, r):
            return metavars_of_typ(l) | metavars_of_typ(r)
        case Vector(e):
            return metavars_of_typ(e)
        case _:
            return set()
