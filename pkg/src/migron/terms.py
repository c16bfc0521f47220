"""Expressions and coercions.

Surface programs contain no coercion nodes.  Constraint generation rewrites
a program into one carrying suspended coercions; after solving, suspended
coercions are resolved to primitive coercions, and executing a program
requires all coercions to be explicit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .types import ANY, BOOL, INT, STR, UNIT, GroundTy, Typ


class Expr:
    __slots__ = ()


class Coercion:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Expr):
    name: str


class Lit(Expr):
    """A literal: int, bool, str, or unit (represented as None).

    Not a plain dataclass because bool is a subtype of int in Python and
    ``Lit(True) == Lit(1)`` must be False.
    """

    __slots__ = ("value",)

    def __init__(self, value: Union[int, bool, str, None]):
        object.__setattr__(self, "value", value)

    def __setattr__(self, *_):
        raise AttributeError("Lit is immutable")

    def __eq__(self, other):
        return (
            isinstance(other, Lit)
            and type(self.value) is type(other.value)
            and self.value == other.value
        )

    def __hash__(self):
        return hash((Lit, type(self.value).__name__, self.value))

    def __repr__(self):
        return f"Lit({self.value!r})"


def const_typ(value) -> Typ:
    if isinstance(value, bool):
        return BOOL
    if isinstance(value, int):
        return INT
    if isinstance(value, str):
        return STR
    if value is None:
        return UNIT
    raise TypeError(f"not a constant: {value!r}")


@dataclass(frozen=True)
class Fun(Expr):
    param: str
    annotation: Typ
    body: Expr


@dataclass(frozen=True)
class App(Expr):
    fn: Expr
    arg: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class If(Expr):
    cond: Expr
    then: Expr
    els: Expr


@dataclass(frozen=True)
class Let(Expr):
    name: str
    bound: Expr
    body: Expr


@dataclass(frozen=True)
class Seq(Expr):
    first: Expr
    second: Expr


@dataclass(frozen=True)
class Fix(Expr):
    name: str
    annotation: Typ
    body: Expr


@dataclass(frozen=True)
class RefNew(Expr):
    init: Expr


@dataclass(frozen=True)
class Deref(Expr):
    ref: Expr


@dataclass(frozen=True)
class SetRef(Expr):
    target: Expr
    value: Expr


@dataclass(frozen=True)
class PairNew(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class First(Expr):
    pair: Expr


@dataclass(frozen=True)
class Second(Expr):
    pair: Expr


@dataclass(frozen=True)
class VecNew(Expr):
    # Element first, then length: the element expression fixes the vector's
    # content type, the length is an int.
    elem: Expr
    size: Expr


@dataclass(frozen=True)
class VecGet(Expr):
    vec: Expr
    index: Expr


@dataclass(frozen=True)
class VecSet(Expr):
    # (vector, value, index): the stored value comes second, mirroring the
    # coercion slots the constraint rule assigns to each position.
    vec: Expr
    value: Expr
    index: Expr


@dataclass(frozen=True)
class VecLen(Expr):
    vec: Expr


@dataclass(frozen=True)
class SuspendedCoercion:
    """A coercion whose endpoints may still contain metavariables; resolved
    to a primitive Coercion once a model closes both types."""

    source: Typ
    target: Typ


@dataclass(frozen=True)
class CoerceApp(Expr):
    coercion: Union[SuspendedCoercion, Coercion]
    body: Expr


@dataclass(frozen=True)
class Embedded(Expr):
    """An already-coerced subterm with a known type, used to plug migrated
    programs into surface contexts during differential evaluation."""

    inner: Expr
    typ: Typ


# Primitive coercions


@dataclass(frozen=True)
class CId(Coercion):
    typ: Typ


@dataclass(frozen=True)
class CTag(Coercion):
    ground: GroundTy


@dataclass(frozen=True)
class CUntag(Coercion):
    ground: GroundTy


@dataclass(frozen=True)
class CWrap(Coercion):
    arg: Coercion
    result: Coercion


@dataclass(frozen=True)
class CSeq(Coercion):
    first: Coercion
    second: Coercion


@dataclass(frozen=True)
class CRefWrap(Coercion):
    """Reference proxy: ``read`` coerces values read out of the cell,
    ``write`` coerces values written into it."""

    read: Coercion
    write: Coercion


@dataclass(frozen=True)
class CVecWrap(Coercion):
    read: Coercion
    write: Coercion


@dataclass(frozen=True)
class CPairWrap(Coercion):
    left: Coercion
    right: Coercion


_BINDERS = (Fun, Fix)


def children(e: Expr) -> tuple[Expr, ...]:
    match e:
        case Var() | Lit() | Embedded():
            return ()
        case Fun(_, _, b) | Fix(_, _, b):
            return (b,)
        case App(a, b) | Mul(a, b) | Add(a, b) | Seq(a, b) | SetRef(a, b) | PairNew(a, b) | VecGet(a, b) | VecNew(a, b):
            return (a, b)
        case If(a, b, c) | VecSet(a, b, c):
            return (a, b, c)
        case Let(_, a, b):
            return (a, b)
        case RefNew(a) | Deref(a) | First(a) | Second(a) | VecLen(a):
            return (a,)
        case CoerceApp(_, b):
            return (b,)
    raise TypeError(f"unknown expression: {e!r}")


def free_vars(e: Expr) -> set[str]:
    match e:
        case Var(x):
            return {x}
        case Fun(x, _, b) | Fix(x, _, b):
            return free_vars(b) - {x}
        case Let(x, bound, body):
            return free_vars(bound) | (free_vars(body) - {x})
        case _:
            out: set[str] = set()
            for c in children(e):
                out |= free_vars(c)
            return out


def is_surface(e: Expr) -> bool:
    """True iff the expression contains no coercion applications."""
    if isinstance(e, (CoerceApp, Embedded)):
        return False
    return all(is_surface(c) for c in children(e))


def erase_coercions(e: Expr) -> Expr:
    """Drop every coercion application, yielding the underlying surface term."""
    match e:
        case CoerceApp(_, b):
            return erase_coercions(b)
        case Var() | Lit():
            return e
        case Fun(x, t, b):
            return Fun(x, t, erase_coercions(b))
        case Fix(x, t, b):
            return Fix(x, t, erase_coercions(b))
        case App(a, b):
            return App(erase_coercions(a), erase_coercions(b))
        case Mul(a, b):
            return Mul(erase_coercions(a), erase_coercions(b))
        case Add(a, b):
            return Add(erase_coercions(a), erase_coercions(b))
        case If(a, b, c):
            return If(erase_coercions(a), erase_coercions(b), erase_coercions(c))
        case Let(x, a, b):
            return Let(x, erase_coercions(a), erase_coercions(b))
        case Seq(a, b):
            return Seq(erase_coercions(a), erase_coercions(b))
        case RefNew(a):
            return RefNew(erase_coercions(a))
        case Deref(a):
            return Deref(erase_coercions(a))
        case SetRef(a, b):
            return SetRef(erase_coercions(a), erase_coercions(b))
        case PairNew(a, b):
            return PairNew(erase_coercions(a), erase_coercions(b))
        case First(a):
            return First(erase_coercions(a))
        case Second(a):
            return Second(erase_coercions(a))
        case VecNew(a, b):
            return VecNew(erase_coercions(a), erase_coercions(b))
        case VecGet(a, b):
            return VecGet(erase_coercions(a), erase_coercions(b))
        case VecSet(a, b, c):
            return VecSet(erase_coercions(a), erase_coercions(b), erase_coercions(c))
        case VecLen(a):
            return VecLen(erase_coercions(a))
    raise TypeError(f"cannot erase {e!r}")


def map_annotations(e: Expr, f) -> Expr:
    """Rebuild ``e`` with every binder annotation replaced by ``f(annotation)``."""
    match e:
        case Fun(x, t, b):
            return Fun(x, f(t), map_annotations(b, f))
        case Fix(x, t, b):
            return Fix(x, f(t), map_annotations(b, f))
        case Var() | Lit():
            return e
        case App(a, b):
            return App(map_annotations(a, f), map_annotations(b, f))
        case Mul(a, b):
            return Mul(map_annotations(a, f), map_annotations(b, f))
        case Add(a, b):
            return Add(map_annotations(a, f), map_annotations(b, f))
        case If(a, b, c):
            return If(map_annotations(a, f), map_annotations(b, f), map_annotations(c, f))
        case Let(x, a, b):
            return Let(x, map_annotations(a, f), map_annotations(b, f))
        case Seq(a, b):
            return Seq(map_annotations(a, f), map_annotations(b, f))
        case RefNew(a):
            return RefNew(map_annotations(a, f))
        case Deref(a):
            return Deref(map_annotations(a, f))
        case SetRef(a, b):
            return SetRef(map_annotations(a, f), map_annotations(b, f))
        case PairNew(a, b):
            return PairNew(map_annotations(a, f), map_annotations(b, f))
        case First(a):
            return First(map_annotations(a, f))
        case Second(a):
            return Second(map_annotations(a, f))
        case VecNew(a, b):
            return VecNew(map_annotations(a, f), map_annotations(b, f))
        case VecGet(a, b):
            return VecGet(map_annotations(a, f), map_annotations(b, f))
        case VecSet(a, b, c):
            return VecSet(map_annotations(a, f), map_annotations(b, f), map_annotations(c, f))
        case VecLen(a):
            return VecLen(map_annotations(a, f))
    raise TypeError(f"cannot map over {e!r}")


def binder_annotations(e: Expr) -> list[Typ]:
    """Annotations of every fun/fix binder, in a fixed preorder walk."""
    out: list[Typ] = []

    def walk(x: Expr) -> None:
        if isinstance(x, _BINDERS):
            out.append(x.annotation)
        for c in children(x):
            walk(c)

    walk(e)
    return out


def expr_precision(e1: Expr, e2: Expr) -> bool:
    """Expression precision: structurally identical terms whose annotations
    are pointwise related by type precision."""
    from .types import type_precision

    if type(e1) is not type(e2):
        return False
    match (e1, e2):
        case (Var(a), Var(b)):
            return a == b
        case (Lit(), Lit()):
            return e1 == e2
        case (Fun(x1, t1, b1), Fun(x2, t2, b2)) | (Fix(x1, t1, b1), Fix(x2, t2, b2)):
            return x1 == x2 and type_precision(t1, t2) and expr_precision(b1, b2)
        case (Let(x1, a1, b1), Let(x2, a2, b2)):
            return x1 == x2 and expr_precision(a1, a2) and expr_precision(b1, b2)
        case _:
            c1, c2 = children(e1), children(e2)
            return len(c1) == len(c2) and all(
                expr_precision(a, b) for a, b in zip(c1, c2)
            )


def metavars_of_expr(e: Expr) -> set[int]:
    from .types import metavars_of_typ

    out: set[int] = set()

    def walk(x: Expr) -> None:
        if isinstance(x, _BINDERS):
            out.update(metavars_of_typ(x.annotation))
        if isinstance(x, CoerceApp) and isinstance(x.coercion, SuspendedCoercion):
            out.update(metavars_of_typ(x.coercion.source))
            out.update(metavars_of_typ(x.coercion.target))
        for c in children(x):
            walk(c)

    walk(e)
    return out


def count_coercion_sites(e: Expr) -> int:
    n = 1 if isinstance(e, CoerceApp) else 0
    return n + sum(count_coercion_sites(c) for c in children(e))
