"""Runtime for the coercion calculus.

Holds everything needed to execute programs: coercion insertion (to run a
surface program as-is, without migrating), the typechecker for the
intermediate language with explicit coercions, and a step-limited
small-step interpreter with a store for references and vectors.

Execution outcomes distinguish failed coercions (the only outcome counted
as a dynamic type error) from other stuck states and from step-limit
exhaustion.  Observations flatten values for differential comparison:
tags are transparent, all functions look alike, and structures compare
by shape and contents.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from . import terms as t
from .coercions import IllTypedCoercion, coerce, coercion_type
from .typecheck import IllTyped
from .types import (
    ANY,
    BOOL,
    INT,
    STR,
    UNIT,
    Arrow,
    GroundTy,
    Pair,
    Ref,
    Typ,
    Unknown,
    Vector,
    consistent,
    ground_of_typ,
    join,
)

# Values


class Value:
    __slots__ = ()


@dataclass(frozen=True)
class VConst(Value):
    value: object  # int | bool | str | None

    def __eq__(self, other):
        return (
            isinstance(other, VConst)
            and type(self.value) is type(other.value)
            and self.value == other.value
        )

    def __hash__(self):
        return hash((VConst, type(self.value).__name__, self.value))


@dataclass(frozen=True)
class VClosure(Value):
    param: str
    annotation: Typ
    body: t.Expr


@dataclass(frozen=True)
class VBox(Value):
    ground: GroundTy
    payload: Value  # never itself boxed


@dataclass(frozen=True)
class VCell(Value):
    addr: int


@dataclass(frozen=True)
class VVec(Value):
    addr: int


@dataclass(frozen=True)
class VPair(Value):
    left: Value
    right: Value


@dataclass(frozen=True)
class VRefProxy(Value):
    inner: Value
    read: t.Coercion
    write: t.Coercion


@dataclass(frozen=True)
class VVecProxy(Value):
    inner: Value
    read: t.Coercion
    write: t.Coercion


UNIT_VALUE = VConst(None)


@dataclass(frozen=True)
class ValueE(t.Expr):
    """A computed value re-embedded in expression position."""

    value: Value


# Outcomes and observations


class Outcome:
    __slots__ = ()


@dataclass(frozen=True)
class Val(Outcome):
    value: Value


@dataclass(frozen=True)
class StuckCoercion(Outcome):
    coercion: t.Coercion
    expected: GroundTy
    found: Optional[GroundTy]


@dataclass(frozen=True)
class StuckOther(Outcome):
    reason: str


@dataclass(frozen=True)
class Timeout(Outcome):
    steps: int


class Observation:
    __slots__ = ()


@dataclass(frozen=True)
class ObsBase(Observation):
    value: object

    def __eq__(self, other):
        return (
            isinstance(other, ObsBase)
            and type(self.value) is type(other.value)
            and self.value == other.value
        )

    def __hash__(self):
        return hash((ObsBase, type(self.value).__name__, self.value))


@dataclass(frozen=True)
class ObsFn(Observation):
    pass


@dataclass(frozen=True)
class ObsStruct(Observation):
    kind: str  # "ref" | "vector" | "pair" | "cycle"
    children: tuple[Observation, ...]


def ground_of_value(v: Value) -> GroundTy:
    match v:
        case VConst(c):
            return ground_of_typ(t.const_typ(c))
        case VClosure() | VBox(GroundTy("fun"), _):
            return GroundTy("fun")
        case VCell() | VRefProxy():
            return GroundTy("ref")
        case VVec() | VVecProxy():
            return GroundTy("vec")
        case VPair():
            return GroundTy("pair")
        case VBox(g, _):
            return g
    raise TypeError(f"not a value: {v!r}")


# Coercion insertion: compiles a surface program for execution.


def insert_coercions(env: Mapping[str, Typ], e: t.Expr) -> tuple[t.Expr, Typ]:
    """Rewrite a surface program with explicit coercions.

    Applications never fail here: a non-arrow head is coerced to the
    function ground type (a doomed coercion if it cannot succeed), and
    argument casts between inconsistent types are likewise doomed rather
    than rejected.  Other forms reject exactly the programs the surface
    typechecker rejects.
    """
    match e:
        case t.Var(x):
            if x not in env:
                raise IllTyped(x, "unbound variable")
            return e, env[x]
        case t.Lit():
            return e, t.const_typ(e.value)
        case t.Embedded(inner, typ):
            return inner, typ
        case t.Fun(x, ann, body):
            body2, tb = insert_coercions({**env, x: ann}, body)
            return t.Fun(x, ann, body2), Arrow(ann, tb)
        case t.App(fn, arg):
            f2, tf = insert_coercions(env, fn)
            a2, ta = insert_coercions(env, arg)
            if isinstance(tf, Arrow):
                return t.App(f2, _cast(a2, ta, tf.input)), tf.output
            fn_cast = _cast(f2, tf, Arrow(ANY, ANY))
            return t.App(fn_cast, _cast(a2, ta, ANY)), ANY
        case t.Mul(a, b):
            a2, ta = insert_coercions(env, a)
            b2, tb = insert_coercions(env, b)
            if not consistent(ta, INT) or not consistent(tb, INT):
                raise IllTyped("*", "operands must be consistent with int")
            return t.Mul(_cast(a2, ta, INT), _cast(b2, tb, INT)), INT
        case t.Add(a, b):
            from .typecheck import _add_typ

            a2, ta = insert_coercions(env, a)
            b2, tb = insert_coercions(env, b)
            result = _add_typ(ta, tb)
            return t.Add(_cast(a2, ta, result), _cast(b2, tb, result)), result
        case t.If(c, th, el):
            c2, tc = insert_coercions(env, c)
            if not consistent(tc, BOOL):
                raise IllTyped("if", "condition must be consistent with bool")
            t2, tt = insert_coercions(env, th)
            e2, te = insert_coercions(env, el)
            j = join(tt, te)
            if j is None:
                raise IllTyped("if", "branch types are inconsistent")
            return t.If(_cast(c2, tc, BOOL), _cast(t2, tt, j), _cast(e2, te, j)), j
        case t.Let(x, bound, body):
            b2, tb = insert_coercions(env, bound)
            body2, tbody = insert_coercions({**env, x: tb}, body)
            return t.Let(x, b2, body2), tbody
        case t.Seq(a, b):
            a2, _ = insert_coercions(env, a)
            b2, tb = insert_coercions(env, b)
            return t.Seq(a2, b2), tb
        case t.Fix(f, ann, body):
            body2, tb = insert_coercions({**env, f: ann}, body)
            if not consistent(tb, ann):
                raise IllTyped("fix", "body type not consistent with annotation")
            return t.Fix(f, ann, _cast(body2, tb, ann)), ann
        case t.RefNew(a):
            a2, ta = insert_coercions(env, a)
            return t.RefNew(a2), Ref(ta)
        case t.Deref(a):
            a2, ta = insert_coercions(env, a)
            if isinstance(ta, Ref):
                return t.Deref(a2), ta.content
            if isinstance(ta, Unknown):
                return t.Deref(_cast(a2, ta, Ref(ANY))), ANY
            raise IllTyped("!", "dereference of a non-reference")
        case t.SetRef(a, b):
            a2, ta = insert_coercions(env, a)
            b2, tb = insert_coercions(env, b)
            if isinstance(ta, Ref):
                if not consistent(tb, ta.content):
                    raise IllTyped(":=", "written value inconsistent with cell type")
                return t.SetRef(a2, _cast(b2, tb, ta.content)), UNIT
            if isinstance(ta, Unknown):
                return t.SetRef(_cast(a2, ta, Ref(ANY)), _cast(b2, tb, ANY)), UNIT
            raise IllTyped(":=", "assignment to a non-reference")
        case t.PairNew(a, b):
            a2, ta = insert_coercions(env, a)
            b2, tb = insert_coercions(env, b)
            return t.PairNew(a2, b2), Pair(ta, tb)
        case t.First(a):
            a2, ta = insert_coercions(env, a)
            if isinstance(ta, Pair):
                return t.First(a2), ta.left
            if isinstance(ta, Unknown):
                return t.First(_cast(a2, ta, Pair(ANY, ANY))), ANY
            raise IllTyped("fst", "projection from a non-pair")
        case t.Second(a):
            a2, ta = insert_coercions(env, a)
            if isinstance(ta, Pair):
                return t.Second(a2), ta.right
            if isinstance(ta, Unknown):
                return t.Second(_cast(a2, ta, Pair(ANY, ANY))), ANY
            raise IllTyped("snd", "projection from a non-pair")
        case t.VecNew(elem, size):
            e2, te = insert_coercions(env, elem)
            s2, ts = insert_coercions(env, size)
            if not consistent(ts, INT):
                raise IllTyped("vec", "length must be consistent with int")
            return t.VecNew(e2, _cast(s2, ts, INT)), Vector(te)
        case t.VecGet(v, i):
            v2, tv = insert_coercions(env, v)
            i2, ti = insert_coercions(env, i)
            if not consistent(ti, INT):
                raise IllTyped("vecget", "index must be consistent with int")
            i2 = _cast(i2, ti, INT)
            if isinstance(tv, Vector):
                return t.VecGet(v2, i2), tv.elem
            if isinstance(tv, Unknown):
                return t.VecGet(_cast(v2, tv, Vector(ANY)), i2), ANY
            raise IllTyped("vecget", "read from a non-vector")
        case t.VecSet(v, x, i):
            v2, tv = insert_coercions(env, v)
            x2, tx = insert_coercions(env, x)
            i2, ti = insert_coercions(env, i)
            if not consistent(ti, INT):
                raise IllTyped("vecset", "index must be consistent with int")
            i2 = _cast(i2, ti, INT)
            if isinstance(tv, Vector):
                if not consistent(tx, tv.elem):
                    raise IllTyped("vecset", "written value inconsistent with element type")
                return t.VecSet(v2, _cast(x2, tx, tv.elem), i2), tv
            if isinstance(tv, Unknown):
                return (
                    t.VecSet(_cast(v2, tv, Vector(ANY)), _cast(x2, tx, ANY), i2),
                    Vector(ANY),
                )
            raise IllTyped("vecset", "write to a non-vector")
        case t.VecLen(v):
            v2, tv = insert_coercions(env, v)
            if isinstance(tv, Vector):
                return t.VecLen(v2), INT
            if isinstance(tv, Unknown):
                return t.VecLen(_cast(v2, tv, Vector(ANY))), INT
            raise IllTyped("veclen", "length of a non-vector")
    raise IllTyped(type(e).__name__, "cannot insert coercions")


def _cast(e: t.Expr, source: Typ, target: Typ) -> t.Expr:
    k = coerce(source, target)
    if isinstance(k, t.CId):
        return e
    return t.CoerceApp(k, e)


# Typechecking the language with explicit coercions.  All rules demand
# exact type equality; gradualness lives entirely in the coercions.


def typecheck_coerced(env: Mapping[str, Typ], e: t.Expr) -> Typ:
    match e:
        case t.Var(x):
            if x not in env:
                raise IllTyped(x, "unbound variable")
            return env[x]
        case t.Lit():
            return t.const_typ(e.value)
        case ValueE(v):
            return value_type(v)
        case t.Embedded(inner, typ):
            actual = typecheck_coerced(env, inner)
            if actual != typ:
                raise IllTyped("embedded", f"declared {typ}, computed {actual}")
            return typ
        case t.CoerceApp(k, body):
            if isinstance(k, t.SuspendedCoercion):
                raise IllTyped("coercion", "suspended coercion in a coerced term")
            try:
                source, target = coercion_type(k)
            except IllTypedCoercion as exc:
                raise IllTyped("coercion", str(exc))
            tb = typecheck_coerced(env, body)
            if tb != source:
                raise IllTyped("coercion", f"body has {tb}, coercion expects {source}")
            return target
        case t.Fun(x, ann, body):
            return Arrow(ann, typecheck_coerced({**env, x: ann}, body))
        case t.App(fn, arg):
            tf = typecheck_coerced(env, fn)
            ta = typecheck_coerced(env, arg)
            if not isinstance(tf, Arrow):
                raise IllTyped("application", "head is not an arrow")
            if ta != tf.input:
                raise IllTyped("application", f"argument {ta} != domain {tf.input}")
            return tf.output
        case t.Mul(a, b):
            if typecheck_coerced(env, a) != INT or typecheck_coerced(env, b) != INT:
                raise IllTyped("*", "operands must be int")
            return INT
        case t.Add(a, b):
            ta = typecheck_coerced(env, a)
            tb = typecheck_coerced(env, b)
            if ta != tb or ta not in (INT, STR, ANY):
                raise IllTyped("+", "operands must both be int, str, or unknown")
            return ta
        case t.If(c, th, el):
            if typecheck_coerced(env, c) != BOOL:
                raise IllTyped("if", "condition must be bool")
            tt = typecheck_coerced(env, th)
            te = typecheck_coerced(env, el)
            if tt != te:
                raise IllTyped("if", "branch types differ")
            return tt
        case t.Let(x, bound, body):
            return typecheck_coerced({**env, x: typecheck_coerced(env, bound)}, body)
        case t.Seq(a, b):
            typecheck_coerced(env, a)
            return typecheck_coerced(env, b)
        case t.Fix(f, ann, body):
            if typecheck_coerced({**env, f: ann}, body) != ann:
                raise IllTyped("fix", "body must have the annotated type")
            return ann
        case t.RefNew(a):
            return Ref(typecheck_coerced(env, a))
        case t.Deref(a):
            ta = typecheck_coerced(env, a)
            if not isinstance(ta, Ref):
                raise IllTyped("!", "dereference of a non-reference")
            return ta.content
        case t.SetRef(a, b):
            ta = typecheck_coerced(env, a)
            if not isinstance(ta, Ref):
                raise IllTyped(":=", "assignment to a non-reference")
            if typecheck_coerced(env, b) != ta.content:
                raise IllTyped(":=", "stored value must match the cell type")
            return UNIT
        case t.PairNew(a, b):
            return Pair(typecheck_coerced(env, a), typecheck_coerced(env, b))
        case t.First(a):
            ta = typecheck_coerced(env, a)
            if not isinstance(ta, Pair):
                raise IllTyped("fst", "projection from a non-pair")
            return ta.left
        case t.Second(a):
            ta = typecheck_coerced(env, a)
            if not isinstance(ta, Pair):
                raise IllTyped("snd", "projection from a non-pair")
            return ta.right
        case t.VecNew(elem, size):
            te = typecheck_coerced(env, elem)
            if typecheck_coerced(env, size) != INT:
                raise IllTyped("vec", "length must be int")
            return Vector(te)
        case t.VecGet(v, i):
            tv = typecheck_coerced(env, v)
            if not isinstance(tv, Vector):
                raise IllTyped("vecget", "read from a non-vector")
            if typecheck_coerced(env, i) != INT:
                raise IllTyped("vecget", "index must be int")
            return tv.elem
        case t.VecSet(v, x, i):
            tv = typecheck_coerced(env, v)
            if not isinstance(tv, Vector):
                raise IllTyped("vecset", "write to a non-vector")
            if typecheck_coerced(env, x) != tv.elem:
                raise IllTyped("vecset", "stored value must match the element type")
            if typecheck_coerced(env, i) != INT:
                raise IllTyped("vecset", "index must be int")
            return tv
        case t.VecLen(v):
            if not isinstance(typecheck_coerced(env, v), Vector):
                raise IllTyped("veclen", "length of a non-vector")
            return INT
    raise IllTyped(type(e).__name__, "not a coerced-language expression")


def value_type(v: Value) -> Typ:
    """Types for store-free runtime values, used by the preservation
    checks; cells and vectors would need a store typing."""
    match v:
        case VConst(c):
            return t.const_typ(c)
        case VClosure(x, ann, body):
            return Arrow(ann, typecheck_coerced({x: ann}, body))
        case VBox():
            return ANY
        case VPair(a, b):
            return Pair(value_type(a), value_type(b))
        case VRefProxy(_, read, _):
            _, target = coercion_type(read)
            return Ref(target)
        case VVecProxy(_, read, _):
            _, target = coercion_type(read)
            return Vector(target)
    raise IllTyped("value", f"no store-free type for {v!r}")


# The interpreter


def is_value_expr(e: t.Expr) -> bool:
    match e:
        case t.Lit() | t.Fun() | ValueE():
            return True
        case t.PairNew(a, b):
            return is_value_expr(a) and is_value_expr(b)
        case _:
            return False


def to_value(e: t.Expr) -> Value:
    match e:
        case t.Lit():
            return VConst(e.value)
        case t.Fun(x, ann, body):
            return VClosure(x, ann, body)
        case ValueE(v):
            return v
        case t.PairNew(a, b):
            return VPair(to_value(a), to_value(b))
    raise TypeError(f"not a value: {e!r}")


def from_value(v: Value) -> t.Expr:
    if isinstance(v, VClosure):
        return t.Fun(v.param, v.annotation, v.body)
    if isinstance(v, VConst):
        return t.Lit(v.value)
    return ValueE(v)


def substitute(e: t.Expr, name: str, replacement: t.Expr) -> t.Expr:
    """Capture-avoiding substitution.  Replacements are closed values or
    whole fix-expressions, so renaming is only needed on binder shadowing."""
    match e:
        case t.Var(x):
            return replacement if x == name else e
        case t.Lit() | ValueE() | t.Embedded():
            return e
        case t.Fun(x, ann, body):
            if x == name:
                return e
            return t.Fun(x, ann, substitute(body, name, replacement))
        case t.Fix(x, ann, body):
            if x == name:
                return e
            return t.Fix(x, ann, substitute(body, name, replacement))
        case t.Let(x, bound, body):
            bound2 = substitute(bound, name, replacement)
            if x == name:
                return t.Let(x, bound2, body)
            return t.Let(x, bound2, substitute(body, name, replacement))
        case t.CoerceApp(k, body):
            return t.CoerceApp(k, substitute(body, name, replacement))
        case _:
            kids = [substitute(c, name, replacement) for c in t.children(e)]
            return type(e)(*kids)


class _Halt(Exception):
    def __init__(self, outcome: Outcome):
        self.outcome = outcome


class Machine:
    """One evaluation owns one store; instances are independent."""

    def __init__(self) -> None:
        self.store: list = []
        self._fresh = itertools.count()

    def alloc(self, slot) -> int:
        self.store.append(slot)
        return len(self.store) - 1

    def fresh_name(self) -> str:
        return f"$x{next(self._fresh)}"

    def eval(self, e: t.Expr, step_limit: int = 1_000_000) -> Outcome:
        steps = 0
        while not is_value_expr(e):
            if steps >= step_limit:
                return Timeout(steps)
            try:
                e = self.step(e)
            except _Halt as halt:
                return halt.outcome
            steps += 1
        return Val(to_value(e))

    # One small step of a non-value expression.

    def step(self, e: t.Expr) -> t.Expr:
        match e:
            case t.Var(x):
                raise _Halt(StuckOther(f"free variable {x}"))
            case t.Embedded(inner, _):
                return inner
            case t.App(fn, arg):
                if not is_value_expr(fn):
                    return t.App(self.step(fn), arg)
                if not is_value_expr(arg):
                    return t.App(fn, self.step(arg))
                return self.apply(to_value(fn), to_value(arg))
            case t.CoerceApp(k, body):
                if not is_value_expr(body):
                    return t.CoerceApp(k, self.step(body))
                return self.apply_coercion(k, to_value(body))
            case t.Mul(a, b):
                if not is_value_expr(a):
                    return t.Mul(self.step(a), b)
                if not is_value_expr(b):
                    return t.Mul(a, self.step(b))
                return self.arith(to_value(a), to_value(b))
            case t.Add(a, b):
                if not is_value_expr(a):
                    return t.Add(self.step(a), b)
                if not is_value_expr(b):
                    return t.Add(a, self.step(b))
                return self.add(to_value(a), to_value(b))
            case t.If(c, th, el):
                if not is_value_expr(c):
                    return t.If(self.step(c), th, el)
                match to_value(c):
                    case VConst(flag) if type(flag) is bool:
                        return th if flag else el
                    case _:
                        raise _Halt(StuckOther("condition is not a boolean"))
            case t.Let(x, bound, body):
                if not is_value_expr(bound):
                    return t.Let(x, self.step(bound), body)
                return substitute(body, x, from_value(to_value(bound)))
            case t.Seq(a, b):
                if not is_value_expr(a):
                    return t.Seq(self.step(a), b)
                return b
            case t.Fix(f, _, body):
                return substitute(body, f, e)
            case t.RefNew(a):
                if not is_value_expr(a):
                    return t.RefNew(self.step(a))
                return ValueE(VCell(self.alloc(to_value(a))))
            case t.Deref(a):
                if not is_value_expr(a):
                    return t.Deref(self.step(a))
                return self.read_ref(to_value(a))
            case t.SetRef(a, b):
                if not is_value_expr(a):
                    return t.SetRef(self.step(a), b)
                if not is_value_expr(b):
                    return t.SetRef(a, self.step(b))
                return self.write_ref(to_value(a), to_value(b))
            case t.First(a):
                if not is_value_expr(a):
                    return t.First(self.step(a))
                match to_value(a):
                    case VPair(l, _):
                        return from_value(l)
                    case _:
                        raise _Halt(StuckOther("projection from a non-pair"))
            case t.Second(a):
                if not is_value_expr(a):
                    return t.Second(self.step(a))
                match to_value(a):
                    case VPair(_, r):
                        return from_value(r)
                    case _:
                        raise _Halt(StuckOther("projection from a non-pair"))
            case t.VecNew(elem, size):
                if not is_value_expr(elem):
                    return t.VecNew(self.step(elem), size)
                if not is_value_expr(size):
                    return t.VecNew(elem, self.step(size))
                n = to_value(size)
                if not isinstance(n, VConst) or not isinstance(n.value, int) or isinstance(n.value, bool):
                    raise _Halt(StuckOther("vector length is not an integer"))
                if n.value < 0:
                    raise _Halt(StuckOther("negative vector length"))
                return ValueE(VVec(self.alloc([to_value(elem)] * n.value)))
            case t.VecGet(v, i):
                if not is_value_expr(v):
                    return t.VecGet(self.step(v), i)
                if not is_value_expr(i):
                    return t.VecGet(v, self.step(i))
                return self.vec_get(to_value(v), to_value(i))
            case t.VecSet(v, x, i):
                if not is_value_expr(v):
                    return t.VecSet(self.step(v), x, i)
                if not is_value_expr(x):
                    return t.VecSet(v, self.step(x), i)
                if not is_value_expr(i):
                    return t.VecSet(v, x, self.step(i))
                return self.vec_set(to_value(v), to_value(x), to_value(i))
            case t.VecLen(v):
                if not is_value_expr(v):
                    return t.VecLen(self.step(v))
                return self.vec_len(to_value(v))
        raise _Halt(StuckOther(f"no step for {type(e).__name__}"))

    # Active expressions

    def apply(self, fn: Value, arg: Value) -> t.Expr:
        if isinstance(fn, VClosure):
            return substitute(fn.body, fn.param, from_value(arg))
        raise _Halt(StuckOther("application of a non-function"))

    def apply_coercion(self, k, v: Value) -> t.Expr:
        match k:
            case t.SuspendedCoercion():
                raise _Halt(StuckOther("suspended coercion at runtime"))
            case t.CId():
                return from_value(v)
            case t.CTag(g):
                if isinstance(v, VBox):
                    raise _Halt(StuckCoercion(k, g, v.ground))
                return ValueE(VBox(g, v))
            case t.CUntag(g):
                if isinstance(v, VBox):
                    if v.ground == g:
                        return from_value(v.payload)
                    raise _Halt(StuckCoercion(k, g, v.ground))
                raise _Halt(StuckCoercion(k, g, ground_of_value(v)))
            case t.CWrap(k1, k2):
                # The bound variable is annotated with the wrap's input type
                # so stepping preserves the coerced-language typing.
                try:
                    dom = coercion_type(k1)[0]
                except IllTypedCoercion:
                    dom = ANY
                x = self.fresh_name()
                body = t.CoerceApp(k2, t.App(from_value(v), t.CoerceApp(k1, t.Var(x))))
                return t.Fun(x, dom, body)
            case t.CSeq(k1, k2):
                return t.CoerceApp(k2, t.CoerceApp(k1, from_value(v)))
            case t.CRefWrap(kr, kw):
                return ValueE(VRefProxy(v, kr, kw))
            case t.CVecWrap(kr, kw):
                return ValueE(VVecProxy(v, kr, kw))
            case t.CPairWrap(k1, k2):
                if not isinstance(v, VPair):
                    raise _Halt(StuckOther("pair coercion of a non-pair"))
                return t.PairNew(
                    t.CoerceApp(k1, from_value(v.left)),
                    t.CoerceApp(k2, from_value(v.right)),
                )
        raise _Halt(StuckOther(f"unknown coercion {k!r}"))

    def arith(self, a: Value, b: Value) -> t.Expr:
        if (
            isinstance(a, VConst)
            and isinstance(b, VConst)
            and type(a.value) is int
            and type(b.value) is int
        ):
            return t.Lit(a.value * b.value)
        raise _Halt(StuckOther("multiplication of non-integers"))

    def add(self, a: Value, b: Value) -> t.Expr:
        if isinstance(a, VConst) and isinstance(b, VConst):
            if type(a.value) is int and type(b.value) is int:
                return t.Lit(a.value + b.value)
            if type(a.value) is str and type(b.value) is str:
                return t.Lit(a.value + b.value)
        if isinstance(a, VBox) and isinstance(b, VBox):
            # Overloaded addition on unknown-typed operands: dispatch on the
            # runtime tags; a mismatch is a failed untagging.
            if a.ground == b.ground and a.ground in (GroundTy("int"), GroundTy("str")):
                inner = self.add(a.payload, b.payload)
                return t.CoerceApp(t.CTag(a.ground), inner)
            expected = a.ground if a.ground in (GroundTy("int"), GroundTy("str")) else GroundTy("int")
            raise _Halt(StuckCoercion(t.CUntag(expected), expected, b.ground))
        raise _Halt(StuckOther("addition of incompatible values"))

    def read_ref(self, v: Value) -> t.Expr:
        match v:
            case VCell(a):
                return from_value(self.store[a])
            case VRefProxy(inner, read, _):
                return t.CoerceApp(read, t.Deref(ValueE(inner)))
            case _:
                raise _Halt(StuckOther("dereference of a non-reference"))

    def write_ref(self, target: Value, value: Value) -> t.Expr:
        match target:
            case VCell(a):
                self.store[a] = value
                return ValueE(UNIT_VALUE)
            case VRefProxy(inner, _, write):
                return t.SetRef(ValueE(inner), t.CoerceApp(write, from_value(value)))
            case _:
                raise _Halt(StuckOther("assignment to a non-reference"))

    def vec_get(self, v: Value, i: Value) -> t.Expr:
        match v:
            case VVec(a):
                idx = self._index(i, len(self.store[a]))
                return from_value(self.store[a][idx])
            case VVecProxy(inner, read, _):
                return t.CoerceApp(read, t.VecGet(ValueE(inner), from_value(i)))
            case _:
                raise _Halt(StuckOther("read from a non-vector"))

    def vec_set(self, v: Value, x: Value, i: Value) -> t.Expr:
        match v:
            case VVec(a):
                idx = self._index(i, len(self.store[a]))
                self.store[a][idx] = x
                return ValueE(v)
            case VVecProxy(inner, _, write):
                return t.Seq(
                    t.VecSet(ValueE(inner), t.CoerceApp(write, from_value(x)), from_value(i)),
                    ValueE(v),
                )
            case _:
                raise _Halt(StuckOther("write to a non-vector"))

    def vec_len(self, v: Value) -> t.Expr:
        match v:
            case VVec(a):
                return t.Lit(len(self.store[a]))
            case VVecProxy(inner, _, _):
                return t.VecLen(ValueE(inner))
            case _:
                raise _Halt(StuckOther("length of a non-vector"))

    def _index(self, i: Value, length: int) -> int:
        if not isinstance(i, VConst) or type(i.value) is not int:
            raise _Halt(StuckOther("vector index is not an integer"))
        if not 0 <= i.value < length:
            raise _Halt(StuckOther("vector index out of range"))
        return i.value

    # Observations

    def observe(self, v: Value, _seen: frozenset[int] = frozenset()) -> Observation:
        match v:
            case VConst(c):
                return ObsBase(c)
            case VBox(_, payload):
                return self.observe(payload, _seen)
            case VClosure():
                return ObsFn()
            case VPair(a, b):
                return ObsStruct("pair", (self.observe(a, _seen), self.observe(b, _seen)))
            case VRefProxy(inner, _, _) | VVecProxy(inner, _, _):
                return self.observe(inner, _seen)
            case VCell(a):
                if a in _seen:
                    return ObsStruct("cycle", ())
                return ObsStruct("ref", (self.observe(self.store[a], _seen | {a}),))
            case VVec(a):
                if a in _seen:
                    return ObsStruct("cycle", ())
                seen = _seen | {a}
                return ObsStruct(
                    "vector", tuple(self.observe(x, seen) for x in self.store[a])
                )
        raise TypeError(f"cannot observe {v!r}")


def eval_expr(e: t.Expr, step_limit: int = 1_000_000) -> Outcome:
    """Evaluate a closed coerced expression in a fresh machine."""
    return Machine().eval(e, step_limit)


def run_surface(e: t.Expr, step_limit: int = 1_000_000) -> tuple[Outcome, Optional[Observation]]:
    """Insert coercions into a surface program, run it, and observe."""
    machine = Machine()
    coerced, _ = insert_coercions({}, e)
    outcome = machine.eval(coerced, step_limit)
    obs = machine.observe(outcome.value) if isinstance(outcome, Val) else None
    return outcome, obs
