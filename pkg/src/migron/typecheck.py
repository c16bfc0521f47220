"""Typechecker for surface programs.

Applications have two rules: an unknown-typed function may be applied to
anything (the result is unknown), and an arrow-typed function requires an
argument consistent with its input type.  Arithmetic requires operands
consistent with int; the overloaded ``+`` also accepts strings.  The
remaining forms extend these rules congruently.
"""

from __future__ import annotations

from typing import Mapping

from . import terms as t
from .types import (
    ANY,
    BOOL,
    INT,
    STR,
    UNIT,
    Arrow,
    Pair,
    Ref,
    Typ,
    Unknown,
    Vector,
    consistent,
    join,
)

TypeEnv = Mapping[str, Typ]


class IllTyped(Exception):
    def __init__(self, location: str, reason: str):
        self.location = location
        self.reason = reason
        super().__init__(f"{location}: {reason}")


def typecheck_gtlc(env: TypeEnv, e: t.Expr) -> Typ:
    match e:
        case t.Var(x):
            if x not in env:
                raise IllTyped(x, "unbound variable")
            return env[x]
        case t.Lit():
            return t.const_typ(e.value)
        case t.Fun(x, ann, body):
            return Arrow(ann, typecheck_gtlc({**env, x: ann}, body))
        case t.App(fn, arg):
            tf = typecheck_gtlc(env, fn)
            ta = typecheck_gtlc(env, arg)
            if isinstance(tf, Unknown):
                return ANY
            if isinstance(tf, Arrow):
                if not consistent(ta, tf.input):
                    raise IllTyped("application", f"argument type not consistent with {tf.input}")
                return tf.output
            raise IllTyped("application", "function position is neither unknown nor an arrow")
        case t.Mul(a, b):
            ta, tb = typecheck_gtlc(env, a), typecheck_gtlc(env, b)
            if not consistent(ta, INT) or not consistent(tb, INT):
                raise IllTyped("*", "operands must be consistent with int")
            return INT
        case t.Add(a, b):
            return _add_typ(typecheck_gtlc(env, a), typecheck_gtlc(env, b))
        case t.If(c, a, b):
            tc = typecheck_gtlc(env, c)
            if not consistent(tc, BOOL):
                raise IllTyped("if", "condition must be consistent with bool")
            ta, tb = typecheck_gtlc(env, a), typecheck_gtlc(env, b)
            j = join(ta, tb)
            if j is None:
                raise IllTyped("if", "branch types are inconsistent")
            return j
        case t.Let(x, bound, body):
            return typecheck_gtlc({**env, x: typecheck_gtlc(env, bound)}, body)
        case t.Seq(a, b):
            typecheck_gtlc(env, a)
            return typecheck_gtlc(env, b)
        case t.Fix(f, ann, body):
            tb = typecheck_gtlc({**env, f: ann}, body)
            if not consistent(tb, ann):
                raise IllTyped("fix", "body type not consistent with annotation")
            return ann
        case t.RefNew(a):
            return Ref(typecheck_gtlc(env, a))
        case t.Deref(a):
            ta = typecheck_gtlc(env, a)
            if isinstance(ta, Ref):
                return ta.content
            if isinstance(ta, Unknown):
                return ANY
            raise IllTyped("!", "dereference of a non-reference")
        case t.SetRef(a, b):
            ta = typecheck_gtlc(env, a)
            tb = typecheck_gtlc(env, b)
            if isinstance(ta, Ref):
                if not consistent(tb, ta.content):
                    raise IllTyped(":=", "written value inconsistent with cell type")
                return UNIT
            if isinstance(ta, Unknown):
                return UNIT
            raise IllTyped(":=", "assignment to a non-reference")
        case t.PairNew(a, b):
            return Pair(typecheck_gtlc(env, a), typecheck_gtlc(env, b))
        case t.First(a):
            ta = typecheck_gtlc(env, a)
            if isinstance(ta, Pair):
                return ta.left
            if isinstance(ta, Unknown):
                return ANY
            raise IllTyped("fst", "projection from a non-pair")
        case t.Second(a):
            ta = typecheck_gtlc(env, a)
            if isinstance(ta, Pair):
                return ta.right
            if isinstance(ta, Unknown):
                return ANY
            raise IllTyped("snd", "projection from a non-pair")
        case t.VecNew(elem, size):
            te = typecheck_gtlc(env, elem)
            ts = typecheck_gtlc(env, size)
            if not consistent(ts, INT):
                raise IllTyped("vec", "length must be consistent with int")
            return Vector(te)
        case t.VecGet(v, i):
            tv = typecheck_gtlc(env, v)
            ti = typecheck_gtlc(env, i)
            if not consistent(ti, INT):
                raise IllTyped("vecget", "index must be consistent with int")
            if isinstance(tv, Vector):
                return tv.elem
            if isinstance(tv, Unknown):
                return ANY
            raise IllTyped("vecget", "read from a non-vector")
        case t.VecSet(v, x, i):
            tv = typecheck_gtlc(env, v)
            tx = typecheck_gtlc(env, x)
            ti = typecheck_gtlc(env, i)
            if not consistent(ti, INT):
                raise IllTyped("vecset", "index must be consistent with int")
            if isinstance(tv, Vector):
                if not consistent(tx, tv.elem):
                    raise IllTyped("vecset", "written value inconsistent with element type")
                return tv
            if isinstance(tv, Unknown):
                return Vector(ANY)
            raise IllTyped("vecset", "write to a non-vector")
        case t.VecLen(v):
            tv = typecheck_gtlc(env, v)
            if isinstance(tv, (Vector, Unknown)):
                return INT
            raise IllTyped("veclen", "length of a non-vector")
        case t.Embedded(_, typ):
            return typ
    raise IllTyped(type(e).__name__, "not a surface expression")


def _add_typ(ta: Typ, tb: Typ) -> Typ:
    if ta == STR or tb == STR:
        if consistent(ta, STR) and consistent(tb, STR):
            return STR
        raise IllTyped("+", "operands must both be consistent with str")
    if ta == INT or tb == INT:
        if consistent(ta, INT) and consistent(tb, INT):
            return INT
        raise IllTyped("+", "operands must both be consistent with int")
    if isinstance(ta, Unknown) and isinstance(tb, Unknown):
        return ANY
    raise IllTyped("+", "operands must be numbers or strings")
