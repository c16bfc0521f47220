"""The coerce metafunction and the typing of coercions.

``coerce(S, T)`` builds the runtime cast taking S to T.  The equations are
ordered, first match wins: identity, then the ground tags and untags, then
structural proxies, then casts through the unknown type.  References,
pairs, and vectors mirror the function cases through their own ground
shapes.  The final catch-all routes inconsistent types through unknown,
producing a coercion that is well typed but doomed to fail if executed.
"""

from __future__ import annotations

from . import terms as t
from .types import (
    ANY,
    GROUND_FUN,
    GROUND_PAIR,
    GROUND_REF,
    GROUND_VEC,
    Arrow,
    Base,
    GroundTy,
    Pair,
    Ref,
    Typ,
    Unknown,
    Vector,
    typ_of_ground,
)


def coerce(s: Typ, target: Typ) -> t.Coercion:
    if s == target:
        return t.CId(s)
    match (s, target):
        case (Unknown(), Base(name)):
            return t.CUntag(GroundTy(name))
        case (Base(name), Unknown()):
            return t.CTag(GroundTy(name))
        case (Unknown(), Arrow(Unknown(), Unknown())):
            return t.CUntag(GROUND_FUN)
        case (Arrow(Unknown(), Unknown()), Unknown()):
            return t.CTag(GROUND_FUN)
        case (Arrow(s1, s2), Arrow(t1, t2)):
            return t.CWrap(coerce(t1, s1), coerce(s2, t2))
        case (Unknown(), Arrow(t1, t2)):
            return t.CSeq(
                t.CUntag(GROUND_FUN), t.CWrap(coerce(t1, ANY), coerce(ANY, t2))
            )
        case (Arrow(t1, t2), Unknown()):
            return t.CSeq(
                t.CWrap(coerce(ANY, t1), coerce(t2, ANY)), t.CTag(GROUND_FUN)
            )
        case (Unknown(), Ref(Unknown())):
            return t.CUntag(GROUND_REF)
        case (Ref(Unknown()), Unknown()):
            return t.CTag(GROUND_REF)
        case (Ref(a), Ref(b)):
            return t.CRefWrap(coerce(a, b), coerce(b, a))
        case (Unknown(), Ref(a)):
            return t.CSeq(
                t.CUntag(GROUND_REF), t.CRefWrap(coerce(ANY, a), coerce(a, ANY))
            )
        case (Ref(a), Unknown()):
            return t.CSeq(
                t.CRefWrap(coerce(a, ANY), coerce(ANY, a)), t.CTag(GROUND_REF)
            )
        case (Unknown(), Pair(Unknown(), Unknown())):
            return t.CUntag(GROUND_PAIR)
        case (Pair(Unknown(), Unknown()), Unknown()):
            return t.CTag(GROUND_PAIR)
        case (Pair(a1, a2), Pair(b1, b2)):
            return t.CPairWrap(coerce(a1, b1), coerce(a2, b2))
        case (Unknown(), Pair(b1, b2)):
            return t.CSeq(
                t.CUntag(GROUND_PAIR), t.CPairWrap(coerce(ANY, b1), coerce(ANY, b2))
            )
        case (Pair(a1, a2), Unknown()):
            return t.CSeq(
                t.CPairWrap(coerce(a1, ANY), coerce(a2, ANY)), t.CTag(GROUND_PAIR)
            )
        case (Unknown(), Vector(Unknown())):
            return t.CUntag(GROUND_VEC)
        case (Vector(Unknown()), Unknown()):
            return t.CTag(GROUND_VEC)
        case (Vector(a), Vector(b)):
            return t.CVecWrap(coerce(a, b), coerce(b, a))
        case (Unknown(), Vector(a)):
            return t.CSeq(
                t.CUntag(GROUND_VEC), t.CVecWrap(coerce(ANY, a), coerce(a, ANY))
            )
        case (Vector(a), Unknown()):
            return t.CSeq(
                t.CVecWrap(coerce(a, ANY), coerce(ANY, a)), t.CTag(GROUND_VEC)
            )
        case _:
            return t.CSeq(coerce(s, ANY), coerce(ANY, target))


class IllTypedCoercion(Exception):
    pass


def coercion_type(k: t.Coercion) -> tuple[Typ, Typ]:
    """The unique (source, target) typing of a coercion; raises
    IllTypedCoercion if the components do not fit together."""
    match k:
        case t.CId(ty):
            return ty, ty
        case t.CTag(g):
            return typ_of_ground(g), ANY
        case t.CUntag(g):
            return ANY, typ_of_ground(g)
        case t.CWrap(k1, k2):
            t1, s1 = coercion_type(k1)
            s2, t2 = coercion_type(k2)
            return Arrow(s1, s2), Arrow(t1, t2)
        case t.CSeq(k1, k2):
            s1, t1 = coercion_type(k1)
            s2, t2 = coercion_type(k2)
            if t1 != s2:
                raise IllTypedCoercion(f"sequence mismatch: {t1} vs {s2}")
            return s1, t2
        case t.CRefWrap(kr, kw):
            s, target = coercion_type(kr)
            ws, wt = coercion_type(kw)
            if (ws, wt) != (target, s):
                raise IllTypedCoercion("reference proxy coercions do not invert")
            return Ref(s), Ref(target)
        case t.CVecWrap(kr, kw):
            s, target = coercion_type(kr)
            ws, wt = coercion_type(kw)
            if (ws, wt) != (target, s):
                raise IllTypedCoercion("vector proxy coercions do not invert")
            return Vector(s), Vector(target)
        case t.CPairWrap(k1, k2):
            s1, t1 = coercion_type(k1)
            s2, t2 = coercion_type(k2)
            return Pair(s1, s2), Pair(t1, t2)
    raise IllTypedCoercion(f"not a coercion: {k!r}")
