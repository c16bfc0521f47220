"""Pretty-printer, the inverse of the parser on surface programs."""

from __future__ import annotations

from enum import Enum

from . import terms as t
from .types import Arrow, Base, Metavar, Pair, Ref, Typ, Unknown, Vector


class Style(Enum):
    SURFACE = "surface"
    WITH_COERCIONS = "coercions"


class UnresolvedMetavar(Exception):
    pass


def print_typ(ty: Typ) -> str:
    return _typ(ty, 0)


def _typ(ty: Typ, prec: int) -> str:
    match ty:
        case Unknown():
            return "any"
        case Base(name):
            return name
        case Metavar(i):
            return f"'a{i}"
        case Arrow(a, b):
            s = f"{_typ(a, 1)} -> {_typ(b, 0)}"
            return f"({s})" if prec >= 1 else s
        case Ref(c):
            s = f"ref {_typ(c, 2)}"
            return f"({s})" if prec >= 2 else s
        case Vector(c):
            s = f"vec {_typ(c, 2)}"
            return f"({s})" if prec >= 2 else s
        case Pair(a, b):
            return f"({_typ(a, 0)}, {_typ(b, 0)})"
    raise TypeError(f"cannot print type {ty!r}")


def print_coercion(k) -> str:
    match k:
        case t.CId():
            return "id"
        case t.CTag(g):
            return f"{g.kind}!"
        case t.CUntag(g):
            return f"{g.kind}?"
        case t.CWrap(k1, k2):
            return f"wrap({print_coercion(k1)}, {print_coercion(k2)})"
        case t.CSeq(k1, k2):
            return f"{print_coercion(k1)}; {print_coercion(k2)}"
        case t.CRefWrap(kr, kw):
            return f"refwrap({print_coercion(kr)}, {print_coercion(kw)})"
        case t.CVecWrap(kr, kw):
            return f"vecwrap({print_coercion(kr)}, {print_coercion(kw)})"
        case t.CPairWrap(k1, k2):
            return f"pairwrap({print_coercion(k1)}, {print_coercion(k2)})"
        case t.SuspendedCoercion(s, tt):
            return f"coerce({_typ(s, 0)}, {_typ(tt, 0)})"
    raise TypeError(f"cannot print coercion {k!r}")


def print_expr(e: t.Expr, style: Style = Style.SURFACE) -> str:
    """Deterministic text for an expression.

    SURFACE style rejects coercion nodes and unresolved metavariables;
    WITH_COERCIONS renders ``[k] e`` nodes.
    """
    if style is Style.SURFACE:
        _check_surface(e)
    return _expr(e, 0)


def _check_surface(e: t.Expr) -> None:
    if isinstance(e, (t.CoerceApp, t.Embedded)):
        raise ValueError("coercion nodes cannot be printed in surface style")
    if isinstance(e, (t.Fun, t.Fix)):
        for i in sorted(_typ_metavars(e.annotation)):
            raise UnresolvedMetavar(f"unresolved metavariable 'a{i}")
    for c in t.children(e):
        _check_surface(c)


def _typ_metavars(ty: Typ) -> set[int]:
    from .types import metavars_of_typ

    return metavars_of_typ(ty)


# Precedence levels: 0 seq/tail forms, 1 assignment and coercion brackets,
# 2 addition, 3 multiplication, 4 application, 5 prefix, 6 atoms.


def _paren(s: str, mine: int, context: int) -> str:
    return f"({s})" if mine < context else s


def _binder(name: str, ann: Typ) -> str:
    return f"({name}:{_typ(ann, 0)})"


def _expr(e: t.Expr, prec: int) -> str:
    match e:
        case t.Var(x):
            return x
        case t.Lit():
            v = e.value
            if v is None:
                return "()"
            if isinstance(v, bool):
                return "true" if v else "false"
            if isinstance(v, str):
                escaped = v.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
                return f'"{escaped}"'
            return str(v)
        case t.Fun(x, ann, b):
            return _paren(f"fun {_binder(x, ann)}. {_expr(b, 0)}", 0, prec)
        case t.Fix(x, ann, b):
            return _paren(f"fix {_binder(x, ann)}. {_expr(b, 0)}", 0, prec)
        case t.Let(x, bound, body):
            return _paren(f"let {x} = {_expr(bound, 0)} in {_expr(body, 0)}", 0, prec)
        case t.If(c, a, b):
            return _paren(f"if {_expr(c, 0)} then {_expr(a, 0)} else {_expr(b, 0)}", 0, prec)
        case t.Seq(a, b):
            return _paren(f"{_expr(a, 1)}; {_expr(b, 0)}", 0, prec)
        case t.SetRef(a, b):
            return _paren(f"{_expr(a, 2)} := {_expr(b, 1)}", 1, prec)
        case t.Add(a, b):
            return _paren(f"{_expr(a, 2)} + {_expr(b, 3)}", 2, prec)
        case t.Mul(a, b):
            return _paren(f"{_expr(a, 3)} * {_expr(b, 4)}", 3, prec)
        case t.App(f, a):
            return _paren(f"{_expr(f, 4)} {_expr(a, 5)}", 4, prec)
        case t.RefNew(a):
            return _paren(f"ref {_expr(a, 5)}", 5, prec)
        case t.Deref(a):
            return _paren(f"!{_expr(a, 5)}", 5, prec)
        case t.First(a):
            return f"fst({_expr(a, 0)})"
        case t.Second(a):
            return f"snd({_expr(a, 0)})"
        case t.VecNew(a, b):
            return f"vec({_expr(a, 0)}, {_expr(b, 0)})"
        case t.VecGet(a, b):
            return f"vecget({_expr(a, 0)}, {_expr(b, 0)})"
        case t.VecSet(a, b, c):
            return f"vecset({_expr(a, 0)}, {_expr(b, 0)}, {_expr(c, 0)})"
        case t.VecLen(a):
            return f"veclen({_expr(a, 0)})"
        case t.PairNew(a, b):
            return f"({_expr(a, 0)}, {_expr(b, 0)})"
        case t.CoerceApp(k, b):
            return _paren(f"[{print_coercion(k)}] {_expr(b, 6)}", 1, prec)
        case t.Embedded(inner, _):
            return _expr(inner, prec)
    # Runtime-internal nodes (values re-embedded during evaluation).
    if hasattr(e, "value"):
        return f"<{e.value!r}>"
    raise TypeError(f"cannot print {e!r}")
