"""Syntax-directed constraint generation.

Rewrites a metavariable-annotated program into one carrying suspended
coercions, together with a boolean constraint.  Every rule that wraps an
expression in a coercion introduces a weight variable that is true when
the coercion can be the identity; soft constraints on the weights steer
the solver towards solutions with fewer non-trivial coercions.

Generation never rejects a program on type grounds: every expression may
be coerced to the unknown type, at the cost of a weight.  The only error
is an unbound variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from . import terms as t
from .constraints import (
    TRUE,
    And,
    Constraint,
    IsGround,
    Not,
    Or,
    TypEq,
    Weight,
    conj,
    disj,
    metavars_of,
)
from .types import ANY, BOOL, INT, STR, UNIT, Arrow, Metavar, Pair, Ref, Typ, Unknown, Vector


class UnboundVariable(Exception):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound variable: {name}")


class FreshSource:
    """Per-run counters for metavariable and weight ids, making constraint
    emission deterministic and solver input byte-stable."""

    def __init__(self) -> None:
        self._next_metavar = 0
        self._next_weight = 0

    def metavar(self) -> Metavar:
        m = Metavar(self._next_metavar)
        self._next_metavar += 1
        return m

    def weight(self) -> int:
        w = self._next_weight
        self._next_weight += 1
        return w


@dataclass
class CgenOutput:
    rewritten: t.Expr
    typ: Typ
    constraint: Constraint
    weights: list[int]

    @property
    def metavars(self) -> list[int]:
        from .types import metavars_of_typ

        return sorted(metavars_of(self.constraint) | metavars_of_typ(self.typ))


def introduce_metavars(e: t.Expr, fresh: FreshSource | None = None) -> t.Expr:
    """Replace every unknown type in an annotation with a fresh metavariable."""
    fresh = fresh or FreshSource()

    def freshen(ty: Typ) -> Typ:
        match ty:
            case Unknown():
                return fresh.metavar()
            case Arrow(a, b):
                return Arrow(freshen(a), freshen(b))
            case Ref(c):
                return Ref(freshen(c))
            case Pair(a, b):
                return Pair(freshen(a), freshen(b))
            case Vector(a):
                return Vector(freshen(a))
            case _:
                return ty

    return t.map_annotations(e, freshen)


def soft_constraints(weights: list[int]) -> list[tuple[Weight, int]]:
    """One unit-weight soft assertion per weight variable."""
    return [(Weight(w), 1) for w in weights]


def cgen(env: Mapping[str, Typ], e: t.Expr, fresh: FreshSource | None = None) -> CgenOutput:
    state = _Cgen(fresh or FreshSource())
    rewritten, typ, constraint = state.gen(dict(env), e)
    return CgenOutput(rewritten, typ, constraint, state.weights)


def _coerce_to(expr: t.Expr, source: Typ, target: Typ) -> t.Expr:
    return t.CoerceApp(t.SuspendedCoercion(source, target), expr)


class _Cgen:
    def __init__(self, fresh: FreshSource):
        self.fresh = fresh
        self.weights: list[int] = []

    def weight(self) -> tuple[int, Weight, Not]:
        w = self.fresh.weight()
        self.weights.append(w)
        return w, Weight(w), Not(Weight(w))

    def gen(self, env: dict[str, Typ], e: t.Expr) -> tuple[t.Expr, Typ, Constraint]:
        match e:
            case t.Var(x):
                if x not in env:
                    raise UnboundVariable(x)
                a = self.fresh.metavar()
                _, w, nw = self.weight()
                phi = Or(
                    And(TypEq(a, env[x]), w),
                    And(TypEq(a, ANY), nw),
                )
                return _coerce_to(e, env[x], a), a, phi

            case t.Lit():
                a = self.fresh.metavar()
                _, w, nw = self.weight()
                ty = t.const_typ(e.value)
                phi = Or(And(TypEq(a, ty), w), And(TypEq(a, ANY), nw))
                return _coerce_to(e, ty, a), a, phi

            case t.Fun(x, ann, body):
                body2, tb, phi1 = self.gen({**env, x: ann}, body)
                b = self.fresh.metavar()
                _, w, nw = self.weight()
                fn_ty = Arrow(ann, tb)
                phi2 = Or(
                    And(TypEq(b, fn_ty), w),
                    conj(TypEq(b, ANY), IsGround(fn_ty), nw),
                )
                return _coerce_to(t.Fun(x, ann, body2), fn_ty, b), b, conj(phi1, phi2)

            case t.App(fn, arg):
                e1, t1, phi1 = self.gen(env, fn)
                e2, t2, phi2 = self.gen(env, arg)
                a, b, g = self.fresh.metavar(), self.fresh.metavar(), self.fresh.metavar()
                _, w1, nw1 = self.weight()
                _, w2, nw2 = self.weight()
                phi3 = Or(
                    And(TypEq(t1, Arrow(a, b)), w1),
                    conj(TypEq(t1, ANY), TypEq(a, ANY), TypEq(b, ANY), nw1),
                )
                phi4 = TypEq(t2, a)
                phi5 = Or(And(TypEq(b, g), w2), And(TypEq(g, ANY), nw2))
                rewritten = _coerce_to(
                    t.App(_coerce_to(e1, t1, Arrow(a, b)), e2), b, g
                )
                return rewritten, g, conj(phi1, phi2, phi3, phi4, phi5)

            case t.Mul(l, r):
                e1, t1, phi1 = self.gen(env, l)
                e2, t2, phi2 = self.gen(env, r)
                _, w1, nw1 = self.weight()
                _, w2, nw2 = self.weight()
                _, w3, nw3 = self.weight()
                a = self.fresh.metavar()
                phi3 = Or(And(TypEq(t1, INT), w1), And(TypEq(t1, ANY), nw1))
                phi4 = Or(And(TypEq(t2, INT), w2), And(TypEq(t2, ANY), nw2))
                phi5 = Or(And(TypEq(a, INT), w3), And(TypEq(a, ANY), nw3))
                rewritten = _coerce_to(
                    t.Mul(_coerce_to(e1, t1, INT), _coerce_to(e2, t2, INT)), INT, a
                )
                return rewritten, a, conj(phi1, phi2, phi3, phi4, phi5)

            case t.Add(l, r):
                # The static branch requires at least one operand to pin the
                # operator's type; the other may arrive at unknown and be
                # untagged, exactly as the overloaded runtime operator would.
                e1, t1, phi1 = self.gen(env, l)
                e2, t2, phi2 = self.gen(env, r)
                a = self.fresh.metavar()
                _, w, nw = self.weight()
                phi3 = Or(
                    conj(
                        Or(TypEq(a, INT), TypEq(a, STR)),
                        Or(TypEq(t1, a), TypEq(t1, ANY)),
                        Or(TypEq(t2, a), TypEq(t2, ANY)),
                        Or(TypEq(t1, a), TypEq(t2, a)),
                        w,
                    ),
                    conj(TypEq(a, ANY), IsGround(t1), IsGround(t2), nw),
                )
                rewritten = t.Add(_coerce_to(e1, t1, a), _coerce_to(e2, t2, a))
                return rewritten, a, conj(phi1, phi2, phi3)

            case t.If(c, th, el):
                e1, t1, phi1 = self.gen(env, c)
                e2, t2, phi2 = self.gen(env, th)
                e3, t3, phi3 = self.gen(env, el)
                _, w1, nw1 = self.weight()
                _, w2, nw2 = self.weight()
                a = self.fresh.metavar()
                phi4 = And(
                    Or(And(TypEq(t1, BOOL), w1), And(TypEq(t1, ANY), nw1)),
                    Or(
                        conj(TypEq(t2, t3), TypEq(t3, a), w2),
                        conj(TypEq(a, ANY), IsGround(t2), IsGround(t3), nw2),
                    ),
                )
                rewritten = t.If(
                    _coerce_to(e1, t1, BOOL),
                    _coerce_to(e2, t2, a),
                    _coerce_to(e3, t3, a),
                )
                return rewritten, a, conj(phi1, phi2, phi3, phi4)

            case t.Let(x, bound, body):
                e1, t1, phi1 = self.gen(env, bound)
                e2, t2, phi2 = self.gen({**env, x: t1}, body)
                return t.Let(x, e1, e2), t2, conj(phi1, phi2)

            case t.Seq(a_, b_):
                e1, _, phi1 = self.gen(env, a_)
                e2, t2, phi2 = self.gen(env, b_)
                return t.Seq(e1, e2), t2, conj(phi1, phi2)

            case t.Fix(f, ann, body):
                e1, t1, phi1 = self.gen({**env, f: ann}, body)
                _, w, nw = self.weight()
                phi2 = Or(
                    And(TypEq(t1, ann), w),
                    conj(TypEq(t1, ANY), TypEq(ann, Arrow(ANY, ANY)), nw),
                )
                return t.Fix(f, ann, _coerce_to(e1, t1, ann)), ann, conj(phi1, phi2)

            case t.RefNew(init):
                e1, t1, phi1 = self.gen(env, init)
                a = self.fresh.metavar()
                _, w, nw = self.weight()
                phi2 = Or(
                    And(TypEq(a, Ref(t1)), w),
                    conj(TypEq(a, ANY), IsGround(Ref(t1)), nw),
                )
                return _coerce_to(t.RefNew(e1), Ref(t1), a), a, conj(phi1, phi2)

            case t.Deref(r):
                e1, t1, phi1 = self.gen(env, r)
                a = self.fresh.metavar()
                _, w, nw = self.weight()
                phi2 = Or(
                    And(TypEq(t1, Ref(a)), w),
                    conj(TypEq(t1, ANY), TypEq(a, ANY), nw),
                )
                return t.Deref(_coerce_to(e1, t1, Ref(a))), a, conj(phi1, phi2)

            case t.SetRef(target, value):
                e1, t1, phi1 = self.gen(env, target)
                e2, t2, phi2 = self.gen(env, value)
                a = self.fresh.metavar()
                _, w, nw = self.weight()
                phi3 = Or(
                    conj(TypEq(t1, Ref(a)), TypEq(t2, a), w),
                    conj(TypEq(a, ANY), IsGround(t1), IsGround(t2), nw),
                )
                rewritten = t.SetRef(_coerce_to(e1, t1, Ref(a)), _coerce_to(e2, t2, a))
                return rewritten, UNIT, conj(phi1, phi2, phi3)

            case t.PairNew(l, r):
                e1, t1, phi1 = self.gen(env, l)
                e2, t2, phi2 = self.gen(env, r)
                a = self.fresh.metavar()
                _, w, nw = self.weight()
                pair_ty = Pair(t1, t2)
                phi3 = Or(
                    And(TypEq(a, pair_ty), w),
                    conj(TypEq(a, ANY), IsGround(pair_ty), nw),
                )
                return _coerce_to(t.PairNew(e1, e2), pair_ty, a), a, conj(phi1, phi2, phi3)

            case t.First(p):
                e1, t1, phi1 = self.gen(env, p)
                a, b = self.fresh.metavar(), self.fresh.metavar()
                _, w, nw = self.weight()
                phi2 = Or(
                    And(TypEq(t1, Pair(a, b)), w),
                    conj(TypEq(t1, ANY), TypEq(a, ANY), nw),
                )
                return t.First(_coerce_to(e1, t1, Pair(a, b))), a, conj(phi1, phi2)

            case t.Second(p):
                e1, t1, phi1 = self.gen(env, p)
                a, b = self.fresh.metavar(), self.fresh.metavar()
                _, w, nw = self.weight()
                phi2 = Or(
                    And(TypEq(t1, Pair(a, b)), w),
                    conj(TypEq(t1, ANY), TypEq(b, ANY), nw),
                )
                return t.Second(_coerce_to(e1, t1, Pair(a, b))), b, conj(phi1, phi2)

            case t.VecNew(elem, size):
                e1, t1, phi1 = self.gen(env, elem)
                e2, t2, phi2 = self.gen(env, size)
                a = self.fresh.metavar()
                _, w1, nw1 = self.weight()
                _, w2, nw2 = self.weight()
                vec_ty = Vector(t1)
                phi3 = Or(
                    And(TypEq(a, vec_ty), w1),
                    conj(TypEq(a, ANY), IsGround(vec_ty), nw1),
                )
                phi4 = Or(And(TypEq(t2, INT), w2), And(TypEq(t2, ANY), nw2))
                rewritten = _coerce_to(
                    t.VecNew(e1, _coerce_to(e2, t2, INT)), vec_ty, a
                )
                return rewritten, a, conj(phi1, phi2, phi3, phi4)

            case t.VecGet(v, i):
                e1, t1, phi1 = self.gen(env, v)
                e2, t2, phi2 = self.gen(env, i)
                a = self.fresh.metavar()
                _, w1, nw1 = self.weight()
                _, w2, nw2 = self.weight()
                phi3 = Or(And(TypEq(t2, INT), w1), And(TypEq(t2, ANY), nw1))
                phi4 = Or(
                    conj(TypEq(t1, ANY), TypEq(a, ANY), nw2),
                    And(TypEq(t1, Vector(a)), w2),
                )
                rewritten = t.VecGet(
                    _coerce_to(e1, t1, Vector(a)), _coerce_to(e2, t2, INT)
                )
                return rewritten, a, conj(phi1, phi2, phi3, phi4)

            case t.VecSet(v, value, index):
                e1, t1, phi1 = self.gen(env, v)
                e2, t2, phi2 = self.gen(env, value)
                e3, t3, phi3 = self.gen(env, index)
                a = self.fresh.metavar()
                _, w1, nw1 = self.weight()
                _, w2, nw2 = self.weight()
                phi4 = Or(And(TypEq(t2, INT), w1), And(TypEq(t2, ANY), nw1))
                phi5 = Or(
                    conj(TypEq(t1, Vector(a)), TypEq(t2, a), w2),
                    conj(TypEq(a, ANY), IsGround(t1), IsGround(t2), nw2),
                )
                rewritten = t.VecSet(
                    _coerce_to(e1, t1, Vector(a)),
                    _coerce_to(e2, t2, a),
                    _coerce_to(e3, t3, INT),
                )
                return rewritten, Vector(a), conj(phi1, phi2, phi3, phi4, phi5)

            case t.VecLen(v):
                # The length rule takes a second, int-typed expression; the
                # unary surface form supplies a synthesized zero, typed int
                # directly so it adds no constraints of its own.
                e1, t1, phi1 = self.gen(env, v)
                t2: Typ = INT
                a = self.fresh.metavar()
                _, w1, nw1 = self.weight()
                _, w2, nw2 = self.weight()
                phi3 = Or(And(TypEq(t2, INT), w1), And(TypEq(t2, ANY), nw1))
                phi4 = Or(
                    And(TypEq(t1, Vector(a)), w2),
                    And(TypEq(a, ANY), nw2),
                )
                return t.VecLen(_coerce_to(e1, t1, Vector(a))), INT, conj(phi1, phi3, phi4)

        raise TypeError(f"cannot generate constraints for {e!r}")
