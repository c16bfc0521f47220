import random

import pytest

from migron import terms as t
from migron.cgen import FreshSource, UnboundVariable, cgen, introduce_metavars, soft_constraints
from migron.constraints import (
    And,
    IsGround,
    Not,
    Or,
    TRUE,
    TypEq,
    Weight,
    evaluate,
    metavars_of,
    subst_typ,
    weights_of,
)
from migron.engine import maxsmt
from migron.parser import parse
from migron.terms import count_coercion_sites, erase_coercions
from migron.types import ANY, Arrow, INT, Metavar
from genprog import random_core_program, random_program

# Weight variables introduced by each syntax form.
RULE_WEIGHTS = {
    t.Var: 1, t.Lit: 1, t.Fun: 1, t.App: 2, t.Mul: 3, t.If: 2, t.Add: 1,
    t.RefNew: 1, t.Deref: 1, t.SetRef: 1, t.Fix: 1, t.PairNew: 1, t.First: 1,
    t.Second: 1, t.VecNew: 2, t.VecGet: 2, t.VecSet: 2, t.VecLen: 2,
    t.Let: 0, t.Seq: 0,
}


def expected_weights(e: t.Expr) -> int:
    own = RULE_WEIGHTS[type(e)]
    return own + sum(expected_weights(c) for c in t.children(e))


def test_introduce_metavars_replaces_every_unknown():
    e = parse("fun (x:any). x")
    out = introduce_metavars(e)
    assert out == t.Fun("x", Metavar(0), t.Var("x"))

    unchanged = parse("fun (x:int). x")
    assert introduce_metavars(unchanged) == unchanged

    two = introduce_metavars(parse("fun (x:any). fun (y:any). y"))
    assert two.annotation == Metavar(0)
    assert two.body.annotation == Metavar(1)

    # Unknowns nested inside composite annotations are replaced too.
    nested = introduce_metavars(parse("fun (x:int -> any). x"))
    assert nested.annotation == Arrow(INT, Metavar(0))


def test_const_rule_shape():
    out = cgen({}, t.Lit(5))
    a = Metavar(0)
    assert out.typ == a
    assert out.constraint == Or(
        And(TypEq(a, INT), Weight(0)), And(TypEq(a, ANY), Not(Weight(0)))
    )
    assert out.rewritten == t.CoerceApp(t.SuspendedCoercion(INT, a), t.Lit(5))
    assert out.weights == [0]


def test_fun_rule_shape():
    fresh = FreshSource()
    e = introduce_metavars(parse("fun (x:any). x"), fresh)
    out = cgen({}, e, fresh)
    alpha = Metavar(0)
    # Body: the identifier coercion gives the body type a1; the function
    # itself gets a fresh b with the groundness guard on the unknown branch.
    a1, b = Metavar(1), Metavar(2)
    assert out.typ == b
    fn_ty = Arrow(alpha, a1)
    expected_phi2 = Or(
        And(TypEq(b, fn_ty), Weight(1)),
        And(And(TypEq(b, ANY), IsGround(fn_ty)), Not(Weight(1))),
    )
    assert out.constraint == And(
        Or(And(TypEq(a1, alpha), Weight(0)), And(TypEq(a1, ANY), Not(Weight(0)))),
        expected_phi2,
    )


def test_unbound_variable_is_the_only_rejection():
    with pytest.raises(UnboundVariable):
        cgen({}, t.Var("nope"))


def test_true_times_one_is_satisfiable():
    out = cgen({}, parse("true * 1"))
    result = maxsmt(out.constraint, out.metavars, out.weights)
    assert result.status == "sat"


def test_soft_constraints_unit_weights():
    assert soft_constraints([]) == []
    softs = soft_constraints([0, 1])
    assert softs == [(Weight(0), 1), (Weight(1), 1)]


def test_erasure_recovers_input():
    rng = random.Random(7)
    for _ in range(200):
        e = random_program(rng, 4)
        fresh = FreshSource()
        annotated = introduce_metavars(e, fresh)
        out = cgen({}, annotated, fresh)
        assert erase_coercions(out.rewritten) == annotated


def test_weight_discipline_per_rule():
    rng = random.Random(8)
    for _ in range(200):
        e = random_program(rng, 4)
        out = cgen({}, e)
        assert len(out.weights) == expected_weights(e)
        assert weights_of(out.constraint) <= set(out.weights)


def test_farg_mismatch_weight_and_site_counts():
    # The addition rule introduces one weight but wraps both operands, so
    # this program has one more coercion site than weight variables.
    e = parse("(fun (f:any). f true) (fun (x:any). x + 100)")
    fresh = FreshSource()
    out = cgen({}, introduce_metavars(e, fresh), fresh)
    assert len(out.weights) == expected_weights(e) == 11
    assert count_coercion_sites(out.rewritten) == 12


def test_every_metavar_appears_in_constraint():
    rng = random.Random(9)
    for _ in range(100):
        e = random_program(rng, 4)
        fresh = FreshSource()
        out = cgen({}, introduce_metavars(e, fresh), fresh)
        from migron.terms import metavars_of_expr
        from migron.types import metavars_of_typ

        mentioned = metavars_of(out.constraint)
        assert metavars_of_typ(out.typ) <= mentioned | metavars_of_typ(out.typ)
        assert metavars_of_expr(out.rewritten) <= mentioned | metavars_of_typ(out.typ)


def satisfiable_under_all_unknown(out) -> bool:
    """The completeness oracle: assign every metavariable the unknown type
    and check each disjunctive cell has a satisfiable branch by direct
    evaluation, choosing weights cell by cell."""
    types = {i: ANY for i in out.metavars}

    def choose(c) -> bool:
        match c:
            case And(l, r):
                return choose(l) and choose(r)
            case Or(l, r):
                return choose(l) or choose(r)
            case Weight() | Not(Weight()):
                return True  # each weight is introduced by exactly one cell
            case _:
                return evaluate(c, types, {})

    return choose(out.constraint)


def test_completeness_all_unknown_assignment_1000_core():
    # The all-unknown model argument covers the core forms; fix and the
    # mutable-structure writes can force a metavariable to a concrete type
    # (their constraints stay satisfiable, which the acceptance suite checks
    # over the full language).
    rng = random.Random(10)
    for _ in range(1000):
        e = random_core_program(rng, 5)
        fresh = FreshSource()
        out = cgen({}, introduce_metavars(e, fresh), fresh)
        assert satisfiable_under_all_unknown(out)


def test_full_language_phase1_always_sat_sample():
    rng = random.Random(11)
    for _ in range(200):
        e = random_program(rng, 5)
        out = cgen({}, introduce_metavars(e, FreshSource()))
        assert maxsmt(out.constraint, out.metavars, out.weights).status == "sat"


def test_emission_is_deterministic():
    e = parse("(fun (f:any). f true) (fun (x:any). x + 100)")

    def run():
        fresh = FreshSource()
        return cgen({}, introduce_metavars(e, fresh), fresh)

    a, b = run(), run()
    assert a.constraint == b.constraint
    assert a.rewritten == b.rewritten
    assert a.weights == b.weights
