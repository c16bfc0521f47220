"""Seeded random generators for programs and types, shared by the
property and acceptance tests."""

from __future__ import annotations

import random

from migron import terms as t
from migron.types import ANY, BOOL, INT, STR, UNIT, Arrow, Pair, Ref, Typ, Vector

BASES = [INT, BOOL, STR, UNIT, ANY]


def random_typ(rng: random.Random, depth: int = 4) -> Typ:
    if depth <= 0 or rng.random() < 0.4:
        return rng.choice(BASES)
    kind = rng.randrange(4)
    if kind == 0:
        return Arrow(random_typ(rng, depth - 1), random_typ(rng, depth - 1))
    if kind == 1:
        return Ref(random_typ(rng, depth - 1))
    if kind == 2:
        return Pair(random_typ(rng, depth - 1), random_typ(rng, depth - 1))
    return Vector(random_typ(rng, depth - 1))


def random_program(rng: random.Random, depth: int = 5) -> t.Expr:
    """A closed program with unknown-type annotations on every binder,
    using every expression form.

    Assignment, vector writes, and vector length have concrete result
    types (unit, vector, int) that the generation rules never coerce to
    unknown, so placing them where an integer, boolean, function, or
    structure shape is demanded has no migration.  The generator keeps
    those forms out of demanding slots; pass-through positions
    (sequencing, let bodies) propagate the restriction.
    """
    counter = [0]

    def fresh() -> str:
        counter[0] += 1
        return f"v{counter[0]}"

    def leaf(env: list[str]) -> t.Expr:
        if env and rng.random() < 0.6:
            return t.Var(rng.choice(env))
        c = rng.randrange(5)
        if c == 0:
            return t.Lit(rng.randrange(100))
        if c == 1:
            return t.Lit(rng.random() < 0.5)
        if c == 2:
            return t.Lit(rng.choice(["a", "bc", ""]))
        if c == 3:
            return t.Lit(None)
        x = fresh()
        return t.Fun(x, ANY, t.Var(x))

    def gen(env: list[str], d: int, concrete_ok: bool = True) -> t.Expr:
        if d <= 0 or rng.random() < 0.2:
            return leaf(env)
        form = rng.randrange(18)
        if form in (10, 16, 17) and not concrete_ok:
            form = rng.choice((1, 2, 3, 4, 8, 11))
        if form == 0:
            x = fresh()
            return t.Fun(x, ANY, gen(env + [x], d - 1))
        if form == 1:
            return t.App(gen(env, d - 1, False), gen(env, d - 1))
        if form == 2:
            return t.Mul(gen(env, d - 1, False), gen(env, d - 1, False))
        if form == 3:
            return t.Add(gen(env, d - 1, False), gen(env, d - 1, False))
        if form == 4:
            return t.If(gen(env, d - 1, False), gen(env, d - 1), gen(env, d - 1))
        if form == 5:
            x = fresh()
            return t.Let(x, gen(env, d - 1), gen(env + [x], d - 1, concrete_ok))
        if form == 6:
            return t.Seq(gen(env, d - 1), gen(env, d - 1, concrete_ok))
        if form == 7:
            # fix binds recursive functions; its unknown-type branch only
            # fires for function bodies, so other bodies pin the annotation.
            f, x = fresh(), fresh()
            return t.Fix(f, ANY, t.Fun(x, ANY, gen(env + [f, x], d - 1)))
        if form == 8:
            return t.RefNew(gen(env, d - 1))
        if form == 9:
            return t.Deref(gen(env, d - 1, False))
        if form == 10:
            return t.SetRef(gen(env, d - 1, False), gen(env, d - 1))
        if form == 11:
            return t.PairNew(gen(env, d - 1), gen(env, d - 1))
        if form == 12:
            return t.First(gen(env, d - 1, False))
        if form == 13:
            return t.Second(gen(env, d - 1, False))
        if form == 14:
            return t.VecNew(gen(env, d - 1), gen(env, d - 1, False))
        if form == 15:
            return t.VecGet(gen(env, d - 1, False), gen(env, d - 1, False))
        if form == 16:
            return t.VecSet(
                gen(env, d - 1, False), gen(env, d - 1, False), gen(env, d - 1, False)
            )
        return t.VecLen(gen(env, d - 1, False))

    return gen([], depth)


def random_well_typed_program(rng: random.Random, depth: int = 5) -> t.Expr:
    """Rejection-sample random_program down to programs the surface
    typechecker accepts: the class the migration theorems are about.
    (Ill-typed-but-migratable programs like ``true * 1`` are covered by
    dedicated tests.)"""
    from migron import terms as t
    from migron.typecheck import IllTyped, typecheck_gtlc

    def size(e) -> int:
        return 1 + sum(size(c) for c in t.children(e))

    while True:
        e = random_program(rng, depth)
        if size(e) < 6:
            continue
        try:
            typecheck_gtlc({}, e)
            return e
        except IllTyped:
            continue


def random_core_program(rng: random.Random, depth: int = 5) -> t.Expr:
    """A closed program over the core forms only: variables, constants,
    functions, applications, multiplication."""
    counter = [0]

    def fresh() -> str:
        counter[0] += 1
        return f"v{counter[0]}"

    def gen(env: list[str], d: int) -> t.Expr:
        if d <= 0 or rng.random() < 0.25:
            if env and rng.random() < 0.6:
                return t.Var(rng.choice(env))
            if rng.random() < 0.5:
                return t.Lit(rng.randrange(100))
            return t.Lit(rng.random() < 0.5)
        form = rng.randrange(3)
        if form == 0:
            x = fresh()
            return t.Fun(x, ANY, gen(env + [x], d - 1))
        if form == 1:
            return t.App(gen(env, d - 1), gen(env, d - 1))
        return t.Mul(gen(env, d - 1), gen(env, d - 1))

    return gen([], depth)


def random_surface_program(rng: random.Random, depth: int = 5) -> t.Expr:
    """Like random_program but with arbitrary closed annotations, for
    parser round-trip tests."""
    e = random_program(rng, depth)
    return t.map_annotations(
        e, lambda _: random_typ(rng, 2) if rng.random() < 0.5 else ANY
    )
