"""The end-to-end migration pipeline.

Precise mode: introduce metavariables, generate constraints, solve the
MaxSMT problem, substitute the model back in.  Compatible mode runs the
same first phase, then constrains the program's type term so that base
types in negative position collapse to unknown, and re-solves the
combined constraint with the same soft assertions.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from . import terms as t
from .cgen import FreshSource, cgen, introduce_metavars, soft_constraints
from .constraints import Constraint, SelEq, TRUE, conj
from .session import UNSAT, Model, SolverOptions, SolverSession, subst
from .types import ANY, Arrow, Base, Pair, Ref, Typ, Unknown, Vector


class WeakenVariant(Enum):
    # Turn base types in negative position to unknown, keeping arrows.
    NEG_BASE_TO_DYN = "neg-base"
    # Turn every input side to unknown wholesale, maximizing compatibility.
    ALL_INPUTS_TO_DYN = "all-inputs"


class MigrationMode(Enum):
    PRECISE = "precise"
    COMPATIBLE = "compatible"


class MigrationError(Exception):
    pass


class WeakenUnsat(MigrationError):
    """The weakened constraint was unsatisfiable.  Dynamic models are
    stable under weakening, so this indicates a solver defect."""


@dataclass
class MigrationResult:
    migrated_surface: t.Expr
    migrated_coerced: t.Expr
    program_type: Typ
    mode: MigrationMode
    weights_satisfied: int


def weaken(precise_type: Typ, type_term: Typ, variant: WeakenVariant) -> Constraint:
    """The second-phase constraint: walk the precise type, flipping polarity
    at every arrow input, and force negative-position base types (or, in the
    all-inputs variant, entire input sides) of the type term to unknown."""

    def p(ty: Typ, path: tuple[str, ...], positive: bool) -> Constraint:
        match ty:
            case Unknown():
                return TRUE
            case Base():
                return TRUE if positive else SelEq(path, type_term, ANY)
            case Arrow(a, b):
                if variant is WeakenVariant.ALL_INPUTS_TO_DYN:
                    return conj(
                        SelEq(path + ("in",), type_term, ANY),
                        p(b, path + ("out",), positive),
                    )
                return conj(
                    p(a, path + ("in",), not positive),
                    p(b, path + ("out",), positive),
                )
            case Ref(c):
                return p(c, path + ("to",), positive)
            case Pair(a, b):
                return conj(
                    p(a, path + ("left",), positive),
                    p(b, path + ("right",), positive),
                )
            case Vector(c):
                return p(c, path + ("elem",), positive)
            case _:
                return TRUE

    return p(precise_type, (), True)


def precise_migrate(e: t.Expr, options: SolverOptions | None = None) -> MigrationResult:
    return migrate(MigrationMode.PRECISE, e, options=options)


def migrate(
    mode: MigrationMode,
    e: t.Expr,
    variant: WeakenVariant = WeakenVariant.NEG_BASE_TO_DYN,
    options: SolverOptions | None = None,
) -> MigrationResult:
    if t.free_vars(e):
        raise MigrationError(f"program is not closed: {sorted(t.free_vars(e))}")
    if not t.is_surface(e):
        raise MigrationError("program already contains coercions")

    fresh = FreshSource()
    annotated = introduce_metavars(e, fresh)
    out = cgen({}, annotated, fresh)
    softs = soft_constraints(out.weights)

    with SolverSession(options) as session:
        session.declare_typ_datatype()
        session.declare_metavars(out.metavars)
        session.declare_weights(out.weights)

        model = session.solve(out.constraint, softs)
        if model is UNSAT:
            raise MigrationError("phase-1 constraints unsatisfiable for a closed program")

        constraint = out.constraint
        if mode is MigrationMode.COMPATIBLE:
            precise_type = subst(model, out.typ)
            phi_weaken = weaken(precise_type, out.typ, variant)
            constraint = conj(out.constraint, phi_weaken)
            model = session.solve(constraint, softs)
            if model is UNSAT:
                raise WeakenUnsat("weakening made the constraints unsatisfiable")

    migrated_coerced = subst(model, out.rewritten)
    migrated_surface = subst(model, annotated)
    program_type = subst(model, out.typ)
    return MigrationResult(
        migrated_surface=migrated_surface,
        migrated_coerced=migrated_coerced,
        program_type=program_type,
        mode=mode,
        weights_satisfied=model.satisfied_weights,
    )
