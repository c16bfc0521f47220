"""migron: type migration for the gradually typed lambda calculus.

Given a program whose annotations are the unknown type, migron infers
improved annotations by solving a MaxSMT problem, in either a
precision-maximizing mode or a context-compatibility mode, and can
validate migrations by typechecking and executing original and migrated
programs side by side.
"""

from .cgen import CgenOutput, FreshSource, UnboundVariable, cgen, introduce_metavars, soft_constraints
from .coercions import coerce, coercion_type
from .migrate import (
    MigrationError,
    MigrationMode,
    MigrationResult,
    WeakenUnsat,
    WeakenVariant,
    migrate,
    precise_migrate,
    weaken,
)
from .parser import ParseError, SourceProgram, parse, parse_typ
from .printer import Style, UnresolvedMetavar, print_coercion, print_expr, print_typ
from .runtime import (
    Machine,
    Outcome,
    StuckCoercion,
    StuckOther,
    Timeout,
    Val,
    eval_expr,
    insert_coercions,
    run_surface,
    typecheck_coerced,
)
from .session import (
    UNSAT,
    MissingAssignment,
    Model,
    SolverOptions,
    SolverProtocolError,
    SolverSession,
    SolverTimeout,
    subst,
)
from .typecheck import IllTyped, typecheck_gtlc
from .types import (
    ANY,
    BOOL,
    INT,
    STR,
    UNIT,
    Arrow,
    Base,
    GroundTy,
    Metavar,
    Pair,
    Ref,
    Typ,
    Vector,
    consistent,
    is_ground,
    type_precision,
)
from .terms import Expr, expr_precision

__all__ = [name for name in dir() if not name.startswith("_")]
