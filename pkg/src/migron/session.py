"""Solver sessions: encode constraints, obtain a MaxSMT model, decode and
normalize it.

Two transports exist.  The default runs the bundled engine in process.
Setting the ``MIGRON_SOLVER`` environment variable (or the ``command``
option) to a solver command line switches to textual SMT-LIB 2 over the
child process's stdin/stdout; any solver supporting algebraic datatypes,
``assert-soft`` and ``get-model`` works, including the bundled
``migron-smt``.

Every model is validated by re-evaluating the constraint with the
in-memory evaluator, then normalized: a metavariable whose assignment can
be flipped to the unknown type while keeping the constraint satisfied
(with everything else pinned) is a don't-care and is set to unknown.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import threading
from dataclasses import dataclass, field

from . import terms as t
from .constraints import Constraint, Weight, evaluate, metavars_of, subst_typ, weights_of
from .engine import EngineTimeout, maxsmt
from .smtlib import (
    TYP_DATATYPE_DECL,
    decode_model,
    encode_constraint,
    metavar_name,
    parse_sexp,
    weight_name,
)
from .types import ANY, Typ, metavars_of_typ


class SolverError(Exception):
    pass


class SolverProtocolError(SolverError):
    pass


class SolverTimeout(SolverError):
    def __init__(self, ms: int):
        self.ms = ms
        super().__init__(f"solver timed out after {ms} ms")


class MissingAssignment(SolverError):
    def __init__(self, metavar: int):
        self.metavar = metavar
        super().__init__(f"model lacks an assignment for metavariable {metavar}")


class Unsat:
    def __repr__(self) -> str:
        return "UNSAT"


UNSAT = Unsat()


@dataclass
class Model:
    type_assignment: dict[int, Typ]
    weight_assignment: dict[int, bool]

    @property
    def satisfied_weights(self) -> int:
        return sum(1 for v in self.weight_assignment.values() if v)


@dataclass
class SolverOptions:
    seed: int = 0
    timeout_ms: int = 10_000
    command: list[str] | None = None  # overrides MIGRON_SOLVER

    def resolved_command(self) -> list[str] | None:
        if self.command is not None:
            return self.command
        env = os.environ.get("MIGRON_SOLVER")
        return shlex.split(env) if env else None


class SolverSession:
    """One session drives at most one (check-sat, get-model) pair per
    phase; a second phase re-asserts in a fresh scope."""

    def __init__(self, options: SolverOptions | None = None):
        self.options = options or SolverOptions()
        self.metavars: list[int] = []
        self.weights: list[int] = []
        self._datatype_declared = False
        self._proc: subprocess.Popen | None = None
        self._scopes = 0

    # Declarations

    def declare_typ_datatype(self) -> None:
        if self._command() is not None:
            self._send(TYP_DATATYPE_DECL)
        elif self._datatype_declared:
            raise SolverProtocolError("datatype Typ already declared")
        self._datatype_declared = True

    def declare_metavars(self, ids: list[int]) -> None:
        for i in ids:
            if self._command() is not None:
                self._send(f"(declare-const {metavar_name(i)} Typ)")
            self.metavars.append(i)

    def declare_weights(self, ids: list[int]) -> None:
        for i in ids:
            if self._command() is not None:
                self._send(f"(declare-const {weight_name(i)} Bool)")
            self.weights.append(i)

    # Solving

    def solve(self, constraint: Constraint, softs: list[tuple[Weight, int]]):
        """Model maximizing satisfied soft assertions, or UNSAT."""
        if self._command() is None:
            raw = self._solve_inprocess(constraint, softs)
        else:
            raw = self._solve_subprocess(constraint, softs)
        if raw is UNSAT:
            return UNSAT
        model = self._complete(raw, constraint)
        if not evaluate(constraint, model.type_assignment, model.weight_assignment):
            raise SolverProtocolError("solver model does not satisfy the constraint")
        self._normalize_dont_cares(model, constraint)
        return model

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.stdin.write("(exit)\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, ValueError, OSError):
                pass
            self._proc.wait(timeout=5)
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *_):
        self.close()

    # In-process transport

    def _solve_inprocess(self, constraint, softs):
        try:
            result = maxsmt(
                constraint,
                metavars=self.metavars,
                weights=self.weights,
                timeout_ms=self.options.timeout_ms,
                soft=[w.id for w, _ in softs],
            )
        except EngineTimeout:
            raise SolverTimeout(self.options.timeout_ms)
        if result.status != "sat":
            return UNSAT
        return Model(dict(result.types), dict(result.weights))

    # Subprocess transport (textual SMT-LIB 2)

    def _command(self):
        return self.options.resolved_command()

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is None:
            try:
                self._proc = subprocess.Popen(
                    self._command(),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                )
            except OSError as exc:
                raise SolverProtocolError(f"cannot start solver: {exc}")
            self._proc.stdin.write("(set-option :print-success true)\n")
            self._proc.stdin.flush()
            self._expect_reply({"success"})
            self._send("(set-option :produce-models true)")
            self._send(f"(set-option :random-seed {self.options.seed})")
            self._send(f"(set-option :timeout {self.options.timeout_ms})")
        return self._proc

    def _readline(self) -> str:
        proc = self._proc
        timer = threading.Timer(self.options.timeout_ms / 1000.0 + 5.0, proc.kill)
        timer.start()
        try:
            line = proc.stdout.readline()
        finally:
            timer.cancel()
        if line == "":
            raise SolverProtocolError("solver closed its output stream")
        return line.strip()

    def _expect_reply(self, accepted: set[str]) -> str:
        line = self._readline()
        if line.startswith("(error"):
            raise SolverProtocolError(line)
        if line not in accepted and line != "unsupported":
            raise SolverProtocolError(f"unexpected solver reply: {line!r}")
        return line

    def _send(self, command: str) -> None:
        proc = self._ensure_proc()
        proc.stdin.write(command + "\n")
        proc.stdin.flush()
        self._expect_reply({"success"})

    def _read_sexp(self) -> str:
        buf = ""
        depth = 0
        while True:
            line = self._readline()
            if not buf and line.startswith("(error"):
                raise SolverProtocolError(line)
            buf += line + "\n"
            depth += line.count("(") - line.count(")")
            if depth <= 0 and buf.strip():
                return buf

    def _solve_subprocess(self, constraint, softs):
        proc = self._ensure_proc()
        if self._scopes:
            self._send(f"(pop {self._scopes})")
            self._scopes = 0
        self._send("(push 1)")
        self._scopes = 1
        self._send(f"(assert {encode_constraint(constraint)})")
        for w, weight in softs:
            self._send(f"(assert-soft {weight_name(w.id)} :weight {weight})")
        proc.stdin.write("(check-sat)\n")
        proc.stdin.flush()
        status = self._readline()
        if status.startswith("(error"):
            raise SolverProtocolError(status)
        if status == "unsat":
            return UNSAT
        if status == "unknown":
            raise SolverTimeout(self.options.timeout_ms)
        if status != "sat":
            raise SolverProtocolError(f"unexpected check-sat reply: {status!r}")
        proc.stdin.write("(get-model)\n")
        proc.stdin.flush()
        text = self._read_sexp()
        try:
            types_by_name, bools_by_name = decode_model(parse_sexp(text.strip()))
        except Exception as exc:
            raise SolverProtocolError(f"cannot parse model: {exc}")
        types = {
            i: types_by_name[metavar_name(i)]
            for i in self.metavars
            if metavar_name(i) in types_by_name
        }
        weights = {
            i: bools_by_name[weight_name(i)]
            for i in self.weights
            if weight_name(i) in bools_by_name
        }
        return Model(types, weights)

    # Model post-processing

    def _complete(self, model: Model, constraint: Constraint) -> Model:
        """Fill in constants the solver omitted: unknown for metavariables,
        true for weights (an omitted constant is a don't-care)."""
        for i in self.metavars:
            model.type_assignment.setdefault(i, ANY)
        for i in metavars_of(constraint):
            model.type_assignment.setdefault(i, ANY)
        for i in self.weights:
            model.weight_assignment.setdefault(i, True)
        for i in weights_of(constraint):
            model.weight_assignment.setdefault(i, True)
        return model

    def _normalize_dont_cares(self, model: Model, constraint: Constraint) -> None:
        for i in sorted(model.type_assignment):
            if model.type_assignment[i] == ANY:
                continue
            pinned = dict(model.type_assignment)
            pinned[i] = ANY
            if evaluate(constraint, pinned, model.weight_assignment):
                model.type_assignment[i] = ANY


def subst(model: Model, value):
    """Close a type or expression under the model: metavariables are
    replaced, suspended coercions become primitive coercions, and identity
    coercions are dropped."""
    from .coercions import coerce

    if isinstance(value, Typ):
        return subst_typ(model.type_assignment, value)
    if isinstance(value, t.Expr):
        return _subst_expr(model, value)
    raise TypeError(f"cannot substitute into {value!r}")


def _subst_expr(model: Model, e: t.Expr) -> t.Expr:
    from .coercions import coerce

    if isinstance(e, t.CoerceApp):
        body = _subst_expr(model, e.body)
        k = e.coercion
        if isinstance(k, t.SuspendedCoercion):
            source = subst_typ(model.type_assignment, k.source)
            target = subst_typ(model.type_assignment, k.target)
            resolved = coerce(source, target)
            if isinstance(resolved, t.CId):
                return body
            return t.CoerceApp(resolved, body)
        return t.CoerceApp(k, body)
    if isinstance(e, (t.Fun, t.Fix)):
        ann = subst_typ(model.type_assignment, e.annotation)
        return type(e)(e.param if isinstance(e, t.Fun) else e.name, ann, _subst_expr(model, e.body))
    if isinstance(e, (t.Var, t.Lit)):
        return e
    kids = [_subst_expr(model, c) for c in t.children(e)]
    match e:
        case t.Let(x, _, _):
            return t.Let(x, *kids)
        case _:
            return type(e)(*kids)
