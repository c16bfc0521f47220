"""An SMT-LIB 2 MaxSMT solver over stdin/stdout, backed by the bundled
engine.  Installed as ``migron-smt``; the migration tool drives it (or any
other SMT-LIB solver with datatypes and ``assert-soft``) as a child
process when ``MIGRON_SOLVER`` is set.

Supported commands: set-option, set-logic, declare-datatypes,
declare-const, declare-fun (nullary), assert, assert-soft, check-sat,
get-model, push, pop, reset, echo, exit.
"""

from __future__ import annotations

import sys

from .constraints import Constraint, Not, Or, And, SelEq, TRUE, TypEq, Weight
from .engine import EngineTimeout, EngineUnsupported, maxsmt
from .smtlib import SexpError, _read, encode_typ
from .types import ANY, Arrow, Base, Metavar, Pair, Ref, Typ, Vector

_CONSTRUCTORS = {"arr": Arrow, "ref": Ref, "pair": Pair, "vec": Vector}
_SELECTOR_NAMES = {"in", "out", "to", "left", "right", "elem"}
_BASES = {"int", "bool", "str", "unit"}


class _Abort(Exception):
    def __init__(self, message: str):
        super().__init__(message)


class Solver:
    def __init__(self) -> None:
        self.reset()

    def reset(self) -> None:
        self.print_success = False
        self.timeout_ms = 60_000
        self.datatype_declared = False
        self.typ_ids: dict[str, int] = {}
        self.bool_ids: dict[str, int] = {}
        # One frame per push; frame = (assertions, softs)
        self.frames: list[tuple[list[Constraint], list[int]]] = [([], [])]
        self.last_result: str | None = None
        self.model_types: dict[int, Typ] = {}
        self.model_weights: dict[int, bool] = {}

    # Term parsing

    def parse_typ_term(self, sexp) -> Typ:
        if isinstance(sexp, str):
            if sexp == "star":
                return ANY
            if sexp in _BASES:
                return Base(sexp)
            if sexp in self.typ_ids:
                return Metavar(self.typ_ids[sexp])
            raise _Abort(f"unknown Typ term {sexp}")
        head, *args = sexp
        if head in _CONSTRUCTORS:
            return _CONSTRUCTORS[head](*(self.parse_typ_term(a) for a in args))
        raise _Abort(f"unknown Typ constructor {head}")

    def parse_sel_chain(self, sexp) -> tuple[tuple[str, ...], Typ] | None:
        """Peel accessor applications; None if the term has none."""
        path: list[str] = []
        while isinstance(sexp, list) and len(sexp) == 2 and sexp[0] in _SELECTOR_NAMES:
            path.append(sexp[0])
            sexp = sexp[1]
        if not path:
            return None
        return tuple(reversed(path)), self.parse_typ_term(sexp)

    def parse_formula(self, sexp) -> Constraint:
        if isinstance(sexp, str):
            if sexp == "true":
                return TRUE
            if sexp == "false":
                return Not(TRUE)
            if sexp in self.bool_ids:
                return Weight(self.bool_ids[sexp])
            raise _Abort(f"unknown boolean term {sexp}")
        head, *args = sexp
        if head == "and":
            out = self.parse_formula(args[0]) if args else TRUE
            for a in args[1:]:
                out = And(out, self.parse_formula(a))
            return out
        if head == "or":
            out = self.parse_formula(args[0]) if args else Not(TRUE)
            for a in args[1:]:
                out = Or(out, self.parse_formula(a))
            return out
        if head == "not":
            return Not(self.parse_formula(args[0]))
        if head == "=":
            if len(args) != 2:
                # Fold chained equalities pairwise.
                out = self.parse_formula(["=", args[0], args[1]])
                for i in range(1, len(args) - 1):
                    out = And(out, self.parse_formula(["=", args[i], args[i + 1]]))
                return out
            left, right = args
            lchain = self.parse_sel_chain(left) if isinstance(left, list) else None
            rchain = self.parse_sel_chain(right) if isinstance(right, list) else None
            if lchain is not None:
                path, base = lchain
                return SelEq(path, base, self.parse_typ_term(right))
            if rchain is not None:
                path, base = rchain
                return SelEq(path, base, self.parse_typ_term(left))
            return TypEq(self.parse_typ_term(left), self.parse_typ_term(right))
        raise _Abort(f"unsupported operator {head}")

    # Commands

    def command(self, sexp, out) -> bool:
        """Execute one command; returns False when the session should end."""
        if not isinstance(sexp, list) or not sexp:
            raise _Abort("malformed command")
        head = sexp[0]
        if head == "exit":
            return False
        if head == "echo":
            print(sexp[1].strip('"') if len(sexp) > 1 else "", file=out)
            return True
        if head == "reset":
            self.reset()
            self.success(out)
            return True
        if head == "set-option":
            if len(sexp) >= 3 and sexp[1] == ":print-success":
                self.print_success = sexp[2] == "true"
                if self.print_success:
                    print("success", file=out)
                return True
            if len(sexp) >= 3 and sexp[1] == ":timeout":
                self.timeout_ms = int(sexp[2])
            self.success(out)
            return True
        if head == "set-logic":
            self.success(out)
            return True
        if head == "declare-datatypes":
            if self.datatype_declared:
                raise _Abort("datatype Typ already declared")
            self.datatype_declared = True
            self.success(out)
            return True
        if head in ("declare-const", "declare-fun"):
            name = sexp[1]
            sort = sexp[-1]
            if name in self.typ_ids or name in self.bool_ids:
                raise _Abort(f"constant {name} already declared")
            if sort == "Typ":
                self.typ_ids[name] = len(self.typ_ids)
            elif sort == "Bool":
                self.bool_ids[name] = len(self.bool_ids)
            else:
                raise _Abort(f"unknown sort {sort}")
            self.success(out)
            return True
        if head == "assert":
            self.frames[-1][0].append(self.parse_formula(sexp[1]))
            self.success(out)
            return True
        if head == "assert-soft":
            formula = self.parse_formula(sexp[1])
            if not isinstance(formula, Weight):
                raise _Abort("assert-soft supports boolean constants only")
            if ":weight" in sexp and sexp[sexp.index(":weight") + 1] != "1":
                raise _Abort("only unit soft weights are supported")
            self.frames[-1][1].append(formula.id)
            self.success(out)
            return True
        if head == "push":
            for _ in range(int(sexp[1]) if len(sexp) > 1 else 1):
                self.frames.append(([], []))
            self.success(out)
            return True
        if head == "pop":
            for _ in range(int(sexp[1]) if len(sexp) > 1 else 1):
                if len(self.frames) == 1:
                    raise _Abort("pop on empty stack")
                self.frames.pop()
            self.success(out)
            return True
        if head == "check-sat":
            self.check_sat(out)
            return True
        if head == "get-model":
            self.get_model(out)
            return True
        raise _Abort(f"unsupported command {head}")

    def success(self, out) -> None:
        if self.print_success:
            print("success", file=out)

    def check_sat(self, out) -> None:
        formula: Constraint = TRUE
        softs: list[int] = []
        for assertions, frame_softs in self.frames:
            for a in assertions:
                formula = a if formula is TRUE else And(formula, a)
            softs.extend(frame_softs)
        try:
            result = maxsmt(
                formula,
                metavars=sorted(self.typ_ids.values()),
                weights=sorted(self.bool_ids.values()),
                timeout_ms=self.timeout_ms,
                soft=softs,
            )
        except EngineTimeout:
            self.last_result = "unknown"
            print("unknown", file=out)
            return
        except EngineUnsupported as exc:
            raise _Abort(str(exc))
        self.last_result = result.status
        self.model_types = result.types
        self.model_weights = result.weights
        print(result.status, file=out)

    def get_model(self, out) -> None:
        if self.last_result != "sat":
            raise _Abort("no model available")
        lines = ["("]
        for name, i in sorted(self.typ_ids.items(), key=lambda kv: kv[1]):
            value = encode_typ(self.model_types.get(i, ANY))
            lines.append(f"  (define-fun {name} () Typ {value})")
        for name, i in sorted(self.bool_ids.items(), key=lambda kv: kv[1]):
            value = "true" if self.model_weights.get(i, True) else "false"
            lines.append(f"  (define-fun {name} () Bool {value})")
        lines.append(")")
        print("\n".join(lines), file=out)


def _read_command(stream) -> str | None:
    """Read one balanced s-expression (may span lines); None at EOF."""
    buf = ""
    depth = 0
    seen = False
    while True:
        ch = stream.read(1)
        if ch == "":
            return buf if seen else None
        buf += ch
        if ch == "(":
            depth += 1
            seen = True
        elif ch == ")":
            depth -= 1
            if depth == 0 and seen:
                return buf


def main(argv: list[str] | None = None) -> int:
    solver = Solver()
    out = sys.stdout
    while True:
        text = _read_command(sys.stdin)
        if text is None:
            return 0
        try:
            sexp, _ = _read(text, 0)
        except SexpError as exc:
            print(f'(error "{exc}")', file=out)
            out.flush()
            continue
        try:
            if not solver.command(sexp, out):
                out.flush()
                return 0
        except _Abort as exc:
            print(f'(error "{exc}")', file=out)
        out.flush()


if __name__ == "__main__":
    sys.exit(main())
