"""SMT-LIB 2 text encoding of types and constraints, and reply parsing.

The script layout is fixed: options, the Typ datatype declaration, one
constant per metavariable and weight, the asserted constraint, one
``assert-soft`` per weight, ``check-sat``, ``get-model``.
"""

from __future__ import annotations

from .constraints import (
    And,
    Constraint,
    IsGround,
    Not,
    Or,
    SelEq,
    TRUE_T,
    TypEq,
    Weight,
    ground_expansion,
)
from .types import ANY, Arrow, Base, Metavar, Pair, Ref, Typ, Vector

TYP_DATATYPE_DECL = (
    "(declare-datatypes () ((Typ (star) (int) (bool) (str) (unit) "
    "(arr (in Typ) (out Typ)) (ref (to Typ)) (pair (left Typ) (right Typ)) "
    "(vec (elem Typ)))))"
)


def metavar_name(i: int) -> str:
    return f"a{i}"


def weight_name(i: int) -> str:
    return f"w{i}"


def encode_typ(t: Typ) -> str:
    match t:
        case Base(name):
            return name
        case Arrow(a, b):
            return f"(arr {encode_typ(a)} {encode_typ(b)})"
        case Ref(c):
            return f"(ref {encode_typ(c)})"
        case Pair(a, b):
            return f"(pair {encode_typ(a)} {encode_typ(b)})"
        case Vector(a):
            return f"(vec {encode_typ(a)})"
        case Metavar(i):
            return metavar_name(i)
        case _:
            return "star"


def encode_constraint(c: Constraint) -> str:
    match c:
        case TRUE_T():
            return "true"
        case TypEq(l, r):
            return f"(= {encode_typ(l)} {encode_typ(r)})"
        case Weight(i):
            return weight_name(i)
        case And(l, r):
            return f"(and {encode_constraint(l)} {encode_constraint(r)})"
        case Or(l, r):
            return f"(or {encode_constraint(l)} {encode_constraint(r)})"
        case Not(x):
            return f"(not {encode_constraint(x)})"
        case IsGround(t):
            # Expanded at encoding time, keeping the solver theory to
            # datatypes plus booleans.
            return encode_constraint(ground_expansion(t))
        case SelEq(path, base, target):
            term = encode_typ(base)
            for sel in path:
                term = f"({sel} {term})"
            return f"(= {term} {encode_typ(target)})"
    raise TypeError(f"cannot encode {c!r}")


def script_lines(
    constraint: Constraint,
    metavars: list[int],
    weights: list[int],
    seed: int = 0,
) -> list[str]:
    """The full solver script, one command per line, in the fixed layout."""
    lines = [
        "(set-option :print-success true)",
        "(set-option :produce-models true)",
        f"(set-option :random-seed {seed})",
        TYP_DATATYPE_DECL,
    ]
    for m in metavars:
        lines.append(f"(declare-const {metavar_name(m)} Typ)")
    for w in weights:
        lines.append(f"(declare-const {weight_name(w)} Bool)")
    lines.append(f"(assert {encode_constraint(constraint)})")
    for w in weights:
        lines.append(f"(assert-soft {weight_name(w)} :weight 1)")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return lines


# S-expression reading


class SexpError(Exception):
    pass


def parse_sexp(text: str):
    """Parse one s-expression; atoms are strings, lists are Python lists."""
    value, rest = _read(text, 0)
    if text[rest:].strip():
        raise SexpError(f"trailing input: {text[rest:]!r}")
    return value


def _read(text: str, i: int):
    n = len(text)
    while i < n and text[i].isspace():
        i += 1
    if i >= n:
        raise SexpError("unexpected end of input")
    if text[i] == "(":
        items = []
        i += 1
        while True:
            while i < n and text[i].isspace():
                i += 1
            if i >= n:
                raise SexpError("unterminated list")
            if text[i] == ")":
                return items, i + 1
            value, i = _read(text, i)
            items.append(value)
    if text[i] == ")":
        raise SexpError("unexpected )")
    if text[i] == '"':
        j = i + 1
        while j < n and text[j] != '"':
            j += 1
        if j >= n:
            raise SexpError("unterminated string")
        return text[i : j + 1], j + 1
    j = i
    while j < n and not text[j].isspace() and text[j] not in "()":
        j += 1
    return text[i:j], j


def decode_typ_value(sexp) -> Typ:
    """A Typ value from a model term."""
    if isinstance(sexp, str):
        match sexp:
            case "star":
                return ANY
            case "int" | "bool" | "str" | "unit":
                return Base(sexp)
        raise SexpError(f"not a Typ value: {sexp!r}")
    head, *args = sexp
    decoded = [decode_typ_value(a) for a in args]
    match head:
        case "arr":
            return Arrow(*decoded)
        case "ref":
            return Ref(*decoded)
        case "pair":
            return Pair(*decoded)
        case "vec":
            return Vector(*decoded)
    raise SexpError(f"not a Typ constructor: {head!r}")


def decode_model(sexp) -> tuple[dict[str, Typ], dict[str, bool]]:
    """Constant assignments from a ``get-model`` reply.  Accepts both the
    bare list-of-define-fun form and the older ``(model ...)`` wrapper."""
    entries = sexp
    if entries and entries[0] == "model":
        entries = entries[1:]
    types: dict[str, Typ] = {}
    bools: dict[str, bool] = {}
    for entry in entries:
        if not isinstance(entry, list) or not entry or entry[0] != "define-fun":
            continue
        _, name, _params, sort, value = entry[:5]
        if sort == "Typ":
            types[name] = decode_typ_value(value)
        elif sort == "Bool":
            bools[name] = value == "true"
    return types, bools
