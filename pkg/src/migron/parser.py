"""Parser for the concrete syntax of programs and types.

Grammar sketch (see README for the full table):

    e ::= e ; e | e := e | e + e | e * e | e e | ref e | !e
        | fun (x:T). e | fun x. e | fix f:T. e | let x = e in e
        | if e then e else e | fst(e) | snd(e)
        | vec(e,e) | vecget(e,e) | vecset(e,e,e) | veclen(e)
        | x | n | true | false | "..." | () | (e) | (e, e)

    T ::= int | bool | str | unit | any | T -> T | ref T | vec T | (T) | (T, T)

Application is juxtaposition and binds tighter than ``*`` and ``+``; arrows
are right-associative.  Omitted binder annotations default to the unknown
type.  ``#`` starts a comment that runs to end of line.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import terms as t
from .types import ANY, BOOL, INT, STR, UNIT, Arrow, Pair, Ref, Typ, Vector


@dataclass(frozen=True)
class SourceProgram:
    text: str
    origin: str = "<string>"


class ParseError(Exception):
    def __init__(self, line: int, column: int, expected: str, found: str = ""):
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found
        what = f", found {found}" if found else ""
        super().__init__(f"{line}:{column}: expected {expected}{what}")


KEYWORDS = {
    "fun", "fix", "let", "in", "if", "then", "else", "ref",
    "fst", "snd", "vec", "vecget", "vecset", "veclen",
    "true", "false", "any", "int", "bool", "str", "unit",
}

_PUNCT = ["->", ":=", "(", ")", ".", ",", ";", ":", "+", "*", "!", "="]


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "int" | "string" | punctuation/keyword literal | "eof"
    text: str
    line: int
    column: int


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if src[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = src[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if c == "#":
            while i < n and src[i] != "\n":
                advance(1)
            continue
        if c.isdigit():
            l0, c0 = line, col
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token("int", src[i:j], l0, c0))
            advance(j - i)
            continue
        if c.isalpha() or c == "_":
            l0, c0 = line, col
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            word = src[i:j]
            kind = word if word in KEYWORDS else "ident"
            toks.append(Token(kind, word, l0, c0))
            advance(j - i)
            continue
        if c == '"':
            l0, c0 = line, col
            j = i + 1
            out = []
            while j < n and src[j] != '"':
                if src[j] == "\\" and j + 1 < n:
                    esc = src[j + 1]
                    out.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    j += 2
                else:
                    out.append(src[j])
                    j += 1
            if j >= n:
                raise ParseError(l0, c0, "closing quote")
            toks.append(Token("string", "".join(out), l0, c0))
            advance(j + 1 - i)
            continue
        for p in _PUNCT:
            if src.startswith(p, i):
                toks.append(Token(p, p, line, col))
                advance(len(p))
                break
        else:
            raise ParseError(line, col, "a token", repr(c))
    toks.append(Token("eof", "", line, col))
    return toks


_TYPE_STARTERS = {"int", "bool", "str", "unit", "any", "ref", "vec", "("}
_ATOM_STARTERS = {"ident", "int", "string", "true", "false", "(",
                  "fst", "snd", "vec", "vecget", "vecset", "veclen"}
_TAIL_STARTERS = {"fun", "fix", "let", "if"}


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(tok.line, tok.column, repr(kind), repr(tok.text or tok.kind))
        return self.next()

    def fail(self, expected: str):
        tok = self.peek()
        raise ParseError(tok.line, tok.column, expected, repr(tok.text or tok.kind))

    # Types

    def typ(self) -> Typ:
        left = self.typ_prefix()
        if self.peek().kind == "->":
            self.next()
            return Arrow(left, self.typ())
        return left

    def typ_prefix(self) -> Typ:
        tok = self.peek()
        if tok.kind == "ref":
            self.next()
            return Ref(self.typ_prefix())
        if tok.kind == "vec":
            self.next()
            return Vector(self.typ_prefix())
        return self.typ_atom()

    def typ_atom(self) -> Typ:
        tok = self.next()
        match tok.kind:
            case "int":
                return INT
            case "bool":
                return BOOL
            case "str":
                return STR
            case "unit":
                return UNIT
            case "any":
                return ANY
            case "(":
                first = self.typ()
                if self.peek().kind == ",":
                    self.next()
                    second = self.typ()
                    self.expect(")")
                    return Pair(first, second)
                self.expect(")")
                return first
        raise ParseError(tok.line, tok.column, "a type", repr(tok.text or tok.kind))

    # Expressions

    def expr(self) -> t.Expr:
        left = self.assign()
        if self.peek().kind == ";":
            self.next()
            return t.Seq(left, self.expr())
        return left

    def assign(self) -> t.Expr:
        if self.peek().kind in _TAIL_STARTERS:
            return self.tail_form()
        left = self.add()
        if self.peek().kind == ":=":
            self.next()
            return t.SetRef(left, self.assign())
        return left

    def tail_form(self) -> t.Expr:
        tok = self.next()
        if tok.kind == "fun":
            name, ann = self.binder()
            self.expect(".")
            return t.Fun(name, ann, self.expr())
        if tok.kind == "fix":
            name, ann = self.binder()
            self.expect(".")
            return t.Fix(name, ann, self.expr())
        if tok.kind == "let":
            name = self.expect("ident").text
            self.expect("=")
            bound = self.expr()
            self.expect("in")
            return t.Let(name, bound, self.expr())
        if tok.kind == "if":
            cond = self.expr()
            self.expect("then")
            then = self.expr()
            self.expect("else")
            return t.If(cond, then, self.expr())
        raise AssertionError(tok)

    def binder(self) -> tuple[str, Typ]:
        if self.peek().kind == "(":
            self.next()
            name = self.expect("ident").text
            ann: Typ = ANY
            if self.peek().kind == ":":
                self.next()
                ann = self.typ()
            self.expect(")")
            return name, ann
        name = self.expect("ident").text
        if self.peek().kind == ":":
            self.next()
            return name, self.typ()
        return name, ANY

    def add(self) -> t.Expr:
        left = self.mul()
        while self.peek().kind == "+":
            self.next()
            left = t.Add(left, self.mul())
        return left

    def mul(self) -> t.Expr:
        left = self.app()
        while self.peek().kind == "*":
            self.next()
            left = t.Mul(left, self.app())
        return left

    def app(self) -> t.Expr:
        left = self.prefix()
        while self.peek().kind in _ATOM_STARTERS or self.peek().kind in ("ref", "!"):
            left = t.App(left, self.prefix())
        return left

    def prefix(self) -> t.Expr:
        tok = self.peek()
        if tok.kind == "ref":
            self.next()
            return t.RefNew(self.prefix())
        if tok.kind == "!":
            self.next()
            return t.Deref(self.prefix())
        return self.atom()

    def call_args(self, count: int) -> list[t.Expr]:
        self.expect("(")
        args = [self.expr()]
        while len(args) < count:
            self.expect(",")
            args.append(self.expr())
        self.expect(")")
        return args

    def atom(self) -> t.Expr:
        tok = self.peek()
        match tok.kind:
            case "ident":
                self.next()
                return t.Var(tok.text)
            case "int":
                self.next()
                return t.Lit(int(tok.text))
            case "string":
                self.next()
                return t.Lit(tok.text)
            case "true":
                self.next()
                return t.Lit(True)
            case "false":
                self.next()
                return t.Lit(False)
            case "fst":
                self.next()
                return t.First(*self.call_args(1))
            case "snd":
                self.next()
                return t.Second(*self.call_args(1))
            case "vec":
                self.next()
                return t.VecNew(*self.call_args(2))
            case "vecget":
                self.next()
                return t.VecGet(*self.call_args(2))
            case "vecset":
                self.next()
                return t.VecSet(*self.call_args(3))
            case "veclen":
                self.next()
                return t.VecLen(*self.call_args(1))
            case "(":
                self.next()
                if self.peek().kind == ")":
                    self.next()
                    return t.Lit(None)
                first = self.expr()
                if self.peek().kind == ",":
                    self.next()
                    second = self.expr()
                    self.expect(")")
                    return t.PairNew(first, second)
                self.expect(")")
                return first
        self.fail("an expression")


def parse(src: SourceProgram | str) -> t.Expr:
    """Parse one program; raises ParseError on malformed input."""
    text = src.text if isinstance(src, SourceProgram) else src
    p = _Parser(tokenize(text))
    e = p.expr()
    p.expect("eof")
    return e


def parse_typ(text: str) -> Typ:
    p = _Parser(tokenize(text))
    ty = p.typ()
    p.expect("eof")
    return ty
