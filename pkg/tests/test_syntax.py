import random
from pathlib import Path

import pytest

import migron
from migron import terms as t
from migron.parser import ParseError, parse, parse_typ
from migron.printer import Style, UnresolvedMetavar, print_expr, print_typ
from migron.types import ANY, BOOL, INT, Arrow, Metavar, Pair, Ref, Vector
from genprog import random_surface_program

SUITE = Path(migron.__file__).parent / "suite"


def test_parse_fun_with_annotation():
    assert parse("fun (x:any). x") == t.Fun("x", ANY, t.Var("x"))


def test_parse_default_annotation_is_unknown():
    assert parse("fun x. x") == t.Fun("x", ANY, t.Var("x"))
    assert parse("fun (x). x") == t.Fun("x", ANY, t.Var("x"))


def test_parse_farg_mismatch():
    e = parse("(fun (f:any). f true) (fun (x:any). x + 100)")
    assert e == t.App(
        t.Fun("f", ANY, t.App(t.Var("f"), t.Lit(True))),
        t.Fun("x", ANY, t.Add(t.Var("x"), t.Lit(100))),
    )


def test_application_left_assoc_and_precedence():
    assert parse("f g h") == t.App(t.App(t.Var("f"), t.Var("g")), t.Var("h"))
    assert parse("f 1 + g 2") == t.Add(
        t.App(t.Var("f"), t.Lit(1)), t.App(t.Var("g"), t.Lit(2))
    )
    assert parse("1 + 2 * 3") == t.Add(t.Lit(1), t.Mul(t.Lit(2), t.Lit(3)))


def test_parse_literals():
    assert parse("()") == t.Lit(None)
    assert parse('"a\\"b"') == t.Lit('a"b')
    assert parse("true") == t.Lit(True)
    assert parse("false") == t.Lit(False)
    assert parse("42") == t.Lit(42)
    # bool/int literals stay distinct
    assert parse("true") != parse("1")


def test_parse_extension_forms():
    assert parse("ref 5") == t.RefNew(t.Lit(5))
    assert parse("!r") == t.Deref(t.Var("r"))
    assert parse("r := 1 + 2") == t.SetRef(t.Var("r"), t.Add(t.Lit(1), t.Lit(2)))
    assert parse("(1, 2)") == t.PairNew(t.Lit(1), t.Lit(2))
    assert parse("fst(p)") == t.First(t.Var("p"))
    assert parse("vec(0, 9)") == t.VecNew(t.Lit(0), t.Lit(9))
    assert parse("vecset(v, x, 0)") == t.VecSet(t.Var("v"), t.Var("x"), t.Lit(0))
    assert parse("veclen(v)") == t.VecLen(t.Var("v"))
    assert parse("let x = 1 in x; x") == t.Let(
        "x", t.Lit(1), t.Seq(t.Var("x"), t.Var("x"))
    )
    assert parse("fix f:int -> int. fun (n:int). f n") == t.Fix(
        "f",
        Arrow(INT, INT),
        t.Fun("n", INT, t.App(t.Var("f"), t.Var("n"))),
    )


def test_parse_types():
    assert parse_typ("any -> int") == Arrow(ANY, INT)
    assert parse_typ("int -> int -> int") == Arrow(INT, Arrow(INT, INT))
    assert parse_typ("(int -> int) -> int") == Arrow(Arrow(INT, INT), INT)
    assert parse_typ("ref any") == Ref(ANY)
    assert parse_typ("vec (int, bool)") == Vector(Pair(INT, BOOL))


def test_comments():
    assert parse("# leading\n1 # trailing\n# more\n") == t.Lit(1)


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as err:
        parse("fun (x:) . x")
    assert err.value.line == 1
    assert err.value.column > 0


def test_print_simple():
    assert print_expr(t.Fun("x", INT, t.Var("x"))) == "fun (x:int). x"


def test_print_coercion_style():
    from migron.terms import CoerceApp, CTag
    from migron.types import GroundTy

    e = CoerceApp(CTag(GroundTy("bool")), t.Var("x"))
    assert print_expr(e, Style.WITH_COERCIONS) == "[bool!] x"


def test_print_surface_rejects_metavars():
    with pytest.raises(UnresolvedMetavar):
        print_expr(t.Fun("x", Metavar(0), t.Var("x")))


def test_roundtrip_random_asts():
    rng = random.Random(1234)
    for _ in range(1000):
        e = random_surface_program(rng, depth=6)
        assert parse(print_expr(e)) == e


def test_roundtrip_suite_files():
    files = sorted(SUITE.glob("*.gtlc")) + sorted((SUITE / "witnesses").glob("*.gtlc"))
    assert len(files) >= 10
    for path in files:
        e = parse(path.read_text())
        assert parse(print_expr(e)) == e
