import pytest

from migron.parser import parse
from migron.typecheck import IllTyped, typecheck_gtlc
from migron.types import ANY, BOOL, INT, STR, UNIT, Arrow, Pair, Ref, Vector


def ty(src, env=None):
    return typecheck_gtlc(env or {}, parse(src))


def test_fun_rule():
    assert ty("fun (x:int). x") == Arrow(INT, INT)


def test_unknown_function_application_yields_unknown():
    # The challenge program with the mismatched argument is well typed.
    assert ty("(fun (f:any). f true) (fun (x:any). x + 100)") == ANY


def test_arrow_application_requires_consistency():
    assert ty("(fun (x:int). x) 5") == INT
    assert ty("(fun (x:int). x) ((fun (y:any). y) 5)") == INT
    with pytest.raises(IllTyped):
        ty("(fun (x:int). x) true")


def test_applying_an_int_is_rejected():
    with pytest.raises(IllTyped):
        ty("1 2")


def test_mul_requires_int_consistency():
    assert ty("1 * 2") == INT
    assert ty("(fun (x:any). x * 2) 1") == INT
    with pytest.raises(IllTyped):
        ty("true * 1")


def test_add_overloading():
    assert ty("1 + 2") == INT
    assert ty('"a" + "b"') == STR
    assert ty("(fun (x:any). x + 1) 5") == INT
    with pytest.raises(IllTyped):
        ty('1 + "a"')
    with pytest.raises(IllTyped):
        ty("true + 1")


def test_if_join():
    assert ty("if true then 1 else 2") == INT
    assert ty("fun (x:any). if true then x else 2") == Arrow(ANY, INT)
    with pytest.raises(IllTyped):
        ty("if 1 then 2 else 3")
    with pytest.raises(IllTyped):
        ty("if true then 1 else false")


def test_refs_pairs_vectors():
    assert ty("ref 5") == Ref(INT)
    assert ty("!(ref 5)") == INT
    assert ty("ref 5 := 6") == UNIT
    assert ty("(1, true)") == Pair(INT, BOOL)
    assert ty("fst((1, true))") == INT
    assert ty("snd((1, true))") == BOOL
    assert ty("vec(0, 3)") == Vector(INT)
    assert ty("vecget(vec(0, 3), 1)") == INT
    assert ty("vecset(vec(0, 3), 7, 1)") == Vector(INT)
    assert ty("veclen(vec(0, 3))") == INT
    with pytest.raises(IllTyped):
        ty("!5")
    with pytest.raises(IllTyped):
        ty("ref 5 := true")


def test_let_seq_fix():
    assert ty("let x = 1 in x + x") == INT
    assert ty("(); 1") == INT
    assert ty("fix f:int -> int. fun (n:int). f n") == Arrow(INT, INT)
    with pytest.raises(IllTyped):
        ty("fix f:int. true")


def test_unknown_typed_operations():
    assert ty("fun (x:any). !x") == Arrow(ANY, ANY)
    assert ty("fun (x:any). fst(x)") == Arrow(ANY, ANY)
    assert ty("fun (x:any). x := 1") == Arrow(ANY, UNIT)
    assert ty("fun (x:any). vecget(x, 0)") == Arrow(ANY, ANY)
