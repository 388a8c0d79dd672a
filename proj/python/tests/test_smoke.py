import os

import pytest

clpk = pytest.importorskip("clpk")

DATA = os.path.join(os.path.dirname(__file__), "..", "..", "tests", "data")


def test_once_binds_variables():
    e = clpk.Engine()
    assert e.once("X is 1_3 + 1_6") == {"X": "1_2"}
    assert e.once("fail") is None


def test_solutions_in_order():
    e = clpk.Engine()
    rows = e.solutions("member(X, [a, b, c])")
    assert [r["X"] for r in rows] == ["a", "b", "c"]
    assert len(e.solutions("member(X, [a, b, c])", limit=2)) == 2


def test_domains_print():
    e = clpk.Engine()
    assert e.once("X :: 1..5, X #> 2")["X"] == "_{3..5}"


def test_queens():
    e = clpk.Engine()
    e.consult(os.path.join(DATA, "queens.pl"))
    assert e.count("queens_array(8, Q), labeling(Q)") == 92


def test_loaded_program_and_output():
    e = clpk.Engine()
    e.load("sq(L, R) :- ( foreach(X, L), foreach(Y, R) do Y is X * X ).\n")
    assert e.once("sq([1, 2, 3], R)") == {"R": "[1, 4, 9]"}
    e.once("write(hello)")
    assert e.take_output() == "hello"


def test_errors_raise():
    e = clpk.Engine()
    with pytest.raises(clpk.PrologError):
        e.once("X is foo + 1")
    with pytest.raises(clpk.PrologError):
        e.count("dif(X, Y)")
