import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dafny2cml.sexp import (Atom, BadEscape, BadInt, EmptyInput, IntLit, SList, StrLit,
                            TrailingTokens, UnbalancedParens, UnterminatedString, lex, loads,
                            parse, print_sexp)


def kinds(tokens):
    return [(t.kind, t.value) for t in tokens]


def test_lex_small_list():
    assert kinds(lex("(a b)")) == [("LPAREN", None), ("ATOM", "a"), ("ATOM", "b"),
                                   ("RPAREN", None)]


def test_lex_string_escape():
    assert kinds(lex(r'"Hello, Cake\n"')) == [("STRING", "Hello, Cake\n")]


def test_lex_negative_int():
    assert kinds(lex("-42")) == [("INT", -42)]


def test_lex_atom_may_start_with_dash():
    assert kinds(lex("- -x")) == [("ATOM", "-"), ("ATOM", "-x")]


def test_lex_comment_and_offsets():
    toks = lex("; note\n(x)")
    assert kinds(toks) == [("LPAREN", None), ("ATOM", "x"), ("RPAREN", None)]
    assert toks[0].offset == 7


@pytest.mark.parametrize("src, exc", [
    ('"abc', UnterminatedString),
    (r'"a\q"', BadEscape),
    ("12ab", BadInt),
    ("-3x", BadInt),
])
def test_lex_errors(src, exc):
    with pytest.raises(exc):
        lex(src)


def test_error_carries_offset():
    with pytest.raises(BadEscape) as info:
        lex(r'(x "a\q")')
    assert info.value.offset == 5


def test_parse_empty_list():
    assert parse(lex("()")) == SList(())


def test_parse_nesting():
    assert parse(lex("(m (n 1))")) == SList((Atom("m"), SList((Atom("n"), IntLit(1)))))


@pytest.mark.parametrize("src, exc", [
    (")", UnbalancedParens),
    ("(a (b)", UnbalancedParens),
    ("(a) b", TrailingTokens),
    ("   ; only a comment", EmptyInput),
])
def test_parse_errors(src, exc):
    with pytest.raises(exc):
        loads(src)


def test_print_examples():
    assert print_sexp(SList(())) == "()"
    assert print_sexp(StrLit("a\nb")) == r'"a\nb"'
    assert print_sexp(SList((Atom("x"), IntLit(3)))) == "(x 3)"


def test_atom_rejects_int_lookalike():
    with pytest.raises(ValueError):
        Atom("12")
    with pytest.raises(ValueError):
        Atom("a b")


def test_deep_nesting_is_not_recursive():
    depth = 20_000
    text = "(" * depth + ")" * depth
    e = loads(text)
    assert print_sexp(e) == text


# -- round trip -------------------------------------------------------------

_atom_chars = st.characters(blacklist_categories=("Cs", "Cc", "Zs", "Zl", "Zp"),
                            blacklist_characters='()";\\')
atoms = st.text(_atom_chars, min_size=1, max_size=8).filter(
    lambda s: not (s[0].isdigit() or (len(s) > 1 and s[0] == "-" and s[1].isdigit()))
    and not any(c.isspace() for c in s)).map(Atom)
strings = st.text(st.characters(blacklist_categories=("Cs",)), max_size=12).map(StrLit)
ints = st.integers(min_value=-10**30, max_value=10**30).map(IntLit)


def trees(max_depth=8):
    # nesting is bounded by construction: each layer wraps the previous one once
    leaves = atoms | strings | ints
    t = leaves
    for _ in range(max_depth):
        t = leaves | st.lists(t, max_size=3).map(lambda xs: SList(tuple(xs)))
    return t


@settings(max_examples=300)
@given(trees())
def test_parse_print_roundtrip(tree):
    assert loads(print_sexp(tree)) == tree


@settings(max_examples=200)
@given(trees())
def test_print_parse_print_is_stable(tree):
    text = print_sexp(tree)
    assert print_sexp(loads(text)) == text
