import pytest
from hypothesis import given
from hypothesis import strategies as st

from fanetsim.keyexpr import (KeyExprError, key_expr_intersects, key_expr_match,
                              key_expr_normalize)

from oracles import all_exprs, brute_match, concrete_keys


@pytest.mark.parametrize("text,normal", [
    ("a/**/**/b", "a/**/b"),
    ("a/b/c", "a/b/c"),
    ("**/**/**", "**"),
    ("x/*/**", "x/*/**"),
])
def test_normalize(text, normal):
    assert key_expr_normalize(text).text == normal
    assert key_expr_normalize(normal).text == normal


@pytest.mark.parametrize("bad", ["", "a//b", "/a", "a/", "a*", "a/b*c", "A/b", "a b", "a/***"])
def test_normalize_rejects(bad):
    with pytest.raises(KeyExprError):
        key_expr_normalize(bad)


@pytest.mark.parametrize("expr,key,expected", [
    ("a/*/c", "a/b/c", True),
    ("a/*", "a/b/c", False),
    ("a/**", "a", True),
    ("x/y", "x/y", True),
    ("**", "a/b/c", True),
    ("a/**/c", "a/c", True),
    ("a/**/c", "a/b/b/c", True),
    ("*", "a/b", False),
])
def test_match_examples(expr, key, expected):
    assert brute_match(expr, key) is expected
    assert key_expr_match(expr, key) is expected


def test_match_requires_concrete_key():
    with pytest.raises(KeyExprError):
        key_expr_match("a/*", "a/*")


@pytest.mark.parametrize("a,b,expected", [
    ("a/*", "a/b", True),
    ("a/*", "b/**", False),
    ("**", "x/y/z", True),
    ("a/**", "**/b", True),
    ("*/a", "b/*", True),
    ("a/*/b", "a/b", False),
])
def test_intersects_examples(a, b, expected):
    assert key_expr_intersects(a, b) is expected
    assert key_expr_intersects(b, a) is expected


def test_intersects_examples_against_enumeration():
    keys = concrete_keys("abc", 4)
    for a, b in [("a/*", "a/b"), ("a/*", "b/**")]:
        found = any(brute_match(a, k) and brute_match(b, k) for k in keys)
        assert found is key_expr_intersects(a, b)


@given(st.sampled_from(all_exprs(3)))
def test_self_intersection_and_universal(e):
    assert key_expr_intersects(e, e)
    assert key_expr_intersects("**", e)


_chunk = st.sampled_from(["a", "b", "c", "*", "**", "sensor", "x1"])


@given(st.lists(_chunk, min_size=1, max_size=6))
def test_normalize_idempotent(chunks):
    once = key_expr_normalize("/".join(chunks))
    assert key_expr_normalize(once.text) == once
    assert "**/**" not in once.text


@given(st.lists(_chunk, min_size=1, max_size=5),
       st.lists(st.sampled_from(["a", "b", "c"]), min_size=1, max_size=7))
def test_match_equals_brute_force(chunks, key):
    expr = key_expr_normalize("/".join(chunks)).text
    k = "/".join(key)
    assert key_expr_match(expr, k) == brute_match(expr, k)
