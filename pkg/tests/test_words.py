import itertools

import pytest
from hypothesis import given, strategies as st

from cpdilation.errors import EmptyWord, NeighborRepeat, ParseError
from cpdilation.words import (
    Word,
    iter_words,
    make_word,
    parse_index_tuple,
    parse_word,
    word_height,
    word_involution,
    word_product,
    word_shift,
)

W = make_word


def test_make_word():
    assert W((2, 6, 3)).entries == (2, 6, 3)
    with pytest.raises(NeighborRepeat):
        W((1, 1))
    with pytest.raises(EmptyWord):
        W(())
    with pytest.raises(ValueError):
        W((0, -1))


@pytest.mark.parametrize(
    "m, n, expected",
    [
        ((2, 6), (6, 3), (2, 6, 3)),
        ((1,), (1,), (1,)),
        ((0, 1), (2, 0), (0, 1, 2, 0)),
        ((0, 1), (1,), (0, 1)),
        ((0, 1), (2,), (0, 1, 2)),
    ],
)
def test_word_product(m, n, expected):
    assert word_product(W(m), W(n)) == W(expected)


@pytest.mark.parametrize("m, expected", [((2, 6, 3), (3, 6, 2)), ((5,), (5,)), ((0, 1), (1, 0))])
def test_word_involution(m, expected):
    assert word_involution(W(m)) == W(expected)


@pytest.mark.parametrize("m, expected", [((2, 6, 3), 6), ((0,), 0), ((0, 3, 0), 3)])
def test_word_height(m, expected):
    assert word_height(W(m)) == expected


@pytest.mark.parametrize("m, t, expected", [((0, 1), 1, (1, 2)), ((2, 6, 3), 0, (2, 6, 3)), ((0,), 3, (3,))])
def test_word_shift(m, t, expected):
    assert word_shift(W(m), t) == W(expected)


SMALL = list(iter_words(3, 3))


def test_small_catalog_matches_brute_force():
    brute = [
        t
        for k in range(1, 4)
        for t in itertools.product(range(4), repeat=k)
        if all(a != b for a, b in zip(t, t[1:]))
    ]
    assert sorted(w.entries for w in SMALL) == sorted(brute)


def test_associativity_exhaustive():
    for m, n, p in itertools.product(SMALL, repeat=3):
        assert (m * n) * p == m * (n * p)


def test_star_is_antihomomorphic_involution():
    for m, n in itertools.product(SMALL, repeat=2):
        assert (m * n).star == n.star * m.star
    for m in SMALL:
        assert m.star.star == m


def test_shift_is_star_endomorphism():
    for m, n in itertools.product(SMALL, repeat=2):
        for t in range(3):
            assert (m * n).shift(t) == m.shift(t) * n.shift(t)
            assert m.star.shift(t) == m.shift(t).star
            assert m.shift(t).height == m.height + t
        assert (m * n).height <= max(m.height, n.height)


words = st.lists(st.integers(0, 6), min_size=1, max_size=6).map(
    lambda xs: [x for i, x in enumerate(xs) if i == 0 or x != xs[i - 1]]
).map(make_word)


@given(words, words, words)
def test_associativity_random(m, n, p):
    assert (m * n) * p == m * (n * p)


@given(words, words, st.integers(0, 5))
def test_shift_random(m, n, t):
    assert (m * n).shift(t) == m.shift(t) * n.shift(t)


def test_parse():
    assert parse_word(" ( 2, 6 ,3 ) ") == W((2, 6, 3))
    assert parse_index_tuple("(1,1)") == (1, 1)
    with pytest.raises(NeighborRepeat):
        parse_word("(1,1)")
    for bad in ["", "()", "(1,-2)", "1,2", "(a)"]:
        with pytest.raises(ParseError):
            parse_index_tuple(bad)


def test_word_is_hashable_value():
    assert {W((1, 2)), W((1, 2))} == {W((1, 2))}
    assert str(W((0, 1))) == "(0,1)"
