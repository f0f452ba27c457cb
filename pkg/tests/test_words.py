import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recspec.words import (
    Word,
    block_occurrences,
    occurrence_positions,
    random_word,
    repetition_time,
    repetition_time_naive,
    return_time_to_cylinder,
)


@pytest.mark.parametrize("text,k,expected", [
    ("abababab", 1, 2),
    ("aaaaaa", 2, 1),
    ("abaab", 2, 3),
])
def test_repetition_time_examples(text, k, expected):
    assert repetition_time(Word.from_str(text), k) == expected


def test_repetition_time_not_found_within_prefix():
    # the 3-block 'abc' never reappears in the stored prefix
    assert repetition_time(Word.from_str("abcbb"), 3) is None


@pytest.mark.parametrize("k", [0, -1, 5, 6])
def test_repetition_time_rejects_bad_block_length(k):
    with pytest.raises(ValueError):
        repetition_time(Word.from_str("abcab"), k)


@pytest.mark.parametrize("text,cyl,expected", [
    ("010101", "01", 2),
    ("011001", "01", 4),
    ("0111", "01", None),
])
def test_return_time_examples(text, cyl, expected):
    assert return_time_to_cylinder(Word.from_str(text), Word.from_str(cyl)) == expected


def test_return_time_requires_membership():
    with pytest.raises(ValueError):
        return_time_to_cylinder(Word.from_str("10"), Word.from_str("01"))


def test_repetition_monotone_in_block_length():
    rng = np.random.default_rng(11)
    for _ in range(300):
        w = random_word(rng, int(rng.integers(10, 200)), int(rng.integers(2, 5)))
        previous = 0
        for k in range(1, min(9, len(w))):
            rk = repetition_time(w, k)
            if rk is None:
                break
            assert rk >= previous
            previous = rk


def test_oracle_equivalence_with_naive_scan():
    # the fast scan and the double-loop reference must agree everywhere
    rng = np.random.default_rng(5)
    for _ in range(10_000):
        w = random_word(rng, int(rng.integers(5, 60)), int(rng.integers(2, 6)))
        k = int(rng.integers(1, len(w)))
        assert repetition_time(w, k) == repetition_time_naive(w, k)


def test_large_alphabet_falls_back_to_array_scan():
    rng = np.random.default_rng(3)
    w = random_word(rng, 400, 400)
    assert w.as_bytes() is None
    k = 2
    assert repetition_time(w, k) == repetition_time_naive(w, k)


@given(st.integers(2, 4), st.integers(6, 40), st.integers(0, 10 ** 6))
@settings(max_examples=200, deadline=None)
def test_repetition_matches_naive_property(alphabet, length, seed):
    rng = np.random.default_rng(seed)
    w = random_word(rng, length, alphabet)
    k = int(rng.integers(1, length))
    assert repetition_time(w, k) == repetition_time_naive(w, k)


def test_block_occurrences_matches_bruteforce():
    rng = np.random.default_rng(8)
    for _ in range(200):
        w = random_word(rng, 80, 2)
        block = random_word(rng, int(rng.integers(1, 5)), 2)
        fast = block_occurrences(w.symbols, block.symbols)
        slow = occurrence_positions(w, block)
        assert np.array_equal(fast, slow)


def test_word_basics():
    w = Word.from_str("0102", alphabet_size=4)
    assert len(w) == 4 and w[1] == 1 and w[1:3] == Word([1, 0], 4)
    assert (w + Word([3], 4)).to_str() == "01023"
    assert w.startswith(Word([0, 1], 4))
    assert not w.startswith(Word([1], 4))
    assert hash(w) == hash(Word([0, 1, 0, 2], 4))
    with pytest.raises(ValueError):
        Word([4], alphabet_size=4)
    with pytest.raises(ValueError):
        Word([-1])


def test_word_from_str_letters():
    w = Word.from_str("bab")
    assert w.alphabet_size == 2 and list(w) == [1, 0, 1]


def test_word_is_immutable():
    w = Word.from_str("01")
    with pytest.raises(AttributeError):
        w.alphabet_size = 3
    with pytest.raises(ValueError):
        w.symbols[0] = 1
