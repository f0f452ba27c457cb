import itertools

import numpy as np
import pytest

from recspec.errors import (
    EmptyAlphabet,
    EmptySurvivor,
    InadmissibleWord,
    NoBranchingSymbol,
)
from recspec.sft import (
    SubshiftOfFiniteType,
    code_to_word,
    find_connecting_paths,
    full_shift,
    golden_mean_shift,
    induced_alphabet,
    remove_hole,
    sft_from_text,
    sft_to_text,
    word_to_code,
)
from recspec.thermo import spectral_radius
from recspec.words import Word

GOLDEN = (1 + 5 ** 0.5) / 2


def test_constructor_rejects_stranded_symbols():
    with pytest.raises(ValueError):
        SubshiftOfFiniteType([[1, 1], [0, 0]])   # symbol 1 has no successor
    with pytest.raises(ValueError):
        SubshiftOfFiniteType([[1, 0], [1, 0]])   # symbol 1 unreachable


def test_primitivity_is_computed_not_asserted():
    assert full_shift(2).is_primitive
    assert golden_mean_shift().is_primitive
    cycle = SubshiftOfFiniteType([[0, 1], [1, 0]])
    assert cycle.is_irreducible and cycle.period == 2 and not cycle.is_primitive


def test_admits():
    gm = golden_mean_shift()
    assert gm.admits(Word.from_str("01010"))
    assert not gm.admits(Word.from_str("011"))


@pytest.mark.parametrize("sft_factory", [full_shift, golden_mean_shift])
def test_connecting_paths(sft_factory):
    sft = sft_factory(2) if sft_factory is full_shift else sft_factory()
    A, C = find_connecting_paths(sft)
    assert A.to_str() == "00" and C.to_str() == "010"
    assert A != C


def test_connecting_paths_needs_branching():
    cycle = SubshiftOfFiniteType([[0, 1], [1, 0]])
    with pytest.raises(NoBranchingSymbol):
        find_connecting_paths(cycle)


def test_induced_alphabet_full_shift():
    ra = induced_alphabet(full_shift(2), Word.from_str("0"), 4)
    assert [(w.to_str(), t) for w, t in ra.entries] == [("0", 1), ("01", 2), ("011", 3)]


def test_induced_alphabet_single_return():
    ra = induced_alphabet(full_shift(2), Word.from_str("0"), 2)
    assert [(w.to_str(), t) for w, t in ra.entries] == [("0", 1)]


def test_induced_alphabet_golden():
    ra = induced_alphabet(golden_mean_shift(), Word.from_str("0"), 3)
    assert [(w.to_str(), t) for w, t in ra.entries] == [("0", 1), ("01", 2)]


def test_induced_alphabet_empty():
    cycle3 = SubshiftOfFiniteType([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    with pytest.raises(EmptyAlphabet):
        induced_alphabet(cycle3, Word([0], 3), 3)


def test_induced_parse_roundtrip():
    # concatenating entries and re-parsing gives back the same sequence
    rng = np.random.default_rng(0)
    for sft, A in ((full_shift(2), "0"), (golden_mean_shift(), "0"), (full_shift(3), "01")):
        ra = induced_alphabet(sft, Word.from_str(A, alphabet_size=sft.alphabet_size), 6)
        for _ in range(50):
            ids = rng.integers(0, len(ra.entries), size=30)
            word = ra.entries[ids[0]][0]
            for i in ids[1:]:
                word = word + ra.entries[i][0]
            word = word + ra.base_cylinder  # close the final return
            assert sft.admits(word)
            assert ra.parse(word) == list(ids)


def test_remove_hole_identity_and_empty():
    two = full_shift(2)
    assert remove_hole(two, []) is two
    with pytest.raises(EmptySurvivor):
        remove_hole(two, [Word.from_str("0"), Word.from_str("1")])
    with pytest.raises(InadmissibleWord):
        remove_hole(golden_mean_shift(), [Word.from_str("11")])


def test_remove_hole_golden_example():
    surv = remove_hole(full_shift(2), [Word.from_str("11")])
    names = [w.to_str() for w in surv.symbol_words]
    assert names == ["00", "01", "10"]
    # alphabet size = admissible cylinders minus holes
    assert surv.alphabet_size == 4 - 1
    assert spectral_radius(surv.transitions) == pytest.approx(GOLDEN, abs=1e-12)
    # overlap convention: 01 -> 10 allowed, 01 -> 00 not
    i01, i10, i00 = names.index("01"), names.index("10"), names.index("00")
    assert surv.allows(i01, i10) and not surv.allows(i01, i00)


def test_remove_hole_soundness_exhaustive():
    # a word survives iff it avoids every hole at every shift (lengths <= 12)
    two = full_shift(2)
    holes = [Word.from_str("11")]
    surv = remove_hole(two, holes)
    codes = {word_to_code(w, 2) for w in surv.symbol_words}
    n = 2
    for length in range(n, 13):
        for bits in itertools.product((0, 1), repeat=length):
            avoids = all(bits[i:i + 2] != (1, 1) for i in range(length - 1))
            blocks = [bits[i:i + n] for i in range(length - n + 1)]
            block_ids = [word_to_code(Word(b, 2), 2) for b in blocks]
            recodable = all(b in codes for b in block_ids)
            if recodable:
                pairs_ok = all(
                    surv.allows(sorted(codes).index(a), sorted(codes).index(b))
                    for a, b in zip(block_ids, block_ids[1:]))
            survives = recodable and pairs_ok
            assert survives == avoids, (bits, survives, avoids)


def test_remove_hole_trims_dead_ends():
    # removing 00 and 01 leaves only the fixed word over 11
    surv = remove_hole(full_shift(2), [Word.from_str("00"), Word.from_str("01")])
    assert [w.to_str() for w in surv.symbol_words] == ["11"]


def test_serialization_roundtrip():
    gm = golden_mean_shift()
    text = sft_to_text(gm)
    back = sft_from_text(text)
    assert np.array_equal(back.transitions.toarray(), gm.transitions.toarray())


def test_block_codes_and_words():
    gm = golden_mean_shift()
    words = gm.enumerate_blocks(3)
    assert [w.to_str() for w in words] == ["000", "001", "010", "100", "101"]
    for w in words:
        assert code_to_word(word_to_code(w, 2), 2, 3) == w
