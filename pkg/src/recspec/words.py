"""Finite symbolic words and their repetition/return statistics.

A :class:`Word` is a finite prefix of a one-sided symbolic sequence over
an alphabet ``{0, ..., alphabet_size - 1}``.  All operations that probe
an infinite sequence state the horizon they need and return ``None``
(not found) rather than guessing beyond the stored prefix.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

GLYPHS = "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


class Word:
    """Immutable finite word over a finite alphabet of integer symbols."""

    __slots__ = ("symbols", "alphabet_size", "_bytes")

    def __init__(self, symbols: Sequence[int] | np.ndarray, alphabet_size: int | None = None):
        arr = np.asarray(symbols, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("symbols must be one-dimensional")
        if arr.size and arr.min() < 0:
            raise ValueError("symbol ids must be non-negative")
        if alphabet_size is None:
            alphabet_size = int(arr.max()) + 1 if arr.size else 1
        if alphabet_size <= 0:
            raise ValueError("alphabet_size must be positive")
        if arr.size and arr.max() >= alphabet_size:
            raise ValueError("symbol id exceeds alphabet_size")
        arr.flags.writeable = False
        object.__setattr__(self, "symbols", arr)
        object.__setattr__(self, "alphabet_size", int(alphabet_size))
        object.__setattr__(self, "_bytes", None)

    def __setattr__(self, name, value):
        raise AttributeError("Word is immutable")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_str(cls, text: str, alphabet: str | None = None,
                 alphabet_size: int | None = None) -> "Word":
        """Build a word from a string, one character per symbol.

        With ``alphabet`` given, symbol ids are positions in that string.
        Otherwise digits map to their value; any other text maps each
        character to its rank among the distinct characters used.
        """
        if alphabet is not None:
            ids = [alphabet.index(c) for c in text]
            size = alphabet_size if alphabet_size is not None else len(alphabet)
        elif all(c.isdigit() for c in text):
            ids = [int(c) for c in text]
            size = alphabet_size
        else:
            ranking = {c: i for i, c in enumerate(sorted(set(text)))}
            ids = [ranking[c] for c in text]
            size = alphabet_size if alphabet_size is not None else len(ranking)
        return cls(ids, size)

    def to_str(self, alphabet: str | None = None) -> str:
        glyphs = alphabet if alphabet is not None else GLYPHS
        if self.alphabet_size <= len(glyphs):
            return "".join(glyphs[s] for s in self.symbols)
        return " ".join(str(int(s)) for s in self.symbols)

    # -- sequence protocol ----------------------------------------------------

    def __len__(self) -> int:
        return int(self.symbols.size)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word(self.symbols[item], self.alphabet_size)
        return int(self.symbols[item])

    def __iter__(self):
        return iter(int(s) for s in self.symbols)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Word):
            return NotImplemented
        return (self.alphabet_size == other.alphabet_size
                and self.symbols.size == other.symbols.size
                and bool(np.all(self.symbols == other.symbols)))

    def __lt__(self, other: "Word") -> bool:
        return tuple(self.symbols) < tuple(other.symbols)

    def __hash__(self) -> int:
        return hash((self.alphabet_size, self.symbols.tobytes()))

    def __add__(self, other: "Word") -> "Word":
        size = max(self.alphabet_size, other.alphabet_size)
        return Word(np.concatenate([self.symbols, other.symbols]), size)

    def __repr__(self) -> str:
        shown = self.to_str() if len(self) <= 40 else self.to_str()[:37] + "..."
        return f"Word('{shown}', alphabet_size={self.alphabet_size})"

    def startswith(self, prefix: "Word") -> bool:
        if len(prefix) > len(self):
            return False
        return bool(np.all(self.symbols[: len(prefix)] == prefix.symbols))

    def with_alphabet_size(self, alphabet_size: int) -> "Word":
        return Word(self.symbols, alphabet_size)

    def as_bytes(self) -> bytes | None:
        """Byte view used for fast scanning; None when the alphabet is too large."""
        if self.alphabet_size > 256:
            return None
        cached = self._bytes
        if cached is None:
            cached = self.symbols.astype(np.uint8).tobytes()
            object.__setattr__(self, "_bytes", cached)
        return cached


def random_word(rng: np.random.Generator, length: int, alphabet_size: int) -> Word:
    return Word(rng.integers(0, alphabet_size, size=length), alphabet_size)


def _find_block(symbols: np.ndarray, block: np.ndarray, start: int) -> int | None:
    """Smallest shift >= start at which ``block`` occurs inside ``symbols``."""
    k = block.size
    limit = symbols.size - k
    if limit < start:
        return None
    candidates = np.flatnonzero(symbols[start:limit + 1] == block[0]) + start
    for n in candidates:
        if np.array_equal(symbols[n:n + k], block):
            return int(n)
    return None


def repetition_time(w: Word, k: int) -> int | None:
    """First shift n > 0 at which the leading k-block of ``w`` reappears.

    Only shifts with ``n + k <= len(w)`` are scanned; returns ``None``
    when no reoccurrence fits inside the stored prefix.
    """
    if k <= 0:
        raise ValueError("block length k must be positive")
    if k >= len(w):
        raise ValueError("need len(w) >= k + 1 to scan at least one shift")
    data = w.as_bytes()
    if data is not None:
        pos = data.find(data[:k], 1)
        return pos if pos != -1 else None
    return _find_block(w.symbols, w.symbols[:k], 1)


def return_time_to_cylinder(w: Word, cylinder: Word) -> int | None:
    """First shift t > 0 with ``w[t : t + len(cylinder)] == cylinder``.

    ``w`` must itself begin with ``cylinder`` (it lies in that cylinder).
    Returns ``None`` when no return fits inside the stored prefix.
    """
    if len(cylinder) == 0:
        raise ValueError("cylinder must be nonempty")
    if not w.startswith(cylinder):
        raise ValueError("word does not start with the cylinder")
    data = w.as_bytes()
    cyl = cylinder.as_bytes()
    if data is not None and cyl is not None:
        pos = data.find(cyl, 1)
        return pos if pos != -1 else None
    return _find_block(w.symbols, cylinder.symbols, 1)


def occurrence_positions(w: Word, block: Word) -> np.ndarray:
    """All shifts n >= 0 at which ``block`` occurs in ``w`` (brute force)."""
    k = len(block)
    if k == 0 or k > len(w):
        return np.empty(0, dtype=np.int64)
    hits = []
    pos = _find_block(w.symbols, block.symbols, 0)
    while pos is not None:
        hits.append(pos)
        pos = _find_block(w.symbols, block.symbols, pos + 1)
    return np.asarray(hits, dtype=np.int64)


def block_occurrences(symbols: np.ndarray, block: np.ndarray) -> np.ndarray:
    """Vectorized version of :func:`occurrence_positions` on raw arrays."""
    k = block.size
    n = symbols.size - k + 1
    if k == 0 or n <= 0:
        return np.empty(0, dtype=np.int64)
    mask = symbols[:n] == block[0]
    for j in range(1, k):
        mask &= symbols[j:n + j] == block[j]
    return np.flatnonzero(mask).astype(np.int64)


def repetition_time_naive(w: Word, k: int) -> int | None:
    """Double-loop reference implementation, kept as an independent oracle."""
    if k <= 0 or k >= len(w):
        raise ValueError("invalid block length")
    head = [int(s) for s in w.symbols[:k]]
    n_max = len(w) - k
    for n in range(1, n_max + 1):
        if all(int(w.symbols[n + j]) == head[j] for j in range(k)):
            return n
    return None
