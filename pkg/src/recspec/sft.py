"""Subshifts of finite type over integer alphabets.

Transition matrices are kept sparse so that higher-block recodings with
hundreds of thousands of block symbols (hole removal at deep levels)
stay cheap.  Block words are encoded as big-endian integers in base
``alphabet_size``; dropping the first symbol and appending one more is
then integer arithmetic, which keeps the recoding fully vectorized.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    ConfigError,
    EmptyAlphabet,
    EmptySurvivor,
    InadmissibleWord,
    NoBranchingSymbol,
    NotMixing,
)
from .words import Word, block_occurrences

_DENSE_LIMIT = 4096  # largest alphabet for which a dense transition copy is kept


class SubshiftOfFiniteType:
    """One-sided subshift given by a 0/1 transition matrix.

    Every symbol must have at least one successor and one predecessor
    (no stranded symbols).  Primitivity is computed on demand, never
    assumed.  Instances produced by recoding carry the block words they
    stand for in ``symbol_words``.
    """

    def __init__(self, transitions, symbol_codes: np.ndarray | None = None,
                 block_length: int | None = None, base_alphabet_size: int | None = None):
        M = sp.csr_matrix(transitions, dtype=np.int8)
        if M.shape[0] != M.shape[1]:
            raise ValueError("transition matrix must be square")
        M.eliminate_zeros()
        M.sort_indices()
        if M.nnz and M.data.max() > 1:
            raise ValueError("transition matrix entries must be 0 or 1")
        n = M.shape[0]
        if n == 0:
            raise ValueError("alphabet must be nonempty")
        out_deg = np.diff(M.indptr)
        in_deg = np.bincount(M.indices, minlength=n)
        if (out_deg == 0).any() or (in_deg == 0).any():
            raise ValueError("every symbol needs a successor and a predecessor")
        if symbol_codes is not None and len(symbol_codes) != n:
            raise ValueError("one block code per alphabet letter required")
        self.transitions = M
        self.alphabet_size = n
        self.symbol_codes = (np.asarray(symbol_codes, dtype=np.int64)
                             if symbol_codes is not None else None)
        self.block_length = block_length
        self.base_alphabet_size = base_alphabet_size
        self._dense = M.toarray().astype(bool) if n <= _DENSE_LIMIT else None
        self._pair_codes = None
        self._strong_components = None
        self._period = None
        self._symbol_words = None

    @property
    def symbol_words(self) -> tuple[Word, ...] | None:
        """Block words the symbols stand for (lazily materialized)."""
        if self.symbol_codes is None:
            return None
        if self._symbol_words is None:
            self._symbol_words = codes_to_words(
                self.symbol_codes, self.base_alphabet_size, self.block_length)
        return self._symbol_words

    # -- basic queries ---------------------------------------------------------

    def successors(self, symbol: int) -> np.ndarray:
        M = self.transitions
        return M.indices[M.indptr[symbol]:M.indptr[symbol + 1]]

    def allows(self, i: int, j: int) -> bool:
        if self._dense is not None:
            return bool(self._dense[i, j])
        return j in self.successors(i)

    def dense(self) -> np.ndarray:
        if self._dense is not None:
            return self._dense.copy()
        return self.transitions.toarray().astype(bool)

    def admits(self, w: Word) -> bool:
        if w.alphabet_size > self.alphabet_size or len(w) == 0:
            return False
        arr = w.symbols
        if arr.size and arr.max() >= self.alphabet_size:
            return False
        if arr.size == 1:
            return True
        if self._dense is not None:
            return bool(self._dense[arr[:-1], arr[1:]].all())
        codes = arr[:-1] * self.alphabet_size + arr[1:]
        return bool(np.isin(codes, self._pair_code_array()).all())

    def _pair_code_array(self) -> np.ndarray:
        if self._pair_codes is None:
            M = self.transitions.tocoo()
            self._pair_codes = np.sort(M.row.astype(np.int64) * self.alphabet_size + M.col)
        return self._pair_codes

    # -- primitivity -----------------------------------------------------------

    @property
    def is_irreducible(self) -> bool:
        if self._strong_components is None:
            n_comp, labels = sp.csgraph.connected_components(
                self.transitions, directed=True, connection="strong")
            self._strong_components = (n_comp, labels)
        return self._strong_components[0] == 1

    @property
    def period(self) -> int | None:
        """gcd of cycle lengths; defined (non-None) only when irreducible."""
        if not self.is_irreducible:
            return None
        if self._period is None:
            dist = np.full(self.alphabet_size, -1, dtype=np.int64)
            dist[0] = 0
            frontier = [0]
            g = 0
            M = self.transitions
            while frontier:
                nxt = []
                for u in frontier:
                    for v in M.indices[M.indptr[u]:M.indptr[u + 1]]:
                        if dist[v] < 0:
                            dist[v] = dist[u] + 1
                            nxt.append(int(v))
                        else:
                            g = math.gcd(g, int(dist[u] + 1 - dist[v]))
                frontier = nxt
            self._period = g if g > 0 else 1
        return self._period

    @property
    def is_primitive(self) -> bool:
        return self.is_irreducible and self.period == 1

    # -- block enumeration -----------------------------------------------------

    def admissible_block_codes(self, n: int) -> np.ndarray:
        """Sorted integer codes of all admissible n-blocks (big-endian)."""
        if n < 1:
            raise ValueError("block length must be >= 1")
        B = self.alphabet_size
        if B ** n > 2 ** 62:
            raise ConfigError("block space too large to encode as int64")
        if self._dense is None:
            raise ConfigError("alphabet too large for block enumeration")
        codes = np.arange(B, dtype=np.int64)
        last = codes.copy()
        for _ in range(n - 1):
            parts, lasts = [], []
            for j in range(B):
                mask = self._dense[last, j]
                if mask.any():
                    parts.append(codes[mask] * B + j)
                    lasts.append(np.full(int(mask.sum()), j, dtype=np.int64))
            if not parts:
                return np.empty(0, dtype=np.int64)
            codes = np.concatenate(parts)
            last = np.concatenate(lasts)
            order = np.argsort(codes, kind="stable")
            codes, last = codes[order], last[order]
        return codes

    def enumerate_blocks(self, n: int) -> list[Word]:
        codes = self.admissible_block_codes(n)
        return [code_to_word(int(c), self.alphabet_size, n) for c in codes]

    def block_transition_matrix(self, codes: np.ndarray, n: int) -> sp.csr_matrix:
        """Overlap transitions between the given n-block codes.

        Block u may be followed by block v when the (n-1)-suffix of u is
        the (n-1)-prefix of v; admissibility of the glued (n+1)-word is
        then automatic.
        """
        B = self.alphabet_size
        if self._dense is None:
            raise ConfigError("alphabet too large for block recoding")
        last = (codes % B).astype(np.int64)
        tail = (codes % B ** (n - 1)) * B if n > 1 else np.zeros_like(codes)
        rows, cols = [], []
        for j in range(B):
            mask = self._dense[last, j]
            if not mask.any():
                continue
            succ = tail[mask] + j
            pos = np.searchsorted(codes, succ)
            pos = np.minimum(pos, codes.size - 1)
            found = codes[pos] == succ
            rows.append(np.flatnonzero(mask)[found])
            cols.append(pos[found])
        if not rows:
            return sp.csr_matrix((codes.size, codes.size), dtype=np.int8)
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        data = np.ones(r.size, dtype=np.int8)
        return sp.csr_matrix((data, (r, c)), shape=(codes.size, codes.size))

    def __repr__(self) -> str:
        tag = f", blocks of length {self.block_length}" if self.block_length else ""
        return f"SubshiftOfFiniteType(alphabet_size={self.alphabet_size}{tag})"


# -- word/code conversions ------------------------------------------------------


def word_to_code(w: Word, base: int) -> int:
    code = 0
    for s in w.symbols:
        code = code * base + int(s)
    return code


def code_to_word(code: int, base: int, length: int) -> Word:
    out = np.empty(length, dtype=np.int64)
    for i in range(length - 1, -1, -1):
        code, r = divmod(code, base)
        out[i] = r
    return Word(out, base)


def codes_to_words(codes: Iterable[int], base: int, length: int) -> tuple[Word, ...]:
    return tuple(code_to_word(int(c), base, length) for c in codes)


# -- constructors ----------------------------------------------------------------


def full_shift(alphabet_size: int) -> SubshiftOfFiniteType:
    return SubshiftOfFiniteType(np.ones((alphabet_size, alphabet_size), dtype=np.int8))


def golden_mean_shift() -> SubshiftOfFiniteType:
    """Two symbols, the block '11' forbidden."""
    return SubshiftOfFiniteType([[1, 1], [1, 0]])


def sft_to_text(sft: SubshiftOfFiniteType) -> str:
    lines = [str(sft.alphabet_size)]
    M = sft.transitions.tocoo()
    for i, j in sorted(zip(M.row.tolist(), M.col.tolist())):
        lines.append(f"{i} {j}")
    return "\n".join(lines) + "\n"


def sft_from_text(text: str) -> SubshiftOfFiniteType:
    rows = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows:
        raise ConfigError("empty subshift description")
    try:
        n = int(rows[0])
        pairs = [tuple(int(t) for t in ln.split()) for ln in rows[1:]]
    except ValueError as exc:
        raise ConfigError(f"malformed subshift description: {exc}") from exc
    M = np.zeros((n, n), dtype=np.int8)
    for pair in pairs:
        if len(pair) != 2 or not (0 <= pair[0] < n and 0 <= pair[1] < n):
            raise ConfigError(f"bad transition line {pair!r}")
        M[pair] = 1
    return SubshiftOfFiniteType(M)


# -- essential part ---------------------------------------------------------------


def essential_mask(M: sp.spmatrix) -> np.ndarray:
    """Symbols lying on some bi-infinite admissible path.

    Peels symbols with no successor or no predecessor until stable
    (Kahn-style, linear in the number of transitions).
    """
    csr = M.tocsr()
    csc = M.tocsc()
    n = csr.shape[0]
    out_deg = np.diff(csr.indptr).astype(np.int64)
    in_deg = np.diff(csc.indptr).astype(np.int64)
    dead = np.zeros(n, dtype=bool)
    queue = deque(np.flatnonzero((out_deg == 0) | (in_deg == 0)).tolist())
    dead[list(queue)] = True
    while queue:
        u = queue.popleft()
        for v in csc.indices[csc.indptr[u]:csc.indptr[u + 1]]:  # predecessors of u
            out_deg[v] -= 1
            if out_deg[v] == 0 and not dead[v]:
                dead[v] = True
                queue.append(int(v))
        for v in csr.indices[csr.indptr[u]:csr.indptr[u + 1]]:  # successors of u
            in_deg[v] -= 1
            if in_deg[v] == 0 and not dead[v]:
                dead[v] = True
                queue.append(int(v))
    return ~dead


# -- hole removal ------------------------------------------------------------------


def remove_hole(sft: SubshiftOfFiniteType, holes: Iterable[Word]) -> SubshiftOfFiniteType:
    """Subshift of all sequences never entering any hole cylinder.

    The result is recoded on surviving n-cylinders (n = common hole
    length) with the overlap transition convention, then restricted to
    symbols carrying bi-infinite paths.  An empty hole set returns the
    input unchanged.
    """
    holes = list(holes)
    if not holes:
        return sft
    lengths = {len(h) for h in holes}
    if len(lengths) != 1:
        raise ValueError("holes must share a common length")
    n = lengths.pop()
    if n < 1:
        raise ValueError("hole length must be >= 1")
    for h in holes:
        if not sft.admits(h):
            raise InadmissibleWord(f"hole {h!r} is not admissible")
    codes = sft.admissible_block_codes(n)
    hole_codes = np.unique(np.asarray([word_to_code(h, sft.alphabet_size) for h in holes],
                                      dtype=np.int64))
    survivors = np.setdiff1d(codes, hole_codes, assume_unique=True)
    if survivors.size == 0:
        raise EmptySurvivor("all cylinders at this level were removed")
    M = sft.block_transition_matrix(survivors, n)
    keep = essential_mask(M)
    if not keep.any():
        raise EmptySurvivor("no admissible loop survives the holes")
    survivors = survivors[keep]
    M = M.tocsr()[keep][:, keep]
    return SubshiftOfFiniteType(
        M,
        symbol_codes=survivors,
        block_length=n,
        base_alphabet_size=sft.alphabet_size,
    )


# -- connecting paths ---------------------------------------------------------------


def find_connecting_paths(sft: SubshiftOfFiniteType, a: int | None = None) -> tuple[Word, Word]:
    """Two competing loop words at a branching symbol.

    Returns ``(A, C)`` where ``A`` is the shortest (then lexicographically
    smallest) admissible word that starts with ``a b``, ends with ``a``;
    ``C`` is the analogue through the second successor ``c``.
    """
    branching = [s for s in range(sft.alphabet_size) if sft.successors(s).size >= 2]
    if not branching:
        raise NoBranchingSymbol("every symbol has exactly one successor")
    if not sft.is_primitive:
        raise NotMixing("connecting paths require a topologically mixing shift")
    if a is None:
        a = branching[0]
    succ = sft.successors(a)
    if succ.size < 2:
        raise NoBranchingSymbol(f"symbol {a} does not branch")
    b, c = int(succ[0]), int(succ[1])

    def smallest_loop(first: int) -> Word:
        # lexicographically smallest extension per end symbol, grown one letter
        # at a time; the first length at which `a` is an end symbol wins.
        best: dict[int, tuple[int, ...]] = {first: (a, first)}
        if first == a:
            return Word(best[first], sft.alphabet_size)
        for _ in range(sft.alphabet_size ** 2 + sft.alphabet_size + 2):
            nxt: dict[int, tuple[int, ...]] = {}
            for s in sorted(best):
                word = best[s]
                for t in sft.successors(s):
                    cand = word + (int(t),)
                    if int(t) not in nxt or cand < nxt[int(t)]:
                        nxt[int(t)] = cand
            best = nxt
            if a in best:
                return Word(best[a], sft.alphabet_size)
        raise NotMixing("no path back to the branching symbol")  # pragma: no cover

    A = smallest_loop(b)
    C = smallest_loop(c)
    return A, C


# -- induced first-return alphabet ----------------------------------------------------


@dataclass(frozen=True)
class ReturnAlphabet:
    """First-return words to a base cylinder, with their return times."""

    base_cylinder: Word
    entries: tuple[tuple[Word, int], ...]
    bounded_by: int | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def words(self) -> list[Word]:
        return [w for w, _ in self.entries]

    def times(self) -> np.ndarray:
        return np.asarray([t for _, t in self.entries], dtype=np.int64)

    def parse(self, w: Word) -> list[int]:
        """Split a word starting in the base cylinder into entry indices.

        First-return parsing: consecutive occurrences of the base
        cylinder delimit the return words.  A trailing incomplete
        return is dropped; unknown return words raise
        ``InadmissibleWord``.
        """
        A = self.base_cylinder
        if not w.startswith(A):
            raise InadmissibleWord("word does not start in the base cylinder")
        lookup = {entry.symbols.tobytes(): i for i, (entry, _) in enumerate(self.entries)}
        hits = block_occurrences(w.symbols, A.symbols)
        out: list[int] = []
        for start, stop in zip(hits[:-1], hits[1:]):
            key = w.symbols[start:stop].tobytes()
            if key not in lookup:
                raise InadmissibleWord(
                    f"unrecognized return word of length {int(stop - start)}")
            out.append(lookup[key])
        return out


def induced_alphabet(sft: SubshiftOfFiniteType, A: Word, t_max: int) -> ReturnAlphabet:
    """All first-return words to cylinder ``A`` with return time < ``t_max``.

    Enumerates by depth-first extension; a branch dies as soon as the
    base cylinder reappears (first return found) or the return-time
    bound is exceeded.  The induced system over these words is a full
    shift: any concatenation of entries is admissible.
    """
    if t_max < 2:
        raise ValueError("t_max must be >= 2")
    if not sft.admits(A):
        raise InadmissibleWord("base cylinder is not admissible")
    la = len(A)
    a_tuple = tuple(int(s) for s in A.symbols)
    entries: list[tuple[Word, int]] = []
    stack: list[tuple[int, ...]] = [a_tuple]
    while stack:
        v = stack.pop()
        shift = len(v) - la  # only a new occurrence at this shift is possible
        if shift > 0 and v[shift:] == a_tuple:
            t = shift
            if t < t_max:
                entries.append((Word(v[:t], sft.alphabet_size), t))
            continue
        if len(v) - la + 1 >= t_max:
            continue  # any return from here would be too late
        for s in sft.successors(v[-1]):
            stack.append(v + (int(s),))
    if not entries:
        raise EmptyAlphabet(f"no return word to {A!r} below t_max={t_max}")
    entries.sort(key=lambda e: (e[1], tuple(e[0].symbols)))
    return ReturnAlphabet(base_cylinder=A, entries=tuple(entries), bounded_by=t_max)
