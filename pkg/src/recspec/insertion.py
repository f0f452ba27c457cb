"""Words with prescribed repetition times.

``build_ell_sequence`` produces integer sequences (l_k) obeying the two
growth constraints

    (a) l_{k+1} >= l_k + 2k          for all indices k >= n0,
    (b) l_k >= k^3                   (finite-horizon strengthening),

whose running log-rates log(l_k)/k oscillate between prescribed lower
and upper targets.  ``insert`` realizes the block-insertion map g: the
output word starts with a marker, copies the source, and splices the
block (first k letters + tie-break letter) at position l_k + 1 for each
stage k; the first repetition time of every k-prefix of g(w) is then
exactly l_k.

The recursion is materialized in a single pass: every stage only
touches positions beyond the previous stage's splice, so the output
prefix is emitted left to right with no re-copying.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import HorizonTooShort, InfeasibleTarget
from .words import Word, repetition_time


def _log(v: int) -> float:
    return math.log(v)


@dataclass(frozen=True)
class EllSequence:
    """Integer sequence l_{n0}, ..., l_K with target log-rate oscillation."""

    values: tuple[int, ...]
    n0: int
    target_lower: float
    target_upper: float

    def __post_init__(self):
        if self.n0 < 2:
            raise ValueError("n0 must be >= 2")
        if not self.values:
            raise ValueError("empty sequence")
        self.validate()

    @property
    def k_max(self) -> int:
        return self.n0 + len(self.values) - 1

    def indices(self) -> range:
        return range(self.n0, self.k_max + 1)

    def value(self, k: int) -> int:
        if not self.n0 <= k <= self.k_max:
            raise IndexError(f"index {k} outside [{self.n0}, {self.k_max}]")
        return self.values[k - self.n0]

    def validate(self) -> None:
        """Growth condition (a), strict monotonicity, and splice feasibility.

        The cubic floor (finite surrogate of l_k / k^2 -> infinity) is
        not forced here because it only matters for rate asymptotics,
        not for the exactness of repetition times; sequences emitted by
        :func:`build_ell_sequence` always satisfy it, see
        :meth:`cubic_floor_ok`.
        """
        prev = None
        for k, v in zip(self.indices(), self.values):
            if v < k + 1:
                raise ValueError(f"l_{k} = {v} too small to splice a {k}-block")
            if prev is not None:
                if v < prev + 2 * (k - 1):
                    raise ValueError(f"l_{k} breaks l_k >= l_(k-1) + 2(k-1)")
                if v <= prev:
                    raise ValueError("sequence must be strictly increasing")
            prev = v

    def cubic_floor_ok(self) -> bool:
        return all(v >= k ** 3 for k, v in zip(self.indices(), self.values))

    def log_rates(self) -> np.ndarray:
        return np.asarray([_log(v) / k for k, v in zip(self.indices(), self.values)])

    def achieved_window_rates(self, k_limit: int | None = None) -> tuple[float, float]:
        """(min, max) of log-rates over the trailing half of the index window."""
        ks = np.asarray(list(self.indices()))
        rates = self.log_rates()
        if k_limit is not None:
            keep = ks <= k_limit
            ks, rates = ks[keep], rates[keep]
        if ks.size == 0:
            raise ValueError("no indices at or below the limit")
        start = ks[0] + (ks[-1] - ks[0]) // 2
        window = rates[ks >= start]
        return float(window.min()), float(window.max())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["k", "ell_k"])
        for k, v in zip(self.indices(), self.values):
            writer.writerow([k, v])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, target_lower: float = 0.0,
                 target_upper: float = 0.0) -> "EllSequence":
        rows = list(csv.reader(io.StringIO(text)))
        body = [r for r in rows[1:] if r]
        ks = [int(r[0]) for r in body]
        vs = [int(r[1]) for r in body]
        if ks != list(range(ks[0], ks[0] + len(ks))):
            raise ValueError("indices must be consecutive")
        return cls(tuple(vs), ks[0], target_lower, target_upper)


def build_ell_sequence(alpha_rate: float, beta_rate: float, K: int, n0: int = 2,
                       value_cap: int | None = None) -> EllSequence:
    """Sequence with liminf/limsup of log(l_k)/k steered to the two targets.

    Descent phases use the minimal legal growth (so the rate decays
    toward the lower target, limited by the cubic floor whose own rate
    is 3 log k / k); climb phases jump straight onto the upper-rate
    curve.  With ``value_cap`` set, the final climb is scheduled as the
    last index whose jump stays below the cap, and the sequence then
    climbs out of the cap so that later indices are censored by any
    finite observation horizon; this is what lets tail estimators see
    both targets inside a bounded window.
    """
    if not (0 <= alpha_rate <= beta_rate):
        raise InfeasibleTarget("need 0 <= alpha_rate <= beta_rate")
    if math.isinf(alpha_rate):
        raise InfeasibleTarget("lower target must be finite")
    if K <= n0:
        raise ValueError("need K > n0")
    if n0 < 2:
        raise ValueError("need n0 >= 2")

    values: list[int] = []
    prev: int | None = None

    def legal_min(k: int) -> int:
        if prev is None:
            return k ** 3
        return max(k ** 3, prev + 2 * (k - 1), prev + 1)

    if alpha_rate == beta_rate:
        for k in range(n0, K + 1):
            cand = legal_min(k)
            if alpha_rate > 0 and not math.isinf(alpha_rate):
                cand = max(cand, math.ceil(math.exp(alpha_rate * k)))
            elif math.isinf(alpha_rate):  # pragma: no cover - excluded above
                cand = max(cand, (prev or 2) ** 2)
            values.append(cand)
            prev = cand
        return EllSequence(tuple(values), n0, alpha_rate, beta_rate)

    infinite_beta = math.isinf(beta_rate)

    def next_bottom_index(top_value: int) -> int:
        # index at which a descent from top_value re-touches the lower
        # rate line (or the cubic floor line when alpha is below it)
        if alpha_rate > 0:
            return math.ceil(_log(top_value) / alpha_rate)
        return math.ceil(math.exp(_log(top_value) / 3.0))

    # the last index that should carry an upper-rate touch: bounded by the
    # value cap when given, and always scheduled just before K so the final
    # tail window contains both a bottom stretch and a top
    k_final = None
    if not infinite_beta and beta_rate > 0:
        k_final = K - 1
        if value_cap is not None:
            k_cap = int(math.floor(math.log(value_cap) / beta_rate))
            while k_cap > n0 and math.ceil(math.exp(beta_rate * k_cap)) > value_cap:
                k_cap -= 1
            k_final = min(k_final, k_cap)
        k_final = max(k_final, n0 + 1)

    phase = "descend"
    tops = bottoms = 0
    last_top_rate = 0.0
    for k in range(n0, K + 1):
        base = legal_min(k)
        if phase == "descend":
            lval = base
            rate = _log(lval) / k
            # at the bottom when the rate reaches the lower target, or when
            # the cubic floor binds (no legal value can sit lower)
            if rate <= alpha_rate + 1.0 / k or lval <= k ** 3:
                bottoms += 1
                phase = "hold"
        elif phase == "hold":
            # ride the lower-rate line until the next jump is due: at the
            # scheduled final index, or earlier when a further full
            # oscillation still fits before it
            if infinite_beta:
                jump = True
            else:
                cand = math.ceil(math.exp(beta_rate * k))
                affordable = value_cap is None or cand <= value_cap
                fits_another = next_bottom_index(cand) + 1 <= k_final
                jump = affordable and (k == k_final or fits_another)
            if jump:
                if infinite_beta:
                    lval = max(base, (prev if prev is not None else 2) ** 2)
                    rate = _log(lval) / k
                    if rate >= 2.0 * last_top_rate + 1.0:
                        tops += 1
                        last_top_rate = rate
                        phase = "descend"
                        if value_cap is not None and lval ** 2 > value_cap:
                            phase = "out"
                else:
                    lval = max(base, math.ceil(math.exp(beta_rate * k)))
                    rate = _log(lval) / k
                    if rate >= beta_rate - 1.0 / k:
                        tops += 1
                        last_top_rate = rate
                        phase = "descend"
                        if k_final is not None and next_bottom_index(lval) + 1 > k_final:
                            phase = "out"
            else:
                lval = base
                if alpha_rate > 0:
                    lval = max(lval, math.ceil(math.exp(alpha_rate * k)))
                bottoms += 1  # still at the bottom line
        else:  # climb out: stay on the upper growth line, bursting the cap
            if infinite_beta:
                lval = max(base, (prev if prev is not None else 2) ** 2)
            else:
                lval = max(base, math.ceil(prev * math.exp(beta_rate)))
        values.append(lval)
        prev = lval

    if tops == 0 or bottoms == 0:
        raise InfeasibleTarget(
            f"horizon K={K} too small for one full oscillation "
            f"(tops={tops}, bottoms={bottoms})")
    return EllSequence(tuple(values), n0, alpha_rate, beta_rate)


# ---------------------------------------------------------------------------
# the insertion map
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InsertionSpec:
    """Alphabet data for the insertion map.

    ``marker`` must avoid the source alphabet; the two tie-break
    letters are distinct and differ from the marker.  All symbols live
    in one common integer alphabet.
    """

    inner_alphabet: tuple[int, ...]
    outer_alphabet: tuple[int, ...]
    marker: int
    c: int
    c_bar: int

    def __post_init__(self):
        inner, outer = set(self.inner_alphabet), set(self.outer_alphabet)
        if not inner <= outer:
            raise ValueError("inner alphabet must embed in the outer one")
        if len(outer) < 3:
            raise ValueError("outer alphabet needs at least 3 letters")
        if self.marker in inner:
            raise ValueError("marker must avoid the inner alphabet")
        if self.marker not in outer:
            raise ValueError("marker must belong to the outer alphabet")
        if self.c == self.c_bar:
            raise ValueError("tie-break letters must differ")
        if self.marker in (self.c, self.c_bar):
            raise ValueError("tie-break letters must differ from the marker")
        if not {self.c, self.c_bar} <= outer:
            raise ValueError("tie-break letters must belong to the outer alphabet")

    @property
    def alphabet_size(self) -> int:
        return max(self.outer_alphabet) + 1

    @classmethod
    def standard(cls, inner_size: int) -> "InsertionSpec":
        """Inner alphabet {0..n-1}, marker n; tie-breaks inside the inner letters."""
        if inner_size < 2:
            raise ValueError("need at least two inner letters")
        inner = tuple(range(inner_size))
        outer = tuple(range(inner_size + 1))
        return cls(inner, outer, marker=inner_size, c=0, c_bar=1)


def inserted_block_positions(ell: EllSequence, horizon: int) -> list[tuple[int, int, int]]:
    """(stage k, start, stop) of each splice inside the output prefix.

    Positions are 0-based; the stage-k block occupies [l_k, l_k + k]
    and stages with l_k >= horizon do not touch the prefix.
    """
    out = []
    for k in ell.indices():
        start = ell.value(k)
        if start >= horizon:
            break
        out.append((k, start, min(start + k + 1, horizon)))
    return out


def required_source_length(ell: EllSequence, horizon: int) -> int:
    """Source letters consumed to emit ``horizon`` output letters."""
    inserted = sum(stop - start for _, start, stop in
                   inserted_block_positions(ell, horizon))
    return max(0, horizon - 1 - inserted)  # the leading marker is not from the source


def insert(w: Word, spec: InsertionSpec, ell: EllSequence, horizon: int,
           y_policy: str = "standard") -> Word:
    """First ``horizon`` letters of the insertion image of ``w``.

    ``y_policy`` selects the tie-break rule: "standard" picks c unless
    the letter after the copied block equals c (then c-bar), which is
    what makes repetition times exact; "always_c" disables the rule and
    exists only to let tests watch the construction fail without it.
    """
    if y_policy not in ("standard", "always_c"):
        raise ValueError("unknown y_policy")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    arr = w.symbols
    inner = set(spec.inner_alphabet)
    if arr.size and not set(np.unique(arr).tolist()) <= inner:
        raise ValueError("source word leaves the inner alphabet")
    if ell.value(ell.n0) <= ell.n0:
        raise ValueError("first stage position must exceed the block length")

    need = required_source_length(ell, horizon)
    if arr.size < need:
        raise HorizonTooShort(
            f"need {need} source letters for horizon {horizon}, got {arr.size}")

    out = np.empty(horizon, dtype=np.int64)
    out[0] = spec.marker
    filled = 1
    consumed = 0
    for k, start, stop in inserted_block_positions(ell, horizon):
        if start > filled:  # copy source letters up to the splice point
            take = start - filled
            out[filled:start] = arr[consumed:consumed + take]
            consumed += take
            filled = start
        if filled >= horizon:
            break
        # block: first k output letters plus the tie-break letter
        blk_len = stop - start
        block = out[:min(k, blk_len)]
        out[filled:filled + block.size] = block
        if blk_len == k + 1:
            follower = int(out[k])
            y = spec.c if (y_policy == "always_c" or follower != spec.c) else spec.c_bar
            out[filled + k] = y
        filled = stop
    if filled < horizon:
        take = horizon - filled
        out[filled:horizon] = arr[consumed:consumed + take]
        consumed += take
    return Word(out, spec.alphabet_size)


@dataclass(frozen=True)
class RepetitionReport:
    checked: tuple[int, ...]
    expected: tuple[int, ...]
    measured: tuple[int | None, ...]
    violations: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def accessible_stage_range(ell: EllSequence, horizon: int) -> list[int]:
    """Stages k whose repetition time l_k is measurable inside the horizon."""
    return [k for k in ell.indices() if ell.value(k) + k <= horizon]


def verify_prescribed_repetitions(w: Word, spec: InsertionSpec, ell: EllSequence,
                                  horizon: int, k_range: Iterable[int] | None = None,
                                  y_policy: str = "standard") -> RepetitionReport:
    """Check repetition_time(g(w), k) == l_k for every accessible stage k."""
    g = insert(w, spec, ell, horizon, y_policy=y_policy)
    if k_range is None:
        k_range = accessible_stage_range(ell, horizon)
    ks, exp, meas, bad = [], [], [], []
    for k in k_range:
        want = ell.value(k)
        got = repetition_time(g, k) if k < len(g) else None
        ks.append(k)
        exp.append(want)
        meas.append(got)
        if got != want:
            bad.append(k)
    return RepetitionReport(tuple(ks), tuple(exp), tuple(meas), tuple(bad))
