"""End-to-end pipeline: survivor shifts, induced sampling, and explicit
points with prescribed recurrence rates.

The construction for a pair of targets (alpha, beta):

1. recode the map's coding shift on blocks the length of a distinguished
   loop cylinder A, and remove the cylinders of points whose first
   return to A is at least n (``build_source``); the equilibrium state
   of -dim * log|Df| on the survivor is the sampling measure;
2. sample a typical trajectory conditioned to start in A, split it into
   first-return words (the induced alphabet);
3. build an integer sequence whose log-rate oscillates between
   alpha * lambda_n * mean_return and the beta analogue, and splice the
   sampled word with the insertion map at those positions;
4. flatten back to branch symbols and decode to the interval.

Repetition times of the result at the induced scale are exactly the
spliced sequence, which is what drives the measured recurrence rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BirkhoffMiss, DomainError, SourceInfeasible
from .insertion import (
    EllSequence,
    InsertionSpec,
    accessible_stage_range,
    build_ell_sequence,
    insert,
    required_source_length,
)
from .maps import MarkovExpandingMap, tau_table_from_orbit
from .sft import (
    ReturnAlphabet,
    SubshiftOfFiniteType,
    find_connecting_paths,
    induced_alphabet,
    remove_hole,
    word_to_code,
)
from .thermo import (
    EquilibriumState,
    Potential,
    bowen_dimension,
    equilibrium_state,
    restrict_potential,
)
from .words import Word, repetition_time


# ---------------------------------------------------------------------------
# block recoding of the coding shift
# ---------------------------------------------------------------------------


def higher_block_shift(sft: SubshiftOfFiniteType, n: int) -> SubshiftOfFiniteType:
    """The same shift presented on its admissible n-blocks."""
    codes = sft.admissible_block_codes(n)
    M = sft.block_transition_matrix(codes, n)
    return SubshiftOfFiniteType(M, symbol_codes=codes,
                                block_length=n, base_alphabet_size=sft.alphabet_size)


def long_return_holes(block_sft: SubshiftOfFiniteType, base_symbol: int,
                      n: int) -> list[Word]:
    """n-cylinders of {x starts at the base letter, no revisit before n}."""
    codes = block_sft.admissible_block_codes(n)
    B = block_sft.alphabet_size
    digits = np.empty((codes.size, n), dtype=np.int64)
    rest = codes.copy()
    for pos in range(n - 1, -1, -1):
        rest, digits[:, pos] = np.divmod(rest, B)
    starts = digits[:, 0] == base_symbol
    revisits = (digits[:, 1:] == base_symbol).any(axis=1)
    hole_rows = digits[starts & ~revisits]
    return [Word(row, B) for row in hole_rows]


# ---------------------------------------------------------------------------
# the source of large dimension
# ---------------------------------------------------------------------------


@dataclass
class SourceConfig:
    """Survivor shift with its equilibrium data, ready for sampling."""

    map: MarkovExpandingMap
    n: int
    base_cylinder: Word            # the loop word A over branch symbols
    block_sft: SubshiftOfFiniteType
    base_symbol: int               # index of A among the block letters
    survivor: SubshiftOfFiniteType
    state: EquilibriumState
    induced: ReturnAlphabet        # first-return words (block letters), t < n
    psi_survivor: np.ndarray       # log|Df| per survivor symbol
    dimension_target: float        # Bowen dimension of the full repeller
    pressure_gap: float            # pressure of the survivor (<= 0, -> 0)
    lambda_n: float                # integral of log|Df|
    nu_A: float                    # mass of [A]
    mean_return: float             # 1 / nu_A (exact by the return-time identity)
    dim_source: float              # entropy / lambda_n on the survivor
    birkhoff_tolerance: float

    @property
    def rate_scale(self) -> float:
        """lambda_n * mean_return: symbolic rates divide by this times k."""
        return self.lambda_n * self.mean_return


def build_source(map_: MarkovExpandingMap, n: int,
                 birkhoff_tolerance: float = 0.05,
                 mass_tol: float = 1e-9) -> SourceConfig:
    """Survivor shift of bounded return times to A, with equilibrium data.

    Raises ``SourceInfeasible`` when the equilibrium state of the
    survivor gives no mass to A (the caller should increase n).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    sft = map_.coding_sft()
    A, _ = find_connecting_paths(sft)
    la = len(A)
    block_sft = higher_block_shift(sft, la)
    base_symbol = int(np.searchsorted(block_sft.symbol_codes,
                                      word_to_code(A, sft.alphabet_size)))
    psi_base = map_.log_slope_potential(1)
    psi_block = Potential(block_sft.alphabet_size, 1,
                          np.arange(block_sft.alphabet_size),
                          psi_base.block_values(block_sft.symbol_codes, la))
    dim = bowen_dimension(map_)
    phi_block = psi_block.scaled(-dim)

    holes = long_return_holes(block_sft, base_symbol, n)
    if not holes:
        raise SourceInfeasible(f"no return time >= {n} exists; nothing to remove")
    survivor = remove_hole(block_sft, holes)
    phi_sub = restrict_potential(phi_block, survivor)
    psi_sub = restrict_potential(psi_block, survivor)
    state = equilibrium_state(survivor, phi_sub, psi=psi_sub)
    # mass of [A]: total stationary mass of the survivor blocks starting at A
    first_letters = survivor.symbol_codes // survivor.base_alphabet_size ** (n - 1)
    nu_A = float(state.stationary[first_letters[state.support] == base_symbol].sum())
    if nu_A <= mass_tol:
        raise SourceInfeasible(
            f"survivor equilibrium gives mass {nu_A:.2e} to the base cylinder at n={n}")
    induced = induced_alphabet(block_sft, Word([base_symbol], block_sft.alphabet_size), n)
    lam = state.lyapunov
    return SourceConfig(
        map=map_, n=n, base_cylinder=A, block_sft=block_sft,
        base_symbol=base_symbol, survivor=survivor, state=state,
        induced=induced, psi_survivor=psi_sub.values.copy(),
        dimension_target=dim,
        pressure_gap=state.pressure, lambda_n=float(lam),
        nu_A=float(nu_A), mean_return=float(1.0 / nu_A),
        dim_source=float(state.entropy / lam),
        birkhoff_tolerance=float(birkhoff_tolerance),
    )


# ---------------------------------------------------------------------------
# sampling the source
# ---------------------------------------------------------------------------


@dataclass
class SampledSource:
    """A typical trajectory of the survivor chain, split into return words."""

    letters: Word                # sequence over the induced alphabet ids
    times: np.ndarray            # return time of each induced letter
    block_word: Word             # the underlying block-letter stream
    achieved_psi_mean: float
    achieved_mean_return: float
    retries: int


def _sample_chain(state: EquilibriumState, start_states: np.ndarray,
                  start_probs: np.ndarray, steps: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Path of the equilibrium Markov chain, returned as state indices.

    Works directly on the CSR arrays (rows have at most a handful of
    successors), so state spaces in the millions stay cheap.
    """
    P = state.transition_matrix().tocsr()
    indptr, indices = P.indptr, P.indices
    # cumulative transition weights within each row
    cum = np.copy(P.data)
    np.cumsum(cum, out=cum)
    offsets = np.concatenate([[0.0], cum[indptr[1:-1] - 1]]) if indptr.size > 2 \
        else np.zeros(1)
    out = np.empty(steps, dtype=np.int64)
    u = rng.random(steps)
    cur = int(start_states[rng.choice(start_states.size, p=start_probs)])
    for t in range(steps):
        out[t] = cur
        lo, hi = indptr[cur], indptr[cur + 1]
        if hi - lo == 1:
            cur = int(indices[lo])
            continue
        row = cum[lo:hi] - offsets[cur]
        cur = int(indices[lo + np.searchsorted(row, u[t] * row[-1])])
    return out


def sample_source_point(source: SourceConfig, n_letters: int, seed: int,
                        max_retries: int = 8) -> SampledSource:
    """Typical word of the induced system: ``n_letters`` first-return words.

    The survivor chain starts in the base cylinder; Birkhoff averages of
    log|Df| and of the return times must land within the source's
    tolerance, else the draw is repeated (fresh seed stream each time).
    """
    state = source.state
    block_alpha = source.block_sft.alphabet_size
    first_letters = (source.survivor.symbol_codes
                     // source.survivor.base_alphabet_size ** (source.n - 1))
    support_first = first_letters[state.support]
    start_states = np.flatnonzero(support_first == source.base_symbol)
    if start_states.size == 0:
        raise SourceInfeasible("no chain state starts in the base cylinder")
    start_probs = state.stationary[start_states]
    start_probs = start_probs / start_probs.sum()
    lookup = {w.symbols.tobytes(): i for i, (w, _) in enumerate(source.induced.entries)}
    times_by_id = source.induced.times()
    psi_support = source.psi_survivor[state.support]

    seq = np.random.SeedSequence(seed)
    tol = source.birkhoff_tolerance
    base_steps = int(n_letters * source.mean_return * 1.25) + source.n + 16
    for attempt, child in enumerate(seq.spawn(max_retries)):
        rng = np.random.default_rng(child)
        path = _sample_chain(state, start_states, start_probs, base_steps, rng)
        blocks = support_first[path]  # emitted block letters along the path
        hits = np.flatnonzero(blocks == source.base_symbol)
        if hits.size < n_letters + 1 or hits[0] != 0:
            base_steps = int(base_steps * 1.5)
            continue
        boundaries = hits[:n_letters + 1]
        letter_ids = np.empty(n_letters, dtype=np.int64)
        ok = True
        for i in range(n_letters):
            key = blocks[boundaries[i]:boundaries[i + 1]].tobytes()
            if key not in lookup:  # cannot happen on the survivor; defensive
                ok = False
                break
            letter_ids[i] = lookup[key]
        if not ok:
            continue
        times = times_by_id[letter_ids]
        base_len = int(boundaries[n_letters])
        psi_mean = float(psi_support[path[:base_len]].mean())
        mean_ret = float(times.mean())
        if (abs(psi_mean - source.lambda_n) <= tol
                and abs(mean_ret - source.mean_return) <= tol * source.mean_return):
            return SampledSource(
                letters=Word(letter_ids, len(source.induced) + 1),
                times=times,
                block_word=Word(blocks[:base_len + 1], block_alpha),
                achieved_psi_mean=psi_mean,
                achieved_mean_return=mean_ret,
                retries=attempt,
            )
    raise BirkhoffMiss(
        f"no sample hit the Birkhoff tolerance {tol} within {max_retries} draws")


# ---------------------------------------------------------------------------
# recurrence rate estimates
# ---------------------------------------------------------------------------


@dataclass
class RecurrenceEstimate:
    """Scale-by-scale rate ratios with tail-window liminf/limsup estimates."""

    samples: list[tuple[float, float]]   # (scale, ratio)
    lower: float
    upper: float
    censored: list[float] = field(default_factory=list)
    policy: str = "inf/sup over the last half of the accessible scales"
    slope: float | None = None           # regression estimate, when meaningful

    @staticmethod
    def from_samples(samples: Sequence[tuple[float, float]],
                     censored: Sequence[float] = (),
                     slope: float | None = None) -> "RecurrenceEstimate":
        if not samples:
            raise DomainError("no accessible scales; everything censored")
        scales = np.asarray([s for s, _ in samples])
        ratios = np.asarray([r for _, r in samples])
        start = scales[0] + (scales[-1] - scales[0]) / 2.0
        window = ratios[scales >= start - 1e-12]
        return RecurrenceEstimate(
            samples=list(samples), lower=float(window.min()),
            upper=float(window.max()), censored=list(censored), slope=slope)


def estimate_recurrence_rate(map_: MarkovExpandingMap, w: Word,
                             r_grid: np.ndarray | None = None,
                             k_max: int | None = None,
                             window: int = 60) -> dict:
    """Geometric and symbolic recurrence-rate estimates for a coded point.

    Geometric route: ratios log tau_r / (-log r) on a geometric r-grid.
    Symbolic route: ratios log R_k / S_k(log|Df|) across block depths.
    """
    orbit = map_.orbit_values(w, window=window)
    if r_grid is None:
        r_grid = 2.0 ** -np.arange(5, 17)
    taus = tau_table_from_orbit(orbit, r_grid)
    geo_samples, censored = [], []
    for r, t in zip(r_grid, taus):
        if t < 0:
            censored.append(float(-math.log(r)))
        else:
            geo_samples.append((float(-math.log(r)), float(math.log(t) / -math.log(r))))
    slope = None
    if len(geo_samples) >= 3:
        xs = np.asarray([s for s, _ in geo_samples])
        ys = np.asarray([s * r for s, r in geo_samples])  # log tau
        slope = float(np.polyfit(xs, ys, 1)[0])
    geometric = RecurrenceEstimate.from_samples(geo_samples, censored, slope)

    if k_max is None:
        k_max = 24
    sym_samples, sym_censored = [], []
    for k in range(2, k_max + 1):
        if k >= len(w):
            break
        rk = repetition_time(w, k)
        s_k = map_.birkhoff_log_slope(w, k)
        if rk is None:
            sym_censored.append(float(k))
            break
        sym_samples.append((float(k), float(math.log(rk) / s_k)))
    symbolic = (RecurrenceEstimate.from_samples(sym_samples, sym_censored)
                if sym_samples else None)
    return {"geometric": geometric, "symbolic": symbolic}


# ---------------------------------------------------------------------------
# explicit points with prescribed rates
# ---------------------------------------------------------------------------


@dataclass
class ConstructedPoint:
    """Explicit point with prescribed lower/upper recurrence rates."""

    alpha: float
    beta: float
    source: SourceConfig
    ell: EllSequence
    spec: InsertionSpec
    induced_word: Word           # over induced-alphabet ids + marker id
    induced_times: np.ndarray    # return time per induced letter
    block_word: Word             # flattened block-letter stream
    base_word: Word              # branch-symbol stream
    point: float                 # decoded interval midpoint
    marker_word: Word            # the t = n return word used as marker
    identity_checked: list[int]  # stages k with exact induced repetition time
    identity_violations: list[int]
    # (k, measured R at depth S_k t, S_{l_(k-1)} t, S_{l_k} t): the repetition
    # time of the recoded stream at induced-block depth is bracketed by the
    # flattened lengths of l_(k-1) and l_k induced letters (the window pins
    # letters 1..k-1 fully and letter k only partially)
    block_scale_rows: list[tuple[int, int, int, int]]
    rate_estimate: RecurrenceEstimate
    sample: SampledSource

    @property
    def ok(self) -> bool:
        return not self.identity_violations and all(
            lo <= m <= hi for _, m, lo, hi in self.block_scale_rows)


def _marker_word(source: SourceConfig) -> Word:
    """Lexicographically smallest return word with time exactly n."""
    wide = induced_alphabet(source.block_sft,
                            Word([source.base_symbol], source.block_sft.alphabet_size),
                            source.n + 1)
    candidates = [w for w, t in wide.entries if t == source.n]
    if not candidates:
        raise SourceInfeasible(f"no return word of time exactly {source.n}")
    return min(candidates, key=lambda w: tuple(w.symbols))


def construct_E_point(map_: MarkovExpandingMap, alpha: float, beta: float,
                      n: int, horizon: int, seed: int,
                      birkhoff_tolerance: float = 0.05,
                      n0: int = 2, source: SourceConfig | None = None
                      ) -> ConstructedPoint:
    """Point whose recurrence-rate liminf/limsup target (alpha, beta).

    ``horizon`` counts letters of the constructed word over the induced
    alphabet; the underlying branch-symbol stream is roughly
    ``mean_return`` times longer.  Pass ``source`` to reuse survivor
    data across several targets at the same level n.
    """
    if not (0 <= alpha <= beta):
        raise ValueError("need 0 <= alpha <= beta")
    if horizon > 10 ** 7:
        raise ValueError("horizon capped at 1e7 induced letters")
    if source is None:
        source = build_source(map_, n, birkhoff_tolerance)
    elif source.n != n or source.map.n_branches != map_.n_branches:
        raise ValueError("supplied source does not match the map and level")
    scale = source.rate_scale
    a_rate = alpha * scale
    b_rate = beta * scale if not math.isinf(beta) else math.inf
    cap = int(0.9 * horizon)
    K = max(n0 + 3, int(round(cap ** (1.0 / 3.0))) + 4)
    if a_rate > 0:
        K = max(K, int(math.log(cap) / a_rate) + 4)
    ell = build_ell_sequence(a_rate, b_rate, K, n0,
                             value_cap=cap if alpha < beta else None)

    n_induced = len(source.induced)
    spec = InsertionSpec(
        inner_alphabet=tuple(range(n_induced)),
        outer_alphabet=tuple(range(n_induced + 1)),
        marker=n_induced, c=0, c_bar=1)
    need = required_source_length(ell, horizon)
    sample = sample_source_point(source, need + 8, seed)
    g = insert(sample.letters, spec, ell, horizon)

    # exact repetition times at the induced scale
    stages = accessible_stage_range(ell, horizon)
    violations = [k for k in stages if repetition_time(g, k) != ell.value(k)]

    # flatten to block letters and branch symbols
    marker = _marker_word(source)
    words_ext = [w.symbols for w, _ in source.induced.entries] + [marker.symbols]
    times_ext = np.asarray([t for _, t in source.induced.entries] + [source.n])
    g_ids = g.symbols
    times = times_ext[g_ids]
    lengths = times  # each return word contributes exactly t block letters
    starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    total = int(starts[-1] + lengths[-1])
    blocks = np.empty(total, dtype=np.int64)
    for sym_id in np.unique(g_ids):
        wsyms = words_ext[sym_id]
        pos = np.flatnonzero(g_ids == sym_id)
        for j in range(wsyms.size):
            blocks[starts[pos] + j] = wsyms[j]
    block_word = Word(blocks, source.block_sft.alphabet_size)
    base = map_.coding_sft().alphabet_size
    first_of_block = source.block_sft.symbol_codes // base ** (len(source.base_cylinder) - 1)
    base_word = Word(first_of_block[blocks], base)
    point = map_.point_of_word(base_word[:min(len(base_word), 400)])

    # block-scale bracket: R of the recoded stream at depth S_k t lies in
    # [S_{l_(k-1)} t, S_{l_k} t]
    cum = np.concatenate([[0], np.cumsum(times)])
    block_rows = []
    block_bytes = block_word.as_bytes()
    for k in stages:
        if k <= ell.n0:
            continue
        lk, lk_prev = ell.value(k), ell.value(k - 1)
        if lk >= cum.size:
            continue
        depth = int(cum[k])
        hi = int(cum[lk])
        lo = int(cum[lk_prev])
        if hi + depth + 1 > len(block_word) or block_bytes is None:
            continue
        pos = block_bytes.find(block_bytes[:depth], 1)
        if pos == -1:
            continue
        block_rows.append((k, pos, lo, hi))

    # measured induced-scale ratios
    samples = []
    for k in stages:
        rk = repetition_time(g, k)
        if rk is not None:
            samples.append((float(k), float(math.log(rk) / (scale * k))))
    estimate = RecurrenceEstimate.from_samples(samples)

    return ConstructedPoint(
        alpha=alpha, beta=beta, source=source, ell=ell, spec=spec,
        induced_word=g, induced_times=times, block_word=block_word,
        base_word=base_word, point=point, marker_word=marker,
        identity_checked=stages, identity_violations=violations,
        block_scale_rows=block_rows, rate_estimate=estimate, sample=sample)


# ---------------------------------------------------------------------------
# almost-everywhere rate law
# ---------------------------------------------------------------------------


def sample_equilibrium_word(state: EquilibriumState, length: int,
                            rng: np.random.Generator) -> Word:
    """Stationary sample path of the equilibrium chain, as base symbols.

    Vectorized for full shifts with level-1 potentials (the letters are
    then independent); general chains walk sequentially.  States at
    block level n emit their first base symbol.
    """
    P = state.transition_matrix()
    base = state.sft.alphabet_size
    if state.level == 1 and state.support.size == base:
        rows = P.toarray()
        if np.allclose(rows, rows[0], atol=1e-14):
            cum = np.cumsum(rows[0])
            ids = np.searchsorted(cum, rng.random(length) * cum[-1])
            return Word(state.support[ids], base)
    start = np.arange(state.support.size)
    path = _sample_chain(state, start, state.stationary, length, rng)
    support_codes = (state.block_codes[state.support] if state.block_codes is not None
                     else state.support.astype(np.int64))
    first = (support_codes // base ** (state.level - 1)).astype(np.int64)
    return Word(first[path], base)


def ae_rate_experiment(map_: MarkovExpandingMap, phi: Potential,
                       n_points: int, horizon: int, seed: int,
                       r_grid: np.ndarray | None = None,
                       window: int = 60, threads: int = 1) -> dict:
    """Recurrence-rate statistics of equilibrium-typical points.

    Reports the per-point regression slopes of log tau_r against -log r
    together with the entropy/Lyapunov dimension target.  Points get
    independent seed streams and results merge by point index, so the
    thread count never changes the output.
    """
    sft = map_.coding_sft()
    psi = map_.log_slope_potential(1)
    state = equilibrium_state(sft, phi, psi=psi)
    target = state.entropy / state.lyapunov
    if r_grid is None:
        r_grid = 2.0 ** -np.arange(5, 17)
    seq = np.random.SeedSequence(seed)

    def one_point(child) -> tuple[float, float, float, int]:
        rng = np.random.default_rng(child)
        w = sample_equilibrium_word(state, horizon + window, rng)
        est = estimate_recurrence_rate(map_, w, r_grid=r_grid, window=window)
        geo = est["geometric"]
        slope = geo.slope if geo.slope is not None else np.nan
        return slope, geo.lower, geo.upper, len(geo.censored)

    children = seq.spawn(n_points)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_point, children))
    else:
        results = [one_point(child) for child in children]
    slopes = np.asarray([r[0] for r in results], dtype=np.float64)
    lowers = [r[1] for r in results]
    uppers = [r[2] for r in results]
    n_censored = sum(r[3] for r in results)
    return {
        "target": float(target),
        "median": float(np.nanmedian(slopes)),
        "iqr": (float(np.nanpercentile(slopes, 25)), float(np.nanpercentile(slopes, 75))),
        "slopes": slopes,
        "lower_median": float(np.median(lowers)),
        "upper_median": float(np.median(uppers)),
        "censored_scales": int(n_censored),
    }


# ---------------------------------------------------------------------------
# dimension ladder
# ---------------------------------------------------------------------------


def dimension_ladder(map_: MarkovExpandingMap, n_schedule: Sequence[int],
                     birkhoff_tolerance: float = 0.05) -> list[dict]:
    """Pressure gap and source dimension along a schedule of levels n.

    Infeasible levels (no mass on the base cylinder) are reported with a
    note and skipped.
    """
    rows = []
    for n in n_schedule:
        try:
            src = build_source(map_, n, birkhoff_tolerance)
        except SourceInfeasible as exc:
            rows.append({"n": int(n), "feasible": False, "note": str(exc)})
            continue
        rows.append({
            "n": int(n), "feasible": True,
            "pressure_gap": src.pressure_gap,
            "dim_source": src.dim_source,
            "lambda_n": src.lambda_n,
            "nu_A": src.nu_A,
            "full_dimension": src.dimension_target,
        })
    return rows
