"""Piecewise expanding Markov interval maps.

Fully geometric layer: branches, itinerary coding, cylinder intervals,
return times in r-neighborhoods, distortion data, and the two-sided
comparison between metric balls and coding cylinders.

Orbits of piecewise-linear maps are never iterated forward in floating
point (binary expansions shift out of the mantissa within ~53 steps).
Instead a point is represented by its coding word and the orbit value
at time n is read off the decoded interval of the window starting at
position n, which is a vectorized affine pullback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BoundaryOrbit,
    ConfigError,
    DomainError,
    InadmissibleWord,
    NotExpanding,
)
from .sft import SubshiftOfFiniteType
from .thermo import Potential
from .words import Word, repetition_time

_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class Branch:
    """Monotone increasing expanding branch on [lo, hi] onto [img_lo, img_hi]."""

    lo: float
    hi: float
    img_lo: float
    img_hi: float
    f: Callable[[float], float]
    df: Callable[[float], float]
    inv: Callable[[float], float]
    linear: bool

    @property
    def slope(self) -> float:
        return (self.img_hi - self.img_lo) / (self.hi - self.lo)


def _linear_branch(lo: float, hi: float, img_lo: float, img_hi: float) -> Branch:
    s = (img_hi - img_lo) / (hi - lo)

    def f(x, lo=lo, img_lo=img_lo, s=s):
        return img_lo + s * (x - lo)

    def df(x, s=s):
        return s

    def inv(y, lo=lo, img_lo=img_lo, s=s):
        return lo + (y - img_lo) / s

    return Branch(lo, hi, img_lo, img_hi, f, df, inv, linear=True)


def _nonlinear_branch(lo, hi, f, df) -> Branch:
    img_lo, img_hi = f(lo), f(hi)
    if img_hi <= img_lo:
        raise ConfigError("branches must be increasing")

    def inv(y, lo=lo, hi=hi, f=f):
        if y <= f(lo):
            return lo
        if y >= f(hi):
            return hi
        return brentq(lambda x: f(x) - y, lo, hi, xtol=1e-15, rtol=1e-15)

    return Branch(lo, hi, img_lo, img_hi, f, df, inv, linear=False)


class MarkovExpandingMap:
    """Expanding interval map with full-branch or Markov branch structure.

    Branch images must be unions of branch domains (up to float
    tolerance); the coding subshift has a transition i -> j whenever
    the image of branch i covers the domain of branch j.
    """

    def __init__(self, branches: Sequence[Branch], name: str = "map"):
        self.branches = tuple(branches)
        self.name = name
        if not self.branches:
            raise ConfigError("need at least one branch")
        order = sorted(range(len(self.branches)), key=lambda i: self.branches[i].lo)
        self.branches = tuple(self.branches[i] for i in order)
        for b0, b1 in zip(self.branches, self.branches[1:]):
            if b1.lo < b0.hi - _EDGE_TOL:
                raise ConfigError("branch domains overlap")
        slopes = []
        for b in self.branches:
            grid = np.linspace(b.lo, b.hi, 64)
            dvals = np.asarray([b.df(float(x)) for x in grid])
            if dvals.min() <= 1.0:
                raise NotExpanding(f"branch on [{b.lo}, {b.hi}] has |Df| <= 1")
            slopes.append(float(dvals.min()))
        self.min_slope = min(slopes)
        self._transitions = self._markov_transitions()
        self._sft = SubshiftOfFiniteType(self._transitions)
        self.is_full_branch = all(
            b.img_lo <= self.branches[0].lo + _EDGE_TOL
            and b.img_hi >= self.branches[-1].hi - _EDGE_TOL
            for b in self.branches)

    def _markov_transitions(self) -> np.ndarray:
        nb = len(self.branches)
        T = np.zeros((nb, nb), dtype=np.int8)
        for i, bi in enumerate(self.branches):
            for j, bj in enumerate(self.branches):
                cover_lo = bi.img_lo <= bj.lo + _EDGE_TOL
                cover_hi = bj.hi <= bi.img_hi + _EDGE_TOL
                if cover_lo and cover_hi:
                    T[i, j] = 1
                    continue
                # a partial overlap of image and domain breaks the Markov property
                inter = min(bi.img_hi, bj.hi) - max(bi.img_lo, bj.lo)
                if inter > 1e-9:
                    raise ConfigError(
                        f"image of branch {i} overlaps domain of branch {j} "
                        "only partially (Markov property fails)")
        return T

    # -- basic structure -------------------------------------------------------

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    def coding_sft(self) -> SubshiftOfFiniteType:
        return self._sft

    def branch_of(self, x: float) -> int:
        """Branch whose closed domain contains x.

        Endpoints shared by two branches have ambiguous itineraries and
        raise ``BoundaryOrbit``; outer endpoints belong to their branch.
        """
        owners = [i for i, b in enumerate(self.branches)
                  if b.lo - _EDGE_TOL <= x <= b.hi + _EDGE_TOL]
        if len(owners) == 1:
            return owners[0]
        if len(owners) >= 2:
            raise BoundaryOrbit(f"point {x!r} sits on a shared partition endpoint")
        raise DomainError(f"point {x!r} escapes the branch domains")

    def apply(self, x: float) -> float:
        return self.branches[self.branch_of(x)].f(x)

    def log_slopes(self) -> np.ndarray:
        """Per-branch log slope for piecewise-linear maps."""
        if not all(b.linear for b in self.branches):
            raise ConfigError("log_slopes is only exact for piecewise-linear maps")
        return np.log([b.slope for b in self.branches])

    # -- coding ----------------------------------------------------------------

    def code(self, x: float, depth: int) -> Word:
        """Itinerary of x for `depth` steps; floating-point iteration."""
        syms = np.empty(depth, dtype=np.int64)
        for t in range(depth):
            i = self.branch_of(x)
            syms[t] = i
            x = self.branches[i].f(x)
        return Word(syms, self.n_branches)

    def decode(self, w: Word) -> tuple[float, float]:
        """Closed interval of points whose itinerary starts with ``w``."""
        if not self._sft.admits(w):
            raise InadmissibleWord("itinerary violates the Markov transitions")
        b_last = self.branches[w[len(w) - 1]]
        lo, hi = b_last.lo, b_last.hi
        for t in range(len(w) - 2, -1, -1):
            b = self.branches[w[t]]
            lo, hi = b.inv(max(lo, b.img_lo)), b.inv(min(hi, b.img_hi))
        return float(lo), float(hi)

    def point_of_word(self, w: Word) -> float:
        lo, hi = self.decode(w)
        return 0.5 * (lo + hi)

    # -- vectorized orbit from a coding word ------------------------------------

    def orbit_values(self, w: Word, window: int = 60) -> np.ndarray:
        """Approximate orbit x, f(x), f^2(x), ... for the point coded by ``w``.

        Entry n is the midpoint of the decoded interval of the window
        w[n : n + window]; the approximation error is the cylinder
        length, at most min_slope**(-window).  Returns
        ``len(w) - window + 1`` values.
        """
        window = min(window, len(w))
        arr = w.symbols
        n_out = len(w) - window + 1
        if n_out <= 0:
            raise ValueError("word shorter than the decoding window")
        if all(b.linear for b in self.branches):
            inv_scale = np.asarray([1.0 / b.slope for b in self.branches])
            inv_off_lo = np.asarray([b.lo - b.img_lo / b.slope for b in self.branches])
            los = np.asarray([b.lo for b in self.branches])
            his = np.asarray([b.hi for b in self.branches])
            lo = los[arr[window - 1:window - 1 + n_out]].astype(np.float64)
            hi = his[arr[window - 1:window - 1 + n_out]].astype(np.float64)
            for t in range(window - 2, -1, -1):
                sym = arr[t:t + n_out]
                ks = inv_scale[sym]
                off = inv_off_lo[sym]
                lo = lo * ks + off
                hi = hi * ks + off
            return 0.5 * (lo + hi)
        # nonlinear: decode each window head separately (slow path)
        out = np.empty(n_out)
        for n in range(n_out):
            out[n] = self.point_of_word(w[n:n + window])
        return out

    def birkhoff_log_slope(self, w: Word, k: int) -> float:
        """Birkhoff sum of log|Df| along the first k symbols of ``w``.

        Exact branch-slope sum for piecewise-linear maps; midpoint
        evaluation of the derivative otherwise.
        """
        if k == 0:
            return 0.0
        if k > len(w):
            raise ValueError("word too short for the requested Birkhoff sum")
        if all(b.linear for b in self.branches):
            return float(self.log_slopes()[w.symbols[:k]].sum())
        total = 0.0
        for t in range(k):
            x = self.point_of_word(w[t:min(len(w), t + 40)])
            total += math.log(abs(self.branches[w[t]].df(x)))
        return total

    def log_slope_potential(self, level: int = 1) -> Potential:
        """Locally constant approximation of log|Df| on level-n cylinders."""
        sft = self._sft

        def value(cyl: Word) -> float:
            lo, hi = self.decode(cyl)
            mid = 0.5 * (lo + hi)
            b = self.branches[cyl[0]]
            x = min(max(mid, b.lo), b.hi)
            return math.log(abs(b.df(x)))

        return Potential.from_function(sft, level, value)

    def __repr__(self) -> str:
        return f"MarkovExpandingMap({self.name!r}, branches={self.n_branches})"


# ---------------------------------------------------------------------------
# gallery
# ---------------------------------------------------------------------------


def linear_markov_map(domains: Sequence[tuple[float, float]],
                      images: Sequence[tuple[float, float]] | None = None,
                      name: str = "linear") -> MarkovExpandingMap:
    if images is None:
        hull = (min(d[0] for d in domains), max(d[1] for d in domains))
        images = [hull] * len(domains)
    branches = [_linear_branch(d[0], d[1], i[0], i[1]) for d, i in zip(domains, images)]
    return MarkovExpandingMap(branches, name=name)


def doubling_map() -> MarkovExpandingMap:
    return linear_markov_map([(0.0, 0.5), (0.5, 1.0)], name="doubling")


def cantor_map() -> MarkovExpandingMap:
    """Two slope-3 branches; the repeller is the middle-third Cantor set."""
    return linear_markov_map([(0.0, 1.0 / 3.0), (2.0 / 3.0, 1.0)], name="cantor3")


def two_slopes_map() -> MarkovExpandingMap:
    """Branches onto [0,1] with slopes 2 and 4; points in (3/4, 1] escape.

    The repeller dimension solves 2^-s + 4^-s = 1.
    """
    return linear_markov_map([(0.0, 0.5), (0.5, 0.75)],
                             images=[(0.0, 1.0), (0.0, 1.0)],
                             name="slopes24")


def golden_matching_map() -> MarkovExpandingMap:
    """Golden-mean coded map with both slopes equal to the golden ratio."""
    phi = 0.5 * (1.0 + math.sqrt(5.0))
    cut = 1.0 / phi
    return linear_markov_map([(0.0, cut), (cut, 1.0)],
                             images=[(0.0, 1.0), (0.0, cut)],
                             name="golden_matching")


def perturbed_doubling_map(eps: float = 0.05) -> MarkovExpandingMap:
    """Nonlinear full-branch perturbation of the doubling map."""
    if not 0 <= eps < 1.0 / (4.0 * math.pi):
        raise ConfigError("eps must lie in [0, 1/(4 pi)) to stay expanding")

    def f0(x, eps=eps):
        return 2.0 * x + eps * math.sin(4.0 * math.pi * x)

    def f1(x, eps=eps):
        return 2.0 * x - 1.0 + eps * math.sin(4.0 * math.pi * x)

    def df(x, eps=eps):
        return 2.0 + 4.0 * math.pi * eps * math.cos(4.0 * math.pi * x)

    return MarkovExpandingMap(
        [_nonlinear_branch(0.0, 0.5, f0, df), _nonlinear_branch(0.5, 1.0, f1, df)],
        name=f"perturbed_doubling(eps={eps})")


MAP_GALLERY = {
    "doubling": doubling_map,
    "cantor3": cantor_map,
    "slopes24": two_slopes_map,
    "golden_matching": golden_matching_map,
    "perturbed_doubling": perturbed_doubling_map,
}


def map_from_config(cfg: dict) -> MarkovExpandingMap:
    """Build a map from a parsed config dictionary (see docs for the format)."""
    spec = cfg.get("map", cfg)
    family = spec.get("family")
    if family is None:
        raise ConfigError("map config needs a 'family' key")
    if family == "linear":
        domains = spec.get("branches")
        if not domains:
            raise ConfigError("linear map config needs 'branches' intervals")
        domains = [tuple(_num(v) for v in pair) for pair in domains]
        images = spec.get("images")
        if images is not None:
            images = [tuple(_num(v) for v in pair) for pair in images]
        return linear_markov_map(domains, images, name=spec.get("name", "linear"))
    if family in MAP_GALLERY:
        kwargs = {k: _num(v) for k, v in spec.items()
                  if k not in ("family", "name", "branches", "images")}
        return MAP_GALLERY[family](**kwargs)
    raise ConfigError(f"unknown map family {family!r}")


def _num(v) -> float:
    """Accept floats or rational strings like '1/3' in config files."""
    if isinstance(v, str):
        if "/" in v:
            a, b = v.split("/")
            return float(a) / float(b)
        return float(v)
    return float(v)


# ---------------------------------------------------------------------------
# return times in r-neighborhoods
# ---------------------------------------------------------------------------


def tau_r(map_: MarkovExpandingMap, x: float, r: float, n_max: int) -> int | None:
    """First n <= n_max with |f^n(x) - x| < r; None when censored.

    Plain floating-point iteration; prefer :func:`tau_r_from_word` for
    piecewise-linear maps, where float orbits degenerate.
    """
    if r <= 0 or n_max < 1:
        raise ValueError("need r > 0 and n_max >= 1")
    y = x
    for n in range(1, n_max + 1):
        y = map_.apply(y)
        if abs(y - x) < r:
            return n
    return None


def tau_r_from_orbit(values: np.ndarray, r: float) -> int | None:
    """First return of a precomputed orbit to within r of its start."""
    close = np.abs(values[1:] - values[0]) < r
    if close.size == 0 or not close.any():
        return None
    return int(np.argmax(close)) + 1


def tau_r_from_word(map_: MarkovExpandingMap, w: Word, r: float,
                    window: int = 60) -> int | None:
    values = map_.orbit_values(w, window=window)
    return tau_r_from_orbit(values, r)


def tau_table_from_orbit(values: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """tau_r for a grid of radii; -1 marks censored scales.

    Uses the running minimum of |f^n x - x|, so the whole grid costs
    one pass over the orbit.
    """
    d = np.abs(values[1:] - values[0])
    running = np.minimum.accumulate(d)
    out = np.empty(len(radii), dtype=np.int64)
    for i, r in enumerate(radii):
        hits = running < r
        if not hits.any():
            out[i] = -1
        else:
            out[i] = int(np.argmax(hits)) + 1
    return out


# ---------------------------------------------------------------------------
# distortion data and the ball/cylinder comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistortionData:
    D: float
    delta: float
    kappa: float
    full_branch_adjacent: bool


def _extent_arrays(map_: MarkovExpandingMap) -> tuple[np.ndarray, np.ndarray]:
    """Per-branch extent [m_b, M_b] of the repeller inside each branch domain.

    Fixed point of m_b = inv_b(min over successors of m_j), iterated to
    float precision.
    """
    nb = map_.n_branches
    T = map_.coding_sft().dense()
    m = np.asarray([b.lo for b in map_.branches], dtype=np.float64)
    M = np.asarray([b.hi for b in map_.branches], dtype=np.float64)
    for _ in range(200):
        succ_min = np.asarray([m[T[i]].min() for i in range(nb)])
        succ_max = np.asarray([M[T[i]].max() for i in range(nb)])
        m_new = np.asarray([map_.branches[i].inv(max(succ_min[i], map_.branches[i].img_lo))
                            for i in range(nb)])
        M_new = np.asarray([map_.branches[i].inv(min(succ_max[i], map_.branches[i].img_hi))
                            for i in range(nb)])
        if np.allclose(m_new, m, atol=1e-16, rtol=0) and np.allclose(M_new, M, atol=1e-16, rtol=0):
            m, M = m_new, M_new
            break
        m, M = m_new, M_new
    return m, M


def cylinder_extents(map_: MarkovExpandingMap, level: int) -> dict[bytes, tuple[float, float]]:
    """Repeller extent [min, max] inside every admissible level-cylinder."""
    sft = map_.coding_sft()
    m, M = _extent_arrays(map_)
    current: dict[tuple[int, ...], tuple[float, float]] = {
        (i,): (float(m[i]), float(M[i])) for i in range(map_.n_branches)}
    for _ in range(level - 1):
        nxt: dict[tuple[int, ...], tuple[float, float]] = {}
        for word, (lo, hi) in current.items():
            for i in range(map_.n_branches):
                if sft.allows(i, word[0]):
                    b = map_.branches[i]
                    nxt[(i,) + word] = (b.inv(lo), b.inv(hi))
        current = nxt
    return {np.asarray(k, dtype=np.int64).tobytes(): v for k, v in current.items()}


class ExtentTable:
    """Sorted cylinder extents with log-time nearest-outside queries.

    Level cylinders of a Markov interval map carry pairwise disjoint
    repeller extents, so sorting by left endpoint makes the nearest
    repeller point outside a given cylinder a neighbor lookup.
    """

    def __init__(self, extents: dict[bytes, tuple[float, float]]):
        self.keys = list(extents.keys())
        lo = np.asarray([extents[k][0] for k in self.keys])
        hi = np.asarray([extents[k][1] for k in self.keys])
        order = np.argsort(lo)
        self.lo = lo[order]
        self.hi = hi[order]
        inv = np.empty_like(order)
        inv[order] = np.arange(order.size)
        self._pos = {k: int(inv[i]) for i, k in enumerate(self.keys)}

    def interval(self, key: bytes) -> tuple[float, float]:
        i = self._pos[key]
        return float(self.lo[i]), float(self.hi[i])

    def nearest_outside(self, x: float, key: bytes) -> float:
        i = self._pos[key]
        best = math.inf
        if i > 0:
            best = min(best, x - float(self.hi[i - 1]))
        if i + 1 < self.lo.size:
            best = min(best, float(self.lo[i + 1]) - x)
        return best

    @classmethod
    def build(cls, map_: MarkovExpandingMap, level: int) -> "ExtentTable":
        return cls(cylinder_extents(map_, level))


def distortion_constants(map_: MarkovExpandingMap, probe_depth: int = 8) -> DistortionData:
    """Distortion constant D, level-1 image gap delta, and kappa = delta / D.

    For adjacent full branches (delta = 0) kappa falls back to half the
    minimal level-2 cylinder length, and the data is flagged.
    """
    if probe_depth < 1:
        raise ValueError("probe_depth must be >= 1")
    # D: max ratio of |Df^n| over sampled points of the n-cylinders
    D = 1.0
    if not all(b.linear for b in map_.branches):
        sft = map_.coding_sft()
        for n in range(1, probe_depth + 1):
            for cyl in sft.enumerate_blocks(n):
                lo, hi = map_.decode(cyl)
                derivs = []
                for x in np.linspace(lo, hi, 5):
                    prod, y = 1.0, float(x)
                    for t in range(len(cyl)):
                        b = map_.branches[cyl[t]]
                        y = min(max(y, b.lo), b.hi)
                        prod *= abs(b.df(y))
                        y = b.f(y)
                    derivs.append(prod)
                D = max(D, max(derivs) / min(derivs))
    # delta: minimal gap between level-1 extents
    m, M = _extent_arrays(map_)
    order = np.argsort(m)
    gaps = [float(m[order[i + 1]] - M[order[i]]) for i in range(len(order) - 1)]
    delta = min(gaps) if gaps else 0.0
    adjacent = delta <= _EDGE_TOL
    if adjacent:
        lengths = [hi - lo for lo, hi in
                   (map_.decode(wd) for wd in map_.coding_sft().enumerate_blocks(2))]
        kappa = 0.5 * min(lengths)
    else:
        kappa = delta / D
    return DistortionData(D=float(D), delta=float(delta), kappa=float(kappa),
                          full_branch_adjacent=bool(adjacent))


@dataclass(frozen=True)
class SandwichReport:
    ok: bool
    detail: dict


def ball_cylinder_comparison(map_: MarkovExpandingMap, w: Word, n: int,
                             dist: DistortionData,
                             extents: "dict | ExtentTable | None" = None
                             ) -> SandwichReport:
    """Check B(x, kappa/|Df^n|) inside cylinder inside B(x, |Df^n|^-1 / kappa).

    ``w`` codes the point (x is the decoded midpoint of the full word);
    the inner inclusion is certified by comparing against the nearest
    repeller point outside the n-cylinder.
    """
    if n >= len(w):
        raise ValueError("word too short for this cylinder depth")
    x = map_.point_of_word(w)
    key = w.symbols[:n].tobytes()
    if extents is None:
        extents = ExtentTable.build(map_, n)
    elif isinstance(extents, dict):
        extents = ExtentTable(extents)
    lo, hi = extents.interval(key)
    deriv = math.exp(map_.birkhoff_log_slope(w, n))
    r_in = dist.kappa / deriv
    r_out = 1.0 / (dist.kappa * deriv)
    outside = extents.nearest_outside(x, key)
    inner_ok = outside >= r_in
    outer_ok = max(x - lo, hi - x) <= r_out
    return SandwichReport(
        ok=bool(inner_ok and outer_ok),
        detail={"x": x, "n": n, "r_in": r_in, "r_out": r_out,
                "nearest_outside": outside, "cyl": (lo, hi),
                "inner_ok": bool(inner_ok), "outer_ok": bool(outer_ok)})


def recurrence_sandwich(map_: MarkovExpandingMap, w: Word, k: int,
                        dist: DistortionData, window: int = 60,
                        orbit: np.ndarray | None = None) -> SandwichReport:
    """tau at radius kappa e^{-S_k} >= R_k >= tau at radius e^{-S_k} / kappa.

    Radii shrink like the cylinder scale exp(-S_k log|Df|); both return
    times are measured by brute-force scans (symbolic for R_k, orbit
    for tau).
    """
    s_k = map_.birkhoff_log_slope(w, k)
    r_small = dist.kappa * math.exp(-s_k)
    r_big = math.exp(-s_k) / dist.kappa
    rk = repetition_time(w, k)
    if orbit is None:
        orbit = map_.orbit_values(w, window=window)
    t_small = tau_r_from_orbit(orbit, r_small)
    t_big = tau_r_from_orbit(orbit, r_big)
    censored = rk is None or t_small is None or t_big is None
    ok = (not censored) and (t_small >= rk >= t_big)
    return SandwichReport(
        ok=bool(ok),
        detail={"k": k, "R_k": rk, "tau_small": t_small, "tau_big": t_big,
                "r_small": r_small, "r_big": r_big, "censored": censored})


# ---------------------------------------------------------------------------
# eventually periodic itineraries (boundary coding)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ItineraryCode:
    """Eventually periodic itinerary head . cycle cycle cycle ..."""

    head: Word
    cycle: Word

    def prefix(self, n: int) -> Word:
        reps = max(0, -(-(n - len(self.head)) // max(len(self.cycle), 1)))
        syms = np.concatenate([self.head.symbols] + [self.cycle.symbols] * reps) \
            if reps else self.head.symbols
        return Word(syms[:n], max(self.head.alphabet_size, self.cycle.alphabet_size))


def boundary_itineraries(map_: MarkovExpandingMap, max_steps: int = 64
                         ) -> list[ItineraryCode]:
    """Codes of partition-endpoint orbits, one per one-sided limit.

    Endpoints are iterated with the coding read from inside the
    adjacent branch; eventual periodicity is detected by revisiting a
    (rounded) point.  Non-Markov float noise raises ``ConfigError``.
    """
    out = []
    nb = map_.n_branches
    for i, b in enumerate(map_.branches):
        for x0, side in ((b.lo, i), (b.hi, i)):
            word: list[int] = []
            seen: dict[tuple[int, int], int] = {}
            x = x0
            sym = side
            ok = False
            for step in range(max_steps):
                key = (sym, int(round(x * 2 ** 40)))
                if key in seen:
                    j = seen[key]
                    head, cycle = word[:j], word[j:]
                    out.append(ItineraryCode(Word(head, nb) if head else Word([], nb),
                                             Word(cycle, nb)))
                    ok = True
                    break
                seen[key] = step
                word.append(sym)
                x = map_.branches[sym].f(x)
                # choose the branch whose closed domain contains x; prefer left
                nxt = None
                for jj, bb in enumerate(map_.branches):
                    if bb.lo - 1e-9 <= x <= bb.hi + 1e-9:
                        nxt = jj
                        break
                if nxt is None:
                    ok = True  # endpoint escapes; finite head only, drop it
                    break
                x = min(max(x, map_.branches[nxt].lo), map_.branches[nxt].hi)
                sym = nxt
            if not ok:
                raise ConfigError("endpoint orbit did not close up; not Markov?")
    # dedupe
    uniq = []
    for code in out:
        if code.cycle is not None and len(code.cycle) and code not in uniq:
            uniq.append(code)
    return uniq
