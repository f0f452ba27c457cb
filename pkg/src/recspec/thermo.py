"""Transfer-operator thermodynamics on subshifts of finite type.

Pressure is the log of the spectral radius of the weighted transition
matrix ``M[i, j] = exp(phi(i)) T[i, j]``; equilibrium states come from
its left/right Perron eigenvectors via the standard Markov-measure
construction, which is exact for locally constant potentials.  A
potential at cylinder level n is handled by recoding the shift on
n-blocks, where it becomes a per-symbol weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, EmptySurvivor, ZeroMassCylinder
from .sft import SubshiftOfFiniteType, induced_alphabet, remove_hole, word_to_code
from .words import Word

_EIG_TOL = 1e-13
_EIG_MAXITER = 100_000
_DENSE_FALLBACK = 2000


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------


class Potential:
    """Locally constant potential: one real value per admissible n-cylinder."""

    def __init__(self, base_alphabet_size: int, level: int,
                 codes: np.ndarray, values: np.ndarray):
        codes = np.asarray(codes, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if codes.shape != values.shape or codes.ndim != 1:
            raise ValueError("codes and values must be aligned 1-d arrays")
        if codes.size and not np.all(np.diff(codes) > 0):
            order = np.argsort(codes)
            codes, values = codes[order], values[order]
        self.base = int(base_alphabet_size)
        self.level = int(level)
        self.codes = codes
        self.values = values

    @classmethod
    def constant(cls, sft: SubshiftOfFiniteType, value: float) -> "Potential":
        n = sft.alphabet_size
        return cls(n, 1, np.arange(n), np.full(n, float(value)))

    @classmethod
    def from_symbol_values(cls, sft: SubshiftOfFiniteType,
                           values: Sequence[float]) -> "Potential":
        vals = np.asarray(values, dtype=np.float64)
        if vals.size != sft.alphabet_size:
            raise ValueError("one value per symbol required")
        return cls(sft.alphabet_size, 1, np.arange(sft.alphabet_size), vals)

    @classmethod
    def from_function(cls, sft: SubshiftOfFiniteType, level: int,
                      fn: Callable[[Word], float]) -> "Potential":
        from .sft import code_to_word
        codes = sft.admissible_block_codes(level)
        vals = np.asarray([fn(code_to_word(int(c), sft.alphabet_size, level))
                           for c in codes])
        return cls(sft.alphabet_size, level, codes, vals)

    def value_of_code(self, code: int) -> float:
        pos = np.searchsorted(self.codes, code)
        if pos >= self.codes.size or self.codes[pos] != code:
            raise KeyError(f"cylinder code {code} not in potential domain")
        return float(self.values[pos])

    def value_of(self, w: Word) -> float:
        if len(w) != self.level:
            raise ValueError("word length must equal the potential level")
        return self.value_of_code(word_to_code(w, self.base))

    def scaled(self, factor: float) -> "Potential":
        return Potential(self.base, self.level, self.codes, factor * self.values)

    def shifted(self, offset: float) -> "Potential":
        return Potential(self.base, self.level, self.codes, self.values + offset)

    def block_values(self, block_codes: np.ndarray, block_length: int) -> np.ndarray:
        """Values on longer blocks: each block is weighted by its level-prefix."""
        if block_length < self.level:
            raise ConfigError("blocks shorter than the potential level")
        prefix = block_codes // (self.base ** (block_length - self.level))
        pos = np.minimum(np.searchsorted(self.codes, prefix), self.codes.size - 1)
        if np.any(self.codes[pos] != prefix):
            raise KeyError("block prefix outside the potential domain")
        return self.values[pos]


# ---------------------------------------------------------------------------
# Perron eigendata
# ---------------------------------------------------------------------------


def _perron_scalar_irreducible(M: sp.csr_matrix) -> float:
    """Spectral radius of an irreducible nonnegative matrix.

    Power iteration on M + I with Collatz-Wielandt bounds; the shift
    makes the iteration aperiodic, so the bounds close geometrically.
    """
    n = M.shape[0]
    if n == 1:
        return float(M[0, 0])
    x = np.full(n, 1.0 / n)
    lo = hi = 0.0
    for _ in range(_EIG_MAXITER):
        y = M @ x + x
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= _EIG_TOL * hi:
            return 0.5 * (lo + hi) - 1.0
        x = y / y.sum()
    if n <= _DENSE_FALLBACK:
        return float(np.abs(np.linalg.eigvals(M.toarray())).max())
    return 0.5 * (lo + hi) - 1.0  # pragma: no cover - best available estimate


def _perron_vector(M: sp.csr_matrix, rho: float) -> np.ndarray:
    """Positive eigenvector of an irreducible nonnegative matrix at its radius."""
    n = M.shape[0]
    if n == 1:
        return np.ones(1)
    x = np.full(n, 1.0 / n)
    for _ in range(_EIG_MAXITER):
        y = M @ x + x
        y /= y.sum()
        if np.max(np.abs(y - x)) <= 1e-15 + _EIG_TOL * float(np.max(y)):
            return y
        x = y
    if n <= _DENSE_FALLBACK:  # pragma: no cover - periodicity is handled by +I
        vals, vecs = np.linalg.eig(M.toarray())
        k = int(np.argmin(np.abs(vals - rho)))
        v = np.abs(np.real(vecs[:, k]))
        return v / v.sum()
    return x  # pragma: no cover


def _strong_components(M: sp.spmatrix) -> tuple[int, np.ndarray]:
    return sp.csgraph.connected_components(M, directed=True, connection="strong")


def spectral_radius(M: sp.spmatrix) -> float:
    """Spectral radius of a nonnegative matrix via its strongly connected parts."""
    M = sp.csr_matrix(M)
    n_comp, labels = _strong_components(M)
    best = 0.0
    for comp in range(n_comp):
        idx = np.flatnonzero(labels == comp)
        sub = M[idx][:, idx]
        if sub.nnz == 0:
            continue
        best = max(best, _perron_scalar_irreducible(sub))
    return best


def dominant_component(M: sp.spmatrix) -> tuple[np.ndarray, float]:
    """Indices of the strongly connected component with the largest radius.

    Ties go to the component containing the smallest state index, which
    keeps results deterministic.
    """
    M = sp.csr_matrix(M)
    n_comp, labels = _strong_components(M)
    best_idx, best_rho = None, -np.inf
    comps = sorted(range(n_comp), key=lambda c: int(np.flatnonzero(labels == c)[0]))
    for comp in comps:
        idx = np.flatnonzero(labels == comp)
        sub = M[idx][:, idx]
        if sub.nnz == 0:
            continue
        rho = _perron_scalar_irreducible(sub)
        if rho > best_rho * (1 + 1e-12):
            best_idx, best_rho = idx, rho
    if best_idx is None:
        raise EmptySurvivor("no admissible loop: spectral radius is zero")
    return best_idx, float(best_rho)


# ---------------------------------------------------------------------------
# pressure
# ---------------------------------------------------------------------------


def _weighted_working_matrix(sft: SubshiftOfFiniteType, phi: Potential
                             ) -> tuple[sp.csr_matrix, np.ndarray | None, np.ndarray]:
    """(weighted matrix, block codes or None, per-state potential values)."""
    if phi.level == 1:
        if phi.codes.size != sft.alphabet_size:
            raise ConfigError("potential must cover every symbol")
        vals = phi.values
        M = sft.transitions.multiply(np.exp(vals)[:, None]).tocsr()
        return M, None, vals
    codes = sft.admissible_block_codes(phi.level)
    vals = phi.block_values(codes, phi.level)
    T = sft.block_transition_matrix(codes, phi.level)
    M = T.multiply(np.exp(vals)[:, None]).tocsr()
    return M, codes, vals


def pressure(sft: SubshiftOfFiniteType, phi: Potential) -> float:
    """Topological pressure: log of the dominant weighted eigenvalue."""
    M, _, _ = _weighted_working_matrix(sft, phi)
    rho = spectral_radius(M)
    if rho <= 0.0:
        raise EmptySurvivor("no admissible loop: pressure is -infinity")
    return float(np.log(rho))


# ---------------------------------------------------------------------------
# equilibrium states
# ---------------------------------------------------------------------------


class EquilibriumState:
    """Gibbs-Markov equilibrium state of a locally constant potential.

    Lives on the dominant irreducible component of the weighted matrix;
    ``support`` holds those state indices inside the working (possibly
    block-recoded) shift.  Cylinder masses follow the exact formula
    mass(Z) = v[z_1] u[z_k] exp(phi(z_1) + ... + phi(z_{k-1})) rho^-(k-1).
    """

    def __init__(self, sft: SubshiftOfFiniteType, phi: Potential, pressure: float,
                 right_eigvec: np.ndarray, left_eigvec: np.ndarray,
                 support: np.ndarray, block_codes: np.ndarray | None,
                 state_values: np.ndarray, weighted_submatrix: sp.csr_matrix,
                 lyapunov: float | None = None):
        self.sft = sft
        self.phi = phi
        self.pressure = float(pressure)
        self.right_eigvec = right_eigvec
        self.left_eigvec = left_eigvec
        self.support = support
        self.level = phi.level
        self.block_codes = block_codes
        self.state_values = state_values
        self.lyapunov = lyapunov
        self._Msub = weighted_submatrix
        p = right_eigvec * left_eigvec
        self.stationary = p / p.sum()
        self._P = None
        self._entropy = None
        self._support_codes = (block_codes[support] if block_codes is not None
                               else support.astype(np.int64))

    def transition_matrix(self) -> sp.csr_matrix:
        """Markov kernel P[i, j] = M[i, j] u_j / (rho u_i) on the support."""
        if self._P is None:
            u = self.right_eigvec
            rho = np.exp(self.pressure)
            D_inv = sp.diags(1.0 / (rho * u))
            self._P = (D_inv @ self._Msub @ sp.diags(u)).tocsr()
        return self._P

    @property
    def entropy(self) -> float:
        """Entropy in nats, computed directly from the Markov kernel."""
        if self._entropy is None:
            P = self.transition_matrix().tocoo()
            contrib = np.where(P.data > 0, P.data * np.log(P.data), 0.0)
            self._entropy = float(-(self.stationary[P.row] * contrib).sum())
        return self._entropy

    def integrate(self, pot: Potential) -> float:
        """Expectation of a locally constant function under the state."""
        vals = pot.block_values(self._support_codes, max(self.level, 1))
        return float(self.stationary @ vals)

    def state_index_of_code(self, code: int) -> int | None:
        codes = self._support_codes
        pos = int(np.searchsorted(codes, code))
        if pos < codes.size and codes[pos] == code:
            return pos
        return None

    def cylinder_mass(self, w: Word) -> float:
        """Mass of the cylinder of a word over the shift's alphabet.

        Words shorter than the working block length are summed over
        their admissible block extensions (a contiguous code range).
        """
        base = self.sft.alphabet_size
        m = len(w)
        n = self.level
        if m == 0:
            return 1.0
        if m < n:
            codes = self._support_codes
            lo = word_to_code(w, base) * base ** (n - m)
            hi = lo + base ** (n - m)
            i0, i1 = np.searchsorted(codes, [lo, hi])
            return float(self.stationary[i0:i1].sum())
        arr = w.symbols
        n_states = m - n + 1
        idxs = np.empty(n_states, dtype=np.int64)
        c = word_to_code(Word(arr[:n], base), base)
        mod = base ** (n - 1)
        for t in range(n_states):
            if t > 0:
                c = (c % mod) * base + int(arr[n - 1 + t])
            i = self.state_index_of_code(int(c))
            if i is None:
                return 0.0
            idxs[t] = i
        P = self.transition_matrix()
        for a, b in zip(idxs[:-1], idxs[1:]):
            if P[a, b] == 0:
                return 0.0
        u, v = self.right_eigvec, self.left_eigvec
        log_mass = (np.log(v[idxs[0]]) + np.log(u[idxs[-1]])
                    + self.state_values[idxs[:-1]].sum()
                    - (n_states - 1) * self.pressure)
        return float(np.exp(log_mass))

    def gibbs_constant(self) -> float:
        """c0 with 1/c0 <= mass(Z) exp(k P - phi_k) <= c0 over all cylinders."""
        u, v = self.right_eigvec, self.left_eigvec
        rho = np.exp(self.pressure)
        tail = u * np.exp(-self.state_values)
        q_min = float(v.min() * tail.min() * rho)
        q_max = float(v.max() * tail.max() * rho)
        return max(q_max, 1.0 / q_min)

    def __repr__(self) -> str:
        return (f"EquilibriumState(states={self.support.size}, "
                f"pressure={self.pressure:.6g}, entropy={self.entropy:.6g})")


def equilibrium_state(sft: SubshiftOfFiniteType, phi: Potential,
                      psi: Potential | None = None) -> EquilibriumState:
    """Equilibrium state of ``phi``; optionally integrates ``psi`` (Lyapunov)."""
    M, codes, vals = _weighted_working_matrix(sft, phi)
    idx, rho = dominant_component(M)
    Msub = M[idx][:, idx].tocsr()
    u = _perron_vector(Msub, rho)
    v = _perron_vector(Msub.T.tocsr(), rho)
    v = v / float(v @ u)
    state = EquilibriumState(
        sft=sft, phi=phi, pressure=float(np.log(rho)),
        right_eigvec=u, left_eigvec=v,
        support=idx.astype(np.int64), block_codes=codes,
        state_values=vals[idx], weighted_submatrix=Msub,
    )
    if psi is not None:
        state.lyapunov = state.integrate(psi)
    return state


# ---------------------------------------------------------------------------
# holes
# ---------------------------------------------------------------------------


def restrict_potential(phi: Potential, survivor: SubshiftOfFiniteType) -> Potential:
    """Push a potential onto the symbols of a block-recoded survivor shift."""
    if survivor.block_length is None or survivor.symbol_codes is None:
        raise ConfigError("survivor shift carries no block structure")
    if phi.level > survivor.block_length:
        raise ConfigError("potential level exceeds the recoding block length")
    vals = phi.block_values(survivor.symbol_codes, survivor.block_length)
    n = survivor.alphabet_size
    return Potential(n, 1, np.arange(n), vals)


def pressure_with_holes(sft: SubshiftOfFiniteType, phi: Potential,
                        holes: Iterable[Word]) -> float:
    """Pressure of the subshift surviving the removal of hole cylinders.

    Returns ``-inf`` when nothing survives.
    """
    holes = list(holes)
    if not holes:
        return pressure(sft, phi)
    try:
        survivor = remove_hole(sft, holes)
    except EmptySurvivor:
        return float("-inf")
    return pressure(survivor, restrict_potential(phi, survivor))


def return_tail_masses(state: EquilibriumState, symbol: int,
                       n_values: Sequence[int]) -> np.ndarray:
    """Masses of {x starts at ``symbol``, no further visit before step n}.

    Row-vector recursion q_{m+1} = (q_m P) zeroed at the symbol;
    mass(n) = |q_{n-1}|, and mass(1) is the symbol's stationary mass.
    """
    P = state.transition_matrix()
    p = state.stationary
    wanted = set(int(n) for n in n_values)
    n_max = max(wanted)
    out: dict[int, float] = {}
    q = np.zeros_like(p)
    q[symbol] = p[symbol]
    if 1 in wanted:
        out[1] = float(p[symbol])
    for m in range(2, n_max + 1):
        q = np.asarray(q @ P).ravel()
        q[symbol] = 0.0
        if m in wanted:
            out[m] = float(q.sum())
    return np.asarray([out[int(n)] for n in n_values])


def hole_measure_decay(sft: SubshiftOfFiniteType, phi: Potential,
                       hole_family: Callable[[int], list[Word]],
                       n_values: Sequence[int]) -> dict:
    """Equilibrium masses of a shrinking hole family, with fitted decay rate.

    ``hole_family(n)`` returns the union of n-cylinders forming the
    hole.  Masses are exact Gibbs masses; the decay rate is the slope
    of a log-linear fit, in nats per level.
    """
    state = equilibrium_state(sft, phi)
    rows = []
    for n in n_values:
        words = hole_family(n)
        mass = float(sum(state.cylinder_mass(w) for w in words))
        rows.append((int(n), mass))
    ns = np.asarray([r[0] for r in rows], dtype=np.float64)
    ms = np.asarray([r[1] for r in rows], dtype=np.float64)
    pos = ms > 0
    rate = float(np.polyfit(ns[pos], np.log(ms[pos]), 1)[0]) if pos.sum() >= 2 else float("nan")
    return {"table": rows, "log_slope": rate}


def long_return_hole_masses(state: EquilibriumState, symbol: int,
                            n_values: Sequence[int]) -> list[tuple[int, float]]:
    """Exact masses of {x in [symbol] : first return >= n}, no enumeration."""
    masses = return_tail_masses(state, symbol, n_values)
    return [(int(n), float(m)) for n, m in zip(n_values, masses)]


# ---------------------------------------------------------------------------
# Kac / induced return time
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KacReport:
    cylinder_mass: float
    mean_return: float
    product: float
    truncated_at: int
    tail_estimate: float


def kac_check(sft: SubshiftOfFiniteType, phi: Potential, A: Word,
              t_max: int = 40, mass_tol: float = 1e-12) -> KacReport:
    """Mean induced return time to cylinder A against 1/mass(A).

    The mean is a truncated sum over first-return words with time below
    ``t_max`` plus a geometric tail estimate read off the trailing mass
    ratio; distributions with bounded support have exact zero tail.
    """
    state = equilibrium_state(sft, phi)
    nu_A = state.cylinder_mass(A)
    if nu_A <= mass_tol:
        raise ZeroMassCylinder(f"cylinder has mass {nu_A:.3e}")
    ralpha = induced_alphabet(sft, A, t_max)
    per_t: dict[int, float] = {}
    for wret, t in ralpha.entries:
        per_t[t] = per_t.get(t, 0.0) + state.cylinder_mass(wret + A)
    ts = sorted(per_t)
    total = sum(t * per_t[t] for t in ts)
    covered = sum(per_t[t] for t in ts)
    tail = 0.0
    remaining = nu_A - covered
    if remaining > mass_tol * nu_A and len(ts) >= 2 and per_t[ts[-2]] > 0:
        gamma = per_t[ts[-1]] / per_t[ts[-2]]
        if 0 < gamma < 1:
            mu_next = per_t[ts[-1]] * gamma
            T = ts[-1] + 1
            tail = mu_next * (T / (1 - gamma) + gamma / (1 - gamma) ** 2)
    mean_return = (total + tail) / nu_A
    return KacReport(cylinder_mass=float(nu_A), mean_return=float(mean_return),
                     product=float(nu_A * mean_return), truncated_at=t_max,
                     tail_estimate=float(tail))


# ---------------------------------------------------------------------------
# Bowen roots
# ---------------------------------------------------------------------------


def pressure_at_exponent(sft: SubshiftOfFiniteType, psi: Potential, s: float) -> float:
    """Pressure of the potential -s * psi."""
    return pressure(sft, psi.scaled(-s))


def bowen_root(sft: SubshiftOfFiniteType, psi: Potential,
               s_hi: float, tol: float = 1e-12) -> float:
    """Unique root of s -> pressure(-s psi), by bisection on [0, s_hi].

    ``psi`` must be strictly positive (uniform expansion), which makes
    the pressure strictly decreasing in s.
    """
    lo, hi = 0.0, float(s_hi)
    if pressure_at_exponent(sft, psi, lo) < 0:
        return 0.0
    while pressure_at_exponent(sft, psi, hi) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise ConfigError("pressure does not change sign; psi not positive?")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pressure_at_exponent(sft, psi, mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bowen_dimension(map_, level: int = 1, tol: float = 1e-12) -> float:
    """Dimension of the repeller: zero of the pressure of -s log|Df|.

    The log-derivative potential is locally constant at the given
    cylinder level (exact for piecewise-linear maps); the bisection
    bracket [0, log #branches / log min|Df|] has certain signs.
    """
    from .errors import NotExpanding
    if map_.min_slope <= 1.0:
        raise NotExpanding("map must be uniformly expanding")
    if level < 1:
        raise ValueError("level must be >= 1")
    psi = map_.log_slope_potential(level)
    s_hi = np.log(map_.n_branches) / np.log(map_.min_slope)
    return bowen_root(map_.coding_sft(), psi, s_hi, tol=tol)


def bowen_dimension_diagnostic(map_, level: int = 1) -> tuple[float, float, float]:
    """(s at level, s at level + 1, |difference|): refinement consistency."""
    s0 = bowen_dimension(map_, level)
    s1 = bowen_dimension(map_, level + 1)
    return s0, s1, abs(s1 - s0)


def boundary_removal_schedule(map_, n_max: int, boundary_codes=None,
                              level: int = 1) -> list[dict]:
    """Dimensions of the subsystems avoiding neighborhoods of boundary orbits.

    For each n, removes the n-cylinders meeting the given eventually
    periodic itineraries and reports the surviving subshift with its
    dimension.  Empty survivor sets are reported, not fatal.
    """
    from .maps import boundary_itineraries
    if boundary_codes is None:
        boundary_codes = boundary_itineraries(map_)
    sft = map_.coding_sft()
    psi = map_.log_slope_potential(level)
    s_hi = np.log(map_.n_branches) / np.log(map_.min_slope)
    full_dim = bowen_root(sft, psi, s_hi)
    rows = []
    for n in range(1, n_max + 1):
        holes = []
        seen = set()
        for code in boundary_codes:
            w = code.prefix(n)
            if len(w) == n and sft.admits(w):
                key = w.symbols.tobytes()
                if key not in seen:
                    seen.add(key)
                    holes.append(w)
        if not holes:
            rows.append({"n": n, "survivor": sft, "dimension": full_dim,
                         "empty": False})
            continue
        try:
            survivor = remove_hole(sft, holes)
        except EmptySurvivor:
            rows.append({"n": n, "survivor": None, "dimension": None, "empty": True})
            continue
        psi_sub = restrict_potential(psi, survivor)
        dim = bowen_root(survivor, psi_sub, s_hi)
        rows.append({"n": n, "survivor": survivor, "dimension": dim, "empty": False})
    return rows
