import itertools
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from recspec.errors import EmptySurvivor, ZeroMassCylinder
from recspec.maps import cantor_map, doubling_map, perturbed_doubling_map, two_slopes_map
from recspec.sft import SubshiftOfFiniteType, full_shift, golden_mean_shift
from recspec.thermo import (
    Potential,
    boundary_removal_schedule,
    bowen_dimension,
    bowen_dimension_diagnostic,
    equilibrium_state,
    hole_measure_decay,
    kac_check,
    long_return_hole_masses,
    pressure,
    pressure_with_holes,
)
from recspec.maps import ItineraryCode
from recspec.words import Word

GOLDEN = (1 + 5 ** 0.5) / 2
LOG2 = math.log(2)


def survivor_root(n: int) -> float:
    """Largest root of x^n = x^(n-1) + ... + 1, i.e. of x^(n+1) - 2x^n + 1."""
    if n == 1:
        return 1.0
    return brentq(lambda x: x ** (n + 1) - 2 * x ** n + 1, 1 + 1e-12, 2, xtol=1e-15)


# -- pressure ----------------------------------------------------------------


def test_pressure_full_shift():
    two = full_shift(2)
    assert pressure(two, Potential.constant(two, 0.0)) == pytest.approx(LOG2, abs=1e-12)


def test_pressure_golden_mean():
    gm = golden_mean_shift()
    assert pressure(gm, Potential.constant(gm, 0.0)) == pytest.approx(
        math.log(GOLDEN), abs=1e-12)


def test_pressure_normalized_bernoulli():
    two = full_shift(2)
    phi = Potential.from_symbol_values(two, np.log([0.3, 0.7]))
    assert pressure(two, phi) == pytest.approx(0.0, abs=1e-12)


def test_pressure_monotone_in_potential():
    rng = np.random.default_rng(4)
    gm = golden_mean_shift()
    for _ in range(25):
        lo = rng.normal(size=2)
        hi = lo + rng.uniform(0, 1, size=2)
        assert pressure(gm, Potential.from_symbol_values(gm, lo)) <= \
            pressure(gm, Potential.from_symbol_values(gm, hi)) + 1e-12


def test_pressure_level_two_potential_matches_level_one():
    gm = golden_mean_shift()
    phi1 = Potential.from_symbol_values(gm, [0.3, -0.2])
    phi2 = Potential.from_function(gm, 2, lambda w: phi1.values[w[0]])
    assert pressure(gm, phi2) == pytest.approx(pressure(gm, phi1), abs=1e-11)


# -- equilibrium states --------------------------------------------------------


def test_fair_coin_equilibrium():
    two = full_shift(2)
    state = equilibrium_state(two, Potential.constant(two, 0.0))
    assert state.entropy == pytest.approx(LOG2, abs=1e-10)
    for k in range(1, 7):
        for bits in itertools.product((0, 1), repeat=k):
            assert state.cylinder_mass(Word(bits, 2)) == pytest.approx(2.0 ** -k, abs=1e-12)


def test_bernoulli_equilibrium():
    two = full_shift(2)
    state = equilibrium_state(two, Potential.from_symbol_values(two, np.log([0.3, 0.7])))
    h = -(0.3 * math.log(0.3) + 0.7 * math.log(0.7))
    assert state.entropy == pytest.approx(h, abs=1e-10)
    assert state.cylinder_mass(Word.from_str("01")) == pytest.approx(0.21, abs=1e-12)
    # variational identity
    phi_mean = state.integrate(state.phi)
    assert state.entropy + phi_mean == pytest.approx(state.pressure, abs=1e-10)


def test_parry_measure_golden():
    gm = golden_mean_shift()
    state = equilibrium_state(gm, Potential.constant(gm, 0.0))
    assert state.entropy == pytest.approx(math.log(GOLDEN), abs=1e-10)
    # explicit Parry values: p0 = phi^2 / (1 + phi^2)
    p0 = GOLDEN ** 2 / (1 + GOLDEN ** 2)
    assert state.cylinder_mass(Word.from_str("0")) == pytest.approx(p0, abs=1e-10)


def test_stationarity_and_additivity():
    gm = golden_mean_shift()
    state = equilibrium_state(gm, Potential.from_symbol_values(gm, [0.2, -0.4]))
    P = state.transition_matrix().toarray()
    p = state.stationary
    assert np.allclose(p @ P, p, atol=1e-12)
    for text in ("0", "1", "01", "00", "010"):
        w = Word.from_str(text)
        splits = sum(state.cylinder_mass(w + Word([j], 2)) for j in range(2))
        merges = sum(state.cylinder_mass(Word([j], 2) + w) for j in range(2))
        mass = state.cylinder_mass(w)
        assert splits == pytest.approx(mass, abs=1e-12)
        assert merges == pytest.approx(mass, abs=1e-12)


def test_gibbs_sandwich_certified():
    two = full_shift(2)
    phi = Potential.from_symbol_values(two, np.log([0.3, 0.7]))
    state = equilibrium_state(two, phi)
    c0 = state.gibbs_constant()
    vals = phi.values
    for k in range(1, 11):
        for bits in itertools.product((0, 1), repeat=k):
            w = Word(bits, 2)
            phi_k = float(vals[list(bits)].sum())
            q = state.cylinder_mass(w) * math.exp(k * state.pressure - phi_k)
            assert 1.0 / c0 - 1e-12 <= q <= c0 + 1e-12


# -- Bowen dimension -----------------------------------------------------------


def test_bowen_dimension_doubling():
    assert bowen_dimension(doubling_map()) == pytest.approx(1.0, abs=1e-10)


def test_bowen_dimension_cantor():
    assert bowen_dimension(cantor_map()) == pytest.approx(LOG2 / math.log(3), abs=1e-8)


def test_bowen_dimension_two_slopes_vs_scalar_oracle():
    oracle = brentq(lambda s: 2 ** -s + 4 ** -s - 1, 0, 1, xtol=1e-14)
    assert bowen_dimension(two_slopes_map()) == pytest.approx(oracle, abs=1e-8)


def test_level_consistency_linear():
    for map_ in (doubling_map(), cantor_map(), two_slopes_map()):
        s1, s3, gap = bowen_dimension_diagnostic(map_, 1)
        assert gap < 1e-6


def test_level_consistency_nonlinear():
    map_ = perturbed_doubling_map()
    s8 = bowen_dimension(map_, 8)
    s10 = bowen_dimension(map_, 10)
    assert abs(s8 - s10) < 1e-3


# -- holes -----------------------------------------------------------------------


def test_pressure_with_holes_examples():
    two = full_shift(2)
    zero = Potential.constant(two, 0.0)
    assert pressure_with_holes(two, zero, []) == pytest.approx(LOG2, abs=1e-12)
    p2 = pressure_with_holes(two, zero, [Word.from_str("11")])
    assert p2 == pytest.approx(math.log(GOLDEN), abs=1e-11)
    assert pressure_with_holes(two, zero,
                               [Word.from_str("0"), Word.from_str("1")]) == -math.inf


def test_pressure_with_holes_block_family():
    two = full_shift(2)
    zero = Potential.constant(two, 0.0)
    prev = -math.inf
    for n in range(1, 13):
        p_n = pressure_with_holes(two, zero, [Word([1] * n, 2)])
        assert p_n == pytest.approx(math.log(survivor_root(n)), abs=1e-9)
        assert p_n >= prev - 1e-12
        prev = p_n


def test_hole_measure_decay_fair_coin():
    two = full_shift(2)
    state = equilibrium_state(two, Potential.constant(two, 0.0))
    rows = long_return_hole_masses(state, 0, range(1, 11))
    for n, mass in rows:
        assert mass == pytest.approx(2.0 ** -n, abs=1e-12)


def test_hole_measure_decay_bernoulli():
    two = full_shift(2)
    phi = Potential.from_symbol_values(two, np.log([0.3, 0.7]))

    def family(n):
        return [Word([0] + [1] * (n - 1), 2)]

    out = hole_measure_decay(two, phi, family, range(1, 12))
    for n, mass in out["table"]:
        assert mass == pytest.approx(0.3 * 0.7 ** (n - 1), abs=1e-12)
    assert out["log_slope"] == pytest.approx(math.log(0.7), abs=1e-9)


def test_long_return_masses_bernoulli():
    two = full_shift(2)
    phi = Potential.from_symbol_values(two, np.log([0.3, 0.7]))
    state = equilibrium_state(two, phi)
    rows = long_return_hole_masses(state, 0, range(1, 10))
    for n, mass in rows:
        assert mass == pytest.approx(0.3 * 0.7 ** (n - 1), abs=1e-12)


# -- Kac ---------------------------------------------------------------------------


def test_kac_fair_coin():
    two = full_shift(2)
    rep = kac_check(two, Potential.constant(two, 0.0), Word.from_str("0"))
    assert rep.cylinder_mass == pytest.approx(0.5, abs=1e-12)
    assert rep.mean_return == pytest.approx(2.0, abs=1e-9)
    assert rep.product == pytest.approx(1.0, abs=1e-9)


def test_kac_bernoulli():
    two = full_shift(2)
    phi = Potential.from_symbol_values(two, np.log([0.3, 0.7]))
    rep = kac_check(two, phi, Word.from_str("0"), t_max=60)
    assert rep.mean_return == pytest.approx(1.0 / 0.3, abs=1e-9)


def test_kac_parry_golden():
    gm = golden_mean_shift()
    rep = kac_check(gm, Potential.constant(gm, 0.0), Word.from_str("0"), t_max=40)
    assert rep.tail_estimate == 0.0  # return times are bounded by 2 here
    assert abs(rep.product - 1.0) < 1e-6


def test_kac_zero_mass():
    gm = golden_mean_shift()
    state_phi = Potential.from_symbol_values(gm, [0.0, -60.0])
    with pytest.raises(ZeroMassCylinder):
        kac_check(gm, state_phi, Word.from_str("1"))


# -- boundary removal ----------------------------------------------------------------


def test_boundary_schedule_doubling_fixed_endpoint():
    map_ = doubling_map()
    codes = [ItineraryCode(Word([], 2), Word([0], 2))]
    rows = boundary_removal_schedule(map_, 8, boundary_codes=codes)
    dims = [r["dimension"] for r in rows]
    for n, row in zip(range(1, 9), rows):
        if row["empty"]:
            continue
        want = math.log(survivor_root(n)) / LOG2
        assert row["dimension"] == pytest.approx(want, abs=1e-9)
    present = [d for d in dims if d is not None]
    assert all(b >= a - 1e-12 for a, b in zip(present, present[1:]))
    assert present[-1] > 0.975


def test_boundary_schedule_no_codes_gives_full_dimension():
    map_ = doubling_map()
    rows = boundary_removal_schedule(map_, 3, boundary_codes=[])
    for row in rows:
        assert row["dimension"] == pytest.approx(1.0, abs=1e-10)


def test_boundary_schedule_cantor():
    map_ = cantor_map()
    codes = [ItineraryCode(Word([], 2), Word([0], 2))]
    rows = boundary_removal_schedule(map_, 10, boundary_codes=codes)
    dims = [r["dimension"] for r in rows if not r["empty"]]
    assert all(b >= a - 1e-12 for a, b in zip(dims, dims[1:]))
    assert dims[-1] == pytest.approx(LOG2 / math.log(3), abs=2e-2)
    full = bowen_dimension(map_)
    assert dims[-1] <= full + 1e-12
