import math

import numpy as np
import pytest

from recspec.errors import SourceInfeasible
from recspec.maps import distortion_constants, doubling_map, tau_r_from_orbit, two_slopes_map
from recspec.spectrum import (
    ae_rate_experiment,
    build_source,
    construct_E_point,
    dimension_ladder,
    estimate_recurrence_rate,
    higher_block_shift,
    sample_source_point,
)
from recspec.thermo import Potential
from recspec.words import Word, repetition_time

LOG2 = math.log(2)


@pytest.fixture(scope="module")
def doubling_source():
    return build_source(doubling_map(), 8)


def test_higher_block_shift_counts():
    two = doubling_map().coding_sft()
    blocks = higher_block_shift(two, 2)
    assert blocks.alphabet_size == 4
    assert [w.to_str() for w in blocks.symbol_words] == ["00", "01", "10", "11"]


def test_build_source_doubling(doubling_source):
    src = doubling_source
    assert src.base_cylinder.to_str() == "00"
    assert src.lambda_n == pytest.approx(LOG2, abs=1e-12)  # constant derivative
    assert src.pressure_gap < 0
    assert 0 < src.nu_A < 1
    assert src.mean_return == pytest.approx(1.0 / src.nu_A, rel=1e-12)
    assert src.dim_source < src.dimension_target


def test_build_source_infeasible_level():
    with pytest.raises(SourceInfeasible):
        build_source(doubling_map(), 2)


def test_sample_source_point_reproducible(doubling_source):
    s1 = sample_source_point(doubling_source, 2000, seed=9)
    s2 = sample_source_point(doubling_source, 2000, seed=9)
    assert s1.letters == s2.letters
    assert np.array_equal(s1.times, s2.times)
    s3 = sample_source_point(doubling_source, 2000, seed=10)
    assert s1.letters != s3.letters


def test_sample_source_birkhoff_fields(doubling_source):
    src = doubling_source
    s = sample_source_point(src, 5000, seed=4)
    assert s.achieved_psi_mean == pytest.approx(LOG2, abs=1e-12)
    assert abs(s.achieved_mean_return - src.mean_return) <= \
        src.birkhoff_tolerance * src.mean_return
    # every letter is a genuine first return: times below the level bound
    assert s.times.max() <= src.n - 1
    assert s.letters.symbols.max() < len(src.induced)


def test_construct_point_exact_identities(doubling_source):
    pt = construct_E_point(doubling_map(), 0.3, 0.3, 8, 30_000, seed=11,
                           source=doubling_source)
    assert pt.identity_violations == []
    assert pt.ok
    # measured repetition times at the induced scale equal the sequence
    for k in pt.identity_checked:
        assert repetition_time(pt.induced_word, k) == pt.ell.value(k)
    # the block-scale repetition is bracketed by the flattened lengths
    for k, measured, lo, hi in pt.block_scale_rows:
        assert lo <= measured <= hi
    assert 0.0 <= pt.point <= 1.0


def test_construct_point_rate_windows(doubling_source):
    pt = construct_E_point(doubling_map(), 0.3, 0.3, 8, 30_000, seed=11,
                           source=doubling_source)
    assert abs(pt.rate_estimate.lower - 0.3) <= 0.1
    assert abs(pt.rate_estimate.upper - 0.3) <= 0.1


def test_construct_point_rates_improve_with_horizon(doubling_source):
    # polynomial growth targets zero; the window estimate shrinks toward it
    # when the horizon grows tenfold
    small = construct_E_point(doubling_map(), 0.0, 0.0, 8, 30_000, seed=12,
                              source=doubling_source)
    big = construct_E_point(doubling_map(), 0.0, 0.0, 8, 300_000, seed=12,
                            source=doubling_source)
    assert small.rate_estimate.upper <= 0.35
    assert big.rate_estimate.upper < small.rate_estimate.upper
    assert big.rate_estimate.upper <= 0.18
    assert big.rate_estimate.lower >= 0.0


def test_construct_point_insertion_time_budget(doubling_source):
    # the spliced word's partial return-time sums track the source's within
    # the combinatorial budget k * eps_k * n
    src = doubling_source
    pt = construct_E_point(doubling_map(), 0.3, 0.3, 8, 30_000, seed=13, source=src)
    g_cum = np.concatenate([[0], np.cumsum(pt.induced_times)])
    src_cum = np.concatenate([[0], np.cumsum(pt.sample.times)])
    ell = pt.ell
    values = list(ell.values)
    k_max = min(g_cum.size, src_cum.size) - 1
    for k in range(ell.value(ell.n0), k_max):
        p = None
        for idx, v in zip(ell.indices(), values):
            if v <= k:
                p = idx
        if p is None:
            continue
        eps_k = (p + 2) ** 2 / ell.value(p)
        bound = k * eps_k * src.n
        diff = abs(int(g_cum[k]) - int(src_cum[k]))
        assert diff <= bound + 1e-9, (k, diff, bound)


def test_matched_scale_route_agreement(doubling_source):
    # constant-target point: the tau route at sandwich radii and the block
    # repetition route agree scale by scale inside the tail window
    map_ = doubling_map()
    dist = distortion_constants(map_)
    pt = construct_E_point(map_, 0.3, 0.3, 8, 60_000, seed=21,
                           source=doubling_source)
    orbit = map_.orbit_values(pt.base_word, window=60)
    cum = np.concatenate([[0], np.cumsum(pt.induced_times)])
    pairs = []
    for k, measured, lo, hi in pt.block_scale_rows:
        h = int(cum[k])
        s_h = h * LOG2
        tau = tau_r_from_orbit(orbit, dist.kappa * math.exp(-s_h))
        if tau is None:
            continue
        sym = math.log(measured) / s_h
        geo = math.log(tau) / (s_h + math.log(1.0 / dist.kappa))
        pairs.append((k, sym, geo))
    assert len(pairs) >= 6
    ks = [k for k, _, _ in pairs]
    start = ks[0] + (ks[-1] - ks[0]) / 2
    window = [(s, g) for k, s, g in pairs if k >= start]
    assert window and max(abs(s - g) for s, g in window) <= 0.05


def test_estimate_recurrence_rate_periodic():
    m = doubling_map()
    w = Word.from_str("01" * 20000)
    est = estimate_recurrence_rate(m, w)
    geo = est["geometric"]
    assert geo.upper <= 0.2  # tau is eventually the period: ratios tend to 0
    sym = est["symbolic"]
    assert sym.upper <= 0.2


def test_estimate_recurrence_rate_typical():
    # single points fluctuate; only coarse agreement is asserted here and
    # the ensemble behavior is covered by the a.e. experiment test
    m = doubling_map()
    rng = np.random.default_rng(3)
    w = Word(rng.integers(0, 2, 10 ** 6), 2)
    est = estimate_recurrence_rate(m, w)
    assert est["geometric"].slope == pytest.approx(1.0, abs=0.35)
    assert 0.3 <= est["geometric"].lower <= est["geometric"].upper <= 1.5


def test_ae_rate_experiment_small():
    m = doubling_map()
    sft = m.coding_sft()
    res = ae_rate_experiment(m, Potential.from_symbol_values(sft, [-LOG2, -LOG2]),
                             n_points=12, horizon=200_000, seed=5)
    assert res["target"] == pytest.approx(1.0, abs=1e-10)
    assert abs(res["median"] - 1.0) <= 0.15
    res_threaded = ae_rate_experiment(m, Potential.from_symbol_values(sft, [-LOG2, -LOG2]),
                                      n_points=12, horizon=200_000, seed=5, threads=3)
    assert np.array_equal(res["slopes"], res_threaded["slopes"])  # merge by index


def test_ae_rate_experiment_markov_sampler():
    # golden-mean coded map with matching slopes: dimension target is 1
    from recspec.maps import golden_matching_map
    m = golden_matching_map()
    sft = m.coding_sft()
    phi = m.log_slope_potential(1).scaled(-1.0)
    res = ae_rate_experiment(m, phi, n_points=6, horizon=100_000, seed=6)
    assert res["target"] == pytest.approx(1.0, abs=1e-9)
    assert abs(res["median"] - 1.0) <= 0.25


def test_dimension_ladder_two_slopes():
    rows = dimension_ladder(two_slopes_map(), range(2, 11))
    feas = [r for r in rows if r["feasible"]]
    skipped = [r for r in rows if not r["feasible"]]
    assert all(r["n"] in (2, 3) for r in skipped)
    dims = [r["dim_source"] for r in feas]
    gaps = [r["pressure_gap"] for r in feas]
    assert all(b >= a for a, b in zip(dims, dims[1:]))
    assert all(b >= a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0 and dims[-1] < feas[-1]["full_dimension"]
