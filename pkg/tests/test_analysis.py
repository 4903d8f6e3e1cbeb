"""Estimator checks against brute-force oracles and known statistics."""

import numpy as np
import pytest

from photonsync import analysis, model
from photonsync.analysis import Histogram, WindowSpec
from photonsync.engine import run_sim
from photonsync.params import SimParams, SourceParams, SystemConfig


def brute_xcorr(a, b, tmin, tmax, bin_ps):
    d = (np.asarray(b)[None, :] - np.asarray(a)[:, None]).ravel()
    d = d[(d >= tmin) & (d < tmax)]
    nbins = (tmax - tmin) // bin_ps
    return np.bincount((d - tmin) // bin_ps, minlength=nbins)


def test_cross_correlation_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(25):
        a = np.sort(rng.integers(0, 10 ** 6, rng.integers(5, 400)))
        b = np.sort(rng.integers(0, 10 ** 6, rng.integers(5, 400)))
        hist = analysis.cross_correlation(a, b, -4000, 4000, 200)
        assert np.array_equal(hist.counts, brute_xcorr(a, b, -4000, 4000, 200))


def test_cross_correlation_validates_binning():
    a = np.array([0, 100], dtype=np.int64)
    with pytest.raises(ValueError):
        analysis.cross_correlation(a, a, -1000, 1000, 300)  # span not a multiple
    with pytest.raises(ValueError):
        analysis.cross_correlation(a, a, 1000, -1000, 100)


def test_locate_offset_recovers_known_delay():
    rng = np.random.default_rng(9)
    ref = np.sort(rng.integers(0, 10 ** 10, 20_000))
    delayed = ref[rng.random(ref.size) < 0.4] + 15_700
    noise = np.sort(rng.integers(0, 10 ** 10, 5_000))
    x = np.sort(np.concatenate([delayed, noise]))
    found = analysis.locate_offset(ref, x)
    assert abs(found - 15_700) <= WindowSpec().bin_ps


def test_window_hits_hand_case():
    ref = np.array([1000, 5000], dtype=np.int64)
    x = np.array([900, 1100, 1600, 5000], dtype=np.int64)
    # full window width 500 centered on each reference time
    hits = analysis.window_hits(ref, x, 0, 500)
    assert hits.tolist() == [2, 1]
    hits = analysis.window_hits(ref, x, 600, 500)
    assert hits.tolist() == [1, 0]


def test_g2h_uncorrelated_light_is_unity():
    rng = np.random.default_rng(17)
    heralds = np.sort(rng.integers(0, 10 ** 12, 200_000))
    a = np.sort(rng.integers(0, 10 ** 12, 3_000_000))
    b = np.sort(rng.integers(0, 10 ** 12, 3_000_000))
    g2, se = analysis.g2h_estimate(heralds, a, b, offset_a=0, offset_b=0)
    assert abs(g2 - 1.0) < 3 * se


def test_g2h_antibunched_source():
    # a herald with exactly one photon sent to a 50/50 splitter never
    # produces a threefold coincidence
    rng = np.random.default_rng(23)
    heralds = np.sort(rng.integers(0, 10 ** 12, 50_000))
    port = rng.random(heralds.size) < 0.5
    a = np.sort(heralds[port] + 10)
    b = np.sort(heralds[~port] + 10)
    g2, _ = analysis.g2h_estimate(heralds, a, b, offset_a=10, offset_b=10)
    assert g2 == 0.0


def test_temporal_overlap_properties():
    rng = np.random.default_rng(31)
    c = rng.integers(1, 100, 48).astype(float)
    assert analysis.temporal_overlap(c, c.copy()) == 1.0
    # disjoint histograms have zero overlap
    d1 = np.zeros(48)
    d2 = np.zeros(48)
    d1[:24] = 1.0
    d2[24:] = 1.0
    assert analysis.temporal_overlap(d1, d2) == 0.0
    # scaling either histogram is irrelevant
    assert analysis.temporal_overlap(c, 3.0 * c) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        analysis.temporal_overlap(np.ones(4), np.ones(5))


def test_visibility_from_scan_synthetic_dip():
    edges = np.arange(-6000, 6001, 300)
    centers = (edges[:-1] + edges[1:]) / 2.0
    plateau = 400.0
    v_true = 0.8
    counts = plateau * (1 - v_true * np.exp(-centers ** 2 / (2 * 800.0 ** 2)))
    hist = Histogram(edges_ps=edges, counts=counts, n_ref=1)
    v, se = analysis.visibility_from_scan(hist)
    assert v == pytest.approx(v_true, abs=0.02)


def test_decay_curve_recovers_model(sim_record_sync):
    t_ns, eta, se = analysis.decay_curve(sim_record_sync)
    expected = model.memory_efficiency(t_ns, sim_record_sync.config.memory.decay)
    pulls = (eta - expected) / se
    assert t_ns.size >= 8
    assert np.all(np.abs(pulls) < 4.0)
    assert np.abs(pulls).mean() < 2.0


def test_pair_rates_sync_keys(sim_record_sync):
    rates = analysis.pair_rates(sim_record_sync)
    assert set(rates) == {"r_trig2", "r_sync_trials", "downtime", "r_sync"}
    for value, err in rates.values():
        assert value >= 0 and err >= 0


def test_analyze_record_sync(sim_record_sync):
    rep = analysis.analyze_record(sim_record_sync)
    assert rep.r_trig2 == pytest.approx(
        analysis.pair_rates(sim_record_sync)["r_trig2"][0])
    assert 0.8 <= rep.overlap_i <= 1.0


def test_pair_rates_off_mode():
    cfg = SystemConfig().with_(
        source=SourceParams(r1_cps=440_000.0, rho=0.10),
        sim=SimParams(trigger_mode="off"))
    record = run_sim(cfg, seed=77, duration_s=3.0)
    rates = analysis.pair_rates(record)
    assert set(rates) == {"r_stoc"}
    value, se = rates["r_stoc"]
    expected = model.stoc_rate(cfg.source.r1_cps, cfg.source.r2_cps,
                               model.STOC_WINDOW_S)
    assert abs(value - expected) < 4 * max(se, 1e-9) + 0.05 * expected
