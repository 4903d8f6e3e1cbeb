"""Closed-form model checks against independently computed values."""

import math

import numpy as np
import pytest

from photonsync import model
from photonsync.params import (DecayModel, MemoryParams, SourceParams,
                               SystemConfig)


def test_memory_efficiency_scalar_and_array():
    decay = DecayModel(eta0=0.25, tau_sigma_ns=100.0, tau_gamma_ns=300.0)
    t = 40.0
    expected = 0.25 * math.exp(-(t * t) / (2 * 100.0 ** 2) - t / 300.0)
    assert model.memory_efficiency(t, decay) == pytest.approx(expected,
                                                              rel=1e-12)
    arr = model.memory_efficiency(np.array([0.0, t]), decay)
    assert arr.shape == (2,)
    assert arr[0] == pytest.approx(0.25)
    assert arr[1] == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        model.memory_efficiency(-1.0, decay)


def test_avg_memory_efficiency_against_quadrature():
    decay = DecayModel()
    # trapezoid on a dense grid as an independent integrator
    t = np.linspace(0.0, 100.0, 200_001)
    ref = np.trapezoid(model.memory_efficiency(t, decay), t) / 100.0
    assert model.avg_memory_efficiency(decay, 100.0) == pytest.approx(
        ref, abs=1e-8)


def test_calibrated_decay_targets():
    decay = DecayModel()
    assert model.memory_efficiency(114.0, decay) == pytest.approx(
        0.262 / math.e, rel=1e-6)
    assert model.avg_memory_efficiency(decay, 100.0) == pytest.approx(
        0.196, abs=1e-6)


def test_stoc_rate_hand_computed():
    expected = 440_000.0 * (0.97 * 440_000.0) * 600e-12
    assert model.stoc_rate(440_000.0, 0.97 * 440_000.0, 600e-12) == \
        pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        model.stoc_rate(-1.0, 1.0, 1.0)


def test_trig2_rate_nonparalyzable():
    r_i2 = 0.97 * 440_000.0 / 0.159
    expected = r_i2 / (1.0 + r_i2 * 260e-9)
    assert model.trig2_rate(r_i2, 260e-9) == pytest.approx(expected,
                                                           rel=1e-12)
    # saturates at 1/tau as the input rate diverges
    assert model.trig2_rate(1e12, 260e-9) == pytest.approx(1 / 260e-9,
                                                           rel=1e-3)


def test_sync_trials_rate_hand_computed():
    r_trig2 = model.trig2_rate(0.97 * 50_000.0 / 0.159, 260e-9)
    p = (50_000.0 / 0.209) * 100e-9
    expected = r_trig2 * p / (1.0 + r_trig2 * p * 1.525e-6)
    assert model.sync_trials_rate(r_trig2, 50_000.0, 0.209, 100e-9,
                                  1.525e-6) == pytest.approx(expected,
                                                             rel=1e-12)


def test_downtime_accounting_identity():
    r_trig2, r_trials = 3.0e5, 7.0e3
    expected = (r_trig2 - r_trials) * 260e-9 + r_trials * 1.525e-6
    assert model.memory_downtime(r_trig2, r_trials, 1.525e-6, 260e-9) == \
        pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        model.memory_downtime(1.0, 2.0, 1.525e-6, 260e-9)


def test_sync_rate_chain():
    assert model.sync_rate(7000.0, 0.209, 0.159, 0.184) == pytest.approx(
        7000.0 * 0.209 * 0.159 * 0.184, rel=1e-12)
    with pytest.raises(ValueError):
        model.sync_rate(7000.0, 1.5, 0.159, 0.184)


def test_g2_after_memory_limits():
    src = SourceParams()
    mem = MemoryParams()
    # with no leakage paths the on-resonant source value is recovered
    clean = MemoryParams(t_retrieval_factor=0.0, t_offres_factor=0.0)
    g2_clean = model.g2_after_memory(20.0, src, clean)
    assert g2_clean == pytest.approx(src.g2_source * (1 - src.rho), rel=1e-12)
    # leakage terms only ever add contamination
    assert model.g2_after_memory(20.0, src, mem) > g2_clean
    # grows as the stored photon decays away
    assert model.g2_after_memory(90.0, src, mem) > \
        model.g2_after_memory(10.0, src, mem)


def test_snr_hand_computed():
    assert model.snr(0.20, 0.262, 1.7e-5) == pytest.approx(
        0.20 * 0.262 / 1.7e-5, rel=1e-12)
    with pytest.raises(ValueError):
        model.snr(0.2, 0.262, 0.0)


def test_full_chain_zeta_consistency():
    rep = model.full_chain(SystemConfig())
    assert rep.zeta == pytest.approx(rep.r_sync / rep.r_stoc, rel=1e-12)
    assert rep.r_sync_trials < rep.r_trig2
    assert 0.0 < rep.downtime < 1.0
    # the sweep end point reproduces the independently derived values
    high = model.full_chain(SystemConfig().with_(
        source=SourceParams(r1_cps=440_000.0, rho=0.10)))
    assert high.r_stoc == pytest.approx(112.675, abs=0.01)
    assert high.downtime == pytest.approx(0.6903, abs=0.001)


def test_internal_efficiency():
    assert model.internal_efficiency(0.196, 0.68) == pytest.approx(
        0.196 / 0.68, rel=1e-12)
    with pytest.raises(ValueError):
        model.internal_efficiency(0.9, 0.68)
