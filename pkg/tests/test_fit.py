"""Least-squares fitting: recovery, error bars, and calibration."""

import numpy as np
import pytest

from photonsync import model
from photonsync.fit import (G2Dataset, calibrate_decay, fit_decay,
                            fit_g2_transmission, lm_fit)
from photonsync.params import DecayModel, MemoryParams, SourceParams


def test_lm_fit_quadratic():
    # minimum of 0.5*||A u - b||^2 is the least-squares solution
    rng = np.random.default_rng(11)
    a = rng.normal(size=(20, 3))
    b = rng.normal(size=20)

    def residual_jac(u):
        return a @ u - b, a

    u, converged, _ = lm_fit(residual_jac, np.zeros(3))
    expected = np.linalg.lstsq(a, b, rcond=None)[0]
    assert converged
    assert np.allclose(u, expected, atol=1e-8)


def test_fit_decay_noise_free_recovery():
    true = DecayModel(eta0=0.24, tau_sigma_ns=110.0, tau_gamma_ns=280.0)
    t = np.linspace(2.0, 110.0, 16)
    eta = model.memory_efficiency(t, true)
    fit = fit_decay(t, eta, np.full(t.size, 1e-4))
    assert fit.converged
    assert fit["eta0"] == pytest.approx(0.24, rel=1e-4)
    assert fit["tau_sigma_ns"] == pytest.approx(110.0, rel=1e-3)
    assert fit["tau_gamma_ns"] == pytest.approx(280.0, rel=1e-3)


def test_fit_decay_error_bars_scale_with_noise():
    rng = np.random.default_rng(7)
    true = DecayModel()
    t = np.linspace(2.0, 110.0, 16)
    clean = model.memory_efficiency(t, true)
    fits = []
    for s in (0.002, 0.008):
        sigma = np.full(t.size, s)
        fits.append(fit_decay(t, clean + rng.normal(0, s, t.size), sigma))
    assert fits[1].error("eta0") > 2.0 * fits[0].error("eta0")


def test_fit_decay_input_validation():
    t = np.array([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        fit_decay(t, t * 0.1, np.full(3, 0.01))      # too few points
    t = np.linspace(1.0, 100.0, 8)
    with pytest.raises(ValueError):
        fit_decay(t, t * 0.0 + 0.1, np.zeros(8))     # sigma must be positive


def test_fit_g2_transmission_recovery():
    src = SourceParams()
    f_true = 0.08
    mem = MemoryParams(t_retrieval_factor=f_true)
    t = np.array([5.0, 20.0, 40.0, 60.0, 80.0, 100.0])
    g2 = np.array([model.g2_after_memory(float(x), src, mem) for x in t])
    ds = G2Dataset(t_ns=t, g2=g2, sigma=np.full(t.size, 1e-5), rho=src.rho,
                   decay=mem.decay, g2_source=src.g2_source,
                   transmission=mem.transmission)
    fit = fit_g2_transmission([ds])
    assert fit.converged
    assert fit["t_retrieval_factor"] == pytest.approx(f_true, rel=1e-4)


def test_calibrate_decay_satisfies_both_constraints():
    decay = calibrate_decay(0.262, 114.0, 0.196, 100.0)
    assert model.memory_efficiency(114.0, decay) == pytest.approx(
        0.262 / np.e, rel=1e-8)
    assert model.avg_memory_efficiency(decay, 100.0) == pytest.approx(
        0.196, abs=1e-7)


def test_calibrate_decay_rejects_unreachable_target():
    # the window average cannot exceed eta0
    with pytest.raises(ValueError):
        calibrate_decay(0.262, 114.0, 0.30, 100.0)
