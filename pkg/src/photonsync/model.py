"""Closed-form rate, efficiency, downtime and noise models of the synchronization chain.

All functions are pure and cheap; times are in the units stated per argument
(storage times in ns, electronic windows in seconds where rates are in 1/s).
"""

from __future__ import annotations

import math

import numpy as np

from .params import DecayModel, MemoryParams, RatesReport, SourceParams, SystemConfig


def memory_efficiency(t_ns, decay: DecayModel):
    """End-to-end memory efficiency at storage time t (ns). Accepts arrays."""
    if np.any(np.asarray(t_ns) < 0):
        raise ValueError("storage time must be >= 0")
    x = -(t_ns * np.asarray(t_ns)) / (2.0 * decay.tau_sigma_ns**2) - np.asarray(t_ns) / decay.tau_gamma_ns
    out = decay.eta0 * np.exp(x)
    return float(out) if np.ndim(t_ns) == 0 else out


def _adaptive_simpson(f, a: float, b: float, tol: float) -> float:
    """Adaptive Simpson quadrature with absolute tolerance ``tol``."""

    def simpson(lo, hi, flo, fmid, fhi):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, hi, flo, fmid, fhi, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        fl = f(0.5 * (lo + mid))
        fr = f(0.5 * (mid + hi))
        left = simpson(lo, mid, flo, fl, fmid)
        right = simpson(mid, hi, fmid, fr, fhi)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return (recurse(lo, mid, flo, fl, fmid, left, eps / 2.0, depth - 1)
                + recurse(mid, hi, fmid, fr, fhi, right, eps / 2.0, depth - 1))

    mid = 0.5 * (a + b)
    fa, fm, fb = f(a), f(mid), f(b)
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, 48)


def avg_memory_efficiency(decay: DecayModel, t_star_ns: float, tol: float = 1e-6) -> float:
    """Mean of the decay curve over storage times [0, t*]."""
    if t_star_ns <= 0:
        raise ValueError("t_star_ns must be > 0")
    integral = _adaptive_simpson(lambda t: memory_efficiency(t, decay), 0.0, t_star_ns, tol)
    return integral / t_star_ns


def stoc_rate(r1_cps: float, r2_cps: float, delta_t_s: float) -> float:
    """Accidental pair-coincidence rate within a window of width delta_t."""
    if r1_cps < 0 or r2_cps < 0 or delta_t_s < 0:
        raise ValueError("inputs must be >= 0")
    return r1_cps * r2_cps * delta_t_s


def trig2_rate(r_idler2: float, tau_d2_s: float) -> float:
    """DDG-2 accepted-trigger rate under its non-paralyzable acceptance downtime."""
    if r_idler2 < 0 or tau_d2_s < 0:
        raise ValueError("inputs must be >= 0")
    return r_idler2 / (1.0 + r_idler2 * tau_d2_s)


def sync_trials_rate(r_trig2: float, r1_cps: float, eta_h1: float,
                     t_star_s: float, tau_d1_s: float) -> float:
    """Rate of memory operations (DDG-1 accepted triggers within the gate)."""
    if eta_h1 <= 0:
        raise ValueError("eta_h1 must be > 0")
    if min(r_trig2, r1_cps, t_star_s, tau_d1_s) < 0:
        raise ValueError("inputs must be >= 0")
    p_trig1 = (r1_cps / eta_h1) * t_star_s
    x = r_trig2 * p_trig1
    return x / (1.0 + x * tau_d1_s)


def memory_downtime(r_trig2: float, r_sync_trials: float,
                    tau_d1_s: float, tau_d2_s: float) -> float:
    """Fraction of time the trigger electronics cannot start a new synchronization."""
    if r_sync_trials > r_trig2:
        raise ValueError("r_sync_trials cannot exceed r_trig2")
    d = (r_trig2 - r_sync_trials) * tau_d2_s + r_sync_trials * tau_d1_s
    if d > 1.0:
        raise ValueError(f"downtime {d:.3f} exceeds 1; rates are not self-consistent")
    return d


def sync_rate(r_sync_trials: float, eta_h1: float, eta_h2: float, eta_bar: float) -> float:
    """Synchronized pair-coincidence rate."""
    for name, v in (("eta_h1", eta_h1), ("eta_h2", eta_h2), ("eta_bar", eta_bar)):
        if not 0 <= v <= 1:
            raise ValueError(f"{name} must be in [0, 1]")
    return r_sync_trials * eta_h1 * eta_h2 * eta_bar


def g2_after_memory(t_ns: float, source: SourceParams, memory: MemoryParams) -> float:
    """Conditional autocorrelation of the retrieved photon at storage time t (ns).

    The noise photon is either on-resonant (stored alongside the signal or
    leaking through during retrieval) or off-resonant pump scatter.
    """
    eta = memory_efficiency(t_ns, memory.decay)
    if eta <= 0:
        raise ValueError("memory efficiency vanished; g2 undefined")
    rho = source.rho
    return source.g2_source * ((1.0 - rho)
                               + (1.0 - rho) * memory.t_retrieval / eta
                               + rho * memory.t_offres / eta)


def snr(eta_h: float, eta0: float, nu: float) -> float:
    """Short-time signal-to-noise ratio of retrieval against memory-born noise."""
    if nu <= 0:
        raise ValueError("nu must be > 0")
    return eta_h * eta0 / nu


def internal_efficiency(eta_e2e: float, transmission: float) -> float:
    """Memory efficiency with the passive module transmission divided out."""
    if not 0 < transmission <= 1:
        raise ValueError("transmission must be in (0, 1]")
    v = eta_e2e / transmission
    if v > 1.0:
        raise ValueError("internal efficiency > 1: inconsistent parameters")
    return v


# coincidence window for the accidental-rate definition: idlers within +-300 ps
STOC_WINDOW_S = 600e-12


def full_chain(config: SystemConfig, g2_ref_time_ns: float | None = None) -> RatesReport:
    """Evaluate the complete analytic rate chain for one operating point."""
    src, mem, elec, det = config.source, config.memory, config.electronics, config.detector
    t_star_s = elec.t_star_ps * 1e-12
    tau_d1_s = elec.tau_d1_ps * 1e-12
    tau_d2_s = elec.tau_d2_ps * 1e-12

    rep = RatesReport()
    rep.r_stoc = stoc_rate(src.r1_cps, src.r2_cps, STOC_WINDOW_S)
    if src.r2_cps > 0:
        rep.r_trig2 = trig2_rate(src.r_idler2_cps, tau_d2_s)
    else:
        rep.r_trig2 = 0.0
    rep.r_sync_trials = sync_trials_rate(rep.r_trig2, src.r1_cps, src.eta_h1,
                                         t_star_s, tau_d1_s)
    rep.downtime = memory_downtime(rep.r_trig2, rep.r_sync_trials, tau_d1_s, tau_d2_s)
    eta_bar = avg_memory_efficiency(mem.decay, elec.t_star_ps / 1000.0)
    eta_bar_routed = eta_bar * det.route_correction
    rep.r_sync = sync_rate(rep.r_sync_trials, src.eta_h1, src.eta_h2, eta_bar_routed)
    rep.zeta = rep.r_sync / rep.r_stoc if rep.r_stoc > 0 else 0.0
    t_ref = config.sim.g2_ref_time_ns if g2_ref_time_ns is None else g2_ref_time_ns
    rep.g2_h = g2_after_memory(t_ref, src, mem)
    return rep
