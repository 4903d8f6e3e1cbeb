"""Reproduction harness: published reference values and the checks that
compare this package's analytic chain and Monte-Carlo runs against them.

Every check is expressed as a CheckResult so the CLI ``reproduce`` command
and the acceptance test suite share one implementation. Monte-Carlo inputs
are produced lazily through a RunCache that keeps only scalar measurement
summaries (records can exceed memory if retained).
"""

from __future__ import annotations

import gc
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import analysis, model
from .engine import run_sim
from .fit import G2Dataset, calibrate_decay, fit_decay, fit_g2_transmission
from .params import (DecayModel, ElectronicsParams, MemoryParams, SimParams,
                     SourceParams, SystemConfig)

# Published reference measurements this package is checked against.
REF_ZETA_LOW = (28.6, 1.8)          # enhancement factor at 50 kcps, value +- error
REF_R_SYNC_LOW = 44.0               # synchronized pair rate at 50 kcps (1/s)
REF_R_STOC_HIGH = 115.0             # stochastic pair rate at 440 kcps (1/s)
REF_R_SYNC_HIGH = (1200.0, 10.0)    # synchronized rate at 440 kcps; the
                                    # hardware degrades at this rate, so the
                                    # model may exceed it by up to 15 %
REF_DOWNTIME_HIGH = 0.69
REF_DOWNTIME_LOW = (0.082, 0.005)
REF_ETA12 = (0.243, 0.008)          # memory efficiency at 12 ns storage
REF_G2_MEMORY_20NS = (0.023, 0.001)
REF_SNR = (3100.0, 400.0)
REF_V_STOC = (0.88, 0.04)
REF_V_SYNC = (0.76, 0.05)
REF_OVERLAP = (0.91, 0.03)

# Calibration targets of the default decay model.
CAL_ETA0 = 0.262
CAL_LIFETIME_NS = 114.0
CAL_ETA_BAR = 0.196
CAL_T_STAR_NS = 100.0

BASE_SEED = 20260826

# Simulated durations (s) per sweep point, bounded by available memory (the
# tag record of one run must fit in RAM together with its analysis
# temporaries; the idler streams scale as the herald rate over the
# heralding efficiency).
SWEEP = ((50_000.0, 0.35), (200_000.0, 0.35), (440_000.0, 0.10))
SYNC_DURATIONS = {50_000.0: 100.0, 200_000.0: 40.0, 440_000.0: 20.0}
OFF_DURATIONS = {50_000.0: 60.0, 200_000.0: 30.0, 440_000.0: 15.0}


@dataclass
class CheckResult:
    criterion: int
    name: str
    value: float
    low: float
    high: float
    passed: bool
    note: str = ""

    @classmethod
    def band(cls, criterion, name, value, low, high, note=""):
        return cls(criterion, name, float(value), float(low), float(high),
                   bool(low <= value <= high), note)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] criterion {self.criterion}: {self.name} = "
                f"{self.value:.6g} (allowed {self.low:.6g} .. {self.high:.6g})"
                + (f" -- {self.note}" if self.note else ""))


def _sweep_config(r1: float, rho: float, **sim_kwargs) -> SystemConfig:
    return SystemConfig().with_(source=SourceParams(r1_cps=r1, rho=rho),
                                sim=SimParams(**sim_kwargs))


@dataclass
class RunCache:
    """Lazily simulates and analyzes runs, caching scalar summaries only."""

    seed: int = BASE_SEED
    scale: float = 1.0   # duration multiplier (CLI --scale for quick looks)
    _store: dict = field(default_factory=dict)
    log_stats: list = field(default_factory=list)

    def _collect_log_stats(self, tag, record):
        log = record.log
        e = record.config.electronics

        def min_spacing(a):
            return int(np.diff(a).min()) if a.size > 1 else None

        self.log_stats.append({
            "run": tag,
            "trig2_spacing": min_spacing(log.trig2),
            "trig2_limit": e.tau_d2_ps,
            "trial_spacing": min_spacing(log.trial_i1),
            "trial_limit": e.tau_d1_ps,
            "store_spacing": min_spacing(log.store),
            "retrieve_spacing": min_spacing(
                log.retrieve[log.ret_ok.astype(bool)]),
            "pc_limit": e.pc_min_spacing_ps,
        })

    def _run(self, tag, config, seed_offset, duration):
        gc.collect()   # large records: release the previous run first
        record = run_sim(config, self.seed + seed_offset,
                         duration * self.scale)
        if config.sim.trigger_mode in ("sync", "fixed"):
            self._collect_log_stats(tag, record)
        return record

    def sync_point(self, r1: float, rho: float) -> dict:
        key = ("sync", r1)
        if key not in self._store:
            cfg = _sweep_config(r1, rho)
            rec = self._run(f"sync-{int(r1)}", cfg, int(r1) % 997,
                            SYNC_DURATIONS[r1])
            out = {name: vs for name, vs in analysis.pair_rates(rec).items()}
            retrieved, reference = analysis.envelope_histograms(rec)
            out["overlap_i"] = analysis.temporal_overlap(retrieved, reference)
            out["duration"] = rec.effective_duration_s
            self._store[key] = out
        return self._store[key]

    def off_point(self, r1: float, rho: float) -> dict:
        key = ("off", r1)
        if key not in self._store:
            cfg = _sweep_config(r1, rho, trigger_mode="off")
            rec = self._run(f"off-{int(r1)}", cfg, 7 + int(r1) % 997,
                            OFF_DURATIONS[r1])
            out = dict(analysis.pair_rates(rec))
            out["duration"] = rec.effective_duration_s
            self._store[key] = out
        return self._store[key]

    def hom_stoc(self) -> dict:
        if "hom_stoc" not in self._store:
            cfg = _sweep_config(440_000.0, 0.10, trigger_mode="off",
                                signal_routing="hom")
            rec = self._run("hom-stoc", cfg, 31, 15.0)
            hist = analysis.hom_scan_stoc(rec)
            v, se = analysis.visibility_from_scan(hist)
            self._store["hom_stoc"] = {"v": v, "se": se}
        return self._store["hom_stoc"]

    def hom_sync(self, r1: float, rho: float, dip_s: float, plat_s: float) -> dict:
        key = ("hom_sync", r1)
        if key not in self._store:
            def rec(trim, dur, off):
                cfg = SystemConfig().with_(
                    source=SourceParams(r1_cps=r1, rho=rho),
                    electronics=ElectronicsParams(retrieval_trim_ps=trim),
                    sim=SimParams(signal_routing="hom"))
                return self._run(f"hom-sync-{int(r1)}-trim{trim}", cfg,
                                 41 + off + int(r1) % 997, dur)
            dip = rec(0, dip_s, 0)
            plats = [rec(t, plat_s, 1 + i)
                     for i, t in enumerate((3000, 4000, 5000))]
            v, se = analysis.hom_visibility_sync(dip, plats)
            self._store[key] = {"v": v, "se": se}
        return self._store[key]

    def determinism(self) -> dict:
        if "determinism" not in self._store:
            cfg = SystemConfig()
            d1 = self._run("rerun-a", cfg, 99, 5.0).digest()
            d2 = self._run("rerun-b", cfg, 99, 5.0).digest()
            self._store["determinism"] = {"digest_a": d1, "digest_b": d2}
        return self._store["determinism"]


# ----------------------------------------------------------------------------
# criteria


def _timed_chain(cfg):
    """full_chain result and steady-state runtime (after one warm-up call)."""
    model.full_chain(cfg)
    t0 = time.perf_counter()
    rep = model.full_chain(cfg)
    return rep, time.perf_counter() - t0


def criterion_1() -> list:
    rep, elapsed = _timed_chain(SystemConfig())
    z, dz = REF_ZETA_LOW
    return [
        CheckResult.band(1, "zeta (50 kcps)", rep.zeta, z - dz, z + dz),
        CheckResult.band(1, "r_sync (50 kcps)", rep.r_sync,
                         0.9 * REF_R_SYNC_LOW, 1.1 * REF_R_SYNC_LOW),
        CheckResult.band(1, "full_chain runtime (s)", elapsed, 0.0, 1e-3),
    ]


def criterion_2() -> list:
    cfg = _sweep_config(440_000.0, 0.10)
    rep, elapsed = _timed_chain(cfg)
    v, dv = REF_R_SYNC_HIGH
    return [
        CheckResult.band(2, "r_stoc (440 kcps)", rep.r_stoc,
                         0.95 * REF_R_STOC_HIGH, 1.05 * REF_R_STOC_HIGH),
        CheckResult.band(2, "r_sync (440 kcps)", rep.r_sync,
                         v - 3 * dv, 1.15 * v,
                         note="model may exceed the degraded hardware by 15%"),
        CheckResult.band(2, "downtime (440 kcps)", rep.downtime,
                         REF_DOWNTIME_HIGH - 0.01, REF_DOWNTIME_HIGH + 0.01),
        CheckResult.band(2, "full_chain runtime (s)", elapsed, 0.0, 1e-3),
    ]


def criterion_3(cache: RunCache) -> list:
    rep = model.full_chain(SystemConfig())
    v, dv = REF_DOWNTIME_LOW
    out = [CheckResult.band(3, "downtime formula (50 kcps)", rep.downtime,
                            v - dv, v + dv)]
    mc = cache.sync_point(50_000.0, 0.35)
    dt, dt_se = mc["downtime"]
    out.append(CheckResult.band(
        3, "downtime MC accounting", dt,
        rep.downtime - 3 * dt_se, rep.downtime + 3 * dt_se,
        note="event-log accounting vs formula, 3 sigma"))
    return out


def criterion_4() -> list:
    decay = calibrate_decay(CAL_ETA0, CAL_LIFETIME_NS, CAL_ETA_BAR,
                            CAL_T_STAR_NS)
    eta_1e = model.memory_efficiency(CAL_LIFETIME_NS, decay)
    eta_bar = model.avg_memory_efficiency(decay, CAL_T_STAR_NS)
    eta12 = model.memory_efficiency(12.0, decay)
    v, dv = REF_ETA12
    return [
        CheckResult.band(4, "eta(114 ns) / (eta0/e) - 1",
                         eta_1e / (CAL_ETA0 / math.e) - 1.0, -1e-6, 1e-6),
        CheckResult.band(4, "eta_bar(100 ns)", eta_bar,
                         CAL_ETA_BAR - 1e-4, CAL_ETA_BAR + 1e-4),
        CheckResult.band(4, "eta(12 ns), quoted precision", round(eta12, 3),
                         v - dv, v + dv,
                         note="compared at the 3-decimal precision of the "
                              "published 24.3 +- 0.8 %"),
    ]


def criterion_5() -> list:
    src = SourceParams()
    mem = MemoryParams()
    g20 = model.g2_after_memory(20.0, src, mem)
    t = np.linspace(0.0, 100.0, 51)
    g2 = np.array([model.g2_after_memory(float(x), src, mem) for x in t])
    v, dv = REF_G2_MEMORY_20NS
    return [
        CheckResult.band(5, "g2 after memory (20 ns)", g20, 0.020, 0.024),
        CheckResult.band(5, "band overlap with published",
                         min(0.024, v + dv) - max(0.020, v - dv), 0.0,
                         math.inf, note="intervals must intersect"),
        CheckResult.band(5, "monotonically increasing (min diff)",
                         float(np.diff(g2).min()), 0.0, math.inf),
    ]


def criterion_6() -> list:
    value = model.snr(0.20, 0.262, 1.7e-5)
    v, dv = REF_SNR
    return [
        CheckResult.band(6, "snr(0.20, 0.262, 1.7e-5)", round(value), 3082,
                         3082),
        CheckResult.band(6, "snr within published band", value, v - dv,
                         v + dv),
    ]


def criterion_7(cache: RunCache) -> list:
    out = []
    for r1, rho in SWEEP:
        cfg = _sweep_config(r1, rho)
        rep = model.full_chain(cfg)
        analytic = {"r_stoc": rep.r_stoc, "r_trig2": rep.r_trig2,
                    "r_sync_trials": rep.r_sync_trials,
                    "downtime": rep.downtime, "r_sync": rep.r_sync}
        mc = dict(cache.off_point(r1, rho))
        mc.update(cache.sync_point(r1, rho))
        tag = f"{int(r1 / 1000)}k"
        for name, target in analytic.items():
            value, se = mc[name]
            out.append(CheckResult.band(
                7, f"{name} ({tag})", value,
                target - 3 * se, target + 3 * se,
                note=f"MC vs analytic, 3 Poisson s.e. (se={se:.3g})"))
    return out


def criterion_8(seed: int = BASE_SEED) -> list:
    rng = np.random.default_rng(seed)
    # brute-force histogram equality
    mismatches = 0
    for _ in range(50):
        n_a, n_b = rng.integers(10, 1000, 2)
        a = np.sort(rng.integers(0, 10 ** 7, n_a)).astype(np.int64)
        b = np.sort(rng.integers(0, 10 ** 7, n_b)).astype(np.int64)
        tmin, bin_ps = -5000, 250
        h = analysis.cross_correlation(a, b, tmin, 5000, bin_ps)
        d = (b[None, :] - a[:, None]).ravel()
        d = d[(d >= tmin) & (d < 5000)]
        brute = np.bincount((d - tmin) // bin_ps, minlength=h.counts.size)
        if not np.array_equal(brute, h.counts):
            mismatches += 1
    # unit conditional autocorrelation of uncorrelated thinned light
    heralds = np.sort(rng.integers(0, 10 ** 12, 300_000)).astype(np.int64)

    def arm(n):
        return np.sort(rng.integers(0, 10 ** 12, n)).astype(np.int64)

    g2, se = analysis.g2h_estimate(heralds, arm(5_000_000), arm(5_000_000),
                                   offset_a=0, offset_b=0)
    # exact unity for identical histograms
    counts = rng.integers(0, 50, 64).astype(float)
    unity = analysis.temporal_overlap(counts, counts.copy())
    return [
        CheckResult.band(8, "brute-force mismatches (50 streams)",
                         mismatches, 0, 0),
        CheckResult.band(8, "g2 of uncorrelated light", g2, 1 - 3 * se,
                         1 + 3 * se),
        CheckResult.band(8, "overlap of identical histograms", unity, 1.0,
                         1.0, note="exact"),
    ]


def criterion_9(cache: RunCache) -> list:
    v, dv = REF_V_STOC
    stoc = cache.hom_stoc()
    out = [CheckResult.band(9, "V_stoc (440 kcps)", stoc["v"], v - dv, v + dv,
                            note=f"se={stoc['se']:.3f}")]
    v, dv = REF_V_SYNC
    low = cache.hom_sync(50_000.0, 0.35, dip_s=100.0, plat_s=30.0)
    out.append(CheckResult.band(9, "V_sync (50 kcps)", low["v"], v - dv,
                                v + dv, note=f"se={low['se']:.3f}"))
    mid = cache.hom_sync(200_000.0, 0.35, dip_s=10.0, plat_s=4.0)
    high = cache.hom_sync(440_000.0, 0.10, dip_s=5.0, plat_s=2.0)
    for tag, res in (("200 kcps", mid), ("440 kcps", high)):
        out.append(CheckResult.band(9, f"V_sync > 0.5 ({tag})", res["v"], 0.5,
                                    1.0, note=f"se={res['se']:.3f}"))
    v, dv = REF_OVERLAP
    sync_low = cache.sync_point(50_000.0, 0.35)
    out.append(CheckResult.band(9, "temporal overlap I",
                                sync_low["overlap_i"], v - dv, v + dv))
    return out


def _fd_optimality(cost, p, scales):
    """Max |dC/dp_i| * scale_i by central differences; with scale_i set to the
    1-sigma fit error this is the optimum displacement in sigma units."""
    worst = 0.0
    for i in range(len(p)):
        h = 1e-6 * max(abs(p[i]), 1.0)
        up = list(p)
        dn = list(p)
        up[i] += h
        dn[i] -= h
        g = (cost(up) - cost(dn)) / (2 * h)
        worst = max(worst, abs(g) * scales[i])
    return worst


def criterion_10(seed: int = BASE_SEED) -> list:
    rng = np.random.default_rng(seed + 1)
    t = np.linspace(2.0, 110.0, 16)
    misses_decay = 0
    for _ in range(100):
        true = DecayModel(eta0=rng.uniform(0.18, 0.30),
                          tau_sigma_ns=rng.uniform(70.0, 140.0),
                          tau_gamma_ns=rng.uniform(200.0, 500.0))
        sigma = np.full(t.size, 0.004)
        eta = model.memory_efficiency(t, true) + rng.normal(0, 0.004, t.size)
        eta = np.clip(eta, 1e-4, 0.99)
        fit = fit_decay(t, eta, sigma)
        for name, truth in (("eta0", true.eta0),
                            ("tau_sigma_ns", true.tau_sigma_ns),
                            ("tau_gamma_ns", true.tau_gamma_ns)):
            if abs(fit[name] - truth) > 3 * fit.error(name):
                misses_decay += 1

    t_g2 = np.array([5.0, 20.0, 40.0, 60.0, 80.0, 100.0])
    misses_g2 = 0
    for _ in range(100):
        f_true = rng.uniform(0.03, 0.20)
        src = SourceParams()
        mem = MemoryParams(t_retrieval_factor=f_true)
        g2 = np.array([model.g2_after_memory(float(x), src, mem)
                       for x in t_g2])
        sigma = np.full(t_g2.size, 0.0012)
        ds = G2Dataset(t_ns=t_g2, g2=g2 + rng.normal(0, 0.0012, t_g2.size),
                       sigma=sigma, rho=src.rho, decay=mem.decay,
                       g2_source=src.g2_source, transmission=mem.transmission)
        fit = fit_g2_transmission([ds])
        if abs(fit["t_retrieval_factor"] - f_true) > \
                3 * fit.error("t_retrieval_factor"):
            misses_g2 += 1

    # optimality at a representative solution
    true = DecayModel()
    sigma = np.full(t.size, 0.003)
    eta = model.memory_efficiency(t, true) + rng.normal(0, 0.003, t.size)
    fit = fit_decay(t, eta, sigma)

    def cost(p):
        dm = DecayModel(eta0=p[0], tau_sigma_ns=p[1], tau_gamma_ns=p[2])
        r = (model.memory_efficiency(t, dm) - eta) / sigma
        return 0.5 * float(r @ r)

    names = ("eta0", "tau_sigma_ns", "tau_gamma_ns")
    displacement = _fd_optimality(cost, [fit[n] for n in names],
                                  [fit.error(n) for n in names])

    return [
        CheckResult.band(10, "decay-fit 3-sigma misses (300 params)",
                         misses_decay, 0, 3,
                         note="binomially expected ~0.8 at 0.27% each"),
        CheckResult.band(10, "g2-fit 3-sigma misses (100 fits)", misses_g2,
                         0, 2),
        CheckResult.band(10, "optimum gradient displacement (sigma units)",
                         displacement, 0.0, 1e-2),
    ]


def criterion_11(cache: RunCache) -> list:
    det = cache.determinism()
    out = [CheckResult.band(
        11, "rerun digests differ", float(det["digest_a"] != det["digest_b"]),
        0, 0, note="byte-identical reruns required")]
    worst = 0
    checked = 0
    for st in cache.log_stats:
        for spacing, limit in (
                (st["trig2_spacing"], st["trig2_limit"]),
                (st["trial_spacing"], st["trial_limit"]),
                (st["store_spacing"], st["pc_limit"]),
                (st["retrieve_spacing"], st["pc_limit"])):
            if spacing is None:
                continue
            checked += 1
            if spacing < limit:
                worst += 1
    out.append(CheckResult.band(
        11, f"dead-time/spacing violations ({checked} logs)", worst, 0, 0))
    return out


ANALYTIC_CRITERIA = {1: criterion_1, 2: criterion_2, 4: criterion_4,
                     5: criterion_5, 6: criterion_6, 8: criterion_8,
                     10: criterion_10}
MC_CRITERIA = {3: criterion_3, 7: criterion_7, 9: criterion_9,
               11: criterion_11}


def run_criteria(numbers=None, cache: RunCache | None = None) -> list:
    """Evaluate the requested criteria (all by default); returns CheckResults."""
    if numbers is None:
        numbers = sorted({**ANALYTIC_CRITERIA, **MC_CRITERIA})
    cache = cache or RunCache()
    results = []
    for n in numbers:
        if n in ANALYTIC_CRITERIA:
            results.extend(ANALYTIC_CRITERIA[n]())
        elif n in MC_CRITERIA:
            results.extend(MC_CRITERIA[n](cache))
        else:
            raise ValueError(f"unknown criterion {n}")
    return results
