"""Estimators operating on time-tag records: correlation histograms,
conditional autocorrelation, pair/trial rates, decay curves, interference
visibility and envelope overlap.

All estimators consume sorted int64 picosecond tag arrays (and, where
synchronization conditioning is required, the electronics event log of the
record). Counting uncertainties are Poisson/binomial standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .engine import TagRecord
from .params import RatesReport

__all__ = [
    "Histogram", "WindowSpec", "cross_correlation", "locate_offset",
    "window_hits", "g2h_estimate", "pair_rates", "decay_curve",
    "hom_scan_stoc", "hom_coincidences_sync", "visibility_from_scan",
    "hom_visibility_sync", "temporal_overlap", "envelope_histograms",
    "analyze_record",
]


@dataclass
class Histogram:
    """Binned coincidence counts: counts[i] covers [edges[i], edges[i+1])."""

    edges_ps: np.ndarray
    counts: np.ndarray
    n_ref: int = 0        # reference tags that contributed (for normalization)

    @property
    def centers_ps(self) -> np.ndarray:
        return 0.5 * (self.edges_ps[:-1] + self.edges_ps[1:])

    @property
    def bin_ps(self) -> int:
        return int(self.edges_ps[1] - self.edges_ps[0])

    def density(self) -> np.ndarray:
        """Counts normalized to unit sum (empirical probability per bin)."""
        s = self.counts.sum()
        return self.counts / s if s > 0 else np.zeros_like(self.counts, float)


@dataclass(frozen=True)
class WindowSpec:
    """Coincidence windows of the analysis (full widths, ps)."""

    herald_ps: int = 3500       # signal-vs-herald acceptance window
    accidental_ps: int = 600    # idler-idler window for stochastic pairs
    search_span_ps: int = 40_000
    bin_ps: int = 100


def cross_correlation(a, b, tmin_ps: int, tmax_ps: int, bin_ps: int) -> Histogram:
    """Histogram of pairwise delays (b - a) in [tmin_ps, tmax_ps).

    Linear-time two-pointer merge over the sorted streams; the span must be a
    whole number of bins.
    """
    a = np.ascontiguousarray(a, dtype=np.int64)
    b = np.ascontiguousarray(b, dtype=np.int64)
    if bin_ps <= 0 or (tmax_ps - tmin_ps) <= 0:
        raise ValueError("need tmax > tmin and bin_ps > 0")
    if (tmax_ps - tmin_ps) % bin_ps:
        raise ValueError("span must be a multiple of bin_ps")
    nbins = (tmax_ps - tmin_ps) // bin_ps
    counts = np.zeros(nbins, np.int64)
    kernels.xcorr_hist(a, b, tmin_ps, tmax_ps, bin_ps, counts)
    edges = tmin_ps + bin_ps * np.arange(nbins + 1, dtype=np.int64)
    return Histogram(edges_ps=edges, counts=counts, n_ref=int(a.size))


def locate_offset(ref, x, window: WindowSpec = WindowSpec()) -> int:
    """Delay of the coincidence peak of stream x relative to ref (ps)."""
    h = cross_correlation(ref, x, -window.search_span_ps, window.search_span_ps,
                          window.bin_ps)
    if not h.counts.any():
        raise ValueError("no coincidences found in the search span")
    return int(h.centers_ps[int(np.argmax(h.counts))])


def window_hits(ref, x, offset_ps: int, width_ps: int):
    """Per-ref counts of x tags with (x - ref) in offset ± width/2."""
    ref = np.asarray(ref, dtype=np.int64)
    x = np.asarray(x, dtype=np.int64)
    lo = np.searchsorted(x, ref + (offset_ps - width_ps // 2))
    hi = np.searchsorted(x, ref + (offset_ps + width_ps // 2))
    return hi - lo


def _ratio_se(n_num, n_dens):
    """Relative standard error of a product/ratio of Poisson counts."""
    return math.sqrt(sum(1.0 / max(n, 1) for n in n_num + n_dens))


def g2h_estimate(heralds, a, b, window: WindowSpec = WindowSpec(),
                 offset_a: int | None = None, offset_b: int | None = None):
    """Heralded conditional autocorrelation from a split signal channel.

    g2_h = N_hab * N_h / (N_ha * N_hb) over the herald window; returns
    (value, standard error). Offsets of each split arm relative to the
    heralds are located from the data when not given.
    """
    heralds = np.asarray(heralds, dtype=np.int64)
    if heralds.size == 0:
        raise ValueError("no heralds")
    if offset_a is None:
        offset_a = locate_offset(heralds, a, window)
    if offset_b is None:
        offset_b = locate_offset(heralds, b, window)
    ha = window_hits(heralds, a, offset_a, window.herald_ps) > 0
    hb = window_hits(heralds, b, offset_b, window.herald_ps) > 0
    n_h = heralds.size
    n_a = int(ha.sum())
    n_b = int(hb.sum())
    n_ab = int((ha & hb).sum())
    if n_a == 0 or n_b == 0:
        raise ValueError("no heralded counts in either arm")
    g2 = n_ab * n_h / (n_a * n_b)
    return g2, g2 * _ratio_se((n_ab,), (n_a, n_b))


# ----------------------------------------------------------------------------
# pair/trial rates


def _signal2_delay_ps(record: TagRecord) -> int:
    e = record.config.electronics
    return e.insertion_delay_ps + e.retrieval_delay_ps


def pair_rates(record: TagRecord, window: WindowSpec = WindowSpec()) -> dict:
    """Measured rates of the record, keyed by metric name, as (value, se).

    Trigger-off records yield the stochastic pair rate r_stoc (detected
    pair-1 x pair-2 quadruple coincidences inside the idler-idler window).
    Synchronized records yield r_trig2, r_sync_trials, the event-log downtime
    fraction and the synchronized pair rate r_sync.
    """
    t = record.effective_duration_s
    cfg = record.config
    d = _signal2_delay_ps(record)
    out = {}
    if cfg.sim.trigger_mode == "off":
        p1 = record.idler1[window_hits(record.idler1, record.sig_a, d,
                                       window.herald_ps) > 0]
        p2 = record.idler2[window_hits(record.idler2, record.sig_b, d,
                                       window.herald_ps) > 0]
        n = int((window_hits(p1, p2, 0, window.accidental_ps) > 0).sum())
        out["r_stoc"] = (n / t, math.sqrt(n) / t)
        return out

    log = record.log
    e = cfg.electronics
    out["r_trig2"] = (log.n_trig2 / t, math.sqrt(log.n_trig2) / t)
    out["r_sync_trials"] = (log.n_trials / t, math.sqrt(log.n_trials) / t)
    tau_d1, tau_d2 = e.tau_d1_ps * 1e-12, e.tau_d2_ps * 1e-12
    dt = ((log.n_trig2 - log.n_trials) * tau_d2 + log.n_trials * tau_d1) / t
    dt_se = math.sqrt(log.n_trig2 * tau_d2 ** 2
                      + log.n_trials * (tau_d1 - tau_d2) ** 2) / t
    out["downtime"] = (dt, dt_se)
    if cfg.sim.signal_routing == "separate":
        ok = log.ret_ok.astype(bool)
        a_hit = window_hits(log.retrieve[ok], record.sig_a, 0,
                            window.herald_ps) > 0
        b_hit = window_hits(log.trial_i2[ok], record.sig_b, d,
                            window.herald_ps) > 0
        n = int((a_hit & b_hit).sum())
        out["r_sync"] = (n / t, math.sqrt(n) / t)
    return out


def decay_curve(record: TagRecord, window: WindowSpec = WindowSpec(),
                n_bins: int = 10):
    """Memory efficiency vs storage time from a synchronized record.

    Bins the logged trials by storage time; the efficiency estimate divides
    the background-subtracted retrieval detection probability by the
    channel-1 heralding efficiency and route correction. Returns
    (t_ns, eta, se) arrays.
    """
    log = record.log
    ok = log.ret_ok.astype(bool) & (log.storage_ps > 0)
    stor_ns = log.storage_ps[ok] / 1000.0
    ret = log.retrieve[ok]
    hits = window_hits(ret, record.sig_a, 0, window.herald_ps) > 0
    # sideband: same-size window far from the retrieval peak
    side = window_hits(ret, record.sig_a, -10 * window.herald_ps,
                       window.herald_ps) > 0
    edges = np.linspace(0.0, stor_ns.max(), n_bins + 1)
    denom = record.config.source.eta_h1 * record.config.detector.route_correction
    t_ns = np.empty(n_bins)
    eta = np.empty(n_bins)
    se = np.empty(n_bins)
    for i in range(n_bins):
        sel = (stor_ns >= edges[i]) & (stor_ns < edges[i + 1])
        n = int(sel.sum())
        if n == 0:
            t_ns[i], eta[i], se[i] = np.nan, np.nan, np.inf
            continue
        p = hits[sel].mean() - side[sel].mean()
        t_ns[i] = stor_ns[sel].mean()
        eta[i] = p / denom
        se[i] = math.sqrt(max(p * (1 - p), 1e-12) / n) / denom
    return t_ns, eta, se


# ----------------------------------------------------------------------------
# two-photon interference


_SIDEBAND_PS = 40_000  # displacement of the accidental-estimation windows


def _port_hits(centers1, centers2, tags, width_ps, shift_ps=0):
    """Tags within width/2 of either expected envelope center (bool per pair)."""
    h1 = window_hits(centers1, tags, shift_ps, width_ps) > 0
    h2 = window_hits(centers2, tags, shift_ps, width_ps) > 0
    return h1 | h2


def hom_scan_stoc(record: TagRecord, window: WindowSpec = WindowSpec(),
                  span_ps: int = 6000, bin_ps: int = 300):
    """Cross-port coincidences vs idler-idler delay for a trigger-off record.

    For idler pairs with delay tau = t_i1 - t_i2 the two signal photons reach
    the beamsplitter offset by tau; interference suppresses cross-port
    coincidences around tau = 0. Accidental coincidences are estimated from
    time-displaced sideband windows and subtracted per bin. Returns a
    Histogram over tau (counts may be non-integer after subtraction).
    """
    i1, i2 = record.idler1, record.idler2
    d = _signal2_delay_ps(record)
    # enumerate idler pairs within the scan span (vectorized ragged ranges)
    lo = np.searchsorted(i2, i1 - span_ps)
    hi = np.searchsorted(i2, i1 + span_ps)
    cnt = hi - lo
    sel = cnt > 0
    total = int(cnt[sel].sum())
    k = np.repeat(np.flatnonzero(sel), cnt[sel])
    grp = np.repeat(np.cumsum(cnt[sel]) - cnt[sel], cnt[sel])
    j = np.repeat(lo[sel], cnt[sel]) + np.arange(total) - grp
    taus = i1[k] - i2[j]
    c1 = i1[k] + d   # expected envelope centers at the beamsplitter
    c2 = i2[j] + d

    w = window.herald_ps
    a0 = _port_hits(c1, c2, record.sig_a, w)
    b0 = _port_hits(c1, c2, record.sig_b, w)
    a_s = _port_hits(c1, c2, record.sig_a, w, _SIDEBAND_PS)
    b_s = _port_hits(c1, c2, record.sig_b, w, _SIDEBAND_PS)

    nbins = (2 * span_ps) // bin_ps
    rng = (-span_ps, span_ps)
    raw, edges = np.histogram(taus[a0 & b0], bins=nbins, range=rng)
    acc = (np.histogram(taus[a_s & b0], bins=nbins, range=rng)[0]
           + np.histogram(taus[a0 & b_s], bins=nbins, range=rng)[0]
           - np.histogram(taus[a_s & b_s], bins=nbins, range=rng)[0])
    return Histogram(edges_ps=edges.astype(np.int64),
                     counts=np.maximum(raw - acc, 0.0), n_ref=total)


def visibility_from_scan(hist: Histogram, plateau_min_ps: int = 3000,
                         plateau_max_ps: int = 5000):
    """Dip visibility 1 - C(0)/C_plateau of a delay-scan histogram."""
    c = hist.centers_ps
    dip = hist.counts[np.argmin(np.abs(c))]
    plat_sel = (np.abs(c) >= plateau_min_ps) & (np.abs(c) <= plateau_max_ps)
    if not plat_sel.any():
        raise ValueError("no plateau bins in the scan")
    plat = hist.counts[plat_sel].sum() / plat_sel.sum()
    v = 1.0 - dip / plat
    se = (dip / plat) * math.sqrt(1.0 / max(dip, 1)
                                  + 1.0 / max(hist.counts[plat_sel].sum(), 1))
    return v, se


def hom_coincidences_sync(record: TagRecord, window: WindowSpec = WindowSpec(),
                          accept_ps: int = 8000):
    """Cross-port coincidence count per trial of a synchronized record.

    Counts trials with at least one tag in each output port within a wide
    acceptance window around the retrieval time; accidentals are estimated
    from sideband windows and subtracted. Returns (n_cc, n_trials, n_raw).
    """
    log = record.log
    ok = log.ret_ok.astype(bool) & (log.storage_ps > 0)
    ret = log.retrieve[ok]
    w = 2 * accept_ps
    a0 = window_hits(ret, record.sig_a, 0, w) > 0
    b0 = window_hits(ret, record.sig_b, 0, w) > 0
    a_s = window_hits(ret, record.sig_a, _SIDEBAND_PS, w) > 0
    b_s = window_hits(ret, record.sig_b, _SIDEBAND_PS, w) > 0
    raw = int((a0 & b0).sum())
    acc = (int((a_s & b0).sum()) + int((a0 & b_s).sum())
           - int((a_s & b_s).sum()))
    return float(raw - acc), int(ok.sum()), raw


def hom_visibility_sync(dip_record: TagRecord, plateau_records,
                        window: WindowSpec = WindowSpec()):
    """Visibility from a zero-trim record and far-trim plateau records."""
    c0, n0, r0 = hom_coincidences_sync(dip_record, window)
    plateau = [hom_coincidences_sync(r, window) for r in plateau_records]
    cc = sum(p[0] for p in plateau)
    nn = sum(p[1] for p in plateau)
    rr = sum(p[2] for p in plateau)
    if cc <= 0 or n0 == 0:
        raise ValueError("insufficient coincidences for a visibility estimate")
    ratio = (c0 / n0) / (cc / nn)
    v = 1.0 - ratio
    se = ratio * math.sqrt(1.0 / max(r0, 1) + 1.0 / max(rr, 1))
    return v, se


# ----------------------------------------------------------------------------
# envelope overlap


def temporal_overlap(h1, h2) -> float:
    """Squared Bhattacharyya overlap of two envelope histograms.

    Accepts Histograms or raw count arrays on identical binning; histograms
    are normalized to unit area first. Identical inputs give exactly 1.
    """
    c1 = h1.counts if isinstance(h1, Histogram) else np.asarray(h1)
    c2 = h2.counts if isinstance(h2, Histogram) else np.asarray(h2)
    if c1.shape != c2.shape:
        raise ValueError("histograms must share binning")
    if np.array_equal(c1, c2):
        return 1.0
    p = c1 / c1.sum()
    q = c2 / c2.sum()
    return float(np.sum(np.sqrt(p * q)) ** 2)


def envelope_histograms(record: TagRecord, window: WindowSpec = WindowSpec(),
                        span_ps: int = 4000):
    """(retrieved, reference) envelope histograms of a synchronized record.

    Retrieved: signal-1 detections around the logged retrieval times.
    Reference: direct-path signal-2 detections around their expected centers.
    Both are sideband-subtracted (negative bins clamped to zero).
    """
    log = record.log
    ok = log.ret_ok.astype(bool) & (log.storage_ps > 0)
    d = _signal2_delay_ps(record)

    def conditioned(ref, x):
        h = cross_correlation(ref, x, -span_ps, span_ps, window.bin_ps)
        side = cross_correlation(ref, x, -span_ps - 40_000, span_ps - 40_000,
                                 window.bin_ps)
        floor = side.counts.mean()
        h.counts = np.maximum(h.counts - floor, 0.0)
        return h

    retrieved = conditioned(log.retrieve[ok], record.sig_a)
    reference = conditioned(log.trial_i2[ok] + d, record.sig_b)
    return retrieved, reference


# ----------------------------------------------------------------------------
# top level


def analyze_record(record: TagRecord, window: WindowSpec = WindowSpec()) -> RatesReport:
    """Populate the measurable RatesReport fields for a single record."""
    rep = RatesReport()
    rates = pair_rates(record, window)
    for name, (v, se) in rates.items():
        setattr(rep, name, v)
        setattr(rep, name + "_err", se)
    if rep.r_sync is not None and rep.r_stoc not in (None, 0):
        rep.zeta = rep.r_sync / rep.r_stoc
    cfg = record.config
    if cfg.sim.signal_routing == "hbt1":
        if cfg.sim.trigger_mode == "off":
            heralds = record.idler1
            off = _signal2_delay_ps(record)
        else:
            ok = record.log.ret_ok.astype(bool) & (record.log.storage_ps > 0)
            heralds = record.log.retrieve[ok]
            off = 0
        g2, se = g2h_estimate(heralds, record.sig_a, record.sig_b, window,
                              offset_a=off, offset_b=off)
        rep.g2_h, rep.g2_h_err = g2, se
    if cfg.sim.trigger_mode == "sync" and cfg.sim.signal_routing == "separate":
        retrieved, reference = envelope_histograms(record, window)
        if retrieved.counts.sum() > 0 and reference.counts.sum() > 0:
            rep.overlap_i = temporal_overlap(retrieved, reference)
    return rep
