"""Discrete-event Monte-Carlo engine for the synchronization chain.

Generates detector-equivalent time-tag streams: idler detections are Poisson
processes at the measured idler rates, heralded signal photons are attached
with the measured heralding efficiencies, and everything downstream (trigger
electronics, storage/retrieval, beamsplitter, detector jitter) acts on those
tags. All times are int64 picoseconds; runs are byte-reproducible for a given
(config, seed, duration).

Contaminant (multi-photon + broadband) light is modeled as continuous fluxes
on each signal channel whose magnitudes are set by the conditional
autocorrelation of the source: within a herald window of width w the total
contaminant flux on channel j is g2 * eta_hj / (2 w), split into an
off-resonant fraction rho (transmitted by the memory with T_offres) and an
on-resonant remainder (stored and decayed, or leaked with T_ret, during
synchronized operation). See docs/model-notes.md for the derivation showing
this reproduces both the bare source autocorrelation and the after-memory
contamination formula.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import memory_efficiency
from .params import ElectronicsParams, SourceParams, SystemConfig

PS_PER_S = 1_000_000_000_000

CH_IDLER1, CH_IDLER2, CH_SIG_A, CH_SIG_B = 0, 1, 2, 3
CHANNEL_NAMES = {CH_IDLER1: "idler1", CH_IDLER2: "idler2",
                 CH_SIG_A: "sig_a", CH_SIG_B: "sig_b"}

_GAUSS_FWHM = 2.0 * math.sqrt(2.0 * math.log(2.0))
_LONG_AGO = -(2 ** 62)


# ----------------------------------------------------------------------------
# source streams


class PoissonStream:
    """Streaming homogeneous Poisson process (float picosecond times)."""

    def __init__(self, rng: np.random.Generator, rate_cps: float):
        self.rng = rng
        self.rate_pps = rate_cps / PS_PER_S
        self.t = 0.0
        self.pending = np.empty(0)

    def upto(self, t1_ps: float) -> np.ndarray:
        """All events in [previous cut, t1_ps), ascending float ps."""
        if self.rate_pps <= 0.0:
            return np.empty(0)
        out = []
        if self.pending.size:
            out.append(self.pending[self.pending < t1_ps])
            self.pending = self.pending[self.pending >= t1_ps]
        while self.t < t1_ps and not self.pending.size:
            span = t1_ps - self.t
            mean = self.rate_pps * span
            n = int(mean + 4.0 * math.sqrt(mean + 1.0)) + 32
            ts = self.t + np.cumsum(self.rng.exponential(1.0 / self.rate_pps, n))
            self.t = ts[-1]
            out.append(ts[ts < t1_ps])
            self.pending = ts[ts >= t1_ps]
        return np.concatenate(out) if out else np.empty(0)


def generate_source_streams(source: SourceParams, duration_s: float, seed: int):
    """Stand-alone idler tag streams (no jitter): dict with 'idler1', 'idler2'."""
    ss = np.random.SeedSequence(seed).spawn(2)
    end = duration_s * PS_PER_S
    out = {}
    for name, rate, s in (("idler1", source.r_idler1_cps, ss[0]),
                          ("idler2", source.r_idler2_cps, ss[1])):
        stream = PoissonStream(np.random.Generator(np.random.PCG64(s)), rate)
        out[name] = np.rint(stream.upto(end)).astype(np.int64)
    return out


def _draw_envelope(rng: np.random.Generator, n: int, fwhm_ps: float, kind: str):
    if kind == "gaussian":
        return rng.normal(0.0, fwhm_ps / _GAUSS_FWHM, n)
    # two-sided exponential: Laplace with FWHM = 2 b ln 2
    return rng.laplace(0.0, fwhm_ps / (2.0 * math.log(2.0)), n)


# ----------------------------------------------------------------------------
# trigger electronics: reference single-event implementation
#
# run_sim uses the vectorized kernel (kernels.sync_trigger_scan); this state
# machine is the readable specification of the same logic and is checked
# against the kernel in the tests.


@dataclass
class TriggerState:
    busy1: int = _LONG_AGO          # DDG-1 accepts idler-1 triggers >= busy1
    busy2: int = _LONG_AGO          # DDG-2 accepts idler-2 triggers >= busy2
    gate_start: int = _LONG_AGO     # idler-1 acceptance gate of the last trigger
    gate_end: int = _LONG_AGO
    gate_i2: int = 0
    armed: bool = False             # Buffer armed: storage happened, retrieval pending
    armed_i1: int = 0
    pending_ret: int = _LONG_AGO    # scheduled PC-2 pulse time for the open gate
    last_store: int = _LONG_AGO     # previous PC-1 / PC-2 pulse times
    last_ret: int = _LONG_AGO
    pc1_violations: int = 0


def step_trigger_logic(state: TriggerState, event, elec: ElectronicsParams):
    """Advance the trigger state machine by one event.

    ``event`` is ("idler1"|"idler2"|"retrieve", time_ps). Returns emitted
    events: ("trig2", t) for accepted DDG-2 triggers, ("schedule_retrieve", t)
    for the PC-2 pulse the caller must feed back at its time, ("store", t,
    i1, i2) for PC-1 pulses and ("retrieve", t, ok) when the scheduled pulse
    arrives (ok=0 if suppressed by the PC-2 spacing guard or a gate that was
    not armed in time).
    """
    kind, t = event[0], event[1]
    out = []
    if kind == "idler2":
        if t < state.busy2:
            return out
        state.busy2 = t + elec.tau_d2_ps
        state.gate_start = t + elec.insertion_delay_ps
        state.gate_end = state.gate_start + elec.t_star_ps
        state.gate_i2 = t
        state.armed = False
        state.pending_ret = (t + elec.insertion_delay_ps
                             + elec.retrieval_delay_ps + elec.retrieval_trim_ps)
        out.append(("trig2", t))
        out.append(("schedule_retrieve", state.pending_ret))
    elif kind == "idler1":
        if (state.gate_start <= t <= state.gate_end
                and t >= state.busy1 and not state.armed):
            state.busy1 = t + elec.tau_d1_ps
            st = t + elec.insertion_delay_ps + elec.store_delay_ps
            if st - state.last_store < elec.pc_min_spacing_ps:
                state.pc1_violations += 1
            state.last_store = st
            state.armed = True
            state.armed_i1 = t
            out.append(("store", st, t, state.gate_i2))
    elif kind == "retrieve":
        if state.armed and t == state.pending_ret:
            ok = 1
            if t - state.last_ret < elec.pc_min_spacing_ps or state.armed_i1 > t:
                ok = 0
            else:
                state.last_ret = t
            state.armed = False
            out.append(("retrieve", t, ok))
    else:
        raise ValueError(f"unknown trigger event kind: {kind!r}")
    return out


def run_trigger_reference(i1, i2, elec: ElectronicsParams):
    """Event-by-event driver of step_trigger_logic over full tag arrays.

    Returns the same quantities as the scan kernel: dict with 'trig2',
    'trial_i1', 'trial_i2', 'store', 'retrieve', 'ret_ok', 'pc1_violations'.
    """
    state = TriggerState()
    heap = []
    for t in i1:
        heapq.heappush(heap, (int(t), 1, "idler1"))
    for t in i2:
        heapq.heappush(heap, (int(t), 0, "idler2"))
    trig2, trials = [], []
    while heap:
        t, _, kind = heapq.heappop(heap)
        for ev in step_trigger_logic(state, (kind, t), elec):
            if ev[0] == "trig2":
                trig2.append(ev[1])
            elif ev[0] == "schedule_retrieve":
                heapq.heappush(heap, (ev[1], 2, "retrieve"))
            elif ev[0] == "store":
                trials.append({"store": ev[1], "i1": ev[2], "i2": ev[3],
                               "retrieve": 0, "ok": 0})
            elif ev[0] == "retrieve":
                trials[-1]["retrieve"] = ev[1]
                trials[-1]["ok"] = ev[2]
    # trials whose retrieval never fired still have a scheduled pulse time
    for tr in trials:
        if tr["retrieve"] == 0:
            tr["retrieve"] = (tr["i2"] + elec.insertion_delay_ps
                              + elec.retrieval_delay_ps + elec.retrieval_trim_ps)
    arr = lambda k, dt: np.array([tr[k] for tr in trials], dtype=dt)
    return {"trig2": np.array(trig2, dtype=np.int64),
            "trial_i1": arr("i1", np.int64), "trial_i2": arr("i2", np.int64),
            "store": arr("store", np.int64), "retrieve": arr("retrieve", np.int64),
            "ret_ok": arr("ok", np.uint8), "pc1_violations": state.pc1_violations}


# ----------------------------------------------------------------------------
# record types


@dataclass
class EventLog:
    """Electronics-level events of a run (times are idler tag times, ps)."""

    trig2: np.ndarray       # accepted DDG-2 triggers
    trial_i1: np.ndarray    # per synchronization trial: accepted idler tags
    trial_i2: np.ndarray
    store: np.ndarray       # PC-1 / PC-2 pulse times
    retrieve: np.ndarray
    ret_ok: np.ndarray      # uint8; 0 = retrieval pulse suppressed

    @property
    def storage_ps(self) -> np.ndarray:
        return self.retrieve - self.store

    @property
    def n_trials(self) -> int:
        return int(self.trial_i1.size)

    @property
    def n_trig2(self) -> int:
        return int(self.trig2.size)


@dataclass
class TagRecord:
    """Result of a run: per-channel sorted int64 ps tag arrays + event log."""

    config: SystemConfig
    seed: int
    duration_s: float
    effective_duration_s: float
    idler1: np.ndarray
    idler2: np.ndarray
    sig_a: np.ndarray
    sig_b: np.ndarray
    log: EventLog

    def channels(self):
        return {CH_IDLER1: self.idler1, CH_IDLER2: self.idler2,
                CH_SIG_A: self.sig_a, CH_SIG_B: self.sig_b}

    def counts(self):
        return {name: int(self.channels()[ch].size)
                for ch, name in CHANNEL_NAMES.items()}

    def merged(self):
        """(channel uint8, time int64) arrays sorted by time, then channel."""
        chans = self.channels()
        ch = np.concatenate([np.full(a.size, c, np.uint8) for c, a in chans.items()])
        t = np.concatenate(list(chans.values()))
        order = np.lexsort((ch, t))
        return ch[order], t[order]

    def digest(self) -> str:
        """sha256 over all tag and event-log bytes (reproducibility check)."""
        h = hashlib.sha256()
        for _, a in sorted(self.channels().items()):
            h.update(np.ascontiguousarray(a).tobytes())
        for a in (self.log.trig2, self.log.trial_i1, self.log.trial_i2,
                  self.log.store, self.log.retrieve, self.log.ret_ok):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()


# ----------------------------------------------------------------------------
# pipeline stages (arrays of photons: time, envelope center, width, pairable)


def apply_memory(retrieve_ps, storage_ps, ret_ok, cfg: SystemConfig,
                 rng_mem: np.random.Generator, rng_bg: np.random.Generator):
    """Emit the channel-1 output photons of a batch of storage trials.

    Per trial with a fired retrieval pulse and positive storage time the
    heralded photon is detected with eta_h1 * route_correction * eta(t);
    stored contaminants, leak-through contaminants and memory noise photons
    are added on top. Returns (times, centers, widths, pairable).
    """
    src, mem, det, sim = cfg.source, cfg.memory, cfg.detector, cfg.sim
    corr = det.route_correction
    w_ps = float(sim.noise_window_ps)
    lam_on = (1.0 - src.rho) * src.g2_source * src.eta_h1 / 2.0

    live = (ret_ok.astype(bool)) & (storage_ps > 0)
    eta_t = np.zeros(retrieve_ps.size)
    eta_t[live] = memory_efficiency(storage_ps[live] / 1000.0, mem.decay)

    # retrieved bundle: heralded photon + stored contaminants + memory noise
    sig = rng_mem.random(retrieve_ps.size) < src.eta_h1 * corr * eta_t
    n_noise = rng_mem.poisson(lam_on * eta_t * corr)
    n_nu = rng_mem.random(retrieve_ps.size) < (live * mem.nu)
    # leak-through during the retrieval pulse, uniform over the window
    n_leak = rng_mem.poisson(live * (lam_on * mem.t_retrieval * corr))

    sigma_ret = (src.pulse_fwhm_ps / _GAUSS_FWHM) * mem.retrieved_width_factor
    t_sig = retrieve_ps[sig].astype(float)
    t_sig = t_sig + _draw_envelope(rng_mem, t_sig.size,
                                   src.pulse_fwhm_ps * mem.retrieved_width_factor,
                                   sim.envelope)
    c_sig = retrieve_ps[sig].astype(float)

    extra = np.repeat(retrieve_ps, n_noise + n_nu.astype(np.int64)).astype(float)
    extra = extra + _draw_envelope(rng_mem, extra.size,
                                   src.pulse_fwhm_ps * mem.retrieved_width_factor,
                                   sim.envelope)
    leak = np.repeat(retrieve_ps, n_leak).astype(float)
    leak = leak + (rng_bg.random(leak.size) - 0.5) * w_ps

    times = np.concatenate([t_sig, extra, leak])
    centers = np.concatenate([c_sig, extra, leak])
    widths = np.concatenate([np.full(t_sig.size, sigma_ret),
                             np.zeros(extra.size), np.zeros(leak.size)])
    pairable = np.zeros(times.size, bool)
    pairable[:t_sig.size] = True
    return times, centers, widths, pairable


def _overlap_factor(d, s1, s2):
    """Squared wavepacket overlap of two Gaussian envelopes offset by d."""
    ss = s1 * s1 + s2 * s2
    return (2.0 * s1 * s2 / ss) * np.exp(-(d * d) / (2.0 * ss))


def apply_hom_beamsplitter(ph1, ph2, mu: float, rng: np.random.Generator):
    """Mix two photon batches on a 50/50 beamsplitter with interference.

    ph1/ph2 are (times, centers, widths, pairable) tuples sorted by center.
    Pairable photons from opposite inputs whose envelopes overlap coalesce
    into the same output port with probability mu * |overlap|^2, reproducing
    Hong-Ou-Mandel suppression of cross-port coincidences; everything else is
    routed 50/50 independently. Returns (port_a_times, port_b_times).
    """
    t1, c1, w1, p1 = ph1
    t2, c2, w2, p2 = ph2
    i1 = np.flatnonzero(p1)
    i2 = np.flatnonzero(p2)
    window = 6.0 * max(float(w1[i1].max()) if i1.size else 0.0,
                       float(w2[i2].max()) if i2.size else 0.0, 1.0)
    m = kernels.match_pairs(c1[i1], c2[i2], window)
    a_parts, b_parts = [], []

    matched = m >= 0
    j1 = i1[matched]            # indices into ph1
    j2 = i2[m[matched]]         # indices into ph2
    if j1.size:
        p_coal = mu * _overlap_factor(c1[j1] - c2[j2], w1[j1], w2[j2])
        coal = rng.random(j1.size) < p_coal
        port = rng.random(j1.size) < 0.5
        # coalesced: both to one port; else independent ports
        indep = rng.random(j1.size) < 0.5
        to_a1 = np.where(coal, port, port)
        to_a2 = np.where(coal, port, indep)
        a_parts += [t1[j1[to_a1]], t2[j2[to_a2]]]
        b_parts += [t1[j1[~to_a1]], t2[j2[~to_a2]]]

    for t, used in ((t1, j1), (t2, j2)):
        rest = np.ones(t.size, bool)
        rest[used] = False
        tr = t[rest]
        to_a = rng.random(tr.size) < 0.5
        a_parts.append(tr[to_a])
        b_parts.append(tr[~to_a])

    a = np.concatenate(a_parts) if a_parts else np.empty(0)
    b = np.concatenate(b_parts) if b_parts else np.empty(0)
    return np.sort(a), np.sort(b)


def apply_detector(times, jitter_ps: float, rng: np.random.Generator):
    """Detection timestamping: Gaussian jitter, rounding to int ps, sorting."""
    t = np.asarray(times, dtype=float)
    if jitter_ps > 0:
        t = t + rng.normal(0.0, jitter_ps, t.size)
    return np.sort(np.rint(t).astype(np.int64), kind="stable")


# ----------------------------------------------------------------------------
# main driver


def run_sim(config: SystemConfig, seed: int, duration_s: float) -> TagRecord:
    """Simulate ``duration_s`` seconds of the experiment described by config.

    Generation is chunked; results are reproducible to the byte for a fixed
    (config, seed, duration). If sim.event_cap is hit the run stops at a chunk
    boundary and effective_duration_s reflects the simulated span.
    """
    src, mem, elec, det, sim = (config.source, config.memory,
                                config.electronics, config.detector, config.sim)
    mode, routing = sim.trigger_mode, sim.signal_routing
    if mode == "sync":
        if elec.tau_d2_ps < elec.insertion_delay_ps + elec.t_star_ps:
            raise ValueError("tau_d2 shorter than the acceptance gate: "
                             "overlapping gates are not supported")
        if (elec.tau_d2_ps < elec.insertion_delay_ps + elec.retrieval_delay_ps
                + elec.retrieval_trim_ps):
            raise ValueError("retrieval pulse would fire after the next DDG-2 "
                             "trigger; reduce retrieval_delay/trim")

    ss = np.random.SeedSequence(seed).spawn(6)
    rng_src1, rng_src2, rng_bg, rng_mem, rng_det, rng_bs = (
        np.random.Generator(np.random.PCG64(s)) for s in ss)

    corr = det.route_correction
    w_s = sim.noise_window_ps * 1e-12
    s2_delay = elec.insertion_delay_ps + elec.retrieval_delay_ps
    ret_offset = s2_delay + elec.retrieval_trim_ps
    sigma_src = src.pulse_fwhm_ps / _GAUSS_FWHM

    phi1 = src.g2_source * src.eta_h1 / (2.0 * w_s)  # contaminant fluxes, 1/s
    phi2 = src.g2_source * src.eta_h2 / (2.0 * w_s)
    bg2_rate = max(0.0, (1.0 - src.rho) * phi2 - src.r2_cps) + src.rho * phi2
    if mode == "off":
        bg1_rate = max(0.0, (1.0 - src.rho) * phi1 - src.r1_cps) + src.rho * phi1
    else:  # only the off-resonant flux passes the memory between retrievals
        bg1_rate = src.rho * phi1 * mem.t_offres * corr

    st_i1 = PoissonStream(rng_src1, src.r_idler1_cps)
    st_i2 = PoissonStream(rng_src2, src.r_idler2_cps)
    st_bg1 = PoissonStream(rng_bg, bg1_rate)
    st_bg2 = PoissonStream(rng_bg, bg2_rate)

    gen_ch2 = routing != "hbt1"
    total_ps = int(round(duration_s * PS_PER_S))
    chunk_ps = int(round(sim.chunk_seconds * PS_PER_S))
    guard_ps = (elec.tau_d2_ps + elec.insertion_delay_ps + elec.t_star_ps
                + elec.retrieval_delay_ps + abs(elec.retrieval_trim_ps) + 10 ** 6)

    # accumulators
    acc = {c: [] for c in CHANNEL_NAMES}
    lg = {k: [] for k in ("trig2", "trial_i1", "trial_i2", "store",
                          "retrieve", "ret_ok")}
    tail1 = np.empty(0, np.int64)
    tail2 = np.empty(0, np.int64)
    busy1 = busy2 = last_store = last_ret = _LONG_AGO
    fixed_busy1 = _LONG_AGO
    pc1_violations = 0
    n_events = 0
    end_ps = 0

    t0 = 0
    while t0 < total_ps:
        t1_ps = min(t0 + chunk_ps, total_ps)
        final = t1_ps >= total_ps

        i1f = st_i1.upto(t1_ps)
        i2f = st_i2.upto(t1_ps)
        i1 = apply_detector(i1f, det.jitter_ps, rng_det)
        i2 = apply_detector(i2f, det.jitter_ps, rng_det)
        acc[CH_IDLER1].append(i1)
        acc[CH_IDLER2].append(i2)

        ph1 = None  # channel-1 photons at the beamsplitter/detector plane
        if mode == "off":
            keep = rng_src1.random(i1.size) < src.eta_h1
            c = i1[keep].astype(float) + s2_delay
            t = c + _draw_envelope(rng_src1, c.size, src.pulse_fwhm_ps, sim.envelope)
            ph1 = [t, c, np.full(c.size, float(sigma_src)), np.ones(c.size, bool)]
        else:
            if mode == "sync":
                buf1 = np.concatenate([tail1, i1])
                buf2 = np.concatenate([tail2, i2])
                horizon = total_ps + guard_ps if final else t1_ps - guard_ps
                proc2 = buf2[buf2 <= horizon]
                tail2 = buf2[buf2 > horizon]
                (trig2, tr_i1, tr_i2, tr_store, tr_ret, tr_ok,
                 busy1, busy2, last_store, last_ret, viol) = kernels.sync_trigger_scan(
                    buf1, proc2, busy1, busy2, last_store, last_ret,
                    elec.t_star_ps, elec.tau_d1_ps, elec.tau_d2_ps,
                    elec.insertion_delay_ps, elec.store_delay_ps,
                    ret_offset, elec.pc_min_spacing_ps)
                pc1_violations += viol
                tail1 = buf1[buf1 > horizon]
                lg["trig2"].append(trig2)
            else:  # fixed-storage characterization mode: DDG-1 directly on idler-1
                keep, fixed_busy1 = kernels.dead_time_filter(
                    i1, elec.tau_d1_ps, fixed_busy1)
                tr_i1 = i1[keep]
                tr_i2 = tr_i1
                tr_store = tr_i1 + elec.insertion_delay_ps + elec.store_delay_ps
                tr_ret = tr_store + int(round(sim.fixed_storage_ns * 1000.0))
                tr_ok = np.ones(tr_i1.size, np.uint8)
                lg["trig2"].append(tr_i1)
            lg["trial_i1"].append(tr_i1)
            lg["trial_i2"].append(tr_i2)
            lg["store"].append(tr_store)
            lg["retrieve"].append(tr_ret)
            lg["ret_ok"].append(tr_ok)
            ph1 = list(apply_memory(tr_ret, tr_ret - tr_store, tr_ok,
                                    config, rng_mem, rng_bg))

        b1 = st_bg1.upto(t1_ps)
        ph1[0] = np.concatenate([ph1[0], b1])
        ph1[1] = np.concatenate([ph1[1], b1])
        ph1[2] = np.concatenate([ph1[2], np.zeros(b1.size)])
        ph1[3] = np.concatenate([ph1[3], np.zeros(b1.size, bool)])
        order = np.argsort(ph1[1], kind="stable")
        ph1 = [a[order] for a in ph1]

        ph2 = None
        if gen_ch2:
            keep2 = rng_src2.random(i2.size) < src.eta_h2
            c2 = i2[keep2].astype(float) + s2_delay
            t2 = c2 + _draw_envelope(rng_src2, c2.size, src.pulse_fwhm_ps, sim.envelope)
            b2 = st_bg2.upto(t1_ps)
            ph2 = [np.concatenate([t2, b2]), np.concatenate([c2, b2]),
                   np.concatenate([np.full(c2.size, float(sigma_src)), np.zeros(b2.size)]),
                   np.concatenate([np.ones(c2.size, bool), np.zeros(b2.size, bool)])]
            order = np.argsort(ph2[1], kind="stable")
            ph2 = [a[order] for a in ph2]

        if routing == "separate":
            sa, sb = ph1[0], ph2[0]
        elif routing == "hbt1":
            to_a = rng_det.random(ph1[0].size) < 0.5
            sa, sb = ph1[0][to_a], ph1[0][~to_a]
        else:  # hom
            sa, sb = apply_hom_beamsplitter(tuple(ph1), tuple(ph2), sim.hom_mu, rng_bs)
        acc[CH_SIG_A].append(apply_detector(sa, det.jitter_ps, rng_det))
        acc[CH_SIG_B].append(apply_detector(sb, det.jitter_ps, rng_det))

        n_events += i1.size + i2.size + sa.size + sb.size
        end_ps = t1_ps
        t0 = t1_ps
        if n_events >= sim.event_cap:
            break

    if pc1_violations:
        raise RuntimeError(f"{pc1_violations} storage pulses violated the "
                           "Pockels-cell minimum spacing (logic error)")

    chans = {c: np.sort(np.concatenate(a) if a else np.empty(0, np.int64),
                        kind="stable") for c, a in acc.items()}
    cat = lambda k, dt: (np.concatenate(lg[k]).astype(dt) if lg[k]
                         else np.empty(0, dt))
    log = EventLog(trig2=cat("trig2", np.int64),
                   trial_i1=cat("trial_i1", np.int64),
                   trial_i2=cat("trial_i2", np.int64),
                   store=cat("store", np.int64),
                   retrieve=cat("retrieve", np.int64),
                   ret_ok=cat("ret_ok", np.uint8))
    return TagRecord(config=config, seed=seed, duration_s=duration_s,
                     effective_duration_s=end_ps / PS_PER_S,
                     idler1=chans[CH_IDLER1], idler2=chans[CH_IDLER2],
                     sig_a=chans[CH_SIG_A], sig_b=chans[CH_SIG_B], log=log)
