"""Parameter containers for the source / memory / electronics / detector chain.

Conventions:
  * event times and electronic delays are integer picoseconds
  * rates are floats in 1/s (cps for detected count rates)
  * decay-model time constants are floats in nanoseconds (fit parameters,
    not event times; math.inf is a valid limit for either tau)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

PS_PER_NS = 1_000
PS_PER_US = 1_000_000
PS_PER_S = 1_000_000_000_000


class ConfigError(ValueError):
    """A parameter set violates its invariants."""


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


@dataclass(frozen=True)
class SourceParams:
    """Effective (detected-rate) description of the two-channel pair source."""

    r1_cps: float = 50_000.0          # detected heralded-photon rate, channel 1
    r2_cps: float | None = None       # channel 2; defaults to 0.97 * r1
    eta_h1: float = 0.209             # detected heralding efficiencies
    eta_h2: float = 0.159
    g2_source: float = 0.0126         # conditional autocorrelation, un-stored photons
    rho: float = 0.35                 # off-resonant fraction of the noise-photon flux
    pulse_fwhm_ps: int = 940          # photon temporal FWHM

    def __post_init__(self):
        if self.r2_cps is None:
            object.__setattr__(self, "r2_cps", 0.97 * self.r1_cps)
        _check(self.r1_cps >= 0 and self.r2_cps >= 0, "rates must be >= 0")
        for name in ("eta_h1", "eta_h2"):
            v = getattr(self, name)
            _check(0 < v <= 1, f"{name} must be in (0, 1]")
        _check(self.g2_source >= 0, "g2_source must be >= 0")
        _check(0 <= self.rho <= 1, "rho must be in [0, 1]")
        _check(self.pulse_fwhm_ps > 0, "pulse_fwhm_ps must be > 0")

    @property
    def r_idler1_cps(self) -> float:
        return self.r1_cps / self.eta_h1

    @property
    def r_idler2_cps(self) -> float:
        return self.r2_cps / self.eta_h2


@dataclass(frozen=True)
class DecayModel:
    """Memory efficiency curve eta(t) = eta0 * exp(-t^2/(2 tau_sigma^2) - t/tau_gamma)."""

    # defaults: calibrated so that the 1/e lifetime is 114 ns and the
    # [0, 100 ns] average efficiency is 0.196 (see fit.calibrate_decay)
    eta0: float = 0.262
    tau_sigma_ns: float = 98.620047
    tau_gamma_ns: float = 343.489407

    def __post_init__(self):
        _check(0 < self.eta0 <= 1, "eta0 must be in (0, 1]")
        _check(self.tau_sigma_ns > 0, "tau_sigma_ns must be > 0")
        _check(self.tau_gamma_ns > 0, "tau_gamma_ns must be > 0")

    @property
    def lifetime_1e_ns(self) -> float:
        """Derived 1/e storage lifetime (time where eta drops to eta0/e)."""
        a = 0.5 / self.tau_sigma_ns**2
        b = 1.0 / self.tau_gamma_ns
        if a == 0:
            return 1.0 / b
        return (-b + math.sqrt(b * b + 4 * a)) / (2 * a)


@dataclass(frozen=True)
class MemoryParams:
    decay: DecayModel = field(default_factory=DecayModel)
    transmission: float = 0.68        # memory-module transmission T
    nu: float = 1.7e-5                # noise photons per memory operation
    t_offres_factor: float = 0.9      # off-resonant transmission, fraction of T
    t_retrieval_factor: float = 0.1   # on-resonant leak-through during retrieval, fraction of T
    retrieved_width_factor: float = 1.5545  # retrieved envelope width / input envelope width

    def __post_init__(self):
        _check(0 < self.transmission <= 1, "transmission must be in (0, 1]")
        _check(self.nu >= 0, "nu must be >= 0")
        _check(0 <= self.t_retrieval_factor <= self.t_offres_factor <= 1,
               "need 0 <= t_retrieval_factor <= t_offres_factor <= 1")
        _check(self.decay.eta0 <= self.transmission,
               "decay.eta0 cannot exceed transmission (internal efficiency > 1)")
        _check(self.retrieved_width_factor > 0, "retrieved_width_factor must be > 0")

    @property
    def t_retrieval(self) -> float:
        return self.t_retrieval_factor * self.transmission

    @property
    def t_offres(self) -> float:
        return self.t_offres_factor * self.transmission


@dataclass(frozen=True)
class ElectronicsParams:
    t_star_ps: int = 100_000              # idler-idler acceptance window t*
    tau_d1_ps: int = 1_525_000            # DDG-1 trigger acceptance downtime
    tau_d2_ps: int = 260_000              # DDG-2 trigger acceptance downtime
    pc_min_spacing_ps: int = 1_500_000    # minimal spacing between pulses of one Pockels cell
    insertion_delay_ps: int = 22_000      # DDG insertion delay
    retrieval_trim_ps: int = 0            # fine retrieval-time offset, 10-ps granularity
    # DDG-2 trigger -> PC-2 retrieval pulse delay (insertion delay excluded).
    # Default makes the storage time span (0, t*] for idlers across the gate.
    retrieval_delay_ps: int = 137_000
    store_delay_ps: int = 15_000          # DDG-1 trigger -> PC-1 storage pulse delay

    def __post_init__(self):
        _check(self.t_star_ps > 0, "t_star_ps must be > 0")
        _check(self.tau_d1_ps >= self.pc_min_spacing_ps,
               "tau_d1_ps must be >= pc_min_spacing_ps")
        _check(self.tau_d2_ps > 0, "tau_d2_ps must be > 0")
        _check(self.retrieval_trim_ps % 10 == 0,
               "retrieval_trim_ps must be a multiple of 10 ps")


@dataclass(frozen=True)
class DetectorParams:
    efficiency: float = 0.91
    jitter_ps: float = 55.0
    coupling_memory: float = 0.98     # mating-sleeve transmission, memory fiber
    coupling_direct: float = 0.92     # mating-sleeve transmission, detector fiber

    def __post_init__(self):
        for name in ("efficiency", "coupling_memory", "coupling_direct"):
            v = getattr(self, name)
            _check(0 < v <= 1, f"{name} must be in (0, 1]")
        _check(self.jitter_ps >= 0, "jitter_ps must be >= 0")

    @property
    def route_correction(self) -> float:
        """Detected-rate correction for routing signal-1 via the memory fiber.

        Measured efficiencies are scaled by coupling_direct/coupling_memory so the
        memory route is not credited with the better fiber coupling.
        """
        return self.coupling_direct / self.coupling_memory


TRIGGER_MODES = ("sync", "fixed", "off")
SIGNAL_ROUTINGS = ("separate", "hbt1", "hom")
ENVELOPES = ("gaussian", "two-sided-exponential")


@dataclass(frozen=True)
class SimParams:
    """Knobs of the event simulator that are not physical device parameters."""

    trigger_mode: str = "sync"        # sync | fixed | off
    signal_routing: str = "separate"  # separate | hbt1 | hom
    envelope: str = "gaussian"
    hom_mu: float = 0.88              # static distinguishability factor of the beamsplitter
    fixed_storage_ns: float = 20.0    # storage time in "fixed" trigger mode
    g2_ref_time_ns: float = 20.0      # reference storage time for the report's g2 field
    noise_window_ps: int = 3_500      # window defining the noise-flux budget (herald window)
    event_cap: int = 1_000_000_000
    chunk_seconds: float = 2.0        # internal generation chunk (fixed; part of determinism)

    def __post_init__(self):
        _check(self.trigger_mode in TRIGGER_MODES, f"trigger_mode must be one of {TRIGGER_MODES}")
        _check(self.signal_routing in SIGNAL_ROUTINGS,
               f"signal_routing must be one of {SIGNAL_ROUTINGS}")
        _check(self.envelope in ENVELOPES, f"envelope must be one of {ENVELOPES}")
        _check(0 <= self.hom_mu <= 1, "hom_mu must be in [0, 1]")
        _check(self.fixed_storage_ns >= 0, "fixed_storage_ns must be >= 0")
        _check(self.noise_window_ps > 0, "noise_window_ps must be > 0")
        _check(self.event_cap > 0, "event_cap must be > 0")
        _check(self.chunk_seconds > 0, "chunk_seconds must be > 0")


@dataclass(frozen=True)
class SystemConfig:
    source: SourceParams = field(default_factory=SourceParams)
    memory: MemoryParams = field(default_factory=MemoryParams)
    electronics: ElectronicsParams = field(default_factory=ElectronicsParams)
    detector: DetectorParams = field(default_factory=DetectorParams)
    sim: SimParams = field(default_factory=SimParams)

    def with_(self, **sections) -> "SystemConfig":
        """Return a copy with whole sections replaced (config.with_(source=...))."""
        return replace(self, **sections)


@dataclass
class RatesReport:
    """Derived metrics bundle; values in 1/s unless dimensionless, errors are 1 s.e."""

    r_stoc: float | None = None
    r_stoc_err: float | None = None
    r_sync: float | None = None
    r_sync_err: float | None = None
    zeta: float | None = None
    zeta_err: float | None = None
    r_trig2: float | None = None
    r_trig2_err: float | None = None
    r_sync_trials: float | None = None
    r_sync_trials_err: float | None = None
    downtime: float | None = None
    downtime_err: float | None = None
    g2_h: float | None = None
    g2_h_err: float | None = None
    hom_visibility: float | None = None
    hom_visibility_err: float | None = None
    overlap_i: float | None = None
    overlap_i_err: float | None = None

    _FIELDS = ("r_stoc", "r_sync", "zeta", "r_trig2", "r_sync_trials",
               "downtime", "g2_h", "hom_visibility", "overlap_i")

    def rows(self):
        """(metric, value, stderr) triples for the populated fields."""
        out = []
        for name in self._FIELDS:
            v = getattr(self, name)
            if v is not None:
                out.append((name, v, getattr(self, name + "_err")))
        return out
