"""Flat key=value config files for SystemConfig, with ps/ns/us unit suffixes."""

from __future__ import annotations

import hashlib
from importlib import resources
from pathlib import Path

from .params import (ConfigError, DecayModel, DetectorParams, ElectronicsParams,
                     MemoryParams, SimParams, SourceParams, SystemConfig)

_UNIT_PS = {"ps": 1.0, "ns": 1e3, "us": 1e6}


def _parse_number(key: str, raw: str, lineno: int) -> float:
    """Parse a numeric value, honoring a ps/ns/us suffix against the key's unit."""
    raw = raw.strip()
    unit = None
    for suf in _UNIT_PS:
        if raw.endswith(suf):
            unit = suf
            raw = raw[: -len(suf)].strip()
            break
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse number {raw!r} for {key}") from None
    if unit is not None:
        key_unit = key.rsplit("_", 1)[-1]
        if key_unit not in _UNIT_PS:
            raise ConfigError(f"line {lineno}: unit suffix on non-time key {key}")
        value *= _UNIT_PS[unit] / _UNIT_PS[key_unit]
    return value


_STR_KEYS = {"sim.trigger_mode", "sim.signal_routing", "sim.envelope"}
_INT_KEYS = {"source.pulse_fwhm_ps", "electronics.retrieval_trim_ps",
             "sim.noise_window_ps", "sim.event_cap"}


def parse_config_text(text: str) -> SystemConfig:
    kv: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.split("#", 1)[0].strip()
        if key in kv:
            raise ConfigError(f"line {lineno}: duplicate key {key}")
        if key in _STR_KEYS:
            kv[key] = raw
        else:
            v = _parse_number(key, raw, lineno)
            kv[key] = int(round(v)) if key in _INT_KEYS else v
    return config_from_dict(kv)


def _pop_ns_to_ps(kv: dict, key: str, default_ps: int) -> int:
    if key in kv:
        return int(round(float(kv.pop(key)) * 1e3))
    return default_ps


def config_from_dict(kv: dict[str, object]) -> SystemConfig:
    kv = dict(kv)

    def take(key, default):
        return kv.pop(key) if key in kv else default

    src = SourceParams(
        r1_cps=float(take("source.r1_cps", 50_000.0)),
        r2_cps=(float(kv.pop("source.r2_cps")) if "source.r2_cps" in kv else None),
        eta_h1=float(take("source.eta_h1", 0.209)),
        eta_h2=float(take("source.eta_h2", 0.159)),
        g2_source=float(take("source.g2_source", 0.0126)),
        rho=float(take("source.rho", 0.35)),
        pulse_fwhm_ps=int(take("source.pulse_fwhm_ps", 940)),
    )
    decay = DecayModel(
        eta0=float(take("memory.eta0", 0.262)),
        tau_sigma_ns=float(take("memory.tau_sigma_ns", 98.620047)),
        tau_gamma_ns=float(take("memory.tau_gamma_ns", 343.489407)),
    )
    mem = MemoryParams(
        decay=decay,
        transmission=float(take("memory.transmission", 0.68)),
        nu=float(take("memory.nu", 1.7e-5)),
        t_offres_factor=float(take("memory.t_offres_factor", 0.9)),
        t_retrieval_factor=float(take("memory.t_retrieval_factor", 0.1)),
        retrieved_width_factor=float(take("memory.retrieved_width_factor", 1.5545)),
    )
    elec = ElectronicsParams(
        t_star_ps=_pop_ns_to_ps(kv, "electronics.t_star_ns", 100_000),
        tau_d1_ps=_pop_ns_to_ps(kv, "electronics.tau_d1_ns", 1_525_000),
        tau_d2_ps=_pop_ns_to_ps(kv, "electronics.tau_d2_ns", 260_000),
        pc_min_spacing_ps=_pop_ns_to_ps(kv, "electronics.pc_min_spacing_ns", 1_500_000),
        insertion_delay_ps=_pop_ns_to_ps(kv, "electronics.insertion_delay_ns", 22_000),
        retrieval_trim_ps=int(take("electronics.retrieval_trim_ps", 0)),
        retrieval_delay_ps=_pop_ns_to_ps(kv, "electronics.retrieval_delay_ns", 137_000),
        store_delay_ps=_pop_ns_to_ps(kv, "electronics.store_delay_ns", 15_000),
    )
    det = DetectorParams(
        efficiency=float(take("detector.efficiency", 0.91)),
        jitter_ps=float(take("detector.jitter_ps", 55.0)),
        coupling_memory=float(take("detector.coupling_memory", 0.98)),
        coupling_direct=float(take("detector.coupling_direct", 0.92)),
    )
    sim = SimParams(
        trigger_mode=str(take("sim.trigger_mode", "sync")),
        signal_routing=str(take("sim.signal_routing", "separate")),
        envelope=str(take("sim.envelope", "gaussian")),
        hom_mu=float(take("sim.hom_mu", 0.88)),
        fixed_storage_ns=float(take("sim.fixed_storage_ns", 20.0)),
        g2_ref_time_ns=float(take("sim.g2_ref_time_ns", 20.0)),
        noise_window_ps=int(take("sim.noise_window_ps", 3_500)),
        event_cap=int(take("sim.event_cap", 1_000_000_000)),
        chunk_seconds=float(take("sim.chunk_seconds", 2.0)),
    )
    if kv:
        raise ConfigError(f"unknown config keys: {sorted(kv)}")
    return SystemConfig(source=src, memory=mem, electronics=elec, detector=det, sim=sim)


def config_to_text(cfg: SystemConfig) -> str:
    """Canonical serialization: fixed key order, full precision."""
    s, m, e, d, si = cfg.source, cfg.memory, cfg.electronics, cfg.detector, cfg.sim
    items = [
        ("source.r1_cps", s.r1_cps),
        ("source.r2_cps", s.r2_cps),
        ("source.eta_h1", s.eta_h1),
        ("source.eta_h2", s.eta_h2),
        ("source.g2_source", s.g2_source),
        ("source.rho", s.rho),
        ("source.pulse_fwhm_ps", s.pulse_fwhm_ps),
        ("memory.eta0", m.decay.eta0),
        ("memory.tau_sigma_ns", m.decay.tau_sigma_ns),
        ("memory.tau_gamma_ns", m.decay.tau_gamma_ns),
        ("memory.transmission", m.transmission),
        ("memory.nu", m.nu),
        ("memory.t_offres_factor", m.t_offres_factor),
        ("memory.t_retrieval_factor", m.t_retrieval_factor),
        ("memory.retrieved_width_factor", m.retrieved_width_factor),
        ("electronics.t_star_ns", e.t_star_ps / 1e3),
        ("electronics.tau_d1_ns", e.tau_d1_ps / 1e3),
        ("electronics.tau_d2_ns", e.tau_d2_ps / 1e3),
        ("electronics.pc_min_spacing_ns", e.pc_min_spacing_ps / 1e3),
        ("electronics.insertion_delay_ns", e.insertion_delay_ps / 1e3),
        ("electronics.retrieval_trim_ps", e.retrieval_trim_ps),
        ("electronics.retrieval_delay_ns", e.retrieval_delay_ps / 1e3),
        ("electronics.store_delay_ns", e.store_delay_ps / 1e3),
        ("detector.efficiency", d.efficiency),
        ("detector.jitter_ps", d.jitter_ps),
        ("detector.coupling_memory", d.coupling_memory),
        ("detector.coupling_direct", d.coupling_direct),
        ("sim.trigger_mode", si.trigger_mode),
        ("sim.signal_routing", si.signal_routing),
        ("sim.envelope", si.envelope),
        ("sim.hom_mu", si.hom_mu),
        ("sim.fixed_storage_ns", si.fixed_storage_ns),
        ("sim.g2_ref_time_ns", si.g2_ref_time_ns),
        ("sim.noise_window_ps", si.noise_window_ps),
        ("sim.event_cap", si.event_cap),
        ("sim.chunk_seconds", si.chunk_seconds),
    ]
    lines = []
    for key, val in items:
        if isinstance(val, float):
            lines.append(f"{key} = {val!r}")
        else:
            lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


def load_config(path: str | Path) -> SystemConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def save_config(cfg: SystemConfig, path: str | Path) -> None:
    Path(path).write_text(config_to_text(cfg), encoding="utf-8")


def config_hash(cfg: SystemConfig) -> str:
    return hashlib.sha256(config_to_text(cfg).encode("utf-8")).hexdigest()


def reference_config() -> SystemConfig:
    """The shipped reference parameter set (the low-rate operating point)."""
    with resources.files("photonsync.data").joinpath("reference.cfg").open("r") as fh:
        return parse_config_text(fh.read())
