"""Time-tag persistence: binary PTAG streams, CSV exports, run manifests.

PTAG layout (little-endian):
    offset 0   magic  b"PTAG"
    offset 4   u16    format version (currently 1)
    offset 6   u16    reserved, zero
    offset 8   u64    record count
    offset 16  records: (channel u8, time_ps u64), non-decreasing in time

A saved run is a basename with three files: ``<base>.ptag`` (tags),
``<base>.json`` (manifest: seed, durations, config text and hash, counts,
digest) and ``<base>.events.csv`` (electronics event log), which together
reconstruct a TagRecord.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, asdict

import numpy as np

from .config import config_hash, config_to_text, parse_config_text
from .engine import CHANNEL_NAMES, EventLog, TagRecord

PTAG_MAGIC = b"PTAG"
PTAG_VERSION = 1
_HEADER_BYTES = 16
_RECORD_DTYPE = np.dtype([("channel", "u1"), ("time", "<u8")])


class FileFormatError(Exception):
    """Malformed tag or manifest file; message includes the byte offset."""


def write_ptag(path, channels, times_ps) -> int:
    """Write (channel, time) records; returns the number of bytes written."""
    ch = np.ascontiguousarray(channels, dtype=np.uint8)
    t = np.ascontiguousarray(times_ps, dtype=np.int64)
    if ch.shape != t.shape:
        raise ValueError("channels and times must have equal length")
    if t.size and np.any(np.diff(t) < 0):
        raise ValueError("times must be non-decreasing")
    if t.size and t.min() < 0:
        raise ValueError("times must be >= 0")
    rec = np.empty(t.size, dtype=_RECORD_DTYPE)
    rec["channel"] = ch
    rec["time"] = t.astype(np.uint64)
    with open(path, "wb") as f:
        f.write(PTAG_MAGIC)
        f.write(np.uint16(PTAG_VERSION).tobytes())
        f.write(np.uint16(0).tobytes())
        f.write(np.uint64(t.size).tobytes())
        f.write(rec.tobytes())
    return _HEADER_BYTES + rec.nbytes


def read_ptag(path):
    """Read a PTAG file back into (channels uint8, times int64)."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER_BYTES:
        raise FileFormatError(f"{path}: truncated header at byte {len(raw)} "
                              f"(need {_HEADER_BYTES})")
    if raw[:4] != PTAG_MAGIC:
        raise FileFormatError(f"{path}: bad magic {raw[:4]!r} at byte 0")
    version = int(np.frombuffer(raw, "<u2", count=1, offset=4)[0])
    if version != PTAG_VERSION:
        raise FileFormatError(f"{path}: unsupported version {version} at byte 4")
    n = int(np.frombuffer(raw, "<u8", count=1, offset=8)[0])
    body = len(raw) - _HEADER_BYTES
    if body != n * _RECORD_DTYPE.itemsize:
        raise FileFormatError(
            f"{path}: expected {n} records ({n * _RECORD_DTYPE.itemsize} bytes) "
            f"after byte {_HEADER_BYTES}, found {body} bytes")
    rec = np.frombuffer(raw, _RECORD_DTYPE, count=n, offset=_HEADER_BYTES)
    t = rec["time"].astype(np.int64)
    if t.size:
        bad = np.flatnonzero(np.diff(t) < 0)
        if bad.size:
            off = _HEADER_BYTES + (int(bad[0]) + 1) * _RECORD_DTYPE.itemsize
            raise FileFormatError(f"{path}: time ordering violated at byte {off}")
    return rec["channel"].copy(), t


def write_tags_csv(path, channels, times_ps):
    ch = np.asarray(channels, dtype=np.uint8)
    t = np.asarray(times_ps, dtype=np.int64)
    with open(path, "w") as f:
        f.write("channel,time_ps\n")
        np.savetxt(f, np.column_stack([ch.astype(np.int64), t]),
                   fmt="%d,%d", delimiter="")


def read_tags_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    if data.size == 0:
        return np.empty(0, np.uint8), np.empty(0, np.int64)
    return data[:, 0].astype(np.uint8), data[:, 1]


def write_events_csv(path, log: EventLog):
    """Event log as CSV: one row per DDG-2 trigger and per trial."""
    with open(path, "w") as f:
        f.write("event,i1_ps,i2_ps,store_ps,retrieve_ps,ret_ok\n")
        for t in log.trig2:
            f.write(f"trig2,,{t},,,\n")
        for k in range(log.n_trials):
            f.write(f"trial,{log.trial_i1[k]},{log.trial_i2[k]},"
                    f"{log.store[k]},{log.retrieve[k]},{log.ret_ok[k]}\n")


def read_events_csv(path) -> EventLog:
    trig2, rows = [], []
    with open(path) as f:
        header = f.readline().strip()
        if header != "event,i1_ps,i2_ps,store_ps,retrieve_ps,ret_ok":
            raise FileFormatError(f"{path}: unexpected header {header!r}")
        for ln, line in enumerate(f, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != 6:
                raise FileFormatError(f"{path}: line {ln}: expected 6 fields")
            if parts[0] == "trig2":
                trig2.append(int(parts[2]))
            elif parts[0] == "trial":
                rows.append(tuple(int(x) for x in parts[1:]))
            else:
                raise FileFormatError(f"{path}: line {ln}: unknown event "
                                      f"{parts[0]!r}")
    rows = np.array(rows, dtype=np.int64).reshape(-1, 5)
    return EventLog(trig2=np.array(trig2, dtype=np.int64),
                    trial_i1=rows[:, 0], trial_i2=rows[:, 1],
                    store=rows[:, 2], retrieve=rows[:, 3],
                    ret_ok=rows[:, 4].astype(np.uint8))


@dataclass
class RunManifest:
    """Sidecar metadata that makes a saved run self-describing."""

    seed: int
    duration_s: float
    effective_duration_s: float
    config_hash: str
    config_text: str
    counts: dict
    digest: str
    format_version: int = PTAG_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        try:
            data = json.loads(text)
            return cls(**data)
        except (json.JSONDecodeError, TypeError) as exc:
            raise FileFormatError(f"bad manifest: {exc}") from exc


def manifest_for(record: TagRecord) -> RunManifest:
    return RunManifest(seed=record.seed, duration_s=record.duration_s,
                       effective_duration_s=record.effective_duration_s,
                       config_hash=config_hash(record.config),
                       config_text=config_to_text(record.config),
                       counts=record.counts(), digest=record.digest())


def save_record(base: str, record: TagRecord, fmt: str = "ptag") -> list:
    """Write <base>.{ptag|csv} + <base>.json + <base>.events.csv."""
    ch, t = record.merged()
    paths = []
    if fmt == "ptag":
        write_ptag(base + ".ptag", ch, t)
        paths.append(base + ".ptag")
    elif fmt == "csv":
        write_tags_csv(base + ".csv", ch, t)
        paths.append(base + ".csv")
    else:
        raise ValueError(f"unknown format {fmt!r} (ptag or csv)")
    with open(base + ".json", "w") as f:
        f.write(manifest_for(record).to_json() + "\n")
    paths.append(base + ".json")
    write_events_csv(base + ".events.csv", record.log)
    paths.append(base + ".events.csv")
    return paths


def load_record(base: str) -> TagRecord:
    """Rebuild a TagRecord from the three files written by save_record."""
    with open(base + ".json") as f:
        man = RunManifest.from_json(f.read())
    config = parse_config_text(man.config_text)
    if config_hash(config) != man.config_hash:
        raise FileFormatError(f"{base}.json: config hash mismatch")
    if os.path.exists(base + ".ptag"):
        ch, t = read_ptag(base + ".ptag")
    elif os.path.exists(base + ".csv"):
        ch, t = read_tags_csv(base + ".csv")
    else:
        raise FileFormatError(f"{base}: no .ptag or .csv tag file found")
    chans = {c: np.sort(t[ch == c], kind="stable") for c in CHANNEL_NAMES}
    log = read_events_csv(base + ".events.csv")
    rec = TagRecord(config=config, seed=man.seed, duration_s=man.duration_s,
                    effective_duration_s=man.effective_duration_s,
                    idler1=chans[0], idler2=chans[1],
                    sig_a=chans[2], sig_b=chans[3], log=log)
    if rec.digest() != man.digest:
        raise FileFormatError(f"{base}: tag digest mismatch against manifest")
    return rec
