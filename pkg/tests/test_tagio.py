"""Tag record persistence: binary and CSV round-trips, corruption errors."""

import numpy as np
import pytest

from photonsync import tagio
from photonsync.engine import run_sim
from photonsync.params import SimParams, SourceParams, SystemConfig


@pytest.fixture(scope="module")
def record():
    cfg = SystemConfig().with_(source=SourceParams(r1_cps=50_000.0))
    return run_sim(cfg, seed=42, duration_s=0.5)


def test_ptag_roundtrip(tmp_path, record):
    base = str(tmp_path / "run")
    paths = tagio.save_record(base, record, fmt="ptag")
    assert len(paths) == 3
    loaded = tagio.load_record(base)
    assert loaded.digest() == record.digest()
    assert loaded.config == record.config
    assert loaded.seed == record.seed


def test_csv_roundtrip(tmp_path, record):
    base = str(tmp_path / "run")
    tagio.save_record(base, record, fmt="csv")
    loaded = tagio.load_record(base)
    assert loaded.digest() == record.digest()


def test_ptag_bad_magic(tmp_path, record):
    base = str(tmp_path / "run")
    tagio.save_record(base, record, fmt="ptag")
    path = tmp_path / "run.ptag"
    data = bytearray(path.read_bytes())
    data[0] ^= 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(tagio.FileFormatError, match="byte 0"):
        tagio.read_ptag(path)


def test_ptag_bad_version(tmp_path, record):
    base = str(tmp_path / "run")
    tagio.save_record(base, record, fmt="ptag")
    path = tmp_path / "run.ptag"
    data = bytearray(path.read_bytes())
    data[4] = 99
    path.write_bytes(bytes(data))
    with pytest.raises(tagio.FileFormatError, match="byte 4"):
        tagio.read_ptag(path)


def test_ptag_truncated(tmp_path, record):
    base = str(tmp_path / "run")
    tagio.save_record(base, record, fmt="ptag")
    path = tmp_path / "run.ptag"
    data = path.read_bytes()
    path.write_bytes(data[:len(data) - 5])
    with pytest.raises(tagio.FileFormatError, match="expected"):
        tagio.read_ptag(path)


def test_ptag_unsorted_times(tmp_path):
    # the writer refuses unsorted input outright
    path = tmp_path / "bad.ptag"
    with pytest.raises(ValueError, match="non-decreasing"):
        tagio.write_ptag(path, np.zeros(3, dtype=np.uint8),
                         np.array([10, 5, 20], dtype=np.int64))
    # a hand-forged file with decreasing times is rejected by the reader
    rec = np.zeros(2, dtype=np.dtype([("channel", "u1"), ("time", "<u8")]))
    rec["time"] = [100, 50]
    path.write_bytes(b"PTAG" + np.uint16(1).tobytes() + np.uint16(0).tobytes()
                     + np.uint64(2).tobytes() + rec.tobytes())
    with pytest.raises(tagio.FileFormatError, match="byte"):
        tagio.read_ptag(path)


def test_digest_mismatch_detected(tmp_path, record):
    base = str(tmp_path / "run")
    tagio.save_record(base, record, fmt="csv")
    path = tmp_path / "run.csv"
    lines = path.read_text().splitlines()
    # drop one tag row; the manifest digest no longer matches
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(tagio.FileFormatError):
        tagio.load_record(base)


def test_manifest_fields(tmp_path, record):
    manifest = tagio.manifest_for(record)
    assert manifest.seed == record.seed
    assert manifest.digest == record.digest()
    assert manifest.counts == record.counts()
    restored = tagio.RunManifest.from_json(manifest.to_json())
    assert restored == manifest


def test_events_csv_roundtrip(tmp_path, record):
    path = tmp_path / "ev.csv"
    tagio.write_events_csv(path, record.log)
    log = tagio.read_events_csv(path)
    assert np.array_equal(log.trig2, record.log.trig2)
    assert np.array_equal(log.trial_i1, record.log.trial_i1)
    assert np.array_equal(log.retrieve, record.log.retrieve)
    assert np.array_equal(log.ret_ok, record.log.ret_ok)
