import json
import threading

import pytest

from mriq.labelstore import LabelStore


def test_pick_ranges(tmp_path):
    store = LabelStore(tmp_path / "s.json")
    store.set_pick("a", 0, "r1", m_t=5)
    store.set_pick("b", 6, "r1", m_t=5)
    with pytest.raises(ValueError):
        store.set_pick("c", 7, "r1", m_t=5)
    with pytest.raises(ValueError):
        store.set_pick("c", -1, "r1", m_t=5)
    assert store.pick("a", "r1") == 0
    assert store.pick("missing", "r1") is None


def test_threshold_and_test_label_ranges(tmp_path):
    store = LabelStore(tmp_path / "s.json")
    store.set_threshold("knee-fs", 2, 3, m_r=8)
    assert store.threshold("knee-fs") == (2, 3)
    with pytest.raises(ValueError):
        store.set_threshold("knee-fs", 3, 2, m_r=8)
    with pytest.raises(ValueError):
        store.set_threshold("knee-fs", 0, 8, m_r=8)
    store.set_test_label("x/v1", 5, True, "r2", m_r=8)
    assert store.test_label("x/v1", "r2") == (5, True)
    with pytest.raises(ValueError):
        store.set_test_label("x/v1", 8, True, "r2", m_r=8)


def test_latest_write_wins_per_rater(tmp_path):
    store = LabelStore(tmp_path / "s.json")
    store.set_pick("a", 2, "r1", m_t=5)
    store.set_pick("a", 4, "r1", m_t=5)
    store.set_pick("a", 1, "r2", m_t=5)
    assert store.pick("a", "r1") == 4
    assert store.pick("a", "r2") == 1
    assert len(store.data["audit"]) == 3  # audit keeps the full history


def test_persistence_round_trip(tmp_path):
    path = tmp_path / "s.json"
    store = LabelStore(path)
    store.set_pick("a", 3, "r1", m_t=5)
    store.set_threshold("knee-fs", 3, 3, m_r=8)
    again = LabelStore(path)
    assert again.pick("a", "r1") == 3
    assert again.threshold("knee-fs") == (3, 3)


def test_wal_replay_after_crash(tmp_path):
    path = tmp_path / "s.json"
    store = LabelStore(path)
    store.set_pick("a", 3, "r1", m_t=5)
    # simulate a crash after the WAL append but before the snapshot
    rec = {"id": "ffff", "ts": 9e9, "op": "pick", "key": "a", "rater": "r1",
           "payload": {"h": 5}}
    with open(str(path) + ".wal", "a") as wal:
        wal.write(json.dumps(rec) + "\n")
    recovered = LabelStore(path)
    assert recovered.pick("a", "r1") == 5
    assert not (tmp_path / "s.json.wal").exists()
    # replay is idempotent: reopening does not duplicate the audit record
    ids = [r["id"] for r in recovered.data["audit"]]
    assert ids.count("ffff") == 1


def test_concurrent_writes_serialize(tmp_path):
    store = LabelStore(tmp_path / "s.json")
    outcomes = [2, 4]

    def write(h):
        store.set_pick("a", h, "r1", m_t=5)

    threads = [threading.Thread(target=write, args=(h,)) for h in outcomes]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert store.pick("a", "r1") in outcomes
    assert len(store.data["audit"]) == 2
    # on-disk state equals the in-memory winner
    again = LabelStore(tmp_path / "s.json")
    assert again.pick("a", "r1") == store.pick("a", "r1")
