"""Durable store for human decisions.

Three record kinds: calibration picks (per slice, per rater), ruler
thresholds (per scan type), and test labels (per test item, per rater).
Latest write wins per (item, rater); every mutation is also appended to an
audit log.

Durability: each mutation is first appended to a write-ahead log
(``<store>.wal``, one JSON line, fsync'd), then the full snapshot is
written to a temp file and atomically renamed over the store.  A crash
between the two steps is recovered on open by replaying WAL records whose
ids are not yet in the audit log.  In-process writers serialize on a lock.
"""

import json
import os
import threading
import time
import uuid
from pathlib import Path


class LabelStore:
    def __init__(self, path):
        self.path = Path(path)
        self.wal_path = self.path.with_name(self.path.name + ".wal")
        self._lock = threading.Lock()
        self.data = {"format": "MRIQ-LABELS1", "picks": {}, "thresholds": {},
                     "test_labels": {}, "audit": []}
        if self.path.exists():
            self.data = json.loads(self.path.read_text(encoding="utf-8"))
        self._replay_wal()

    # ------------------------------------------------------------- internals

    def _replay_wal(self):
        if not self.wal_path.exists():
            return
        known = {rec["id"] for rec in self.data["audit"]}
        replayed = False
        for line in self.wal_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec["id"] in known:
                continue
            self._apply(rec)
            replayed = True
        if replayed:
            self._snapshot()
        self.wal_path.unlink(missing_ok=True)

    def _apply(self, rec: dict):
        op, key = rec["op"], rec["key"]
        payload = {**rec["payload"], "ts": rec["ts"]}
        if op == "pick":
            self.data["picks"].setdefault(key, {})[rec["rater"]] = payload
        elif op == "threshold":
            self.data["thresholds"][key] = payload
        elif op == "test_label":
            self.data["test_labels"].setdefault(key, {})[rec["rater"]] = payload
        else:
            raise ValueError(f"unknown audit op {op!r}")
        self.data["audit"].append(rec)

    def _snapshot(self):
        tmp = self.path.with_name(self.path.name + f".tmp{os.getpid()}")
        tmp.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, self.path)

    def _commit(self, op: str, key: str, payload: dict, rater: str):
        rec = {"id": uuid.uuid4().hex, "ts": time.time(), "op": op, "key": key,
               "rater": rater, "payload": payload}
        with self._lock:
            with open(self.wal_path, "a", encoding="utf-8") as wal:
                wal.write(json.dumps(rec) + "\n")
                wal.flush()
                os.fsync(wal.fileno())
            self._apply(rec)
            self._snapshot()
            self.wal_path.unlink(missing_ok=True)

    # ------------------------------------------------------------- mutations

    def set_pick(self, slice_id: str, h: int, rater: str, m_t: int):
        if not 0 <= h <= m_t + 1:
            raise ValueError(f"pick {h} outside [0, {m_t + 1}]")
        self._commit("pick", slice_id, {"h": int(h)}, rater)

    def set_threshold(self, scan_type: str, t_a: int, t_b: int, m_r: int, rater: str = ""):
        if not 0 <= t_a <= t_b <= m_r - 1:
            raise ValueError(f"threshold ({t_a}, {t_b}) violates 0 <= t_a <= t_b <= {m_r - 1}")
        self._commit("threshold", scan_type, {"t_a": int(t_a), "t_b": int(t_b)}, rater)

    def set_test_label(self, item_id: str, rs: int, pf: bool, rater: str, m_r: int):
        if not 0 <= rs <= m_r - 1:
            raise ValueError(f"ruler score {rs} outside [0, {m_r - 1}]")
        self._commit("test_label", item_id, {"rs": int(rs), "pf": bool(pf)}, rater)

    # --------------------------------------------------------------- queries

    def pick(self, slice_id: str, rater: str | None = None):
        raters = self.data["picks"].get(slice_id, {})
        if rater is not None:
            entry = raters.get(rater)
            return entry["h"] if entry else None
        if not raters:
            return None
        return max(raters.values(), key=lambda e: e["ts"])["h"]

    def picks(self, rater: str | None = None) -> dict:
        out = {}
        for slice_id, raters in self.data["picks"].items():
            if rater is not None:
                if rater in raters:
                    out[slice_id] = raters[rater]["h"]
            elif raters:
                out[slice_id] = max(raters.values(), key=lambda e: e["ts"])["h"]
        return out

    def threshold(self, scan_type: str):
        entry = self.data["thresholds"].get(scan_type)
        return (entry["t_a"], entry["t_b"]) if entry else None

    def test_label(self, item_id: str, rater: str):
        entry = self.data["test_labels"].get(item_id, {}).get(rater)
        return (entry["rs"], entry["pf"]) if entry else None

    def test_labels(self, rater: str) -> dict:
        return {item: r[rater]["rs"] for item, r in self.data["test_labels"].items()
                if rater in r}
