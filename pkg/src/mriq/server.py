"""HTTP service backing the labeling interface.

Serves version sets for calibration picks, rulers for threshold selection,
test items for ruler scoring, and lossless 16-bit PNG renders of every
image.  Labels are validated against the same ranges the store enforces
and persisted atomically; GETs always reflect the latest accepted write.
"""

import io
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel

from . import dataset, fileio
from .errors import MissingRulerError
from .labelstore import LabelStore
from .ruler import select_ruler
from .rulerio import load_registry


class PickBody(BaseModel):
    h: int
    rater: str = "rater"


class ThresholdBody(BaseModel):
    t_a: int
    t_b: int
    rater: str = "rater"


class TestLabelBody(BaseModel):
    rs: int
    pf: bool
    rater: str = "rater"


def quantize_u16(pixels: np.ndarray) -> tuple:
    """Map float pixels onto the full 16-bit range; returns (u16, lo, hi)."""
    lo = float(pixels.min())
    hi = float(pixels.max())
    if hi <= lo:
        return np.zeros(pixels.shape, dtype=np.uint16), lo, hi
    scaled = np.round((pixels - lo) / (hi - lo) * 65535.0)
    return scaled.astype(np.uint16), lo, hi


def create_app(manifest_path, store_path, rulers_dir=None, static_dir=None) -> FastAPI:
    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    manifest = dataset.load_manifest(manifest_path)
    store = LabelStore(store_path)
    registry = load_registry(rulers_dir) if rulers_dir else {}
    m_t = manifest["config"]["m_t"]

    entries = {e["slice_id"]: e for e in manifest["entries"]}
    label_queue = sorted(e["slice_id"] for e in manifest["entries"]
                         if e["split"] in ("train", "val"))
    test_items = []
    for e in sorted(manifest["entries"], key=lambda e: e["slice_id"]):
        if e["split"] == "test":
            for v in range(1, m_t + 1):
                test_items.append((f"{e['slice_id']}/v{v}", e, v))

    images = {}
    for e in manifest["entries"]:
        for v, rel in enumerate(e["versions"], start=1):
            images[f"{e['slice_id']}/v{v}"] = root / rel
        images[f"{e['slice_id']}/motion"] = root / e["motion"]
    if rulers_dir:
        for scan_type, ruler in registry.items():
            for v in range(ruler.m_r):
                images[f"ruler/{scan_type}/v{v}"] = Path(rulers_dir) / scan_type / f"v{v}.img"

    app = FastAPI(title="mriq labeling service")

    def ruler_payload(scan_type: str) -> dict:
        ruler = registry[scan_type]
        stored = store.threshold(scan_type)
        threshold = list(stored) if stored else (list(ruler.threshold) if ruler.threshold else None)
        return {
            "scan_type": scan_type,
            "m_r": ruler.m_r,
            "threshold": threshold,
            "targets_db": ruler.targets_db,
            "images": [f"ruler/{scan_type}/v{v}" for v in range(ruler.m_r)],
        }

    def set_payload(e: dict) -> dict:
        return {
            "id": e["slice_id"],
            "scan_type": e["scan_type"],
            "m_t": m_t,
            "images": [f"{e['slice_id']}/v{v}" for v in range(1, m_t + 1)],
        }

    @app.get("/api/meta")
    def meta():
        return {
            "m_t": m_t,
            "scan_types": manifest["config"]["scan_types"],
            "n_label_sets": len(label_queue),
            "n_test_items": len(test_items),
            "n_rulers": len(registry),
        }

    @app.get("/api/sets/next")
    def next_set(rater: str = "rater"):
        for slice_id in label_queue:
            if store.pick(slice_id, rater) is None:
                payload = set_payload(entries[slice_id])
                payload["remaining"] = sum(1 for s in label_queue if store.pick(s, rater) is None)
                return payload
        return Response(status_code=204)

    @app.get("/api/sets/{slice_id}")
    def get_set(slice_id: str):
        if slice_id not in entries:
            raise HTTPException(404, f"unknown set {slice_id}")
        return set_payload(entries[slice_id])

    @app.post("/api/sets/{slice_id}/label")
    def label_set(slice_id: str, body: PickBody):
        if slice_id not in entries:
            raise HTTPException(404, f"unknown set {slice_id}")
        try:
            store.set_pick(slice_id, body.h, body.rater, m_t)
        except ValueError as err:
            raise HTTPException(422, str(err))
        return {"ok": True, "h": body.h}

    @app.get("/api/rulers")
    def rulers():
        return [ruler_payload(st) for st in sorted(registry)]

    @app.get("/api/rulers/{scan_type}")
    def get_ruler(scan_type: str):
        if scan_type not in registry:
            raise HTTPException(404, f"no ruler for scan type {scan_type}")
        return ruler_payload(scan_type)

    @app.post("/api/rulers/{scan_type}/threshold")
    def set_threshold(scan_type: str, body: ThresholdBody):
        if scan_type not in registry:
            raise HTTPException(404, f"no ruler for scan type {scan_type}")
        try:
            store.set_threshold(scan_type, body.t_a, body.t_b, registry[scan_type].m_r, body.rater)
        except ValueError as err:
            raise HTTPException(422, str(err))
        return {"ok": True, "threshold": [body.t_a, body.t_b]}

    def match_ruler(scan_type: str):
        try:
            return select_ruler(registry, scan_type)
        except MissingRulerError as err:
            raise HTTPException(404, str(err))

    @app.get("/api/test/next")
    def next_test(rater: str = "rater"):
        for item_id, e, v in test_items:
            if store.test_label(item_id, rater) is None:
                ruler = match_ruler(e["scan_type"])
                return {
                    "id": item_id,
                    "image": item_id,
                    "scan_type": e["scan_type"],
                    "ruler": ruler_payload(ruler.scan_type),
                    "remaining": sum(1 for i, _, _ in test_items
                                     if store.test_label(i, rater) is None),
                }
        return Response(status_code=204)

    @app.post("/api/test/{item_id:path}/label")
    def label_test(item_id: str, body: TestLabelBody):
        match = [t for t in test_items if t[0] == item_id]
        if not match:
            raise HTTPException(404, f"unknown test item {item_id}")
        ruler = match_ruler(match[0][1]["scan_type"])
        try:
            store.set_test_label(item_id, body.rs, body.pf, body.rater, ruler.m_r)
        except ValueError as err:
            raise HTTPException(422, str(err))
        return {"ok": True, "rs": body.rs, "pf": body.pf}

    @app.get("/api/images/{image_id:path}")
    def get_image(image_id: str):
        if image_id not in images:
            raise HTTPException(404, f"unknown image {image_id}")
        img = fileio.read_img(images[image_id])
        u16, lo, hi = quantize_u16(img.pixels)
        buf = io.BytesIO()
        Image.fromarray(u16).save(buf, format="PNG")
        return Response(buf.getvalue(), media_type="image/png", headers={
            "X-Window-Min": repr(lo),
            "X-Window-Max": repr(hi),
            "Cache-Control": "no-store",
        })

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
