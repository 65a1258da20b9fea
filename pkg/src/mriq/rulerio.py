"""Ruler registry persistence: one directory per scan type.

Layout under a registry root:

    <root>/<scan_type>/ruler.json     manifest: m_r, dB ladder, threshold,
                                      cached scores, checkpoint hash
    <root>/<scan_type>/v<k>.img       version images (IMG format)
"""

import re
from pathlib import Path

import numpy as np

from . import fileio
from .ruler import ImageRuler

_SAFE = re.compile(r"^[A-Za-z0-9._-]+$")


def _dirname(scan_type: str) -> str:
    if not _SAFE.match(scan_type):
        raise ValueError(f"scan type {scan_type!r} is not filesystem-safe")
    return scan_type


def save_ruler(root, ruler: ImageRuler) -> Path:
    rdir = Path(root) / _dirname(ruler.scan_type)
    rdir.mkdir(parents=True, exist_ok=True)
    image_names = []
    for v, img in enumerate(ruler.versions):
        name = f"v{v}.img"
        fileio.write_img(rdir / name, img, provenance={
            "kind": "ruler_version", "snr_target_db": ruler.targets_db[v]})
        image_names.append(name)
    fileio.dump_canonical_json({
        "format": "MRIQ-RULER1",
        "scan_type": ruler.scan_type,
        "m_r": ruler.m_r,
        "targets_db": ruler.targets_db,
        "snr_range": list(ruler.snr_range),
        "threshold": list(ruler.threshold) if ruler.threshold else None,
        "s_ruler": None if ruler.s_ruler is None else [float(v) for v in ruler.s_ruler],
        "checkpoint_hash": ruler.checkpoint_hash,
        "images": image_names,
    }, rdir / "ruler.json")
    return rdir


def load_ruler(rdir) -> ImageRuler:
    rdir = Path(rdir)
    meta = fileio.load_json(rdir / "ruler.json")
    if meta.get("format") != "MRIQ-RULER1":
        raise ValueError(f"{rdir} is not a ruler directory")
    versions = [fileio.read_img(rdir / name) for name in meta["images"]]
    return ImageRuler(scan_type=meta["scan_type"], versions=versions,
                      targets_db=meta["targets_db"], snr_range=tuple(meta["snr_range"]),
                      s_ruler=meta["s_ruler"],
                      threshold=tuple(meta["threshold"]) if meta["threshold"] else None,
                      checkpoint_hash=meta.get("checkpoint_hash"))


def load_registry(root) -> dict:
    root = Path(root)
    registry = {}
    if not root.is_dir():
        return registry
    for rdir in sorted(root.iterdir()):
        if rdir.is_dir() and (rdir / "ruler.json").exists():
            ruler = load_ruler(rdir)
            registry[ruler.scan_type] = ruler
    return registry
