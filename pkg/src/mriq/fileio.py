"""On-disk formats.

IMG: raw little-endian float32 row-major pixels in ``<name>.img`` with a
JSON sidecar ``<name>.img.json`` carrying slice_id, scan_type, version,
shape, and provenance.

KSET: one self-describing binary file; a compact one-line JSON header
(magic "KSET1", height, width, n_coils, etl, acquisition_order, scan_type)
terminated by a newline, followed by little-endian float32 interleaved
(re, im) samples in coil-major order.

All JSON written here is canonical (sorted keys, fixed separators) so that
rebuilding with the same seed is byte-identical.
"""

import json
import os
from pathlib import Path

import numpy as np

from .kspace import KSpaceVolume
from .phantom import MagnitudeImage

KSET_MAGIC = "KSET1"


def dump_canonical_json(obj, path) -> None:
    data = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    Path(path).write_text(data, encoding="utf-8")


def load_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_img(path, image: MagnitudeImage, provenance: dict | None = None) -> None:
    path = Path(path)
    pixels = np.ascontiguousarray(image.pixels, dtype="<f4")
    path.write_bytes(pixels.tobytes())
    sidecar = {
        "slice_id": image.slice_id,
        "scan_type": image.scan_type,
        "version": image.version,
        "height": image.pixels.shape[0],
        "width": image.pixels.shape[1],
        "provenance": provenance or {},
    }
    dump_canonical_json(sidecar, path.with_name(path.name + ".json"))


def read_img(path) -> MagnitudeImage:
    path = Path(path)
    sidecar = load_json(path.with_name(path.name + ".json"))
    pixels = np.frombuffer(path.read_bytes(), dtype="<f4").astype(np.float64)
    pixels = pixels.reshape(sidecar["height"], sidecar["width"])
    return MagnitudeImage(pixels=pixels, slice_id=sidecar["slice_id"],
                          scan_type=sidecar["scan_type"], version=sidecar["version"])


def write_kset(path, k: KSpaceVolume) -> None:
    header = {
        "magic": KSET_MAGIC,
        "height": k.n_lines,
        "width": k.samples.shape[2],
        "n_coils": k.n_coils,
        "etl": k.etl,
        "acquisition_order": [[s, l] for s, l in k.acquisition_order],
        "scan_type": k.scan_type,
    }
    interleaved = np.empty(k.samples.shape + (2,), dtype="<f4")
    interleaved[..., 0] = k.samples.real
    interleaved[..., 1] = k.samples.imag
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8"))
        f.write(b"\n")
        f.write(interleaved.tobytes())


def read_kset(path) -> KSpaceVolume:
    with open(path, "rb") as f:
        header_line = f.readline()
        payload = f.read()
    header = json.loads(header_line.decode("utf-8"))
    if header.get("magic") != KSET_MAGIC:
        raise ValueError(f"{path} is not a KSET file")
    n_coils, h, w = header["n_coils"], header["height"], header["width"]
    flat = np.frombuffer(payload, dtype="<f4")
    if flat.size != n_coils * h * w * 2:
        raise ValueError(f"{path}: payload size does not match header")
    interleaved = flat.reshape(n_coils, h, w, 2).astype(np.float64)
    samples = interleaved[..., 0] + 1j * interleaved[..., 1]
    return KSpaceVolume(samples=samples,
                        acquisition_order=[tuple(p) for p in header["acquisition_order"]],
                        etl=header["etl"], scan_type=header.get("scan_type", ""))
