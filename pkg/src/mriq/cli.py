"""Command-line entry points for every pipeline stage.

    mriq simulate   build a synthetic dataset (images + manifest)
    mriq calibrate  turn human picks into calibrated training labels
    mriq train      fit the quality network (noise / motion / dual)
    mriq make-ruler build per-scan-type image rulers and cache their scores
    mriq score      raw score, ruler score, pass/fail for images
    mriq evaluate   full metric report on the test split
    mriq serve      HTTP service for the labeling interface

Paths default under $MRIQ_DATA_DIR (or ./mriq-data).  Exit code 0 on
success, 2 with a diagnostic naming the missing artifact otherwise.
"""

import argparse
import hashlib
import os
import sys
from pathlib import Path

import numpy as np

from . import dataset, fileio
from .evaluate import (apply_threshold_overrides, evaluate_motion,
                       evaluate_noise, score_split)
from .labelstore import LabelStore
from .net import DualTaskNet, TrainConfig, checkpoint_hash, train
from .phantom import generate_phantom, synth_coil_maps
from .ruler import build_ruler, cache_scores, pass_fail, ruler_score, select_ruler
from .rulerio import load_registry, save_ruler


def data_dir() -> Path:
    return Path(os.environ.get("MRIQ_DATA_DIR", "mriq-data"))


def _require(path, what: str) -> Path:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing {what}: {path}")
    return path


def _manifest_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_simulate(args) -> int:
    config = dataset.DatasetConfig(
        scan_types=tuple(args.scan_types.split(",")),
        train_slices=args.train, val_slices=args.val, test_slices=args.test,
        slices_per_subject=args.slices_per_subject, m_t=args.mt, size=args.size,
        n_coils=args.coils, etl=args.etl, snr_low_db=args.snr_low,
        snr_high_db=args.snr_high, seed=args.seed, save_kspace=args.save_kspace)
    manifest = dataset.build_dataset(args.out, config)
    print(f"wrote {len(manifest['entries'])} slices to {args.out}")
    return 0


def cmd_calibrate(args) -> int:
    manifest_path = _require(args.manifest, "dataset manifest")
    manifest = dataset.load_manifest(manifest_path)
    store = LabelStore(args.store)
    if args.auto_pick_db is not None:
        picks = dataset.auto_picks(manifest, args.auto_pick_db)
        for slice_id, h in sorted(picks.items()):
            store.set_pick(slice_id, h, rater="auto", m_t=manifest["config"]["m_t"])
        print(f"auto-labeled {len(picks)} sets at {args.auto_pick_db} dB")
    picks = store.picks(rater=args.rater)
    if not picks:
        raise FileNotFoundError(f"missing picks: no calibration labels in {args.store}")
    dataset.apply_calibration(manifest, picks, args.eta,
                              methods=tuple(args.methods.split(",")))
    fileio.dump_canonical_json(manifest, manifest_path)
    mu = manifest["calibration"]["mu_h"]
    print("calibrated:", ", ".join(f"{m}: mu_h={v:.3f}" for m, v in mu.items()))
    return 0


def cmd_train(args) -> int:
    manifest_path = _require(args.manifest, "dataset manifest")
    manifest = dataset.load_manifest(manifest_path)
    root = manifest_path.parent
    noise_data, motion_data = [], []
    if args.mode in ("noise", "dual"):
        noise_data = dataset.noise_training_data(manifest, root, "train", args.method,
                                                 labels=args.labels)
    if args.mode in ("motion", "dual"):
        motion_data = dataset.motion_training_data(manifest, root, "train")
    config = TrainConfig(mode=args.mode, epochs=args.epochs, learning_rate=args.lr,
                         seed=args.seed, input_size=manifest["config"]["size"])
    net, history = train(noise_data, motion_data, config)
    net.manifest_hash = _manifest_hash(manifest_path)
    net.save(args.out)
    last = history[-1] if history else {}
    print(f"trained {args.mode} model: epochs={args.epochs} "
          f"noise_loss={last.get('noise_loss')} motion_loss={last.get('motion_loss')}")
    print(f"checkpoint: {args.out}")
    return 0


def _pick_threshold(ruler, target_db: float) -> tuple:
    """(t_a, t_b) whose ladder midpoint is nearest the target level."""
    options = [(v, v) for v in range(ruler.m_r)]
    options += [(v, v + 1) for v in range(ruler.m_r - 1)]
    return min(options, key=lambda tt: abs(
        0.5 * (ruler.targets_db[tt[0]] + ruler.targets_db[tt[1]]) - target_db))


def cmd_make_ruler(args) -> int:
    manifest = dataset.load_manifest(_require(args.manifest, "dataset manifest"))
    net = DualTaskNet.load(_require(args.checkpoint, "network checkpoint"))
    cfg = manifest["config"]
    scan_types = args.scan_types.split(",") if args.scan_types else cfg["scan_types"]
    chash = checkpoint_hash(args.checkpoint)
    for i, scan_type in enumerate(scan_types):
        phantom = generate_phantom(args.seed + 7919 * i, cfg["size"], scan_type)
        maps = synth_coil_maps(cfg["size"], cfg["n_coils"], args.seed + 104729 * (i + 1))
        ruler = build_ruler(phantom, maps, args.mr, (args.ruler_snr_low, args.ruler_snr_high),
                            (cfg["snr_low_db"], cfg["snr_high_db"]), args.seed + i, etl=cfg["etl"])
        ruler = cache_scores(ruler, net)
        ruler.checkpoint_hash = chash
        if args.pick_threshold_db is not None:
            ruler.threshold = _pick_threshold(ruler, args.pick_threshold_db)
        save_ruler(args.out, ruler)
        print(f"ruler {scan_type}: threshold={ruler.threshold} "
              f"scores=[{ruler.s_ruler.min():.2f}, {ruler.s_ruler.max():.2f}]")
    return 0


def cmd_score(args) -> int:
    net = DualTaskNet.load(_require(args.checkpoint, "network checkpoint"))
    registry = load_registry(_require(args.rulers, "ruler registry"))
    store = LabelStore(args.store) if args.store and Path(args.store).exists() else None
    registry = apply_threshold_overrides(registry, store) if store else registry
    if args.images:
        paths = [Path(p) for p in args.images]
    elif args.manifest:
        manifest = dataset.load_manifest(_require(args.manifest, "dataset manifest"))
        root = Path(args.manifest).parent
        paths = [root / rel for e in manifest["entries"] if e["split"] == args.split
                 for rel in e["versions"]]
    else:
        raise FileNotFoundError("missing input: pass image paths or --manifest")
    for path in paths:
        img = fileio.read_img(_require(path, "image"))
        raw = float(net.score_batch(img.pixels[None])[0])
        p_motion = float(net.motion_prob_batch(img.pixels[None])[0])
        ruler = select_ruler(registry, img.scan_type)
        rs = ruler_score(ruler, raw)
        pf = pass_fail(ruler, raw)
        print(f"{path} raw={raw:.4f} rs={rs} pf={int(pf)} p_motion_free={p_motion:.3f}")
    return 0


def cmd_evaluate(args) -> int:
    manifest_path = _require(args.manifest, "dataset manifest")
    manifest = dataset.load_manifest(manifest_path)
    root = manifest_path.parent
    net = DualTaskNet.load(_require(args.checkpoint, "network checkpoint"))
    registry = load_registry(_require(args.rulers, "ruler registry"))
    store = LabelStore(args.store) if args.store and Path(args.store).exists() else None
    registry = apply_threshold_overrides(registry, store) if store else registry
    scored_val = score_split(manifest, root, net, "val")
    report = evaluate_noise(manifest, root, net, registry, scored_val=scored_val)
    if args.motion:
        report.extras["motion"] = evaluate_motion(manifest, root, net)
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8")
        print(f"report written to {args.out}")
    print(report.to_text())
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(_require(args.manifest, "dataset manifest"), args.store,
                     rulers_dir=args.rulers if args.rulers and Path(args.rulers).is_dir() else None,
                     static_dir=args.static if args.static and Path(args.static).is_dir() else None)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    root = data_dir()
    parser = argparse.ArgumentParser(prog="mriq", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="build a synthetic dataset")
    p.add_argument("--out", default=str(root), help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--mt", type=int, default=5)
    p.add_argument("--coils", type=int, default=4)
    p.add_argument("--etl", type=int, default=8)
    p.add_argument("--train", type=int, default=200)
    p.add_argument("--val", type=int, default=40)
    p.add_argument("--test", type=int, default=60)
    p.add_argument("--slices-per-subject", type=int, default=2)
    p.add_argument("--scan-types", default=",".join(dataset.DEFAULT_SCAN_TYPES))
    p.add_argument("--snr-low", type=float, default=12.0)
    p.add_argument("--snr-high", type=float, default=30.0)
    p.add_argument("--save-kspace", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="calibrate heuristic scores with human picks")
    p.add_argument("--manifest", default=str(root / "manifest.json"))
    p.add_argument("--store", default=str(root / "labels.json"))
    p.add_argument("--eta", type=float, default=0.85)
    p.add_argument("--methods", default="snr,block_dct")
    p.add_argument("--rater", default=None, help="use only this rater's picks")
    p.add_argument("--auto-pick-db", type=float, default=None,
                   help="synthetic rater: acceptability level in dB")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("train", help="train the quality network")
    p.add_argument("--manifest", default=str(root / "manifest.json"))
    p.add_argument("--out", default=str(root / "checkpoint.npz"))
    p.add_argument("--mode", choices=("noise", "motion", "dual"), default="noise")
    p.add_argument("--method", default="block_dct", choices=("block_dct", "snr"))
    p.add_argument("--labels", default="calibrated", choices=("calibrated", "heuristic"))
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("make-ruler", help="build and cache image rulers")
    p.add_argument("--manifest", default=str(root / "manifest.json"))
    p.add_argument("--checkpoint", default=str(root / "checkpoint.npz"))
    p.add_argument("--out", default=str(root / "rulers"))
    p.add_argument("--mr", type=int, default=8)
    p.add_argument("--ruler-snr-low", type=float, default=8.0)
    p.add_argument("--ruler-snr-high", type=float, default=34.0)
    p.add_argument("--scan-types", default=None)
    p.add_argument("--pick-threshold-db", type=float, default=None)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_make_ruler)

    p = sub.add_parser("score", help="score images against a ruler registry")
    p.add_argument("images", nargs="*", help="IMG files to score")
    p.add_argument("--manifest", default=None)
    p.add_argument("--split", default="test")
    p.add_argument("--checkpoint", default=str(root / "checkpoint.npz"))
    p.add_argument("--rulers", default=str(root / "rulers"))
    p.add_argument("--store", default=str(root / "labels.json"))
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="metric report on the test split")
    p.add_argument("--manifest", default=str(root / "manifest.json"))
    p.add_argument("--checkpoint", default=str(root / "checkpoint.npz"))
    p.add_argument("--rulers", default=str(root / "rulers"))
    p.add_argument("--store", default=str(root / "labels.json"))
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--motion", action="store_true", help="also evaluate the motion branch")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="run the labeling HTTP service")
    p.add_argument("--manifest", default=str(root / "manifest.json"))
    p.add_argument("--store", default=str(root / "labels.json"))
    p.add_argument("--rulers", default=str(root / "rulers"))
    p.add_argument("--static", default=None, help="directory with the built web UI")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8701)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError, LookupError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
