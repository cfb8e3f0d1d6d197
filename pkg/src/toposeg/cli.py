"""Command-line front end.

Subcommands: diagram, match, loss, eval, optimize. Exit codes: 0 success,
1 I/O failure, 2 usage error, 3 pairing/validation failure. Output files
are written atomically (temp file + rename).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .image import (
    GrayImage,
    ImageFormatError,
    _atomic_write_bytes,
    load_grayscale,
    read_float_blob,
    save_pgm,
    threshold_mask,
    write_float_blob,
)
from .losses import default_extractor, load_extractor, total_loss_breakdown
from .matching import match_diagrams
from .metrics import betti_error, evaluate_dataset
from .persistence import betti_curve, compute_diagram, diagram_to_json

IMAGE_SUFFIXES = {".pgm", ".ppm", ".png", ".f32"}


class PairingError(ValueError):
    pass


def _load_input(path: str) -> GrayImage:
    p = Path(path)
    if p.suffix == ".f32":
        return GrayImage(read_float_blob(p))
    return load_grayscale(p)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write_bytes(path, text.encode())


def _extractor_from(cfg):
    if cfg.extractor_weights is not None:
        return load_extractor(cfg.extractor_weights)
    return default_extractor()


def _gt_to_binary(img: GrayImage) -> GrayImage:
    """Ground-truth images are binarized at 0.5 to tolerate near-binary
    encodings."""
    return GrayImage((img.pixels >= 0.5).astype(np.float64))


# ---------------------------------------------------------------------------
# Commands


def cmd_diagram(args) -> int:
    cfg = load_config(args.config, out_dir=args.out_dir)
    img = _load_input(args.image)
    out_dir = Path(cfg.out_dir)
    stem = args.stem or Path(args.image).stem

    diagram = compute_diagram(img)
    diagram_path = out_dir / f"{stem}.diagram.json"
    _write_text(diagram_path, json.dumps(diagram_to_json(diagram)))

    curve = betti_curve(img)
    lines = ["threshold,beta0,beta1"]
    for t, (b0, b1) in zip(curve.thresholds, curve.counts):
        lines.append(f"{t!r},{b0},{b1}")
    curve_path = out_dir / f"{stem}.betti.csv"
    _write_text(curve_path, "\n".join(lines) + "\n")

    print(json.dumps({"diagram": str(diagram_path), "betti_curve": str(curve_path)}))
    return 0


def cmd_match(args) -> int:
    cfg = load_config(
        args.config,
        q=args.q,
        diagonal_weight=args.diagonal_weight,
        normalize_spatial=args.normalize_spatial,
        spatial_floor=args.spatial_floor,
        out_dir=args.out_dir,
    )
    pred = _load_input(args.pred)
    gt = _load_input(args.gt)
    matching = match_diagrams(
        compute_diagram(pred), compute_diagram(gt), cfg.match_config()
    )
    payload = json.dumps(matching.to_json_obj())
    stem = args.stem or Path(args.pred).stem
    out_path = Path(cfg.out_dir) / f"{stem}.matching.json"
    _write_text(out_path, payload)
    print(payload)
    return 0


def cmd_loss(args) -> int:
    cfg = load_config(
        args.config,
        q=args.q,
        diagonal_weight=args.diagonal_weight,
        normalize_spatial=args.normalize_spatial,
        spatial_floor=args.spatial_floor,
        lambda_tc=args.lambda_tc,
        lambda_ts=args.lambda_ts,
        extractor_weights=args.extractor_weights,
        out_dir=args.out_dir,
    )
    pred = _load_input(args.pred)
    gt = _gt_to_binary(_load_input(args.gt))
    result, parts = total_loss_breakdown(pred, gt, cfg.loss_config(), _extractor_from(cfg))

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.stem or Path(args.pred).stem
    grad_path = out_dir / f"{stem}.grad.f32"
    write_float_blob(result.gradient, grad_path)
    dump = {
        "value": result.value,
        "components": {"bce": parts.bce, "tc": parts.tc, "ts": parts.ts},
        "gradient_file": str(grad_path),
    }
    _write_text(out_dir / f"{stem}.loss.json", json.dumps(dump))

    print(json.dumps(
        {"total": result.value, "bce": parts.bce, "tc": parts.tc, "ts": parts.ts}
    ))
    return 0


def _scan_images(directory: Path) -> dict[str, Path]:
    if not directory.is_dir():
        raise OSError(f"not a directory: {directory}")
    found: dict[str, Path] = {}
    for p in sorted(directory.iterdir()):
        if p.suffix.lower() in IMAGE_SUFFIXES:
            if p.stem in found:
                raise PairingError(f"duplicate stem '{p.stem}' in {directory}")
            found[p.stem] = p
    return found


def cmd_eval(args) -> int:
    cfg = load_config(
        args.config, bin_threshold=args.bin_threshold, out_dir=args.out_dir
    )
    preds = _scan_images(Path(args.pred_dir))
    gts = _scan_images(Path(args.gt_dir))
    missing_gt = sorted(set(preds) - set(gts))
    missing_pred = sorted(set(gts) - set(preds))
    if missing_gt or missing_pred:
        raise PairingError(
            "unpaired stems: "
            + json.dumps({"pred_only": missing_gt, "gt_only": missing_pred})
        )

    stems = sorted(preds)
    pairs = []
    for stem in stems:
        pred = _load_input(str(preds[stem]))
        gt = threshold_mask(_load_input(str(gts[stem])), 0.5)
        pairs.append((pred, gt))
    report = evaluate_dataset(
        pairs,
        bin_threshold=cfg.bin_threshold,
        ids=stems,
        betti_tile=args.betti_tile,
        threads=args.threads,
    )
    out_dir = Path(cfg.out_dir)
    _write_text(out_dir / "report.csv", report.to_csv())
    _write_text(out_dir / "report.json", json.dumps(report.to_json_obj()))
    mean = report.to_json_obj()["mean"]
    print(json.dumps({"images": len(stems), "mean": mean}))
    return 0


def cmd_optimize(args) -> int:
    cfg = load_config(
        args.config,
        q=args.q,
        diagonal_weight=args.diagonal_weight,
        normalize_spatial=args.normalize_spatial,
        spatial_floor=args.spatial_floor,
        lambda_tc=args.lambda_tc,
        lambda_ts=args.lambda_ts,
        bin_threshold=args.bin_threshold,
        extractor_weights=args.extractor_weights,
        out_dir=args.out_dir,
    )
    if args.iters < 1:
        raise ValueError("iters must be >= 1")
    if args.step < 0.0:
        raise ValueError("step must be >= 0")

    init = _load_input(args.pred)
    gt_img = _gt_to_binary(_load_input(args.gt))
    gt_mask = threshold_mask(gt_img, 0.5)
    fx = _extractor_from(cfg)
    loss_cfg = cfg.loss_config()

    pred = init.pixels.copy()
    rows = ["iter,total,bce,tc,ts,betti0_err,betti1_err"]
    last = None
    for it in range(args.iters + 1):
        current = GrayImage(pred)
        result, parts = total_loss_breakdown(current, gt_img, loss_cfg, fx)
        e0, e1 = betti_error(threshold_mask(current, cfg.bin_threshold), gt_mask)
        rows.append(
            f"{it},{result.value!r},{parts.bce!r},{parts.tc!r},{parts.ts!r},{e0},{e1}"
        )
        last = (result.value, e0, e1)
        if it == args.iters:
            break
        pred = np.clip(pred - args.step * result.gradient, 0.0, 1.0)

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.stem or Path(args.pred).stem
    final_path = out_dir / f"{stem}.final.pgm"
    save_pgm(GrayImage(pred), final_path)
    _write_text(out_dir / f"{stem}.optimize.csv", "\n".join(rows) + "\n")

    total, e0, e1 = last
    print(json.dumps(
        {"iters": args.iters, "total": total, "betti0_err": e0, "betti1_err": e1,
         "final_image": str(final_path)}
    ))
    return 0


# ---------------------------------------------------------------------------
# Argument wiring


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out-dir", default=None, help="output directory")
    p.add_argument("--stem", default=None, help="output file stem")
    p.add_argument(
        "--threads", type=int, default=1,
        help="worker threads (only eval parallelizes)",
    )


def _add_match_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--diagonal-weight", type=float, default=None)
    p.add_argument(
        "--spatial-norm",
        dest="normalize_spatial",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="normalize creation-cell distances by the image diagonal",
    )
    p.add_argument("--spatial-floor", type=float, default=None)


def _add_loss_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda-tc", type=float, default=None)
    p.add_argument("--lambda-ts", type=float, default=None)
    p.add_argument("--extractor-weights", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toposeg",
        description="Topology-aware segmentation tools: persistence diagrams, "
        "diagram matching, topological losses, and metric reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diagram", help="persistence diagram and Betti curve")
    p.add_argument("image")
    _add_common(p)
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("match", help="match two images' diagrams")
    p.add_argument("pred")
    p.add_argument("gt")
    _add_common(p)
    _add_match_opts(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("loss", help="loss breakdown and gradient blob")
    p.add_argument("pred")
    p.add_argument("gt")
    _add_common(p)
    _add_match_opts(p)
    _add_loss_opts(p)
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("eval", help="metric report over paired directories")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    _add_common(p)
    p.add_argument("--bin-threshold", type=float, default=None)
    p.add_argument("--betti-tile", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("optimize", help="projected gradient descent on pixels")
    p.add_argument("pred")
    p.add_argument("gt")
    _add_common(p)
    _add_match_opts(p)
    _add_loss_opts(p)
    p.add_argument("--bin-threshold", type=float, default=None)
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--step", type=float, required=True)
    p.set_defaults(func=cmd_optimize)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ImageFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PairingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:  # console-script hook
    sys.exit(main())
