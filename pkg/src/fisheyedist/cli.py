"""Command-line interface: calibrate, synth, train, estimate, evaluate,
sweep-alpha, stats.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adjust import adjust
from .camera import CameraParams, PixelPoint, fit_params, load_correspondences
from .dataio import (
    dataset_stats,
    load_detections,
    load_ground_truth,
    save_detections,
    save_ground_truth,
)
from .errors import (
    DegenerateProjection,
    DivergedTraining,
    EmptyCategory,
    FisheyeDistError,
    GridOutsideFov,
    InvalidHeight,
    NoPreimage,
    OvershootsCenter,
    ParseError,
    PersonOutsideFov,
    SingularFit,
    UndefinedDirection,
    ValidationError,
)
from .metrics import GeometryEstimator, MlpEstimator, evaluate_pipeline, mae
from .mlp import (
    MlpModel,
    TrainConfig,
    load_training_pairs,
    pair_features,
    save_training_pairs,
    train,
)
from .synth import (
    DEFAULT_DEPOF_CAMERA,
    GridSpec,
    VirtualPerson,
    generate_depof_layout,
    generate_grid,
    generate_scene,
)

_DATA_ERRORS = (ParseError, ValidationError, EmptyCategory, FileNotFoundError)
_NUMERICAL_ERRORS = (
    DegenerateProjection, NoPreimage, InvalidHeight, SingularFit,
    OvershootsCenter, UndefinedDirection, GridOutsideFov, PersonOutsideFov,
    DivergedTraining,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _out_dir() -> Path:
    return Path(os.environ.get("FISHEYEDIST_OUT", "."))


def _resolve_out(path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else _out_dir() / p


def _load_config(path: str) -> dict:
    text = Path(path).read_text()
    if path.endswith(".toml"):
        try:
            import tomllib  # py311+
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


def _write_json(path_or_flag, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    _resolve_out(path_or_flag).write_text(text)


def _build_estimator(args, parser: argparse.ArgumentParser):
    if args.geometry == bool(args.mlp):
        parser.error("exactly one of --geometry or --mlp is required")
    if args.geometry:
        if not args.camera:
            parser.error("--geometry requires --camera")
        params = CameraParams.load(args.camera)
        return GeometryEstimator(params=params, assumed_height=args.height)
    model = MlpModel.load(args.mlp)
    return MlpEstimator(model=model)


def _alpha_pair(args) -> tuple[float, float]:
    if args.alpha is not None:
        return args.alpha, args.alpha
    return args.alpha_visible, args.alpha_occluded


def _add_estimator_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--geometry", action="store_true", help="use the camera-model estimator")
    sub.add_argument("--mlp", metavar="MODEL", help="use a trained MLP model file")
    sub.add_argument("--camera", help="camera parameter JSON (geometry estimator)")
    sub.add_argument("--height", type=float, default=65.0,
                     help="assumed person height in inches (geometry estimator)")


def _add_alpha_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--alpha", type=float, default=None,
                     help="shared height-adjustment factor for all boxes")
    sub.add_argument("--alpha-visible", type=float, default=0.0)
    sub.add_argument("--alpha-occluded", type=float, default=0.0)


# --- subcommand implementations --------------------------------------------

def _cmd_calibrate(args, parser) -> int:
    corr = load_correspondences(args.correspondences)
    initial = CameraParams.load(args.initial)
    fitted, report = fit_params(corr, initial)
    out = _resolve_out(args.out)
    fitted.save(out)
    print(f"calibrated {len(corr)} correspondences: "
          f"RMSE {report.rmse_px:.6f} px in {report.iterations} iterations "
          f"({'converged' if report.converged else 'not converged'})")
    print(f"wrote {out}")
    if args.output_json:
        _write_json(args.output_json, {
            "camera": fitted.to_dict(),
            "rmse_px": report.rmse_px,
            "iterations": report.iterations,
            "converged": report.converged,
        })
    return EXIT_OK


def _cmd_synth(args, parser) -> int:
    camera = CameraParams.load(args.camera) if args.camera else DEFAULT_DEPOF_CAMERA
    if args.mode == "grid":
        spec = GridSpec(rows=args.rows, cols=args.cols, spacing=args.spacing,
                        plane_height=args.plane_height,
                        origin=(args.origin_x, args.origin_y))
        pa, pb, gt = generate_grid(spec, camera, pair_budget=args.pair_budget, seed=args.seed)
        out = _resolve_out(args.out)
        save_training_pairs(out, pa, pb, gt)
        print(f"wrote {len(gt)} training pairs to {out}")
        if args.output_json:
            _write_json(args.output_json, {
                "pairs": len(gt),
                "min_distance_in": float(gt.min()),
                "max_distance_in": float(gt.max()),
            })
        return EXIT_OK

    if args.mode == "scene":
        if not args.people:
            parser.error("--mode scene requires --people")
        people = [
            VirtualPerson(
                x=float(p["x"]), y=float(p["y"]), height=float(p["height"]),
                occlusion_fraction=float(p.get("occlusion_fraction", 0.0)),
                person_id=str(p.get("person_id", "")),
            )
            for p in json.loads(Path(args.people).read_text())
        ]
        scene = generate_scene(people, camera, quantize=args.quantize)
    else:  # depof
        scene = generate_depof_layout(args.seed, params=camera, quantize=args.quantize)

    det_path = _resolve_out(args.out_detections)
    gt_path = _resolve_out(args.out_gt)
    save_detections(det_path, scene.detections)
    save_ground_truth(gt_path, scene.ground_truth())
    print(f"wrote {len(scene.detections.boxes)} detections to {det_path}")
    print(f"wrote {len(scene.ground_truth().pairs)} ground-truth pairs to {gt_path}")
    if args.output_json:
        _write_json(args.output_json, {
            "people": len(scene.detections.boxes),
            "pairs": len(scene.ground_truth().pairs),
        })
    return EXIT_OK


def _cmd_train(args, parser) -> int:
    points_a, points_b, dist = load_training_pairs(args.data)
    origin = np.array([args.origin_u, args.origin_v])
    feats = pair_features(points_a, points_b, origin)
    cfg = TrainConfig(
        learning_rate=args.lr, batch_size=args.batch_size,
        epochs=args.epochs, seed=args.seed,
        validation_fraction=args.validation_fraction,
    )
    model, history = train((feats, dist), cfg)
    out = _resolve_out(args.out)
    model.save(out)
    best = history.best_epoch
    print(f"trained on {len(dist)} pairs for {len(history.train_loss)} epochs; "
          f"best validation MSE {history.val_loss[best]:.4f} at epoch {best}")
    print(f"wrote {out}")
    if args.output_json:
        _write_json(args.output_json, {
            "epochs_run": len(history.train_loss),
            "best_epoch": best,
            "best_val_mse": history.val_loss[best],
            "train_loss": history.train_loss,
            "val_loss": history.val_loss,
        })
    return EXIT_OK


def _pair_centers(det, alpha_visible, alpha_occluded):
    center = PixelPoint(det.image_side / 2.0, det.image_side / 2.0)
    adjusted = {
        b.person_id: adjust(b, alpha_occluded if b.occluded else alpha_visible, center)
        for b in det.boxes
    }
    return adjusted


def _cmd_estimate(args, parser) -> int:
    estimator = _build_estimator(args, parser)
    det = load_detections(args.detections)
    a_vis, a_occ = _alpha_pair(args)
    adjusted = _pair_centers(det, a_vis, a_occ)
    ids = [b.person_id for b in det.boxes]
    pairs = list(itertools.combinations(ids, 2))
    pa = np.array([adjusted[a].as_array() for a, _ in pairs])
    pb = np.array([adjusted[b].as_array() for _, b in pairs])
    est = estimator.estimate_pairs(pa, pb)
    out = _resolve_out(args.out)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id_a", "id_b", "distance_in"])
        for (a, b), d in zip(pairs, est):
            writer.writerow([a, b, repr(float(d))])
    print(f"wrote {len(pairs)} pair distances to {out}")
    if args.output_json:
        _write_json(args.output_json, {
            "pairs": [
                {"id_a": a, "id_b": b, "distance_in": float(d)}
                for (a, b), d in zip(pairs, est)
            ]
        })
    return EXIT_OK


def _report_payload(report) -> dict:
    v = report.violations
    return {
        "mae_in": report.mae_by_category,
        "n_pairs": report.n_by_category,
        "violations": {
            "tp": v.tp, "tn": v.tn, "fp": v.fp, "fn": v.fn,
            "ccr_percent": v.ccr, "f1_percent": v.f1,
            "degenerate_f1": v.degenerate_f1, "threshold_in": v.threshold,
        },
    }


def _print_report(report, label: str) -> None:
    cats = ["V-V", "V-O", "O-O", "All"]
    print(f"{'':24s} " + "  ".join(f"{c:>8s}" for c in cats))
    cells = []
    for c in cats:
        m = report.mae_by_category.get(c)
        cells.append(f"{m:8.2f}" if m is not None else f"{'-':>8s}")
    print(f"{label:24s} " + "  ".join(cells) + "   MAE [in]")
    v = report.violations
    flag = " (degenerate)" if v.degenerate_f1 else ""
    print(f"violations (<{v.threshold:.0f} in): CCR {v.ccr:.2f}%  F1 {v.f1:.2f}%{flag}")


def _cmd_evaluate(args, parser) -> int:
    estimator = _build_estimator(args, parser)
    det = load_detections(args.detections)
    gt = load_ground_truth(args.gt, det)
    a_vis, a_occ = _alpha_pair(args)
    report, _ = evaluate_pipeline(estimator, a_vis, a_occ, det, gt)
    label = "geometry" if args.geometry else "mlp"
    _print_report(report, label)
    if args.output_json:
        _write_json(args.output_json, _report_payload(report))
    return EXIT_OK


def _cmd_sweep_alpha(args, parser) -> int:
    estimator = _build_estimator(args, parser)
    det = load_detections(args.detections)
    gt = load_ground_truth(args.gt, det)
    out = _resolve_out(args.out)
    rows = []
    n_steps = int(round((args.alpha_max - args.alpha_min) / args.step))
    for i in range(n_steps):
        alpha = args.alpha_min + i * args.step
        report, _ = evaluate_pipeline(estimator, alpha, alpha, det, gt)
        for cat in ["V-V", "V-O", "O-O", "All"]:
            m = report.mae_by_category.get(cat)
            if m is not None:
                rows.append((alpha, cat, m))
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "category", "mae_in"])
        for alpha, cat, m in rows:
            writer.writerow([f"{alpha:.4f}", cat, repr(m)])
    print(f"wrote {len(rows)} sweep rows to {out}")
    if args.output_json:
        _write_json(args.output_json, {
            "rows": [{"alpha": a, "category": c, "mae_in": m} for a, c, m in rows]
        })
    return EXIT_OK


def _cmd_stats(args, parser) -> int:
    det = load_detections(args.detections)
    gt = load_ground_truth(args.gt, det)
    stats = dataset_stats(det, gt)
    print(f"pairs: {stats.n_pairs}")
    for cat in ["V-V", "V-O", "O-O"]:
        print(f"  {cat}: {stats.category_counts[cat]}")
    b = stats.bucket_counts
    print(f"pairs 0-6 ft: {b[0]}   6-12 ft: {b[1]}   above 12 ft: {b[2]}")
    if stats.min_distance is not None:
        print(f"smallest distance: {stats.min_distance:.2f} in")
        print(f"largest distance: {stats.max_distance:.2f} in")
    if args.output_json:
        _write_json(args.output_json, {
            "n_pairs": stats.n_pairs,
            "category_counts": stats.category_counts,
            "bucket_counts": list(stats.bucket_counts),
            "min_distance_in": stats.min_distance,
            "max_distance_in": stats.max_distance,
        })
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="fisheyedist",
        description="Distance estimation between people from a single overhead fisheye camera.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)
    registry = {}

    def sub(name, func, help_text):
        s = subs.add_parser(name, help=help_text)
        s.add_argument("--config", help="JSON/TOML file overriding flag defaults")
        s.add_argument("--output-json", metavar="PATH",
                       help="also write a machine-readable JSON report")
        s.set_defaults(func=func)
        registry[name] = s
        return s

    s = sub("calibrate", _cmd_calibrate, "fit USM intrinsics from correspondences")
    s.add_argument("--correspondences", required=True, help="CSV x_in,y_in,z_in,u_px,v_px")
    s.add_argument("--initial", required=True, help="initial camera parameter JSON")
    s.add_argument("--out", required=True, help="output camera parameter JSON")

    s = sub("synth", _cmd_synth, "generate synthetic training/evaluation data")
    s.add_argument("--mode", choices=["grid", "scene", "depof"], required=True)
    s.add_argument("--camera", help="camera parameter JSON (default: built-in)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rows", type=int, default=20)
    s.add_argument("--cols", type=int, default=60)
    s.add_argument("--spacing", type=float, default=12.5)
    s.add_argument("--plane-height", type=float, default=32.5)
    s.add_argument("--origin-x", type=float, default=-368.75)
    s.add_argument("--origin-y", type=float, default=12.5)
    s.add_argument("--pair-budget", type=int, default=8000)
    s.add_argument("--out", default="training_pairs.csv", help="grid mode: training CSV")
    s.add_argument("--people", help="scene mode: JSON list of virtual people")
    s.add_argument("--quantize", action="store_true", help="round pixel values to integers")
    s.add_argument("--out-detections", default="detections.jsonl")
    s.add_argument("--out-gt", default="ground_truth.csv")

    s = sub("train", _cmd_train, "train the MLP distance regressor")
    s.add_argument("--data", required=True, help="training CSV u_a,v_a,u_b,v_b,dist_in")
    s.add_argument("--out", required=True, help="output model JSON")
    s.add_argument("--epochs", type=int, default=300)
    s.add_argument("--batch-size", type=int, default=64)
    s.add_argument("--lr", type=float, default=0.001)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--validation-fraction", type=float, default=0.1)
    s.add_argument("--origin-u", type=float, default=1024.0)
    s.add_argument("--origin-v", type=float, default=1024.0)

    s = sub("estimate", _cmd_estimate, "estimate all pairwise distances")
    s.add_argument("--detections", required=True)
    s.add_argument("--out", required=True, help="output CSV id_a,id_b,distance_in")
    _add_estimator_args(s)
    _add_alpha_args(s)

    s = sub("evaluate", _cmd_evaluate, "evaluate an estimator against ground truth")
    s.add_argument("--detections", required=True)
    s.add_argument("--gt", required=True)
    _add_estimator_args(s)
    _add_alpha_args(s)

    s = sub("sweep-alpha", _cmd_sweep_alpha, "sweep the height-adjustment factor")
    s.add_argument("--detections", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--alpha-min", type=float, default=-0.1)
    s.add_argument("--alpha-max", type=float, default=1.0)
    s.add_argument("--step", type=float, default=0.01)
    s.add_argument("--out", required=True, help="output CSV alpha,category,mae_in")
    _add_estimator_args(s)

    s = sub("stats", _cmd_stats, "print dataset statistics")
    s.add_argument("--detections", required=True)
    s.add_argument("--gt", required=True)

    return parser, registry


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()

    # apply --config values as subcommand defaults before the real parse
    if "--config" in argv and argv and argv[0] in registry:
        cfg_path = argv[argv.index("--config") + 1]
        try:
            config = _load_config(cfg_path)
        except (OSError, ValueError) as exc:
            print(f"error ConfigError: {exc}", file=sys.stderr)
            return EXIT_DATA
        s = registry[argv[0]]
        known = {a.dest for a in s._actions}
        s.set_defaults(**{k: v for k, v in config.items() if k in known})

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        return args.func(args, parser)
    except SystemExit as exc:  # parser.error inside a command
        return int(exc.code or 0)
    except _DATA_ERRORS as exc:
        print(f"error {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _NUMERICAL_ERRORS as exc:
        print(f"error {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FisheyeDistError as exc:
        print(f"error {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
