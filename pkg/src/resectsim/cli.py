"""Command-line interface.

Subcommands: ``simulate`` (one resection), ``batch`` (manifest-driven
generation), ``postprocess`` (threshold + largest component), ``evaluate``
(Dice with median/IQR summary) and ``masks`` (anatomical mask debugging).

Exit codes: 0 success, 1 input/validation error, 2 runtime failure.
Logging verbosity comes from ``RESECTSIM_LOG`` (error|warn|info|debug).
"""

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import resectsim.io as rio
from resectsim import __version__
from resectsim.errors import (
    ConfigError,
    InputDataError,
    ResectSimError,
    SimulationError,
)
from resectsim.evaluate import dice, median_iqr, threshold_mask
from resectsim.mesh import TriangleMesh
from resectsim.parcellation import (
    gif_scheme,
    gray_matter_mask,
    raw_resectable_mask,
    ventricle_mask,
)
from resectsim.simulate import ResectionParams, simulate_resection
from resectsim.volume import largest_component

log = logging.getLogger("resectsim")

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}


class _Parser(argparse.ArgumentParser):
    """argparse parser that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _setup_logging():
    level = _LOG_LEVELS.get(os.environ.get("RESECTSIM_LOG", "warn").lower(),
                            logging.WARNING)
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config(path):
    if path is None:
        return rio.SimulationConfig(ResectionParams())
    return rio.load_config(path)


def _resolve_scheme(config):
    return config.scheme if config.scheme is not None else gif_scheme()


def _meta_path(out_image: Path) -> Path:
    name = out_image.name
    for suffix in (".nii.gz", ".nii"):
        if name.endswith(suffix):
            name = name[:-len(suffix)]
            break
    return out_image.with_name(name + ".meta.json")


def _write_meta(meta: dict, path: Path):
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def write_ply(mesh: TriangleMesh, path: Path):
    """ASCII PLY export (vertices then faces) for mesh debugging."""
    lines = [
        "ply", "format ascii 1.0",
        f"element vertex {mesh.n_vertices}",
        "property float x", "property float y", "property float z",
        f"element face {mesh.n_faces}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    lines += [f"{v[0]:.9g} {v[1]:.9g} {v[2]:.9g}" for v in mesh.vertices]
    lines += [f"3 {f[0]} {f[1]} {f[2]}" for f in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n")


def derive_case_seed(base_seed: int, subject_id: str, draw: int) -> int:
    """base XOR a stable 64-bit hash of (subject_id, draw index)."""
    digest = hashlib.blake2b(f"{subject_id}\x1f{draw}".encode(),
                             digest_size=8).digest()
    return (int(base_seed) ^ int.from_bytes(digest, "big")) & (2 ** 63 - 1)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    params = config.params
    if args.shape:
        params = dataclasses.replace(params, shape=args.shape)
    scheme = _resolve_scheme(config)

    image = rio.read_scalar(args.image)
    parcellation = rio.read_labels(args.parcellation)
    result = simulate_resection(image, parcellation, scheme, params,
                                args.seed)

    out_image = Path(args.out_image)
    out_label = Path(args.out_label)
    rio.write_volume(result.x_sim, out_image)
    rio.write_volume(result.y_sim, out_label)
    meta_path = Path(args.out_meta) if args.out_meta else _meta_path(out_image)
    _write_meta(result.meta, meta_path)
    if args.dump_mesh:
        write_ply(result.placed_mesh, Path(args.dump_mesh))

    for key in ("shape", "hemisphere", "seed_voxel", "volume_mm3", "lambda",
                "zeta", "blur_sigma_mm", "cavity_voxels", "attempts"):
        print(f"{key}: {result.meta[key]}")
    return 0


# ---------------------------------------------------------------------------
# batch
# ---------------------------------------------------------------------------

def _run_case(case: dict):
    """One batch case; returns a summary row (runs in a worker process)."""
    row = {"subject_id": case["subject_id"], "draw": case["draw"],
           "seed": case["seed"], "status": "ok", "error": "",
           "image": case["out_image"], "label": case["out_label"]}
    try:
        image = rio.read_scalar(case["image"])
        parcellation = rio.read_labels(case["parcellation"])
        result = simulate_resection(image, parcellation, case["scheme"],
                                    case["params"], case["seed"])
        rio.write_volume(result.x_sim, Path(case["out_image"]))
        rio.write_volume(result.y_sim, Path(case["out_label"]))
        _write_meta(result.meta, _meta_path(Path(case["out_image"])))
        for key in ("hemisphere", "volume_mm3", "lambda", "blur_sigma_mm",
                    "shape", "cavity_voxels", "attempts"):
            row[key] = result.meta[key]
    except Exception as exc:  # noqa: BLE001 - batch records per-case failures
        row["status"] = "failed"
        row["error"] = str(exc)
    return row


_SUMMARY_COLUMNS = ("subject_id", "draw", "seed", "status", "error", "image",
                    "label", "hemisphere", "volume_mm3", "lambda",
                    "blur_sigma_mm", "shape", "cavity_voxels", "attempts")


def cmd_batch(args) -> int:
    config = _load_config(args.config)
    params = config.params
    if args.shape:
        params = dataclasses.replace(params, shape=args.shape)
    scheme = _resolve_scheme(config)
    manifest = rio.load_manifest(args.manifest)
    if len(manifest) == 0:
        raise InputDataError("manifest has no rows")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    cases = []
    for row in manifest:
        base = row.seed if row.seed is not None else args.seed
        for draw in range(args.per_subject):
            stem = f"{row.subject_id}_{draw}"
            cases.append({
                "subject_id": row.subject_id, "draw": draw,
                "seed": derive_case_seed(base, row.subject_id, draw),
                "image": str(row.image),
                "parcellation": str(row.parcellation),
                "out_image": str(out_dir / f"{stem}_image.nii.gz"),
                "out_label": str(out_dir / f"{stem}_label.nii.gz"),
                "params": params, "scheme": scheme,
            })

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_run_case, cases))
    else:
        rows = [_run_case(case) for case in cases]

    summary_path = out_dir / "summary.csv"
    with open(summary_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_SUMMARY_COLUMNS,
                                extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            # keep the summary relocatable: paths relative to the out-dir
            for key in ("image", "label"):
                row[key] = Path(row[key]).name
            writer.writerow(row)

    failures = [r for r in rows if r["status"] != "ok"]
    for failure in failures:
        log.error("case %s draw %s failed: %s", failure["subject_id"],
                  failure["draw"], failure["error"])
    print(f"{len(rows) - len(failures)}/{len(rows)} cases simulated; "
          f"summary: {summary_path}")
    return 2 if failures else 0


# ---------------------------------------------------------------------------
# postprocess
# ---------------------------------------------------------------------------

def cmd_postprocess(args) -> int:
    prob = rio.read_scalar(args.in_path)
    mask = threshold_mask(prob, args.threshold)
    if args.largest_component:
        mask = largest_component(mask, connectivity=26)
    rio.write_volume(mask, Path(args.out_path))
    print(f"{mask.count} voxels retained")
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def _as_mask(path):
    return threshold_mask(rio.read_scalar(path), 0.5)


def cmd_evaluate(args) -> int:
    if bool(args.pred) != bool(args.gt):
        raise InputDataError("--pred and --gt must be given together")
    if args.pred and args.pred_dir:
        raise InputDataError("give either --pred/--gt or --pred-dir/--gt-dir")

    pairs = []
    if args.pred:
        pairs.append((Path(args.pred).name, Path(args.pred), Path(args.gt)))
    else:
        if not (args.pred_dir and args.gt_dir):
            raise InputDataError("evaluate needs --pred/--gt or "
                                 "--pred-dir/--gt-dir")
        pred_dir, gt_dir = Path(args.pred_dir), Path(args.gt_dir)
        if not pred_dir.is_dir() or not gt_dir.is_dir():
            raise InputDataError("prediction and ground-truth directories "
                                 "must exist")
        pred_names = {p.name for p in pred_dir.iterdir() if p.is_file()}
        gt_names = {p.name for p in gt_dir.iterdir() if p.is_file()}
        unmatched = sorted(pred_names ^ gt_names)
        if unmatched:
            raise InputDataError(
                "unmatched filenames between directories: "
                + ", ".join(unmatched))
        if not pred_names:
            raise InputDataError("no cases found to evaluate")
        for name in sorted(pred_names):
            pairs.append((name, pred_dir / name, gt_dir / name))

    scores = []
    for name, pred_path, gt_path in pairs:
        score = dice(_as_mask(pred_path), _as_mask(gt_path))
        scores.append((name, score))
        print(f"{name} {score:.3f}")
    summary = median_iqr([s for _, s in scores])
    print(str(summary))

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["case", "dice"])
            for name, score in scores:
                writer.writerow([name, f"{score:.6f}"])
            writer.writerow(["median", f"{summary.median:.6f}"])
            writer.writerow(["iqr", f"{summary.iqr:.6f}"])
    return 0


# ---------------------------------------------------------------------------
# masks
# ---------------------------------------------------------------------------

def cmd_masks(args) -> int:
    config = _load_config(args.config)
    scheme = _resolve_scheme(config)
    smoothing = config.params.smoothing
    parcellation = rio.read_labels(args.parcellation)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    h = args.hemisphere

    gm = gray_matter_mask(parcellation, scheme, h)
    raw = raw_resectable_mask(parcellation, scheme, h)
    smoothed = smoothing.apply(raw)
    rio.write_volume(gm, out_dir / f"gm_{h}.nii.gz")
    rio.write_volume(raw, out_dir / f"resectable_raw_{h}.nii.gz")
    rio.write_volume(smoothed, out_dir / f"resectable_{h}.nii.gz")
    try:
        ventricles = ventricle_mask(parcellation, scheme)
        rio.write_volume(ventricles, out_dir / "ventricles.nii.gz")
    except InputDataError as exc:
        log.warning("skipping ventricle mask: %s", exc)
        print(f"warning: {exc}", file=sys.stderr)
    print(f"masks written to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="resectsim",
                     description="Simulate brain resection cavities on "
                                 "preoperative T1 MRI.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one resection",
                       description="Simulate a single resection and write "
                                   "the resected image, cavity label and a "
                                   "JSON metadata sidecar.")
    p.add_argument("--image", required=True, help="preoperative T1 (NIfTI)")
    p.add_argument("--parcellation", required=True,
                   help="brain parcellation aligned with the image")
    p.add_argument("--out-image", required=True)
    p.add_argument("--out-label", required=True)
    p.add_argument("--out-meta", help="metadata sidecar path "
                                      "(default: alongside --out-image)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shape", choices=["noisy", "ellipsoid", "cuboid"],
                   help="cavity shape variant (default from config: noisy)")
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--dump-mesh", help="also write the placed cavity mesh "
                                       "as ASCII PLY")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("batch", help="simulate a dataset from a manifest",
                       description="Run N simulations per manifest subject; "
                                   "failures are recorded, not fatal.")
    p.add_argument("--manifest", required=True,
                   help="CSV: subject_id,image,parcellation[,seed]")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--per-subject", type=int, default=1, metavar="N")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--shape", choices=["noisy", "ellipsoid", "cuboid"])
    p.add_argument("--config", help="TOML config file")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("postprocess",
                       help="threshold a probability map into a mask",
                       description="Threshold at --threshold and optionally "
                                   "keep only the largest connected "
                                   "component.")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", dest="out_path", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--largest-component", action="store_true")
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser("evaluate", help="Dice scores and median (IQR)")
    p.add_argument("--pred", help="single prediction mask")
    p.add_argument("--gt", help="single ground-truth mask")
    p.add_argument("--pred-dir", help="directory of predictions")
    p.add_argument("--gt-dir", help="directory of ground truths "
                                    "(paired by filename)")
    p.add_argument("--csv", help="also write scores to this CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("masks", help="write anatomical masks for inspection")
    p.add_argument("--parcellation", required=True)
    p.add_argument("--hemisphere", choices=["left", "right"], required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config", help="TOML config file")
    p.set_defaults(func=cmd_masks)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, InputDataError) as exc:
        print(f"resectsim: error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"resectsim: simulation failed: {exc}", file=sys.stderr)
        return 2
    except ResectSimError as exc:
        print(f"resectsim: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
