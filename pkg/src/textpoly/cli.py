"""Command-line entry point: corpus synthesis, generation, evaluation, ablation.

Exit codes: 0 ok, 2 usage, 3 IO failure, 4 schema violation.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .anchors import AnchorLattice, default_lattice
from .boundary import RefineConfig
from .errors import FormatError, SchemaError, TextPolyError
from .evaluate import (
    DEFAULT_DIST_RADII,
    DEFAULT_IOU_THRESHOLDS,
    format_table,
    report_to_dict,
    sweep_grouped,
    sweep_points,
    write_report,
)
from .geometry import centroid
from .manifest import AnnotationRecord, load_manifest, save_manifest
from .pipeline import PipelineConfig, run_corpus
from .raster import OverlayScene, emit_overlay_svg, read_image, write_image
from .recognize import GlyphAtlas, OracleRecognizer, TemplateRecognizer
from .synth import PROFILES, make_corpus
from .trim import TrimConfig

import json


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="textpoly",
                                     description="Point-to-polygon text annotation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="render a synthetic corpus")
    p_synth.add_argument("--count", type=int, required=True)
    p_synth.add_argument("--profile", choices=PROFILES, default="horizontal")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--noise", type=float, default=0.0)
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.set_defaults(func=cmd_synth)

    p_gen = sub.add_parser("generate", help="grow polygons from annotated points")
    p_gen.add_argument("--manifest", required=True)
    p_gen.add_argument("--out", required=True, help="predictions path or directory")
    p_gen.add_argument("--points-from", choices=("manifest", "centroid"), default="manifest")
    p_gen.add_argument("--recognizer", choices=("oracle", "template"), default="oracle")
    p_gen.add_argument("--atlas", help="glyph atlas JSON for the template recognizer")
    p_gen.add_argument("--tau", type=float, default=0.03)
    p_gen.add_argument("--no-agm", action="store_true", help="disable anchor search")
    p_gen.add_argument("--no-pgm", action="store_true", help="disable boundary refinement")
    p_gen.add_argument("--no-prm", action="store_true", help="disable attention trimming")
    p_gen.add_argument("--lattice", help="anchor lattice JSON override")
    p_gen.add_argument("--refine-rounds", type=int, default=30)
    p_gen.add_argument("--refine-step", type=float, default=None)
    p_gen.add_argument("--smoothness", type=float, default=0.01)
    p_gen.add_argument("--ablate-random-anchor", type=int, default=None, metavar="SEED",
                       help="with --no-agm, substitute a seeded random anchor")
    p_gen.add_argument("--iou", type=_float_list, default=list(DEFAULT_IOU_THRESHOLDS))
    p_gen.add_argument("--overlay-dir", help="write one inspection SVG per image")
    p_gen.add_argument("--no-raster", action="store_true",
                       help="omit the raster from overlay SVGs")
    p_gen.set_defaults(func=cmd_generate)

    p_eval = sub.add_parser("eval", help="score predictions against ground truth")
    p_eval.add_argument("--manifest", required=True, help="ground-truth manifest")
    p_eval.add_argument("--predictions", required=True)
    p_eval.add_argument("--iou", type=_float_list, default=list(DEFAULT_IOU_THRESHOLDS))
    p_eval.add_argument("--dist", type=_float_list, default=None,
                        help="additionally evaluate points at these radii")
    p_eval.add_argument("--out", help="write the JSON report here")
    p_eval.set_defaults(func=cmd_eval)

    p_abl = sub.add_parser("ablate", help="run the four stage-mask rows")
    p_abl.add_argument("--manifest", required=True)
    p_abl.add_argument("--out", help="write the combined JSON table here")
    p_abl.add_argument("--points-from", choices=("manifest", "centroid"), default="centroid")
    p_abl.add_argument("--recognizer", choices=("oracle", "template"), default="oracle")
    p_abl.add_argument("--atlas")
    p_abl.add_argument("--tau", type=float, default=0.03)
    p_abl.add_argument("--iou", type=_float_list, default=[0.5])
    p_abl.add_argument("--ablate-random-anchor", type=int, default=None, metavar="SEED")
    p_abl.set_defaults(func=cmd_ablate)

    return parser


def _make_recognizer_factory(kind: str, atlas_path: str | None):
    if kind == "template":
        atlas = GlyphAtlas.from_json(atlas_path) if atlas_path else None
        shared = TemplateRecognizer(atlas)
        return lambda record, img: shared

    def factory(record: AnnotationRecord, img):
        oracle = OracleRecognizer()
        for inst in record.instances:
            if inst.polygon is not None and inst.text:
                oracle.register(inst.polygon, inst.text)
        return oracle

    return factory


def _pipeline_config(args) -> PipelineConfig:
    lattice = AnchorLattice.from_json(args.lattice) if getattr(args, "lattice", None) \
        else default_lattice()
    refine = RefineConfig(
        max_rounds=getattr(args, "refine_rounds", 30),
        initial_step=getattr(args, "refine_step", None),
        smoothness_weight=getattr(args, "smoothness", 0.01),
    )
    return PipelineConfig(
        enable_anchor_search=not getattr(args, "no_agm", False),
        enable_refine=not getattr(args, "no_pgm", False),
        enable_trim=not getattr(args, "no_prm", False),
        lattice=lattice,
        refine=refine,
        trim=TrimConfig(tau=args.tau),
        random_anchor_seed=getattr(args, "ablate_random_anchor", None),
    )


def cmd_synth(args) -> int:
    if args.count < 1:
        raise SystemExit(2)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scenes = make_corpus(args.count, args.profile, args.seed, noise_sigma=args.noise)
    records = []
    for i, (img, gts) in enumerate(scenes):
        name = f"scene_{i:05d}.pgm"
        write_image(img, out / name)
        from .manifest import InstanceRecord

        records.append(AnnotationRecord(name, [
            InstanceRecord(polygon=gt.polygon, point=gt.center, text=gt.text)
            for gt in gts
        ]))
    save_manifest(out / "manifest.json", records)
    print(f"wrote {len(records)} scenes to {out}")
    return 0


def _write_overlays(records, predictions, base_dir: Path, overlay_dir: Path,
                    include_raster: bool) -> None:
    overlay_dir.mkdir(parents=True, exist_ok=True)
    pred_by_path = {r.image_path: r for r in predictions}
    for record in records:
        img = read_image(base_dir / record.image_path)
        layers = []
        for inst in record.instances:
            if inst.polygon is None:
                continue
            color = "green" if inst.care else "blue"
            layers.append((inst.polygon, color, inst.text or ""))
        for inst in pred_by_path[record.image_path].instances:
            if inst.polygon is not None:
                layers.append((inst.polygon, "red", ""))
        svg_name = Path(record.image_path).with_suffix(".svg").name
        emit_overlay_svg(OverlayScene(img, layers), overlay_dir / svg_name,
                         include_raster=include_raster)


def cmd_generate(args) -> int:
    manifest_path = Path(args.manifest)
    records = load_manifest(manifest_path)
    cfg = _pipeline_config(args)
    factory = _make_recognizer_factory(args.recognizer, args.atlas)
    predictions, report = run_corpus(records, manifest_path.parent, factory, cfg,
                                     thresholds=args.iou,
                                     points_from=args.points_from)
    out = Path(args.out)
    if out.suffix != ".json":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "predictions.json"
    save_manifest(out, predictions)
    if args.overlay_dir:
        _write_overlays(records, predictions, manifest_path.parent,
                        Path(args.overlay_dir), include_raster=not args.no_raster)
    print(format_table(report, label=f"generated {sum(len(r.instances) for r in predictions)} "
                                     f"polygons -> {out}"))
    return 0


def _group_by_image(gt_records, pred_records):
    preds_by_path = {r.image_path: r.instances for r in pred_records}
    groups = []
    point_pairs = ([], [])
    for record in gt_records:
        pred_instances = preds_by_path.get(record.image_path, [])
        pred_polys = [i.polygon for i in pred_instances if i.polygon is not None]
        gt_polys = [i.polygon for i in record.instances if i.polygon is not None]
        groups.append((pred_polys, gt_polys))
        for inst in pred_instances:
            p = inst.point or (centroid(inst.polygon) if inst.polygon else None)
            if p is not None:
                point_pairs[0].append(p)
        for inst in record.instances:
            if not inst.care:
                continue
            p = inst.point or (centroid(inst.polygon) if inst.polygon else None)
            if p is not None:
                point_pairs[1].append(p)
    return groups, point_pairs


def cmd_eval(args) -> int:
    gt_records = load_manifest(args.manifest)
    pred_records = load_manifest(args.predictions)
    groups, (pred_pts, gt_pts) = _group_by_image(gt_records, pred_records)
    report = sweep_grouped(groups, args.iou)
    dist_report = None
    if args.dist:
        dist_report = sweep_points(pred_pts, gt_pts, args.dist)
    print(format_table(report, dist_report))
    if args.out:
        write_report(args.out, report, dist_report)
    return 0


_ABLATION_ROWS = (
    ("full", {}),
    ("-AGM", {"enable_anchor_search": False}),
    ("-PGM", {"enable_refine": False}),
    ("-PRM", {"enable_trim": False}),
)


def cmd_ablate(args) -> int:
    manifest_path = Path(args.manifest)
    records = load_manifest(manifest_path)
    factory = _make_recognizer_factory(args.recognizer, args.atlas)
    rows = []
    for label, overrides in _ABLATION_ROWS:
        cfg = PipelineConfig(trim=TrimConfig(tau=args.tau),
                             random_anchor_seed=args.ablate_random_anchor,
                             **overrides)
        _, report = run_corpus(records, manifest_path.parent, factory, cfg,
                               thresholds=args.iou, points_from=args.points_from)
        rows.append((label, report))
    header = f"{'mask':>6}" + "".join(
        f"  {'P@' + format(t, 'g'):>8} {'R@' + format(t, 'g'):>8} {'H@' + format(t, 'g'):>8}"
        for t in args.iou
    )
    print(header)
    for label, report in rows:
        cells = "".join(
            f"  {report.per_threshold[t].precision:>8.3f} "
            f"{report.per_threshold[t].recall:>8.3f} "
            f"{report.per_threshold[t].hmean:>8.3f}"
            for t in args.iou
        )
        print(f"{label:>6}{cells}")
    if args.out:
        payload = {label: report_to_dict(report) for label, report in rows}
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 4
    except (OSError, FormatError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    except TextPolyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
