"""Command-line front end: single edits, CSV-manifest batches, model re-apply.

Exit codes: 0 full success, 1 any processing failure, 2 usage errors.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

from . import colorspace, report as reporting
from .colorspace import LabColor, RgbColor
from .image import load_image, save_image
from .pipeline import (
    BatchEntry,
    EditRequest,
    apply_correction,
    edit_batch,
    edit_primary_colour,
)
from .regrain import RegrainParams

log = logging.getLogger("recolor")

USAGE_ERROR = 2


def _hex_color(text: str) -> RgbColor:
    try:
        return colorspace.parse_hex_color(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_edit_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--regrain", action="store_true",
                        help="enable the gradient-preserving cleanup pass")
    parser.add_argument("--max-clusters", type=int, default=5, metavar="N",
                        help="palette size budget (default 5)")
    parser.add_argument("--thumbnail", type=int, default=32, metavar="N",
                        help="thumbnail edge length for parameter estimation")
    parser.add_argument("--chroma-floor", type=float, default=10.0, metavar="X",
                        help="minimum chroma for primary-cluster candidates")
    parser.add_argument("--regularisation", type=float, default=1e-3, metavar="K",
                        help="ridge weight for the matrix fit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recolor",
        description="Replace the primary colour of product images automatically.",
    )
    parser.add_argument("--verbose", action="store_true", help="log stage details")
    sub = parser.add_subparsers(dest="mode", required=True)

    edit = sub.add_parser("edit", help="recolour a single image")
    edit.add_argument("input", help="input PNG/JPEG image")
    edit.add_argument("--target", type=_hex_color, required=True, metavar="#RRGGBB",
                      help="target primary colour")
    edit.add_argument("-o", "--output", required=True, help="output image path")
    _add_edit_options(edit)
    edit.add_argument("--report", metavar="PATH", help="write a JSON edit report")
    edit.add_argument("--figures", metavar="DIR",
                      help="render diagnostic figures and search.csv to DIR")
    edit.add_argument("--verbose", action="store_true", help="log stage details")

    batch = sub.add_parser("batch", help="process a CSV manifest of edits")
    batch.add_argument("manifest", help="CSV with header input,target,output")
    _add_edit_options(batch)
    batch.add_argument("--jobs", type=int, default=os.cpu_count() or 1, metavar="N",
                       help="parallel worker count (default: cpu count)")
    batch.add_argument("--report", metavar="PATH",
                       help="write a JSON array of per-entry reports")
    batch.add_argument("--summary", metavar="PATH",
                       help="write a CSV summary of per-entry outcomes")
    batch.add_argument("--verbose", action="store_true", help="log stage details")

    apply_p = sub.add_parser("apply", help="re-apply a saved model to an image")
    apply_p.add_argument("input", help="input PNG/JPEG image")
    apply_p.add_argument("--model", required=True, metavar="REPORT.json",
                         help="report produced by a previous edit")
    apply_p.add_argument("-o", "--output", required=True, help="output image path")
    apply_p.add_argument("--verbose", action="store_true", help="log stage details")
    return parser


def parse_args(argv: list[str]) -> argparse.Namespace:
    """Validate arguments; exits with code 2 on any usage problem."""
    parser = build_parser()
    args = parser.parse_args(argv)
    paths = []
    if args.mode == "edit":
        paths.append(args.input)
    elif args.mode == "batch":
        paths.append(args.manifest)
    else:
        paths.extend([args.input, args.model])
    for path in paths:
        if not os.path.exists(path):
            parser.error(f"file not found: {path}")
    return args


def _request_from(args: argparse.Namespace, target: RgbColor) -> EditRequest:
    return EditRequest(
        target=target,
        enable_regrain=args.regrain,
        max_clusters=args.max_clusters,
        thumbnail_size=args.thumbnail,
        chroma_floor=args.chroma_floor,
        regularisation=args.regularisation,
    )


def _run_edit(args: argparse.Namespace) -> int:
    try:
        img = load_image(args.input)
    except OSError as exc:
        print(f"recolor: cannot read {args.input}: {exc}", file=sys.stderr)
        return 1
    output, report = edit_primary_colour(img, _request_from(args, args.target))
    save_image(output, args.output)
    if args.report:
        reporting.write_report(report, args.report)
    if args.figures:
        reporting.render_figures(img, report, args.figures)
    log.info("edited %s -> %s (delta_e_max=%g, %.3fs)", args.input, args.output,
             report.delta_e_max, report.timings["total"])
    return 0


def _read_manifest(path: str) -> list[BatchEntry]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["input", "target", "output"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise ValueError(
                f"manifest header must be {','.join(expected)}, "
                f"got {reader.fieldnames}"
            )
        return [
            BatchEntry(
                input_path=row["input"].strip(),
                target_hex=row["target"].strip(),
                output_path=row["output"].strip(),
            )
            for row in reader
        ]


def _run_batch(args: argparse.Namespace) -> int:
    try:
        entries = _read_manifest(args.manifest)
    except (OSError, ValueError) as exc:
        print(f"recolor: bad manifest {args.manifest}: {exc}", file=sys.stderr)
        return USAGE_ERROR
    request = _request_from(args, RgbColor(0.0, 0.0, 0.0))  # per-entry targets
    results = edit_batch(entries, request, jobs=args.jobs)

    failures = 0
    for result in results:
        if result.ok:
            log.info("ok %s -> %s", result.entry.input_path, result.entry.output_path)
        else:
            failures += 1
            print(
                f"recolor: {result.entry.input_path}: {result.error}",
                file=sys.stderr,
            )
    if args.report:
        reporting.write_batch_report(
            [
                {
                    "input": r.entry.input_path,
                    "target": r.entry.target_hex,
                    "output": r.entry.output_path,
                    "ok": r.ok,
                    "error": r.error,
                    "report": r.report.to_dict() if r.report else None,
                }
                for r in results
            ],
            args.report,
        )
    if args.summary:
        with open(args.summary, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["input", "target", "output", "status", "error",
                 "delta_e_max", "total_seconds"]
            )
            for r in results:
                writer.writerow([
                    r.entry.input_path, r.entry.target_hex, r.entry.output_path,
                    "ok" if r.ok else "failed", r.error or "",
                    r.report.delta_e_max if r.report else "",
                    f"{r.report.timings['total']:.3f}" if r.report else "",
                ])
    print(f"{len(results) - failures}/{len(results)} entries succeeded")
    return 1 if failures else 0


def _run_apply(args: argparse.Namespace) -> int:
    try:
        img = load_image(args.input)
        model = reporting.load_report(args.model)
    except (OSError, ValueError, KeyError) as exc:
        print(f"recolor: cannot load inputs: {exc}", file=sys.stderr)
        return 1
    regrain_cfg = model.settings.get("regrain", {})
    output, _ = apply_correction(
        img,
        matrix=__import__("numpy").asarray(model.matrix),
        delta_e_max=model.delta_e_max,
        target=LabColor(*model.target_lab),
        enable_regrain=bool(regrain_cfg.get("enabled", False)),
        regrain_params=RegrainParams(
            fidelity=regrain_cfg.get("fidelity", 1.0),
            levels=regrain_cfg.get("levels"),
            iterations=regrain_cfg.get("iterations", 30),
        ),
    )
    save_image(output, args.output)
    log.info("applied %s to %s -> %s", args.model, args.input, args.output)
    return 0


def run(args: argparse.Namespace) -> int:
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.mode == "edit":
            return _run_edit(args)
        if args.mode == "batch":
            return _run_batch(args)
        return _run_apply(args)
    except OSError as exc:
        print(f"recolor: {exc}", file=sys.stderr)
        return 1


def main(argv: list[str] | None = None) -> None:
    sys.exit(run(parse_args(sys.argv[1:] if argv is None else argv)))


if __name__ == "__main__":
    main()
