"""Command-line surface.

Every command reads and writes model documents (or DXF), so the commands
compose through files::

    faircurves analytic superspiral -a 0.5 -b 1 -c 1 --points 16 \
        --h-first 0.1 --h-last 1 --out clothoid.fcm
    faircurves approx --in clothoid.fcm --id analytic.hermite --degree 8 \
        --clip-end 3 --reference analytic --out template.fcm
    faircurves metrics --in template.fcm --id template --report-dir report/
    faircurves dxf export --in template.fcm --out out.dxf --scale 10

Exit codes: 0 success, 2 validation error, 3 numeric non-convergence,
4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from ._spline_fit import FairingNonConvergence
from .analytic import (
    AnalyticCurveSpec,
    HermiteTable,
    LacParams,
    SampleSchedule,
    SuperspiralParams,
    build_schedule,
    sample_hermite,
)
from .dxfio import DxfParseError, export_dxf, import_dxf
from .fairing import FairingConfig, Polyline, ValidationError, hermite_of, vcurve_from_support, vcurve_from_tangent
from .modelio import ModelDocument, ModelFormatError, decode_model, encode_model
from .numerics import NonConvergenceError, NumericsDomainError, PrecisionError
from .nurbs import GeometryError, NurbsCurve, extract_segments, segment_count
from .quality import ProjectionError, make_report
from .templates import ConstructionError, bspline_from_hermite, nurbzs_from_hermite

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

_VALIDATION_ERRORS = (
    ValidationError, GeometryError, ConstructionError, ModelFormatError,
    DxfParseError, NumericsDomainError, KeyError, ValueError,
)
_NUMERIC_ERRORS = (NonConvergenceError, PrecisionError, FairingNonConvergence, ProjectionError)


def _read_doc(path: str) -> ModelDocument:
    if path == "-":
        return decode_model(sys.stdin.read())
    with open(path, "r") as fh:
        return decode_model(fh.read())


def _write_doc(doc: ModelDocument, path: str) -> None:
    text = encode_model(doc)
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _get_entity(doc: ModelDocument, eid: str, kinds: tuple[type, ...]):
    try:
        entity = doc.get(eid)
    except KeyError:
        raise ValidationError("ENTITY_NOT_FOUND", f"no entity with id {eid!r}") from None
    if not isinstance(entity, kinds):
        names = "/".join(k.__name__ for k in kinds)
        raise ValidationError(
            "ENTITY_KIND", f"entity {eid!r} is {type(entity).__name__}, expected {names}"
        )
    return entity


def _resolve_reference(doc: ModelDocument, eid: str):
    ref = _get_entity(doc, eid, (NurbsCurve, AnalyticCurveSpec))
    return ref.realize() if isinstance(ref, AnalyticCurveSpec) else ref


def _schedule_params(args) -> np.ndarray:
    t0, t1 = (args.range if args.range is not None else (0.0, None))
    h_first = args.h_first
    h_last = args.h_last if args.h_last is not None else h_first
    if h_first is None:
        if t1 is None:
            raise ValidationError(
                "SCHEDULE_UNDERSPECIFIED", "give --h-first (and --h-last) or a full --range"
            )
        sched = SampleSchedule(args.points, t0, (t1 - t0) / (args.points - 1),
                               (t1 - t0) / (args.points - 1))
        return build_schedule(sched)
    ts = build_schedule(SampleSchedule(args.points, t0, h_first, h_last))
    if t1 is not None:
        ts = t0 + (ts - t0) * (t1 - t0) / (ts[-1] - t0)
    return ts


def _cmd_vcurve(args) -> int:
    doc = _read_doc(args.infile)
    poly = _get_entity(doc, args.id, (Polyline,))
    cfg = FairingConfig(functional=args.functional)
    faired = vcurve_from_support(poly, cfg) if poly.kind == "support" else vcurve_from_tangent(poly, cfg)
    table = hermite_of(faired)
    report = make_report(faired.curve)
    doc.add(f"{args.id}.vcurve", faired.curve)
    doc.add(f"{args.id}.hermite", table)
    doc.add(f"{args.id}.quality", report)
    _write_doc(doc, args.out)
    print(
        f"vcurve {args.id}: functional {faired.functional_value:.6g} "
        f"(from {faired.initial_functional:.6g}), {faired.iterations} evaluations,"
        f" smoothness {report.smoothness_order}, extrema {len(report.extrema)}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_analytic(args) -> int:
    ts = _schedule_params(args)
    if args.family == "superspiral":
        params = SuperspiralParams(args.a, args.b, args.c, scale=args.scale)
        spec = AnalyticCurveSpec("superspiral", (float(ts[0]), float(ts[-1])), superspiral=params)
    else:
        params = LacParams(args.alpha, args.c0, args.c1)
        spec = AnalyticCurveSpec("lac", (float(ts[0]), float(ts[-1])), lac=params, theta0=args.theta0)
    curve = spec.realize()
    table = sample_hermite(curve, ts)
    doc = ModelDocument(units=args.units)
    doc.add(args.id, spec)
    doc.add(f"{args.id}.hermite", table)
    if len(table) >= 3:
        doc.add(f"{args.id}.points", Polyline(table.points.copy(), kind="support", topology="open"))
    _write_doc(doc, args.out)
    print(
        f"analytic {args.family} {args.id}: {len(table)} nodes over "
        f"[{ts[0]:.6g}, {ts[-1]:.6g}], arc length {table.seg_lengths.sum():.6g}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_approx(args) -> int:
    doc = _read_doc(args.infile)
    table = _get_entity(doc, args.id, (HermiteTable,))
    if args.degree == 3:
        curve = nurbzs_from_hermite(table)
    else:
        curve = bspline_from_hermite(table, args.degree)
    if args.clip_end:
        total = segment_count(curve)
        if args.clip_end >= total:
            raise ValidationError(
                "CLIP_TOO_LARGE", f"cannot clip {args.clip_end} of {total} segments"
            )
        curve = extract_segments(curve, 0, total - args.clip_end)
    reference = _resolve_reference(doc, args.reference) if args.reference else None
    report = make_report(curve, reference=reference)
    out_id = args.curve_id or f"{args.id}.approx"
    doc.add(out_id, curve)
    doc.add(f"{out_id}.quality", report)
    _write_doc(doc, args.out)
    dev = ""
    if reference is not None:
        dev = f", deviation [{report.deviation_min:.6g}, {report.deviation_max:.6g}]"
    print(
        f"approx {out_id}: degree {curve.degree}, {segment_count(curve)} segments{dev}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_extract(args) -> int:
    doc = _read_doc(args.infile)
    curve = _get_entity(doc, args.id, (NurbsCurve,))
    sub = extract_segments(curve, args.start, args.count)
    doc.add(f"{args.id}.extract", sub)
    _write_doc(doc, args.out)
    return EXIT_OK


def _cmd_metrics(args) -> int:
    doc = _read_doc(args.infile)
    curve = _get_entity(doc, args.id, (NurbsCurve,))
    reference = _resolve_reference(doc, args.reference) if args.reference else None
    report = make_report(curve, reference=reference)
    for name in (
        "smoothness_order", "variation", "max_rate", "bending_energy",
        "deviation_max", "deviation_min", "monotone", "lcg_residual",
    ):
        print(f"{name} {getattr(report, name)}")
    print(f"extrema {len(report.extrema)}")
    if args.report_dir:
        from .report import write_report

        paths = write_report(curve, report, args.report_dir, reference=reference)
        for p in paths:
            print(f"wrote {p}", file=sys.stderr)
    return EXIT_OK


def _cmd_dxf_export(args) -> int:
    doc = _read_doc(args.infile)
    if args.id:
        curves = [_get_entity(doc, eid, (NurbsCurve,)) for eid in args.id]
    else:
        curves = [obj for _, obj in doc.entities if isinstance(obj, NurbsCurve)]
        if not curves:
            raise ValidationError("NO_CURVES", "document contains no NURBS curves")
    path = export_dxf(curves, args.out, scale=args.scale, units=doc.units)
    print(f"wrote {path} ({len(curves)} spline{'s' if len(curves) != 1 else ''})", file=sys.stderr)
    return EXIT_OK


def _cmd_dxf_import(args) -> int:
    curves, warnings = import_dxf(args.infile)
    from .dxfio import read_units

    doc = ModelDocument(units=read_units(args.infile))
    for i, curve in enumerate(curves):
        doc.add(f"{args.prefix}{i}", curve)
    _write_doc(doc, args.out)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"imported {len(curves)} spline(s)", file=sys.stderr)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="faircurves", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"faircurves {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vcurve", help="fair a support or tangent polyline")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--id", required=True, help="polyline entity id")
    p.add_argument("--functional", choices=("variation", "energy"), default="variation")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_vcurve)

    pa = sub.add_parser("analytic", help="generate an analytic aesthetic curve")
    fam = pa.add_subparsers(dest="family", required=True)

    ps = fam.add_parser("superspiral", help="superspiral with shape parameters a, b, c")
    ps.add_argument("-a", type=float, required=True)
    ps.add_argument("-b", type=float, required=True)
    ps.add_argument("-c", type=float, required=True)
    ps.add_argument("--scale", type=float, default=1.0)
    pl = fam.add_parser("lac", help="log-aesthetic curve with slope alpha")
    pl.add_argument("--alpha", type=float, required=True)
    pl.add_argument("--c0", type=float, required=True)
    pl.add_argument("--c1", type=float, required=True)
    pl.add_argument("--theta0", type=float, default=0.0)
    for q in (ps, pl):
        q.add_argument("--range", type=float, nargs=2, metavar=("T0", "T1"))
        q.add_argument("--points", type=int, required=True)
        q.add_argument("--h-first", type=float, dest="h_first")
        q.add_argument("--h-last", type=float, dest="h_last")
        q.add_argument("--id", default="analytic")
        q.add_argument("--units", default="mm", choices=("mm", "cm", "unitless"))
        q.add_argument("--out", default="-")
        q.set_defaults(func=_cmd_analytic)

    p = sub.add_parser("approx", help="NURBS template from a Hermite table")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--id", required=True, help="hermite table entity id")
    p.add_argument("--degree", type=int, choices=(3, 6, 8, 10), required=True)
    p.add_argument("--clip-end", type=int, default=0, dest="clip_end",
                   help="drop this many end segments (shape-perturbation clipping)")
    p.add_argument("--reference", help="analytic spec or curve id for deviation")
    p.add_argument("--curve-id", dest="curve_id")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_approx)

    p = sub.add_parser("extract", help="extract a knot-span range as a sub-curve")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--start", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("metrics", help="quality report for a curve")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--reference")
    p.add_argument("--report-dir", dest="report_dir",
                   help="write metrics.csv and figures into this directory")
    p.set_defaults(func=_cmd_metrics)

    pd = sub.add_parser("dxf", help="DXF interchange")
    dxf_sub = pd.add_subparsers(dest="dxf_command", required=True)
    p = dxf_sub.add_parser("export")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--id", action="append", help="curve id (repeatable; default all curves)")
    p.add_argument("--out", help="target path (default scratch dir / r_out_dxf.dxf)")
    p.add_argument("--scale", type=float, default=1.0)
    p.set_defaults(func=_cmd_dxf_export)
    p = dxf_sub.add_parser("import")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default="-")
    p.add_argument("--prefix", default="dxf-")
    p.set_defaults(func=_cmd_dxf_import)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=8472)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
