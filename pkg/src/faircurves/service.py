"""Stateless HTTP facade over the curve kernel.

Geometry travels as model-document text (the same format the CLI reads and
writes); operation parameters ride in the query string.  Every response body
is a pure function of the request, so replaying a request yields a
byte-identical body; timings and iteration counts live in response headers
(``X-Faircurve-Time-Ms``) to keep it that way.

Error responses are JSON ``{"code": ..., "message": ...}`` with stable
machine-readable codes: POLYLINE_TOO_SHORT, TANGENT_NOT_CONVEX,
HYPERGEOMETRIC_DOMAIN, DEGREE_NOT_SUPPORTED, NUMERIC_NONCONVERGENCE, and the
generic VALIDATION / NUMERIC_DOMAIN for other rejected inputs.
"""

from __future__ import annotations

import time

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from . import __version__
from ._spline_fit import FairingNonConvergence
from .analytic import (
    AnalyticCurveSpec,
    HermiteTable,
    SampleSchedule,
    build_schedule,
    sample_hermite,
)
from .dxfio import export_dxf
from .fairing import (
    FairingConfig,
    Polyline,
    ValidationError,
    hermite_of,
    vcurve_from_support,
    vcurve_from_tangent,
)
from .modelio import (
    MODEL_CONTENT_TYPE,
    ModelDocument,
    ModelFormatError,
    decode_model,
    encode_model,
)
from .numerics import NonConvergenceError, NumericsDomainError, PrecisionError
from .nurbs import GeometryError, NurbsCurve, extract_segments, segment_count
from .quality import ProjectionError, make_report
from .templates import (
    SUPPORTED_BSPLINE_DEGREES,
    ConstructionError,
    bspline_from_hermite,
    nurbzs_from_hermite,
)

__all__ = ["create_app", "MAX_BODY_BYTES"]

MAX_BODY_BYTES = 10 * 1024 * 1024


class _ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _error_json(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"code": code, "message": message}, status_code=status)


def _classify(exc: Exception) -> _ApiError:
    if isinstance(exc, _ApiError):
        return exc
    if isinstance(exc, ValidationError):
        return _ApiError(422, exc.code, str(exc))
    if isinstance(exc, NumericsDomainError):
        return _ApiError(422, getattr(exc, "code", "NUMERIC_DOMAIN"), str(exc))
    if isinstance(exc, (GeometryError, ConstructionError, ModelFormatError, ValueError)):
        return _ApiError(422, "VALIDATION", str(exc))
    if isinstance(exc, (NonConvergenceError, PrecisionError, FairingNonConvergence, ProjectionError)):
        return _ApiError(500, "NUMERIC_NONCONVERGENCE", str(exc))
    raise exc


def _doc_response(doc: ModelDocument, started: float, extra_headers: dict | None = None) -> Response:
    headers = {"X-Faircurve-Time-Ms": f"{(time.perf_counter() - started) * 1e3:.1f}"}
    if extra_headers:
        headers.update(extra_headers)
    return Response(encode_model(doc), media_type=MODEL_CONTENT_TYPE, headers=headers)


async def _read_doc(request: Request) -> ModelDocument:
    body = await request.body()
    if len(body) > MAX_BODY_BYTES:
        raise _ApiError(413, "BODY_TOO_LARGE", f"request exceeds {MAX_BODY_BYTES} bytes")
    try:
        return decode_model(body.decode("utf-8", errors="replace"))
    except ModelFormatError as exc:
        raise _ApiError(422, "MODEL_FORMAT", str(exc)) from exc


def _pick(doc: ModelDocument, eid: str | None, kind: type, what: str):
    if eid is not None:
        try:
            entity = doc.get(eid)
        except KeyError:
            raise _ApiError(422, "ENTITY_NOT_FOUND", f"no entity with id {eid!r}") from None
        if not isinstance(entity, kind):
            raise _ApiError(422, "ENTITY_KIND", f"entity {eid!r} is not a {what}")
        return eid, entity
    for found_id, entity in doc.entities:
        if isinstance(entity, kind):
            return found_id, entity
    raise _ApiError(422, "ENTITY_NOT_FOUND", f"document contains no {what}")


def create_app() -> FastAPI:
    app = FastAPI(title="faircurves", version=__version__, docs_url=None, redoc_url=None)

    @app.middleware("http")
    async def body_limit(request: Request, call_next):
        length = request.headers.get("content-length")
        if length is not None and int(length) > MAX_BODY_BYTES:
            return _error_json(413, "BODY_TOO_LARGE", f"request exceeds {MAX_BODY_BYTES} bytes")
        return await call_next(request)

    @app.exception_handler(Exception)
    async def on_error(request: Request, exc: Exception):  # pragma: no cover - safety net
        try:
            api = _classify(exc)
        except Exception:
            return _error_json(500, "INTERNAL", repr(exc))
        return _error_json(api.status, api.code, api.message)

    @app.get("/api/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/api/vcurve")
    async def vcurve(request: Request, id: str | None = None, functional: str = "variation"):
        started = time.perf_counter()
        doc = await _read_doc(request)
        try:
            eid, poly = _pick(doc, id, Polyline, "polyline")
            cfg = FairingConfig(functional=functional)
            if poly.kind == "support":
                faired = vcurve_from_support(poly, cfg)
            else:
                faired = vcurve_from_tangent(poly, cfg)
            table = hermite_of(faired)
            report = make_report(faired.curve)
            out = ModelDocument(units=doc.units)
            out.add(f"{eid}.vcurve", faired.curve)
            out.add(f"{eid}.hermite", table)
            out.add(f"{eid}.quality", report)
        except Exception as exc:
            api = _classify(exc)
            return _error_json(api.status, api.code, api.message)
        return _doc_response(out, started, {"X-Faircurve-Iterations": str(faired.iterations)})

    @app.post("/api/analytic")
    async def analytic(
        request: Request,
        id: str | None = None,
        points: int = 16,
        h_first: float | None = None,
        h_last: float | None = None,
    ):
        started = time.perf_counter()
        doc = await _read_doc(request)
        try:
            eid, spec = _pick(doc, id, AnalyticCurveSpec, "analytic curve spec")
            t0, t1 = spec.t_range
            if h_first is not None:
                hl = h_last if h_last is not None else h_first
                ts = build_schedule(SampleSchedule(points, t0, h_first, hl))
                ts = t0 + (ts - t0) * (t1 - t0) / (ts[-1] - t0)
            else:
                ts = np.linspace(t0, t1, points)
            try:
                curve = spec.realize()
                table = sample_hermite(curve, ts)
            except NumericsDomainError as exc:
                raise _ApiError(422, "HYPERGEOMETRIC_DOMAIN", str(exc)) from exc
            out = ModelDocument(units=doc.units)
            out.add(eid, spec)
            out.add(f"{eid}.hermite", table)
            if len(table) >= 3:
                out.add(f"{eid}.points", Polyline(table.points.copy(), "support", "open"))
        except Exception as exc:
            api = _classify(exc)
            return _error_json(api.status, api.code, api.message)
        return _doc_response(out, started)

    @app.post("/api/approx")
    async def approx(
        request: Request,
        degree: int = 8,
        id: str | None = None,
        clip_end: int = 0,
        reference: str | None = None,
    ):
        started = time.perf_counter()
        doc = await _read_doc(request)
        try:
            if degree not in (3, *SUPPORTED_BSPLINE_DEGREES):
                raise _ApiError(
                    422, "DEGREE_NOT_SUPPORTED",
                    f"degree must be 3 or one of {SUPPORTED_BSPLINE_DEGREES}, got {degree}",
                )
            eid, table = _pick(doc, id, HermiteTable, "hermite table")
            curve = nurbzs_from_hermite(table) if degree == 3 else bspline_from_hermite(table, degree)
            if clip_end:
                total = segment_count(curve)
                if clip_end >= total:
                    raise _ApiError(422, "VALIDATION", f"cannot clip {clip_end} of {total} segments")
                curve = extract_segments(curve, 0, total - clip_end)
            ref_curve = None
            if reference is not None:
                _, ref = _pick(doc, reference, (NurbsCurve, AnalyticCurveSpec), "reference")
                ref_curve = ref.realize() if isinstance(ref, AnalyticCurveSpec) else ref
            report = make_report(curve, reference=ref_curve)
            out = ModelDocument(units=doc.units)
            out.add(f"{eid}.approx", curve)
            out.add(f"{eid}.quality", report)
        except Exception as exc:
            api = _classify(exc)
            return _error_json(api.status, api.code, api.message)
        return _doc_response(out, started)

    @app.post("/api/metrics")
    async def metrics(request: Request, id: str | None = None, reference: str | None = None):
        started = time.perf_counter()
        doc = await _read_doc(request)
        try:
            eid, curve = _pick(doc, id, NurbsCurve, "nurbs curve")
            ref_curve = None
            if reference is not None:
                _, ref = _pick(doc, reference, (NurbsCurve, AnalyticCurveSpec), "reference")
                ref_curve = ref.realize() if isinstance(ref, AnalyticCurveSpec) else ref
            report = make_report(curve, reference=ref_curve)
            out = ModelDocument(units=doc.units)
            out.add(f"{eid}.quality", report)
        except Exception as exc:
            api = _classify(exc)
            return _error_json(api.status, api.code, api.message)
        return _doc_response(out, started)

    @app.post("/api/export/dxf")
    async def export(request: Request, scale: float = 1.0):
        import os
        import tempfile

        started = time.perf_counter()
        doc = await _read_doc(request)
        try:
            curves = [obj for _, obj in doc.entities if isinstance(obj, NurbsCurve)]
            if not curves:
                raise _ApiError(422, "VALIDATION", "document contains no NURBS curves")
            with tempfile.TemporaryDirectory() as tmp:
                path = os.path.join(tmp, "export.dxf")
                export_dxf(curves, path, scale=scale, units=doc.units)
                with open(path, "rb") as fh:
                    payload = fh.read()
        except Exception as exc:
            api = _classify(exc)
            return _error_json(api.status, api.code, api.message)
        headers = {"X-Faircurve-Time-Ms": f"{(time.perf_counter() - started) * 1e3:.1f}"}
        return Response(payload, media_type="application/dxf", headers=headers)

    return app
