"""Structured-text model documents: the package's persistence format.

A model document is a versioned, human-readable text container for the
geometry entities the tools exchange: polylines, NURBS curves, Hermite
tables, analytic curve specs and quality reports.  Numbers are written with
17 significant digits, so decode(encode(doc)) reproduces every float
bit-for-bit, and the writer is fully deterministic (fixed field order, fixed
entity order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import AnalyticCurveSpec, HermiteTable, LacParams, SuperspiralParams
from .fairing import Polyline
from .fairing import ValidationError as PolylineValidationError
from .numerics import NumericsDomainError
from .nurbs import NurbsCurve
from .quality import QualityReport

__all__ = [
    "ModelDocument",
    "ModelFormatError",
    "encode_model",
    "decode_model",
    "FORMAT_VERSION",
    "MODEL_CONTENT_TYPE",
]

FORMAT_VERSION = 1
UNITS = ("mm", "cm", "unitless")
MODEL_CONTENT_TYPE = "application/x-faircurve-model"

Entity = object  # Polyline | NurbsCurve | HermiteTable | AnalyticCurveSpec | QualityReport


class ModelFormatError(ValueError):
    """Malformed or inconsistent model text."""


@dataclass
class ModelDocument:
    """Ordered collection of identified entities plus unit metadata."""

    units: str = "mm"
    entities: list[tuple[str, Entity]] = field(default_factory=list)
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.units not in UNITS:
            raise ModelFormatError(f"units must be one of {UNITS}, got {self.units!r}")
        seen = set()
        for eid, _ in self.entities:
            if eid in seen:
                raise ModelFormatError(f"duplicate entity id {eid!r}")
            seen.add(eid)

    def add(self, eid: str, entity: Entity) -> "ModelDocument":
        if any(e == eid for e, _ in self.entities):
            raise ModelFormatError(f"duplicate entity id {eid!r}")
        if " " in eid or not eid:
            raise ModelFormatError(f"invalid entity id {eid!r}")
        self.entities.append((eid, entity))
        return self

    def get(self, eid: str) -> Entity:
        for e, obj in self.entities:
            if e == eid:
                return obj
        raise KeyError(eid)

    def ids(self) -> list[str]:
        return [e for e, _ in self.entities]


def _fmt(x: float) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    xf = float(x)
    if math.isnan(xf):
        return "nan"
    if math.isinf(xf):
        return "inf" if xf > 0 else "-inf"
    return format(xf, ".17g")


def _fmt_row(values) -> str:
    return " ".join(_fmt(v) for v in values)


def _encode_polyline(out: list[str], p: Polyline):
    out.append(f"  kind {p.kind}")
    out.append(f"  topology {p.topology}")
    for v in p.vertices:
        out.append(f"  vertex {_fmt_row(v)}")


def _encode_nurbs(out: list[str], c: NurbsCurve):
    out.append(f"  degree {c.degree}")
    out.append(f"  closed {'true' if c.closed else 'false'}")
    out.append(f"  knots {_fmt_row(c.knots)}")
    for cp, w in zip(c.control_points, c.weights):
        out.append(f"  cp {_fmt(cp[0])} {_fmt(cp[1])} {_fmt(w)}")


def _encode_hermite(out: list[str], h: HermiteTable):
    for i in range(len(h)):
        out.append(
            "  node "
            + _fmt_row([*h.points[i], *h.derivatives[i], h.curvatures[i], *h.normals[i]])
        )
    out.append(f"  lengths {_fmt_row(h.seg_lengths)}")


def _encode_analytic(out: list[str], a: AnalyticCurveSpec):
    out.append(f"  family {a.family}")
    out.append(f"  range {_fmt(a.t_range[0])} {_fmt(a.t_range[1])}")
    if a.family == "superspiral":
        s = a.superspiral
        out.append(f"  shape {_fmt(s.a)} {_fmt(s.b)} {_fmt(s.c)}")
        out.append(f"  scale {_fmt(s.scale)}")
    else:
        l = a.lac
        out.append(f"  law {_fmt(l.alpha)} {_fmt(l.c0)} {_fmt(l.c1)}")
        out.append(f"  theta0 {_fmt(a.theta0)}")


def _encode_quality(out: list[str], q: QualityReport):
    out.append(f"  smoothness {q.smoothness_order}")
    for s, k in q.extrema:
        out.append(f"  extremum {_fmt(s)} {_fmt(k)}")
    out.append(f"  variation {_fmt(q.variation)}")
    out.append(f"  max-rate {_fmt(q.max_rate)}")
    out.append(f"  energy {_fmt(q.bending_energy)}")
    out.append(f"  deviation {_fmt(q.deviation_max)} {_fmt(q.deviation_min)}")
    out.append(f"  monotone {_fmt(q.monotone)}")
    out.append(f"  lcg-residual {_fmt(q.lcg_residual)}")


_KIND_NAMES = {
    Polyline: "polyline",
    NurbsCurve: "nurbs",
    HermiteTable: "hermite",
    AnalyticCurveSpec: "analytic",
    QualityReport: "quality",
}
_ENCODERS = {
    "polyline": _encode_polyline,
    "nurbs": _encode_nurbs,
    "hermite": _encode_hermite,
    "analytic": _encode_analytic,
    "quality": _encode_quality,
}


def encode_model(doc: ModelDocument) -> str:
    """Serialize a document; output is byte-deterministic for equal input."""
    lines = [f"faircurve-model {doc.format_version}", f"units {doc.units}", ""]
    for eid, entity in doc.entities:
        kind = _KIND_NAMES.get(type(entity))
        if kind is None:
            raise ModelFormatError(f"entity {eid!r} has unsupported type {type(entity).__name__}")
        lines.append(f"{kind} {eid}")
        _ENCODERS[kind](lines, entity)
        lines.append("end")
        lines.append("")
    return "\n".join(lines)


class _Parser:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.i = 0

    def next_content(self) -> str | None:
        while self.i < len(self.lines):
            line = self.lines[self.i].strip()
            self.i += 1
            if line:
                return line
        return None


def _parse_float(tok: str, eid: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ModelFormatError(f"entity {eid!r}: bad number {tok!r}") from None


def _parse_bool(tok: str, eid: str) -> bool:
    if tok == "true":
        return True
    if tok == "false":
        return False
    raise ModelFormatError(f"entity {eid!r}: bad boolean {tok!r}")


def _collect_body(parser: _Parser, eid: str) -> list[list[str]]:
    rows = []
    while True:
        line = parser.next_content()
        if line is None:
            raise ModelFormatError(f"entity {eid!r}: missing 'end'")
        if line == "end":
            return rows
        rows.append(line.split())


def _decode_polyline(rows, eid) -> Polyline:
    kind, topology, vertices = "support", "open", []
    for row in rows:
        if row[0] == "kind":
            kind = row[1]
        elif row[0] == "topology":
            topology = row[1]
        elif row[0] == "vertex":
            vertices.append([_parse_float(row[1], eid), _parse_float(row[2], eid)])
        else:
            raise ModelFormatError(f"entity {eid!r}: unknown field {row[0]!r}")
    try:
        return Polyline(np.array(vertices), kind=kind, topology=topology)
    except PolylineValidationError as exc:
        # keep the structured code; callers map it to API/CLI errors
        raise PolylineValidationError(exc.code, f"entity {eid!r}: {exc}") from exc
    except ValueError as exc:
        raise ModelFormatError(f"entity {eid!r}: {exc}") from exc


def _decode_nurbs(rows, eid) -> NurbsCurve:
    degree, closed, knots, cps, weights = None, False, None, [], []
    for row in rows:
        if row[0] == "degree":
            degree = int(row[1])
        elif row[0] == "closed":
            closed = _parse_bool(row[1], eid)
        elif row[0] == "knots":
            knots = [_parse_float(t, eid) for t in row[1:]]
        elif row[0] == "cp":
            cps.append([_parse_float(row[1], eid), _parse_float(row[2], eid)])
            weights.append(_parse_float(row[3], eid))
        else:
            raise ModelFormatError(f"entity {eid!r}: unknown field {row[0]!r}")
    if degree is None or knots is None or not cps:
        raise ModelFormatError(f"entity {eid!r}: incomplete nurbs definition")
    try:
        return NurbsCurve(degree, np.array(knots), np.array(cps), np.array(weights), closed)
    except ValueError as exc:
        raise ModelFormatError(f"entity {eid!r}: {exc}") from exc


def _decode_hermite(rows, eid) -> HermiteTable:
    nodes, lengths = [], None
    for row in rows:
        if row[0] == "node":
            if len(row) != 8:
                raise ModelFormatError(f"entity {eid!r}: node rows need 7 numbers")
            nodes.append([_parse_float(t, eid) for t in row[1:]])
        elif row[0] == "lengths":
            lengths = [_parse_float(t, eid) for t in row[1:]]
        else:
            raise ModelFormatError(f"entity {eid!r}: unknown field {row[0]!r}")
    if not nodes or lengths is None:
        raise ModelFormatError(f"entity {eid!r}: incomplete hermite table")
    arr = np.array(nodes)
    try:
        return HermiteTable(arr[:, 0:2], arr[:, 2:4], arr[:, 4], arr[:, 5:7], np.array(lengths))
    except ValueError as exc:
        raise ModelFormatError(f"entity {eid!r}: {exc}") from exc


def _decode_analytic(rows, eid) -> AnalyticCurveSpec:
    family, t_range, shape, scale, law, theta0 = None, None, None, 1.0, None, 0.0
    for row in rows:
        if row[0] == "family":
            family = row[1]
        elif row[0] == "range":
            t_range = (_parse_float(row[1], eid), _parse_float(row[2], eid))
        elif row[0] == "shape":
            shape = [_parse_float(t, eid) for t in row[1:4]]
        elif row[0] == "scale":
            scale = _parse_float(row[1], eid)
        elif row[0] == "law":
            law = [_parse_float(t, eid) for t in row[1:4]]
        elif row[0] == "theta0":
            theta0 = _parse_float(row[1], eid)
        else:
            raise ModelFormatError(f"entity {eid!r}: unknown field {row[0]!r}")
    if family is None or t_range is None:
        raise ModelFormatError(f"entity {eid!r}: incomplete analytic spec")
    try:
        if family == "superspiral":
            return AnalyticCurveSpec(
                "superspiral", t_range, superspiral=SuperspiralParams(*shape, scale=scale)
            )
        return AnalyticCurveSpec("lac", t_range, lac=LacParams(*law), theta0=theta0)
    except NumericsDomainError as exc:
        raise NumericsDomainError(f"entity {eid!r}: {exc}", code=exc.code) from exc
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"entity {eid!r}: {exc}") from exc


def _decode_quality(rows, eid) -> QualityReport:
    fields = {"extrema": []}
    for row in rows:
        if row[0] == "smoothness":
            fields["smoothness_order"] = int(row[1])
        elif row[0] == "extremum":
            fields["extrema"].append((_parse_float(row[1], eid), _parse_float(row[2], eid)))
        elif row[0] == "variation":
            fields["variation"] = _parse_float(row[1], eid)
        elif row[0] == "max-rate":
            fields["max_rate"] = _parse_float(row[1], eid)
        elif row[0] == "energy":
            fields["bending_energy"] = _parse_float(row[1], eid)
        elif row[0] == "deviation":
            fields["deviation_max"] = _parse_float(row[1], eid)
            fields["deviation_min"] = _parse_float(row[2], eid)
        elif row[0] == "monotone":
            fields["monotone"] = _parse_bool(row[1], eid)
        elif row[0] == "lcg-residual":
            fields["lcg_residual"] = _parse_float(row[1], eid)
        else:
            raise ModelFormatError(f"entity {eid!r}: unknown field {row[0]!r}")
    try:
        fields["extrema"] = tuple(fields["extrema"])
        return QualityReport(**fields)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"entity {eid!r}: {exc}") from exc


_DECODERS = {
    "polyline": _decode_polyline,
    "nurbs": _decode_nurbs,
    "hermite": _decode_hermite,
    "analytic": _decode_analytic,
    "quality": _decode_quality,
}


def decode_model(text: str) -> ModelDocument:
    """Parse model text; raises :class:`ModelFormatError` naming the entity."""
    parser = _Parser(text)
    header = parser.next_content()
    if header is None or not header.startswith("faircurve-model"):
        raise ModelFormatError("missing 'faircurve-model <version>' header")
    try:
        version = int(header.split()[1])
    except (IndexError, ValueError):
        raise ModelFormatError(f"malformed header {header!r}") from None
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {version}")

    units = "mm"
    entities: list[tuple[str, Entity]] = []
    seen: set[str] = set()
    while True:
        line = parser.next_content()
        if line is None:
            break
        parts = line.split()
        if parts[0] == "units":
            units = parts[1]
            continue
        if parts[0] not in _DECODERS:
            raise ModelFormatError(f"unknown entity kind {parts[0]!r}")
        if len(parts) != 2:
            raise ModelFormatError(f"entity header needs exactly one id: {line!r}")
        eid = parts[1]
        if eid in seen:
            raise ModelFormatError(f"duplicate entity id {eid!r}")
        seen.add(eid)
        rows = _collect_body(parser, eid)
        entities.append((eid, _DECODERS[parts[0]](rows, eid)))
    return ModelDocument(units=units, entities=entities, format_version=version)
