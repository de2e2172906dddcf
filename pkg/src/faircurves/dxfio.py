"""Minimal ASCII DXF interchange: SPLINE entities only.

The writer emits a HEADER section carrying the drawing units ($INSUNITS) and
one SPLINE entity per curve with the standard group codes: 70 flags,
71 degree, 72/73 knot and control counts, 40 knots, 41 weights (rational
curves only), 10/20/30 control points.  Numbers use 17 significant digits so
export -> import round-trips exactly.  The reader skips anything that is not
a SPLINE and reports it in a warning list.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np

from .nurbs import GeometryError, NurbsCurve

__all__ = [
    "DxfParseError",
    "export_dxf",
    "import_dxf",
    "default_dxf_path",
    "DEFAULT_DXF_NAME",
    "scratch_dir",
]

DEFAULT_DXF_NAME = "r_out_dxf.dxf"
SCRATCH_ENV = "FAIRCURVE_TMP"

_UNITS_TO_INSUNITS = {"unitless": 0, "mm": 4, "cm": 5}
_INSUNITS_TO_UNITS = {v: k for k, v in _UNITS_TO_INSUNITS.items()}

# SPLINE flag bits (group code 70)
_FLAG_CLOSED = 1
_FLAG_PERIODIC = 2
_FLAG_RATIONAL = 4
_FLAG_PLANAR = 8


class DxfParseError(ValueError):
    """Malformed DXF content; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def scratch_dir() -> str:
    """Scratch directory: $FAIRCURVE_TMP if set, else the system temp dir."""
    return os.environ.get(SCRATCH_ENV) or tempfile.gettempdir()


def default_dxf_path() -> str:
    return os.path.join(scratch_dir(), DEFAULT_DXF_NAME)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _spline_lines(curve: NurbsCurve, scale: float) -> list[str]:
    rational = not np.allclose(curve.weights, 1.0, rtol=0.0, atol=0.0)
    flags = _FLAG_PLANAR
    if curve.closed:
        flags |= _FLAG_CLOSED | _FLAG_PERIODIC
    if rational:
        flags |= _FLAG_RATIONAL
    cps = curve.control_points * scale
    out = [
        "0", "SPLINE",
        "8", "0",
        "70", str(flags),
        "71", str(curve.degree),
        "72", str(len(curve.knots)),
        "73", str(len(cps)),
        "74", "0",
    ]
    for k in curve.knots:
        out += ["40", _fmt(k)]
    if rational:
        for w in curve.weights:
            out += ["41", _fmt(w)]
    for p in cps:
        out += ["10", _fmt(p[0]), "20", _fmt(p[1]), "30", "0"]
    return out


def export_dxf(curves, path: str | None = None, scale: float = 1.0, units: str = "mm") -> str:
    """Write curves to an ASCII DXF file; returns the path written.

    Control points are multiplied by ``scale`` (the explicit unit fix-up).
    Without ``path`` the file lands in the scratch directory under the
    default name ``r_out_dxf.dxf``.
    """
    if scale <= 0:
        raise GeometryError("scale must be positive")
    if units not in _UNITS_TO_INSUNITS:
        raise GeometryError(f"units must be one of {sorted(_UNITS_TO_INSUNITS)}")
    if isinstance(curves, NurbsCurve):
        curves = [curves]
    if path is None:
        path = default_dxf_path()

    lines = [
        "0", "SECTION",
        "2", "HEADER",
        "9", "$ACADVER",
        "1", "AC1027",
        "9", "$INSUNITS",
        "70", str(_UNITS_TO_INSUNITS[units]),
        "0", "ENDSEC",
        "0", "SECTION",
        "2", "ENTITIES",
    ]
    for curve in curves:
        lines += _spline_lines(curve, scale)
    lines += ["0", "ENDSEC", "0", "EOF", ""]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines))
    return path


def _read_pairs(text: str) -> list[tuple[int, str, int]]:
    """(code, value, line-number) triples from raw DXF text."""
    raw = text.splitlines()
    pairs = []
    i = 0
    while i < len(raw):
        code_line = raw[i].strip()
        if code_line == "" and i == len(raw) - 1:
            break
        try:
            code = int(code_line)
        except ValueError:
            raise DxfParseError(f"expected a group code, got {code_line!r}", i + 1) from None
        if i + 1 >= len(raw):
            raise DxfParseError(f"group code {code} has no value line", i + 1)
        pairs.append((code, raw[i + 1].strip(), i + 2))
        i += 2
    return pairs


def _build_spline(fields: dict, start_line: int) -> NurbsCurve:
    try:
        degree = fields["degree"]
        knots = np.array(fields["knots"], dtype=float)
        cps = np.array(fields["cps"], dtype=float)
    except KeyError as exc:
        raise DxfParseError(f"SPLINE missing {exc.args[0]}", start_line) from None
    weights = fields.get("weights")
    if fields.get("rational") and weights is None:
        raise DxfParseError("rational SPLINE without weights", start_line)
    if weights is not None and len(weights) != len(cps):
        raise DxfParseError("weight count does not match control count", start_line)
    if "knot_count" in fields and fields["knot_count"] != len(knots):
        raise DxfParseError(
            f"declared {fields['knot_count']} knots, found {len(knots)}", start_line
        )
    if "cp_count" in fields and fields["cp_count"] != len(cps):
        raise DxfParseError(
            f"declared {fields['cp_count']} control points, found {len(cps)}", start_line
        )
    closed = bool(fields.get("flags", 0) & (_FLAG_CLOSED | _FLAG_PERIODIC))
    try:
        return NurbsCurve(
            degree, knots, cps,
            None if weights is None else np.array(weights, dtype=float),
            closed=closed,
        )
    except GeometryError as exc:
        raise DxfParseError(f"invalid SPLINE: {exc}", start_line) from exc


def import_dxf(path: str) -> tuple[list[NurbsCurve], list[str]]:
    """Parse SPLINE entities from a DXF file.

    Returns the curves plus a warning per skipped non-SPLINE entity.  Missing
    weights mean a polynomial spline (all weights one); the closed/periodic
    flag is honoured.
    """
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        pairs = _read_pairs(fh.read())

    curves: list[NurbsCurve] = []
    warnings: list[str] = []
    in_entities = False
    current: dict | None = None
    current_start = 0
    pending_x: float | None = None

    def flush():
        nonlocal current
        if current is not None:
            curves.append(_build_spline(current, current_start))
            current = None

    for code, value, line in pairs:
        if code == 2 and value == "ENTITIES":
            in_entities = True
            continue
        if code == 0 and value == "ENDSEC":
            flush()
            in_entities = False
            continue
        if not in_entities:
            continue
        if code == 0:
            flush()
            if value == "SPLINE":
                current = {"knots": [], "cps": [], "weights_list": []}
                current_start = line
                pending_x = None
            else:
                warnings.append(f"line {line}: skipped {value} entity")
            continue
        if current is None:
            continue
        try:
            if code == 70:
                current["flags"] = int(value)
                current["rational"] = bool(int(value) & _FLAG_RATIONAL)
            elif code == 71:
                current["degree"] = int(value)
            elif code == 72:
                current["knot_count"] = int(value)
            elif code == 73:
                current["cp_count"] = int(value)
            elif code == 40:
                current["knots"].append(float(value))
            elif code == 41:
                current.setdefault("weights", []).append(float(value))
            elif code == 10:
                pending_x = float(value)
            elif code == 20:
                if pending_x is None:
                    raise DxfParseError("y coordinate (20) without x (10)", line)
                current["cps"].append((pending_x, float(value)))
                pending_x = None
        except ValueError:
            raise DxfParseError(f"bad value {value!r} for group code {code}", line) from None
    flush()
    return curves, warnings


def read_units(path: str) -> str:
    """Drawing units recorded in the DXF header (defaults to unitless)."""
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        pairs = _read_pairs(fh.read())
    grab_next_70 = False
    for code, value, _ in pairs:
        if code == 9:
            grab_next_70 = value == "$INSUNITS"
        elif grab_next_70 and code == 70:
            return _INSUNITS_TO_UNITS.get(int(value), "unitless")
    return "unitless"
