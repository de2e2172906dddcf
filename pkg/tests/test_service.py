import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from fastapi.testclient import TestClient

from faircurves.analytic import AnalyticCurveSpec, SuperspiralParams
from faircurves.fairing import Polyline
from faircurves.modelio import ModelDocument, decode_model, encode_model
from faircurves.nurbs import circle_nurbs
from faircurves.service import MAX_BODY_BYTES, create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


def octagon_doc():
    verts = np.array([[math.cos(k * math.pi / 4), math.sin(k * math.pi / 4)] for k in range(8)])
    doc = ModelDocument()
    doc.add("oct", Polyline(verts, "support", "closed"))
    return encode_model(doc)


def clothoid_doc():
    doc = ModelDocument()
    doc.add("clo", AnalyticCurveSpec("superspiral", (0.0, 3.0),
                                     superspiral=SuperspiralParams(0.5, 1, 1)))
    return encode_model(doc)


def circle_doc():
    doc = ModelDocument()
    doc.add("circ", circle_nurbs())
    return encode_model(doc)


class TestEndpoints:
    def test_health(self, client):
        r = client.get("/api/health")
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "ok"
        assert body["version"].count(".") == 2

    def test_vcurve_octagon(self, client):
        r = client.post("/api/vcurve?id=oct", content=octagon_doc())
        assert r.status_code == 200
        out = decode_model(r.text)
        report = out.get("oct.quality")
        assert report.monotone
        assert abs(report.bending_energy - 2 * math.pi) < 0.05
        curve = out.get("oct.vcurve")
        ts = np.linspace(*curve.domain, 64)
        assert np.abs(curve.curvature(ts) - 1.0).max() < 0.02
        assert "x-faircurve-time-ms" in r.headers

    def test_vcurve_too_short(self, client):
        body = (
            "faircurve-model 1\nunits mm\n\n"
            "polyline p\n  kind support\n  topology open\n  vertex 0 0\n  vertex 1 1\nend\n"
        )
        r = client.post("/api/vcurve", content=body)
        assert r.status_code == 422
        assert r.json()["code"] == "POLYLINE_TOO_SHORT"

    def test_vcurve_nonconvex_tangent(self, client):
        doc = ModelDocument()
        doc.add("t", Polyline(np.array([[0, 0], [2, 0], [1, 0.5], [2, 2], [0, 2]], dtype=float),
                              "tangent", "closed"))
        r = client.post("/api/vcurve?id=t", content=encode_model(doc))
        assert r.status_code == 422
        assert r.json()["code"] == "TANGENT_NOT_CONVEX"

    def test_analytic_clothoid(self, client):
        r = client.post("/api/analytic?id=clo&points=16&h_first=0.1&h_last=1",
                        content=clothoid_doc())
        assert r.status_code == 200
        table = decode_model(r.text).get("clo.hermite")
        assert len(table) == 16
        assert np.all(np.diff(table.curvatures) > 0)

    def test_analytic_circle_case(self, client):
        doc = ModelDocument()
        doc.add("c", AnalyticCurveSpec("superspiral", (0.0, math.pi / 2),
                                       superspiral=SuperspiralParams(0.0, 1, 1)))
        r = client.post("/api/analytic?id=c&points=6", content=encode_model(doc))
        table = decode_model(r.text).get("c.hermite")
        assert np.abs(table.curvatures - 1.0).max() < 1e-10

    def test_analytic_invalid_c(self, client):
        body = (
            "faircurve-model 1\nunits mm\n\n"
            "analytic a\n  family superspiral\n  range 0 3\n  shape 0.5 1 -1\n  scale 1\nend\n"
        )
        r = client.post("/api/analytic?id=a", content=body)
        assert r.status_code == 422
        assert r.json()["code"] == "HYPERGEOMETRIC_DOMAIN"

    def test_approx_paper_pipeline(self, client):
        r = client.post("/api/analytic?id=clo&points=16&h_first=0.1&h_last=1",
                        content=clothoid_doc())
        doc = decode_model(r.text)
        r2 = client.post("/api/approx?degree=8&clip_end=3&id=clo.hermite&reference=clo",
                         content=r.text)
        assert r2.status_code == 200
        out = decode_model(r2.text)
        report = out.get("clo.hermite.quality")
        assert abs(report.deviation_max) < 5e-3
        assert abs(report.deviation_min) < 5e-3

    def test_approx_line_table(self, client):
        body = (
            "faircurve-model 1\nunits mm\n\n"
            "hermite h\n"
            + "".join(f"  node {x} 0 1 0 0 0 0\n" for x in range(6))
            + "  lengths 1 1 1 1 1\nend\n"
        )
        r = client.post("/api/approx?degree=6&id=h", content=body)
        assert r.status_code == 200
        curve = decode_model(r.text).get("h.approx")
        assert np.abs(curve.control_points[:, 1]).max() == 0.0

    def test_approx_degree_7_rejected(self, client):
        r = client.post("/api/approx?degree=7", content=clothoid_doc())
        assert r.status_code == 422
        assert r.json()["code"] == "DEGREE_NOT_SUPPORTED"

    def test_metrics_circle(self, client):
        r = client.post("/api/metrics?id=circ", content=circle_doc())
        report = decode_model(r.text).get("circ.quality")
        assert abs(report.bending_energy - 2 * math.pi) < 1e-6

    def test_export_then_cli_import(self, client, tmp_path):
        from faircurves.dxfio import import_dxf

        r = client.post("/api/export/dxf?scale=1", content=circle_doc())
        assert r.status_code == 200
        path = tmp_path / "srv.dxf"
        path.write_bytes(r.content)
        curves, _ = import_dxf(str(path))
        orig = circle_nurbs()
        assert np.array_equal(curves[0].control_points, orig.control_points)
        assert np.array_equal(curves[0].knots, orig.knots)

    def test_body_limit(self, client):
        r = client.post("/api/metrics", content=b"x" * (MAX_BODY_BYTES + 1))
        assert r.status_code == 413


class TestStatelessness:
    def test_replay_byte_identical(self, client):
        r1 = client.post("/api/vcurve?id=oct", content=octagon_doc())
        r2 = client.post("/api/vcurve?id=oct", content=octagon_doc())
        assert r1.content == r2.content

    def test_parallel_equals_serial(self, client):
        requests = []
        requests.append(("/api/metrics?id=circ", circle_doc()))
        requests.append(("/api/analytic?id=clo&points=10", clothoid_doc()))
        requests.append(("/api/vcurve?id=oct", octagon_doc()))
        serial = [client.post(url, content=body).content for url, body in requests]
        with ThreadPoolExecutor(max_workers=6) as pool:
            futures = [pool.submit(client.post, url, content=body)
                       for url, body in requests * 4]
            parallel = [f.result().content for f in futures]
        for i, got in enumerate(parallel):
            assert got == serial[i % len(requests)]
