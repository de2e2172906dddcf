import math
import os

import numpy as np
import pytest

from faircurves.cli import main
from faircurves.modelio import decode_model
from faircurves.nurbs import segment_count


def read_doc(path):
    with open(path) as fh:
        return decode_model(fh.read())


@pytest.fixture
def octagon_model(tmp_path, octagon_vertices):
    from faircurves.fairing import Polyline
    from faircurves.modelio import ModelDocument, encode_model

    doc = ModelDocument()
    doc.add("oct", Polyline(octagon_vertices, "support", "closed"))
    path = str(tmp_path / "oct.fcm")
    with open(path, "w") as fh:
        fh.write(encode_model(doc))
    return path


class TestAnalyticCommand:
    def test_superspiral_paper_schedule(self, tmp_path, capsys):
        out = str(tmp_path / "clothoid.fcm")
        rc = main([
            "analytic", "superspiral", "-a", "0.5", "-b", "1", "-c", "1",
            "--points", "16", "--h-first", "0.1", "--h-last", "1", "--out", out,
        ])
        assert rc == 0
        doc = read_doc(out)
        table = doc.get("analytic.hermite")
        assert len(table) == 16
        assert np.all(np.diff(table.curvatures) > 0)

    def test_lac(self, tmp_path):
        out = str(tmp_path / "lac.fcm")
        rc = main([
            "analytic", "lac", "--alpha", "-1", "--c0", "0", "--c1", "1",
            "--range", "0.2", "2.0", "--points", "8", "--out", out,
        ])
        assert rc == 0
        table = read_doc(out).get("analytic.hermite")
        # clothoid law kappa = s
        s = 0.2 + np.concatenate([[0.0], np.cumsum(table.seg_lengths)])
        assert np.abs(table.curvatures - s).max() < 1e-9

    def test_invalid_c_exit_code(self, tmp_path):
        rc = main([
            "analytic", "superspiral", "-a", "0.5", "-b", "1", "-c", "-1",
            "--points", "8", "--range", "0", "2", "--out", str(tmp_path / "x.fcm"),
        ])
        assert rc == 2

    def test_underspecified_schedule(self, tmp_path):
        rc = main([
            "analytic", "superspiral", "-a", "0.5", "-b", "1", "-c", "1",
            "--points", "8", "--out", str(tmp_path / "x.fcm"),
        ])
        assert rc == 2


class TestPipeline:
    def test_vcurve_approx_metrics_dxf(self, octagon_model, tmp_path):
        faired = str(tmp_path / "faired.fcm")
        assert main(["vcurve", "--in", octagon_model, "--id", "oct", "--out", faired]) == 0
        doc = read_doc(faired)
        assert "oct.vcurve" in doc.ids()
        assert "oct.hermite" in doc.ids()
        report = doc.get("oct.quality")
        assert report.monotone
        assert abs(report.bending_energy - 2 * math.pi) < 0.05

        dxf = str(tmp_path / "out.dxf")
        assert main(["dxf", "export", "--in", faired, "--id", "oct.vcurve",
                     "--out", dxf, "--scale", "10"]) == 0
        back = str(tmp_path / "back.fcm")
        assert main(["dxf", "import", "--in", dxf, "--out", back]) == 0
        curve = read_doc(back).get("dxf-0")
        orig = doc.get("oct.vcurve")
        assert np.abs(curve.control_points - orig.control_points * 10).max() < 1e-12

    def test_full_clothoid_template_pipeline(self, tmp_path):
        model = str(tmp_path / "clothoid.fcm")
        main([
            "analytic", "superspiral", "-a", "0.5", "-b", "1", "-c", "1",
            "--points", "16", "--h-first", "0.1", "--h-last", "1",
            "--id", "clo", "--out", model,
        ])
        approx = str(tmp_path / "template.fcm")
        rc = main([
            "approx", "--in", model, "--id", "clo.hermite", "--degree", "8",
            "--clip-end", "3", "--reference", "clo", "--curve-id", "template",
            "--out", approx,
        ])
        assert rc == 0
        doc = read_doc(approx)
        curve = doc.get("template")
        assert segment_count(curve) == 12
        report = doc.get("template.quality")
        assert abs(report.deviation_max) < 5e-3
        assert abs(report.deviation_min) < 5e-3

    def test_extract(self, tmp_path):
        model = str(tmp_path / "m.fcm")
        main([
            "analytic", "superspiral", "-a", "0.5", "-b", "1", "-c", "1",
            "--points", "8", "--range", "0", "2", "--id", "c", "--out", model,
        ])
        step2 = str(tmp_path / "m2.fcm")
        main(["approx", "--in", model, "--id", "c.hermite", "--degree", "3",
              "--curve-id", "nz", "--out", step2])
        out = str(tmp_path / "m3.fcm")
        assert main(["extract", "--in", step2, "--id", "nz", "--start", "1",
                     "--count", "3", "--out", out]) == 0
        sub = read_doc(out).get("nz.extract")
        assert segment_count(sub) == 3

    def test_metrics_stdout_and_report_dir(self, octagon_model, tmp_path, capsys):
        faired = str(tmp_path / "f.fcm")
        main(["vcurve", "--in", octagon_model, "--id", "oct", "--out", faired])
        report_dir = str(tmp_path / "report")
        rc = main(["metrics", "--in", faired, "--id", "oct.vcurve",
                   "--report-dir", report_dir])
        assert rc == 0
        captured = capsys.readouterr()
        assert "bending_energy" in captured.out
        assert os.path.exists(os.path.join(report_dir, "metrics.csv"))
        assert os.path.exists(os.path.join(report_dir, "curve_comb.png"))
        assert os.path.exists(os.path.join(report_dir, "curvature_graph.png"))
        with open(os.path.join(report_dir, "metrics.csv")) as fh:
            content = fh.read()
        assert "smoothness_order,5" in content


class TestExitCodes:
    def test_missing_entity_is_validation(self, octagon_model, tmp_path):
        rc = main(["vcurve", "--in", octagon_model, "--id", "nope",
                   "--out", str(tmp_path / "o.fcm")])
        assert rc == 2

    def test_missing_file_is_io(self, tmp_path):
        rc = main(["vcurve", "--in", str(tmp_path / "absent.fcm"), "--id", "x",
                   "--out", "-"])
        assert rc == 4

    def test_bad_extract_range(self, octagon_model, tmp_path):
        faired = str(tmp_path / "f.fcm")
        main(["vcurve", "--in", octagon_model, "--id", "oct", "--out", faired])
        rc = main(["extract", "--in", faired, "--id", "oct.vcurve",
                   "--start", "0", "--count", "99999", "--out", "-"])
        assert rc == 2

    def test_deterministic_outputs(self, tmp_path):
        args = [
            "analytic", "superspiral", "-a", "0.5", "-b", "1", "-c", "1",
            "--points", "12", "--h-first", "0.1", "--h-last", "1",
        ]
        p1, p2 = str(tmp_path / "a.fcm"), str(tmp_path / "b.fcm")
        main(args + ["--out", p1])
        main(args + ["--out", p2])
        assert open(p1, "rb").read() == open(p2, "rb").read()
