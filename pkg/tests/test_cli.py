import json

import pytest

from looptrust import load_diagram, load_image
from looptrust.cli import main


def write_ring_spec(path, sigma=0.0, rings=True, mus=(2000.0, 1000.0, 3000.0), size=30, half=9, thick=3):
    spec = {
        "width": size,
        "height": size,
        "rings": (
            [
                {
                    "center": [size // 2, size // 2],
                    "outer_half_extent": half,
                    "thickness": thick,
                    "mu_loop": mus[2],
                    "mu_interior": mus[1],
                }
            ]
            if rings
            else []
        ),
        "mu_background": mus[0],
        "sigma": sigma,
    }
    path.write_text(json.dumps(spec))
    return path


class TestGenerateCommand:
    def test_valid_spec_writes_outputs(self, tmp_path):
        spec = write_ring_spec(tmp_path / "spec.json")
        rc = main(["generate", "--spec", str(spec), "--seed", "5", "--out", str(tmp_path / "o")])
        assert rc == 0
        img = load_image(tmp_path / "o" / "image.csv")
        assert img.width == 30
        manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert manifest["seed"] == 5
        assert (tmp_path / "o" / "labels.json").exists()

    def test_invalid_spec_exit_2(self, tmp_path, capsys):
        spec = {
            "width": 30,
            "height": 30,
            "rings": [
                {"center": [10, 10], "outer_half_extent": 8, "thickness": 3,
                 "mu_loop": 4.0, "mu_interior": 3.0},
                {"center": [14, 14], "outer_half_extent": 8, "thickness": 3,
                 "mu_loop": 4.0, "mu_interior": 3.0},
            ],
            "mu_background": 2.0,
            "sigma": 0.0,
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(spec))
        rc = main(["generate", "--spec", str(path), "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "invalid spec" in capsys.readouterr().err

    def test_same_seed_byte_identical(self, tmp_path):
        spec = write_ring_spec(tmp_path / "spec.json", sigma=120.0)
        for d in ("a", "b"):
            main(["generate", "--spec", str(spec), "--seed", "9", "--out", str(tmp_path / d)])
        for name in ("image.csv", "labels.csv", "labels.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_png_flag_with_noise_exits_cleanly(self, tmp_path, capsys):
        spec = write_ring_spec(tmp_path / "spec.json", sigma=120.0)
        rc = main(["generate", "--spec", str(spec), "--png", "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "integer intensities" in capsys.readouterr().err
        assert not (tmp_path / "o" / "image.csv").exists()  # nothing partially written

    def test_png_flag_with_integer_pattern(self, tmp_path):
        spec = write_ring_spec(tmp_path / "spec.json", sigma=0.0)
        rc = main(["generate", "--spec", str(spec), "--png", "--out", str(tmp_path / "o")])
        assert rc == 0
        from looptrust import load_image

        png = load_image(tmp_path / "o" / "image.png")
        csv = load_image(tmp_path / "o" / "image.csv")
        assert png == csv


class TestDiagramCommand:
    def test_diagram_csv(self, tmp_path):
        spec = write_ring_spec(tmp_path / "spec.json")
        main(["generate", "--spec", str(spec), "--out", str(tmp_path / "o")])
        rc = main(
            ["diagram", "--image", str(tmp_path / "o" / "image.csv"), "--out", str(tmp_path / "d.csv")]
        )
        assert rc == 0
        d = load_diagram(tmp_path / "d.csv")
        h1 = d.in_dim(1)
        assert len(h1) == 1 and (h1[0].death, h1[0].birth) == (1000.0, 3000.0)


class TestSegmentCommand:
    def test_segment_smoke(self, tmp_path):
        spec = write_ring_spec(tmp_path / "spec.json", sigma=50.0)
        main(["generate", "--spec", str(spec), "--seed", "1", "--out", str(tmp_path / "o")])
        rc = main(
            [
                "segment",
                "--image", str(tmp_path / "o" / "image.csv"),
                "--gaussian-sigma", "1.5",
                "--out-edges", str(tmp_path / "edges.csv"),
                "--out-labels", str(tmp_path / "seg.csv"),
            ]
        )
        assert rc == 0
        assert (tmp_path / "edges.csv").exists()


class TestAnalyzeCommand:
    def test_noiseless_ring_with_truth_labeling(self, tmp_path, capsys):
        spec = write_ring_spec(tmp_path / "spec.json")
        main(["generate", "--spec", str(spec), "--out", str(tmp_path / "o")])
        rc = main(
            [
                "analyze",
                "--image", str(tmp_path / "o" / "image.csv"),
                "--labeling", str(tmp_path / "o" / "labels.csv"),
                "--truth", "1000", "3000",
                "--interval",
                "--out", str(tmp_path / "a"),
            ]
        )
        assert rc == 0
        assert "degenerate region" in capsys.readouterr().err
        rows = (tmp_path / "a" / "matches.csv").read_text().splitlines()
        assert len(rows) == 2
        cells = rows[1].split(",")
        assert cells[0] == "1"
        assert float(cells[1]) == 1000.0 and float(cells[2]) == 3000.0
        assert cells[5] == "1"  # exact point estimate covers the truth
        intervals = (tmp_path / "a" / "intervals.csv").read_text().splitlines()
        assert intervals[1].split(",")[1] == "2000"

    def test_pure_noise_zero_matches(self, tmp_path):
        spec = write_ring_spec(tmp_path / "spec.json", sigma=150.0, rings=False)
        main(["generate", "--spec", str(spec), "--seed", "3", "--out", str(tmp_path / "o")])
        rc = main(
            [
                "analyze",
                "--image", str(tmp_path / "o" / "image.csv"),
                "--out", str(tmp_path / "a"),
            ]
        )
        assert rc == 0
        rows = (tmp_path / "a" / "matches.csv").read_text().splitlines()
        assert len(rows) == 1  # header only
        assert json.loads((tmp_path / "a" / "regions.json").read_text()) == []

    def test_noisy_ring_segmentation_pipeline(self, tmp_path):
        spec = write_ring_spec(tmp_path / "spec.json", sigma=50.0, size=50, half=15, thick=5)
        main(["generate", "--spec", str(spec), "--seed", "2", "--out", str(tmp_path / "o")])
        rc = main(
            [
                "analyze",
                "--image", str(tmp_path / "o" / "image.csv"),
                "--gaussian-sigma", "2.0",
                "--truth", "1000", "3000",
                "--out", str(tmp_path / "a"),
            ]
        )
        assert rc == 0
        regions = json.loads((tmp_path / "a" / "regions.json").read_text())
        assert len(regions) == 1
        assert regions[0]["center"][0] == pytest.approx(1000.0, abs=50.0)
        assert regions[0]["center"][1] == pytest.approx(3000.0, abs=50.0)


class TestStdaCommand:
    def test_band_outputs(self, tmp_path):
        spec = write_ring_spec(tmp_path / "spec.json", sigma=80.0)
        main(["generate", "--spec", str(spec), "--seed", "4", "--out", str(tmp_path / "o")])
        rc = main(
            [
                "stda",
                "--image", str(tmp_path / "o" / "image.csv"),
                "--labeling", str(tmp_path / "o" / "labels.csv"),
                "-B", "100",
                "--seed", "6",
                "--out", str(tmp_path / "s"),
            ]
        )
        assert rc == 0
        band = json.loads((tmp_path / "s" / "band.json").read_text())
        assert band["B"] == 100 and band["c_n"] > 0
        lines = (tmp_path / "s" / "distances.csv").read_text().splitlines()
        assert len(lines) == 101
        assert (tmp_path / "s" / "regions.csv").read_text().startswith(
            "death,birth,c_n,significant,area"
        )


class TestSimulateCommand:
    def _write_config(self, path, **overrides):
        cfg = {
            "study": "coverage",
            "replicates": 3,
            "sigmas": [50.0, 150.0],
            "geometry": {"width": 30, "height": 30, "outer_half_extent": 9, "thickness": 3},
            "master_seed": 5,
            "threads": 1,
        }
        cfg.update(overrides)
        path.write_text(json.dumps(cfg))
        return path

    def test_coverage_shape(self, tmp_path):
        cfg = self._write_config(tmp_path / "cfg.json")
        rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "r")])
        assert rc == 0
        lines = (tmp_path / "r" / "results.csv").read_text().splitlines()
        assert len(lines) == 1 + 2 * 2  # 2 sigmas x {tTDA, parTDA}

    def test_bias_shape(self, tmp_path):
        cfg = self._write_config(
            tmp_path / "cfg.json",
            study="bias",
            sigmas=[100.0],
            mu_interior=3000.0,
            mu_loop=4000.0,
            thickness_levels=[2, 7],
            dimension_levels=[20, 30],
        )
        rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "r")])
        assert rc == 0
        lines = (tmp_path / "r" / "results.csv").read_text().splitlines()
        assert len(lines) == 1 + 4 * 2

    def test_misclassification_shape(self, tmp_path):
        cfg = self._write_config(
            tmp_path / "cfg.json",
            study="misclassification",
            sigmas=[10.0, 50.0],
            mu_interior=1000.0,
            mu_loop=3000.0,
            geometry={"width": 50, "height": 50, "outer_half_extent": 15, "thickness": 5},
            methods=["parTDA"],
        )
        rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "r")])
        assert rc == 0
        lines = (tmp_path / "r" / "results.csv").read_text().splitlines()
        assert len(lines) == 1 + 2 * 2  # 2 sigmas x 2 variants

    def test_unknown_study_exit_2(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path / "cfg.json", study="mystery")
        rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "r")])
        assert rc == 2
        assert "invalid study config" in capsys.readouterr().err

    def test_flag_overrides(self, tmp_path):
        cfg = self._write_config(tmp_path / "cfg.json", sigmas=[0.0])
        rc = main(
            [
                "simulate", "--config", str(cfg), "--out", str(tmp_path / "r"),
                "--replicates", "2", "--seed", "123",
            ]
        )
        assert rc == 0
        manifest = json.loads((tmp_path / "r" / "manifest.json").read_text())
        assert manifest["config"]["replicates"] == 2
        assert manifest["config"]["master_seed"] == 123
