"""End-to-end runs of the config-driven command line."""

import hashlib
import json
import os

import pytest

from epigraph_lab.cli import main
from epigraph_lab.reporting import config_hash, read_json, write_csv


def run_cli(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return main(["run", str(path)]), path


def torsion_config(outdir):
    return {
        "experiment": "solve",
        "output_dir": str(outdir),
        "domain": {"kind": "strip", "a": 0.0, "b": 1.0, "dimension": 1},
        "nonlinearity": {"kind": "constant", "value": 1.0},
        "grid": {"box": [[0.0, 1.0]], "h": 0.125},
    }


class TestRunSolve:
    def test_success_and_artifacts(self, tmp_path, capsys):
        cfg = torsion_config(tmp_path / "out")
        code, _ = run_cli(tmp_path, cfg)
        assert code == 0
        out = capsys.readouterr().out
        assert "[PASS] converged" in out
        assert "outcome: success" in out
        outdir = tmp_path / "out"
        for name in ("solution.csv", "summary.json", "run_record.json"):
            assert (outdir / name).is_file()
        summary = read_json(outdir / "summary.json")
        assert summary["outcome"] == "success"
        assert all(summary["checks"].values())
        assert summary["observations"]["n_interior"] == 7
        assert summary["observations"]["max_norm"] == pytest.approx(0.125,
                                                                    abs=1e-9)
        assert summary["config_hash"] == config_hash(cfg)

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = torsion_config(tmp_path / "out")
        run_cli(tmp_path, cfg)
        outdir = tmp_path / "out"
        before = {n: (outdir / n).read_bytes()
                  for n in ("solution.csv", "summary.json")}
        code, _ = run_cli(tmp_path, cfg)
        assert code == 0
        for n, data in before.items():
            assert (outdir / n).read_bytes() == data

    def test_manifest_matches_files(self, tmp_path):
        cfg = torsion_config(tmp_path / "out")
        cfg["svg"] = True
        run_cli(tmp_path, cfg)
        outdir = tmp_path / "out"
        record = read_json(outdir / "run_record.json")
        assert set(record["files"]) == {"solution.csv", "summary.json",
                                        "plot.svg"}
        for name, info in record["files"].items():
            data = (outdir / name).read_bytes()
            assert info["bytes"] == len(data)
            assert info["sha256"] == hashlib.sha256(data).hexdigest()
        assert record["outcome"] == "success"
        assert record["config_hash"] == config_hash(cfg)

    def test_svg_only_on_request(self, tmp_path):
        cfg = torsion_config(tmp_path / "out")
        run_cli(tmp_path, cfg)
        assert not (tmp_path / "out" / "plot.svg").exists()


class TestExitCodes:
    def test_unknown_top_level_key(self, tmp_path):
        cfg = torsion_config(tmp_path / "out")
        cfg["bogus"] = 1
        code, _ = run_cli(tmp_path, cfg)
        assert code == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["run", str(tmp_path / "absent.json")]) == 2

    def test_unknown_experiment(self, tmp_path):
        code, _ = run_cli(tmp_path, {"experiment": "nope",
                                     "output_dir": str(tmp_path / "o")})
        assert code == 2

    def test_unknown_param_key(self, tmp_path):
        cfg = torsion_config(tmp_path / "out")
        cfg["params"] = {"bogus": True}
        code, _ = run_cli(tmp_path, cfg)
        assert code == 2

    def test_failing_check_exits_3_but_writes_summary(self, tmp_path, capsys):
        cfg = {
            "experiment": "moving_plane",
            "output_dir": str(tmp_path / "out"),
            "params": {"profile": "tanh_front", "expect": "sign_change",
                       "ymax": 4.0, "h": 0.0625},
        }
        code, _ = run_cli(tmp_path, cfg)
        assert code == 3
        out = capsys.readouterr().out
        assert "[FAIL] sign_changes_found" in out
        summary = read_json(tmp_path / "out" / "summary.json")
        assert summary["outcome"] == "check_failed"


class TestExperiments:
    def test_moving_plane_profile_mode(self, tmp_path):
        cfg = {
            "experiment": "moving_plane",
            "output_dir": str(tmp_path / "out"),
            "params": {"profile": "tanh_front",
                       "hopf_lambdas": [0.5, 1.0]},
        }
        code, _ = run_cli(tmp_path, cfg)
        assert code == 0
        summary = read_json(tmp_path / "out" / "summary.json")
        assert summary["checks"]["cap_ordering"]
        assert summary["checks"]["no_sign_changes"]
        assert summary["checks"]["hopf_defect_at_0.5"]
        assert summary["checks"]["hopf_defect_at_1"]
        assert summary["observations"]["dn_u_min"] > 0.0
        assert (tmp_path / "out" / "cap_sweep.csv").is_file()

    def test_threshold_scan(self, tmp_path):
        cfg = {
            "experiment": "threshold_scan",
            "output_dir": str(tmp_path / "out"),
            "svg": True,
            "params": {"L": 1.0,
                       "widths": {"start": 2.0, "stop": 3.6, "count": 17},
                       "cells": 64},
        }
        code, _ = run_cli(tmp_path, cfg)
        assert code == 0
        summary = read_json(tmp_path / "out" / "summary.json")
        assert summary["checks"]["sufficiency_gap"]
        assert summary["checks"]["crossing_near_prediction"]
        assert summary["observations"]["failure_width"] == pytest.approx(3.2)
        assert (tmp_path / "out" / "plot.svg").is_file()

    def test_custom_table_nonlinearity_from_csv(self, tmp_path):
        table = tmp_path / "table.csv"
        write_csv(table, ["t", "f"], [[-1.0, 1.0], [0.0, 1.0], [1.0, 1.0]])
        cfg = torsion_config(tmp_path / "out")
        cfg["nonlinearity"] = {"kind": "custom_table", "csv": str(table)}
        code, _ = run_cli(tmp_path, cfg)
        assert code == 0
        summary = read_json(tmp_path / "out" / "summary.json")
        assert summary["observations"]["max_norm"] == pytest.approx(0.125,
                                                                    abs=1e-9)

    def test_custom_sampled_domain_from_csv(self, tmp_path):
        prof = tmp_path / "profile.csv"
        write_csv(prof, ["x", "g"],
                  [[x, 0.0] for x in (-10.0, 0.0, 10.0)])
        cfg = {
            "experiment": "solve",
            "output_dir": str(tmp_path / "out"),
            "domain": {"kind": "epigraph", "profile": "custom_sampled",
                       "csv": str(prof)},
            "nonlinearity": {"kind": "constant", "value": 1.0},
            "grid": {"box": [[0.0, 0.5], [0.0, 1.0]], "h": 0.125},
        }
        code, _ = run_cli(tmp_path, cfg)
        assert code == 0

    def test_verify_examples_suite_passes(self, tmp_path):
        cfg = {"experiment": "verify_examples",
               "output_dir": str(tmp_path / "out")}
        code, _ = run_cli(tmp_path, cfg)
        assert code == 0
        summary = read_json(tmp_path / "out" / "summary.json")
        assert all(summary["checks"].values())
        assert (tmp_path / "out" / "examples.csv").is_file()


class TestReportAndCatalog:
    def test_report_renders_finished_run(self, tmp_path, capsys):
        cfg = torsion_config(tmp_path / "out")
        run_cli(tmp_path, cfg)
        capsys.readouterr()
        assert main(["report", str(tmp_path / "out")]) == 0
        out = capsys.readouterr().out
        assert "outcome: success" in out
        assert "[PASS] converged" in out
        assert "solution.csv" in out

    def test_report_missing_dir(self, tmp_path, capsys):
        assert main(["report", str(tmp_path / "void")]) == 2

    def test_list_catalog(self, capsys):
        assert main(["list-catalog"]) == 0
        out = capsys.readouterr().out
        for tag in ("half_space", "weierstrass", "winged_strip",
                    "under_parabola", "sqrt_saturation",
                    "double_front_source", "verify_examples", "solve"):
            assert tag in out
