"""Command-line surface: schemas, determinism and exit codes."""

import csv
import io
import json
import math

import numpy as np
import pytest

from latticeprobe.cli import main
from latticeprobe.figures import figure_data


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv_blocks(text):
    """Split multi-block CSV output (blocks separated by blank lines)."""
    blocks = []
    for chunk in text.strip().split("\n\n"):
        rows = list(csv.reader(io.StringIO(chunk)))
        blocks.append((rows[0], rows[1:]))
    return blocks


class TestPurities:
    def test_ghz_profile_rows(self, capsys):
        code, out, err = run_cli(capsys, "purities", "--family", "ghz", "--n", "10")
        assert code == 0
        header, rows = parse_csv_blocks(out)[0]
        assert header == ["k", "avpur"]
        vals = [float(r[1]) for r in rows]
        assert vals[0] == 1.0
        np.testing.assert_allclose(vals[1:-1], 0.5, atol=1e-10)
        assert vals[-1] == pytest.approx(1.0, abs=1e-10)
        verdict = json.loads(err)
        assert verdict["violated"] is True

    def test_product_state_all_ones(self, capsys):
        code, out, _ = run_cli(
            capsys, "purities", "--family", "phi", "--phi", "0", "--n", "5"
        )
        assert code == 0
        _, rows = parse_csv_blocks(out)[0]
        np.testing.assert_allclose([float(r[1]) for r in rows], 1.0, atol=1e-12)

    def test_subsets_block(self, capsys):
        code, out, _ = run_cli(
            capsys, "purities", "--family", "ghz", "--n", "3", "--subsets"
        )
        assert code == 0
        blocks = parse_csv_blocks(out)
        assert blocks[1][0] == ["mask", "purity"]
        assert len(blocks[1][1]) == 8

    def test_invalid_family_exits_2(self, capsys):
        assert main(["purities", "--family", "ghz", "--n", "0"]) == 2


class TestPhysics:
    def test_json_payload(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "physics",
            "--J", "1.0", "--delta-J", "0.05", "--U", "0.1",
            "--tau-d", "1.3", "--tau-s", "500",
        )
        assert code == 0
        doc = json.loads(out)
        assert set(doc) == {"t_bs", "q_bs", "t_l", "q_l", "p_l"}
        assert 18.5 <= doc["t_l"] <= 19.5

    def test_invalid_loss_ordering(self, capsys):
        code = main(
            ["physics", "--J", "1", "--tau-d", "1.0", "--tau-s", "2.0"]
        )
        assert code == 2


class TestSimulate:
    def test_byte_identical_reruns(self, capsys):
        argv = [
            "simulate", "--family", "cluster", "--n", "6",
            "--q", "0.05", "--N", "20000", "--seed", "7",
        ]
        code1, out1, err1 = run_cli(capsys, *argv)
        code2, out2, err2 = run_cli(capsys, *argv)
        assert code1 == code2 == 0
        assert out1 == out2
        assert err1 == err2

    def test_noise_free_consistency(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "simulate", "--family", "cluster", "--n", "5",
            "--q", "0", "--p", "0", "--N", "1000000", "--seed", "3",
        )
        assert code == 0
        header, rows = parse_csv_blocks(out)[0]
        assert header == ["k", "estimate", "std_error", "predicted_std_error"]
        from latticeprobe.purity import avpur_profile
        from latticeprobe.states import make_cluster

        exact = avpur_profile(make_cluster(5)).avpur
        for row, truth in zip(rows, exact):
            est, se = float(row[1]), float(row[3])
            assert abs(est - truth) <= 5 * se + 1e-9

    def test_ghz_violation_detected(self, capsys):
        code, _, err = run_cli(
            capsys,
            "simulate", "--family", "ghz", "--n", "8", "--p", "0.1",
            "--N", "200000", "--seed", "1", "--method", "least-squares",
        )
        assert code == 0
        verdict = json.loads(err)
        assert verdict["violated"] is True
        assert verdict["margin"] > 0


class TestCorrect:
    def test_round_trip_through_files(self, tmp_path, capsys):
        from latticeprobe.channels import apply_bs_error, apply_detector_error
        from latticeprobe.network import distribution_to_csv, singles_distribution
        from latticeprobe.purity import avpur_profile
        from latticeprobe.states import make_cluster

        prof = avpur_profile(make_cluster(6))
        observed = apply_detector_error(
            apply_bs_error(singles_distribution(prof), 0.05), 0.1
        )
        obs_path = tmp_path / "observed.csv"
        with open(obs_path, "w") as fh:
            distribution_to_csv(observed, fh)
        code, out, err = run_cli(
            capsys,
            "correct", "--input", str(obs_path), "--n", "6",
            "--q", "0.05", "--p", "0.1",
        )
        assert code == 0
        _, rows = parse_csv_blocks(out)[0]
        np.testing.assert_allclose(
            [float(r[1]) for r in rows], prof.avpur, atol=1e-8
        )
        assert json.loads(err)["detector_method"] == "explicit"

    def test_singular_corrector_exits_3(self, tmp_path, capsys):
        obs_path = tmp_path / "observed.csv"
        obs_path.write_text("i,probability\n0,1.0\n")
        code = main(
            ["correct", "--input", str(obs_path), "--n", "16", "--q", "0.0"]
        )
        assert code == 2  # n > 15 refused as configuration error
        code = main(
            ["correct", "--input", str(obs_path), "--n", "2", "--q", "0.999999"]
        )
        assert code == 0


class TestVarianceCommand:
    def test_schema_and_bound_column(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "variance", "--family", "cluster", "--n", "6",
            "--q", "0.1", "--mode", "bs",
        )
        assert code == 0
        header, rows = parse_csv_blocks(out)[0]
        assert header == ["k", "variance", "bound", "method", "mode", "n", "p", "q"]
        for row in rows:
            assert float(row[1]) <= float(row[2]) + 1e-9


class TestWorstcase:
    def test_output_blocks(self, capsys):
        code, out, _ = run_cli(
            capsys, "worstcase", "--n", "6", "--k", "3", "--q", "0.2"
        )
        assert code == 0
        blocks = parse_csv_blocks(out)
        assert blocks[0][0] == ["k", "v_max", "bound", "mode", "method", "constrained"]
        v_max = float(blocks[0][1][0][1])
        bound = float(blocks[0][1][0][2])
        assert v_max <= bound + 1e-9
        assert blocks[1][0] == ["k", "avpur"]

    def test_bad_k_exits_2(self, capsys):
        assert main(["worstcase", "--n", "4", "--k", "9"]) == 2


class TestFigureCommand:
    def test_figure1_matches_library(self, tmp_path, capsys):
        code, out, _ = run_cli(capsys, "figure", "1", "--out", str(tmp_path))
        assert code == 0
        path = tmp_path / "fig1.csv"
        assert path.exists()
        with open(path) as fh:
            rows = list(csv.reader(fh))
        table = figure_data(1)["fig1"]
        assert tuple(rows[0]) == table.columns
        got = np.array([[float(v) for v in r] for r in rows[1:]])
        np.testing.assert_array_equal(got, table.rows)  # bit-for-bit

    def test_unknown_index_exits_2(self, capsys):
        assert main(["figure", "9"]) == 2

    def test_override_n(self, tmp_path, capsys):
        code, _, _ = run_cli(
            capsys, "figure", "1", "--n", "7", "--out", str(tmp_path)
        )
        assert code == 0
        table = figure_data(1, n=7)["fig1"]
        with open(tmp_path / "fig1.csv") as fh:
            rows = list(csv.reader(fh))
        got = np.array([[float(v) for v in r] for r in rows[1:]])
        np.testing.assert_array_equal(got, table.rows)


class TestConfigFile:
    def test_config_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"family": "ghz", "n": 4}))
        code, out, _ = run_cli(
            capsys, "--config", str(cfg), "purities", "--n", "4"
        )
        assert code == 0
        _, rows = parse_csv_blocks(out)[0]
        assert len(rows) == 5

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        assert main(["--config", str(cfg), "purities", "--n", "4"]) == 2
