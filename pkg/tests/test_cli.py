"""Command line tests, run in-process through ``main`` plus one smoke
test through a real subprocess."""

import json
import subprocess
import sys

import pytest

from ghzqss.cli import CSV_HEADER, main

# Frozen copy of the contract: consumers parse sweep output by these
# column names, so any drift must fail a test.
EXPECTED_HEADER = (
    "variant,strategy,rounds,check_fraction,seed,rounds_run,checked_rounds,"
    "honest_error_rate,detected,eve_accuracy,err_product,err_pair,err_single_w1,err_single_w2"
)


def _run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestRunCommand:
    def test_json_report(self, capsys):
        code, out, _ = _run(
            capsys, ["run", "--rounds", "50", "--seed", "7", "--format", "json"]
        )
        assert code == 0
        report = json.loads(out)
        assert report["variant"] == "revised"
        assert report["strategy"] == "none"
        assert report["rounds_run"] == 50
        assert report["seed"] == 7
        assert report["honest_error_rate"] == 0.0
        assert report["detected"] is False
        assert report["eve_accuracy"] is None

    def test_output_is_deterministic(self, capsys):
        argv = ["run", "--rounds", "40", "--seed", "3", "--attack", "dishonest-bob",
                "--format", "json"]
        first = _run(capsys, argv)
        second = _run(capsys, argv)
        assert first == second

    def test_csv_report(self, capsys):
        code, out, _ = _run(
            capsys, ["run", "--rounds", "30", "--seed", "1", "--format", "csv"]
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == EXPECTED_HEADER
        assert CSV_HEADER == EXPECTED_HEADER
        fields = lines[1].split(",")
        assert len(fields) == 14
        assert fields[0] == "revised"
        assert fields[8] == "false"
        assert fields[9] == ""  # no eavesdropper to score
        assert fields[10] == ""  # no product rounds in this variant

    def test_human_report(self, capsys):
        code, out, _ = _run(capsys, ["run", "--rounds", "25", "--seed", "2"])
        assert code == 0
        assert "variant            revised" in out
        assert "per-mode errors:" in out

    def test_explicit_secrets(self, capsys):
        code, out, _ = _run(
            capsys,
            ["run", "--rounds", "6", "--secrets", "010110", "--format", "json"],
        )
        assert code == 0
        assert json.loads(out)["rounds_run"] == 6

    def test_secret_length_mismatch_is_usage_error(self, capsys):
        code, _, err = _run(capsys, ["run", "--rounds", "5", "--secrets", "01"])
        assert code == 2
        assert "error:" in err

    def test_incompatible_combo_is_usage_error(self, capsys):
        code, _, err = _run(capsys, ["run", "--protocol", "revised", "--attack", "a2"])
        assert code == 2
        assert "not defined" in err

    def test_bad_rounds_is_usage_error(self, capsys):
        code, _, err = _run(capsys, ["run", "--rounds", "0"])
        assert code == 2
        assert "error:" in err

    def test_fail_on_detect(self, capsys):
        argv = ["run", "--attack", "dishonest-bob", "--rounds", "400", "--seed", "0",
                "--check-fraction", "1.0", "--format", "json", "--fail-on-detect"]
        code, out, _ = _run(capsys, argv)
        assert code == 1
        assert json.loads(out)["detected"] is True
        # Without the flag the same session exits 0.
        code, _, _ = _run(capsys, argv[:-1])
        assert code == 0

    def test_transcript_file(self, capsys, tmp_path):
        path = tmp_path / "rounds.jsonl"
        code, _, _ = _run(
            capsys,
            ["run", "--rounds", "12", "--seed", "5", "--transcripts", str(path)],
        )
        assert code == 0
        lines = path.read_text().strip().split("\n")
        assert len(lines) == 12
        for i, line in enumerate(lines, start=1):
            record = json.loads(line)
            assert record["round"] == i
            assert record["recovered"] == record["secret"]
            assert list(record)[0] == "round"

    def test_seed_env_default_and_override(self, capsys, monkeypatch):
        monkeypatch.setenv("QSS_SEED", "123")
        _, out, _ = _run(capsys, ["run", "--rounds", "5", "--format", "json"])
        assert json.loads(out)["seed"] == 123
        _, out, _ = _run(capsys, ["run", "--rounds", "5", "--seed", "9", "--format", "json"])
        assert json.loads(out)["seed"] == 9
        monkeypatch.setenv("QSS_SEED", "not-a-number")
        _, out, _ = _run(capsys, ["run", "--rounds", "5", "--format", "json"])
        assert json.loads(out)["seed"] == 0


class TestSweepCommand:
    def test_grid_rows(self, capsys):
        code, out, _ = _run(
            capsys,
            ["sweep", "--attacks", "none,a1", "--rounds", "20,30",
             "--check-fractions", "0.25,0.5", "--repeats", "2", "--seed", "11"],
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == EXPECTED_HEADER
        assert len(lines) == 1 + 2 * 2 * 2 * 2

    def test_sweep_is_deterministic(self, capsys):
        argv = ["sweep", "--attacks", "none", "--rounds", "25", "--repeats", "3"]
        assert _run(capsys, argv) == _run(capsys, argv)

    def test_empty_grid_is_usage_error(self, capsys):
        code, _, err = _run(capsys, ["sweep", "--attacks", ""])
        assert code == 2
        assert "empty" in err

    def test_incompatible_sweep_strategy(self, capsys):
        code, _, err = _run(capsys, ["sweep", "--protocol", "original", "--attacks", "a1"])
        assert code == 2
        assert "not defined" in err

    def test_json_format(self, capsys):
        code, out, _ = _run(
            capsys, ["sweep", "--attacks", "none", "--rounds", "15", "--format", "json"]
        )
        assert code == 0
        rows = json.loads(out)
        assert len(rows) == 1
        assert rows[0]["rounds_run"] == 15


class TestVerifyCommand:
    def test_all_identities_hold(self, capsys):
        code, out, _ = _run(capsys, ["verify-equations"])
        assert code == 0
        assert "all 11 identities hold" in out
        assert "FAIL" not in out

    def test_corrupt_control_fails(self, capsys):
        code, out, _ = _run(capsys, ["verify-equations", "--corrupt", "E5"])
        assert code == 1
        assert "FAIL" in out
        assert "E5" in out

    def test_unknown_corrupt_id_is_usage_error(self, capsys):
        code, _, _ = _run(capsys, ["verify-equations", "--corrupt", "E99"])
        assert code == 2

    def test_json_format(self, capsys):
        code, out, _ = _run(capsys, ["verify-equations", "--format", "json"])
        assert code == 0
        payload = json.loads(out)
        assert [entry["identity"] for entry in payload] == [
            "E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8", "E9", "E10", "E11",
        ]
        assert all(entry["ok"] for entry in payload)
        assert all(b["deviation"] <= 1e-12 for entry in payload for b in entry["branches"])

    def test_csv_format(self, capsys):
        code, out, _ = _run(capsys, ["verify-equations", "--format", "csv"])
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "identity,branch,deviation,ok"
        assert all(line.endswith("true") for line in lines[1:])


class TestUsage:
    def test_no_subcommand_is_usage_error(self, capsys):
        assert _run(capsys, [])[0] == 2

    def test_unknown_flag_is_usage_error(self, capsys):
        assert _run(capsys, ["run", "--frobnicate"])[0] == 2

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "ghzqss.cli", "run", "--rounds", "15",
             "--seed", "4", "--format", "json"],
            capture_output=True,
            text=True,
            timeout=120,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["rounds_run"] == 15
