import csv
import hashlib
import io
import json

import pytest

from msqss.cli import EXIT_ABORT, EXIT_USAGE, git_blob_hash, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestExample:
    def test_prints_key(self, capsys):
        code, out, _ = run_cli(capsys, "example")
        assert code == 0 and "key 00101" in out


class TestEfficiency:
    def test_ghz_row(self, capsys):
        code, out, _ = run_cli(capsys, "efficiency", "--protocols", "ghz", "--M-range", "1..10")
        rows = list(csv.DictReader(io.StringIO(out)))
        row = next(r for r in rows if r["M"] == "4")
        assert code == 0 and float(row["eta"]) == 0.00625 and row["eta_exact"] == "1/160"

    def test_default_table(self, capsys):
        code, out, _ = run_cli(capsys, "efficiency")
        assert code == 0 and len(out.strip().splitlines()) == 1 + 40

    def test_range_error_is_usage_error(self, capsys):
        code, _, err = run_cli(capsys, "efficiency", "--M-range", "1..5000")
        assert code == EXIT_USAGE and "range" in err

    def test_bad_flag_value(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["efficiency", "--no-such-flag"])
        assert exc.value.code == 2


class TestRun:
    def test_transcript_json(self, capsys):
        code, out, _ = run_cli(capsys, "run", "--L", "6", "--M", "2", "--seed", "4")
        d = json.loads(out)
        assert code == 0 and d["key"] is not None and d["config"]["L"] == 6

    def test_abort_exit_code(self, capsys):
        code, out, err = run_cli(capsys, "run", "--L", "6", "--M", "2", "--seed", "1", "--attack", "fake_state")
        assert code == EXIT_ABORT and "abort: honesty" in err
        assert json.loads(out)["abort_reason"].startswith("honesty")

    def test_invalid_config_exit_code(self, capsys, tmp_path):
        out_file = tmp_path / "t.json"
        code, _, _ = run_cli(capsys, "run", "--L", "0", "--M", "2", "--out", str(out_file))
        assert code == EXIT_USAGE and not out_file.exists()

    def test_missing_L(self, capsys):
        code, _, err = run_cli(capsys, "run", "--M", "2")
        assert code == EXIT_USAGE and "required" in err

    def test_env_seed(self, capsys, monkeypatch):
        monkeypatch.setenv("MSQSS_SEED", "17")
        _, out, _ = run_cli(capsys, "run", "--L", "4", "--M", "1", "--no-retry")
        assert json.loads(out)["config"]["seed"] == 17

    def test_config_file_and_override(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"L": 4, "M": 3, "epsilon": "1/4", "seed": 2}))
        _, out, _ = run_cli(capsys, "run", "--config", str(cfg), "--M", "1", "--no-retry")
        d = json.loads(out)["config"]
        assert (d["L"], d["M"], d["epsilon"], d["seed"]) == (4, 1, "1/4", 2)

    def test_byte_determinism_and_manifest(self, capsys, tmp_path):
        hashes = []
        for name in ("a", "b"):
            out = tmp_path / f"{name}.json"
            man = tmp_path / f"{name}.manifest.json"
            assert main(["run", "--L", "5", "--M", "2", "--seed", "8", "--out", str(out), "--manifest", str(man)]) == 0
            data = out.read_bytes()
            hashes.append(hashlib.sha256(data).hexdigest())
            assert json.loads(man.read_text())["output_hash"] == git_blob_hash(data)
        assert hashes[0] == hashes[1]
        assert not list(tmp_path.glob("*.tmp"))


class TestAttack:
    def test_csv_columns(self, capsys):
        code, out, _ = run_cli(capsys, "attack", "--kind", "honest", "--L", "4", "--M", "2", "--trials", "20")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0
        assert list(rows[0]) == ["attack", "params", "L", "M", "epsilon", "trials", "detected", "rate", "lo", "hi", "predicted"]
        assert rows[0]["detected"] == "0"

    def test_params_json(self, capsys):
        code, out, _ = run_cli(
            capsys, "attack", "--kind", "entangle_measure", "--L", "4", "--M", "2", "--trials", "20",
            "--params", '{"beta_sq": 0.5}',
        )
        assert code == 0 and json.loads(next(csv.DictReader(io.StringIO(out)))["params"]) == {"beta_sq": 0.5}

    @pytest.mark.parametrize("params", ['{"beta_sq": 2}', "[1]", "{bad", '{"dishonest": [1, 2]}'])
    def test_bad_params(self, capsys, params):
        kind = "collusion" if "dishonest" in params else "entangle_measure"
        code, _, _ = run_cli(capsys, "attack", "--kind", kind, "--L", "4", "--M", "2", "--params", params)
        assert code == EXIT_USAGE
