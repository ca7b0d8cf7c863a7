import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from ssep_reservoirs.cli import build_parser, main, make_u0, read_config
from ssep_reservoirs.harness import CSV_COLUMNS, JSON_SCHEMA


HEADER = ",".join(CSV_COLUMNS)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestU0Presets:
    def test_linear(self):
        u0 = make_u0("linear")
        assert u0(0.25) == 0.25

    def test_sine(self):
        u0 = make_u0("sine")
        assert abs(u0(0.5) - 1.0) <= 1e-15

    def test_const(self):
        u0 = make_u0("const:0.3")
        assert np.allclose(u0(np.array([0.1, 0.9])), 0.3)

    def test_step(self):
        u0 = make_u0("step:0.2,0.8")
        assert np.allclose(u0(np.array([0.1, 0.9])), [0.2, 0.8])

    def test_bad_presets(self):
        for preset in ("quadratic", "const:1.5", "step:0.2", "step:-1,2"):
            with pytest.raises(ValueError):
                make_u0(preset)


class TestConfigFile:
    def test_parse_and_types(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# comment line\n"
            "n = 12\n"
            "alpha-prime = 0.25\n"
            "t = 0.5,1\n"
            "\n"
            "v-minus = 0.7\n"
        )
        settings = read_config(cfg)
        assert settings == {"n": "12", "alpha_prime": "0.25",
                            "t": "0.5,1", "v_minus": "0.7"}

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("replicas = 10\n")
        with pytest.raises(ValueError):
            read_config(cfg)

    def test_missing_equals_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("just a line\n")
        with pytest.raises(ValueError):
            read_config(cfg)


class TestSubcommands:
    def test_ideal_stdout_csv(self, capsys):
        code, out, err = run_cli(capsys, "ideal", "--n", "20", "--alpha", "0.5",
                                 "--alpha-prime", "0.25", "--t", "1")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == HEADER
        assert len(lines) == 12

    def test_global_json_to_file(self, capsys, tmp_path):
        out_path = tmp_path / "res.json"
        code, out, err = run_cli(capsys, "global", "--n", "10", "--alpha", "0.25",
                                 "--alpha-prime", "0.75", "--t", "1",
                                 "--out", str(out_path), "--format", "json")
        assert code == 0
        assert out == ""
        assert str(out_path) in err
        payload = json.loads(out_path.read_text())
        jsonschema.validate(payload, JSON_SCHEMA)
        assert payload["meta"]["regime"] == "global"

    def test_adiabatic_defaults_alpha_prime_to_alpha(self, capsys, tmp_path):
        out_path = tmp_path / "res.json"
        code, _, _ = run_cli(capsys, "adiabatic", "--n", "10", "--alpha", "0.5",
                             "--t", "1", "--out", str(out_path),
                             "--format", "json")
        assert code == 0
        payload = json.loads(out_path.read_text())
        assert payload["meta"]["alpha_prime"] == 0.5
        assert payload["meta"]["regime"] == "adiabatic"

    def test_chaos_pairs_repeatable(self, capsys):
        code, out, _ = run_cli(capsys, "chaos", "--n", "10", "--alpha", "0.5",
                               "--alpha-prime", "0", "--t", "0.5", "--k", "300",
                               "--u0", "const:0.5", "--v-minus", "0.5",
                               "--v-plus", "0.5",
                               "--pair", "0.3,0.7", "--pair", "0.1,0.9")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == HEADER
        assert len(lines) == 3
        assert lines[1].split(",")[5] == "3-7"
        assert lines[2].split(",")[5] == "1-9"

    def test_chaos_defaults_to_global_clock(self, capsys, tmp_path):
        out_path = tmp_path / "res.json"
        code, _, _ = run_cli(capsys, "chaos", "--n", "6", "--alpha", "0.5",
                             "--t", "0.02", "--k", "50", "--u0", "const:0.5",
                             "--v-minus", "0.5", "--v-plus", "0.5",
                             "--out", str(out_path), "--format", "json")
        assert code == 0
        payload = json.loads(out_path.read_text())
        assert payload["meta"]["alpha_prime"] == 1.0
        assert payload["meta"]["engine"] == "chaos"

    def test_regime_subcommand_mismatch(self, capsys):
        code, _, err = run_cli(capsys, "ideal", "--n", "10", "--alpha", "0.5",
                               "--alpha-prime", "0.5", "--t", "1")
        assert code == 2
        assert "adiabatic" in err

    def test_budget_refusal_exit_code(self, capsys):
        code, _, err = run_cli(capsys, "global", "--n", "100", "--alpha", "1",
                               "--alpha-prime", "1.5", "--t", "10",
                               "--engine", "kmc", "--k", "100000")
        assert code == 2
        assert "budget" in err

    def test_config_with_flag_override(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n = 30\nalpha = 0.5\nalpha-prime = 0.25\nt = 1\n"
                       "v-minus = 0.6\nv-plus = 0.4\n")
        code, out, _ = run_cli(capsys, "ideal", "--config", str(cfg), "--n", "8")
        assert code == 0
        first_row = out.strip().splitlines()[1].split(",")
        assert first_row[1] == "8"

    def test_bad_config_exits_2(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("bogus = 1\n")
        code, _, err = run_cli(capsys, "ideal", "--config", str(cfg))
        assert code == 2
        assert "bogus" in err

    def test_missing_subcommand_is_a_usage_error(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_verify_suite_passes(self, capsys):
        code, out, _ = run_cli(capsys, "verify")
        assert code == 0
        assert "FAIL" not in out
        assert out.count("PASS") >= 10


class TestConsoleScript:
    def test_help_runs(self):
        proc = subprocess.run([sys.executable, "-m", "ssep_reservoirs.cli",
                               "--help"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert "ideal" in proc.stdout and "verify" in proc.stdout
