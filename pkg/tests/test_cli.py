import csv
import json
import subprocess
import sys

import pytest

from cuspflow.cli import SCHEMA, build_parser, main, resolve_config
from cuspflow.errors import InvalidParameter


def _resolve(argv, environ=None):
    return resolve_config(build_parser().parse_args(argv), environ or {})


def _read_csv(path):
    raw = path.read_bytes()
    lines = raw.decode("utf-8").split("\r\n")
    assert lines[0] == SCHEMA
    return raw, list(csv.reader(lines[1:-1]))


class TestConfig:
    def test_seed_is_mandatory(self):
        with pytest.raises(InvalidParameter, match="seed is mandatory"):
            _resolve(["pm-table"])

    def test_seed_from_env(self):
        assert _resolve(["pm-table"], {"CUSPFLOW_SEED": "17"})["seed"] == 17
        with pytest.raises(InvalidParameter):
            _resolve(["pm-table"], {"CUSPFLOW_SEED": "x"})

    def test_precedence(self, tmp_path):
        doc = tmp_path / "c.json"
        doc.write_text(json.dumps({"seed": 5, "m-max": 10, "case": "complex"}))
        cfg = _resolve(["pm-table", "--config", str(doc), "--m-max", "12"], {"CUSPFLOW_SEED": "9"})
        assert cfg["m_max"] == 12          # flag beats config
        assert cfg["case"] == "complex"    # config beats default
        assert cfg["seed"] == 5            # config beats environment
        assert cfg["s"] == "0.6,0.75,0.9,1.0"
        cfg = _resolve(["pm-table", "--config", str(doc), "--seed", "6"])
        assert cfg["seed"] == 6

    def test_default_output_name(self):
        assert _resolve(["loglaw", "--seed", "1"])["output"] == "cuspflow-loglaw"

    @pytest.mark.parametrize("argv", [
        ["loglaw", "--orbits", "0"],
        ["shrink", "--eps", "0"],
        ["shrink", "--sign", "2"],
        ["theta-norm", "--eps", "0.7"],
        ["theta-norm", "--method", "magic"],
        ["siegel", "--lattice", "gamma0:0"],
        ["pm-table", "--case", "quaternion"],
        ["scattering-scan", "--r-min", "3", "--r-max", "2"],
    ])
    def test_invalid(self, argv):
        with pytest.raises(InvalidParameter):
            _resolve(argv + ["--seed", "1"])

    def test_unknown_config_field(self, tmp_path):
        doc = tmp_path / "c.json"
        doc.write_text(json.dumps({"seed": 1, "horizon": 10}))
        with pytest.raises(InvalidParameter, match="unknown config fields"):
            _resolve(["pm-table", "--config", str(doc)])


class TestMain:
    def test_exit_codes(self, tmp_path, capsys):
        out = str(tmp_path / "pm")
        assert main(["pm-table", "--seed", "1", "--m-max", "4", "--output", out]) == 0
        assert main(["pm-table", "--m-max", "4", "--output", out]) == 2
        assert main(["pm-table", "--seed", "1", "--s", "0", "--output", out]) == 3
        err = capsys.readouterr().err
        assert "invalid input" in err and "numerical guard" in err

    def test_argparse_errors_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["no-such-command"])
        assert exc.value.code == 2

    def test_outputs_and_metadata(self, tmp_path, capsys):
        out = tmp_path / "sub" / "scan"
        assert main(["scattering-scan", "--seed", "3", "--points", "5", "--output", str(out)]) == 0
        _, rows = _read_csv(tmp_path / "sub" / "scan.csv")
        assert rows[0] == ["r", "re_C", "im_C", "abs_C"] and len(rows) == 6
        meta = json.loads((tmp_path / "sub" / "scan.json").read_text())
        assert meta["config"]["points"] == 5 and meta["config"]["seed"] == 3
        assert meta["version"].startswith("0.1.0")
        assert meta["backend"] in ("numba", "numpy")
        assert meta["summary"]["max_unitarity_error"] < 1e-12
        assert json.loads(capsys.readouterr().out) == meta["summary"]

    @pytest.mark.parametrize("argv", [
        ["dk-measure", "--k", "8,16", "--samples", "2000"],
        ["loglaw", "--orbits", "3", "--horizon", "2000"],
        ["siegel", "--lambda", "2", "--samples", "2000", "--workers", "2"],
    ], ids=["dk", "loglaw", "siegel"])
    def test_csv_is_reproducible(self, argv, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(argv + ["--seed", "11", "--output", str(a)]) == 0
        assert main(argv + ["--seed", "11", "--output", str(b)]) == 0
        raw_a, _ = _read_csv(tmp_path / "a.csv")
        raw_b, _ = _read_csv(tmp_path / "b.csv")
        assert raw_a == raw_b

    def test_console_entry_point(self, tmp_path):
        res = subprocess.run([sys.executable, "-m", "cuspflow.cli", "pm-table", "--m-max", "2",
                              "--output", str(tmp_path / "p")],
                             env={"CUSPFLOW_SEED": "4", "PATH": ""}, capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        assert json.loads(res.stdout) == {"mu": 1}
