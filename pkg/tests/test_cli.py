import csv
import io
import json
import subprocess
import sys

import pytest

from bergmanlab import cli
from bergmanlab import config as cfg


def write_config(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


def run(tmp_path, config, *extra, out="out"):
    path = write_config(tmp_path, config)
    return cli.main([config["experiment"], "--config", path, "--out", str(tmp_path / out), *extra])


LP_CONFIG = {"experiment": "lp-ratio", "weight": {"kind": "standard", "alpha": 0.0}, "p": 2, "k": 1,
             "suite": {"kind": "monomials", "max_degree": 4}}


class TestLPRatio:
    def test_ratio_three_at_one(self, tmp_path):
        assert run(tmp_path, LP_CONFIG) == cli.EXIT_OK
        rows = list(csv.DictReader(io.StringIO((tmp_path / "out" / "lp-ratio.csv").read_text())))
        by_label = {r["label"]: r for r in rows}
        assert float(by_label["z^1"]["ratio"]) == pytest.approx(3.0, rel=1e-8)
        assert float(by_label["z^4"]["ratio"]) == pytest.approx(9 / 4, rel=1e-8)

    def test_byte_identical(self, tmp_path):
        assert run(tmp_path, LP_CONFIG, out="a") == cli.EXIT_OK
        assert run(tmp_path, LP_CONFIG, out="b") == cli.EXIT_OK
        a = (tmp_path / "a" / "lp-ratio.json").read_bytes()
        b = (tmp_path / "b" / "lp-ratio.json").read_bytes()
        assert a == b
        assert (tmp_path / "a" / "lp-ratio.csv").read_bytes() == (tmp_path / "b" / "lp-ratio.csv").read_bytes()

    def test_report_shape(self, tmp_path):
        run(tmp_path, LP_CONFIG)
        report = json.loads((tmp_path / "out" / "lp-ratio.json").read_text())
        assert report["experiment"] == "lp-ratio" and report["converged"] is True
        assert "spread" in report["result"]


class TestCarleson:
    def test_identity_measure(self, tmp_path):
        w = {"kind": "standard", "alpha": 1.0}
        config = {"experiment": "carleson", "measure": {"kind": "density", "weight": w}, "weight": w,
                  "p": 2, "q": 2, "depth": 6}
        assert run(tmp_path, config) == cli.EXIT_OK
        report = json.loads((tmp_path / "out" / "carleson.json").read_text())
        assert report["result"]["constant"]["value"] == pytest.approx(1.0, rel=1e-12)

    def test_q_less_than_p(self, tmp_path, capsys):
        w = {"kind": "constant"}
        config = {"experiment": "carleson", "measure": {"kind": "density", "weight": w}, "weight": w,
                  "p": 2, "q": 1}
        assert run(tmp_path, config) == cli.EXIT_CONFIG
        err = capsys.readouterr().err
        assert "p <= q" in err


class TestConfigErrors:
    def test_unknown_field(self, tmp_path, capsys):
        assert run(tmp_path, {**LP_CONFIG, "bogus": 1}) == cli.EXIT_CONFIG
        assert "bogus" in capsys.readouterr().err

    def test_out_of_range(self, tmp_path):
        bad = {**LP_CONFIG, "weight": {"kind": "standard", "alpha": -2.0}}
        assert run(tmp_path, bad) == cli.EXIT_CONFIG

    def test_mismatched_subcommand(self, tmp_path):
        path = write_config(tmp_path, LP_CONFIG)
        assert cli.main(["carleson", "--config", path, "--out", str(tmp_path)]) == cli.EXIT_CONFIG

    def test_missing_file(self, tmp_path):
        assert cli.main(["lp-ratio", "--config", str(tmp_path / "none.json")]) == cli.EXIT_CONFIG

    def test_not_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{")
        assert cli.main(["lp-ratio", "--config", str(path)]) == cli.EXIT_CONFIG

    def test_missing_required(self, tmp_path):
        config = {"experiment": "volterra", "weight": {"kind": "constant"}, "p": 2, "q": 2}
        assert run(tmp_path, config) == cli.EXIT_CONFIG


def test_nonconvergence_exit_code(tmp_path):
    # one annulus batch cannot certify the boundary tail
    config = {**LP_CONFIG, "quadrature": {"max_annuli": 8}, "weight": {"kind": "radial_power", "alpha": -0.9}}
    assert run(tmp_path, config) == cli.EXIT_NONCONVERGED
    assert (tmp_path / "out" / "lp-ratio.json").exists()


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert cli.main(["selftest"]) == cli.EXIT_OK
    record = json.loads((tmp_path / "env" / "selftest.json").read_text())
    assert record["result"]["passed"]


class TestCatalog:
    def test_contents(self, capsys):
        assert cli.main(["list-catalog"]) == cli.EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        text = "\n".join(lines)
        assert "spiral_w" in text and "stolz_indicator" in text
        kp = [ln for ln in lines if ln.startswith("function kernel_power:")]
        assert len(kp) == 1 and "a" in kp[0].split(":")[1] and "exponent" in kp[0]

    def test_sorted(self):
        lines = cfg.catalog_lines()
        labels = [ln.split(":")[0].split(" ", 1)[1] for ln in lines]
        assert labels == sorted(labels)


@pytest.mark.parametrize("name", cfg.EXPERIMENTS)
def test_help_describes_operation(name):
    parser = cli.build_parser()
    sub = parser._subparsers._group_actions[0].choices[name]
    assert sub.description == cli.DESCRIPTIONS[name]


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "bergmanlab", "list-catalog"], capture_output=True, text=True,
                         check=True)
    assert "kernel_power" in out.stdout


@pytest.mark.parametrize("config", [
    {"experiment": "weight-class", "weight": {"kind": "spiral_w", "epsilon": 0.5}, "depth": 6,
     "nu": {"kind": "constant"}},
    {"experiment": "volterra", "g": {"family": "log_kernel", "a": 1.0}, "weight": {"kind": "constant"},
     "p": 2, "q": 2, "h": {"family": "monomial", "n": 2}, "lambda": [1.0, 0.5]},
    {"experiment": "volterra", "g": {"family": "log_kernel", "a": 1.0}, "weight": {"kind": "constant"},
     "p": 2, "q": 1},
    {"experiment": "resolvent-scan", "g": {"family": "polynomial", "coefficients": [0, 1]},
     "weight": {"kind": "standard", "alpha": 1.0}, "p": 2, "suite": {"kind": "monomials", "max_degree": 3},
     "lambda_grid": {"re": [-1, 1], "im": [-1, 1], "resolution": 2}},
    {"experiment": "maximal", "weight": {"kind": "constant"}, "measure": {"kind": "atoms", "points": [0.5],
                                                                         "masses": [1.0]},
     "p": 2, "q": 2, "alpha": 1.0, "depth": 5},
], ids=["weight-class", "volterra", "volterra-qlessp", "resolvent-scan", "maximal"])
def test_subcommands_run(tmp_path, config):
    assert run(tmp_path, config) == cli.EXIT_OK
    report = json.loads((tmp_path / "out" / f"{config['experiment']}.json").read_text())
    assert report["experiment"] == config["experiment"]
