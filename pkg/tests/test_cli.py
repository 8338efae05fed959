from __future__ import annotations

import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from tailconv import __version__
from tailconv.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _json(path: Path) -> dict:
    return json.loads(path.read_text())


def test_classify_exponential_ol(tmp_path):
    code = main(["classify", "--config", str(CONFIGS / "exponential.json"), "--class", "OL", "--out", str(tmp_path)])
    assert code == 0
    files = sorted(p.name for p in tmp_path.iterdir())
    report = _json(tmp_path / "classify_OL.json")
    assert report["result"]["verdict"] == "member"
    assert report["result"]["evidence"]["global_sup"] == pytest.approx(math.e, rel=1e-9)
    assert report["meta"]["version"] == __version__
    assert len(report["meta"]["config_hash"]) == 16
    assert any(f.endswith("_ratio.csv") for f in files)


def test_classify_gauss_type_is_non_member(tmp_path):
    code = main(["classify", "--config", str(CONFIGS / "gauss_type.json"), "--class", "OL", "--out", str(tmp_path)])
    assert code == 0
    report = _json(tmp_path / "classify_OL.json")
    assert report["result"]["verdict"] == "non_member"


def test_inconclusive_verdict_exits_three(tmp_path):
    cfg = tmp_path / "weibull.json"
    cfg.write_text(json.dumps({"model": {"family": "WeibullRoot", "params": {}}}))
    assert main(["classify", "--config", str(cfg), "--class", "S", "--out", str(tmp_path)]) == 3
    assert (tmp_path / "classify_S_series.csv").read_text().splitlines()[4].startswith("x,")


def test_malformed_inputs_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"model": {"family": "Exponential"')
    assert main(["classify", "--config", str(bad), "--class", "OL", "--out", str(tmp_path)]) == 2
    assert "line 1" in capsys.readouterr().err
    assert main(["classify", "--config", str(CONFIGS / "exponential.json"), "--class", "Q",
                 "--out", str(tmp_path)]) == 2
    assert main(["no-such-command"]) == 2


def test_budget_refusal_exits_four(tmp_path):
    cfg = tmp_path / "heavy.json"
    cfg.write_text(json.dumps({"model": {"family": "Exponential", "params": {"rate": 1.0}},
                               "counting": {"family": "Geometric", "params": {"p": 1e-6}}}))
    assert main(["random-sum", "--config", str(cfg), "--n-max", "1000", "--out", str(tmp_path)]) == 4


def test_random_sum_tolerance_passes_through(tmp_path):
    code = main(["random-sum", "--config", str(CONFIGS / "exponential.json"), "--tol", "1e-8",
                 "--x-max", "20", "--out", str(tmp_path)])
    assert code == 0
    report = _json(tmp_path / "random_sum.json")
    assert report["result"]["abs_error_bound"] <= 1e-8
    csv = (tmp_path / "random_sum.csv").read_text().splitlines()
    assert csv[0].startswith("#")
    assert csv[4].startswith("x,log_survival,survival")


def test_convolve_writes_a_tail_grid(tmp_path):
    assert main(["convolve", "--config", str(CONFIGS / "erlang_chain.json"), "--x-max", "20",
                 "--out", str(tmp_path)]) == 0
    report = _json(tmp_path / "convolve.json")
    assert report["result"]["abs_error_bound"] <= 1e-6


def test_mc_validate_is_byte_identical(tmp_path):
    outs = []
    for run in ("a", "b"):
        d = tmp_path / run
        code = main(["mc-validate", "--config", str(CONFIGS / "exponential.json"), "--seed", "42",
                     "--samples", "20000", "--x-max", "10", "--out", str(d)])
        assert code == 0
        outs.append(((d / "mc_tail.csv").read_bytes(), (d / "mc_validate.json").read_bytes()))
    assert outs[0] == outs[1]


def test_check_theorem6_report(tmp_path):
    code = main(["check", "--config", str(CONFIGS / "example3.json"), "--theorem", "6", "--kappa", "2",
                 "--k-max", "2000", "--out", str(tmp_path)])
    assert code == 0
    report = _json(tmp_path / "check_T6.json")["result"]
    assert report["overall"] == "applies"
    assert len(report["conditions"]) == 5


def test_check_lemma2_records_the_constant(tmp_path):
    code = main(["check", "--config", str(CONFIGS / "uniform_0_2.json"), "--theorem", "lemma2", "--rogozin-A", "3",
                 "--samples", "20000", "--out", str(tmp_path)])
    assert code == 0
    report = _json(tmp_path / "check_lemma2.json")["result"]
    assert report["A"] == 3.0
    assert report["dominated"] is True


@pytest.mark.parametrize("example_id,theorem,expected", [(1, "T4", "applies"), (2, "T5", "applies"),
                                                          (3, "T6", "applies")])
def test_example_bundles(tmp_path, example_id, theorem, expected):
    code = main(["example", "--id", str(example_id), "--samples", "0", "--k-max", "2000", "--out", str(tmp_path)])
    assert code == 0
    summary = _json(tmp_path / f"example{example_id}_summary.json")["result"]
    assert summary["theorem_verdicts"][theorem] == expected
    if example_id == 3:
        assert summary["theorem_verdicts"]["T4"] == "does_not_apply"
    assert summary["random_sum_OL"] == "member"
    assert (tmp_path / f"example{example_id}_config.json").exists()


def test_module_entry_point_prints_version():
    out = subprocess.run([sys.executable, "-m", "tailconv.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0
    assert __version__ in out.stdout
