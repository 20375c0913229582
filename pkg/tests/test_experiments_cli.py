import json

import numpy as np
import pytest

from polyosc.cli import main
from polyosc.errors import ConfigurationError
from polyosc.experiments import (ExperimentConfig, graded_vertical_breaks,
                                 run_cell_report, run_trichotomy)
from polyosc.geometry import TrigPolynomial
from polyosc.reports import TRICHOTOMY_COLUMNS


def _small_config(out):
    return ExperimentConfig(alphas=(2.0,), eps_list=(0.25, 0.125),
                            elements=(8, 10), elements_per_period=4,
                            n_eigs=2, out=str(out))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(m=3, k=1)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(eps_list=(0.125, 0.25))
    with pytest.raises(ConfigurationError):
        ExperimentConfig(eps_list=(0.3, 0.1))
    with pytest.raises(ConfigurationError):
        ExperimentConfig(alphas=(5.0,))
    with pytest.raises(ConfigurationError):
        ExperimentConfig(degree=1)


def test_config_from_json_fractions():
    cfg = ExperimentConfig.from_json({"eps_list": ["1/4", "1/8"],
                                      "b": "2+cos", "alphas": [2.0]})
    assert cfg.eps_list == (0.25, 0.125)
    assert cfg.b.terms == ((0, 2.0, 0.0), (1, 1.0, 0.0))


def test_graded_breaks_cover_collar():
    breaks = graded_vertical_breaks(0.125, coarse=6)
    assert breaks[0] == -1.0 and breaks[-1] == 0.0
    assert -0.25 in breaks and -0.125 in breaks
    assert min(np.diff(breaks)) > 0


def test_trichotomy_small_run(tmp_path):
    cfg = _small_config(tmp_path)
    report = run_trichotomy(cfg)
    assert not report.failures
    assert report.K > 0
    # rows: 1 alpha x 2 eps x 2 eigenvalues
    assert len(report.rows) == 4
    for row in report.rows:
        assert row["limit_SIBC"] <= row["limit_critical"] <= row["limit_dirichlet"]
        assert row["lambda"] >= 1.0
        assert row["dofs"] > 0
    csv_path = tmp_path / "trichotomy.csv"
    assert csv_path.exists()
    header = csv_path.read_text().splitlines()[0]
    assert header == ",".join(TRICHOTOMY_COLUMNS)
    assert (tmp_path / "trichotomy.png").exists()
    assert (tmp_path / "trichotomy_summary.json").exists()


def test_trichotomy_rerun_is_byte_identical(tmp_path):
    cfg1 = _small_config(tmp_path / "a")
    cfg2 = _small_config(tmp_path / "b")
    run_trichotomy(cfg1)
    run_trichotomy(cfg2)
    a = (tmp_path / "a" / "trichotomy.csv").read_bytes()
    b = (tmp_path / "b" / "trichotomy.csv").read_bytes()
    assert a == b


def test_cell_report_outputs(tmp_path):
    summary = run_cell_report(2, TrigPolynomial.parse("2+cos"),
                              out=str(tmp_path))
    assert summary["K"] == pytest.approx(186.0376600818, rel=1e-9)
    assert summary["pairing_residual"] <= 1e-8
    assert summary["oracle_rel_error"] <= 1e-2
    for name in ("cell_constant.csv", "cell_constant.json", "cell_constant.png"):
        assert (tmp_path / name).exists()
    data = json.loads((tmp_path / "cell_constant.json").read_text())
    assert data["K"] == pytest.approx(summary["K"])


def test_cell_report_higher_order(tmp_path):
    summary = run_cell_report(3, TrigPolynomial.parse("2+cos"),
                              out=str(tmp_path))
    assert summary["K"] > 0
    assert summary["trace_residual"] <= 1e-8
    assert summary["oracle_rel_error"] <= 1e-2


def test_cell_report_constant_datum(tmp_path):
    summary = run_cell_report(2, TrigPolynomial(((0, 1.5, 0.0),)),
                              out=str(tmp_path))
    assert summary["K"] == 0.0
    rows = (tmp_path / "cell_constant.csv").read_text().splitlines()
    assert len(rows) == 2  # header + the K = 0 row


def test_cli_classify_paths(capsys):
    assert main(["classify", "--m", "2", "--k", "1", "--alpha", "2.0"]) == 0
    out = capsys.readouterr().out
    assert "Stable" in out
    assert main(["classify", "--table"]) == 0
    assert main(["classify", "--m", "2", "--k", "1"]) == 2
    assert main(["classify", "--m", "2", "--k", "5", "--alpha", "1.0"]) == 2


def test_cli_checks_unknown_selector():
    assert main(["checks", "not-a-suite"]) == 2


def test_cli_checks_single_suite(capsys):
    assert main(["checks", "classify"]) == 0
    out = capsys.readouterr().out
    assert "all checks passed" in out


def test_cli_cell_k(tmp_path, capsys):
    code = main(["cell-k", "--m", "2", "--b", "2+cos",
                 "--out", str(tmp_path)])
    assert code == 0
    assert "K = 186.03766" in capsys.readouterr().out


def test_cli_trichotomy_with_config(tmp_path, capsys):
    cfg = {"alphas": [2.0], "eps_list": ["1/4"], "elements": [8, 10],
           "elements_per_period": 4, "n_eigs": 1, "out": str(tmp_path / "out")}
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["trichotomy", "--config", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert "strange constant" in out
    assert (tmp_path / "out" / "trichotomy.csv").exists()


def test_cli_trichotomy_usage_error(tmp_path):
    assert main(["trichotomy", "--m", "3", "--k", "1",
                 "--out", str(tmp_path)]) == 2
