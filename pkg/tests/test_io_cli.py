"""Config, ingestion, file-writing runners, and the command-line surface."""
import csv
import logging

import numpy as np
import pytest
import yaml

from frtci.cli import main
from frtci.datasets import null_lottery_trial
from frtci.errors import DataIntegrityError, DomainError, EmptyDatasetError, SchemaError
from frtci.io import AnalysisConfig, ingest_csv, load_config, run_checks, run_sensitivity, run_test
from frtci.stats import RngStream
from frtci.validation import SUITES, ReportRow


def _write_dataset_csv(path, n=200, seed=81, n_years=2):
    data = null_lottery_trial(RngStream(seed), n, 2)
    y_extra = data.outcomes[:, 0] * 0.5 + 1.0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["prize", "x1", "x2", "y0", "y1"])
        for i in range(n):
            writer.writerow([data.treatment[i], data.covariates[i, 0],
                             data.covariates[i, 1], data.outcomes[i, 0], y_extra[i]])
    return n


def _config_dict(csv_path, **overrides):
    cfg = {
        "dataset": str(csv_path),
        "treatment": "prize",
        "covariates": ["x1", "x2"],
        "outcomes": ["y0", "y1"],
        "draws": 60,
        "alpha": 0.05,
        "grid_points": 100,
        "zeta_lo": -0.5,
        "zeta_hi": 0.5,
        "seed": 404,
    }
    cfg.update(overrides)
    return cfg


def _write_config(tmp_path, csv_path, name="cfg.yaml", **overrides):
    path = tmp_path / name
    with open(path, "w") as fh:
        yaml.safe_dump(_config_dict(csv_path, **overrides), fh)
    return path


@pytest.fixture()
def workspace(tmp_path):
    csv_path = tmp_path / "data.csv"
    _write_dataset_csv(csv_path)
    cfg_path = _write_config(tmp_path, csv_path)
    return tmp_path, csv_path, cfg_path


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

def test_load_config_roundtrip_and_defaults(workspace, tmp_path):
    _, csv_path, cfg_path = workspace
    config = load_config(cfg_path)
    assert config.dataset == str(csv_path)
    assert config.covariates == ("x1", "x2")
    assert config.outcomes == ("y0", "y1")
    assert config.draws == 60 and config.seed == 404
    minimal = tmp_path / "min.yaml"
    with open(minimal, "w") as fh:
        yaml.safe_dump({"dataset": str(csv_path), "treatment": "prize",
                        "covariates": ["x1"], "outcomes": ["y0"]}, fh)
    config = load_config(minimal)
    assert config.draws == 2000 and config.alpha == 0.05
    assert config.grid_points == 4000 and config.bandwidth is None
    assert (config.zeta_lo, config.zeta_hi) == (-0.99, 0.99)


def test_load_config_rejects_bad_shapes(workspace, tmp_path):
    _, csv_path, _ = workspace
    not_mapping = tmp_path / "list.yaml"
    with open(not_mapping, "w") as fh:
        yaml.safe_dump(["a", "b"], fh)
    with pytest.raises(SchemaError):
        load_config(not_mapping)
    with pytest.raises(SchemaError):
        load_config(_write_config(tmp_path, csv_path, name="unknown.yaml", typo_key=1))
    missing = tmp_path / "missing.yaml"
    with open(missing, "w") as fh:
        yaml.safe_dump({"dataset": str(csv_path), "treatment": "prize",
                        "covariates": ["x1"]}, fh)
    with pytest.raises(SchemaError):
        load_config(missing)


def test_config_value_validation(workspace, tmp_path):
    _, csv_path, _ = workspace
    with pytest.raises(DomainError):
        load_config(_write_config(tmp_path, csv_path, name="a.yaml", draws=0))
    with pytest.raises(DomainError):
        load_config(_write_config(tmp_path, csv_path, name="b.yaml", alpha=1.0))
    with pytest.raises(SchemaError):
        load_config(_write_config(tmp_path, csv_path, name="c.yaml", covariates=[]))


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def test_ingest_happy_path_with_expected_rows(workspace):
    _, csv_path, _ = workspace
    config = AnalysisConfig(str(csv_path), "prize", ("x1", "x2"), ("y0", "y1"),
                            expected_rows=200)
    data = ingest_csv(config)
    assert data.n == 200
    assert data.n_years == 2
    assert data.covariates.shape == (200, 2)


def test_ingest_missing_column(workspace):
    _, csv_path, _ = workspace
    config = AnalysisConfig(str(csv_path), "prize", ("x1", "nope"), ("y0",))
    with pytest.raises(SchemaError):
        ingest_csv(config)


def test_ingest_drops_incomplete_rows_and_logs(tmp_path, caplog):
    csv_path = tmp_path / "holes.csv"
    _write_dataset_csv(csv_path, n=50)
    with open(csv_path, "a", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([1.0, "", 0.2, 0.3, 0.4])       # missing covariate
        writer.writerow([2.0, 0.1, 0.2, "oops", 0.4])   # non-numeric outcome
    config = AnalysisConfig(str(csv_path), "prize", ("x1", "x2"), ("y0", "y1"),
                            expected_rows=50)
    with caplog.at_level(logging.INFO, logger="frtci"):
        data = ingest_csv(config)
    assert data.n == 50
    assert any("dropped 2 rows" in rec.getMessage() for rec in caplog.records)


def test_ingest_empty_after_deletion(tmp_path):
    csv_path = tmp_path / "empty.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["prize", "x1", "y0"])
        writer.writerow([1.0, "", 0.5])
        writer.writerow(["", 0.1, 0.5])
    config = AnalysisConfig(str(csv_path), "prize", ("x1",), ("y0",))
    with pytest.raises(EmptyDatasetError):
        ingest_csv(config)


def test_ingest_negative_prize(tmp_path):
    csv_path = tmp_path / "neg.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["prize", "x1", "y0"])
        writer.writerow([1.0, 0.1, 0.5])
        writer.writerow([-2.0, 0.2, 0.6])
    config = AnalysisConfig(str(csv_path), "prize", ("x1",), ("y0",))
    with pytest.raises(DataIntegrityError):
        ingest_csv(config)


def test_ingest_expected_rows_mismatch(workspace):
    _, csv_path, _ = workspace
    config = AnalysisConfig(str(csv_path), "prize", ("x1", "x2"), ("y0",),
                            expected_rows=123)
    with pytest.raises(DataIntegrityError):
        ingest_csv(config)


def test_ingest_relative_path_uses_base_dir(workspace, tmp_path):
    _, csv_path, _ = workspace
    config = AnalysisConfig("data.csv", "prize", ("x1", "x2"), ("y0",))
    data = ingest_csv(config, base_dir=tmp_path)
    assert data.n == 200


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

def test_run_test_outputs_and_determinism(workspace, tmp_path):
    _, _, cfg_path = workspace
    config = load_config(cfg_path)
    out_a = tmp_path / "out_a"
    out_b = tmp_path / "out_b"
    rows = run_test(config, out_a)
    run_test(config, out_b)
    assert len(rows) == 2
    for year, p, t_obs, draws, seed in rows:
        assert 1.0 / 61.0 <= p <= 1.0
        assert draws == 60
        assert np.isfinite(t_obs)
    text_a = (out_a / "pvalues.csv").read_bytes()
    text_b = (out_b / "pvalues.csv").read_bytes()
    assert text_a == text_b
    lines = text_a.decode().strip().split("\n")
    assert lines[0] == "year,p_value,observed_statistic,draws,seed"
    assert len(lines) == 3


def test_run_sensitivity_outputs(workspace, tmp_path):
    _, _, cfg_path = workspace
    config = load_config(cfg_path)
    out = tmp_path / "sens"
    results = run_sensitivity(config, out)
    assert len(results) == 2
    for year in (0, 1):
        lines = (out / f"curve_year{year}.csv").read_text().strip().split("\n")
        assert lines[0] == "zeta,indicator,smoothed_p"
        body = [line.split(",") for line in lines[1:]]
        assert len(body) == config.grid_points
        zetas = np.array([float(row[0]) for row in body])
        assert np.all(np.diff(zetas) > 0)
        # outside the interior the smoothed value is written as nan
        assert body[0][2] == "nan" and body[-1][2] == "nan"
        inds = {row[1] for row in body}
        assert inds <= {"0", "1"}
    star = (out / "zeta_star.csv").read_text().strip().split("\n")
    assert star[0] == "year,zeta_star_abs,side,p_at_zero,flag"
    assert len(star) == 3
    for line in star[1:]:
        flag = line.split(",")[4]
        assert flag in {"ok", "not_significant_at_zero", "no_crossing"}


def test_run_sensitivity_deterministic(workspace, tmp_path):
    _, _, cfg_path = workspace
    config = load_config(cfg_path)
    out_a = tmp_path / "sa"
    out_b = tmp_path / "sb"
    run_sensitivity(config, out_a)
    run_sensitivity(config, out_b)
    assert (out_a / "curve_year0.csv").read_bytes() == (out_b / "curve_year0.csv").read_bytes()
    assert (out_a / "zeta_star.csv").read_bytes() == (out_b / "zeta_star.csv").read_bytes()


def test_run_checks_writes_report(tmp_path):
    rows = run_checks("theorem1", tmp_path)
    report = (tmp_path / "report_theorem1.csv").read_text().strip().split("\n")
    assert report[0] == "suite,metric,value,threshold,comparison,passed"
    assert len(report) == len(rows) + 1
    assert all(line.endswith("true") for line in report[1:])


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_test_subcommand(workspace, tmp_path):
    _, _, cfg_path = workspace
    out = tmp_path / "cli_out"
    code = main(["test", "--config", str(cfg_path), "--out", str(out)])
    assert code == 0
    assert (out / "pvalues.csv").exists()


def test_cli_overrides_change_output(workspace, tmp_path):
    _, _, cfg_path = workspace
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    main(["test", "--config", str(cfg_path), "--out", str(out_a)])
    main(["test", "--config", str(cfg_path), "--out", str(out_b), "--draws", "30"])
    lines = (out_b / "pvalues.csv").read_text().strip().split("\n")
    assert lines[1].split(",")[3] == "30"
    assert (out_a / "pvalues.csv").read_bytes() != (out_b / "pvalues.csv").read_bytes()


def test_cli_sensitivity_subcommand(workspace, tmp_path):
    _, _, cfg_path = workspace
    out = tmp_path / "cli_sens"
    code = main(["sensitivity", "--config", str(cfg_path), "--out", str(out)])
    assert code == 0
    assert (out / "zeta_star.csv").exists()


def test_cli_check_and_simulate_pass(tmp_path, capsys):
    for verb in ("check", "simulate"):
        out = tmp_path / verb
        code = main([verb, "theorem1", "--out", str(out)])
        assert code == 0
        assert (out / "report_theorem1.csv").exists()
        captured = capsys.readouterr().out
        assert "[pass]" in captured and "[FAIL]" not in captured


def test_cli_unknown_suite_exits_two(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["check", "lemma9", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_cli_failing_suite_exits_one(tmp_path, monkeypatch, capsys):
    def failing(seed=None):
        return [ReportRow("lemma1", "stub_metric", 1.0, 0.5, "<=", False)]

    monkeypatch.setitem(SUITES, "lemma1", failing)
    code = main(["check", "lemma1", "--out", str(tmp_path)])
    assert code == 1
    assert "[FAIL]" in capsys.readouterr().out


def test_cli_missing_subcommand_exits_two():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
