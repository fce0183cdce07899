import json

import pandas as pd
import pytest

from netload_bench import cli

TINY = ["--set", "mlp_epochs=2", "--set", "mlp_hidden_units=6", "--set", "gbm_estimators=3", "--set", "gbm_max_depth=2"]


def _data_args(g):
    return ["--load-csv", str(g["load"]), "--temperature-csv", str(g["temp"]), "--solar-csv", str(g["solar"])]


def test_ingest_writes_canonical_files_and_is_repeatable(gefcom_dir, tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(["ingest", *_data_args(gefcom_dir), "--out", str(out1)]) == 0
    assert cli.main(["ingest", *_data_args(gefcom_dir), "--out", str(out2)]) == 0
    printed = capsys.readouterr().out
    assert "1440 rows" in printed
    files = sorted(p.relative_to(out1) for p in out1.rglob("*") if p.is_file())
    assert {"load/load_kw.csv", "load/temp_c.csv", "load/gaps_load.txt", "solar/pv_kw.csv",
            "solar/temp_c.csv"} <= {str(f) for f in files}
    for f in files:
        assert (out1 / f).read_bytes() == (out2 / f).read_bytes()
    assert (out1 / "load" / "load_kw.csv").read_text().startswith("timestamp,value\n2004-01-01T00:00:00,")
    assert len((out1 / "load" / "gaps_load.txt").read_text().splitlines()) == 3


def test_ingest_empty_file_is_a_data_error(tmp_path, capsys):
    empty = tmp_path / "Load_history.csv"
    empty.write_text("")
    temp = tmp_path / "t.csv"
    temp.write_text("")
    code = cli.main(["ingest", "--load-csv", str(empty), "--temperature-csv", str(temp), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "EmptySeries" in capsys.readouterr().err


def test_ingest_missing_column_names_it(tmp_path, capsys):
    bad = tmp_path / "solar.csv"
    bad.write_text("ZONEID,TIMESTAMP,VAR167\n1,20120401 1:00,280\n")
    assert cli.main(["ingest", "--solar-csv", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "POWER" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert cli.main(["ingest", "--solar-csv", str(tmp_path / "none.csv"), "--out", str(tmp_path)]) == 2


def test_run_single_scenario(gefcom_dir, tmp_path, capsys):
    out = tmp_path / "run"
    code = cli.main(["run", *_data_args(gefcom_dir), "--scenarios", "base", "--seeds", "42", "--out", str(out), *TINY])
    assert code == 0
    results = pd.read_csv(out / "results.csv")
    assert list(results.columns) == ["scenario", "load_mape_pct", "pv_rmse"]
    assert results["scenario"].tolist() == ["base"]
    manifest = (out / "manifest.txt").read_text()
    assert "seeds = 42" in manifest and "mlp_epochs = 2" in manifest
    assert (out / "plots" / "base_seed42.csv").exists()
    doc = json.loads((out / "report.json").read_text())
    assert doc["reports"][0]["seed"] == 42
    assert "base" in capsys.readouterr().out


def test_manifest_reproduces_the_run(gefcom_dir, tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    cli.main(["run", *_data_args(gefcom_dir), "--scenarios", "2b", "--seeds", "3", "--out", str(first), *TINY])
    assert cli.main(["run", "--config", str(first / "manifest.txt"), "--out", str(second)]) == 0
    assert (first / "results.csv").read_bytes() == (second / "results.csv").read_bytes()


def test_run_all_with_several_seeds(gefcom_dir, tmp_path):
    out = tmp_path / "all"
    code = cli.main(["run", *_data_args(gefcom_dir), "--all", "--seeds", "1,2,3,4,5", "--out", str(out),
                     "--jobs", "2", *TINY])
    assert code == 0
    results = pd.read_csv(out / "results.csv")
    assert results["scenario"].tolist() == ["base", "1a", "1b", "2a", "2b", "3a", "3b"]
    assert len(list((out / "plots").glob("*.csv"))) == 35


def test_zero_noise_run_matches_base(gefcom_dir, tmp_path):
    out = tmp_path / "quiet"
    cli.main(["run", *_data_args(gefcom_dir), "--scenarios", "base,2a", "--seeds", "42", "--noise-std", "0",
              "--noise-mean", "0", "--out", str(out), *TINY])
    rows = pd.read_csv(out / "results.csv").set_index("scenario")
    assert abs(rows.loc["2a", "load_mape_pct"] - rows.loc["base", "load_mape_pct"]) <= 1e-9
    assert abs(rows.loc["2a", "pv_rmse"] - rows.loc["base", "pv_rmse"]) <= 1e-9


def test_divergence_exit_code(gefcom_dir, tmp_path, capsys):
    code = cli.main(["run", *_data_args(gefcom_dir), "--scenarios", "base", "--out", str(tmp_path / "d"), *TINY,
                     "--set", "mlp_learning_rate=1e8"])
    assert code == 3
    assert "DivergenceDetected" in capsys.readouterr().err


def test_seed_from_environment(gefcom_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("NETLOAD_BENCH_SEED", "7")
    out = tmp_path / "env"
    assert cli.main(["run", *_data_args(gefcom_dir), "--scenarios", "base", "--out", str(out), *TINY]) == 0
    assert (out / "plots" / "base_seed7.csv").exists()


def test_validate_ok(gefcom_dir, capsys):
    assert cli.main(["validate", *_data_args(gefcom_dir)]) == 0
    assert capsys.readouterr().out.strip() == "OK"


@pytest.mark.parametrize("extra, message", [
    (["--set", "scenarios=base,4c"], "4c"),
    (["--set", "deployment=iopt", "--set", "scenarios=1a"], "1a"),
    (["--set", "noise_std=-1"], "std"),
    (["--set", "colour=blue"], "colour"),
])
def test_validate_reports_problems(gefcom_dir, capsys, extra, message):
    assert cli.main(["validate", *_data_args(gefcom_dir), *extra]) == 1
    out = capsys.readouterr().out
    assert out.startswith("error:") and message in out


def test_validate_missing_solar_path(gefcom_dir, tmp_path, capsys):
    args = ["validate", "--load-csv", str(gefcom_dir["load"]), "--temperature-csv", str(gefcom_dir["temp"]),
            "--solar-csv", str(tmp_path / "missing.csv")]
    assert cli.main(args) == 1
    assert "solar_csv" in capsys.readouterr().out


def test_run_with_bad_config_exits_1(gefcom_dir, tmp_path):
    assert cli.main(["run", *_data_args(gefcom_dir), "--scenarios", "9z", "--out", str(tmp_path)]) == 1
