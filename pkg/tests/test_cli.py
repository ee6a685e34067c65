import csv
import json

import pytest

from harlrv.cli import main


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def m3_csv(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["simulate", "--model", "m3", "--T", "400", "--seed", "1", "--out", str(out)]) == 0
    return out


@pytest.mark.parametrize("model,header", [("m1", ["y", "x"]), ("m2", ["y", "x"]), ("m3", ["d"]), ("m4", ["loss", "in_sample"])])
def test_simulate(tmp_path, model, header):
    out = tmp_path / f"{model}.csv"
    assert main(["simulate", "--model", model, "--T", "200", "--seed", "2", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert rows[0] == header
    assert out.read_bytes().count(b"\r\n") == len(rows)


def test_estimate(tmp_path, m3_csv):
    js = tmp_path / "est.json"
    assert main(["estimate", "--in", str(m3_csv), "--estimator", "pwdk-sls", "--pa", "1", "--nt-exponent", "2/3", "--json-out", str(js)]) == 0
    doc = json.loads(js.read_text())
    assert doc["schema_version"] == 1
    assert doc["kind"] == "pwDK_SLS"
    assert doc["J"][0][0] > 0
    assert "b1" in doc["bandwidths"]


def test_estimate_missing_file(tmp_path):
    assert main(["estimate", "--in", str(tmp_path / "missing.csv")]) == 2


def test_bad_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["estimate", "--estimator", "nope", "--in", "x.csv"])
    assert exc.value.code == 2


def test_dm_kvb_family(tmp_path, m3_csv):
    js = tmp_path / "t.json"
    assert main(["test", "--test", "dm", "--estimator", "kvb", "--in", str(m3_csv), "--json-out", str(js)]) == 0
    doc = json.loads(js.read_text())
    assert doc["cv_family"] == "FixedB_KVB"
    assert doc["reject"] == (abs(doc["statistic"]) > doc["critical_value"])


def test_t_and_gr(tmp_path):
    reg = tmp_path / "m1.csv"
    m4 = tmp_path / "m4.csv"
    main(["simulate", "--model", "m1", "--T", "200", "--out", str(reg)])
    main(["simulate", "--model", "m4", "--T", "400", "--out", str(m4)])
    for args in (["--test", "t", "--in", str(reg)], ["--test", "gr", "--in", str(m4), "--estimator", "nw"]):
        js = tmp_path / "o.json"
        assert main(["test", *args, "--json-out", str(js)]) == 0
        assert "statistic" in json.loads(js.read_text())


def test_degenerate_exit_1(tmp_path):
    zeros = tmp_path / "z.csv"
    zeros.write_text("d\r\n" + "0\r\n" * 50)
    assert main(["test", "--test", "dm", "--in", str(zeros)]) == 1


def test_run_and_plot(tmp_path):
    cfg = {
        "models": [{"model": "M3", "rho": 0.4}],
        "estimators": ["kvb", "nw"],
        "T_grid": [100],
        "delta_grid": [0.0, 2.0],
        "replications": 100,
        "root_seed": 1,
    }
    cp = tmp_path / "cfg.json"
    cp.write_text(json.dumps(cfg))
    js, cs, svg = tmp_path / "r.json", tmp_path / "r.csv", tmp_path / "p.svg"
    assert main(["run", "--config", str(cp), "--threads", "1", "--json-out", str(js), "--csv-out", str(cs)]) == 0
    assert len(json.loads(js.read_text())["cells"]) == 4
    assert len(read_rows(cs)) == 5
    assert main(["plot", "--in", str(js), "--out", str(svg)]) == 0
    assert svg.read_text().startswith("<svg")


def test_run_missing_config(tmp_path):
    assert main(["run", "--config", str(tmp_path / "none.json")]) == 2


def test_replicate(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    js = tmp_path / "rep.json"
    assert main(["replicate", "--table", "2", "--reps", "100", "--seed", "7", "--json-out", str(js)]) == 0
    rows = read_rows(tmp_path / "table2_replication.csv")
    assert rows[0][:3] == ["table", "model", "estimator"]
    assert len(rows) == 1 + 32
    assert json.loads(js.read_text())["table"] == 2
    assert "cells within tolerance" in capsys.readouterr().out
