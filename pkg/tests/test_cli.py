import json
import math
import subprocess
import sys

import pytest

from phononblock import cli
from phononblock.config import load_document, parse_axis_flag, parse_config
from phononblock.errors import ConfigError
from phononblock.output import Table, format_value, read_csv, read_json, render

OPERATING = ["--delta", "0.29", "--j", "110", "--f", "10", "--u", "3e-5", "--n-th", "0"]
MINIMAL = "[g2]\ndelta = 0.29\nj = 110\nf = 10\nu = 3e-5\nn_th = 0\n"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_g2_operating_point(capsys):
    code, out, _ = run(capsys, "g2", *OPERATING)
    assert code == 0
    (row,) = read_csv(out)
    assert list(row)[:7] == ["delta", "f", "gamma", "j", "n_max", "n_th", "u"]
    assert row["n_max"] == 10 and row["gamma"] == 1
    assert 0 < row["g2"] < 1 and row["residual"] < 1e-8
    assert row["wall_ms"] is None and row["failure_reason"] is None


def test_minimal_config_fills_defaults():
    cfg = parse_config("g2", load_document(text=MINIMAL))
    assert cfg.params.gamma == 1.0 and cfg.n_max == 10
    assert cfg.solver.tol == 1e-12 and cfg.solver.truncation_tol == 1e-5
    assert cfg.output.format == "csv"


def test_flags_override_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(MINIMAL + "n_max = 6\n")
    args = cli.build_parser().parse_args(["g2", "--config", str(path), "--j", "50", "--n-max", "8"])
    cfg = parse_config("g2", load_document(path), cli._overrides(args))
    assert cfg.params.j == 50.0 and cfg.params.delta == 0.29 and cfg.n_max == 8


def test_empty_document_lists_required(capsys, tmp_path):
    path = tmp_path / "empty.toml"
    path.write_text("")
    code, _, err = run(capsys, "g2", "--config", str(path))
    assert code == 2
    for key in ("delta", "j", "f", "u", "n_th"):
        assert key in err


def test_unknown_key_is_named(capsys, tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text(MINIMAL + "jj = 3\n")
    code, _, err = run(capsys, "g2", "--config", str(path))
    assert code == 2 and "g2.jj" in err


@pytest.mark.parametrize("text,key", [
    (MINIMAL.replace("j = 110", 'j = "fast"'), "g2.j"),
    (MINIMAL + "n_max = 2.5\n", "g2.n_max"),
    (MINIMAL.replace("n_th = 0", "n_th = -1"), "g2"),
    (MINIMAL + "[output]\nformat = \"xml\"\n", "output.format"),
    (MINIMAL + "[extra]\na = 1\n", "extra"),
    (MINIMAL + "[solver]\ntol = \"tight\"\n", "solver.tol"),
    ("[g2\n", "--config"),
])
def test_config_errors_carry_key_path(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config("g2", load_document(text=text))
    assert exc.value.key == key
    assert str(exc.value).startswith(key)


def test_missing_files_are_config_errors(capsys, tmp_path):
    assert run(capsys, "g2", "--config", str(tmp_path / "nope.toml"))[0] == 2
    assert run(capsys, "design", "--table1", "--materials", str(tmp_path / "nope.json"))[0] == 2


def test_usage_errors_exit_2(capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "g2", "--format", "xml")[0] == 2
    assert run(capsys)[0] == 2


def test_computation_failure_exit_1(capsys):
    code, out, err = run(capsys, "g2", "--delta", "0.3", "--j", "1", "--f", "0", "--u", "0", "--n-th", "0",
                         "--n-max", "3")
    assert code == 1
    assert "undefined-g2" in err
    (row,) = read_csv(out)
    assert row["g2"] is None and row["failure_reason"] == "undefined-g2"


def test_unwritable_output_exit_1(capsys, tmp_path):
    code, _, err = run(capsys, "design", "--table1", "--out", str(tmp_path / "missing" / "t.csv"))
    assert code == 1 and "cannot write" in err


def test_sweep_cardinality_and_determinism(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["sweep", "--delta", "0.29", "--f", "10", "--u", "3e-5", "--n-th", "0",
            "--axis", "j=log:50:200:31"]
    assert run(capsys, *argv, "--out", str(a))[0] == 0
    assert run(capsys, *argv, "--out", str(b))[0] == 0
    text = a.read_text()
    assert text.splitlines()[0] == "j,g2,mean_n1,mean_n2,residual,wall_ms,failure_reason"
    assert len(text.splitlines()) == 32
    assert a.read_bytes() == b.read_bytes()


def test_sweep_config_file_and_failed_cell(capsys, tmp_path):
    path = tmp_path / "sweep.toml"
    path.write_text(
        "[sweep]\nn_max = 4\n[sweep.fixed]\ndelta = 0.29\nj = 1.0\nu = 0.0\nn_th = 0.0\n"
        "[[sweep.axes]]\nname = \"f\"\nvalues = [0.2, 30.0]\n"
        "[[sweep.axes]]\nname = \"delta\"\nstart = 0.0\nstop = 1.0\nnum = 2\n"
    )
    code, out, err = run(capsys, "sweep", "--config", str(path))
    assert code == 0
    rows = read_csv(out)
    assert list(rows[0])[:2] == ["delta", "f"]
    assert len(rows) == 4
    failed = [r for r in rows if r["f"] == 30.0]
    assert all(r["g2"] is None and r["failure_reason"] == "truncation-overflow" for r in failed)
    assert all(r["g2"] is not None for r in rows if r["f"] == 0.2)
    assert "truncation-overflow" in err


def test_sweep_all_failed_exit_1(capsys):
    code, _, err = run(capsys, "sweep", "--delta", "0.3", "--j", "1", "--f", "0", "--u", "0", "--n-th", "0",
                       "--n-max", "3", "--axis", "j=1,2")
    assert code == 1 and "all 2 points failed" in err


def test_sweep_json_round_trip(capsys):
    code, out, _ = run(capsys, "sweep", "--delta", "0.29", "--f", "0.5", "--u", "0.1", "--n-th", "0",
                       "--n-max", "5", "--axis", "j=1,2,3", "--format", "json", "--timing")
    assert code == 0
    doc = json.loads(out)
    assert doc["columns"][0] == "j"
    assert doc["records"][0]["coords"] == {"j": 1.0}
    assert all(r["wall_ms"] > 0 for r in doc["records"])
    code, csv_out, _ = run(capsys, "sweep", "--delta", "0.29", "--f", "0.5", "--u", "0.1", "--n-th", "0",
                           "--n-max", "5", "--axis", "j=1,2,3")
    for a, b in zip(read_json(out), read_csv(csv_out)):
        assert a["g2"] == pytest.approx(b["g2"], rel=1e-11)


def test_threads_env_and_flag(monkeypatch):
    parser = cli.build_parser()
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    cfg = parse_config("validate", {}, cli._overrides(parser.parse_args(["validate"])))
    assert cfg.threads == 3
    cfg = parse_config("validate", {}, cli._overrides(parser.parse_args(["validate", "--threads", "2"])))
    assert cfg.threads == 2
    monkeypatch.setenv(cli.THREADS_ENV, "many")
    with pytest.raises(ConfigError):
        cli._overrides(parser.parse_args(["validate"]))


def test_design_table2_matches_published(capsys):
    code, out, _ = run(capsys, "design", "--table2")
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 12
    for r in rows:
        assert r["dimension"] == pytest.approx(r["printed"], rel=1e-2)
        assert r["rel_error"] < 1e-2


@pytest.mark.parametrize("flag,n", [("--table1", 6), ("--table3", 12)])
def test_design_other_tables(capsys, flag, n):
    code, out, _ = run(capsys, "design", flag)
    assert code == 0 and len(read_csv(out)) == n


def test_design_single_geometry(capsys, tmp_path):
    code, out, err = run(capsys, "design", "--kind", "solid_rect_beam", "--depth", "2e-6", "--length", "1e-5",
                         "--temperature", "0.01")
    assert code == 0
    (row,) = read_csv(out)
    assert row["dimension"] == pytest.approx(row["p"] / 0.01, rel=1e-11)
    assert "H/L" in err and "H/L" in row["warnings"]
    mats = tmp_path / "m.json"
    mats.write_text('[{"name": "sin", "density": 3100.0, "youngs_modulus": 2.5e11}]')
    code, out, _ = run(capsys, "design", "--kind", "solid_circ_beam", "--diameter", "1e-7", "--length", "1e-5",
                       "--material", "sin", "--materials", str(mats))
    assert code == 0 and read_csv(out)[0]["material"] == "sin"
    assert run(capsys, "design", "--kind", "solid_circ_beam", "--diameter", "1e-7", "--length", "1e-5",
               "--material", "unobtainium")[0] == 2
    assert run(capsys, "design", "--kind", "solid_circ_beam", "--length", "1e-5")[0] == 2


def test_coupling_subcommand(capsys):
    code, out, _ = run(capsys, "coupling", "--radius", "5e-7", "--q1", "1e-16", "--q2", "-1e-16",
                       "--separation", "2e-6", "--m1", "1e-18", "--m2", "1e-18",
                       "--omega-m", str(2 * math.pi * 1e9), "--gamma", str(2 * math.pi * 1e3))
    assert code == 0
    (row,) = read_csv(out)
    assert row["j"] == pytest.approx(1507.19426685, rel=1e-9)
    assert run(capsys, "coupling", "--radius", "1e-6")[0] == 2


def test_validate_passes(capsys):
    code, out, _ = run(capsys, "validate")
    assert code == 0
    lines = out.strip().splitlines()
    assert all(line.startswith("PASS") for line in lines[:-1])
    assert lines[-1] == f"{len(cli.VALIDATION_CHECKS)}/{len(cli.VALIDATION_CHECKS)} checks passed"


def test_validate_reports_failure(capsys, monkeypatch):
    monkeypatch.setattr(cli, "VALIDATION_CHECKS", cli.VALIDATION_CHECKS + (("broken", lambda: (False, "no")),))
    code, out, _ = run(capsys, "validate")
    assert code == 1 and "FAIL broken: no" in out


def test_number_formatting():
    assert format_value(1 / 3) == "0.333333333333"
    assert format_value(1.05e-4) == "0.000105"
    assert format_value(123456789012345.0) == "1.23456789012e+14"
    assert format_value(None) == "" and format_value(math.nan) == "" and format_value(7) == "7"
    table = Table(("a", "b"), ({"a": 1 / 3, "b": None},), ("a",))
    assert render(table, "csv") == "a,b\n0.333333333333,\n"
    assert json.loads(render(table, "json"))["records"] == [{"coords": {"a": 0.333333333333}, "b": None}]


def test_axis_flag_parsing():
    assert parse_axis_flag("j=1,2.5") == {"name": "j", "values": [1.0, 2.5]}
    assert parse_axis_flag("u=log:1e-5:1e-3:3")["scale"] == "log"
    assert parse_axis_flag("delta=lin:0:1:5")["scale"] == "linear"
    for bad in ("j", "j=log:1:2", "j=a,b"):
        with pytest.raises(ConfigError):
            parse_axis_flag(bad)


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "phononblock", "design", "--table1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("geometry,material,alpha_g")
