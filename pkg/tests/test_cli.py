import csv
import json
import math
import subprocess
import sys
from fractions import Fraction

import pytest

from curvosc.cli import RunConfig, UsageError, build_parser, fmt, main, parse_rational


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.reader(text.splitlines()))


def test_parse_rational():
    assert parse_rational("1/3") == Fraction(1, 3)
    assert parse_rational("0.1") == Fraction(1, 10)
    assert parse_rational("-2") == -2
    with pytest.raises(UsageError):
        parse_rational("abc")
    assert fmt(0.1) == "0.10000000000000001"


def test_spectrum_json(capsys):
    code, out, _ = run(["spectrum", "--kappa", "1", "--n0", "2", "--nmax", "2", "--format", "json"], capsys)
    assert code == 0
    d = json.loads(out)
    assert [Fraction(l["energy_num"], l["energy_den"]) for l in d["levels"]] == [5, 12, 21]
    assert [l["degeneracy"] for l in d["levels"]] == [1, 2, 3]


def test_spectrum_flat_and_errors(capsys):
    code, out, _ = run(["spectrum", "--kappa", "0", "--omega", "1", "--nmax", "3"], capsys)
    assert code == 0
    assert [l["energy_num"] for l in json.loads(out)["levels"]] == [2, 4, 6, 8]
    assert run(["spectrum", "--kappa", "-1", "--n0", "0"], capsys)[0] == 2
    assert run(["spectrum", "--kappa", "0"], capsys)[0] == 2


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["spectrum", "--bogus"])
    assert exc.value.code == 2


def test_spectrum_negative_truncation_notice(capsys):
    code, out, err = run(["spectrum", "--kappa", "-1", "--n0", "3", "--nmax", "4"], capsys)
    assert code == 0 and "p_max" in err
    d = json.loads(out)
    assert [l["energy_num"] for l in d["levels"]] == [5, 8, 9]
    assert [r["printed"] for r in d["degeneracy_audit"]] == [1, 3, 5]


def test_spectrum_csv(capsys):
    code, out, _ = run(["spectrum", "--kappa", "1", "--n0", "1", "--nmax", "1", "--format", "csv"], capsys)
    assert code == 0 and "\r" not in out
    rows = rows_of(out)
    assert rows[0][:5] == ["n", "energy_num", "energy_den", "energy", "degeneracy"]
    assert len(rows) == 1 + 1 + 2


def test_state_matches_direct_evaluation(capsys):
    code, out, _ = run(["state", "--kappa", "1", "--jtwice", "2", "--n", "2", "--ell", "0", "--points", "200"], capsys)
    assert code == 0
    rows = rows_of(out)
    assert rows[0] == ["theta", "re_psi", "im_psi"] and len(rows) == 201
    for th, re, im in rows[1:]:
        t = float(th)
        assert math.isclose(float(re), math.sin(t) ** 0.5 * math.cos(t) ** 2.5, rel_tol=1e-12, abs_tol=1e-300)
        assert float(im) == 0
    assert rows[1][0] == format(float(rows[1][0]), ".17g")


def test_state_flat_ground_value(capsys):
    code, out, _ = run(["state", "--kappa", "0", "--omega", "1", "--p", "0", "--q", "0",
                        "--theta-min", "1", "--theta-max", "1", "--points", "1"], capsys)
    assert code == 0
    assert math.isclose(float(rows_of(out)[1][1]), math.exp(-0.5), rel_tol=1e-15)


def test_state_errors(capsys):
    assert run(["state", "--kappa", "1", "--jtwice", "1", "--p", "2", "--q", "0"], capsys)[0] == 2
    assert run(["state", "--kappa", "1", "--jtwice", "1", "--p", "0", "--q", "0", "--points", "0"], capsys)[0] == 2
    assert run(["state", "--kappa", "1", "--jtwice", "1", "--n", "1", "--ell", "1"], capsys)[0] == 2


def test_check_algebra(capsys):
    code, out, _ = run(["check-algebra", "--kappa", "1", "--seed", "7", "--probes", "5"], capsys)
    assert code == 0
    reps = json.loads(out)
    assert all(r["exact"] and r["seed"] == 7 for r in reps)
    assert set(reps[0]) >= {"relation", "regime", "probes", "seed", "max_residual", "exact"}
    code, out, _ = run(["check-algebra", "--kappa", "0", "--probes", "5"], capsys)
    names = {r["relation"] for r in json.loads(out)}
    assert code == 0 and {"[A-,A+] = w", "[B-,B+] = -w"} <= names
    code, _, err = run(["check-algebra", "--kappa", "1", "--probes", "5", "--mutate", "flip-A3"], capsys)
    assert code == 3 and "violated" in err


def test_orbit_outputs(tmp_path, capsys):
    out = tmp_path / "o.csv"
    code, _, _ = run(["orbit", "--kappa", "0", "--omega", "1", "--ell", "1", "--energy", "4",
                      "--tmax", "2", "--stride", "100", "--out", str(out)], capsys)
    assert code == 0
    text = out.read_bytes()
    assert b"\r" not in text
    rows = rows_of(text.decode())
    assert rows[0] == ["t", "theta", "phi", "p_theta", "p_phi", "x0", "x1", "x2", "E", "ell", "qa2", "qb2",
                       "arg_qab", "residual_derived", "residual_paper"]
    for r in rows[1:]:
        assert abs(float(r[10]) - float(r[11]) - 4) < 1e-8
    summary = json.loads((tmp_path / "o.csv.summary.json").read_text())
    assert summary["drift"]["E"] < 1e-10
    assert summary["orbit_residual"]["derived"] < 1e-8


def test_orbit_exit_codes(capsys):
    assert run(["orbit", "--kappa", "1", "--omega", "2", "--ell", "2", "--energy", "8", "--tmax", "1"], capsys)[0] == 2
    assert run(["orbit", "--kappa", "1", "--omega", "2", "--ell", "2", "--energy", "40", "--tmax", "2",
                "--dt", "0.05"], capsys)[0] == 4
    # an open orbit leaves the gnomonic chart: partial output and exit 4
    code, out, err = run(["orbit", "--kappa", "-1", "--omega", "1", "--ell", "3", "--energy", "40",
                          "--chart", "gnomonic", "--stride", "1000"], capsys)
    assert code == 4 and "halted" in err and len(rows_of(out)) > 2
    code, out, _ = run(["orbit", "--kappa", "-1", "--omega", "1", "--ell", "3", "--energy", "40",
                        "--tmax", "5", "--stride", "500"], capsys)
    assert code == 0 and len(rows_of(out)) > 2


def test_limit(capsys):
    code, out, _ = run(["limit"], capsys)
    assert code == 0
    rows = rows_of(out)
    assert rows[0] == ["quantity", "kappa", "error", "slope"]
    slopes = {r[0]: float(r[3]) for r in rows[1:]}
    for q in ("operator:A+", "operator:A-", "operator:B+", "operator:B-", "trajectory", "df_tensor"):
        assert abs(slopes[q] - 1) < 0.2, q
    assert abs(slopes["df_tensor_printed_sign"]) < 0.2
    assert run(["limit", "--kappas", ""], capsys)[0] == 2
    assert run(["limit", "--kappas", "1/100,1/10"], capsys)[0] == 2


def test_run_config_round_trip():
    ns = build_parser().parse_args(["orbit", "--kappa", "-1", "--omega", "1", "--ell", "3", "--energy", "6"])
    cfg = RunConfig.from_namespace(ns)
    assert RunConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(UsageError):
        RunConfig.from_json('{"command": "orbit", "nope": 1}')


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("CURVOSC_SEED", "42")
    assert build_parser().parse_args(["check-algebra"]).seed == 42
    monkeypatch.delenv("CURVOSC_SEED")
    assert build_parser().parse_args(["check-algebra"]).seed == 0


@pytest.mark.parametrize("argv", [
    ["spectrum", "--kappa", "1", "--n0", "2", "--nmax", "3"],
    ["check-algebra", "--kappa", "-1/2", "--seed", "3", "--probes", "4"],
    ["orbit", "--kappa", "1", "--omega", "2", "--ell", "2", "--energy", "20", "--tmax", "3", "--stride", "50"],
])
def test_byte_identical_across_processes(tmp_path, argv):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.out"
        proc = subprocess.run([sys.executable, "-m", "curvosc", *argv, "--out", str(path)], capture_output=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
