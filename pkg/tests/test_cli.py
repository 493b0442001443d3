import csv
import io
import json
import math

import numpy as np
import pytest

from vortexlab.cli import CONFIG_ENV, CSV_HEADER, FORMAT_VERSION, bp_truncated_energy, main


def run(capsys, *argv, env=None):
    code = main(list(argv), env={} if env is None else env)
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array(rows[1:], dtype=float)


def test_integrate_instanton_csv(capsys):
    code, out, _ = run(capsys, "integrate", "--lambda", "0", "--omega", "0", "--m", "1", "--a", "2")
    assert code == 0
    header, data = read_csv(out)
    assert tuple(header) == CSV_HEADER
    r, h = data[:, 0], data[:, 1]
    assert np.max(np.abs(h - 2 * np.arctan(r))) < 1e-8
    assert np.all(np.diff(data[:, 3]) >= 0)
    assert np.max(np.abs(data[:, 4])) < 1e-8


def test_integrate_zero_slope(capsys):
    code, out, _ = run(capsys, "integrate", "--lambda", "1", "--omega", "0.5", "--m", "1", "--a", "0")
    assert code == 0
    _, data = read_csv(out)
    assert np.all(data[:, 1] == 0) and np.all(data[:, 2] == 0)


def test_integrate_zero_degree(capsys):
    code, _, err = run(capsys, "integrate", "--lambda", "1", "--omega", "0.5", "--m", "0", "--a", "1")
    assert code == 2
    assert "m must be nonzero" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["integrate", "--lambda", "1", "--omega", "0.5", "--m", "1"],
        ["integrate", "--lambda", "1", "--omega", "0.5", "--m", "1", "--a", "1", "--rel-tol", "-1"],
        ["integrate", "--lambda", "nan", "--omega", "0.5", "--m", "1", "--a", "1"],
        ["integrate", "--lambda", "1", "--omega", "0.5", "--m", "1", "--a", "inf"],
        ["shoot", "--lambda", "1", "--omega", "0.5", "--m", "1", "--k", "1", "--a-range", "-1:1"],
        ["shoot", "--lambda", "1", "--omega", "0.5", "--m", "1", "--k", "1", "--a-range", "5:1"],
        ["shoot", "--lambda", "1", "--omega", "0.5", "--m", "1", "--k", "1", "--a-range", "1"],
        ["classify", "--lambda", "1"],
        ["integrate", "--bogus"],
        ["integrate", "--lambda", "1", "--omega", "0.5", "--m", "1", "--a", "1", "--jobs", "0"],
    ],
)
def test_invalid_input_exits_2(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_integrate_json(capsys):
    code, out, _ = run(capsys, "--format", "json", "integrate", "--lambda", "0", "--omega", "0",
                       "--m", "2", "--a", "4", "--r-max", "20")
    assert code == 0
    doc = json.loads(out)
    assert doc["spec_version"] == FORMAT_VERSION
    assert doc["params"] == {"lambda": 0.0, "omega": 0.0, "m": 2}
    assert set(doc["samples"]) == set(CSV_HEADER)
    assert doc["energy"] == pytest.approx(bp_truncated_energy(2, 4.0, doc["samples"]["r"][-1]), abs=1e-8)


def test_shoot_case_iv(capsys):
    code, out, _ = run(capsys, "shoot", "--lambda", "1", "--omega", "0.5", "--m", "1", "--k", "1",
                       "--a-range", "0.1:10")
    assert code == 0
    doc = json.loads(out)
    assert doc["status"] == "ok"
    assert doc["residual"] < 1e-6
    assert doc["a_lo"] <= doc["a_star"] <= doc["a_hi"]
    assert doc["tail"]["direction"] == "IncreasesTo"


def test_shoot_forbidden_limit(capsys):
    code, out, err = run(capsys, "shoot", "--lambda", "0", "--omega", "1", "--m", "1", "--k", "2",
                         "--a-range", "0.1:10")
    assert code == 3
    doc = json.loads(out)
    assert doc["error"] == "NoBracketFound" and doc["reason"] == "no bracket"
    assert "no bracket" in err


def test_shoot_single_point_range(capsys):
    code, out, _ = run(capsys, "shoot", "--lambda", "0", "--omega", "0", "--m", "1", "--k", "1",
                       "--a-range", "1:1")
    assert code == 0
    assert json.loads(out)["a_star"] == 1.0


@pytest.mark.parametrize(
    "lam, omega, tag, parity",
    [("0", "0", "CaseI", "Odd"), ("1", "1", "CaseII", "Odd"), ("-1", "0.5", "NoFiniteEnergyVortex", "None")],
)
def test_classify(capsys, lam, omega, tag, parity):
    code, out, _ = run(capsys, "classify", "--lambda", lam, "--omega", omega)
    assert code == 0
    doc = json.loads(out)
    assert doc["tag"] == tag
    assert doc["admissible_limit_parity"] == parity
    if tag == "CaseII":
        assert doc["exponential_tail_guaranteed"] is False


def test_classify_csv(capsys):
    code, out, _ = run(capsys, "--format", "csv", "classify", "--lambda", "1", "--omega", "-0.5")
    header, *rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert header[:3] == ["lambda", "omega", "tag"]
    assert rows[0][2:4] == ["CaseV", "Even"]


def sweep_doc(capsys, *extra):
    code, out, _ = run(capsys, "sweep", "--lambda-range", "-1:1", "--omega-range", "-1:1", *extra)
    assert code == 0
    return json.loads(out)


def test_sweep_five_by_five(capsys):
    doc = sweep_doc(capsys, "--n", "5")
    assert len(doc["grid"]) == 25 and "empirical" not in doc
    for (lam, om), label in zip(doc["grid"], doc["labels"]):
        if lam == om != 0:
            assert label["tag"] == "CaseII"
        if lam < 0 and om < 0 and lam != om:
            assert label["tag"] == "NoFiniteEnergyVortex"
        if lam == om == 0:
            assert label["tag"] == "CaseI"


def test_sweep_grid_order(capsys):
    doc = sweep_doc(capsys, "--n", "3")
    assert doc["grid"][:4] == [[-1.0, -1.0], [-1.0, 0.0], [-1.0, 1.0], [0.0, -1.0]]


@pytest.mark.parametrize("extra", [["--n", "1"], ["--lambda-range", "1:1"], ["--omega-range", "2:-2"]])
def test_sweep_degenerate(capsys, extra):
    argv = ["sweep", "--lambda-range", "-1:1", "--omega-range", "-1:1", "--n", "3"]
    for i in range(0, len(extra), 2):
        argv[argv.index(extra[i]) + 1] = extra[i + 1]
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_sweep_parallel_matches_serial(capsys, tmp_path):
    base = ["sweep", "--lambda-range", "0.5:1", "--omega-range", "0.25:0.5", "--n", "2",
            "--empirical", "--r-max", "60"]
    outputs = []
    for jobs in ("1", "2"):
        path = tmp_path / f"sweep{jobs}.json"
        assert main(["--jobs", jobs, "--output", str(path)] + base, env={}) == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    doc = json.loads(outputs[0])
    assert len(doc["empirical"]) == 4
    assert doc["empirical"][3]["bracket_found"]


def test_verify_bp_m1(capsys):
    code, out, _ = run(capsys, "verify-bp", "--m-list", "1", "--a", "2")
    assert code == 0
    (res,) = json.loads(out)["results"]
    assert res["sup_error"] < 1e-8
    assert abs(res["energy"] - 4.0) < 1e-3


def test_verify_bp_m3(capsys):
    code, out, _ = run(capsys, "verify-bp", "--m-list", "3")
    assert code == 0
    (res,) = json.loads(out)["results"]
    assert res["energy"] == pytest.approx(12.0, abs=1e-3)


def test_verify_bp_zero_slope(capsys):
    code, out, _ = run(capsys, "verify-bp", "--m-list", "1", "--a", "0")
    assert code == 0
    assert json.loads(out)["results"][0]["energy"] == 0.0


def test_verify_bp_failure_exit(capsys):
    code, out, _ = run(capsys, "verify-bp", "--m-list", "1", "--sup-tol", "1e-20")
    assert code == 3
    assert json.loads(out)["passed"] is False


def test_output_is_deterministic(tmp_path):
    argv = ["integrate", "--lambda", "1", "--omega", "0.5", "--m", "1", "--a", "1.5", "--r-max", "30"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["--output", str(a)] + argv, env={}) == 0
    assert main(argv + ["--output", str(b)], env={}) == 0
    assert a.read_bytes() == b.read_bytes()


def test_floats_round_trip(capsys):
    _, out, _ = run(capsys, "integrate", "--lambda", "1", "--omega", "0.5", "--m", "1", "--a", "1.1",
                    "--r-max", "5")
    _, out_json, _ = run(capsys, "--format", "json", "integrate", "--lambda", "1", "--omega", "0.5",
                         "--m", "1", "--a", "1.1", "--r-max", "5")
    _, data = read_csv(out)
    doc = json.loads(out_json)
    assert list(data[:, 1]) == doc["samples"]["h"]
    assert list(data[:, 0]) == doc["samples"]["r"]


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults for this run\nlambda = 0\nomega = 0\nm = 1\na = 2  ; slope\nr_max = 5\nformat = json\n")
    env = {CONFIG_ENV: str(cfg)}
    code, out, _ = run(capsys, "integrate", env=env)
    assert code == 0
    doc = json.loads(out)
    assert doc["a"] == 2.0 and doc["samples"]["r"][-1] == pytest.approx(5.0)
    code, out, _ = run(capsys, "integrate", "--r-max", "3", "--format", "csv", env=env)
    _, data = read_csv(out)
    assert data[-1, 0] == pytest.approx(3.0)
    assert np.max(np.abs(data[:, 1] - 2 * np.arctan(data[:, 0]))) < 1e-8


def test_config_rejects_unknown_keys(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("lambda = 0\nwibble = 3\n")
    code, _, err = run(capsys, "classify", "--omega", "0", env={CONFIG_ENV: str(cfg)})
    assert code == 2 and "wibble" in err


def test_missing_config_file(capsys, tmp_path):
    code, _, _ = run(capsys, "classify", "--lambda", "0", "--omega", "0",
                     env={CONFIG_ENV: str(tmp_path / "absent.cfg")})
    assert code == 2


def test_negative_ranges_parse(capsys):
    code, out, _ = run(capsys, "shoot", "--lambda", "1", "--omega", "0.5", "--m", "1", "--k", "-1",
                       "--a-range", "-10:-0.1")
    assert code == 0
    assert json.loads(out)["a_star"] < 0


def test_bp_truncated_energy_limit():
    assert bp_truncated_energy(2, 4.0, 1.0) == pytest.approx(4.0)
    assert bp_truncated_energy(3, 12.0, 1e4) == pytest.approx(12.0, abs=1e-12)
    assert math.isfinite(bp_truncated_energy(1, 2.0, 0.0))
