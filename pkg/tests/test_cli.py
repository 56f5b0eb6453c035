import csv
import io
import json
import math

import pytest

from glnlab import cli, whittaker
from glnlab.errors import NonConvergenceError


def run(argv, environ=None):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(argv, stdout=out, stderr=err, environ=environ or {})
    return code, out.getvalue(), err.getvalue()


def rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(body))


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        p = tmp_path / name
        p.write_text(json.dumps(obj))
        return str(p)
    return write


def test_bessel_eval():
    code, out, _ = run(["bessel", "eval", "--nu", "0,0", "--x", "1"])
    assert code == 0
    assert float(rows(out)[0]["value_re"]) == pytest.approx(0.421024438, abs=1e-9)
    assert out.startswith("# glnlab ")
    assert '"tol": 1e-08' in out


def test_csv_uses_17_digits():
    code, out, _ = run(["bessel", "eval", "--nu", "0.5", "--x", "1"])
    value = rows(out)[0]["value_re"]
    assert value == format(math.sqrt(math.pi / 2) / math.e, ".17g") or \
        float(value) == pytest.approx(math.sqrt(math.pi / 2) / math.e, rel=1e-15)
    assert len(value.replace(".", "").replace("-", "").lstrip("0").split("e")[0]) == 17


def test_whittaker_passthrough():
    code, out, _ = run(["whittaker", "eval", "--n", "2", "--mu", "0,1:0,-1", "--y", "1",
                        "--kind", "jacquet"])
    assert code == 0
    r = rows(out)[0]
    ref = whittaker.whittaker_n2(1j, 1).value
    assert complex(float(r["value_re"]), float(r["value_im"])) == pytest.approx(ref, rel=1e-15)


def test_lattice_count(files):
    basis = files("identity2.json", [[1, 0], [0, 1]])
    box = files("box_1p5.json", {"radii": [1.5, 1.5]})
    code, out, _ = run(["lattice", "count", "--basis", basis, "--box", box])
    assert code == 0 and rows(out) == [{"count": "9"}]


def test_lattice_block_and_gamma_ball(files):
    z = files("z.json", {"y": [1.0, 1.0]})
    code, out, _ = run(["lattice", "block", "--z", z, "--T", "2", "--m", "1,1",
                        "--mu", "0,1:0,0:0,-1"])
    assert code == 0 and "count" in out
    code, out, _ = run(["lattice", "gamma-ball", "--z", z, "--K", "0.5"])
    assert code == 0


def test_params_and_geom():
    code, out, _ = run(["params", "classify", "--mu", "0,1:0,-1"])
    assert code == 0 and rows(out)[0]["tempered"] == "true"
    code, out, _ = run(["geom", "ycal", "--y", "4,1"])
    assert float(rows(out)[0]["ycal"]) == pytest.approx(4.0)
    code, out, _ = run(["geom", "iwasawa", "--matrix", "[[2, 0], [0, 1]]"])
    assert code == 0


def test_one_point_theorem1_spec(files):
    spec = files("one.json", {"kind": "theorem1", "mu": [[[0, 1], [0, -1]]], "y_axes": [[1.0]]})
    code, out, _ = run(["--format", "json", "scan", "--spec", spec])
    assert code == 0
    report = json.loads(out)["result"][0]
    from glnlab import envelopes
    direct = envelopes.envelope_scan(2, [[1j, -1j]], [[1.0]]).max_ratio
    assert report["max_ratio"] == direct


def test_normalization_spec(files, tmp_path):
    spec = files("norm.json", {"kind": "normalization", "mu": [[0, 0], [0, 0]], "s": [1]})
    dest = str(tmp_path / "report.json")
    code, out, _ = run(["scan", "--spec", spec, "--out", dest])
    assert code == 0
    doc = json.loads(open(dest).read())
    row = doc["result"][0]["rows"][0]
    assert row["rhs_re"] == pytest.approx(math.pi / 2, rel=1e-15)
    assert abs(row["lhs_re"] - row["rhs_re"]) < 1e-5
    assert doc["glnlab"] and doc["config"]["tol"] == 1e-8


def test_repeated_runs_identical(files):
    spec = files("l1.json", {"kind": "lemma1", "samples": 50})
    a = run(["--seed", "11", "scan", "--spec", spec])[1]
    b = run(["--seed", "11", "--threads", "4", "scan", "--spec", spec])[1]
    assert cli.result_body(a) == cli.result_body(b)
    c = run(["--seed", "12", "scan", "--spec", spec])[1]
    assert cli.result_body(a) != cli.result_body(c)


def test_config_precedence(files):
    conf = files("conf.json", {"tol": 1e-6, "threads": 2})
    cfg = cli.load_config(conf, {"threads": 3}, {"GLNLAB_THREADS": "5"})
    assert (cfg.tol, cfg.threads) == (1e-6, 3)
    assert cli.load_config(None, {}, {"GLNLAB_THREADS": "5"}).threads == 5
    assert cli.load_config(None, {}, {}) == cli.RunConfig()


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["lattice", "nothing"],
    ["bessel", "eval", "--nu", "x", "--x", "1"],
    ["bessel", "eval", "--nu", "0", "--x", "-1"],
    ["--threads", "0", "params", "classify", "--mu", "0:0"],
    ["params", "classify", "--mu", "1,0:1,0"],
])
def test_usage_and_domain_errors_exit_1(argv):
    assert run(argv)[0] == 1


def test_bad_schema_exit_1(files):
    spec = files("bad.json", {"kind": "nope"})
    code, _, err = run(["scan", "--spec", spec])
    assert code == 1 and "SchemaError" in err


def test_budget_exit_3(files):
    z = files("z.json", {"y": [40.0, 40.0]})
    assert run(["lattice", "gamma-ball", "--z", z, "--K", "6"])[0] == 3


def test_nonconvergence_exit_2(monkeypatch):
    def fail(*args, **kwargs):
        raise NonConvergenceError("forced")

    monkeypatch.setattr(cli.special, "bessel_k", fail)
    code, out, err = run(["bessel", "eval", "--nu", "0", "--x", "1"])
    assert code == 2 and out == "" and "forced" in err


def test_env_threads_echoed():
    _, out, _ = run(["params", "classify", "--mu", "0:0"], environ={"GLNLAB_THREADS": "6"})
    assert '"threads": 6' in out
