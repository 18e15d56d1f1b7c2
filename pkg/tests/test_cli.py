import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wplab import cli
from wplab.errors import NonPositiveData

TORUS = '{"kind":"punctured_torus","l":0.5,"tau":0}'


def call(argv, stdin=""):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(argv, stdin=io.StringIO(stdin), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_pairing_document():
    code, out, _ = call(["pairing", "--surface", TORUS, "--alpha", "A", "--beta", "A", "--depth", "10"])
    assert code == 0
    doc = json.loads(out)
    assert doc["command"] == "pairing"
    assert doc["result"]["value"] > 2 / math.pi * 0.5


def test_geodesic_csv():
    code, out, _ = call(["model", "geodesic", "--r0", "1", "--theta0", "0", "--rdot", "-0.5",
                         "--thetadot", "0", "--T", "1.9"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "t,r,theta,rdot,thetadot,E,L"
    last = [float(x) for x in lines[-1].split(",")]
    assert last[0] == pytest.approx(1.9) and last[1] == pytest.approx(0.05, abs=1e-12)


def test_sweep_and_fit():
    code, csv_text, _ = call(["sweep", "--target", "pairing-remainder", "--l", "0.1:1.0:10", "--depth", "12"])
    assert code == 0
    rows = csv_text.strip().splitlines()
    assert rows[0].startswith("l,remainder") and len(rows) == 11
    ls = [float(r.split(",")[0]) for r in rows[1:]]
    assert ls == sorted(ls)
    code, out, _ = call(["fit"], stdin=csv_text)
    res = json.loads(out)["result"]
    assert code == 0 and 3.5 < res["slope"] < 4.5 and res["window"] == [0, 5]


def test_sweep_parallel_order(monkeypatch):
    argv = ["sweep", "--target", "pairing", "--l", "0.3:1.2:4", "--depth", "6"]
    _, serial, _ = call(argv)
    monkeypatch.setenv("WP_LAB_THREADS", "3")
    _, parallel, _ = call(argv)
    assert serial == parallel


def test_sweep_json_and_model_angle():
    code, out, _ = call(["sweep", "--target", "model-angle", "--t", "1e-3:1e-1:4:log", "--format", "json"])
    rows = json.loads(out)
    assert code == 0 and len(rows) == 4 and rows[0]["angle"] < rows[-1]["angle"]


@pytest.mark.parametrize("argv", [
    ["surface", "--surface", '{"kind":"pants","l":[1,2,3]}', "--words", "4"],
    ["surface", "--surface", TORUS],
    ["cosine", "--surface", '{"kind":"punctured_torus","l":1,"tau":0.3}', "--depth", "10"],
    ["pseries", "--surface", TORUS, "--depth", "8"],
    ["strip", "--phi", '{"l":2,"coeffs":[[0,1,0.5],[1,0.2,0]]}', "--oracle"],
    ["model", "distance", "--p", "1,0", "--q", "0.5,1"],
    ["model", "angle", "--t", "0.01"],
    ["model", "lambda", "--r", "0.3"],
    ["model", "kahler", "--r", "3"],
    ["model", "curvature", "--r", "2"],
])
def test_replay_round_trip(tmp_path, argv):
    path = tmp_path / "doc.json"
    code, _, _ = call(["--out", str(path)] + argv)
    assert code == 0
    first = path.read_text()
    code, again, err = call(["--replay", str(path)])
    assert code == 0, err
    assert again == first


def test_replay_detects_tampering(tmp_path):
    path = tmp_path / "doc.json"
    call(["--out", str(path), "model", "lambda", "--r", "0.3"])
    doc = json.loads(path.read_text())
    doc["result"]["l"] = 1.0
    path.write_text(json.dumps(doc))
    assert call(["--replay", str(path)])[0] == 3


def test_exit_codes():
    assert call(["pairing", "--surface", '{"kind":"nope"}'])[0] == 2
    assert call(["pairing", "--surface", "not json"])[0] == 2
    assert call(["bogus"])[0] == 2
    assert call([])[0] == 2
    assert call(["cosine", "--surface", TORUS, "--h", "0.5"])[0] == 2
    code, _, err = call(["model", "geodesic", "--T", "3"])
    assert code == 3 and "HitSingularStratum" in err
    assert call(["sweep", "--target", "pairing", "--l", "1:0.5:3"])[0] == 2
    assert call(["fit"], stdin="x,y\n1,1\n2,-1\n3,4\n")[0] == 2


def test_floats_17_digits():
    assert cli.fmt(0.1) == "0.10000000000000001"
    assert cli.fmt(2.0) == "2.0" and cli.fmt(-0.0) == "-0.0"
    assert float(cli.fmt(math.pi)) == math.pi


def test_fit_order_examples():
    xs = np.linspace(0.1, 1.0, 10)
    r = cli.fit_order(xs, xs ** 2)
    assert r.slope == pytest.approx(2.0) and r.r2 == pytest.approx(1.0)
    r = cli.fit_order(xs, 5 * xs ** 4)
    assert r.slope == pytest.approx(4.0) and r.intercept == pytest.approx(math.log(5))
    rng = np.random.default_rng(2)
    r = cli.fit_order(xs, xs ** 4 * (1 + 0.01 * rng.standard_normal(10)))
    assert 3.9 <= r.slope <= 4.1
    with pytest.raises(NonPositiveData):
        cli.fit_order([1, 2, 3], [1, 0, 2])
    with pytest.raises(NonPositiveData):
        cli.fit_order([1, 2], [1, 2])


@given(st.lists(st.floats(-1e300, 1e300, allow_nan=False), min_size=1, max_size=5))
def test_dumps_round_trip(values):
    text = cli.dumps({"v": values})
    assert json.loads(text)["v"] == values
    assert cli.dumps(json.loads(text)) == text


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "wplab", "model", "lambda", "--r", "1"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["result"]["l"] == pytest.approx(2 * math.pi ** 2)
