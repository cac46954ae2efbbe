import io
import json
import math
import subprocess
import sys

import pytest

from kmsgraph.cli import dumps, parse_beta, run
from kmsgraph.graph import build, dump

from conftest import LN2, o_n


@pytest.fixture
def o2_file(tmp_path):
    p = tmp_path / "o2.json"
    dump(o_n(2), p)
    return str(p)


@pytest.fixture
def two_cycle_file(tmp_path):
    p = tmp_path / "tc.json"
    dump(build(["v", "w"], [("a", "v", "w"), ("b", "w", "v")]), p)
    return str(p)


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    text = out.getvalue()
    return code, (json.loads(text) if text.startswith("{") else text)


def test_classify_above(o2_file):
    code, rep = call("classify", "--graph", o2_file, "--beta", "1.0")
    assert code == 0 and rep["schema"] == "kms-graph/1" and rep["tol"] == 1e-9
    assert rep["fin_extremes"]["v"]["values"] == {"v": 1.0}
    assert rep["nice_graph"] == {"k": 2, "l": 1, "threshold": LN2}


def test_classify_below_is_empty(o2_file):
    code, rep = call("classify", "--graph", o2_file, "--beta", "0.2")
    assert code == 0 and rep["fin_extremes"] == {} and rep["con_extremes"] == []
    assert rep["partitions"]["v"]["Z"] == "divergent"


def test_classify_at_ln2_literal(o2_file):
    code, rep = call("classify", "--graph", o2_file, "--beta", "ln(2)")
    assert code == 0 and rep["labels"] == {"v": "Critical"}
    assert rep["con_extremes"][0]["values"] == {"v": 1.0}


def test_at_critical_snaps(o2_file):
    code, rep = call("classify", "--graph", o2_file, "--beta", "0.69", "--at-critical")
    assert code == 0 and rep["beta"] == pytest.approx(LN2, abs=1e-12)
    assert rep["labels"] == {"v": "Critical"}


def test_boundary_flag_exits_3(tmp_path):
    p = tmp_path / "slow.json"
    dump(build(["v"], [("a", "v", "v", math.exp(0.01)), ("b", "v", "v", math.exp(0.01))]), p)
    code, rep = call("classify", "--graph", str(p), "--beta", repr(100 * LN2 + 8.5e-8))
    assert code == 3 and rep["flags"]["v"]


def test_ground(o2_file):
    code, rep = call("ground", "--graph", o2_file)
    assert code == 0 and rep["extremes"] == {"v": {"v": 1.0}} and rep["kms_infinity"] == {"v": True}
    code, rep = call("ground", "--family", "o-infinity", "--depth", "4")
    assert rep["kms_infinity"] == {"v": False}


def test_sweep_csv_and_json(o2_file):
    code, text = call("sweep", "--graph", o2_file, "--beta-min", "0", "--beta-max", "1", "--step", "0.5",
                      "--format", "csv")
    assert code == 0 and text.splitlines()[0] == "beta,vertex,class,n_fin,n_con,dis_status,flags"
    assert len(text.splitlines()) == 5
    code, rep = call("sweep", "--family", "tail-on", "--n", "2", "--beta-min", "0.3", "--beta-max", "1.0",
                     "--step", "0.7", "--depth", "30")
    assert [(r["n_fin"], r["n_con"]) for r in rep["rows"]] == [(29, 0), (29, 1), (30, 0)]


def test_oracle(two_cycle_file):
    code, rep = call("oracle", "--graph", two_cycle_file, "--beta", "1", "--vertex", "v", "--L", "3",
                     "--class", "simple-loop")
    assert code == 0 and rep["records"][0]["sum"] == pytest.approx(math.exp(-2))
    code, rep = call("oracle", "--graph", two_cycle_file, "--beta", "1", "--vertex", "v", "--L", "3",
                     "--class", "first-hit-from")
    assert {r["source"]: r["sum"] for r in rep["records"]} == pytest.approx({"v": 1.0, "w": math.exp(-1)})


def test_oracle_cap_exits_3(o2_file, monkeypatch):
    monkeypatch.setenv("KMS_GRAPH_CAP", "100")
    code, _ = call("oracle", "--graph", o2_file, "--beta", "1", "--L", "20")
    assert code == 3


def test_measure(o2_file, tmp_path):
    st = tmp_path / "m.json"
    st.write_text(json.dumps({"v": 1.0}))
    code, rep = call("measure", "--graph", o2_file, "--state", str(st), "--beta", "1", "--path", "e1,e2",
                     "--L", "2")
    assert code == 0 and rep["membership"]["pass"]
    assert rep["cylinder_mass"] == pytest.approx(math.exp(-2))
    assert rep["atom_mass"] == pytest.approx(math.exp(-2) * (1 - 2 / math.e))
    code, _ = call("measure", "--graph", o2_file, "--state", str(st), "--beta", "1", "--path", "e1,zz")
    assert code == 2


def test_action_check(o2_file):
    code, rep = call("action-check", "--graph", o2_file, "--max-word", "3", "--max-prefix", "3",
                     "--max-cycle", "2")
    assert code == 0 and rep["pass"] and rep["graphs"][0]["sample_size"] > 0
    code, rep = call("action-check", "--random", "3", "--seed", "5", "--max-word", "2", "--max-prefix", "3")
    assert code == 0 and len(rep["graphs"]) == 3


def test_family(tmp_path):
    code, rep = call("family", "--name", "loop-ray", "--beta", "0.5", "--depth", "12")
    assert code == 0 and rep["dis_status"]["kind"] == "FamilySolved"
    assert rep["infinite_type_states"][0]["tag"] == "Dissipative"
    code, rep = call("family", "--name", "bi-infinite-line", "--wrap", "--beta", "0.5", "--depth", "10",
                     "--cert-depth", "50")
    assert rep["certificate"]["kind"] == "harmonic-window-bound"
    assert rep["truncation_nice_graph"]["k"] == 2


def test_invalid_graph_exits_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"vertices": ["v"], "edges": [], "relative_set": ["v"]}))
    assert call("classify", "--graph", str(p), "--beta", "1")[0] == 2


def test_usage_errors(o2_file):
    assert call("classify", "--graph", o2_file)[0] == 64
    with pytest.raises(SystemExit) as info:
        run(["classify", "--graph", o2_file, "--beta", "ln(two)"])
    assert info.value.code == 64
    with pytest.raises(SystemExit) as info:
        run(["nonsense"])
    assert info.value.code == 64


def test_parse_beta():
    assert parse_beta("ln(2)") == math.log(2)
    assert parse_beta(" 0.25 ") == 0.25
    assert parse_beta("ln(3.5)") == math.log(3.5)


def test_output_is_byte_identical(o2_file):
    a, b = io.StringIO(), io.StringIO()
    run(["action-check", "--random", "2", "--seed", "9", "--max-word", "2", "--max-prefix", "2"], stdout=a)
    run(["action-check", "--random", "2", "--seed", "9", "--max-word", "2", "--max-prefix", "2"], stdout=b)
    assert a.getvalue() == b.getvalue()
    x, y = io.StringIO(), io.StringIO()
    run(["classify", "--graph", o2_file, "--beta", "1.3"], stdout=x)
    run(["classify", "--graph", o2_file, "--beta", "1.3"], stdout=y)
    assert x.getvalue() == y.getvalue()


def test_floats_round_trip_and_infinities():
    text = dumps({"a": 0.1 + 0.2, "b": math.inf, "c": float("nan")})
    back = json.loads(text)
    assert back["a"] == 0.1 + 0.2 and back["b"] == "inf" and back["c"] == "nan"


def test_module_entry_point(o2_file):
    res = subprocess.run([sys.executable, "-m", "kmsgraph", "ground", "--graph", o2_file],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["command"] == "ground"
