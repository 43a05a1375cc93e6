import csv
import io
import json

import numpy as np
import pytest

from specidem.cli import SCAN_COLUMNS, main
from specidem.errors import InstanceFormatError
from specidem.generators import geometric_family, random_instance
from specidem.io import (dump_matrix, instance_from_dict, instance_hash, instance_to_dict,
                         load_instance, load_matrix, save_instance)


@pytest.fixture
def inst(tmp_path):
    T, xi = random_instance(10, 2, 7)
    path = tmp_path / "inst.json"
    save_instance(T, path)
    return T, xi, path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_instance_roundtrip(inst):
    T, _, path = inst
    T2 = load_instance(path)
    np.testing.assert_array_equal(T.dense(), T2.dense())
    assert instance_hash(T) == instance_hash(T2)
    assert instance_hash(T) != instance_hash(random_instance(10, 2, 8)[0])
    fam = instance_from_dict({"family": {"kind": "geometric", "params": {"N": 12, "R": 2}}})
    np.testing.assert_array_equal(fam.dense(), geometric_family(12, 2).dense())
    assert instance_to_dict(T)["family"]["kind"] == "random"


@pytest.mark.parametrize("text, where", [
    ('{"lambdas": [[0, 0]], "alpha": [[[1, 0]]]', "line 1"),
    ('{"lambdas": [[0, 0]]}', "alpha"),
    ('{"family": {"kind": "bogus"}}', "bogus"),
    ('{"lambdas": [[0, 0], [1]], "alpha": [], "beta": []}', "lambdas"),
    ('[1, 2]', "object"),
])
def test_instance_format_errors(tmp_path, text, where):
    p = tmp_path / "bad.json"
    p.write_text(text)
    with pytest.raises(InstanceFormatError) as exc:
        load_instance(p)
    assert where in str(exc.value)


def test_matrix_dump_roundtrip(tmp_path):
    J = np.arange(6).reshape(2, 3) + 1j
    dump_matrix(J[:, :2], tmp_path / "J.bin")
    np.testing.assert_array_equal(load_matrix(tmp_path / "J.bin", 2), J[:, :2])
    raw = np.fromfile(tmp_path / "J.bin", dtype="<f8")
    assert raw[:4].tolist() == [0.0, 1.0, 1.0, 1.0]


def test_gate_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"generator": {"kind": "geometric", "params": {"N": 40, "R": 2}}}))
    code, out, _ = run(["gate", "--config", cfg, "--require-certified"], capsys)
    assert code == 0 and json.loads(out)["gate"]["verdict"] == "accept"
    cfg.write_text(json.dumps({"generator": {"kind": "power", "params": {"N": 40, "param": 0.5}}}))
    code, out, _ = run(["gate", "--config", cfg], capsys)
    assert code == 2 and json.loads(out)["gate"]["tail"] == float("inf")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    code, _, err = run(["gate", "--instance", bad], capsys)
    assert code == 1 and "line 1" in err
    code, _, err = run(["gate"], capsys)
    assert code == 1 and "no instance" in err


def test_scan_delta_csv(inst, capsys):
    T, xi, path = inst
    code, out, err = run(["scan-delta", "--instance", path, "--xi", xi, T.lambdas[0].real], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and list(rows[0]) == SCAN_COLUMNS
    assert [r["verdict"] for r in rows] == ["accept", "reject"]
    assert float(rows[0]["xi"]) == xi
    code, out, _ = run(["scan-delta", "--instance", path, "--xi"], capsys)
    assert code == 0 and out.strip() == ",".join(SCAN_COLUMNS)


def test_project_verify_cycle(inst, tmp_path, capsys):
    T, xi, path = inst
    bundle = tmp_path / "bundle.json"
    code, _, _ = run(["project", "--instance", path, "--xi", xi, "--side", "both", "--oracle",
                      "--dump-j", tmp_path / "J.bin", "--out", bundle], capsys)
    assert code == 0
    b = json.loads(bundle.read_text())
    assert b["pair"]["partition"] < 1e-8
    assert all(r["oracle_gap"] < 1e-6 for r in b["results"])
    code, out, _ = run(["verify", "--instance", path, "--bundle", bundle], capsys)
    assert code == 0 and json.loads(out)["passed"]

    # corrupt J: verify rejects and names the residual
    jp = tmp_path / "J-plus.bin"
    J = load_matrix(jp, T.N)
    J[0, 1] += 1e-3
    dump_matrix(J, jp)
    code, _, err = run(["verify", "--instance", path, "--bundle", bundle], capsys)
    assert code == 2 and "oracle_gap" in err

    # a different instance: hash mismatch is an error
    other = tmp_path / "other.json"
    save_instance(random_instance(10, 2, 8)[0], other)
    code, _, err = run(["verify", "--instance", other, "--bundle", bundle], capsys)
    assert code == 1 and "hash" in err


def test_project_rejected_xi(inst, capsys):
    T, _, path = inst
    code, _, err = run(["project", "--instance", path, "--xi", T.lambdas[1].real], capsys)
    assert code == 2 and "rejected" in err
    code, _, err = run(["project", "--instance", path], capsys)
    assert code == 1


def test_certify_exit_codes(inst, capsys):
    T, xi, path = inst
    code, out, _ = run(["certify", "--instance", path, "--xi", xi], capsys)
    assert code == 0 and json.loads(out)["certificate"]["passed"]
    code, out, _ = run(["certify", "--instance", path, "--xi", xi, "--vector", "random"], capsys)
    assert code == 2


def test_flags_override_config(inst, tmp_path, capsys):
    T, xi, path = inst
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"instance": str(path), "xi": [0.95]}))
    code, out, _ = run(["scan-delta", "--config", cfg, "--xi", xi], capsys)
    assert code == 0 and float(list(csv.DictReader(io.StringIO(out)))[0]["xi"]) == xi


def test_verify_corpus(capsys):
    code, out, _ = run(["verify"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["passed"] and len(rep["corpus"]) == 20


def test_bench_small(capsys):
    code, out, _ = run(["bench", "--sizes", "48", "--R", "1", "--dense-nodes", "all"], capsys)
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == 0 and row["dense_extrapolated"] == "False"
    assert float(row["max_abs_diff"]) < 1e-9


def test_deterministic_output(inst, capsys):
    _, xi, path = inst
    outs = [run(["certify", "--instance", path, "--xi", xi, "--vector", "random"], capsys)[1]
            for _ in range(2)]
    a, b = (json.loads(o)["certificate"] for o in outs)
    assert a["residuals"] == b["residuals"]
