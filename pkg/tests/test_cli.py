import json
import math
from importlib import resources

import jsonschema
import pytest

from rdmft_qfi.cli import dumps_json, main, read_config_file, thread_count, UsageError


@pytest.fixture(scope="module")
def schema():
    return json.loads(resources.files("rdmft_qfi").joinpath("schema/output.schema.json").read_text())


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_groundstate_json_valid(capsys, schema):
    code, out, _ = run(["groundstate", "--n", "2", "--t", "1", "--u", "1"], capsys)
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, schema)
    assert doc["schema_version"] == "1"
    assert doc["rows"][0]["energy"] == pytest.approx(1 - 5**0.5, abs=1e-13)


def test_sweep_json_valid_and_csv_header(capsys, schema):
    code, out, _ = run(["sweep", "--grid", "4", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, schema)
    assert len(doc["rows"]) > 0 and all(r["converged"] for r in doc["rows"])
    code, out, _ = run(["sweep", "--grid", "4"], capsys)
    assert out.splitlines()[0] == "gamma_x,gamma_z,F,M_xx,M_yy,M_zz,M_xz,converged"


def test_sweep_deterministic_across_threads(capsys, monkeypatch):
    outs = []
    for threads in ("1", "3"):
        monkeypatch.setenv("RDMFT_QFI_THREADS", threads)
        for _ in range(2):
            code, out, _ = run(["sweep", "--grid", "6", "--sign", "-1", "--seed", "7", "--strategy", "auto"], capsys)
            assert code == 0
            outs.append(out)
    assert len(set(outs)) == 1


def test_bad_thread_count(monkeypatch, capsys):
    monkeypatch.setenv("RDMFT_QFI_THREADS", "zero")
    with pytest.raises(UsageError):
        thread_count()
    assert run(["sweep", "--grid", "3"], capsys)[0] == 1


def test_bec_map_rows(capsys, schema):
    code, out, _ = run(["bec-map", "--n", "100", "--theta-points", "3", "--phi-points", "2", "--delta", "0.01,0.1", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, schema)
    assert len(doc["rows"]) == 2 * 3 * 2


def test_bec_map_numeric_marks_unreachable_points(capsys):
    code, out, _ = run(["bec-map", "--n", "50", "--theta-points", "2", "--phi-points", "1", "--delta", "0.01", "--numeric"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 3
    # theta = 0 lies on the z axis where no finite field reaches the target: blank cell
    assert lines[1].split(",")[4] == ""


def test_verify_only_and_fault_injection(capsys, schema):
    code, out, _ = run(["verify", "--only", "onsite-identity,witness"], capsys)
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, schema)
    assert [c["name"] for c in doc["checks"]] == ["onsite-identity", "witness"]
    code, out, err = run(["verify", "--only", "generating-relation", "--inject-fault", "unit-prefactor"], capsys)
    assert code == 2
    assert json.loads(out)["checks"][0]["passed"] is False
    assert "generating-relation" in err


def test_verify_deterministic(capsys, monkeypatch):
    argv = ["verify", "--only", "generating-relation,reconstruction,witness", "--seed", "3"]
    outs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("RDMFT_QFI_THREADS", threads)
        outs.append(run(argv, capsys)[1])
    assert outs[0] == outs[1]


def test_witness_states(capsys):
    code, out, _ = run(["witness", "--state", "noon", "--n", "2", "--direction", "0,0,1"], capsys)
    assert code == 0
    assert json.loads(out)["rows"][0]["depth_lower_bound"] == 2
    code, out, _ = run(["witness", "--state", "coherent", "--n", "4"], capsys)
    assert all(r["depth_lower_bound"] == 1 for r in json.loads(out)["rows"])


def test_witness_from_file_and_gamma(tmp_path, capsys):
    p = tmp_path / "q.json"
    p.write_text(json.dumps({"n_particles": 2, "qfim": [[0, 0, 0], [0, 0, 0], [0, 0, 4]]}))
    code, out, _ = run(["witness", "--qfim-file", str(p), "--direction", "0,0,1"], capsys)
    assert code == 0 and json.loads(out)["rows"][0]["depth_lower_bound"] == 2
    code, out, _ = run(["witness", "--gamma", "0,0,0", "--n", "2", "--sign", "-1", "--direction", "0,0,1"], capsys)
    assert code == 0 and json.loads(out)["rows"][0]["qfi"] == pytest.approx(4.0, abs=1e-6)


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["nonsense"],
        ["sweep", "--grid", "1"],
        ["sweep", "--strategy", "closed_form", "--n", "3"],
        ["verify", "--only", "no-such-check"],
        ["witness", "--state", "noon", "--n", "2", "--direction", "1,1,0"],
        ["witness", "--gamma", "2,0,0", "--n", "2"],
        ["bec-map", "--delta", "-1"],
        ["sweep", "--config", "/nonexistent/file.cfg"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    assert run(argv, capsys)[0] == 1


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep settings\nn = 2\ngrid = 3\nformat = json\nsign = -1\n")
    assert read_config_file(str(cfg))["grid"] == 3
    code, out, _ = run(["sweep", "--config", str(cfg), "--grid", "4"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["grid"] == 4 and doc["config"]["sign"] == -1
    bad = tmp_path / "bad.cfg"
    bad.write_text("frobnicate = 3\n")
    assert run(["sweep", "--config", str(bad)], capsys)[0] == 1
    bad.write_text("format = xml\n")
    assert run(["sweep", "--config", str(bad)], capsys)[0] == 1


def test_output_file(tmp_path, capsys):
    out = tmp_path / "gs.csv"
    assert run(["groundstate", "--n", "3", "--format", "csv", "--out", str(out)], capsys)[0] == 0
    assert out.read_text().startswith("n_particles,")


def test_json_number_format():
    assert dumps_json({"a": 0.1, "b": float("nan"), "c": True}) == dumps_json({"a": 0.1, "b": float("nan"), "c": True})
    doc = json.loads(dumps_json({"a": 0.1, "b": 1e-300, "c": [1, 2]}))
    assert doc == {"a": 0.1, "b": 1e-300, "c": [1, 2]}


def test_bec_map_sql_region_sits_at_negative_cos_phi(capsys):
    code, out, _ = run(["bec-map", "--n", "1000", "--theta-points", "19", "--phi-points", "8", "--delta", "0.1", "--format", "json"], capsys)
    assert code == 0
    rows = json.loads(out)["rows"]
    hits = [r for r in rows if r["exceeds_sql"]]
    assert hits
    # at cos(phi) = 0 the order-delta term alone lifts Mzz above N
    assert all(math.cos(r["phi"]) < 1e-12 for r in hits)
    assert any(math.cos(r["phi"]) < -0.5 for r in hits)
    assert all(abs(r["theta"] - math.pi / 2) < math.pi / 4 for r in hits)


def test_bec_map_pole_row_is_8_delta(capsys):
    code, out, _ = run(["bec-map", "--n", "1000", "--theta-points", "3", "--phi-points", "3", "--delta", "0.05", "--format", "json"], capsys)
    assert code == 0
    pole = [r for r in json.loads(out)["rows"] if r["theta"] == 0.0]
    assert len(pole) == 3
    assert all(r["Mzz_expansion"] == pytest.approx(8 * 0.05) for r in pole)


def test_injected_fault_residual_has_interaction_scale(capsys):
    code, out, _ = run(["verify", "--only", "generating-relation", "--inject-fault", "unit-prefactor"], capsys)
    assert code == 2
    # the wrong prefactor is off by 2F/u, which is of order one or larger for these targets
    assert json.loads(out)["checks"][0]["residual"] > 0.1
