import hashlib
import json
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from slat import cli
from slat import config as cfg
from slat.identities import CheckResult, SuiteReport

DATA = resources.files("slat").joinpath("data")
EXAMPLES = ["axes_model", "free_1d", "one_well", "virial_well", "mixed_coupled",
            "z4_chain", "z2xz2_three"]


def path(name) -> str:
    return str(DATA.joinpath(f"{name}.json"))


def load(name) -> dict:
    return json.loads(Path(path(name)).read_text())


def write(tmp_path, doc, name="cfg.json") -> str:
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = cli.main([*argv[:-1], "--out", str(out), argv[-1]])
    return code, out


@pytest.mark.parametrize("name", EXAMPLES)
def test_examples_validate(tmp_path, name):
    code, out = run(tmp_path, "validate", path(name))
    assert code == 0
    assert json.loads((out / "validate.json").read_text())["valid"] is True


def test_bad_target_rejected_with_path(tmp_path):
    code, out = run(tmp_path, "validate", path("bad_target"))
    assert code == 1
    diag = json.loads((out / "validate.json").read_text())["diagnostics"]
    assert diag[0]["path"] == "interactions[0].target"
    assert "not contained" in diag[0]["reason"]


def test_non_associative_meet_names_triple(tmp_path):
    doc = load("free_1d")
    doc["subspaces"] = {"O": [], "A": [1], "B": [1, 2], "T": [1, 2, 3]}
    doc["ambient_dim"] = 3
    doc["grid"]["n"] = 9
    ids = ["O", "A", "B", "T"]
    rank = {k: i for i, k in enumerate(ids)}
    meet = {(a, b): a if rank[a] <= rank[b] else b for a in ids for b in ids}
    meet[("A", "T")] = meet[("T", "A")] = "O"
    doc["meet"] = [[a, b, c] for (a, b), c in meet.items()]
    code, out = run(tmp_path, "validate", write(tmp_path, doc))
    assert code == 1
    diag = json.loads((out / "validate.json").read_text())["diagnostics"]
    assert diag[0]["path"] == "meet"
    assert "associative at (" in diag[0]["reason"]


def test_meet_table_must_match_subspaces(tmp_path):
    doc = load("free_1d")
    doc["meet"] = [["O", "O", "O"], ["O", "X", "O"], ["X", "O", "X"], ["X", "X", "X"]]
    code, out = run(tmp_path, "validate", write(tmp_path, doc))
    assert code == 1


@pytest.mark.parametrize("mutate, where", [
    (lambda d: d.update(schema_version=2), "schema_version"),
    (lambda d: d.update(kind="other"), "kind"),
    (lambda d: d["grid"].update(n=10), "grid.n"),
    (lambda d: d["grid"].update(n=1001), "grid.n"),
    (lambda d: d["subspaces"].update(X=[2]), "subspaces.X"),
    (lambda d: d["subspaces"].pop("O"), "subspaces"),
    (lambda d: d.update(interactions=[{"kind": "gaussian-well", "params": {"depth": 1},
                                       "target": ["X", "X", "O"]}]), "interactions[0].params.width"),
    (lambda d: d.update(couplings=[{"pair": ["O", "X"], "constant": 1.0}]), "couplings[0].pair"),
    (lambda d: d.update(couplings=[{"pair": ["X", "O"], "theta": [1.0, 2.0]}]), "couplings[0].theta"),
])
def test_euclid_diagnostics(mutate, where):
    doc = load("free_1d")
    doc["grid"]["n"] = 201
    doc["ambient_dim"] = 2 if where == "grid.n" else 1
    if where == "grid.n":
        doc["subspaces"]["XY"] = [1, 2]
    mutate(doc)
    paths = [d.path for d in cfg.validate(doc)]
    assert where in paths


@pytest.mark.parametrize("mutate, where", [
    (lambda d: d.update(cyclic_orders=[6, 7]), "cyclic_orders"),
    (lambda d: d["subgroups"].update(Y=[[1, 2]]), "subgroups.Y"),
    (lambda d: d.update(checks=["nope"]), "checks"),
    (lambda d: d.update(sample=0), "sample"),
])
def test_group_diagnostics(mutate, where):
    doc = load("z4_chain")
    mutate(doc)
    assert where in [d.path for d in cfg.validate(doc)]


def test_group_subgroups_must_be_intersection_closed():
    doc = load("z2xz2_three")
    doc["subgroups"] = {"A": [[1, 0]], "B": [[0, 1]]}
    assert [d.path for d in cfg.validate(doc)] == ["subgroups"]


def test_parse_failure_exits_2_and_still_writes_manifest(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, out = run(tmp_path, "validate", str(bad))
    assert code == 2
    man = json.loads((out / "manifest.json").read_text())
    assert man["exit_code"] == 2
    assert man["config"]["sha256"] == hashlib.sha256(bad.read_bytes()).hexdigest()


def test_missing_file_exits_2(tmp_path):
    code, _ = run(tmp_path, "hvz", str(tmp_path / "absent.json"))
    assert code == 2


def test_manifest_lists_outputs_and_hash(tmp_path):
    code, out = run(tmp_path, "thresholds", "--eps", "1e-3", path("one_well"))
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    raw = Path(path("one_well")).read_bytes()
    assert man["config"]["sha256"] == hashlib.sha256(raw).hexdigest()
    assert man["command"] == "thresholds"
    assert man["wall_clock_seconds"] >= 0
    names = sorted(Path(p).name for p in man["outputs"])
    assert names == ["rho_hat.csv", "rho_hat.dat", "thresholds.json"]
    assert all(Path(p).exists() for p in man["outputs"])


def test_free_model_hvz(tmp_path):
    code, out = run(tmp_path, "hvz", path("free_1d"))
    assert code == 0
    rep = json.loads((out / "hvz.json").read_text())
    assert rep["tau_hvz"] == 0.0
    assert rep["schema_version"] == 1


def test_one_well_thresholds(tmp_path):
    code, out = run(tmp_path, "thresholds", "--eps", "1e-3", path("one_well"))
    assert code == 0
    rep = json.loads((out / "thresholds.json").read_text())
    x = np.linspace(-10, 10, 61)
    h = x[1] - x[0]
    mat = (np.diag(np.full(61, 2.0)) - np.diag(np.ones(60), 1) - np.diag(np.ones(60), -1)) / h**2
    e0 = np.linalg.eigvalsh(mat - np.diag(np.exp(-x**2 / 2)))[0]
    assert rep["thresholds"] == pytest.approx([e0, 0.0], abs=1e-10)
    assert rep["rho_profile"]["direct_vs_recursive"] == 0.0
    lines = (out / "rho_hat.csv").read_text().splitlines()
    assert lines[0] == "lambda,value" and lines[1].endswith(",inf")


def test_free_model_mourre(tmp_path):
    code, out = run(tmp_path, "mourre", "--lambda", "1.0", "--delta", "0.1", path("free_1d"))
    assert code == 0
    rep = json.loads((out / "mourre.json").read_text())
    assert rep["min_compressed"] > 0
    assert rep["status"] == "pass"
    assert rep["eps_source"] == "refinement-gate"


def test_spectrum_writes_csv(tmp_path):
    code, out = run(tmp_path, "spectrum", "--eps", "1e-3", path("virial_well"))
    assert code == 0
    rows = (out / "eigenvalues.csv").read_text().splitlines()
    assert rows[0] == "element,index,eigenvalue"
    rep = json.loads((out / "spectrum.json").read_text())
    assert rep["bound_state_count"] == 3


def test_wrong_kind_is_semantic_failure(tmp_path):
    code, out = run(tmp_path, "hvz", path("z4_chain"))
    assert code == 1
    assert json.loads((out / "hvz.json").read_text())["error"] == "wrong-kind"


def test_reports_are_deterministic(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        assert cli.main(["thresholds", "--eps", "1e-3", "--out", str(out), path("one_well")]) == 0
        outs.append(out)
    for name in ("thresholds.json", "rho_hat.csv", "rho_hat.dat"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


@pytest.mark.parametrize("name", ["z4_chain", "z2xz2_three"])
def test_algebra_verify_passes(tmp_path, name):
    code, out = run(tmp_path, "algebra-verify", path(name))
    assert code == 0
    rep = json.loads((out / "algebra_verify.json").read_text())
    assert rep["passed"] and rep["generation"]["equal"]
    assert rep["identities"]["failures"] == []


def test_algebra_verify_reports_failures(tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        rep = SuiteReport("Z4")
        rep.results.append(CheckResult("hyz-left", ("Z4", "<2>"), (8, 7, 8), False))
        rep.counts["hyz"] = [1, 0]
        return rep

    monkeypatch.setattr(cli, "run_suite", broken)
    code, out = run(tmp_path, "algebra-verify", path("z4_chain"))
    assert code == 1
    rep = json.loads((out / "algebra_verify.json").read_text())
    assert rep["report"]["identities"]["failures"][0]["ranks"] == [8, 7, 8]


def test_refine_doubles_grid():
    doc = load("one_well")
    assert cfg.refined(doc)["grid"]["n"] == 121
    assert doc["grid"]["n"] == 61
