import json

import numpy as np
import pytest

from blochgauge.cli import EXIT_ERROR, EXIT_OBSTRUCTED, EXIT_OK, RunConfig, dumps, main, run
from blochgauge.errors import InvalidInput
from blochgauge.fileio import read_family, write_family
from blochgauge.zoo import make_matching


def _emit(tmp_path, name, **params):
    code, rep = run(["zoo", name, "--params", json.dumps(params), "--out", str(tmp_path)])
    assert code == EXIT_OK
    return rep["path"]


def test_zoo_list_and_emit(tmp_path):
    code, rep = run(["zoo"])
    assert code == EXIT_OK and "gauged" in rep["projections"]
    path = _emit(tmp_path, "identity", N=16)
    assert read_family(path).samples.shape == (16, 2, 2)


def test_validate_paths(tmp_path):
    good = _emit(tmp_path, "diag-winding", N=32)
    assert run(["validate", good])[0] == EXIT_OK
    bad = tmp_path / "bad.fam"
    bad.write_bytes(b"nonsense\n")
    code, rep = run(["validate", str(bad)])
    assert code != 0 and rep["reason"] == "invalid-input" and rep["message"]
    alpha = make_matching("diag-winding", {"N": 32})
    broken = alpha.samples.copy()
    broken[5] *= np.exp(0.5j)
    write_family(tmp_path / "trs.fam", alpha.with_samples(broken))
    code, rep = run(["validate", str(tmp_path / "trs.fam")])
    assert code == EXIT_ERROR and rep["report"]["residuals"]["trs"] > 0.1


def test_invariants(tmp_path):
    path = _emit(tmp_path, "diag-winding", N=32)
    code, rep = run(["invariants", path, "--out", str(tmp_path)])
    assert code == EXIT_OK and rep["report"]["indices"] == {"line": 1}
    assert (tmp_path / "tracks.csv").read_text().startswith("k1,det_phase,eigenphase1,eigenphase2")
    ident = _emit(tmp_path, "identity", N=32)
    assert set(run(["invariants", ident, "--out", str(tmp_path)])[1]["report"]["indices"].values()) == {0}
    bos = _emit(tmp_path, "su2-random", N=32)
    assert run(["invariants", bos, "--out", str(tmp_path)])[1]["report"]["note"] == "always null-homotopic"


def test_log_exit_codes(tmp_path):
    path = _emit(tmp_path, "diag-winding", N=32)
    code, rep = run(["log", path, "--out", str(tmp_path)])
    assert code == EXIT_OBSTRUCTED and rep["reason"] == "obstructed" and rep["report"]["indices"]["line"] == 1
    code, rep = run(["log", path, "--mode", "periodic-only", "--out", str(tmp_path)])
    assert code == EXIT_OK and rep["residuals"]["reconstruction"] <= 1e-8
    ident = _emit(tmp_path, "identity", N=32)
    code, rep = run(["log", ident, "--out", str(tmp_path)])
    assert code == EXIT_OK and rep["residuals"]["reconstruction"] <= 1e-8
    assert read_family(rep["manifest"]["files"][0]).samples.shape == (32, 2, 2)


def test_homotopy(tmp_path):
    path = _emit(tmp_path, "factorized", N=32, m=4, wind=0, seed=1)
    code, rep = run(["homotopy", path, "--slices", "4", "--out", str(tmp_path)])
    assert code == EXIT_OK and len(rep["slices"]) == 4
    assert rep["endpoints"]["start_minus_identity"] <= 1e-8 and rep["endpoints"]["end_minus_alpha"] <= 1e-8
    assert all(s["passed"] for s in rep["slices"])


def test_frame(tmp_path):
    path = _emit(tmp_path, "stacked-2d", N=32, w=1)
    code, rep = run(["frame", path, "--out", str(tmp_path)])
    assert code == EXIT_OBSTRUCTED
    code, rep = run(["frame", path, "--mode", "periodic-only", "--out", str(tmp_path)])
    assert code == EXIT_OK and rep["check"]["info"]["trs_reported"] > 0.1
    const = _emit(tmp_path, "constant", N=8)
    code, rep = run(["frame", const, "--out", str(tmp_path)])
    assert code == EXIT_OK and (tmp_path / "fourier_decay.csv").exists()


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 3, "s": 0.1, "output": str(tmp_path)}))
    path = _emit(tmp_path, "identity", N=16)
    code, rep = run(["log", path, "--config", str(cfg), "--seed", "5"])
    assert code == EXIT_OK and rep["config"]["seed"] == 5 and rep["config"]["s"] == 0.1
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(["log", path, "--config", str(cfg)])[0] == EXIT_ERROR
    assert run(["log", path, "--grid", "32"])[1]["reason"] == "invalid-input"


def test_run_config_invariants():
    with pytest.raises(InvalidInput):
        RunConfig("log", tol=-1.0)
    with pytest.raises(InvalidInput):
        RunConfig("log", N=15)
    with pytest.raises(InvalidInput):
        RunConfig("explode")


def test_main_prints_sorted_json(tmp_path, capsys):
    path = _emit(tmp_path, "identity", N=16)
    assert main(["validate", path]) == 0
    text = capsys.readouterr().out
    data = json.loads(text)
    assert text.strip() == dumps(data)


def test_reports_are_byte_identical(tmp_path):
    path = _emit(tmp_path, "factorized", N=32, m=4, wind=0, seed=9)
    first = dumps(run(["log", path, "--seed", "2", "--out", str(tmp_path / "a")])[1])
    second = dumps(run(["log", path, "--seed", "2", "--out", str(tmp_path / "a")])[1])
    assert first == second
