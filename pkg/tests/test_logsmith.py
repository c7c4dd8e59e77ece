import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blochgauge.errors import InvalidInput, LabelingFailure, ObstructionError, RefinementNeeded, SubdivisionNeeded
from blochgauge.genericize import to_generic_form
from blochgauge.linalg import exp_i, max_opnorm
from blochgauge.logsmith import (
    beta_family,
    branch_cut,
    explain_obstruction,
    homotopy_from_beta,
    label_eigenvalues,
    multi_step_log_from_homotopy,
    reconstruct,
    two_step_log,
)
from blochgauge.torus import (
    SymmetryKind,
    TorusGrid,
    UnitaryFamily,
    random_hermitian_field,
    symmetrize_generator,
    validate_matching,
)
from blochgauge.zoo import make_matching

FERMI = SymmetryKind("fermionic")
BOSE = SymmetryKind("bosonic")


def _symmetric_field(grid, m, sym, seed, scale):
    rng = np.random.default_rng(seed)
    h = random_hermitian_field(grid, m, rng, max_mode=1)
    h = symmetrize_generator(grid, h, sym)
    return scale * h / np.max(np.linalg.norm(h, 2, axis=(-2, -1)))


def _assert_log(log, alpha, tol=1e-8):
    assert log.residual <= tol
    assert max_opnorm(reconstruct(log) - alpha.samples) <= tol
    for h, res in zip(log.steps, log.step_residuals()):
        assert res["hermiticity"] <= tol
        if alpha.symmetry is not None and log.mode == "symmetric":
            assert res["trs"] <= tol
            assert np.max(h.trs_defect()) <= tol


@given(st.integers(0, 1000), st.sampled_from([("bosonic", 3), ("bosonic", 4), ("fermionic", 4)]))
@settings(max_examples=6)
def test_construct_then_recover(seed, kind):
    # alpha is built from two known symmetric steps; the logarithm found by the
    # package need not equal them, but must rebuild alpha with symmetric steps
    sym, m = SymmetryKind(kind[0]), kind[1]
    grid = TorusGrid(1, 32)
    h1 = _symmetric_field(grid, m, sym, seed, 2.5)
    h2 = _symmetric_field(grid, m, sym, seed + 1, 2.5)
    half = exp_i(0.5 * h2)
    alpha = UnitaryFamily(grid, half @ exp_i(h1) @ half, sym)
    _assert_log(two_step_log(alpha, seed=seed), alpha)


@pytest.mark.parametrize(
    "name,params",
    [
        ("su2-random", {"dim": 2, "mode": "bosonic"}),
        ("su2-random", {"dim": 2, "mode": "fermionic", "trivial": True}),
        ("factorized", {"dim": 2, "m": 3, "symmetry": "bosonic"}),
        ("factorized", {"dim": 1, "m": 4, "wind": 0}),
        ("identity", {"dim": 2, "m": 4}),
    ],
)
def test_two_step_log_routes(name, params):
    alpha = make_matching(name, {**params, "N": 32, "seed": 1})
    log = two_step_log(alpha)
    _assert_log(log, alpha)
    assert log.M == 2


def test_rank_one_uses_the_phase():
    grid = TorusGrid(2, 16)
    k = grid.coords()
    alpha = UnitaryFamily(grid, np.exp(1j * 2.0 * np.cos(2 * np.pi * k[..., 0]))[..., None, None], BOSE)
    log = two_step_log(alpha)
    _assert_log(log, alpha)


def test_obstruction_is_reported():
    alpha = make_matching("diag-winding", {"N": 32, "w": 1})
    with pytest.raises(ObstructionError) as info:
        two_step_log(alpha)
    assert info.value.to_dict()["reason"] == "obstructed"
    assert explain_obstruction(alpha)["indices"] == {"line": 1}
    # without symmetry the same family has a periodic logarithm
    log = two_step_log(alpha, mode="trs-broken")
    assert log.residual <= 1e-8


def test_small_amplitude_takes_the_principal_route():
    alpha = make_matching("factorized", {"dim": 2, "m": 3, "symmetry": "bosonic", "N": 16, "seed": 0, "amp": 0.5})
    log = two_step_log(alpha)
    _assert_log(log, alpha)
    assert log.info["route"] == "principal"
    assert max_opnorm(log.steps[1].samples) == 0.0
    forced = two_step_log(alpha, allow_principal=False)
    _assert_log(forced, alpha)
    assert forced.info["route"] != "principal"


def test_unresolved_gaps_ask_for_refinement():
    # at this amplitude the eigenphases sweep faster than the grid resolves the gaps
    alpha = make_matching("factorized", {"dim": 2, "m": 3, "symmetry": "bosonic", "N": 64, "seed": 0, "amp": 3.0})
    with pytest.raises(RefinementNeeded):
        two_step_log(alpha, allow_principal=False)


def test_invalid_budget():
    with pytest.raises(InvalidInput):
        two_step_log(make_matching("identity", {"N": 16}), s=0.0)


@pytest.mark.parametrize(
    "name,params",
    [
        # su2 draws at N = 32 have grid steps near 0.75, too coarse for the slices
        ("su2-random", {"dim": 2, "mode": "fermionic", "trivial": True, "N": 64}),
        ("factorized", {"dim": 2, "m": 4, "wind": [0, 0], "N": 32}),
        ("factorized", {"dim": 1, "m": 3, "symmetry": "bosonic", "N": 32}),
    ],
)
def test_beta_contracts_and_homotopy(name, params):
    alpha = make_matching(name, {**params, "seed": 2})
    beta = beta_family(two_step_log(alpha))
    rep = beta.report()
    assert rep["gluing"] <= 1e-9 and rep["alpha"] <= 1e-8 and rep["symmetry"] <= 1e-8
    path = homotopy_from_beta(beta, 7)
    assert max_opnorm(path[0].samples - np.eye(alpha.m)) <= 1e-8
    assert max_opnorm(path[-1].samples - alpha.samples) <= 1e-8
    assert all(validate_matching(p).passed for p in path)


def test_identity_gives_constant_path():
    alpha = make_matching("identity", {"N": 16, "m": 2})
    path = homotopy_from_beta(beta_family(two_step_log(alpha)), 5)
    assert all(max_opnorm(p.samples - np.eye(2)) <= 1e-12 for p in path)


def test_log_from_homotopy():
    grid = TorusGrid(1, 16)
    h = _symmetric_field(grid, 4, FERMI, 7, 3.0)
    ts = np.linspace(0, 1, 5)
    path = [UnitaryFamily(grid, exp_i(t * h), FERMI) for t in ts]
    log = multi_step_log_from_homotopy(path)
    assert log.M == 4 and log.residual <= 1e-10
    with pytest.raises(SubdivisionNeeded):
        multi_step_log_from_homotopy([path[0], UnitaryFamily(grid, -np.ones((16, 4, 4)) * np.eye(4), FERMI)])
    with pytest.raises(InvalidInput):
        multi_step_log_from_homotopy(path[1:])


def test_labeling_detects_exchange_monodromy():
    grid = TorusGrid(1, 32)
    k = grid.coords()[..., 0]
    mat = np.zeros((32, 2, 2), dtype=complex)
    mat[:, 0, 1] = 1.0
    mat[:, 1, 0] = np.exp(2j * np.pi * k)
    # eigenvalues +-e^{i pi k} trade places after one period
    alpha = UnitaryFamily(grid, mat, None)
    with pytest.raises(LabelingFailure):
        label_eigenvalues(alpha)
    half = np.arange(32) < 16
    lab = label_eigenvalues(alpha, domain=half)
    # on the half circle the labels follow +-e^{i pi k} continuously
    tracked = np.sort(np.angle(np.exp(1j * (lab.phases[half] - np.pi * k[half, None]))), axis=-1)
    assert np.allclose(tracked, [[0.0, np.pi]] * 16, atol=1e-9) or np.allclose(tracked, [[-np.pi, 0.0]] * 16, atol=1e-9)


def test_branch_cut_stays_in_a_gap():
    alpha = make_matching("factorized", {"N": 32, "dim": 2, "m": 4, "wind": [0, 0], "seed": 3})
    cert = to_generic_form(alpha, 0.05, "symmetric", seed=0)
    cut = branch_cut(cert)
    phases = cert.approximant.spectra()
    dist = np.abs(np.angle(np.exp(1j * (phases - cut.lam[..., None]))))
    assert np.min(dist) >= cut.margin - 1e-12 and cut.margin > 0
    assert np.allclose(cut.lam, cert.approximant.grid.reflect(cut.lam))
