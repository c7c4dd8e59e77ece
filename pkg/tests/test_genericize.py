import numpy as np
import pytest

from blochgauge.errors import InvalidInput, ObstructionError, ShapeError
from blochgauge.genericize import (
    certified_direction_search,
    cluster_census,
    conjugate,
    edge_slack,
    local_split,
    su2_decompose,
    su2_path,
    sup_distance,
    symmetric_basis,
    symmetric_noise,
    to_generic_form,
)
from blochgauge.linalg import dagger
from blochgauge.torus import SymmetryKind, TorusGrid, UnitaryFamily, eigenphase_parity_defect
from blochgauge.zoo import PAULI, make_matching, reference_projection

FERMI = SymmetryKind("fermionic")


def _assert_symmetric_certificate(alpha, cert, s):
    assert cert.distance <= s
    approx = cert.approximant
    assert np.max(approx.trs_defect()) < 1e-10
    for mults in cert.census.values():
        assert sorted(mults) == [2] * (alpha.m // 2)
    assert cert.gap > 0


def _assert_broken_certificate(cert, s):
    assert cert.distance <= s
    phases = cert.approximant.spectra()
    spacing = np.min(np.abs(np.angle(np.exp(1j * (phases[..., :, None] - phases[..., None, :]))) + 10 * np.eye(phases.shape[-1])), axis=(-2, -1))
    assert np.min(spacing) > 0
    assert eigenphase_parity_defect(cert.approximant, phases) <= 1e-8


@pytest.mark.parametrize("dim", [1, 2])
def test_symmetric_fermionic_generic_form(dim):
    alpha = make_matching("factorized", {"N": 32, "dim": dim, "m": 4, "seed": 2, "wind": [0] * dim if dim > 1 else 0})
    cert = to_generic_form(alpha, 0.05, "symmetric", seed=1)
    _assert_symmetric_certificate(alpha, cert, 0.05)


@pytest.mark.parametrize("dim", [1, 2])
def test_trs_broken_generic_form_of_obstructed_family(dim):
    alpha = make_matching("factorized", {"N": 32, "dim": dim, "m": 4, "seed": 2, "wind": [1, 0] if dim > 1 else 1})
    cert = to_generic_form(alpha, 0.05, "trs-broken", seed=1)
    _assert_broken_certificate(cert, 0.05)


def test_identity_is_split_by_the_full_ladder():
    alpha = make_matching("identity", {"N": 16, "dim": 2, "m": 4})
    cert = to_generic_form(alpha, 0.05, "symmetric", seed=0)
    _assert_symmetric_certificate(alpha, cert, 0.05)
    assert [st["stage"] for st in cert.stages] == ["point"] * 4 + ["lines", "contour", "bulk"]


def test_bosonic_generic_form_is_simple_everywhere():
    alpha = make_matching("factorized", {"N": 32, "dim": 2, "m": 3, "symmetry": "bosonic", "seed": 5})
    cert = to_generic_form(alpha, 0.05, "symmetric", seed=0)
    assert cert.distance <= 0.05 and cert.gap > 0
    assert all(m == [1, 1, 1] for m in cert.census.values())


def test_obstructed_family_cannot_be_made_generic_symmetrically():
    alpha = make_matching("diag-winding", {"N": 32, "w": 1})
    with pytest.raises(ObstructionError) as info:
        to_generic_form(alpha, 0.05, "symmetric")
    assert info.value.report.indices == {"line": 1}


def test_bad_arguments():
    alpha = make_matching("identity", {"N": 16})
    with pytest.raises(InvalidInput):
        to_generic_form(alpha, 1.5)
    with pytest.raises(InvalidInput):
        to_generic_form(alpha, 0.05, "sideways")
    with pytest.raises(ShapeError):
        su2_path(make_matching("identity", {"N": 16, "m": 4}))


def test_su2_decomposition_recovers_components(rng):
    g = TorusGrid(1, 16)
    m_field = rng.normal(size=16)
    F = rng.normal(size=(16, 3))
    norm = np.sqrt(m_field**2 + np.sum(F**2, axis=-1))
    mat = (m_field[:, None, None] * np.eye(2) + 1j * np.einsum("kj,jab->kab", F, PAULI)) / norm[:, None, None]
    dec = su2_decompose(UnitaryFamily(g, mat, None))
    assert np.allclose(dec.m, m_field / norm) and np.allclose(dec.F, F / norm[:, None])
    assert np.allclose(dec.reconstruct(), mat)


@pytest.mark.parametrize("mode", ["bosonic", "fermionic"])
def test_su2_path_certificate_and_log(mode):
    alpha = make_matching("su2-random", {"N": 32, "dim": 2, "mode": mode, "trivial": True, "seed": 3})
    cert = su2_path(alpha, 0.05, "symmetric", seed=0)
    assert cert.distance <= 0.05
    h = cert.log.samples
    from blochgauge.linalg import exp_i

    assert np.max(np.abs(exp_i(h) - cert.approximant.samples)) < 1e-10
    assert np.max(cert.log.trs_defect()) < 1e-10


def test_su2_path_without_symmetry():
    alpha = make_matching("su2-random", {"N": 32, "dim": 2, "seed": 3})
    alpha = UnitaryFamily(alpha.grid, alpha.samples, None)
    cert = su2_path(alpha, 0.05, "trs-broken", seed=0)
    assert cert.distance <= 0.05 and cert.log is not None


def test_local_split_keeps_symmetry_and_budget():
    alpha = make_matching("identity", {"N": 16, "dim": 1, "m": 4})
    out = local_split(alpha, (0,), 0.04)
    assert sup_distance(alpha, out) <= 0.04 + 1e-12
    assert np.max(out.trs_defect()) < 1e-12
    census = cluster_census(out).census
    assert sorted(census[(0,)]) == [2, 2]


def test_conjugation_by_symmetric_noise(rng):
    g = TorusGrid(2, 16)
    alpha = make_matching("identity", {"N": 16, "dim": 2, "m": 4})
    w = symmetric_noise(g, 4, FERMI, rng, 0.1)
    assert np.max(np.linalg.norm(w, 2, axis=(-2, -1))) <= 0.1 + 1e-12
    out = conjugate(alpha, w)
    assert np.max(out.trs_defect()) < 1e-12


def test_direction_search_certifies_nonvanishing(rng):
    g = TorusGrid(1, 32)
    k = g.coords()[..., 0]
    # F has a zero on the grid; any certified shift must remove it
    F = np.stack([np.sin(2 * np.pi * k), np.zeros_like(k), np.zeros_like(k)], axis=-1)
    v, margin, slack = certified_direction_search(F, 0.1, seed=0)
    assert abs(np.linalg.norm(v) - 0.1) < 1e-12
    G = F + v
    region = np.ones(g.shape, dtype=bool)
    assert slack > 0 and margin > 0
    assert edge_slack(G, region) == pytest.approx(slack)
    assert np.min(np.linalg.norm(G, axis=-1)) > 0


def test_symmetric_basis_kramers_pairs():
    p0 = reference_projection(4, 2, FERMI)
    xi = symmetric_basis(p0, 2, FERMI)
    eps4, eps2 = FERMI.epsilon(4), FERMI.epsilon(2)
    assert np.allclose(dagger(xi) @ xi, np.eye(2))
    assert np.allclose(xi @ dagger(xi), p0)
    assert np.allclose(eps4 @ np.conj(xi) @ eps2, xi)
