import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blochgauge.errors import RefinementNeeded, SymmetryError
from blochgauge.invariants import (
    classify,
    factorized_matching,
    gp_index,
    gp_index_via_factorization,
    identity_family,
    indices_2d,
    kramers_check,
    winding_det,
    z2_report,
)
from blochgauge.torus import SymmetryKind, TorusGrid, UnitaryFamily
from blochgauge.zoo import make_matching
from oracles import winding_by_argument_sum

FERMI = SymmetryKind("fermionic")


def test_canonical_pair():
    g = TorusGrid(1, 64)
    assert gp_index(identity_family(g, 2, FERMI)).indices == {"line": 0}
    rep = gp_index(make_matching("diag-winding", {"N": 64, "w": 1}))
    assert rep.indices == {"line": 1} and rep.consistency
    assert gp_index(make_matching("diag-winding", {"N": 64, "w": 2})).indices == {"line": 0}


@given(st.integers(0, 10_000), st.sampled_from([2, 4]))
def test_pfaffian_and_winding_routes_agree(seed, m):
    alpha = make_matching("factorized", {"N": 64, "m": m, "seed": seed})
    w = winding_det(alpha.gamma)
    assert w == winding_by_argument_sum(np.linalg.det(alpha.gamma.samples)) == alpha.wind
    assert gp_index(alpha).indices["line"] == w % 2
    assert gp_index_via_factorization(alpha.gamma) == w % 2


def test_winding_det_needs_resolution():
    g = TorusGrid(1, 8)
    k = g.coords()[..., 0]
    with pytest.raises(RefinementNeeded):
        winding_det(np.exp(2j * np.pi * 3 * k)[:, None, None])


def test_gp_index_requires_fermionic_symmetry():
    with pytest.raises(SymmetryError):
        gp_index(identity_family(TorusGrid(1, 16), 2, SymmetryKind("bosonic")))


@pytest.mark.parametrize("seed", range(6))
def test_four_indices_follow_the_windings(seed):
    alpha = make_matching("factorized", {"N": 32, "dim": 2, "m": 4, "seed": seed})
    w1, w2 = alpha.wind
    rep = indices_2d(alpha)
    # restricting k1 leaves a loop in k2, whose winding is w2 (and vice versa)
    assert rep.indices == {"k1=0": w2 % 2, "k1=1/2": w2 % 2, "k2=0": w1 % 2, "k2=1/2": w1 % 2}
    assert rep.consistency


def test_axis_labels_in_report():
    alpha = make_matching("diag-winding", {"N": 16, "dim": 2, "w": 1, "axis": 1})
    rep = z2_report(alpha, ("k2", "k3"))
    assert rep.indices == {"k2=0": 1, "k2=1/2": 1, "k3=0": 0, "k3=1/2": 0}


def test_bosonic_report_is_trivial():
    rep = z2_report(make_matching("su2-random", {"N": 32, "seed": 1}))
    assert rep.indices == {"line": 0} and rep.details["note"] == "always null-homotopic"


def test_classify_and_kramers():
    a = make_matching("diag-winding", {"N": 32, "w": 1})
    b = make_matching("diag-winding", {"N": 32, "w": 3})
    c = identity_family(TorusGrid(1, 32), 2, FERMI)
    assert classify(a, b) and not classify(a, c)
    assert kramers_check(a)
    assert not kramers_check(np.diag(np.exp(1j * np.array([0.1, 0.2]))))


def test_bosonic_factorized_is_symmetric():
    gamma = make_matching("factorized", {"N": 32, "m": 3, "symmetry": "bosonic", "seed": 4}).gamma
    alpha = factorized_matching(gamma, "bosonic")
    assert np.max(alpha.trs_defect()) < 1e-12
