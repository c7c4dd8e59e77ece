import numpy as np
import pytest

from blochgauge.errors import InvalidInput
from blochgauge.invariants import z2_report
from blochgauge.torus import validate_matching, validate_projections
from blochgauge.zoo import direct_sum, kramers_permutation, make_matching, make_projections

MATCHING = [
    ("identity", {}),
    ("identity", {"m": 3, "symmetry": "bosonic"}),
    ("diag-winding", {"w": 1}),
    ("factorized", {"m": 4, "seed": 2}),
    ("factorized", {"m": 3, "symmetry": "bosonic", "dim": 2}),
    ("su2-random", {"dim": 2}),
    ("su2-random", {"dim": 2, "mode": "fermionic", "trivial": True}),
    ("product", {"components": [["diag-winding", {}], ["identity", {"m": 2}]]}),
]
PROJECTIONS = [
    ("constant", {"dim": 2}),
    ("gauged", {"dim": 2, "symmetry": "bosonic"}),
    ("gauged", {"dim": 2, "symmetry": "fermionic"}),
    ("stacked-2d", {"w": 1}),
    ("stacked-2d", {"w": 2}),
]


@pytest.mark.parametrize("name,params", MATCHING)
def test_matching_catalog_valid_at_64(name, params):
    assert validate_matching(make_matching(name, {**params, "N": 64})).passed


@pytest.mark.parametrize("name,params", PROJECTIONS)
def test_projection_catalog_valid_at_64(name, params):
    assert validate_projections(make_projections(name, {**params, "N": 64})).passed


@pytest.mark.parametrize("seed", range(20))
def test_invariants_match_construction(seed):
    alpha = make_matching("factorized", {"N": 64, "m": 2 + 2 * (seed % 2), "seed": seed})
    assert z2_report(alpha).indices["line"] == alpha.wind % 2
    triv = make_matching("su2-random", {"N": 32, "dim": 2, "mode": "fermionic", "trivial": True, "seed": seed})
    assert set(z2_report(triv).indices.values()) == {0}


def test_product_is_symmetric_and_adds_indices():
    alpha = make_matching("product", {"N": 32, "components": [["diag-winding", {"w": 1}], ["diag-winding", {"w": 1}]]})
    assert alpha.m == 4 and np.max(alpha.trs_defect()) < 1e-12
    assert z2_report(alpha).indices["line"] == 0


def test_kramers_permutation():
    perm = kramers_permutation([2, 2])
    assert sorted(perm.tolist()) == [0, 1, 2, 3]


def test_direct_sum_shapes():
    a = make_matching("identity", {"N": 16, "m": 2})
    assert direct_sum([a, a]).m == 4


def test_unknown_names():
    with pytest.raises(InvalidInput):
        make_matching("nope")
    with pytest.raises(InvalidInput):
        make_projections("nope")


def test_generators_are_deterministic():
    a = make_projections("gauged", {"N": 16, "dim": 2, "seed": 3})
    b = make_projections("gauged", {"N": 16, "dim": 2, "seed": 3})
    assert np.array_equal(a.samples, b.samples)
