import numpy as np
import pytest

from blochgauge.errors import InvalidInput, ObstructionError, SymmetryError
from blochgauge.frames import (
    build_frame,
    check_frame,
    fourier_decay,
    frame_1d,
    frame_point,
    frame_trs_defect,
    interpolation_residual,
)
from blochgauge.linalg import dagger
from blochgauge.torus import ProjectionFamily, SymmetryKind, TorusGrid
from blochgauge.zoo import make_projections, reference_projection
from oracles import spin_projector


def test_constant_family_frame_is_constant():
    P = make_projections("constant", {"N": 8, "dim": 3})
    frame = build_frame(P)
    rep = check_frame(frame, P)
    assert rep.passed
    assert np.allclose(frame.vectors, frame.vectors[0, 0, 0])


@pytest.mark.parametrize("sym", ["bosonic", "fermionic"])
@pytest.mark.parametrize("dim", [1, 2])
def test_gauged_frames_pass(sym, dim):
    P = make_projections("gauged", {"N": 16, "dim": dim, "symmetry": sym, "seed": 4})
    frame = build_frame(P)
    rep = check_frame(frame, P)
    assert rep.passed, rep.to_dict()
    assert rep.residuals["trs"] <= 1e-7


def test_one_dimensional_frame_of_a_cone():
    # rank one on C^2 without symmetry: the frame must absorb the Berry phase
    g = TorusGrid(1, 32)
    k = g.coords()[..., 0]
    n = np.stack([np.sin(1.0) * np.cos(2 * np.pi * k), np.sin(1.0) * np.sin(2 * np.pi * k), np.cos(1.0) * np.ones(32)], -1)
    P = ProjectionFamily(g, spin_projector(n), None, rank=1)
    frame = frame_1d(P, "periodic-only")
    rep = check_frame(frame, P)
    assert rep.passed
    assert rep.residuals["continuity"] < 0.5


def test_stacked_family_obstruction_and_fallback():
    P = make_projections("stacked-2d", {"N": 32, "w": 1})
    with pytest.raises(ObstructionError) as info:
        build_frame(P, "symmetric")
    rep = info.value.report
    assert rep.indices == {"k2=0": 0, "k2=1/2": 0, "k3=0": 1, "k3=1/2": 1}
    frame = build_frame(P, "periodic-only")
    check = check_frame(frame, P)
    assert check.passed
    assert check.info["trs_reported"] > 0.1


def test_stacked_even_winding_is_not_obstructed():
    P = make_projections("stacked-2d", {"N": 64, "w": 0, "dim": 2})
    frame = build_frame(P)
    assert check_frame(frame, P).passed


def test_frame_point_kramers_structure():
    sym = SymmetryKind("fermionic")
    xi = frame_point(reference_projection(6, 4, sym), 4, sym)
    assert np.allclose(sym.epsilon(6) @ np.conj(xi) @ sym.epsilon(4), xi)
    with pytest.raises(SymmetryError):
        frame_point(reference_projection(6, 3, None), 3, sym)


def test_interpolation_residual_shrinks_with_refinement():
    res = []
    for N in (16, 32):
        P = make_projections("gauged", {"N": N, "dim": 2, "symmetry": "bosonic", "seed": 1})
        res.append(interpolation_residual(P.grid, build_frame(P).vectors))
    assert res[1] < res[0] / 2


def test_invalid_requests():
    P = make_projections("constant", {"N": 8, "dim": 2})
    with pytest.raises(InvalidInput):
        build_frame(P, "sideways")
    bad = ProjectionFamily(P.grid, P.samples * 1.1, P.symmetry, rank=P.rank)
    with pytest.raises(InvalidInput):
        build_frame(bad)


def test_trs_defect_of_random_frame_is_large(rng):
    g = TorusGrid(1, 8)
    xi = rng.normal(size=(8, 4, 2)) + 1j * rng.normal(size=(8, 4, 2))
    assert np.max(frame_trs_defect(g, xi, SymmetryKind("fermionic"))) > 0.1


def test_fourier_decay_of_smooth_frame():
    P = make_projections("gauged", {"N": 32, "dim": 1, "symmetry": "bosonic"})
    out = fourier_decay(build_frame(P))
    assert out["decay_exponent"] > 0.5
    assert out["csv"].startswith("shell,max_coefficient\n")
    assert len(out["max_coefficient"]) == 17
    smooth = fourier_decay(build_frame(P), width=0.1)
    assert smooth["width"] == 0.1
