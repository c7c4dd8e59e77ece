"""Catalog of test families whose invariants are known by construction."""

from __future__ import annotations

from typing import Any

import numpy as np

from .errors import InvalidInput
from .linalg import dagger, exp_i
from .torus import (
    ProjectionFamily,
    SymmetryKind,
    TorusGrid,
    UnitaryFamily,
    random_hermitian_field,
    smoothstep,
    step_norms,
    symmetrize_gauge_generator,
    symmetry_of,
)
from .invariants import factorized_matching

PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]],
    dtype=complex,
)

MATCHING_NAMES = ("identity", "diag-winding", "factorized", "su2-random", "product")
PROJECTION_NAMES = ("constant", "gauged", "stacked-2d")


def _grid(params: dict[str, Any], dim: int = 1, N: int = 64) -> TorusGrid:
    return TorusGrid(int(params.get("dim", dim)), int(params.get("N", N)))


def kramers_permutation(sizes: list[int]) -> np.ndarray:
    """Permutation putting a direct sum of symplectic blocks into standard form."""
    firsts, seconds, off = [], [], 0
    for s in sizes:
        h = s // 2
        firsts += list(range(off, off + h))
        seconds += list(range(off + h, off + s))
        off += s
    return np.array(firsts + seconds)


def direct_sum(families: list[UnitaryFamily]) -> UnitaryFamily:
    """Block-diagonal sum; fermionic blocks are reordered into standard form."""
    grid, sym = families[0].grid, families[0].symmetry
    sizes = [f.m for f in families]
    m = sum(sizes)
    out = np.zeros(grid.shape + (m, m), dtype=complex)
    off = 0
    for f in families:
        if f.grid != grid or (f.symmetry != sym):
            raise InvalidInput("direct sum needs equal grids and symmetry kinds")
        out[..., off : off + f.m, off : off + f.m] = f.samples
        off += f.m
    if sym is not None and sym.fermionic:
        perm = kramers_permutation(sizes)
        out = out[..., perm, :][..., :, perm]
    return UnitaryFamily(grid, out, sym)


def _phase_field(grid: TorusGrid, w: int | list[int], axis: int | None = None) -> np.ndarray:
    c = grid.coords()
    if isinstance(w, (list, tuple)):
        return 2.0 * np.pi * np.tensordot(c, np.array(w, dtype=float), axes=([-1], [0]))
    ax = grid.dim - 1 if axis is None else axis
    return 2.0 * np.pi * w * c[..., ax]


def _random_gamma(grid: TorusGrid, m: int, rng: np.random.Generator, amp: float, wind) -> UnitaryFamily:
    g = random_hermitian_field(grid, m, rng, max_mode=1)
    g *= amp / max(1e-12, float(np.max(np.abs(g))))
    phase = np.exp(1j * _phase_field(grid, wind))
    d = np.ones(grid.shape + (m,), dtype=complex)
    d[..., 0] = phase
    gamma = exp_i(g) * d[..., None, :]
    return UnitaryFamily(grid, gamma, None)


def _parity_poly(grid: TorusGrid, rng: np.random.Generator, odd: bool, modes: int = 2) -> np.ndarray:
    """Random even (cosine) or odd (sine) trigonometric polynomial of unit scale."""
    c = grid.coords()
    out = np.zeros(grid.shape)
    terms = modes * (grid.dim + (grid.dim == 2))
    for n in range(1, modes + 1):
        for ax in range(grid.dim):
            arg = 2.0 * np.pi * n * c[..., ax]
            out += rng.normal() * (np.sin(arg) if odd else np.cos(arg))
        if grid.dim == 2:
            arg = 2.0 * np.pi * n * (c[..., 0] + c[..., 1])
            out += rng.normal() * (np.sin(arg) if odd else np.cos(arg))
    return out / np.sqrt(terms)


def su2_family(grid: TorusGrid, m_field: np.ndarray, f_field: np.ndarray, symmetry: SymmetryKind) -> UnitaryFamily:
    """alpha = (m + i F.sigma) / sqrt(m^2 + |F|^2)."""
    norm = np.sqrt(m_field**2 + np.sum(f_field**2, axis=-1))
    mat = m_field[..., None, None] * np.eye(2) + 1j * np.einsum("...j,jab->...ab", f_field, PAULI)
    return UnitaryFamily(grid, mat / norm[..., None, None], symmetry)


def make_matching(name: str, params: dict[str, Any] | None = None) -> UnitaryFamily:
    """Matching families by name.

    ``identity``       the constant identity (``m``, ``symmetry``)
    ``diag-winding``   diag(e^{2 pi i w k}, e^{-2 pi i w k}), fermionic, index w mod 2
    ``factorized``     eps^{-1} gamma(-k)^t eps gamma(k) from a random smooth gamma
                       whose determinant winds ``wind`` times (``symmetry`` picks eps)
    ``su2-random``     m + i F.sigma with the parities required by ``mode``; with
                       ``trivial`` a fermionic draw has index zero on every line
    ``product``        direct sum of ``components``, each a (name, params) pair
    """
    params = dict(params or {})
    rng = np.random.default_rng(params.get("seed", 0))
    if name == "identity":
        grid = _grid(params)
        m = int(params.get("m", 2))
        sym = symmetry_of(params.get("symmetry", "fermionic"))
        return UnitaryFamily(grid, np.broadcast_to(np.eye(m, dtype=complex), grid.shape + (m, m)).copy(), sym)
    if name == "diag-winding":
        grid = _grid(params)
        w = int(params.get("w", 1))
        ph = _phase_field(grid, w, params.get("axis"))
        mat = np.zeros(grid.shape + (2, 2), dtype=complex)
        mat[..., 0, 0] = np.exp(1j * ph)
        mat[..., 1, 1] = np.exp(-1j * ph)
        return UnitaryFamily(grid, mat, SymmetryKind("fermionic"))
    if name == "factorized":
        grid = _grid(params)
        m = int(params.get("m", 2))
        if "wind" in params:
            wind = params["wind"]
        else:
            wind = [int(x) for x in rng.integers(-2, 3, size=grid.dim)] if grid.dim > 1 else int(rng.integers(-2, 3))
        gamma = _random_gamma(grid, m, rng, float(params.get("amp", 1.0)), wind)
        alpha = factorized_matching(gamma, params.get("symmetry", "fermionic"))
        alpha.gamma = gamma  # type: ignore[attr-defined]
        alpha.wind = wind  # type: ignore[attr-defined]
        return alpha
    if name == "su2-random":
        grid = _grid(params)
        mode = params.get("mode", "bosonic")
        sym = SymmetryKind(mode)
        floor = float(params.get("min_norm", 0.25))
        # redraw until m^2 + |F|^2 stays away from zero, so the family is smooth
        for _ in range(200):
            m_field = float(params.get("offset", 0.5)) + _parity_poly(grid, rng, odd=False)
            if mode == "bosonic":
                f = np.stack(
                    [_parity_poly(grid, rng, False), _parity_poly(grid, rng, True), _parity_poly(grid, rng, False)],
                    axis=-1,
                )
            else:
                f = np.stack([_parity_poly(grid, rng, True) for _ in range(3)], axis=-1)
            if params.get("trivial") and mode == "fermionic":
                # F vanishes at the high-symmetry points, so alpha there is sign(m) * 1
                ends = np.sign([m_field[p] for p in grid.high_symmetry_points()])
                if np.any(ends != ends[0]):
                    continue
            if float(np.min(m_field**2 + np.sum(f**2, axis=-1))) >= floor**2:
                fam = su2_family(grid, m_field, f, sym)
                if float(np.max(step_norms(grid, fam.samples))) < float(params.get("max_step", 0.8)):
                    return fam
        raise InvalidInput("could not draw a smooth su2 family", seed=params.get("seed", 0))
    if name == "product":
        comps = params.get("components")
        if not comps:
            raise InvalidInput("product needs components")
        fams = [make_matching(n, p) for n, p in comps]
        return direct_sum(fams)
    raise InvalidInput("unknown matching family", name=name, known=list(MATCHING_NAMES))


# ---------------------------------------------------------------------------
# projection families


def reference_projection(n: int, m: int, symmetry: SymmetryKind | None) -> np.ndarray:
    """Coordinate projection invariant under the antiunitary symmetry."""
    p = np.zeros((n, n), dtype=complex)
    if symmetry is not None and symmetry.fermionic:
        if m % 2 or n % 2:
            raise InvalidInput("fermionic projections need even rank and dimension", m=m, n=n)
        for a in range(m // 2):
            p[a, a] = 1.0
            p[n // 2 + a, n // 2 + a] = 1.0
    else:
        p[np.arange(m), np.arange(m)] = 1.0
    return p


def _bloch_projector(nvec: np.ndarray) -> np.ndarray:
    return 0.5 * (np.eye(2) + np.einsum("...j,jab->...ab", nvec, PAULI))


def _winding_sphere(k1: np.ndarray, k2: np.ndarray, w: int) -> np.ndarray:
    """Bloch vectors whose k1-loops sweep the sphere |w| times as k2 runs once.

    k2 is cut into 2|w| segments.  On even segments the k1-loop is a circle of
    latitude moving from the south to the north pole, so its Berry phase winds
    once; on odd segments the loop is a single point travelling back along a
    meridian.
    """
    if w == 0:
        theta = np.pi * (0.5 - 0.5 * np.cos(2.0 * np.pi * k2))
        return np.stack([np.sin(theta), np.zeros_like(theta), np.cos(theta)], axis=-1)
    segs = 2 * abs(w)
    pos = k2 * segs
    idx = np.floor(pos).astype(int) % segs
    t = pos - np.floor(pos)
    sweep = idx % 2 == 0
    theta = np.where(sweep, np.pi * (1.0 - smoothstep(t)), np.pi * smoothstep(t))
    phi = np.where(sweep, 2.0 * np.pi * np.sign(w) * k1, 0.0)
    return np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)


def make_projections(name: str, params: dict[str, Any] | None = None) -> ProjectionFamily:
    """Projection families by name.

    ``constant``   a fixed symmetric coordinate projection
    ``gauged``     U(k) P0 U(k)^* with a random symmetric gauge U, always unobstructed
    ``stacked-2d`` k3-independent fermionic rank-2 family built from a rank-1 block
                   whose k1-holonomy winds w times in k2, plus its time-reversed
                   partner; obstructed exactly when w is odd
    """
    params = dict(params or {})
    if name == "constant":
        grid = _grid(params, dim=3, N=32)
        m, n = int(params.get("m", 2)), int(params.get("n", 4))
        sym = symmetry_of(params.get("symmetry", "fermionic"))
        p0 = reference_projection(n, m, sym)
        return ProjectionFamily(grid, np.broadcast_to(p0, grid.shape + (n, n)).copy(), sym, rank=m)
    if name == "gauged":
        grid = _grid(params, dim=3, N=32)
        m, n = int(params.get("m", 2)), int(params.get("n", 4))
        sym = symmetry_of(params.get("symmetry", "fermionic"))
        rng = np.random.default_rng(params.get("seed", 0))
        g = random_hermitian_field(grid, n, rng, max_mode=1, constant=False)
        g = symmetrize_gauge_generator(grid, g, sym)
        g *= float(params.get("amp", 0.6)) / max(1e-12, float(np.max(np.linalg.norm(g, 2, axis=(-2, -1)))))
        u = exp_i(g)
        p0 = reference_projection(n, m, sym)
        samples = u @ p0 @ dagger(u)
        return ProjectionFamily(grid, 0.5 * (samples + dagger(samples)), sym, rank=m)
    if name == "stacked-2d":
        grid = _grid(params, dim=3, N=32)
        w = int(params.get("w", 1))
        c = grid.coords()
        k1, k2 = c[..., 0], c[..., 1]
        up = _bloch_projector(_winding_sphere(k1, k2, w))
        down = np.conj(_bloch_projector(_winding_sphere(-k1, -k2, w)))
        samples = np.zeros(grid.shape + (4, 4), dtype=complex)
        # basis (up_1, up_2, down_1, down_2): eps = [[0, 1], [-1, 0]] in 2x2 blocks
        samples[..., :2, :2] = up
        samples[..., 2:, 2:] = down
        return ProjectionFamily(grid, samples, SymmetryKind("fermionic"), rank=2)
    raise InvalidInput("unknown projection family", name=name, known=list(PROJECTION_NAMES))
