"""Approximation of matching families by families in generic form.

A family is in generic form when its spectrum is simple at every point,
except that a fermionic family keeps the forced Kramers doublets at the
high-symmetry points.  The stages below mirror the order in which the
degeneracies are removed: first at the high-symmetry points, then on thin
slabs around the invariant lines, then near the corners of the contour they
form, and finally in the bulk.  Each stage is a small perturbation that
respects the symmetry exactly,

    alpha -> exp(i w/2) alpha exp(i w/2),    eps w(k) = w(-k)^t eps,

so the budgets of the stages add up to the final distance.  Random
directions stand in for the transversality arguments that guarantee
success with probability one; every draw is certified on the grid before it
is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import (
    InvalidInput,
    ObstructionError,
    RetryExhausted,
    ShapeError,
    SplitTooLarge,
    SymmetryError,
)
from .invariants import z2_report
from .linalg import (
    TWO_PI,
    cluster_multiplicities,
    circular_gaps,
    dagger,
    exp_i,
    jacobi_eigh,
    max_opnorm,
    min_spacing,
    polar_unitary,
    principal_log,
    unitary_eig,
    unitary_eig_batch,
    wrap_phase,
)
from .torus import (
    SelfAdjointFamily,
    SymmetryKind,
    TorusGrid,
    UnitaryFamily,
    ball_bump,
    bump_value,
    circle_distance,
    det_phase_normalize,
    multiset_distance,
    random_hermitian_field,
    symmetrize_generator,
    unitarity_defect,
)
from .zoo import PAULI

GAP_FLOOR = 1e-6
PAIR_TOL = 1e-8
MODES = ("symmetric", "trs-broken")


# ---------------------------------------------------------------------------
# bookkeeping


@dataclass
class ClusterDecomposition:
    """Eigenphase clusters of a family on its grid.

    ``multiplicity`` is the size of the largest eps1-cluster at each point,
    ``census`` the cluster sizes at the high-symmetry points and ``A`` the
    smallest distance between two different clusters at those points.
    """

    phases: np.ndarray
    spacing: np.ndarray
    multiplicity: np.ndarray
    eps1: float
    A: float
    radius: int
    census: dict[tuple[int, ...], list[int]]

    def signature(self, region: np.ndarray | None = None) -> tuple[int, int]:
        """(largest multiplicity, number of points where it occurs) on ``region``."""
        mult = self.multiplicity if region is None else self.multiplicity[region]
        if mult.size == 0:
            return (1, 0)
        top = int(np.max(mult))
        return (top, int(np.sum(mult == top))) if top > 1 else (1, 0)


def _max_run(links: np.ndarray) -> np.ndarray:
    """Longest circular run of True along the last axis."""
    m = links.shape[-1]
    run = np.zeros(links.shape[:-1], dtype=int)
    best = np.zeros(links.shape[:-1], dtype=int)
    for j in range(2 * m):
        run = (run + 1) * links[..., j % m]
        best = np.maximum(best, run)
    return np.minimum(best, m - 1)


def cluster_census(
    alpha: UnitaryFamily, eps1: float = GAP_FLOOR, radius: int = 3, phases: np.ndarray | None = None
) -> ClusterDecomposition:
    if phases is None:
        phases = alpha.spectra()
    gaps = circular_gaps(phases)
    spacing = np.min(gaps, axis=-1) if alpha.m > 1 else np.full(alpha.grid.shape, np.inf)
    mult = _max_run(gaps < eps1) + 1 if alpha.m > 1 else np.ones(alpha.grid.shape, dtype=int)
    census, A = {}, TWO_PI
    for p in alpha.grid.high_symmetry_points():
        ph = phases[p]
        census[p] = cluster_multiplicities(ph, PAIR_TOL)
        between = circular_gaps(ph)
        between = between[between > PAIR_TOL]
        if between.size:
            A = min(A, float(np.min(between)))
    return ClusterDecomposition(phases, spacing, mult, eps1, A, radius, census)


@dataclass
class GenericFormCertificate:
    """A generic-form approximant together with the evidence for it."""

    approximant: UnitaryFamily
    distance: float
    gap: float
    ball_gap: float
    A: float
    R: int
    mode: str
    seed: int
    census: dict[tuple[int, ...], list[int]]
    continuum: bool
    stages: list[dict[str, Any]] = field(default_factory=list)
    log: SelfAdjointFamily | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "distance": float(self.distance),
            "gap": float(self.gap),
            "ball_gap": float(self.ball_gap),
            "A": float(self.A),
            "R": int(self.R),
            "mode": self.mode,
            "seed": int(self.seed),
            "census": {",".join(map(str, k)): v for k, v in sorted(self.census.items())},
            "continuum": bool(self.continuum),
            "stages": self.stages,
        }


@dataclass
class SU2Decomposition:
    """alpha = m 1 + i F.sigma for a family in SU(2)."""

    grid: TorusGrid
    m: np.ndarray
    F: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.m[..., None, None] * np.eye(2) + 1j * np.einsum("...j,jab->...ab", self.F, PAULI)

    def norm_defect(self) -> float:
        return float(np.max(np.abs(self.m**2 + np.sum(self.F**2, axis=-1) - 1.0)))

    def parity_defect(self, symmetry: SymmetryKind) -> float:
        """Deviation from the parities forced by the symmetry.

        Bosonic: m, F1, F3 even and F2 odd.  Fermionic: m even, F odd.
        """
        sign = np.array([1.0, -1.0, 1.0]) if not symmetry.fermionic else -np.ones(3)
        ref_m = self.grid.reflect(self.m)
        ref_f = self.grid.reflect(self.F)
        return float(max(np.max(np.abs(ref_m - self.m)), np.max(np.abs(ref_f - sign * self.F))))


def su2_decompose(alpha: UnitaryFamily | np.ndarray, grid: TorusGrid | None = None) -> SU2Decomposition:
    samples = alpha.samples if isinstance(alpha, UnitaryFamily) else np.asarray(alpha)
    grid = alpha.grid if isinstance(alpha, UnitaryFamily) else grid
    if samples.shape[-2:] != (2, 2):
        raise ShapeError("SU(2) decomposition needs 2 x 2 matrices", shape=list(samples.shape[-2:]))
    m = np.real(np.einsum("...ii->...", samples)) / 2.0
    F = np.stack([np.real(np.einsum("...ij,ji->...", samples, s) / 2j) for s in PAULI], axis=-1)
    return SU2Decomposition(grid, m, F)


# ---------------------------------------------------------------------------
# small helpers


def sup_distance(a: UnitaryFamily, b: UnitaryFamily) -> float:
    return max_opnorm(a.samples - b.samples) if a.samples.size else 0.0


def _point_index(grid: TorusGrid, point) -> tuple[int, ...]:
    pt = tuple(point)
    if len(pt) != grid.dim:
        raise InvalidInput("point has the wrong dimension", point=list(pt), dim=grid.dim)
    if all(isinstance(x, (int, np.integer)) for x in pt):
        return tuple(int(x) % grid.N for x in pt)
    return tuple(grid.index_of(float(x)) for x in pt)


def _offsets(grid: TorusGrid, center: tuple[int, ...]) -> np.ndarray:
    """Signed minimal-image offsets (in grid steps) from ``center``."""
    if grid.dim == 0:
        return np.zeros((0,))
    idx = np.stack(np.meshgrid(*[np.arange(grid.N)] * grid.dim, indexing="ij"), axis=-1)
    d = idx - np.array(center)
    return (d + grid.N // 2) % grid.N - grid.N // 2


def _hs_distance(grid: TorusGrid) -> np.ndarray:
    """Distance (in grid steps) to the nearest high-symmetry point."""
    if grid.dim == 0:
        return np.zeros(())
    best = np.full(grid.shape, np.inf)
    for p in grid.high_symmetry_points():
        best = np.minimum(best, np.sqrt(np.sum(_offsets(grid, p) ** 2, axis=-1)))
    return best


def _line_distance(grid: TorusGrid) -> np.ndarray:
    """Distance (in grid steps) to the nearest invariant line k_j in {0, 1/2}."""
    c = grid.coords()
    d = np.full(grid.shape, np.inf)
    for ax in range(grid.dim):
        x = c[..., ax]
        d = np.minimum(d, np.minimum(circle_distance(x, 0.0), circle_distance(x, 0.5)) * grid.N)
    return d


def _hs_mask(grid: TorusGrid) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    for p in grid.high_symmetry_points():
        mask[p] = True
    return mask


def _region_gap(spacing: np.ndarray, region: np.ndarray) -> float:
    vals = spacing[region]
    return float(np.min(vals)) if vals.size else float("inf")


def _edge_motion(grid: TorusGrid, phases: np.ndarray) -> float:
    """Largest change of the eigenphase multiset across one grid edge."""
    if grid.dim == 0:
        return 0.0
    worst = 0.0
    for ax in range(grid.dim):
        worst = max(worst, float(np.max(multiset_distance(phases, grid.shift(phases, ax)))))
    return worst


def conjugate(alpha: UnitaryFamily, w: np.ndarray) -> UnitaryFamily:
    """exp(i w/2) alpha exp(i w/2); keeps eps alpha(k) = alpha(-k)^t eps when w does."""
    half = exp_i(0.5 * w)
    return alpha.with_samples(half @ alpha.samples @ half)


def symmetric_noise(
    grid: TorusGrid,
    m: int,
    symmetry: SymmetryKind | None,
    rng: np.random.Generator,
    amp: float,
    mask: np.ndarray | None = None,
    max_mode: int = 1,
) -> np.ndarray:
    """Random smooth generator with sup norm ``amp`` obeying the symmetry."""
    w = random_hermitian_field(grid, m, rng, max_mode=max_mode)
    if mask is not None:
        w = w * mask[..., None, None]
    w = symmetrize_generator(grid, w, symmetry)
    norm = max_opnorm(w) if w.size else 0.0
    return w * (amp / norm) if norm > 0 else w


def symmetric_basis(proj: np.ndarray, rank: int, symmetry: SymmetryKind | None) -> np.ndarray:
    """Orthonormal basis of Ran proj adapted to the antiunitary eps o C.

    Bosonic: real vectors (fixed by complex conjugation).  Fermionic: columns
    ``v_1 .. v_r, Theta v_1 .. Theta v_r`` with Theta v = eps conj(v).  The
    projection must commute with the symmetry.
    """
    n = proj.shape[-1]
    if symmetry is None:
        _, v = jacobi_eigh(proj)
        return v[:, n - rank :]
    if not symmetry.fermionic:
        real = np.real(proj)
        if float(np.max(np.abs(np.imag(proj)))) > 1e-6:
            raise SymmetryError("projection is not invariant under complex conjugation")
        _, v = jacobi_eigh(real.astype(complex))
        basis = np.real(v[:, n - rank :])
        q, _ = np.linalg.qr(basis)
        return q.astype(complex)
    if rank % 2:
        raise SymmetryError("Kramers pairs need even rank", rank=rank)
    eps = symmetry.epsilon(n)
    rest = proj.copy()
    firsts, seconds = [], []
    for _ in range(rank // 2):
        j = int(np.argmax(np.real(np.diag(rest))))
        v = rest[:, j] / np.linalg.norm(rest[:, j])
        # clean up round-off against earlier vectors
        for u in firsts + seconds:
            v = v - u * np.vdot(u, v)
        v = v / np.linalg.norm(v)
        tv = eps @ np.conj(v)
        firsts.append(v)
        seconds.append(tv)
        rest = rest - np.outer(v, v.conj()) - np.outer(tv, tv.conj())
    return np.stack(firsts + seconds, axis=-1)


# ---------------------------------------------------------------------------
# splitting at a high-symmetry point


def _cluster_gap(phases: list[float] | np.ndarray, j: int) -> float:
    """Circular distance from cluster j to the nearest other cluster (2 pi if alone)."""
    ph = np.asarray(phases)
    if len(ph) == 1:
        return TWO_PI
    d = np.abs(wrap_phase(ph - ph[j]))
    d[j] = np.inf
    return float(np.min(d))


def local_split(alpha: UnitaryFamily, point, s: float, radius: int = 3) -> UnitaryFamily:
    """Remove the non-mandatory degeneracies at one high-symmetry point.

    Each eigenprojector of alpha(point) is decomposed into real rank-one
    pieces (bosonic) or Kramers pairs (fermionic) and weighted by the ladder
    0, 1, 2, ...  The resulting constant generator, scaled by s/m and cut
    off by a bump of ``radius`` grid steps around the point, conjugates
    alpha.  The family is unchanged outside the bump.

    Raises
    ------
    SplitTooLarge
        If the ladder would push a cluster into its neighbour.
    """
    grid = alpha.grid
    idx = _point_index(grid, point)
    if s == 0:
        return alpha.with_samples(alpha.samples.copy())
    if s < 0:
        raise InvalidInput("splitting size must be non-negative", s=s)
    sym = alpha.symmetry
    dec = unitary_eig(alpha.at(idx), tol=PAIR_TOL)
    m = alpha.m
    scale = s / m
    gen = np.zeros((m, m), dtype=complex)
    for j, (proj, mult) in enumerate(zip(dec.projectors, dec.multiplicities)):
        block = 2 if sym is not None and sym.fermionic else 1
        steps = mult // block
        if steps <= 1:
            continue
        safe = 0.5 * _cluster_gap(dec.eigenphases, j) / (steps - 1) * m
        if scale * (steps - 1) >= 0.5 * _cluster_gap(dec.eigenphases, j):
            raise SplitTooLarge("ladder would collide with a neighbouring cluster", max_safe_s=safe, s=s)
        basis = symmetric_basis(proj, mult, sym)
        for l in range(steps):
            if block == 1:
                cols = basis[:, [l]]
            else:
                cols = basis[:, [l, l + mult // 2]]
            gen += l * cols @ dagger(cols)
    if not np.any(gen):
        return alpha.with_samples(alpha.samples.copy())
    center = tuple(i / grid.N for i in idx)
    support = min(radius / grid.N, 0.24)
    bump = ball_bump(grid, center, 0.0, support) if grid.dim else np.ones(())
    w = scale * bump[..., None, None] * gen
    return conjugate(alpha, w)


def _bloch_pole(basis: np.ndarray, lower: np.ndarray, count: int = 96) -> np.ndarray:
    """Unit vector e in span(basis) maximizing min_q |<e, lower_q>|."""
    golden = np.pi * (3.0 - np.sqrt(5.0))
    i = np.arange(count) + 0.5
    theta = np.arccos(1.0 - 2.0 * i / count)
    phi = golden * i
    spinors = np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=-1)
    if lower.shape[0] == 0:
        return basis[:, 0]
    coords = dagger(basis) @ lower.T  # (2, P)
    overlap = np.abs(np.conj(spinors) @ coords)  # (count, P)
    best = int(np.argmax(np.min(overlap, axis=-1)))
    e = basis @ spinors[best]
    return e / np.linalg.norm(e)


def full_split_at_point(alpha: UnitaryFamily, point, s: float, radius: int = 3) -> UnitaryFamily:
    """Split every Kramers pair near one high-symmetry point, breaking the symmetry.

    Inside the ball of ``radius`` grid steps, with tau = |q|/R for the offset
    q, each pair with eigenvectors u_1(q), u_2(q) is replaced by

        psi_j(q) = K(q) B R(q)^tau e_j,
        phi_j^s(q) = (1 - tau)(phibar -+ delta) + tau phi_j(q),

    where K is the Kato-Nagy unitary from the pair's spectral subspace at the
    point to that at q, B = [e_1, e_2] a fixed basis of the subspace at the
    point and R(q) the SU(2) rotation taking e_j to K^{-1} u_j with positive
    diagonal.  The offset delta is min(g, 2.5 s)/10 with g the distance to
    the nearest other cluster.  At tau = 1 the family is unchanged; at the
    point the pair is split by 2 delta.  The eigenphases depend on q only
    through |q| and phi_j(q) = phi_j(-q), so the spectrum stays even.

    Returns a family without symmetry metadata.
    """
    grid = alpha.grid
    idx = _point_index(grid, point)
    out = alpha.samples.copy()
    if s == 0:
        return UnitaryFamily(grid, out, None)
    m = alpha.m
    dec = unitary_eig(alpha.at(idx), tol=PAIR_TOL)
    if grid.dim:
        dist = np.sqrt(np.sum(_offsets(grid, idx) ** 2, axis=-1))
        ball = dist < radius
    else:
        dist = np.zeros(())
        ball = np.ones((), dtype=bool)
    tau = dist[ball] / radius
    mats = alpha.samples[ball]
    phases_q, vecs_q = unitary_eig_batch(mats)
    eye = np.eye(m)
    keep = np.broadcast_to(eye, mats.shape).copy()
    new_part = np.zeros_like(mats)
    theta_eps = alpha.symmetry.epsilon(m) if alpha.symmetry is not None and alpha.symmetry.fermionic else None
    for j, (proj0, mult) in enumerate(zip(dec.projectors, dec.multiplicities)):
        if mult == 1:
            continue
        if mult != 2:
            raise InvalidInput("full splitting needs clusters of size at most two; split locally first", multiplicity=mult)
        phibar = dec.eigenphases[j]
        g = _cluster_gap(dec.eigenphases, j)
        delta = min(g, 2.5 * s) / 10.0
        d = wrap_phase(phases_q - phibar)
        sel = np.argsort(np.abs(d), axis=-1, kind="stable")[..., :2]
        dsel = np.take_along_axis(d, sel, axis=-1)
        if float(np.max(np.abs(dsel))) >= 0.5 * g:
            raise SplitTooLarge("pair leaves its cluster inside the ball; reduce the radius", radius=radius)
        order = np.argsort(dsel, axis=-1, kind="stable")
        sel = np.take_along_axis(sel, order, axis=-1)
        dsel = np.take_along_axis(dsel, order, axis=-1)
        u = np.take_along_axis(vecs_q, sel[..., None, :], axis=-1)  # (P, m, 2)
        pq = u @ dagger(u)
        kato = polar_unitary(pq @ proj0 + (eye - pq) @ (eye - proj0))
        w = dagger(kato) @ u
        b1 = symmetric_basis(proj0, 2, alpha.symmetry if theta_eps is not None else None)[:, 0]
        b2 = theta_eps @ np.conj(b1) if theta_eps is not None else None
        if b2 is None:
            b2 = (proj0 - np.outer(b1, b1.conj())) @ np.ones(m)
            if np.linalg.norm(b2) < 1e-8:
                b2 = (proj0 - np.outer(b1, b1.conj())) @ np.arange(1, m + 1)
            b2 = b2 / np.linalg.norm(b2)
        base = np.stack([b1, b2], axis=-1)
        split = np.abs(dsel[..., 1] - dsel[..., 0]) > 1e-10
        e1 = _bloch_pole(base, w[split][..., 0])
        e2 = theta_eps @ np.conj(e1) if theta_eps is not None else base @ (np.array([[0, -1], [1, 0]]) @ np.conj(dagger(base) @ e1))
        B = np.stack([e1, e2], axis=-1)
        C = dagger(B) @ w  # (P, 2, 2)
        diag = np.einsum("...ii->...i", C)
        if np.any(np.abs(diag[split]) < 1e-3):
            raise SplitTooLarge("no pole keeps the rotation away from -1 in this ball", radius=radius)
        fix = np.where(np.abs(diag) > 0, np.conj(diag) / np.maximum(np.abs(diag), 1e-300), 1.0)
        C = C * fix[..., None, :]
        C = np.where(split[..., None, None], C, np.eye(2))
        C = polar_unitary(C)
        logr = principal_log(C)
        rot = exp_i(tau[..., None, None] * logr)
        psi = kato @ B @ rot
        phis = (1.0 - tau)[..., None] * (phibar + np.array([-delta, delta])) + tau[..., None] * (phibar + dsel)
        new_part = new_part + (psi * np.exp(1j * phis)[..., None, :]) @ dagger(psi)
        keep = keep - pq
    out[ball] = mats @ keep + new_part
    return UnitaryFamily(grid, out, None)


def split_with_shrinking_radius(
    alpha: UnitaryFamily, point, s: float, radius: float = 3
) -> tuple[UnitaryFamily, float]:
    """full_split_at_point, halving the ball radius until the split is safe.

    A radius is accepted when the pairs stay inside their clusters on the
    ball and the result is within ``s`` of the input.  With radius 1 only
    the point itself moves, by the offset delta <= s/4.

    Returns the split family and the radius that was used.
    """
    r = float(radius)
    while True:
        try:
            out = full_split_at_point(alpha, point, s, radius=r)
            if sup_distance(alpha, out) <= s or r <= 1.0:
                return out, r
        except SplitTooLarge:
            if r <= 1.0:
                raise
        r = max(1.0, r / 2.0)


# ---------------------------------------------------------------------------
# random certified stages


def _stage(
    alpha: UnitaryFamily,
    name: str,
    amp: float,
    mask: np.ndarray,
    certify: np.ndarray,
    keep: np.ndarray,
    rng: np.random.Generator,
    retries: int,
    floor: float,
) -> tuple[UnitaryFamily, dict[str, Any]]:
    """Perturb on ``mask`` until the spectrum is simple on ``certify``.

    ``keep`` marks points whose earlier certificate must survive.  The stage
    is skipped when ``certify`` is already simple.
    """
    phases = alpha.spectra()
    spacing = min_spacing(phases)
    before = _region_gap(spacing, certify)
    if before >= floor or not np.any(certify):
        return alpha, {"stage": name, "skipped": True, "gap": before}
    for attempt in range(retries):
        w = symmetric_noise(alpha.grid, alpha.m, alpha.symmetry, rng, amp, mask)
        cand = conjugate(alpha, w)
        sp = min_spacing(cand.spectra())
        gap = _region_gap(sp, certify)
        held = _region_gap(sp, keep & ~certify)
        if gap >= floor and held >= min(floor, _region_gap(spacing, keep & ~certify)):
            return cand, {"stage": name, "skipped": False, "attempts": attempt + 1, "amp": amp, "gap": gap}
    raise RetryExhausted(f"{name}: no certified direction found", retries=retries, amp=amp)


def _require_trivial(alpha: UnitaryFamily, stage: str) -> None:
    if alpha.symmetry is not None and alpha.symmetry.fermionic and alpha.grid.dim in (1, 2):
        rep = z2_report(alpha)
        if not rep.trivial:
            raise ObstructionError("nonzero index: no symmetric generic form reachable by homotopy", rep, stage)


def _non_hs_region(alpha: UnitaryFamily) -> np.ndarray:
    """Points where a simple spectrum is required."""
    if alpha.symmetry is not None and alpha.symmetry.fermionic:
        return ~_hs_mask(alpha.grid)
    return np.ones(alpha.grid.shape, dtype=bool)


def line_lift(
    alpha: UnitaryFamily, s: float, seed: int = 0, retries: int = 20, floor: float = GAP_FLOOR, check_index: bool = True
) -> UnitaryFamily:
    """Make the spectrum simple on slabs around the four invariant lines.

    The perturbation is supported on slabs of three grid steps around the
    lines k_j in {0, 1/2}; certification covers the inner slab outside
    balls of the same radius around the high-symmetry points.
    """
    return _line_lift(alpha, s, np.random.default_rng(seed), retries, floor, check_index)[0]


def _line_lift(alpha, s, rng, retries, floor, check_index=True):
    if alpha.grid.dim < 2:
        return alpha, {"stage": "lines", "skipped": True}
    if check_index:
        _require_trivial(alpha, "lines")
    ld = _line_distance(alpha.grid)
    hd = _hs_distance(alpha.grid)
    mask = bump_value(ld, 1.0, 3.0)
    certify = (ld <= 1.0) & (hd >= 3.0)
    return _stage(alpha, "lines", s, mask, certify, _hs_mask(alpha.grid), rng, retries, floor)


def close_contour(
    alpha: UnitaryFamily, s: float, seed: int = 0, retries: int = 20, floor: float = GAP_FLOOR
) -> UnitaryFamily:
    """Make the spectrum simple on the whole neighbourhood of the invariant lines.

    The line segments left open near the high-symmetry points are closed by
    a perturbation supported near those corners; the certificate covers the
    full inner slab except the high-symmetry points themselves.
    """
    return _close_contour(alpha, s, np.random.default_rng(seed), retries, floor)[0]


def _close_contour(alpha, s, rng, retries, floor):
    if alpha.grid.dim < 2:
        return alpha, {"stage": "contour", "skipped": True}
    ld = _line_distance(alpha.grid)
    hd = _hs_distance(alpha.grid)
    mask = bump_value(ld, 1.0, 3.0) * bump_value(hd, 4.0, 6.0)
    region = _non_hs_region(alpha)
    certify = (ld <= 1.0) & region
    keep = ((ld <= 1.0) & (hd >= 3.0)) | _hs_mask(alpha.grid)
    return _stage(alpha, "contour", s, mask, certify, keep, rng, retries, floor)


def bulk_split(
    alpha: UnitaryFamily,
    s: float,
    seed: int = 0,
    retries: int = 20,
    floor: float = GAP_FLOOR,
    passes: int = 3,
) -> UnitaryFamily:
    """Remove the remaining degeneracies away from the invariant lines.

    Each pass draws symmetric perturbations of half the previous size and
    accepts one only if the degeneracy signature (largest cluster size,
    number of points where it occurs) strictly decreases; passes stop once
    the spectrum is simple off the high-symmetry points.
    """
    return _bulk_split(alpha, s, np.random.default_rng(seed), retries, floor, passes)[0]


def _bulk_split(alpha, s, rng, retries, floor, passes=3):
    region = _non_hs_region(alpha)
    keep = _hs_mask(alpha.grid)
    ld = _line_distance(alpha.grid) if alpha.grid.dim else np.zeros(())
    mask = np.ones(alpha.grid.shape) if alpha.grid.dim < 2 else 1.0 - 0.5 * bump_value(ld, 0.0, 2.0)
    cur = alpha
    log = []
    amp = s / 2.0
    for p in range(passes):
        census = cluster_census(cur, eps1=floor)
        sig = census.signature(region)
        if sig[1] == 0 and _region_gap(census.spacing, region) >= floor:
            break
        for attempt in range(retries):
            w = symmetric_noise(cur.grid, cur.m, cur.symmetry, rng, amp, mask)
            cand = conjugate(cur, w)
            cc = cluster_census(cand, eps1=floor)
            if cc.signature(region) < sig and _region_gap(cc.spacing, keep & ~region) >= _region_gap(census.spacing, keep & ~region) - 1e-12:
                cur = cand
                log.append({"pass": p, "attempts": attempt + 1, "amp": amp, "signature": list(cc.signature(region))})
                break
        else:
            raise RetryExhausted("bulk: degeneracy signature did not decrease", retries=retries, signature=list(sig))
        amp /= 2.0
    census = cluster_census(cur, eps1=floor)
    if census.signature(region)[1] != 0:
        raise RetryExhausted("bulk: degeneracies remain after all passes", signature=list(census.signature(region)))
    return cur, {"stage": "bulk", "passes": log, "skipped": not log}


# ---------------------------------------------------------------------------
# certificates and the full pipeline


def certify(
    alpha: UnitaryFamily,
    approx: UnitaryFamily,
    mode: str,
    seed: int,
    stages: list[dict[str, Any]],
    radius: int = 3,
    floor: float = GAP_FLOOR,
    symmetric_input: SymmetryKind | None = None,
) -> GenericFormCertificate:
    """Check an approximant against the generic-form contract."""
    sym = symmetric_input if symmetric_input is not None else alpha.symmetry
    fermionic_sym = mode == "symmetric" and sym is not None and sym.fermionic
    phases = approx.spectra()
    census = cluster_census(approx, eps1=floor, radius=radius, phases=phases)
    region = ~_hs_mask(approx.grid) if fermionic_sym else np.ones(approx.grid.shape, dtype=bool)
    gap = _region_gap(census.spacing, region)
    if approx.grid.dim:
        off_ball = _hs_distance(approx.grid) >= radius
    else:
        off_ball = np.zeros((), dtype=bool)
    ball_gap = _region_gap(census.spacing, off_ball)
    expected = [2] * (approx.m // 2) if fermionic_sym else [1] * approx.m
    for p, mults in census.census.items():
        if sorted(mults) != expected:
            raise RetryExhausted("cluster census at a high-symmetry point is wrong", point=list(p), census=mults)
    if approx.m > 1 and not gap >= floor:
        raise RetryExhausted("spectrum not simple on the grid", gap=gap)
    if mode == "trs-broken" and sym is not None:
        defect = float(np.max(multiset_distance(phases, approx.grid.reflect(phases)))) if approx.grid.dim else 0.0
        if defect > 1e-8:
            raise SymmetryError("spectrum is not even under k -> -k", defect=defect)
    motion = _edge_motion(approx.grid, phases)
    return GenericFormCertificate(
        approximant=approx,
        distance=sup_distance(alpha, approx),
        gap=gap,
        ball_gap=ball_gap,
        A=census.A,
        R=radius,
        mode=mode,
        seed=seed,
        census=census.census,
        continuum=bool(gap > motion / 2.0),
        stages=stages,
    )


def to_generic_form(
    alpha: UnitaryFamily,
    s: float = 0.05,
    mode: str = "symmetric",
    seed: int = 0,
    retries: int = 20,
    floor: float = GAP_FLOOR,
    radius: int = 3,
) -> GenericFormCertificate:
    """Approximate ``alpha`` within ``s`` by a family in generic form.

    Stages, with budgets s/8 each: splitting at the high-symmetry points,
    slabs around the invariant lines, the corners of the contour they form,
    and the bulk.  In ``trs-broken`` mode the Kramers pairs are then split
    inside balls of ``radius`` grid steps with the remaining budget.

    Raises
    ------
    ObstructionError
        Symmetric mode, fermionic family with a nonzero index.
    SplitTooLarge
        The stages together moved the family further than ``s``.
    """
    if mode not in MODES:
        raise InvalidInput("mode must be symmetric or trs-broken", mode=mode)
    if not 0.0 < s < 1.0:
        raise InvalidInput("budget s must lie in (0, 1)", s=s)
    defect = float(np.max(unitarity_defect(alpha.samples)))
    if defect > 1e-8:
        raise InvalidInput("family is not unitary", residual=defect)
    if mode == "symmetric":
        _require_trivial(alpha, "generic-form")
    rng = np.random.default_rng(seed)
    stages: list[dict[str, Any]] = []
    cur = alpha
    if alpha.m > 1:
        sym = alpha.symmetry
        if sym is not None:
            for p in alpha.grid.high_symmetry_points():
                mults = cluster_multiplicities(cur.spectra()[p] if cur.grid.dim else cur.spectra(), PAIR_TOL)
                block = 2 if sym.fermionic else 1
                if max(mults) > block:
                    cur = local_split(cur, p, s / 2.0, radius=radius)
                    stages.append({"stage": "point", "point": list(p), "s": s / 2.0})
        cur, info = _line_lift(cur, s / 8.0, rng, retries, floor, False)
        stages.append(info)
        cur, info = _close_contour(cur, s / 16.0, rng, retries, floor)
        stages.append(info)
        cur, info = _bulk_split(cur, s / 16.0, rng, retries, floor)
        stages.append(info)
        if mode == "trs-broken" and sym is not None and sym.fermionic:
            remaining = 0.8 * (s - sup_distance(alpha, cur))
            for p in alpha.grid.high_symmetry_points():
                cur, used = split_with_shrinking_radius(cur, p, remaining, radius)
                stages.append({"stage": "kramers", "point": list(p), "s": remaining, "radius": used})
    cert = certify(alpha, cur, mode, seed, stages, radius, floor)
    if cert.distance > s:
        raise SplitTooLarge("generic-form approximant is further than the budget", distance=cert.distance, s=s)
    return cert


# ---------------------------------------------------------------------------
# rank two


def _odd_profile(grid: TorusGrid) -> np.ndarray:
    """Odd scalar field vanishing exactly at the high-symmetry points."""
    c = grid.coords()
    if grid.dim == 1:
        return np.sin(TWO_PI * c[..., 0])
    out = np.zeros(grid.shape)
    for ax in range(grid.dim):
        out = out + np.sin(TWO_PI * c[..., ax]) * (1.0 + 0.5 * ax)
    return out / np.max(np.abs(out))


def _odd_weights(grid: TorusGrid) -> np.ndarray:
    """Three odd fields whose common zeros are exactly the high-symmetry points."""
    c = grid.coords()
    if grid.dim == 1:
        return np.stack([np.sin(TWO_PI * c[..., 0])] * 3, axis=-1)
    k1, k2 = c[..., 0], c[..., 1]
    return np.stack([np.sin(TWO_PI * k1), np.sin(TWO_PI * k2), np.sin(TWO_PI * (k1 + k2))], axis=-1)


def edge_slack(G: np.ndarray, region: np.ndarray) -> float:
    """Smallest (|G(a)| + |G(b)| - |G(b) - G(a)|) / 2 over grid edges inside ``region``.

    A positive value means no straight segment between neighbouring samples
    passes through zero (the triangle inequality is strict on every edge),
    so the piecewise-linear interpolant of G has no zero on the region.
    """
    norms = np.linalg.norm(G, axis=-1)
    worst = np.inf
    for ax in range(G.ndim - 1):
        nb = np.roll(G, -1, axis=ax)
        both = region & np.roll(region, -1, axis=ax)
        if not np.any(both):
            continue
        slack = 0.5 * (norms + np.roll(norms, -1, axis=ax) - np.linalg.norm(nb - G, axis=-1))
        worst = min(worst, float(np.min(slack[both])))
    if G.ndim == 1:
        worst = float(norms)
    return worst


def certified_direction_search(
    F: np.ndarray,
    s: float,
    trials: int = 50,
    seed: int = 0,
    weights: np.ndarray | None = None,
    region: np.ndarray | None = None,
) -> tuple[np.ndarray, float, float]:
    """Find v with |v| = s such that G = F + weights * v stays away from zero.

    ``F`` has shape grid + (c,), with the leading axes forming a periodic
    grid.  A draw is certified when every grid edge inside ``region``
    satisfies |G(a)| + |G(b)| > |G(b) - G(a)|: then a zero would have to lie
    off the chord between the samples, which is at distance at most the
    local Lipschitz proxy |G(b) - G(a)| / 2 from both of them.  The first two
    candidates are +-s times the direction in which F varies least; the rest
    are uniform on the sphere.

    Returns
    -------
    v, margin, slack
        The direction, min |G| over the region and the smallest edge slack.
    """
    F = np.asarray(F, dtype=float)
    c = F.shape[-1]
    W = np.ones_like(F) if weights is None else np.broadcast_to(weights, F.shape)
    reg = np.ones(F.shape[:-1], dtype=bool) if region is None else np.asarray(region, dtype=bool)
    rng = np.random.default_rng(seed)
    flat = F[reg].reshape(-1, c)
    _, _, vt = np.linalg.svd(flat if flat.size else np.zeros((1, c)), full_matrices=True)
    cands = [s * vt[-1], -s * vt[-1]]
    best = -np.inf
    for t in range(trials):
        if t < len(cands):
            v = cands[t]
        else:
            x = rng.normal(size=c)
            v = s * x / np.linalg.norm(x)
        G = F + W * v
        norms = np.linalg.norm(G, axis=-1)
        margin = float(np.min(norms[reg])) if np.any(reg) else float("inf")
        slack = edge_slack(G, reg)
        if slack > 0.0 and margin > 0.0:
            return v, margin, slack
        best = max(best, slack)
    raise RetryExhausted("no certified direction found", trials=trials, best_slack=float(best))


def su2_path(
    alpha: UnitaryFamily,
    s: float = 0.05,
    mode: str = "symmetric",
    seed: int = 0,
    trials: int = 50,
    radius: int = 3,
) -> GenericFormCertificate:
    """Rank-two genericization through the decomposition m 1 + i F.sigma.

    The determinant phase is split off first.  A fermionic family equal to
    -1 at the high-symmetry points is multiplied by -1 (a constant step pi 1)
    and one that is +1 at some and -1 at others is obstructed.  F is then
    moved by a certified vector, weighted so that the parities survive:
    the even components of a bosonic F move by a constant, the odd ones by
    an odd profile vanishing at the high-symmetry points.  The result is
    renormalized.  Without symmetry every component moves by a constant.
    Unless a symmetric fermionic family is split in ``trs-broken`` mode, the
    certificate carries the explicit logarithm
    h = (arccos m_s / |F_s|) F_s.sigma + (phase/2 + shift) 1.
    """
    if alpha.m != 2:
        raise ShapeError("su2_path needs m = 2", m=alpha.m)
    grid = alpha.grid
    norm_fam, phi = det_phase_normalize(alpha)
    dec = su2_decompose(norm_fam)
    m_field, F = dec.m.copy(), dec.F.copy()
    fermionic = alpha.symmetry is not None and alpha.symmetry.fermionic
    shift = 0.0
    if fermionic:
        ends = np.array([m_field[p] for p in grid.high_symmetry_points()]) if grid.dim else np.array([m_field])
        if np.any(np.sign(ends) != np.sign(ends[0])):
            raise ObstructionError("values at the high-symmetry points differ", z2_report(alpha), "su2")
        if ends[0] < 0:
            m_field, F, shift = -m_field, -F, np.pi
    odd = _odd_profile(grid) if grid.dim else np.zeros(())
    if fermionic:
        W = _odd_weights(grid) if grid.dim else np.zeros(3)
        region = _hs_distance(grid) >= radius if grid.dim else np.zeros((), dtype=bool)
    else:
        middle = odd if alpha.symmetry is not None else np.ones(grid.shape)
        W = np.stack([np.ones(grid.shape), middle, np.ones(grid.shape)], axis=-1)
        region = np.ones(grid.shape, dtype=bool)
    if grid.dim == 0:
        W = np.ones(3) * (0.0 if fermionic else 1.0)
        W[1] = 0.0
    v, margin, slack = certified_direction_search(F, s / 2.0, trials, seed, W, region)
    Fs = F + W * v
    nrm = np.sqrt(m_field**2 + np.sum(Fs**2, axis=-1))
    mh, Fh = m_field / nrm, Fs / nrm[..., None]
    core = mh[..., None, None] * np.eye(2) + 1j * np.einsum("...j,jab->...ab", Fh, PAULI)
    phase = np.exp(1j * (phi / 2.0 + shift))
    approx = alpha.with_samples(phase[..., None, None] * core)
    stages = [{"stage": "su2", "v": [float(x) for x in v], "margin": margin, "slack": slack, "shift": shift}]
    log = None
    if not (fermionic and mode == "trs-broken"):
        fn = np.linalg.norm(Fh, axis=-1)
        theta = np.arctan2(fn, mh)
        ratio = np.where(fn > 1e-12, theta / np.maximum(fn, 1e-300), 1.0)
        h = ratio[..., None, None] * np.einsum("...j,jab->...ab", Fh, PAULI)
        h = h + (phi / 2.0 + shift)[..., None, None] * np.eye(2)
        log = SelfAdjointFamily(grid, 0.5 * (h + dagger(h)), alpha.symmetry if mode == "symmetric" else None)
    else:
        for p in grid.high_symmetry_points():
            approx, used = split_with_shrinking_radius(approx, p, s / 2.0, radius)
            stages.append({"stage": "kramers", "point": list(p), "s": s / 2.0, "radius": used})
    cert = certify(alpha, approx, mode, seed, stages, radius)
    cert.log = log
    if cert.distance > s:
        raise SplitTooLarge("su2 approximant is further than the budget", distance=cert.distance, s=s)
    return cert
