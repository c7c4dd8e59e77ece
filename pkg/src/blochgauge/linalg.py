"""Dense complex matrix kernels.

Everything here works on small matrices (the rank of a band family), but most
routines accept stacks of shape ``(..., n, n)`` so that a whole grid of samples
is processed in one vectorized sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BranchCutCollision, RefinementNeeded, ShapeError, SymmetryError, UnitarityError

TWO_PI = 2.0 * np.pi
EPS = np.finfo(float).eps


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def opnorm(a: np.ndarray) -> np.ndarray:
    """Spectral norm over the last two axes."""
    a = np.asarray(a)
    if a.shape[-1] == 0 or a.shape[-2] == 0:
        return np.zeros(a.shape[:-2])
    return np.linalg.norm(a, 2, axis=(-2, -1))


def max_opnorm(a: np.ndarray) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(opnorm(a)))


def wrap_phase(x: np.ndarray | float) -> np.ndarray:
    """Map angles to (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, TWO_PI) - np.pi
    return np.where(y <= -np.pi, y + TWO_PI, y)


# ---------------------------------------------------------------------------
# Hermitian eigensolver


def jacobi_eigh(h: np.ndarray, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi diagonalization of a stack of Hermitian matrices.

    Each rotation removes one off-diagonal entry: the entry is first made real
    by a diagonal phase, then annihilated by a real plane rotation.  All
    matrices in the stack are rotated together, so the cost per sweep is
    ``n(n-1)/2`` vectorized updates.

    Parameters
    ----------
    h : ndarray, shape (..., n, n)
        Hermitian input.  Only the Hermitian part is used.
    max_sweeps : int
        Hard cap on the number of sweeps.

    Returns
    -------
    w : ndarray, shape (..., n)
        Eigenvalues in ascending order.
    v : ndarray, shape (..., n, n)
        Unitary matrix whose columns are the eigenvectors.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise ShapeError("jacobi_eigh needs square matrices", shape=list(h.shape))
    lead = h.shape[:-2]
    n = h.shape[-1]
    a = (0.5 * (h + dagger(h))).reshape(-1, n, n).copy()
    v = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()
    scale = np.linalg.norm(a, axis=(-2, -1)) + 1e-300
    offmask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a[:, offmask]) ** 2, axis=-1)) if n > 1 else np.zeros(len(a))
        if np.all(off <= 4.0 * EPS * scale):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                mag = np.abs(apq)
                live = mag > 1e-300 + 1e-18 * EPS * scale
                if not np.any(live):
                    continue
                ph = np.where(live, apq / np.where(live, mag, 1.0), 1.0)
                theta = np.where(live, (a[:, q, q].real - a[:, p, p].real) / (2.0 * np.where(live, mag, 1.0)), 0.0)
                sgn = np.where(theta >= 0.0, 1.0, -1.0)
                t = np.where(live, sgn / (np.abs(theta) + np.sqrt(theta * theta + 1.0)), 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cph = np.conj(ph)
                # columns: A <- A G with G = [[c, s], [-s*conj(ph), c*conj(ph)]]
                colp = a[:, :, p].copy()
                colq = a[:, :, q]
                a[:, :, p] = c[:, None] * colp - (s * cph)[:, None] * colq
                a[:, :, q] = s[:, None] * colp + (c * cph)[:, None] * colq
                # rows: A <- G^* A
                rowp = a[:, p, :].copy()
                rowq = a[:, q, :]
                a[:, p, :] = c[:, None] * rowp - (s * ph)[:, None] * rowq
                a[:, q, :] = s[:, None] * rowp + (c * ph)[:, None] * rowq
                a[:, p, q] = 0.0
                a[:, q, p] = 0.0
                vp = v[:, :, p].copy()
                vq = v[:, :, q]
                v[:, :, p] = c[:, None] * vp - (s * cph)[:, None] * vq
                v[:, :, q] = s[:, None] * vp + (c * cph)[:, None] * vq
    w = np.real(np.einsum("bii->bi", a))
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    return w.reshape(lead + (n,)), v.reshape(lead + (n, n))


@dataclass
class SpectralDecomp:
    """Clustered spectral data of one matrix.

    ``eigenphases`` holds eigenvalues for Hermitian input and angles in
    (-pi, pi] for unitary input; ``vectors`` keeps the unclustered eigenbasis.
    """

    eigenphases: np.ndarray
    projectors: list[np.ndarray]
    multiplicities: list[int]
    vectors: np.ndarray = field(repr=False, default=None)
    values: np.ndarray = field(repr=False, default=None)

    def reconstruct(self, unitary: bool = False) -> np.ndarray:
        vals = np.exp(1j * self.eigenphases) if unitary else self.eigenphases
        return sum(lam * p for lam, p in zip(vals, self.projectors))


def _cluster_runs(values: np.ndarray, tol: float, circular: bool) -> list[list[int]]:
    """Group sorted values whose consecutive gaps are <= tol."""
    n = len(values)
    if n == 0:
        return []
    groups = [[0]]
    for i in range(1, n):
        if values[i] - values[i - 1] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    if circular and len(groups) > 1 and (values[0] + TWO_PI - values[-1]) <= tol:
        groups[0] = groups[-1] + groups[0]
        groups.pop()
    return groups


def herm_eig(h: np.ndarray, tol: float = 1e-10) -> SpectralDecomp:
    """Ascending eigenvalues and eigenprojectors of a Hermitian matrix.

    Eigenvalues closer than ``tol`` (relative to the norm) share one projector.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ShapeError("herm_eig expects one square matrix", shape=list(h.shape))
    asym = max_opnorm(h - dagger(h))
    if asym > tol * max(1.0, max_opnorm(h)):
        raise SymmetryError("matrix is not Hermitian", residual=asym)
    w, v = jacobi_eigh(h)
    scale = max(1.0, float(np.max(np.abs(w))) if len(w) else 1.0)
    groups = _cluster_runs(w, tol * scale, circular=False)
    projs, vals, mult = [], [], []
    for g in groups:
        vg = v[:, g]
        projs.append(vg @ dagger(vg))
        vals.append(float(np.mean(w[g])))
        mult.append(len(g))
    return SpectralDecomp(np.array(vals), projs, mult, vectors=v, values=w)


# ---------------------------------------------------------------------------
# Unitary spectral decomposition


def _masked_rotate(mats: np.ndarray, v: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Diagonalize v^* M v restricted to the blocks allowed by ``mask``."""
    m = dagger(v) @ mats @ v
    m = np.where(mask, m, 0.0)
    _, w = jacobi_eigh(m)
    return v @ w


def unitary_eig_batch(u: np.ndarray, refine_tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Eigenphases and eigenvectors of a stack of unitaries.

    The commuting Hermitian parts ``(U+U*)/2`` and ``(U-U*)/2i`` are
    diagonalized in turn: the second pass only mixes vectors whose
    eigenvalues of the first part agree to ``refine_tol``, which resolves
    pairs such as e^{+-i theta} that share their real part.

    Returns phases in (-pi, pi], sorted ascending, and the matching vectors.
    """
    u = np.asarray(u, dtype=complex)
    re = 0.5 * (u + dagger(u))
    im = (u - dagger(u)) / 2j
    dr, v = jacobi_eigh(re)
    n = u.shape[-1]
    close = np.abs(dr[..., :, None] - dr[..., None, :]) <= refine_tol
    if n > 1 and np.any(close & ~np.eye(n, dtype=bool)):
        v = _masked_rotate(im, v, close)
    lam = np.einsum("...ii->...i", dagger(v) @ u @ v)
    phases = np.angle(lam)
    phases = np.where(phases <= -np.pi, np.pi, phases)
    order = np.argsort(phases, axis=-1, kind="stable")
    phases = np.take_along_axis(phases, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    return phases, v


def degeneracy_threshold(u: np.ndarray) -> float:
    return max(1e-12, 1e3 * EPS * max_opnorm(u))


def unitary_eig(u: np.ndarray, tol: float = 1e-10) -> SpectralDecomp:
    """Clustered spectral decomposition of one unitary matrix.

    Eigenphases closer than ``tol`` on the circle are merged into one cluster;
    the reported phase is the circular mean of the cluster.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ShapeError("unitary_eig expects one square matrix", shape=list(u.shape))
    n = u.shape[0]
    res = max_opnorm(dagger(u) @ u - np.eye(n))
    if res > max(tol, 1e-8):
        raise UnitarityError("matrix is not unitary", residual=res)
    phases, v = unitary_eig_batch(u)
    groups = _cluster_runs(phases, max(tol, degeneracy_threshold(u)), circular=True)
    projs, vals, mult = [], [], []
    for g in groups:
        vg = v[:, g]
        projs.append(vg @ dagger(vg))
        vals.append(float(np.angle(np.mean(np.exp(1j * phases[g])))))
        mult.append(len(g))
    order = np.argsort(vals, kind="stable")
    return SpectralDecomp(
        np.array(vals)[order],
        [projs[i] for i in order],
        [mult[i] for i in order],
        vectors=v,
        values=phases,
    )


def cluster_multiplicities(phases: np.ndarray, tol: float) -> list[int]:
    """Sizes of circular clusters of one sorted phase vector."""
    return [len(g) for g in _cluster_runs(np.sort(phases), tol, circular=True)]


def circular_gaps(phases: np.ndarray) -> np.ndarray:
    """Consecutive circular spacings of sorted phases, shape (..., m)."""
    p = np.sort(phases, axis=-1)
    nxt = np.concatenate([p[..., 1:], p[..., :1] + TWO_PI], axis=-1)
    return nxt - p


def min_spacing(phases: np.ndarray) -> np.ndarray:
    """Smallest distance between two eigenphases (inf for m = 1)."""
    if phases.shape[-1] < 2:
        return np.full(phases.shape[:-1], np.inf)
    return np.min(circular_gaps(phases), axis=-1)


# ---------------------------------------------------------------------------
# Pfaffian


def pfaffian(a: np.ndarray, tol: float = 1e-10) -> complex:
    """Pfaffian of an even-dimensional antisymmetric matrix.

    Householder reflections bring the matrix to skew-tridiagonal form two
    columns at a time; each true reflection contributes a factor of -1 (its
    determinant) and the superdiagonal entries are multiplied up.
    """
    a = np.array(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError("pfaffian expects a square matrix", shape=list(a.shape))
    n = a.shape[0]
    if n % 2:
        raise ShapeError("pfaffian needs even size", size=n)
    scale = max(1.0, float(np.max(np.abs(a))) if n else 1.0)
    skew = float(np.max(np.abs(a + a.T))) if n else 0.0
    if skew > tol * scale:
        raise SymmetryError("matrix is not antisymmetric", residual=skew)
    a = 0.5 * (a - a.T)
    pf = complex(1.0)
    for k in range(0, n - 1, 2):
        x = a[k + 1 :, k].copy()
        tail = np.vdot(x[1:], x[1:]).real if len(x) > 1 else 0.0
        if tail > 0.0:
            norm_x = np.sqrt(abs(x[0]) ** 2 + tail)
            phase = x[0] / abs(x[0]) if abs(x[0]) > 0 else 1.0
            vvec = x.copy()
            vvec[0] += phase * norm_x
            vvec /= np.linalg.norm(vvec)
            hmat = np.eye(len(x), dtype=complex) - 2.0 * np.outer(vvec, np.conj(vvec))
            # A <- Q A Q^T, Q = diag(1_{k+1}, H)
            a[k + 1 :, :] = hmat @ a[k + 1 :, :]
            a[:, k + 1 :] = a[:, k + 1 :] @ hmat.T
            pf *= -1.0
        pf *= a[k, k + 1]
        if pf == 0:
            return 0j
    return complex(pf)


# ---------------------------------------------------------------------------
# exponential, logarithm, square root of det


def exp_i(h: np.ndarray) -> np.ndarray:
    """exp(iH) for a Hermitian matrix or a stack of them."""
    w, v = jacobi_eigh(h)
    return (v * np.exp(1j * w)[..., None, :]) @ dagger(v)


def lift_phases(phases: np.ndarray, cut: np.ndarray | float) -> np.ndarray:
    """Representatives of ``phases`` in the half-open arc [cut - 2pi, cut)."""
    cut = np.asarray(cut, dtype=float)
    low = cut - TWO_PI
    return low[..., None] + np.mod(phases - low[..., None], TWO_PI)


def principal_log(u: np.ndarray, cut_phase: np.ndarray | float = np.pi, tol: float = 1e-6) -> np.ndarray:
    """Self-adjoint H with exp(iH) = U and spectrum in (cut - 2pi, cut).

    ``cut_phase`` may be a scalar or one angle per matrix of the stack.  The
    logarithm is assembled from spectral data, so any relation of the form
    eps U = U^t eps is inherited by H.

    Raises
    ------
    BranchCutCollision
        If an eigenvalue lies within ``tol`` of exp(i cut_phase).
    """
    u = np.asarray(u, dtype=complex)
    phases, v = unitary_eig_batch(u)
    cut = np.broadcast_to(np.asarray(cut_phase, dtype=float), u.shape[:-2])
    lifted = lift_phases(phases, cut)
    dist = np.minimum(lifted - (cut[..., None] - TWO_PI), cut[..., None] - lifted)
    worst = float(np.min(dist)) if dist.size else np.inf
    if worst < tol:
        raise BranchCutCollision("eigenvalue too close to the branch cut", distance=worst)
    return (v * lifted[..., None, :]) @ dagger(v)


def sqrt_det_branch(path: Sequence[np.ndarray] | np.ndarray, dets: np.ndarray | None = None) -> np.ndarray:
    """Continuous square root of det along an ordered path of unitaries.

    The first value has phase in (-pi/2, pi/2]; each later value is the root
    nearer to its predecessor.  Consecutive determinant phases must differ by
    less than pi/2.
    """
    if dets is None:
        mats = np.asarray(path, dtype=complex)
        dets = np.linalg.det(mats)
    dets = np.asarray(dets, dtype=complex)
    ang = np.angle(dets)
    steps = wrap_phase(np.diff(ang))
    if steps.size and float(np.max(np.abs(steps))) >= np.pi / 2:
        raise RefinementNeeded("det phase jumps too much along the path", max_step=float(np.max(np.abs(steps))))
    half = np.concatenate([[ang[0] / 2.0], ang[0] / 2.0 + np.cumsum(steps) / 2.0])
    return np.sqrt(np.abs(dets)) * np.exp(1j * half)


# ---------------------------------------------------------------------------
# polar decomposition


def polar_unitary(x: np.ndarray, tol: float = 1e-12, max_iter: int = 100) -> np.ndarray:
    """Unitary factor of the polar decomposition by Newton iteration.

    Iterates ``X <- (X + X^{-*}) / 2`` on the whole stack until the update is
    below ``tol``.
    """
    x = np.asarray(x, dtype=complex).copy()
    for _ in range(max_iter):
        nxt = 0.5 * (x + dagger(np.linalg.inv(x)))
        delta = float(np.max(np.abs(nxt - x))) if x.size else 0.0
        x = nxt
        if delta <= tol:
            break
    return x


def lowdin(frame: np.ndarray) -> np.ndarray:
    """Symmetric (Lowdin) re-orthonormalization of the columns of a stack."""
    s = dagger(frame) @ frame
    w, v = jacobi_eigh(s)
    inv_sqrt = (v * (1.0 / np.sqrt(np.maximum(w, 1e-300)))[..., None, :]) @ dagger(v)
    return frame @ inv_sqrt
