"""Continuous periodic (and time-reversal symmetric) Bloch frames.

The frame is built one dimension at a time.  On the lowest line a frame at
k = 0 is transported once around and the holonomy is removed with a single
logarithm.  Each further dimension transports the frame of the face
{k_1 = 0} along k_1; the mismatch after one period is a matching family on
the face, and a multi-step logarithm of it supplies the correction

    xi(k_1, k) = T(k_1, k) xi_0(k) beta(k_1, k).

In symmetric mode a nonzero index of the matching family stops the
construction with an ObstructionError.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidInput, ObstructionError, SymmetryError
from .genericize import symmetric_basis
from .invariants import z2_report
from .linalg import TWO_PI, circular_gaps, dagger, jacobi_eigh, lowdin, max_opnorm, opnorm, principal_log
from .logsmith import beta_family, two_step_log
from .torus import (
    ProjectionFamily,
    SymmetryKind,
    TorusGrid,
    UnitaryFamily,
    ValidationReport,
    _check,
    convolve_samples,
    restrict,
    validate_projections,
)
from .transport import line_transports, matching_matrix

MODES = ("symmetric", "periodic-only")
AXIS_NAMES = ("k1", "k2", "k3")


@dataclass
class BlochFrame:
    """n x m frame matrices (columns xi_1 ... xi_m) at every grid point."""

    grid: TorusGrid
    vectors: np.ndarray
    symmetry: SymmetryKind | None = None
    report: dict[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.vectors.shape[-2]

    @property
    def m(self) -> int:
        return self.vectors.shape[-1]

    @property
    def samples(self) -> np.ndarray:
        return self.vectors


def frame_trs_defect(grid: TorusGrid, vectors: np.ndarray, symmetry: SymmetryKind | None) -> np.ndarray:
    """||xi(-k) - eps_n conj(xi(k)) eps_m|| at every grid point."""
    n, m = vectors.shape[-2:]
    kind = symmetry if symmetry is not None else SymmetryKind("bosonic")
    mapped = kind.epsilon(n) @ np.conj(vectors) @ kind.epsilon(m)
    return opnorm(grid.reflect(vectors) - mapped)


def _clean(P: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Project into Ran P and restore orthonormality (both steps respect the symmetry)."""
    return lowdin(P @ xi)


def frame_point(P0: np.ndarray, rank: int, symmetry: SymmetryKind | None) -> np.ndarray:
    """Orthonormal basis of Ran P0 compatible with the symmetry at a fixed point.

    Bosonic: real vectors.  Fermionic: Kramers pairs, column a + m/2 equal to
    eps conj(column a).  Without symmetry: any orthonormal basis.
    """
    P0 = np.asarray(P0, dtype=complex)
    if symmetry is not None and symmetry.fermionic and rank % 2:
        raise SymmetryError("fermionic frames need even rank", rank=rank)
    return symmetric_basis(P0, rank, symmetry)


def _single_log(alpha: np.ndarray) -> np.ndarray:
    """Spectral logarithm of one unitary with the cut in its widest gap."""
    phases = np.angle(np.linalg.eigvals(alpha)) if alpha.shape[-1] > 1 else np.angle(np.diag(alpha))
    phases = np.sort(phases)
    gaps = circular_gaps(phases)
    j = int(np.argmax(gaps))
    cut = phases[j] + 0.5 * gaps[j] if alpha.shape[-1] > 1 else phases[0] + np.pi
    return principal_log(alpha, cut)


def frame_1d(P: ProjectionFamily, mode: str = "symmetric") -> BlochFrame:
    """Frame on a circle: transport from k = 0 and spread the holonomy as e^{-i k h}.

    The holonomy alpha = xi_0^* T(1) xi_0 is a single matrix; in symmetric mode
    it satisfies eps alpha = alpha^t eps and its spectral logarithm inherits
    that relation, so no obstruction can occur on a circle.
    """
    if P.grid.dim != 1:
        raise InvalidInput("frame_1d needs a one-dimensional family", dim=P.grid.dim)
    sym = P.symmetry if mode == "symmetric" else None
    N = P.grid.N
    xi0 = frame_point(P.samples[0], P.rank, sym)
    T = line_transports(P, 0)
    alpha = dagger(xi0) @ T[N] @ xi0
    h = _single_log(alpha)
    w, v = jacobi_eigh(h)
    k = np.arange(N) / N
    corr = (v[None] * np.exp(-1j * k[:, None, None] * w[None, None, :])) @ dagger(v)[None]
    xi = _clean(P.samples, T[:N] @ xi0 @ corr)
    return BlochFrame(P.grid, xi, sym, {"stage": "1d", "holonomy_phases": [float(x) for x in np.sort(np.angle(np.linalg.eigvals(alpha)))]})


def inductive_step(
    P: ProjectionFamily,
    frame_face: BlochFrame,
    mode: str = "symmetric",
    s: float = 0.05,
    seed: int = 0,
    axis_labels: tuple[str, ...] | None = None,
) -> BlochFrame:
    """Extend a frame of the face {k_1 = 0} to the whole torus.

    ``axis_labels`` name the coordinates of P (used in obstruction reports).

    Raises
    ------
    ObstructionError
        Symmetric mode and the matching family has a nonzero index.
    """
    grid = P.grid
    labels = axis_labels or AXIS_NAMES[: grid.dim]
    sym = P.symmetry if mode == "symmetric" else None
    alpha, mreport = matching_matrix(P, frame_face)
    alpha = UnitaryFamily(alpha.grid, alpha.samples, sym)
    stage = f"{grid.dim}d"
    if sym is not None and sym.fermionic and alpha.grid.dim in (1, 2):
        rep = z2_report(alpha, tuple(labels[1:3])) if alpha.grid.dim == 2 else z2_report(alpha)
        if alpha.grid.dim == 1:
            rep.indices = {labels[1]: rep.indices["line"]}
            rep.p_values = {labels[1]: rep.p_values["line"]}
        if not rep.trivial:
            raise ObstructionError(f"matching family along {labels[0]} is not null-homotopic", rep, stage)
    log = two_step_log(alpha, s, "symmetric" if sym is not None else "trs-broken", seed)
    beta = beta_family(log)
    T = line_transports(P, 0)
    N = grid.N
    xi0 = frame_face.vectors
    slices = [T[j] @ xi0 @ beta.at_grid(j, N) for j in range(N)]
    xi = _clean(P.samples, np.stack(slices, axis=0))
    report = {
        "stage": stage,
        "matching": mreport,
        "log": {"residual": log.residual, "route": log.info.get("route"), "s": log.info.get("s")},
        "beta": beta.report(),
    }
    return BlochFrame(grid, xi, sym, report)


def build_frame(
    P: ProjectionFamily,
    mode: str = "symmetric",
    s: float = 0.05,
    seed: int = 0,
    axis_labels: tuple[str, ...] | None = None,
) -> BlochFrame:
    """Bloch frame on T^D (D <= 3) by induction on the dimension.

    The last axis is done first: for D = 3 the k3 line, then the (k2, k3)
    face, then the full torus.
    """
    if mode not in MODES:
        raise InvalidInput("mode must be symmetric or periodic-only", mode=mode)
    D = P.grid.dim
    if not 1 <= D <= 3:
        raise InvalidInput("frames are built for dimensions 1 to 3", dim=D)
    labels = tuple(axis_labels) if axis_labels is not None else AXIS_NAMES[:D]
    if P.symmetry is not None and mode == "symmetric":
        rep = validate_projections(P)
        if not rep.passed:
            raise InvalidInput("projection family is not valid", report=rep.to_dict())
    if D == 1:
        frame = frame_1d(P, mode)
    else:
        face = build_frame(restrict(P, 0, 0.0), mode, s, seed, tuple(labels[1:]))
        frame = inductive_step(P, face, mode, s, seed, tuple(labels))
        frame.report["face"] = face.report
    return frame


def interpolation_residual(grid: TorusGrid, vectors: np.ndarray) -> float:
    """max over grid edges of ||xi_mid^* xi_mid - 1|| with xi_mid the edge midpoint.

    Equals ||Delta xi||^2 / 4 to leading order, so it measures how well the
    grid resolves the frame and shrinks like N^-2 for a smooth frame.
    """
    m = vectors.shape[-1]
    worst = 0.0
    for ax in range(grid.dim):
        mid = 0.5 * (vectors + grid.shift(vectors, ax))
        worst = max(worst, max_opnorm(dagger(mid) @ mid - np.eye(m)))
    return worst


def check_frame(frame: BlochFrame, P: ProjectionFamily, tol: float = 1e-7, step_tol: float = 1.0) -> ValidationReport:
    """Residuals of the frame properties: orthonormal, spanning, periodic, symmetric, continuous."""
    grid = frame.grid
    xi = frame.vectors
    if xi.shape[:-2] != P.samples.shape[:-2] or xi.shape[-2] != P.n:
        raise InvalidInput("frame and projections live on different grids")
    tols = {"orthonormality": tol, "span": tol, "periodicity": tol, "continuity": step_tol}
    if frame.symmetry is not None:
        tols["trs"] = tol
    rep = ValidationReport({}, tols)
    _check(rep, "orthonormality", opnorm(dagger(xi) @ xi - np.eye(frame.m)))
    _check(rep, "span", opnorm(xi @ dagger(xi) - P.samples))
    # samples are indexed periodically, so k and k + 1 share storage
    _check(rep, "periodicity", np.zeros(grid.shape))
    steps = np.zeros(grid.shape)
    for ax in range(grid.dim):
        steps = np.maximum(steps, opnorm(grid.shift(xi, ax) - xi))
    _check(rep, "continuity", steps)
    trs = frame_trs_defect(grid, xi, P.symmetry)
    if frame.symmetry is not None:
        _check(rep, "trs", trs)
    else:
        rep.info["trs_reported"] = float(np.max(trs)) if trs.size else 0.0
    interp = interpolation_residual(grid, xi)
    rep.info["interpolation_residual"] = interp
    rep.info["resolved"] = bool(interp < 0.25)
    return rep


def fourier_decay(frame: BlochFrame, width: float = 0.0) -> dict[str, Any]:
    """Fourier coefficients of the (optionally smoothed) frame by shell |R|_inf.

    The coefficients are the Wannier-type amplitudes
    w(R) = N^{-D} sum_k xi(k) e^{-2 pi i k.R}.  Reported per shell are the
    largest Frobenius norm, a least-squares decay exponent of log max|w| over
    the shells 1 .. N/2 - 1 and CSV text for plotting.
    """
    grid = frame.grid
    xi = convolve_samples(grid, frame.vectors, width) if width > 0 else frame.vectors
    coef = np.fft.fftn(xi, axes=tuple(range(grid.dim))) / grid.size
    mags = np.sqrt(np.sum(np.abs(coef) ** 2, axis=(-2, -1)))
    freq = np.rint(np.fft.fftfreq(grid.N) * grid.N).astype(int)
    shell = np.zeros(grid.shape, dtype=int)
    for ax in range(grid.dim):
        shape = [1] * grid.dim
        shape[ax] = grid.N
        shell = np.maximum(shell, np.abs(freq).reshape(shape))
    top = grid.N // 2
    maxima = [float(np.max(mags[shell == r])) for r in range(top + 1)]
    rs = np.arange(1, top)
    vals = np.array(maxima[1:top])
    keep = vals > 1e-300
    if np.sum(keep) >= 2:
        slope = float(np.polyfit(rs[keep], np.log(vals[keep]), 1)[0])
    else:
        slope = float("-inf")
    csv = "shell,max_coefficient\n" + "".join(f"{r},{v:.17g}\n" for r, v in enumerate(maxima))
    return {"width": width, "shells": list(range(top + 1)), "max_coefficient": maxima, "decay_exponent": -slope, "csv": csv}
