"""Discrete parallel transport and matching matrices.

One transport step between neighbouring projections P and P' is the unitary
factor of ``P'P + (1 - P')(1 - P)``.  That operator maps Ran P into Ran P' and
commutes appropriately with its adjoint, so the polar factor intertwines the
two projections exactly; the only discretization error is in *which*
intertwiner is selected, and it vanishes as the grid is refined.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInput, StepTooLarge
from .linalg import dagger, jacobi_eigh, max_opnorm, opnorm, polar_unitary
from .torus import ProjectionFamily, TorusGrid, UnitaryFamily, validate_matching


@dataclass
class TransportResult:
    """Cumulative transports T(path[j], path[0]) and their quality."""

    unitaries: np.ndarray
    residual: float
    max_step: float

    @property
    def total(self) -> np.ndarray:
        return self.unitaries[-1]


def step_unitary(p_from: np.ndarray, p_to: np.ndarray, check: bool = True) -> np.ndarray:
    """Polar-corrected transport step(s) from ``p_from`` to ``p_to``."""
    if check:
        jump = max_opnorm(p_to - p_from)
        if jump >= 1.0:
            raise StepTooLarge("consecutive projections differ by norm >= 1; refine the grid", jump=jump)
    n = p_from.shape[-1]
    one = np.eye(n)
    x = p_to @ p_from + (one - p_to) @ (one - p_from)
    return polar_unitary(x)


def parallel_transport(P: ProjectionFamily, path: Sequence[Sequence[int]]) -> TransportResult:
    """Transport along a path of grid points joined by grid edges."""
    path = [tuple(int(i) % P.grid.N for i in p) for p in path]
    for a, b in zip(path, path[1:]):
        diff = [((y - x + P.grid.N // 2) % P.grid.N) - P.grid.N // 2 for x, y in zip(a, b)]
        if sorted(abs(d) for d in diff)[-1] != 1 or sum(abs(d) for d in diff) != 1:
            raise InvalidInput("path must follow grid edges", frm=list(a), to=list(b))
    n = P.n
    mats = np.array([P.samples[p] for p in path])
    steps = step_unitary(mats[:-1], mats[1:]) if len(path) > 1 else np.zeros((0, n, n))
    cum = [np.eye(n, dtype=complex)]
    for u in steps:
        cum.append(u @ cum[-1])
    cum = np.array(cum)
    resid = max_opnorm(cum[-1] @ mats[0] @ dagger(cum[-1]) - mats[-1])
    max_step = max_opnorm(mats[1:] - mats[:-1]) if len(path) > 1 else 0.0
    return TransportResult(cum, resid, max_step)


def line_transports(P: ProjectionFamily, axis: int = 0) -> np.ndarray:
    """Cumulative transports along every coordinate line parallel to ``axis``.

    Returns an array ``T`` of shape ``(N + 1,) + grid.shape[without axis] +
    (n, n)`` with ``T[j]`` the transport from k_axis = 0 to k_axis = j/N, so
    ``T[N]`` is the transport once around the loop.
    """
    grid = P.grid
    s = np.moveaxis(P.samples, axis, 0)
    nxt = np.roll(s, -1, axis=0)
    jump = max_opnorm(nxt - s)
    if jump >= 1.0:
        raise StepTooLarge("consecutive projections differ by norm >= 1; refine the grid", jump=jump)
    steps = step_unitary(s, nxt, check=False)
    n = P.n
    out = np.empty((grid.N + 1,) + s.shape[1:], dtype=complex)
    out[0] = np.eye(n)
    for j in range(grid.N):
        out[j + 1] = steps[j] @ out[j]
    return out


def matching_matrix(P: ProjectionFamily, frame0, tol: float = 1e-8) -> tuple[UnitaryFamily, dict]:
    """Matching matrices alpha_ab(k) = <xi_a(0,k), T_k(1,0) xi_b(0,k)>.

    The transport runs along the first axis from k_1 = 0 to k_1 = 1 in N
    steps.  ``frame0`` is a frame of the restriction to {k_1 = 0}.

    Returns the family and a small report with residuals.
    """
    vectors = frame0.vectors if hasattr(frame0, "vectors") else np.asarray(frame0)
    grid = P.grid
    sub = TorusGrid(grid.dim - 1, grid.N)
    p0 = P.samples[0]
    span = max_opnorm(vectors @ dagger(vectors) - p0)
    m = vectors.shape[-1]
    orth = max_opnorm(dagger(vectors) @ vectors - np.eye(m))
    if span > 1e-6 or orth > 1e-6:
        raise InvalidInput("frame0 does not span the restricted family", span=span, orthonormality=orth)
    T = line_transports(P, 0)
    loop = T[-1]
    alpha = dagger(vectors) @ loop @ vectors
    fam = UnitaryFamily(sub, alpha, P.symmetry)
    inter = max_opnorm(loop @ p0 @ dagger(loop) - p0)
    rep = validate_matching(fam, tol=tol * (1.0 + 1.0 / grid.N) + inter)
    report = {
        "intertwining": inter,
        "unitarity": rep.residuals["unitarity"],
        "trs": rep.residuals.get("trs", 0.0),
        "valid": rep.passed,
    }
    return fam, report


def holonomy_phase(P: ProjectionFamily, axis: int = 0) -> np.ndarray:
    """Determinant phase of the loop transport restricted to Ran P (Berry phase)."""
    T = line_transports(P, axis)
    s = np.moveaxis(P.samples, axis, 0)[0]
    w = jacobi_eigh(s)[1][..., -P.rank :]
    return np.angle(np.linalg.det(dagger(w) @ T[-1] @ w))


def transport_unitarity(T: np.ndarray) -> float:
    n = T.shape[-1]
    return float(np.max(opnorm(dagger(T) @ T - np.eye(n))))
