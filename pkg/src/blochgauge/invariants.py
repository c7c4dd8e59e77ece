"""Z2 invariants of time-reversal symmetric matching families.

The one-dimensional index compares, at the two high-symmetry points, a
continuous square root of det(alpha) with the Pfaffian of eps*alpha; the
product of the two resulting signs is the index.  In two dimensions the index
is evaluated on the four invariant lines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidInput, RefinementNeeded, ShapeError, SymmetryError
from .linalg import cluster_multiplicities, pfaffian, sqrt_det_branch, unitary_eig_batch, wrap_phase
from .torus import SymmetryKind, TorusGrid, UnitaryFamily, restrict

LINES_2D = (("k1=0", 0, 0.0), ("k1=1/2", 0, 0.5), ("k2=0", 1, 0.0), ("k2=1/2", 1, 0.5))


def _c(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


@dataclass
class Z2Report:
    """Indices per line, the signs p at high-symmetry points and audit data."""

    indices: dict[str, int]
    p_values: dict[str, list[complex]]
    consistency: bool
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def trivial(self) -> bool:
        return all(v == 0 for v in self.indices.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "indices": dict(self.indices),
            "p_values": {k: [_c(z) for z in v] for k, v in self.p_values.items()},
            "consistency": bool(self.consistency),
            **self.details,
        }


def _require_fermionic(alpha: UnitaryFamily) -> None:
    if alpha.symmetry is None or not alpha.symmetry.fermionic:
        raise SymmetryError("the index is defined for fermionic families")


def _check_trs(alpha: UnitaryFamily, tol: float) -> None:
    worst = float(np.max(alpha.trs_defect())) if alpha.samples.size else 0.0
    if worst > tol:
        raise SymmetryError("family violates time-reversal symmetry", residual=worst)


def gp_index(alpha: UnitaryFamily, tol: float = 1e-8) -> Z2Report:
    """Index of a one-dimensional fermionic matching family.

    p(k) = sqrt(det alpha(k)) / Pf(eps alpha(k)) at k = 0 and k = 1/2, with the
    square root continued along the grid from 0 to 1/2; the index is 0 when
    p(0) p(1/2) = +1 and 1 otherwise.
    """
    _require_fermionic(alpha)
    if alpha.grid.dim != 1:
        raise ShapeError("gp_index expects a one-dimensional family", dim=alpha.grid.dim)
    _check_trs(alpha, max(tol, 1e-6))
    half = alpha.grid.N // 2
    path = alpha.samples[: half + 1]
    dets = np.linalg.det(path)
    roots = sqrt_det_branch(path, dets=dets)
    eps = alpha.eps()
    pvals = []
    for idx in (0, half):
        mat = eps @ alpha.samples[idx]
        skew = float(np.max(np.abs(mat + mat.T)))
        if skew > max(tol, 1e-6):
            raise SymmetryError("eps*alpha is not antisymmetric at a high-symmetry point", residual=skew, index=idx)
        pf = pfaffian(mat, tol=max(tol, 1e-6))
        pvals.append(roots[idx if idx == 0 else half] / pf)
    prod = pvals[0] * pvals[1]
    index = 0 if np.real(prod) > 0 else 1
    ok = all(abs(p * p - 1.0) <= 1e-8 for p in pvals)
    det_phase = np.unwrap(np.angle(dets))
    return Z2Report(
        {"line": index},
        {"line": pvals},
        ok,
        {"det_phase_half_path": [float(x) for x in det_phase]},
    )


def winding_det(gamma: UnitaryFamily | np.ndarray, max_step: float = np.pi / 2) -> int:
    """Winding number of k -> det gamma(k) over one period."""
    mats = gamma.samples if isinstance(gamma, UnitaryFamily) else np.asarray(gamma)
    dets = np.linalg.det(mats)
    ang = np.angle(np.concatenate([dets, dets[:1]]))
    steps = wrap_phase(np.diff(ang))
    if float(np.max(np.abs(steps))) >= max_step:
        raise RefinementNeeded("det phase sampled too coarsely", max_step=float(np.max(np.abs(steps))))
    total = float(np.sum(steps)) / (2.0 * np.pi)
    w = int(round(total))
    if abs(total - w) > 0.1:
        raise RefinementNeeded("winding is not close to an integer", value=total)
    return w


def factorized_matching(gamma: UnitaryFamily, kind: str = "fermionic") -> UnitaryFamily:
    """alpha(k) = eps^{-1} gamma(-k)^t eps gamma(k), a matching family of the given kind."""
    sym = SymmetryKind(kind)
    eps = sym.epsilon(gamma.m)
    ref = gamma.grid.reflect(gamma.samples)
    alpha = np.linalg.inv(eps) @ np.swapaxes(ref, -1, -2) @ eps @ gamma.samples
    return UnitaryFamily(gamma.grid, alpha, sym)


def gp_index_via_factorization(gamma: UnitaryFamily) -> int:
    """Index of the factorized family computed as deg(det gamma) mod 2.

    The Pfaffian route is evaluated as well and must agree.
    """
    value = winding_det(gamma) % 2
    alpha = factorized_matching(gamma)
    other = gp_index(alpha).indices["line"]
    if other != value:
        raise InvalidInput("Pfaffian and winding routes disagree", winding=value, pfaffian=other)
    return value


def line_names(axis_labels: tuple[str, str] = ("k1", "k2")) -> list[str]:
    return [f"{axis_labels[axis]}={tag}" for axis in (0, 1) for tag in ("0", "1/2")]


def indices_2d(alpha: UnitaryFamily, tol: float = 1e-8, axis_labels: tuple[str, str] = ("k1", "k2")) -> Z2Report:
    """The four line indices of a two-dimensional fermionic family.

    ``axis_labels`` names the two grid axes in the report keys, so a matching
    family living on the (k2, k3) plane can be reported as "k3=0" and so on.
    """
    _require_fermionic(alpha)
    if alpha.grid.dim != 2:
        raise ShapeError("indices_2d expects a two-dimensional family", dim=alpha.grid.dim)
    _check_trs(alpha, max(tol, 1e-6))
    indices, pvals = {}, {}
    for _, axis, value in LINES_2D:
        name = f"{axis_labels[axis]}={'0' if value == 0 else '1/2'}"
        rep = gp_index(restrict(alpha, axis, value), tol)
        indices[name] = rep.indices["line"]
        pvals[name] = rep.p_values["line"]
    consistent = sum(indices.values()) % 2 == 0
    return Z2Report(indices, pvals, consistent)


def z2_report(alpha: UnitaryFamily, axis_labels: tuple[str, str] = ("k1", "k2")) -> Z2Report:
    """Dispatch on dimension; bosonic families are reported as trivial."""
    if alpha.symmetry is None or not alpha.symmetry.fermionic:
        names = ["line"] if alpha.grid.dim == 1 else line_names(axis_labels) if alpha.grid.dim == 2 else []
        return Z2Report({n: 0 for n in names}, {}, True, {"note": "always null-homotopic"})
    if alpha.grid.dim == 1:
        return gp_index(alpha)
    if alpha.grid.dim == 2:
        return indices_2d(alpha, axis_labels=axis_labels)
    if alpha.grid.dim == 0:
        return Z2Report({}, {}, True)
    raise ShapeError("indices are defined for d <= 2", dim=alpha.grid.dim)


def classify(alpha0: UnitaryFamily, alpha1: UnitaryFamily) -> bool:
    """Whether two matching families are equivariantly homotopic."""
    if alpha0.samples.shape != alpha1.samples.shape or alpha0.grid != alpha1.grid:
        raise ShapeError("families have different shapes")
    k0 = alpha0.symmetry.kind if alpha0.symmetry else None
    k1 = alpha1.symmetry.kind if alpha1.symmetry else None
    if k0 != k1:
        raise ShapeError("families have different symmetry kinds")
    if k0 != "fermionic" or alpha0.grid.dim == 0:
        return True
    return z2_report(alpha0).indices == z2_report(alpha1).indices


def kramers_check(alpha: UnitaryFamily | np.ndarray, tol: float = 1e-8) -> bool:
    """Every eigenphase cluster at the high-symmetry points has even size."""
    if isinstance(alpha, UnitaryFamily):
        mats = np.array([alpha.samples[p] for p in alpha.grid.high_symmetry_points()])
    else:
        mats = np.asarray(alpha)[None] if np.asarray(alpha).ndim == 2 else np.asarray(alpha)
    phases, _ = unitary_eig_batch(mats)
    return all(all(c % 2 == 0 for c in cluster_multiplicities(ph, tol)) for ph in phases)


def identity_family(grid: TorusGrid, m: int, symmetry: SymmetryKind | None) -> UnitaryFamily:
    return UnitaryFamily(grid, np.broadcast_to(np.eye(m, dtype=complex), grid.shape + (m, m)).copy(), symmetry)
