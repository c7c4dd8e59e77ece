"""Grid-sampled families on the torus and their validators.

A family stores one matrix per grid point in an array of shape
``(N,)*d + (rows, cols)``.  Grid point ``n`` sits at ``k = n/N``; because N is
even the involution ``k -> -k`` and every half-integer coordinate are exact
grid operations, so symmetry relations can be checked and imposed index-wise.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Any, Iterable, Literal

import numpy as np

from .errors import InvalidInput, ShapeError
from .linalg import TWO_PI, dagger, opnorm, polar_unitary, unitary_eig_batch, wrap_phase

Kind = Literal["bosonic", "fermionic"]


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid with N points per axis on the d-torus (d = 0 is a point)."""

    dim: int
    N: int

    def __post_init__(self) -> None:
        if self.dim not in (0, 1, 2, 3):
            raise InvalidInput("grid dimension must be 0, 1, 2 or 3", dim=self.dim)
        if self.N < 8 or self.N % 2:
            raise InvalidInput("points per axis must be even and at least 8", N=self.N)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.dim

    @property
    def size(self) -> int:
        return self.N**self.dim

    @property
    def step(self) -> float:
        return 1.0 / self.N

    def coords(self) -> np.ndarray:
        """Coordinates of all points, shape ``shape + (dim,)``."""
        axes = [np.arange(self.N) / self.N] * self.dim
        if self.dim == 0:
            return np.zeros((0,))
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def centered_coords(self) -> np.ndarray:
        """Coordinates mapped to [-1/2, 1/2)."""
        c = self.coords()
        return np.where(c >= 0.5, c - 1.0, c)

    def index_of(self, value: float) -> int:
        n = value * self.N
        if abs(n - round(n)) > 1e-9:
            raise InvalidInput("coordinate is not a grid point", value=value, N=self.N)
        return int(round(n)) % self.N

    def high_symmetry_points(self) -> list[tuple[int, ...]]:
        """Index tuples of the 2^d points with coordinates in {0, 1/2}."""
        h = self.N // 2
        return [tuple(p) for p in product((0, h), repeat=self.dim)]

    def reflect(self, arr: np.ndarray) -> np.ndarray:
        """Return ``arr`` evaluated at -k (leading ``dim`` axes are the grid)."""
        out = arr
        for ax in range(self.dim):
            out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
        return out

    def shift(self, arr: np.ndarray, axis: int, by: int = 1) -> np.ndarray:
        """Return ``arr`` evaluated at k + by*e_axis/N."""
        return np.roll(arr, -by, axis=axis)


@dataclass(frozen=True)
class SymmetryKind:
    """Type of the time-reversal symmetry and its matrix epsilon.

    Bosonic symmetry uses the identity, fermionic symmetry the standard
    symplectic matrix ``[[0, 1], [-1, 0]]`` (blocks of size m/2), so that the
    basis vectors ``a`` and ``a + m/2`` form Kramers pairs.
    """

    kind: Kind

    def __post_init__(self) -> None:
        if self.kind not in ("bosonic", "fermionic"):
            raise InvalidInput("unknown symmetry kind", kind=self.kind)

    @property
    def theta_square_sign(self) -> int:
        return 1 if self.kind == "bosonic" else -1

    @property
    def fermionic(self) -> bool:
        return self.kind == "fermionic"

    def epsilon(self, size: int) -> np.ndarray:
        if self.kind == "bosonic":
            return np.eye(size, dtype=complex)
        if size % 2:
            raise InvalidInput("fermionic symmetry needs even size", size=size)
        h = size // 2
        eps = np.zeros((size, size), dtype=complex)
        eps[:h, h:] = np.eye(h)
        eps[h:, :h] = -np.eye(h)
        return eps


def symmetry_of(kind: str | None) -> SymmetryKind | None:
    if kind in (None, "none"):
        return None
    return SymmetryKind(kind)  # type: ignore[arg-type]


@dataclass
class ValidationReport:
    """Residuals of a family against its defining properties."""

    residuals: dict[str, float]
    tolerances: dict[str, float]
    failures: list[dict[str, Any]] = field(default_factory=list)
    info: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "tolerances": {k: float(v) for k, v in self.tolerances.items()},
            "failures": self.failures,
            "info": self.info,
        }


def _check(report: ValidationReport, name: str, values: np.ndarray) -> None:
    """Record the max of a per-point residual and the worst location on failure."""
    if values.size == 0:
        report.residuals[name] = 0.0
        return
    worst = float(np.max(values))
    report.residuals[name] = worst
    tol = report.tolerances.get(name)
    if tol is not None and not worst <= tol:
        loc = np.unravel_index(int(np.argmax(values)), values.shape)
        report.failures.append({"check": name, "residual": worst, "index": [int(i) for i in loc]})


@dataclass
class _Family:
    grid: TorusGrid
    samples: np.ndarray
    symmetry: SymmetryKind | None = None

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape[: self.grid.dim] != self.grid.shape or self.samples.ndim != self.grid.dim + 2:
            raise ShapeError(
                "samples do not match the grid",
                expected=list(self.grid.shape),
                got=list(self.samples.shape),
            )

    @property
    def m(self) -> int:
        return self.samples.shape[-1]

    def at(self, index: Iterable[int]) -> np.ndarray:
        return self.samples[tuple(index)]

    def with_samples(self, samples: np.ndarray):
        return replace(self, samples=samples)

    def eps(self) -> np.ndarray:
        if self.symmetry is None:
            return np.eye(self.m, dtype=complex)
        return self.symmetry.epsilon(self.m)


@dataclass
class UnitaryFamily(_Family):
    """One m x m unitary per grid point (matching matrices, beta slices, ...)."""

    def trs_defect(self) -> np.ndarray:
        eps = self.eps()
        ref = self.grid.reflect(self.samples)
        return opnorm(eps @ self.samples - np.swapaxes(ref, -1, -2) @ eps)

    def spectra(self) -> np.ndarray:
        return unitary_eig_batch(self.samples)[0]


@dataclass
class SelfAdjointFamily(_Family):
    """One Hermitian matrix per grid point."""

    def trs_defect(self) -> np.ndarray:
        eps = self.eps()
        ref = self.grid.reflect(self.samples)
        return opnorm(eps @ self.samples - np.swapaxes(ref, -1, -2) @ eps)


@dataclass
class ProjectionFamily(_Family):
    """Rank-m orthogonal projections on C^n sampled on a D-dimensional grid."""

    rank: int = 0

    @property
    def n(self) -> int:
        return self.samples.shape[-1]

    def theta(self) -> np.ndarray:
        return self.symmetry.epsilon(self.n) if self.symmetry else np.eye(self.n, dtype=complex)

    def trs_defect(self) -> np.ndarray:
        eps = self.theta()
        mapped = eps @ np.conj(self.samples) @ np.linalg.inv(eps)
        return opnorm(mapped - self.grid.reflect(self.samples))


def step_norms(grid: TorusGrid, samples: np.ndarray) -> np.ndarray:
    """Largest nearest-neighbour jump ||f(k + e_j/N) - f(k)|| at every point."""
    if grid.dim == 0:
        return np.zeros(())
    jumps = [opnorm(grid.shift(samples, ax) - samples) for ax in range(grid.dim)]
    return np.max(np.stack(jumps), axis=0)


def unitarity_defect(samples: np.ndarray) -> np.ndarray:
    sv = np.linalg.svd(samples, compute_uv=False)
    return np.max(np.abs(sv - 1.0), axis=-1)


def validate_matching(alpha: UnitaryFamily, tol: float = 1e-8, step_tol: float = 1.0) -> ValidationReport:
    """Unitarity, time-reversal and continuity-proxy residuals of a matching family."""
    rep = ValidationReport({}, {"unitarity": tol, "trs": tol, "step": step_tol})
    _check(rep, "unitarity", unitarity_defect(alpha.samples))
    if alpha.symmetry is not None:
        _check(rep, "trs", alpha.trs_defect())
    else:
        rep.tolerances.pop("trs")
    _check(rep, "step", step_norms(alpha.grid, alpha.samples))
    return rep


def validate_self_adjoint(h: SelfAdjointFamily, tol: float = 1e-8) -> ValidationReport:
    rep = ValidationReport({}, {"hermiticity": tol, "trs": tol})
    _check(rep, "hermiticity", opnorm(h.samples - dagger(h.samples)))
    if h.symmetry is not None:
        _check(rep, "trs", h.trs_defect())
    else:
        rep.tolerances.pop("trs")
    return rep


def validate_projections(p: ProjectionFamily, tol: float = 1e-8, step_tol: float = 0.5) -> ValidationReport:
    """Idempotence, self-adjointness, rank, symmetry and continuity proxy."""
    rep = ValidationReport({}, {"idempotence": tol, "selfadjoint": tol, "rank": tol, "trs": tol, "step": step_tol})
    s = p.samples
    _check(rep, "idempotence", opnorm(s @ s - s))
    _check(rep, "selfadjoint", opnorm(s - dagger(s)))
    tr = np.real(np.einsum("...ii->...", s))
    _check(rep, "rank", np.abs(tr - p.rank))
    if p.symmetry is not None:
        _check(rep, "trs", p.trs_defect())
    else:
        rep.tolerances.pop("trs")
    _check(rep, "step", step_norms(p.grid, s))
    rep.info["smoothness_proxy"] = rep.residuals["step"] * p.grid.N
    return rep


# ---------------------------------------------------------------------------
# bumps and smoothing


def smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def bump_value(dist: np.ndarray, plateau: float, support: float) -> np.ndarray:
    """Radial profile: 1 up to ``plateau``, quintic decay, 0 from ``support`` on."""
    d = np.abs(np.asarray(dist, dtype=float))
    return 1.0 - smoothstep((d - plateau) / (support - plateau))


def circle_distance(x: np.ndarray, center: float = 0.0) -> np.ndarray:
    y = np.mod(np.asarray(x, dtype=float) - center + 0.5, 1.0) - 0.5
    return np.abs(y)


@dataclass
class BumpProfile:
    center: float
    plateau: float
    support: float
    values: np.ndarray


def make_bump(center: float, plateau: float, support: float, grid: TorusGrid | int) -> BumpProfile:
    """Periodized even bump sampled on a one-dimensional grid."""
    if not 0.0 <= plateau < support < 0.25:
        raise InvalidInput("bump widths must satisfy plateau < support < 1/4", plateau=plateau, support=support)
    N = grid.N if isinstance(grid, TorusGrid) else int(grid)
    x = np.arange(N) / N
    return BumpProfile(center, plateau, support, bump_value(circle_distance(x, center), plateau, support))


def ball_bump(grid: TorusGrid, center: tuple[float, ...], plateau: float, support: float) -> np.ndarray:
    """Radial bump around ``center`` using the minimal-image distance."""
    c = grid.coords()
    d2 = np.zeros(grid.shape)
    for ax in range(grid.dim):
        d2 = d2 + circle_distance(c[..., ax], center[ax]) ** 2
    return bump_value(np.sqrt(d2), plateau, support)


def convolve_samples(grid: TorusGrid, samples: np.ndarray, width: float) -> np.ndarray:
    """Periodic convolution of every grid axis with a normalized even bump."""
    if not 0.0 <= width < 0.25:
        raise InvalidInput("smoothing width must be below 1/4", width=width)
    N = grid.N
    x = np.arange(N) / N
    dist = circle_distance(x)
    kern = bump_value(dist, 0.0, width) if width > 0 else (dist == 0).astype(float)
    if kern.sum() == 0.0:
        kern = (dist == 0).astype(float)
    kern = kern / kern.sum()
    kern = 0.5 * (kern + np.roll(kern[::-1], 1))
    kf = np.fft.fft(kern).real
    out = np.asarray(samples, dtype=complex)
    for ax in range(grid.dim):
        spec = np.fft.fft(out, axis=ax)
        shape = [1] * out.ndim
        shape[ax] = N
        out = np.fft.ifft(spec * kf.reshape(shape), axis=ax)
    return out


def smooth_even_convolve(family, width: float):
    """Periodic convolution with a normalized even bump of half-width ``width``.

    Unitary families are projected back onto the unitaries with the polar
    factor, which commutes with transposition and with conjugation by epsilon,
    so periodicity and time-reversal symmetry survive exactly.
    """
    out = convolve_samples(family.grid, family.samples, width)
    if isinstance(family, UnitaryFamily):
        out = polar_unitary(out)
    elif isinstance(family, SelfAdjointFamily):
        out = 0.5 * (out + dagger(out))
    return family.with_samples(out)


# ---------------------------------------------------------------------------
# determinant phase


def _bfs_unwrap(grid: TorusGrid, angles: np.ndarray) -> np.ndarray:
    """Unwrap a phase field along a breadth-first tree rooted at the origin."""
    phi = np.full(grid.shape, np.nan)
    if grid.dim == 0:
        return np.asarray(angles, dtype=float)
    origin = (0,) * grid.dim
    phi[origin] = angles[origin]
    queue = deque([origin])
    while queue:
        cur = queue.popleft()
        for ax in range(grid.dim):
            for d in (1, -1):
                nb = list(cur)
                nb[ax] = (nb[ax] + d) % grid.N
                nb = tuple(nb)
                if np.isnan(phi[nb]):
                    phi[nb] = phi[cur] + wrap_phase(angles[nb] - phi[cur])
                    queue.append(nb)
    return phi


def det_phase_normalize(alpha: UnitaryFamily, edge_tol: float = np.pi / 2) -> tuple[UnitaryFamily, np.ndarray]:
    """Split off the determinant: alpha = exp(i phi/m) * (det-one family).

    The phase field is unwrapped along a breadth-first spanning tree from the
    origin.  A jump above ``edge_tol`` on any grid edge (including the edges
    that close the periodic cycles) means the determinant winds or the grid is
    too coarse, and is reported as invalid input.
    """
    dets = np.linalg.det(alpha.samples)
    phi = _bfs_unwrap(alpha.grid, np.angle(dets))
    for ax in range(alpha.grid.dim):
        jump = np.abs(alpha.grid.shift(phi, ax) - phi)
        if float(np.max(jump)) > edge_tol:
            raise InvalidInput("determinant phase is not single valued", axis=ax, jump=float(np.max(jump)))
    if alpha.symmetry is not None:
        ref = alpha.grid.reflect(phi)
        if float(np.max(np.abs(ref - phi))) > 1e-6:
            raise InvalidInput("determinant phase is not even", defect=float(np.max(np.abs(ref - phi))))
        phi = 0.5 * (phi + ref)
    norm = alpha.samples * np.exp(-1j * phi / alpha.m)[..., None, None]
    norm = norm / (np.abs(np.linalg.det(norm)) ** (1.0 / alpha.m))[..., None, None]
    return alpha.with_samples(norm), phi


def restrict(family, axis: int, value: float):
    """Restrict a family to the hyperplane ``k_axis = value``.

    For symmetric families only the invariant hyperplanes value in {0, 1/2}
    are allowed; the restriction is again symmetric.
    """
    grid = family.grid
    if not 0 <= axis < grid.dim:
        raise InvalidInput("axis out of range", axis=axis, dim=grid.dim)
    idx = grid.index_of(value)
    if family.symmetry is not None and idx not in (0, grid.N // 2):
        raise InvalidInput("symmetric families restrict only to k = 0 or 1/2", value=value)
    sub = np.take(family.samples, idx, axis=axis)
    return replace(family, grid=TorusGrid(grid.dim - 1, grid.N), samples=sub)


def multiset_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance between eigenphase multisets, compared after cutting both
    circles at the middle of the widest gap of ``a``."""
    sa = np.sort(a, axis=-1)
    gaps = np.concatenate([sa[..., 1:], sa[..., :1] + TWO_PI], axis=-1) - sa
    j = np.argmax(gaps, axis=-1)
    cut = np.take_along_axis(sa, j[..., None], axis=-1)[..., 0] + 0.5 * np.take_along_axis(gaps, j[..., None], axis=-1)[..., 0]
    la = np.sort(cut[..., None] + np.mod(a - cut[..., None], TWO_PI), axis=-1)
    lb = np.sort(cut[..., None] + np.mod(b - cut[..., None], TWO_PI), axis=-1)
    return np.max(np.abs(np.exp(1j * la) - np.exp(1j * lb)), axis=-1)


def eigenphase_parity_defect(alpha: UnitaryFamily, phases: np.ndarray | None = None) -> float:
    """max_k distance between the eigenphase multisets at k and -k."""
    if phases is None:
        phases = alpha.spectra()
    d = multiset_distance(phases, alpha.grid.reflect(phases))
    return float(np.max(d)) if d.size else 0.0


# ---------------------------------------------------------------------------
# smooth random fields


def fourier_modes(dim: int, max_mode: int = 1) -> list[tuple[int, ...]]:
    """Half of the nonzero integer vectors with entries in [-max_mode, max_mode]."""
    out = []
    for n in product(range(-max_mode, max_mode + 1), repeat=dim):
        if any(n) and next(x for x in n if x) > 0:
            out.append(n)
    return out


def random_hermitian_field(
    grid: TorusGrid, m: int, rng: np.random.Generator, max_mode: int = 1, constant: bool = True
) -> np.ndarray:
    """Trigonometric polynomial of Hermitian matrices with random coefficients."""

    def herm() -> np.ndarray:
        x = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        return 0.5 * (x + x.conj().T)

    c = grid.coords()
    out = np.zeros(grid.shape + (m, m), dtype=complex)
    if constant:
        out += herm()
    for n in fourier_modes(grid.dim, max_mode):
        arg = 2.0 * np.pi * np.tensordot(c, np.array(n, dtype=float), axes=([-1], [0]))
        out += np.cos(arg)[..., None, None] * herm() + np.sin(arg)[..., None, None] * herm()
    return out


def symmetrize_generator(grid: TorusGrid, h: np.ndarray, symmetry: SymmetryKind | None) -> np.ndarray:
    """Project a Hermitian field onto eps h(k) = h(-k)^t eps."""
    if symmetry is None:
        return h
    eps = symmetry.epsilon(h.shape[-1])
    partner = np.linalg.inv(eps) @ np.swapaxes(grid.reflect(h), -1, -2) @ eps
    return 0.5 * (h + partner)


def symmetrize_gauge_generator(grid: TorusGrid, g: np.ndarray, symmetry: SymmetryKind | None) -> np.ndarray:
    """Project a Hermitian field onto eps conj(g(k)) eps^{-1} = -g(-k).

    exp(i g) is then a gauge transformation commuting with the antiunitary
    symmetry: theta exp(i g(k)) theta^{-1} = exp(i g(-k)).
    """
    if symmetry is None:
        return g
    eps = symmetry.epsilon(g.shape[-1])
    partner = eps @ np.conj(grid.reflect(g)) @ np.linalg.inv(eps)
    return 0.5 * (g - partner)
