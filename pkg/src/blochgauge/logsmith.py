"""Logarithms of matching families, the beta extension and explicit homotopies.

A multi-step logarithm of alpha is a list of self-adjoint families
h_1, ..., h_M with

    alpha = e^{i h_M/2} ... e^{i h_2/2} e^{i h_1} e^{i h_2/2} ... e^{i h_M/2}.

Two steps always suffice once alpha has been approximated by a family in
generic form: the outer step is a logarithm of the approximant with a branch
cut threaded through a spectral gap, the inner one is a principal logarithm
of a matrix close to the identity.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import (
    BranchCutCollision,
    InvalidInput,
    LabelingFailure,
    RefinementNeeded,
    RetryExhausted,
    SplitTooLarge,
    SubdivisionNeeded,
)
from .genericize import (
    GAP_FLOOR,
    GenericFormCertificate,
    _offsets,
    su2_path,
    to_generic_form,
)
from .invariants import z2_report
from .linalg import TWO_PI, circular_gaps, dagger, exp_i, jacobi_eigh, max_opnorm, principal_log, unitary_eig_batch, wrap_phase
from .torus import (
    SelfAdjointFamily,
    SymmetryKind,
    TorusGrid,
    UnitaryFamily,
    det_phase_normalize,
    multiset_distance,
    symmetrize_generator,
    validate_self_adjoint,
)

RESIDUAL_TOL = 1e-8


@dataclass
class MultiStepLog:
    """Steps h_1 (innermost) ... h_M (outermost) and the family they rebuild."""

    steps: list[SelfAdjointFamily]
    target: UnitaryFamily
    mode: str = "symmetric"
    residual: float = 0.0
    info: dict[str, Any] = field(default_factory=dict)

    @property
    def M(self) -> int:
        return len(self.steps)

    @property
    def grid(self) -> TorusGrid:
        return self.target.grid

    @property
    def symmetry(self) -> SymmetryKind | None:
        return self.target.symmetry if self.mode == "symmetric" else None

    def step_residuals(self) -> list[dict[str, float]]:
        out = []
        for h in self.steps:
            rep = validate_self_adjoint(h)
            out.append({k: float(v) for k, v in rep.residuals.items()})
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "M": self.M,
            "mode": self.mode,
            "residual": float(self.residual),
            "steps": self.step_residuals(),
            "info": self.info,
        }


def reconstruct(log: MultiStepLog | Sequence[SelfAdjointFamily]) -> np.ndarray:
    """e^{i h_M/2} ... e^{i h_1} ... e^{i h_M/2} at every grid point."""
    steps = log.steps if isinstance(log, MultiStepLog) else list(log)
    out = exp_i(steps[0].samples)
    for h in steps[1:]:
        half = exp_i(0.5 * h.samples)
        out = half @ out @ half
    return out


def _finish(steps: list[np.ndarray], alpha: UnitaryFamily, mode: str, info: dict[str, Any]) -> MultiStepLog:
    """Symmetrize the steps exactly and record the reconstruction residual."""
    sym = alpha.symmetry if mode == "symmetric" else None
    fams = []
    for h in steps:
        h = 0.5 * (h + dagger(h))
        h = symmetrize_generator(alpha.grid, h, sym)
        fams.append(SelfAdjointFamily(alpha.grid, h, sym))
    log = MultiStepLog(fams, alpha, mode, 0.0, info)
    log.residual = max_opnorm(reconstruct(log) - alpha.samples) if alpha.samples.size else 0.0
    return log


# ---------------------------------------------------------------------------
# labels and branch cuts


@dataclass
class LabeledSpectrum:
    """Eigenphases continued from a center point along staircase paths.

    ``phases`` are real lifts (not reduced mod 2 pi); ``labels_ok`` marks the
    points of the labeled domain.
    """

    phases: np.ndarray
    vectors: np.ndarray
    A: float
    center: tuple[int, ...]
    domain: np.ndarray


def _staircase_order(grid: TorusGrid, center: tuple[int, ...], domain: np.ndarray):
    """Points of the domain by increasing |offset|_1 with their staircase parents."""
    off = _offsets(grid, center)
    l1 = np.sum(np.abs(off), axis=-1)
    pts = [tuple(int(i) for i in p) for p in np.argwhere(domain)]
    pts.sort(key=lambda p: (int(l1[p]), p))
    parents = {}
    for p in pts:
        o = off[p]
        if not np.any(o):
            continue
        ax = int(np.argmax(np.abs(o)))  # ties go to the lower axis
        q = list(p)
        q[ax] = (q[ax] - int(np.sign(o[ax]))) % grid.N
        parents[p] = tuple(q)
    return pts, parents


def label_eigenvalues(
    alpha_hat: UnitaryFamily,
    center: Sequence[int] | None = None,
    domain: np.ndarray | None = None,
    A: float | None = None,
) -> LabeledSpectrum:
    """Label a simple spectrum continuously on a star-shaped region.

    At the center the eigenvalues are numbered by increasing argument in
    (-pi, pi].  Every other point inherits the labels of its staircase parent
    (one step closer to the center, along the axis with the largest offset)
    by nearest-phase matching.  Afterwards every grid edge inside the domain
    is checked: labeled phases of neighbours must differ by less than A/2.

    Raises
    ------
    LabelingFailure
        A label jumps by A/2 or more, or two labels compete for one
        eigenvalue.  On a region that is not star-shaped this reports a
        monodromy instead of silently mislabeling.
    """
    grid = alpha_hat.grid
    center = tuple(center) if center is not None else (0,) * grid.dim
    dom = np.ones(grid.shape, dtype=bool) if domain is None else np.asarray(domain, dtype=bool)
    phases, vecs = unitary_eig_batch(alpha_hat.samples)
    m = alpha_hat.m
    if A is None:
        gaps = np.min(circular_gaps(phases), axis=-1) if m > 1 else np.full(grid.shape, TWO_PI)
        A = float(np.min(gaps[dom]))
    if not A > 0:
        raise LabelingFailure("spectrum is not simple on the domain", A=A)
    lab = np.full(grid.shape + (m,), np.nan)
    lvec = np.zeros_like(vecs)
    lab[center] = phases[center]
    lvec[center] = vecs[center]
    pts, parents = _staircase_order(grid, center, dom)
    for p in pts:
        if p == center:
            continue
        par = parents[p]
        if not dom[par]:
            raise LabelingFailure("domain is not star-shaped around the center", point=list(p))
        d = wrap_phase(phases[p][None, :] - lab[par][:, None])  # (parent label, child eig)
        pick = np.argmin(np.abs(d), axis=-1)
        if len(set(pick.tolist())) != m:
            raise LabelingFailure("two labels compete for one eigenvalue", point=list(p))
        jump = np.abs(d[np.arange(m), pick])
        if float(np.max(jump)) >= A / 2.0:
            raise LabelingFailure("label jump exceeds half the gap", point=list(p), jump=float(np.max(jump)), A=A)
        lab[p] = lab[par] + d[np.arange(m), pick]
        lvec[p] = vecs[p][:, pick]
    for ax in range(grid.dim):
        nb = np.roll(lab, -1, axis=ax)
        both = dom & np.roll(dom, -1, axis=ax)
        if np.any(both):
            jump = np.max(np.abs(nb - lab), axis=-1)[both]
            if float(np.max(jump)) >= A / 2.0:
                idx = np.argwhere(both)[int(np.argmax(jump))]
                raise LabelingFailure(
                    "labels disagree across a grid edge", axis=ax, point=[int(i) for i in idx], jump=float(np.max(jump))
                )
    return LabeledSpectrum(lab, lvec, A, center, dom)


@dataclass
class BranchCutField:
    """Real angle field kept inside a spectral gap at every grid point."""

    lam: np.ndarray
    margin: float
    info: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"margin": float(self.margin), **self.info}


def _gap_around(phases: np.ndarray, lam: float) -> tuple[float, float]:
    """Lower and upper ends (relative to lam) of the spectral gap containing lam."""
    rel = np.mod(phases - lam, TWO_PI)
    return float(np.max(rel) - TWO_PI), float(np.min(rel))


def _track_gap(grid: TorusGrid, phases: np.ndarray, lam0: float):
    """Follow the gap containing lam0 from the origin along a BFS tree.

    Each new value is the midpoint of the gap containing the parent value.
    Returns the field and the half-widths of the tracked gaps.
    """
    lam = np.full(grid.shape, np.nan)
    half = np.zeros(grid.shape)
    origin = (0,) * grid.dim
    lo, hi = _gap_around(phases[origin], lam0)
    lam[origin] = lam0 + 0.5 * (lo + hi)
    half[origin] = 0.5 * (hi - lo)
    queue = deque([origin])
    while queue:
        cur = queue.popleft()
        for ax in range(grid.dim):
            for d in (1, -1):
                nb = list(cur)
                nb[ax] = (nb[ax] + d) % grid.N
                nb = tuple(nb)
                if np.isnan(lam[nb]):
                    lo, hi = _gap_around(phases[nb], lam[cur])
                    lam[nb] = lam[cur] + 0.5 * (lo + hi)
                    half[nb] = 0.5 * (hi - lo)
                    queue.append(nb)
    return lam, half


def _cut_candidates(phases0: np.ndarray, floor: float) -> list[float]:
    """Gap midpoints at the origin: between the 2nd and 3rd phases first, then widest first."""
    m = len(phases0)
    gaps = circular_gaps(phases0)
    mids = [(phases0[j] + 0.5 * gaps[j], gaps[j]) for j in range(m)]
    order = ([1] if m >= 3 else []) + sorted(range(m), key=lambda j: -gaps[j])
    out, seen = [], set()
    for j in order:
        if j in seen or not gaps[j] > floor:
            continue
        seen.add(j)
        out.append(float(wrap_phase(mids[j][0])))
    return out


def branch_cut(
    alpha_hat: UnitaryFamily | GenericFormCertificate,
    symmetric: bool | None = None,
    floor: float = GAP_FLOOR,
) -> BranchCutField:
    """Angle field Lambda with exp(i Lambda(k)) in the resolvent set of alpha_hat(k).

    Lambda starts at a gap midpoint at the origin (between the second and
    third eigenphases by increasing argument when that gap is open) and is
    carried to every grid point by following the same gap.  A candidate is
    accepted when

    * its gap stays wider than ``floor`` everywhere,
    * on every grid edge, including the edges closing the periodic cycles,
      Lambda is continued consistently (no monodromy),
    * the eigenphases move less across each edge than the gap half-widths at
      its two ends, so no eigenvalue can cross the cut between samples,
    * in symmetric mode Lambda(-k) = Lambda(k).

    Among the accepted candidates the one with the widest worst-case gap is
    returned: the outer logarithm varies like 2 pi / gap wherever the
    eigenvectors on both sides of the cut rotate, so a wide gap keeps it
    resolvable on the grid.

    Raises
    ------
    BranchCutCollision
        No candidate gap passes the checks.
    """
    if isinstance(alpha_hat, GenericFormCertificate):
        alpha_hat = alpha_hat.approximant
    grid = alpha_hat.grid
    if symmetric is None:
        symmetric = alpha_hat.symmetry is not None
    phases = alpha_hat.spectra()
    if grid.dim == 0:
        cands = _cut_candidates(phases, floor)
        if not cands:
            raise BranchCutCollision("no spectral gap at the single point")
        lo, hi = _gap_around(phases, cands[0])
        return BranchCutField(np.array(cands[0] + 0.5 * (lo + hi)), 0.5 * (hi - lo), {"candidate": 0})
    origin = (0,) * grid.dim
    motion = {ax: multiset_distance(phases, grid.shift(phases, ax)) for ax in range(grid.dim)}
    failures: list[dict[str, Any]] = []
    best: BranchCutField | None = None
    for c, lam0 in enumerate(_cut_candidates(phases[origin], floor)):
        lam, half = _track_gap(grid, phases, lam0)
        if float(np.min(half)) <= 0.5 * floor:
            failures.append({"candidate": c, "why": "gap closes"})
            continue
        ok = True
        for ax in range(grid.dim):
            nb_lam = grid.shift(lam, ax)
            nb_phases = grid.shift(phases, ax)
            # continue each point's Lambda to its neighbour and compare
            rel = np.mod(nb_phases - lam[..., None], TWO_PI)
            pred = lam + 0.5 * (np.max(rel, axis=-1) - TWO_PI + np.min(rel, axis=-1))
            if float(np.max(np.abs(pred - nb_lam))) > 1e-9:
                failures.append({"candidate": c, "why": "monodromy", "axis": ax})
                ok = False
                break
            chord = 2.0 * np.arcsin(np.minimum(1.0, motion[ax] / 2.0))
            if np.any(chord >= half + grid.shift(half, ax)):
                failures.append({"candidate": c, "why": "edge motion exceeds the gap", "axis": ax})
                ok = False
                break
        if not ok:
            continue
        if symmetric:
            defect = float(np.max(np.abs(grid.reflect(lam) - lam)))
            if defect > 1e-9:
                failures.append({"candidate": c, "why": "not even", "defect": defect})
                continue
            lam = 0.5 * (lam + grid.reflect(lam))
        # a constant shift by 2 pi n keeps every property; centre the window
        # [Lambda - 2 pi, Lambda) of the outer logarithm on zero
        turns = np.round((0.5 * (float(np.max(lam)) + float(np.min(lam))) - np.pi) / TWO_PI)
        lam = lam - TWO_PI * turns
        margin = float(np.min(half))
        if best is None or margin > best.margin:
            best = BranchCutField(lam, margin, {"candidate": c, "lambda0": lam0})
    if best is None:
        raise BranchCutCollision("no spectral gap can carry a global branch cut", failures=failures)
    best.info["rejected"] = failures
    return best


# ---------------------------------------------------------------------------
# two-step logarithm


def _inner_log(alpha: UnitaryFamily, h2: np.ndarray) -> np.ndarray:
    half = exp_i(-0.5 * h2)
    return principal_log(half @ alpha.samples @ half, np.pi)


def _one_step(alpha: UnitaryFamily, mode: str) -> MultiStepLog:
    """m = 1: the unwrapped phase is a global logarithm."""
    _, phi = det_phase_normalize(alpha)
    h1 = np.asarray(phi, dtype=complex)[..., None, None]
    return _finish([h1, np.zeros_like(h1)], alpha, mode, {"route": "phase"})


PRINCIPAL_MARGIN = 0.1


def _principal_route(alpha: UnitaryFamily, mode: str) -> MultiStepLog | None:
    """Single logarithm with the cut at pi when -1 stays out of every spectrum.

    The principal logarithm commutes with transposition and conjugation by
    eps, so it keeps the symmetry; h_2 = 0 makes it a two-step logarithm.
    """
    phases = alpha.spectra()
    if float(np.min(np.pi - np.abs(phases))) < PRINCIPAL_MARGIN:
        return None
    h1 = principal_log(alpha.samples, np.pi, tol=1e-12)
    info = {"route": "principal", "margin": float(np.min(np.pi - np.abs(phases)))}
    log = _finish([h1, np.zeros_like(h1)], alpha, mode, info)
    return log if log.residual <= RESIDUAL_TOL else None


def _budgets(s: float, retries: int) -> list[float]:
    """Budget schedule: s and s/2, then growing budgets up to 0.9.

    Small budgets open small gaps, which a coarse grid may not resolve, so
    after one halving the schedule escalates instead.
    """
    out = [s, s / 2.0]
    b = s
    while len(out) < retries and b < 0.9:
        b = min(0.9, 2.0 * b)
        out.append(b)
    return out[: max(retries, 2)]


def two_step_log(
    alpha: UnitaryFamily,
    s: float = 0.05,
    mode: str | None = None,
    seed: int = 0,
    retries: int = 8,
    allow_principal: bool = True,
) -> MultiStepLog:
    """alpha = e^{i h_2/2} e^{i h_1} e^{i h_2/2} with periodic (and symmetric) steps.

    ``mode`` is ``symmetric`` (default for symmetric input) or
    ``trs-broken``.  Routes: the unwrapped phase for m = 1, a single
    principal logarithm when -1 is never an eigenvalue, the SU(2)
    decomposition for m = 2 (symmetric, or without any symmetry), otherwise
    a generic-form approximant with a branch cut.  Failures are retried with
    the next seed along the budget schedule of ``_budgets``.
    ``allow_principal=False`` skips the single-logarithm shortcut.

    Raises
    ------
    ObstructionError
        Symmetric fermionic input with a nonzero index.
    RefinementNeeded
        Every attempt failed because no gap could be followed between samples.
    """
    if mode is None:
        mode = "symmetric" if alpha.symmetry is not None else "trs-broken"
    if mode not in ("symmetric", "trs-broken"):
        raise InvalidInput("mode must be symmetric or trs-broken", mode=mode)
    if not 0.0 < s < 1.0:
        raise InvalidInput("budget s must lie in (0, 1)", s=s)
    if alpha.m == 1:
        return _one_step(alpha, mode)
    if mode == "symmetric" and alpha.symmetry is None:
        mode = "trs-broken"
    direct = _principal_route(alpha, mode) if allow_principal else None
    if direct is not None:
        return direct
    errors = []
    for attempt, budget in enumerate(_budgets(s, retries)):
        sd = seed + attempt
        try:
            if alpha.m == 2 and (mode == "symmetric" or alpha.symmetry is None):
                cert = su2_path(alpha, budget, mode, sd)
                h2 = cert.log.samples
                route = "su2"
                cut_info: dict[str, Any] = {}
            else:
                cert = to_generic_form(alpha, budget, mode, sd)
                cut = branch_cut(cert.approximant, symmetric=mode == "symmetric")
                h2 = principal_log(cert.approximant.samples, cut.lam, tol=1e-12)
                route = "generic"
                cut_info = cut.to_dict()
            h1 = _inner_log(alpha, h2)
        except (BranchCutCollision, RetryExhausted, SplitTooLarge, RefinementNeeded) as exc:
            errors.append(exc.to_dict())
            continue
        info = {
            "route": route,
            "s": budget,
            "seed": sd,
            "certificate": cert.to_dict(),
            "branch_cut": cut_info,
            "attempts": attempt + 1,
        }
        log = _finish([h1, h2], alpha, mode, info)
        if log.residual <= RESIDUAL_TOL:
            return log
        errors.append({"reason": "residual", "residual": log.residual})
    if errors and all(e.get("reason") == "branch-cut-collision" for e in errors):
        # a generic-form spectrum always carries a cut in the continuum, so a
        # collision on every attempt means the grid does not resolve the gaps
        raise RefinementNeeded("no spectral gap can be followed on this grid", attempts=errors)
    raise RetryExhausted("two-step logarithm failed for every budget", attempts=errors)


def multi_step_log_from_homotopy(path: Sequence[UnitaryFamily], mode: str | None = None) -> MultiStepLog:
    """Multi-step logarithm from a discretized homotopy alpha_{t_0} = 1, ..., alpha_{t_M}.

    The outermost step is log alpha_{t_1}; each further step is the
    principal logarithm of the next slice with all previous steps peeled off
    symmetrically.  Peeling preserves norms, so the matrix whose logarithm is
    taken differs from the identity by exactly ||alpha_{t_{j+1}} - alpha_{t_j}||.

    Raises
    ------
    SubdivisionNeeded
        Two consecutive slices are 2 or more apart, or a peeled increment has
        an eigenvalue at -1.
    """
    path = list(path)
    if len(path) < 2:
        raise InvalidInput("a homotopy needs at least two slices")
    first = path[0]
    if mode is None:
        mode = "symmetric" if first.symmetry is not None else "trs-broken"
    start = max_opnorm(first.samples - np.eye(first.m))
    if start > 1e-8:
        raise InvalidInput("the homotopy must start at the identity", residual=start)
    outer: list[np.ndarray] = []  # h_M, h_{M-1}, ...
    for j in range(1, len(path)):
        step = max_opnorm(path[j].samples - path[j - 1].samples)
        if not step < 2.0:
            raise SubdivisionNeeded("consecutive slices are too far apart", step=j, distance=step)
        x = path[j].samples
        for h in outer:
            half = exp_i(-0.5 * h)
            x = half @ x @ half
        try:
            outer.append(principal_log(x, np.pi))
        except BranchCutCollision as exc:
            raise SubdivisionNeeded("increment has an eigenvalue at -1", step=j, **exc.details) from exc
        if mode == "symmetric" and path[j].symmetry is not None:
            outer[-1] = symmetrize_generator(first.grid, outer[-1], path[j].symmetry)
    return _finish(outer[::-1], path[-1], mode, {"route": "homotopy", "slices": len(path)})


# ---------------------------------------------------------------------------
# beta family and homotopies


class BetaFamily:
    """beta(k1, k) = e^{-i k1 h_M(k)} ... e^{-i k1 h_1(k)} for k1 in [-1/2, 1/2].

    Outside that interval beta is continued by beta(k1 + 1) = alpha^{-1} beta(k1),
    which makes alpha(k) = beta(k1, k) beta(k1 + 1, k)^{-1} hold everywhere.
    """

    def __init__(self, log: MultiStepLog):
        self.log = log
        self.alpha = log.target
        self._eig = [jacobi_eigh(h.samples) for h in log.steps]
        self._alpha_inv = dagger(self.alpha.samples)

    @property
    def grid(self) -> TorusGrid:
        return self.alpha.grid

    def _core(self, k1: float) -> np.ndarray:
        out = None
        for w, v in self._eig:
            e = (v * np.exp(-1j * k1 * w)[..., None, :]) @ dagger(v)
            out = e if out is None else e @ out
        return out

    def evaluate(self, k1: float) -> np.ndarray:
        """beta(k1, .) on the grid for any real k1."""
        shift = int(np.floor(k1 + 0.5))
        if k1 - shift == -0.5 and shift > 0:  # keep k1 = 1/2, 3/2, ... on the lower sheet
            shift -= 1
        out = self._core(k1 - shift)
        step = self._alpha_inv if shift > 0 else self.alpha.samples
        for _ in range(abs(shift)):
            out = step @ out
        return out

    def at_grid(self, j: int, N: int) -> np.ndarray:
        """beta(j/N, .), taking the continued branch for j > N/2."""
        return self.evaluate(j / N)

    def gluing_residual(self) -> float:
        """Mismatch between beta(1/2) and alpha^{-1} beta(-1/2)."""
        return max_opnorm(self._core(0.5) - self._alpha_inv @ self._core(-0.5))

    def alpha_residual(self, k1_values: Sequence[float] = (-0.5, -0.2, 0.0, 0.3, 0.5)) -> float:
        worst = 0.0
        for k1 in k1_values:
            rebuilt = self.evaluate(k1) @ dagger(self.evaluate(k1 + 1.0))
            worst = max(worst, max_opnorm(rebuilt - self.alpha.samples))
        return worst

    def symmetry_residual(self, k1_values: Sequence[float] = (-0.5, -0.25, 0.0, 0.1, 0.5)) -> float:
        """max ||beta(-k1, -k) - eps^{-1} conj(beta(k1, k)) eps||."""
        sym = self.log.symmetry
        if sym is None:
            return 0.0
        eps = sym.epsilon(self.alpha.m)
        eps_inv = np.linalg.inv(eps)
        worst = 0.0
        for k1 in k1_values:
            lhs = self.grid.reflect(self.evaluate(-k1))
            rhs = eps_inv @ np.conj(self.evaluate(k1)) @ eps
            worst = max(worst, max_opnorm(lhs - rhs))
        return worst

    def report(self) -> dict[str, float]:
        return {
            "gluing": self.gluing_residual(),
            "alpha": self.alpha_residual(),
            "symmetry": self.symmetry_residual(),
        }


def beta_family(log: MultiStepLog) -> BetaFamily:
    return BetaFamily(log)


def homotopy_from_beta(beta: BetaFamily, ts: Sequence[float] | int = 9) -> list[UnitaryFamily]:
    """Slices alpha_t = beta(-t/2) beta(t/2)^{-1}, from the identity (t = 0) to alpha (t = 1)."""
    if isinstance(ts, int):
        ts = np.linspace(0.0, 1.0, ts)
    sym = beta.log.symmetry
    out = []
    for t in ts:
        mat = beta.evaluate(-0.5 * t) @ dagger(beta.evaluate(0.5 * t))
        out.append(UnitaryFamily(beta.grid, mat, sym))
    return out


def explain_obstruction(alpha: UnitaryFamily) -> dict[str, Any]:
    """Index report used when a symmetric logarithm cannot exist."""
    return z2_report(alpha).to_dict()
