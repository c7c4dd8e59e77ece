"""Independent reference computations used by the tests.

Nothing here calls into the package; each oracle uses a different method
from the implementation it checks.
"""

from __future__ import annotations

import numpy as np


def pfaffian_expansion(a: np.ndarray) -> complex:
    """Pfaffian by expansion along the first row (exponential cost, small sizes only)."""
    a = np.asarray(a)
    n = a.shape[0]
    if n == 0:
        return 1.0
    if n % 2:
        return 0.0
    total = 0.0
    for j in range(1, n):
        if a[0, j] == 0:
            continue
        keep = [i for i in range(n) if i not in (0, j)]
        total += (-1) ** (j + 1) * a[0, j] * pfaffian_expansion(a[np.ix_(keep, keep)])
    return total


def random_antisymmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return x - x.T


def expm_hermitian(h: np.ndarray) -> np.ndarray:
    """exp(iH) through numpy's Hermitian eigensolver."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def random_unitary(rng: np.random.Generator, m: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def winding_by_argument_sum(values: np.ndarray) -> int:
    """Winding number of a closed sampled curve in C minus 0 (wrapped increments)."""
    z = np.concatenate([values, values[:1]])
    inc = np.angle(z[1:] / z[:-1])
    return int(round(float(np.sum(inc)) / (2.0 * np.pi)))


def cone_berry_phase(theta: float) -> float:
    """Geometric phase of the spin-up state carried around a cone of polar angle theta.

    Half the enclosed solid angle, -pi (1 - cos theta), reduced to (-pi, pi].
    """
    x = -np.pi * (1.0 - np.cos(theta))
    return float(np.angle(np.exp(1j * x)))


def spin_projector(nvec: np.ndarray) -> np.ndarray:
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return 0.5 * (np.eye(2) + nvec[..., 0, None, None] * sx + nvec[..., 1, None, None] * sy + nvec[..., 2, None, None] * sz)
