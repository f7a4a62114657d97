"""Gaussian quadrature rules built by Golub-Welsch.

Both rules are returned normalized to probability weights.  The library
routines in numpy/scipy overflow for the generalized Laguerre exponents
needed at d ~ 10^4 and for Hermite rules beyond a few hundred nodes; the
symmetric tridiagonal eigenproblem has neither problem.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal


@lru_cache(maxsize=64)
def _hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(1, n, dtype=float)
    x, v = eigh_tridiagonal(np.zeros(n), np.sqrt(k))
    w = v[0] ** 2
    x = 0.5 * (x - x[::-1])  # enforce exact symmetry of the nodes
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w = w / w.sum()
    w.setflags(write=False)
    return x, w


def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for E[g(Z)], Z ~ N(0, 1)."""
    return _hermite(int(n))


@lru_cache(maxsize=256)
def _chi_square(n: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    a = 0.5 * d - 1.0
    k = np.arange(n, dtype=float)
    off = np.sqrt(np.arange(1, n, dtype=float) * (np.arange(1, n, dtype=float) + a))
    u, v = eigh_tridiagonal(2.0 * k + a + 1.0, off)
    w = v[0] ** 2
    s = 2.0 * u
    s.setflags(write=False)
    w = w / w.sum()
    w.setflags(write=False)
    return s, w


def chi_square_rule(n: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for E[g(S)], S ~ chi-square with ``d`` degrees of freedom."""
    return _chi_square(int(n), int(d))
