"""
Vertical discretisation: finite differences and exponential-kernel quadrature.

All vertical operators act on the leading axis of a ``(M, ...)`` array.

The kernel integrals

    C g(x) = b int_0^x exp(-b (x - y)) g(y) dy        (causal)
    A g(x) = b int_x^Z exp(-b (y - x)) g(y) dy        (anti-causal)

are evaluated exactly for the piecewise-polynomial reconstruction of ``g``
that uses, on every cell, the Lagrange interpolant through ``order`` nearby
nodes.  The cell integrals reduce to the moments

    mu_n(c) = int_0^1 s^n exp(-c (1 - s)) ds,   nu_n(c) = int_0^1 s^n exp(-c s) ds

with ``c = b * dz``, so stiff (large ``b``) modes are integrated without any
resolution requirement on ``exp(-b x3)``.
"""

from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np
import scipy.sparse

from .grid import GridSpec, SpectralField

__all__ = [
    "fd_weights",
    "derivative_matrix",
    "vertical_derivative",
    "apply_vertical",
    "kernel_moments",
    "KernelQuadrature",
    "kernel_quadrature",
    "trapezoid_weights",
]

# Below this value of c the moments come from Gauss-Legendre; above it the
# closed-form recurrences are stable (error growth n / c per step).
_MOMENT_SWITCH = 12.0
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


def fd_weights(offsets, deriv: int) -> np.ndarray:
    """Finite-difference weights for the ``deriv``-th derivative at 0 on integer ``offsets``."""
    o = np.asarray(offsets, dtype=float)
    n = o.size
    V = np.vander(o, n, increasing=True).T  # V[p, k] = o_k**p
    rhs = np.zeros(n)
    rhs[deriv] = factorial(deriv)
    return np.linalg.solve(V, rhs)


def _stencil_start(m: int, npts: int, M: int) -> int:
    return int(np.clip(m - (npts - 1) // 2, 0, M - npts))


@lru_cache(maxsize=32)
def derivative_matrix(M: int, dz: float, order: int, deriv: int = 1) -> scipy.sparse.csr_matrix:
    """Sparse ``(M, M)`` matrix of the ``order``-accurate ``deriv``-th derivative."""
    npts = order + deriv if deriv > 1 else order + 1
    npts = min(npts, M)
    rows, cols, vals = [], [], []
    for m in range(M):
        s = _stencil_start(m, npts, M)
        idx = np.arange(s, s + npts)
        w = fd_weights(idx - m, deriv) / dz**deriv
        rows.extend([m] * npts)
        cols.extend(idx)
        vals.extend(w)
    return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(M, M))


def apply_vertical(D: scipy.sparse.spmatrix, a: np.ndarray) -> np.ndarray:
    shape = a.shape
    return (D @ a.reshape(shape[0], -1)).reshape(shape)


def vertical_derivative(f: SpectralField, times: int = 1) -> SpectralField:
    """``d/dx3`` (applied ``times`` times) by finite differences."""
    g = f.grid
    D = derivative_matrix(g.M, g.dz, g.vertical_order)
    c = f.coeffs
    for _ in range(times):
        c = apply_vertical(D, c)
    return SpectralField(g, c)


def trapezoid_weights(M: int, dz: float) -> np.ndarray:
    w = np.full(M, dz)
    w[0] = w[-1] = 0.5 * dz
    return w


def kernel_moments(c: np.ndarray, nmax: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Return ``(mu, nu)``, each of shape ``(nmax + 1,) + c.shape``.

    ``mu[n] = int_0^1 s^n e^{-c(1-s)} ds`` and ``nu[n] = int_0^1 s^n e^{-cs} ds``.
    """
    c = np.asarray(c, dtype=float)
    mu = np.empty((nmax + 1,) + c.shape)
    nu = np.empty_like(mu)
    small = c <= _MOMENT_SWITCH
    if np.any(small):
        cs = c[small]
        s = _GL_NODES[:, None]
        ef = _GL_WEIGHTS[:, None] * np.exp(-cs[None, :] * (1.0 - s))
        eb = _GL_WEIGHTS[:, None] * np.exp(-cs[None, :] * s)
        sp = np.ones_like(s)
        for n in range(nmax + 1):
            mu[n][small] = np.sum(sp * ef, axis=0)
            nu[n][small] = np.sum(sp * eb, axis=0)
            sp = sp * s
    big = ~small
    if np.any(big):
        cb = c[big]
        e = np.exp(-cb)
        m_prev = -np.expm1(-cb) / cb
        n_prev = m_prev.copy()
        mu[0][big] = m_prev
        nu[0][big] = n_prev
        for n in range(1, nmax + 1):
            m_prev = (1.0 - n * m_prev) / cb
            n_prev = (n * n_prev - e) / cb
            mu[n][big] = m_prev
            nu[n][big] = n_prev
    return mu, nu


class KernelQuadrature:
    """
    Cell weights for the causal and anti-causal exponential recursions on one grid.

    ``forward[p][k]`` (resp. ``backward``) multiplies node ``start[m] + k`` in
    the contribution of cell ``m`` when cell ``m`` uses stencil pattern ``p``.
    """

    def __init__(self, grid: GridSpec):
        M = grid.M
        npts = min(grid.vertical_order, M)
        c = grid.xi_abs * grid.dz
        mu, nu = kernel_moments(c, npts - 1)
        self.decay = np.exp(-c)
        self.start = np.array([_stencil_start(m, npts, M) for m in range(M - 1)])
        offsets = self.start - np.arange(M - 1)
        patterns, self.pattern = np.unique(offsets, return_inverse=True)
        self.npts = npts
        self.forward = []
        self.backward = []
        for off in patterns:
            nodes = off + np.arange(npts)
            # Lagrange basis l_k(s) = sum_n C[n, k] s^n  on local coordinate s in [0, 1]
            Cmat = np.linalg.inv(np.vander(nodes.astype(float), npts, increasing=True))
            self.forward.append(c * np.einsum("nk,n...->k...", Cmat, mu))
            self.backward.append(c * np.einsum("nk,n...->k...", Cmat, nu))

    def causal(self, g: np.ndarray) -> np.ndarray:
        """``b int_0^x e^{-b(x-y)} g dy`` at every node."""
        out = np.empty_like(g, dtype=complex)
        out[0] = 0.0
        acc = np.zeros(g.shape[1:], dtype=complex)
        for m in range(g.shape[0] - 1):
            s = self.start[m]
            w = self.forward[self.pattern[m]]
            acc = self.decay * acc + np.einsum("k...,k...->...", w, g[s:s + self.npts])
            out[m + 1] = acc
        return out

    def anticausal(self, g: np.ndarray) -> np.ndarray:
        """``b int_x^Z e^{-b(y-x)} g dy`` at every node."""
        M = g.shape[0]
        out = np.empty_like(g, dtype=complex)
        out[M - 1] = 0.0
        acc = np.zeros(g.shape[1:], dtype=complex)
        for m in range(M - 2, -1, -1):
            s = self.start[m]
            w = self.backward[self.pattern[m]]
            acc = self.decay * acc + np.einsum("k...,k...->...", w, g[s:s + self.npts])
            out[m] = acc
        return out


@lru_cache(maxsize=8)
def kernel_quadrature(grid: GridSpec) -> KernelQuadrature:
    return KernelQuadrature(grid)
