"""Compiled master-equation kernels for banded generators.

Operators are passed as row-indexed diagonals: ``V[j, r] = B[r, r + ks[j]]``
(zero where r + ks[j] falls outside the matrix).  Collapse operators that
live on one diagonal are passed the same way (``jk``, ``U``).
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _apply_rows(ks, V, X, Y, conj_input):
    """Y = B X (or B X^dag when conj_input) for banded B."""
    d = X.shape[0]
    Y[:, :] = 0
    for j in range(ks.shape[0]):
        k = ks[j]
        for r in range(d):
            rr = r + k
            if rr < 0 or rr >= d:
                continue
            c = V[j, r]
            if c == 0:
                continue
            if conj_input:
                for s in range(d):
                    Y[r, s] += c * np.conj(X[s, rr])
            else:
                for s in range(d):
                    Y[r, s] += c * X[rr, s]


@njit(cache=True)
def _rhs_into(ks, V, jk, U, X, hermitian, Y, Y2, out):
    d = X.shape[0]
    _apply_rows(ks, V, X, Y, False)
    if hermitian:
        for r in range(d):
            for s in range(r, d):
                a = -1j * Y[r, s] + 1j * np.conj(Y[s, r])
                out[r, s] = a
                out[s, r] = np.conj(a)
    else:
        _apply_rows(ks, V, X, Y2, True)
        for r in range(d):
            for s in range(d):
                out[r, s] = -1j * Y[r, s] + 1j * np.conj(Y2[s, r])
    for j in range(jk.shape[0]):
        k = jk[j]
        lo = 0 if k >= 0 else -k
        hi = d - k if k >= 0 else d
        for r in range(lo, hi):
            ur = U[j, r]
            if ur == 0:
                continue
            for s in range(lo, hi):
                us = U[j, s]
                if us != 0:
                    out[r, s] += ur * X[r + k, s + k] * np.conj(us)


@njit(cache=True)
def lindblad_rhs(ks, V, jk, U, X, hermitian):
    """-i H X + i X H^dag + sum_j c_j X c_j^dag for banded H and single-diagonal c_j."""
    d = X.shape[0]
    Y = np.empty((d, d), dtype=np.complex128)
    Y2 = np.empty((d, d), dtype=np.complex128)
    out = np.empty((d, d), dtype=np.complex128)
    _rhs_into(ks, V, jk, U, X, hermitian, Y, Y2, out)
    return out


@njit(cache=True)
def rk4_step(ks, V1, V2, V4, jk, U, X, h, hermitian):
    """One classical RK4 step; V1, V2, V4 are the coefficients at t, t+h/2, t+h.

    X is updated in place (and Hermitized when ``hermitian``).
    """
    d = X.shape[0]
    Y = np.empty((d, d), dtype=np.complex128)
    Y2 = np.empty((d, d), dtype=np.complex128)
    k = np.empty((d, d), dtype=np.complex128)
    acc = np.empty((d, d), dtype=np.complex128)
    Z = np.empty((d, d), dtype=np.complex128)
    _rhs_into(ks, V1, jk, U, X, hermitian, Y, Y2, k)
    for r in range(d):
        for s in range(d):
            acc[r, s] = k[r, s]
            Z[r, s] = X[r, s] + 0.5 * h * k[r, s]
    _rhs_into(ks, V2, jk, U, Z, hermitian, Y, Y2, k)
    for r in range(d):
        for s in range(d):
            acc[r, s] += 2.0 * k[r, s]
            Z[r, s] = X[r, s] + 0.5 * h * k[r, s]
    _rhs_into(ks, V2, jk, U, Z, hermitian, Y, Y2, k)
    for r in range(d):
        for s in range(d):
            acc[r, s] += 2.0 * k[r, s]
            Z[r, s] = X[r, s] + h * k[r, s]
    _rhs_into(ks, V4, jk, U, Z, hermitian, Y, Y2, k)
    for r in range(d):
        for s in range(d):
            X[r, s] += (h / 6.0) * (acc[r, s] + k[r, s])
    if hermitian:
        for r in range(d):
            X[r, r] = X[r, r].real
            for s in range(r + 1, d):
                a = 0.5 * (X[r, s] + np.conj(X[s, r]))
                X[r, s] = a
                X[s, r] = np.conj(a)


def row_diagonals(A: np.ndarray, offsets=None):
    """Row-indexed diagonal representation of A: (ks, V)."""
    d = A.shape[0]
    if offsets is None:
        rows, cols = np.nonzero(A)
        offsets = np.unique(cols - rows)
    ks = np.asarray(offsets, dtype=np.int64)
    V = np.zeros((len(ks), d), dtype=np.complex128)
    for j, k in enumerate(ks):
        v = np.diagonal(A, offset=int(k))
        if k >= 0:
            V[j, : d - k] = v
        else:
            V[j, -k:] = v
    return ks, V
