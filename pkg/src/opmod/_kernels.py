"""Compiled inner loops (numba). Index conventions follow the callers.

Tridiagonal sections are passed as ``dl`` (X[k+1, k]), ``d`` (X[k, k]) and
``du`` (X[k, k+1]).
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def gram_fill_dense(mu, dl, d, du, W):
    """Lower triangle of the n x n Gram section from 2n-1 moments.

    Two rolling columns of length 2n-1 hold the extended coverage; column
    j is valid on rows j..2n-2-j. Returns -1 on success or the first column
    index at which a non-finite entry appeared.
    """
    n = W.shape[0]
    M = 2 * n - 1
    prev = np.zeros(M)
    cur = np.empty(M)
    for m in range(M):
        cur[m] = mu[m]
    for m in range(n):
        W[m, 0] = cur[m]
    for j in range(n - 1):
        nxt = np.zeros(M)
        g = dl[j]
        xjj = d[j]
        xj1 = du[j - 1] if j > 0 else 0.0
        for m in range(j + 1, M - 1 - j):
            s = d[m] * cur[m] + dl[m] * cur[m + 1] + du[m - 1] * cur[m - 1]
            s -= cur[m] * xjj + prev[m] * xj1
            nxt[m] = s / g
        bad = False
        for m in range(j + 1, n):
            v = nxt[m]
            W[m, j + 1] = v
            if not np.isfinite(v):
                bad = True
        if bad:
            return j + 1
        prev = cur
        cur = nxt
    return -1


@njit(cache=True)
def gram_fill_banded(mu, dl, d, du, ab):
    """Lower band ab[i, j] = W[j+i, j], i <= b, of a band-limited Gram section.

    ``mu`` needs entries 0..b (later moments are taken as zero); the
    tridiagonal arrays need length n + b + 2.
    """
    b = ab.shape[0] - 1
    n = ab.shape[1]
    prev = np.zeros(b + 3)
    cur = np.zeros(b + 3)
    for i in range(min(b + 1, mu.shape[0])):
        cur[i] = mu[i]
    for i in range(b + 1):
        ab[i, 0] = cur[i]
    for j in range(n - 1):
        nxt = np.zeros(b + 3)
        g = dl[j]
        xjj = d[j]
        xj1 = du[j - 1] if j > 0 else 0.0
        for i in range(b + 1):
            m = j + 1 + i
            s = du[m - 1] * cur[i] + d[m] * cur[i + 1] + dl[m] * cur[i + 2]
            s -= cur[i + 1] * xjj + prev[i + 2] * xj1
            nxt[i] = s / g
        for i in range(b + 1):
            ab[i, j + 1] = nxt[i]
            if not np.isfinite(nxt[i]):
                return j + 1
        prev = cur
        cur = nxt
    return -1


@njit(cache=True)
def fast_cholesky_dense(c0, dl, d, du, G, L, pivot_floor):
    """Displacement-structured Cholesky W = L L^T (dense lower factor).

    ``c0`` is the first column of W, (dl, d, du) the tridiagonal section X
    and G the n x 2 generator with X^T W - W X = G J G^T,
    J = [[0, 1], [-1, 0]]. G is updated in place. The live matrix after k
    steps is tridiag(X)[k:, k:] + e_0 r^T.

    Returns (status, step): status 0 success, 1 pivot failure, 2 zero
    subdiagonal of X.
    """
    n = c0.shape[0]
    c = c0.copy()
    r = np.zeros(n)
    for k in range(n):
        p = n - k
        c1 = c[0]
        if not (c1 > pivot_floor):
            return 1, k
        dk = np.sqrt(c1)
        for i in range(p):
            L[k + i, k] = c[i] / dk
        if p == 1:
            break
        gam = dl[k]
        if gam == 0.0:
            return 2, k
        alpha = d[k] + r[0]
        g0 = G[k, 0]
        g1 = G[k, 1]
        # second column:  gam * W e_2 = (X^T - alpha) W e_1 - G J g^T, with
        # (X^T c)_i = X[i-1,i] c_{i-1} + X[i,i] c_i + X[i+1,i] c_{i+1} + r_i c_0.
        # Entries are consumed in ascending order, so c, r and G update in place.
        first = c[1]
        for i in range(1, p):
            t = du[k + i - 1] * c[i - 1] + d[k + i] * c[i] + r[i] * c1
            if i + 1 < p:
                t += dl[k + i] * c[i + 1]
            t -= alpha * c[i]
            t -= G[k + i, 0] * g1 - G[k + i, 1] * g0
            chat = t / gam
            ratio = c[i] / c1
            c[i - 1] = chat - first * ratio
            r[i - 1] = -gam * ratio
            G[k + i, 0] -= ratio * g0
            G[k + i, 1] -= ratio * g1
        c[p - 1] = 0.0
        r[p - 1] = 0.0
    return 0, n


@njit(cache=True)
def fast_cholesky_banded(c0, dl, d, du, G, Lb, pivot_floor):
    """Banded variant: only a window of b + 2 entries is carried.

    ``Lb`` is the (b+1) x n lower band of L, Lb[i, j] = L[j+i, j]. The
    first column ``c0`` has at least b + 2 entries (trailing zeros).
    """
    b = Lb.shape[0] - 1
    n = Lb.shape[1]
    w = b + 2
    c = np.zeros(w + 1)
    r = np.zeros(w + 1)
    for i in range(min(w, c0.shape[0])):
        c[i] = c0[i]
    for k in range(n):
        p = min(w, n - k)
        c1 = c[0]
        if not (c1 > pivot_floor):
            return 1, k
        dk = np.sqrt(c1)
        for i in range(min(b + 1, n - k)):
            Lb[i, k] = c[i] / dk
        if n - k == 1:
            break
        gam = dl[k]
        if gam == 0.0:
            return 2, k
        alpha = d[k] + r[0]
        g0 = G[k, 0]
        g1 = G[k, 1]
        first = c[1]
        for i in range(1, p):
            t = du[k + i - 1] * c[i - 1] + d[k + i] * c[i] + r[i] * c1
            if k + i + 1 < n:
                t += dl[k + i] * c[i + 1]
            t -= alpha * c[i]
            t -= G[k + i, 0] * g1 - G[k + i, 1] * g0
            chat = t / gam
            ratio = c[i] / c1
            c[i - 1] = chat - first * ratio
            r[i - 1] = -gam * ratio
            G[k + i, 0] -= ratio * g0
            G[k + i, 1] -= ratio * g1
        for i in range(p - 1, w + 1):
            c[i] = 0.0
            r[i] = 0.0
    return 0, n
