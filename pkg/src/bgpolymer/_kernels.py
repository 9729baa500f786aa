"""Compiled lattice sweeps.

Array conventions: boundary arrays are indexed from 0 for lattice index 1
(r1[i-1] is the weight of the edge into (i, 0)); bulk arrays are m x n with
y[i-1, j-1] the weight of the edge into (i, j).
"""

import math

import numba
import numpy as np

_jit = numba.njit(cache=True, nogil=True)


@_jit
def _lae(a, b):
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@_jit
def forward_log(l1, l2, ly1, ly2):
    m = l1.shape[0]
    n = l2.shape[0]
    F = np.empty((m + 1, n + 1))
    F[0, 0] = 0.0
    for j in range(1, n + 1):
        F[0, j] = F[0, j - 1] + l2[j - 1]
    for i in range(1, m + 1):
        F[i, 0] = F[i - 1, 0] + l1[i - 1]
        left = F[i, 0]
        for j in range(1, n + 1):
            left = _lae(ly1[i - 1, j - 1] + F[i - 1, j], ly2[i - 1, j - 1] + left)
            F[i, j] = left
    return F


@_jit
def forward_log_rolling(l1, l2, ly1, ly2):
    """Last row F[m, :] of the forward field using two rows of storage."""
    m = l1.shape[0]
    n = l2.shape[0]
    row = np.empty(n + 1)
    row[0] = 0.0
    for j in range(1, n + 1):
        row[j] = row[j - 1] + l2[j - 1]
    for i in range(1, m + 1):
        row[0] = row[0] + l1[i - 1]
        for j in range(1, n + 1):
            row[j] = _lae(ly1[i - 1, j - 1] + row[j], ly2[i - 1, j - 1] + row[j - 1])
    return row


@_jit
def reverse_log(l1, l2, ly1, ly2):
    """B[i, j] = log partition of up-right paths from (i, j) to (m, n)."""
    m = l1.shape[0]
    n = l2.shape[0]
    B = np.empty((m + 1, n + 1))
    B[m, n] = 0.0
    for i in range(m - 1, -1, -1):
        w = l1[i] if n == 0 else ly1[i, n - 1]
        B[i, n] = w + B[i + 1, n]
    for j in range(n - 1, -1, -1):
        w = l2[j] if m == 0 else ly2[m - 1, j]
        B[m, j] = w + B[m, j + 1]
    for i in range(m - 1, -1, -1):
        for j in range(n - 1, -1, -1):
            # horizontal edge into (i+1, j), vertical edge into (i, j+1)
            wh = l1[i] if j == 0 else ly1[i, j - 1]
            wv = l2[j] if i == 0 else ly2[i - 1, j]
            B[i, j] = _lae(wh + B[i + 1, j], wv + B[i, j + 1])
    return B


@_jit
def ratio_sweep(r1, r2, y1, y2, p_left, store):
    """Ratio recursion in linear space, row by row.

    Returns (log Z_{m,n}, top, right) where top[i-1] = R1_{i,n} and
    right[j-1] = R2_{m,j}. When ``store`` is true, p_left[i-1, j-1] receives
    Y1_{i,j} / R1_{i,j}, the quenched probability of the backward step
    (i, j) -> (i-1, j).
    """
    m = r1.shape[0]
    n = r2.shape[0]
    col = r2.copy()
    top = np.empty(m)
    s = 0.0
    for j in range(n):
        s += math.log(r2[j])
    for i in range(m):
        cur = r1[i]
        for j in range(n):
            u = cur / col[j]
            a = y1[i, j]
            nr1 = a + y2[i, j] * u
            col[j] = nr1 / u
            cur = nr1
            if store:
                p_left[i, j] = a / nr1
        top[i] = cur
    for i in range(m):
        s += math.log(top[i])
    return s, top, col


@_jit
def ratio_logz_many(r1, r2, y1, y2, m_pts, n_pts):
    """log Z at several lattice points (m_k, n_k) of one environment.

    log Z_{m_k, n_k} = sum_{j <= n_k} log R2_{0,j} + sum_{i <= m_k} log R1_{i, n_k}.
    """
    m = r1.shape[0]
    n = r2.shape[0]
    K = m_pts.shape[0]
    col = r2.copy()
    row = np.empty(n + 1)
    acc = np.zeros(K)
    for i in range(m):
        cur = r1[i]
        row[0] = cur
        for j in range(n):
            u = cur / col[j]
            nr1 = y1[i, j] + y2[i, j] * u
            col[j] = nr1 / u
            cur = nr1
            row[j + 1] = cur
        for k in range(K):
            if i < m_pts[k]:
                acc[k] += math.log(row[n_pts[k]])
    out = np.empty(K)
    for k in range(K):
        s = 0.0
        for j in range(n_pts[k]):
            s += math.log(r2[j])
        out[k] = s + acc[k]
    return out


@_jit
def backward_path(p_left, m, n, uniforms):
    """Sample a path backwards from (m, n); returns vertex coordinates (forward order)."""
    L = m + n + 1
    xi = np.empty(L, dtype=np.int64)
    xj = np.empty(L, dtype=np.int64)
    i = m
    j = n
    k = L - 1
    xi[k] = i
    xj[k] = j
    while k > 0:
        if j == 0:
            i -= 1
        elif i == 0:
            j -= 1
        elif uniforms[k - 1] < p_left[i - 1, j - 1]:
            i -= 1
        else:
            j -= 1
        k -= 1
        xi[k] = i
        xj[k] = j
    return xi, xj


@_jit
def path_profiles(xi, xj, m, n):
    """Exit points and the row/column extents v0, v1 (per row) and w0, w1 (per column)."""
    v0 = np.full(n + 1, m + 1, dtype=np.int64)
    v1 = np.full(n + 1, -1, dtype=np.int64)
    w0 = np.full(m + 1, n + 1, dtype=np.int64)
    w1 = np.full(m + 1, -1, dtype=np.int64)
    t1 = 0
    t2 = 0
    for k in range(xi.shape[0]):
        i = xi[k]
        j = xj[k]
        if i < v0[j]:
            v0[j] = i
        if i > v1[j]:
            v1[j] = i
        if j < w0[i]:
            w0[i] = j
        if j > w1[i]:
            w1[i] = j
        if j == 0 and i > t1:
            t1 = i
        if i == 0 and j > t2:
            t2 = j
    return t1, t2, v0, v1, w0, w1
