"""Compiled inner loops for the dense and banded kernels.

Every function here works on plain float64 arrays and reports failures
through integer status codes; the public wrappers in the sibling modules
turn those codes into exceptions.  Eigenvector and singular-vector
matrices are kept transposed (one vector per row) so that rotations touch
contiguous memory.
"""

import math

import numpy as np
from numba import njit

EPS = np.finfo(np.float64).eps


@njit(cache=True)
def jacobi_eig(a, tol, max_sweeps):
    """Cyclic Jacobi on a symmetric matrix.

    Returns ``(w, vt, sweeps, off)``; ``sweeps == -1`` signals that the
    sweep cap was reached.
    """
    n = a.shape[0]
    a = a.copy()
    vt = np.eye(n)
    fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += a[i, j] * a[i, j]
    fro = math.sqrt(fro)
    off = 0.0
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * a[i, j] * a[i, j]
        off = math.sqrt(off)
        if off <= tol * fro or fro == 0.0:
            w = np.empty(n)
            for i in range(n):
                w[i] = a[i, i]
            return w, vt, sweep, off
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # skip rotations that cannot change the diagonal in floating point
                if abs(apq) < EPS * 1e-3 * (abs(a[p, p]) + abs(a[q, q])) and sweep > 3:
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                app = a[p, p]
                aqq = a[q, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for r in range(n):
                    if r != p and r != q:
                        arp = a[r, p]
                        arq = a[r, q]
                        a[r, p] = arp - s * (arq + tau * arp)
                        a[r, q] = arq + s * (arp - tau * arq)
                        a[p, r] = a[r, p]
                        a[q, r] = a[r, q]
                for r in range(n):
                    vp = vt[p, r]
                    vq = vt[q, r]
                    vt[p, r] = vp - s * (vq + tau * vp)
                    vt[q, r] = vq + s * (vp - tau * vq)
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, vt, -1, off


@njit(cache=True)
def householder_tridiag(a):
    """Reduce symmetric ``a`` to tridiagonal form ``a = Q T Q^T``.

    Returns the diagonal, the sub-diagonal (length n, last entry zero) and
    ``Q^T``.
    """
    n = a.shape[0]
    a = a.copy()
    qt = np.eye(n)
    for k in range(n - 2):
        m = n - k - 1
        v = a[k + 1:, k].copy()
        xnorm = 0.0
        for i in range(m):
            xnorm += v[i] * v[i]
        xnorm = math.sqrt(xnorm)
        if xnorm == 0.0:
            continue
        alpha = -xnorm if v[0] >= 0.0 else xnorm
        v[0] -= alpha
        vnorm = 0.0
        for i in range(m):
            vnorm += v[i] * v[i]
        vnorm = math.sqrt(vnorm)
        if vnorm == 0.0:
            continue
        for i in range(m):
            v[i] /= vnorm
        sub = a[k + 1:, k + 1:]
        p = np.zeros(m)
        for i in range(m):
            acc = 0.0
            for j in range(m):
                acc += sub[i, j] * v[j]
            p[i] = acc
        vp = 0.0
        for i in range(m):
            vp += v[i] * p[i]
        w = p - vp * v
        for i in range(m):
            for j in range(m):
                sub[i, j] -= 2.0 * (v[i] * w[j] + w[i] * v[j])
        a[k + 1, k] = alpha
        a[k, k + 1] = alpha
        for i in range(k + 2, n):
            a[i, k] = 0.0
            a[k, i] = 0.0
        block = qt[k + 1:, :]
        proj = np.zeros(n)
        for i in range(m):
            for j in range(n):
                proj[j] += v[i] * block[i, j]
        for i in range(m):
            for j in range(n):
                block[i, j] -= 2.0 * v[i] * proj[j]
    d = np.empty(n)
    e = np.zeros(n)
    for i in range(n):
        d[i] = a[i, i]
    for i in range(n - 1):
        e[i] = a[i + 1, i]
    return d, e, qt


@njit(cache=True)
def tql_implicit(d, e, vt, max_iter):
    """Implicit-shift QL on a symmetric tridiagonal matrix.

    ``d`` holds the diagonal, ``e[i]`` the entry coupling ``i`` and ``i+1``.
    Rotations are accumulated into the rows of ``vt``.  Returns
    ``(d, vt, status, residual)`` where ``status`` is the number of QL
    iterations or -1 when ``max_iter`` was exceeded.
    """
    n = d.shape[0]
    d = d.copy()
    e = e.copy()
    vt = vt.copy()
    f = 0.0
    tst1 = 0.0
    total = 0
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n - 1:
            if abs(e[m]) <= EPS * tst1:
                break
            m += 1
        if m > l:
            while True:
                total += 1
                if total > max_iter:
                    return d, vt, -1, abs(e[l])
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
                if p < 0.0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f += h
                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    for k in range(n):
                        h = vt[i + 1, k]
                        vt[i + 1, k] = s * vt[i, k] + c * h
                        vt[i, k] = c * vt[i, k] - s * h
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= EPS * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0
    return d, vt, total, 0.0


@njit(cache=True)
def jacobi_svd(at, tol, max_sweeps):
    """One-sided (Hestenes) Jacobi on the rows of ``at``.

    ``at`` is the transpose of a tall matrix A (shape n x m with m >= n);
    rows are orthogonalised in place.  Returns ``(sigma, ut, vt, sweeps)``
    with ``A = ut.T @ diag(sigma) @ vt`` before sorting.
    """
    n, m = at.shape
    u = at.copy()
    vt = np.eye(n)
    # columns below 1e-17 ||A||_F are roundoff; rotating them never settles
    total = 0.0
    for p in range(n):
        for k in range(m):
            total += u[p, k] * u[p, k]
    tiny = 1e-34 * total
    for sweep in range(max_sweeps):
        rotated = 0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for k in range(m):
                    alpha += u[p, k] * u[p, k]
                    beta += u[q, k] * u[q, k]
                    gamma += u[p, k] * u[q, k]
                if alpha <= tiny or beta <= tiny:
                    continue
                if abs(gamma) <= tol * math.sqrt(alpha * beta):
                    continue
                rotated += 1
                zeta = (beta - alpha) / (2.0 * gamma)
                t = 1.0 / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                if zeta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                for k in range(m):
                    up = u[p, k]
                    uq = u[q, k]
                    u[p, k] = c * up - s * uq
                    u[q, k] = s * up + c * uq
                for k in range(n):
                    vp = vt[p, k]
                    vq = vt[q, k]
                    vt[p, k] = c * vp - s * vq
                    vt[q, k] = s * vp + c * vq
        if rotated == 0:
            sigma = np.empty(n)
            for p in range(n):
                acc = 0.0
                for k in range(m):
                    acc += u[p, k] * u[p, k]
                sigma[p] = math.sqrt(acc)
                if sigma[p] > 0.0:
                    for k in range(m):
                        u[p, k] /= sigma[p]
            return sigma, u, vt, sweep
    sigma = np.zeros(n)
    return sigma, u, vt, -1


@njit(cache=True)
def cholesky(a):
    """Dense Cholesky; returns ``(L, pivot, value)`` with pivot -1 on success."""
    n = a.shape[0]
    low = np.zeros((n, n))
    for j in range(n):
        s = a[j, j]
        for k in range(j):
            s -= low[j, k] * low[j, k]
        if not s > 0.0:
            return low, j, s
        ljj = math.sqrt(s)
        low[j, j] = ljj
        for i in range(j + 1, n):
            s = a[i, j]
            for k in range(j):
                s -= low[i, k] * low[j, k]
            low[i, j] = s / ljj
    return low, -1, 0.0


@njit(cache=True)
def solve_lower(low, b):
    """Forward substitution ``L X = B`` for a block of right-hand sides."""
    n = low.shape[0]
    x = b.copy()
    k = x.shape[1]
    for i in range(n):
        for j in range(i):
            lij = low[i, j]
            if lij != 0.0:
                for c in range(k):
                    x[i, c] -= lij * x[j, c]
        inv = 1.0 / low[i, i]
        for c in range(k):
            x[i, c] *= inv
    return x


@njit(cache=True)
def solve_upper_t(low, b):
    """Backward substitution ``L^T X = B`` for a block of right-hand sides."""
    n = low.shape[0]
    x = b.copy()
    k = x.shape[1]
    for i in range(n - 1, -1, -1):
        for j in range(i + 1, n):
            lji = low[j, i]
            if lji != 0.0:
                for c in range(k):
                    x[i, c] -= lji * x[j, c]
        inv = 1.0 / low[i, i]
        for c in range(k):
            x[i, c] *= inv
    return x


@njit(cache=True)
def banded_cholesky(bands):
    """Cholesky of an SPD matrix held in upper band storage.

    ``bands[d, i] = A[i, i + d]``.  The factor is returned in lower band
    storage, ``lb[d, j] = L[j + d, j]``.  Returns ``(lb, pivot, value,
    flops)``.
    """
    nb, n = bands.shape
    b = nb - 1
    lb = np.zeros((nb, n))
    flops = 0
    for j in range(n):
        s = bands[0, j]
        k0 = max(0, j - b)
        for k in range(k0, j):
            ljk = lb[j - k, k]
            s -= ljk * ljk
            flops += 2
        if not s > 0.0:
            return lb, j, s, flops
        ljj = math.sqrt(s)
        lb[0, j] = ljj
        flops += 1
        for i in range(j + 1, min(n, j + b + 1)):
            s = bands[i - j, j]
            k0 = max(0, i - b)
            for k in range(k0, j):
                s -= lb[i - k, k] * lb[j - k, k]
                flops += 2
            lb[i - j, j] = s / ljj
            flops += 1
    return lb, -1, 0.0, flops


@njit(cache=True)
def banded_solve(lb, rhs):
    """Solve ``L L^T x = rhs`` with a lower band factor; returns ``(x, flops)``."""
    nb, n = lb.shape
    b = nb - 1
    x = rhs.copy()
    flops = 0
    for i in range(n):
        s = x[i]
        for k in range(max(0, i - b), i):
            s -= lb[i - k, k] * x[k]
            flops += 2
        x[i] = s / lb[0, i]
        flops += 1
    for i in range(n - 1, -1, -1):
        s = x[i]
        for k in range(i + 1, min(n, i + b + 1)):
            s -= lb[k - i, i] * x[k]
            flops += 2
        x[i] = s / lb[0, i]
        flops += 1
    return x, flops


@njit(cache=True)
def thomas(diag, off, rhs):
    """Thomas algorithm for a symmetric tridiagonal system.

    ``off[i]`` couples unknowns ``i`` and ``i + 1``.  Returns ``(x, pivot,
    value, flops)``; a non-positive elimination pivot aborts with its index.
    """
    n = diag.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    flops = 0
    piv = diag[0]
    if not piv > 0.0:
        return dp, 0, piv, flops
    if n > 1:
        cp[0] = off[0] / piv
    dp[0] = rhs[0] / piv
    flops += 2
    for i in range(1, n):
        piv = diag[i] - off[i - 1] * cp[i - 1]
        flops += 2
        if not piv > 0.0:
            return dp, i, piv, flops
        if i < n - 1:
            cp[i] = off[i] / piv
            flops += 1
        dp[i] = (rhs[i] - off[i - 1] * dp[i - 1]) / piv
        flops += 3
    x = dp
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
        flops += 2
    return x, -1, 0.0, flops
