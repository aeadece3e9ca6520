"""Small dense linear algebra kernels.

All matrices handled here are tiny (dimension below ~64), so the routines
favour accuracy and transparency over speed.
"""

import math

import numpy as np

from .errors import IllConditioned, NoConvergence


def jacobi_eigh(a, tol=None, max_sweeps=60):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ascending and orthonormal eigenvectors
    in the columns of ``v``.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("square matrix expected")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max(initial=0.0))):
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    if tol is None:
        tol = np.finfo(float).eps
    scale = np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale or n < 2:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(tau) > 1e150:
                    t = 0.5 / tau       # tau^2 would overflow
                else:
                    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise NoConvergence("Jacobi sweeps did not converge")
    w = np.diag(a).copy()
    order = np.argsort(w)
    return w[order], v[:, order]


def sturm_count(diag, offdiag, x):
    """Number of eigenvalues below ``x`` of a symmetric tridiagonal matrix."""
    count = 0
    q = 1.0
    tiny = np.finfo(float).tiny
    for i, d in enumerate(diag):
        e2 = offdiag[i - 1] ** 2 if i > 0 else 0.0
        q = d - x - e2 / q
        if q == 0.0:
            q = -tiny
        if q < 0:
            count += 1
    return count


def solve_pivoted(a, b, max_pivot_ratio=1e12):
    """Solve ``a @ x = b`` by Gaussian elimination with partial pivoting.

    Raises IllConditioned when the ratio of largest to smallest pivot
    exceeds ``max_pivot_ratio``.
    """
    a = np.array(a, dtype=np.result_type(a, b, float))
    b = np.array(b, dtype=a.dtype)
    n = a.shape[0]
    vector = b.ndim == 1
    if vector:
        b = b[:, None]
    pivots = np.empty(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        pivots[k] = abs(a[k, k])
        if pivots[k] == 0.0:
            raise IllConditioned("matrix is singular")
        f = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= np.outer(f, a[k, k:])
        b[k + 1:] -= np.outer(f, b[k])
    ratio = pivots.max() / pivots.min()
    if ratio > max_pivot_ratio:
        raise IllConditioned(f"pivot ratio {ratio:.3e} exceeds {max_pivot_ratio:.1e}")
    x = np.empty_like(b)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x[:, 0] if vector else x


_PADE6 = [math.factorial(12 - k) * math.factorial(6)
          / (math.factorial(12) * math.factorial(k) * math.factorial(6 - k))
          for k in range(7)]


def expm(a):
    """Matrix exponential by scaling and squaring with a [6/6] Pade approximant."""
    a = np.asarray(a)
    a = a.astype(np.result_type(a, float))
    n = a.shape[0]
    norm = np.abs(a).sum(axis=1).max(initial=0.0)
    s = 0
    if norm > 0.5:
        s = int(math.ceil(math.log2(norm / 0.5)))
    x = a / 2.0**s
    ident = np.eye(n, dtype=a.dtype)
    num = _PADE6[0] * ident
    den = _PADE6[0] * ident
    power = ident
    for k in range(1, 7):
        power = power @ x
        num = num + _PADE6[k] * power
        den = den + (-1) ** k * _PADE6[k] * power
    r = np.linalg.solve(den, num)
    for _ in range(s):
        r = r @ r
    return r
