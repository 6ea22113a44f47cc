"""Low-lying eigenpairs of real symmetric tridiagonal matrices.

Eigenvalues come from bisection on the Sturm sequence count, eigenvectors
from inverse iteration with a partially pivoted tridiagonal LU.  The inner
loops are plain Python over floats, which beats per-element numpy calls for
the sizes used here (N up to a few thousand).
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

_EPS = np.finfo(float).eps
_SAFMIN = np.finfo(float).tiny


class Eigenpairs(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray  # columns
    residuals: np.ndarray


def _as_bands(diag, offdiag) -> tuple[list[float], list[float]]:
    d = np.asarray(diag, dtype=float).reshape(-1)
    e = np.asarray(offdiag, dtype=float).reshape(-1)
    if d.size == 0:
        raise ValueError("empty matrix")
    if e.size != d.size - 1:
        raise ValueError(f"off-diagonal must have length {d.size - 1}, got {e.size}")
    return d.tolist(), e.tolist()


def gershgorin_bounds(d: list[float], e: list[float]) -> tuple[float, float]:
    n = len(d)
    lo, hi = math.inf, -math.inf
    for i in range(n):
        r = (abs(e[i - 1]) if i > 0 else 0.0) + (abs(e[i]) if i < n - 1 else 0.0)
        lo = min(lo, d[i] - r)
        hi = max(hi, d[i] + r)
    return lo, hi


def sturm_count(d: list[float], e2: list[float], x: float, pivmin: float) -> int:
    """Number of eigenvalues strictly below ``x``."""
    count = 0
    q = d[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0:
        count += 1
    for i in range(1, len(d)):
        q = d[i] - x - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0:
            count += 1
    return count


def bisect_eigenvalue(d: list[float], e: list[float], k: int, rtol: float = 2 * _EPS) -> float:
    """k-th smallest eigenvalue (k = 0 is the lowest) by Sturm bisection."""
    n = len(d)
    if not 0 <= k < n:
        raise IndexError(k)
    e2 = [v * v for v in e]
    lo, hi = gershgorin_bounds(d, e)
    scale = max(abs(lo), abs(hi), _SAFMIN)
    pivmin = _SAFMIN * max(1.0, max(e2, default=1.0))
    lo -= 2 * _EPS * scale + pivmin
    hi += 2 * _EPS * scale + pivmin
    atol = 4 * pivmin
    while hi - lo > rtol * max(abs(lo), abs(hi)) + atol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if sturm_count(d, e2, mid, pivmin) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _solve_shifted(d: list[float], e: list[float], shift: float, b: list[float], tiny: float) -> list[float]:
    """Solve (T - shift I) x = b by LU with partial pivoting (LAPACK gttrf/gttrs scheme)."""
    n = len(d)
    if n == 1:
        piv = d[0] - shift
        return [b[0] / (piv if abs(piv) > tiny else tiny)]
    dl = list(e)
    dd = [v - shift for v in d]
    du = list(e)
    du2 = [0.0] * max(n - 2, 0)
    swap = [False] * (n - 1)
    for i in range(n - 1):
        if abs(dd[i]) >= abs(dl[i]):
            if abs(dd[i]) < tiny:
                # exact eigenvalue shifts give (near) zero pivots; perturb as LAPACK stein does
                dd[i] = tiny if dd[i] >= 0 else -tiny
            f = dl[i] / dd[i]
            dl[i] = f
            dd[i + 1] -= f * du[i]
        else:
            swap[i] = True
            f = dd[i] / dl[i]
            dd[i] = dl[i]
            dl[i] = f
            tmp = du[i]
            du[i] = dd[i + 1]
            dd[i + 1] = tmp - f * dd[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -f * du[i + 1]
    if abs(dd[n - 1]) < tiny:
        dd[n - 1] = tiny if dd[n - 1] >= 0 else -tiny
    x = list(b)
    for i in range(n - 1):
        if swap[i]:
            x[i], x[i + 1] = x[i + 1], x[i] - dl[i] * x[i + 1]
        else:
            x[i + 1] -= dl[i] * x[i]
    for i in range(n - 1):
        if abs(dd[i]) < tiny:
            dd[i] = tiny if dd[i] >= 0 else -tiny
    x[n - 1] /= dd[n - 1]
    x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / dd[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / dd[i]
    return x


def _tridiag_matvec(d: np.ndarray, e: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = d * v
    out[:-1] += e * v[1:]
    out[1:] += e * v[:-1]
    return out


def inverse_iteration(
    d: list[float],
    e: list[float],
    value: float,
    lock: list[np.ndarray] = (),
    max_iter: int = 8,
    seed: int = 0,
) -> np.ndarray:
    """Eigenvector for an eigenvalue estimate, kept orthogonal to ``lock``."""
    n = len(d)
    dn, en = np.asarray(d), np.asarray(e)
    tnorm = float(np.max(np.abs(dn))) + 2 * float(np.max(np.abs(en), initial=0.0))
    tiny = _EPS * max(tnorm, _SAFMIN)
    rng = np.random.default_rng(seed)
    v = rng.uniform(-1.0, 1.0, n) + 1.0 / math.sqrt(n)
    prev = None
    for _ in range(max_iter):
        for w in lock:
            v = v - np.dot(w, v) * w
        v = v / np.linalg.norm(v)
        x = np.asarray(_solve_shifted(d, e, value, v.tolist(), tiny))
        for w in lock:
            x = x - np.dot(w, x) * w
        nx = np.linalg.norm(x)
        if not math.isfinite(nx) or nx == 0.0:
            v = rng.uniform(-1.0, 1.0, n)
            continue
        x = x / nx
        v = x
        if prev is not None and abs(abs(np.dot(prev, x)) - 1.0) < 1e-15:
            break
        prev = x
    return v


def lowest_eigenpairs(diag, offdiag, k: int = 1) -> Eigenpairs:
    """The ``k`` smallest eigenpairs of a real symmetric tridiagonal matrix."""
    d, e = _as_bands(diag, offdiag)
    n = len(d)
    k = min(k, n)
    dn, en = np.asarray(d), np.asarray(e)
    tnorm = max(float(np.max(np.abs(dn))) + 2 * float(np.max(np.abs(en), initial=0.0)), _SAFMIN)
    values, vectors, residuals = [], [], []
    for j in range(k):
        lam = bisect_eigenvalue(d, e, j)
        # near-degenerate partners need orthogonalization against earlier vectors
        lock = [w for w, mu in zip(vectors, values) if abs(mu - lam) < 1e-7 * tnorm]
        v = inverse_iteration(d, e, lam, lock=lock, seed=j)
        for _ in range(3):
            tv = _tridiag_matvec(dn, en, v)
            rq = float(np.dot(v, tv))
            res = float(np.linalg.norm(tv - rq * v))
            if res <= 1e-12 * tnorm:
                break
            v = inverse_iteration(d, e, rq, lock=lock, seed=j + 17)
        tv = _tridiag_matvec(dn, en, v)
        rq = float(np.dot(v, tv))
        values.append(rq)
        vectors.append(v)
        residuals.append(float(np.linalg.norm(tv - rq * v)))
    return Eigenpairs(np.array(values), np.column_stack(vectors), np.array(residuals))


def smallest_eigenpair_tridiagonal(diag, offdiag) -> tuple[float, np.ndarray]:
    pairs = lowest_eigenpairs(diag, offdiag, 1)
    return float(pairs.values[0]), pairs.vectors[:, 0]


def lowest_eigenpairs_dense(matrix: np.ndarray, k: int = 1) -> Eigenpairs:
    """Fallback for Hermitian matrices without tridiagonal structure (LAPACK heevd)."""
    m = np.asarray(matrix)
    vals, vecs = np.linalg.eigh(m)
    k = min(k, vals.size)
    v = vecs[:, :k]
    res = np.linalg.norm(m @ v - v * vals[:k], axis=0)
    return Eigenpairs(vals[:k].copy(), v.copy(), res)
