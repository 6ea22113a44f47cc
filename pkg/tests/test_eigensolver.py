import math

import numpy as np
import pytest

from rdmft_qfi.eigensolver import (
    bisect_eigenvalue,
    gershgorin_bounds,
    lowest_eigenpairs,
    lowest_eigenpairs_dense,
    smallest_eigenpair_tridiagonal,
    sturm_count,
)
from rdmft_qfi.fock import FockBasis, op_hamiltonian


def jacobi_eigenvalues(a, sweeps=60):
    """Cyclic Jacobi rotations, an oracle independent of LAPACK."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    scale = max(1.0, float(np.abs(a).max()))
    for _ in range(sweeps):
        if np.abs(a - np.diag(np.diag(a))).max() < 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300 + 1e-17 * scale:
                    continue
                tau = (a[q, q] - a[p, p]) / (2 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1 + tau * tau))
                c = 1 / math.sqrt(1 + t * t)
                s = t * c
                rp, rq = a[p].copy(), a[q].copy()
                a[p], a[q] = c * rp - s * rq, s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * cp - s * cq, s * cp + c * cq
    return np.sort(np.diag(a))


def tridiag(d, e):
    return np.diag(d) + np.diag(e, 1) + np.diag(e, -1)


def test_2x2_by_hand():
    # [[2, 1], [1, 2]] has eigenvalues 1 and 3; the lower eigenvector is (1, -1)/sqrt(2)
    pairs = lowest_eigenpairs([2.0, 2.0], [1.0], 2)
    assert np.allclose(pairs.values, [1.0, 3.0])
    v = pairs.vectors[:, 0]
    assert abs(abs(v @ np.array([1, -1]) / math.sqrt(2)) - 1) < 1e-14


@pytest.mark.parametrize("seed", range(5))
def test_random_tridiagonal_against_jacobi(seed):
    rng = np.random.default_rng(seed)
    n = 12
    d, e = rng.normal(size=n), rng.normal(size=n - 1)
    ref = jacobi_eigenvalues(tridiag(d, e))
    pairs = lowest_eigenpairs(d, e, 3)
    assert np.allclose(pairs.values, ref[:3], atol=1e-12)
    assert np.all(pairs.residuals < 1e-12)
    assert np.allclose(pairs.vectors.T @ pairs.vectors, np.eye(3), atol=1e-12)


def test_sturm_count_and_bounds():
    d, e = [1.0, 2.0, 3.0], [0.5, 0.5]
    ev = jacobi_eigenvalues(tridiag(d, e))
    lo, hi = gershgorin_bounds(d, e)
    assert lo <= ev[0] and ev[-1] <= hi
    e2 = [x * x for x in e]
    assert sturm_count(d, e2, ev[1] + 1e-9, 1e-300) == 2
    assert bisect_eigenvalue(d, e, 2) == pytest.approx(ev[2], abs=1e-14)


def test_zero_offdiagonal_exact_shift():
    # an exact eigenvalue as the shift must not blow up inverse iteration
    pairs = lowest_eigenpairs([0.0, 2.0, 2.0], [0.0, 0.0], 2)
    assert np.allclose(pairs.values, [0.0, 2.0])
    assert np.all(np.isfinite(pairs.vectors))


def test_degenerate_pair_orthogonal():
    pairs = lowest_eigenpairs([1.0, 1.0, 5.0], [0.0, 0.0], 2)
    assert np.allclose(pairs.values, [1.0, 1.0])
    assert abs(pairs.vectors[:, 0] @ pairs.vectors[:, 1]) < 1e-12


def test_bose_hubbard_large_n_against_dense():
    h = op_hamiltonian(FockBasis(200), 1.0, 0.01)
    d, e = h.tridiagonal_bands()
    val, vec = smallest_eigenpair_tridiagonal(d, e)
    dense = lowest_eigenpairs_dense(h.entries.real, 1)
    assert val == pytest.approx(dense.values[0], rel=1e-13, abs=1e-11)
    assert abs(abs(vec @ dense.vectors[:, 0]) - 1) < 1e-10


def test_input_validation():
    with pytest.raises(ValueError):
        lowest_eigenpairs([], [])
    with pytest.raises(ValueError):
        lowest_eigenpairs([1.0, 2.0], [1.0, 1.0])


def test_random_200_tridiagonal_against_jacobi():
    rng = np.random.default_rng(200)
    d, e = rng.normal(size=200), rng.normal(size=199)
    ref = jacobi_eigenvalues(tridiag(d, e))
    pairs = lowest_eigenpairs(d, e, 4)
    assert np.allclose(pairs.values, ref[:4], atol=1e-9)


def test_noninteracting_n2_lowest_is_minus_two():
    h = op_hamiltonian(FockBasis(2), 1.0, 0.0)
    assert smallest_eigenpair_tridiagonal(*h.tridiagonal_bands())[0] == pytest.approx(-2.0, abs=1e-14)
