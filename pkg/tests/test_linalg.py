"""SVD gates, approximate inverses, and the orthogonal inverse enclosure."""

from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest

from certsurf.errors import LinearAlgebraError, RankDeficientError
from certsurf.linalg import approx_inverse, orthogonal_inverse_enclosure, svd_factor


def test_svd_sphere_pole_jacobian():
    u, s, vt = svd_factor([[0.0, 0.0, 2.0]])
    assert s == pytest.approx([2.0])
    assert abs(u[0, 0]) == pytest.approx(1.0)
    # first right singular vector is +-e3
    assert np.abs(vt[0]) == pytest.approx([0.0, 0.0, 1.0], abs=1e-15)
    np.testing.assert_allclose(u @ np.array([[s[0], 0, 0]]) @ vt, [[0, 0, 2]], atol=1e-14)


def test_svd_rejects_rank_deficient():
    with pytest.raises(RankDeficientError):
        svd_factor([[0.0, 0.0, 0.0]])
    with pytest.raises(RankDeficientError):
        svd_factor([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    with pytest.raises(RankDeficientError):
        svd_factor([[1.0, 0.0, 0.0], [0.0, 1e-12, 0.0]])


def test_svd_rejects_bad_input():
    with pytest.raises(LinearAlgebraError):
        svd_factor([[np.nan, 0.0, 0.0]])
    with pytest.raises(LinearAlgebraError):
        svd_factor(np.zeros(3))


def test_approx_inverse_diagonal():
    inv = approx_inverse(np.diag([2.0, 4.0]))
    np.testing.assert_allclose(inv, np.diag([0.5, 0.25]), atol=1e-16)


def test_approx_inverse_rejects_singular():
    with pytest.raises(LinearAlgebraError):
        approx_inverse([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(LinearAlgebraError):
        approx_inverse(np.zeros((2, 2)))


def _fraction_inverse(mat: np.ndarray) -> list[list[Fraction]]:
    """Exact inverse of a float matrix via rational Gauss-Jordan."""
    k = mat.shape[0]
    a = [[Fraction(float(mat[i, j])) for j in range(k)] for i in range(k)]
    b = [[Fraction(int(i == j)) for j in range(k)] for i in range(k)]
    for col in range(k):
        piv = max(range(col, k), key=lambda r: abs(a[r][col]))
        if a[piv][col] == 0:
            raise ZeroDivisionError("singular")
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        scale = a[col][col]
        a[col] = [x / scale for x in a[col]]
        b[col] = [x / scale for x in b[col]]
        for r in range(k):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                b[r] = [x - f * y for x, y in zip(b[r], b[col])]
    return b


def _random_rotation(rng: random.Random, k: int) -> np.ndarray:
    g = np.array([[rng.gauss(0, 1) for _ in range(k)] for _ in range(k)])
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


def test_orthogonal_inverse_enclosure_permutation():
    p = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    enc = orthogonal_inverse_enclosure(p)
    # exactly representable orthogonal matrix: zero defect, point entries
    for i in range(3):
        for j in range(3):
            assert enc[i, j].lo == enc[i, j].hi == p[j, i]


def test_orthogonal_inverse_enclosure_contains_exact_inverse():
    rng = random.Random(31)
    for k in (2, 3, 4):
        for _ in range(20):
            v = _random_rotation(rng, k)
            enc = orthogonal_inverse_enclosure(v)
            exact = _fraction_inverse(v)
            for i in range(k):
                for j in range(k):
                    assert Fraction(enc[i, j].lo) <= exact[i][j] <= Fraction(enc[i, j].hi)
                    assert enc[i, j].hi - enc[i, j].lo < 1e-13


def test_orthogonal_inverse_enclosure_rejects_far_from_orthogonal():
    with pytest.raises(LinearAlgebraError):
        orthogonal_inverse_enclosure(np.diag([3.0, 1.0]))
