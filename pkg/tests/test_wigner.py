import numpy as np
import pytest

from qnash import (DensityMatrix, HermitianMatrix, QnashError, build_basis,
                   hs_inner, parity_operator, psi, psi_inv, random_density,
                   random_hermitian, weyl)

# the parity operator in dimension five, as displayed with basis labels
# ordered 1, 2, 3, 4, 0
PARITY_5_RELABELED = np.array([
    [0, 0, 0, 1, 0],
    [0, 0, 1, 0, 0],
    [0, 1, 0, 0, 0],
    [1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1],
], dtype=float)


def test_weyl_generators():
    assert np.array_equal(weyl(0, 0, 3), np.eye(3))
    x = weyl(1, 0, 3)
    e = np.eye(3)
    assert np.array_equal(x @ e[:, 0], e[:, 1])
    assert np.array_equal(x @ e[:, 1], e[:, 2])
    assert np.array_equal(x @ e[:, 2], e[:, 0])
    w3 = np.exp(2j * np.pi / 3)
    assert np.abs(weyl(0, 1, 3) - np.diag([1, w3, w3 ** 2])).max() < 1e-15


def test_weyl_rejects_even():
    with pytest.raises(QnashError):
        weyl(0, 0, 4)


def test_weyl_unitary(rng):
    for n in (3, 5):
        for _ in range(5):
            a, b = rng.integers(0, n), rng.integers(0, n)
            w = weyl(a, b, n)
            assert np.abs(w @ w.conj().T - np.eye(n)).max() < 1e-12


def test_parity_operator():
    assert np.array_equal(parity_operator(1).mat.real, [[1.0]])
    t5 = parity_operator(5).mat.real
    for a in range(5):
        assert t5[(5 - a) % 5, a] == 1.0
    relabel = [1, 2, 3, 4, 0]
    assert np.array_equal(t5[np.ix_(relabel, relabel)], PARITY_5_RELABELED)
    assert np.trace(parity_operator(7).mat).real == pytest.approx(1.0)


def test_basis_small_dims():
    b1 = build_basis(1)
    assert len(b1.operators) == 1 and b1.operators[0].mat[0, 0] == 1.0
    b3 = build_basis(3)
    assert np.array_equal(b3.operators[0].mat, parity_operator(3).mat)
    for j in range(9):
        for k in range(9):
            expect = 3.0 if j == k else 0.0
            assert abs(hs_inner(b3.operators[j], b3.operators[k]) - expect) <= 1e-9


def test_psi_maximally_mixed():
    b3 = build_basis(3)
    v = psi(DensityMatrix.maximally_mixed(3), b3)
    assert np.abs(v - 1.0 / 9.0).max() < 1e-12


def test_psi_density_lands_in_simplex(rng):
    b3 = build_basis(3)
    for _ in range(100):
        v = psi(random_density(3, rng), b3)
        assert v.min() >= -1e-12 and v.max() <= 1.0 + 1e-12
        assert abs(v.sum() - 1.0) <= 1e-12


def test_roundtrips(rng):
    for n in (3, 5):
        b = build_basis(n)
        for _ in range(20):
            h = random_hermitian(n, rng)
            back = psi_inv(psi(h, b), b)
            assert np.linalg.norm(back.mat - h.mat) <= 1e-9 * max(1.0, np.linalg.norm(h.mat))
            v = rng.normal(size=n * n)
            v = v - (v.sum() - 1.0) / (n * n)
            assert np.abs(psi(psi_inv(v, b), b) - v).max() <= 1e-12


def test_isometry_scaling(rng):
    for n in (3, 5):
        b = build_basis(n)
        for _ in range(50):
            h, k = random_hermitian(n, rng), random_hermitian(n, rng)
            lhs = np.linalg.norm(psi(h, b) - psi(k, b)) * np.sqrt(n) * (n + 1)
            rhs = np.linalg.norm(h.mat - k.mat)
            assert abs(lhs - rhs) <= 1e-9 * max(rhs, 1.0)


def test_proper_inclusion_witness():
    # some simplex vertex maps to a unit-trace operator with a negative
    # eigenvalue, so the densities sit strictly inside the simplex
    b3 = build_basis(3)
    witnesses = 0
    for k in range(9):
        v = np.zeros(9)
        v[k] = 1.0
        h = psi_inv(v, b3)
        assert abs(np.trace(h.mat).real - 1.0) < 1e-12
        if np.linalg.eigvalsh(h.mat)[0] < -1e-6:
            witnesses += 1
    assert witnesses > 0


def test_dimension_mismatch():
    b3 = build_basis(3)
    with pytest.raises(QnashError):
        psi(HermitianMatrix.identity(4), b3)
    with pytest.raises(QnashError):
        psi_inv(np.ones(8), b3)
