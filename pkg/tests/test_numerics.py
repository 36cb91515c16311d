import itertools

import numpy as np
import pytest

from rechip.numerics import (
    align_global_phase,
    hermiticity_defect,
    permanent,
    psd_sqrt,
    tensor,
    unitarity_defect,
)
from conftest import random_unitary

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)


def permanent_by_enumeration(a):
    n = a.shape[0]
    total = 0j
    for perm in itertools.permutations(range(n)):
        term = 1.0 + 0j
        for i, j in enumerate(perm):
            term *= a[i, j]
        total += term
    return total


class TestTensor:
    def test_identity(self):
        assert np.array_equal(tensor(I2, I2), np.eye(4))

    def test_xx_permutes_basis(self):
        v = np.zeros(4)
        v[0] = 1.0
        out = tensor(X, X) @ v
        assert np.argmax(np.abs(out)) == 3

    def test_bilinearity(self, rng):
        for _ in range(20):
            a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            u = rng.normal(size=2) + 1j * rng.normal(size=2)
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            lhs = tensor(a, b) @ np.kron(u, v)
            rhs = np.kron(a @ u, b @ v)
            assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_associative(self, rng):
        a = rng.normal(size=(2, 2))
        b = rng.normal(size=(3, 3))
        c = rng.normal(size=(2, 2))
        assert np.allclose(tensor(tensor(a, b), c), tensor(a, tensor(b, c)), atol=0)


class TestPermanent:
    def test_identity(self):
        assert permanent(np.eye(2)) == pytest.approx(1.0)

    def test_all_ones_2x2(self):
        assert permanent(np.ones((2, 2))) == pytest.approx(2.0)

    def test_all_ones_3x3(self):
        assert permanent(np.ones((3, 3))) == pytest.approx(6.0)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_against_enumeration(self, n, rng):
        for _ in range(100):
            a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            expect = permanent_by_enumeration(a)
            assert abs(permanent(a) - expect) <= 1e-10 * max(1.0, abs(expect))

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            permanent(np.ones((2, 3)))


class TestPsdSqrt:
    def test_identity(self):
        assert np.allclose(psd_sqrt(np.eye(4)), np.eye(4), atol=1e-14)

    def test_diagonal(self):
        assert np.allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-12)

    def test_square_recovers_input(self, rng):
        for _ in range(25):
            g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            h = g @ g.conj().T
            root = psd_sqrt(h)
            assert np.max(np.abs(root @ root - h)) < 1e-9 * max(1.0, np.max(np.abs(h)))
            assert hermiticity_defect(root) < 1e-10
            assert np.linalg.eigvalsh(root).min() >= -1e-9

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            psd_sqrt(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValueError, match="clamp"):
            psd_sqrt(np.diag([-1e-6, 1.0]))

    def test_clamps_boundary_grazing(self):
        root = psd_sqrt(np.diag([-5e-11, 1.0]))
        assert np.linalg.eigvalsh(root).min() >= 0.0


class TestUnitarityDefect:
    def test_identity(self):
        assert unitarity_defect(np.eye(3)) == 0.0

    def test_scaled_identity(self):
        assert unitarity_defect(2.0 * np.eye(2)) == pytest.approx(3.0)

    def test_random_unitary(self, rng):
        assert unitarity_defect(random_unitary(rng, 6)) < 1e-12


def test_align_global_phase(rng):
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rotated = m * np.exp(1j * 1.234)
    assert np.max(np.abs(align_global_phase(rotated) - align_global_phase(m))) < 1e-12
    aligned = align_global_phase(m)
    k = np.unravel_index(np.argmax(np.abs(aligned)), aligned.shape)
    assert aligned[k].imag == pytest.approx(0.0, abs=1e-14)
    assert aligned[k].real > 0
