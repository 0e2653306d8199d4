import numpy as np
import pytest

from qbdtail import matcore
from qbdtail.errors import (
    NonPositiveScale,
    NotIrreducible,
    ShapeMismatch,
    SpectralRadiusNotBelowOne,
)


def char_poly_largest_root(t):
    """Independent oracle: largest real root of the characteristic polynomial
    of a 3x3 matrix, with coefficients formed from trace/minors/determinant."""
    t = np.asarray(t, dtype=float)
    assert t.shape == (3, 3)
    tr = np.trace(t)
    # sum of principal 2x2 minors
    m = 0.0
    for i in range(3):
        idx = [j for j in range(3) if j != i]
        sub = t[np.ix_(idx, idx)]
        m += np.linalg.det(sub)
    det = np.linalg.det(t)
    roots = np.roots([1.0, -tr, m, -det])
    real = roots[np.abs(roots.imag) < 1e-9].real
    return float(np.max(real))


class TestPfEigen:
    def test_stochastic_fixed_point(self):
        t = np.array([[0.2, 0.5, 0.3], [0.4, 0.1, 0.5], [0.3, 0.3, 0.4]])
        res = matcore.pf_eigen(t)
        assert res.value == pytest.approx(1.0, abs=1e-12)
        # right vector proportional to the ones vector
        assert np.allclose(res.right, np.full(3, 1.0 / 3.0), atol=1e-10)

    def test_two_by_two_antidiagonal(self):
        a, b = 0.7, 0.2
        res = matcore.pf_eigen(np.array([[0.0, a], [b, 0.0]]))
        assert res.value == pytest.approx(np.sqrt(a * b), abs=1e-12)

    def test_matches_characteristic_polynomial_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            t = rng.uniform(0.01, 1.0, size=(3, 3))
            res = matcore.pf_eigen(t)
            assert res.value == pytest.approx(char_poly_largest_root(t), abs=1e-10)

    def test_residual_and_normalisation(self):
        rng = np.random.default_rng(3)
        t = rng.uniform(0.1, 1.0, size=(4, 4))
        res = matcore.pf_eigen(t)
        assert res.residual <= 1e-10
        assert res.right.sum() == pytest.approx(1.0)
        assert res.left.sum() == pytest.approx(1.0)
        assert np.all(res.right > 0) and np.all(res.left > 0)

    def test_transpose_swaps_vectors(self):
        rng = np.random.default_rng(11)
        t = rng.uniform(0.05, 1.0, size=(4, 4))
        a = matcore.pf_eigen(t)
        b = matcore.pf_eigen(t.T)
        assert a.value == pytest.approx(b.value, abs=1e-11)
        assert np.allclose(a.right, b.left, atol=1e-9)
        assert np.allclose(a.left, b.right, atol=1e-9)

    def test_diagonal_similarity_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            t = rng.uniform(0.05, 1.0, size=(3, 3))
            d = rng.uniform(0.2, 5.0, size=3)
            sim = t * d[np.newaxis, :] / d[:, np.newaxis]
            assert matcore.pf_eigen(sim).value == pytest.approx(
                matcore.pf_eigen(t).value, abs=1e-10)

    def test_not_irreducible(self):
        t = np.array([[0.5, 0.5], [0.0, 1.0]])
        with pytest.raises(NotIrreducible):
            matcore.pf_eigen(t)

    def test_periodic_matrix_converges(self):
        # plain power iteration would oscillate on this 2-cycle
        t = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert matcore.pf_eigen(t).value == pytest.approx(1.0, abs=1e-12)

    def test_one_by_one(self):
        res = matcore.pf_eigen(np.array([[0.0]]))
        assert res.value == 0.0
        assert res.right[0] == 1.0


class TestKron:
    def test_scalar_sum(self):
        out = matcore.kron_sum(np.array([[1.0]]), np.array([[2.0]]))
        assert out == pytest.approx(np.array([[3.0]]))

    def test_identity_product_block_diagonal(self):
        b = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = matcore.kron_prod(np.eye(2), b)
        assert np.allclose(out[:2, :2], b)
        assert np.allclose(out[2:, 2:], b)
        assert np.allclose(out[:2, 2:], 0)

    def test_spectral_additivity(self):
        a = np.array([[0.0, 1.0], [1.0, 0.0]])
        b = np.array([[0.0, 2.0], [2.0, 0.0]])
        res = matcore.pf_eigen(matcore.kron_sum(a, b))
        assert res.value == pytest.approx(3.0, abs=1e-11)

    def test_spectral_additivity_random(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            a = rng.uniform(0.05, 1.0, size=(2, 2))
            b = rng.uniform(0.05, 1.0, size=(3, 3))
            ra, rb = matcore.pf_eigen(a), matcore.pf_eigen(b)
            rs = matcore.pf_eigen(matcore.kron_sum(a, b))
            assert rs.value == pytest.approx(ra.value + rb.value, abs=1e-10)
            # eigenvector of the sum is the Kronecker product of the factors
            hv = np.kron(ra.right, rb.right)
            hv /= hv.sum()
            assert np.allclose(rs.right, hv, atol=1e-8)

    def test_kron_sum_shape_check(self):
        with pytest.raises(ShapeMismatch):
            matcore.kron_sum(np.ones((2, 3)), np.eye(2))


class TestNeumannInverse:
    def test_zero_matrix(self):
        assert np.allclose(matcore.neumann_inverse(np.zeros((3, 3))), np.eye(3))

    def test_scalar_geometric(self):
        assert matcore.neumann_inverse(np.array([[0.5]]))[0, 0] == pytest.approx(2.0)

    def test_matches_direct_solve(self):
        t = np.array([[0.2, 0.3], [0.1, 0.4]])
        direct = np.linalg.solve(np.eye(2) - t, np.eye(2))
        assert np.allclose(matcore.neumann_inverse(t), direct, atol=1e-12)

    def test_matches_truncated_power_sum(self):
        rng = np.random.default_rng(2)
        t = rng.uniform(0.0, 0.25, size=(3, 3))
        radius = matcore.spectral_radius(t)
        # remainder bound: radius^(n+1)/(1-radius) <= 1e-9
        n = int(np.ceil(np.log(1e-9 * (1 - radius)) / np.log(radius)))
        acc = np.zeros((3, 3))
        power = np.eye(3)
        for _ in range(n + 1):
            acc += power
            power = power @ t
        assert np.allclose(matcore.neumann_inverse(t), acc, atol=1e-8)
        assert np.all(matcore.neumann_inverse(t) >= 0)

    def test_rejects_radius_at_one(self):
        t = np.array([[0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(SpectralRadiusNotBelowOne):
            matcore.neumann_inverse(t)


class TestTwist:
    def test_identity_transform(self):
        blocks = [np.array([[0.1, 0.2], [0.3, 0.4]]) for _ in range(3)]
        out = matcore.twist(blocks, np.ones(2), 0.0, (-1, 0, 1))
        for orig, tw in zip(blocks, out):
            assert np.allclose(orig, tw)

    def test_scalar_blocks_sum_to_one_at_root(self):
        # 0.1 x^2 - 0.8 x + 0.5 = 0 encodes a1 e^{2t} + (a0-1) e^t + am1 = 0
        am1, a0, a1 = 0.5, 0.2, 0.1
        x = min(np.roots([a1, a0 - 1.0, am1]).real)
        theta = np.log(x)
        out = matcore.twist([np.array([[v]]) for v in (am1, a0, a1)],
                            np.ones(1), theta, (-1, 0, 1))
        assert sum(b[0, 0] for b in out) == pytest.approx(1.0, abs=1e-12)

    def test_row_sums_equal_eigenvalue(self):
        rng = np.random.default_rng(9)
        blocks = [rng.uniform(0.01, 0.4, size=(3, 3)) for _ in range(3)]
        for theta in (-0.7, 0.0, 0.9):
            mgf = (np.exp(-theta) * blocks[0] + blocks[1]
                   + np.exp(theta) * blocks[2])
            res = matcore.pf_eigen(mgf)
            tw = matcore.twist(blocks, res.right, theta, (-1, 0, 1))
            rows = sum(tw) @ np.ones(3)
            assert np.allclose(rows, res.value, atol=1e-9)

    def test_rejects_nonpositive_scale(self):
        with pytest.raises(NonPositiveScale):
            matcore.twist([np.eye(2)], np.array([1.0, 0.0]), 0.0, (0,))


class TestMetzler:
    def test_generator_has_zero_eigenvalue(self):
        q = np.array([[-1.0, 1.0], [2.0, -2.0]])
        val, vec = matcore.metzler_eigen(q)
        assert val == pytest.approx(0.0, abs=1e-12)
        assert np.all(vec > 0)

    def test_shift_invariance(self):
        rng = np.random.default_rng(4)
        a = rng.uniform(0.0, 1.0, size=(3, 3))
        np.fill_diagonal(a, rng.uniform(-3.0, -1.0, size=3))
        val, _ = matcore.metzler_eigen(a)
        ref = np.max(np.linalg.eigvals(a).real)
        assert val == pytest.approx(float(ref), abs=1e-10)


def test_spectral_radius_reducible():
    t = np.array([[0.5, 1.0], [0.0, 0.9]])
    assert matcore.spectral_radius(t) == pytest.approx(0.9)
