import numpy as np
import pytest

from conftest import random_unitary, rotation
from vnperturb.algebra import conjugate, diagonal, full_algebra, multimatrix, sample_unitary, scalars
from vnperturb.dixmier import (
    ad_norm_bound,
    check_commutant_near_inclusion,
    haar_average,
    hull_gap,
    monte_carlo_average,
)
from vnperturb.errors import DomainError

M2 = full_algebra(2)
X = np.array([[1, 2], [3, 4]], dtype=complex)


class TestHaarAverage:
    def test_fixed_point(self):
        x = np.diag([2.0, -1.0]).astype(complex)
        cert = haar_average(diagonal(2), M2, x, hull_points=50, rng_seed=0)
        np.testing.assert_allclose(cert.output, x, atol=1e-14)
        assert cert.hull_gap <= 1e-8

    def test_diagonal_kills_off_diagonal(self):
        np.testing.assert_allclose(haar_average(diagonal(2), M2, X).output, np.diag([1.0, 4.0]), atol=1e-14)

    def test_scalars_act_trivially(self):
        np.testing.assert_allclose(haar_average(scalars(2), M2, X).output, X, atol=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            haar_average(scalars(2), diagonal(2), X)

    def test_equivariant_and_contractive(self, rng):
        A = multimatrix(3, [(1, 1), (2, 1)], random_unitary(3, rng))
        L = full_algebra(3)
        x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        y = haar_average(A, L, x).output
        u0 = sample_unitary(A, 1)
        assert np.abs(haar_average(A, L, u0 @ x @ u0.conj().T).output - y).max() <= 1e-10
        assert np.linalg.norm(y, 2) <= np.linalg.norm(x, 2) + 1e-10
        assert haar_average(A, L, x).commutant_residual <= 1e-10

    def test_monte_carlo_close(self):
        A = diagonal(2)
        mc = monte_carlo_average(A, X, 20000, 4)
        assert np.linalg.norm(mc - np.diag([1.0, 4.0])) <= 0.1

    def test_hull_gap_small(self, rng):
        A = multimatrix(3, [(1, 1), (2, 1)], random_unitary(3, rng))
        x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        y = haar_average(A, full_algebra(3), x).output
        assert hull_gap(A, x, y, 200, 5) <= 1e-3


class TestAdNorm:
    def test_commuting(self):
        assert ad_norm_bound(diagonal(2), np.diag([1.0, 2.0]), 50, 0) <= 1e-12

    def test_matrix_unit(self):
        value = ad_norm_bound(diagonal(2), np.array([[0, 1], [0, 0]]), 2000, 0)
        assert 1.9 <= value <= 2.0 + 1e-12

    def test_scalars(self, rng):
        assert ad_norm_bound(scalars(3), rng.standard_normal((3, 3)), 50, 0) <= 1e-12


class TestNearInclusion:
    def test_equal(self):
        rep = check_commutant_near_inclusion(diagonal(2), diagonal(2), M2, 0.0, 10, 0)
        assert rep.passed and rep.max_distance <= 1e-12

    def test_rotated_diagonal(self):
        v = rotation(0.05)
        N = diagonal(2)
        rep = check_commutant_near_inclusion(N, conjugate(N, v), M2, 2 * np.linalg.norm(v - np.eye(2), 2), 20, 1)
        assert rep.passed
        assert rep.to_text().splitlines()[-1] == "verdict = pass"

    def test_scalars(self, rng):
        M = multimatrix(3, [(1, 1), (2, 1)], random_unitary(3, rng))
        assert check_commutant_near_inclusion(scalars(3), M, full_algebra(3), 0.0, 10, 0).passed
