import numpy as np
import pytest

from conftest import random_unitary
from vnperturb.algebra import contains, diagonal, full_algebra, multimatrix, scalars
from vnperturb.basic_construction import (
    build_basic_construction,
    corner_iso,
    gns_from_trace,
    jones_projection,
    represent,
)
from vnperturb.errors import CornerDecodingError, InclusionError
from vnperturb.expectation import trace_expectation

M2 = full_algebra(2)


def bc_for(L, M):
    return build_basic_construction(L, M, trace_expectation(L, M))


class TestGns:
    def test_m2(self):
        g = gns_from_trace(M2)
        assert g.dim == 4
        np.testing.assert_allclose(g.cyclic_vector, g.vector(np.eye(2)))
        a, b = np.array([[1, 2j], [0, 1]]), np.array([[0, 1], [1, 3]])
        assert g.inner(a, b) == pytest.approx(np.trace(b.conj().T @ a) / 2)

    def test_m1(self):
        assert gns_from_trace(full_algebra(1)).dim == 1

    def test_matrix_unit_norm(self):
        assert gns_from_trace(M2).inner(np.diag([1.0, 0.0]), np.diag([1.0, 0.0])) == pytest.approx(0.5)

    def test_state(self):
        g = gns_from_trace(full_algebra(3))
        assert np.vdot(g.cyclic_vector, g.cyclic_vector) == pytest.approx(1.0)

    def test_pi_homomorphism(self, rng):
        x, y = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(2))
        assert np.abs(represent(x @ y) - represent(x) @ represent(y)).max() <= 1e-10
        assert np.abs(represent(x.conj().T) - represent(x).conj().T).max() <= 1e-10
        np.testing.assert_allclose(represent(np.eye(3)), np.eye(9))


class TestJones:
    def test_full(self):
        g = gns_from_trace(M2)
        np.testing.assert_allclose(jones_projection(g, M2, trace_expectation(M2, M2)), np.eye(4), atol=1e-14)

    def test_diagonal(self):
        g = gns_from_trace(M2)
        e = jones_projection(g, diagonal(2), trace_expectation(M2, diagonal(2)))
        expected = np.zeros((4, 4))
        expected[0, 0] = expected[3, 3] = 1.0
        np.testing.assert_allclose(e, expected, atol=1e-14)

    def test_scalars(self):
        g = gns_from_trace(M2)
        e = jones_projection(g, scalars(2), trace_expectation(M2, scalars(2)))
        xi = g.cyclic_vector
        np.testing.assert_allclose(e, np.outer(xi, xi.conj()), atol=1e-14)

    def test_rejects_other_expectation(self):
        g = gns_from_trace(M2)
        with pytest.raises(InclusionError):
            jones_projection(g, diagonal(2), trace_expectation(M2, scalars(2)))


class TestBuild:
    def test_trivial(self):
        bc = bc_for(M2, M2)
        np.testing.assert_allclose(bc.e_M, np.eye(4), atol=1e-14)
        assert bc.generated.dim == 4

    def test_scalars_give_everything(self):
        assert bc_for(M2, scalars(2)).generated.dim == 16

    def test_diagonal_dim(self):
        assert bc_for(M2, diagonal(2)).generated.dim == 8

    def test_masa_m4(self):
        # n^2 times the dimension of the commutant of the MASA
        assert bc_for(full_algebra(4), diagonal(4)).generated.dim == 64

    def test_not_included(self):
        with pytest.raises(InclusionError):
            build_basic_construction(diagonal(2), M2, trace_expectation(M2, M2))

    def test_invariants(self, rng):
        L = full_algebra(3)
        bc = bc_for(L, multimatrix(3, [(1, 1), (2, 1)], random_unitary(3, rng)))
        e = bc.e_M
        assert np.abs(e @ e - e).max() <= 1e-10 and np.abs(e - e.conj().T).max() <= 1e-10
        np.testing.assert_allclose(e @ bc.gns.cyclic_vector, bc.gns.cyclic_vector, atol=1e-12)
        assert contains(bc.generated, e)[0]
        assert all(contains(bc.generated, represent(b))[0] for b in L.basis)

    def test_compression_identity(self, rng):
        bc = bc_for(full_algebra(3), multimatrix(3, [(1, 1), (2, 1)], random_unitary(3, rng)))
        for _ in range(200):
            x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            assert bc.compression_residual(x) <= 1e-10


class TestCorner:
    def test_projection_decodes_to_identity(self):
        bc = bc_for(M2, diagonal(2))
        np.testing.assert_allclose(corner_iso(bc, bc.e_M), np.eye(2), atol=1e-12)

    def test_round_trip_on_basis(self, rng):
        M = multimatrix(3, [(1, 1), (2, 1)], random_unitary(3, rng))
        bc = bc_for(full_algebra(3), M)
        for m in M.basis:
            assert np.abs(corner_iso(bc, bc.e_M @ represent(m) @ bc.e_M) - m).max() <= 1e-10

    def test_compressed_outsider(self, rng):
        bc = bc_for(M2, diagonal(2))
        x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        np.testing.assert_allclose(corner_iso(bc, bc.e_M @ represent(x) @ bc.e_M), bc.E_M(x), atol=1e-12)

    def test_outside_corner(self):
        bc = bc_for(M2, diagonal(2))
        with pytest.raises(CornerDecodingError):
            corner_iso(bc, represent(np.array([[0, 1], [0, 0]])))
