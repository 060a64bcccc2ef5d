import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_unitary
from vnperturb.algebra import (
    Subalgebra,
    amplify_2x2,
    contains,
    diagonal,
    full_algebra,
    generate_algebra,
    haar_unitaries,
    multimatrix,
    mutual_containment_residual,
    read_subalgebra,
    relative_commutant,
    require_inclusion,
    sample_unitary,
    scalars,
    subalgebra_residuals,
    write_subalgebra,
)
from vnperturb.errors import InclusionError, InvalidInputError
from vnperturb.linalg import DEFAULT_TOL

E12 = np.array([[0, 1], [0, 0]], dtype=complex)


def assert_valid(A, limit=1e-10):
    res = subalgebra_residuals(A)
    assert max(res.values()) <= limit, res


def same_span(A, B):
    return mutual_containment_residual(A, B) <= 1e-10


class TestGenerate:
    def test_empty_gives_scalars(self):
        A = generate_algebra(2, [])
        assert A.dim == 1 and same_span(A, scalars(2))

    def test_matrix_unit_gives_everything(self):
        A = generate_algebra(2, [E12])
        assert A.dim == 4 and same_span(A, full_algebra(2))

    def test_distinct_diagonal_gives_diagonal(self):
        A = generate_algebra(2, [np.diag([1.0, 2.0])])
        assert A.dim == 2 and same_span(A, diagonal(2))

    def test_idempotent(self, rng):
        A = multimatrix(4, [(1, 2), (1, 1)], random_unitary(4, rng))
        again = generate_algebra(4, list(A.basis))
        assert same_span(A, again)

    def test_wrong_shape(self):
        with pytest.raises(InvalidInputError):
            generate_algebra(2, [np.eye(3)])

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 4), st.integers(0, 2**32 - 1))
    def test_output_is_algebra(self, n, seed):
        rng = np.random.default_rng(seed)
        gen = rng.standard_normal((n, n)) * (rng.random((n, n)) < 0.3)
        assert_valid(generate_algebra(n, [gen]))


class TestContains:
    def test_diagonal_member(self):
        ok, res = contains(diagonal(2), np.diag([3.0, 5.0]))
        assert ok and res == pytest.approx(0.0, abs=1e-14)

    def test_orthogonal_element(self):
        ok, res = contains(diagonal(2), E12)
        assert not ok and res == pytest.approx(1.0)

    def test_full(self, rng):
        assert contains(full_algebra(2), rng.standard_normal((2, 2)))[0]

    def test_require_inclusion(self):
        require_inclusion(diagonal(2), full_algebra(2), DEFAULT_TOL)
        with pytest.raises(InclusionError):
            require_inclusion(full_algebra(2), diagonal(2), DEFAULT_TOL)


class TestCommutant:
    def test_diagonal(self):
        assert same_span(relative_commutant(diagonal(2), full_algebra(2)), diagonal(2))

    def test_scalars(self):
        assert relative_commutant(scalars(2), full_algebra(2)).dim == 4

    def test_full(self):
        C = relative_commutant(full_algebra(2), full_algebra(2))
        assert C.dim == 1 and same_span(C, scalars(2))

    def test_not_included(self):
        with pytest.raises(InclusionError):
            relative_commutant(full_algebra(2), diagonal(2))

    @pytest.mark.parametrize("blocks", [[(1, 1)] * 3, [(1, 1), (2, 1)], [(1, 2), (1, 1)], [(2, 2)]])
    def test_commutes_and_bicommutant(self, blocks, rng):
        n = sum(k * m for k, m in blocks)
        A = multimatrix(n, blocks, random_unitary(n, rng))
        L = full_algebra(n)
        C = relative_commutant(A, L)
        comm = A.basis[:, None] @ C.basis[None] - C.basis[None] @ A.basis[:, None]
        assert np.abs(comm).max() <= 1e-10
        assert mutual_containment_residual(relative_commutant(C, L), A) <= 1e-8

    def test_commutant_dimension(self):
        # (M_1 ⊗ 1_2) ⊕ M_1 has commutant M_2 ⊕ M_1
        assert relative_commutant(multimatrix(3, [(1, 2), (1, 1)]), full_algebra(3)).dim == 5


class TestUnitaries:
    def test_scalars(self):
        u = sample_unitary(scalars(3), 4)
        assert np.allclose(u, u[0, 0] * np.eye(3)) and abs(abs(u[0, 0]) - 1) < 1e-12

    def test_diagonal(self):
        u = sample_unitary(diagonal(2), 5)
        assert abs(u[0, 1]) < 1e-14 and abs(u[1, 0]) < 1e-14
        assert np.allclose(np.abs(np.diag(u)), 1)

    def test_small_spread(self):
        assert np.linalg.norm(sample_unitary(full_algebra(3), 1, spread=1e-12) - np.eye(3)) < 1e-10

    def test_bad_spread(self):
        with pytest.raises(InvalidInputError):
            sample_unitary(full_algebra(2), 0, spread=0.0)

    @pytest.mark.parametrize("A", [full_algebra(3), multimatrix(3, [(1, 1), (2, 1)]), diagonal(4)])
    def test_unitary_and_member(self, A):
        for u in [sample_unitary(A, 7, 2.0), *haar_unitaries(A, 5, 8)]:
            assert np.linalg.norm(u.conj().T @ u - np.eye(A.ambient_dim), 2) <= 1e-10
            assert contains(A, u)[0]


class TestAmplify:
    def test_from_m1(self):
        assert amplify_2x2(full_algebra(1)).dim == 4

    def test_from_m2(self):
        A = amplify_2x2(full_algebra(2))
        assert A.dim == 16 and same_span(A, full_algebra(4))

    def test_from_diagonal(self):
        A = amplify_2x2(diagonal(2))
        assert A.dim == 8
        assert_valid(A)


class TestConstructors:
    @pytest.mark.parametrize("A", [full_algebra(3), scalars(4), diagonal(3),
                                   multimatrix(5, [(2, 1), (1, 2)]), multimatrix(3, [(1, 1)])])
    def test_invariants(self, A):
        assert_valid(A)

    def test_multimatrix_padding(self):
        A = multimatrix(3, [(1, 1)])
        assert A.dim == 2 and contains(A, np.eye(3))[0]

    def test_multimatrix_too_big(self):
        with pytest.raises(InvalidInputError):
            multimatrix(2, [(2, 2)])

    def test_bad_basis_shape(self):
        with pytest.raises(InvalidInputError):
            Subalgebra(2, np.eye(3)[None])


class TestFileFormat:
    def test_round_trip(self, rng):
        A = multimatrix(3, [(1, 1), (2, 1)], random_unitary(3, rng))
        buf = io.StringIO()
        write_subalgebra(A, buf)
        buf.seek(0)
        B = read_subalgebra(buf)
        assert B.dim == A.dim and same_span(A, B)

    def test_rejects_non_algebra(self):
        buf = io.StringIO()
        write_subalgebra(Subalgebra(2, np.array([np.eye(2), np.sqrt(2) * E12])), buf)
        buf.seek(0)
        with pytest.raises(InvalidInputError):
            read_subalgebra(buf)

    def test_bad_header(self):
        with pytest.raises(InvalidInputError):
            read_subalgebra(io.StringIO("two\n"))
