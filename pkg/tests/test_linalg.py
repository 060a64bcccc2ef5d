import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_unitary, rotation
from vnperturb.errors import HypothesisError, InvalidInputError, RankDeficiencyError, SpectralGapError
from vnperturb.linalg import (
    DEFAULT_TOL,
    ToleranceProfile,
    operator_norm,
    parse_matrix,
    format_matrix,
    polar_unitary,
    projection_exchange_unitary,
    read_matrix,
    spectral_projection,
    write_matrix,
)


class TestOperatorNorm:
    def test_identity(self):
        assert operator_norm(np.eye(3)) == pytest.approx(1.0)

    def test_all_ones(self):
        assert operator_norm(np.ones((2, 2))) == pytest.approx(2.0)

    def test_diagonal(self):
        assert operator_norm(np.diag([0.3, -0.7])) == pytest.approx(0.7)

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidInputError):
            operator_norm(np.array([[1.0, np.nan], [0.0, 1.0]]))


class TestTolerance:
    def test_defaults(self):
        assert (DEFAULT_TOL.rank_eps, DEFAULT_TOL.eq_eps, DEFAULT_TOL.psd_eps) == (1e-9, 1e-8, 1e-12)

    @pytest.mark.parametrize("value", [0.0, -1e-9, 1e-3, 0.5])
    def test_out_of_range(self, value):
        with pytest.raises(InvalidInputError):
            ToleranceProfile(eq_eps=value)

    def test_overrides_ignore_none(self):
        tol = DEFAULT_TOL.with_overrides(eq_eps=1e-7, rank_eps=None)
        assert tol.eq_eps == 1e-7 and tol.rank_eps == DEFAULT_TOL.rank_eps


class TestPolar:
    def test_identity(self):
        np.testing.assert_allclose(polar_unitary(np.eye(2)), np.eye(2), atol=1e-14)

    def test_positive_scalar(self):
        np.testing.assert_allclose(polar_unitary(2 * np.eye(2)), np.eye(2), atol=1e-14)

    def test_diagonal_phase(self):
        phase = np.exp(1j * np.pi / 4)
        u = polar_unitary(np.diag([0.5 * phase, 1.0]))
        np.testing.assert_allclose(u, np.diag([phase, 1.0]), atol=1e-14)

    def test_singular(self):
        with pytest.raises(RankDeficiencyError):
            polar_unitary(np.diag([1.0, 0.0]))

    def test_unitary_fixed(self, rng):
        u = random_unitary(4, rng)
        assert operator_norm(polar_unitary(u) - u) <= 1e-10

    def test_reconstructs(self, rng):
        x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        u = polar_unitary(x)
        w, v = np.linalg.eigh(x.conj().T @ x)
        abs_x = (v * np.sqrt(w)) @ v.conj().T
        np.testing.assert_allclose(u @ abs_x, x, atol=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 5), st.floats(0.01, 0.95), st.integers(0, 2**32 - 1))
    def test_sqrt2_bound(self, n, radius, seed):
        rng = np.random.default_rng(seed)
        d = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        x = np.eye(n) + radius * d / operator_norm(d)
        u = polar_unitary(x)
        assert operator_norm(u - np.eye(n)) <= math.sqrt(2) * operator_norm(x - np.eye(n)) + 1e-12


class TestSpectralProjection:
    def test_diagonal_split(self):
        np.testing.assert_allclose(spectral_projection(np.diag([0.9, 0.1]), 0.5, 1.5), np.diag([1.0, 0.0]))

    def test_projection_is_own_projection(self):
        e = np.diag([1.0, 0.0, 1.0])
        gamma = 0.2
        np.testing.assert_allclose(spectral_projection(e, 1 - 2 * gamma, 1 + 2 * gamma), e, atol=1e-14)

    def test_eigenvector_oracle(self, rng):
        v = random_unitary(2, rng)
        h = v @ np.diag([0.95, 0.05]) @ v.conj().T
        p = spectral_projection(h, 0.5, 1.5)
        np.testing.assert_allclose(p, np.outer(v[:, 0], v[:, 0].conj()), atol=1e-12)

    def test_gap_error(self):
        with pytest.raises(SpectralGapError):
            spectral_projection(np.diag([0.5, 0.1]), 0.5, 1.5)

    def test_non_hermitian(self):
        with pytest.raises(InvalidInputError):
            spectral_projection(np.array([[0.0, 1.0], [0.0, 0.0]]), 0.5, 1.5)

    def test_properties(self, rng):
        z = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        h = (z + z.conj().T) / 2
        p = spectral_projection(h, -0.3, 1.7)
        assert operator_norm(p @ p - p) <= 1e-10
        assert operator_norm(p - p.conj().T) <= 1e-10
        assert operator_norm(p @ h - h @ p) <= 1e-10


class TestProjectionExchange:
    def test_equal(self):
        p = np.diag([1.0, 0.0])
        np.testing.assert_allclose(projection_exchange_unitary(p, p), np.eye(2), atol=1e-14)

    def test_zero(self):
        z = np.zeros((2, 2))
        np.testing.assert_allclose(projection_exchange_unitary(z, z), np.eye(2), atol=1e-14)

    def test_rotation(self):
        p = np.diag([1.0, 0.0])
        r = rotation(0.2)
        q = r @ p @ r.T
        w = projection_exchange_unitary(p, q)
        np.testing.assert_allclose(w, r, atol=1e-12)
        assert operator_norm(w - np.eye(2)) == pytest.approx(2 * math.sin(0.1), abs=1e-12)
        assert operator_norm(w - np.eye(2)) <= math.sqrt(2) * math.sin(0.2)

    def test_far_projections(self):
        with pytest.raises(HypothesisError):
            projection_exchange_unitary(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 5), st.floats(0.01, 0.6), st.integers(0, 2**32 - 1))
    def test_exchange_and_bound(self, n, angle, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(0, n + 1))
        w0 = random_unitary(n, rng)
        p = w0 @ np.diag([1.0] * k + [0.0] * (n - k)) @ w0.conj().T
        z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = (z + z.conj().T) / 2
        ev, vec = np.linalg.eigh(h / operator_norm(h))
        v = (vec * np.exp(1j * angle * ev)) @ vec.conj().T
        q = v @ p @ v.conj().T
        gap = operator_norm(p - q)
        if gap >= 0.999:
            return
        w = projection_exchange_unitary(p, q)
        assert operator_norm(w @ p @ w.conj().T - q) <= 1e-10
        assert operator_norm(w - np.eye(n)) <= math.sqrt(2) * gap + 1e-12


class TestMatrixFormat:
    def test_round_trip(self, rng):
        x = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        np.testing.assert_array_equal(parse_matrix(format_matrix(x)), x)

    def test_stream_round_trip(self):
        buf = io.StringIO()
        write_matrix(np.eye(2), buf)
        write_matrix(np.diag([1j, 2.0]), buf)
        lines = iter(buf.getvalue().splitlines())
        np.testing.assert_array_equal(read_matrix(lines), np.eye(2))
        np.testing.assert_array_equal(read_matrix(lines), np.diag([1j, 2.0]))

    def test_header_layout(self):
        text = format_matrix(np.array([[1 + 2j]]))
        assert text.splitlines()[0].split() == ["1", "1"]

    @pytest.mark.parametrize("text", ["2 2\n1 0\n", "1 1\nnan 0\n", "x y\n", ""])
    def test_malformed(self, text):
        with pytest.raises(InvalidInputError):
            parse_matrix(text)
