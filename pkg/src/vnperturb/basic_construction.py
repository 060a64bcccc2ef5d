"""GNS representation, Jones projection and the basic construction ``<L, e_M>``.

The state is the normalized trace, so the GNS space of ``M_n`` is ``M_n``
itself with ``<a, b> = tr(b* a) / n``.  In the coordinates ``vec(a) / sqrt(n)``
(row-major) this is the standard inner product on ``C^(n^2)``, the cyclic
vector is ``vec(I) / sqrt(n)`` and left multiplication by ``x`` is
``kron(x, I_n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import Subalgebra, contains, generate_algebra, require_inclusion
from .errors import CornerDecodingError, InclusionError
from .expectation import ConditionalExpectation
from .linalg import DEFAULT_TOL, ToleranceProfile, dagger

__all__ = [
    "GnsSpace",
    "BasicConstruction",
    "gns_from_trace",
    "represent",
    "represent_algebra",
    "jones_projection",
    "build_basic_construction",
    "corner_iso",
]


@dataclass(frozen=True, eq=False)
class GnsSpace:
    base: Subalgebra
    dim: int
    gram: np.ndarray
    cyclic_vector: np.ndarray

    @property
    def n(self) -> int:
        return self.base.ambient_dim

    def vector(self, a) -> np.ndarray:
        """The GNS vector ``a ξ`` of a matrix ``a``."""
        return np.asarray(a, dtype=complex).reshape(-1) / np.sqrt(self.n)

    def element(self, v) -> np.ndarray:
        """Inverse of :meth:`vector`."""
        return np.asarray(v, dtype=complex).reshape(self.n, self.n) * np.sqrt(self.n)

    def inner(self, a, b) -> complex:
        """``φ(b* a)`` for matrices ``a`` and ``b``."""
        return complex(np.vdot(self.vector(b), self.gram @ self.vector(a)))


def gns_from_trace(L: Subalgebra) -> GnsSpace:
    n = L.ambient_dim
    xi = np.eye(n, dtype=complex).reshape(-1) / np.sqrt(n)
    return GnsSpace(L, n * n, np.eye(n * n), xi)


def represent(x) -> np.ndarray:
    """Left multiplication by ``x`` on the GNS space."""
    x = np.asarray(x, dtype=complex)
    return np.kron(x, np.eye(x.shape[-1]))


def represent_algebra(A: Subalgebra) -> Subalgebra:
    """``pi(A)`` as a subalgebra of the operators on the GNS space.

    ``pi`` scales the normalized trace norm by one, so the basis stays orthonormal.
    """
    return Subalgebra(A.ambient_dim ** 2, np.array([represent(b) for b in A.basis]))


def jones_projection(gns: GnsSpace, M: Subalgebra, E_M: ConditionalExpectation,
                     tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Orthogonal projection of the GNS space onto ``[M ξ]``.

    The basis of ``M`` is trace-orthonormal, so its GNS vectors are an
    orthonormal basis of ``[M ξ]``.  The identity ``e_M(x ξ) = E_M(x) ξ`` is
    checked on the basis of the domain of ``E_M``.
    """
    frame = np.array([gns.vector(b) for b in M.basis]).T
    e = frame @ dagger(frame)
    lhs = np.einsum("ij,aj->ai", e, E_M.domain.basis.reshape(E_M.domain.dim, -1)) / np.sqrt(gns.n)
    rhs = E_M.images.reshape(E_M.domain.dim, -1) / np.sqrt(gns.n)
    worst = float(np.max(np.linalg.norm(lhs - rhs, axis=1)))
    if worst > tol.eq_eps:
        raise InclusionError(f"E_M is not the trace expectation onto M (residual {worst:.3e})")
    return e


@dataclass(frozen=True, eq=False)
class BasicConstruction:
    gns: GnsSpace
    L: Subalgebra
    M: Subalgebra
    E_M: ConditionalExpectation
    e_M: np.ndarray
    generated: Subalgebra

    def pi(self, x) -> np.ndarray:
        return represent(x)

    def compression_residual(self, x) -> float:
        """``||e_M pi(x) e_M - pi(E_M(x)) e_M||`` in operator norm."""
        e = self.e_M
        lhs = e @ represent(x) @ e
        rhs = represent(self.E_M(x)) @ e
        return float(np.linalg.norm(lhs - rhs, ord=2))


def build_basic_construction(L: Subalgebra, M: Subalgebra, E_M: ConditionalExpectation,
                             tol: ToleranceProfile = DEFAULT_TOL) -> BasicConstruction:
    require_inclusion(M, L, tol, what="M")
    gns = gns_from_trace(L)
    e = jones_projection(gns, M, E_M, tol)
    gens = [represent(b) for b in L.basis] + [e]
    generated = generate_algebra(gns.dim, gens, tol)
    return BasicConstruction(gns, L, M, E_M, e, generated)


def corner_iso(bc: BasicConstruction, z, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """The element ``m`` of ``M`` with ``pi(m) e_M = z``, for ``z`` in ``e_M <L, e_M> e_M``.

    ``m`` is read off the vector ``z ξ``, since ``pi(m) e_M ξ = m ξ``.
    """
    z = np.asarray(z, dtype=complex)
    e = bc.e_M
    scale = 1.0 + float(np.linalg.norm(z))
    off_corner = float(np.linalg.norm(z - e @ z @ e))
    if off_corner > tol.eq_eps * scale:
        raise CornerDecodingError(f"z is not compressed by e_M (residual {off_corner:.3e})")
    inside, resid = contains(bc.generated, z, tol)
    if not inside:
        raise CornerDecodingError(f"z is not in the basic construction (residual {resid:.3e})")
    m = bc.gns.element(z @ bc.gns.cyclic_vector)
    inside, resid = contains(bc.M, m, tol)
    if not inside:
        raise CornerDecodingError(f"decoded element is not in M (residual {resid:.3e})")
    mismatch = float(np.linalg.norm(represent(m) @ e - z))
    if mismatch > tol.eq_eps * scale:
        raise CornerDecodingError(f"pi(m) e_M differs from z by {mismatch:.3e}")
    return m
