"""Unital *-subalgebras of the n x n matrices.

A :class:`Subalgebra` is stored as a basis that is orthonormal for the
normalized trace inner product ``<a, b> = tr(b* a) / n``.  Flattening a matrix
row-major and dividing by ``sqrt(n)`` is an isometry onto ``C^(n^2)`` with
its standard inner product, which is how every projection below is computed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InclusionError, InvalidInputError
from .linalg import DEFAULT_TOL, ToleranceProfile, dagger, read_matrix, write_matrix

__all__ = [
    "Subalgebra",
    "orthonormalize",
    "from_spanning_set",
    "generate_algebra",
    "contains",
    "relative_commutant",
    "require_inclusion",
    "sample_unitary",
    "haar_unitaries",
    "amplify_2x2",
    "full_algebra",
    "scalars",
    "diagonal",
    "multimatrix",
    "conjugate",
    "subalgebra_residuals",
    "mutual_containment_residual",
    "read_subalgebra",
    "write_subalgebra",
]


@dataclass(frozen=True, eq=False)
class Subalgebra:
    """Trace-orthonormal basis of a unital *-subalgebra of ``M_n``.

    ``basis`` has shape ``(dim, n, n)``.  Instances are treated as immutable;
    the array is copied and locked on construction.
    """

    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=complex, copy=True)
        n = int(self.ambient_dim)
        if b.ndim != 3 or b.shape[1:] != (n, n) or b.shape[0] == 0:
            raise InvalidInputError(f"basis of shape {b.shape} does not fit ambient dimension {n}")
        b.flags.writeable = False
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "ambient_dim", n)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @cached_property
    def frame(self) -> np.ndarray:
        """Orthonormal columns in ``C^(n^2)``; column ``i`` is basis element ``i``."""
        n = self.ambient_dim
        return self.basis.reshape(self.dim, n * n).T / np.sqrt(n)

    def coordinates(self, x) -> np.ndarray:
        """Inner products ``<x, b_i>``; the expansion of ``x`` if it lies in the span."""
        n = self.ambient_dim
        x = np.asarray(x, dtype=complex)
        return (x.reshape(*x.shape[:-2], n * n) / np.sqrt(n)) @ np.conj(self.frame)

    def element(self, coords) -> np.ndarray:
        return np.tensordot(np.asarray(coords, dtype=complex), self.basis, axes=([-1], [0]))

    def project(self, x) -> np.ndarray:
        """Trace-orthogonal projection of ``x`` (or a stack of matrices) onto the span."""
        return self.element(self.coordinates(x))

    def __repr__(self):
        return f"Subalgebra(ambient_dim={self.ambient_dim}, dim={self.dim})"


def _vec(mats: np.ndarray, n: int) -> np.ndarray:
    return mats.reshape(-1, n * n).T / np.sqrt(n)


def _unvec(cols: np.ndarray, n: int) -> np.ndarray:
    return (cols.T * np.sqrt(n)).reshape(-1, n, n)


def orthonormalize(candidates: np.ndarray, existing: np.ndarray | None = None,
                   tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Extend the orthonormal columns ``existing`` by the span of ``candidates``.

    Candidates are projected off the current frame twice (classical Gram-Schmidt
    with one reorthogonalization) and the remainder is split by an SVD; a
    direction is kept only if its singular value exceeds ``rank_eps`` relative
    to the candidate scale.  Returns the enlarged frame.
    """
    c = np.asarray(candidates, dtype=complex)
    if existing is None:
        existing = np.zeros((c.shape[0], 0), dtype=complex)
    if c.shape[1] == 0:
        return existing
    scale = max(1.0, float(np.max(np.linalg.norm(c, axis=0))))
    r = c
    for _ in range(2):
        r = r - existing @ (dagger(existing) @ r)
    left, sing, _ = np.linalg.svd(r, full_matrices=False)
    new = left[:, sing > tol.rank_eps * scale]
    if new.shape[1] == 0:
        return existing
    new = new - existing @ (dagger(existing) @ new)
    new, _ = np.linalg.qr(new)
    return np.hstack([existing, new])


def from_spanning_set(ambient_dim: int, mats: Iterable, tol: ToleranceProfile = DEFAULT_TOL) -> Subalgebra:
    """Orthonormalize the given matrices (plus the identity) without closing under products."""
    n = int(ambient_dim)
    stack = [np.eye(n, dtype=complex)] + [np.asarray(m, dtype=complex) for m in mats]
    frame = orthonormalize(_vec(np.array(stack), n), None, tol)
    return Subalgebra(n, _unvec(frame, n))


def generate_algebra(ambient_dim: int, generators: Sequence, tol: ToleranceProfile = DEFAULT_TOL) -> Subalgebra:
    """Smallest unital *-subalgebra of ``M_n`` containing ``generators``.

    The algebra is the span of all words in the generators and their
    adjoints, so it is grown from the identity by left-multiplying each newly
    found direction by an orthonormalized generating set until the dimension
    stops growing.  Word length, hence the number of passes, is at most n^2.
    """
    n = int(ambient_dim)
    gens = [np.asarray(g, dtype=complex) for g in generators]
    for g in gens:
        if g.shape != (n, n):
            raise InvalidInputError(f"generator of shape {g.shape} does not fit M_{n}")
    frame = _vec(np.eye(n, dtype=complex)[None], n)
    if gens:
        letters = np.array(gens + [dagger(g) for g in gens])
        letters = _unvec(orthonormalize(_vec(letters, n), None, tol), n)
    else:
        letters = np.zeros((0, n, n), dtype=complex)
    fresh = 0
    for _ in range(n * n):
        new = _unvec(frame[:, fresh:], n)
        words = np.einsum("aij,bjk->abik", letters, new).reshape(-1, n, n)
        grown = orthonormalize(_vec(words, n), frame, tol)
        if grown.shape[1] == frame.shape[1]:
            break
        fresh = frame.shape[1]
        frame = grown
    return Subalgebra(n, _unvec(frame, n))


def contains(A: Subalgebra, x, tol: ToleranceProfile = DEFAULT_TOL) -> tuple[bool, float]:
    """Whether ``x`` lies in the span of ``A``, with the Frobenius distance to the span."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (A.ambient_dim, A.ambient_dim):
        raise InvalidInputError(f"matrix of shape {x.shape} is not in M_{A.ambient_dim}")
    residual = float(np.linalg.norm(x - A.project(x)))
    return residual <= tol.eq_eps * (1.0 + float(np.linalg.norm(x))), residual


def require_inclusion(A: Subalgebra, L: Subalgebra, tol: ToleranceProfile, what: str = "A") -> None:
    if A.ambient_dim != L.ambient_dim:
        raise InclusionError(f"{what} and L live in different ambient algebras")
    resid = np.linalg.norm((A.basis - L.project(A.basis)).reshape(A.dim, -1), axis=1)
    worst = float(resid.max())
    if worst > tol.eq_eps * (1.0 + np.sqrt(A.ambient_dim)):
        raise InclusionError(f"{what} is not contained in L (basis residual {worst:.3e})")


def relative_commutant(A: Subalgebra, L: Subalgebra, tol: ToleranceProfile = DEFAULT_TOL) -> Subalgebra:
    """``A' ∩ L``: elements of ``L`` commuting with every element of ``A``.

    Solved as the null space of the stacked commutator maps
    ``x -> b x - x b`` (one block of rows per basis element ``b`` of ``A``)
    written in the coordinates of ``L``.
    """
    require_inclusion(A, L, tol)
    n = A.ambient_dim
    comm = (np.einsum("aij,cjk->acik", A.basis, L.basis)
            - np.einsum("cij,ajk->acik", L.basis, A.basis))
    system = comm.transpose(0, 2, 3, 1).reshape(A.dim * n * n, L.dim) / np.sqrt(n)
    if system.shape[0] >= system.shape[1]:
        _, sing, vh = np.linalg.svd(system, full_matrices=False)
    else:
        _, sing, vh = np.linalg.svd(system, full_matrices=True)
    sing = np.concatenate([sing, np.zeros(L.dim - sing.size)])
    cutoff = tol.rank_eps * max(1.0, float(sing[0]) if sing.size else 1.0)
    null = np.conj(vh[sing <= cutoff])
    return Subalgebra(n, np.tensordot(null, L.basis, axes=([1], [0])))


def _hermitian_element(A: Subalgebra, rng: np.random.Generator, scale: float) -> np.ndarray:
    coeffs = scale * (rng.standard_normal(A.dim) + 1j * rng.standard_normal(A.dim)) / np.sqrt(2)
    a = A.element(coeffs)
    return 0.5 * (a + dagger(a))


def sample_unitary(A: Subalgebra, rng_seed=None, spread: float = 1.0) -> np.ndarray:
    """``exp(i h)`` for a random Hermitian ``h`` in ``A`` with coefficients at scale ``spread``."""
    if spread <= 0:
        raise InvalidInputError("spread must be positive")
    rng = np.random.default_rng(rng_seed)
    h = _hermitian_element(A, rng, spread)
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(1j * evals)) @ dagger(evecs)


def haar_unitaries(A: Subalgebra, size: int, rng_seed=None) -> np.ndarray:
    """``size`` independent Haar-distributed unitaries of ``A``, shape ``(size, n, n)``.

    A standard complex Gaussian in any trace-orthonormal basis of
    ``W (⊕ M_k ⊗ 1_m) W*`` has independent Ginibre blocks, and the polar
    unitary of a Ginibre matrix is Haar distributed.  So taking polar parts
    samples Haar measure on the unitary group of ``A`` without knowing its
    block structure.
    """
    rng = np.random.default_rng(rng_seed)
    g = (rng.standard_normal((size, A.dim)) + 1j * rng.standard_normal((size, A.dim))) / np.sqrt(2)
    left, _, right_h = np.linalg.svd(A.element(g))
    return left @ right_h


def amplify_2x2(L: Subalgebra) -> Subalgebra:
    """``M_2(L)``: 2n x 2n matrices whose four n x n blocks lie in ``L``."""
    units = np.zeros((4, 2, 2))
    for k, (r, c) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        units[k, r, c] = np.sqrt(2.0)
    basis = np.array([np.kron(e, b) for e in units for b in L.basis])
    return Subalgebra(2 * L.ambient_dim, basis)


def full_algebra(n: int) -> Subalgebra:
    basis = np.zeros((n * n, n, n), dtype=complex)
    for k in range(n * n):
        basis[k, k // n, k % n] = np.sqrt(n)
    return Subalgebra(n, basis)


def scalars(n: int) -> Subalgebra:
    return Subalgebra(n, np.eye(n, dtype=complex)[None])


def diagonal(n: int) -> Subalgebra:
    basis = np.zeros((n, n, n), dtype=complex)
    for k in range(n):
        basis[k, k, k] = np.sqrt(n)
    return Subalgebra(n, basis)


def multimatrix(n: int, blocks: Sequence[tuple[int, int]], unitary=None) -> Subalgebra:
    """``W (⊕_i M_{k_i} ⊗ 1_{m_i}) W*`` inside ``M_n`` for blocks ``[(k_i, m_i), ...]``.

    A shortfall ``r = n - sum k_i m_i`` is filled with a scalar block
    ``C ⊗ 1_r`` so that the algebra stays unital.
    """
    blocks = [(int(k), int(m)) for k, m in blocks]
    if any(k <= 0 or m <= 0 for k, m in blocks):
        raise InvalidInputError(f"block sizes and multiplicities must be positive: {blocks}")
    used = sum(k * m for k, m in blocks)
    if used > n:
        raise InvalidInputError(f"blocks {blocks} need {used} > {n} dimensions")
    if used < n:
        blocks = blocks + [(1, n - used)]
    basis = []
    offset = 0
    for k, m in blocks:
        for a in range(k):
            for b in range(k):
                e = np.zeros((k, k))
                e[a, b] = 1.0
                mat = np.zeros((n, n), dtype=complex)
                mat[offset:offset + k * m, offset:offset + k * m] = np.kron(e, np.eye(m))
                basis.append(mat * np.sqrt(n / m))
        offset += k * m
    A = Subalgebra(n, np.array(basis))
    return A if unitary is None else conjugate(A, unitary)


def conjugate(A: Subalgebra, v) -> Subalgebra:
    """``v A v*`` for a unitary ``v``; the basis stays orthonormal."""
    v = np.asarray(v, dtype=complex)
    return Subalgebra(A.ambient_dim, v @ A.basis @ dagger(v))


def subalgebra_residuals(A: Subalgebra) -> dict[str, float]:
    """Largest violation of each Subalgebra invariant (Frobenius norms)."""
    n = A.ambient_dim
    gram = dagger(A.frame) @ A.frame
    prods = np.einsum("aij,bjk->abik", A.basis, A.basis).reshape(-1, n, n)

    def dist(mats):
        return float(np.max(np.linalg.norm((mats - A.project(mats)).reshape(len(mats), -1), axis=1)))

    return {
        "gram": float(np.linalg.norm(gram - np.eye(A.dim))),
        "identity": dist(np.eye(n)[None]),
        "adjoint": dist(dagger(A.basis)),
        "product": dist(prods),
    }


def mutual_containment_residual(A: Subalgebra, B: Subalgebra) -> float:
    """Max Frobenius distance of either basis from the other span (0 iff equal spans)."""
    if A.ambient_dim != B.ambient_dim:
        return float("inf")
    ab = np.linalg.norm((A.basis - B.project(A.basis)).reshape(A.dim, -1), axis=1).max()
    ba = np.linalg.norm((B.basis - A.project(B.basis)).reshape(B.dim, -1), axis=1).max()
    return float(max(ab, ba))


# -- file format: header "ambient_dim dim", then dim matrices in the matrix text format.


def write_subalgebra(A: Subalgebra, stream) -> None:
    stream.write(f"{A.ambient_dim} {A.dim}\n")
    for b in A.basis:
        write_matrix(b, stream)


def read_subalgebra(stream, tol: ToleranceProfile = DEFAULT_TOL) -> Subalgebra:
    """Read a subalgebra file; the basis is re-orthonormalized on load."""
    lines = (line for line in stream if line.strip() and not line.strip().startswith("#"))
    try:
        n, dim = (int(t) for t in next(lines).split())
    except (StopIteration, ValueError) as exc:
        raise InvalidInputError("bad subalgebra header, expected 'ambient_dim dim'") from exc
    mats = [read_matrix(lines) for _ in range(dim)]
    for m in mats:
        if m.shape != (n, n):
            raise InvalidInputError(f"basis matrix of shape {m.shape} in a file for M_{n}")
    frame = orthonormalize(_vec(np.array(mats), n), None, tol)
    A = Subalgebra(n, _unvec(frame, n))
    bad = {k: v for k, v in subalgebra_residuals(A).items() if v > tol.eq_eps * n}
    if bad:
        raise InvalidInputError(f"file does not describe a unital *-subalgebra: {bad}")
    return A
