"""Dense complex matrix kernels.

Norms, polar decomposition, Hermitian spectral calculus and the two unitary
estimates used throughout the perturbation pipeline:

* the unitary part ``u`` of an invertible ``x`` with ``||x - I|| < 1``
  satisfies ``||u - I|| <= sqrt(2) ||x - I||``;
* two projections with ``||p - q|| < 1`` are exchanged by a unitary ``w``
  with ``||w - I|| <= sqrt(2) ||p - q||``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from typing import Iterable, TextIO

import numpy as np

from .errors import HypothesisError, InvalidInputError, RankDeficiencyError, SpectralGapError

__all__ = [
    "ToleranceProfile",
    "DEFAULT_TOL",
    "as_matrix",
    "dagger",
    "hermitian_part",
    "operator_norm",
    "frobenius_norm",
    "polar_unitary",
    "spectral_projection",
    "projection_exchange_unitary",
    "is_unitary_residual",
    "is_projection_residual",
    "read_matrix",
    "write_matrix",
    "format_matrix",
    "parse_matrix",
]


@dataclass(frozen=True)
class ToleranceProfile:
    """Numerical thresholds shared by every module.

    rank_eps decides numerical rank and zero tests, eq_eps decides operator
    equalities, psd_eps is the slack allowed in positivity checks.
    """

    rank_eps: float = 1e-9
    eq_eps: float = 1e-8
    psd_eps: float = 1e-12

    def __post_init__(self):
        for name in ("rank_eps", "eq_eps", "psd_eps"):
            value = getattr(self, name)
            if not (0.0 < value < 1e-3):
                raise InvalidInputError(f"{name} must lie in (0, 1e-3), got {value!r}")

    def with_overrides(self, **kwargs) -> "ToleranceProfile":
        kwargs = {k: float(v) for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs)


DEFAULT_TOL = ToleranceProfile()


def as_matrix(x, square: bool = False) -> np.ndarray:
    """Validate ``x`` as a finite 2-d complex array and return it as such."""
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise InvalidInputError(f"expected a non-empty 2-d matrix, got shape {a.shape}")
    if square and a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    return a


def dagger(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def hermitian_part(h: np.ndarray) -> np.ndarray:
    return 0.5 * (h + dagger(h))


def operator_norm(x) -> float:
    """Largest singular value of ``x``."""
    a = as_matrix(x)
    return float(np.linalg.norm(a, ord=2))


def frobenius_norm(x) -> float:
    return float(np.linalg.norm(np.asarray(x)))


def polar_unitary(x, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Unitary factor ``u`` of the polar decomposition ``x = u |x|``.

    Computed from the SVD ``x = W S V*`` as ``u = W V*``. Only invertible
    ``x`` are accepted, since otherwise the unitary factor is not unique.
    """
    a = as_matrix(x, square=True)
    left, sing, right_h = np.linalg.svd(a)
    if sing[-1] <= tol.rank_eps:
        raise RankDeficiencyError(
            f"polar decomposition needs an invertible matrix; smallest singular value {sing[-1]:.3e}"
        )
    return left @ right_h


def spectral_projection(h, lo: float, hi: float, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Projection onto the eigenvectors of ``(h + h*)/2`` with eigenvalue in ``[lo, hi]``.

    An eigenvalue within ``rank_eps`` of either endpoint raises
    :class:`SpectralGapError`; there the projection is discontinuous in ``h``.
    """
    a = as_matrix(h, square=True)
    if frobenius_norm(a - dagger(a)) > tol.eq_eps * (1.0 + frobenius_norm(a)):
        raise InvalidInputError("spectral_projection expects a Hermitian matrix")
    if lo > hi:
        raise InvalidInputError(f"empty interval [{lo}, {hi}]")
    evals, evecs = np.linalg.eigh(hermitian_part(a))
    near = np.minimum(np.abs(evals - lo), np.abs(evals - hi))
    if np.any(near <= tol.rank_eps):
        bad = evals[near <= tol.rank_eps]
        raise SpectralGapError(f"eigenvalue(s) {bad} on the boundary of [{lo}, {hi}]")
    keep = evecs[:, (evals >= lo) & (evals <= hi)]
    return keep @ dagger(keep)


def projection_exchange_unitary(p, q, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Unitary ``w`` with ``w p w* = q``, close to the identity when ``p`` is close to ``q``.

    ``w`` is the polar unitary of ``x = qp + (I - q)(I - p)``. Since
    ``x - I = (2q - I)(p - q)`` we have ``||x - I|| = ||p - q|| < 1``, so ``x``
    is invertible, and ``xp = qx`` passes to the unitary factor.
    """
    p = as_matrix(p, square=True)
    q = as_matrix(q, square=True)
    if p.shape != q.shape:
        raise InvalidInputError(f"shape mismatch {p.shape} vs {q.shape}")
    for name, e in (("p", p), ("q", q)):
        if is_projection_residual(e) > tol.eq_eps:
            raise InvalidInputError(f"{name} is not a projection")
    gap = operator_norm(p - q)
    if gap >= 1.0:
        raise HypothesisError(f"||p - q|| = {gap:.6f} must be < 1")
    eye = np.eye(p.shape[0])
    x = q @ p + (eye - q) @ (eye - p)
    return polar_unitary(x, tol)


def is_unitary_residual(u) -> float:
    """``||u* u - I||`` in operator norm."""
    u = np.asarray(u)
    return float(np.linalg.norm(dagger(u) @ u - np.eye(u.shape[-1]), ord=2))


def is_projection_residual(p) -> float:
    """``max(||p^2 - p||, ||p - p*||)`` in operator norm."""
    p = np.asarray(p)
    return float(max(np.linalg.norm(p @ p - p, ord=2), np.linalg.norm(p - dagger(p), ord=2)))


# -- text format: "rows cols" header, then one "re im" line per entry, row-major.


def format_matrix(x) -> str:
    buf = io.StringIO()
    write_matrix(x, buf)
    return buf.getvalue()


def write_matrix(x, stream: TextIO) -> None:
    a = as_matrix(x)
    stream.write(f"{a.shape[0]} {a.shape[1]}\n")
    for z in a.ravel():
        stream.write(f"{float(z.real)!r} {float(z.imag)!r}\n")


def _data_lines(lines: Iterable[str]):
    for line in lines:
        line = line.strip()
        if line and not line.startswith("#"):
            yield line


def read_matrix(lines) -> np.ndarray:
    """Read one matrix from an iterator of text lines (consumes exactly its lines)."""
    it = _data_lines(lines)
    try:
        rows, cols = (int(t) for t in next(it).split())
    except (StopIteration, ValueError) as exc:
        raise InvalidInputError("bad matrix header, expected 'rows cols'") from exc
    if rows <= 0 or cols <= 0:
        raise InvalidInputError(f"bad matrix size {rows}x{cols}")
    entries = np.empty(rows * cols, dtype=complex)
    for k in range(rows * cols):
        try:
            re, im = next(it).split()
            entries[k] = complex(float(re), float(im))
        except (StopIteration, ValueError) as exc:
            raise InvalidInputError(f"bad or missing matrix entry {k}") from exc
    return as_matrix(entries.reshape(rows, cols))


def parse_matrix(text: str) -> np.ndarray:
    return read_matrix(iter(text.splitlines()))
