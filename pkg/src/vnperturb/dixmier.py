"""Unitary averaging onto relative commutants.

The adjoint action ``x -> u x u*`` of the unitary group of ``A`` is unitary
for the trace inner product, and its fixed vectors inside ``L`` are exactly
``A' ∩ L``.  The Haar integral of the action is therefore the orthogonal
projection onto ``A' ∩ L``: an explicit point of the closed convex hull of
the unitary orbit of ``x`` that commutes with ``A``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .algebra import Subalgebra, contains, haar_unitaries, relative_commutant, require_inclusion
from .errors import DomainError
from .linalg import DEFAULT_TOL, ToleranceProfile, dagger

__all__ = [
    "AverageCertificate",
    "NearInclusionReport",
    "haar_average",
    "monte_carlo_average",
    "hull_gap",
    "ad_norm_bound",
    "check_commutant_near_inclusion",
]


@dataclass(frozen=True, eq=False)
class AverageCertificate:
    input: np.ndarray
    output: np.ndarray
    commutant_residual: float
    hull_gap: float | None = None


def _commutator_residual(A: Subalgebra, y: np.ndarray) -> float:
    comm = A.basis @ y - y @ A.basis
    return float(np.max(np.linalg.norm(comm.reshape(A.dim, -1), axis=1)))


def haar_average(A: Subalgebra, L: Subalgebra, x, tol: ToleranceProfile = DEFAULT_TOL,
                 commutant: Subalgebra | None = None, hull_points: int = 0,
                 rng_seed=None) -> AverageCertificate:
    """Average of ``u x u*`` over the Haar measure of the unitary group of ``A``.

    Computed as the trace-orthogonal projection of ``x`` onto ``A' ∩ L``.
    Pass ``commutant`` to reuse a precomputed ``A' ∩ L``.  With
    ``hull_points > 0`` the certificate also records the distance from the
    output to the convex hull of that many sampled orbit points.
    """
    x = np.asarray(x, dtype=complex)
    inside, resid = contains(L, x, tol)
    if not inside:
        raise DomainError(f"x is not in L (residual {resid:.3e})")
    if commutant is None:
        commutant = relative_commutant(A, L, tol)
    else:
        require_inclusion(A, L, tol)
    y = commutant.project(x)
    gap = hull_gap(A, x, y, hull_points, rng_seed) if hull_points > 0 else None
    return AverageCertificate(x, y, _commutator_residual(A, y), gap)


def monte_carlo_average(A: Subalgebra, x, samples: int, rng_seed=None, batch: int = 20000) -> np.ndarray:
    """Empirical mean of ``u x u*`` over ``samples`` Haar unitaries of ``A``."""
    rng = np.random.default_rng(rng_seed)
    x = np.asarray(x, dtype=complex)
    total = np.zeros_like(x)
    left = samples
    while left > 0:
        k = min(batch, left)
        u = haar_unitaries(A, k, rng)
        total += np.sum(u @ x @ dagger(u), axis=0)
        left -= k
    return total / samples


def hull_gap(A: Subalgebra, x, y, points: int = 200, rng_seed=None) -> float:
    """Frobenius distance from ``y`` to the convex hull of ``points`` sampled ``u x u*``.

    The simplex-constrained least squares problem is solved by NNLS with the
    sum-to-one constraint appended as a heavily weighted row; the weights are
    then renormalized onto the simplex, so the returned gap is attained by an
    actual convex combination.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    u = haar_unitaries(A, points, rng_seed)
    orbit = (u @ x @ dagger(u)).reshape(points, -1).T
    target = y.reshape(-1)
    weight = 1e3 * max(1.0, float(np.linalg.norm(x)))
    design = np.vstack([orbit.real, orbit.imag, weight * np.ones((1, points))])
    rhs = np.concatenate([target.real, target.imag, [weight]])
    w, _ = nnls(design, rhs, maxiter=50 * points)
    if w.sum() <= 0:
        return float(np.min(np.linalg.norm(orbit - target[:, None], axis=0)))
    w = w / w.sum()
    return float(np.linalg.norm(orbit @ w - target))


def ad_norm_bound(A: Subalgebra, x, samples: int = 100, rng_seed=None) -> float:
    """``max ||u x - x u||`` over sampled Haar unitaries ``u`` of ``A``.

    A lower bound on the norm of ``ad(x)`` restricted to ``A``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    x = np.asarray(x, dtype=complex)
    u = haar_unitaries(A, samples, rng_seed)
    return float(np.max(np.linalg.norm(u @ x - x @ u, ord=2, axis=(1, 2))))


@dataclass
class NearInclusionReport:
    samples: int
    gamma_hi: float
    max_commutant_residual: float = 0.0
    max_distance: float = 0.0
    distances: list = field(default_factory=list)
    passed: bool = True

    def to_text(self) -> str:
        return (
            f"samples = {self.samples}\n"
            f"gamma_hi = {self.gamma_hi:.6e}\n"
            f"max_commutant_residual = {self.max_commutant_residual:.6e}\n"
            f"max_distance = {self.max_distance:.6e}\n"
            f"bound = {2 * self.gamma_hi:.6e}\n"
            f"verdict = {'pass' if self.passed else 'fail'}\n"
        )


def check_commutant_near_inclusion(N: Subalgebra, M: Subalgebra, L: Subalgebra, gamma_hi: float,
                                   samples: int = 20, rng_seed=None,
                                   tol: ToleranceProfile = DEFAULT_TOL) -> NearInclusionReport:
    """Check ``M' ∩ L ⊆_{2γ} N' ∩ L`` on random unit-norm elements of ``M' ∩ L``.

    ``gamma_hi`` must be a certified bound with ``N ⊆_γ M`` (for instance
    ``2 ||v - I||`` when ``M = v N v*``).  Each sample ``x`` is averaged over
    the unitaries of ``N``; the average ``y`` must commute with ``N`` and
    satisfy ``||x - y|| <= 2 gamma_hi``.
    """
    rng = np.random.default_rng(rng_seed)
    m_comm = relative_commutant(M, L, tol)
    n_comm = relative_commutant(N, L, tol)
    report = NearInclusionReport(samples, float(gamma_hi))
    for _ in range(samples):
        z = rng.standard_normal(m_comm.dim) + 1j * rng.standard_normal(m_comm.dim)
        x = m_comm.element(z)
        x = x / np.linalg.norm(x, ord=2)
        cert = haar_average(N, L, x, tol, commutant=n_comm)
        dist = float(np.linalg.norm(x - cert.output, ord=2))
        report.distances.append(dist)
        report.max_commutant_residual = max(report.max_commutant_residual, cert.commutant_residual)
        report.max_distance = max(report.max_distance, dist)
    report.passed = (report.max_commutant_residual <= tol.eq_eps
                     and report.max_distance <= 2 * gamma_hi + tol.eq_eps)
    return report
