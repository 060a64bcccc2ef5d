"""Close subalgebras are unitarily conjugate.

Given subalgebras ``N`` and ``M`` of ``L`` with trace expectations and a
certified upper bound ``d_hi < 1/15`` on their Kadison-Kastler distance,
:func:`build_isomorphism` constructs a *-isomorphism ``Φ: N -> M`` close to
the identity, and :func:`conjugating_unitary` turns it into a unitary ``u``
with ``u M u* = N`` and ``||u - I|| <= 20 d_hi``.

The isomorphism comes from the basic construction ``<L, e_M>``: averaging
``e_M`` over the unitaries of ``N`` gives ``t`` in ``N' ∩ <L, e_M>`` near
``e_M``; its spectral projection ``p`` near 1 is moved back onto ``e_M`` by a
unitary ``w`` close to ``I``; then ``Φ(x)`` is ``e_M w* x w e_M`` read back as
an element of ``M``.  The unitary is the polar part of ``y``, where
``[[0, y], [0, 0]]`` is the average of ``[[0, I], [0, 0]]`` over the unitaries
of the graph algebra ``{diag(x, Φ(x))}``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    Subalgebra,
    amplify_2x2,
    generate_algebra,
    haar_unitaries,
    relative_commutant,
    require_inclusion,
)
from .basic_construction import BasicConstruction, build_basic_construction, corner_iso, represent, represent_algebra
from .dixmier import haar_average
from .errors import BoundViolationError, CertificateError, HypothesisError, PipelineError
from .expectation import ConditionalExpectation
from .linalg import (
    DEFAULT_TOL,
    ToleranceProfile,
    dagger,
    is_unitary_residual,
    operator_norm,
    polar_unitary,
    projection_exchange_unitary,
    spectral_projection,
)

__all__ = [
    "DISTANCE_THRESHOLD",
    "DistanceInterval",
    "AlgebraMap",
    "IsoCertificate",
    "PerturbReport",
    "distance_interval",
    "map_norm_estimate",
    "build_isomorphism",
    "graph_algebra",
    "ek_expectation",
    "conjugating_unitary",
]

log = logging.getLogger(__name__)

DISTANCE_THRESHOLD = 1.0 / 15.0
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class DistanceInterval:
    lo: float
    hi: float
    hi_source: str  # "coarse-bound" or "conjugation-certificate"

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi):
            raise ValueError(f"invalid distance interval [{self.lo}, {self.hi}]")


def _unit_snap(value: float, tol: ToleranceProfile) -> float:
    return 0.0 if value <= tol.rank_eps else value


def distance_interval(N: Subalgebra, M: Subalgebra, E_M: ConditionalExpectation, E_N: ConditionalExpectation,
                      samples: int = 64, rng_seed=None, certificate: float | None = None,
                      tol: ToleranceProfile = DEFAULT_TOL) -> DistanceInterval:
    """Lower and upper bounds on the Kadison-Kastler distance ``d(N, M)``.

    Lower: ``||u - E(u)|| / 2`` for sampled unitaries ``u`` of either algebra
    and the expectation onto the other one.  Upper: the smaller of
    ``2 sqrt(n) s`` (``s`` the largest singular value of ``id - E`` on the
    other algebra in trace geometry, taken over both directions) and the
    caller's conjugation certificate ``2 ||v - I||`` when ``M = v N v*``.
    """
    if N.ambient_dim != M.ambient_dim:
        raise ValueError("N and M must live in the same ambient algebra")
    n = N.ambient_dim
    rng = np.random.default_rng(rng_seed)

    lo = 0.0
    for A, E in ((N, E_M), (M, E_N)):
        u = np.concatenate([np.eye(n)[None], haar_unitaries(A, samples, rng)])
        lo = max(lo, float(np.max(np.linalg.norm(u - E._apply(u), ord=2, axis=(1, 2)))) / 2)

    sing = 0.0
    for A, E in ((N, E_M), (M, E_N)):
        defect = (A.basis - E._apply(A.basis)).reshape(A.dim, -1).T / np.sqrt(n)
        sing = max(sing, float(np.linalg.norm(defect, ord=2)))
    coarse = 2.0 * np.sqrt(n) * _unit_snap(sing, tol)
    lo = _unit_snap(lo, tol)

    hi, source = coarse, "coarse-bound"
    if certificate is not None and certificate < coarse:
        hi, source = float(certificate), "conjugation-certificate"
    if lo > hi + tol.eq_eps:
        raise HypothesisError(f"lower bound {lo:.6e} exceeds upper bound {hi:.6e}; invalid certificate?")
    return DistanceInterval(min(lo, hi), hi, source)


@dataclass(frozen=True, eq=False)
class AlgebraMap:
    """A linear map ``domain -> codomain`` given by the images of ``domain.basis``."""

    domain: Subalgebra
    codomain: Subalgebra
    images: np.ndarray

    def __call__(self, x) -> np.ndarray:
        return np.tensordot(self.domain.coordinates(x), self.images, axes=([-1], [0]))

    def matrix(self) -> np.ndarray:
        """Coordinates: column ``j`` holds the codomain coordinates of the image of basis ``j``."""
        return self.codomain.coordinates(self.images).T

    def inverse(self, rank_eps: float = DEFAULT_TOL.rank_eps) -> "AlgebraMap":
        mat = self.matrix()
        if mat.shape[0] != mat.shape[1]:
            raise CertificateError(f"map between spaces of dimension {mat.shape[1]} and {mat.shape[0]} is not invertible")
        sing = np.linalg.svd(mat, compute_uv=False)
        if sing[-1] <= rank_eps * max(1.0, sing[0]):
            raise CertificateError("map is singular")
        inv = np.linalg.inv(mat)
        return AlgebraMap(self.codomain, self.domain, np.tensordot(inv.T, self.domain.basis, axes=([1], [0])))


def map_norm_estimate(phi: AlgebraMap, samples: int = 256, rng_seed=None) -> float:
    """``max ||phi(u) - u||`` over ``I`` and sampled Haar unitaries of ``phi.domain``.

    A lower estimate of ``||phi - id||``: the unit ball is the closed convex
    hull of the unitaries, so the supremum over unitaries is the norm.
    """
    N = phi.domain
    u = np.concatenate([np.eye(N.ambient_dim)[None], haar_unitaries(N, samples, rng_seed)])
    return float(np.max(np.linalg.norm(phi(u) - u, ord=2, axis=(1, 2))))


@dataclass(frozen=True, eq=False)
class IsoCertificate:
    phi: AlgebraMap
    t: np.ndarray
    p: np.ndarray
    w: np.ndarray
    gamma: float
    norm_phi_minus_id_lo: float
    hom_residual: float
    surjective: bool
    residuals: dict = field(default_factory=dict)
    basic: BasicConstruction | None = None


def _hom_residual(phi: AlgebraMap) -> float:
    N = phi.domain
    n = N.ambient_dim
    imgs = phi.images
    prods = np.einsum("aij,bjk->abik", N.basis, N.basis).reshape(-1, n, n)
    img_prods = np.einsum("aij,bjk->abik", imgs, imgs).reshape(-1, n, n)
    mult = np.linalg.norm((phi(prods) - img_prods).reshape(len(prods), -1), axis=1).max()
    star = np.linalg.norm((phi(dagger(N.basis)) - dagger(imgs)).reshape(N.dim, -1), axis=1).max()
    unit = np.linalg.norm(phi(np.eye(n)) - np.eye(n))
    return float(max(mult, star, unit))


def _gate(d: DistanceInterval, strict: bool) -> None:
    if d.hi >= DISTANCE_THRESHOLD:
        if strict:
            raise HypothesisError(f"distance bound {d.hi:.6f} is not below 1/15")
        log.warning("distance bound %.6f is not below 1/15; proceeding without the guarantee", d.hi)


def _check(name: str, value: float, bound: float, tol: ToleranceProfile) -> None:
    if value > bound + tol.eq_eps:
        raise BoundViolationError(f"{name} = {value:.6e} exceeds {bound:.6e}")


def build_isomorphism(N: Subalgebra, M: Subalgebra, L: Subalgebra, E_N: ConditionalExpectation,
                      E_M: ConditionalExpectation, d: DistanceInterval, tol: ToleranceProfile = DEFAULT_TOL,
                      samples: int = 256, rng_seed=None, strict: bool = True) -> IsoCertificate:
    """*-isomorphism ``Φ: N -> M`` with ``||Φ - id|| <= (8 sqrt(2) + 2) γ``, ``γ = 1.01 d.hi``.

    Every intermediate inequality is checked and raises
    :class:`BoundViolationError` when it fails.  ``strict=False`` lets
    instances with ``d.hi >= 1/15`` through with a warning.
    """
    _gate(d, strict)
    require_inclusion(N, L, tol, what="N")
    bc = build_basic_construction(L, M, E_M, tol)
    gamma = 1.01 * d.hi
    e = bc.e_M
    big = bc.gns.dim

    pi_n = represent_algebra(N)
    commutant = relative_commutant(pi_n, bc.generated, tol)
    t = haar_average(pi_n, bc.generated, e, tol, commutant=commutant).output
    t_gap = operator_norm(t - e)
    _check("||t - e_M||", t_gap, 2 * gamma, tol)

    # widened by eq_eps so that gamma = 0 still leaves a gap around the eigenvalue 1
    half_width = 2 * gamma + tol.eq_eps
    p = spectral_projection(t, 1 - half_width, 1 + half_width, tol)
    p_gap = operator_norm(p - e)
    _check("||p - e_M||", p_gap, 4 * gamma, tol)

    w = projection_exchange_unitary(e, p, tol)
    w_gap = operator_norm(w - np.eye(big))
    _check("||w - I||", w_gap, 4 * SQRT2 * gamma, tol)

    images = np.array([corner_iso(bc, e @ dagger(w) @ represent(b) @ w @ e, tol) for b in N.basis])
    phi = AlgebraMap(N, M, images)

    unit_basis = N.basis / np.linalg.norm(N.basis, ord=2, axis=(1, 2))[:, None, None]
    phi_em = float(np.max(np.linalg.norm(phi(unit_basis) - E_M._apply(unit_basis), ord=2, axis=(1, 2))))
    _check("||Φ(x) - E_M(x)||", phi_em, 8 * SQRT2 * gamma, tol)

    hom = _hom_residual(phi)
    rank = int(np.sum(np.linalg.svd(phi.matrix(), compute_uv=False) > tol.rank_eps))
    in_m = float(np.linalg.norm((images - M.project(images)).reshape(N.dim, -1), axis=1).max())
    surjective = N.dim == M.dim and rank == M.dim and in_m <= tol.eq_eps

    norm_lo = map_norm_estimate(phi, samples, rng_seed)
    residuals = {
        "gamma": gamma,
        "t_minus_eM": t_gap,
        "p_minus_eM": p_gap,
        "w_minus_I": w_gap,
        "phi_minus_EM": phi_em,
        "phi_image_outside_M": in_m,
        "hom_residual": hom,
    }
    return IsoCertificate(phi, t, p, w, gamma, norm_lo, hom, surjective, residuals, bc)


def graph_algebra(iso: IsoCertificate, tol: ToleranceProfile = DEFAULT_TOL) -> Subalgebra:
    """``K = {diag(x, Φ(x)) : x in N}`` inside the 2n x 2n matrices."""
    N = iso.phi.domain
    n = N.ambient_dim
    gens = []
    for b, fb in zip(N.basis, iso.phi.images):
        g = np.zeros((2 * n, 2 * n), dtype=complex)
        g[:n, :n] = b
        g[n:, n:] = fb
        gens.append(g)
    return generate_algebra(2 * n, gens, tol)


def ek_expectation(N: Subalgebra, M: Subalgebra, L: Subalgebra, E_N: ConditionalExpectation,
                   E_M: ConditionalExpectation, iso: IsoCertificate, tol: ToleranceProfile = DEFAULT_TOL,
                   K: Subalgebra | None = None) -> ConditionalExpectation:
    """Conditional expectation of ``M_2(L)`` onto the graph algebra ``K`` of ``Φ``.

    ``[[a, b], [c, d]] -> diag(x, Φ(x))`` with ``x = (E_N(a) + Φ^{-1}(E_M(d))) / 2``;
    the off-diagonal blocks do not contribute.
    """
    if iso.hom_residual > tol.eq_eps or not iso.surjective:
        raise CertificateError(f"Φ is not a verified isomorphism (hom residual {iso.hom_residual:.3e})")
    phi = iso.phi
    phi_inv = phi.inverse(tol.rank_eps)
    L2 = amplify_2x2(L)
    if K is None:
        K = graph_algebra(iso, tol)
    n = L.ambient_dim
    a = L2.basis[:, :n, :n]
    dd = L2.basis[:, n:, n:]
    ea = E_N._apply(a)
    ed = E_M._apply(dd)
    images = np.zeros_like(L2.basis)
    images[:, :n, :n] = (ea + phi_inv(ed)) / 2
    images[:, n:, n:] = (phi(ea) + ed) / 2
    return ConditionalExpectation(L2, K, images)


@dataclass(frozen=True, eq=False)
class PerturbReport:
    d: DistanceInterval
    iso: IsoCertificate
    y: np.ndarray
    u: np.ndarray
    conjugacy_residual: float
    u_minus_I: float
    bound_14_ok: bool
    bound_20_ok: bool
    residuals: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "d_lo": self.d.lo,
            "d_hi": self.d.hi,
            "hi_source": self.d.hi_source,
            "norm_phi_minus_id": self.iso.norm_phi_minus_id_lo,
            "norm_phi_minus_id_kind": "sampled lower estimate; bound_14_ok is a one-sided check",
            "u_minus_I": self.u_minus_I,
            "conjugacy_residual": self.conjugacy_residual,
            "bound_14_ok": self.bound_14_ok,
            "bound_20_ok": self.bound_20_ok,
        }
        out.update({k: float(v) for k, v in self.iso.residuals.items()})
        out.update({k: float(v) for k, v in self.residuals.items()})
        return out


def conjugating_unitary(N: Subalgebra, M: Subalgebra, L: Subalgebra, E_N: ConditionalExpectation,
                        E_M: ConditionalExpectation, d: DistanceInterval, tol: ToleranceProfile = DEFAULT_TOL,
                        samples: int = 256, rng_seed=None, strict: bool = True) -> PerturbReport:
    """Unitary ``u`` in ``L`` with ``u M u* = N`` and ``||u - I|| <= sqrt(2) ||Φ - id||``."""
    iso = build_isomorphism(N, M, L, E_N, E_M, d, tol, samples, rng_seed, strict)
    n = L.ambient_dim
    K = graph_algebra(iso, tol)
    L2 = amplify_2x2(L)

    x = np.zeros((2 * n, 2 * n), dtype=complex)
    x[:n, n:] = np.eye(n)
    avg = haar_average(K, L2, x, tol).output
    stray = max(np.linalg.norm(avg[:n, :n]), np.linalg.norm(avg[n:, :n]), np.linalg.norm(avg[n:, n:]))
    if stray > tol.eq_eps:
        raise PipelineError(f"averaged element is not of the form [[0, y], [0, 0]] (stray block {stray:.3e})")
    y = avg[:n, n:]
    y_gap = operator_norm(y - np.eye(n))
    if y_gap >= 1.0:
        raise HypothesisError(f"||y - I|| = {y_gap:.6f} must be < 1 for the polar step")
    u = polar_unitary(y, tol)

    phi_n = iso.phi.images
    scale = 1.0 + np.linalg.norm(N.basis.reshape(N.dim, -1), axis=1).max()
    intertwine = float(np.linalg.norm((u @ phi_n - N.basis @ u).reshape(N.dim, -1), axis=1).max())
    if intertwine > tol.eq_eps * scale:
        raise PipelineError(f"u Φ(n) = n u fails by {intertwine:.3e}")

    moved = u @ M.basis @ dagger(u)
    conj = float(np.linalg.norm((moved - N.project(moved)).reshape(M.dim, -1), axis=1).max())
    u_gap = operator_norm(u - np.eye(n))
    bound_20 = u_gap <= 20 * d.hi + tol.eq_eps
    bound_14 = iso.norm_phi_minus_id_lo <= 14 * d.hi + tol.eq_eps
    residuals = {
        "y_minus_I": y_gap,
        "intertwining_residual": intertwine,
        "unitarity_residual": is_unitary_residual(u),
        "sqrt2_phi_bound": SQRT2 * iso.norm_phi_minus_id_lo,
    }
    return PerturbReport(d, iso, y, u, conj, u_gap, bool(bound_14), bool(bound_20), residuals)
