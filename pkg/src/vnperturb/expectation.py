"""Conditional expectations onto subalgebras and the Pimsner-Popa constant."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import Subalgebra, require_inclusion, contains
from .errors import DomainError, InvalidInputError
from .linalg import DEFAULT_TOL, ToleranceProfile, dagger, hermitian_part

__all__ = [
    "ConditionalExpectation",
    "ExpectationReport",
    "trace_expectation",
    "apply",
    "best_constant",
    "pp_constant",
    "verify_expectation",
]


@dataclass(frozen=True, eq=False)
class ConditionalExpectation:
    """A linear map ``domain -> range`` stored by its values on ``domain.basis``.

    ``images[i]`` is the image of ``domain.basis[i]``.  Nothing here forces the
    map to actually be a conditional expectation; :func:`verify_expectation`
    checks that.
    """

    domain: Subalgebra
    range: Subalgebra
    images: np.ndarray

    def __post_init__(self):
        imgs = np.array(self.images, dtype=complex, copy=True)
        n = self.domain.ambient_dim
        if imgs.shape != (self.domain.dim, n, n):
            raise InvalidInputError(f"images of shape {imgs.shape} do not match the domain basis")
        if self.range.ambient_dim != n:
            raise InvalidInputError("domain and range live in different ambient algebras")
        imgs.flags.writeable = False
        object.__setattr__(self, "images", imgs)

    def _apply(self, x) -> np.ndarray:
        return np.tensordot(self.domain.coordinates(x), self.images, axes=([-1], [0]))

    def __call__(self, x, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
        return apply(self, x, tol)


def trace_expectation(L: Subalgebra, A: Subalgebra, tol: ToleranceProfile = DEFAULT_TOL) -> ConditionalExpectation:
    """The trace-preserving conditional expectation ``L -> A``.

    With respect to the normalized trace this is the orthogonal projection
    of ``L`` onto ``A``.
    """
    require_inclusion(A, L, tol)
    return ConditionalExpectation(L, A, A.project(L.basis))


def apply(E: ConditionalExpectation, x, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """``E(x)``; raises :class:`DomainError` when ``x`` is not in ``E.domain``."""
    x = np.asarray(x, dtype=complex)
    inside, residual = contains(E.domain, x, tol)
    if not inside:
        raise DomainError(f"argument is outside the domain of E (residual {residual:.3e})")
    return E._apply(x)


def best_constant(E: ConditionalExpectation, x) -> float:
    """Largest ``c >= 0`` with ``E(x* x) - c x* x`` positive semidefinite.

    This is ``1 / lambda_max(a^{-1/2} x*x a^{-1/2})`` for ``a = E(x* x)``.
    ``a`` is shifted by ``1e-12 ||a||`` before inverting; the shift can only
    raise the value, so it stays an upper bound on the constant of ``E``.
    Values below ``1e-9`` (``x* x`` escaping the support of ``a``) and
    indefinite ``a`` give 0.  ``inf`` for ``x = 0``.
    """
    x = np.asarray(x, dtype=complex)
    b = hermitian_part(dagger(x) @ x)
    bnorm = float(np.linalg.norm(b, ord=2))
    if bnorm == 0.0:
        return float("inf")
    a = hermitian_part(E._apply(b))
    evals, evecs = np.linalg.eigh(a)
    scale = max(bnorm, float(np.max(np.abs(evals))))
    if evals[0] < -1e-10 * scale:
        return 0.0
    evals = np.maximum(evals, 0.0) + 1e-12 * scale
    s = evecs / np.sqrt(evals)
    top = float(np.linalg.eigvalsh(hermitian_part(dagger(s) @ b @ s))[-1])
    c = 1.0 / top
    return 0.0 if c < 1e-9 else c


def _structured_candidates(E: ConditionalExpectation, rng: np.random.Generator) -> list[np.ndarray]:
    # matrix units and rank-one projections of the ambient algebra, projected into the domain
    n = E.domain.ambient_dim
    eye = np.eye(n)
    cands = [b for b in E.domain.basis]
    for i in range(n):
        for j in range(n):
            cands.append(np.outer(eye[i], eye[j]))
    vecs = [eye[i] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            vecs.append((eye[i] + eye[j]) / np.sqrt(2))
            vecs.append((eye[i] + 1j * eye[j]) / np.sqrt(2))
    vecs.append(np.ones(n) / np.sqrt(n))
    for _ in range(2 * n):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        vecs.append(v / np.linalg.norm(v))
    cands.extend(np.outer(v, np.conj(v)) for v in vecs)
    cands.append(np.ones((n, n)))
    return [E.domain.project(c) for c in cands]


def pp_constant(E: ConditionalExpectation, budget: int = 200, rng_seed=None) -> tuple[float, np.ndarray]:
    """Upper bound ``c_hi`` on the Pimsner-Popa constant of ``E`` and a witness ``x``.

    The constant is ``inf_x best_constant(E, x)``; each evaluated ``x``
    certifies ``c <= best_constant(E, x)``.  The search visits matrix units,
    rank-one projections and random elements of the domain, then runs
    ``budget`` steps of a shrinking random local search from the best point.
    ``1 / c_hi`` is a lower bound on the probabilistic index.
    """
    if budget < 1:
        raise InvalidInputError("budget must be >= 1")
    rng = np.random.default_rng(rng_seed)
    dom = E.domain
    cands = _structured_candidates(E, rng)
    for _ in range(budget):
        z = rng.standard_normal(dom.dim) + 1j * rng.standard_normal(dom.dim)
        cands.append(dom.element(z))
    values = [best_constant(E, c) for c in cands]
    k = int(np.argmin(values))
    best, witness = values[k], cands[k]
    if best == 0.0:
        return 0.0, witness

    coords = dom.coordinates(witness)
    step = 0.5 * float(np.linalg.norm(coords))
    for _ in range(budget):
        trial = coords + step * (rng.standard_normal(dom.dim) + 1j * rng.standard_normal(dom.dim)) / np.sqrt(2 * dom.dim)
        value = best_constant(E, dom.element(trial))
        if value < best:
            best, coords = value, trial
        else:
            step *= 0.9
        if best == 0.0:
            break
    return float(best), dom.element(coords)


@dataclass
class ExpectationReport:
    residuals: dict = field(default_factory=dict)
    passed: bool = False

    def to_text(self) -> str:
        lines = [f"{name} = {value:.6e}" for name, value in self.residuals.items()]
        lines.append(f"verdict = {'pass' if self.passed else 'fail'}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExpectationReport":
        residuals, passed = {}, False
        for line in text.splitlines():
            if "=" not in line:
                continue
            key, value = (s.strip() for s in line.split("=", 1))
            if key == "verdict":
                passed = value == "pass"
            else:
                residuals[key] = float(value)
        return cls(residuals, passed)


def _random_elements(A: Subalgebra, count: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((count, A.dim)) + 1j * rng.standard_normal((count, A.dim))
    mats = A.element(z)
    return mats / np.linalg.norm(mats, ord=2, axis=(1, 2))[:, None, None]


def _max_frob(diff: np.ndarray) -> float:
    if diff.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(diff.reshape(len(diff), -1), axis=1)))


def verify_expectation(E: ConditionalExpectation, samples: int = 20, rng_seed=None,
                       tol: ToleranceProfile = DEFAULT_TOL) -> ExpectationReport:
    """Largest violation of each conditional-expectation property over basis and samples.

    Passes iff every residual is at most ``eq_eps``.  Residuals are Frobenius
    norms, except ``positive`` which is how far below zero the smallest
    eigenvalue of ``E(x* x)`` falls.
    """
    rng = np.random.default_rng(rng_seed)
    dom, rng_alg = E.domain, E.range
    n = dom.ambient_dim
    images = E.images

    res = {}
    res["into_range"] = _max_frob(images - rng_alg.project(images))
    res["idempotent"] = _max_frob(E._apply(images) - images)
    res["unital"] = _max_frob(E._apply(np.eye(n)[None]) - np.eye(n)[None])
    res["range_fixing"] = _max_frob(E._apply(rng_alg.basis) - rng_alg.basis)

    xs = _random_elements(dom, samples, rng)
    r1 = _random_elements(rng_alg, samples, rng)
    r2 = _random_elements(rng_alg, samples, rng)
    res["bimodular"] = _max_frob(E._apply(r1 @ xs @ r2) - r1 @ E._apply(xs) @ r2)
    low = np.linalg.eigvalsh(hermitian_part(E._apply(dagger(xs) @ xs)))[:, 0]
    res["positive"] = float(max(0.0, -float(low.min())))

    passed = all(v <= tol.eq_eps for v in res.values())
    return ExpectationReport(res, passed)
