"""Acceptance suites, shared by ``vnperturb check`` and ``tests/test_acceptance.py``.

Each ``criterion_*`` function returns a :class:`CriterionResult`; none of
them raises on a failed check.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    amplify_2x2,
    conjugate,
    diagonal,
    full_algebra,
    haar_unitaries,
    multimatrix,
    scalars,
)
from .basic_construction import build_basic_construction, corner_iso, represent
from .dixmier import check_commutant_near_inclusion, haar_average, monte_carlo_average
from .expectation import pp_constant, trace_expectation, verify_expectation
from .harness import Scenario, TrialRecord, make_instance, parse_shape, run_suite, run_trial
from .linalg import dagger, operator_norm, polar_unitary, projection_exchange_unitary

__all__ = ["CriterionResult", "conjugation_records", "run_all"] + [f"criterion_{k}" for k in range(1, 9)]

SQRT2 = math.sqrt(2.0)
EPSILONS = (0.001, 0.005, 0.01)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str = ""
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] criterion {self.number}: {self.name} -- {self.detail}"


def conjugation_configs() -> list[tuple[int, str]]:
    return [(2, "masa"), (3, "masa"), (4, "masa"), (3, "1x1,2x1"), (3, "2x1,1x1")]


def conjugation_records(trials: int = 100, seed: int = 20240101) -> dict:
    """Run every (dim, shape, epsilon) configuration; keyed by ``(dim, shape, epsilon)``."""
    out = {}
    for dim, shape in conjugation_configs():
        for eps in EPSILONS:
            s = Scenario(dim, tuple(parse_shape(shape, dim)), eps, seed, trials)
            records, summary = run_suite(s)
            out[(dim, shape, eps)] = (records, summary)
    return out


def _all_records(runs: dict) -> list[TrialRecord]:
    return [r for records, _ in runs.values() for r in records]


def criterion_1(runs: dict, elapsed: float | None = None) -> CriterionResult:
    recs = _all_records(runs)
    ok = [r for r in recs if r.report and r.checks.get("unitary") and r.checks.get("conjugacy")
          and r.checks.get("bound_20")]
    worst_ratio = max((r.report["ratio_u_over_dhi"] for r in recs if r.report), default=float("nan"))
    worst_conj = max((r.report["mutual_containment"] for r in recs if r.report), default=float("nan"))
    worst_unit = max((r.report["unitarity_residual"] for r in recs if r.report), default=float("nan"))
    detail = (f"{len(ok)}/{len(recs)} trials ok; max ||u-I||/d_hi = {worst_ratio:.3f} (limit 20); "
              f"max containment residual {worst_conj:.2e} (limit 1e-8); max unitarity residual {worst_unit:.2e} (limit 1e-10)")
    if elapsed is not None:
        detail += f"; runtime {elapsed:.1f}s (limit 300s)"
    passed = len(ok) == len(recs) and (elapsed is None or elapsed < 300.0)
    return CriterionResult(1, "conjugation with the 20 d bound", passed, detail,
                           {"ratio": worst_ratio, "containment": worst_conj, "unitarity": worst_unit})


def criterion_2(runs: dict) -> CriterionResult:
    recs = _all_records(runs)
    bad = [r for r in recs if not (r.report and r.checks.get("isomorphism_bounds") and r.checks.get("bound_14"))]
    errors = sorted({r.error for r in bad if r.error})
    ratios = {}
    for key in ("t_minus_eM", "p_minus_eM", "w_minus_I", "phi_minus_EM", "norm_phi_minus_id"):
        factor = {"t_minus_eM": 2, "p_minus_eM": 4, "w_minus_I": 4 * SQRT2, "phi_minus_EM": 8 * SQRT2,
                  "norm_phi_minus_id": 14}[key]
        base = "gamma" if key != "norm_phi_minus_id" else "d_hi"
        vals = [r.report[key] / (factor * r.report[base]) for r in recs if r.report and r.report[base] > 0]
        ratios[key] = max(vals, default=0.0)
    detail = (f"{len(recs) - len(bad)}/{len(recs)} trials within all bounds; worst value/bound: "
              + ", ".join(f"{k} {v:.3f}" for k, v in ratios.items()))
    if errors:
        detail += f"; errors: {errors[:3]}"
    return CriterionResult(2, "isomorphism bounds (t, p, w, Φ)", not bad, detail, ratios)


def criterion_3(count: int = 1000, seed: int = 7) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst_polar = -np.inf
    for _ in range(count):
        n = int(rng.integers(1, 7))
        e = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        x = np.eye(n) + rng.uniform(0.0, 0.999) * e / np.linalg.norm(e, ord=2)
        gap = operator_norm(x - np.eye(n))
        u = polar_unitary(x)
        worst_polar = max(worst_polar, operator_norm(u - np.eye(n)) - SQRT2 * gap)

    worst_exch = -np.inf
    worst_conj = 0.0
    done = 0
    while done < count:
        n = int(rng.integers(2, 7))
        k = int(rng.integers(0, n + 1))
        basis = haar_unitaries(full_algebra(n), 1, rng)[0]
        p = basis[:, :k] @ dagger(basis[:, :k])
        h = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = 0.5 * (h + dagger(h))
        evals, evecs = np.linalg.eigh(h / np.linalg.norm(h, ord=2))
        rot = (evecs * np.exp(1j * rng.uniform(0, 1.2) * evals)) @ dagger(evecs)
        q = rot @ p @ dagger(rot)
        gap = operator_norm(p - q)
        if gap >= 0.99:
            continue
        w = projection_exchange_unitary(p, q)
        worst_exch = max(worst_exch, operator_norm(w - np.eye(n)) - SQRT2 * gap)
        worst_conj = max(worst_conj, operator_norm(w @ p @ dagger(w) - q))
        done += 1
    passed = worst_polar <= 1e-12 and worst_exch <= 1e-12 and worst_conj <= 1e-10
    detail = (f"{count}+{count} instances; max(||u-I|| - sqrt2||x-I||) = {worst_polar:.2e}, "
              f"max(||w-I|| - sqrt2||p-q||) = {worst_exch:.2e} (limit 1e-12), max ||wpw*-q|| = {worst_conj:.2e}")
    return CriterionResult(3, "standard unitary estimates", passed, detail,
                           {"polar": worst_polar, "exchange": worst_exch, "conj": worst_conj})


def criterion_4(count: int = 50, seed: int = 11) -> CriterionResult:
    configs = [(2, "masa"), (3, "masa"), (3, "1x1,2x1"), (4, "masa"), (4, "2x2")]
    worst_comm, worst_excess, failures = 0.0, -np.inf, 0
    for k in range(count):
        dim, shape = configs[k % len(configs)]
        eps = (0.002, 0.01, 0.03)[k % 3]
        inst = make_instance(Scenario(dim, tuple(parse_shape(shape, dim)), eps, seed), k)
        gamma = inst.certificate
        rep = check_commutant_near_inclusion(inst.N, inst.M, inst.L, gamma, 10, seed + k)
        worst_comm = max(worst_comm, rep.max_commutant_residual)
        worst_excess = max(worst_excess, rep.max_distance - 2 * gamma)
        if not (rep.max_commutant_residual <= 1e-10 and rep.max_distance <= 2 * gamma + 1e-8):
            failures += 1
    detail = (f"{count - failures}/{count} instances; max commutant residual {worst_comm:.2e} (limit 1e-10); "
              f"max(||x-y|| - 2γ) = {worst_excess:.2e} (limit 1e-8)")
    return CriterionResult(4, "commutant near-inclusion", failures == 0, detail)


def _dixmier_cases():
    rng = np.random.default_rng(5)
    w3 = haar_unitaries(full_algebra(3), 1, rng)[0]
    cases = [
        ("diag in M2", diagonal(2), full_algebra(2), np.array([[1, 2], [3, 4]], dtype=complex)),
        ("scalars in M2", scalars(2), full_algebra(2), None),
        ("M2 in M2", full_algebra(2), full_algebra(2), None),
        ("MASA in M3", multimatrix(3, [(1, 1)] * 3, w3), full_algebra(3), None),
        ("M1+M2 in M3", multimatrix(3, [(1, 1), (2, 1)], w3), full_algebra(3), None),
        ("M3 in M3", full_algebra(3), full_algebra(3), None),
    ]
    out = []
    for name, A, L, x in cases:
        if x is None:
            n = A.ambient_dim
            x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        out.append((name, A, L, x))
    return out


def criterion_5(samples: int = 100_000, hull_points: int = 200, seed: int = 3) -> CriterionResult:
    worst_mc, worst_hull, parts = 0.0, 0.0, []
    for k, (name, A, L, x) in enumerate(_dixmier_cases()):
        cert = haar_average(A, L, x, hull_points=hull_points, rng_seed=seed + k)
        mc = monte_carlo_average(A, x, samples, seed + 100 + k)
        dist = float(np.linalg.norm(mc - cert.output))
        worst_mc = max(worst_mc, dist)
        worst_hull = max(worst_hull, cert.hull_gap)
        parts.append(f"{name}: mc {dist:.1e}, hull {cert.hull_gap:.1e}")
    passed = worst_mc <= 5e-2 and worst_hull <= 1e-3
    detail = f"max MC distance {worst_mc:.2e} (limit 5e-2), max hull gap {worst_hull:.2e} (limit 1e-3); " + "; ".join(parts)
    return CriterionResult(5, "Dixmier average identity", passed, detail)


def _expectation_cases():
    rng = np.random.default_rng(9)
    cases = []
    for n in (2, 3, 4):
        L = full_algebra(n)
        w = haar_unitaries(L, 1, rng)[0]
        cases += [(L, scalars(n)), (L, diagonal(n)), (L, L), (L, multimatrix(n, [(1, 1)] * n, w))]
    w3 = haar_unitaries(full_algebra(3), 1, rng)[0]
    cases += [(full_algebra(3), multimatrix(3, [(1, 1), (2, 1)], w3)),
              (full_algebra(4), multimatrix(4, [(2, 2)], haar_unitaries(full_algebra(4), 1, rng)[0])),
              (amplify_2x2(diagonal(2)), amplify_2x2(scalars(2))),
              (multimatrix(3, [(1, 1), (2, 1)]), multimatrix(3, [(1, 1), (1, 2)]))]
    return cases


def criterion_6(runs: dict | None = None) -> CriterionResult:
    worst_trace = 0.0
    for k, (L, A) in enumerate(_expectation_cases()):
        rep = verify_expectation(trace_expectation(L, A), 30, k)
        worst_trace = max(worst_trace, max(rep.residuals.values()))
    c_scalar, _ = pp_constant(trace_expectation(full_algebra(2), scalars(2)), 200, 0)
    c_diag, _ = pp_constant(trace_expectation(full_algebra(2), diagonal(2)), 200, 0)
    ek_ok = ek_total = 0
    if runs is not None:
        recs = _all_records(runs)
        ek_total = len(recs)
        ek_ok = sum(1 for r in recs if r.checks.get("ek_expectation") and r.checks.get("ek_finite_index"))
    passed = (worst_trace <= 1e-10 and abs(c_scalar - 0.5) <= 1e-3 and abs(c_diag - 0.5) <= 1e-3
              and ek_ok == ek_total)
    detail = (f"trace expectation max residual {worst_trace:.2e} (limit 1e-10); pp constant scalars⊂M2 "
              f"{c_scalar:.6f}, diag⊂M2 {c_diag:.6f} (target 0.5 ± 1e-3); E_K verified on {ek_ok}/{ek_total} trials")
    return CriterionResult(6, "expectations and index", passed, detail,
                           {"trace": worst_trace, "c_scalar": c_scalar, "c_diag": c_diag})


def criterion_7(per_instance: int = 200, seed: int = 13) -> CriterionResult:
    rng = np.random.default_rng(seed)
    instances = [(full_algebra(2), scalars(2)), (full_algebra(2), diagonal(2)), (full_algebra(2), full_algebra(2))]
    for dim, shape in ((3, "1x1,2x1"), (3, "masa"), (4, "masa")):
        inst = make_instance(Scenario(dim, tuple(parse_shape(shape, dim)), 0.01, seed), 0)
        instances += [(inst.L, inst.N), (inst.L, inst.M)]
    worst_comp = worst_corner = 0.0
    for L, M in instances:
        E = trace_expectation(L, M)
        bc = build_basic_construction(L, M, E)
        n = L.ambient_dim
        xs = rng.standard_normal((per_instance, n, n)) + 1j * rng.standard_normal((per_instance, n, n))
        xs /= np.linalg.norm(xs, ord=2, axis=(1, 2))[:, None, None]
        for x in xs:
            worst_comp = max(worst_comp, bc.compression_residual(x))
            z = bc.e_M @ represent(x) @ bc.e_M
            worst_corner = max(worst_corner, operator_norm(corner_iso(bc, z) - E(x)))
        for b in M.basis:
            z = bc.e_M @ represent(b) @ bc.e_M
            worst_corner = max(worst_corner, operator_norm(corner_iso(bc, z) - b))
    passed = worst_comp <= 1e-10 and worst_corner <= 1e-10
    detail = (f"{len(instances)} instances x {per_instance} samples; compression residual {worst_comp:.2e}, "
              f"corner round trip {worst_corner:.2e} (limit 1e-10)")
    return CriterionResult(7, "basic construction identities", passed, detail)


def criterion_8(trials: int = 5, seed: int = 17) -> CriterionResult:
    gated = Scenario(3, ((1, 1), (2, 1)), 0.034, seed, trials)
    gated_recs = [run_trial(gated, k) for k in range(trials)]
    gate_ok = all(r.status == "hypothesis-error" and "1/15" in r.error for r in gated_recs)
    worst_identity = 0.0
    zero_ok = True
    for dim, shape in ((2, "masa"), (3, "1x1,2x1"), (4, "masa")):
        s = Scenario(dim, tuple(parse_shape(shape, dim)), 0.0, seed, trials)
        for k in range(trials):
            r = run_trial(s, k)
            zero_ok &= r.passed
            if r.report:
                worst_identity = max(worst_identity, r.report["u_minus_I"])
    passed = gate_ok and zero_ok and worst_identity <= 1e-12
    detail = (f"certificate >= 1/15 gated on {sum(r.status == 'hypothesis-error' for r in gated_recs)}/{trials}; "
              f"epsilon = 0 max ||u-I|| = {worst_identity:.2e} (limit 1e-12)")
    return CriterionResult(8, "degenerate gates", passed, detail)


def run_all(trials: int = 100, seed: int = 20240101, echo=None) -> list[CriterionResult]:
    start = time.perf_counter()
    runs = conjugation_records(trials, seed)
    elapsed = time.perf_counter() - start
    results = [criterion_1(runs, elapsed), criterion_2(runs), criterion_3(), criterion_4(),
               criterion_5(), criterion_6(runs), criterion_7(), criterion_8()]
    if echo is not None:
        for r in results:
            echo(r.line())
    return results
