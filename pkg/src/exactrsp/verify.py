"""Invariant suites run by ``exactrsp verify``.

Each check returns a :class:`PropertyResult` carrying the measured margin so a
report can show how close every property came to failing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analysis, discretizer as dz, protocol, transformer as tf
from .disentangler import build_projectors
from .statekit import ATOL, PIPELINE_ATOL, PureState, haar_vectors, random_schmidt


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    margin: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<28} margin={self.margin:.3e}  {self.detail}"


def _random_stage_inputs(d: int, rng: np.random.Generator):
    alpha = random_schmidt(d, rng)
    need = 1 - alpha.r**2 * (d - 1)
    psi0sq = rng.uniform(need, 1.0)
    rest = rng.dirichlet(np.ones(d - 1)) * (1 - psi0sq)
    mags = np.sqrt(np.concatenate(([psi0sq], rest)))
    return alpha, psi0sq, mags


def check_completeness(d_max: int, trials: int, seed: int, fault: float = 0.0) -> PropertyResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for d in range(2, d_max + 1):
        for _ in range(trials):
            alpha, psi0sq, mags = _random_stage_inputs(d, rng)
            phi = tf.intermediate_schmidt(psi0sq, d)
            ones = list(tf.build_stage_one(alpha, phi).ops)
            if fault:
                ones[0] = ones[0] + fault * np.eye(d)
            twos = tf.build_stage_two(mags, phi).ops
            worst = max(worst, tf.completeness_defect(ones), tf.completeness_defect(twos))
    return PropertyResult("kraus_completeness", worst <= ATOL, ATOL - worst, f"max defect {worst:.2e}")


def check_projectors(d_max: int, trials: int, seed: int) -> PropertyResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for d in range(2, d_max + 1):
        for _ in range(trials):
            proj = build_projectors(rng.uniform(-np.pi, np.pi, d), d)
            worst = max(worst, float(np.max(np.abs(sum(proj) - np.eye(d)))))
            for j, p in enumerate(proj):
                for k, q in enumerate(proj):
                    target = p if j == k else 0.0
                    worst = max(worst, float(np.max(np.abs(p @ q - target))))
    return PropertyResult("projector_resolution", worst <= ATOL, ATOL - worst, f"max defect {worst:.2e}")


def check_exactness(d_max: int, trials: int, seed: int) -> PropertyResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for d in range(2, d_max + 1):
        for i in range(trials):
            alpha = random_schmidt(d, rng)
            beta = PureState(haar_vectors(d, 1, rng)[0])
            variant = dz.VARIANTS[i % 3]
            res = protocol.run(alpha, beta, variant, seed=int(rng.integers(2**32)))
            worst = max(worst, 1 - res.fidelity_achieved)
    return PropertyResult("protocol_exactness", worst <= PIPELINE_ATOL, PIPELINE_ATOL - worst,
                          f"max infidelity {worst:.2e}")


def check_branches(d_max: int, targets: int, seed: int) -> PropertyResult:
    rng = np.random.default_rng(seed)
    worst_fid, worst_sum = 0.0, 0.0
    for d in range(2, min(d_max, 4) + 1):
        for _ in range(targets):
            alpha = random_schmidt(d, rng)
            beta = PureState(haar_vectors(d, 1, rng)[0])
            branches = protocol.run_all_branches(alpha, beta)
            worst_fid = max(worst_fid, max(1 - b.fidelity_achieved for b in branches))
            worst_sum = max(worst_sum, abs(sum(b.probability for b in branches) - 1))
    worst = max(worst_fid, worst_sum)
    return PropertyResult("branch_enumeration", worst <= PIPELINE_ATOL, PIPELINE_ATOL - worst,
                          f"max infidelity {worst_fid:.2e}, prob-sum error {worst_sum:.2e}")


def check_grid_bounds(d_max: int, samples: int, seed: int, D_max: int = 20) -> PropertyResult:
    rng = np.random.default_rng(seed)
    margin = math.inf
    for d in range(2, d_max + 1):
        betas = haar_vectors(d, samples, rng)
        canon = dz.canonical_phase_batch(betas)
        for D in range(2, D_max + 1):
            for variant, rows in (("plain", betas), ("real_beta0", canon), ("signed_varlen", canon)):
                approx = dz.approximate_batch(rows, D, variant)
                fid = np.abs(np.sum(rows.conj() * approx, axis=1)) ** 2 / np.sum(np.abs(approx) ** 2, axis=1)
                margin = min(margin, float(np.min(fid - dz.fidelity_guarantee(d, D, variant))))
                if variant == "plain":
                    dist = np.linalg.norm(rows - approx, axis=1)
                    margin = min(margin, float(np.min(math.sqrt(2 * d) / D - dist)))
    return PropertyResult("grid_fidelity_bounds", margin >= -ATOL, margin)


def check_varlen_cost(d_max: int, samples: int, seed: int) -> PropertyResult:
    rng = np.random.default_rng(seed)
    margin = math.inf
    for d in range(2, d_max + 1):
        for r in (1 / math.sqrt(d), 0.5 / math.sqrt(d), 0.1 / d):
            Dp = dz.choose_D(d, r, "signed_varlen")
            bound = dz.varlen_cost_bound(d, r)
            for row in dz.canonical_phase_batch(haar_vectors(d, samples, rng)):
                margin = min(margin, bound - dz.bit_cost(dz.encode(row, Dp, "signed_varlen")))
    return PropertyResult("varlen_cost_bound", margin >= 0, margin)


def check_lemma(trials: int, seed: int, d_max: int) -> PropertyResult:
    margin = math.inf
    for d in range(2, d_max + 1):
        for eps in (0.1, 0.3, 0.6, 0.9):
            margin = min(margin, analysis.lemma_margin(eps, trials, seed + d, d))
    return PropertyResult("distance_fidelity_lemma", margin >= -ATOL, margin)


def check_majorization(d_max: int, trials: int, seed: int) -> PropertyResult:
    rng = np.random.default_rng(seed)
    failures = 0
    for d in range(2, d_max + 1):
        for _ in range(trials):
            alpha, psi0sq, mags = _random_stage_inputs(d, rng)
            if not tf.majorizes(alpha.coeffs, mags):
                failures += 1
    return PropertyResult("majorization_sufficiency", failures == 0, -float(failures),
                          f"{failures} counterexamples")


def check_cap_volume(samples: int, seed: int) -> PropertyResult:
    worst = 0.0
    for d in (2, 3, 4):
        for eps in (0.3, 0.5, 0.8):
            p = eps ** (2 * d - 2)
            sigma = math.sqrt(p * (1 - p) / samples)
            got = analysis.monte_carlo_cap_fraction(d, eps, samples, seed + 10 * d)
            worst = max(worst, abs(got - p) / sigma)
    return PropertyResult("cap_volume_monte_carlo", worst <= 3.0, 3.0 - worst, f"max {worst:.2f} sigma")


def check_costs() -> PropertyResult:
    margin = math.inf
    for p in analysis.figure1_dataset(2, 200):
        margin = min(margin, p.cost_upper - p.cost_lower, p.cost_main - p.cost_upper)
    lower, upper = analysis.cost_bounds(2, 1 / math.sqrt(2))
    exact = abs(lower - 3) + abs(upper - 5) + abs(analysis.cost_main(2, 1 / math.sqrt(2)) - (2 + 4 * math.log2(3)))
    return PropertyResult("cost_ordering", margin >= 0 and exact < 1e-9, margin)


def run_all(d_max: int = 6, trials: int = 200, seed: int = 0, fault: float = 0.0) -> list[PropertyResult]:
    return [
        check_completeness(d_max, trials, seed, fault),
        check_projectors(d_max, max(1, trials // 10), seed + 1),
        check_exactness(d_max, trials, seed + 2),
        check_branches(d_max, max(1, trials // 50), seed + 3),
        check_grid_bounds(d_max, max(100, trials), seed + 4),
        check_varlen_cost(d_max, max(10, trials // 10), seed + 5),
        check_lemma(max(1000, 10 * trials), seed + 6, d_max),
        check_majorization(d_max, trials, seed + 7),
        check_cap_volume(max(10_000, 100 * trials), seed + 8),
        check_costs(),
    ]
