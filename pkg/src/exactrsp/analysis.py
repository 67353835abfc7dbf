"""Communication-cost curves, covering-number bounds and their numerical oracles."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass

import numpy as np

from . import discretizer as dz
from .statekit import ATOL, entanglement_entropy, haar_vectors

CSV_HEADER = (
    "alpha0_sq",
    "r",
    "entanglement_ebits",
    "cost_main",
    "cost_real_beta0",
    "cost_varlen_bound",
    "cost_upper",
    "cost_lower",
    "D",
)


def _check_r(d: int, r: float) -> None:
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got {d}")
    if not 0 < r <= 1 / math.sqrt(d) + ATOL:
        raise ValueError(f"r must lie in (0, 1/sqrt(d)], got {r}")


def _check_eps(eps: float) -> None:
    if not 0 < eps <= 1 + ATOL:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")


def steps12_bits(d: int) -> float:
    """Outcome messages of the transformation and disentangling steps."""
    return math.log2(d * d - d) + math.log2(d)


def cost_main(d: int, r: float) -> float:
    _check_r(d, r)
    return steps12_bits(d) + 2 * d * math.log2(dz.choose_D(d, r, "plain"))


def cost_real_beta0(d: int, r: float) -> float:
    _check_r(d, r)
    return steps12_bits(d) + (2 * d - 1) * math.log2(dz.choose_D(d, r, "real_beta0"))


def cost_varlen_bound(d: int, r: float) -> float:
    """Upper bound on the step-3 cost of the signed variable-length coding."""
    _check_r(d, r)
    return dz.varlen_cost_bound(d, r)


def cost_bounds(d: int, r: float) -> tuple[float, float]:
    """Lower bound and achievable total cost for schemes that send a net index."""
    eps = r * math.sqrt(d - 1)
    _check_eps(eps)
    base = math.log2(d * d * (d - 1))
    lower = base + (2 * d - 2) * math.log2(1 / eps)
    upper = base + (2 * d - 2) * math.log2(2 / eps)
    return lower, upper


def full_volume(d: int) -> float:
    """Surface measure of the unit sphere in C^d."""
    return 2 * math.pi**d / math.factorial(d - 1)


def cap_volume(d: int, eps: float) -> float:
    """Measure of the states with fidelity at least ``1 - eps^2`` to a fixed state."""
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got {d}")
    _check_eps(eps)
    return full_volume(d) * eps ** (2 * d - 2)


def net_size_bounds(d: int, eps: float) -> tuple[float, float]:
    _check_eps(eps)
    return (1 / eps) ** (2 * d - 2), (2 / eps) ** (2 * d - 2)


def monte_carlo_cap_fraction(d: int, eps: float, n_samples: int, seed: int, batch: int = 250_000) -> float:
    """Fraction of Haar-random states with fidelity at least ``1 - eps^2`` to ``|0>``."""
    if n_samples < 10_000:
        raise ValueError("need at least 10^4 samples")
    rng = np.random.default_rng(seed)
    hits = 0
    left = n_samples
    while left:
        n = min(batch, left)
        v = haar_vectors(d, n, rng)
        hits += int(np.count_nonzero(np.abs(v[:, 0]) ** 2 >= 1 - eps * eps))
        left -= n
    return hits / n_samples


def _orthonormal_pair(d: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    beta = haar_vectors(d, 1, rng)[0]
    perp = haar_vectors(d, 1, rng)[0]
    perp = perp - np.vdot(beta, perp) * beta
    return beta, perp / np.linalg.norm(perp)


def extremal_pair(eps: float, d: int = 2, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Target and unnormalized approximation at the tight corner of the distance bound.

    The approximation is ``a beta + b beta_perp`` with ``a = 1 - eps^2`` and
    ``|b|^2 = eps^2 - eps^4``, which sits at distance exactly ``eps``.
    """
    beta, perp = _orthonormal_pair(d, np.random.default_rng(seed))
    a = 1 - eps * eps
    b = math.sqrt(eps * eps - eps**4)
    return beta, a * beta + b * perp


def lemma_margin(eps: float, trials: int, seed: int, d: int = 2) -> float:
    """Smallest ``fidelity - (1 - eps^2)`` over sampled pairs within distance ``eps``.

    Coefficients ``(a - 1, b)`` are drawn uniformly from the 4-ball of radius
    ``eps``; a quarter of the trials are placed on the shell
    ``|b|^2 = eps^2 - eps^4`` with ``|1 - a|^2 = eps^4`` and random phases.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    rng = np.random.default_rng(seed)
    beta, perp = _orthonormal_pair(d, rng)
    n_shell = trials // 4
    n_ball = trials - n_shell

    g = rng.standard_normal((n_ball, 4))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    g *= eps * rng.random(n_ball)[:, None] ** 0.25
    a = 1 + g[:, 0] + 1j * g[:, 1]
    b = g[:, 2] + 1j * g[:, 3]

    th = rng.uniform(-np.pi, np.pi, (2, n_shell))
    a_shell = 1 - eps * eps * np.exp(1j * th[0])
    b_shell = math.sqrt(eps * eps - eps**4) * np.exp(1j * th[1])
    a = np.concatenate([a, a_shell])
    b = np.concatenate([b, b_shell])

    approx = a[:, None] * beta[None, :] + b[:, None] * perp[None, :]
    dist = np.linalg.norm(beta[None, :] - approx, axis=1)
    inside = dist <= eps * (1 + 1e-12)
    normed = approx / np.linalg.norm(approx, axis=1, keepdims=True)
    fid = np.abs(normed @ beta.conj()) ** 2
    return float(np.min(fid[inside] - (1 - eps * eps)))


def distance_fidelity_lemma_check(eps: float, trials: int, seed: int, d: int = 2) -> bool:
    return lemma_margin(eps, trials, seed, d) >= -ATOL


@dataclass(frozen=True)
class CostCurvePoint:
    alpha0_sq: float
    r: float
    entanglement: float
    cost_main: float
    cost_real_beta0: float
    cost_varlen_bound: float
    cost_upper: float
    cost_lower: float
    D: int


def figure1_dataset(d: int = 2, n_points: int = 200, delta: float = 1e-4) -> list[CostCurvePoint]:
    """Total-cost curves against entanglement for a resource ``(a0, r, ..., r)``.

    ``alpha_0^2`` sweeps from ``1/d`` to ``1 - delta``; the other ``d - 1``
    coefficients share the remaining weight, so ``r^2 = (1 - alpha_0^2)/(d - 1)``.
    Every column is a total over all three steps.
    """
    if n_points < 2:
        raise ValueError("need at least two sweep points")
    points = []
    for a0sq in np.linspace(1 / d, 1 - delta, n_points):
        a0sq = float(a0sq)
        r = math.sqrt((1 - a0sq) / (d - 1))
        coeffs = np.array([math.sqrt(a0sq)] + [r] * (d - 1))
        lower, upper = cost_bounds(d, r)
        points.append(
            CostCurvePoint(
                alpha0_sq=a0sq,
                r=r,
                entanglement=entanglement_entropy(coeffs),
                cost_main=cost_main(d, r),
                cost_real_beta0=cost_real_beta0(d, r),
                cost_varlen_bound=steps12_bits(d) + cost_varlen_bound(d, r),
                cost_upper=upper,
                cost_lower=lower,
                D=dz.choose_D(d, r, "plain"),
            )
        )
    return points


def write_csv(points, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for p in points:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in astuple(p)])


def to_csv(points) -> str:
    buf = io.StringIO()
    write_csv(points, buf)
    return buf.getvalue()
