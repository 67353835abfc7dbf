"""Entanglement transformation by local measurement on the preparing side.

The resource ``sum_k alpha_k |kk>`` is taken to ``sum_k psi_k |kk>`` in two
stages. Stage one reaches an intermediate state whose coefficients are
``(phi_0, phi, ..., phi)`` with ``phi_0 = psi_0``; stage two spreads the
remaining weight into the pattern ``psi_1 .. psi_{d-1}``. After each outcome
both parties relabel their basis states, the receiver on the strength of the
communicated outcome.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .statekit import ATOL, BipartiteState, SchmidtVector


class MajorizationViolation(ValueError):
    """The target coefficients cannot be reached from the resource."""


class DegenerateTransformation(UserWarning):
    """Stage one is vacuous because the resource already equals the intermediate state."""


@dataclass(frozen=True, eq=False)
class StageOneOps:
    ops: tuple[np.ndarray, ...]
    probs: np.ndarray
    degenerate: bool = False

    @property
    def d(self) -> int:
        return len(self.ops)


@dataclass(frozen=True, eq=False)
class StageTwoOps:
    # ops[j] is the operator for outcome k = j + 1.
    ops: tuple[np.ndarray, ...]

    @property
    def d(self) -> int:
        return len(self.ops) + 1


class StageResult(NamedTuple):
    post: BipartiteState
    prob: float
    correction: np.ndarray


def completeness_defect(ops) -> float:
    """Max-norm distance of ``sum_k M_k^dag M_k`` from the identity."""
    total = sum(op.conj().T @ op for op in ops)
    return float(np.max(np.abs(total - np.eye(total.shape[0]))))


def intermediate_schmidt(psi0sq: float, d: int, tail: float | None = None) -> SchmidtVector:
    """Coefficients ``(psi_0, phi, ..., phi)`` of the intermediate state.

    ``phi = sqrt(tail / (d - 1))`` where ``tail = 1 - psi0sq`` unless given
    explicitly; pass the weight outside ``|0>`` directly when ``psi0sq`` is so
    close to 1 that the subtraction would cancel.
    """
    if tail is None:
        tail = 1.0 - psi0sq
    if not 0 < psi0sq < 1 or tail <= 0:
        raise ValueError(f"psi0sq must lie strictly between 0 and 1, got {psi0sq}")
    phi = math.sqrt(tail / (d - 1))
    return SchmidtVector(np.array([math.sqrt(psi0sq)] + [phi] * (d - 1)))


def _coeffs(v) -> np.ndarray:
    return v.coeffs if isinstance(v, SchmidtVector) else np.asarray(v, dtype=float)


def build_stage_one(alpha, phi) -> StageOneOps:
    """Measurement operators taking ``alpha`` to ``phi``.

    ``phi`` may be the product vector ``(1, 0, ..., 0)``, in which case the
    operators reduce to a computational-basis measurement.
    """
    a = _coeffs(alpha)
    f = _coeffs(phi)
    d = a.shape[0]
    if f.shape[0] != d:
        raise ValueError("alpha and phi have different dimensions")
    if np.any(a <= 0):
        raise ValueError("resource coefficients must be positive")
    if np.ptp(f[1:]) > ATOL:
        raise ValueError("phi must be flat beyond its first coefficient")
    f0sq, fsq = f[0] ** 2, f[1:] ** 2
    gap = f0sq - fsq
    deficit = a * a - np.concatenate(([fsq[0]], fsq))
    if np.all(np.abs(gap) <= ATOL):
        if np.any(np.abs(a - f) > 1e-6):
            raise MajorizationViolation("phi is uniform but differs from alpha")
        warnings.warn(
            "intermediate state equals the resource; stage one reduces to the identity",
            DegenerateTransformation,
            stacklevel=2,
        )
        ops = (np.eye(d, dtype=complex),) + tuple(np.zeros((d, d), dtype=complex) for _ in range(d - 1))
        probs = np.zeros(d)
        probs[0] = 1.0
        return StageOneOps(ops, probs, degenerate=True)
    if np.any(gap <= 0):
        raise MajorizationViolation("phi_0 must exceed every other intermediate coefficient")
    if np.any(deficit < -ATOL):
        bad = [int(i) for i in np.flatnonzero(deficit < -ATOL)]
        raise MajorizationViolation(f"alpha_k^2 < phi_k^2 for k in {bad}")

    # Every p_k from the closed form; 1 - sum(p) loses accuracy when alpha_0 is small.
    probs = np.clip((a**2 - fsq[0]) / gap[0], 0.0, 1.0)
    if abs(probs.sum() - 1.0) > ATOL:
        raise MajorizationViolation(f"stage-one probabilities sum to {probs.sum()}")

    ops = []
    base = f / a
    for k in range(d):
        diag = base.copy()
        if k > 0:
            diag[0] = f[k] / a[0]
            diag[k] = f[0] / a[k]
        ops.append(np.diag(math.sqrt(probs[k]) * diag).astype(complex))
    return StageOneOps(tuple(ops), probs)


def swap_correction(k: int, d: int) -> np.ndarray:
    perm = np.arange(d)
    perm[0], perm[k] = k, 0
    return perm


def _measure(state: BipartiteState, op: np.ndarray) -> tuple[BipartiteState, float]:
    m = state.apply(op, "A")
    prob = float(np.sum(np.abs(m) ** 2))
    if prob <= 0:
        raise ValueError("outcome has zero probability")
    return BipartiteState(m / math.sqrt(prob)), prob


def apply_stage_one(state: BipartiteState, ops: StageOneOps, k: int) -> StageResult:
    if not 0 <= k < ops.d:
        raise ValueError(f"stage-one outcome must lie in 0..{ops.d - 1}, got {k}")
    post, prob = _measure(state, ops.ops[k])
    return StageResult(post, prob, swap_correction(k, ops.d))


def cyclic_add(l: int, k: int, d: int) -> int:
    """Addition modulo ``d - 1`` on the labels ``1 .. d-1``."""
    return 1 + (l + k - 1) % (d - 1)


def build_stage_two(psi_mags, phi) -> StageTwoOps:
    p = _coeffs(psi_mags)
    f = _coeffs(phi)
    d = p.shape[0]
    if abs(p[0] - f[0]) > ATOL:
        raise ValueError(f"phi_0 = {f[0]} does not match psi_0 = {p[0]}")
    ops = []
    for k in range(1, d):
        diag = np.empty(d)
        diag[0] = 1.0
        for l in range(1, d):
            # phi_l = 0 only on the product fast path, where every psi_l is 0 too.
            diag[l] = p[cyclic_add(l, k, d)] / f[l] if f[l] > 0 else 1.0
        ops.append(np.diag(diag / math.sqrt(d - 1)).astype(complex))
    return StageTwoOps(tuple(ops))


def cyclic_correction(k: int, d: int) -> np.ndarray:
    perm = np.arange(d)
    for l in range(1, d):
        perm[l] = cyclic_add(l, k, d)
    return perm


def apply_stage_two(state: BipartiteState, ops: StageTwoOps, k: int) -> StageResult:
    if not 1 <= k < ops.d:
        raise ValueError(f"stage-two outcome must lie in 1..{ops.d - 1}, got {k}")
    post, prob = _measure(state, ops.ops[k - 1])
    return StageResult(post, prob, cyclic_correction(k, ops.d))


def check_majorization_sufficiency(psi0sq: float, alpha) -> bool:
    a = _coeffs(alpha)
    d = a.shape[0]
    r = float(a.min())
    return psi0sq >= 1 - (d - 1) * r * r - ATOL


def majorizes(x, y, atol: float = ATOL) -> bool:
    """True iff the squares of ``x`` are majorized by the squares of ``y``."""
    xs = np.asarray(x, dtype=float) ** 2
    ys = np.asarray(y, dtype=float) ** 2
    if xs.shape != ys.shape:
        raise ValueError(f"length mismatch: {xs.shape[0]} vs {ys.shape[0]}")
    for v in (xs, ys):
        if abs(v.sum() - 1) > 1e-10:
            raise ValueError("squared entries must sum to 1")
    px = np.cumsum(np.sort(xs)[::-1])
    py = np.cumsum(np.sort(ys)[::-1])
    return bool(np.all(py >= px - atol))
