"""Disentangling measurement: the preparer projects onto a phase-twisted
Fourier basis, leaving the receiver with the local target up to a diagonal
phase it can undo once it learns the outcome."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .statekit import PIPELINE_ATOL, BipartiteState, PureState, SchmidtVector, UnnormalizedState


class NotSchmidtDiagonal(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PhasedTarget:
    """Local state ``sum_l mags[l] e^{i phases[l]} |l>``.

    Phases of zero-magnitude entries are forced to 0.
    """

    mags: SchmidtVector
    phases: np.ndarray

    def __post_init__(self):
        mags = self.mags
        if not isinstance(mags, SchmidtVector):
            mags = SchmidtVector(mags, allow_zero=True)
            object.__setattr__(self, "mags", mags)
        ph = np.asarray(self.phases, dtype=float).copy()
        if ph.shape != mags.coeffs.shape:
            raise ValueError("mags and phases have different lengths")
        if not np.all(np.isfinite(ph)):
            raise ValueError("phases must be finite")
        # Wrap into (-pi, pi].
        ph = np.pi - np.mod(np.pi - ph, 2 * np.pi)
        ph[mags.coeffs == 0] = 0.0
        ph.setflags(write=False)
        object.__setattr__(self, "phases", ph)

    @property
    def d(self) -> int:
        return self.mags.d

    def state(self) -> PureState:
        return PureState(self.mags.coeffs * np.exp(1j * self.phases))


class DisentangleResult(NamedTuple):
    receiver_state: PureState
    prob: float
    correction: np.ndarray


def chi_state(k: int, phases, d: int) -> UnnormalizedState:
    if not 0 <= k < d:
        raise ValueError(f"outcome must lie in 0..{d - 1}, got {k}")
    ph = np.asarray(phases, dtype=float)
    l = np.arange(d)
    return UnnormalizedState(np.exp(1j * (2 * np.pi * k * l / d - ph)))


def build_projectors(phases, d: int) -> list[np.ndarray]:
    out = []
    for k in range(d):
        chi = chi_state(k, phases, d).amps
        out.append(np.outer(chi, chi.conj()) / d)
    return out


def phase_correction(k: int, d: int) -> np.ndarray:
    """Receiver's diagonal unitary ``sum_l e^{2 pi i k l / d} |l><l|``."""
    return np.diag(np.exp(2j * np.pi * k * np.arange(d) / d))


def receiver_factor(state: BipartiteState, atol: float = PIPELINE_ATOL) -> PureState:
    """Receiver's local state when the joint state is a product.

    Raises ``ValueError`` if the joint state is entangled beyond ``atol``.
    """
    _, s, vh = np.linalg.svd(state.joint)
    residual = float(np.linalg.norm(s[1:]))
    if residual > atol:
        raise ValueError(f"joint state is not a product state (residual {residual:.3g})")
    v = vh[0]
    return PureState(v / np.linalg.norm(v))


def measure_and_correct(state: BipartiteState, target: PhasedTarget, k: int) -> DisentangleResult:
    d = state.d
    expected = np.diag(target.mags.coeffs.astype(complex))
    mismatch = float(np.max(np.abs(state.joint - expected)))
    if mismatch > PIPELINE_ATOL:
        raise NotSchmidtDiagonal(
            f"state is not Schmidt-diagonal in the target magnitudes (deviation {mismatch:.3g})"
        )
    proj = build_projectors(target.phases, d)[k]
    m = state.apply(proj, "A")
    prob = float(np.sum(np.abs(m) ** 2))
    corr = phase_correction(k, d)
    post = BipartiteState(m / math.sqrt(prob))
    corrected = BipartiteState(post.apply(corr, "B"))
    return DisentangleResult(receiver_factor(corrected), prob, corr)
