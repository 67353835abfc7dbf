import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exactrsp.disentangler import (
    NotSchmidtDiagonal,
    PhasedTarget,
    build_projectors,
    chi_state,
    measure_and_correct,
    phase_correction,
    receiver_factor,
)
from exactrsp.statekit import ATOL, BipartiteState, PureState, SchmidtVector, fidelity, haar_vectors


def _target(d, seed):
    v = haar_vectors(d, 1, np.random.default_rng(seed))[0]
    return PhasedTarget(SchmidtVector(np.abs(v), allow_zero=True), np.angle(v)), v


def test_phases_wrapped_and_zeroed():
    t = PhasedTarget(SchmidtVector(np.array([1.0, 0.0]), allow_zero=True), np.array([3 * np.pi, 1.0]))
    assert t.phases[0] == pytest.approx(np.pi)
    assert t.phases[1] == 0.0


def test_chi_norm_and_range():
    assert chi_state(2, np.zeros(5), 5).norm == pytest.approx(np.sqrt(5))
    with pytest.raises(ValueError):
        chi_state(5, np.zeros(5), 5)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**31))
def test_projectors_resolve_identity(d, seed):
    proj = build_projectors(np.random.default_rng(seed).uniform(-np.pi, np.pi, d), d)
    assert np.max(np.abs(sum(proj) - np.eye(d))) <= ATOL
    for j, p in enumerate(proj):
        for k, q in enumerate(proj):
            assert np.max(np.abs(p @ q - (p if j == k else 0))) <= ATOL


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**31))
def test_every_outcome_gives_target(d, seed):
    target, v = _target(d, seed)
    state = BipartiteState.from_schmidt(target.mags.coeffs)
    for k in range(d):
        res = measure_and_correct(state, target, k)
        assert res.prob == pytest.approx(1 / d, abs=1e-12)
        assert fidelity(res.receiver_state, v) >= 1 - 1e-10


def test_rejects_non_diagonal_input():
    target, _ = _target(3, 1)
    with pytest.raises(NotSchmidtDiagonal):
        measure_and_correct(BipartiteState.from_schmidt(SchmidtVector.uniform(3)), target, 0)


def test_phase_correction_unitary():
    c = phase_correction(2, 5)
    assert np.allclose(c.conj().T @ c, np.eye(5))


def test_receiver_factor_rejects_entangled():
    with pytest.raises(ValueError):
        receiver_factor(BipartiteState.from_schmidt(SchmidtVector.uniform(2)))
    prod = np.outer([0.6, 0.8], [1, 1j]) / np.sqrt(2)
    assert fidelity(receiver_factor(BipartiteState(prod)), PureState(np.array([1, 1j]) / np.sqrt(2))) == pytest.approx(1)
