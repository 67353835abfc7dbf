import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exactrsp import transformer as tf
from exactrsp.statekit import ATOL, BipartiteState, SchmidtVector, haar_vectors, random_schmidt


def _inputs(d, seed):
    rng = np.random.default_rng(seed)
    alpha = random_schmidt(d, rng)
    need = 1 - alpha.r**2 * (d - 1)
    psi0sq = rng.uniform(need, 1.0)
    rest = rng.dirichlet(np.ones(d - 1)) * (1 - psi0sq)
    return alpha, psi0sq, np.sqrt(np.concatenate(([psi0sq], rest)))


def test_intermediate_schmidt_flat_tail():
    phi = tf.intermediate_schmidt(0.7, 4)
    assert phi.coeffs[0] == pytest.approx(math.sqrt(0.7))
    assert np.allclose(phi.coeffs[1:], math.sqrt(0.1))


@pytest.mark.parametrize("bad", [0.0, 1.0, 1.2])
def test_intermediate_schmidt_rejects(bad):
    with pytest.raises(ValueError):
        tf.intermediate_schmidt(bad, 3)


def test_stage_one_probabilities_hand_values():
    # alpha = (0.8, 0.6), phi^2 = (0.9, 0.1): p_k = (alpha_k^2 - 0.1) / 0.8.
    ops = tf.build_stage_one(SchmidtVector(np.array([0.8, 0.6])), tf.intermediate_schmidt(0.9, 2))
    assert np.allclose(ops.probs, [0.675, 0.325], atol=1e-15)


def test_stage_one_branch_probabilities_match_law():
    alpha, psi0sq, _ = _inputs(5, 2)
    phi = tf.intermediate_schmidt(psi0sq, 5)
    ops = tf.build_stage_one(alpha, phi)
    state = BipartiteState.from_schmidt(alpha)
    for k in range(5):
        res = tf.apply_stage_one(state, ops, k)
        assert res.prob == pytest.approx(ops.probs[k], abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31))
def test_completeness_and_stage_outputs(d, seed):
    alpha, psi0sq, mags = _inputs(d, seed)
    phi = tf.intermediate_schmidt(psi0sq, d)
    one = tf.build_stage_one(alpha, phi)
    two = tf.build_stage_two(mags, phi)
    assert tf.completeness_defect(one.ops) <= ATOL
    assert tf.completeness_defect(two.ops) <= ATOL
    state = BipartiteState.from_schmidt(alpha)
    k = int(np.argmax(one.probs))
    res = tf.apply_stage_one(state, one, k)
    mid = res.post.permute(res.correction)
    assert np.max(np.abs(mid.joint - np.diag(phi.coeffs))) <= 1e-10
    for k2 in range(1, d):
        out = tf.apply_stage_two(mid, two, k2)
        assert out.prob == pytest.approx(1 / (d - 1), abs=1e-10)
        fin = out.post.permute(out.correction)
        assert np.max(np.abs(fin.joint - np.diag(mags))) <= 1e-10


def test_stage_one_rejects_unreachable_target():
    alpha = SchmidtVector(np.array([0.9, math.sqrt(1 - 0.81)]))
    with pytest.raises(tf.MajorizationViolation):
        tf.build_stage_one(alpha, tf.intermediate_schmidt(0.5, 2))


def test_stage_one_degenerate_case_warns():
    alpha = SchmidtVector.uniform(3)
    with pytest.warns(tf.DegenerateTransformation):
        ops = tf.build_stage_one(alpha, SchmidtVector.uniform(3))
    assert ops.degenerate
    assert tf.completeness_defect(ops.ops) == 0.0


def test_stage_one_rejects_nonflat_phi():
    with pytest.raises(ValueError):
        tf.build_stage_one(SchmidtVector.uniform(3), SchmidtVector(np.sqrt([0.6, 0.3, 0.1])))


def test_stage_two_phi_mismatch():
    with pytest.raises(ValueError):
        tf.build_stage_two(np.sqrt([0.8, 0.1, 0.1]), tf.intermediate_schmidt(0.7, 3))


def test_cyclic_add_table():
    # Labels 1..3 with d = 4.
    assert [[tf.cyclic_add(l, k, 4) for l in (1, 2, 3)] for k in (1, 2, 3)] == [
        [2, 3, 1], [3, 1, 2], [1, 2, 3]]


def test_outcome_ranges():
    alpha, psi0sq, mags = _inputs(3, 0)
    phi = tf.intermediate_schmidt(psi0sq, 3)
    state = BipartiteState.from_schmidt(phi)
    with pytest.raises(ValueError):
        tf.apply_stage_two(state, tf.build_stage_two(mags, phi), 0)
    with pytest.raises(ValueError):
        tf.apply_stage_one(BipartiteState.from_schmidt(alpha), tf.build_stage_one(alpha, phi), 3)


def test_majorizes_hand_examples():
    assert tf.majorizes(np.sqrt([0.5, 0.3, 0.2]), np.sqrt([0.55, 0.45, 0.0]))
    assert not tf.majorizes(np.sqrt([0.55, 0.45, 0.0]), np.sqrt([0.5, 0.3, 0.2]))
    assert tf.majorizes(np.sqrt([0.3, 0.7]), np.sqrt([0.7, 0.3]))


def test_sufficiency_converse_fails_d3():
    alpha = np.sqrt([0.5, 0.3, 0.2])
    psi = np.sqrt([0.55, 0.45, 0.0])
    assert tf.majorizes(alpha, psi)
    assert not tf.check_majorization_sufficiency(0.55, alpha)


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31))
def test_sufficiency_implies_majorization(d, seed):
    alpha, psi0sq, mags = _inputs(d, seed)
    assert tf.check_majorization_sufficiency(psi0sq, alpha)
    assert tf.majorizes(alpha.coeffs, mags)
