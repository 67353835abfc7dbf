import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exactrsp import discretizer as dz
from exactrsp.statekit import ATOL, fidelity, haar_vectors


def _oracle_index(x: Fraction, D: int) -> int:
    # Scan the subintervals [-1 + 2(n-1)/D, -1 + 2n/D), last one closed.
    for n in range(1, D + 1):
        hi = Fraction(-1) + Fraction(2 * n, D)
        if x < hi or n == D:
            return n
    raise AssertionError


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 40), st.fractions(min_value=-1, max_value=1, max_denominator=97))
def test_subinterval_index_matches_exact_oracle(D, x):
    xf = float(x)
    got = dz.subinterval_index(xf, D)
    want = _oracle_index(Fraction(xf), D)
    if got != want:
        # Only allowed when xf sits within a few ulps of the shared boundary.
        edge = -1 + 2 * min(got, want) / D
        assert abs(got - want) == 1 and abs(xf - edge) <= 4 * math.ulp(1.0)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 40), st.floats(-1, 1))
def test_midpoint_within_half_width(D, x):
    n = dz.subinterval_index(x, D)
    assert abs(dz.grid_value(n, D) - x) <= 1 / D + ATOL


def test_index_hand_values():
    assert [int(dz.subinterval_index(x, 4)) for x in (-1, -0.5, 0, 0.49, 0.5, 1)] == [1, 2, 3, 3, 4, 4]
    assert dz.grid_value(1, 4) == -0.75
    assert dz.grid_value(4, 4) == 0.75


def test_index_rejects_out_of_range():
    with pytest.raises(ValueError):
        dz.subinterval_index(1.1, 3)


def test_magnitude_grid_hand_values():
    assert [int(dz.magnitude_index(x, 4)) for x in (0, 0.24, 0.25, -0.3, 1)] == [1, 1, 2, 2, 4]
    assert dz.magnitude_value(1, 4) == 0.125


def test_digit_count_is_ceil_log2_n_minus_1():
    assert [dz.digit_count(n) for n in range(1, 10)] == [0, 1, 1, 2, 2, 3, 3, 3, 3]
    for n in range(3, 2000):
        assert dz.digit_count(n) == math.ceil(math.log2(n - 1))


def test_choose_D_hand_values():
    # ceil(sqrt(2d / (r^2 (d-1)))) etc., evaluated by hand.
    assert dz.choose_D(2, 1 / math.sqrt(2), "plain") == 3
    assert dz.choose_D(2, 0.6, "plain") == 4
    assert dz.choose_D(2, 1 / math.sqrt(2), "real_beta0") == 3
    assert dz.choose_D(2, 1 / math.sqrt(2), "signed_varlen") == 2
    assert dz.choose_D(3, 0.1, "plain") == 18


def test_choose_D_exact_integer_not_bumped():
    # sqrt(4 / (0.5 * 1)) with r^2 = 1/2 ... use r giving exactly 4: 2d/(r^2) = 16 -> r^2 = 1/4.
    assert dz.choose_D(2, 0.5, "plain") == 4


def test_choose_D_rejects_bad_inputs():
    with pytest.raises(ValueError):
        dz.choose_D(2, 0.8)
    with pytest.raises(ValueError):
        dz.choose_D(1, 0.5)
    with pytest.raises(ValueError):
        dz.choose_D(2, 0.5, "nope")


@pytest.mark.parametrize("variant", dz.VARIANTS)
@settings(max_examples=100, deadline=None)
@given(d=st.integers(2, 6), D=st.integers(2, 30), seed=st.integers(0, 2**31))
def test_decode_meets_guarantee(variant, d, D, seed):
    beta = haar_vectors(d, 1, np.random.default_rng(seed))[0]
    if variant != "plain":
        beta = dz.canonical_phase(beta).amps
    approx, normed = dz.decode(dz.encode(beta, D, variant))
    assert fidelity(beta, normed) >= dz.fidelity_guarantee(d, D, variant) - ATOL
    if variant == "plain":
        assert np.linalg.norm(beta - approx.amps) <= math.sqrt(2 * d) / D + ATOL


@pytest.mark.parametrize("variant", dz.VARIANTS)
def test_batch_matches_scalar(variant):
    rng = np.random.default_rng(3)
    betas = dz.canonical_phase_batch(haar_vectors(4, 50, rng))
    for D in (2, 5, 11):
        batch = dz.approximate_batch(betas, D, variant)
        for row, got in zip(betas, batch):
            approx, _ = dz.decode(dz.encode(row, D, variant))
            assert np.allclose(approx.amps, got, atol=0)


def test_phase_convention_enforced():
    with pytest.raises(dz.PhaseConventionError):
        dz.encode(np.array([0.6j, 0.8]), 4, "real_beta0")


def test_canonical_phase():
    s = dz.canonical_phase(np.array([0.6j, 0.8]))
    assert s.amps[0] == 0.6
    assert s.amps[1] == pytest.approx(-0.8j)


def test_gridcode_validation():
    with pytest.raises(ValueError):
        dz.GridCode(3, (1, 4), (1, 1))
    with pytest.raises(ValueError):
        dz.GridCode(3, (1, 2), (1, 1), "signed_varlen")
    with pytest.raises(ValueError):
        dz.GridCode(3, (1, 2), (1, 1), "plain", (0, 0, 0))


def test_gridcode_dict_roundtrip():
    code = dz.encode(dz.canonical_phase(haar_vectors(3, 1, np.random.default_rng(0))[0]).amps, 7, "signed_varlen")
    assert dz.GridCode.from_dict(code.to_dict()) == code


def test_transmitted_counts():
    b = dz.canonical_phase(haar_vectors(3, 1, np.random.default_rng(1))[0]).amps
    assert len(dz.encode(b, 5, "plain").transmitted_indices()) == 6
    assert len(dz.encode(b, 5, "real_beta0").transmitted_indices()) == 5
    assert len(dz.encode(b, 5, "signed_varlen").transmitted_indices()) == 5


def test_bit_cost_hand_values():
    b = np.array([0.6, 0.8])
    assert dz.bit_cost(dz.encode(b, 3, "plain")) == pytest.approx(4 * math.log2(3), abs=1e-12)
    assert dz.bit_cost(dz.encode(b, 3, "real_beta0")) == pytest.approx(3 * math.log2(3), abs=1e-12)
    # D' = 4: magnitudes 0.6 -> n=3, 0, 0.8 -> n=4 ; digits 1 + 0 + 2, length fields log2 2 = 1 each.
    code = dz.encode(b, 4, "signed_varlen")
    assert code.transmitted_indices() == [3, 4, 1]
    assert dz.bit_cost(code) == pytest.approx(3 + 3 * 1 + 3, abs=1e-12)


def test_varlen_bound_hand_value():
    # d=2, r=1/sqrt2: 3 * (0.5 + 0 + 2) = 7.5.
    assert dz.varlen_cost_bound(2, 1 / math.sqrt(2)) == pytest.approx(7.5, abs=1e-12)


def test_wire_layout_hand_example():
    code = dz.encode(np.array([0.6, -0.8]), 4, "signed_varlen")
    # Width is bit_length(digit_count(4)) = 2. Numbers: +n=3, -n=4, +n=1.
    assert dz.pack_signed_varlen(code) == "0" "01" "1" + "1" "10" "10" + "0" "00"


@settings(max_examples=300, deadline=None)
@given(d=st.integers(2, 7), Dp=st.integers(1, 70), seed=st.integers(0, 2**31))
def test_wire_roundtrip(d, Dp, seed):
    b = dz.canonical_phase(haar_vectors(d, 1, np.random.default_rng(seed))[0]).amps
    code = dz.encode(b, Dp, "signed_varlen")
    bits = dz.pack_signed_varlen(code)
    assert set(bits) <= {"0", "1"}
    assert dz.unpack_signed_varlen(bits, d, Dp) == code


def test_wire_rejects_truncated_and_padded():
    code = dz.encode(np.array([0.6, 0.8]), 9, "signed_varlen")
    bits = dz.pack_signed_varlen(code)
    with pytest.raises(ValueError):
        dz.unpack_signed_varlen(bits[:-1], 2, 9)
    with pytest.raises(ValueError):
        dz.unpack_signed_varlen(bits + "0", 2, 9)


def test_pack_requires_varlen():
    with pytest.raises(ValueError):
        dz.pack_signed_varlen(dz.encode(np.array([0.6, 0.8]), 4))
