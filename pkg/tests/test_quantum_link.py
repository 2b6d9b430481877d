import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rfagree.geometry import distance, random_direction, random_frame, to_global
from rfagree.netsim import substream
from rfagree.quantum_link import (
    SENTINEL,
    ChannelParams,
    MeasurementTally,
    QuantumMessage,
    depolarize,
    measure_batch,
    outcome_probability,
    required_qubits,
    ted_accuracy_bound,
    ted_receive,
    ted_success_bound,
)

from helpers import octahedral_rotations


def test_depolarize_noiseless_identity():
    r = np.array([0.1, -0.2, 0.9])
    assert np.array_equal(depolarize(r, 0.0), r)


def test_depolarize_fully_mixed():
    assert np.array_equal(depolarize([0.0, 0.3, -0.9], 1.0), np.zeros(3))


def test_depolarize_shrinks_bloch_vector():
    assert np.allclose(depolarize([0.0, 0.0, 1.0], 0.1), [0.0, 0.0, 0.9])


def test_outcome_probability_aligned():
    axis = np.array([0.0, 0.0, 1.0])
    assert outcome_probability(axis, axis) == pytest.approx(1.0)


def test_outcome_probability_maximally_mixed():
    assert outcome_probability(np.zeros(3), [0.0, 0.0, 1.0]) == pytest.approx(0.5)


def test_outcome_probability_orthogonal():
    assert outcome_probability([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]) == pytest.approx(0.5)


def test_measure_batch_aligned_axis_is_deterministic():
    n = 500
    params = ChannelParams(epsilon=0.0, n=n)
    msg = QuantumMessage.uniform([0.0, 0.0, 1.0], n)
    rng = np.random.default_rng(0)
    for _ in range(20):
        tally = measure_batch(msg, np.eye(3), params, rng)
        assert tally.k_z == n


def test_measure_batch_orthogonal_axis_moments():
    n = 64
    runs = 10**4
    params = ChannelParams(epsilon=0.0, n=n)
    msg = QuantumMessage.uniform([0.0, 0.0, 1.0], n)
    rng = np.random.default_rng(11)
    ks = np.array([measure_batch(msg, np.eye(3), params, rng).k_x for _ in range(runs)])
    # Binomial(n, 1/2): mean n/2, variance n/4; allow 3 sigma on both.
    mean_sigma = math.sqrt(n / 4.0 / runs)
    assert abs(ks.mean() - n / 2.0) < 3.0 * mean_sigma
    var_sigma = (n / 4.0) * math.sqrt(2.0 / (runs - 1))
    assert abs(ks.var(ddof=1) - n / 4.0) < 3.0 * var_sigma


def test_measure_batch_thirds_partition_two_segments():
    # Segments (+z, 3n/2), (-z, 3n/2): the z third is fed only by the -z
    # segment, so its +1 count is binomial with probability 0, i.e. always 0.
    n = 40
    params = ChannelParams(epsilon=0.0, n=n)
    msg = QuantumMessage(
        (
            (np.array([0.0, 0.0, 1.0]), 3 * n // 2),
            (np.array([0.0, 0.0, -1.0]), 3 * n // 2),
        )
    )
    rng = np.random.default_rng(3)
    for _ in range(50):
        tally = measure_batch(msg, np.eye(3), params, rng)
        assert tally.k_z == 0


def test_measure_batch_rejects_count_mismatch():
    params = ChannelParams(epsilon=0.0, n=10)
    bad = QuantumMessage(((np.array([0.0, 0.0, 1.0]), 29),))
    with pytest.raises(ValueError):
        measure_batch(bad, np.eye(3), params, np.random.default_rng(0))


def test_measure_batch_frame_covariance_bit_identical():
    # Rotating sender direction and receiver frame together by an exactly
    # representable rotation leaves tallies bit-identical under common
    # random numbers.
    n = 1000
    params = ChannelParams(epsilon=0.2, n=n)
    base_rng = np.random.default_rng(17)
    direction = random_direction(base_rng)
    frame = random_frame(base_rng)
    for idx, rot in enumerate(octahedral_rotations()):
        t1 = measure_batch(
            QuantumMessage.uniform(direction, n), frame, params, substream(1, 2, 3, idx, 0)
        )
        t2 = measure_batch(
            QuantumMessage.uniform(rot @ direction, n), rot @ frame, params, substream(1, 2, 3, idx, 0)
        )
        assert t1 == t2


def test_ted_receive_axis_tally():
    n = 10
    tally = MeasurementTally(n, n // 2, n // 2, n)
    v, degenerate = ted_receive(tally)
    assert not degenerate
    assert np.allclose(v, [1.0, 0.0, 0.0])


def test_ted_receive_degenerate_sentinel():
    n = 8
    v, degenerate = ted_receive(MeasurementTally(n // 2, n // 2, n // 2, n))
    assert degenerate
    assert np.array_equal(v, SENTINEL)


def test_ted_receive_hand_computed():
    v, degenerate = ted_receive(MeasurementTally(3, 3, 2, 4))
    assert not degenerate
    assert np.allclose(v, [1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0), 0.0])


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=1, max_value=200), st.data())
def test_ted_receive_unit_norm_or_flagged(n, data):
    k = [data.draw(st.integers(min_value=0, max_value=n)) for _ in range(3)]
    v, degenerate = ted_receive(MeasurementTally(k[0], k[1], k[2], n))
    if degenerate:
        assert np.array_equal(v, SENTINEL)
    else:
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


def test_accuracy_bound_noise_free():
    assert ted_accuracy_bound(0.07, 0.0) == pytest.approx(0.07)


def test_accuracy_bound_paper_formula():
    assert ted_accuracy_bound(0.05, 0.1) == pytest.approx(0.295)


def test_accuracy_bound_vacuous_at_full_noise():
    assert ted_accuracy_bound(0.02, 1.0) == pytest.approx(2.5)


def test_success_bound_frozen_value():
    # Independent evaluation: exponent 2 * 1e4 * 0.05^2 / 25 = 2.
    expected = (1.0 - 2.0 * math.exp(-2.0)) ** 3
    assert expected == pytest.approx(0.38794594983180314, abs=1e-15)
    assert ted_success_bound(10**4, 0.05) == pytest.approx(expected, abs=1e-15)


def test_success_bound_clamps_to_zero():
    assert ted_success_bound(1, 1e-6) == 0.0


def test_success_bound_limit_one():
    assert ted_success_bound(10**12, 0.05) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=1, max_value=10**6), st.floats(min_value=1e-3, max_value=0.5))
def test_success_bound_monotone_in_n(n, delta):
    assert ted_success_bound(n + 1, delta) >= ted_success_bound(n, delta)


def test_required_qubits_paper_worked_example():
    delta = 0.02 / 30.0
    q_link = 0.99 ** (1.0 / 100.0)
    n = required_qubits(delta, q_link)
    assert 3.05e8 <= n <= 3.15e8


def test_required_qubits_against_binary_search():
    def search(delta, q):
        lo, hi = 1, 1
        while ted_success_bound(hi, delta) < q:
            hi *= 2
        while lo < hi:
            mid = (lo + hi) // 2
            if ted_success_bound(mid, delta) >= q:
                hi = mid
            else:
                lo = mid + 1
        return lo

    assert required_qubits(0.05, 0.89) == search(0.05, 0.89) == 19804


@settings(max_examples=60, deadline=None)
@given(
    st.floats(min_value=5e-3, max_value=0.5),
    st.floats(min_value=0.01, max_value=0.999),
)
def test_required_qubits_minimality(delta, q_target):
    n = required_qubits(delta, q_target)
    assert ted_success_bound(n, delta) >= q_target
    if n > 1:
        assert ted_success_bound(n - 1, delta) < q_target


def test_empirical_accuracy_beats_bound_quick():
    # Small-scale version of the bound-dominance check (the acceptance
    # suite runs the full-size one).
    n, delta = 2000, 0.05
    params = ChannelParams(epsilon=0.0, n=n)
    trials = 2000
    bound = ted_success_bound(n, delta)
    rng = np.random.default_rng(23)
    hits = 0
    for _ in range(trials):
        direction = random_direction(rng)
        frame = random_frame(rng)
        tally = measure_batch(QuantumMessage.uniform(direction, n), frame, params, rng)
        estimate_local, _ = ted_receive(tally)
        if distance(to_global(estimate_local, frame), direction) <= delta:
            hits += 1
    sigma = math.sqrt(bound * (1.0 - bound) / trials)
    assert hits / trials >= bound - 3.0 * sigma


def test_channel_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(epsilon=-0.1, n=10)
    with pytest.raises(ValueError):
        ChannelParams(epsilon=1.5, n=10)
    with pytest.raises(ValueError):
        ChannelParams(epsilon=0.0, n=0)


def test_quantum_message_validation():
    msg = QuantumMessage(((np.array([0.0, 0.0, 2.0]), 30),))
    with pytest.raises(ValueError):
        msg.validate(10)
    with pytest.raises(ValueError):
        QuantumMessage(()).validate(10)
    QuantumMessage.uniform([0.0, 0.0, 1.0], 10).validate(10)
