import math

import numpy as np
import pytest

from rfagree.geometry import distance, random_direction, random_frame, to_global
from rfagree.netsim import (
    DIRECTION_EXCHANGE,
    FLAG_EXCHANGE,
    AuthenticationError,
    RoundEngine,
    RoundStep,
    broadcast_slots,
    deliver_quantum,
    exchange_slots,
    substream,
)
from rfagree.quantum_link import ChannelParams, QuantumMessage, ted_receive
from rfagree.rf_protocols import ProtocolParams
from rfagree.adversaries import Rusher, make_adversary

from helpers import transcript_signature


def make_engine(m=4, n=1000, epsilon=0.0, seed=5, trial=0):
    rng = np.random.default_rng(seed)
    frames = [random_frame(rng) for _ in range(m)]
    engine = RoundEngine(
        m=m,
        channel=ChannelParams(epsilon=epsilon, n=n),
        frames=frames,
        master_seed=seed,
        trial=trial,
    )
    return engine, frames


class NullAdversary:
    faulty_set = frozenset()

    def emit(self, view, slots):
        return {}


def all_honest_direction_round(engine, directions):
    m = engine.m
    step = RoundStep(DIRECTION_EXCHANGE, 0, 0, None, exchange_slots(m))
    payloads = {}
    for i in range(m):
        msg = QuantumMessage.uniform(directions[i], engine.channel.n)
        for r in range(m):
            if r != i:
                payloads[(i, r)] = msg
    return engine.run_round(step, payloads, frozenset(), NullAdversary())


def test_slot_completeness_and_counts():
    engine, _ = make_engine(m=4)
    rng = np.random.default_rng(1)
    directions = [random_direction(rng) for _ in range(4)]
    deliveries = all_honest_direction_round(engine, directions)
    assert len(deliveries) == 12  # m(m-1) slots
    assert len(engine.transcript) == 12
    slots = {(e.sender, e.receiver) for e in engine.transcript}
    assert slots == set(exchange_slots(4))
    assert all(e.tally is not None for e in engine.transcript)


def test_determinism_bit_identical_transcripts():
    rng = np.random.default_rng(9)
    directions = [random_direction(rng) for _ in range(4)]
    engine1, _ = make_engine(seed=7)
    engine2, _ = make_engine(seed=7)
    all_honest_direction_round(engine1, directions)
    all_honest_direction_round(engine2, directions)
    assert transcript_signature(engine1.transcript) == transcript_signature(engine2.transcript)


def test_substream_independent_of_construction_order():
    a = substream(1, 2, 3, 4, 5).integers(0, 2**62)
    substream(9, 9, 9, 9, 9).integers(0, 2**62)  # interleaved unrelated draw
    b = substream(1, 2, 3, 4, 5).integers(0, 2**62)
    assert a == b


def test_authentication_rejects_forged_sender():
    engine, _ = make_engine(m=4)
    params = ProtocolParams(4, 1, 0.05, engine.channel)

    class Forger(Rusher):
        def emit(self, view, slots):
            # Try to speak for honest node 0.
            return {(0, 1): 1}

    forger = Forger([3], params)
    step = RoundStep(FLAG_EXCHANGE, 0, 0, None, exchange_slots(4))
    payloads = {(i, r): 1 for i in range(3) for r in range(4) if r != i}
    with pytest.raises(AuthenticationError):
        engine.run_round(step, payloads, forger.faulty_set, forger)


def test_rushing_adversary_sees_current_round():
    # A zero-shift rusher echoes the target's current-round direction
    # exactly; only a rushing adversary can do that.
    engine, _ = make_engine(m=4)
    params = ProtocolParams(4, 1, 0.05, engine.channel)
    rusher = make_adversary("rusher", [3], params, shift=0.0, target=1)
    rng = np.random.default_rng(21)
    directions = [random_direction(rng) for _ in range(3)]
    step = RoundStep(DIRECTION_EXCHANGE, 0, 0, None, exchange_slots(4))
    payloads = {}
    for i in range(3):
        msg = QuantumMessage.uniform(directions[i], engine.channel.n)
        for r in range(4):
            if r != i:
                payloads[(i, r)] = msg
    engine.run_round(step, payloads, rusher.faulty_set, rusher)
    echoes = [e for e in engine.transcript if e.sender == 3]
    assert len(echoes) == 3
    for e in echoes:
        assert np.array_equal(e.payload.segments[0][0], directions[1])


def test_deliver_quantum_accurate_at_large_n():
    rng = np.random.default_rng(2)
    sender_frame = random_frame(rng)
    receiver_frame = random_frame(rng)
    local = random_direction(rng)
    params = ChannelParams(epsilon=0.0, n=10**6)
    tally = deliver_quantum(
        QuantumMessage.uniform(local, params.n),
        sender_frame,
        receiver_frame,
        params,
        substream(0, 0, 1, 0, 1),
    )
    estimate_local, degenerate = ted_receive(tally)
    assert not degenerate
    sent_global = to_global(local, sender_frame)
    estimate_global = to_global(estimate_local, receiver_frame)
    assert distance(sent_global, estimate_global) < 0.01


def test_deliver_quantum_malformed_becomes_absent():
    rng = np.random.default_rng(4)
    frame = random_frame(rng)
    params = ChannelParams(epsilon=0.0, n=100)
    bad = QuantumMessage(((np.array([0.0, 0.0, 1.0]), 5),))  # wrong count
    assert deliver_quantum(bad, frame, frame, params, substream(0, 0, 1, 0, 1)) is None
    too_long = QuantumMessage(((np.array([0.0, 0.0, 1.5]), 300),))
    assert deliver_quantum(too_long, frame, frame, params, substream(0, 0, 1, 0, 1)) is None


def test_full_noise_gives_unbiased_coin():
    # epsilon = 1: tallies are Binomial(n, 1/2) regardless of the payload.
    n = 400
    runs = 2000
    params = ChannelParams(epsilon=1.0, n=n)
    rng = np.random.default_rng(6)
    frame = random_frame(rng)
    msg = QuantumMessage.uniform([0.0, 0.0, 1.0], n)
    ks = []
    for k in range(runs):
        tally = deliver_quantum(msg, np.eye(3), frame, params, substream(0, 1, 2, 0, k))
        ks.append(tally.k_z)
    ks = np.array(ks)
    mean_sigma = math.sqrt(n / 4.0 / runs)
    assert abs(ks.mean() - n / 2.0) < 3.0 * mean_sigma
    var_sigma = (n / 4.0) * math.sqrt(2.0 / (runs - 1))
    assert abs(ks.var(ddof=1) - n / 4.0) < 3.0 * var_sigma


def test_absent_payload_recorded_and_none_delivered():
    engine, _ = make_engine(m=4)
    step = RoundStep(FLAG_EXCHANGE, 0, 0, None, broadcast_slots(4, 0))
    payloads = {slot: None for slot in step.slots}
    deliveries = engine.run_round(step, payloads, frozenset(), NullAdversary())
    assert set(deliveries.values()) == {None}
    assert all(e.kind == "absent" for e in engine.transcript)
