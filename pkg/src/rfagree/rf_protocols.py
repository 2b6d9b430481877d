"""Byzantine-tolerant agreement on a direction, built in four layers.

Each of t+1 phases is led by a rotating king (node ids 0..t), so at least
one phase has a correct king.  Within a phase:

1. the king picks a direction and sends it to everyone over the quantum
   estimation link; node i's estimate w_i is its phase input;
2. weak consensus: each node sends w_i to all others, keeps the set S_i of
   peers whose estimate landed within 3*delta of its own, and outputs w_i if
   |S_i| >= m - t, otherwise bottom;
3. graded consensus: nodes exchange flags (did weak consensus produce a
   direction?), cluster the flagged estimates with a 10*delta radius, adopt
   the largest cluster's direction if their own weak output was bottom, and
   grade 1 exactly when that cluster has at least m - t members;
4. the grades are fed to classical bit consensus; on a 1 decision everyone
   outputs its graded direction, on 0 everyone outputs bottom.

A node records the first non-bottom phase output as its final answer and
keeps participating normally in the remaining phases (each phase starts
afresh from the new king's broadcast), which keeps later phases well formed.
Since the accept/reject bit comes out of classical consensus, all correct
nodes accept in the same phase.

Every threshold is a multiple of the per-link estimation accuracy; with
channel noise epsilon the effective accuracy (1-eps)*delta + 5*eps/2 is
substituted throughout, since the stack only ever relies on "the link
returns a delta-approximation".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classical_consensus import PhaseKingNode, coerce_bit, rounds_for
from .geometry import distance, random_direction
from .netsim import (
    CLASSICAL_ROUND,
    DIRECTION_EXCHANGE,
    FLAG_EXCHANGE,
    KING_BROADCAST,
    RoundEngine,
    RoundStep,
    broadcast_slots,
    exchange_slots,
)
from .quantum_link import (
    SENTINEL,
    ChannelParams,
    QuantumMessage,
    ted_accuracy_bound,
    ted_receive,
)


@dataclass(frozen=True)
class ProtocolParams:
    """Network size, fault bound, per-link accuracy, and channel settings."""

    m: int
    t: int
    delta: float
    channel: ChannelParams

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"need at least 2 nodes, got m={self.m}")
        if self.t < 0 or 3 * self.t >= self.m:
            raise ValueError(f"fault bound must satisfy t < m/3, got m={self.m}, t={self.t}")
        if self.delta <= 0.0:
            raise ValueError(f"delta must be > 0, got {self.delta}")

    @property
    def delta_eff(self) -> float:
        """Per-link accuracy after channel noise; all thresholds scale from it."""
        return ted_accuracy_bound(self.delta, self.channel.epsilon)


def weak_consensus(w, estimates, m: int, t: int, delta: float) -> Optional[np.ndarray]:
    """Keep w if at least m - t estimates (self included) are 3*delta-close."""
    close = 0
    for j in range(m):
        if distance(w, estimates[j]) <= 3.0 * delta:
            close += 1
    return w if close >= m - t else None


def graded_consensus(w, estimates, flags, own_flag: int, m: int, t: int, delta: float):
    """Cluster flagged estimates; returns (direction, grade).

    For every flagged j, T[j] counts flagged nodes within 10*delta of j's
    estimate.  The largest cluster (lowest id on ties) elects the fallback
    direction for nodes whose own weak output was bottom; grade is 1 iff the
    winning cluster reaches m - t members.  With no flags at all there is
    nothing to adopt: keep the own direction with grade 0, which is safe
    because graded consistency only constrains runs where some correct node
    grades 1.
    """
    flagged = [j for j in range(m) if flags[j] == 1]
    if not flagged:
        return np.array(w, dtype=np.float64), 0
    best_j = -1
    best_size = -1
    for j in flagged:
        size = 0
        for k in flagged:
            if distance(estimates[j], estimates[k]) <= 10.0 * delta:
                size += 1
        if size > best_size:
            best_size = size
            best_j = j
    if own_flag == 1:
        v = np.array(w, dtype=np.float64)
    else:
        v = np.array(estimates[best_j], dtype=np.float64)
    g = 1 if best_size >= m - t else 0
    return v, g


class HonestNode:
    """Per-phase protocol state of one correct node, all in local coordinates.

    The node never sees its own frame: frame application is the channel's
    physics, handled by the engine.  a[self] is the node's own direction
    (no quantum link to oneself), and missing receptions become the local
    +z sentinel, which lands far from honest clusters almost surely.
    """

    def __init__(self, node_id: int, params: ProtocolParams):
        self.node_id = node_id
        self.params = params
        self.w = None
        self.u = None
        self.flag = 0
        self.a = None
        self.flags = None
        self.v = None
        self.g = 0
        self.y = None
        self.degenerate = 0
        self._cc = None

    def begin_phase(self, king_id: int, king_rng) -> None:
        self.w = random_direction(king_rng) if self.node_id == king_id else None
        self.u = None
        self.flag = 0
        self.a = None
        self.flags = None
        self.v = None
        self.g = 0
        self.y = None
        self._cc = None

    def king_payload(self) -> QuantumMessage:
        return QuantumMessage.uniform(self.w, self.params.channel.n)

    def receive_king(self, delivery) -> None:
        if delivery is None:
            self.w = SENTINEL.copy()
        else:
            self.w, degenerate = ted_receive(delivery)
            if degenerate:
                self.degenerate += 1

    def direction_payload(self) -> QuantumMessage:
        return QuantumMessage.uniform(self.w, self.params.channel.n)

    def receive_directions(self, inbox) -> None:
        """inbox: sender -> tally or None, for every other node."""
        p = self.params
        a = {self.node_id: self.w}
        for j, delivery in inbox.items():
            if delivery is None:
                a[j] = SENTINEL.copy()
            else:
                a[j], degenerate = ted_receive(delivery)
                if degenerate:
                    self.degenerate += 1
        self.a = a
        self.u = weak_consensus(self.w, a, p.m, p.t, p.delta_eff)
        self.flag = 0 if self.u is None else 1

    def flag_payload(self) -> int:
        return self.flag

    def receive_flags(self, inbox) -> None:
        p = self.params
        flags = {self.node_id: self.flag}
        for j, delivery in inbox.items():
            flags[j] = coerce_bit(delivery)
        self.flags = flags
        self.v, self.g = graded_consensus(
            self.w, self.a, flags, self.flag, p.m, p.t, p.delta_eff
        )
        self._cc = PhaseKingNode(self.node_id, p.m, p.t, self.g)

    def cc_payload(self, r: int):
        return self._cc.payload(r)

    def cc_absorb(self, r: int, received) -> None:
        self._cc.absorb(r, received)

    def finish_phase(self):
        """Classical decision: output the graded direction on 1, bottom on 0."""
        self.y = self._cc.output()
        return np.array(self.v) if self.y == 1 else None


@dataclass
class PhaseResult:
    """Everything one king phase produced, for correct nodes only."""

    phase: int
    king_id: int
    king_honest: bool
    king_direction: Optional[np.ndarray]  # king-local coordinates
    inputs: dict
    values: dict
    grades: dict
    decisions: dict
    outputs: dict


@dataclass
class TrialResult:
    params: ProtocolParams
    frames: list
    faulty_ids: tuple
    phases: list = field(default_factory=list)
    outputs: dict = field(default_factory=dict)
    accept_phase: dict = field(default_factory=dict)
    degenerate: int = 0
    rounds_used: int = 0
    transcript: list = field(default_factory=list)


def run_king_phase(
    engine: RoundEngine,
    params: ProtocolParams,
    nodes: dict,
    faulty_set,
    adversary,
    king_id: int,
    phase: int,
) -> PhaseResult:
    """One complete king phase driven over the round engine."""
    m, t = params.m, params.t
    honest_ids = sorted(nodes)

    for i in honest_ids:
        rng = engine.node_rng(i) if i == king_id else None
        nodes[i].begin_phase(king_id, rng)

    step = RoundStep(KING_BROADCAST, phase, king_id, None, broadcast_slots(m, king_id))
    payloads = {}
    if king_id in nodes:
        msg = nodes[king_id].king_payload()
        payloads = {slot: msg for slot in step.slots}
    deliveries = engine.run_round(step, payloads, faulty_set, adversary)
    for i in honest_ids:
        if i != king_id:
            nodes[i].receive_king(deliveries[(king_id, i)])

    step = RoundStep(DIRECTION_EXCHANGE, phase, king_id, None, exchange_slots(m))
    payloads = {}
    for i in honest_ids:
        msg = nodes[i].direction_payload()
        for r in range(m):
            if r != i:
                payloads[(i, r)] = msg
    deliveries = engine.run_round(step, payloads, faulty_set, adversary)
    for i in honest_ids:
        nodes[i].receive_directions({j: deliveries[(j, i)] for j in range(m) if j != i})

    step = RoundStep(FLAG_EXCHANGE, phase, king_id, None, exchange_slots(m))
    payloads = {}
    for i in honest_ids:
        bit = nodes[i].flag_payload()
        for r in range(m):
            if r != i:
                payloads[(i, r)] = bit
    deliveries = engine.run_round(step, payloads, faulty_set, adversary)
    for i in honest_ids:
        nodes[i].receive_flags({j: deliveries[(j, i)] for j in range(m) if j != i})

    for r in range(rounds_for(t)):
        if r % 3 == 2:
            cc_king = r // 3
            slots = broadcast_slots(m, cc_king)
            payloads = {}
            if cc_king in nodes:
                bit = nodes[cc_king].cc_payload(r)
                payloads = {slot: bit for slot in slots}
        else:
            slots = exchange_slots(m)
            payloads = {}
            for i in honest_ids:
                sym = nodes[i].cc_payload(r)
                for rr in range(m):
                    if rr != i:
                        payloads[(i, rr)] = sym
        step = RoundStep(CLASSICAL_ROUND, phase, king_id, r, slots)
        deliveries = engine.run_round(step, payloads, faulty_set, adversary)
        for i in honest_ids:
            inbox = [None] * m
            for j in range(m):
                if j != i:
                    slot = (j, i)
                    if slot in deliveries:
                        inbox[j] = deliveries[slot]
            nodes[i].cc_absorb(r, inbox)

    outputs = {i: nodes[i].finish_phase() for i in honest_ids}
    king_honest = king_id in nodes
    return PhaseResult(
        phase=phase,
        king_id=king_id,
        king_honest=king_honest,
        king_direction=np.array(nodes[king_id].w) if king_honest else None,
        inputs={i: np.array(nodes[i].w) for i in honest_ids},
        values={i: np.array(nodes[i].v) for i in honest_ids},
        grades={i: nodes[i].g for i in honest_ids},
        decisions={i: nodes[i].y for i in honest_ids},
        outputs=outputs,
    )


def run_rf_consensus(
    params: ProtocolParams,
    frames: list,
    faulty_ids,
    adversary,
    master_seed: int,
    trial: int = 0,
    record_transcript: bool = True,
) -> TrialResult:
    """Full run: t+1 king phases, kings are node ids 0..t.

    Each correct node's recorded output is frozen at its first accepting
    phase; later phases still run in full.
    """
    faulty_set = frozenset(faulty_ids)
    if len(faulty_set) > params.t:
        raise ValueError(f"{len(faulty_set)} faulty nodes exceeds bound t={params.t}")
    engine = RoundEngine(
        m=params.m,
        channel=params.channel,
        frames=frames,
        master_seed=master_seed,
        trial=trial,
        record_transcript=record_transcript,
    )
    nodes = {i: HonestNode(i, params) for i in range(params.m) if i not in faulty_set}
    result = TrialResult(
        params=params,
        frames=frames,
        faulty_ids=tuple(sorted(faulty_set)),
        outputs={i: None for i in nodes},
        accept_phase={i: None for i in nodes},
    )
    for k in range(params.t + 1):
        phase_result = run_king_phase(engine, params, nodes, faulty_set, adversary, k, k)
        result.phases.append(phase_result)
        for i in nodes:
            if result.outputs[i] is None and phase_result.outputs[i] is not None:
                result.outputs[i] = phase_result.outputs[i]
                result.accept_phase[i] = k
    result.degenerate = sum(nodes[i].degenerate for i in nodes)
    result.rounds_used = engine.round_index
    result.transcript = engine.transcript
    return result
