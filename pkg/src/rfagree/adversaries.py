"""Byzantine strategy catalog.

One strategy object controls all faulty nodes of a trial jointly and fills
every slot whose sender is faulty, after seeing the current round's honest
traffic (the engine guarantees the rushing order).  The catalog is a test
battery, not a worst-case construction: each strategy probes a different
part of the stack (thresholds, grades, the classical subprotocol, replay).

Strategies only read wire-visible data (payloads, tallies, bits) plus their
own random streams, never honest private state, so every strategy is
automatically covariant under a relabeling of the hidden global frame.
"""

from __future__ import annotations

import math

from .geometry import any_orthogonal, angle_from_chord, random_direction, rotate_about
from .netsim import (
    CLASSICAL_ROUND,
    DIRECTION_EXCHANGE,
    FLAG_EXCHANGE,
    KING_BROADCAST,
)
from .quantum_link import SENTINEL, QuantumMessage, ted_receive
from .rf_protocols import HonestNode


class Adversary:
    name = "abstract"

    def __init__(self, faulty_ids, params):
        self.faulty_set = frozenset(faulty_ids)
        self.params = params
        if len(self.faulty_set) > params.t:
            raise ValueError(
                f"{len(self.faulty_set)} faulty nodes exceeds fault bound t={params.t}"
            )

    def emit(self, view, slots) -> dict:
        raise NotImplementedError


class TranscriptFollower(Adversary):
    """Base for strategies that track deliveries through the public log.

    ``emit`` for round r runs before round r is resolved, so every earlier
    round is fully present in the transcript; the follower consumes rounds
    lazily and hands complete ones to :meth:`_process_round`.
    """

    def __init__(self, faulty_ids, params):
        super().__init__(faulty_ids, params)
        self._cursor = 0

    def catch_up(self, view) -> None:
        ts = view.transcript
        n = len(ts)
        while self._cursor < n:
            r = ts[self._cursor].round_index
            j = self._cursor
            while j < n and ts[j].round_index == r:
                j += 1
            self._process_round(ts[self._cursor:j])
            self._cursor = j

    def _process_round(self, entries) -> None:
        pass

    def _king_estimates(self, entries) -> dict:
        """Faulty receivers' estimates from a king-broadcast round (local coords)."""
        estimates = {}
        for e in entries:
            if e.receiver in self.faulty_set:
                if e.tally is None:
                    estimates[e.receiver] = SENTINEL.copy()
                else:
                    estimates[e.receiver] = ted_receive(e.tally)[0]
        return estimates


class HonestShadow(TranscriptFollower):
    """Faulty nodes run the real protocol; baseline for every metric.

    Shadow nodes use the same per-node streams an honest node would, so a
    run with this strategy is bit-identical to an all-honest run.
    """

    name = "honest-shadow"

    def __init__(self, faulty_ids, params):
        super().__init__(faulty_ids, params)
        self.nodes = {i: HonestNode(i, params) for i in self.faulty_set}

    def _process_round(self, entries):
        step = entries[0].step
        if step == KING_BROADCAST:
            for e in entries:
                node = self.nodes.get(e.receiver)
                if node is not None and e.sender != e.receiver:
                    node.receive_king(e.tally)
        elif step == DIRECTION_EXCHANGE:
            for i, node in self.nodes.items():
                inbox = {e.sender: e.tally for e in entries if e.receiver == i}
                node.receive_directions(inbox)
        elif step == FLAG_EXCHANGE:
            for i, node in self.nodes.items():
                inbox = {
                    e.sender: (e.payload if e.kind == "bit" else None)
                    for e in entries
                    if e.receiver == i
                }
                node.receive_flags(inbox)
        elif step == CLASSICAL_ROUND:
            r = entries[0].cc_round
            for i, node in self.nodes.items():
                inbox = [None] * self.params.m
                for e in entries:
                    if e.receiver == i and e.kind == "bit":
                        inbox[e.sender] = e.payload
                node.cc_absorb(r, inbox)

    def emit(self, view, slots):
        self.catch_up(view)
        step = view.step
        if step.kind == KING_BROADCAST:
            for i, node in self.nodes.items():
                rng = view.node_rng(i) if i == step.king_id else None
                node.begin_phase(step.king_id, rng)
        out = {}
        for slot in slots:
            node = self.nodes[slot[0]]
            if step.kind == KING_BROADCAST:
                out[slot] = node.king_payload()
            elif step.kind == DIRECTION_EXCHANGE:
                out[slot] = node.direction_payload()
            elif step.kind == FLAG_EXCHANGE:
                out[slot] = node.flag_payload()
            else:
                payload = node.cc_payload(step.cc_round)
                if payload is not None:
                    out[slot] = payload
        return out


class Crash(Adversary):
    """Faulty nodes never send anything."""

    name = "crash"

    def emit(self, view, slots):
        return {}


class RandomNoise(Adversary):
    """Independent uniform garbage on every slot."""

    name = "random-noise"

    def emit(self, view, slots):
        step = view.step
        rng = view.rng
        out = {}
        for slot in slots:
            if step.kind in (KING_BROADCAST, DIRECTION_EXCHANGE):
                out[slot] = QuantumMessage.uniform(
                    random_direction(rng), self.params.channel.n
                )
            elif step.kind == CLASSICAL_ROUND and step.cc_round % 3 == 1:
                out[slot] = int(rng.integers(0, 3))  # claim rounds are 3-valued
            else:
                out[slot] = int(rng.integers(0, 2))
        return out


class Equivocator(TranscriptFollower):
    """A faulty king splits receivers into two direction clusters.

    The cluster directions sit a configurable chord ``separation`` apart;
    faulty non-kings then reinforce each receiver's own cluster and push the
    grade machinery toward accepting.  In phases with an honest king the
    faulty nodes fall back to honest-looking estimates, so every phase stays
    well formed.
    """

    name = "equivocator"

    def __init__(self, faulty_ids, params, separation=2.0):
        super().__init__(faulty_ids, params)
        if not 0.0 <= separation <= 2.0:
            raise ValueError(f"separation must be a chord in [0, 2], got {separation}")
        self.separation = separation
        self._clusters = {}
        self._base = None
        self._estimates = {}

    def _process_round(self, entries):
        if entries[0].step == KING_BROADCAST and entries[0].sender not in self.faulty_set:
            self._estimates = self._king_estimates(entries)

    def emit(self, view, slots):
        self.catch_up(view)
        step = view.step
        n = self.params.channel.n
        out = {}
        if step.kind == KING_BROADCAST:
            self._clusters = {}
            self._estimates = {}
            if step.king_id in self.faulty_set:
                base = random_direction(view.rng)
                other = rotate_about(
                    base, any_orthogonal(base), angle_from_chord(self.separation)
                )
                receivers = sorted(r for _, r in slots)
                half = len(receivers) // 2
                for idx, r in enumerate(receivers):
                    self._clusters[r] = base if idx < half else other
                self._base = base
                for slot in slots:
                    out[slot] = QuantumMessage.uniform(self._clusters[slot[1]], n)
        elif step.kind == DIRECTION_EXCHANGE:
            for slot in slots:
                s, r = slot
                if self._clusters:
                    d = self._clusters.get(r, self._base)
                else:
                    d = self._estimates.get(s, SENTINEL)
                out[slot] = QuantumMessage.uniform(d, n)
        elif step.kind == FLAG_EXCHANGE:
            for slot in slots:
                out[slot] = 1
        else:
            for slot in slots:
                out[slot] = 1
        return out


class GradePoisoner(TranscriptFollower):
    """Honest-looking directions, but flags always on and split consensus bits."""

    name = "grade-poisoner"

    def __init__(self, faulty_ids, params):
        super().__init__(faulty_ids, params)
        self._king_direction = None
        self._estimates = {}

    def _process_round(self, entries):
        if entries[0].step == KING_BROADCAST:
            self._estimates = self._king_estimates(entries)

    def emit(self, view, slots):
        self.catch_up(view)
        step = view.step
        n = self.params.channel.n
        out = {}
        if step.kind == KING_BROADCAST:
            self._estimates = {}
            self._king_direction = None
            if step.king_id in self.faulty_set:
                self._king_direction = random_direction(view.rng)
                msg = QuantumMessage.uniform(self._king_direction, n)
                for slot in slots:
                    out[slot] = msg
        elif step.kind == DIRECTION_EXCHANGE:
            for slot in slots:
                s = slot[0]
                if s == step.king_id and self._king_direction is not None:
                    d = self._king_direction
                else:
                    d = self._estimates.get(s, SENTINEL)
                out[slot] = QuantumMessage.uniform(d, n)
        elif step.kind == FLAG_EXCHANGE:
            for slot in slots:
                out[slot] = 1
        else:
            for slot in slots:
                out[slot] = (slot[1] + step.cc_round) % 2
        return out


class Rusher(Adversary):
    """Replays a targeted honest node's current-round traffic, shifted.

    Directions are re-emitted rotated by ``shift`` radians; classical
    symbols are copied verbatim.  Exercises the strongest consequence of
    public channels: faulty messages that depend on same-round honest ones.
    """

    name = "rusher"

    def __init__(self, faulty_ids, params, shift=math.pi / 4, target=None):
        super().__init__(faulty_ids, params)
        self.shift = shift
        if target is None:
            target = min(i for i in range(params.m) if i not in self.faulty_set)
        if target in self.faulty_set:
            raise ValueError(f"rusher target {target} must be an honest node")
        self.target = target

    def _target_payload(self, view):
        for (s, _), payload in view.honest_payloads.items():
            if s == self.target:
                return payload
        return None

    def emit(self, view, slots):
        step = view.step
        n = self.params.channel.n
        out = {}
        if step.kind == KING_BROADCAST:
            # Only the king transmits here, so there is nothing to rush;
            # improvise a direction of our own.
            msg = QuantumMessage.uniform(random_direction(view.rng), n)
            for slot in slots:
                out[slot] = msg
        elif step.kind == DIRECTION_EXCHANGE:
            payload = self._target_payload(view)
            if payload is None:
                msg = QuantumMessage.uniform(random_direction(view.rng), n)
            else:
                state = payload.segments[0][0]
                shifted = rotate_about(state, any_orthogonal(state), self.shift)
                shifted = shifted / math.sqrt(
                    shifted[0] ** 2 + shifted[1] ** 2 + shifted[2] ** 2
                )
                msg = QuantumMessage.uniform(shifted, n)
            for slot in slots:
                out[slot] = msg
        else:
            payload = self._target_payload(view)
            if payload is None:
                payload = int(view.rng.integers(0, 2))
            for slot in slots:
                out[slot] = payload
        return out


_CATALOG = {
    cls.name: cls
    for cls in (HonestShadow, Crash, RandomNoise, Equivocator, GradePoisoner, Rusher)
}


def strategy_catalog():
    """Names of all built-in strategies."""
    return sorted(_CATALOG)


def make_adversary(name: str, faulty_ids, params, **kwargs) -> Adversary:
    try:
        cls = _CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown adversary {name!r}; known: {strategy_catalog()}") from None
    return cls(faulty_ids, params, **kwargs)
