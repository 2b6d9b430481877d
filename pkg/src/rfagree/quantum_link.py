"""Two-party direction estimation over a batch of identically prepared qubits.

A sender encodes a direction in the Bloch vector of 3n qubits; the receiver
measures n of them along each of its three local Pauli axes and reconstructs
the direction from the +1-outcome frequencies.  The channel may apply
depolarizing noise, which shrinks every Bloch vector by (1 - epsilon).

The simulation never instantiates individual qubits.  Within one message
segment, the qubits measured along one axis are i.i.d. Bernoulli with a
common success probability, so their +1 count is exactly binomial; sampling
that binomial is identical in law to the per-qubit simulation at any n,
which keeps the n ~ 1e8 regime cheap.  The qubit batch is assigned to axes
deterministically by thirds (first n to x, next n to y, last n to z), so a
multi-segment message from a dishonest sender lands on axes in a fixed,
publicly known way.

Accuracy/success calculators implement the Hoeffding-based guarantee for
this estimator: accuracy (1-eps)*delta + 5*eps/2, success probability at
least (1 - 2 exp(-2 n delta^2 / 25))^3, and its inversion giving the
minimal per-axis qubit count for a target success probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import dot

BLOCH_TOL = 1e-9

#: Sentinel direction (receiver-local coordinates) for degenerate or missing
#: receptions.  Protocols substitute it and keep running rather than abort.
SENTINEL = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ChannelParams:
    """Depolarizing probability and per-axis qubit count (3n sent in total)."""

    epsilon: float
    n: int

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")


@dataclass(frozen=True)
class QuantumMessage:
    """Bloch segments making up one 3n-qubit batch.

    Each segment is a (bloch_vector, qubit_count) pair; an honest sender uses
    a single segment of 3n identical pure states, a faulty one may vary the
    (possibly mixed, |r| <= 1) state across the batch.
    """

    segments: tuple

    @staticmethod
    def uniform(state, n: int) -> "QuantumMessage":
        """Honest message: 3n copies of one state."""
        return QuantumMessage(((np.asarray(state, dtype=np.float64), 3 * n),))

    def total_count(self) -> int:
        return sum(count for _, count in self.segments)

    def validate(self, n: int) -> None:
        """Raise ValueError unless the segments form a well-formed 3n batch."""
        if not self.segments:
            raise ValueError("message has no segments")
        for state, count in self.segments:
            arr = np.asarray(state, dtype=np.float64)
            if arr.shape != (3,):
                raise ValueError("segment state must be a 3-vector")
            if not int(count) == count or count < 1:
                raise ValueError(f"segment count must be a positive integer, got {count}")
            if math.sqrt(dot(arr, arr)) > 1.0 + BLOCH_TOL:
                raise ValueError("segment Bloch vector longer than 1")
        if self.total_count() != 3 * n:
            raise ValueError(
                f"segment counts sum to {self.total_count()}, expected {3 * n}"
            )


@dataclass(frozen=True)
class MeasurementTally:
    """Counts of +1 outcomes along the receiver's x, y, z axes (n each)."""

    k_x: int
    k_y: int
    k_z: int
    n: int

    def __post_init__(self):
        for k in (self.k_x, self.k_y, self.k_z):
            if not 0 <= k <= self.n:
                raise ValueError(f"tally {k} outside [0, {self.n}]")


def depolarize(state, epsilon: float) -> np.ndarray:
    """Bloch vector after the depolarizing channel: shrink by (1 - epsilon)."""
    return (1.0 - epsilon) * np.asarray(state, dtype=np.float64)


def outcome_probability(state, axis) -> float:
    """P(+1) for a Pauli measurement along ``axis`` on Bloch vector ``state``.

    Equals (1 + r.axis)/2 = cos^2(theta/2) for pure states at angle theta.
    Both vectors must be expressed in the same frame.
    """
    p = 0.5 * (1.0 + dot(state, axis))
    return min(1.0, max(0.0, p))


def measure_batch(
    msg: QuantumMessage,
    receiver_frame: np.ndarray,
    params: ChannelParams,
    rng: np.random.Generator,
) -> MeasurementTally:
    """Measure a 3n-qubit batch along the receiver's local Pauli axes.

    Message states are in global coordinates.  Qubits 0..n-1 go to the x
    axis, n..2n-1 to y, 2n..3n-1 to z; each (segment, axis) cell contributes
    one binomial draw, which matches the per-qubit Bernoulli law exactly.
    """
    n = params.n
    msg.validate(n)
    counts = [0, 0, 0]
    start = 0
    for state, count in msg.segments:
        shrunk = depolarize(state, params.epsilon)
        end = start + count
        for a in range(3):
            lo = max(start, a * n)
            hi = min(end, (a + 1) * n)
            if hi > lo:
                p = outcome_probability(shrunk, receiver_frame[:, a])
                counts[a] += int(rng.binomial(hi - lo, p))
        start = end
    return MeasurementTally(counts[0], counts[1], counts[2], n)


def ted_receive(tally: MeasurementTally):
    """Reconstruct the direction from a tally; returns (direction, degenerate).

    Components are x = 2 k_x / n - 1 etc., normalized to unit length.  If all
    three frequencies are exactly 1/2, the raw vector has zero length; the
    receiver then substitutes the local +z sentinel and flags the estimate
    instead of aborting, so a malicious sender cannot crash a correct node.
    """
    n = tally.n
    x = 2.0 * tally.k_x / n - 1.0
    y = 2.0 * tally.k_y / n - 1.0
    z = 2.0 * tally.k_z / n - 1.0
    l = math.sqrt(math.fsum((x * x, y * y, z * z)))
    if l == 0.0:
        return SENTINEL.copy(), True
    return np.array([x / l, y / l, z / l]), False


def ted_accuracy_bound(delta: float, epsilon: float) -> float:
    """Estimation accuracy over a depolarizing channel: (1-eps)*delta + 5 eps/2."""
    return (1.0 - epsilon) * delta + 2.5 * epsilon


def ted_success_bound(n: int, delta: float) -> float:
    """Lower bound on the estimation success probability.

    Three Hoeffding events (one per axis), each of probability at least
    1 - 2 exp(-2 n delta^2 / 25); the cube is clamped below at zero where
    the bound collapses.
    """
    base = 1.0 - 2.0 * math.exp(-2.0 * n * delta * delta / 25.0)
    return max(0.0, base) ** 3


def required_qubits(delta: float, q_target: float) -> int:
    """Smallest per-axis n with ted_success_bound(n, delta) >= q_target.

    Closed form: n = ceil(25 / (2 delta^2) * ln(2 / (1 - q_target^(1/3)))),
    nudged by +-1 afterwards to absorb floating-point rounding of the ceil.
    """
    if not 0.0 < q_target < 1.0:
        raise ValueError(f"q_target must be in (0, 1), got {q_target}")
    if delta <= 0.0:
        raise ValueError(f"delta must be > 0, got {delta}")
    n = math.ceil(25.0 / (2.0 * delta * delta) * math.log(2.0 / (1.0 - q_target ** (1.0 / 3.0))))
    n = max(1, n)
    while ted_success_bound(n, delta) < q_target:
        n += 1
    while n > 1 and ted_success_bound(n - 1, delta) >= q_target:
        n -= 1
    return n
