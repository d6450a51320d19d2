"""Two-point measurement statistics of forward and backward protocols.

The central object is the transition matrix P[m, n] = |<m|U|n>|^2 between
charge labels, which inherits double stochasticity from the unitarity of U.
Microreversibility of the driven device states that the forward matrix
equals the transpose of the matrix of the reversed protocol (mirrored clock
plus inverted flux); ``microrev_deviation`` quantifies how far a simulated
pair is from that identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .drive import BACKWARD, FORWARD, sample_drive
from .model import (
    DEFAULT_SUBSPACE,
    DeviceParams,
    build_hamiltonian,
    charge_labels,
    eigensystem,
)
from .propagate import PropagatorConfig, evolve

#: Partition length for seeded event streams; sampling is reproducible for a
#: fixed seed no matter how partitions are distributed over workers.
EVENT_PARTITION = 250_000


@dataclass(frozen=True)
class TransitionMatrix:
    """Charge-to-charge transition probabilities of one protocol direction.

    ``matrix[m_idx, n_idx]`` is the probability of measuring final label m
    given initial label n; ``labels`` maps indices to charge labels.
    """

    matrix: np.ndarray
    labels: np.ndarray
    direction: str

    def column(self, label: int) -> np.ndarray:
        return self.matrix[:, self.index(label)]

    def index(self, label: int) -> int:
        offset = int(self.labels[0])
        idx = int(label) - offset
        if not 0 <= idx < self.labels.size:
            raise ValueError(f"charge label {label} outside basis")
        return idx

    def subspace_leakage(self, subspace=DEFAULT_SUBSPACE) -> np.ndarray:
        """Per-column probability of leaving ``subspace``, column order as given."""
        rows = [self.index(n) for n in subspace]
        return 1.0 - self.matrix[np.ix_(rows, rows)].sum(axis=0)


@dataclass(frozen=True)
class PreparationEnsemble:
    """First-measurement outcome distribution from the protocol ground state."""

    probabilities: np.ndarray
    labels: np.ndarray
    subspace: tuple
    subspace_mass: float


@dataclass(frozen=True)
class MeasurementRecord:
    """One two-point event: charge labels from the pre- and post-measurement."""

    event: int
    first: int
    second: int
    direction: str


@dataclass(frozen=True)
class ExperimentSample:
    """Seeded batch of two-point events, stored as label arrays."""

    first: np.ndarray
    second: np.ndarray
    labels: np.ndarray
    direction: str
    seed: int
    counts: np.ndarray = field(repr=False)

    @property
    def n_events(self) -> int:
        return self.first.size

    def records(self):
        """Materialize per-event records (meant for small batches)."""
        return [
            MeasurementRecord(i, int(n), int(m), self.direction)
            for i, (n, m) in enumerate(zip(self.first, self.second))
        ]


@dataclass(frozen=True)
class MicrorevReport:
    """Elementwise deviation of P_forward from transpose(P_backward)."""

    max_abs: float
    mean_abs: float
    max_abs_full: float
    mean_abs_full: float
    subspace: tuple


def transition_matrix(
    u: np.ndarray, labels: np.ndarray, direction: str = FORWARD
) -> TransitionMatrix:
    """Squared-magnitude transition probabilities of a propagator."""
    if direction not in (FORWARD, BACKWARD):
        raise ValueError(f"unknown direction {direction!r}")
    if u.shape[0] != u.shape[1] or u.shape[0] != labels.size:
        raise ValueError("propagator shape does not match label count")
    return TransitionMatrix(
        matrix=np.abs(u) ** 2, labels=np.asarray(labels), direction=direction
    )


def stochasticity_defect(trans: TransitionMatrix) -> float:
    """Largest deviation of any row or column sum from one."""
    row = np.abs(trans.matrix.sum(axis=1) - 1.0).max()
    col = np.abs(trans.matrix.sum(axis=0) - 1.0).max()
    return float(max(row, col))


def run_protocol(
    params: DeviceParams, protocol, config: PropagatorConfig
) -> TransitionMatrix:
    """Evolve the protocol and collapse the propagator to probabilities."""
    u = evolve(params, protocol, config)
    return transition_matrix(u, charge_labels(params), protocol.direction)


def prepare_ensemble(
    params: DeviceParams,
    protocol,
    config: PropagatorConfig,
    subspace=DEFAULT_SUBSPACE,
) -> PreparationEnsemble:
    """First-measurement distribution after driving the t = 0 ground state.

    The device starts in the exact ground state of the frozen Hamiltonian at
    the protocol start; the drive then spreads it over a handful of charge
    states, which is what makes a multi-state thermal ensemble emulatable.
    Forward protocols only.
    """
    if protocol.direction != FORWARD:
        raise ValueError("preparation is defined for forward protocols")
    h0 = build_hamiltonian(params, sample_drive(protocol, 0.0))
    ground = eigensystem(h0).states[:, 0]
    u = evolve(params, protocol, config)
    probabilities = np.abs(u @ ground) ** 2
    labels = charge_labels(params)
    index = {int(n): i for i, n in enumerate(labels)}
    mass = float(sum(probabilities[index[n]] for n in subspace))
    return PreparationEnsemble(
        probabilities=probabilities,
        labels=labels,
        subspace=tuple(subspace),
        subspace_mass=mass,
    )


def derive_seed(seed: int, *key: int) -> int:
    """Independent child seed for a keyed sub-run (temperature, direction, ...).

    Children of distinct keys never collide with each other or with the
    partition streams spawned by :func:`partition_seeds`, which key on the
    partition index alone.
    """
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(0x5EED, *key))
    return int.from_bytes(seq.generate_state(4, dtype=np.uint32).tobytes(), "little")


def partition_seeds(seed: int, n_events: int, partition: int = EVENT_PARTITION):
    """Derived (offset, length, seed sequence) triples covering the event range."""
    out = []
    start = 0
    k = 0
    while start < n_events:
        length = min(partition, n_events - start)
        out.append((start, length, np.random.SeedSequence(entropy=seed, spawn_key=(k,))))
        start += length
        k += 1
    return out


def _draw_pairs(rng, initial_probs, columns, size):
    """Vectorized two-point draw: initial index from ``initial_probs``, final
    index from the matching column of ``columns``. Iterates initial labels in
    fixed order so streams are reproducible."""
    first = rng.choice(initial_probs.size, size=size, p=initial_probs)
    second = np.empty(size, dtype=np.int64)
    for j in range(initial_probs.size):
        mask = first == j
        hits = int(mask.sum())
        if hits:
            second[mask] = rng.choice(columns.shape[0], size=hits, p=columns[:, j])
    return first, second


def sample_experiment(
    prep: PreparationEnsemble,
    trans: TransitionMatrix,
    n_events: int,
    seed: int,
) -> ExperimentSample:
    """Draw seeded two-point measurement events.

    The first outcome follows the preparation distribution, the second the
    matching transition-matrix column. Events are generated in fixed-size
    partitions with seeds derived from (seed, partition index) and merged in
    order, so results do not depend on how partitions would be scheduled.
    """
    if n_events <= 0:
        raise ValueError("n_events must be positive")
    if prep.probabilities.size != trans.labels.size:
        raise ValueError("preparation and transition matrix bases differ")
    columns = trans.matrix / trans.matrix.sum(axis=0, keepdims=True)
    probs = prep.probabilities / prep.probabilities.sum()
    first = np.empty(n_events, dtype=np.int64)
    second = np.empty(n_events, dtype=np.int64)
    for start, length, seq in partition_seeds(seed, n_events):
        rng = np.random.default_rng(seq)
        f, s = _draw_pairs(rng, probs, columns, length)
        first[start : start + length] = f
        second[start : start + length] = s
    n = trans.labels.size
    counts = np.zeros((n, n), dtype=np.int64)
    np.add.at(counts, (second, first), 1)
    return ExperimentSample(
        first=trans.labels[first],
        second=trans.labels[second],
        labels=trans.labels,
        direction=trans.direction,
        seed=seed,
        counts=counts,
    )


def microrev_deviation(
    forward: TransitionMatrix,
    backward: TransitionMatrix,
    subspace=DEFAULT_SUBSPACE,
) -> MicrorevReport:
    """Deviation of the pair from P_forward = transpose(P_backward).

    Reported over the measurement subspace (max and mean of elementwise
    absolute differences) and over the full basis.
    """
    if forward.direction != FORWARD or backward.direction != BACKWARD:
        raise ValueError("need one forward and one backward transition matrix")
    if forward.matrix.shape != backward.matrix.shape:
        raise ValueError("transition matrices have mismatched shapes")
    diff = np.abs(forward.matrix - backward.matrix.T)
    rows = [forward.index(n) for n in subspace]
    block = diff[np.ix_(rows, rows)]
    return MicrorevReport(
        max_abs=float(block.max()),
        mean_abs=float(block.mean()),
        max_abs_full=float(diff.max()),
        mean_abs_full=float(diff.mean()),
        subspace=tuple(subspace),
    )
