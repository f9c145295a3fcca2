"""Builders for the compiled digital blocks around the analog evolution.

A ``Circuit`` is an ordered gate list in application order: ``gates[0]`` acts
on the state first.  Written operator products over ascending factor index
apply the first factor first (the leftmost written factor acts last); this
ordering is pinned by the effective-Hamiltonian structure oracles because XX
gates on overlapping pairs do not all commute at the chain boundary.

All builders take and return 0-based site indices; 1-based labels used in
experiment write-ups are converted at this boundary only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .pauli import Gate, PauliError

QUARTER = math.pi / 4


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list on ``L`` sites (``gates[0]`` applied first)."""

    L: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for t in g.targets:
                if not 0 <= t < self.L:
                    raise PauliError(f"gate target {t} out of range for L={self.L}")

    def __add__(self, other: "Circuit") -> "Circuit":
        if self.L != other.L:
            raise PauliError("cannot concatenate circuits of different sizes")
        return Circuit(self.L, self.gates + other.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.L, tuple(g.inverse() for g in reversed(self.gates)))

    def __len__(self) -> int:
        return len(self.gates)

    # -- JSON schema: {"L": int, "gates": [{"kind", "targets", "theta"}]} ----

    def to_json(self) -> str:
        entries = []
        for g in self.gates:
            e: dict = {"kind": g.kind, "targets": list(g.targets)}
            if g.theta is not None:
                e["theta"] = g.theta
            entries.append(e)
        return json.dumps({"L": self.L, "gates": entries})

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        doc = json.loads(text)
        gates = tuple(
            Gate(e["kind"], tuple(e["targets"]), e.get("theta")) for e in doc["gates"]
        )
        return cls(int(doc["L"]), gates)


def hadamard_layer(L: int) -> Circuit:
    return Circuit(L, tuple(Gate("H", (j,)) for j in range(L)))


def xx_layer(L: int, pairs, theta: float = QUARTER) -> Circuit:
    return Circuit(L, tuple(Gate("XX", pair, theta) for pair in pairs))


def ring_pairs(L: int) -> list[tuple[int, int]]:
    return [(j, (j + 1) % L) for j in range(L)]


def chain_pairs(L: int) -> list[tuple[int, int]]:
    return [(j, j + 1) for j in range(L - 1)]


def global_rx_layer(L: int, theta: float) -> Circuit:
    return Circuit(L, tuple(Gate("RX", (j,), theta) for j in range(L)))


# ---------------------------------------------------------------------------
# Cluster-field experiment blocks
# ---------------------------------------------------------------------------

def cluster_field_encoder(L: int) -> Circuit:
    """Entangling sub-layer of the cluster-field preparation block.

    One XX(pi/4) gate per ring pair (j, j+1 mod L).  Conjugating the analog
    one-body Hamiltonian by this layer alone produces the three-body/field
    effective form; the Hadamard layer of the full preparation block is basis
    preparation (it maps z-basis hardware states onto the x-basis product
    states the effective picture starts from) and must not enter the
    compile frame.
    """
    if L < 3:
        raise PauliError("cluster-field blocks need L >= 3")
    return xx_layer(L, ring_pairs(L))


def cluster_field_blocks(L: int) -> tuple[Circuit, Circuit]:
    """Preparation and analysis blocks for the cluster-field experiment.

    D1 = L Hadamards followed by L ring XX(pi/4) gates; D2 = L Hadamards
    (readout basis change).
    """
    if L < 3:
        raise PauliError("cluster-field blocks need L >= 3")
    d1 = hadamard_layer(L) + cluster_field_encoder(L)
    d2 = hadamard_layer(L)
    return d1, d2


# ---------------------------------------------------------------------------
# Cluster-Ising experiment blocks
# ---------------------------------------------------------------------------

def sample_flip_subset(L: int, seed: int, stream: int = 0) -> frozenset[int]:
    """Uniform random subset of all L sites, reproducible from the seed."""
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))
    draws = rng.random(L)
    return frozenset(int(j) for j in range(L) if draws[j] < 0.5)


def cluster_ising_blocks(
    L: int,
    flips: frozenset[int] | set[int] | None = None,
    seed: int | None = None,
) -> tuple[Circuit, Circuit, Circuit]:
    """State-prep, entangling, and analysis blocks for the open-chain
    cluster-Ising experiment.

    D0 flips the chosen subset with RY(pi), then rotates the two edge-adjacent
    sites (0-based 1 and L-2) into the x basis with RY(pi/2), preparing a
    product eigenstate of both edge stabilizers.  D1 is the open-boundary
    XX(pi/4) chain.  D2 = RX(-pi/2) on the two edge sites maps edge-stabilizer
    readout onto single-site z measurements.
    """
    if L < 4:
        raise PauliError("cluster-Ising blocks need L >= 4")
    if flips is None:
        if seed is None:
            flips = frozenset()
        else:
            flips = sample_flip_subset(L, seed)
    flips = frozenset(int(j) for j in flips)
    for j in flips:
        if not 0 <= j < L:
            raise PauliError(f"flip site {j} out of range for L={L}")
    d0_gates = [Gate("RY", (j,), math.pi) for j in sorted(flips)]
    d0_gates += [Gate("RY", (1,), math.pi / 2), Gate("RY", (L - 2,), math.pi / 2)]
    d0 = Circuit(L, tuple(d0_gates))
    d1 = xx_layer(L, chain_pairs(L))
    d2 = Circuit(L, (Gate("RX", (0,), -math.pi / 2), Gate("RX", (L - 1,), -math.pi / 2)))
    return d0, d1, d2


def cluster_state_prep(L: int) -> Circuit:
    """Circuit whose composition with the entangling chain prepares the joint
    +1 eigenstate of all L stabilizers (edge two-body forms included).

    From |0...0>: RX(-pi/2) puts the edge sites into the sigma_y = +1 state,
    RY(pi) flips the bulk sites to |1>; applying the cluster-Ising D1 after
    this yields <S_j> = +1 for every j (verified against the projector
    construction in the tests).
    """
    gates = [Gate("RX", (0,), -math.pi / 2), Gate("RX", (L - 1,), -math.pi / 2)]
    gates += [Gate("RY", (j,), math.pi) for j in range(1, L - 1)]
    return Circuit(L, tuple(gates))


# ---------------------------------------------------------------------------
# Four-body experiment blocks
# ---------------------------------------------------------------------------

ANALYSIS_H13 = "h13"
ANALYSIS_H24 = "h24"
ANALYSIS_COMBINED = "combined"  # sqrt(XX)-based interference readout on qubit 2

_ANALYSES = (ANALYSIS_H13, ANALYSIS_H24, ANALYSIS_COMBINED)


def four_body_blocks(L: int, analysis: str) -> tuple[Circuit, Circuit, Circuit]:
    """Blocks for the four-body interaction experiment.

    D0 rotates 0-based sites 1 and 2 with RX(-pi/2); D1 is the ring XX(pi/4)
    layer followed by Hadamards on every site (here the Hadamards are part of
    the conjugation frame, unlike the cluster-field block); D2 depends on the
    analysis: Hadamards on sites {0, 2} or {1, 3}, or the combined
    interference readout ending on the inverse of D1 with two XX(pi/8) gates.
    """
    if analysis not in _ANALYSES:
        raise PauliError(f"analysis must be one of {_ANALYSES}, got {analysis!r}")
    if L < 4:
        raise PauliError("four-body blocks need L >= 4")
    if analysis == ANALYSIS_COMBINED and L != 4:
        raise PauliError("the combined interference readout is defined for L = 4 only")
    d0 = Circuit(L, (Gate("RX", (1,), -math.pi / 2), Gate("RX", (2,), -math.pi / 2)))
    d1 = xx_layer(L, ring_pairs(L)) + hadamard_layer(L)
    if analysis == ANALYSIS_H13:
        d2 = Circuit(L, (Gate("H", (0,)), Gate("H", (2,))))
    elif analysis == ANALYSIS_H24:
        d2 = Circuit(L, (Gate("H", (1,)), Gate("H", (3,))))
    else:
        d2 = (
            d1.inverse()
            + hadamard_layer(L)
            + Circuit(L, (Gate("XX", (0, 1), math.pi / 8), Gate("XX", (1, 2), math.pi / 8)))
            + Circuit(L, (Gate("RX", (0,), -math.pi / 2),))
        )
    return d0, d1, d2


# ---------------------------------------------------------------------------
# CPMG echo wrapper
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EchoSchedule:
    """Alternating analog segments with interleaved global pulse layers.

    ``segments[k]`` is a (field-sign selector xi, duration) pair evolved
    first-to-last; ``pulses[k]`` is the gate layer applied after segment k.
    """

    segments: tuple[tuple[int, float], ...]
    pulses: tuple[Circuit, ...] = field(default_factory=tuple)

    def total_duration(self) -> float:
        return sum(d for _, d in self.segments)


def cpmg_wrap(t: float, L: int) -> EchoSchedule:
    """Asymmetric echo: evolve half the time with xi=+1, flip all spins about
    x, evolve the second half with xi=-1, flip again.

    The global pi pulses map the sign-reversed field segment back onto the
    xi=+1 evolution, so the composition equals exp(-i H(xi=1) t) up to a
    global phase while cancelling slow dephasing.
    """
    if t < 0:
        raise PauliError("echo duration must be non-negative")
    pi_layer = global_rx_layer(L, math.pi)
    return EchoSchedule(
        segments=((1, t / 2.0), (-1, t / 2.0)),
        pulses=(pi_layer, pi_layer),
    )
