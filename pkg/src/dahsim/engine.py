"""Dense state-vector engine.

States are 2**L complex amplitude vectors with site 0 in the most significant
bit of the basis index.  Gates act in place through stride-indexed 2x2 blocks
(the XX gate uses its cos/sin normal form directly).  Time evolution under a
Pauli-sum Hamiltonian acts on the vector with scipy's matrix-exponential
action over a cached sparse matrix; no dense 2**L x 2**L matrix is formed on
the main path.  Time-dependent schedules use midpoint-frozen steps with the
step count doubled until the state difference is below the error budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .circuits import Circuit, EchoSchedule
from .pauli import (
    Gate,
    PauliError,
    PauliString,
    PauliSum,
    _index_mask,
    _parity_sign,
    _PHASES,
    conjugate_by_circuit,
)

NORM_TOL = 1e-9
DEFAULT_EVOLVE_TOL = 1e-8
_MAX_STEP_DOUBLINGS = 22


class NumericalError(RuntimeError):
    """Raised when an evolution fails its accuracy or norm contract."""


class StateVector:
    """Dense complex amplitudes over the 2**L computational basis."""

    __slots__ = ("L", "amplitudes")

    def __init__(self, L: int, amplitudes: np.ndarray):
        if amplitudes.shape != (1 << L,):
            raise PauliError(f"amplitude vector must have length 2**{L}")
        self.L = L
        self.amplitudes = np.asarray(amplitudes, dtype=complex)

    @classmethod
    def computational(cls, L: int, bits: int = 0) -> "StateVector":
        """Basis state |b>; bit j of ``bits`` is the value at site j."""
        amps = np.zeros(1 << L, dtype=complex)
        amps[_index_mask(bits, L)] = 1.0
        return cls(L, amps)

    @classmethod
    def all_zeros(cls, L: int) -> "StateVector":
        return cls.computational(L, 0)

    @classmethod
    def all_ones(cls, L: int) -> "StateVector":
        return cls.computational(L, (1 << L) - 1)

    @classmethod
    def product(cls, singles: Sequence[np.ndarray]) -> "StateVector":
        amps = np.array([1.0 + 0.0j])
        for v in singles:
            amps = np.kron(amps, np.asarray(v, dtype=complex))
        return cls(len(singles), amps)

    def copy(self) -> "StateVector":
        return StateVector(self.L, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


_LOCAL_EIGVECS = {
    ("z", +1): np.array([1.0, 0.0], dtype=complex),
    ("z", -1): np.array([0.0, 1.0], dtype=complex),
    ("x", +1): np.array([1.0, 1.0], dtype=complex) / math.sqrt(2),
    ("x", -1): np.array([1.0, -1.0], dtype=complex) / math.sqrt(2),
    ("y", +1): np.array([1.0, 1.0j], dtype=complex) / math.sqrt(2),
    ("y", -1): np.array([1.0, -1.0j], dtype=complex) / math.sqrt(2),
}


def product_state(bases: str, signs: Sequence[int]) -> StateVector:
    """Sitewise eigenstate: ``bases`` is a string over xyz, ``signs`` +-1."""
    if len(bases) != len(signs):
        raise PauliError("bases and signs must have equal length")
    return StateVector.product(
        [_LOCAL_EIGVECS[(b.lower(), int(s))] for b, s in zip(bases, signs)]
    )


def x_polarized(L: int, sign: int = -1) -> StateVector:
    """All spins aligned along +-x (sign=-1 gives the x-down product state)."""
    return product_state("x" * L, [sign] * L)


# ---------------------------------------------------------------------------
# Gate application
# ---------------------------------------------------------------------------

def _gate_matrix_1q(gate: Gate) -> np.ndarray:
    t = gate.theta
    if gate.kind == "H":
        return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    if gate.kind == "RX":
        c, s = math.cos(t / 2), math.sin(t / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if gate.kind == "RY":
        c, s = math.cos(t / 2), math.sin(t / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if gate.kind == "RZ":
        return np.array([[np.exp(-1j * t / 2), 0], [0, np.exp(1j * t / 2)]], dtype=complex)
    raise PauliError(f"not a single-qubit gate: {gate.kind}")


def apply_gate(psi: StateVector, gate: Gate) -> StateVector:
    """Apply one gate in place (norm-preserving) and return the state."""
    for t in gate.targets:
        if not 0 <= t < psi.L:
            raise PauliError(f"gate target {t} out of range for L={psi.L}")
    L = psi.L
    if gate.kind == "XX":
        i, j = sorted(gate.targets)
        block = psi.amplitudes.reshape(1 << i, 2, 1 << (j - i - 1), 2, -1)
        flipped = block[:, ::-1, :, ::-1, :]
        c, s = math.cos(gate.theta), math.sin(gate.theta)
        psi.amplitudes = (c * block - 1j * s * flipped).reshape(-1)
        return psi
    (j,) = gate.targets
    u = _gate_matrix_1q(gate)
    block = psi.amplitudes.reshape(1 << j, 2, -1)
    a0 = block[:, 0, :].copy()
    a1 = block[:, 1, :]
    block[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    block[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1
    return psi


def apply_circuit(psi: StateVector, circuit: Circuit) -> StateVector:
    for gate in circuit.gates:
        apply_gate(psi, gate)
    return psi


def circuit_unitary(circuit: Circuit, site_cap: int = 12) -> np.ndarray:
    """Dense unitary of a circuit (test oracle; capped system size)."""
    if circuit.L > site_cap:
        raise PauliError(f"L={circuit.L} exceeds dense cap {site_cap}")
    dim = 1 << circuit.L
    cols = []
    for b in range(dim):
        psi = StateVector(circuit.L, np.eye(dim, dtype=complex)[:, b].copy())
        cols.append(apply_circuit(psi, circuit).amplitudes)
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# Sparse Hamiltonian application
# ---------------------------------------------------------------------------

def pauli_sum_csr(op: PauliSum) -> sp.csr_matrix:
    """Sparse matrix of a Pauli sum (cached on the sum; signed permutations)."""
    cache = op._matrix_cache
    if isinstance(cache, dict) and "csr" in cache:
        return cache["csr"]
    dim = 1 << op.n
    cols = np.arange(dim, dtype=np.int64)
    rows_all, cols_all, data_all = [], [], []
    for s, c in op.items():
        xi = _index_mask(s.x, op.n)
        zi = _index_mask(s.z, op.n)
        vals = c * _PHASES[(s.x & s.z).bit_count() & 3] * _parity_sign(cols & zi)
        rows_all.append(cols ^ xi)
        cols_all.append(cols)
        data_all.append(vals)
    if rows_all:
        m = sp.coo_matrix(
            (np.concatenate(data_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
            shape=(dim, dim),
        ).tocsr()
    else:
        m = sp.csr_matrix((dim, dim), dtype=complex)
    op._matrix_cache = {"csr": m}
    return m


def expect(psi: StateVector, op: PauliSum) -> float:
    """Exact <psi|op|psi> for a Hermitian Pauli sum."""
    if op.n != psi.L:
        raise PauliError(f"length mismatch: operator {op.n} vs state {psi.L}")
    if not op.hermitian:
        raise PauliError("expectation requires a Hermitian operator")
    amps = psi.amplitudes
    idx = np.arange(amps.size, dtype=np.int64)
    val = 0.0 + 0.0j
    for s, c in op.items():
        xi = _index_mask(s.x, op.n)
        zi = _index_mask(s.z, op.n)
        phase = _PHASES[(s.x & s.z).bit_count() & 3]
        pv = phase * _parity_sign((idx ^ xi) & zi) * amps[idx ^ xi]
        val += c * np.vdot(amps, pv)
    if abs(val.imag) > 1e-10:
        raise NumericalError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def expect_string(psi: StateVector, s: PauliString) -> float:
    return expect(psi, PauliSum.from_terms([(1.0, s)], n=s.n))


# ---------------------------------------------------------------------------
# Time evolution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HamiltonianSchedule:
    """H(t) = sum_k c_k(t) * term_group_k over a finite horizon.

    A ``None`` coefficient means the group is constant with weight 1.  Units
    follow the groups (hbar = 1), so durations are in inverse energy.
    """

    groups: tuple[tuple[PauliSum, Callable[[float], float] | None], ...]
    horizon: float

    @property
    def n(self) -> int:
        return self.groups[0][0].n

    def is_static(self) -> bool:
        return all(f is None for _, f in self.groups)

    def value(self, t: float) -> PauliSum:
        total = None
        for op, f in self.groups:
            c = 1.0 if f is None else float(f(t))
            if not math.isfinite(c):
                raise NumericalError(f"non-finite coefficient {c} at t={t}")
            part = op if c == 1.0 else op.scaled(c)
            total = part if total is None else total + part
        return total

    def sparse_at(self, t: float) -> sp.csr_matrix:
        total = None
        for op, f in self.groups:
            c = 1.0 if f is None else float(f(t))
            if not math.isfinite(c):
                raise NumericalError(f"non-finite coefficient {c} at t={t}")
            part = c * pauli_sum_csr(op)
            total = part if total is None else total + part
        return total


def static_schedule(op: PauliSum, horizon: float = math.inf) -> HamiltonianSchedule:
    return HamiltonianSchedule(groups=((op, None),), horizon=horizon)


def _restore_norm(psi: StateVector) -> StateVector:
    nrm = psi.norm()
    if abs(nrm - 1.0) > NORM_TOL:
        raise NumericalError(f"norm drifted to {nrm!r}")
    psi.amplitudes /= nrm
    return psi


def _expm_apply(h: sp.csr_matrix, dt: float, amps: np.ndarray) -> np.ndarray:
    return spla.expm_multiply((-1j * dt) * h, amps)


def evolve(
    psi: StateVector,
    schedule: HamiltonianSchedule,
    t0: float,
    t1: float,
    tol: float = DEFAULT_EVOLVE_TOL,
) -> StateVector:
    """Time-ordered evolution of ``psi`` from t0 to t1 under the schedule.

    Static schedules use the exponential action directly.  Time-dependent
    ones freeze the Hamiltonian at midpoints of uniform steps and double the
    step count until the result changes by less than ``tol``.
    """
    if t1 < t0:
        raise PauliError("t1 must be >= t0")
    if tol <= 0:
        raise PauliError("tol must be positive")
    if schedule.n != psi.L:
        raise PauliError(f"length mismatch: schedule {schedule.n} vs state {psi.L}")
    span = t1 - t0
    if span == 0.0:
        return psi
    if schedule.is_static():
        psi.amplitudes = _expm_apply(schedule.sparse_at(t0), span, psi.amplitudes)
        return _restore_norm(psi)

    def run(n_steps: int) -> np.ndarray:
        amps = psi.amplitudes.copy()
        dt = span / n_steps
        for k in range(n_steps):
            h = schedule.sparse_at(t0 + (k + 0.5) * dt)
            amps = _expm_apply(h, dt, amps)
        return amps

    n = 8
    coarse = run(n)
    for _ in range(_MAX_STEP_DOUBLINGS):
        fine = run(2 * n)
        if np.linalg.norm(fine - coarse) <= tol:
            psi.amplitudes = fine
            return _restore_norm(psi)
        coarse, n = fine, 2 * n
    raise NumericalError(f"step-size underflow: no convergence below tol={tol} at {n} steps")


def apply_echo(
    psi: StateVector,
    hamiltonian_of_sign: Callable[[int], PauliSum],
    schedule: EchoSchedule,
    tol: float = DEFAULT_EVOLVE_TOL,
) -> StateVector:
    """Run an echo schedule: evolve each segment under H(xi), then apply the
    interleaved pulse layer."""
    for k, (xi, duration) in enumerate(schedule.segments):
        if duration > 0:
            evolve(psi, static_schedule(hamiltonian_of_sign(xi)), 0.0, duration, tol)
        if k < len(schedule.pulses):
            apply_circuit(psi, schedule.pulses[k])
    return psi


# ---------------------------------------------------------------------------
# Digital-analog equivalence and dense helpers
# ---------------------------------------------------------------------------

def effective_evolution_check(
    psi0: StateVector,
    d1: Circuit,
    analog: HamiltonianSchedule,
    d2: Circuit,
    t: float,
    observable: PauliSum,
    tol: float = DEFAULT_EVOLVE_TOL,
) -> tuple[float, float]:
    """Observable value along the physical path vs the effective picture.

    Path: apply d1, evolve under the analog schedule to t, apply d2, measure.
    Direct: evolve psi0 under the conjugated schedule d1^dag H d1 and measure
    the observable conjugated by the combined frame V = d2 * d1.
    """
    phi = apply_circuit(psi0.copy(), d1)
    evolve(phi, analog, 0.0, t, tol)
    apply_circuit(phi, d2)
    path_value = expect(phi, observable)

    eff_groups = tuple(
        (conjugate_by_circuit(op, d1), f) for op, f in analog.groups
    )
    eff = HamiltonianSchedule(groups=eff_groups, horizon=analog.horizon)
    chi = evolve(psi0.copy(), eff, 0.0, t, tol)
    frame = d1 + d2
    direct_value = expect(chi, conjugate_by_circuit(observable, frame))
    return path_value, direct_value


def dense_hamiltonian(op: PauliSum, site_cap: int = 12) -> np.ndarray:
    from .pauli import to_matrix

    return to_matrix(op, site_cap=site_cap)


def ground_state(op: PauliSum, site_cap: int = 12) -> tuple[float, StateVector]:
    """Lowest eigenpair of a Hermitian Pauli sum by dense diagonalization."""
    m = dense_hamiltonian(op, site_cap=site_cap)
    energies, vecs = np.linalg.eigh(m)
    return float(energies[0]), StateVector(op.n, vecs[:, 0].copy())


def fidelity(a: StateVector, b: StateVector) -> float:
    return float(abs(a.overlap(b)) ** 2)
