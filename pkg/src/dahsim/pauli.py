"""Exact algebra of Pauli strings and real-weighted Pauli sums.

A ``PauliString`` is a signed tensor product of single-site Pauli letters,
stored as two bit masks (x, z) packed into Python integers (bit j = site j)
plus a phase that is a power of i.  Products and commutation checks are
word-parallel bit operations; this is the hot path of the effective-
Hamiltonian compiler.

A ``PauliSum`` maps phase-free canonical strings to coefficients.  String
phases are folded into the coefficients on construction so that term merging
is a pure key lookup.  Conjugation by circuit gates (``conjugate_by_gate``,
``conjugate_by_circuit``) computes c^dagger * op * c exactly: Clifford gates
map strings one-to-one, general rotations split each non-commuting string
into a cosine/sine pair, so the term count at most doubles per non-Clifford
gate.

Site indexing is 0-based throughout; basis index bit order puts site 0 in the
most significant position (matching the engine's state layout).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

LETTERS = "IXYZ"

# letter -> (x bit, z bit); Y = i * X * Z keeps every letter Hermitian
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}

_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)  # i**k for k = 0..3

DEFAULT_PRUNE_THRESHOLD = 1e-12
MATRIX_SITE_CAP = 12

_CLIFFORD_SNAP = 1e-12


class PauliError(ValueError):
    """Raised on malformed Pauli operations (length mismatch, bad targets)."""


def _phase_to_exp(phase: complex) -> int:
    for k, p in enumerate(_PHASES):
        if abs(phase - p) < 1e-9:
            return k
    raise PauliError(f"phase must be one of +1, -1, +i, -i, got {phase!r}")


class PauliString:
    """Immutable signed Pauli string on ``n`` sites.

    The operator is ``i**phase_exp * prod_j sigma_(letter_j)``.  Strings are
    hashable; equality includes the phase.
    """

    __slots__ = ("n", "x", "z", "phase_exp")

    def __init__(self, n: int, x: int, z: int, phase_exp: int = 0):
        if n <= 0:
            raise PauliError("site count must be positive")
        mask = (1 << n) - 1
        self.n = n
        self.x = x & mask
        self.z = z & mask
        self.phase_exp = phase_exp & 3

    @classmethod
    def from_letters(cls, letters: str | Sequence[str], phase: complex = 1) -> "PauliString":
        x = z = 0
        for j, ch in enumerate(letters):
            try:
                bx, bz = _LETTER_BITS[ch.upper()]
            except KeyError:
                raise PauliError(f"invalid Pauli letter {ch!r}") from None
            x |= bx << j
            z |= bz << j
        return cls(len(letters), x, z, _phase_to_exp(phase))

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0, 0)

    @classmethod
    def single(cls, n: int, site: int, letter: str, phase: complex = 1) -> "PauliString":
        if not 0 <= site < n:
            raise PauliError(f"site {site} out of range for {n} sites")
        bx, bz = _LETTER_BITS[letter.upper()]
        return cls(n, bx << site, bz << site, _phase_to_exp(phase))

    @property
    def phase(self) -> complex:
        return _PHASES[self.phase_exp]

    @property
    def key(self) -> tuple[int, int]:
        """Phase-free canonical key (x mask, z mask)."""
        return (self.x, self.z)

    def letter(self, site: int) -> str:
        return _BITS_LETTER[((self.x >> site) & 1, (self.z >> site) & 1)]

    def letters(self) -> str:
        return "".join(self.letter(j) for j in range(self.n))

    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def support(self) -> tuple[int, ...]:
        s = self.x | self.z
        return tuple(j for j in range(self.n) if (s >> j) & 1)

    def phase_free(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, 0)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliString)
            and self.n == other.n
            and self.x == other.x
            and self.z == other.z
            and self.phase_exp == other.phase_exp
        )

    def __hash__(self) -> int:
        return hash((self.n, self.x, self.z, self.phase_exp))

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __repr__(self) -> str:
        sign = {0: "+", 1: "+i", 2: "-", 3: "-i"}[self.phase_exp]
        return f"{sign}{self.letters()}"

    def to_matrix(self) -> np.ndarray:
        """Dense matrix, site 0 in the most significant bit position."""
        if self.n > MATRIX_SITE_CAP:
            raise PauliError(f"site count {self.n} exceeds dense cap {MATRIX_SITE_CAP}")
        dim = 1 << self.n
        xi = _index_mask(self.x, self.n)
        zi = _index_mask(self.z, self.n)
        cols = np.arange(dim)
        rows = cols ^ xi
        vals = _PHASES[((self.x & self.z).bit_count()) & 3] * _parity_sign(cols & zi)
        m = np.zeros((dim, dim), dtype=complex)
        m[rows, cols] = vals * self.phase
        return m


def _index_mask(mask: int, n: int) -> int:
    """Convert a site-order bit mask (bit j = site j) to basis-index order."""
    out = 0
    for j in range(n):
        if (mask >> j) & 1:
            out |= 1 << (n - 1 - j)
    return out


def _parity_sign(arr: np.ndarray) -> np.ndarray:
    """(-1)**popcount(arr) for an integer array."""
    return 1.0 - 2.0 * (np.bitwise_count(arr.astype(np.uint64)) & 1).astype(float)


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Canonical product a*b with accumulated phase (|phase| = 1)."""
    if a.n != b.n:
        raise PauliError(f"length mismatch: {a.n} vs {b.n}")
    x = a.x ^ b.x
    z = a.z ^ b.z
    # i-exponent: Y-counts convert letter form <-> XZ form, the (-1) factor
    # comes from commuting Z letters of a past X letters of b.
    q = (
        (a.x & a.z).bit_count()
        + (b.x & b.z).bit_count()
        - (x & z).bit_count()
        + 2 * (a.z & b.x).bit_count()
    )
    return PauliString(a.n, x, z, a.phase_exp + b.phase_exp + q)


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff the strings commute (symplectic inner product is even)."""
    if a.n != b.n:
        raise PauliError(f"length mismatch: {a.n} vs {b.n}")
    return ((a.x & b.z).bit_count() + (a.z & b.x).bit_count()) % 2 == 0


@dataclass(frozen=True)
class Gate:
    """Single gate: RX/RY/RZ(theta) (half-angle convention exp(-i theta/2 P)),
    Hadamard, or XX(theta) = exp(-i theta X(i) X(j))."""

    kind: str
    targets: tuple[int, ...]
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in ("RX", "RY", "RZ", "H", "XX"):
            raise PauliError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(self.targets))
        n_targets = 2 if self.kind == "XX" else 1
        if len(self.targets) != n_targets:
            raise PauliError(f"{self.kind} takes {n_targets} target(s), got {self.targets}")
        if self.kind == "XX" and self.targets[0] == self.targets[1]:
            raise PauliError("XX targets must be distinct")
        if self.kind == "H":
            if self.theta is not None:
                raise PauliError("H takes no angle")
        else:
            if self.theta is None or not math.isfinite(self.theta):
                raise PauliError(f"{self.kind} needs a finite angle")

    def inverse(self) -> "Gate":
        if self.kind == "H":
            return self
        return Gate(self.kind, self.targets, -self.theta)


def _check_targets(gate: Gate, n: int) -> None:
    for t in gate.targets:
        if not 0 <= t < n:
            raise PauliError(f"gate target {t} out of range for {n} sites")


class PauliSum:
    """Real- (or complex-) weighted sum of phase-free Pauli strings.

    Terms are stored as ``{(x, z): coefficient}``.  When ``hermitian`` is set
    all coefficients are real after phase normalization.  Zero-coefficient
    terms are pruned below ``threshold``.
    """

    __slots__ = ("n", "_terms", "hermitian", "threshold", "_matrix_cache")

    def __init__(
        self,
        n: int,
        terms: dict[tuple[int, int], complex] | None = None,
        hermitian: bool = True,
        threshold: float = DEFAULT_PRUNE_THRESHOLD,
    ):
        self.n = n
        self._terms: dict[tuple[int, int], complex] = dict(terms or {})
        self.hermitian = hermitian
        self.threshold = threshold
        self._matrix_cache = None
        self._normalize()

    @classmethod
    def from_terms(
        cls,
        terms: Iterable[tuple[complex, PauliString | str]],
        n: int | None = None,
        hermitian: bool = True,
        threshold: float = DEFAULT_PRUNE_THRESHOLD,
    ) -> "PauliSum":
        """Build from (coefficient, string) pairs; string phases fold into
        the coefficients."""
        acc: dict[tuple[int, int], complex] = {}
        size = n
        for coeff, s in terms:
            if isinstance(s, str):
                s = PauliString.from_letters(s)
            if size is None:
                size = s.n
            elif s.n != size:
                raise PauliError(f"length mismatch: {s.n} vs {size}")
            acc[s.key] = acc.get(s.key, 0.0) + coeff * s.phase
        if size is None:
            raise PauliError("cannot infer site count from empty terms")
        return cls(size, acc, hermitian=hermitian, threshold=threshold)

    def _normalize(self) -> None:
        drop = []
        for key, c in self._terms.items():
            if abs(c) <= self.threshold:
                drop.append(key)
                continue
            if self.hermitian:
                if abs(c.imag) > 1e-9 * max(1.0, abs(c)):
                    raise PauliError(
                        f"non-real coefficient {c!r} in a sum flagged Hermitian"
                    )
                self._terms[key] = complex(c.real, 0.0)
        for key in drop:
            del self._terms[key]
        self._matrix_cache = None

    # -- inspection ---------------------------------------------------------

    def items(self) -> Iterator[tuple[PauliString, complex]]:
        for (x, z), c in self._terms.items():
            yield PauliString(self.n, x, z), c

    def coefficient(self, s: PauliString | str) -> complex:
        if isinstance(s, str):
            s = PauliString.from_letters(s)
        if s.n != self.n:
            raise PauliError(f"length mismatch: {s.n} vs {self.n}")
        # querying with a phased string s = phase * P returns c / phase
        return self._terms.get(s.key, 0.0) * s.phase.conjugate()

    def num_terms(self) -> int:
        return len(self._terms)

    def coefficient_norm(self) -> float:
        """2-norm of the coefficient vector."""
        return math.sqrt(sum(abs(c) ** 2 for c in self._terms.values()))

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        parts = [f"{c:+.6g} {PauliString(self.n, x, z).letters()}" for (x, z), c in self._terms.items()]
        return f"PauliSum({', '.join(parts[:6])}{', ...' if len(parts) > 6 else ''})"

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if self.n != other.n:
            raise PauliError(f"length mismatch: {self.n} vs {other.n}")
        acc = dict(self._terms)
        for key, c in other._terms.items():
            acc[key] = acc.get(key, 0.0) + c
        return PauliSum(self.n, acc, hermitian=self.hermitian and other.hermitian,
                        threshold=min(self.threshold, other.threshold))

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + other.scaled(-1.0)

    def scaled(self, factor: complex) -> "PauliSum":
        herm = self.hermitian and abs(complex(factor).imag) == 0.0
        return PauliSum(self.n, {k: factor * c for k, c in self._terms.items()},
                        hermitian=herm, threshold=self.threshold)

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        """Operator product of two sums (term count may grow to len*len)."""
        if self.n != other.n:
            raise PauliError(f"length mismatch: {self.n} vs {other.n}")
        acc: dict[tuple[int, int], complex] = {}
        for (xa, za), ca in self._terms.items():
            a = PauliString(self.n, xa, za)
            for (xb, zb), cb in other._terms.items():
                p = multiply(a, PauliString(self.n, xb, zb))
                acc[p.key] = acc.get(p.key, 0.0) + ca * cb * p.phase
        return PauliSum(self.n, acc, hermitian=False,
                        threshold=min(self.threshold, other.threshold))

    def to_matrix(self) -> np.ndarray:
        return to_matrix(self)

    # -- text format --------------------------------------------------------

    def to_text(self) -> str:
        """One term per line: ``<coeff> <letters>`` with 17 significant digits."""
        lines = []
        for (x, z), c in sorted(self._terms.items()):
            val = c.real if self.hermitian else c
            lines.append(f"{val:.17g} {PauliString(self.n, x, z).letters()}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, hermitian: bool = True) -> "PauliSum":
        terms = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            coeff_str, letters = line.split()
            terms.append((complex(coeff_str) if not hermitian else float(coeff_str), letters))
        return cls.from_terms(terms, hermitian=hermitian)


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """[a, b] = a@b - b@a (anti-Hermitian for Hermitian inputs)."""
    return (a @ b) - (b @ a)


def _snap_angle(theta: float, unit: float) -> int | None:
    """Return k if theta is within snap distance of k*unit, else None."""
    k = round(theta / unit)
    if abs(theta - k * unit) < _CLIFFORD_SNAP:
        return k
    return None


_ROTATION_GENERATOR = {"RX": "X", "RY": "Y", "RZ": "Z"}


def conjugate_by_gate(op: PauliSum, gate: Gate) -> PauliSum:
    """g^dagger * op * g, exact.

    Hadamard and Clifford-angle rotations map each string to one string.  A
    general rotation with generator G splits each string P that anticommutes
    with G into cos(Theta) P - i sin(Theta) P G, where Theta is the full
    conjugation angle (the gate angle for RX/RY/RZ, twice the angle for XX).
    """
    _check_targets(gate, op.n)
    acc: dict[tuple[int, int], complex] = {}

    def add(s: PauliString, c: complex) -> None:
        acc[s.key] = acc.get(s.key, 0.0) + c * s.phase

    if gate.kind == "H":
        j = gate.targets[0]
        bit = 1 << j
        for (x, z), c in op._terms.items():
            xb, zb = (x >> j) & 1, (z >> j) & 1
            nx = (x & ~bit) | (zb << j)
            nz = (z & ~bit) | (xb << j)
            sign = -1.0 if (xb and zb) else 1.0  # Y -> -Y
            add(PauliString(op.n, nx, nz), sign * c)
        return PauliSum(op.n, acc, hermitian=op.hermitian, threshold=op.threshold)

    if gate.kind in _ROTATION_GENERATOR:
        gen = PauliString.single(op.n, gate.targets[0], _ROTATION_GENERATOR[gate.kind])
        full_angle = gate.theta
    else:  # XX
        i, j = gate.targets
        gen = PauliString(op.n, (1 << i) | (1 << j), 0)
        full_angle = 2.0 * gate.theta

    k = _snap_angle(full_angle, math.pi / 2)
    if k is not None:
        cos_t = (1.0, 0.0, -1.0, 0.0)[k & 3]
        sin_t = (0.0, 1.0, 0.0, -1.0)[k & 3]
    else:
        cos_t, sin_t = math.cos(full_angle), math.sin(full_angle)

    for (x, z), c in op._terms.items():
        p = PauliString(op.n, x, z)
        if commutes(p, gen):
            add(p, c)
            continue
        if cos_t != 0.0:
            add(p, cos_t * c)
        if sin_t != 0.0:
            pg = multiply(p, gen)
            add(pg, -1j * sin_t * c)
    return PauliSum(op.n, acc, hermitian=op.hermitian, threshold=op.threshold)


def conjugate_by_circuit(op: PauliSum, circuit) -> PauliSum:
    """c^dagger * op * c for a gate list in application order.

    The fold runs over the gates in reverse (the last-applied gate is the
    innermost conjugation), so composing circuits composes conjugations.
    """
    gates = circuit.gates if hasattr(circuit, "gates") else tuple(circuit)
    for gate in reversed(gates):
        op = conjugate_by_gate(op, gate)
    return op


def to_matrix(op: PauliSum | PauliString, site_cap: int = MATRIX_SITE_CAP) -> np.ndarray:
    """Exact dense matrix by signed-permutation assembly (test oracle)."""
    if isinstance(op, PauliString):
        if op.n > site_cap:
            raise PauliError(f"site count {op.n} exceeds dense cap {site_cap}")
        return op.to_matrix()
    if op.n > site_cap:
        raise PauliError(f"site count {op.n} exceeds dense cap {site_cap}")
    dim = 1 << op.n
    m = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for (x, z), c in op._terms.items():
        xi = _index_mask(x, op.n)
        zi = _index_mask(z, op.n)
        vals = c * _PHASES[(x & z).bit_count() & 3] * _parity_sign(cols & zi)
        m[cols ^ xi, cols] += vals
    return m
