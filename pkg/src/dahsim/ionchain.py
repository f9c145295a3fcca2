"""Ising coupling synthesis from a physical ion-chain model.

Equilibrium positions of a harmonically confined Coulomb chain (damped
Newton), transverse normal modes (symmetric Hessian eigenproblem), and the
dispersive spin-spin coupling matrix

    J_ij = sum_k eta_ik eta_jk Omega_i Omega_j / (2 (mu + omega_1 - omega_k)),

with eta_ik = eta0 * b_ik and omega_1 the lowest transverse mode (the drive
detuning is specified relative to it).  After assembly a single global scale
sets the mean nearest-neighbor coupling to the configured target, so eta0
only shapes the distance decay.

All frequencies are angular; the JSON boundary accepts plain Hz and applies
the 2*pi conversion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi
DEFAULT_RESONANCE_GUARD = TWO_PI * 100.0

_NEWTON_MAX_ITER = 100
_NEWTON_RESIDUAL = 1e-12


class ChainError(ValueError):
    """Raised on invalid chain specs or failed synthesis steps."""


@dataclass(frozen=True)
class IonChainSpec:
    """Physical chain parameters (angular frequencies)."""

    n_ions: int
    omega_z: float
    omega_x: float
    omega_rel: tuple[float, ...]
    mu: float
    eta0: float = 0.1
    j_target: float = TWO_PI * 200.0

    def __post_init__(self):
        if self.n_ions < 2:
            raise ChainError("need at least two ions")
        if not (self.omega_x > self.omega_z > 0):
            raise ChainError("require omega_x > omega_z > 0")
        object.__setattr__(self, "omega_rel", tuple(float(o) for o in self.omega_rel))
        if len(self.omega_rel) != self.n_ions:
            raise ChainError("omega_rel must list one relative amplitude per ion")
        if any(o < 0 for o in self.omega_rel):
            raise ChainError("relative drive amplitudes must be non-negative")

    @classmethod
    def from_json(cls, text: str | dict) -> "IonChainSpec":
        doc = json.loads(text) if isinstance(text, str) else text
        return cls(
            n_ions=int(doc["N"]),
            omega_z=TWO_PI * float(doc["omega_z_hz"]),
            omega_x=TWO_PI * float(doc["omega_x_hz"]),
            omega_rel=tuple(doc["omega_rel"]),
            mu=TWO_PI * float(doc["mu_hz"]),
            eta0=float(doc.get("eta0", 0.1)),
            j_target=TWO_PI * float(doc.get("J_target_hz", 200.0)),
        )


@dataclass(frozen=True)
class ModeData:
    """Transverse normal modes: frequencies ascending, vectors as columns."""

    frequencies: np.ndarray
    vectors: np.ndarray
    omega_x: float

    def __post_init__(self):
        n = self.vectors.shape[0]
        gram = self.vectors.T @ self.vectors
        if np.abs(gram - np.eye(n)).max() > 1e-10:
            raise ChainError("mode vectors are not orthonormal")
        if abs(self.frequencies[-1] - self.omega_x) > 1e-9 * self.omega_x:
            raise ChainError(
                "highest transverse mode must be the center-of-mass mode at omega_x"
            )


def equilibrium_positions(spec: IonChainSpec) -> np.ndarray:
    """Dimensionless equilibrium positions (length unit l0 with
    l0^3 = e^2 / (4 pi eps0 m omega_z^2)), sorted ascending, symmetric."""
    n = spec.n_ions
    # literature estimate of the central spacing gives a robust starting chain
    d0 = 2.018 / n**0.559
    u = (np.arange(n) - (n - 1) / 2.0) * d0

    def force(u):
        diff = u[:, None] - u[None, :]
        np.fill_diagonal(diff, np.inf)
        inv2 = np.sign(diff) / diff**2
        return u - np.sum(np.triu(inv2, 1), axis=1) + np.sum(np.tril(inv2, -1), axis=1)

    def jacobian(u):
        diff = u[:, None] - u[None, :]
        np.fill_diagonal(diff, np.inf)
        inv3 = 2.0 / np.abs(diff) ** 3
        jac = -inv3
        np.fill_diagonal(jac, 1.0 + np.sum(inv3, axis=1))
        return jac

    f = force(u)
    for _ in range(_NEWTON_MAX_ITER):
        res = np.abs(f).max()
        if res <= _NEWTON_RESIDUAL:
            break
        step = np.linalg.solve(jacobian(u), f)
        lam = 1.0
        # damping: backtrack until the residual actually decreases
        for _ in range(40):
            trial = u - lam * step
            if np.all(np.diff(np.sort(trial)) > 0) and np.abs(force(trial)).max() < res:
                break
            lam *= 0.5
        else:
            raise ChainError("Newton damping failed to find a descent step")
        u = trial
        f = force(u)
    else:
        raise ChainError(
            f"equilibrium solve did not reach residual {_NEWTON_RESIDUAL} "
            f"within {_NEWTON_MAX_ITER} iterations"
        )
    u = np.sort(u)
    u -= u.mean()
    return 0.5 * (u - u[::-1])  # enforce exact reflection symmetry


def transverse_modes(positions: np.ndarray, spec: IonChainSpec) -> ModeData:
    """Eigenmodes of the transverse Hessian at the equilibrium positions."""
    n = spec.n_ions
    if positions.shape != (n,):
        raise ChainError("positions do not match the chain size")
    alpha = (spec.omega_x / spec.omega_z) ** 2
    diff = positions[:, None] - positions[None, :]
    np.fill_diagonal(diff, np.inf)
    inv3 = 1.0 / np.abs(diff) ** 3
    k = inv3.copy()
    np.fill_diagonal(k, alpha - inv3.sum(axis=1))
    eigvals, eigvecs = np.linalg.eigh(k)
    if eigvals[0] <= 0:
        raise ChainError(
            "transverse spectrum not positive: chain is unstable against "
            "zig-zag buckling (omega_x too low for this omega_z and ion count)"
        )
    freqs = spec.omega_z * np.sqrt(eigvals)
    return ModeData(frequencies=freqs, vectors=eigvecs, omega_x=spec.omega_x)


def coupling_matrix(
    modes: ModeData,
    spec: IonChainSpec,
    resonance_guard: float = DEFAULT_RESONANCE_GUARD,
) -> np.ndarray:
    """Symmetric zero-diagonal coupling matrix, globally rescaled so that the
    mean nearest-neighbor coupling equals ``spec.j_target`` exactly."""
    omega = np.asarray(modes.frequencies)
    b = np.asarray(modes.vectors)
    n = b.shape[0]
    denom = spec.mu + omega[0] - omega
    bad = np.nonzero(np.abs(denom) <= resonance_guard)[0]
    if bad.size:
        k = int(bad[0])
        raise ChainError(
            f"drive detuning is resonant with mode {k} "
            f"(|mu + omega_1 - omega_{k}| = {abs(denom[k]):.3g} <= guard {resonance_guard:.3g})"
        )
    eta = spec.eta0 * b
    rabi = np.asarray(spec.omega_rel)
    j = (eta / (2.0 * denom)[None, :]) @ eta.T
    j *= rabi[:, None] * rabi[None, :]
    np.fill_diagonal(j, 0.0)
    j = 0.5 * (j + j.T)
    nn_mean = np.mean(np.diagonal(j, offset=1))
    if nn_mean == 0.0:
        raise ChainError("mean nearest-neighbor coupling vanished; cannot rescale")
    return (spec.j_target / nn_mean) * j


def synthesize_couplings(spec: IonChainSpec) -> np.ndarray:
    """Full pipeline: positions -> modes -> scaled coupling matrix."""
    return coupling_matrix(transverse_modes(equilibrium_positions(spec), spec), spec)


def couplings_to_csv(j: np.ndarray) -> str:
    """CSV with ion row/column headers."""
    n = j.shape[0]
    header = "ion," + ",".join(f"ion_{k}" for k in range(n))
    lines = [header]
    for i in range(n):
        lines.append(f"ion_{i}," + ",".join(f"{j[i, k]:.17g}" for k in range(n)))
    return "\n".join(lines) + "\n"
