"""Hybrid digital-analog simulation toolkit.

Shallow entangling layers conjugate a native analog Hamiltonian (one-body
fields or a long-range transverse-field Ising model) into effective
Hamiltonians with three- and four-body terms.  The package provides the
operator-algebra compiler (`pauli`), circuit builders for the digital blocks
(`circuits`), a dense state-vector engine (`engine`), trapped-ion coupling
synthesis (`ionchain`), a stochastic dephasing model (`noise`), edge-mode
theory and infinite-temperature sampling (`zeromode`), and an experiment
harness with a CLI (`experiments`, `cli`).
"""

__version__ = "0.1.0"

from . import pauli, circuits, engine, ionchain, noise, zeromode  # noqa: F401
