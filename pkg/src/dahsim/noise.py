"""Stochastic dephasing as phase-flip trajectories.

The analog evolution is divided into slices of duration dt; after each slice
a pi phase flip is applied to spin i with probability p_i = gamma_i * dt / 2,
independently per slice and site.  Averaging many trajectories reproduces the
dephasing channel (single-qubit coherence decays as exp(-gamma t) in the
small-p limit) without free parameters.

Draws come from a counter-based generator keyed by (master seed, trajectory
index), so a trajectory's event list is a pure function of its key: parallel
and serial execution produce bit-identical results.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class NoiseConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DephasingModel:
    """Per-site flip rates (inverse time, same unit as the schedule), slice
    duration, and the 64-bit master seed."""

    gamma: tuple[float, ...]
    dt: float
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        if self.dt <= 0:
            raise NoiseConfigError("slice duration must be positive")
        if any(g < 0 for g in self.gamma):
            raise NoiseConfigError("dephasing rates must be non-negative")
        if any(p > 1.0 for p in self.flip_probabilities()):
            raise NoiseConfigError(
                "p_i = gamma_i*dt/2 exceeds 1: the time slice is too coarse"
            )

    @property
    def n_sites(self) -> int:
        return len(self.gamma)

    def flip_probabilities(self) -> np.ndarray:
        return np.asarray(self.gamma) * self.dt / 2.0

    def n_slices(self, horizon: float) -> int:
        if horizon < 0:
            raise NoiseConfigError("horizon must be non-negative")
        return int(np.floor(horizon / self.dt + 1e-9))


def flip_table(model: DephasingModel, horizon: float, stream: int) -> np.ndarray:
    """Boolean (n_slices, n_sites) table of flip events for one trajectory.

    Keyed by (seed, stream); independent of evaluation order.
    """
    n = model.n_slices(horizon)
    key = np.array([model.seed, stream], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    draws = rng.random((n, model.n_sites))
    return draws < model.flip_probabilities()[None, :]


def trajectory_insertions(
    model: DephasingModel, horizon: float, stream: int
) -> list[tuple[int, int]]:
    """Sorted (time slice, site) phase-flip events for one trajectory."""
    table = flip_table(model, horizon, stream)
    slices, sites = np.nonzero(table)
    return list(zip(slices.tolist(), sites.tolist()))


def trajectory_average(
    run: Callable[[int], np.ndarray],
    n_trajectories: int,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and standard error of ``run(trajectory_index)`` outputs.

    Trajectories are independent work items; results are reduced in index
    order regardless of the thread count, so the output is deterministic.
    """
    if n_trajectories < 2:
        raise NoiseConfigError("need at least two trajectories for a standard error")
    indices = range(n_trajectories)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, indices))
    else:
        results = [run(m) for m in indices]
    stacked = np.stack([np.asarray(r, dtype=float) for r in results], axis=0)
    mean = stacked.mean(axis=0)
    stderr = stacked.std(axis=0, ddof=1) / np.sqrt(n_trajectories)
    return mean, stderr


def parse_noise_config(doc: dict) -> tuple[DephasingModel, int]:
    """Noise JSON: {"gamma": [...], "gamma_unit": "per_s"|"per_us",
    "dt_us": 20, "seed": 1234, "trajectories": 500}.

    Returns the model with rates in 1/us alongside the trajectory count.
    """
    gamma = [float(g) for g in doc["gamma"]]
    unit = doc.get("gamma_unit", "per_s")
    if unit == "per_s":
        gamma = [g * 1e-6 for g in gamma]
    elif unit != "per_us":
        raise NoiseConfigError(f"unknown gamma_unit {unit!r}")
    dt_us = float(doc.get("dt_us", 20.0))
    seed = int(doc.get("seed", 0))
    trajectories = int(doc.get("trajectories", 500))
    return DephasingModel(tuple(gamma), dt_us, seed), trajectories
