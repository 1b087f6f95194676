"""Sample the polarization walk (Z_i, tau) without materializing a tree.

For depths where the exact tree is out of reach (n >= ~26) the stopping-time
statistics are estimated by simulating the walk directly: start at the root
erasure probability, step to the flat or sharp child with probability 1/2
each, stop once min(Z, 1-Z) <= epsilon * 2**-n or depth n is hit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .erasure import z_flat, z_sharp


@dataclass(frozen=True)
class ProcessSample:
    """One trajectory of the channel-selection walk."""

    tau: int
    z_final: float
    path: str  # branch choices taken, 'f'/'s' per step; len(path) == tau


@dataclass(frozen=True)
class TauStats:
    mean: float
    stderr: float
    trials: int
    seed: int


@dataclass(frozen=True)
class MartingaleReport:
    mean_capacity: float
    expected_capacity: float
    deviation: float
    stderr: float
    trials: int
    seed: int


def _validate(z_root: float, n: int, epsilon: float) -> float:
    if not 0.0 <= z_root <= 1.0:
        raise ValueError(f"z_root must lie in [0, 1], got {z_root!r}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n!r}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    return epsilon * 2.0 ** (-n)


def sample_process(
    z_root: float, n: int, epsilon: float, rng: np.random.Generator
) -> ProcessSample:
    """Run one walk; consumes exactly one random draw per step taken."""
    threshold = _validate(z_root, n, epsilon)
    z = float(z_root)
    steps = []
    while len(steps) < n and min(z, 1.0 - z) > threshold:
        if rng.integers(0, 2):
            z = z_sharp(z)
            steps.append("s")
        else:
            z = z_flat(z)
            steps.append("f")
    return ProcessSample(tau=len(steps), z_final=z, path="".join(steps))


def sample_tau_mean(
    z_root: float, n: int, epsilon: float, trials: int = 1000, seed: int = 0
) -> TauStats:
    """Mean and standard error of tau over independent trials.

    Trial i uses its own stream seeded ``seed + i``, so results do not
    depend on how trials are scheduled or partitioned across workers.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    taus = np.empty(trials, dtype=np.int64)
    for i in range(trials):
        rng = np.random.default_rng(seed + i)
        taus[i] = sample_process(z_root, n, epsilon, rng).tau
    mean = float(taus.mean())
    stderr = float(taus.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return TauStats(mean=mean, stderr=stderr, trials=trials, seed=seed)


def check_martingale(
    z_root: float, n: int, epsilon: float, trials: int = 1000, seed: int = 0
) -> MartingaleReport:
    """Compare the sample mean of 1 - Z_tau against the capacity 1 - Z_0.

    The stopped walk conserves capacity in expectation, so the deviation
    shrinks like 1/sqrt(trials).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    finals = np.empty(trials, dtype=np.float64)
    for i in range(trials):
        rng = np.random.default_rng(seed + i)
        finals[i] = 1.0 - sample_process(z_root, n, epsilon, rng).z_final
    mean = float(finals.mean())
    expected = 1.0 - z_root
    stderr = float(finals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return MartingaleReport(
        mean_capacity=mean,
        expected_capacity=expected,
        deviation=mean - expected,
        stderr=stderr,
        trials=trials,
        seed=seed,
    )
