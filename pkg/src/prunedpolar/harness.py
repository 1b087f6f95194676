"""Experiment harness: parameter coupling, tables, and Monte Carlo runs.

This is the layer the CLI calls into. It owns the two (n, epsilon)
conventions -- fix epsilon and set n = ceil(-5*log2(eps)), or fix n and set
eps = 2**(-n/5) -- plus the reference channel used by all bundled tables,
whose capacity is the golden-ratio conjugate 0.618... (printed as .618 in
the tables this package reproduces; the rounded 0.382 does not regenerate
them).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import codec
from .erasure import BecChannel
from .tree import (
    DEFAULT_NODE_BUDGET,
    CodeSpec,
    LimitExceededError,
    expected_tau,
    grow_tree,
    select_utilized,
)

#: Erasure probability of the reference channel, (3 - sqrt(5)) / 2.
DEFAULT_Z_ROOT = (3.0 - math.sqrt(5.0)) / 2.0

#: Exact tree analysis is kept to this depth; beyond it, sample the process.
EXACT_DEPTH_BUDGET = 25


def epsilon_for_depth(n: int) -> float:
    """The table convention: eps = 2**(-n/5).

    At n = 0 this would be 1.0, outside the open interval epsilon lives in;
    it is clamped to the largest double below 1, which changes nothing (a
    depth-0 tree is a single node either way).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    return min(2.0 ** (-n / 5), float(np.nextafter(1.0, 0.0)))


def depth_for_epsilon(epsilon: float) -> int:
    """The construction convention: n = ceil(-5 * log2(eps))."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    return max(0, math.ceil(-5.0 * math.log2(epsilon)))


def build_spec(z_root: float, n: int, epsilon: float,
               node_budget: int = DEFAULT_NODE_BUDGET) -> CodeSpec:
    """Grow the tree and select the utilized set in one step."""
    return select_utilized(grow_tree(z_root, n, epsilon, node_budget=node_budget))


def tau_table(z_root: float = DEFAULT_Z_ROOT, n_max: int = EXACT_DEPTH_BUDGET,
              depth_budget: int = EXACT_DEPTH_BUDGET) -> list[tuple[int, float]]:
    """Exact E[tau] for n = 0..n_max under the eps = 2**(-n/5) coupling."""
    if n_max > depth_budget:
        raise LimitExceededError(
            f"exact E[tau] is supported for n <= {depth_budget}; "
            f"use tau-sample for deeper trees"
        )
    rows = []
    for n in range(n_max + 1):
        tree = grow_tree(z_root, n, epsilon_for_depth(n))
        rows.append((n, expected_tau(tree)))
    return rows


@dataclass(frozen=True)
class AnalysisReport:
    """Code parameters plus the headline inequality checks."""

    z_root: float
    n: int
    epsilon: float
    block_length: int
    message_length: int
    rate: float
    error_bound: float
    expected_tau: float
    device_count: float
    capacity: float
    error_bound_ok: bool       # error_bound <= epsilon
    rate_flag: str             # 'pass' / 'near' / 'fail' vs capacity - epsilon
    rate_conservation_ok: bool  # R * (1 - eps*2^-n) <= capacity
    coupled_block_length: float  # epsilon**-5, for comparison with N

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def analyze(z_root: float, n: int, epsilon: float,
            node_budget: int = DEFAULT_NODE_BUDGET) -> AnalysisReport:
    spec = build_spec(z_root, n, epsilon, node_budget=node_budget)
    p = spec.params
    capacity = 1.0 - z_root
    target = capacity - epsilon
    if p.rate >= target:
        flag = "pass"
    elif target - p.rate <= 0.1 * epsilon:
        flag = "near"
    else:
        flag = "fail"
    return AnalysisReport(
        z_root=z_root,
        n=n,
        epsilon=epsilon,
        block_length=p.block_length,
        message_length=p.message_length,
        rate=p.rate,
        error_bound=p.error_bound,
        expected_tau=p.expected_tau,
        device_count=p.device_count,
        capacity=capacity,
        error_bound_ok=p.error_bound <= epsilon,
        rate_flag=flag,
        rate_conservation_ok=p.rate * (1.0 - spec.tree.threshold) <= capacity + 1e-12,
        coupled_block_length=epsilon ** -5,
    )


@dataclass
class SimReport:
    """Aggregated Monte Carlo results for one configuration."""

    z_root: float
    n: int
    epsilon: float
    trials: int
    seed: int
    blocks_sent: int = 0
    block_errors: int = 0
    bits_sent: int = 0
    measured_rate: float = 0.0
    exact_rate: float = 0.0
    error_bound: float = 0.0
    expected_tau: float = 0.0
    device_count: float = 0.0
    block_length: int = 0
    message_length: int = 0
    wall_time_per_bit: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def run_monte_carlo(
    z_root: float,
    n: int,
    epsilon: float,
    trials: int,
    seed: int,
    chunk: int = 256,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> SimReport:
    """Push random blocks through encode -> BEC(z_root) -> decode.

    Block i draws its message bits and then its channel noise from a private
    stream seeded ``seed ^ i``, so the report is identical no matter how
    blocks are chunked or distributed. BlockErrors are counted, never
    raised; a decoded block whose message mismatches what was sent would be
    a codec bug and does raise.
    """
    if trials < 0:
        raise ValueError("trials must be >= 0")
    spec = build_spec(z_root, n, epsilon, node_budget=node_budget)
    p = spec.params
    report = SimReport(
        z_root=z_root, n=n, epsilon=epsilon, trials=trials, seed=seed,
        exact_rate=p.rate, error_bound=p.error_bound, expected_tau=p.expected_tau,
        device_count=p.device_count, block_length=p.block_length,
        message_length=p.message_length,
    )
    t0 = time.perf_counter()
    for start in range(0, trials, chunk):
        count = min(chunk, trials - start)
        rngs = [np.random.default_rng(seed ^ (start + j)) for j in range(count)]
        msgs = np.stack(
            [r.integers(0, 2, p.message_length, dtype=np.uint8) for r in rngs]
        )
        frames = codec.encode_frames(spec, msgs)
        rx = np.stack(
            [
                BecChannel(z_root, rng=r).transmit_frame(frames[j])
                for j, r in enumerate(rngs)
            ]
        )
        result = codec.decode_frames(spec, rx)
        ok = ~result.failed
        if not np.array_equal(result.messages[ok], msgs[ok]):
            raise AssertionError("decoded message mismatch on a non-errored block")
        report.blocks_sent += count
        report.block_errors += int(result.failed.sum())
    elapsed = time.perf_counter() - t0
    report.bits_sent = report.blocks_sent * p.message_length
    report.measured_rate = (
        report.bits_sent / (report.blocks_sent * p.block_length)
        if report.blocks_sent
        else 0.0
    )
    report.wall_time_per_bit = elapsed / report.bits_sent if report.bits_sent else None
    return report
