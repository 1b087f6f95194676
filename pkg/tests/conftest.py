"""Shared fixtures and independent reference oracles.

The reference implementations here deliberately avoid the library's
vectorized code paths: the tree oracle is a plain recursive grower, the
transform oracle is a Kronecker-power matrix multiply, and the device
oracle walks nodes one by one. They exist so the array implementations are
checked against something that cannot share their bugs.
"""

from __future__ import annotations

import numpy as np
import pytest

from prunedpolar import grow_tree, select_utilized


def reference_leaves(z_root: float, n: int, epsilon: float):
    """Recursive reference for the growth rule: [(depth, z, path), ...]."""
    threshold = epsilon * 2.0 ** (-n)
    out = []

    def rec(z, d, path):
        if d < n and min(z, 1.0 - z) > threshold:
            rec(z * (2.0 - z), d + 1, path + "f")
            rec(z * z, d + 1, path + "s")
        else:
            out.append((d, z, path))

    rec(z_root, 0, "")
    return out


def transform_matrix(n: int) -> np.ndarray:
    """n-fold Kronecker power of the base [[1,0],[1,1]] kernel, over GF(2)."""
    g = np.array([[1]], dtype=np.uint8)
    base = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    for _ in range(n):
        g = np.kron(g, base) % 2
    return g


def enumerate_devices(tree) -> int:
    """Walk every internal node, summing its 2**(n - depth) instances."""
    total = 0
    for i in range(tree.node_count):
        if tree.flat_child[i] != -1:
            total += 2 ** (tree.n - int(tree.depth[i]))
    return total


def random_spec(rng: np.random.Generator, max_n: int = 12):
    """A rule-built spec with random parameters; retries until K > 0."""
    while True:
        n = int(rng.integers(1, max_n + 1))
        z = float(rng.uniform(0.05, 0.95))
        eps = float(rng.uniform(0.05, 0.9))
        spec = select_utilized(grow_tree(z, n, eps))
        if spec.params.message_length > 0:
            return spec


@pytest.fixture(scope="session")
def worked_tree():
    """The depth-3 construction from the half-erasure channel walkthrough."""
    return grow_tree(0.5, 3, 0.5)


@pytest.fixture(scope="session")
def worked_spec(worked_tree):
    return select_utilized(worked_tree)


#: Exact E[tau] rows for the capacity-.618 reference channel, eps = 2^(-n/5).
EXPECTED_TAU_TABLE = [
    0.0, 0.0, 1.5, 2.75, 3.375, 4.5625, 5.125, 5.828125, 6.5234375,
    6.96875, 7.90625, 8.3544921875, 8.7314453125, 9.26879882812,
    9.63500976562, 9.91046142578, 10.3467407227, 10.6794891357,
    10.9180297852, 11.3841133118, 11.5504550934, 11.7551832199,
    11.9149127007, 12.0850632191, 12.255657196, 12.4046368599,
]
