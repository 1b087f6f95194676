"""Pruned channel trees: growth rule, code parameters, serialization.

A tree is grown from a root erasure probability by repeatedly splitting every
channel that is still undecided -- neither reliable nor unreliable enough --
until the target depth. Splitting stops at a channel w once
``min(Z(w), 1-Z(w)) <= epsilon * 2**-n`` (or depth n is reached), and the
utilized set picks up the leaves with ``Z(w) <= epsilon * 2**-n``. Nodes are
stored as flat arrays in breadth-first order so that growth and the derived
code parameters are plain vectorized sweeps even for multi-million-node
trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .erasure import z_flat, z_sharp

#: Refuse to grow trees beyond this many nodes (exact analysis is meant for
#: n <= ~25; deeper regimes belong to process sampling).
DEFAULT_NODE_BUDGET = 1 << 26

_NO_CHILD = -1


class LimitExceededError(RuntimeError):
    """A tree would exceed the configured node budget."""


class TreeParseError(ValueError):
    """Malformed tree text: bad header, bad symbol, premature end, trailing data."""


class TreeConsistencyError(ValueError):
    """A parsed tree violates the growth-rule invariants for its (n, epsilon)."""


class TreeNode:
    """Read-only view of one node of a ChannelTree."""

    __slots__ = ("_tree", "index")

    def __init__(self, tree: "ChannelTree", index: int):
        self._tree = tree
        self.index = index

    @property
    def z(self) -> float:
        return float(self._tree.z[self.index])

    @property
    def depth(self) -> int:
        return int(self._tree.depth[self.index])

    @property
    def is_leaf(self) -> bool:
        return self._tree.flat_child[self.index] == _NO_CHILD

    @property
    def flat(self) -> "TreeNode | None":
        i = self._tree.flat_child[self.index]
        return None if i == _NO_CHILD else TreeNode(self._tree, int(i))

    @property
    def sharp(self) -> "TreeNode | None":
        i = self._tree.sharp_child[self.index]
        return None if i == _NO_CHILD else TreeNode(self._tree, int(i))

    @property
    def path(self) -> str:
        return self._tree.path_id(self.index)

    def __repr__(self):
        kind = "leaf" if self.is_leaf else "node"
        return f"<TreeNode {kind} depth={self.depth} z={self.z!r}>"


class ChannelTree:
    """A full binary tree of synthetic erasure channels, array-backed.

    Attributes
    ----------
    n : int
        Target depth; no leaf lies deeper, and the block length is 2**n.
    epsilon : float
        Pruning parameter; the stop/utilize threshold is ``epsilon * 2**-n``.
    z : float64 array
        Erasure probability per node, breadth-first order, root at index 0.
    depth : int16 array
        Depth per node.
    flat_child, sharp_child : int32 arrays
        Child indices, -1 at leaves. A node has either both or neither.
    parent : int32 array
        Parent index, -1 at the root.
    """

    def __init__(self, n, epsilon, z, depth, flat_child, sharp_child, parent):
        if not 0.0 < epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
        if n < 0:
            raise ValueError(f"n must be >= 0, got {n!r}")
        self.n = int(n)
        self.epsilon = float(epsilon)
        self.z = z
        self.depth = depth
        self.flat_child = flat_child
        self.sharp_child = sharp_child
        self.parent = parent

    # -- basic structure ---------------------------------------------------

    @property
    def z_root(self) -> float:
        return float(self.z[0])

    @property
    def node_count(self) -> int:
        return len(self.z)

    @property
    def threshold(self) -> float:
        return self.epsilon * 2.0 ** (-self.n)

    @property
    def root(self) -> TreeNode:
        return TreeNode(self, 0)

    def node(self, index: int) -> TreeNode:
        return TreeNode(self, int(index))

    @cached_property
    def leaf_mask(self) -> np.ndarray:
        return self.flat_child == _NO_CHILD

    def path_id(self, index: int) -> str:
        """Root-to-node branch string over {'f', 's'} ('' for the root)."""
        steps = []
        i = int(index)
        while self.parent[i] != _NO_CHILD:
            p = int(self.parent[i])
            steps.append("f" if self.flat_child[p] == i else "s")
            i = p
        return "".join(reversed(steps))

    def preorder(self) -> np.ndarray:
        """Node indices in depth-first preorder, flat child before sharp."""
        order = np.empty(self.node_count, dtype=np.int32)
        stack = [0]
        pos = 0
        flat, sharp = self.flat_child, self.sharp_child
        while stack:
            i = stack.pop()
            order[pos] = i
            pos += 1
            if flat[i] != _NO_CHILD:
                stack.append(int(sharp[i]))
                stack.append(int(flat[i]))
        return order

    @cached_property
    def leaves_preorder(self) -> np.ndarray:
        """Leaf indices in depth-first order; fixes message/frame bit order."""
        order = self.preorder()
        return order[self.leaf_mask[order]]

    def __repr__(self):
        return (
            f"ChannelTree(n={self.n}, epsilon={self.epsilon!r}, "
            f"z_root={self.z_root!r}, nodes={self.node_count})"
        )


def grow_tree(
    z_root: float,
    n: int,
    epsilon: float,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> ChannelTree:
    """Grow the pruned channel tree for (z_root, n, epsilon).

    A node w is split if and only if ``depth(w) < n`` (strict) and
    ``min(Z(w), 1-Z(w)) > epsilon * 2**-n`` (strict); otherwise it stays a
    leaf. Growth is deterministic and proceeds level by level.

    Raises
    ------
    LimitExceededError
        If the tree would exceed ``node_budget`` nodes.
    """
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ValueError(f"n must be a non-negative integer, got {n!r}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if not 0.0 <= z_root <= 1.0:
        raise ValueError(f"z_root must lie in [0, 1], got {z_root!r}")

    threshold = epsilon * 2.0 ** (-n)

    level_z = [np.array([z_root], dtype=np.float64)]
    level_parent = [np.array([_NO_CHILD], dtype=np.int32)]
    level_grow = []
    offsets = [0]
    total = 1

    for d in range(n):
        z = level_z[d]
        y = np.minimum(z, 1.0 - z)
        grow = y > threshold
        level_grow.append(grow)
        k = int(grow.sum())
        if k == 0:
            break
        total += 2 * k
        if total > node_budget:
            raise LimitExceededError(
                f"tree for (z={z_root!r}, n={n}, eps={epsilon!r}) exceeds the "
                f"{node_budget}-node budget; use process sampling instead"
            )
        offsets.append(offsets[-1] + len(z))
        zg = z[grow]
        nxt = np.empty(2 * k, dtype=np.float64)
        nxt[0::2] = z_flat(zg)
        nxt[1::2] = z_sharp(zg)
        level_z.append(nxt)
        parents = offsets[d] + np.flatnonzero(grow).astype(np.int32)
        par = np.empty(2 * k, dtype=np.int32)
        par[0::2] = parents
        par[1::2] = parents
        level_parent.append(par)
    else:
        level_grow.append(np.zeros(len(level_z[-1]), dtype=bool))

    z_all = np.concatenate(level_z)
    parent = np.concatenate(level_parent)
    depth = np.concatenate(
        [np.full(len(lz), d, dtype=np.int16) for d, lz in enumerate(level_z)]
    )
    flat_child = np.full(total, _NO_CHILD, dtype=np.int32)
    sharp_child = np.full(total, _NO_CHILD, dtype=np.int32)
    for d, grow in enumerate(level_grow):
        k = int(grow.sum())
        if k == 0:
            continue
        base = offsets[d + 1] if d + 1 < len(offsets) else total
        idx = offsets[d] + np.flatnonzero(grow)
        flat_child[idx] = base + 2 * np.arange(k)
        sharp_child[idx] = base + 2 * np.arange(k) + 1

    return ChannelTree(n, epsilon, z_all, depth, flat_child, sharp_child, parent)


# -- code parameters -------------------------------------------------------


@dataclass(frozen=True)
class CodeParams:
    """Derived parameters of a (tree, utilized-set) pair."""

    block_length: int
    rate: float
    error_bound: float
    expected_tau: float
    device_count: float
    message_length: int


class CodeSpec:
    """A pruned tree together with its utilized-leaf set and parameters."""

    def __init__(self, tree: ChannelTree, utilized_mask: np.ndarray, params: CodeParams):
        self.tree = tree
        self.utilized_mask = utilized_mask
        self.params = params

    @cached_property
    def utilized(self) -> frozenset:
        """Utilized leaves as branch-path identifiers (may be large)."""
        return frozenset(self.tree.path_id(i) for i in np.flatnonzero(self.utilized_mask))

    @cached_property
    def utilized_leaves_preorder(self) -> np.ndarray:
        lv = self.tree.leaves_preorder
        return lv[self.utilized_mask[lv]]

    def __repr__(self):
        p = self.params
        return (
            f"CodeSpec(N={p.block_length}, K={p.message_length}, R={p.rate!r}, "
            f"P<={p.error_bound!r})"
        )


def block_length(tree: ChannelTree) -> int:
    """Block length N = 2**n (n is the target depth, even if unreached)."""
    return 1 << tree.n


def expected_tau(tree: ChannelTree) -> float:
    """E[tau]: mean stopping depth of the leaf-selection walk.

    Equals ``sum over leaves of 2**-depth * depth``; exact in float64 for
    n <= 25 since every partial sum is a short dyadic.
    """
    d = tree.depth[tree.leaf_mask].astype(np.float64)
    return float(np.sum(np.ldexp(d, -d.astype(np.int64))))


def _rate(tree: ChannelTree, mask: np.ndarray) -> float:
    d = tree.depth[mask].astype(np.int64)
    return float(np.sum(np.ldexp(1.0, -d)))


def _error_bound(tree: ChannelTree, mask: np.ndarray) -> float:
    d = tree.depth[mask].astype(np.int64)
    # fsum: correctly rounded, so the result is independent of node order
    # (serialized trees store nodes in a different order than grown ones)
    return math.fsum(np.ldexp(tree.z[mask], tree.n - d))


def _message_length(tree: ChannelTree, mask: np.ndarray) -> int:
    d = tree.depth[mask].astype(np.int64)
    return int(np.sum(np.int64(1) << (tree.n - d)))


def code_rate(spec: CodeSpec) -> float:
    """R = sum over utilized leaves of 2**-depth (dyadic, exact)."""
    return _rate(spec.tree, spec.utilized_mask)


def error_bound(spec: CodeSpec) -> float:
    """Union bound on block error: sum over utilized of 2**(n-depth) * Z."""
    return _error_bound(spec.tree, spec.utilized_mask)


def device_count(spec: CodeSpec) -> float:
    """Total magic devices (encoder + decoder) in the circuit: N * E[tau]."""
    return block_length(spec.tree) * expected_tau(spec.tree)


def message_length(spec: CodeSpec) -> int:
    """K: utilized leaf instances, sum of multiplicities 2**(n-depth)."""
    return _message_length(spec.tree, spec.utilized_mask)


def make_spec(tree: ChannelTree, utilized) -> CodeSpec:
    """CodeSpec with an explicit utilized set (any subset of the leaves).

    ``utilized`` is a boolean mask over node indices or an iterable of leaf
    path ids ('f'/'s' strings). :func:`select_utilized` is the rule-based
    special case; this constructor exists because a code is just a
    (tree, leaf subset) pair and nothing downstream needs the threshold
    rule.
    """
    if isinstance(utilized, np.ndarray) and utilized.dtype == bool:
        if utilized.shape != (tree.node_count,):
            raise ValueError("utilized mask must cover every node")
        mask = utilized.copy()
    else:
        wanted = set(utilized)
        mask = np.zeros(tree.node_count, dtype=bool)
        for i in range(tree.node_count):
            pid = tree.path_id(i)
            if pid in wanted:
                mask[i] = True
                wanted.discard(pid)
        if wanted:
            raise ValueError(f"unknown leaf ids: {sorted(wanted)}")
    if np.any(mask & ~tree.leaf_mask):
        raise ValueError("utilized set must contain only leaves")
    params = CodeParams(
        block_length=block_length(tree),
        rate=_rate(tree, mask),
        error_bound=_error_bound(tree, mask),
        expected_tau=expected_tau(tree),
        device_count=block_length(tree) * expected_tau(tree),
        message_length=_message_length(tree, mask),
    )
    return CodeSpec(tree, mask, params)


def select_utilized(tree: ChannelTree) -> CodeSpec:
    """Pick the utilized set: leaves with Z(w) <= epsilon * 2**-n (non-strict).

    Returns the CodeSpec with all derived parameters filled in. The boundary
    is deliberately non-strict while the growth rule's is strict, so a leaf
    sitting exactly on the threshold is utilized.
    """
    return make_spec(tree, tree.leaf_mask & (tree.z <= tree.threshold))


# -- text format -----------------------------------------------------------

_MAGIC = "polar-tree v1"


def serialize_tree(tree: ChannelTree) -> str:
    """Render a tree as text: magic line, parameter line, Polish string.

    The Polish string is the preorder walk (flat child first) over the
    alphabet {2, 0}: '2' marks an internal node, '0' a leaf.
    """
    order = tree.preorder()
    marks = np.where(tree.leaf_mask[order], "0", "2")
    return (
        f"{_MAGIC}\n"
        f"n={tree.n} eps={tree.epsilon!r} z={tree.z_root!r}\n"
        f"{''.join(marks)}\n"
    )


def _parse_header(lines):
    if not lines or lines[0].strip() != _MAGIC:
        raise TreeParseError(f"missing '{_MAGIC}' magic line")
    if len(lines) < 2:
        raise TreeParseError("missing parameter line")
    fields = {}
    for part in lines[1].split():
        key, _, value = part.partition("=")
        if not value:
            raise TreeParseError(f"bad parameter {part!r}")
        fields[key] = value
    try:
        n = int(fields["n"])
        eps = float(fields["eps"])
        z0 = float(fields["z"])
    except (KeyError, ValueError) as exc:
        raise TreeParseError(f"bad parameter line {lines[1]!r}") from exc
    return n, eps, z0


def deserialize_tree(text: str) -> ChannelTree:
    """Parse the `polar-tree v1` format, recomputing every Z from the root.

    Raises
    ------
    TreeParseError
        Malformed header or Polish string (unknown symbol, premature end,
        trailing symbols).
    TreeConsistencyError
        Structurally valid tree that violates the ChannelTree invariants for
        its (n, epsilon): a leaf deeper than n, an unsplit leaf above depth n
        that should have been split, or a split node that should not have
        been.
    """
    lines = text.splitlines()
    n, eps, z0 = _parse_header(lines)
    if not 0.0 <= z0 <= 1.0:
        raise TreeParseError(f"z={z0!r} outside [0, 1]")
    if not 0.0 < eps < 1.0:
        raise TreeParseError(f"eps={eps!r} outside (0, 1)")
    polish = "".join("".join(lines[2:]).split())
    if not polish:
        raise TreeParseError("missing Polish string")
    bad = set(polish) - {"0", "2"}
    if bad:
        raise TreeParseError(f"unknown symbols in Polish string: {sorted(bad)}")

    z = []
    depth = []
    parent = []
    flat_child = []
    sharp_child = []
    # Stack of parent indices still owed a child; None marks the root slot.
    pending = [(None, "")]
    for ch in polish:
        if not pending:
            raise TreeParseError("trailing symbols after the tree ended")
        par, side = pending.pop()
        if par is None:
            zv = z0
            dv = 0
        else:
            zv = z_flat(z[par]) if side == "f" else z_sharp(z[par])
            dv = depth[par] + 1
        i = len(z)
        z.append(zv)
        depth.append(dv)
        parent.append(_NO_CHILD if par is None else par)
        flat_child.append(_NO_CHILD)
        sharp_child.append(_NO_CHILD)
        if par is not None:
            if side == "f":
                flat_child[par] = i
            else:
                sharp_child[par] = i
        if ch == "2":
            # Preorder: flat subtree comes next, so it goes on top.
            pending.append((i, "s"))
            pending.append((i, "f"))
    if pending:
        raise TreeParseError("premature end of Polish string")

    tree = ChannelTree(
        n,
        eps,
        np.array(z, dtype=np.float64),
        np.array(depth, dtype=np.int16),
        np.array(flat_child, dtype=np.int32),
        np.array(sharp_child, dtype=np.int32),
        np.array(parent, dtype=np.int32),
    )
    _check_consistency(tree)
    return tree


def _check_consistency(tree: ChannelTree) -> None:
    t = tree.threshold
    y = np.minimum(tree.z, 1.0 - tree.z)
    leaf = tree.leaf_mask
    if np.any(tree.depth[leaf] > tree.n):
        raise TreeConsistencyError(f"leaf deeper than n={tree.n}")
    shallow_hot = leaf & (tree.depth < tree.n) & (y > t)
    if np.any(shallow_hot):
        raise TreeConsistencyError(
            "leaf above depth n with Y > epsilon*2^-n (growth rule would split it)"
        )
    cold_internal = ~leaf & (y <= t)
    if np.any(cold_internal):
        raise TreeConsistencyError(
            "internal node with Y <= epsilon*2^-n (growth rule would not split it)"
        )
    if np.any(~leaf & (tree.depth >= tree.n)):
        raise TreeConsistencyError("internal node at depth >= n")
