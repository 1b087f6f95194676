import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prunedpolar import (
    LimitExceededError,
    TreeConsistencyError,
    TreeParseError,
    block_length,
    code_rate,
    deserialize_tree,
    device_count,
    error_bound,
    expected_tau,
    grow_tree,
    make_spec,
    message_length,
    select_utilized,
    serialize_tree,
)
from .conftest import enumerate_devices, reference_leaves

WORKED_LEAVES = sorted([0.9375, 0.80859375, 0.31640625, 0.68359375, 0.19140625, 0.0625])


class TestGrowTree:
    def test_worked_example_leaf_multiset(self, worked_tree):
        got = sorted(worked_tree.z[worked_tree.leaf_mask].tolist())
        assert got == WORKED_LEAVES

    def test_worked_example_structure(self, worked_tree):
        t = worked_tree
        assert t.node_count == 11
        root = t.root
        assert root.z == 0.5 and root.depth == 0
        assert root.flat.z == 0.75 and root.sharp.z == 0.25
        assert root.flat.flat.z == 0.9375 and root.flat.flat.is_leaf
        assert root.flat.sharp.flat.z == 0.80859375
        assert root.sharp.sharp.z == 0.0625 and root.sharp.sharp.is_leaf
        assert root.sharp.sharp.path == "ss"

    def test_already_polarized_root(self):
        t = grow_tree(0.0, 5, 0.5)
        assert t.node_count == 1 and t.root.is_leaf
        assert expected_tau(t) == 0.0

    def test_hand_traced_depth_two(self):
        # root splits; the flat child keeps going to depth 2, the sharp
        # child's Y falls under the threshold at depth 1
        t = grow_tree(0.382, 2, 2.0 ** (-2 / 5))
        root = t.root
        assert not root.is_leaf
        assert root.flat.z == pytest.approx(0.618076, abs=1e-6)
        assert root.sharp.z == pytest.approx(0.145924, abs=1e-6)
        assert root.sharp.is_leaf
        assert not root.flat.is_leaf
        assert root.flat.flat.is_leaf and root.flat.flat.depth == 2
        assert expected_tau(t) == 1.5

    @pytest.mark.parametrize("z0", [0.1, 0.382, 0.5, 0.75])
    @pytest.mark.parametrize("n", [1, 3, 5])
    def test_matches_recursive_reference(self, z0, n):
        eps = 2.0 ** (-n / 5)
        t = grow_tree(z0, n, eps)
        got = sorted(
            (int(t.depth[i]), float(t.z[i]), t.path_id(i))
            for i in np.flatnonzero(t.leaf_mask)
        )
        assert got == sorted(reference_leaves(z0, n, eps))

    def test_growth_rule_invariants(self):
        t = grow_tree(0.3, 8, 0.4)
        y = np.minimum(t.z, 1.0 - t.z)
        internal = ~t.leaf_mask
        assert np.all(y[internal] > t.threshold)
        assert np.all(t.depth[internal] < t.n)
        shallow = t.leaf_mask & (t.depth < t.n)
        assert np.all(y[shallow] <= t.threshold)
        assert t.depth.max() <= t.n

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            grow_tree(0.5, -1, 0.5)
        with pytest.raises(ValueError):
            grow_tree(0.5, 3, 0.0)
        with pytest.raises(ValueError):
            grow_tree(0.5, 3, 1.0)
        with pytest.raises(ValueError):
            grow_tree(1.5, 3, 0.5)

    def test_node_budget(self):
        with pytest.raises(LimitExceededError):
            grow_tree(0.5, 10, 0.5, node_budget=10)


class TestSelectUtilized:
    def test_worked_example_boundary_included(self, worked_tree, worked_spec):
        # the .0625 leaf sits exactly on eps*2^-n and must be utilized
        assert worked_spec.utilized == frozenset({"ss"})
        assert worked_tree.node(
            np.flatnonzero(worked_spec.utilized_mask)[0]
        ).z == worked_tree.threshold
        assert worked_spec.params.rate == 0.25

    def test_empty_and_full_sets(self, worked_tree):
        t = grow_tree(0.5, 1, 0.4)  # both leaves (.75, .25) above eps*2^-n = .2
        assert select_utilized(t).params.rate == 0.0
        assert code_rate(make_spec(worked_tree, [])) == 0.0
        assert code_rate(make_spec(worked_tree, worked_tree.leaf_mask)) == 1.0

    def test_perfect_channel_root(self):
        t = grow_tree(0.0, 0, 0.5)
        spec = select_utilized(t)
        assert spec.utilized == frozenset({""})
        assert spec.params.rate == 1.0

    def test_make_spec_rejects_internal_nodes(self, worked_tree):
        mask = np.zeros(worked_tree.node_count, dtype=bool)
        mask[0] = True  # the root is internal here
        with pytest.raises(ValueError):
            make_spec(worked_tree, mask)
        with pytest.raises(ValueError):
            make_spec(worked_tree, ["zz"])


class TestParameters:
    def test_block_length(self, worked_tree):
        assert block_length(worked_tree) == 8
        assert block_length(grow_tree(0.0, 0, 0.5)) == 1
        assert block_length(grow_tree(0.0, 25, 0.5)) == 33554432

    def test_worked_example_params(self, worked_spec):
        p = worked_spec.params
        assert p.block_length == 8
        assert p.rate == 0.25
        assert p.error_bound == 0.125
        assert p.expected_tau == 2.5
        assert p.device_count == 20.0
        assert p.message_length == 2

    def test_error_bound_below_rate_times_epsilon(self):
        # P <= N R (eps 2^-n) = R eps <= eps
        spec = select_utilized(grow_tree(0.382, 5, 0.5))
        assert error_bound(spec) <= spec.params.rate * 0.5 <= 0.5

    def test_expected_tau_worked_and_trivial(self, worked_tree):
        assert expected_tau(worked_tree) == 2.5
        assert expected_tau(grow_tree(0.9, 0, 0.5)) == 0.0

    def test_device_count_full_tree(self):
        for n in (1, 2, 4):
            t = grow_tree(0.5, n, 0.01)
            assert t.node_count == 2 ** (n + 1) - 1  # unpruned
            assert device_count(select_utilized(t)) == n * 2**n

    def test_device_count_matches_enumeration(self, worked_spec):
        assert device_count(worked_spec) == enumerate_devices(worked_spec.tree) == 20
        rng = np.random.default_rng(5)
        for _ in range(10):
            t = grow_tree(float(rng.uniform(0.05, 0.95)), int(rng.integers(1, 9)),
                          float(rng.uniform(0.05, 0.9)))
            assert device_count(select_utilized(t)) == enumerate_devices(t)

    def test_message_length(self, worked_spec, worked_tree):
        assert message_length(worked_spec) == 2
        full = grow_tree(0.5, 3, 0.01)
        assert message_length(make_spec(full, full.leaf_mask)) == 8
        assert message_length(make_spec(full, [])) == 0

    def test_leaf_probability_normalization(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            t = grow_tree(float(rng.uniform(0, 1)), int(rng.integers(0, 12)),
                          float(rng.uniform(0.05, 0.95)))
            d = t.depth[t.leaf_mask].astype(np.int64)
            assert math.fsum(np.ldexp(1.0, -d)) == 1.0

    def test_capacity_conservation(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            z0 = float(rng.uniform(0, 1))
            t = grow_tree(z0, int(rng.integers(0, 14)), float(rng.uniform(0.05, 0.95)))
            d = t.depth[t.leaf_mask].astype(np.int64)
            cap = float(np.sum(np.ldexp(1.0 - t.z[t.leaf_mask], -d)))
            assert abs(cap - (1.0 - z0)) <= 1e-9

    def test_rate_bound_and_error_bound(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            z0 = float(rng.uniform(0, 1))
            eps = float(rng.uniform(0.05, 0.95))
            spec = select_utilized(grow_tree(z0, int(rng.integers(0, 12)), eps))
            t = spec.tree
            assert spec.params.rate * (1.0 - t.threshold) <= (1.0 - z0) + 1e-12
            assert spec.params.error_bound <= eps + 1e-12

    def test_pruning_dominance(self, worked_tree):
        assert expected_tau(worked_tree) == 2.5 < 3
        full = grow_tree(0.5, 4, 0.01)
        assert expected_tau(full) == 4.0  # nothing pruned above depth n


class TestSerialization:
    def test_single_node_body(self):
        t = grow_tree(0.0, 5, 0.5)
        assert serialize_tree(t).splitlines()[2] == "0"

    def test_depth_one_body(self):
        t = grow_tree(0.5, 1, 0.5)
        assert serialize_tree(t).splitlines()[2] == "200"

    def test_worked_example_body(self, worked_tree):
        assert serialize_tree(worked_tree).splitlines()[2] == "22020022000"

    def test_header_format(self, worked_tree):
        lines = serialize_tree(worked_tree).splitlines()
        assert lines[0] == "polar-tree v1"
        assert lines[1] == "n=3 eps=0.5 z=0.5"

    def test_whitespace_insensitive(self):
        text = "polar-tree v1\nn=3 eps=0.5 z=0.5\n2 2 0 2 0 0\n 2 2 0 0 0\n"
        t = deserialize_tree(text)
        assert t.node_count == 11
        assert serialize_tree(t).splitlines()[2] == "22020022000"

    def test_deserialize_recomputes_z(self):
        t = deserialize_tree("polar-tree v1\nn=1 eps=0.5 z=0.5\n200\n")
        assert t.root.z == 0.5
        assert t.root.flat.z == 0.75
        assert t.root.sharp.z == 0.25

    def test_deserialize_single_node(self):
        t = deserialize_tree("polar-tree v1\nn=0 eps=0.5 z=0.5\n0\n")
        assert t.node_count == 1 and t.root.z == 0.5

    @pytest.mark.parametrize(
        "body", ["20", "2", "0 0", "2000", "", "21 0", "200 0"]
    )
    def test_parse_errors(self, body):
        with pytest.raises(TreeParseError):
            deserialize_tree(f"polar-tree v1\nn=1 eps=0.5 z=0.5\n{body}\n")

    @pytest.mark.parametrize(
        "text",
        [
            "n=1 eps=0.5 z=0.5\n200\n",
            "polar-tree v2\nn=1 eps=0.5 z=0.5\n200\n",
            "polar-tree v1\nn=x eps=0.5 z=0.5\n200\n",
            "polar-tree v1\nn=1 eps=0.5\n200\n",
            "polar-tree v1\nn=1 eps=0.5 z=1.5\n200\n",
            "polar-tree v1\n",
        ],
    )
    def test_header_errors(self, text):
        with pytest.raises(TreeParseError):
            deserialize_tree(text)

    def test_consistency_errors(self):
        # leaf above depth n that the rule would have split
        with pytest.raises(TreeConsistencyError):
            deserialize_tree("polar-tree v1\nn=5 eps=0.5 z=0.5\n200\n")
        # internal node the rule would not have split
        with pytest.raises(TreeConsistencyError):
            deserialize_tree("polar-tree v1\nn=1 eps=0.5 z=0.0\n200\n")
        # leaf deeper than n
        with pytest.raises(TreeConsistencyError):
            deserialize_tree("polar-tree v1\nn=0 eps=0.5 z=0.5\n200\n")

    @settings(max_examples=50, deadline=None)
    @given(
        z0=st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
        n=st.integers(min_value=0, max_value=9),
        eps=st.floats(min_value=0.01, max_value=0.99),
    )
    def test_roundtrip_is_identity(self, z0, n, eps):
        tree = grow_tree(z0, n, eps)
        text = serialize_tree(tree)
        back = deserialize_tree(text)
        assert serialize_tree(back) == text
        assert select_utilized(back).params == select_utilized(tree).params
