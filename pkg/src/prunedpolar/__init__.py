"""Pruned polar coding over binary erasure channels.

Grow a pruned channel tree by the threshold rule, read off the code
parameters exactly, encode and decode with the erasure-symbol automata, and
reproduce the stopping-time tables by exact analysis or sampling.
"""

from .erasure import (
    BecChannel,
    InconsistentResolveError,
    Symbol,
    sym_add,
    sym_resolve,
    z_flat,
    z_sharp,
)
from .tree import (
    ChannelTree,
    CodeSpec,
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
    select_utilized,
    serialize_tree,
)
from .codec import (
    BlockError,
    LengthMismatchError,
    decodable,
    decode,
    encode,
    message_length,
)
from .process import check_martingale, sample_process, sample_tau_mean
from .harness import DEFAULT_Z_ROOT, analyze, build_spec, run_monte_carlo, tau_table

__version__ = "0.1.0"

__all__ = [
    "BecChannel",
    "BlockError",
    "ChannelTree",
    "CodeSpec",
    "DEFAULT_Z_ROOT",
    "InconsistentResolveError",
    "LengthMismatchError",
    "LimitExceededError",
    "Symbol",
    "TreeConsistencyError",
    "TreeParseError",
    "analyze",
    "block_length",
    "build_spec",
    "check_martingale",
    "code_rate",
    "decodable",
    "decode",
    "deserialize_tree",
    "device_count",
    "encode",
    "error_bound",
    "expected_tau",
    "grow_tree",
    "make_spec",
    "message_length",
    "run_monte_carlo",
    "sample_process",
    "sample_tau_mean",
    "select_utilized",
    "serialize_tree",
    "sym_add",
    "sym_resolve",
    "tau_table",
    "z_flat",
    "z_sharp",
]
