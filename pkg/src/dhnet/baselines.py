"""Reference pipelines that discard part of the network structure.

All four methods reuse the same maximizer as the full detector; they
differ only in the transform applied first, so every accuracy gap
against the full method is attributable to the discarded information.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hetnet import DynHetNet, aggregate_max, flatten_types, project_type, select_snapshot
from .modularity import Assignment
from .optimizer import DhnetConfig, dhnet_detect
from .rng import derived_rng

__all__ = [
    "method1",
    "method2",
    "method3",
    "method4",
    "choose_snapshot",
    "TypeResult",
]


def method1(net: DynHetNet, cfg: DhnetConfig) -> tuple[Assignment, float]:
    """Ignore node types: detect on the flattened single-type network."""
    return dhnet_detect(flatten_types(net), cfg)


def method2(net: DynHetNet, cfg: DhnetConfig) -> tuple[Assignment, float]:
    """Ignore time: detect on the static union-over-snapshots network."""
    return dhnet_detect(aggregate_max(net), cfg)


def choose_snapshot(num_snapshots: int, snapshot_seed) -> int:
    """Uniform 1-based snapshot index drawn from its own seed."""
    rng = derived_rng(snapshot_seed, "snapshot-choice")
    return int(rng.integers(1, num_snapshots + 1))


def method3(net: DynHetNet, cfg: DhnetConfig, snapshot_seed) -> tuple[Assignment, float]:
    """Ignore all but one snapshot, chosen uniformly at random."""
    s = choose_snapshot(net.num_snapshots, snapshot_seed)
    return dhnet_detect(select_snapshot(net, s), cfg)


@dataclass(frozen=True)
class TypeResult:
    """Per-type outcome of the decomposition method.

    ``degenerate`` marks types with no same-type edges, where the result
    falls back to the trivial single-community assignment with Q = 0.
    """

    assignment: Assignment
    q: float
    degenerate: bool = False


def method4(net: DynHetNet, cfg: DhnetConfig) -> list[TypeResult]:
    """Split by type: detect on each type's same-type block separately."""
    out = []
    for l in range(1, net.num_types + 1):
        sub = project_type(net, l)
        if not sub.has_edges():
            trivial = Assignment(np.zeros(sub.layout.n, dtype=np.int64), 1)
            out.append(TypeResult(trivial, 0.0, degenerate=True))
            continue
        assignment, q = dhnet_detect(sub, cfg)
        out.append(TypeResult(assignment, q))
    return out
