"""Integrated modularity for dynamic heterogeneous networks.

For each ordered type block (l1, l2) the integrated modularity matrix is

    M^[l1l2] = sum_s [ A^[l1l2](t_s) - d^[l1l2](t_s) d^[l2l1](t_s)^T / m(t_s) ] / mbar

with mbar the block's total ordered-pair edge count over all snapshots,
and the quality of an assignment e is

    Q = (1/L^2) sum_{l1,l2} sum_{i,j} M^[l1l2]_ij 1(e_i = e_j).

Blocks with mbar = 0 are inactive and contribute nothing; snapshots with
m(t_s) = 0 inside an active block contribute zero (adjacency and null both
vanish there).  The double sum keeps the i = j diagonal: those terms are
assignment-independent, and keeping them makes Q(single community) = 0
exact.

The oracle below never materializes M.  It stores the aggregated adjacency
sparsely plus a factorized null: node u gets a row psi_u over columns
p = (l1, l2, s) with psi_u[p] = d_u^[l1l2](t_s) / sqrt(m(t_s) * mbar),
nonzero only where l1 is u's type.  A column permutation ``swap`` maps
(l1, l2, s) to (l2, l1, s), so for any pair of nodes

    sum_p psi_u[p] * psi_v[swap(p)]
        = sum over blocks/snapshots of d_u d_v / (m(t_s) * mbar),

and the total null mass inside community C is chi_C . swap(chi_C) with
chi_C = sum_{u in C} psi_u.  This gives O(1)-per-node community updates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .hetnet import DegreeTensor, DynHetNet, TypeLayout, compute_degrees

__all__ = [
    "Assignment",
    "ModularityOracle",
    "build_oracle",
    "null_expectation",
    "modularity",
    "canonical_labels",
    "parse_labels",
    "serialize_labels",
]


def canonical_labels(labels) -> np.ndarray:
    """Relabel communities by first appearance in node order (0, 1, ...)."""
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first)] = np.arange(len(first))
    return rank[inverse]


@dataclass(frozen=True)
class Assignment:
    """Community labels over the global node index, contiguous from 0."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1 or len(labels) == 0:
            raise ValueError("labels must be a nonempty vector")
        if labels.min() < 0 or labels.max() >= self.k:
            raise ValueError("labels must lie in [0, k)")
        if len(np.unique(labels)) != self.k:
            raise ValueError("every community must be non-empty")

    @classmethod
    def from_labels(cls, raw) -> "Assignment":
        """Build from any integer labeling, canonicalizing label ids."""
        canon = canonical_labels(raw)
        return cls(canon, int(canon.max()) + 1 if len(canon) else 0)

    @property
    def n(self) -> int:
        return len(self.labels)


class ModularityOracle:
    """Implicit integrated modularity matrix for one network.

    Attributes
    ----------
    layout, degrees : the network's type layout and degree tables.
    edge_u, edge_v, edge_w : aggregated adjacency over distinct undirected
        node pairs (global indices, u < v); ``edge_w`` is the per-orientation
        weight sum_s A_uv(t_s) / mbar of the pair's block.
    psi : (n, P) factorized null matrix described in the module docstring.
    swap : column permutation sending (l1, l2, s) to (l2, l1, s).
    active_blocks : ordered block keys with mbar > 0.
    """

    def __init__(self, net: DynHetNet):
        layout = net.layout
        degrees = compute_degrees(net)
        self.layout = layout
        self.num_types = layout.num_types
        self.num_snapshots = net.num_snapshots
        self.n = layout.n
        self.degrees = degrees
        self.active_blocks = degrees.active_blocks()

        mbar = {key: degrees.totals[key] for key in self.active_blocks}

        # Aggregated adjacency: count snapshots per stored undirected edge,
        # then weight by 1/mbar of the edge's block.
        pair_index: dict[tuple[int, int], dict] = {}
        for snap in net.snapshots:
            for (l1, l2), pairs in snap.blocks.items():
                counts = pair_index.setdefault((l1, l2), {})
                for i, j in pairs:
                    key = (int(i), int(j))
                    counts[key] = counts.get(key, 0) + 1
        eu, ev, ew = [], [], []
        for (l1, l2), counts in sorted(pair_index.items()):
            w_unit = 1.0 / mbar[(l1, l2)]
            o1, o2 = layout.offsets[l1], layout.offsets[l2]
            for (i, j), c in sorted(counts.items()):
                eu.append(o1 + i)
                ev.append(o2 + j)
                ew.append(c * w_unit)
        self.edge_u = np.asarray(eu, dtype=np.int64)
        self.edge_v = np.asarray(ev, dtype=np.int64)
        self.edge_w = np.asarray(ew, dtype=np.float64)

        # Factorized null columns, one per (active block, snapshot).
        col_of: dict[tuple[int, int, int], int] = {}
        for (l1, l2) in self.active_blocks:
            for s in range(self.num_snapshots):
                col_of[(l1, l2, s)] = len(col_of)
        P = len(col_of)
        psi = np.zeros((self.n, P), dtype=np.float64)
        swap = np.zeros(P, dtype=np.int64)
        for (l1, l2, s), p in col_of.items():
            swap[p] = col_of[(l2, l1, s)]
            m_s = degrees.edge_counts[(l1, l2)][s]
            if m_s == 0:
                continue
            scale = 1.0 / np.sqrt(float(m_s) * float(mbar[(l1, l2)]))
            sl = layout.type_slice(l1)
            psi[sl, p] = degrees.degrees[(l1, l2)][s] * scale
        self.psi = psi
        self.swap = swap
        self.col_of = col_of

    def has_signal(self) -> bool:
        return bool(self.active_blocks)


def build_oracle(net: DynHetNet) -> ModularityOracle:
    """Construct the implicit oracle; edge-free blocks simply deactivate."""
    return ModularityOracle(net)


def null_expectation(d_i: float, d_j: float, m: float) -> float:
    """Chung-Lu expected adjacency d_i * d_j / m (an expectation, may exceed 1)."""
    if m == 0:
        raise ValueError("empty block")
    return d_i * d_j / m


def modularity(oracle: ModularityOracle, assignment) -> float:
    """Exact Q for an assignment (vector of labels or an Assignment)."""
    labels = assignment.labels if isinstance(assignment, Assignment) else assignment
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != oracle.n:
        raise ValueError("assignment length must equal node count")
    L = oracle.num_types
    if not oracle.active_blocks:
        return 0.0

    internal = labels[oracle.edge_u] == labels[oracle.edge_v]
    adj = 2.0 * oracle.edge_w[internal].sum()

    k = int(labels.max()) + 1
    chi = np.zeros((k, oracle.psi.shape[1]), dtype=np.float64)
    np.add.at(chi, labels, oracle.psi)
    null = float((chi * chi[:, oracle.swap]).sum())

    return (adj - null) / (L * L)


# ---------------------------------------------------------------------------
# Label file format: lines `l i label` with 0-based type and local node
# indices; '#' starts a comment; canonical order sorts by (l, i).
# ---------------------------------------------------------------------------


def parse_labels(data: bytes | str, layout: TypeLayout) -> Assignment:
    """Read a label file covering every node of ``layout`` exactly once."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    raw = np.full(layout.n, -1, dtype=np.int64)
    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        tokens = stripped.split()
        if len(tokens) != 3:
            raise FormatError(f"malformed label line {lineno}: {stripped!r}")
        try:
            l, i, lab = (int(t) for t in tokens)
        except ValueError as exc:
            raise FormatError(f"malformed label line {lineno}: {stripped!r}") from exc
        if not 0 <= l < layout.num_types:
            raise FormatError(f"type index out of range on line {lineno}: {l}")
        if not 0 <= i < layout.sizes[l]:
            raise FormatError(f"node index out of range on line {lineno}: {i}")
        g = layout.global_index(l, i)
        if raw[g] != -1:
            raise FormatError(f"duplicate label for node {l}:{i} on line {lineno}")
        raw[g] = lab
    if np.any(raw == -1):
        missing = int(np.flatnonzero(raw == -1)[0])
        l, i = layout.type_of(missing)
        raise FormatError(f"missing label for node {l}:{i}")
    return Assignment.from_labels(raw)


def serialize_labels(assignment, layout: TypeLayout) -> bytes:
    """Canonical label file: one `l i label` line per node, sorted, LF."""
    labels = assignment.labels if isinstance(assignment, Assignment) else assignment
    labels = canonical_labels(labels)
    if len(labels) != layout.n:
        raise ValueError("assignment length must equal node count")
    out = []
    for l in range(layout.num_types):
        off = layout.offsets[l]
        for i in range(layout.sizes[l]):
            out.append(f"{l} {i} {labels[off + i]}")
    return ("\n".join(out) + "\n").encode("utf-8")
