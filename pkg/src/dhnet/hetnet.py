"""Dynamic heterogeneous networks: types, degrees, file I/O, transforms.

A network has L node types and S time snapshots.  Each snapshot stores
its edges per type block as a canonical coordinate list:

* same-type blocks (l, l) keep one row per undirected edge with i < j and
  no self-loops; the mirrored orientation is implied,
* cross-type blocks are stored once under the key (l1, l2) with l1 < l2;
  the (l2, l1) block is the transpose,
* a missing block means no edges between those types.

All containers are plain data and are never mutated after construction,
so they can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError

__all__ = [
    "TypeLayout",
    "Snapshot",
    "DynHetNet",
    "DegreeTensor",
    "compute_degrees",
    "parse_network",
    "serialize_network",
    "flatten_types",
    "aggregate_max",
    "select_snapshot",
    "project_type",
]


@dataclass(frozen=True)
class TypeLayout:
    """Node-type bookkeeping: per-type sizes and global index offsets."""

    sizes: tuple[int, ...]
    offsets: tuple[int, ...] = field(init=False)
    n: int = field(init=False)

    def __post_init__(self):
        if len(self.sizes) < 1:
            raise ValueError("need at least one node type")
        if any(s < 1 for s in self.sizes):
            raise ValueError("every type must have at least one node")
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        offs = np.concatenate([[0], np.cumsum(self.sizes[:-1])]).astype(int)
        object.__setattr__(self, "offsets", tuple(int(o) for o in offs))
        object.__setattr__(self, "n", int(sum(self.sizes)))

    @property
    def num_types(self) -> int:
        return len(self.sizes)

    def global_index(self, l: int, i: int) -> int:
        """Global index of local node i of type l (both 0-based)."""
        return self.offsets[l] + i

    def type_of(self, g: int) -> tuple[int, int]:
        """Inverse of :meth:`global_index`: global index -> (type, local)."""
        l = int(np.searchsorted(self.offsets, g, side="right")) - 1
        return l, g - self.offsets[l]

    def type_slice(self, l: int) -> slice:
        """Slice of the global index range covered by type l."""
        return slice(self.offsets[l], self.offsets[l] + self.sizes[l])


def _canonical_block(pairs, l1: int, l2: int, layout: TypeLayout) -> np.ndarray:
    """Validate, orient, deduplicate, and sort one block's pair list."""
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if arr.size == 0:
        return arr
    n1, n2 = layout.sizes[l1], layout.sizes[l2]
    if arr.min() < 0 or arr[:, 0].max() >= n1 or arr[:, 1].max() >= n2:
        raise FormatError(f"node index out of range in block ({l1},{l2})")
    if l1 == l2:
        if np.any(arr[:, 0] == arr[:, 1]):
            raise FormatError("self-loop forbidden")
        lo = arr.min(axis=1)
        hi = arr.max(axis=1)
        arr = np.column_stack([lo, hi])
    arr = np.unique(arr, axis=0)  # sorts by (row, col); drops duplicates
    return arr


class Snapshot:
    """One time point of a dynamic heterogeneous network.

    ``blocks`` maps canonical keys (l1 <= l2) to sorted (i, j) pair arrays.
    Input pair lists may use either orientation and any order; duplicates
    are dropped silently (edges are binary).
    """

    def __init__(self, layout: TypeLayout, time_index: int, blocks: dict | None = None):
        self.layout = layout
        self.time_index = int(time_index)
        canon: dict[tuple[int, int], np.ndarray] = {}
        for (l1, l2), pairs in (blocks or {}).items():
            if not (0 <= l1 < layout.num_types and 0 <= l2 < layout.num_types):
                raise FormatError(f"type index out of range: ({l1},{l2})")
            if l1 > l2:
                l1, l2 = l2, l1
                pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)[:, ::-1]
            arr = _canonical_block(pairs, l1, l2, layout)
            if arr.size == 0:
                continue
            key = (l1, l2)
            if key in canon:
                arr = np.unique(np.vstack([canon[key], arr]), axis=0)
            canon[key] = arr
        self.blocks = canon

    def stored_pairs(self, l1: int, l2: int) -> np.ndarray:
        """Canonically stored (i, j) array for block key (l1, l2), l1 <= l2."""
        return self.blocks.get((l1, l2), np.empty((0, 2), dtype=np.int64))

    def oriented_pairs(self, l1: int, l2: int) -> np.ndarray:
        """All (i, j) with an edge in the oriented block (l1, l2).

        Same-type blocks return both orientations of each stored edge.
        """
        if l1 == l2:
            st = self.stored_pairs(l1, l1)
            if st.size == 0:
                return st
            return np.vstack([st, st[:, ::-1]])
        if l1 < l2:
            return self.stored_pairs(l1, l2)
        return self.stored_pairs(l2, l1)[:, ::-1]

    def num_stored_edges(self) -> int:
        return sum(len(a) for a in self.blocks.values())


class DynHetNet:
    """An ordered sequence of snapshots over one shared type layout."""

    def __init__(self, layout: TypeLayout, snapshots: list[Snapshot]):
        if not snapshots:
            raise ValueError("need at least one snapshot")
        for s, snap in enumerate(snapshots, start=1):
            if snap.layout != layout:
                raise ValueError("snapshot layout mismatch")
            if snap.time_index != s:
                raise ValueError("snapshot time indices must be 1..S without gaps")
        self.layout = layout
        self.snapshots = list(snapshots)

    @property
    def num_snapshots(self) -> int:
        return len(self.snapshots)

    @property
    def num_types(self) -> int:
        return self.layout.num_types

    def has_edges(self) -> bool:
        return any(snap.blocks for snap in self.snapshots)


@dataclass
class DegreeTensor:
    """Per-block, per-snapshot degree vectors and edge totals.

    ``degrees[(l1, l2)]`` has shape (S, n_l1): row s holds the number of
    type-l2 neighbours of each type-l1 node at snapshot s+1.  Edge counts
    follow the ordered-pair convention, so same-type totals count both
    orientations of each undirected edge.
    """

    layout: TypeLayout
    num_snapshots: int
    degrees: dict[tuple[int, int], np.ndarray]
    edge_counts: dict[tuple[int, int], np.ndarray]
    totals: dict[tuple[int, int], int]

    def active_blocks(self) -> list[tuple[int, int]]:
        """Ordered block keys with at least one edge in some snapshot."""
        return [key for key in sorted(self.totals) if self.totals[key] > 0]


def compute_degrees(net: DynHetNet) -> DegreeTensor:
    """Tabulate degree vectors and edge totals for every ordered block."""
    layout = net.layout
    L, S = layout.num_types, net.num_snapshots
    degrees = {
        (l1, l2): np.zeros((S, layout.sizes[l1]), dtype=np.int64)
        for l1 in range(L)
        for l2 in range(L)
    }
    counts = {key: np.zeros(S, dtype=np.int64) for key in degrees}

    for s, snap in enumerate(net.snapshots):
        for (l1, l2), pairs in snap.blocks.items():
            if l1 == l2:
                both = np.concatenate([pairs[:, 0], pairs[:, 1]])
                degrees[(l1, l1)][s] += np.bincount(both, minlength=layout.sizes[l1])
                counts[(l1, l1)][s] += 2 * len(pairs)
            else:
                degrees[(l1, l2)][s] += np.bincount(pairs[:, 0], minlength=layout.sizes[l1])
                degrees[(l2, l1)][s] += np.bincount(pairs[:, 1], minlength=layout.sizes[l2])
                counts[(l1, l2)][s] += len(pairs)
                counts[(l2, l1)][s] += len(pairs)

    totals = {key: int(counts[key].sum()) for key in counts}
    return DegreeTensor(layout, S, degrees, counts, totals)


# ---------------------------------------------------------------------------
# Text format
#
# Header line:  L=<int> sizes=<n1,...,nL> S=<int>
# Edge lines:   s l1:i l2:j     (snapshot 1-based; types and nodes 0-based)
# '#' starts a comment.  Canonical output sorts lines by (s, l1, l2, i, j).
# ---------------------------------------------------------------------------


def _parse_header(line: str) -> tuple[int, list[int], int]:
    tokens = line.split()
    if len(tokens) != 3:
        raise FormatError(f"malformed header: {line!r}")
    vals = {}
    for tok, key in zip(tokens, ("L", "sizes", "S")):
        if not tok.startswith(key + "="):
            raise FormatError(f"malformed header: expected {key}=..., got {tok!r}")
        vals[key] = tok[len(key) + 1 :]
    try:
        L = int(vals["L"])
        sizes = [int(x) for x in vals["sizes"].split(",")]
        S = int(vals["S"])
    except ValueError as exc:
        raise FormatError(f"malformed header: {line!r}") from exc
    if L < 1 or S < 1 or len(sizes) != L or any(s < 1 for s in sizes):
        raise FormatError(f"malformed header: inconsistent L/sizes/S in {line!r}")
    return L, sizes, S


def _parse_endpoint(token: str, L: int, sizes: list[int], lineno: int) -> tuple[int, int]:
    try:
        l_str, i_str = token.split(":")
        l, i = int(l_str), int(i_str)
    except ValueError as exc:
        raise FormatError(f"malformed edge line {lineno}: bad endpoint {token!r}") from exc
    if not 0 <= l < L:
        raise FormatError(f"type index out of range on line {lineno}: {token!r}")
    if not 0 <= i < sizes[l]:
        raise FormatError(f"node index out of range on line {lineno}: {token!r}")
    return l, i


def parse_network(data: bytes | str) -> DynHetNet:
    """Parse the text network format.

    Edge lines must be grouped by non-decreasing snapshot index; duplicate
    edges within a snapshot are dropped silently.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = text.split("\n")

    header = None
    body_start = 0
    for idx, raw in enumerate(lines):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            header = stripped
            body_start = idx + 1
            break
    if header is None:
        raise FormatError("malformed header: empty input")
    L, sizes, S = _parse_header(header)
    layout = TypeLayout(tuple(sizes))

    per_snapshot: list[dict[tuple[int, int], list[tuple[int, int]]]] = [
        {} for _ in range(S)
    ]
    current_s = 1
    for lineno, raw in enumerate(lines[body_start:], start=body_start + 1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        tokens = stripped.split()
        if len(tokens) != 3:
            raise FormatError(f"malformed edge line {lineno}: {stripped!r}")
        try:
            s = int(tokens[0])
        except ValueError as exc:
            raise FormatError(f"malformed edge line {lineno}: {stripped!r}") from exc
        if s < 1 or s > S:
            raise FormatError(f"snapshot index out of range on line {lineno}: {s}")
        if s < current_s:
            raise FormatError(f"snapshot index out of order on line {lineno}: {s}")
        current_s = s
        l1, i = _parse_endpoint(tokens[1], L, sizes, lineno)
        l2, j = _parse_endpoint(tokens[2], L, sizes, lineno)
        if l1 == l2 and i == j:
            raise FormatError(f"self-loop forbidden on line {lineno}: {stripped!r}")
        if (l1, l2) > (l2, l1) or (l1 == l2 and i > j):
            l1, l2, i, j = l2, l1, j, i
        per_snapshot[s - 1].setdefault((l1, l2), []).append((i, j))

    snapshots = [
        Snapshot(layout, s + 1, blocks) for s, blocks in enumerate(per_snapshot)
    ]
    return DynHetNet(layout, snapshots)


def serialize_network(net: DynHetNet) -> bytes:
    """Canonical text serialization (UTF-8, LF, sorted edge lines)."""
    layout = net.layout
    out = [
        "L={} sizes={} S={}".format(
            layout.num_types,
            ",".join(str(s) for s in layout.sizes),
            net.num_snapshots,
        )
    ]
    for snap in net.snapshots:
        for (l1, l2) in sorted(snap.blocks):
            for i, j in snap.blocks[(l1, l2)]:
                out.append(f"{snap.time_index} {l1}:{i} {l2}:{j}")
    return ("\n".join(out) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# Transforms feeding the baseline methods
# ---------------------------------------------------------------------------


def flatten_types(net: DynHetNet) -> DynHetNet:
    """Collapse all node types into one, keeping every snapshot.

    The edge between (type l1, i) and (type l2, j) becomes an undirected
    edge between their global indices in a single same-type block.
    """
    layout = net.layout
    if layout.num_types == 1:
        return net
    flat_layout = TypeLayout((layout.n,))
    snapshots = []
    for snap in net.snapshots:
        parts = []
        for (l1, l2), pairs in snap.blocks.items():
            gi = pairs[:, 0] + layout.offsets[l1]
            gj = pairs[:, 1] + layout.offsets[l2]
            parts.append(np.column_stack([gi, gj]))
        blocks = {}
        if parts:
            blocks[(0, 0)] = np.vstack(parts)
        snapshots.append(Snapshot(flat_layout, snap.time_index, blocks))
    return DynHetNet(flat_layout, snapshots)


def aggregate_max(net: DynHetNet) -> DynHetNet:
    """Static summary network: an edge is present iff present at any time."""
    union: dict[tuple[int, int], list[np.ndarray]] = {}
    for snap in net.snapshots:
        for key, pairs in snap.blocks.items():
            union.setdefault(key, []).append(pairs)
    blocks = {key: np.vstack(parts) for key, parts in union.items()}
    return DynHetNet(net.layout, [Snapshot(net.layout, 1, blocks)])


def select_snapshot(net: DynHetNet, s: int) -> DynHetNet:
    """Single-snapshot network for time index s (1-based)."""
    if not 1 <= s <= net.num_snapshots:
        raise IndexError(f"snapshot index out of range: {s}")
    snap = net.snapshots[s - 1]
    return DynHetNet(net.layout, [Snapshot(net.layout, 1, snap.blocks)])


def project_type(net: DynHetNet, l: int) -> DynHetNet:
    """Keep only the same-type block of type l (1-based), all snapshots."""
    if not 1 <= l <= net.num_types:
        raise IndexError(f"type index out of range: {l}")
    l0 = l - 1
    layout = TypeLayout((net.layout.sizes[l0],))
    snapshots = []
    for snap in net.snapshots:
        pairs = snap.stored_pairs(l0, l0)
        blocks = {(0, 0): pairs} if pairs.size else {}
        snapshots.append(Snapshot(layout, snap.time_index, blocks))
    return DynHetNet(layout, snapshots)
