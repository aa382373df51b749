"""Independent reference implementations used only by the tests.

Everything here recomputes quantities from first principles with dense
matrices and brute force, deliberately avoiding the package's implicit
oracle, accumulators, and matching shortcuts.  Capped at small n.
"""

from __future__ import annotations

from itertools import permutations

import numpy as np

from dhnet.hetnet import DynHetNet


def dense_block_adjacency(net: DynHetNet, l1: int, l2: int, s: int) -> np.ndarray:
    """Dense oriented adjacency of block (l1, l2) at snapshot index s (0-based)."""
    layout = net.layout
    A = np.zeros((layout.sizes[l1], layout.sizes[l2]))
    for i, j in net.snapshots[s].oriented_pairs(l1, l2):
        A[i, j] = 1.0
    return A


def dense_modularity_blocks(net: DynHetNet) -> dict:
    """Dense integrated matrices per ordered block, from the definition."""
    layout = net.layout
    L, S = layout.num_types, net.num_snapshots
    out = {}
    for l1 in range(L):
        for l2 in range(L):
            A = [dense_block_adjacency(net, l1, l2, s) for s in range(S)]
            m = [a.sum() for a in A]
            mbar = sum(m)
            if mbar == 0:
                continue
            M = np.zeros_like(A[0])
            for s in range(S):
                if m[s] == 0:
                    continue
                d1 = A[s].sum(axis=1)
                d2 = A[s].sum(axis=0)
                M += A[s] - np.outer(d1, d2) / m[s]
            out[(l1, l2)] = M / mbar
    return out


def naive_q(net: DynHetNet, labels) -> float:
    """Q by the literal double sum over the dense integrated matrices."""
    labels = np.asarray(labels)
    layout = net.layout
    L = layout.num_types
    total = 0.0
    for (l1, l2), M in dense_modularity_blocks(net).items():
        lab1 = labels[layout.type_slice(l1)]
        lab2 = labels[layout.type_slice(l2)]
        same = lab1[:, None] == lab2[None, :]
        total += M[same].sum()
    return total / L**2


def set_partitions(n: int):
    """All partitions of range(n) as label vectors in canonical form."""
    labels = np.zeros(n, dtype=np.int64)

    def rec(i, k):
        if i == n:
            yield labels.copy()
            return
        for c in range(k + 1):
            labels[i] = c
            yield from rec(i + 1, max(k, c + 1))

    yield from rec(0, 0)


def exhaustive_best_q(net: DynHetNet):
    """(max Q, list of argmax label vectors) over every set partition."""
    layout = net.layout
    L = layout.num_types
    blocks = dense_modularity_blocks(net)
    best_q, best = -np.inf, []
    for labels in set_partitions(layout.n):
        q = 0.0
        for (l1, l2), M in blocks.items():
            lab1 = labels[layout.type_slice(l1)]
            lab2 = labels[layout.type_slice(l2)]
            q += M[lab1[:, None] == lab2[None, :]].sum()
        q /= L**2
        if q > best_q + 1e-12:
            best_q, best = q, [labels.copy()]
        elif abs(q - best_q) <= 1e-12:
            best.append(labels.copy())
    return best_q, best


def reference_nmi(a, b) -> float:
    """Contingency-table mutual information ratio, from scratch."""
    a, b = np.asarray(a), np.asarray(b)
    n = len(a)
    table: dict[tuple[int, int], int] = {}
    ra: dict[int, int] = {}
    cb: dict[int, int] = {}
    for x, y in zip(a.tolist(), b.tolist()):
        table[(x, y)] = table.get((x, y), 0) + 1
        ra[x] = ra.get(x, 0) + 1
        cb[y] = cb.get(y, 0) + 1
    if len(ra) == 1 and len(cb) == 1:
        return 1.0
    if len(ra) == 1 or len(cb) == 1:
        return 0.0
    numer = -2.0 * sum(
        cnt * np.log(cnt * n / (ra[x] * cb[y])) for (x, y), cnt in table.items()
    )
    denom = sum(c * np.log(c / n) for c in ra.values()) + sum(
        c * np.log(c / n) for c in cb.values()
    )
    return numer / denom


def reference_misclassification(a, b) -> float:
    """Exhaustive minimum disagreement over relabelings of b."""
    a, b = np.asarray(a), np.asarray(b)
    la = sorted(set(a.tolist()))
    lb = sorted(set(b.tolist()))
    k = max(len(la), len(lb))
    ia = {x: i for i, x in enumerate(la)}
    ib = {x: i for i, x in enumerate(lb)}
    av = np.array([ia[x] for x in a.tolist()])
    bv = np.array([ib[x] for x in b.tolist()])
    best = 0
    for perm in permutations(range(k)):
        sigma = np.array(perm)
        best = max(best, int((av == sigma[bv]).sum()))
    return 1.0 - best / len(a)


def reference_jsd(p, q) -> float:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    m = 0.5 * (p + q)

    def kl(x, y):
        mask = x > 0
        return float((x[mask] * np.log(x[mask] / y[mask])).sum())

    return 0.5 * kl(p, m) + 0.5 * kl(q, m)


def cell_densities(net: DynHetNet, labels, K: int) -> dict:
    """Empirical per-cell edge densities of a block-model sample.

    Returns (l1, l2, s, k1, k2) -> (edges, pairs) with l1 <= l2 over stored
    blocks and, for same-type blocks, unordered community cells k1 <= k2.
    Densities estimate the Bernoulli rate of the corresponding theta cell.
    """
    labels = np.asarray(labels)
    layout = net.layout
    L = layout.num_types
    out = {}
    counts_per_type = [
        np.bincount(labels[layout.type_slice(l)], minlength=K) for l in range(L)
    ]
    for s in range(net.num_snapshots):
        for l1 in range(L):
            for l2 in range(l1, L):
                lab1 = labels[layout.type_slice(l1)]
                lab2 = labels[layout.type_slice(l2)]
                pairs = net.snapshots[s].stored_pairs(l1, l2)
                edges = np.zeros((K, K), dtype=np.int64)
                if len(pairs):
                    a, b = lab1[pairs[:, 0]], lab2[pairs[:, 1]]
                    if l1 == l2:
                        a, b = np.minimum(a, b), np.maximum(a, b)
                    np.add.at(edges, (a, b), 1)
                c1, c2 = counts_per_type[l1], counts_per_type[l2]
                for k1 in range(K):
                    for k2 in range(K):
                        if l1 == l2:
                            if k1 > k2:
                                continue
                            total = (c1[k1] * (c1[k1] - 1)) // 2 if k1 == k2 \
                                else c1[k1] * c2[k2]
                        else:
                            total = c1[k1] * c2[k2]
                        if total:
                            out[(l1, l2, s, k1, k2)] = (int(edges[k1, k2]), int(total))
    return out


def pair_indicator_series(net: DynHetNet, l1: int, l2: int) -> np.ndarray:
    """(S, num_pairs) edge indicators for every stored slot of one block."""
    layout = net.layout
    n1, n2 = layout.sizes[l1], layout.sizes[l2]
    S = net.num_snapshots
    if l1 == l2:
        iu = np.triu_indices(n1, k=1)
        flat = lambda p: p[:, 0] * n1 + p[:, 1]
        slots = iu[0] * n1 + iu[1]
    else:
        flat = lambda p: p[:, 0] * n2 + p[:, 1]
        slots = np.arange(n1 * n2)
    pos = {v: i for i, v in enumerate(slots.tolist())}
    out = np.zeros((S, len(slots)), dtype=np.float64)
    for s in range(S):
        pairs = net.snapshots[s].stored_pairs(l1, l2)
        if len(pairs):
            idx = [pos[v] for v in flat(pairs).tolist()]
            out[s, idx] = 1.0
    return out


def lag_statistics(series: np.ndarray, p: float, lag: int):
    """Per-pair unbiased lag-correlation estimates for iid Bernoulli(p) pairs.

    Each column of series is one pair's sample path.  Returns the vector of
    per-pair statistics with mean alpha^lag under the sampler's law, so the
    caller can apply an iid CLT across pairs.
    """
    S = series.shape[0]
    x = (series - p) / np.sqrt(p * (1.0 - p))
    prods = x[: S - lag] * x[lag:]
    return prods.mean(axis=0)


def random_network(rng: np.random.Generator, max_nodes: int = 200,
                   types=(1, 2, 3), snapshots=(1, 5)) -> DynHetNet:
    """A random small network with at least one edge, for fuzz tests."""
    from dhnet.hetnet import Snapshot, TypeLayout

    L = int(rng.choice(types))
    sizes = rng.integers(2, max(3, max_nodes // L + 1), size=L)
    sizes = np.minimum(sizes, max_nodes // L).clip(min=2)
    layout = TypeLayout(tuple(int(x) for x in sizes))
    S = int(rng.choice(snapshots))
    while True:
        snaps = []
        for s in range(S):
            blocks = {}
            for l1 in range(L):
                for l2 in range(l1, L):
                    n1, n2 = layout.sizes[l1], layout.sizes[l2]
                    density = rng.uniform(0, 0.3)
                    mask = rng.random((n1, n2)) < density
                    if l1 == l2:
                        mask[np.tril_indices(n1)] = False
                    pairs = np.column_stack(np.nonzero(mask))
                    if len(pairs):
                        blocks[(l1, l2)] = pairs
            snaps.append(Snapshot(layout, s + 1, blocks))
        net = DynHetNet(layout, snaps)
        if net.has_edges():
            return net
