"""Partition agreement metrics and category-interest prediction.

NMI follows the contingency-table form: with N_ij the count of nodes
labeled i by one partition and j by the other,

    NMI = -2 sum_ij N_ij ln(N_ij N / (N_i. N_.j))
          / [ sum_i N_i. ln(N_i./N) + sum_j N_.j ln(N_.j/N) ]

with 0 ln 0 = 0.  When both partitions are a single cluster the value is
1, when exactly one is, 0.

All divergences use natural logarithms, so JSD ranges over [0, ln 2].
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import rel_entr

from .hetnet import DynHetNet, aggregate_max
from .modularity import Assignment

__all__ = [
    "ConfusionMatrix",
    "Distribution",
    "nmi",
    "misclassification",
    "jsd",
    "community_profiles",
    "predict_interest",
    "mean_jsd",
]


def _label_vector(x) -> np.ndarray:
    labels = x.labels if isinstance(x, Assignment) else np.asarray(x, dtype=np.int64)
    if labels.ndim != 1 or len(labels) == 0:
        raise ValueError("labels must be a nonempty vector")
    return labels


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # (Ka, Kb)
    row: np.ndarray
    col: np.ndarray
    n: int

    @classmethod
    def from_labels(cls, a, b) -> "ConfusionMatrix":
        a, b = _label_vector(a), _label_vector(b)
        if len(a) != len(b):
            raise ValueError("label vectors differ in length")
        _, ai = np.unique(a, return_inverse=True)
        _, bi = np.unique(b, return_inverse=True)
        ka, kb = ai.max() + 1, bi.max() + 1
        counts = np.zeros((ka, kb), dtype=np.int64)
        np.add.at(counts, (ai, bi), 1)
        return cls(counts, counts.sum(axis=1), counts.sum(axis=0), len(a))


def nmi(a, b) -> float:
    """Normalized mutual information between two partitions, in [0, 1]."""
    cm = ConfusionMatrix.from_labels(a, b)
    ka, kb = cm.counts.shape
    if ka == 1 and kb == 1:
        return 1.0
    if ka == 1 or kb == 1:
        return 0.0
    N = cm.counts.astype(np.float64)
    n = float(cm.n)
    outer = np.outer(cm.row, cm.col).astype(np.float64)
    mask = N > 0
    numer = -2.0 * float((N[mask] * np.log(N[mask] * n / outer[mask])).sum())
    denom = float((cm.row * np.log(cm.row / n)).sum()
                  + (cm.col * np.log(cm.col / n)).sum())
    value = numer / denom
    # Clamp float noise; exact agreement can land at 1 + 1e-16.
    return float(min(max(value, 0.0), 1.0))


def misclassification(a, b) -> float:
    """Minimum label-matching disagreement rate, in [0, 1].

    Exhaustive over label permutations up to 8 communities, optimal
    assignment matching beyond that; the two agree wherever both apply.
    """
    cm = ConfusionMatrix.from_labels(a, b)
    ka, kb = cm.counts.shape
    k = max(ka, kb)
    square = np.zeros((k, k), dtype=np.int64)
    square[:ka, :kb] = cm.counts
    if k <= 8:
        best = max(
            sum(square[p[j], j] for j in range(k)) for p in permutations(range(k))
        )
    else:
        rows, cols = linear_sum_assignment(square, maximize=True)
        best = int(square[rows, cols].sum())
    return 1.0 - best / cm.n


@dataclass(frozen=True)
class Distribution:
    """A probability vector over a fixed category index."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        object.__setattr__(self, "p", p)
        if p.ndim != 1 or len(p) == 0:
            raise ValueError("need a nonempty probability vector")
        if p.min() < 0 or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("entries must be nonnegative and sum to 1")

    @property
    def support_size(self) -> int:
        return len(self.p)

    @classmethod
    def from_counts(cls, counts) -> "Distribution":
        counts = np.asarray(counts, dtype=np.float64)
        total = counts.sum()
        if total <= 0:
            raise ValueError("counts must have positive total")
        return cls(counts / total)


def jsd(p, q) -> float:
    """Jensen-Shannon divergence (natural log), in [0, ln 2]."""
    pv = p.p if isinstance(p, Distribution) else Distribution(np.asarray(p)).p
    qv = q.p if isinstance(q, Distribution) else Distribution(np.asarray(q)).p
    if len(pv) != len(qv):
        raise ValueError("distributions have different support sizes")
    m = 0.5 * (pv + qv)
    return float(0.5 * rel_entr(pv, m).sum() + 0.5 * rel_entr(qv, m).sum())


def community_profiles(net: DynHetNet, assignment, category_type: int,
                       business_type: int) -> list[Distribution | None]:
    """Category distribution of each community's businesses.

    Type indices are 0-based (as in network files).  Edges between the
    business and category types are aggregated over snapshots; community j
    maps to the frequency vector of categories attached to its businesses,
    or None when the community has no business-category edges.
    """
    layout = net.layout
    L = layout.num_types
    if not (0 <= category_type < L and 0 <= business_type < L) \
            or category_type == business_type:
        raise ValueError("invalid category/business type indices")
    labels = _label_vector(assignment)
    if len(labels) != layout.n:
        raise ValueError("assignment length must equal node count")
    k = int(labels.max()) + 1
    n_cat = layout.sizes[category_type]

    static = aggregate_max(net)
    lo, hi = min(business_type, category_type), max(business_type, category_type)
    pairs = static.snapshots[0].stored_pairs(lo, hi)
    if lo == business_type:
        biz, cat = pairs[:, 0], pairs[:, 1]
    else:
        biz, cat = pairs[:, 1], pairs[:, 0]

    comm = labels[layout.offsets[business_type] + biz]
    counts = np.zeros((k, n_cat), dtype=np.int64)
    np.add.at(counts, (comm, cat), 1)
    return [
        Distribution.from_counts(row) if row.sum() > 0 else None for row in counts
    ]


def predict_interest(friend_community_counts, profiles) -> Distribution:
    """Interest prediction g = sum_j (n_j / sum n_j) f_j.

    Communities with no profile (None) get zero weight and the rest are
    renormalized; if every weighted community lacks a profile the user is
    unresolvable.
    """
    counts = np.asarray(friend_community_counts, dtype=np.float64)
    if len(counts) != len(profiles):
        raise ValueError("counts and profiles differ in length")
    weights = np.where([f is not None for f in profiles], counts, 0.0)
    total = weights.sum()
    if total <= 0:
        raise ValueError("cold start unresolvable: no friends in profiled communities")
    g = np.zeros(next(f.support_size for f in profiles if f is not None))
    for w, f in zip(weights, profiles):
        if w > 0:
            g += (w / total) * f.p
    return Distribution(g)


def mean_jsd(predictions, truths) -> float:
    """Arithmetic mean of pairwise divergences."""
    if len(predictions) != len(truths):
        raise ValueError("lists differ in length")
    if not predictions:
        raise ValueError("need at least one pair")
    return float(np.mean([jsd(p, t) for p, t in zip(predictions, truths)]))
