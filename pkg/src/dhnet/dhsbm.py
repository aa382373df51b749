"""Dynamic heterogeneous stochastic block model: sampler and theory checks.

The model draws community labels per type from a multinomial, then edges
per ordered snapshot.  Snapshot 1 is independent Bernoulli with success
rho * theta; snapshot s >= 2 follows the lag-1 mixture

    A(t_s) = u * A(t_{s-1}) + (1 - u) * v,
    u ~ Bernoulli(alpha),
    v ~ Bernoulli((rho*theta(t_s) - alpha * rho*theta(t_{s-1})) / (1 - alpha)),

which keeps the marginal P(A(t_s)=1) = rho * theta(t_s) and, for constant
theta, gives lag-k edge autocorrelation alpha**k.  The mixture is valid
only when alpha*th(t_{s-1}) <= th(t_s) and alpha*(1-th(t_{s-1})) <= 1-th(t_s)
cellwise (th = rho-scaled theta); ``validate_config`` reports every cell
that breaks either inequality.

Sampling is canonical: blocks in (l1 <= l2) order, snapshots ascending,
entries row-major, with one derived RNG stream per (block, snapshot), so a
seed pins the sample exactly.  The u-draws are consumed even when alpha=0,
which keeps configs that differ only in alpha on shared uniforms (useful
for common-random-number comparisons).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .hetnet import DynHetNet, Snapshot, TypeLayout
from .modularity import Assignment
from .rng import derived_rng

__all__ = [
    "DhsbmConfig",
    "Violation",
    "validate_config",
    "sample",
    "AssortativityReport",
    "assortativity_check",
    "scenario_builder",
    "activity_tables",
    "balanced_labels",
]

_CHUNK_ROWS = 1024  # constant: chunking must never change the draw stream


def _canonical_theta(layout: TypeLayout, theta: dict) -> dict:
    canon: dict[tuple[int, int], np.ndarray] = {}
    for (l1, l2), arr in theta.items():
        if not (0 <= l1 < layout.num_types and 0 <= l2 < layout.num_types):
            raise ConfigError(f"theta block ({l1},{l2}): type index out of range")
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ConfigError(f"theta block ({l1},{l2}): expected (S, K, K) array")
        if l1 > l2:
            l1, l2, arr = l2, l1, np.swapaxes(arr, 1, 2)
        if (l1, l2) in canon:
            if not np.array_equal(canon[(l1, l2)], arr):
                raise ConfigError(f"theta block ({l1},{l2}) given twice, inconsistently")
            continue
        canon[(l1, l2)] = arr
    return canon


@dataclass
class DhsbmConfig:
    """Sampler parameters; see the module docstring for the model."""

    layout: TypeLayout
    K: int
    pi: np.ndarray  # (L, K) membership probabilities per type
    theta: dict  # (l1, l2) with l1 <= l2 -> (S, K, K)
    alpha: dict | float = 0.0  # per block, scalar broadcasts
    rho: float = 1.0
    seed: int = 0
    fixed_labels: Assignment | None = None
    num_snapshots: int = field(init=False)

    def __post_init__(self):
        if self.K < 1:
            raise ConfigError("K must be at least 1")
        self.pi = np.asarray(self.pi, dtype=np.float64)
        if self.pi.shape != (self.layout.num_types, self.K):
            raise ConfigError("pi must have shape (L, K)")
        self.theta = _canonical_theta(self.layout, self.theta)
        if not self.theta:
            raise ConfigError("theta must define at least one block")
        lengths = {arr.shape[0] for arr in self.theta.values()}
        if len(lengths) != 1:
            raise ConfigError("all theta blocks must share one snapshot count")
        self.num_snapshots = lengths.pop()
        if any(arr.shape[1] != self.K for arr in self.theta.values()):
            raise ConfigError("theta blocks must be K x K")
        if np.isscalar(self.alpha):
            self.alpha = {key: float(self.alpha) for key in self.theta}
        else:
            self.alpha = {tuple(sorted(k)): float(v) for k, v in self.alpha.items()}
            if set(self.alpha) != set(self.theta):
                raise ConfigError("alpha blocks must match theta blocks")
        if self.fixed_labels is not None and self.fixed_labels.n != self.layout.n:
            raise ConfigError("fixed_labels length must equal node count")


@dataclass(frozen=True)
class Violation:
    """One broken model constraint, localized to a cell where applicable."""

    kind: str
    block: tuple[int, int] | None = None
    s: int | None = None  # 1-based snapshot, the *target* time of a transition
    cell: tuple[int, int] | None = None
    detail: str = ""

    def __str__(self):
        where = []
        if self.block is not None:
            where.append(f"block {self.block}")
        if self.s is not None:
            where.append(f"s={self.s}")
        if self.cell is not None:
            where.append(f"cell {self.cell}")
        loc = ", ".join(where)
        return f"{self.kind}" + (f" at {loc}" if loc else "") + (
            f": {self.detail}" if self.detail else "")


def validate_config(cfg: DhsbmConfig) -> list[Violation]:
    """All violated model constraints; an empty list means the config is valid."""
    out: list[Violation] = []
    eps = 1e-12
    for l in range(cfg.layout.num_types):
        row = cfg.pi[l]
        if row.min() < 0 or abs(row.sum() - 1.0) > 1e-12:
            out.append(Violation("pi not a probability vector", block=(l, l),
                                 detail=f"sum={row.sum()!r}"))
    if cfg.rho <= 0:
        out.append(Violation("rho must be positive", detail=f"rho={cfg.rho}"))
    for key, arr in sorted(cfg.theta.items()):
        a = cfg.alpha[key]
        if not 0 <= a < 1:
            out.append(Violation("alpha outside [0, 1)", block=key, detail=f"alpha={a}"))
            continue
        l1, l2 = key
        th = cfg.rho * arr
        if l1 == l2:
            for s in range(arr.shape[0]):
                if not np.allclose(arr[s], arr[s].T, atol=1e-12, rtol=0):
                    out.append(Violation("same-type theta not symmetric",
                                         block=key, s=s + 1))
        bad = np.argwhere((th < -eps) | (th > 1 + eps))
        for s, k1, k2 in bad:
            out.append(Violation("rho*theta outside [0, 1]", block=key,
                                 s=int(s) + 1, cell=(int(k1), int(k2)),
                                 detail=f"value={th[s, k1, k2]!r}"))
        for s in range(1, arr.shape[0]):
            prev, cur = th[s - 1], th[s]
            for k1, k2 in np.argwhere(a * prev > cur + eps):
                out.append(Violation("alpha*theta(prev) exceeds theta", block=key,
                                     s=s + 1, cell=(int(k1), int(k2)),
                                     detail=f"{a}*{prev[k1, k2]!r} > {cur[k1, k2]!r}"))
            for k1, k2 in np.argwhere(a * (1 - prev) > 1 - cur + eps):
                out.append(Violation("alpha*(1-theta(prev)) exceeds 1-theta",
                                     block=key, s=s + 1, cell=(int(k1), int(k2)),
                                     detail=f"{a}*(1-{prev[k1, k2]!r}) > 1-{cur[k1, k2]!r}"))
    return out


def balanced_labels(layout: TypeLayout, K: int, pi) -> Assignment:
    """Deterministic labels with exact largest-remainder proportions per type."""
    pi = np.asarray(pi, dtype=np.float64)
    labels = np.empty(layout.n, dtype=np.int64)
    for l in range(layout.num_types):
        n_l = layout.sizes[l]
        raw = pi[l] * n_l
        counts = np.floor(raw).astype(int)
        short = n_l - counts.sum()
        if short:
            order = np.argsort(-(raw - counts), kind="stable")
            counts[order[:short]] += 1
        labels[layout.type_slice(l)] = np.repeat(np.arange(K), counts)
    return Assignment.from_labels(labels)


def _draw_labels(cfg: DhsbmConfig) -> np.ndarray:
    if cfg.fixed_labels is not None:
        return cfg.fixed_labels.labels
    labels = np.empty(cfg.layout.n, dtype=np.int64)
    for l in range(cfg.layout.num_types):
        rng = derived_rng(cfg.seed, "labels", l)
        labels[cfg.layout.type_slice(l)] = rng.choice(
            cfg.K, size=cfg.layout.sizes[l], p=cfg.pi[l]
        )
    return labels


def _sample_block(cfg: DhsbmConfig, key, lab1, lab2) -> list[np.ndarray]:
    """Edge pair lists per snapshot for one canonical block (l1 <= l2)."""
    l1, l2 = key
    th = cfg.rho * cfg.theta[key]
    a = cfg.alpha[key]
    n1, n2 = len(lab1), len(lab2)
    S = th.shape[0]
    prev = np.zeros((n1, n2), dtype=bool)
    per_snapshot = []
    for s in range(S):
        cur = np.empty((n1, n2), dtype=bool)
        rng = derived_rng(cfg.seed, "block", s, l1, l2)
        if s == 0:
            p_v = th[0]
        else:
            p_v = np.clip((th[s] - a * th[s - 1]) / (1.0 - a), 0.0, 1.0)
        for lo in range(0, n1, _CHUNK_ROWS):
            hi = min(lo + _CHUNK_ROWS, n1)
            p = p_v[np.ix_(lab1[lo:hi], lab2)]
            if s == 0:
                cur[lo:hi] = rng.random((hi - lo, n2)) < p
            else:
                keep = rng.random((hi - lo, n2)) < a
                fresh = rng.random((hi - lo, n2)) < p
                cur[lo:hi] = np.where(keep, prev[lo:hi], fresh)
        if l1 == l2:
            cur[np.tril_indices(n1)] = False  # sample i<j once, mirror on access
        per_snapshot.append(np.column_stack(np.nonzero(cur)).astype(np.int64))
        prev = cur
    return per_snapshot


def sample(cfg: DhsbmConfig) -> tuple[DynHetNet, Assignment]:
    """Draw one network and its ground-truth labels; deterministic per seed."""
    violations = validate_config(cfg)
    if violations:
        raise ConfigError(
            "invalid model configuration:\n"
            + "\n".join("  " + str(v) for v in violations)
        )
    labels = _draw_labels(cfg)
    layout = cfg.layout
    per_block = {}
    for key in sorted(cfg.theta):
        l1, l2 = key
        lab1 = labels[layout.type_slice(l1)]
        lab2 = labels[layout.type_slice(l2)]
        per_block[key] = _sample_block(cfg, key, lab1, lab2)
    snapshots = []
    for s in range(cfg.num_snapshots):
        blocks = {key: per_block[key][s] for key in per_block
                  if len(per_block[key][s])}
        snapshots.append(Snapshot(layout, s + 1, blocks))
    # keep label ids aligned with theta's community indices when possible;
    # only a draw that left some community empty forces renumbering
    if np.unique(labels).size == cfg.K:
        truth = Assignment(labels, cfg.K)
    else:
        truth = Assignment.from_labels(labels)
    return DynHetNet(layout, snapshots), truth


# ---------------------------------------------------------------------------
# Assortativity condition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AssortativityReport:
    """Result of the within/between community excess test.

    ``holds`` is true when every diagonal entry of the aggregated excess
    matrix is strictly positive and every off-diagonal entry strictly
    negative.  ``w_blocks`` keeps the per-ordered-block, per-snapshot
    excess matrices; ``w_total`` their sum; the margins are the worst
    diagonal (want > 0) and worst off-diagonal (want < 0) entries.
    """

    holds: bool
    w_blocks: dict
    w_total: np.ndarray
    min_diagonal: float
    max_offdiagonal: float


def assortativity_check(cfg: DhsbmConfig) -> AssortativityReport:
    """Evaluate the block-model assortativity condition.

    Per ordered block and snapshot, normalize pi_a pi_b theta_ab to a joint
    table T, take W = T - (row sums)(column sums)^T, and aggregate over all
    blocks and snapshots; zero-mass tables are skipped.  The sparsity
    multiplier rho cancels and is ignored.
    """
    L, K = cfg.layout.num_types, cfg.K
    w_blocks: dict[tuple[int, int], np.ndarray] = {}
    w_total = np.zeros((K, K))
    any_mass = False
    for l1 in range(L):
        for l2 in range(L):
            key = (min(l1, l2), max(l1, l2))
            if key not in cfg.theta:
                continue
            arr = cfg.theta[key]
            if l1 > l2:
                arr = np.swapaxes(arr, 1, 2)
            S = arr.shape[0]
            W = np.zeros((S, K, K))
            for s in range(S):
                joint = np.outer(cfg.pi[l1], cfg.pi[l2]) * arr[s]
                z = joint.sum()
                if z == 0:
                    continue
                any_mass = True
                T = joint / z
                W[s] = T - np.outer(T.sum(axis=1), T.sum(axis=0))
            w_blocks[(l1, l2)] = W
            w_total += W.sum(axis=0)
    if not any_mass:
        raise ConfigError("degenerate model: every block has zero edge mass")
    diag = np.diag(w_total)
    off = w_total[~np.eye(K, dtype=bool)] if K > 1 else np.array([-np.inf])
    holds = bool(diag.min() > 0 and off.max() < 0)
    return AssortativityReport(holds, w_blocks, w_total,
                               float(diag.min()), float(off.max()))


# ---------------------------------------------------------------------------
# Experiment scenario construction (two types, three communities)
# ---------------------------------------------------------------------------


def activity_tables(S: int, r3max: float) -> np.ndarray:
    """Piecewise-linear on/off bonus schedules for the three communities.

    Over the unit time grid: community 1 starts active, dips to inactive
    at t=0.5, returns; community 2 peaks at t=0.5 and is off at the ends;
    community 3 ramps up and stays active.  The exact shapes are a fixture
    choice, not a published table.
    """
    t = np.linspace(0.0, 1.0, S) if S > 1 else np.zeros(1)
    r31 = r3max * np.abs(1.0 - 2.0 * t)
    r32 = r3max * (1.0 - np.abs(1.0 - 2.0 * t))
    r33 = r3max * np.minimum(2.0 * t, 1.0)
    return np.column_stack([r31, r32, r33])


def scenario_builder(name: str, params: dict) -> DhsbmConfig:
    """Two-type, three-community experiment configs.

    ``setting1``: time-constant theta; same-type blocks theta1/theta2 with
    diagonal bonus r1/r2, cross block theta3 with bonus r3.
    ``setting2``: like setting1 but the cross-block bonus varies per
    snapshot; pass ``r3_tables`` of shape (S, 3) or ``r3max`` to use
    :func:`activity_tables`.
    ``setting3``: either structure plus temporal correlation ``alpha``
    (constant theta when ``r3`` given, time-varying with tables).
    """
    known = {"setting1", "setting2", "setting3"}
    if name not in known:
        raise ConfigError(f"unknown scenario name: {name!r}")
    p = dict(params)
    K = 3
    n1, n2 = int(p["n1"]), int(p["n2"])
    S = int(p["S"])
    th1, th2, th3 = float(p["theta1"]), float(p["theta2"]), float(p["theta3"])
    r1, r2 = float(p.get("r1", 0.0)), float(p.get("r2", 0.0))
    alpha = float(p.get("alpha", 0.0))
    if name != "setting3" and alpha != 0.0:
        raise ConfigError(f"{name} samples independent snapshots; alpha must be 0")

    if name == "setting2" or (name == "setting3" and "r3" not in p):
        if "r3_tables" in p:
            tables = np.asarray(p["r3_tables"], dtype=np.float64)
            if tables.shape != (S, K):
                raise ConfigError("r3_tables must have shape (S, 3)")
        else:
            tables = activity_tables(S, float(p["r3max"]))
    else:
        tables = np.tile(np.full(K, float(p["r3"])), (S, 1))

    eye = np.eye(K)
    ones = np.ones((K, K))
    th11 = np.tile(th1 * ones + r1 * eye, (S, 1, 1))
    th22 = np.tile(th2 * ones + r2 * eye, (S, 1, 1))
    th12 = np.tile(th3 * ones, (S, 1, 1))
    th12 += tables[:, :, None] * eye

    layout = TypeLayout((n1, n2))
    return DhsbmConfig(
        layout=layout,
        K=K,
        pi=np.full((2, K), 1.0 / K),
        theta={(0, 0): th11, (1, 1): th22, (0, 1): th12},
        alpha=alpha,
        rho=float(p.get("rho", 1.0)),
        seed=int(p.get("seed", 0)),
    )
