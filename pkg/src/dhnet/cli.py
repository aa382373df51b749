"""Command line surface: simulate, detect, evaluate, benchmark, check, predict.

Exit codes: 0 ok, 2 configuration error, 3 empty network, 4 I/O or file
format error.  Every file-writing command also writes a JSON manifest
(seed, input digests, version) so outputs can be reproduced byte for byte.
All randomness flows from one root seed through named derivation keys;
see :mod:`dhnet.rng`.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .baselines import method1, method2, method3, method4
from .dhsbm import (
    DhsbmConfig,
    assortativity_check,
    sample,
    scenario_builder,
    validate_config,
)
from .errors import ConfigError, EmptyNetworkError, FormatError
from .hetnet import DynHetNet, TypeLayout, aggregate_max, parse_network, serialize_network
from .metrics import (
    Distribution,
    community_profiles,
    jsd,
    misclassification,
    nmi,
    predict_interest,
)
from .modularity import Assignment, parse_labels, serialize_labels
from .optimizer import DhnetConfig, dhnet_detect
from .rng import derived_int

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EMPTY = 3
EXIT_IO = 4

METHODS = ("dhnet", "m1", "m2", "m3", "m4")


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _read_bytes(path) -> bytes:
    return Path(path).read_bytes()


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _write_manifest(path: Path, command: str, seed, digests: dict, extra: dict):
    doc = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "inputs_sha256": digests,
        "parameters": extra,
    }
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


def _load_toml(path) -> dict:
    try:
        return tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc


def _theta_from_csv(path: Path, S: int, K: int) -> np.ndarray:
    """A (S, K, K) table stored as S stacked K x K CSV blocks."""
    values = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    if values.shape != (S * K, K):
        raise ConfigError(
            f"theta csv {path}: expected {S * K} rows x {K} cols, got {values.shape}"
        )
    return values.reshape(S, K, K)


def load_model_config(path) -> DhsbmConfig:
    """Read a simulation config: a [scenario] or an explicit [model] table."""
    doc = _load_toml(path)
    if "scenario" in doc:
        params = dict(doc["scenario"])
        name = params.pop("name", None)
        if name is None:
            raise ConfigError("scenario table needs a 'name' key")
        try:
            return scenario_builder(name, params)
        except KeyError as exc:
            raise ConfigError(f"scenario is missing parameter {exc}") from exc
    if "model" not in doc:
        raise ConfigError("config needs a [scenario] or [model] table")
    m = dict(doc["model"])
    try:
        layout = TypeLayout(tuple(int(x) for x in m["sizes"]))
        K = int(m["K"])
        pi = np.asarray(m["pi"], dtype=np.float64)
        if pi.ndim == 1:
            pi = np.tile(pi, (layout.num_types, 1))
        S = int(m["S"])
        theta: dict = {}
        for entry in m["theta"]:
            l1, l2 = (int(x) for x in entry["block"])
            if "values" in entry:
                arr = np.asarray(entry["values"], dtype=np.float64)
            elif "csv" in entry:
                arr = _theta_from_csv(Path(path).parent / entry["csv"], S, K)
            else:
                raise ConfigError(f"theta block ({l1},{l2}) needs 'values' or 'csv'")
            if arr.shape != (S, K, K):
                raise ConfigError(
                    f"theta block ({l1},{l2}): expected shape {(S, K, K)}, "
                    f"got {arr.shape}"
                )
            theta[(l1, l2)] = arr
        alpha = m.get("alpha", 0.0)
        if isinstance(alpha, list):
            alpha = {
                tuple(int(x) for x in entry["block"]): float(entry["value"])
                for entry in alpha
            }
        return DhsbmConfig(
            layout=layout,
            K=K,
            pi=pi,
            theta=theta,
            alpha=alpha,
            rho=float(m.get("rho", 1.0)),
            seed=int(m.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad model config: {exc}") from exc


def _read_label_triples(path) -> dict:
    """Standalone label file reader: {(type, node): label}."""
    triples: dict[tuple[int, int], int] = {}
    text = _read_bytes(path).decode("utf-8")
    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        tokens = stripped.split()
        if len(tokens) != 3:
            raise FormatError(f"{path}: malformed label line {lineno}: {stripped!r}")
        try:
            l, i, lab = (int(t) for t in tokens)
        except ValueError as exc:
            raise FormatError(
                f"{path}: malformed label line {lineno}: {stripped!r}") from exc
        if (l, i) in triples:
            raise FormatError(f"{path}: duplicate node {l}:{i} on line {lineno}")
        triples[(l, i)] = lab
    if not triples:
        raise FormatError(f"{path}: no labels found")
    return triples


def _detect_with_method(net: DynHetNet, method: str, cfg: DhnetConfig):
    """Run one method; labels are returned over the input's global nodes.

    The decomposition method's per-type labelings get disjoint id ranges
    so they fit one label vector; its Q is the sum of per-type values.
    """
    if method == "dhnet":
        assignment, q = dhnet_detect(net, cfg)
        return assignment, q, {}
    if method == "m1":
        assignment, q = method1(net, cfg)
        return assignment, q, {}
    if method == "m2":
        assignment, q = method2(net, cfg)
        return assignment, q, {}
    if method == "m3":
        assignment, q = method3(net, cfg, cfg.seed)
        return assignment, q, {}
    if method == "m4":
        results = method4(net, cfg)
        labels = np.empty(net.layout.n, dtype=np.int64)
        offset = 0
        degenerate = []
        q_total = 0.0
        for l, res in enumerate(results):
            labels[net.layout.type_slice(l)] = res.assignment.labels + offset
            offset += res.assignment.k
            q_total += res.q
            if res.degenerate:
                degenerate.append(l)
        info = {"degenerate_types": degenerate} if degenerate else {}
        return Assignment.from_labels(labels), q_total, info
    raise ConfigError(f"unknown method: {method!r}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = load_model_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    violations = validate_config(cfg)
    if violations:
        print("invalid model configuration:", file=sys.stderr)
        for v in violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_CONFIG
    net, truth = sample(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "network.txt").write_bytes(serialize_network(net))
    (out / "labels.txt").write_bytes(serialize_labels(truth, net.layout))
    _write_manifest(
        out / "manifest.json",
        "simulate",
        cfg.seed,
        {"config": _sha256(_read_bytes(args.config))},
        {"out_dir": str(out)},
    )
    print(f"wrote {out / 'network.txt'} ({net.num_snapshots} snapshots, "
          f"{net.layout.n} nodes) and {out / 'labels.txt'}")
    return EXIT_OK


def cmd_detect(args) -> int:
    data = _read_bytes(args.network)
    net = parse_network(data)
    cfg = DhnetConfig(
        kappa=args.kappa,
        seed=args.seed,
        parallel_restarts=args.parallel,
    )
    start = time.perf_counter()
    assignment, q, info = _detect_with_method(net, args.method, cfg)
    seconds = time.perf_counter() - start
    out = Path(args.out) if args.out else Path(str(args.network) + ".labels")
    out.write_bytes(serialize_labels(assignment, net.layout))
    _write_manifest(
        Path(str(out) + ".manifest.json"),
        "detect",
        args.seed,
        {"network": _sha256(data)},
        {"method": args.method, "kappa": args.kappa, **info},
    )
    print(f"Q={q:.10f} K={assignment.k} restarts={args.kappa} seconds={seconds:.3f}")
    return EXIT_OK


def _per_type_vectors(triples: dict) -> dict:
    by_type: dict[int, dict[int, int]] = {}
    for (l, i), lab in triples.items():
        by_type.setdefault(l, {})[i] = lab
    out = {}
    for l, nodes in sorted(by_type.items()):
        idx = sorted(nodes)
        if idx != list(range(len(idx))):
            raise FormatError(f"type {l}: node indices are not contiguous from 0")
        out[l] = np.array([nodes[i] for i in idx], dtype=np.int64)
    return out


def cmd_evaluate(args) -> int:
    est = _read_label_triples(args.est_labels)
    true = _read_label_triples(args.true_labels)
    if set(est) != set(true):
        raise ConfigError("label files cover different node sets")
    est_t = _per_type_vectors(est)
    true_t = _per_type_vectors(true)
    est_all = np.concatenate([est_t[l] for l in sorted(est_t)])
    true_all = np.concatenate([true_t[l] for l in sorted(true_t)])
    print(f"NMI={nmi(est_all, true_all):.6f} "
          f"MISCLASS={misclassification(est_all, true_all):.6f}")
    for l in sorted(est_t):
        print(f"NMI[{l}]={nmi(est_t[l], true_t[l]):.6f}")
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = load_model_config(args.config)
    report = assortativity_check(cfg)
    word = "holds" if report.holds else "fails"
    print(f"assortativity={word} min_diagonal={report.min_diagonal:.6f} "
          f"max_offdiagonal={report.max_offdiagonal:.6f}")
    for row in report.w_total:
        print("W_total: " + " ".join(f"{x:+.6f}" for x in row))
    return EXIT_OK


def run_benchmark(spec: dict, spec_digest: str, replicates: int | None,
                  out_path: Path, progress=None) -> list[dict]:
    """Execute a sweep grid; returns the row dicts written to CSV.

    Replicate seeds exclude the swept value, so runs across the sweep
    share labels and base uniforms (common random numbers).
    """
    b = dict(spec.get("benchmark", {}))
    if "scenario" not in b:
        raise ConfigError("benchmark spec needs benchmark.scenario")
    scenario = b["scenario"]
    label = b.get("label", scenario)
    params = dict(spec.get("params", {}))
    sweep_param = b.get("sweep_param")
    sweep_values = b.get("sweep_values", [None])
    if sweep_param is None and sweep_values != [None]:
        raise ConfigError("sweep_values without sweep_param")
    methods = b.get("methods", list(METHODS))
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ConfigError(f"unknown methods: {bad}")
    reps = int(replicates if replicates is not None else b.get("replicates", 20))
    kappa = int(b.get("kappa", 20))
    root = int(b.get("seed", 0))
    parallel = bool(b.get("parallel_restarts", False))

    rows: list[dict] = []
    for value in sweep_values:
        run_params = dict(params)
        if sweep_param is not None:
            run_params[sweep_param] = value
        for rep in range(reps):
            run_params["seed"] = derived_int(root, "sim", rep)
            cfg = scenario_builder(scenario, run_params)
            net, truth = sample(cfg)
            layout = net.layout
            true_t = {
                l: truth.labels[layout.type_slice(l)]
                for l in range(layout.num_types)
            }
            for method in methods:
                det = DhnetConfig(
                    kappa=kappa,
                    seed=derived_int(root, "detect", rep, method),
                    parallel_restarts=parallel,
                )
                start = time.perf_counter()
                assignment, q, _ = _detect_with_method(net, method, det)
                seconds = time.perf_counter() - start
                for l in range(layout.num_types):
                    est_l = assignment.labels[layout.type_slice(l)]
                    rows.append({
                        "scenario": label,
                        "param": "" if value is None else value,
                        "replicate": rep,
                        "method": method,
                        "node_type": l,
                        "nmi": nmi(est_l, true_t[l]),
                        "q": q,
                        "seconds": seconds,
                        "seed": root,
                    })
                if progress is not None:
                    progress(value, rep, method)

    mean_rows = []
    for value in sweep_values:
        pv = "" if value is None else value
        for method in methods:
            for l in sorted({r["node_type"] for r in rows}):
                group = [r for r in rows
                         if r["param"] == pv and r["method"] == method
                         and r["node_type"] == l]
                if not group:
                    continue
                mean_rows.append({
                    "scenario": label,
                    "param": pv,
                    "replicate": "mean",
                    "method": method,
                    "node_type": l,
                    "nmi": float(np.mean([r["nmi"] for r in group])),
                    "q": float(np.mean([r["q"] for r in group])),
                    "seconds": float(np.mean([r["seconds"] for r in group])),
                    "seed": root,
                })
    rows.extend(mean_rows)

    fields = ["scenario", "param", "replicate", "method", "node_type",
              "nmi", "q", "seconds", "seed"]
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            r = dict(r)
            r["nmi"] = f"{r['nmi']:.6f}"
            r["q"] = f"{r['q']:.6f}"
            r["seconds"] = f"{r['seconds']:.3f}"
            writer.writerow(r)
    _write_manifest(
        Path(str(out_path) + ".manifest.json"),
        "benchmark",
        root,
        {"spec": spec_digest},
        {"replicates": reps, "kappa": kappa, "methods": methods,
         "sweep_param": sweep_param},
    )
    return rows


def cmd_benchmark(args) -> int:
    spec = _load_toml(args.spec)
    digest = _sha256(_read_bytes(args.spec))
    rows = run_benchmark(spec, digest, args.replicates, Path(args.out))
    n_runs = len([r for r in rows if r["replicate"] != "mean"])
    print(f"wrote {args.out}: {n_runs} rows plus means")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Interest prediction
# ---------------------------------------------------------------------------


def _block_pairs(net: DynHetNet, type_a: int, type_b: int):
    """(a_index, b_index) arrays of union-over-time edges between two types."""
    static = aggregate_max(net)
    lo, hi = min(type_a, type_b), max(type_a, type_b)
    pairs = static.snapshots[0].stored_pairs(lo, hi)
    if lo == type_a:
        return pairs[:, 0], pairs[:, 1]
    return pairs[:, 1], pairs[:, 0]


def _parse_test_edges(path, n_users: int, n_cats: int):
    """Test file: `friend <user> <train-user-index>` and
    `review <user> <category-index>` lines; users are free-form tokens."""
    friends: dict[str, list[int]] = {}
    reviews: dict[str, list[int]] = {}
    order: list[str] = []
    text = _read_bytes(path).decode("utf-8")
    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        tokens = stripped.split()
        if len(tokens) != 3 or tokens[0] not in ("friend", "review"):
            raise FormatError(f"{path}: malformed test line {lineno}: {stripped!r}")
        kind, user, idx_str = tokens
        try:
            idx = int(idx_str)
        except ValueError as exc:
            raise FormatError(
                f"{path}: malformed test line {lineno}: {stripped!r}") from exc
        limit = n_users if kind == "friend" else n_cats
        if not 0 <= idx < limit:
            raise FormatError(f"{path}: index out of range on line {lineno}: {idx}")
        if user not in friends:
            friends[user], reviews[user] = [], []
            order.append(user)
        (friends if kind == "friend" else reviews)[user].append(idx)
    if not order:
        raise FormatError(f"{path}: no test users found")
    return order, friends, reviews


def cmd_predict(args) -> int:
    net_bytes = _read_bytes(args.train_net)
    net = parse_network(net_bytes)
    layout = net.layout
    for name in ("category_type", "business_type", "user_type"):
        val = getattr(args, name)
        if not 0 <= val < layout.num_types:
            raise ConfigError(f"--{name.replace('_', '-')} out of range: {val}")
    labels = parse_labels(_read_bytes(args.labels), layout)

    profiles = community_profiles(net, labels, args.category_type,
                                  args.business_type)
    k = labels.k
    user_off = layout.offsets[args.user_type]

    users, friends, reviews = _parse_test_edges(
        args.test_edges, layout.sizes[args.user_type],
        layout.sizes[args.category_type])

    # Train-side paths for the naive strategy: friend -> business -> category.
    fr_user, fr_biz = _block_pairs(net, args.user_type, args.business_type)
    biz_to_cats: dict[int, np.ndarray] = {}
    bc_biz, bc_cat = _block_pairs(net, args.business_type, args.category_type)
    for b in np.unique(fr_biz):
        biz_to_cats[int(b)] = bc_cat[bc_biz == b]
    user_to_biz: dict[int, np.ndarray] = {
        int(u): fr_biz[fr_user == u] for u in np.unique(fr_user)
    }

    n_cats = layout.sizes[args.category_type]
    rows = []
    scored = []
    for user in users:
        row = {"user": user, "jsd_dhnet": "", "jsd_naive": "", "flag": ""}
        if not reviews[user]:
            row["flag"] = "no_truth"
            rows.append(row)
            continue
        truth = Distribution.from_counts(np.bincount(reviews[user], minlength=n_cats))
        if not friends[user]:
            row["flag"] = "cold_start"
            rows.append(row)
            continue
        comm_counts = np.zeros(k)
        naive_counts = np.zeros(n_cats)
        for f in friends[user]:
            comm_counts[labels.labels[user_off + f]] += 1
            for b in user_to_biz.get(f, ()):
                cats = biz_to_cats.get(int(b))
                if cats is not None and len(cats):
                    naive_counts += np.bincount(cats, minlength=n_cats)
        try:
            g_model = predict_interest(comm_counts, profiles)
        except ValueError:
            row["flag"] = "cold_start"
            rows.append(row)
            continue
        if naive_counts.sum() == 0:
            row["flag"] = "cold_start"
            rows.append(row)
            continue
        g_naive = Distribution.from_counts(naive_counts)
        j_model = jsd(g_model, truth)
        j_naive = jsd(g_naive, truth)
        row["jsd_dhnet"] = f"{j_model:.6f}"
        row["jsd_naive"] = f"{j_naive:.6f}"
        rows.append(row)
        scored.append((j_model, j_naive))

    if scored:
        mean_model = float(np.mean([s[0] for s in scored]))
        mean_naive = float(np.mean([s[1] for s in scored]))
        rows.append({"user": "mean", "jsd_dhnet": f"{mean_model:.6f}",
                     "jsd_naive": f"{mean_naive:.6f}", "flag": ""})
    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["user", "jsd_dhnet", "jsd_naive",
                                                "flag"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    _write_manifest(
        Path(str(out) + ".manifest.json"),
        "predict",
        None,
        {"train_net": _sha256(net_bytes),
         "labels": _sha256(_read_bytes(args.labels)),
         "test_edges": _sha256(_read_bytes(args.test_edges))},
        {"category_type": args.category_type,
         "business_type": args.business_type,
         "user_type": args.user_type},
    )
    excluded = sum(1 for r in rows if r["flag"])
    if scored:
        print(f"JSD_DHNET={mean_model:.6f} JSD_NAIVE={mean_naive:.6f} "
              f"users={len(scored)} excluded={excluded}")
    else:
        print(f"JSD_DHNET=nan JSD_NAIVE=nan users=0 excluded={excluded}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dhnet",
        description="Common community detection in dynamic heterogeneous networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a network from a model config")
    p.add_argument("config", help="TOML config with a [scenario] or [model] table")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="override the config's seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="detect communities in a network file")
    p.add_argument("network")
    p.add_argument("--kappa", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=METHODS, default="dhnet")
    p.add_argument("--out", default=None,
                   help="label file path (default: <network>.labels)")
    p.add_argument("--parallel", action="store_true",
                   help="run restarts across processes")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", help="compare two label files")
    p.add_argument("est_labels")
    p.add_argument("true_labels")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="run a replicated sweep to CSV")
    p.add_argument("spec", help="TOML benchmark spec")
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("check", help="evaluate the assortativity condition")
    p.add_argument("config")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("predict", help="predict category interests of new users")
    p.add_argument("train_net")
    p.add_argument("labels")
    p.add_argument("test_edges")
    p.add_argument("--category-type", type=int, required=True)
    p.add_argument("--business-type", type=int, required=True)
    p.add_argument("--user-type", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyNetworkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
