"""Command-line pipeline: every stage reads and writes plain files.

Subcommands mirror the analysis stages (synth, collect, preprocess,
halflife, quantiles, country-report, cluster, features, train, evaluate,
explain). All randomness flows from one --seed per run (default 42), which
is recorded in each output manifest; identical inputs and seeds yield
byte-identical outputs. Reporting stages additionally render a PNG figure
next to each CSV unless --no-figures is given.

Exit codes: 0 success, 1 validation/data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from . import cluster as cluster_mod
from . import collector as collector_mod
from . import core, explain, features as features_mod, figures, learn, synth
from .io import (
    SchemaError,
    atomic_write,
    fmt_float,
    read_channels,
    read_halflives,
    read_trajectories,
    read_videos,
    write_channels,
    write_csv,
    write_halflives,
    write_json,
    write_trajectories,
    write_videos,
)

DEFAULT_SEED = 42

EVAL_HEADER = ["model", "accuracy", "precision", "recall", "f1_score", "roc_auc"]


def _manifest(out_dir: Path, command: str, seed: int | None, params: dict, outputs: list[str]) -> None:
    write_json(
        out_dir / "manifest.json",
        {"command": command, "outputs": sorted(outputs), "params": params, "seed": seed},
    )


def _resolution(name: str) -> core.Resolution:
    return core.Resolution.HOURLY if name == "hourly" else core.Resolution.FIVE_MINUTE


def _features_header(names) -> list[str]:
    return ["video_id", *names, "label"]


def write_features_csv(path: Path, vectors, names) -> None:
    rows = []
    for v in vectors:
        rows.append(
            [v.video_id, *[fmt_float(x) for x in v.values], "" if v.label is None else v.label]
        )
    write_csv(path, _features_header(names), rows)


def read_features_csv(path: Path, names) -> tuple[list[str], np.ndarray, np.ndarray]:
    import csv

    expected = _features_header(names)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            missing = [c for c in expected if c not in (header or [])]
            extra = [c for c in (header or []) if c not in expected]
            raise SchemaError(
                f"{path}: feature file header mismatch; missing {missing or 'none'}, "
                f"unexpected {extra or 'none'}"
            )
        ids, X, y = [], [], []
        for row in reader:
            ids.append(row[0])
            X.append([float(x) for x in row[1:-1]])
            y.append(int(row[-1]))
    return ids, np.asarray(X), np.asarray(y, dtype=int)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    out = Path(args.out)
    outputs: list[str] = []
    if args.n_per_family is None and args.features_n is None:
        raise ValueError("pass --n-per-family and/or --features-n")
    if args.n_per_family is not None:
        cohort = synth.generate_cohort(
            args.n_per_family,
            seed=args.seed,
            resolution=_resolution(args.resolution),
            noise_level=args.noise,
        )
        write_trajectories(out / "trajectories.csv", cohort.trajectories)
        write_csv(
            out / "families.csv",
            ["video_id", "family"],
            [[t.video_id, cohort.labels[t.video_id]] for t in cohort.trajectories],
        )
        outputs += ["trajectories.csv", "families.csv"]
    if args.features_n is not None:
        data = synth.synth_features(args.features_n, seed=args.seed, noise_hours=args.feature_noise)
        write_videos(out / "videos.csv", data.videos)
        write_channels(out / "channels.csv", data.channels)
        write_csv(
            out / "halflives.csv",
            ["video_id", "half_life_hours", "overshoot_pct"],
            [[vid, fmt_float(h), "0"] for vid, h in data.half_lives.items()],
        )
        outputs += ["videos.csv", "channels.csv", "halflives.csv"]
    _manifest(
        out,
        "synth",
        args.seed,
        {
            "n_per_family": args.n_per_family,
            "features_n": args.features_n,
            "noise": args.noise,
            "feature_noise": args.feature_noise,
            "resolution": args.resolution,
        },
        outputs,
    )
    print(f"synth: wrote {', '.join(outputs)} to {out}")
    return 0


def cmd_collect(args) -> int:
    out = Path(args.out)
    fixture = collector_mod.read_fixture(args.fixture)
    clock = collector_mod.SimulatedClock()
    source = collector_mod.SyntheticSource(
        fixture, clock, failure_rate=args.failure_rate, failure_seed=args.seed
    )
    result = collector_mod.run(source, args.duration, seed=args.seed, store_dir=out)
    trajs = [v.to_trajectory() for _, v in sorted(result.state.completed.items())]
    write_trajectories(out / "trajectories.csv", trajs)
    print(
        f"collect: {result.manifest['n_completed']} completed, "
        f"{result.manifest['n_active']} in flight after {args.duration} minutes"
    )
    return 0


def cmd_preprocess(args) -> int:
    out = Path(args.out)
    resolution = core.Resolution.HOURLY if args.ruleset == "A" else core.Resolution.FIVE_MINUTE
    validator = core.validate_a if args.ruleset == "A" else core.validate_b
    trajs = read_trajectories(args.trajectories, resolution)
    accepted, rejected = [], []
    for t in trajs:
        try:
            decision = validator(t)
        except core.MalformedTrajectoryError as exc:
            rejected.append([t.video_id, f"malformed: {exc}"])
            continue
        if decision.accepted:
            accepted.append(core.impute(t))
        else:
            rejected.append([t.video_id, decision.reason])
    write_trajectories(out / "accepted.csv", accepted)
    write_csv(out / "rejected.csv", ["video_id", "reason"], rejected)
    _manifest(
        out,
        "preprocess",
        None,
        {"ruleset": args.ruleset, "n_accepted": len(accepted), "n_rejected": len(rejected)},
        ["accepted.csv", "rejected.csv"],
    )
    print(f"preprocess: accepted {len(accepted)}, rejected {len(rejected)}")
    return 0


def cmd_halflife(args) -> int:
    out = Path(args.out)
    trajs = read_trajectories(args.trajectories, _resolution(args.resolution))
    halflives = {t.video_id: core.half_life(t) for t in trajs}
    write_halflives(out / "halflives.csv", halflives)
    outputs = ["halflives.csv"]
    if not args.no_figures:
        figures.halflife_hist_figure([h.value for h in halflives.values()], out / "halflives.png")
        outputs.append("halflives.png")
    _manifest(out, "halflife", None, {"n_videos": len(halflives)}, outputs)
    print(f"halflife: computed {len(halflives)} values")
    return 0


def cmd_quantiles(args) -> int:
    out = Path(args.out)
    halflives = read_halflives(args.half_lives)
    if not halflives:
        raise ValueError("no half-life rows to summarize")
    q = core.halflife_quantiles(list(halflives.values()))
    write_csv(
        out / "quantiles.csv",
        ["quantile_pct", "half_life_hours"],
        [[int(p * 100), fmt_float(v)] for p, v in zip(core.QUANTILE_LEVELS, q)],
    )
    outputs = ["quantiles.csv"]
    if not args.no_figures:
        figures.quantile_figure(q, out / "quantiles.png")
        outputs.append("quantiles.png")
    _manifest(out, "quantiles", None, {"n_videos": len(halflives)}, outputs)
    print("quantiles:", ", ".join(f"{int(p*100)}%={v:g}" for p, v in zip(core.QUANTILE_LEVELS, q)))
    return 0


def cmd_country_report(args) -> int:
    out = Path(args.out)
    videos = read_videos(args.videos)
    halflives = read_halflives(args.half_lives)
    stats = core.country_report(videos, halflives)
    write_csv(
        out / "country_report.csv",
        ["country", "n_videos", "mean_half_life", "bin"],
        [
            [
                s.country,
                s.n_videos,
                "" if s.mean_half_life is None else fmt_float(s.mean_half_life),
                "" if s.bin is None else s.bin,
            ]
            for s in stats
        ],
    )
    outputs = ["country_report.csv"]
    if not args.no_figures and stats:
        figures.country_figure(stats, out / "country_report.png")
        outputs.append("country_report.png")
    _manifest(out, "country-report", None, {"n_countries": len(stats)}, outputs)
    print(f"country-report: {len(stats)} countries")
    return 0


def cmd_cluster(args) -> int:
    out = Path(args.out)
    trajs = read_trajectories(args.trajectories, _resolution(args.resolution))
    trajs = [core.impute(t) if not t.is_complete else t for t in trajs]
    scores: dict[int, float] = {}
    if args.k == "auto":
        pick = cluster_mod.best_k(trajs, seed=args.seed)
        model = pick.models[pick.k]
        scores = pick.scores
        print(f"cluster: best k = {pick.k} (mean silhouette {scores[pick.k]:.3f})")
    else:
        model = cluster_mod.kshape(trajs, int(args.k), seed=args.seed)
        print(f"cluster: k = {model.k}, inertia {model.inertia:.3f}")
    write_csv(
        out / "assignments.csv",
        ["video_id", "cluster"],
        [[vid, c] for vid, c in model.assignments.items()],
    )
    write_csv(
        out / "centroids.csv",
        ["cluster", "slot", "value"],
        [
            [j, slot, fmt_float(val)]
            for j, row in enumerate(model.centroids)
            for slot, val in enumerate(row)
        ],
    )
    write_csv(
        out / "silhouette.csv",
        ["k", "mean_silhouette"],
        [[k, fmt_float(s)] for k, s in sorted(scores.items())],
    )
    outputs = ["assignments.csv", "centroids.csv", "silhouette.csv"]
    if not args.no_figures:
        figures.centroid_figure(model.centroids, out / "centroids.png")
        outputs.append("centroids.png")
        if scores:
            figures.silhouette_figure(scores, out / "silhouette.png")
            outputs.append("silhouette.png")
    ari = None
    if args.labels:
        import csv as _csv

        with open(args.labels, newline="") as fh:
            label_map = {r["video_id"]: r["family"] for r in _csv.DictReader(fh)}
        ids = list(model.assignments)
        ari = cluster_mod.adjusted_rand_index(
            [label_map[i] for i in ids], [model.assignments[i] for i in ids]
        )
        print(f"cluster: adjusted Rand index vs labels = {ari:.3f}")
    _manifest(
        out,
        "cluster",
        args.seed,
        {"k": model.k, "inertia": model.inertia, "ari": ari, "n_iter": model.n_iter},
        outputs,
    )
    return 0


def cmd_features(args) -> int:
    out = Path(args.out)
    videos = read_videos(args.videos)
    channels = read_channels(args.channels)
    halflives = read_halflives(args.half_lives)

    with_hl = [v for v in videos if v.video_id in halflives]
    binres = features_mod.bin_targets({v.video_id: halflives[v.video_id] for v in with_hl})
    retained = [v for v in with_hl if v.video_id in binres.labels]

    labels_arr = np.array([binres.labels[v.video_id] for v in retained], dtype=int)
    train_idx, _ = learn.split_indices(
        labels_arr, learn.SplitSpec(train_fraction=args.train_fraction, seed=args.seed)
    )
    train_videos = [retained[i] for i in train_idx]
    country_avgs = features_mod.country_avg_half_life(train_videos, halflives)

    titles = [v.title for v in retained]
    if args.annotator:
        annotator = features_mod.ExternalAnnotator(args.annotator)
    else:
        annotator = features_mod.RuleBasedAnnotator()
    annotations = dict(zip((v.video_id for v in retained), annotator.annotate_batch(titles)))

    built = features_mod.build_matrix(
        retained,
        channels,
        annotations,
        country_avgs,
        labels=binres.labels,
        collection_year=args.collection_year,
    )
    write_features_csv(out / "features.csv", built.vectors, built.schema.names)
    write_json(out / "feature_schema.json", built.schema.to_dict())
    outputs = ["features.csv", "feature_schema.json"]
    if built.issues:
        write_csv(
            out / "issues.csv",
            ["video_id", "reason"],
            [[i.video_id, i.reason] for i in built.issues],
        )
        outputs.append("issues.csv")
    _manifest(
        out,
        "features",
        args.seed,
        {
            "early_threshold": binres.early_threshold,
            "late_threshold": binres.late_threshold,
            "n_rows": len(built.vectors),
            "n_issues": len(built.issues),
            "train_fraction": args.train_fraction,
            "annotator": args.annotator or "rule-based",
        },
        outputs,
    )
    print(
        f"features: {len(built.vectors)} rows "
        f"(early <= {binres.early_threshold:g} h, late >= {binres.late_threshold:g} h, "
        f"{len(built.issues)} issues)"
    )
    return 0


def _load_dataset(args, schema) -> learn.Dataset:
    ids, X, y = read_features_csv(Path(args.features), schema.names)
    channel_ids = None
    half_lives = None
    if getattr(args, "videos", None):
        by_video = {v.video_id: v.channel_id for v in read_videos(args.videos)}
        channel_ids = [by_video.get(i, "") for i in ids]
    if getattr(args, "half_lives", None):
        hl = read_halflives(args.half_lives)
        half_lives = np.array([hl[i].value if i in hl else np.nan for i in ids])
    return learn.Dataset(
        X=X, y=y, video_ids=ids, schema=schema, channel_ids=channel_ids, half_lives=half_lives
    )


def cmd_train(args) -> int:
    out = Path(args.out)
    schema = features_mod.default_schema()
    ds = _load_dataset(args, schema)
    spec = learn.SplitSpec(train_fraction=args.train_fraction, seed=args.seed)
    train_ds, test_ds = learn.split(ds, spec)

    params_used: dict = {}
    if args.model == "baseline":
        if ds.channel_ids is None or ds.half_lives is None:
            raise ValueError("baseline training needs --videos and --half-lives")
        model = learn.baseline_fit(train_ds)
    elif args.model == "logistic":
        if args.grid_search:
            gs = learn.grid_search(
                train_ds, "logistic", learn.DEFAULT_LOGISTIC_GRID, seed=args.seed
            )
            params_used = gs.best_params
        else:
            params_used = {"l2_lambda": args.l2_lambda}
        model = learn.logistic_fit(train_ds, **params_used)
    else:
        if args.grid_search:
            gs = learn.grid_search(train_ds, "gbdt", learn.DEFAULT_GBDT_GRID, seed=args.seed)
            params_used = gs.best_params
        else:
            params_used = {
                "n_trees": args.n_trees,
                "max_depth": args.max_depth,
                "learning_rate": args.learning_rate,
                "l2_lambda": args.l2_lambda,
                "gamma": 0.0,
            }
        model = learn.gbdt_fit(train_ds, learn.GbdtParams(**params_used))

    learn.save_model(
        out / "model.json",
        model,
        schema,
        extra={
            "split": {
                "seed": args.seed,
                "train_fraction": args.train_fraction,
                "n_train": len(train_ds),
                "n_test": len(test_ds),
                "test_video_ids": test_ds.video_ids,
            },
            "model_name": args.model,
        },
    )
    _manifest(
        out,
        "train",
        args.seed,
        {"model": args.model, "params": params_used, "grid_search": bool(args.grid_search)},
        ["model.json"],
    )
    print(f"train: fitted {args.model} on {len(train_ds)} rows ({len(test_ds)} held out)")
    return 0


def _test_subset(ds: learn.Dataset, doc: dict) -> learn.Dataset:
    test_ids = set(doc.get("split", {}).get("test_video_ids", []))
    if not test_ids:
        raise ValueError("model file lacks split information; retrain first")
    idx = np.array([i for i, vid in enumerate(ds.video_ids) if vid in test_ids], dtype=int)
    if idx.size != len(test_ids):
        raise SchemaError("feature file does not contain the model's test rows")
    return ds.subset(idx)


def cmd_evaluate(args) -> int:
    out = Path(args.out)
    schema = features_mod.default_schema()
    model, doc = learn.load_model(args.model, schema)
    ds = _load_dataset(args, schema)
    test_ds = _test_subset(ds, doc)

    if isinstance(model, learn.BaselineModel):
        labels, scores = learn.baseline_predict(model, test_ds)
    else:
        scores = learn.predict_proba(model, test_ds.X)
        labels = (scores >= 0.5).astype(int)
    report = learn.evaluate(test_ds.y, labels, scores)
    name = doc.get("model_name", doc.get("kind", "model"))
    write_csv(
        out / "eval.csv",
        EVAL_HEADER,
        [[name, *[f"{v:.2f}" for v in report.as_row()]]],
    )
    outputs = ["eval.csv"]
    if not args.no_figures:
        figures.eval_figure({name: report}, out / "eval.png")
        outputs.append("eval.png")
    _manifest(out, "evaluate", None, {"model": name, "n_test": len(test_ds)}, outputs)
    print(
        f"evaluate[{name}]: accuracy {report.accuracy:.2f}, precision {report.precision:.2f}, "
        f"recall {report.recall:.2f}, f1 {report.f1:.2f}, auc {report.roc_auc:.2f}"
    )
    return 0


_POOL_MODEL: learn.GbdtModel | None = None


def _pool_init(model_doc: dict) -> None:
    global _POOL_MODEL
    _POOL_MODEL = learn.load_model_from_doc(model_doc)


def _pool_attr(task: tuple[str, list[float]]):
    vid, values = task
    attr = explain.tree_shap(_POOL_MODEL, np.asarray(values))
    return vid, attr.base_value, list(attr.phi)


def cmd_explain(args) -> int:
    out = Path(args.out)
    schema = features_mod.default_schema()
    model, doc = learn.load_model(args.model, schema)
    if not isinstance(model, learn.GbdtModel):
        raise ValueError("explain requires a gbdt model file")
    ds = _load_dataset(args, schema)
    rows = ds if args.rows == "all" else _test_subset(ds, doc)

    if args.jobs > 1:
        tasks = [(vid, list(x)) for vid, x in zip(rows.video_ids, rows.X)]
        with Pool(args.jobs, initializer=_pool_init, initargs=(doc,)) as pool:
            results = pool.map(_pool_attr, tasks, chunksize=32)
        attrs = [
            explain.Attribution(video_id=vid, base_value=base, phi=np.asarray(phi))
            for vid, base, phi in results
        ]
    else:
        attrs = [
            explain.tree_shap(model, learn_row)
            for learn_row in (
                features_mod.FeatureVector(video_id=vid, values=x, label=None)
                for vid, x in zip(rows.video_ids, rows.X)
            )
        ]
    summary = explain.shap_summary(attrs, schema.names)
    write_csv(
        out / "shap_summary.csv",
        ["feature", "mean_abs_phi", "rank"],
        [[r.feature, fmt_float(r.mean_abs_phi), r.rank] for r in summary],
    )
    write_csv(
        out / "attributions.csv",
        ["video_id", "base_value", *schema.names],
        [
            [a.video_id, fmt_float(a.base_value), *[fmt_float(p) for p in a.phi]]
            for a in attrs
        ],
    )
    outputs = ["shap_summary.csv", "attributions.csv"]
    if args.permutation:
        imp = explain.permutation_importance(model, rows, seed=args.seed)
        write_csv(
            out / "permutation_importance.csv",
            ["feature", "mean_drop", "std_drop"],
            [[r.feature, fmt_float(r.mean_drop), fmt_float(r.std_drop)] for r in imp],
        )
        outputs.append("permutation_importance.csv")
    if not args.no_figures:
        figures.shap_figure(summary, out / "shap_summary.png")
        outputs.append("shap_summary.png")
    _manifest(
        out,
        "explain",
        args.seed,
        {"rows": args.rows, "n_rows": len(rows), "permutation": bool(args.permutation)},
        outputs,
    )
    top = ", ".join(r.feature for r in summary[:3])
    print(f"explain: attributed {len(rows)} rows (top features: {top})")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="halflife",
        description="Half-life analysis pipeline for 24-hour view trajectories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_: str, seed: bool = True, figures_flag: bool = False):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--out", required=True, help="output directory")
        if seed:
            p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="run seed (default 42)")
        if figures_flag:
            p.add_argument(
                "--no-figures", action="store_true", help="skip PNG figure rendering"
            )
        return p

    p = add("synth", cmd_synth, "generate synthetic trajectories and/or metadata tables")
    p.add_argument("--n-per-family", type=int, help="trajectories per diffusion family")
    p.add_argument("--features-n", type=int, help="rows for the planted metadata table")
    p.add_argument("--resolution", choices=["hourly", "five-minute"], default="five-minute")
    p.add_argument("--noise", type=float, default=0.1, help="trajectory increment noise [0, 0.2]")
    p.add_argument(
        "--feature-noise",
        type=float,
        default=synth.DEFAULT_FEATURE_NOISE_HOURS,
        help="half-life noise in hours for --features-n",
    )

    p = add("collect", cmd_collect, "simulate the 5-minute snapshot collector")
    p.add_argument("--fixture", required=True, help="scripted-source JSONL fixture")
    p.add_argument("--duration", type=int, required=True, help="simulated minutes (multiple of 5)")
    p.add_argument("--failure-rate", type=float, default=0.0, help="per-fetch failure probability")

    p = add("preprocess", cmd_preprocess, "validate and impute trajectories", seed=False)
    p.add_argument("--trajectories", required=True, help="trajectory CSV")
    p.add_argument("--ruleset", choices=["A", "B"], required=True, help="A=hourly, B=five-minute")

    p = add("halflife", cmd_halflife, "compute per-video half-lives", seed=False, figures_flag=True)
    p.add_argument("--trajectories", required=True, help="imputed trajectory CSV")
    p.add_argument("--resolution", choices=["hourly", "five-minute"], required=True)

    p = add("quantiles", cmd_quantiles, "half-life quantile report", seed=False, figures_flag=True)
    p.add_argument("--half-lives", required=True, help="halflives.csv")

    p = add(
        "country-report",
        cmd_country_report,
        "per-country mean half-life with 5-bin categories",
        seed=False,
        figures_flag=True,
    )
    p.add_argument("--half-lives", required=True)
    p.add_argument("--videos", required=True)

    p = add("cluster", cmd_cluster, "shape-based clustering of trajectories", figures_flag=True)
    p.add_argument("--trajectories", required=True)
    p.add_argument("--resolution", choices=["hourly", "five-minute"], default="five-minute")
    p.add_argument("--k", default="auto", help="cluster count or 'auto' (silhouette selection)")
    p.add_argument("--labels", help="optional video_id,family CSV to score against")

    p = add("features", cmd_features, "build the 25-predictor design matrix")
    p.add_argument("--videos", required=True)
    p.add_argument("--channels", required=True)
    p.add_argument("--half-lives", required=True)
    p.add_argument("--annotator", help="external annotator command (stdin/stdout JSONL contract)")
    p.add_argument("--collection-year", type=int, help="defaults to the latest published year")
    p.add_argument("--train-fraction", type=float, default=0.8)

    p = add("train", cmd_train, "fit a classifier on the feature file")
    p.add_argument("--features", required=True, help="features.csv from the features stage")
    p.add_argument("--model", choices=["baseline", "logistic", "gbdt"], default="gbdt")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--grid-search", action="store_true", help="5-fold grid search on train")
    p.add_argument("--videos", help="videos.csv (needed for --model baseline)")
    p.add_argument("--half-lives", help="halflives.csv (needed for --model baseline)")
    p.add_argument("--n-trees", type=int, default=150)
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--l2-lambda", type=float, default=1.0)

    p = add("evaluate", cmd_evaluate, "score a model on its held-out rows", seed=False, figures_flag=True)
    p.add_argument("--model", required=True, help="model.json from train")
    p.add_argument("--features", required=True)
    p.add_argument("--videos", help="for baseline models")
    p.add_argument("--half-lives", help="for baseline models")

    p = add("explain", cmd_explain, "attribution report for a gbdt model", figures_flag=True)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--rows", choices=["test", "all"], default="test")
    p.add_argument("--permutation", action="store_true", help="also emit permutation importance")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for per-row attribution")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ValueError,
        SchemaError,
        OSError,
        KeyError,
        collector_mod.StoreWriteError,
        AssertionError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
