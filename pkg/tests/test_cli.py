"""End-to-end subcommand tests over the file-based pipeline."""

import csv
import json
from pathlib import Path

import pytest

from halflife.cli import EVAL_HEADER, main
from halflife.collector import ScriptedVideo, write_fixture
from halflife.core import Resolution, ViewTrajectory
from halflife.io import write_trajectories

SUBCOMMANDS = [
    "synth",
    "collect",
    "preprocess",
    "halflife",
    "quantiles",
    "country-report",
    "cluster",
    "features",
    "train",
    "evaluate",
    "explain",
]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def tree_bytes(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One synth -> features -> train(gbdt) run shared by downstream tests."""
    root = tmp_path_factory.mktemp("pipeline")
    assert main(["synth", "--features-n", "400", "--seed", "7", "--out", str(root / "meta")]) == 0
    assert (
        main(
            [
                "features",
                "--videos", str(root / "meta" / "videos.csv"),
                "--channels", str(root / "meta" / "channels.csv"),
                "--half-lives", str(root / "meta" / "halflives.csv"),
                "--seed", "7",
                "--out", str(root / "feats"),
            ]
        )
        == 0
    )
    assert (
        main(
            [
                "train",
                "--features", str(root / "feats" / "features.csv"),
                "--model", "gbdt",
                "--n-trees", "30",
                "--seed", "7",
                "--out", str(root / "model"),
            ]
        )
        == 0
    )
    return root


def test_every_subcommand_has_help(capsys):
    for sub in SUBCOMMANDS:
        with pytest.raises(SystemExit) as exc:
            main([sub, "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "--out" in out


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--does-not-exist", "1", "--out", "x"])
    assert exc.value.code == 2


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_preprocess_lists_rejections(tmp_path):
    views = [100 * (i + 1) for i in range(25)]
    good = ViewTrajectory.from_values("good", Resolution.HOURLY, views)
    bad_views = list(views)
    bad_views[3] = None
    bad_views[7] = None
    bad = ViewTrajectory.from_values("gappy", Resolution.HOURLY, bad_views)
    write_trajectories(tmp_path / "t.csv", [good, bad])
    rc = main(
        ["preprocess", "--trajectories", str(tmp_path / "t.csv"), "--ruleset", "A",
         "--out", str(tmp_path / "out")]
    )
    assert rc == 0
    rejected = read_rows(tmp_path / "out" / "rejected.csv")
    assert [r["video_id"] for r in rejected] == ["gappy"]
    assert "hours 1..12" in rejected[0]["reason"]
    accepted = read_rows(tmp_path / "out" / "accepted.csv")
    assert {r["video_id"] for r in accepted} == {"good"}


def test_preprocess_malformed_reported_distinctly(tmp_path):
    views = [100 * (i + 1) for i in range(25)]
    views[10] = 5  # non-monotone
    bad = ViewTrajectory.from_values("broken", Resolution.HOURLY, views)
    write_trajectories(tmp_path / "t.csv", [bad])
    rc = main(
        ["preprocess", "--trajectories", str(tmp_path / "t.csv"), "--ruleset", "A",
         "--out", str(tmp_path / "out")]
    )
    assert rc == 0
    rejected = read_rows(tmp_path / "out" / "rejected.csv")
    assert rejected[0]["reason"].startswith("malformed:")


def test_synth_cluster_auto_finds_k4(tmp_path, capsys):
    assert main(["synth", "--n-per-family", "8", "--seed", "7", "--out", str(tmp_path / "c")]) == 0
    rc = main(
        ["cluster", "--trajectories", str(tmp_path / "c" / "trajectories.csv"),
         "--k", "auto", "--seed", "0", "--out", str(tmp_path / "k"),
         "--labels", str(tmp_path / "c" / "families.csv")]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "best k = 4" in out
    manifest = json.loads((tmp_path / "k" / "manifest.json").read_text())
    assert manifest["params"]["k"] == 4
    assert manifest["params"]["ari"] >= 0.9
    assert (tmp_path / "k" / "assignments.csv").exists()
    assert (tmp_path / "k" / "centroids.csv").exists()
    assert (tmp_path / "k" / "centroids.png").exists()


def test_schema_mismatch_diagnostic(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text("video_id,views\nv1,10\n")
    rc = main(
        ["quantiles", "--half-lives", str(tmp_path / "bad.csv"), "--out", str(tmp_path / "q")]
    )
    assert rc == 1
    err = capsys.readouterr().err
    assert "half_life_hours" in err  # names the missing column


def test_features_csv_schema(pipeline):
    rows = read_rows(pipeline / "feats" / "features.csv")
    from halflife.features import FEATURE_NAMES

    assert list(rows[0].keys()) == ["video_id", *FEATURE_NAMES, "label"]
    assert all(r["label"] in {"0", "1"} for r in rows)
    schema = json.loads((pipeline / "feats" / "feature_schema.json").read_text())
    assert [e["name"] for e in schema] == list(FEATURE_NAMES)


def test_evaluate_emits_table_columns(pipeline, tmp_path):
    out = tmp_path / "eval"
    rc = main(
        ["evaluate", "--model", str(pipeline / "model" / "model.json"),
         "--features", str(pipeline / "feats" / "features.csv"), "--out", str(out)]
    )
    assert rc == 0
    rows = read_rows(out / "eval.csv")
    assert list(rows[0].keys()) == EVAL_HEADER
    assert rows[0]["model"] == "gbdt"
    assert float(rows[0]["accuracy"]) == float(rows[0]["recall"])  # weighted identity
    assert (out / "eval.png").exists()


def test_evaluate_rejects_foreign_feature_file(pipeline, tmp_path):
    other = tmp_path / "meta2"
    assert main(["synth", "--features-n", "400", "--seed", "8", "--out", str(other)]) == 0
    assert (
        main(
            ["features", "--videos", str(other / "videos.csv"),
             "--channels", str(other / "channels.csv"),
             "--half-lives", str(other / "halflives.csv"),
             "--seed", "8", "--out", str(tmp_path / "feats2")]
        )
        == 0
    )
    rc = main(
        ["evaluate", "--model", str(pipeline / "model" / "model.json"),
         "--features", str(tmp_path / "feats2" / "features.csv"),
         "--out", str(tmp_path / "eval2")]
    )
    assert rc == 1  # test rows of the model are absent from this file


def test_train_baseline_needs_metadata(pipeline, tmp_path, capsys):
    rc = main(
        ["train", "--features", str(pipeline / "feats" / "features.csv"),
         "--model", "baseline", "--seed", "7", "--out", str(tmp_path / "m")]
    )
    assert rc == 1
    assert "baseline" in capsys.readouterr().err


def test_train_and_evaluate_baseline(pipeline, tmp_path):
    out = tmp_path / "mb"
    rc = main(
        ["train", "--features", str(pipeline / "feats" / "features.csv"),
         "--model", "baseline", "--seed", "7",
         "--videos", str(pipeline / "meta" / "videos.csv"),
         "--half-lives", str(pipeline / "meta" / "halflives.csv"),
         "--out", str(out)]
    )
    assert rc == 0
    rc = main(
        ["evaluate", "--model", str(out / "model.json"),
         "--features", str(pipeline / "feats" / "features.csv"),
         "--videos", str(pipeline / "meta" / "videos.csv"),
         "--half-lives", str(pipeline / "meta" / "halflives.csv"),
         "--out", str(tmp_path / "evb")]
    )
    assert rc == 0
    rows = read_rows(tmp_path / "evb" / "eval.csv")
    assert rows[0]["model"] == "baseline"


def test_explain_writes_summary_and_attributions(pipeline, tmp_path):
    out = tmp_path / "expl"
    rc = main(
        ["explain", "--model", str(pipeline / "model" / "model.json"),
         "--features", str(pipeline / "feats" / "features.csv"),
         "--seed", "7", "--out", str(out)]
    )
    assert rc == 0
    summary = read_rows(out / "shap_summary.csv")
    assert list(summary[0].keys()) == ["feature", "mean_abs_phi", "rank"]
    assert len(summary) == 25  # full ranking emitted
    attrs = read_rows(out / "attributions.csv")
    assert "base_value" in attrs[0]
    assert (out / "shap_summary.png").exists()


def test_explain_requires_gbdt(pipeline, tmp_path):
    rc = main(
        ["train", "--features", str(pipeline / "feats" / "features.csv"),
         "--model", "logistic", "--seed", "7", "--out", str(tmp_path / "ml")]
    )
    assert rc == 0
    rc = main(
        ["explain", "--model", str(tmp_path / "ml" / "model.json"),
         "--features", str(pipeline / "feats" / "features.csv"),
         "--out", str(tmp_path / "e")]
    )
    assert rc == 1


def test_no_figures_flag_suppresses_pngs(pipeline, tmp_path):
    out = tmp_path / "q"
    rc = main(
        ["quantiles", "--half-lives", str(pipeline / "meta" / "halflives.csv"),
         "--out", str(out), "--no-figures"]
    )
    assert rc == 0
    assert (out / "quantiles.csv").exists()
    assert not (out / "quantiles.png").exists()


def test_collect_chain_and_reruns_byte_identical(tmp_path):
    fixture = tmp_path / "fixture.jsonl"
    rows = [
        ScriptedVideo(channel_id=f"ch{i % 2}", video_id=f"vid{i}", publish_minute=5 * i,
                      family=["sigmoid", "linear"][i % 2], total_views=30_000 + i, seed=50 + i)
        for i in range(4)
    ]
    write_fixture(fixture, rows)
    outs = []
    for name in ("s1", "s2"):
        out = tmp_path / name
        rc = main(
            ["collect", "--fixture", str(fixture), "--duration", "1500",
             "--seed", "5", "--failure-rate", "0.02", "--out", str(out)]
        )
        assert rc == 0
        outs.append(out)
    assert tree_bytes(outs[0]) == tree_bytes(outs[1])

    rc = main(
        ["preprocess", "--trajectories", str(outs[0] / "trajectories.csv"),
         "--ruleset", "B", "--out", str(tmp_path / "prep")]
    )
    assert rc == 0
    rc = main(
        ["halflife", "--trajectories", str(tmp_path / "prep" / "accepted.csv"),
         "--resolution", "five-minute", "--out", str(tmp_path / "hl"), "--no-figures"]
    )
    assert rc == 0
    assert len(read_rows(tmp_path / "hl" / "halflives.csv")) >= 3


def test_same_seed_rerun_byte_identical(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["synth", "--features-n", "300", "--seed", "3", "--out", str(out)]) == 0
        outs.append(out)
    assert tree_bytes(outs[0]) == tree_bytes(outs[1])


def test_country_report_cli(pipeline, tmp_path):
    out = tmp_path / "cr"
    rc = main(
        ["country-report", "--half-lives", str(pipeline / "meta" / "halflives.csv"),
         "--videos", str(pipeline / "meta" / "videos.csv"), "--out", str(out)]
    )
    assert rc == 0
    rows = read_rows(out / "country_report.csv")
    assert list(rows[0].keys()) == ["country", "n_videos", "mean_half_life", "bin"]
    assert all(1 <= int(r["bin"]) <= 5 for r in rows if r["bin"])


def test_explain_jobs_flag_matches_serial(pipeline, tmp_path):
    serial = tmp_path / "serial"
    parallel = tmp_path / "parallel"
    for out, jobs in ((serial, "1"), (parallel, "2")):
        rc = main(
            ["explain", "--model", str(pipeline / "model" / "model.json"),
             "--features", str(pipeline / "feats" / "features.csv"),
             "--seed", "7", "--jobs", jobs, "--no-figures", "--out", str(out)]
        )
        assert rc == 0
    assert (serial / "attributions.csv").read_bytes() == (parallel / "attributions.csv").read_bytes()
    assert (serial / "shap_summary.csv").read_bytes() == (parallel / "shap_summary.csv").read_bytes()
