"""Title annotation, target binning, and design-matrix assembly."""

import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pytest

from halflife.core import ChannelRecord, VideoRecord
from halflife.features import (
    CATEGORIES,
    CATEGORY_SLICE,
    FEATURE_NAMES,
    AnnotationError,
    BinningError,
    ExternalAnnotator,
    FeatureVector,
    RuleBasedAnnotator,
    TitleAnnotation,
    annotate,
    bin_targets,
    build_matrix,
    channel_age,
    country_avg_half_life,
    default_schema,
)

FIXTURES = Path(__file__).parent / "fixtures"


def make_channel(channel_id="ch1", joined=2015, country="US", videos=500):
    return ChannelRecord(
        channel_id=channel_id,
        channel_view_count=10_000_000,
        channel_video_count=videos,
        channel_num_subscribers=250_000,
        joined_year=joined,
        country=country,
    )


def make_video(video_id="v1", channel_id="ch1", title="Economy update", country="US",
               published=None, length=300):
    return VideoRecord(
        video_id=video_id,
        channel_id=channel_id,
        title=title,
        length=length,
        is_age_restricted=False,
        thumbnail_url="https://example/t.jpg",
        published_datetime=published or datetime(2024, 1, 1, 12, tzinfo=timezone.utc),
        num_comments=10,
        country=country,
    )


# ---------------------------------------------------------------------------
# annotation
# ---------------------------------------------------------------------------


def test_annotate_question_economy():
    a = annotate("Will the economy recover?")
    assert a.is_question == 1
    assert a.category == "Economy"
    assert a.title_num_tokens == 4


def test_annotate_breaking_conflict_with_emoji():
    a = annotate("BREAKING \U0001F6A8 war escalates now")
    assert a.has_emojis == 1
    assert a.urgency == 3
    assert a.category == "Conflict"


def test_annotate_empty_title_errors():
    with pytest.raises(AnnotationError):
        annotate("")
    with pytest.raises(AnnotationError):
        annotate("   ")


def test_annotate_deterministic():
    t = "Scientists launch new satellite to study storms"
    assert annotate(t) == annotate(t)


def test_annotation_field_ranges_enforced():
    with pytest.raises(ValueError):
        TitleAnnotation(
            sentiment=2, subjectivity=0, has_named_entities=0, urgency=1,
            is_emotional=0, has_emojis=0, is_question=0, verb_tense=2,
            category="Other", title_num_tokens=3,
        )
    with pytest.raises(ValueError):
        TitleAnnotation(
            sentiment=0, subjectivity=0, has_named_entities=0, urgency=1,
            is_emotional=0, has_emojis=0, is_question=0, verb_tense=2,
            category="Weather", title_num_tokens=3,
        )


def test_fallback_agreement_with_hand_labeled_fixture():
    ann = RuleBasedAnnotator()
    fields = [
        "sentiment", "subjectivity", "has_named_entities", "urgency",
        "is_emotional", "has_emojis", "is_question", "verb_tense",
        "category", "title_num_tokens",
    ]
    match = total = 0
    with open(FIXTURES / "titles_labeled.jsonl") as fh:
        rows = [json.loads(line) for line in fh if line.strip()]
    assert len(rows) == 50
    for rec in rows:
        got = ann.annotate(rec["title"]).to_dict()
        for f in fields:
            total += 1
            match += got[f] == rec[f]
    assert match / total >= 0.60


def test_external_annotator_contract():
    ann = ExternalAnnotator([sys.executable, str(FIXTURES / "stub_annotator.py")])
    out = ann.annotate_batch(["Vote today", "Cup final tonight?"])
    assert [a.category for a in out] == ["Politics", "Sports"]
    assert out[1].is_question == 1
    assert out[0].title_num_tokens == 2


def test_external_annotator_bad_output_errors():
    ann = ExternalAnnotator([sys.executable, "-c", "print('not json')"])
    with pytest.raises(AnnotationError):
        ann.annotate_batch(["a title"])


def test_external_annotator_line_count_mismatch_errors():
    ann = ExternalAnnotator([sys.executable, "-c", "pass"])
    with pytest.raises(AnnotationError, match="0 lines for 1 titles"):
        ann.annotate_batch(["a title"])


# ---------------------------------------------------------------------------
# channel age and country averages
# ---------------------------------------------------------------------------


def test_channel_age_subtraction_and_boundary():
    assert channel_age(make_channel(joined=2015), 2024) == 9
    assert channel_age(make_channel(joined=2024), 2024) == 0
    with pytest.raises(ValueError):
        channel_age(make_channel(joined=2025), 2024)


def test_country_avg_mean_and_fallback():
    videos = [make_video("a", country="US"), make_video("b", country="US")]
    avgs = country_avg_half_life(videos, {"a": 4.0, "b": 6.0})
    assert avgs.get("US") == pytest.approx(5.0)
    assert avgs.get("ZZ") == pytest.approx(5.0)  # global mean fallback


def test_country_avg_global_mean_spans_countries():
    videos = [make_video("a", country="US"), make_video("b", country="DE")]
    avgs = country_avg_half_life(videos, {"a": 4.0, "b": 8.0})
    assert avgs.get("XX") == pytest.approx(6.0)


def test_country_avg_empty_errors():
    with pytest.raises(ValueError):
        country_avg_half_life([], {})


# ---------------------------------------------------------------------------
# target binning
# ---------------------------------------------------------------------------


def test_bin_targets_30_40_30_rule():
    halflives = {f"v{i}": float(i) for i in range(1, 11)}
    res = bin_targets(halflives)
    early = {v for v, lab in res.labels.items() if lab == 0}
    late = {v for v, lab in res.labels.items() if lab == 1}
    assert early == {"v1", "v2", "v3"}
    assert late == {"v8", "v9", "v10"}
    assert res.early_threshold == 3
    assert res.late_threshold == 8


def test_bin_targets_all_equal_errors():
    with pytest.raises(BinningError):
        bin_targets({f"v{i}": 5.0 for i in range(12)})


def test_bin_targets_minimum_size():
    with pytest.raises(BinningError):
        bin_targets({f"v{i}": float(i) for i in range(9)})


def test_bin_targets_balanced_on_distinct_values():
    rng = np.random.default_rng(0)
    vals = rng.permutation(np.linspace(1, 20, 57))
    res = bin_targets({f"v{i}": float(v) for i, v in enumerate(vals)})
    n0 = sum(1 for lab in res.labels.values() if lab == 0)
    n1 = sum(1 for lab in res.labels.values() if lab == 1)
    assert abs(n0 - n1) <= 1


# ---------------------------------------------------------------------------
# matrix assembly
# ---------------------------------------------------------------------------


def simple_build(title="Economy update", published=None):
    video = make_video(title=title, published=published)
    channels = [make_channel()]
    annotations = {video.video_id: annotate(video.title)}
    avgs = country_avg_half_life([video], {video.video_id: 5.0})
    return build_matrix([video], channels, annotations, avgs, labels={"v1": 1},
                        collection_year=2024)


def test_schema_has_exactly_25_entries():
    schema = default_schema()
    assert len(schema.names) == 25
    assert schema.names == FEATURE_NAMES


def test_build_matrix_day_and_hour_utc():
    published = datetime(2024, 1, 1, 9, 0, tzinfo=timezone.utc)  # a Monday
    res = simple_build(published=published)
    vec = res.vectors[0]
    names = list(FEATURE_NAMES)
    assert vec.values[names.index("day_of_week")] == 0
    assert vec.values[names.index("hour_of_publication")] == 9


def test_build_matrix_one_hot_politics():
    res = simple_build(title="President wins election vote")
    vec = res.vectors[0]
    names = list(FEATURE_NAMES)
    assert vec.values[names.index("title_category_Politics")] == 1
    block = vec.values[CATEGORY_SLICE]
    assert block.sum() == 1


def test_build_matrix_join_failure_reported_not_raised():
    video = make_video(channel_id="missing")
    avgs = country_avg_half_life([video], {video.video_id: 5.0})
    res = build_matrix([video], [make_channel()], {video.video_id: annotate("x y")},
                       avgs, collection_year=2024)
    assert res.vectors == []
    assert len(res.issues) == 1
    assert "missing" in res.issues[0].reason


def test_build_matrix_missing_annotation_reported():
    video = make_video()
    avgs = country_avg_half_life([video], {video.video_id: 5.0})
    res = build_matrix([video], [make_channel()], {}, avgs, collection_year=2024)
    assert res.vectors == []
    assert res.issues[0].reason == "no title annotation"


def test_build_matrix_no_missing_values_and_single_category():
    rng = np.random.default_rng(1)
    videos, channels, annotations, halflives = [], [], {}, {}
    for i in range(30):
        ch = make_channel(channel_id=f"ch{i}", joined=int(rng.integers(2006, 2024)))
        channels.append(ch)
        v = make_video(
            video_id=f"v{i}",
            channel_id=ch.channel_id,
            title=f"Economy market report {i}" if i % 2 else f"Match final {i}?",
            published=datetime(2024, 3, 1 + i % 28, int(rng.integers(0, 24)), tzinfo=timezone.utc),
        )
        videos.append(v)
        annotations[v.video_id] = annotate(v.title)
        halflives[v.video_id] = float(rng.uniform(1, 20))
    avgs = country_avg_half_life(videos, halflives)
    res = build_matrix(videos, channels, annotations, avgs, collection_year=2024)
    assert len(res.vectors) == 30
    for vec in res.vectors:
        assert np.all(np.isfinite(vec.values))
        assert vec.values[CATEGORY_SLICE].sum() == 1


def test_feature_vector_validates_category_block():
    vals = np.zeros(25)
    with pytest.raises(ValueError, match="one-hot"):
        FeatureVector(video_id="v", values=vals)
    vals[16] = 1
    FeatureVector(video_id="v", values=vals)  # valid


def test_schema_hash_stable_and_sensitive():
    s1, s2 = default_schema(), default_schema()
    assert s1.hash() == s2.hash()
    assert len(s1.hash()) == 64
