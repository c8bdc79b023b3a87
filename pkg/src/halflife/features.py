"""Design-matrix construction: the 25 predictors, targets, and title annotation.

Title annotation is pluggable: an external command may be configured that
reads one title per line on stdin and emits one flat JSON annotation per
line; when none is configured a deterministic rule-based annotator is used.
"""

from __future__ import annotations

import hashlib
import json
import re
import shlex
import subprocess
from dataclasses import dataclass
from datetime import timezone
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import ChannelRecord, HalfLife, VideoRecord

CATEGORIES = (
    "Conflict",
    "Economy",
    "Health_and_Safety",
    "Other",
    "Politics",
    "Science/Tech",
    "Society",
    "Sports",
)

FEATURE_NAMES = (
    "channel_view_count",
    "channel_video_count",
    "channel_num_subscribers",
    "length",
    "sentiment",
    "subjectivity",
    "has_named_entities",
    "urgency",
    "is_emotional",
    "has_emojis",
    "is_question",
    "verb_tense",
    "day_of_week",
    "hour_of_publication",
    "title_num_tokens",
    "channel_age",
    "title_category_Conflict",
    "title_category_Economy",
    "title_category_Health_and_Safety",
    "title_category_Other",
    "title_category_Politics",
    "title_category_Science/Tech",
    "title_category_Society",
    "title_category_Sports",
    "country_avg_half_life",
)

CATEGORY_SLICE = slice(16, 24)  # positions of the one-hot category block

_FEATURE_KINDS = {
    "sentiment": "ordinal",
    "urgency": "ordinal",
    "verb_tense": "ordinal",
    "subjectivity": "binary",
    "has_named_entities": "binary",
    "is_emotional": "binary",
    "has_emojis": "binary",
    "is_question": "binary",
}


class AnnotationError(ValueError):
    """Title annotation failed (empty title or broken external annotator)."""


class BinningError(ValueError):
    """Percentile binning cannot separate early from late half-lives."""


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str  # numeric | binary | ordinal
    note: str = ""


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered contract for the 25 predictor columns."""

    entries: tuple[FeatureSpec, ...]

    def __post_init__(self) -> None:
        if len(self.entries) != 25:
            raise ValueError(f"schema must have exactly 25 entries, got {len(self.entries)}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.entries)

    def hash(self) -> str:
        return hashlib.sha256("\n".join(self.names).encode()).hexdigest()

    def to_dict(self) -> list[dict]:
        return [{"name": e.name, "kind": e.kind, "note": e.note} for e in self.entries]


def default_schema() -> FeatureSchema:
    notes = {
        "sentiment": "-1 negative, 0 neutral, 1 positive",
        "urgency": "1 low, 2 medium, 3 high",
        "verb_tense": "1 past, 2 present, 3 future",
        "day_of_week": "0=Monday..6=Sunday, UTC",
        "hour_of_publication": "0..23, UTC",
        "channel_age": "collection year minus joined year",
        "country_avg_half_life": "training-split mean half-life of the video's country",
    }
    entries = []
    for name in FEATURE_NAMES:
        kind = _FEATURE_KINDS.get(name, "binary" if name.startswith("title_category_") else "numeric")
        entries.append(FeatureSpec(name=name, kind=kind, note=notes.get(name, "")))
    return FeatureSchema(entries=tuple(entries))


@dataclass(frozen=True)
class TitleAnnotation:
    """Linguistic codes extracted from one title."""

    sentiment: int
    subjectivity: int
    has_named_entities: int
    urgency: int
    is_emotional: int
    has_emojis: int
    is_question: int
    verb_tense: int
    category: str
    title_num_tokens: int

    def __post_init__(self) -> None:
        checks = {
            "sentiment": (-1, 0, 1),
            "subjectivity": (0, 1),
            "has_named_entities": (0, 1),
            "urgency": (1, 2, 3),
            "is_emotional": (0, 1),
            "has_emojis": (0, 1),
            "is_question": (0, 1),
            "verb_tense": (1, 2, 3),
        }
        for name, allowed in checks.items():
            if getattr(self, name) not in allowed:
                raise ValueError(f"{name}={getattr(self, name)} not in {allowed}")
        if self.category not in CATEGORIES:
            raise ValueError(f"category {self.category!r} not in {CATEGORIES}")
        if self.title_num_tokens < 0:
            raise ValueError("title_num_tokens must be non-negative")

    def to_dict(self) -> dict:
        return {
            "sentiment": self.sentiment,
            "subjectivity": self.subjectivity,
            "has_named_entities": self.has_named_entities,
            "urgency": self.urgency,
            "is_emotional": self.is_emotional,
            "has_emojis": self.has_emojis,
            "is_question": self.is_question,
            "verb_tense": self.verb_tense,
            "category": self.category,
            "title_num_tokens": self.title_num_tokens,
        }


_EMOJI_RANGES = (
    (0x1F300, 0x1FAFF),
    (0x2600, 0x27BF),
    (0x1F1E6, 0x1F1FF),
    (0x2B00, 0x2BFF),
)

_POSITIVE = {
    "win", "wins", "won", "victory", "success", "celebrates", "celebrate", "record",
    "hope", "recover", "recovery", "boost", "peace", "breakthrough", "triumph",
    "cheers", "thrives", "soars", "good", "great", "historic", "deal",
}
_NEGATIVE = {
    "war", "crisis", "death", "dead", "dies", "died", "killed", "kill", "attack",
    "crash", "fear", "threat", "collapse", "disaster", "scandal", "fraud",
    "outbreak", "riot", "violence", "bomb", "shooting", "recession", "layoffs",
    "flood", "earthquake", "worst", "fails", "fail", "loss", "strikes", "escalates",
    "emergency", "warning", "danger",
}
_SUBJECTIVE = {
    "think", "believe", "opinion", "should", "must", "best", "worst", "amazing",
    "shocking", "stunning", "unbelievable", "incredible", "outrageous",
    "you", "we", "our", "why",
}
_EMOTIONAL = {
    "shocking", "heartbreaking", "outrage", "outrageous", "furious", "tragic",
    "tragedy", "devastating", "terrifying", "amazing", "stunning", "inspiring",
    "horrific", "emotional", "tears", "fury", "grief", "panic", "joy",
}
_URGENT_HIGH = {"breaking", "urgent", "emergency", "live", "now"}
_URGENT_MEDIUM = {"alert", "warning", "today", "tonight", "soon", "deadline", "crisis", "latest"}
_FUTURE_MARKERS = {"will", "tomorrow", "upcoming", "ahead", "next"}
_FUTURE_PHRASES = ("set to", "expected to", "to come", "on course")
_PAST_IRREGULAR = {
    "was", "were", "had", "did", "died", "won", "lost", "fell", "rose", "struck",
    "broke", "met", "said", "told", "found", "left", "began", "got", "came", "went",
    "saw", "made", "took", "held", "hit", "sank",
}

_CATEGORY_LEXICON = {
    "Conflict": {
        "war", "attack", "military", "troops", "missile", "invasion", "battle",
        "conflict", "bomb", "escalates", "ceasefire", "combat", "airstrike",
        "frontline", "army", "clashes",
    },
    "Economy": {
        "economy", "economic", "market", "markets", "stocks", "inflation",
        "recession", "trade", "jobs", "bank", "banks", "finance", "budget",
        "tariff", "tariffs", "gdp", "prices", "currency", "layoffs",
    },
    "Health_and_Safety": {
        "health", "vaccine", "hospital", "virus", "outbreak", "disease", "safety",
        "accident", "crash", "fire", "flood", "earthquake", "storm", "rescue",
        "pandemic", "injury", "evacuation",
    },
    "Politics": {
        "election", "president", "parliament", "vote", "senate", "congress",
        "minister", "policy", "campaign", "government", "impeachment", "ballot",
        "candidate", "coalition", "chancellor",
    },
    "Science/Tech": {
        "science", "technology", "tech", "ai", "space", "launch", "rocket",
        "research", "study", "robot", "internet", "cyber", "quantum", "satellite",
        "chip", "software",
    },
    "Society": {
        "community", "protest", "protests", "culture", "education", "school",
        "housing", "religion", "immigration", "rights", "strike", "festival",
        "police", "court", "crime", "verdict",
    },
    "Sports": {
        "match", "championship", "league", "cup", "final", "olympics",
        "tournament", "goal", "player", "coach", "team", "season", "derby",
        "transfer", "champion",
    },
}


def _words(title: str) -> list[str]:
    return re.findall(r"[a-z']+", title.lower())


class RuleBasedAnnotator:
    """Deterministic keyword/character-rule annotator.

    Rules: a question mark anywhere sets is_question; emoji codepoint ranges
    set has_emojis; category comes from per-category keyword lexicons (most
    hits wins, ties and no-hits fall to Other in canonical category order);
    tokens are whitespace-delimited. Sentiment, subjectivity, urgency, tense,
    and emotionality use fixed keyword sets defined in this module.
    """

    def annotate(self, title: str) -> TitleAnnotation:
        if not title or not title.strip():
            raise AnnotationError("cannot annotate an empty title")
        tokens = title.split()
        words = _words(title)
        word_set = set(words)
        lower = title.lower()

        pos = len(word_set & _POSITIVE)
        neg = len(word_set & _NEGATIVE)
        sentiment = 1 if pos > neg else -1 if neg > pos else 0

        subjectivity = int(bool(word_set & _SUBJECTIVE) or "!" in title)

        named = 0
        for i, tok in enumerate(tokens):
            bare = tok.strip("\"'“”‘’.,:;!?()[]")
            if i > 0 and len(bare) >= 2 and bare[0].isupper() and bare[1:].islower():
                named = 1
                break

        if word_set & _URGENT_HIGH:
            urgency = 3
        elif word_set & _URGENT_MEDIUM:
            urgency = 2
        else:
            urgency = 1

        emotional = int(bool(word_set & _EMOTIONAL) or "!" in title)

        emoji = int(any(lo <= ord(ch) <= hi for ch in title for lo, hi in _EMOJI_RANGES))

        question = int("?" in title)

        if word_set & _FUTURE_MARKERS or any(p in lower for p in _FUTURE_PHRASES):
            tense = 3
        elif word_set & _PAST_IRREGULAR or any(
            w.endswith("ed") and len(w) > 3 for w in words
        ):
            tense = 1
        else:
            tense = 2

        scores = {c: len(word_set & lex) for c, lex in _CATEGORY_LEXICON.items()}
        best = max(scores.values(), default=0)
        category = "Other"
        if best > 0:
            for c in CATEGORIES:
                if scores.get(c, 0) == best:
                    category = c
                    break

        return TitleAnnotation(
            sentiment=sentiment,
            subjectivity=subjectivity,
            has_named_entities=named,
            urgency=urgency,
            is_emotional=emotional,
            has_emojis=emoji,
            is_question=question,
            verb_tense=tense,
            category=category,
            title_num_tokens=len(tokens),
        )

    def annotate_batch(self, titles: Sequence[str]) -> list[TitleAnnotation]:
        return [self.annotate(t) for t in titles]


class ExternalAnnotator:
    """Adapter for a configured annotator executable.

    The command receives one title per line on stdin (embedded newlines are
    flattened to spaces) and must emit exactly one flat JSON object per line
    with the TitleAnnotation fields.
    """

    def __init__(self, command: str | Sequence[str]):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)

    def annotate_batch(self, titles: Sequence[str]) -> list[TitleAnnotation]:
        for t in titles:
            if not t or not t.strip():
                raise AnnotationError("cannot annotate an empty title")
        payload = "\n".join(t.replace("\n", " ").replace("\r", " ") for t in titles) + "\n"
        proc = subprocess.run(
            self.command, input=payload, capture_output=True, text=True
        )
        if proc.returncode != 0:
            raise AnnotationError(
                f"annotator command failed (exit {proc.returncode}): {proc.stderr.strip()}"
            )
        lines = [ln for ln in proc.stdout.splitlines() if ln.strip()]
        if len(lines) != len(titles):
            raise AnnotationError(
                f"annotator returned {len(lines)} lines for {len(titles)} titles"
            )
        out = []
        for ln in lines:
            try:
                out.append(TitleAnnotation(**json.loads(ln)))
            except (json.JSONDecodeError, TypeError, ValueError) as exc:
                raise AnnotationError(f"bad annotation line {ln!r}: {exc}") from exc
        return out


_DEFAULT_ANNOTATOR = RuleBasedAnnotator()


def annotate(title: str) -> TitleAnnotation:
    """Annotate one title with the default rule-based annotator."""
    return _DEFAULT_ANNOTATOR.annotate(title)


def channel_age(channel: ChannelRecord, collection_year: int) -> int:
    """Channel age in whole years at collection time."""
    if channel.joined_year > collection_year:
        raise ValueError(
            f"{channel.channel_id}: joined_year {channel.joined_year} is after "
            f"collection year {collection_year}"
        )
    return collection_year - channel.joined_year


@dataclass(frozen=True)
class CountryAverages:
    """Per-country mean half-life fitted on the training split only."""

    means: Mapping[str, float]
    global_mean: float

    def get(self, country: str) -> float:
        return self.means.get(country, self.global_mean)


def country_avg_half_life(
    train_videos: Iterable[VideoRecord], halflives: Mapping[str, HalfLife | float]
) -> CountryAverages:
    """Mean half-life per country over the given (training) videos."""
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    total, n = 0.0, 0
    for v in train_videos:
        if v.video_id not in halflives:
            continue
        h = halflives[v.video_id]
        hours = h.value if isinstance(h, HalfLife) else float(h)
        sums[v.country] = sums.get(v.country, 0.0) + hours
        counts[v.country] = counts.get(v.country, 0) + 1
        total += hours
        n += 1
    if n == 0:
        raise ValueError("no training half-lives to average")
    return CountryAverages(
        means={c: sums[c] / counts[c] for c in sums}, global_mean=total / n
    )


@dataclass(frozen=True)
class BinResult:
    """Early/late labels with the middle band dropped."""

    labels: dict[str, int]  # video_id -> 0 (early) or 1 (late)
    early_threshold: float
    late_threshold: float


def bin_targets(halflives: Mapping[str, HalfLife | float]) -> BinResult:
    """Label the bottom 30% of half-lives 0 (early) and the top 30% 1 (late).

    Thresholds come from the full labeled pool: with k = floor(0.3 n), the
    k-th smallest value bounds the early class and the k-th largest bounds
    the late class; everything strictly between is dropped.
    """
    items = {
        vid: (h.value if isinstance(h, HalfLife) else float(h))
        for vid, h in halflives.items()
    }
    n = len(items)
    if n < 10:
        raise BinningError(f"need at least 10 half-lives to bin, got {n}")
    ordered = sorted(items.values())
    k = int(0.3 * n)
    early_thr = ordered[k - 1]
    late_thr = ordered[n - k]
    if early_thr >= late_thr:
        raise BinningError(
            f"no class separation: 30th percentile {early_thr} >= 70th percentile {late_thr}"
        )
    labels = {}
    for vid, hours in items.items():
        if hours <= early_thr:
            labels[vid] = 0
        elif hours >= late_thr:
            labels[vid] = 1
    if not any(v == 0 for v in labels.values()) or not any(v == 1 for v in labels.values()):
        raise BinningError("binning produced an empty class")
    return BinResult(labels=labels, early_threshold=early_thr, late_threshold=late_thr)


@dataclass(frozen=True)
class FeatureVector:
    """One design-matrix row in canonical column order."""

    video_id: str
    values: np.ndarray
    label: int | None = None

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (25,):
            raise ValueError(f"{self.video_id}: expected 25 feature values, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"{self.video_id}: non-finite feature values")
        if int(vals[CATEGORY_SLICE].sum()) != 1 or not np.all(
            np.isin(vals[CATEGORY_SLICE], (0.0, 1.0))
        ):
            raise ValueError(f"{self.video_id}: category block must one-hot exactly one class")
        if self.label is not None and self.label not in (0, 1):
            raise ValueError(f"{self.video_id}: label must be 0 or 1")


@dataclass(frozen=True)
class RowIssue:
    video_id: str
    reason: str


@dataclass(frozen=True)
class BuildResult:
    vectors: list[FeatureVector]
    schema: FeatureSchema
    issues: list[RowIssue]


def build_matrix(
    videos: Sequence[VideoRecord],
    channels: Iterable[ChannelRecord] | Mapping[str, ChannelRecord],
    annotations: Mapping[str, TitleAnnotation],
    country_avgs: CountryAverages,
    labels: Mapping[str, int] | None = None,
    collection_year: int | None = None,
) -> BuildResult:
    """Assemble feature vectors for every video that joins cleanly.

    Rows that fail to join (missing channel or annotation, inconsistent
    years) are reported in ``issues`` and excluded rather than aborting the
    whole build.
    """
    if isinstance(channels, Mapping):
        by_channel = dict(channels)
    else:
        by_channel = {c.channel_id: c for c in channels}
    if collection_year is None:
        if not videos:
            raise ValueError("cannot infer collection year from zero videos")
        collection_year = max(v.published_datetime.year for v in videos)

    vectors: list[FeatureVector] = []
    issues: list[RowIssue] = []
    for v in videos:
        ch = by_channel.get(v.channel_id)
        if ch is None:
            issues.append(RowIssue(v.video_id, f"no channel record {v.channel_id!r}"))
            continue
        ann = annotations.get(v.video_id)
        if ann is None:
            issues.append(RowIssue(v.video_id, "no title annotation"))
            continue
        try:
            age = channel_age(ch, collection_year)
        except ValueError as exc:
            issues.append(RowIssue(v.video_id, str(exc)))
            continue
        dt = v.published_datetime.astimezone(timezone.utc)
        one_hot = [1.0 if ann.category == c else 0.0 for c in CATEGORIES]
        values = np.array(
            [
                ch.channel_view_count,
                ch.channel_video_count,
                ch.channel_num_subscribers,
                v.length,
                ann.sentiment,
                ann.subjectivity,
                ann.has_named_entities,
                ann.urgency,
                ann.is_emotional,
                ann.has_emojis,
                ann.is_question,
                ann.verb_tense,
                dt.weekday(),
                dt.hour,
                ann.title_num_tokens,
                age,
                *one_hot,
                country_avgs.get(v.country),
            ],
            dtype=float,
        )
        label = labels.get(v.video_id) if labels is not None else None
        vectors.append(FeatureVector(video_id=v.video_id, values=values, label=label))
    return BuildResult(vectors=vectors, schema=default_schema(), issues=issues)
