"""Deterministic generators for 24-hour trajectories and metadata tables.

Four diffusion families are produced: sigmoid (fast rise then saturation),
logarithmic (front-loaded, decelerating), linear (steady), and stepped
(bursts separated by plateaus, modeled as a sum of steep logistic ramps).
All output is a pure function of (spec, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Mapping, Sequence

import numpy as np

from .core import ChannelRecord, Resolution, VideoRecord, ViewTrajectory

FAMILIES = ("sigmoid", "logarithmic", "linear", "stepped")

# per-family parameter ranges used by generate_cohort; kept narrow so each
# family forms one coherent shape cluster after z-normalization
SIGMOID_MIDPOINT_RANGE = (11.0, 12.5)
SIGMOID_STEEPNESS_RANGE = (1.0, 1.3)
LOG_RATE_RANGE = (0.8, 2.5)
STEP_TIME_ANCHORS = (6.0, 15.0)
STEP_TIME_JITTER_HOURS = 0.75
STEP_HEIGHT_WEIGHTS = (0.6, 0.4)
STEP_RAMP_STEEPNESS = 10.0
TOTAL_VIEWS_RANGE_LOG10 = (3.3, 5.3)

LIKES_PER_VIEW = 1 / 50  # synthetic like counts track views at a fixed ratio


@dataclass(frozen=True)
class GrowthSpec:
    """Parameters for one synthetic trajectory."""

    family: str
    total_views: int
    params: Mapping[str, object] = field(default_factory=dict)
    noise_level: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.total_views <= 0:
            raise ValueError("total_views must be positive")
        if not 0.0 <= self.noise_level <= 0.2:
            raise ValueError("noise_level must lie in [0, 0.2]")
        if self.family == "sigmoid":
            m = float(self.params.get("midpoint", 12.0))
            s = float(self.params.get("steepness", 1.0))
            if not 0.0 < m < 24.0:
                raise ValueError("sigmoid midpoint must lie in (0, 24) hours")
            if s <= 0:
                raise ValueError("sigmoid steepness must be positive")
        elif self.family == "logarithmic":
            if float(self.params.get("rate", 1.0)) <= 0:
                raise ValueError("logarithmic rate must be positive")
        elif self.family == "stepped":
            times = self.params.get("step_times")
            heights = self.params.get("step_heights")
            if not times or not heights or len(times) != len(heights):
                raise ValueError("stepped family needs matching step_times and step_heights")
            if any(not 0.0 < t < 24.0 for t in times):
                raise ValueError("step times must lie in (0, 24) hours")
            if sum(heights) != self.total_views:
                raise ValueError("step heights must sum to total_views")


def _fraction_curve(spec: GrowthSpec, hours: np.ndarray) -> np.ndarray:
    """Cumulative fraction of total views at each time, 0 at t=0 and 1 at t=24."""
    if spec.family == "linear":
        return hours / 24.0
    if spec.family == "logarithmic":
        r = float(spec.params.get("rate", 1.0))
        return np.log1p(r * hours) / math.log1p(r * 24.0)
    if spec.family == "sigmoid":
        m = float(spec.params.get("midpoint", 12.0))
        s = float(spec.params.get("steepness", 1.0))
        raw = 1.0 / (1.0 + np.exp(-s * (hours - m)))
        lo = 1.0 / (1.0 + math.exp(s * m))
        hi = 1.0 / (1.0 + math.exp(-s * (24.0 - m)))
        return (raw - lo) / (hi - lo)
    # stepped: sum of steep logistic ramps, one per burst
    times = np.asarray(spec.params["step_times"], dtype=float)
    heights = np.asarray(spec.params["step_heights"], dtype=float)
    s = float(spec.params.get("ramp_steepness", STEP_RAMP_STEEPNESS))
    frac = np.zeros_like(hours)
    for c, h in zip(times, heights):
        raw = 1.0 / (1.0 + np.exp(-s * (hours - c)))
        lo = 1.0 / (1.0 + math.exp(s * c))
        hi = 1.0 / (1.0 + math.exp(-s * (24.0 - c)))
        frac = frac + (h / spec.total_views) * (raw - lo) / (hi - lo)
    return frac


def generate(spec: GrowthSpec, resolution: Resolution) -> ViewTrajectory:
    """Generate one complete, monotone trajectory ending exactly at total_views.

    Noise is multiplicative on the per-slot increments (clamped at zero so
    the cumulative series stays monotone), after which the series is
    re-accumulated and rescaled to the exact total.
    """
    hours = resolution.slot_minutes() / 60.0
    frac = _fraction_curve(spec, hours)
    ideal = spec.total_views * frac
    inc = np.diff(ideal, prepend=0.0)
    if spec.noise_level > 0:
        rng = np.random.default_rng(spec.seed)
        factors = np.maximum(0.0, 1.0 + spec.noise_level * rng.standard_normal(inc.size))
        inc = inc * factors
    cum = np.cumsum(inc)
    if cum[-1] > 0:
        cum = cum * (spec.total_views / cum[-1])
    views = np.rint(cum).astype(int)
    views[-1] = spec.total_views
    likes = [int(v * LIKES_PER_VIEW) for v in views]
    video_id = f"synth-{spec.family}-{spec.seed}"
    return ViewTrajectory.from_values(video_id, resolution, views, likes)


@dataclass(frozen=True)
class Cohort:
    """Generated trajectories plus their planted family labels."""

    trajectories: list[ViewTrajectory]
    labels: dict[str, str]  # video_id -> family


def _random_spec(family: str, rng: np.random.Generator, noise_level: float, seed: int) -> GrowthSpec:
    total = int(round(10 ** rng.uniform(*TOTAL_VIEWS_RANGE_LOG10)))
    params: dict[str, object] = {}
    if family == "sigmoid":
        params = {
            "midpoint": float(rng.uniform(*SIGMOID_MIDPOINT_RANGE)),
            "steepness": float(rng.uniform(*SIGMOID_STEEPNESS_RANGE)),
        }
    elif family == "logarithmic":
        params = {"rate": float(rng.uniform(*LOG_RATE_RANGE))}
    elif family == "stepped":
        anchors = np.asarray(STEP_TIME_ANCHORS)
        times = anchors + rng.uniform(
            -STEP_TIME_JITTER_HOURS, STEP_TIME_JITTER_HOURS, size=anchors.size
        )
        weights = np.asarray(STEP_HEIGHT_WEIGHTS) * rng.uniform(0.85, 1.15, size=anchors.size)
        weights = weights / weights.sum()
        heights = np.floor(weights * total).astype(int)
        heights[-1] = total - int(heights[:-1].sum())
        params = {
            "step_times": tuple(float(t) for t in times),
            "step_heights": tuple(int(h) for h in heights),
        }
    return GrowthSpec(
        family=family, total_views=total, params=params, noise_level=noise_level, seed=seed
    )


def default_family_params(family: str, seed: int, total_views: int | None = None) -> dict:
    """Deterministic per-family parameters drawn from the documented ranges.

    Stepped heights are rescaled to ``total_views`` when given, keeping the
    heights-sum-to-total invariant for any requested total.
    """
    rng = np.random.default_rng(seed)
    params = dict(_random_spec(family, rng, 0.0, seed).params)
    if family == "stepped" and total_views is not None:
        old = np.asarray(params["step_heights"], dtype=float)
        heights = np.floor(old / old.sum() * total_views).astype(int)
        heights[-1] = total_views - int(heights[:-1].sum())
        params["step_heights"] = tuple(int(h) for h in heights)
    return params


def generate_cohort(
    n_per_family: int,
    seed: int,
    resolution: Resolution = Resolution.FIVE_MINUTE,
    noise_level: float = 0.1,
) -> Cohort:
    """Generate ``4 * n_per_family`` trajectories with randomized parameters."""
    if n_per_family < 1:
        raise ValueError("n_per_family must be at least 1")
    rng = np.random.default_rng(seed)
    trajs: list[ViewTrajectory] = []
    labels: dict[str, str] = {}
    for family in FAMILIES:
        for i in range(n_per_family):
            sub_seed = int(rng.integers(0, 2**31 - 1))
            spec = _random_spec(family, rng, noise_level, sub_seed)
            traj = generate(spec, resolution)
            video_id = f"{family}-{i:04d}"
            traj = ViewTrajectory(video_id=video_id, resolution=resolution, points=traj.points)
            trajs.append(traj)
            labels[video_id] = family
    return Cohort(trajectories=trajs, labels=labels)


# ---------------------------------------------------------------------------
# Synthetic metadata with a planted half-life dependence
# ---------------------------------------------------------------------------

SYNTH_COUNTRIES = ("US", "DE", "GB", "FR", "IN", "BR", "JP", "KR", "MX", "EG", "SA", "AU")
SYNTH_COLLECTION_YEAR = 2024

VIDEO_COUNT_LOG10_RANGE = (1.5, 4.5)  # ~30 .. ~30k uploads
LENGTH_LOG10_RANGE = (1.48, 3.56)  # ~30 s .. ~1 hr
COUNTRY_LATENT_RANGE = (4.0, 15.0)
DEFAULT_FEATURE_NOISE_HOURS = 3.0
# a minority of videos get a wider (still bounded) uniform offset, which
# lowers attainable accuracy without blurring the decision surface
CONTAMINATION_PROB = 0.3
CONTAMINATION_SCALE = 4.5

_TITLE_WORDS = {
    "Conflict": ["war", "strike", "clashes", "troops", "border"],
    "Economy": ["economy", "market", "inflation", "stocks", "trade"],
    "Health_and_Safety": ["health", "vaccine", "hospital", "safety", "outbreak"],
    "Other": ["update", "tonight", "story", "report", "special"],
    "Politics": ["election", "president", "parliament", "vote", "policy"],
    "Science/Tech": ["science", "technology", "launch", "ai", "research"],
    "Society": ["community", "protest", "culture", "education", "housing"],
    "Sports": ["match", "championship", "league", "final", "team"],
}


def planted_half_life(
    country_latent: float, channel_video_count: int, length_seconds: int
) -> float:
    """Noise-free half-life planted by synth_features.

    Monotone in each argument: increasing in the country's latent average and
    in video length, decreasing in the channel's upload count. The dominant
    term is a smooth AND gate (few uploads AND long video extend the
    half-life), whose curved decision surface a linear model on the raw
    columns cannot represent.
    """
    lo_v, hi_v = VIDEO_COUNT_LOG10_RANGE
    lo_l, hi_l = LENGTH_LOG10_RANGE
    lo_c, hi_c = COUNTRY_LATENT_RANGE
    u_c = (country_latent - lo_c) / (hi_c - lo_c)
    u_v = min(1.0, max(0.0, (math.log10(channel_video_count) - lo_v) / (hi_v - lo_v)))
    u_l = min(1.0, max(0.0, (math.log10(length_seconds) - lo_l) / (hi_l - lo_l)))
    gate = 1.0 / (1.0 + math.exp(-6.0 * (0.55 - u_v)))
    gate *= 1.0 / (1.0 + math.exp(-6.0 * (u_l - 0.45)))
    return 1.5 + 3.5 * u_c + 8.5 * gate + 0.5 * u_l


@dataclass(frozen=True)
class SynthFeatureData:
    """Synthetic metadata tables plus planted half-life values."""

    videos: list[VideoRecord]
    channels: list[ChannelRecord]
    half_lives: dict[str, float]  # video_id -> hours
    country_latents: dict[str, float]


def _random_title(rng: np.random.Generator) -> str:
    cat = list(_TITLE_WORDS)[int(rng.integers(0, len(_TITLE_WORDS)))]
    words = [str(w) for w in rng.choice(_TITLE_WORDS[cat], size=2, replace=False)]
    filler = ["the", "after", "amid", "over", "in", "new"]
    words.insert(1, filler[int(rng.integers(0, len(filler)))])
    title = " ".join(words).capitalize()
    r = rng.random()
    if r < 0.10:
        title = "BREAKING: " + title
    if rng.random() < 0.15:
        title += "?"
    if rng.random() < 0.10:
        title += " \U0001F6A8"
    return title


def synth_features(
    n: int, seed: int, noise_hours: float = DEFAULT_FEATURE_NOISE_HOURS
) -> SynthFeatureData:
    """Generate ``n`` video rows whose half-life depends on exactly three
    informative predictors (channel_video_count, length, the per-country
    latent average); every other metadata column is drawn independently.

    Noise is bounded uniform: ``U(-noise_hours, noise_hours)`` for most rows,
    widened by CONTAMINATION_SCALE for a CONTAMINATION_PROB minority. The
    default leaves roughly 80% Bayes accuracy on the derived early-vs-late
    task.
    """
    if n < 100:
        raise ValueError("synth_features needs n >= 100")
    rng = np.random.default_rng(seed)
    latents = {
        c: float(rng.uniform(*COUNTRY_LATENT_RANGE)) for c in SYNTH_COUNTRIES
    }
    n_channels = max(8, n // 8)
    channels: list[ChannelRecord] = []
    for i in range(n_channels):
        country = SYNTH_COUNTRIES[int(rng.integers(0, len(SYNTH_COUNTRIES)))]
        channels.append(
            ChannelRecord(
                channel_id=f"ch{i:05d}",
                channel_view_count=int(10 ** rng.uniform(5.0, 9.5)),
                channel_video_count=int(round(10 ** rng.uniform(*VIDEO_COUNT_LOG10_RANGE))),
                channel_num_subscribers=int(10 ** rng.uniform(3.0, 7.0)),
                joined_year=int(rng.integers(2006, SYNTH_COLLECTION_YEAR)),
                country=country,
            )
        )

    base_dt = datetime(SYNTH_COLLECTION_YEAR, 1, 1, tzinfo=timezone.utc)
    videos: list[VideoRecord] = []
    half_lives: dict[str, float] = {}
    for j in range(n):
        ch = channels[int(rng.integers(0, n_channels))]
        length = int(round(10 ** rng.uniform(*LENGTH_LOG10_RANGE)))
        published = base_dt + timedelta(minutes=int(rng.integers(0, 240 * 24 * 60)))
        vid = f"vid{j:06d}"
        videos.append(
            VideoRecord(
                video_id=vid,
                channel_id=ch.channel_id,
                title=_random_title(rng),
                length=length,
                is_age_restricted=bool(rng.random() < 0.02),
                thumbnail_url=f"https://thumbs.example/{vid}.jpg",
                published_datetime=published,
                num_comments=int(10 ** rng.uniform(0.0, 3.5)),
                country=ch.country,
            )
        )
        hl = planted_half_life(latents[ch.country], ch.channel_video_count, length)
        scale = noise_hours
        if rng.random() < CONTAMINATION_PROB:
            scale = CONTAMINATION_SCALE * noise_hours
        hl += float(rng.uniform(-scale, scale))
        half_lives[vid] = float(min(24.0, max(0.25, hl)))
    return SynthFeatureData(
        videos=videos, channels=channels, half_lives=half_lives, country_latents=latents
    )
