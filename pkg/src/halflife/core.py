"""Domain types, trajectory validation/imputation, and the half-life metric.

A trajectory is the cumulative view-count series of one video over its first
24 hours, stored on a fixed slot grid (hourly: 25 slots, five-minute: 289
slots). Missing observations are ``None`` slots. All operations here are pure
over immutable inputs and safe to call concurrently.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Mapping, Sequence

import numpy as np

DAY_MINUTES = 1440

QUANTILE_LEVELS = (0.10, 0.25, 0.50, 0.75, 0.90)

COUNTRY_BINS = 5


class MalformedTrajectoryError(ValueError):
    """Structurally invalid trajectory data (distinct from a rule-based reject)."""


class UndefinedHalfLifeError(ValueError):
    """Half-life is undefined, e.g. the 24-hour total is zero."""


class ImputationError(ValueError):
    """Imputation cannot proceed, e.g. every slot is missing."""


class Resolution(enum.Enum):
    """Sampling grid of a trajectory."""

    HOURLY = "hourly"
    FIVE_MINUTE = "five-minute"

    @property
    def step_minutes(self) -> int:
        return 60 if self is Resolution.HOURLY else 5

    @property
    def n_slots(self) -> int:
        return DAY_MINUTES // self.step_minutes + 1

    def slot_minutes(self) -> np.ndarray:
        return np.arange(self.n_slots) * self.step_minutes


@dataclass(frozen=True)
class Snapshot:
    """One observation: cumulative views (and optional likes) at `at` minutes."""

    at: int
    views: int
    likes: int | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.at <= DAY_MINUTES:
            raise ValueError(f"snapshot time {self.at} outside [0, {DAY_MINUTES}] minutes")
        if self.views < 0:
            raise ValueError("views must be non-negative")
        if self.likes is not None and self.likes < 0:
            raise ValueError("likes must be non-negative")


@dataclass(frozen=True)
class ViewTrajectory:
    """Slot-gridded cumulative view counts for one video.

    ``points`` has exactly one entry per grid slot; ``None`` marks a missing
    observation. Construction checks the grid alignment but deliberately not
    monotonicity: the validators report non-monotone views as a malformed-data
    error so that callers can distinguish bad data from rule-based rejection.
    """

    video_id: str
    resolution: Resolution
    points: tuple[Snapshot | None, ...]

    def __post_init__(self) -> None:
        expected = self.resolution.n_slots
        if len(self.points) != expected:
            raise MalformedTrajectoryError(
                f"{self.video_id}: expected {expected} slots for {self.resolution.value} "
                f"resolution, got {len(self.points)}"
            )
        step = self.resolution.step_minutes
        for i, p in enumerate(self.points):
            if p is not None and p.at != i * step:
                raise MalformedTrajectoryError(
                    f"{self.video_id}: snapshot at minute {p.at} does not sit on slot {i} "
                    f"(expected minute {i * step})"
                )

    @classmethod
    def from_values(
        cls,
        video_id: str,
        resolution: Resolution,
        views: Sequence[int | float | None],
        likes: Sequence[int | None] | None = None,
    ) -> "ViewTrajectory":
        """Build a trajectory from per-slot view values (``None`` = missing)."""
        step = resolution.step_minutes
        pts: list[Snapshot | None] = []
        for i, v in enumerate(views):
            if v is None or (isinstance(v, float) and math.isnan(v)):
                pts.append(None)
            else:
                lk = likes[i] if likes is not None else None
                pts.append(Snapshot(at=i * step, views=int(v), likes=lk))
        return cls(video_id=video_id, resolution=resolution, points=tuple(pts))

    @classmethod
    def from_rows(
        cls,
        video_id: str,
        resolution: Resolution,
        rows: Mapping[int, tuple[int, int | None]],
    ) -> "ViewTrajectory":
        """Build a trajectory from sparse ``minute -> (views, likes)`` rows."""
        step = resolution.step_minutes
        pts: list[Snapshot | None] = []
        for i in range(resolution.n_slots):
            minute = i * step
            if minute in rows:
                views, likes = rows[minute]
                pts.append(Snapshot(at=minute, views=views, likes=likes))
            else:
                pts.append(None)
        return cls(video_id=video_id, resolution=resolution, points=tuple(pts))

    def views(self) -> np.ndarray:
        """Per-slot views as float array with NaN for missing slots."""
        return np.array(
            [p.views if p is not None else np.nan for p in self.points], dtype=float
        )

    def missing_mask(self) -> np.ndarray:
        return np.array([p is None for p in self.points], dtype=bool)

    @property
    def is_complete(self) -> bool:
        return all(p is not None for p in self.points)


@dataclass(frozen=True)
class VideoRecord:
    """Raw video metadata row."""

    video_id: str
    channel_id: str
    title: str
    length: int
    is_age_restricted: bool
    thumbnail_url: str
    published_datetime: datetime
    num_comments: int
    country: str

    def __post_init__(self) -> None:
        if self.length <= 0:
            raise ValueError(f"{self.video_id}: length must be positive")
        if self.published_datetime.tzinfo is None:
            object.__setattr__(
                self, "published_datetime", self.published_datetime.replace(tzinfo=timezone.utc)
            )


@dataclass(frozen=True)
class ChannelRecord:
    """Raw channel metadata row."""

    channel_id: str
    channel_view_count: int
    channel_video_count: int
    channel_num_subscribers: int
    joined_year: int
    country: str

    def __post_init__(self) -> None:
        if self.joined_year < 2005:
            raise ValueError(f"{self.channel_id}: joined_year {self.joined_year} predates 2005")
        for name in ("channel_view_count", "channel_video_count", "channel_num_subscribers"):
            if getattr(self, name) < 0:
                raise ValueError(f"{self.channel_id}: {name} must be non-negative")


@dataclass(frozen=True)
class HalfLife:
    """First time at which half of the 24-hour views is reached.

    ``value`` is in hours; ``overshoot_pct`` is the percentage by which views
    at the crossing slot exceed exactly half the 24-hour total.
    """

    value: float
    overshoot_pct: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 24.0:
            raise ValueError(f"half-life {self.value} h outside [0, 24]")
        if self.overshoot_pct < 0:
            raise ValueError("overshoot_pct must be non-negative")


@dataclass(frozen=True)
class ValidationDecision:
    """Accept/reject outcome of a preprocessing rule."""

    accepted: bool
    reason: str | None = None


@dataclass(frozen=True)
class CountryStat:
    """Per-country aggregate used by the country report."""

    country: str
    n_videos: int
    mean_half_life: float | None
    bin: int | None  # 1..5, None for no-data countries

    @property
    def no_data(self) -> bool:
        return self.mean_half_life is None


def _check_monotone(traj: ViewTrajectory) -> None:
    vals = [p.views for p in traj.points if p is not None]
    for a, b in zip(vals, vals[1:]):
        if b < a:
            raise MalformedTrajectoryError(
                f"{traj.video_id}: cumulative views decrease ({a} -> {b})"
            )


def missing_runs(traj: ViewTrajectory) -> list[tuple[int, int]]:
    """Consecutive missing-slot runs as (start_slot, length) pairs."""
    runs: list[tuple[int, int]] = []
    start = None
    for i, p in enumerate(traj.points):
        if p is None and start is None:
            start = i
        elif p is not None and start is not None:
            runs.append((start, i - start))
            start = None
    if start is not None:
        runs.append((start, len(traj.points) - start))
    return runs


def validate_a(traj: ViewTrajectory) -> ValidationDecision:
    """Hourly-ruleset decision: drop on >1 missing hour in hours 1..12, or
    fewer than 12 non-missing hours overall."""
    if traj.resolution is not Resolution.HOURLY:
        raise ValueError("validate_a expects an hourly trajectory")
    _check_monotone(traj)
    missing_first_12 = sum(1 for i in range(1, 13) if traj.points[i] is None)
    if missing_first_12 > 1:
        return ValidationDecision(False, f"{missing_first_12} missing hours within hours 1..12")
    present = sum(1 for p in traj.points if p is not None)
    if present < 12:
        return ValidationDecision(False, f"only {present} non-missing hours")
    return ValidationDecision(True)


def validate_b(traj: ViewTrajectory) -> ValidationDecision:
    """Five-minute-ruleset decision: drop on any run of >2 consecutive missing
    slots, or a missing final (minute-1440) slot."""
    if traj.resolution is not Resolution.FIVE_MINUTE:
        raise ValueError("validate_b expects a five-minute trajectory")
    _check_monotone(traj)
    if traj.points[-1] is None:
        return ValidationDecision(False, "final slot (minute 1440) missing")
    worst = max((length for _, length in missing_runs(traj)), default=0)
    if worst > 2:
        return ValidationDecision(False, f"run of {worst} consecutive missing slots")
    return ValidationDecision(True)


def impute(traj: ViewTrajectory) -> ViewTrajectory:
    """Fill missing slots and return a complete, monotone trajectory.

    Interior gaps are linearly interpolated between the flanking non-missing
    neighbors (for a single-slot gap this is exactly the mean of the two
    adjacent values); leading/trailing gaps copy the nearest non-missing
    value. Any residual monotonicity violation is clamped up to the running
    maximum so that scraper jitter does not produce decreasing totals.
    """
    vals = traj.views()
    present = np.flatnonzero(~np.isnan(vals))
    if present.size == 0:
        raise ImputationError(f"{traj.video_id}: all slots missing")
    if present.size < vals.size:
        idx = np.arange(vals.size)
        vals = np.interp(idx, present, vals[present])
    # clamp to running maximum, then round back to integer counts
    vals = np.maximum.accumulate(vals)
    views = np.rint(vals).astype(int)
    likes = [p.likes if p is not None else None for p in traj.points]
    return ViewTrajectory.from_values(traj.video_id, traj.resolution, views, likes)


def half_life(traj: ViewTrajectory) -> HalfLife:
    """First-crossing half-life of a complete trajectory.

    Hourly trajectories report the integer crossing hour; five-minute
    trajectories report the crossing minute divided by 60 (a multiple of
    1/12 h, within the 1/60 h reporting grid). No interpolation between
    slots is performed.
    """
    if not traj.is_complete:
        raise ValueError(f"{traj.video_id}: trajectory has missing slots; impute first")
    vals = traj.views()
    total = vals[-1]
    if total <= 0:
        raise UndefinedHalfLifeError(f"{traj.video_id}: zero views over 24 hours")
    half = total / 2.0
    idx = int(np.argmax(vals >= half))
    minute = idx * traj.resolution.step_minutes
    value = float(idx) if traj.resolution is Resolution.HOURLY else minute / 60.0
    overshoot = 100.0 * (vals[idx] - half) / half
    return HalfLife(value=value, overshoot_pct=float(overshoot))


def _as_hours(values: Iterable[HalfLife | float]) -> list[float]:
    return [v.value if isinstance(v, HalfLife) else float(v) for v in values]


def halflife_quantiles(values: Sequence[HalfLife | float]) -> tuple[float, ...]:
    """Nearest-rank quantiles of half-lives at the 10/25/50/75/90% levels."""
    hours = sorted(_as_hours(values))
    n = len(hours)
    if n == 0:
        raise ValueError("cannot compute quantiles of an empty sequence")
    out = []
    for p in QUANTILE_LEVELS:
        rank = max(1, math.ceil(p * n))
        out.append(hours[rank - 1])
    return tuple(out)


def country_report(
    videos: Iterable[VideoRecord],
    halflives: Mapping[str, HalfLife | float],
    all_countries: Iterable[str] | None = None,
) -> list[CountryStat]:
    """Per-country mean half-life with a 5-bin equal-width category.

    Bins split the observed range of country means into five equal-width
    intervals (bin 1 = shortest half-lives); a zero-width range puts every
    country in bin 1. Countries listed in ``all_countries`` but absent from
    the data are emitted as no-data rows.
    """
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for v in videos:
        if v.video_id not in halflives:
            continue
        h = halflives[v.video_id]
        hours = h.value if isinstance(h, HalfLife) else float(h)
        sums[v.country] = sums.get(v.country, 0.0) + hours
        counts[v.country] = counts.get(v.country, 0) + 1

    means = {c: sums[c] / counts[c] for c in sums}
    stats: list[CountryStat] = []
    if means:
        lo, hi = min(means.values()), max(means.values())
        width = (hi - lo) / COUNTRY_BINS
        for c in sorted(means):
            m = means[c]
            if width == 0:
                b = 1
            else:
                b = min(COUNTRY_BINS - 1, int((m - lo) / width)) + 1
            stats.append(CountryStat(country=c, n_videos=counts[c], mean_half_life=m, bin=b))
    if all_countries is not None:
        for c in sorted(set(all_countries) - set(means)):
            stats.append(CountryStat(country=c, n_videos=0, mean_half_life=None, bin=None))
        stats.sort(key=lambda s: s.country)
    return stats
