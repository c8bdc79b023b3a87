"""Deterministic simulation of the two-queue snapshot collector.

A scheduler tick fires every 5 simulated minutes and runs two phases against
a pluggable source: discovery (new videos move from the pending queue into
active monitoring with an initial snapshot) and monitoring (one snapshot per
active video, with 24-hour-old videos retiring into the completed store).
Everything is a pure function of the fixture and seeds, so two runs with the
same inputs produce byte-identical stores.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .core import DAY_MINUTES, Resolution, Snapshot, ViewTrajectory
from .io import atomic_write, write_store_trajectory
from .synth import GrowthSpec, default_family_params, generate

TICK_MINUTES = 5


class SourceError(RuntimeError):
    """A single source call failed; the affected snapshot is recorded missing."""


class StoreWriteError(RuntimeError):
    """The completed-video store could not be written; the run aborts."""


class CollectorInvariantError(AssertionError):
    """Internal state broke a collector invariant."""


class SourcePort(Protocol):
    """Minimal surface a video source must provide."""

    def list_new_videos(self, channel_id: str, since: int) -> list[str]:
        """Video ids from one channel published after `since`, up to now."""
        ...

    def fetch_stats(self, video_id: str) -> tuple[int, int]:
        """Current cumulative (views, likes); non-decreasing per video."""
        ...


@dataclass
class SimulatedClock:
    minute: int = 0

    def advance(self, step: int = TICK_MINUTES) -> None:
        self.minute += step


@dataclass(frozen=True)
class ScriptedVideo:
    """One fixture row for the synthetic source."""

    channel_id: str
    video_id: str
    publish_minute: int
    family: str
    total_views: int
    seed: int


def read_fixture(path: str | Path) -> list[ScriptedVideo]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append(
                ScriptedVideo(
                    channel_id=rec["channel_id"],
                    video_id=rec["video_id"],
                    publish_minute=int(rec["publish_minute"]),
                    family=rec["family"],
                    total_views=int(rec["total_views"]),
                    seed=int(rec["seed"]),
                )
            )
    return out


def write_fixture(path: str | Path, rows: Iterable[ScriptedVideo]) -> None:
    lines = [
        json.dumps(
            {
                "channel_id": r.channel_id,
                "family": r.family,
                "publish_minute": r.publish_minute,
                "seed": r.seed,
                "total_views": r.total_views,
                "video_id": r.video_id,
            },
            sort_keys=True,
        )
        for r in rows
    ]
    atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))


class SyntheticSource:
    """Source backed by the trajectory generator.

    ``fetch_stats`` interpolates the scripted video's generated five-minute
    trajectory at the video's current age. Failures are injected
    deterministically per (seed, video, minute), so replays are identical.
    """

    def __init__(
        self,
        fixture: Sequence[ScriptedVideo],
        clock: SimulatedClock,
        failure_rate: float = 0.0,
        failure_seed: int = 0,
    ):
        self.clock = clock
        self.failure_rate = failure_rate
        self.failure_seed = failure_seed
        self.videos = {v.video_id: v for v in fixture}
        self._by_channel: dict[str, list[ScriptedVideo]] = {}
        for v in fixture:
            self._by_channel.setdefault(v.channel_id, []).append(v)
        for vids in self._by_channel.values():
            vids.sort(key=lambda v: (v.publish_minute, v.video_id))
        self._curves: dict[str, np.ndarray] = {}

    @property
    def channels(self) -> list[str]:
        return sorted(self._by_channel)

    def list_new_videos(self, channel_id: str, since: int) -> list[str]:
        now = self.clock.minute
        return [
            v.video_id
            for v in self._by_channel.get(channel_id, [])
            if since < v.publish_minute <= now
        ]

    def _curve(self, video: ScriptedVideo) -> np.ndarray:
        if video.video_id not in self._curves:
            spec = GrowthSpec(
                family=video.family,
                total_views=video.total_views,
                params=default_family_params(video.family, video.seed, video.total_views),
                seed=video.seed,
            )
            traj = generate(spec, Resolution.FIVE_MINUTE)
            self._curves[video.video_id] = traj.views()
        return self._curves[video.video_id]

    def fetch_stats(self, video_id: str) -> tuple[int, int]:
        now = self.clock.minute
        if self.failure_rate > 0:
            r = random.Random(f"{self.failure_seed}:{video_id}:{now}")
            if r.random() < self.failure_rate:
                raise SourceError(f"injected failure for {video_id} at minute {now}")
        video = self.videos[video_id]
        age = min(DAY_MINUTES, max(0, now - video.publish_minute))
        curve = self._curve(video)
        grid = np.arange(curve.size) * 5
        views = int(np.interp(age, grid, curve))
        return views, views // 50


@dataclass
class ActiveVideo:
    video_id: str
    channel_id: str
    publish_minute: int
    discovered_minute: int
    snapshots: list[tuple[int, int | None, int | None]] = field(default_factory=list)
    # (slot minute since publication, views or None if the fetch failed, likes)

    @property
    def next_slot(self) -> int:
        return len(self.snapshots) * TICK_MINUTES

    def to_trajectory(self) -> ViewTrajectory:
        rows = {
            at: (views, likes)
            for at, views, likes in self.snapshots
            if views is not None
        }
        return ViewTrajectory.from_rows(self.video_id, Resolution.FIVE_MINUTE, rows)


@dataclass
class MonitorState:
    """Queues of the two collection processes plus the simulated clock."""

    clock: SimulatedClock = field(default_factory=SimulatedClock)
    channels: list[str] = field(default_factory=list)
    pending: list[str] = field(default_factory=list)
    active: dict[str, ActiveVideo] = field(default_factory=dict)
    completed: dict[str, ActiveVideo] = field(default_factory=dict)
    last_discovery: int = -1
    channel_of: dict[str, str] = field(default_factory=dict)
    publish_of: dict[str, int] = field(default_factory=dict)


class Store:
    """Filesystem layout: completed/<video_id>.jsonl plus manifest.json."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def write_completed(self, video: ActiveVideo) -> None:
        snaps = [
            Snapshot(at=at, views=views, likes=likes)
            for at, views, likes in video.snapshots
            if views is not None
        ]
        try:
            write_store_trajectory(self.root / "completed" / f"{video.video_id}.jsonl", snaps)
        except OSError as exc:
            raise StoreWriteError(f"cannot persist {video.video_id}: {exc}") from exc

    def write_manifest(self, manifest: dict, partial: bool = False) -> Path:
        name = "manifest.partial.json" if partial else "manifest.json"
        path = self.root / name
        atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return path


def _check_invariants(state: MonitorState) -> None:
    pend, act, comp = set(state.pending), set(state.active), set(state.completed)
    overlap = (pend & act) | (pend & comp) | (act & comp)
    if overlap:
        raise CollectorInvariantError(f"videos in two queues at once: {sorted(overlap)}")
    for v in state.active.values():
        if v.snapshots and v.next_slot > DAY_MINUTES:
            raise CollectorInvariantError(f"{v.video_id} active past its 24-hour window")


def tick(state: MonitorState, source: SourcePort, store: Store | None = None) -> MonitorState:
    """One 5-minute scheduler pass: discover, snapshot, and retire videos."""
    now = state.clock.minute

    def channel_order(vid: str) -> tuple[str, str]:
        return (state.channel_of.get(vid, ""), vid)

    # discovery pass over all channels
    channels = state.channels or getattr(source, "channels", [])
    for channel_id in sorted(channels):
        for vid in source.list_new_videos(channel_id, state.last_discovery):
            if vid in state.active or vid in state.completed or vid in state.pending:
                continue
            state.pending.append(vid)
            state.channel_of[vid] = channel_id
            if hasattr(source, "videos"):
                state.publish_of[vid] = source.videos[vid].publish_minute
            else:
                state.publish_of.setdefault(vid, now)
    state.last_discovery = now

    # admit pending videos with their initial (slot 0) snapshot
    admitted: set[str] = set()
    for vid in sorted(state.pending, key=channel_order):
        video = ActiveVideo(
            video_id=vid,
            channel_id=state.channel_of[vid],
            publish_minute=state.publish_of[vid],
            discovered_minute=now,
        )
        try:
            views, likes = source.fetch_stats(vid)
            video.snapshots.append((0, views, likes))
        except SourceError:
            video.snapshots.append((0, None, None))
        state.active[vid] = video
        admitted.add(vid)
    state.pending.clear()

    # monitoring pass for every previously active video
    retiring: list[str] = []
    for vid in sorted(state.active, key=channel_order):
        video = state.active[vid]
        if vid not in admitted:
            slot = video.next_slot
            try:
                views, likes = source.fetch_stats(vid)
                video.snapshots.append((slot, views, likes))
            except SourceError:
                video.snapshots.append((slot, None, None))
        if video.next_slot > DAY_MINUTES:
            retiring.append(vid)

    # retire videos whose 24-hour window has closed
    for vid in retiring:
        video = state.active.pop(vid)
        state.completed[vid] = video
        if store is not None:
            store.write_completed(video)

    _check_invariants(state)
    return state


@dataclass(frozen=True)
class RunResult:
    state: MonitorState
    manifest: dict
    manifest_path: Path | None


def run(
    source: SourcePort,
    duration_minutes: int,
    seed: int = 42,
    store_dir: str | Path | None = None,
    channels: Iterable[str] | None = None,
) -> RunResult:
    """Drive ticks from minute 0 to `duration_minutes` inclusive."""
    if duration_minutes % TICK_MINUTES != 0:
        raise ValueError(f"duration must be a multiple of {TICK_MINUTES} minutes")
    state = MonitorState()
    # drive the same clock the source reads, so fetches see the current time
    source_clock = getattr(source, "clock", None)
    if isinstance(source_clock, SimulatedClock):
        state.clock = source_clock
    state.channels = sorted(channels) if channels is not None else list(
        getattr(source, "channels", [])
    )
    store = Store(store_dir) if store_dir is not None else None
    try:
        for minute in range(0, duration_minutes + 1, TICK_MINUTES):
            state.clock.minute = minute
            tick(state, source, store)
    except StoreWriteError:
        if store is not None:
            store.write_manifest(_manifest(state, seed, duration_minutes, aborted=True), partial=True)
        raise
    manifest = _manifest(state, seed, duration_minutes)
    path = store.write_manifest(manifest) if store is not None else None
    return RunResult(state=state, manifest=manifest, manifest_path=path)


def _manifest(state: MonitorState, seed: int, duration: int, aborted: bool = False) -> dict:
    snap_counts = {
        vid: sum(1 for _, views, _ in v.snapshots if views is not None)
        for vid, v in state.completed.items()
    }
    manifest = {
        "aborted": aborted,
        "completed": sorted(state.completed),
        "duration_minutes": duration,
        "in_flight": sorted(state.active),
        "n_active": len(state.active),
        "n_completed": len(state.completed),
        "n_pending": len(state.pending),
        "run_seed": seed,
        "snapshot_counts": {k: snap_counts[k] for k in sorted(snap_counts)},
        "store_format": "jsonl-v1",
    }
    return manifest
