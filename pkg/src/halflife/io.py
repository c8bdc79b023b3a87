"""File schemas shared by the pipeline stages.

Everything is plain CSV/JSON with fixed headers so that stages can be chained
by scripts. Writes go through :func:`atomic_write` (temp file + rename) and
floats are serialized with ``repr`` so that identical inputs produce
byte-identical outputs.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .core import ChannelRecord, HalfLife, Resolution, Snapshot, VideoRecord, ViewTrajectory

TRAJECTORY_HEADER = ["video_id", "minute", "views", "likes"]
VIDEO_HEADER = [
    "video_id",
    "channel_id",
    "title",
    "length",
    "is_age_restricted",
    "thumbnail_url",
    "published_datetime",
    "num_comments",
    "country",
]
CHANNEL_HEADER = [
    "channel_id",
    "channel_view_count",
    "channel_video_count",
    "channel_num_subscribers",
    "joined_year",
    "country",
]
HALFLIFE_HEADER = ["video_id", "half_life_hours", "overshoot_pct"]


class SchemaError(ValueError):
    """A file does not match its documented schema."""


def fmt_float(x: float) -> str:
    """Shortest round-trip decimal form; integral floats render without dot."""
    f = float(x)
    if f == int(f) and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


def atomic_write(path: str | Path, data: str | bytes) -> None:
    """Write file contents via a temp file + rename in the target directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    mode = "wb" if isinstance(data, bytes) else "w"
    kwargs = {} if isinstance(data, bytes) else {"newline": ""}
    with open(tmp, mode, **kwargs) as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write(path, buf.getvalue())


def write_json(path: str | Path, obj) -> None:
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _require_header(actual: Sequence[str], expected: Sequence[str], path) -> None:
    if list(actual) != list(expected):
        missing = [c for c in expected if c not in actual]
        extra = [c for c in actual if c not in expected]
        raise SchemaError(
            f"{path}: bad header; missing columns {missing or 'none'}, "
            f"unexpected columns {extra or 'none'} (expected {list(expected)})"
        )


def parse_utc(text: str) -> datetime:
    dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_utc(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def write_trajectories(path: str | Path, trajs: Iterable[ViewTrajectory]) -> None:
    """Trajectory CSV: one row per non-missing snapshot, missing slots absent."""
    rows = []
    for t in trajs:
        for p in t.points:
            if p is None:
                continue
            rows.append([t.video_id, p.at, p.views, "" if p.likes is None else p.likes])
    write_csv(path, TRAJECTORY_HEADER, rows)


def read_trajectories(path: str | Path, resolution: Resolution) -> list[ViewTrajectory]:
    """Read a trajectory CSV, grouping rows by video_id in first-seen order."""
    by_video: dict[str, dict[int, tuple[int, int | None]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        _require_header(header, TRAJECTORY_HEADER, path)
        for lineno, row in enumerate(reader, start=2):
            try:
                vid, minute, views, likes = row
                by_video.setdefault(vid, {})[int(minute)] = (
                    int(views),
                    int(likes) if likes != "" else None,
                )
            except (ValueError, IndexError) as exc:
                raise SchemaError(f"{path}:{lineno}: unparseable trajectory row: {row}") from exc
    return [
        ViewTrajectory.from_rows(vid, resolution, rows) for vid, rows in by_video.items()
    ]


def write_videos(path: str | Path, videos: Iterable[VideoRecord]) -> None:
    rows = [
        [
            v.video_id,
            v.channel_id,
            v.title,
            v.length,
            int(v.is_age_restricted),
            v.thumbnail_url,
            format_utc(v.published_datetime),
            v.num_comments,
            v.country,
        ]
        for v in videos
    ]
    write_csv(path, VIDEO_HEADER, rows)


def read_videos(path: str | Path) -> list[VideoRecord]:
    out: list[VideoRecord] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        _require_header(reader.fieldnames or [], VIDEO_HEADER, path)
        for row in reader:
            out.append(
                VideoRecord(
                    video_id=row["video_id"],
                    channel_id=row["channel_id"],
                    title=row["title"],
                    length=int(row["length"]),
                    is_age_restricted=bool(int(row["is_age_restricted"])),
                    thumbnail_url=row["thumbnail_url"],
                    published_datetime=parse_utc(row["published_datetime"]),
                    num_comments=int(row["num_comments"]),
                    country=row["country"],
                )
            )
    return out


def write_channels(path: str | Path, channels: Iterable[ChannelRecord]) -> None:
    rows = [
        [
            c.channel_id,
            c.channel_view_count,
            c.channel_video_count,
            c.channel_num_subscribers,
            c.joined_year,
            c.country,
        ]
        for c in channels
    ]
    write_csv(path, CHANNEL_HEADER, rows)


def read_channels(path: str | Path) -> list[ChannelRecord]:
    out: list[ChannelRecord] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        _require_header(reader.fieldnames or [], CHANNEL_HEADER, path)
        for row in reader:
            out.append(
                ChannelRecord(
                    channel_id=row["channel_id"],
                    channel_view_count=int(row["channel_view_count"]),
                    channel_video_count=int(row["channel_video_count"]),
                    channel_num_subscribers=int(row["channel_num_subscribers"]),
                    joined_year=int(row["joined_year"]),
                    country=row["country"],
                )
            )
    return out


def write_halflives(path: str | Path, halflives: Mapping[str, HalfLife]) -> None:
    rows = [
        [vid, fmt_float(h.value), fmt_float(h.overshoot_pct)] for vid, h in halflives.items()
    ]
    write_csv(path, HALFLIFE_HEADER, rows)


def read_halflives(path: str | Path) -> dict[str, HalfLife]:
    out: dict[str, HalfLife] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        _require_header(reader.fieldnames or [], HALFLIFE_HEADER, path)
        for row in reader:
            out[row["video_id"]] = HalfLife(
                value=float(row["half_life_hours"]),
                overshoot_pct=float(row["overshoot_pct"]),
            )
    return out


def write_store_trajectory(path: str | Path, snapshots: Iterable[Snapshot]) -> None:
    """Append-only JSONL store record for one completed video."""
    lines = [
        json.dumps(
            {"at": s.at, "likes": s.likes, "views": s.views}, sort_keys=True
        )
        for s in snapshots
    ]
    atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))


def read_store_trajectory(path: str | Path, video_id: str) -> ViewTrajectory:
    rows: dict[int, tuple[int, int | None]] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            rows[int(rec["at"])] = (int(rec["views"]), rec.get("likes"))
    return ViewTrajectory.from_rows(video_id, Resolution.FIVE_MINUTE, rows)
