"""Two-queue collector simulation: discovery, monitoring, retirement, store."""

import json
from pathlib import Path

import numpy as np
import pytest

from halflife.collector import (
    CollectorInvariantError,
    MonitorState,
    ScriptedVideo,
    SimulatedClock,
    SourceError,
    Store,
    StoreWriteError,
    SyntheticSource,
    read_fixture,
    run,
    tick,
    write_fixture,
)
from halflife.core import Resolution, half_life, validate_b
from halflife.io import read_store_trajectory
from halflife.synth import GrowthSpec, generate


def scripted(video_id="v1", channel="chA", publish=0, family="sigmoid", total=10_000, seed=5):
    return ScriptedVideo(
        channel_id=channel,
        video_id=video_id,
        publish_minute=publish,
        family=family,
        total_views=total,
        seed=seed,
    )


class FlakySource(SyntheticSource):
    """Fails fetch_stats at scripted (video_id, clock minute) pairs."""

    def __init__(self, fixture, clock, fail_at=()):
        super().__init__(fixture, clock)
        self.fail_at = set(fail_at)

    def fetch_stats(self, video_id):
        if (video_id, self.clock.minute) in self.fail_at:
            raise SourceError(f"scripted failure {video_id}@{self.clock.minute}")
        return super().fetch_stats(video_id)


def drive(source, duration):
    state = MonitorState(clock=source.clock)
    state.channels = source.channels
    for minute in range(0, duration + 1, 5):
        state.clock.minute = minute
        tick(state, source)
    return state


def test_perfect_source_yields_289_slots():
    clock = SimulatedClock()
    source = SyntheticSource([scripted()], clock)
    state = drive(source, 1500)
    assert list(state.completed) == ["v1"]
    snaps = state.completed["v1"].snapshots
    assert len(snaps) == 289
    assert [at for at, _, _ in snaps] == list(range(0, 1441, 5))
    assert all(views is not None for _, views, _ in snaps)


def test_discovery_latency_within_one_tick():
    clock = SimulatedClock()
    source = SyntheticSource([scripted(publish=7)], clock)
    state = drive(source, 20)
    video = state.active["v1"]
    assert video.discovered_minute == 10  # first tick after minute 7
    assert video.discovered_minute - video.publish_minute <= 5


def test_two_consecutive_failures_survive_validation():
    clock = SimulatedClock()
    source = FlakySource([scripted()], clock, fail_at=[("v1", 500), ("v1", 505)])
    state = drive(source, 1500)
    traj = state.completed["v1"].to_trajectory()
    assert validate_b(traj).accepted


def test_three_consecutive_failures_fail_validation():
    clock = SimulatedClock()
    source = FlakySource(
        [scripted()], clock, fail_at=[("v1", 500), ("v1", 505), ("v1", 510)]
    )
    state = drive(source, 1500)
    traj = state.completed["v1"].to_trajectory()
    decision = validate_b(traj)
    assert not decision.accepted
    assert "3 consecutive" in decision.reason


def test_final_slot_present_unless_final_tick_fails():
    clock = SimulatedClock()
    source = FlakySource([scripted()], clock, fail_at=[("v1", 1440)])
    state = drive(source, 1500)
    snaps = state.completed["v1"].snapshots
    assert snaps[-1] == (1440, None, None)
    traj = state.completed["v1"].to_trajectory()
    assert not validate_b(traj).accepted


def test_scripted_run_completes_all_videos(tmp_path):
    fixture = [
        scripted("v1", "chA", publish=0),
        scripted("v2", "chA", publish=35, family="linear", seed=9),
        scripted("v3", "chB", publish=100, family="stepped", total=50_000, seed=2),
    ]
    clock = SimulatedClock()
    source = SyntheticSource(fixture, clock)
    result = run(source, 1600, seed=1, store_dir=tmp_path)
    assert result.manifest["n_completed"] == 3
    assert sorted(p.name for p in (tmp_path / "completed").iterdir()) == [
        "v1.jsonl",
        "v2.jsonl",
        "v3.jsonl",
    ]
    assert (tmp_path / "manifest.json").exists()


def test_replay_is_byte_identical(tmp_path):
    fixture = [
        scripted("v1", "chA", publish=0),
        scripted("v2", "chB", publish=45, family="logarithmic", seed=3),
    ]
    stores = []
    for name in ("a", "b"):
        clock = SimulatedClock()
        source = SyntheticSource(fixture, clock, failure_rate=0.02, failure_seed=7)
        run(source, 1600, seed=7, store_dir=tmp_path / name)
        stores.append(tmp_path / name)
    files_a = sorted(p.relative_to(stores[0]) for p in stores[0].rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(stores[1]) for p in stores[1].rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (stores[0] / rel).read_bytes() == (stores[1] / rel).read_bytes()


def test_half_life_matches_bypass_oracle(tmp_path):
    from halflife.synth import default_family_params

    fixture = [scripted("v1", "chA", publish=0, family="sigmoid", total=80_000, seed=12)]
    clock = SimulatedClock()
    source = SyntheticSource(fixture, clock)
    state = drive(source, 1500)
    collected = state.completed["v1"].to_trajectory()
    direct = generate(
        GrowthSpec(
            family="sigmoid",
            total_views=80_000,
            params=default_family_params("sigmoid", 12),
            seed=12,
        ),
        Resolution.FIVE_MINUTE,
    )
    assert half_life(collected).value == half_life(direct).value
    assert [p.views for p in collected.points] == [p.views for p in direct.points]


def test_queues_pairwise_disjoint_every_tick():
    fixture = [scripted(f"v{i}", "chA", publish=5 * i) for i in range(5)]
    clock = SimulatedClock()
    source = SyntheticSource(fixture, clock)
    state = MonitorState(clock=clock)
    state.channels = source.channels
    for minute in range(0, 1500, 5):
        state.clock.minute = minute
        tick(state, source)  # tick itself asserts disjointness
        pend, act, comp = set(state.pending), set(state.active), set(state.completed)
        assert not (pend & act) and not (pend & comp) and not (act & comp)
    assert len(state.completed) == 5


def test_store_roundtrip_preserves_trajectory(tmp_path):
    clock = SimulatedClock()
    source = SyntheticSource([scripted()], clock)
    run(source, 1500, seed=0, store_dir=tmp_path)
    traj = read_store_trajectory(tmp_path / "completed" / "v1.jsonl", "v1")
    assert traj.is_complete
    assert validate_b(traj).accepted


def test_fixture_roundtrip(tmp_path):
    rows = [scripted("v1"), scripted("v2", publish=30, family="linear")]
    write_fixture(tmp_path / "f.jsonl", rows)
    assert read_fixture(tmp_path / "f.jsonl") == rows


def test_store_write_failure_aborts_with_partial_manifest(tmp_path, monkeypatch):
    clock = SimulatedClock()
    source = SyntheticSource([scripted()], clock)

    def broken_write(self, video):
        raise StoreWriteError("disk full")

    monkeypatch.setattr(Store, "write_completed", broken_write)
    with pytest.raises(StoreWriteError):
        run(source, 1500, seed=0, store_dir=tmp_path)
    partial = tmp_path / "manifest.partial.json"
    assert partial.exists()
    doc = json.loads(partial.read_text())
    assert doc["aborted"] is True


def test_duration_must_align_to_ticks():
    clock = SimulatedClock()
    source = SyntheticSource([scripted()], clock)
    with pytest.raises(ValueError):
        run(source, 1443, seed=0)


def test_unaligned_publish_slots_still_on_grid():
    clock = SimulatedClock()
    source = SyntheticSource([scripted(publish=7)], clock)
    state = drive(source, 1500)
    snaps = state.completed["v1"].snapshots
    assert [at for at, _, _ in snaps] == list(range(0, 1441, 5))
    views = [v for _, v, _ in snaps]
    assert all(b >= a for a, b in zip(views, views[1:]))
