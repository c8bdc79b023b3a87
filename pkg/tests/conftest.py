"""Shared builders for model-facing tests."""

import numpy as np
import pytest

from halflife.features import (
    RuleBasedAnnotator,
    bin_targets,
    build_matrix,
    country_avg_half_life,
    default_schema,
)
from halflife.learn import Dataset, SplitSpec, split_indices
from halflife.synth import SYNTH_COLLECTION_YEAR, synth_features


def build_synth_dataset(n, seed, noise_hours=None, split_seed=None):
    """Run the full feature pipeline on planted metadata and return a Dataset.

    Mirrors the CLI flow: bin targets on the whole pool, draw the stratified
    split, fit country averages on the training side only, then assemble the
    matrix for every retained video.
    """
    kwargs = {} if noise_hours is None else {"noise_hours": noise_hours}
    data = synth_features(n, seed=seed, **kwargs)
    binres = bin_targets(data.half_lives)
    retained = [v for v in data.videos if v.video_id in binres.labels]
    labels = np.array([binres.labels[v.video_id] for v in retained], dtype=int)

    split_seed = seed if split_seed is None else split_seed
    train_idx, _ = split_indices(labels, SplitSpec(seed=split_seed))
    train_videos = [retained[i] for i in train_idx]
    avgs = country_avg_half_life(train_videos, data.half_lives)

    annotator = RuleBasedAnnotator()
    annotations = {v.video_id: annotator.annotate(v.title) for v in retained}
    built = build_matrix(
        retained,
        data.channels,
        annotations,
        avgs,
        labels=binres.labels,
        collection_year=SYNTH_COLLECTION_YEAR,
    )
    assert not built.issues
    channel_of = {v.video_id: v.channel_id for v in retained}
    ds = Dataset.from_vectors(
        built.vectors,
        schema=built.schema,
        channel_ids=channel_of,
        half_lives=data.half_lives,
    )
    return ds, data


@pytest.fixture(scope="session")
def synth_dataset_small():
    """One modest planted dataset reused across model tests."""
    ds, data = build_synth_dataset(1200, seed=101)
    return ds, data
