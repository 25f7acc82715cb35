from __future__ import annotations

import itertools
import json

import numpy as np
import pytest

from cncc.dataset import (
    FORMAT,
    MAX_CLASSES,
    export_dataset,
    gen_synthetic_dataset,
    load_dataset,
    spatial_template,
    temporal_template,
)


def test_deterministic():
    a = gen_synthetic_dataset(4, 30, 3, 0.2)
    b = gen_synthetic_dataset(4, 30, 3, 0.2)
    for x, y in zip(a, b):
        assert np.array_equal(x.spatial, y.spatial) and np.array_equal(x.temporal, y.temporal)
        assert x.label == y.label


def test_noise_free_equals_templates():
    for s in gen_synthetic_dataset(0, 12, 4, 0.0):
        assert np.array_equal(s.spatial, spatial_template(s.label))
        assert np.array_equal(s.temporal, temporal_template(s.label))


def test_balanced():
    labels = [s.label for s in gen_synthetic_dataset(0, 200, 4, 0.1)]
    assert np.bincount(labels).tolist() == [50, 50, 50, 50]


def test_templates_distinct():
    flat = [np.concatenate([spatial_template(c).ravel(), temporal_template(c)]) for c in range(MAX_CLASSES)]
    assert min(np.linalg.norm(a - b) for a, b in itertools.combinations(flat, 2)) > 0


@pytest.mark.parametrize("args", [(0, 10, 1, 0.1), (0, 2, 3, 0.1), (0, 10, 2, -1.0), (0, 100, MAX_CLASSES + 1, 0.1)])
def test_preconditions(args):
    with pytest.raises(ValueError):
        gen_synthetic_dataset(*args)


def test_export_roundtrip(tmp_path):
    data = gen_synthetic_dataset(1, 6, 2, 0.3)
    export_dataset(data, tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["format"] == FORMAT and manifest["count"] == 6
    raw = (tmp_path / "sample_00000.bin").read_bytes()
    assert len(raw) == 4 * 8 + (64 + 32) * 8
    assert np.frombuffer(raw[:32], "<i8").tolist() == [8, 8, 32, 0]
    back = load_dataset(tmp_path)
    for x, y in zip(data, back):
        assert np.array_equal(x.spatial, y.spatial) and np.array_equal(x.temporal, y.temporal)
        assert x.label == y.label


def test_load_rejects_truncated(tmp_path):
    export_dataset(gen_synthetic_dataset(1, 2, 2, 0.3), tmp_path)
    path = tmp_path / "sample_00001.bin"
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError):
        load_dataset(tmp_path)
