"""Synthetic cross-modal dataset and its on-disk format.

Each class owns a spatial template (a 2×2 block of ones on an 8×8 grid) and a
temporal template (a unit sine tone over 32 steps, frequency 6 to 15). Samples are a template
plus Gaussian noise; labels cycle ``0, 1, ..., K-1`` so classes are balanced.

Export layout: a directory holding ``manifest.json`` and one
``sample_NNNNN.bin`` per sample. Every record is little-endian::

    int64 H, int64 W, int64 T, int64 label (-1 when unlabeled)
    float64 spatial[H*W]   (row-major)
    float64 temporal[T]
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .stages import MediaSample

GRID = 8
TRACK = 32
FORMAT = "cncc-sample-v1"

# Non-overlapping block corners first (spread out), then overlapping ones.
_CORNERS = [(1, 1), (5, 5), (1, 5), (5, 1), (3, 3), (0, 3), (3, 0), (6, 3), (3, 6),
            (0, 0), (6, 6), (0, 6), (6, 0)]
_CORNERS += [(r, c) for r in range(GRID - 1) for c in range(GRID - 1) if (r, c) not in _CORNERS]
MAX_CLASSES = len(_CORNERS)


def spatial_template(label: int) -> np.ndarray:
    r, c = _CORNERS[label]
    out = np.zeros((GRID, GRID))
    out[r:r + 2, c:c + 2] = 1.0
    return out


def temporal_template(label: int) -> np.ndarray:
    # High enough that a 3-wide local-mean contrast keeps most of the tone.
    freq = 6 + (label % 10)
    return np.sin(2 * np.pi * freq * np.arange(TRACK) / TRACK)


def gen_synthetic_dataset(seed: int, n_samples: int, n_classes: int, noise: float) -> list[MediaSample]:
    if not 2 <= n_classes <= MAX_CLASSES:
        raise ValueError(f"n_classes must lie in [2, {MAX_CLASSES}]")
    if n_samples < n_classes:
        raise ValueError("need at least one sample per class")
    if noise < 0:
        raise ValueError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n_samples):
        label = i % n_classes
        spatial = spatial_template(label) + noise * rng.standard_normal((GRID, GRID))
        temporal = temporal_template(label) + noise * rng.standard_normal(TRACK)
        samples.append(MediaSample(spatial, temporal, label))
    return samples


def export_dataset(samples: list[MediaSample], directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for i, s in enumerate(samples):
        h, w, t = s.shape
        name = f"sample_{i:05d}.bin"
        header = np.array([h, w, t, -1 if s.label is None else s.label], dtype="<i8")
        body = np.concatenate([s.spatial.ravel(), s.temporal]).astype("<f8")
        (directory / name).write_bytes(header.tobytes() + body.tobytes())
        files.append({"file": name, "label": s.label, "H": h, "W": w, "T": t})
    manifest = {"format": FORMAT, "count": len(samples), "samples": files}
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return directory


def load_dataset(directory: str | Path) -> list[MediaSample]:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    if manifest.get("format") != FORMAT:
        raise ValueError(f"unsupported dataset format {manifest.get('format')!r}")
    samples = []
    for entry in manifest["samples"]:
        raw = (directory / entry["file"]).read_bytes()
        h, w, t, label = np.frombuffer(raw[:32], dtype="<i8")
        body = np.frombuffer(raw[32:], dtype="<f8")
        if body.size != h * w + t:
            raise ValueError(f"{entry['file']}: expected {h * w + t} values, found {body.size}")
        samples.append(MediaSample(body[: h * w].reshape(h, w).copy(), body[h * w:].copy(),
                                   None if label < 0 else int(label)))
    return samples
