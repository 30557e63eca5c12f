"""Deterministic synthetic data in the CIFAR-10 image/label shape.

Ten fixed blocky class patterns mixed with per-image noise: separable
enough to train a small classifier on, byte-exact reproducible from a
seed, and encodable to the standard CIFAR-10 binary layout. Keeps demos
and benchmarks self-contained without shipping the real dataset.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .formats import save_cifar10

_PATTERN_SEED = 20908  # class patterns are fixed regardless of the sample seed


def class_patterns() -> np.ndarray:
    """The ten 32x32x3 class templates (8x8-blocky, values in [0, 1])."""
    prng = np.random.default_rng(_PATTERN_SEED)
    base = prng.uniform(0.0, 1.0, (10, 4, 4, 3))
    return np.repeat(np.repeat(base, 8, axis=1), 8, axis=2).astype(np.float32)


def synthetic_cifar10(n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """n labeled images: 70% class pattern + 30% noise, snapped to the byte grid."""
    rng = np.random.default_rng(seed)
    patterns = class_patterns()
    labels = rng.integers(0, 10, n)
    noise = rng.uniform(0.0, 1.0, (n, 32, 32, 3)).astype(np.float32)
    images = np.clip(0.7 * patterns[labels] + 0.3 * noise, 0.0, 1.0)
    # byte-grid values survive a CIFAR-10 file round trip bit-exactly
    images = (np.rint(images * 255.0) / 255.0).astype(np.float32)
    return images, labels.astype(np.uint8)


def write_synthetic_cifar10(path: str | Path, n: int, seed: int = 0) -> Path:
    images, labels = synthetic_cifar10(n, seed)
    save_cifar10(path, images, labels)
    return Path(path)
