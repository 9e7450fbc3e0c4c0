import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ictmseg import ImageField, Partition


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))


def make_image(arr) -> ImageField:
    return ImageField(data=np.asarray(arr, dtype=np.float64))


def random_image(rng, h, w, c=1, lo=0.0, hi=255.0) -> ImageField:
    return make_image(rng.uniform(lo, hi, size=(h, w, c)))


def random_partition(rng, h, w, n) -> Partition:
    """Random labels with every phase guaranteed nonempty."""
    labels = rng.integers(0, n, size=(h, w))
    flat = labels.ravel()
    slots = rng.choice(h * w, size=n, replace=False)
    for phase, slot in enumerate(slots):
        flat[slot] = phase
    return Partition(labels=labels.astype(np.int32), phases=n)
