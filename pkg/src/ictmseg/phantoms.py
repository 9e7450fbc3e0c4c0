"""Synthetic test images with exact ground truth.

Three layouts are provided: two piecewise-constant scenes with 3 or 4
phases (background plus disk/rectangle/ring) and a two-phase scene whose
intensities are modulated by a smooth multiplicative bias between 0.5 and
1.5. A pixel belongs to a shape iff its center lies inside the analytic
region, so the truth partition is exact by construction. The seed jitters
the shape centers slightly; the realized geometry is recorded in the
returned description.

Grayscale phase values are evenly spaced on [0, 255]. The RGB palette uses
vertices of a scaled color tetrahedron (mutually equidistant at 60*sqrt(2)
per pair) rather than saturated primaries: saturated primaries sit so far
apart that Gaussian noise up to variance 500 never flips a pixel's nearest
color, which would make noise-robustness comparisons vacuous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .image import ImageField, Partition

PHANTOM_KINDS = ("shapes3", "shapes4", "inhomog2")

PHASES_BY_KIND = {"shapes3": 3, "shapes4": 4, "inhomog2": 2}

# Mutually equidistant RGB phase colors (pairwise distance 60*sqrt(2)).
_RGB_TETRA = (
    (0.0, 0.0, 0.0),
    (60.0, 60.0, 0.0),
    (60.0, 0.0, 60.0),
    (0.0, 60.0, 60.0),
)

# Two-phase palette for the bias scene; factor-2 contrast, bias-safe range.
_INHOMOG_GRAY = (85.0, 170.0)
_INHOMOG_RGB = ((56.0, 28.0, 84.0), (112.0, 56.0, 168.0))

_JITTER_FRACTION = 0.02


@dataclass(frozen=True)
class Phantom:
    """A synthetic image together with its exact truth partition."""

    image: ImageField
    truth: Partition
    kind: str
    description: dict


def make_phantom(kind: str, size: int, seed: int = 0, rgb: bool = False) -> Phantom:
    """Build a phantom of the given kind on a size x size grid."""
    if kind not in PHANTOM_KINDS:
        raise ContractError(f"unknown phantom kind: {kind!r}")
    if size < 64:
        raise ContractError(f"phantom size must be >= 64, got {size}")

    rng = np.random.Generator(np.random.Philox(seed))
    jitter = lambda: float(rng.uniform(-_JITTER_FRACTION, _JITTER_FRACTION) * size)

    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    labels = np.zeros((size, size), dtype=np.int32)
    shapes: list[dict] = []

    disk_c = (0.33 * size + jitter(), 0.30 * size + jitter())
    disk_r = 0.16 * size
    inside = (rows - disk_c[0]) ** 2 + (cols - disk_c[1]) ** 2 <= disk_r**2
    labels[inside] = 1
    shapes.append({"shape": "disk", "phase": 1, "center": disk_c, "radius": disk_r})

    if kind in ("shapes3", "shapes4"):
        r0 = 0.58 * size + jitter()
        c0 = 0.12 * size + jitter()
        r1, c1 = r0 + 0.24 * size, c0 + 0.32 * size
        inside = (rows >= r0) & (rows < r1) & (cols >= c0) & (cols < c1)
        labels[inside] = 2
        shapes.append(
            {"shape": "rectangle", "phase": 2, "rows": (r0, r1), "cols": (c0, c1)}
        )

    if kind == "shapes4":
        ring_c = (0.35 * size + jitter(), 0.70 * size + jitter())
        r_in, r_out = 0.11 * size, 0.17 * size
        d2 = (rows - ring_c[0]) ** 2 + (cols - ring_c[1]) ** 2
        inside = (d2 >= r_in**2) & (d2 <= r_out**2)
        labels[inside] = 3
        shapes.append(
            {"shape": "ring", "phase": 3, "center": ring_c, "radii": (r_in, r_out)}
        )

    n = PHASES_BY_KIND[kind]
    if kind == "inhomog2":
        palette = _INHOMOG_RGB if rgb else tuple((v,) for v in _INHOMOG_GRAY)
    elif rgb:
        palette = _RGB_TETRA[:n]
    else:
        palette = tuple((v,) for v in np.linspace(0.0, 255.0, n))

    colors = np.asarray(palette, dtype=np.float64)
    data = colors[labels]

    description = {
        "kind": kind,
        "size": size,
        "seed": seed,
        "shapes": shapes,
        "palette": colors.tolist(),
    }
    if kind == "inhomog2":
        bias = 1.0 + 0.5 * np.sin(2.0 * np.pi * rows / size) * np.sin(2.0 * np.pi * cols / size)
        data = data * bias[:, :, None]
        description["bias"] = "1 + 0.5 sin(2 pi i/H) sin(2 pi j/W)"

    return Phantom(
        image=ImageField(data),
        truth=Partition(labels=labels, phases=n),
        kind=kind,
        description=description,
    )


def add_gaussian_noise(img: ImageField, variance: float, seed: int) -> ImageField:
    """Add iid per-channel Gaussian noise, then clamp to [0, 255].

    Noise is drawn from a counter-based generator keyed by the seed so the
    same call reproduces the same field on any platform.
    """
    if variance < 0:
        raise ContractError(f"noise variance must be >= 0, got {variance}")
    rng = np.random.Generator(np.random.Philox(seed))
    noise = rng.normal(0.0, np.sqrt(variance), size=img.data.shape)
    return ImageField(np.clip(img.data + noise, 0.0, 255.0))
