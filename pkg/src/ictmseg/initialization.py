"""Edge-driven construction of an initial partition.

The pipeline scores every pixel with an intensity-adaptive graph Laplacian
on the periodic 8-neighborhood, keeps pixels whose response clears a
threshold, clusters those edge pixels by channel vector, prunes clusters
with a diagonal-connectivity filter, and finally assigns every remaining
pixel to the nearest cluster centroid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, InitializationError
from .image import ImageField, Partition

# Periodic 8-neighborhood offsets, row-major order around the pixel.
_NEIGHBOR_OFFSETS = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, 1), (1, 1), (1, 0),
    (1, -1), (0, -1),
)

_KMEANS_MAX_ROUNDS = 100


@dataclass(frozen=True)
class IglimConfig:
    """Parameters of the edge-based initializer."""

    phases: int = 2
    lam: float = 0.003
    alpha: float = 1.0
    denoise_rounds: int = 2

    def __post_init__(self):
        if self.phases < 2:
            raise ContractError(f"initializer needs >= 2 phases, got {self.phases}")
        if self.lam < 0:
            raise ContractError(f"weight sharpness must be >= 0, got {self.lam}")
        if self.alpha < 0:
            raise ContractError(f"edge threshold must be >= 0, got {self.alpha}")
        if self.denoise_rounds < 0:
            raise ContractError(
                f"denoise rounds must be >= 0, got {self.denoise_rounds}"
            )


@dataclass(frozen=True)
class EdgeSets:
    """Disjoint pixel sets with one channel-space centroid per set."""

    masks: np.ndarray  # (n, H, W) bool
    centroids: np.ndarray  # (n, C) float64

    def __post_init__(self):
        masks = np.asarray(self.masks, dtype=bool)
        cents = np.asarray(self.centroids, dtype=np.float64)
        if masks.ndim != 3 or cents.ndim != 2 or masks.shape[0] != cents.shape[0]:
            raise ContractError("edge sets need (n,H,W) masks and (n,C) centroids")
        if masks.sum(axis=0).max(initial=0) > 1:
            raise ContractError("edge sets must be disjoint")
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "centroids", cents)

    @property
    def count(self) -> int:
        return self.masks.shape[0]


def _neighbor_shift(arr: np.ndarray, di: int, dj: int) -> np.ndarray:
    """Value of arr at (i+di, j+dj) with periodic wrap, seen from (i, j)."""
    return np.roll(arr, shift=(-di, -dj), axis=(0, 1))


def _require_interior(img: ImageField):
    if img.height < 3 or img.width < 3:
        raise ContractError(
            f"the graph Laplacian needs an interior: image is {img.height}x{img.width}"
        )


def laplacian_weights(img: ImageField, lam: float) -> np.ndarray:
    """Per-pixel neighbor weights, shape (8, H, W).

    Weight k is proportional to sum_c exp(lam * (I_c - I_c^k)^2) over
    channels c, normalized across the 8 neighbors. The exponent is shifted
    by its per-pixel maximum before exponentiation so large intensity jumps
    cannot overflow. Weights are strictly positive and sum to 1.
    """
    _require_interior(img)
    data = img.data
    sq = [
        lam * (_neighbor_shift(data, di, dj) - data) ** 2
        for di, dj in _NEIGHBOR_OFFSETS
    ]
    peak = np.max([s.max(axis=2) for s in sq], axis=0)
    numer = np.stack([np.exp(s - peak[:, :, None]).sum(axis=2) for s in sq])
    return numer / numer.sum(axis=0)


def graph_laplacian(img: ImageField, lam: float) -> np.ndarray:
    """Weighted 8-neighbor Laplacian response, shape (H, W).

    L(x) = sum_k c_k(x) * sum_c (I_c^k(x) - I_c(x)); with lam = 0 the weights
    are uniform and L reduces to the plain (mean-of-neighbors - center)
    Laplacian of the channel sum.
    """
    weights = laplacian_weights(img, lam)
    data = img.data
    out = np.zeros(img.shape, dtype=np.float64)
    for k, (di, dj) in enumerate(_NEIGHBOR_OFFSETS):
        out += weights[k] * (_neighbor_shift(data, di, dj) - data).sum(axis=2)
    return out


def threshold_edges(laplacian: np.ndarray, alpha: float) -> np.ndarray:
    """Boolean mask of pixels with |L| >= alpha."""
    if alpha < 0:
        raise ContractError(f"edge threshold must be >= 0, got {alpha}")
    return np.abs(np.asarray(laplacian)) >= alpha


def split_by_sign(laplacian: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Two-phase edge split: (L > alpha, L < -alpha)."""
    if alpha < 0:
        raise ContractError(f"edge threshold must be >= 0, got {alpha}")
    lap = np.asarray(laplacian)
    return lap > alpha, lap < -alpha


def kmeans_split(points: np.ndarray, img: ImageField, n: int, seed: int) -> EdgeSets:
    """Cluster the masked pixels' channel vectors into n sets.

    Seeding follows the k-means++ rule with a counter-based generator so the
    result is reproducible across platforms; Lloyd iterations run until the
    assignment stabilizes or 100 rounds elapse. Sets come back ordered by
    ascending centroid mean intensity.
    """
    mask = np.asarray(points, dtype=bool)
    if mask.shape != img.shape:
        raise ContractError("point mask and image differ in shape")
    pts = img.data[mask]
    if len(pts) < n:
        raise InitializationError(
            f"only {len(pts)} edge points for {n} phases; lower alpha"
        )
    if len(np.unique(pts, axis=0)) < n:
        raise InitializationError(
            f"edge points span fewer than {n} distinct intensities"
        )

    rng = np.random.Generator(np.random.Philox(seed))
    centers = _kmeans_pp_seed(pts, n, rng)

    assign = np.zeros(len(pts), dtype=np.int64)
    for _ in range(_KMEANS_MAX_ROUNDS):
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = d2.argmin(axis=1)
        for j in range(n):
            sel = new_assign == j
            if sel.any():
                centers[j] = pts[sel].mean(axis=0)
        if np.array_equal(new_assign, assign):
            assign = new_assign
            break
        assign = new_assign

    order = np.argsort(centers.mean(axis=1), kind="stable")
    centers = centers[order]
    relabel = np.empty(n, dtype=np.int64)
    relabel[order] = np.arange(n)
    assign = relabel[assign]

    masks = np.zeros((n,) + img.shape, dtype=bool)
    rows, cols = np.nonzero(mask)
    for j in range(n):
        sel = assign == j
        masks[j, rows[sel], cols[sel]] = True
    return EdgeSets(masks=masks, centroids=centers)


def _kmeans_pp_seed(pts: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    centers = np.empty((n, pts.shape[1]), dtype=np.float64)
    centers[0] = pts[rng.integers(len(pts))]
    d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for j in range(1, n):
        total = d2.sum()
        if total <= 0.0:
            raise InitializationError(
                "cannot place distinct cluster seeds: remaining points coincide"
            )
        idx = rng.choice(len(pts), p=d2 / total)
        centers[j] = pts[idx]
        d2 = np.minimum(d2, ((pts - centers[j]) ** 2).sum(axis=1))
    return centers


def _diagonal_keep(mask: np.ndarray) -> np.ndarray:
    """One synchronous sweep of the diagonal-connectivity filter.

    A member pixel survives when both corner groups of one diagonal contain
    a member: ({up-left, left, up} and {down-right, right, down}) or
    ({up-right, right, up} and {down-left, left, down}). Borders wrap.
    """
    up = np.roll(mask, 1, axis=0)
    down = np.roll(mask, -1, axis=0)
    left = np.roll(mask, 1, axis=1)
    right = np.roll(mask, -1, axis=1)
    ul = np.roll(mask, (1, 1), axis=(0, 1))
    ur = np.roll(mask, (1, -1), axis=(0, 1))
    dl = np.roll(mask, (-1, 1), axis=(0, 1))
    dr = np.roll(mask, (-1, -1), axis=(0, 1))
    s1 = ul | left | up
    s2 = ur | right | up
    s3 = dl | left | down
    s4 = dr | right | down
    return mask & ((s1 & s4) | (s2 & s3))


def denoise_diagonal(sets: EdgeSets, rounds: int) -> EdgeSets:
    """Apply the diagonal-connectivity filter to every set independently."""
    if rounds < 0:
        raise ContractError(f"denoise rounds must be >= 0, got {rounds}")
    masks = sets.masks.copy()
    for _ in range(rounds):
        for j in range(sets.count):
            masks[j] = _diagonal_keep(masks[j])
    return EdgeSets(masks=masks, centroids=sets.centroids)


def complete_partition(sets: EdgeSets, img: ImageField) -> Partition:
    """Extend the edge sets to a full partition by nearest centroid.

    Pixels already in a set keep that set's phase; every other pixel takes
    the phase of the closest centroid in channel space, ties resolving to
    the lowest phase index. Every set must be nonempty.
    """
    n = sets.count
    if sets.masks.shape[1:] != img.shape:
        raise ContractError("edge sets and image differ in shape")
    for j in range(n):
        if not sets.masks[j].any():
            raise InitializationError(f"edge set {j} is empty; cannot complete")

    d2 = ((img.data[:, :, None, :] - sets.centroids[None, None, :, :]) ** 2).sum(axis=3)
    labels = d2.argmin(axis=2).astype(np.int32)
    for j in range(n):
        labels[sets.masks[j]] = j
    return Partition(labels=labels, phases=n)


def multi_iglim(img: ImageField, cfg: IglimConfig, seed: int = 0) -> Partition:
    """Full multi-phase initialization: Laplacian, threshold, cluster,
    denoise, complete."""
    lap = graph_laplacian(img, cfg.lam)
    edges = threshold_edges(lap, cfg.alpha)
    if not edges.any():
        raise InitializationError("no edge points above alpha")
    sets = kmeans_split(edges, img, cfg.phases, seed)
    sets = denoise_diagonal(sets, cfg.denoise_rounds)
    return complete_partition(sets, img)


def binary_iglim(img: ImageField, cfg: IglimConfig) -> Partition:
    """Two-phase initialization splitting the Laplacian response by sign.

    Uses the same denoise/complete pipeline as the multi-phase path; the two
    sets are ordered by ascending centroid mean so phase numbering is
    deterministic.
    """
    if cfg.phases != 2:
        raise ContractError(f"the sign split yields exactly 2 phases, got {cfg.phases}")
    lap = graph_laplacian(img, cfg.lam)
    pos, neg = split_by_sign(lap, cfg.alpha)
    if not pos.any() or not neg.any():
        raise InitializationError("no edge points above alpha on both sides")
    cents = np.stack([img.data[pos].mean(axis=0), img.data[neg].mean(axis=0)])
    masks = np.stack([pos, neg])
    if cents[1].mean() < cents[0].mean():
        cents = cents[::-1].copy()
        masks = masks[::-1].copy()
    sets = denoise_diagonal(EdgeSets(masks=masks, centroids=cents), cfg.denoise_rounds)
    return complete_partition(sets, img)
