"""Independent brute-force reference implementations.

Everything here is written as literal loops over the defining sums, with
no code shared with the package beyond numpy itself, so the fast paths are
checked against a genuinely separate computation.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def gaussian_kernel_2d(h: int, w: int, sigma: float, normalized: bool) -> np.ndarray:
    """Sampled periodic Gaussian weights on an h-by-w torus.

    The 1D sample at offset k is exp(-d^2 / (2 sigma)) / sqrt(2 pi sigma)
    with d the wrapped distance min(k, n-k); the 2D kernel is the outer
    product, optionally normalized to unit total mass.
    """
    def column(n: int) -> np.ndarray:
        out = np.empty(n)
        for k in range(n):
            d = min(k, n - k)
            out[k] = math.exp(-(d * d) / (2.0 * sigma)) / math.sqrt(2.0 * math.pi * sigma)
        return out

    kern = np.outer(column(h), column(w))
    if normalized:
        kern = kern / kern.sum()
    return kern


def box_kernel_2d(h: int, w: int, radius: int) -> np.ndarray:
    """Unnormalized box weights on the torus, with aliasing multiplicity."""
    kern = np.zeros((h, w))
    for a in range(-radius, radius + 1):
        for b in range(-radius, radius + 1):
            kern[a % h, b % w] += 1.0
    return kern


def conv_periodic_brute(field: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """(K*u)[i,j] = sum_{k,l} K[k,l] u[(i-k) mod H, (j-l) mod W]."""
    h, w = field.shape
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for k in range(h):
                for l in range(w):
                    acc += kernel[k, l] * field[(i - k) % h, (j - l) % w]
            out[i, j] = acc
    return out


def srgb_to_lab_scalar(r: float, g: float, b: float) -> tuple[float, float, float]:
    """One sRGB (0-255) triple through the D65 CIELAB pipeline, step by step."""

    def inverse_compand(c: float) -> float:
        c = c / 255.0
        if c <= 0.04045:
            return c / 12.92
        return ((c + 0.055) / 1.055) ** 2.4

    rl, gl, bl = inverse_compand(r), inverse_compand(g), inverse_compand(b)
    x = (0.412453 * rl + 0.357580 * gl + 0.180423 * bl) * 100.0
    y = (0.212671 * rl + 0.715160 * gl + 0.072169 * bl) * 100.0
    z = (0.019334 * rl + 0.119193 * gl + 0.950227 * bl) * 100.0

    def f(t: float) -> float:
        eps = (6.0 / 29.0) ** 3
        if t > eps:
            return t ** (1.0 / 3.0)
        return t / (3.0 * (6.0 / 29.0) ** 2) + 4.0 / 29.0

    fx, fy, fz = f(x / 95.047), f(y / 100.0), f(z / 108.883)
    return 116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)


def laplacian_lambda0_brute(data: np.ndarray) -> np.ndarray:
    """Plain 8-neighbor graph Laplacian with equal weights 1/8, periodic."""
    h, w, c = data.shape
    offsets = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for di, dj in offsets:
                ni, nj = (i + di) % h, (j + dj) % w
                for ch in range(c):
                    acc += data[ni, nj, ch] - data[i, j, ch]
            out[i, j] = acc / 8.0
    return out


def lif_energy_brute(
    data: np.ndarray,
    labels: np.ndarray,
    fields: np.ndarray,
    sigma: float,
    lambdas,
) -> float:
    """E = sum_i lam_i sum_y u_i(y) sum_x G(x-y) (I(y) - f_i(x))^2.

    ``fields`` has shape (n, H, W, C); G is the normalized periodic
    Gaussian. Quadratic loops over every (x, y) pair.
    """
    h, w, c = data.shape
    n = fields.shape[0]
    kern = gaussian_kernel_2d(h, w, sigma, normalized=True)
    lams = [lambdas] * n if np.isscalar(lambdas) else list(lambdas)
    total = 0.0
    for i in range(n):
        for yi in range(h):
            for yj in range(w):
                if labels[yi, yj] != i:
                    continue
                acc = 0.0
                for xi in range(h):
                    for xj in range(w):
                        g = kern[(xi - yi) % h, (xj - yj) % w]
                        for ch in range(c):
                            diff = data[yi, yj, ch] - fields[i, xi, xj, ch]
                            acc += g * diff * diff
                total += lams[i] * acc
    return total


def lif_perturbation_delta(
    data: np.ndarray,
    labels: np.ndarray,
    fields: np.ndarray,
    sigma: float,
    phase: int,
    x: tuple[int, int],
    channel: int,
    delta: float,
) -> float:
    """Exact energy change from f_i(x, channel) += delta.

    Only the terms containing f_i(x) move, so the difference is a single
    sum over y; this sidesteps the cancellation error of subtracting two
    full energies near a stationary point.
    """
    h, w, _ = data.shape
    kern = gaussian_kernel_2d(h, w, sigma, normalized=True)
    xi, xj = x
    f_old = fields[phase, xi, xj, channel]
    change = 0.0
    for yi in range(h):
        for yj in range(w):
            if labels[yi, yj] != phase:
                continue
            g = kern[(xi - yi) % h, (xj - yj) % w]
            r = data[yi, yj, channel] - f_old
            change += g * ((r - delta) ** 2 - r**2)
    return change


def lvf_window_brute(data: np.ndarray, means: np.ndarray, radius: int) -> np.ndarray:
    """sum_{y in B_r(x)} sum_c (I(y,c) - m(x,c))^2 with periodic windows.

    ``means`` is (H, W, C): the phase mean as seen from each window center
    (a constant mean is expanded by the caller).
    """
    h, w, c = data.shape
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for di in range(-radius, radius + 1):
                for dj in range(-radius, radius + 1):
                    ni, nj = (i + di) % h, (j + dj) % w
                    for ch in range(c):
                        diff = data[ni, nj, ch] - means[i, j, ch]
                        acc += diff * diff
            out[i, j] = acc
    return out


def kmeans_best_sse(points: np.ndarray, n: int) -> float:
    """Minimal within-cluster sum of squares over every assignment.

    Exponential enumeration; callers keep len(points) small. Assignments
    that leave a cluster empty are skipped.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    best = math.inf
    for assign in itertools.product(range(n), repeat=len(pts)):
        labels = np.asarray(assign)
        if len(set(assign)) < n:
            continue
        sse = 0.0
        for j in range(n):
            members = pts[labels == j]
            sse += ((members - members.mean(axis=0)) ** 2).sum()
        best = min(best, sse)
    return best


def sse_of_sets(points: np.ndarray, masks_values: list[np.ndarray]) -> float:
    """Within-cluster sum of squares of an explicit clustering."""
    total = 0.0
    for vals in masks_values:
        vals = np.asarray(vals, dtype=np.float64)
        if vals.ndim == 1:
            vals = vals[:, None]
        if len(vals):
            total += ((vals - vals.mean(axis=0)) ** 2).sum()
    return total


def best_accuracy_by_permutation(result_labels: np.ndarray, truth_labels: np.ndarray, n: int) -> float:
    """Pixel accuracy maximized over every phase permutation."""
    best = 0.0
    for perm in itertools.permutations(range(n)):
        mapped = np.asarray(perm)[result_labels]
        best = max(best, float((mapped == truth_labels).mean()))
    return best
