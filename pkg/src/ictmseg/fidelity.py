"""Region models: fitting parameters, fidelity fields and the local
variance force.

Two model kinds are supported. The piecewise-constant model ("cv") fits one
constant per phase and channel; the local fitting model ("lif") fits a
smooth per-pixel field obtained as a Gaussian-weighted average of the
phase's intensities. The local variance force adds, for every pixel, the
summed squared deviation of a (2r+1)^2 window from the phase's mean
estimate at the window center.

Model state remembers the partition generation it was computed from;
consumers that mix a state with a different partition get a ContractError
rather than silently stale numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .image import ImageField, Partition
from .kernels import KernelSpec, box_window_area, convolve_periodic

# Below this mass the Gaussian-weighted denominator is considered empty and
# the local fit falls back to the phase's global mean.
_LIF_DENOMINATOR_FLOOR = 1e-8


@dataclass(frozen=True)
class ModelConfig:
    """Fidelity model selection and weights."""

    kind: str = "cv"
    lambdas: tuple[float, ...] | float = 1.0
    sigma: float = 10.0
    lvf_weight: float = 0.01
    lvf_radius: int = 2
    mean_estimator: str = "global_mean"

    def __post_init__(self):
        if self.kind not in ("cv", "lif"):
            raise ContractError(f"unknown model kind: {self.kind!r}")
        if self.mean_estimator not in ("global_mean", "local_gaussian_mean"):
            raise ContractError(f"unknown mean estimator: {self.mean_estimator!r}")
        if not self.sigma > 0:
            raise ContractError(f"fitting kernel width must be > 0, got {self.sigma}")
        if self.lvf_weight < 0:
            raise ContractError(f"variance force weight must be >= 0, got {self.lvf_weight}")
        if self.lvf_radius < 1:
            raise ContractError(f"variance window radius must be >= 1, got {self.lvf_radius}")
        lams = self.lambdas if isinstance(self.lambdas, tuple) else (float(self.lambdas),)
        if any(not lam > 0 for lam in lams):
            raise ContractError("fidelity weights must be > 0")
        object.__setattr__(self, "lambdas", tuple(float(x) for x in lams))

    def lam(self, phase: int) -> float:
        """Per-phase fidelity weight; a single value broadcasts."""
        if len(self.lambdas) == 1:
            return self.lambdas[0]
        return self.lambdas[phase]

    def check_phases(self, n: int):
        if len(self.lambdas) not in (1, n):
            raise ContractError(
                f"{len(self.lambdas)} fidelity weights for {n} phases"
            )


@dataclass(frozen=True)
class ModelState:
    """Fitted parameters for one partition.

    ``theta`` is (n, C) for the constant model and (n, H, W, C) for the
    local fitting model; ``means`` has the analogous shape for whichever
    mean estimator is configured.
    """

    kind: str
    theta: np.ndarray
    means: np.ndarray
    generation: int

    def check_fresh(self, partition: Partition):
        if partition.generation != self.generation:
            raise ContractError(
                "model state is stale: it was fitted to a different partition"
            )


def update_theta_cv(img: ImageField, partition: Partition, prev: np.ndarray | None = None) -> np.ndarray:
    """Per-phase channel means, shape (n, C).

    An empty phase keeps its previous constant; with no previous state it
    takes the global image mean.
    """
    _check_pair(img, partition)
    n = partition.phases
    data = img.data
    global_mean = data.reshape(-1, img.channels).mean(axis=0)
    theta = np.empty((n, img.channels), dtype=np.float64)
    for i in range(n):
        sel = partition.labels == i
        count = int(sel.sum())
        if count == 0:
            theta[i] = prev[i] if prev is not None else global_mean
        else:
            theta[i] = data[sel].mean(axis=0)
    return theta


def update_theta_lif(img: ImageField, partition: Partition, sigma: float) -> np.ndarray:
    """Gaussian-weighted local fitting fields, shape (n, H, W, C).

    f_i = G_sigma*(u_i I) / G_sigma*u_i per channel; wherever the
    denominator drops below 1e-8 the field falls back to the phase's global
    mean constant.
    """
    _check_pair(img, partition)
    n = partition.phases
    spec = KernelSpec.gaussian(sigma, normalized=True)
    fallback = update_theta_cv(img, partition)
    fields = np.empty((n, img.height, img.width, img.channels), dtype=np.float64)
    for i in range(n):
        u = partition.indicator(i)
        den = convolve_periodic(u, spec)
        thin = den < _LIF_DENOMINATOR_FLOOR
        safe_den = np.where(thin, 1.0, den)
        for c in range(img.channels):
            num = convolve_periodic(u * img.data[:, :, c], spec)
            fields[i, :, :, c] = np.where(thin, fallback[i, c], num / safe_den)
    return fields


def estimate_means(
    img: ImageField,
    partition: Partition,
    estimator: str,
    sigma: float,
    prev: np.ndarray | None = None,
) -> np.ndarray:
    """Mean estimate per phase for the variance force.

    The global estimator is the constant-model update, bit for bit; the
    local estimator is the Gaussian fitting-field update.
    """
    if estimator == "global_mean":
        return update_theta_cv(img, partition, prev)
    if estimator == "local_gaussian_mean":
        return update_theta_lif(img, partition, sigma)
    raise ContractError(f"unknown mean estimator: {estimator!r}")


def update_model(
    img: ImageField,
    partition: Partition,
    cfg: ModelConfig,
    prev: ModelState | None = None,
) -> ModelState:
    """Fit theta, then the mean estimate, for one partition."""
    cfg.check_phases(partition.phases)
    prev_theta = prev.theta if prev is not None and cfg.kind == "cv" else None
    if cfg.kind == "cv":
        theta = update_theta_cv(img, partition, prev_theta)
    else:
        theta = update_theta_lif(img, partition, cfg.sigma)

    if cfg.kind == "cv" and cfg.mean_estimator == "global_mean":
        means = theta
    elif cfg.kind == "lif" and cfg.mean_estimator == "local_gaussian_mean":
        means = theta
    else:
        prev_means = prev.means if prev is not None and cfg.mean_estimator == "global_mean" else None
        means = estimate_means(img, partition, cfg.mean_estimator, cfg.sigma, prev_means)
    return ModelState(kind=cfg.kind, theta=theta, means=means, generation=partition.generation)


def fidelity_field(img: ImageField, state: ModelState, cfg: ModelConfig, phase: int) -> np.ndarray:
    """Pointwise fidelity cost of assigning ``phase``, shape (H, W).

    Constant model: sum_c (I_c - c_ic)^2. Local fitting model, expanded so
    only convolutions of the fitting field are needed:
    sum_c [ I_c^2 (G*1) - 2 I_c (G*f_ic) + G*f_ic^2 ].
    """
    if state.kind == "cv":
        theta = state.theta[phase]
        return ((img.data - theta[None, None, :]) ** 2).sum(axis=2)

    spec = KernelSpec.gaussian(cfg.sigma, normalized=True)
    ones = convolve_periodic(np.ones(img.shape), spec)
    out = np.zeros(img.shape, dtype=np.float64)
    for c in range(img.channels):
        f = state.theta[phase, :, :, c]
        ic = img.data[:, :, c]
        out += ic**2 * ones - 2.0 * ic * convolve_periodic(f, spec) + convolve_periodic(f**2, spec)
    return out


def lvf_field(img: ImageField, means: np.ndarray, radius: int, phase: int) -> np.ndarray:
    """Summed squared deviation of the (2r+1)^2 window from the phase mean.

    Expanded per channel as (K*I^2) - 2 m (K*I) + m^2 (2r+1)^2 with K the
    unnormalized box sum and m the phase's mean estimate at the window
    center; channels are summed. Windows wrap periodically.
    """
    spec = KernelSpec.box(radius)
    area = float(box_window_area(radius))
    m_i = means[phase]
    out = np.zeros(img.shape, dtype=np.float64)
    for c in range(img.channels):
        ic = img.data[:, :, c]
        m = m_i[..., c] if m_i.ndim == 3 else m_i[c]
        out += convolve_periodic(ic**2, spec) - 2.0 * m * convolve_periodic(ic, spec) + m**2 * area
    return out


def _check_pair(img: ImageField, partition: Partition):
    if img.shape != partition.shape:
        raise ContractError(
            f"image {img.shape} and partition {partition.shape} differ in shape"
        )
