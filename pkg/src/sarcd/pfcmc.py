"""Pseudo-labeling of the difference image by two clustering runs in parallel.

The normalized difference image is pushed through two sigmoid mappings
whose center offsets straddle a shared bias b. Each mapped image is
described by a bank of Gabor magnitude features and clustered into two
classes with fuzzy c-means. Pixels the two runs agree on become changed /
unchanged pseudo-labels; disagreements form an intermediate class left
for a trained classifier to resolve.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import expit

from .errors import ParameterError
from .raster import as_image, load_pgm, normalize_center, save_pgm

UNCHANGED = 0
CHANGED = 1
INTERMEDIATE = 2

# PGM gray levels used to serialize a three-way label map.
_PGM_LEVELS = {UNCHANGED: 0, INTERMEDIATE: 128, CHANGED: 255}

# Standardized-feature channels with relative spread below this are treated
# as degenerate (constant) and zeroed.
_DEGENERATE_STD = 1e-10


@dataclass(frozen=True)
class SigmoidParams:
    """Slope gamma (> 0) and offset mu of the pixel mapping 1/(1+e^(-gamma(x+mu)))."""

    gamma: float
    mu: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class GaborBankConfig:
    """Complex Gabor bank: V scales x U orientations.

    Center frequencies run f_max / scale_factor^v for v = 0..V-1; the
    isotropic Gaussian envelope has sigma = sigma_ratio / frequency.
    Kernels keep their DC content so flat-region magnitudes stay
    proportional to local brightness; the narrow default envelope
    (sigma_ratio 0.25, about a quarter wavelength) keeps every channel
    brightness-sensitive, which the clustering stage relies on to pull a
    small changed class away from the background bulk.
    """

    scales: int = 5
    orientations: int = 8
    kernel_size: int = 11
    f_max: float = 0.25
    scale_factor: float = math.sqrt(2.0)
    sigma_ratio: float = 0.25

    def __post_init__(self):
        if self.scales < 1 or self.orientations < 1:
            raise ParameterError("scales and orientations must be >= 1")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ParameterError(f"kernel_size must be a positive odd integer, got {self.kernel_size}")
        if self.f_max <= 0 or self.scale_factor <= 0 or self.sigma_ratio <= 0:
            raise ParameterError("f_max, scale_factor and sigma_ratio must be positive")

    @property
    def dim(self) -> int:
        return self.scales * self.orientations


@dataclass(frozen=True)
class PfcmcConfig:
    """Knobs of the parallel-clustering stage.

    The two sigmoid offsets are mu1 = b + delta/2 and mu2 = b - delta/2;
    the second clustering run uses seed + 1.
    """

    gamma: float = 7.0
    b: float = 0.0
    delta: float = 0.12
    gabor: GaborBankConfig = field(default_factory=GaborBankConfig)
    fcm_m: float = 2.0
    fcm_tol: float = 1e-5
    fcm_max_iter: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")
        if self.delta <= 0:
            raise ParameterError(f"delta must be positive, got {self.delta}")

    @property
    def mu1(self) -> float:
        return self.b + self.delta / 2.0

    @property
    def mu2(self) -> float:
        return self.b - self.delta / 2.0


@dataclass
class FcmResult:
    """Soft two-class clustering outcome."""

    memberships: np.ndarray  # (count, 2), rows sum to 1
    centroids: np.ndarray  # (2, dim)
    iterations: int
    converged: bool
    objectives: list  # objective value after each iteration, non-increasing


def sigmoid_map(image, p: SigmoidParams) -> np.ndarray:
    """Map each pixel x to 1 / (1 + exp(-gamma (x + mu)))."""
    img = as_image(image)
    return expit(p.gamma * (img + p.mu))


def gabor_kernels(cfg: GaborBankConfig) -> np.ndarray:
    """Complex kernels of the bank, shape (scales*orientations, k, k).

    Channel order is scale-major: channel v * orientations + u holds scale v,
    orientation u (angle pi * u / orientations). Kernels are normalized to
    unit absolute sum; the per-channel standardization downstream makes any
    per-kernel scaling immaterial.
    """
    half = cfg.kernel_size // 2
    yy, xx = np.mgrid[-half : half + 1, -half : half + 1].astype(np.float64)
    kernels = []
    for v in range(cfg.scales):
        freq = cfg.f_max / cfg.scale_factor**v
        sigma = cfg.sigma_ratio / freq
        for u in range(cfg.orientations):
            theta = math.pi * u / cfg.orientations
            xr = xx * math.cos(theta) + yy * math.sin(theta)
            envelope = np.exp(-(xr**2 + (-xx * math.sin(theta) + yy * math.cos(theta)) ** 2) / (2 * sigma**2))
            kern = envelope * np.exp(1j * 2.0 * math.pi * freq * xr)
            kernels.append(kern / np.abs(kern).sum())
    return np.stack(kernels)


def gabor_features(image, cfg: GaborBankConfig) -> np.ndarray:
    """Per-pixel Gabor magnitudes, standardized per channel.

    Returns a (pixels, scales*orientations) matrix with pixels in row-major
    order. Each channel is the magnitude of the complex correlation with one
    kernel (replicate padding), shifted to zero mean and scaled to unit
    variance over the image. Channels with no spread (e.g. on a constant
    image) are set to zero and a warning is emitted.
    """
    img = as_image(image)
    if cfg.kernel_size > min(img.shape):
        raise ParameterError(
            f"kernel_size {cfg.kernel_size} exceeds image extent {img.shape[1]}x{img.shape[0]}"
        )
    half = cfg.kernel_size // 2
    padded = np.pad(img, half, mode="edge")
    channels = []
    for kern in gabor_kernels(cfg):
        # correlation == convolution with the flipped conjugate kernel
        resp = fftconvolve(padded, np.conj(kern[::-1, ::-1]), mode="valid")
        channels.append(np.abs(resp).ravel())
    feats = np.stack(channels, axis=1)

    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    degenerate = std <= _DEGENERATE_STD * np.maximum(np.abs(mean), 1.0)
    if degenerate.any():
        warnings.warn(
            f"{int(degenerate.sum())} degenerate (zero-variance) Gabor channels set to zero",
            stacklevel=2,
        )
    safe = np.where(degenerate, 1.0, std)
    feats = (feats - mean) / safe
    feats[:, degenerate] = 0.0
    return feats


def _sq_distances(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - centroids[None, :, :]
    return np.einsum("ncd,ncd->nc", diff, diff)


def _memberships(d2: np.ndarray, m: float) -> np.ndarray:
    """Membership update; a point sitting exactly on a centroid gets weight 1 there."""
    hit = d2 <= 0.0
    with np.errstate(divide="ignore"):
        inv = np.where(hit, 1.0, d2) ** (-1.0 / (m - 1.0))
    u = inv / inv.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    if rows.any():
        u[rows] = 0.0
        u[np.flatnonzero(rows), np.argmax(hit[rows], axis=1)] = 1.0
    return u


def fcm(features, m: float = 2.0, tol: float = 1e-5, max_iter: int = 100, seed: int = 0) -> FcmResult:
    """Two-class fuzzy c-means with seeded data-point initialization.

    Centroids start at two distinct data points drawn by the seeded RNG
    (re-drawn a bounded number of times if coincident). Alternating updates
    run until the largest centroid displacement drops below tol or max_iter
    is reached; the recorded objective sum(u^m * ||x - v||^2) is
    non-increasing across iterations.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 2:
        raise ParameterError("features must be a (count, dim) matrix with count >= 2")
    if m <= 1.0:
        raise ParameterError(f"fuzziness m must be > 1, got {m}")
    if tol <= 0 or max_iter < 1:
        raise ParameterError("tol must be positive and max_iter >= 1")

    rng = np.random.default_rng(seed)
    centroids = None
    for _ in range(32):
        idx = rng.choice(x.shape[0], size=2, replace=False)
        cand = x[idx].copy()
        if not np.array_equal(cand[0], cand[1]):
            centroids = cand
            break
    if centroids is None:
        raise ParameterError("could not draw two distinct initial centroids (constant data?)")

    objectives: list[float] = []
    u = None
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        u = _memberships(_sq_distances(x, centroids), m)
        um = u**m
        mass = um.sum(axis=0)
        new_centroids = np.where(
            mass[:, None] > 0.0, (um.T @ x) / np.maximum(mass, 1e-300)[:, None], centroids
        )
        objectives.append(float((um * _sq_distances(x, new_centroids)).sum()))
        displacement = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if displacement < tol:
            converged = True
            break

    u = _memberships(_sq_distances(x, centroids), m)
    return FcmResult(
        memberships=u,
        centroids=centroids,
        iterations=iterations,
        converged=converged,
        objectives=objectives,
    )


def orient_labels(result: FcmResult, ddi) -> np.ndarray:
    """Hard-assign clusters and mark the one with the larger mean DDI as changed.

    Membership ties go to unchanged. An empty hard cluster means there is
    nothing to orient: everything is labeled unchanged and a warning is
    emitted.
    """
    img = as_image(ddi, "ddi")
    u = result.memberships
    if u.shape[0] != img.size:
        raise ParameterError(f"membership count {u.shape[0]} != pixel count {img.size}")
    hard = np.argmax(u, axis=1)
    counts = np.bincount(hard, minlength=2)
    if counts.min() == 0:
        warnings.warn("one cluster is empty; labeling every pixel unchanged", stacklevel=2)
        return np.zeros(img.shape, dtype=np.uint8)
    values = img.ravel()
    mean0 = values[hard == 0].mean()
    mean1 = values[hard == 1].mean()
    changed_cluster = 0 if mean0 > mean1 else 1
    labels = (hard == changed_cluster).astype(np.uint8)
    labels[u[:, 0] == u[:, 1]] = UNCHANGED
    return labels.reshape(img.shape)


def encode_labels(y1, y2) -> np.ndarray:
    """Average two binary label maps into a three-way map.

    Agreement on 1 -> changed, agreement on 0 -> unchanged, disagreement
    (average 0.5) -> intermediate.
    """
    a = np.asarray(y1)
    b = np.asarray(y2)
    if a.shape != b.shape:
        raise ParameterError(f"shape mismatch: {a.shape} vs {b.shape}")
    out = np.full(a.shape, INTERMEDIATE, dtype=np.uint8)
    out[(a == 1) & (b == 1)] = CHANGED
    out[(a == 0) & (b == 0)] = UNCHANGED
    return out


def pfcmc(ddi, cfg: PfcmcConfig) -> np.ndarray:
    """Full parallel-clustering stage: DDI in, three-way pseudo-label map out."""
    img = as_image(ddi, "ddi")
    norm = normalize_center(img)
    mapped1 = sigmoid_map(norm, SigmoidParams(cfg.gamma, cfg.mu1))
    mapped2 = sigmoid_map(norm, SigmoidParams(cfg.gamma, cfg.mu2))
    x1 = gabor_features(mapped1, cfg.gabor)
    x2 = gabor_features(mapped2, cfg.gabor)
    r1 = fcm(x1, cfg.fcm_m, cfg.fcm_tol, cfg.fcm_max_iter, cfg.seed)
    r2 = fcm(x2, cfg.fcm_m, cfg.fcm_tol, cfg.fcm_max_iter, cfg.seed + 1)
    y1 = orient_labels(r1, img)
    y2 = orient_labels(r2, img)
    return encode_labels(y1, y2)


def save_three_way(labels, path) -> None:
    """Serialize a three-way map as a PGM with levels {0, 128, 255}."""
    arr = np.asarray(labels)
    if arr.ndim != 2 or not np.isin(arr, (UNCHANGED, CHANGED, INTERMEDIATE)).all():
        raise ParameterError("labels must be 2-D over {unchanged, changed, intermediate}")
    gray = np.zeros(arr.shape, dtype=np.float64)
    for label, level in _PGM_LEVELS.items():
        gray[arr == label] = level / 255.0
    save_pgm(gray, path)


def load_three_way(path) -> np.ndarray:
    """Read a three-way map PGM written by save_three_way."""
    gray = np.rint(load_pgm(path) * 255.0).astype(int)
    out = np.full(gray.shape, 255, dtype=np.uint8)
    for label, level in _PGM_LEVELS.items():
        out[gray == level] = label
    if (out == 255).any():
        bad = sorted(set(np.unique(gray)) - set(_PGM_LEVELS.values()))
        raise ParameterError(f"not a three-way map: unexpected gray levels {bad}")
    return out
