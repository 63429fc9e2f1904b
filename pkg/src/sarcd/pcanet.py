"""Two-stage PCA-filter network over stacked bi-temporal patches.

For every pixel, the lam x lam neighborhoods of both pooled acquisitions
are stacked vertically into a 2*lam x lam patch. Filters are the leading
eigenvectors of the mean-removed patch covariance; a patch is described
by correlating it with the stage-1 bank, correlating each response with a
per-filter stage-2 bank, hashing the stage-2 signs into integer codes and
histogramming those codes. Pseudo-label sampling balances the changed /
unchanged classes by over- and under-sampling before any learning.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .errors import DegenerateTrainingError, FormatError, InternalError, ParameterError
from .pfcmc import CHANGED, UNCHANGED
from .raster import as_image

MODEL_MAGIC = b"SARM"

# Batch size for the vectorized feature path; bounds peak memory.
_FEATURE_CHUNK = 4096


@dataclass
class SampleSelection:
    """Pixel indices picked for training plus their pseudo-labels."""

    indices: np.ndarray  # (S,) flat pixel indices
    labels: np.ndarray  # (S,) values in {CHANGED, UNCHANGED}


@dataclass
class PcanetModel:
    """Learned filter banks: stage1 (L1, 2*lam, lam), stage2 (L1, L2, 2*lam, lam)."""

    lam: int
    L1: int
    L2: int
    stage1: np.ndarray
    stage2: np.ndarray

    @property
    def feature_length(self) -> int:
        return self.L1 * (1 << self.L2)


def extract_patches(i1p, i2p, lam: int) -> np.ndarray:
    """Per-pixel stacked patches, shape (pixels, 2*lam, lam), row-major pixel order.

    The top half of each patch is the lam x lam neighborhood in the first
    pooled image, the bottom half the same neighborhood in the second;
    borders replicate edge pixels.
    """
    a = as_image(i1p, "i1p")
    b = as_image(i2p, "i2p")
    if a.shape != b.shape:
        raise ParameterError(f"shape mismatch: {a.shape} vs {b.shape}")
    if lam < 1 or lam % 2 == 0:
        raise ParameterError(f"patch size lam must be a positive odd integer, got {lam}")
    if lam > min(a.shape):
        raise ParameterError(f"patch size {lam} exceeds image extent {a.shape[1]}x{a.shape[0]}")
    half = lam // 2
    windows = []
    for img in (a, b):
        padded = np.pad(img, half, mode="edge")
        windows.append(sliding_window_view(padded, (lam, lam)).reshape(-1, lam, lam))
    return np.concatenate(windows, axis=1)


def balance_sample(three_way, S: int, ratio: float, seed: int) -> SampleSelection:
    """Draw S training pixels: round(S*ratio) changed, the rest unchanged.

    A class is drawn without replacement while its pool suffices and with
    replacement otherwise (over-sampling the minority). Intermediate pixels
    are never drawn. Raises DegenerateTrainingError when either class is
    empty.
    """
    labels = np.asarray(three_way)
    if S < 1:
        raise ParameterError(f"sample count S must be >= 1, got {S}")
    if not (0.0 < ratio <= 1.0):
        raise ParameterError(f"ratio must be in (0, 1], got {ratio}")
    flat = labels.ravel()
    changed_pool = np.flatnonzero(flat == CHANGED)
    unchanged_pool = np.flatnonzero(flat == UNCHANGED)
    if changed_pool.size == 0 or unchanged_pool.size == 0:
        raise DegenerateTrainingError(
            f"cannot sample a training set: {changed_pool.size} changed and "
            f"{unchanged_pool.size} unchanged pseudo-labels"
        )
    n_changed = int(round(S * ratio))
    n_unchanged = S - n_changed
    rng = np.random.default_rng(seed)
    picks = []
    for pool, count in ((changed_pool, n_changed), (unchanged_pool, n_unchanged)):
        if count == 0:
            picks.append(np.empty(0, dtype=np.int64))
        else:
            picks.append(rng.choice(pool, size=count, replace=pool.size < count))
    indices = np.concatenate(picks)
    out_labels = np.concatenate(
        [np.full(n_changed, CHANGED, np.uint8), np.full(n_unchanged, UNCHANGED, np.uint8)]
    )
    return SampleSelection(indices=indices, labels=out_labels)


def _vectorize(patches: np.ndarray) -> np.ndarray:
    arr = np.asarray(patches, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[1] != 2 * arr.shape[2]:
        raise ParameterError(f"patches must have shape (count, 2*lam, lam), got {arr.shape}")
    return arr.reshape(arr.shape[0], -1)


def learn_pca_filters(patches, L: int) -> np.ndarray:
    """Top-L eigenvectors of the mean-removed patch covariance, as filters.

    Each patch vector has its own mean subtracted; filters come from the
    eigendecomposition of the resulting scatter matrix, ordered by
    descending eigenvalue and sign-normalized so the largest-magnitude
    component is positive. Returns an (L, 2*lam, lam) array of mutually
    orthonormal filters.
    """
    vecs = _vectorize(patches)
    count, dim = vecs.shape
    if L < 1 or L > dim:
        raise ParameterError(f"filter count {L} outside [1, {dim}]")
    if count < L:
        raise ParameterError(f"need at least {L} patches, got {count}")
    centered = vecs - vecs.mean(axis=1, keepdims=True)
    scatter = centered.T @ centered
    eigvals, eigvecs = np.linalg.eigh(scatter)
    order = np.argsort(eigvals)[::-1][:L]
    lam = np.asarray(patches).shape[2]
    filters = np.empty((L, 2 * lam, lam))
    for out, col in enumerate(order):
        v = eigvecs[:, col]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        filters[out] = v.reshape(2 * lam, lam)
    return filters


def stage_forward(patch, filters) -> np.ndarray:
    """Correlate one patch with a filter bank, zero-padded to the input size.

    The filter origin is at (rows // 2, cols // 2). Returns (L, 2*lam, lam).
    """
    arr = np.asarray(patch, dtype=np.float64)
    bank = np.asarray(filters, dtype=np.float64)
    if bank.ndim != 3 or bank.shape[1:] != arr.shape:
        raise ParameterError(f"filter shape {bank.shape[1:]} does not match patch {arr.shape}")
    return np.stack(
        [ndimage.correlate(arr, filt, mode="constant", cval=0.0) for filt in bank]
    )


def binarize_encode(maps) -> np.ndarray:
    """Hash a stack of L2 response maps into one integer-code map.

    Map l2 (1-based) contributes 2^(l2-1) wherever its response is strictly
    positive; zero counts as non-positive. Codes lie in [0, 2^L2 - 1].
    """
    arr = np.asarray(maps, dtype=np.float64)
    if arr.ndim != 3:
        raise ParameterError(f"expected (L2, rows, cols) maps, got shape {arr.shape}")
    L2 = arr.shape[0]
    if L2 > 31:
        raise ParameterError(f"at most 31 maps can be encoded, got {L2}")
    weights = (1 << np.arange(L2, dtype=np.int64))
    return np.tensordot(weights, (arr > 0.0).astype(np.int64), axes=1)


def histogram_feature(int_maps, L2: int) -> np.ndarray:
    """Concatenated per-map histograms of the integer codes.

    Each of the L1 maps yields 2^L2 bins counting its codes over the whole
    patch, so every block of 2^L2 entries sums to the patch pixel count.
    """
    arr = np.asarray(int_maps)
    if arr.ndim != 3 or not np.issubdtype(arr.dtype, np.integer):
        raise ParameterError(f"expected integer maps of shape (L1, rows, cols), got {arr.dtype} {arr.shape}")
    nbins = 1 << L2
    if arr.min() < 0 or arr.max() >= nbins:
        raise InternalError(
            f"integer codes outside [0, {nbins - 1}]: min {arr.min()}, max {arr.max()}"
        )
    return np.concatenate(
        [np.bincount(m.ravel(), minlength=nbins) for m in arr]
    ).astype(np.float64)


def _corr_matrix(filt: np.ndarray) -> np.ndarray:
    """Matrix M with M @ vec(patch) == vec(stage_forward correlation of patch)."""
    rows, cols = filt.shape
    dim = rows * cols
    basis = np.zeros((rows, cols))
    m = np.empty((dim, dim))
    for t in range(dim):
        basis.flat[t] = 1.0
        m[:, t] = ndimage.correlate(basis, filt, mode="constant", cval=0.0).ravel()
        basis.flat[t] = 0.0
    return m


def _batch_forward(vecs: np.ndarray, filters: np.ndarray) -> np.ndarray:
    """Vectorized stage_forward over patch vectors: (n, dim) -> (n, L, dim)."""
    mats = np.stack([_corr_matrix(f) for f in filters])  # (L, dim, dim)
    return np.einsum("nd,led->nle", vecs, mats, optimize=True)


def train_pcanet(patches, selection: SampleSelection, L1: int, L2: int) -> PcanetModel:
    """Learn both filter banks from the selected training patches.

    Stage-1 filters come from the selected patches; for each stage-1 filter
    a dedicated stage-2 bank is learned from that filter's responses on the
    same patches.
    """
    arr = np.asarray(patches, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[1] != 2 * arr.shape[2]:
        raise ParameterError(f"patches must have shape (count, 2*lam, lam), got {arr.shape}")
    idx = np.asarray(selection.indices)
    if idx.size == 0 or idx.min() < 0 or idx.max() >= arr.shape[0]:
        raise ParameterError("selection indices outside the patch set")
    lam = arr.shape[2]
    selected = arr[idx]
    stage1 = learn_pca_filters(selected, L1)
    responses = _batch_forward(selected.reshape(idx.size, -1), stage1)
    stage2 = np.stack(
        [learn_pca_filters(responses[:, l1].reshape(-1, 2 * lam, lam), L2) for l1 in range(L1)]
    )
    return PcanetModel(lam=lam, L1=L1, L2=L2, stage1=stage1, stage2=stage2)


def features_for(patch, model: PcanetModel) -> np.ndarray:
    """Feature vector of one patch: forward both stages, hash, histogram."""
    arr = np.asarray(patch, dtype=np.float64)
    if arr.shape != (2 * model.lam, model.lam):
        raise ParameterError(
            f"patch shape {arr.shape} does not match model ({2 * model.lam}, {model.lam})"
        )
    stage1_out = stage_forward(arr, model.stage1)
    codes = np.stack(
        [binarize_encode(stage_forward(stage1_out[l1], model.stage2[l1])) for l1 in range(model.L1)]
    )
    return histogram_feature(codes, model.L2)


def batch_features(patches, model: PcanetModel) -> np.ndarray:
    """features_for over many patches at once (same result, vectorized).

    Processes fixed-size chunks to bound memory; output is (count,
    L1 * 2^L2) float64.
    """
    arr = np.asarray(patches, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[1:] != (2 * model.lam, model.lam):
        raise ParameterError(
            f"patches shape {arr.shape} does not match model ({2 * model.lam}, {model.lam})"
        )
    dim = 2 * model.lam * model.lam
    nbins = 1 << model.L2
    mats1 = np.stack([_corr_matrix(f) for f in model.stage1])
    mats2 = np.stack([[_corr_matrix(f) for f in bank] for bank in model.stage2])
    weights = (1 << np.arange(model.L2, dtype=np.int64))

    out = np.empty((arr.shape[0], model.feature_length))
    for start in range(0, arr.shape[0], _FEATURE_CHUNK):
        chunk = arr[start : start + _FEATURE_CHUNK].reshape(-1, dim)
        n = chunk.shape[0]
        r1 = np.einsum("nd,led->nle", chunk, mats1, optimize=True)  # (n, L1, dim)
        r2 = np.einsum("nld,lked->nlke", r1, mats2, optimize=True)  # (n, L1, L2, dim)
        codes = np.tensordot(r2 > 0.0, weights, axes=([2], [0]))  # (n, L1, dim)
        offsets = np.arange(n * model.L1, dtype=np.int64)[:, None] * nbins
        flat = (codes.reshape(n * model.L1, dim) + offsets).ravel()
        counts = np.bincount(flat, minlength=n * model.L1 * nbins)
        out[start : start + n] = counts.reshape(n, model.feature_length)
    return out


def save_model(model: PcanetModel, path) -> None:
    """Serialize a model: magic SARM, u32 lam/L1/L2, then both banks as
    little-endian float32 (stage1 then stage2, filters row-major)."""
    header = MODEL_MAGIC + struct.pack("<III", model.lam, model.L1, model.L2)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(model.stage1.astype("<f4").tobytes())
        fh.write(model.stage2.astype("<f4").tobytes())


def load_model(path) -> PcanetModel:
    """Read a model written by save_model."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16:
        raise FormatError(f"file too short for a SARM header: {len(data)} bytes")
    if data[:4] != MODEL_MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {MODEL_MAGIC!r}")
    lam, L1, L2 = struct.unpack("<III", data[4:16])
    if lam < 1 or L1 < 1 or L2 < 1:
        raise FormatError(f"invalid model header lam={lam} L1={L1} L2={L2}")
    per_filter = 2 * lam * lam
    n1 = L1 * per_filter
    n2 = L1 * L2 * per_filter
    expected = 16 + 4 * (n1 + n2)
    if len(data) != expected:
        raise FormatError(f"payload size mismatch: expected {expected} bytes, got {len(data)}")
    values = np.frombuffer(data[16:], dtype="<f4").astype(np.float64)
    stage1 = values[:n1].reshape(L1, 2 * lam, lam)
    stage2 = values[n1:].reshape(L1, L2, 2 * lam, lam)
    return PcanetModel(lam=lam, L1=L1, L2=L2, stage1=stage1, stage2=stage2)
