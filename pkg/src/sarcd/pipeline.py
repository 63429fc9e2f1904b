"""End-to-end detection pipeline and the T/b parameter sweep.

Stage order: deep difference image, parallel clustering into pseudo-
labels, patch extraction from the pooled inputs, balanced sampling,
filter-bank training, classifier training on the confident pseudo-labels,
and classification of the intermediate pixels only. Confident pseudo-
labels are kept verbatim in the final map.

Per-stage seeds are derived from the run seed: the two clustering runs
use seed and seed+1, sampling uses seed+2, the classifier seed+3.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .ddi import DdiParams, deep_difference, log_ratio, pool_kernel, weighted_pool
from .errors import DegenerateTrainingError, ParameterError
from .metrics import confusion, kappa, pcc
from .pcanet import balance_sample, batch_features, extract_patches, train_pcanet
from .pfcmc import (
    CHANGED,
    INTERMEDIATE,
    GaborBankConfig,
    PfcmcConfig,
    fcm,
    orient_labels,
    pfcmc,
)
from .raster import as_image
from .svm import predict_batch, train_svm

SWEEP_HEADER = "T,b,fp,fn,oe,pcc,kc"


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the pipeline; JSON keys match the field names
    (``lam`` is spelled ``lambda`` in JSON)."""

    k: int = 3
    T: int = 9
    gamma: float = 7.0
    b: float = 0.0
    delta: float = 0.12
    lam: int = 5
    L1: int = 8
    L2: int = 8
    sample_fraction: float = 0.2
    sample_ratio: float = 0.5
    svm_c: float = 1.0
    svm_epochs: int = 20
    fcm_m: float = 2.0
    fcm_tol: float = 1e-5
    fcm_max_iter: int = 100
    gabor: GaborBankConfig = field(default_factory=GaborBankConfig)
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.sample_fraction <= 1.0):
            raise ParameterError(f"sample_fraction must be in (0, 1], got {self.sample_fraction}")
        if not (0.0 < self.sample_ratio <= 1.0):
            raise ParameterError(f"sample_ratio must be in (0, 1], got {self.sample_ratio}")
        if self.L1 < 1 or self.L2 < 1:
            raise ParameterError("L1 and L2 must be >= 1")

    def ddi_params(self) -> DdiParams:
        return DdiParams(k=self.k, T=self.T)

    def pfcmc_config(self) -> PfcmcConfig:
        return PfcmcConfig(
            gamma=self.gamma,
            b=self.b,
            delta=self.delta,
            gabor=self.gabor,
            fcm_m=self.fcm_m,
            fcm_tol=self.fcm_tol,
            fcm_max_iter=self.fcm_max_iter,
            seed=self.seed,
        )


# JSON keys for the flat config document; "lambda" maps to the lam field and
# "gabor_*" keys populate the nested bank config.
_JSON_ALIASES = {"lambda": "lam"}
_GABOR_PREFIX = "gabor_"


def config_from_json(text: str) -> PipelineConfig:
    """Parse a PipelineConfig from a flat JSON object; omitted keys keep defaults."""
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ParameterError("config document must be a JSON object")
    plain: dict = {}
    gabor: dict = {}
    gabor_fields = set(GaborBankConfig.__dataclass_fields__)
    config_fields = set(PipelineConfig.__dataclass_fields__) - {"gabor", "lam"}
    for key, value in doc.items():
        key = _JSON_ALIASES.get(key, key)
        if key.startswith(_GABOR_PREFIX) and key[len(_GABOR_PREFIX) :] in gabor_fields:
            gabor[key[len(_GABOR_PREFIX) :]] = value
        elif key in config_fields or key == "lam":
            plain[key] = value
        else:
            raise ParameterError(f"unknown config key {key!r}")
    if gabor:
        plain["gabor"] = GaborBankConfig(**gabor)
    return PipelineConfig(**plain)


def config_to_json(cfg: PipelineConfig) -> str:
    doc = {}
    for name in PipelineConfig.__dataclass_fields__:
        if name == "gabor":
            for gname in GaborBankConfig.__dataclass_fields__:
                doc[_GABOR_PREFIX + gname] = getattr(cfg.gabor, gname)
        elif name == "lam":
            doc["lambda"] = cfg.lam
        else:
            doc[name] = getattr(cfg, name)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


@dataclass
class PipelineResult:
    change_map: np.ndarray  # (h, w) uint8 over {0, 1}
    ddi: np.ndarray
    pseudo: np.ndarray  # three-way label map
    fallback: bool  # True when training degenerated and the map is clustering-only
    pcanet_model: object = None
    svm_model: object = None


def run_pipeline(i1, i2, cfg: PipelineConfig, ddi=None, pseudo=None) -> PipelineResult:
    """Run detection end to end; precomputed ddi/pseudo stages may be injected.

    When one pseudo-label class is empty there is nothing to train on: the
    clustering-only map (changed pixels only) is returned with
    ``fallback=True`` and a warning.
    """
    a = as_image(i1, "i1")
    b = as_image(i2, "i2")
    if a.shape != b.shape:
        raise ParameterError(f"shape mismatch: {a.shape} vs {b.shape}")

    if ddi is None:
        ddi = deep_difference(a, b, cfg.ddi_params())
    else:
        ddi = as_image(ddi, "ddi")
    if pseudo is None:
        pseudo = pfcmc(ddi, cfg.pfcmc_config())
    pseudo = np.asarray(pseudo)

    kern = pool_kernel(cfg.k)
    patches = extract_patches(weighted_pool(a, kern), weighted_pool(b, kern), cfg.lam)
    sample_count = max(1, round(cfg.sample_fraction * a.size))
    try:
        selection = balance_sample(pseudo, sample_count, cfg.sample_ratio, cfg.seed + 2)
    except DegenerateTrainingError as exc:
        warnings.warn(f"{exc}; falling back to the clustering result", stacklevel=2)
        return PipelineResult(
            change_map=(pseudo == CHANGED).astype(np.uint8),
            ddi=ddi,
            pseudo=pseudo,
            fallback=True,
        )

    model = train_pcanet(patches, selection, cfg.L1, cfg.L2)
    train_feats = batch_features(patches[selection.indices], model)
    train_labels = np.where(selection.labels == CHANGED, 1, -1)
    svm_model = train_svm(train_feats, train_labels, cfg.svm_c, cfg.svm_epochs, cfg.seed + 3)

    change = (pseudo == CHANGED).astype(np.uint8)
    inter_idx = np.flatnonzero(pseudo.ravel() == INTERMEDIATE)
    if inter_idx.size:
        inter_feats = batch_features(patches[inter_idx], model)
        preds = predict_batch(svm_model, inter_feats)
        change.ravel()[inter_idx] = (preds > 0).astype(np.uint8)
    return PipelineResult(
        change_map=change,
        ddi=ddi,
        pseudo=pseudo,
        fallback=False,
        pcanet_model=model,
        svm_model=svm_model,
    )


def baseline_change_map(i1, i2, cfg: PipelineConfig) -> np.ndarray:
    """Reference detector: plain log-ratio image + one hard fuzzy clustering.

    Uses the raw (unpooled) inputs and clusters pixel values directly; this
    is the classical speckle-sensitive approach the pipeline improves on.
    """
    di = log_ratio(i1, i2)
    result = fcm(di.reshape(-1, 1), cfg.fcm_m, cfg.fcm_tol, cfg.fcm_max_iter, cfg.seed)
    return orient_labels(result, di)


def sweep(i1, i2, truth, cfg: PipelineConfig, t_list, b_list) -> list:
    """Run the pipeline over a (T, b) grid and score each cell against truth.

    Returns rows (T, b, fp, fn, oe, pcc, kc) sorted by (T, b); cells whose
    run fails are recorded with NaN scores.
    """
    if not t_list or not b_list:
        raise ParameterError("t_list and b_list must be non-empty")
    rows = []
    for t in sorted(t_list):
        for b in sorted(b_list):
            cell = replace(cfg, T=int(t), b=float(b))
            try:
                result = run_pipeline(i1, i2, cell)
                counts = confusion(result.change_map, truth)
                rows.append(
                    (
                        int(t),
                        float(b),
                        counts.fp,
                        counts.fn,
                        counts.fp + counts.fn,
                        pcc(counts),
                        kappa(counts),
                    )
                )
            except Exception as exc:  # record the failed cell, keep sweeping
                warnings.warn(f"sweep cell T={t} b={b} failed: {exc}", stacklevel=2)
                nan = math.nan
                rows.append((int(t), float(b), nan, nan, nan, nan, nan))
    return rows


def sweep_csv(rows) -> str:
    lines = [SWEEP_HEADER]
    for t, b, fp, fn, oe, p, k in rows:
        lines.append(f"{t},{b:g},{fp:g},{fn:g},{oe:g},{p:.6f},{k:.6f}")
    return "\n".join(lines) + "\n"
