"""Confusion-matrix evaluation of a change map against ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, UndefinedMetricError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def _as_binary(arr, name):
    a = np.asarray(arr)
    if a.ndim != 2 or not np.isin(a, (0, 1)).all():
        raise ParameterError(f"{name} must be a 2-D array over {{0, 1}}")
    return a.astype(bool)


def confusion(pred, truth) -> ConfusionCounts:
    """Per-pixel tally with changed (1) as the positive class."""
    p = _as_binary(pred, "pred")
    t = _as_binary(truth, "truth")
    if p.shape != t.shape:
        raise ParameterError(f"shape mismatch: {p.shape} vs {t.shape}")
    return ConfusionCounts(
        tp=int(np.sum(p & t)),
        tn=int(np.sum(~p & ~t)),
        fp=int(np.sum(p & ~t)),
        fn=int(np.sum(~p & t)),
    )


def pcc(c: ConfusionCounts) -> float:
    """Ratio of correctly classified pixels to all pixels."""
    if c.total <= 0:
        raise ParameterError("empty confusion counts")
    return (c.tp + c.tn) / c.total


def kappa(c: ConfusionCounts) -> float:
    """Chance-corrected agreement (PCC - PRE) / (1 - PRE).

    PRE is the expected agreement of statistically independent maps with the
    same marginals; when both maps are single-class PRE = 1 and the value is
    undefined.
    """
    if c.total <= 0:
        raise ParameterError("empty confusion counts")
    total = float(c.total)
    pre = ((c.tp + c.fp) * (c.tp + c.fn) + (c.fn + c.tn) * (c.fp + c.tn)) / (total * total)
    if pre >= 1.0:
        raise UndefinedMetricError("expected agreement is 1 (single-class maps): kappa undefined")
    return (pcc(c) - pre) / (1.0 - pre)


def imbalance_ratio(truth) -> float:
    """Changed-to-unchanged pixel count ratio Nc / Nu of a ground truth map."""
    t = _as_binary(truth, "truth")
    nc = int(t.sum())
    nu = t.size - nc
    if nu == 0:
        raise ParameterError("division by zero: no unchanged pixels in truth")
    return nc / nu


def evaluate(pred, truth) -> dict:
    """Flat metrics document {fp, fn, oe, pcc, kc, ir} for a map/truth pair."""
    c = confusion(pred, truth)
    return {
        "fp": c.fp,
        "fn": c.fn,
        "oe": c.fp + c.fn,
        "pcc": pcc(c),
        "kc": kappa(c),
        "ir": imbalance_ratio(truth),
    }
