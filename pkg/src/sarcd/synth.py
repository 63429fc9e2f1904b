"""Deterministic synthetic bi-temporal SAR pair generator with ground truth.

Scenes are piecewise-constant reflectivity maps hit by multiplicative
gamma speckle (shape L, mean 1, the standard L-look intensity model).
Change regions are non-overlapping discs whose total area is steered to a
requested changed/unchanged imbalance ratio. Every output is a pure
function of the scene seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ParameterError

# Placement attempts per disc before giving up on the requested geometry.
_MAX_PLACE_TRIES = 2000


@dataclass
class SceneSpec:
    """Parameters of a synthetic change scene.

    ``background`` is a list of (x, y, width, height, level) rectangles
    painted in order over a uniform ``base_level`` reflectivity.
    ``region_radius`` bounds the disc radii drawn before they are rescaled
    to meet ``target_ir``; ``change_gain`` multiplies reflectivity inside
    change regions (> 1 brightening, < 1 darkening). The default gain of
    20 (13 dB) models a strong land-cover transition, sized so that
    single-look scenes stay separable at desk scale.
    """

    width: int = 256
    height: int = 256
    looks: float = 1.0
    n_regions: int = 4
    region_radius: tuple[float, float] = (6.0, 14.0)
    change_gain: float = 20.0
    target_ir: float = 0.02
    background: list = field(default_factory=list)
    base_level: float = 0.5
    seed: int = 0

    def validate(self):
        if self.width < 8 or self.height < 8:
            raise ParameterError(f"scene too small: {self.width}x{self.height}")
        if self.looks <= 0:
            raise ParameterError(f"looks must be positive, got {self.looks}")
        if self.n_regions < 1:
            raise ParameterError(f"n_regions must be >= 1, got {self.n_regions}")
        lo, hi = self.region_radius
        if not (0 < lo <= hi):
            raise ParameterError(f"bad region_radius range ({lo}, {hi})")
        if self.change_gain <= 0 or self.change_gain == 1.0:
            raise ParameterError(f"change_gain must be positive and != 1, got {self.change_gain}")
        if self.target_ir <= 0:
            raise ParameterError(f"target_ir must be positive, got {self.target_ir}")
        if self.base_level <= 0:
            raise ParameterError(f"base_level must be positive, got {self.base_level}")
        for rect in self.background:
            if len(rect) != 5:
                raise ParameterError(f"background rectangle must be (x, y, w, h, level): {rect}")
            if rect[4] <= 0:
                raise ParameterError(f"background level must be positive: {rect}")


def scene_from_json(text: str) -> SceneSpec:
    """Parse a SceneSpec from a JSON document; omitted fields keep defaults."""
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ParameterError("scene document must be a JSON object")
    known = {f for f in SceneSpec.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ParameterError(f"unknown scene fields: {sorted(unknown)}")
    spec = SceneSpec(**doc)
    spec.region_radius = tuple(spec.region_radius)
    spec.background = [tuple(r) for r in spec.background]
    spec.validate()
    return spec


def scene_to_json(spec: SceneSpec) -> str:
    doc = asdict(spec)
    doc["region_radius"] = list(spec.region_radius)
    doc["background"] = [list(r) for r in spec.background]
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def speckle_field(shape, looks: float, rng) -> np.ndarray:
    """Multiplicative speckle ~ Gamma(looks, 1/looks): mean 1, variance 1/looks."""
    if looks <= 0:
        raise ParameterError(f"looks must be positive, got {looks}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return rng.gamma(shape=looks, scale=1.0 / looks, size=shape)


def _reflectivity(spec: SceneSpec) -> np.ndarray:
    img = np.full((spec.height, spec.width), spec.base_level, dtype=np.float64)
    for x, y, w, h, level in spec.background:
        x0 = max(0, int(x))
        y0 = max(0, int(y))
        x1 = min(spec.width, int(x) + int(w))
        y1 = min(spec.height, int(y) + int(h))
        img[y0:y1, x0:x1] = float(level)
    return img


def _place_discs(spec: SceneSpec, rng) -> np.ndarray:
    """Draw, rescale, and place non-overlapping change discs; return the truth mask."""
    nm = spec.width * spec.height
    target_changed = spec.target_ir / (1.0 + spec.target_ir) * nm
    lo, hi = spec.region_radius
    radii = rng.uniform(lo, hi, size=spec.n_regions)
    radii *= math.sqrt(target_changed / float(np.sum(np.pi * radii**2)))
    max_radius = min(spec.width, spec.height) / 4.0
    if radii.min() < 1.0 or radii.max() > max_radius:
        raise ParameterError(
            f"target_ir {spec.target_ir} unreachable: rescaled disc radii "
            f"[{radii.min():.2f}, {radii.max():.2f}] leave the valid range [1, {max_radius:.1f}]"
        )

    placed = []  # (cx, cy, r)
    for r in sorted(radii, reverse=True):
        for _ in range(_MAX_PLACE_TRIES):
            cx = rng.uniform(r, spec.width - 1 - r)
            cy = rng.uniform(r, spec.height - 1 - r)
            if all((cx - px) ** 2 + (cy - py) ** 2 >= (r + pr + 2.0) ** 2 for px, py, pr in placed):
                placed.append((cx, cy, r))
                break
        else:
            raise ParameterError(
                f"could not place {spec.n_regions} non-overlapping change regions "
                f"in a {spec.width}x{spec.height} scene"
            )

    yy, xx = np.mgrid[0 : spec.height, 0 : spec.width]
    truth = np.zeros((spec.height, spec.width), dtype=bool)
    for cx, cy, r in placed:
        truth |= (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r

    achieved = truth.sum() / (nm - truth.sum())
    if abs(achieved / spec.target_ir - 1.0) > 0.2:
        raise ParameterError(
            f"achieved imbalance ratio {achieved:.4f} misses target {spec.target_ir} by > 20%"
        )
    return truth


def generate_pair(spec: SceneSpec):
    """Generate (i1, i2, truth) for a scene: two speckled acquisitions + mask.

    Date-2 reflectivity equals date-1 with change discs multiplied by
    change_gain; both acquisitions get independent speckle and are rescaled
    jointly into [0, 1]. Identical seeds give bit-identical outputs.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    truth = _place_discs(spec, rng)
    r1 = _reflectivity(spec)
    r2 = r1.copy()
    r2[truth] *= spec.change_gain
    i1 = r1 * speckle_field(r1.shape, spec.looks, rng)
    i2 = r2 * speckle_field(r2.shape, spec.looks, rng)
    peak = max(i1.max(), i2.max())
    return i1 / peak, i2 / peak, truth.astype(np.uint8)
