#!/usr/bin/env python3
"""Pseudo-label the difference image with two clustering runs in parallel.

Two sigmoid mappings with offsets straddling the center bias b produce two
views of the normalized difference image. Each view is described by Gabor
magnitude features and clustered into two classes. Pixels both runs call
changed (or unchanged) become confident pseudo-labels; disagreements form
an intermediate class that a classifier resolves later.
"""

from pathlib import Path

from sarcd import (
    CHANGED,
    INTERMEDIATE,
    UNCHANGED,
    DdiParams,
    PfcmcConfig,
    SceneSpec,
    deep_difference,
    generate_pair,
    pfcmc,
    save_three_way,
)

out = Path(__file__).parent / "output" / "clustering"
out.mkdir(parents=True, exist_ok=True)

i1, i2, truth = generate_pair(SceneSpec(seed=42))
ddi = deep_difference(i1, i2, DdiParams(k=3, T=9))
pseudo = pfcmc(ddi, PfcmcConfig(seed=0))

names = {UNCHANGED: "unchanged", CHANGED: "changed", INTERMEDIATE: "intermediate"}
for value, name in names.items():
    print(f"{name:>12}: {int((pseudo == value).sum()):6d} pixels")

inside = truth.astype(bool)
confident_changed = pseudo == CHANGED
print(f"\npseudo-label purity: of {int(confident_changed.sum())} confident changed pixels, "
      f"{int((confident_changed & inside).sum())} are truly changed")
print(f"missed changed pixels among confident unchanged: "
      f"{int(((pseudo == UNCHANGED) & inside).sum())}")

save_three_way(pseudo, out / "pseudo.pgm")
print(f"\nwrote pseudo.pgm (0 unchanged / 128 intermediate / 255 changed) to {out}")
