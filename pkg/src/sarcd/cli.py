"""Command-line front end: one subcommand per pipeline stage.

Exit codes: 0 success, 2 degenerate input (no contrast between the
acquisitions), 3 degenerate training (pipeline fell back to the
clustering-only map), 1 any other error.

Stage artifacts land in the run directory given by --out: the difference
image as ddi.sarf (+ ddi_preview.pgm), pseudo-labels as pseudo.pgm,
models as pcanet.sarm / svm.sars, the final map as change_map.pgm and
scores as metrics.json. detect and cluster reuse ddi.sarf / pseudo.pgm
from the run directory when present, so a run can resume at any stage
boundary.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import pcanet, svm
from .ddi import deep_difference
from .errors import DegenerateInputError, SarcdError
from .metrics import evaluate
from .pfcmc import load_three_way, pfcmc, save_three_way
from .pipeline import (
    PipelineConfig,
    config_from_json,
    config_to_json,
    run_pipeline,
    sweep,
    sweep_csv,
)
from .raster import load_binary, load_f32, load_pgm, save_binary, save_f32, save_pgm
from .synth import SceneSpec, generate_pair, scene_from_json, scene_to_json

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DEGENERATE_INPUT = 2
EXIT_DEGENERATE_TRAINING = 3


def _load_image(path: str) -> np.ndarray:
    if path.endswith(".sarf"):
        return load_f32(path)
    return load_pgm(path)


def _load_config(args) -> PipelineConfig:
    if getattr(args, "config", None):
        cfg = config_from_json(Path(args.config).read_text())
    else:
        cfg = PipelineConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _save_preview(image: np.ndarray, path: Path) -> None:
    lo, hi = image.min(), image.max()
    scaled = np.zeros_like(image) if hi <= lo else (image - lo) / (hi - lo)
    save_pgm(scaled, path)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pipeline_out_dir(args, cfg: PipelineConfig) -> Path:
    out = _out_dir(args)
    (out / "config.json").write_text(config_to_json(cfg))
    return out


def _cmd_synth(args) -> int:
    if args.config:
        spec = scene_from_json(Path(args.config).read_text())
    else:
        spec = SceneSpec()
    if args.seed is not None:
        spec.seed = args.seed
    out = _out_dir(args)
    i1, i2, truth = generate_pair(spec)
    save_f32(i1, out / "i1.sarf")
    save_f32(i2, out / "i2.sarf")
    save_pgm(i1, out / "i1.pgm")
    save_pgm(i2, out / "i2.pgm")
    save_binary(truth, out / "truth.pgm")
    (out / "scene.json").write_text(scene_to_json(spec))
    print(f"wrote scene ({spec.width}x{spec.height}, {int(truth.sum())} changed px) to {out}")
    return EXIT_OK


def _compute_ddi(args, cfg: PipelineConfig, out: Path) -> np.ndarray:
    ddi_path = out / "ddi.sarf"
    if not ddi_path.exists():
        i1 = _load_image(args.i1)
        i2 = _load_image(args.i2)
        ddi = deep_difference(i1, i2, cfg.ddi_params())
        save_f32(ddi, ddi_path)
        _save_preview(ddi, out / "ddi_preview.pgm")
    else:
        print(f"reusing {ddi_path}")
    # downstream stages always consume the stored float32 image, so resumed
    # and one-shot runs see bit-identical data
    return load_f32(ddi_path)


def _cmd_ddi(args) -> int:
    cfg = _load_config(args)
    out = _pipeline_out_dir(args, cfg)
    ddi = _compute_ddi(args, cfg, out)
    print(f"ddi: {ddi.shape[1]}x{ddi.shape[0]}, range [{ddi.min():.4f}, {ddi.max():.4f}]")
    return EXIT_OK


def _compute_pseudo(args, cfg: PipelineConfig, out: Path, ddi: np.ndarray) -> np.ndarray:
    pseudo_path = out / "pseudo.pgm"
    if pseudo_path.exists():
        print(f"reusing {pseudo_path}")
        return load_three_way(pseudo_path)
    pseudo = pfcmc(ddi, cfg.pfcmc_config())
    save_three_way(pseudo, pseudo_path)
    return pseudo


def _cmd_cluster(args) -> int:
    cfg = _load_config(args)
    out = _pipeline_out_dir(args, cfg)
    ddi = _compute_ddi(args, cfg, out)
    pseudo = _compute_pseudo(args, cfg, out, ddi)
    counts = {label: int((pseudo == value).sum()) for label, value in
              (("unchanged", 0), ("changed", 1), ("intermediate", 2))}
    print(f"pseudo-labels: {counts}")
    return EXIT_OK


def _cmd_detect(args) -> int:
    cfg = _load_config(args)
    out = _pipeline_out_dir(args, cfg)
    i1 = _load_image(args.i1)
    i2 = _load_image(args.i2)
    ddi = _compute_ddi(args, cfg, out)
    pseudo = _compute_pseudo(args, cfg, out, ddi)
    result = run_pipeline(i1, i2, cfg, ddi=ddi, pseudo=pseudo)
    save_binary(result.change_map, out / "change_map.pgm")
    if result.pcanet_model is not None:
        pcanet.save_model(result.pcanet_model, out / "pcanet.sarm")
    if result.svm_model is not None:
        svm.save_svm(result.svm_model, out / "svm.sars")
    if args.truth:
        truth = load_binary(args.truth)
        doc = evaluate(result.change_map, truth)
        (out / "metrics.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(json.dumps(doc, sort_keys=True))
    if result.fallback:
        print("warning: degenerate training, change map is the clustering result only",
              file=sys.stderr)
        return EXIT_DEGENERATE_TRAINING
    print(f"wrote change map ({int(result.change_map.sum())} changed px) to {out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    pred = load_binary(args.pred)
    truth = load_binary(args.truth)
    doc = evaluate(pred, truth)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        (_out_dir(args) / "metrics.json").write_text(text)
    print(json.dumps(doc, sort_keys=True))
    return EXIT_OK


def _parse_grid(text: str, what: str, cast):
    try:
        values = [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise SarcdError(f"invalid {what} list: {text!r}") from None
    if not values:
        raise SarcdError(f"empty {what} list")
    return values


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = _pipeline_out_dir(args, cfg)
    i1 = _load_image(args.i1)
    i2 = _load_image(args.i2)
    truth = load_binary(args.truth)
    t_list = _parse_grid(args.T, "T", int)
    b_list = _parse_grid(args.b, "b", float)
    rows = sweep(i1, i2, truth, cfg, t_list, b_list)
    csv_text = sweep_csv(rows)
    (out / "sweep.csv").write_text(csv_text)
    print(csv_text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sarcd",
        description="Change detection for bi-temporal SAR image pairs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, *, images=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        if images:
            p.add_argument("--i1", required=True, help="first acquisition (.pgm or .sarf)")
            p.add_argument("--i2", required=True, help="second acquisition (.pgm or .sarf)")
        p.add_argument("--out", required=True, help="run directory for artifacts")
        p.set_defaults(func=func)
        return p

    add("synth", _cmd_synth, "generate a synthetic scene with ground truth")
    add("ddi", _cmd_ddi, "compute the deep difference image", images=True)
    add("cluster", _cmd_cluster, "compute three-way pseudo-labels", images=True)
    detect = add("detect", _cmd_detect, "run the full detection pipeline", images=True)
    detect.add_argument("--truth", help="ground truth map (.pgm); enables metrics.json")
    eval_p = sub.add_parser("eval", help="score a change map against ground truth")
    eval_p.add_argument("--pred", required=True, help="predicted change map (.pgm)")
    eval_p.add_argument("--truth", required=True, help="ground truth map (.pgm)")
    eval_p.add_argument("--out", help="optional directory for metrics.json")
    eval_p.set_defaults(func=_cmd_eval)
    sweep_p = add("sweep", _cmd_sweep, "run the pipeline over a (T, b) grid", images=True)
    sweep_p.add_argument("--truth", required=True, help="ground truth map (.pgm)")
    sweep_p.add_argument("--T", required=True, help="comma-separated accumulation counts")
    sweep_p.add_argument("--b", required=True, help="comma-separated center biases")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DegenerateInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE_INPUT
    except (SarcdError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
