"""Command-line driver: synth, render, train, score, eval, sweep-views, viz.

Usage::

    mvp-pclip <command> [--config run.cfg] [--key=value ...] [command options]

Any :class:`~mvp_pclip.config.RunConfig` key can be overridden with
``--key=value``. Every command writes ``stamp.txt`` (config hash and seed)
and ``config.txt`` (the fully resolved config) next to its outputs. The
``MVP_THREADS`` environment variable sets the torch thread count.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import torch

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig, load_config, parse_overrides
from .data import (export_colored, generate, load_cloud, load_split, read_manifest, save_split)
from .fileio import atomic_write_text
from .geometry import CameraIntrinsics, PointCloud, generate_view_rig, normalize_cloud
from .metrics import EvalReport, evaluate
from .model import MVPCLIP
from .rendering import coverage, export_views, render_all
from .scoring import AnomalyResult
from .training import train

log = logging.getLogger("mvp_pclip")

THREADS_ENV = "MVP_THREADS"


# ---------------------------------------------------------------------------
# shared plumbing


def write_stamp(out_dir, cfg: RunConfig, command: str) -> None:
    out_dir = Path(out_dir)
    atomic_write_text(out_dir / "config.txt", cfg.to_text())
    atomic_write_text(out_dir / "stamp.txt",
                      f"command = {command}\nconfig_sha256 = {cfg.digest()}\nseed = {cfg.seed}\n")


def _out_dir(cfg: RunConfig, args, command: str) -> Path:
    out = Path(args.out) if args.out else Path(cfg.out_dir) / command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(cfg: RunConfig, args) -> Path:
    return Path(args.manifest) if getattr(args, "manifest", None) else Path(cfg.data_dir) / "manifest.txt"


def _model(cfg: RunConfig, checkpoint: Optional[str]) -> MVPCLIP:
    """Detector from a checkpoint, or with freshly initialised prompts."""
    if checkpoint is None:
        return MVPCLIP(cfg.pipeline(), prompt_seed=cfg.seed)
    model, _ = load_checkpoint(checkpoint)
    if model.config != cfg.pipeline():
        log.warning("checkpoint pipeline config differs from the run config; using the checkpoint's")
    return model


def format_scores(result: AnomalyResult) -> str:
    return "".join(f"{float(v)!r}\n" for v in result.map)


def write_scores(path, result: AnomalyResult) -> None:
    path = Path(path)
    atomic_write_text(path, format_scores(result))
    atomic_write_text(path.with_suffix(".summary"),
                      f"object_score = {result.score!r}\nn_points = {len(result.map)}\n")


def read_scores(path, n: Optional[int] = None) -> np.ndarray:
    vals = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            s = line.strip()
            if not s:
                continue
            try:
                vals.append(float(s))
            except ValueError:
                raise ValueError(f"{path} line {lineno}: not a number: {s!r}") from None
    scores = np.array(vals)
    if n is not None and len(scores) != n:
        raise ValueError(f"{path}: {len(scores)} scores for {n} points")
    return scores


def score_split(model: MVPCLIP, clouds: Dict[str, PointCloud]) -> Dict[str, AnomalyResult]:
    return {name: model.score(cloud) for name, cloud in clouds.items()}


# ---------------------------------------------------------------------------
# commands


def cmd_synth(cfg: RunConfig, args) -> Path:
    root = Path(args.out) if args.out else Path(cfg.data_dir)
    split = generate(cfg.synthetic_spec())
    manifest = save_split(split, root)
    types = "".join(f"{name} {kind}\n" for name, kind in sorted(split.anomaly_types.items()))
    atomic_write_text(root / "anomaly_types.txt", types)
    write_stamp(root, cfg, "synth")
    log.info("wrote %d train and %d test clouds to %s", len(split.train), len(split.test), root)
    return manifest


def cmd_render(cfg: RunConfig, args) -> Path:
    out = _out_dir(cfg, args, "render")
    rig = generate_view_rig(cfg.views, cfg.rig_radius,
                            intrinsics=CameraIntrinsics.default(cfg.image_size))
    lines = ["# cloud view image mask coverage\n"]
    for path in args.clouds:
        cloud = load_cloud(path)
        rendered = render_all(normalize_cloud(cloud), rig, cfg.splat_radius)
        cloud_id = Path(path).stem
        written = export_views(rendered, out, cloud_id)
        cov = coverage(rendered, len(cloud))
        for k in range(len(rendered)):
            lines.append(f"{cloud_id} {k} {written[2 * k].name} {written[2 * k + 1].name} {cov!r}\n")
    manifest = out / "views.txt"
    atomic_write_text(manifest, "".join(lines))
    write_stamp(out, cfg, "render")
    return manifest


def cmd_train(cfg: RunConfig, args) -> Path:
    out = _out_dir(cfg, args, "train")
    clouds = load_split(_manifest(cfg, args), "train")
    if not clouds:
        raise ValueError("no training clouds in the manifest")
    model = MVPCLIP(cfg.pipeline(), prompt_seed=cfg.seed)
    result = train(model, clouds, cfg.train_config(), checkpoint_dir=out,
                   log_path=out / "loss.log")
    final = out / "model.ckpt"
    save_checkpoint(final, model, {"epoch": cfg.epochs})
    epochs = ["# epoch iou focal ce total\n"] + [f"{bd.line(k)}\n" for k, bd in enumerate(result.epochs)]
    atomic_write_text(out / "epochs.txt", "".join(epochs))
    write_stamp(out, cfg, "train")
    log.info("loss %.6f -> %.6f", result.epochs[0].total, result.epochs[-1].total)
    return final


def cmd_score(cfg: RunConfig, args) -> Path:
    model = _model(cfg, args.checkpoint)
    cloud = load_cloud(args.cloud, category=args.category)
    result = model.score(cloud)
    output = Path(args.output) if args.output else _out_dir(cfg, args, "score") / f"{Path(args.cloud).stem}.scores.txt"
    output.parent.mkdir(parents=True, exist_ok=True)
    write_scores(output, result)
    write_stamp(output.parent, cfg, "score")
    print(f"object_score = {result.score!r}")
    return output


def cmd_eval(cfg: RunConfig, args) -> EvalReport:
    out = _out_dir(cfg, args, "eval")
    clouds = load_split(_manifest(cfg, args), args.split)
    if not clouds:
        raise ValueError(f"no '{args.split}' clouds in the manifest")
    model = _model(cfg, args.checkpoint)
    results = score_split(model, clouds)
    for name, res in results.items():
        write_scores(out / "scores" / f"{name}.txt", res)
    report = evaluate(results, clouds)
    atomic_write_text(out / "report.txt", report.to_table())
    atomic_write_text(out / "report.kv", report.to_keyvalue())
    write_stamp(out, cfg, "eval")
    sys.stdout.write(report.to_table())
    return report


def sweep_views(model: MVPCLIP, clouds: Dict[str, PointCloud], k_list: Sequence[int],
                repeats: int = 3) -> List[dict]:
    """Metrics, mean coverage and seconds per cloud for each view count.

    Each setting renders through the first ``k`` poses of one shared rig
    with ``max(k_list)`` cameras, so the visible point sets are nested.
    Timing is the minimum over ``repeats`` runs of render + encode + score.
    """
    enc = model.config.encoder
    full = generate_view_rig(max(k_list), model.config.rig_radius,
                             intrinsics=CameraIntrinsics.default(enc.image_size))
    rows = []
    for k in k_list:
        sub = model.with_rig(full.prefix(k))
        results, covs, secs = {}, [], []
        for name, cloud in clouds.items():
            best = float("inf")
            for _ in range(repeats):
                t0 = time.perf_counter()
                prep = sub.prepare(cloud)
                res = sub.score_prepared(prep)
                best = min(best, time.perf_counter() - t0)
            results[name] = res
            covs.append(coverage(prep.rendered, len(cloud)))
            secs.append(best)
        report = evaluate(results, clouds)
        rows.append(dict(views=k, coverage=float(np.mean(covs)), seconds=float(np.mean(secs)),
                         **report.as_dict()))
    return rows


def format_sweep(rows: Sequence[dict]) -> str:
    head = f"{'views':>5} {'coverage':>8} {'O-R':>6} {'P-R':>6} {'P-F':>6} {'P-P':>6} {'s/cloud':>8}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(f"{r['views']:>5} {r['coverage']:8.4f} {100 * r['o_auroc']:6.1f} "
                     f"{100 * r['p_auroc']:6.1f} {100 * r['p_maxf1']:6.1f} "
                     f"{100 * r['p_ap']:6.1f} {r['seconds']:8.4f}")
    return "\n".join(lines) + "\n"


def cmd_sweep_views(cfg: RunConfig, args) -> List[dict]:
    out = _out_dir(cfg, args, "sweep")
    clouds = load_split(_manifest(cfg, args), args.split)
    if not clouds:
        raise ValueError(f"no '{args.split}' clouds in the manifest")
    model = _model(cfg, args.checkpoint)
    rows = sweep_views(model, clouds, cfg.sweep_views, cfg.sweep_repeats)
    table = format_sweep(rows)
    atomic_write_text(out / "sweep.txt", table)
    write_stamp(out, cfg, "sweep-views")
    sys.stdout.write(table)
    return rows


def cmd_viz(cfg: RunConfig, args) -> Path:
    cloud = load_cloud(args.cloud)
    scores = read_scores(args.scores, len(cloud))
    output = Path(args.output)
    export_colored(cloud, scores, output)
    write_stamp(output.parent, cfg, "viz")
    return output


COMMANDS = {
    "synth": cmd_synth, "render": cmd_render, "train": cmd_train, "score": cmd_score,
    "eval": cmd_eval, "sweep-views": cmd_sweep_views, "viz": cmd_viz,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvp-pclip", allow_abbrev=False,
                                     description="Multi-view prompted point cloud anomaly detection.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, allow_abbrev=False)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--out", help="output directory")
        return p

    add("synth", "generate the synthetic benchmark")
    p = add("render", "render clouds to depth PNGs")
    p.add_argument("clouds", nargs="+")
    p = add("train", "train prompts on the training split")
    p.add_argument("--manifest")
    p = add("score", "score one cloud")
    p.add_argument("cloud")
    p.add_argument("--checkpoint")
    p.add_argument("--category", default="object")
    p.add_argument("--output")
    for name, help_text in (("eval", "evaluate a split"), ("sweep-views", "metrics versus view count")):
        p = add(name, help_text)
        p.add_argument("--checkpoint")
        p.add_argument("--manifest")
        p.add_argument("--split", default="test")
    p = add("viz", "write a score-colored PLY")
    p.add_argument("cloud")
    p.add_argument("scores")
    p.add_argument("output")
    return parser


def _set_threads() -> None:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    torch.set_num_threads(n)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    try:
        _set_threads()
        cfg = load_config(args.config, parse_overrides(extra))
        COMMANDS[args.command](cfg, args)
    except KeyboardInterrupt:
        print("error: interrupted", file=sys.stderr)
        return 130
    except Exception as exc:  # one-line diagnostic, no traceback
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


__all__ = ["COMMANDS", "build_parser", "cmd_eval", "cmd_render", "cmd_score", "cmd_sweep_views",
           "cmd_synth", "cmd_train", "cmd_viz", "format_sweep", "main", "read_scores",
           "sweep_views", "write_scores", "write_stamp"]
