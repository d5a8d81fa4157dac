"""Command-line entry point: synth / train / attack / eval subcommands.

Every command writes a manifest sufficient to re-run it; identical
configuration and seed reproduce identical output bytes (timestamps live
only in manifests under the "timestamp" key).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .attacks import ATTACK_NAMES, AttackConfig
from .boxes import BBox
from .eventcam import SceneConfig, save_sequence, synthesize_sequence
from .eventcam.io import load_sequence
from .eval import line_chart, precision_curve, run_benchmark, success_curve, write_report
from .tracker import (
    MODALITIES,
    TrackerConfig,
    TrainConfig,
    build_dataset,
    init_params,
    load_params,
    save_params,
    train,
)


class UsageFault(SystemExit):
    pass


def _fail(msg: str):
    print(f"error: {msg}", file=sys.stderr)
    raise SystemExit(2)


def _write_manifest(path, payload: dict):
    doc = dict(payload)
    doc["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _load_config_file(args):
    """Optional JSON config; explicit flags win.  Unknown keys rejected."""
    if not getattr(args, "config", None):
        return args
    with open(args.config, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    known = set(vars(args))
    for key, value in doc.items():
        if key not in known:
            _fail(f"unknown config key {key!r}")
        if getattr(args, key) is None:
            setattr(args, key, value)
    return args


def _parse_target(text):
    if text is None or text == "far-quadrant":
        return "far-quadrant"
    parts = text.split(",")
    if len(parts) != 4:
        _fail("--target expects 'far-quadrant' or 'x,y,w,h'")
    return BBox(*(float(v) for v in parts))


def _sequence_dirs(data_dir):
    if not os.path.isdir(data_dir):
        _fail(f"data directory {data_dir!r} does not exist")
    subdirs = sorted(
        os.path.join(data_dir, n) for n in os.listdir(data_dir)
        if os.path.isdir(os.path.join(data_dir, n, "frames")))
    if not subdirs:
        _fail(f"no sequence directories under {data_dir!r}")
    return subdirs


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args):
    if args.n <= 0:
        _fail("--n must be positive")
    out_dir = args.out
    if os.path.isdir(out_dir) and os.listdir(out_dir) and not args.force:
        _fail(f"output directory {out_dir!r} is not empty (use --force)")
    os.makedirs(out_dir, exist_ok=True)
    scene = SceneConfig(n_frames=args.frames, n_random_objects=args.objects)
    seeds = []
    for i in range(args.n):
        seed = args.seed + i
        frames, events, gt = synthesize_sequence(scene, seed=seed)
        seq_dir = os.path.join(out_dir, f"seq{i:04d}")
        os.makedirs(seq_dir, exist_ok=True)
        save_sequence(seq_dir, frames, events, gt)
        seeds.append(seed)
    _write_manifest(os.path.join(out_dir, "manifest.json"), {
        "command": "synth", "n": args.n, "seed": args.seed,
        "frames": args.frames, "objects": args.objects, "seeds": seeds,
        "canvas": [scene.width, scene.height], "fps": scene.fps,
        "contrast": scene.contrast,
    })
    print(f"wrote {args.n} sequences to {out_dir}")
    return 0


def cmd_train(args):
    seq_dirs = _sequence_dirs(args.data)
    sequences = [load_sequence(d) for d in seq_dirs]
    config = TrackerConfig(modality=args.modality)
    tconfig = TrainConfig(steps=args.steps, lr=args.lr, seed=args.seed)
    params = init_params(config, seed=args.seed)
    dataset = build_dataset(sequences, config, tconfig)
    params, losses = train(params, dataset, tconfig)
    ckpt = args.ckpt
    parent = os.path.dirname(os.path.abspath(ckpt))
    os.makedirs(parent, exist_ok=True)
    save_params(params, ckpt)
    curve_path = os.path.splitext(ckpt)[0] + "_loss.svg"
    window = max(1, len(losses) // 200)
    smoothed = [float(np.mean(losses[max(0, i - window):i + 1]))
                for i in range(len(losses))]
    line_chart([("train", list(range(len(losses))), smoothed)], curve_path,
               title="training loss", xlabel="step", ylabel="loss")
    _write_manifest(ckpt + ".manifest.json", {
        "command": "train", "data": args.data, "modality": args.modality,
        "steps": args.steps, "lr": args.lr, "seed": args.seed,
        "final_loss": float(np.mean(losses[-50:])),
    })
    print(f"checkpoint written to {ckpt} (final loss "
          f"{float(np.mean(losses[-50:])):.4f})")
    return 0


def _attack_config(args) -> AttackConfig:
    if args.eps is not None and args.eps < 0:
        _fail("--eps must be non-negative")
    if args.iters is not None and args.iters < 1:
        _fail("--iters must be at least 1")
    return AttackConfig(name=args.name, eps=args.eps, alpha=args.alpha,
                        iters=args.iters, loss_mode=args.loss,
                        temporal=args.temporal, target=_parse_target(args.target),
                        seed=args.seed, order=args.order)


def cmd_attack(args):
    params = _load_ckpt(args.ckpt)
    attack = _attack_config(args)
    seq_dirs = _sequence_dirs(args.data)
    os.makedirs(args.out, exist_ok=True)
    report = run_benchmark(params, seq_dirs, attack=attack,
                           manifest={"checkpoint": args.ckpt, "data": args.data})
    report_path = os.path.join(args.out, "attack_report.json")
    write_report(report, report_path)
    traces = []
    for s in report.sequences:
        if s.error is None and s.records:
            losses = [r.target_distance for r in s.records]
            traces.append((s.name, list(range(len(losses))), losses))
    if traces:
        line_chart(traces[:6], os.path.join(args.out, "target_distance.svg"),
                   title=f"{attack.name}: distance to attack target",
                   xlabel="frame", ylabel="px")
    _write_manifest(os.path.join(args.out, "manifest.json"), {
        "command": "attack", "name": attack.name,
        "eps": attack.resolve_eps(params.config.modality),
        "alpha": attack.alpha, "iters": attack.iters, "loss": attack.loss_mode,
        "temporal": attack.temporal,
        "target": (attack.target if isinstance(attack.target, str)
                   else list(attack.target.as_array())),
        "seed": attack.seed, "checkpoint": args.ckpt, "data": args.data,
    })
    failed = [s.name for s in report.sequences if s.error]
    print(f"attacked {len(report.sequences) - len(failed)} sequences; "
          f"PR {report.pr:.1f} NPR {report.npr:.1f} SR {report.sr:.1f}")
    if failed:
        print(f"failed sequences: {failed}", file=sys.stderr)
        return 1
    return 0


def _load_ckpt(path):
    if not path or not os.path.isfile(path):
        _fail(f"checkpoint {path!r} not found")
    return load_params(path)


def _print_table(rows):
    print(f"{'run':<14}{'PR':>8}{'NPR':>8}{'SR':>8}")
    for name, report in rows:
        print(f"{name:<14}{report.pr:>8.1f}{report.npr:>8.1f}{report.sr:>8.1f}")
    if len(rows) == 2:
        a, b = rows[0][1], rows[1][1]
        print(f"{'delta':<14}{b.pr - a.pr:>8.1f}{b.npr - a.npr:>8.1f}"
              f"{b.sr - a.sr:>8.1f}")


def cmd_eval(args):
    params = _load_ckpt(args.ckpt)
    seq_dirs = _sequence_dirs(args.data)
    os.makedirs(args.out, exist_ok=True)
    runs = []
    if args.compare == "clean" or args.compare is None:
        runs.append(("clean", None))
    elif args.compare == "attacked":
        runs.append((args.name, _attack_config(args)))
    else:  # both
        runs.append(("clean", None))
        runs.append((args.name, _attack_config(args)))

    rows = []
    exit_code = 0
    for label, attack in runs:
        report = run_benchmark(params, seq_dirs, attack=attack,
                               manifest={"checkpoint": args.ckpt,
                                         "data": args.data, "label": label})
        path = os.path.join(args.out, f"report_{label}.json")
        write_report(report, path)
        pooled = [r for s in report.sequences if s.error is None
                  for r in s.records]
        if pooled:
            ts, fr = success_curve(pooled)
            pt, pf = precision_curve(pooled)
            line_chart([(label, ts, fr * 100.0)],
                       os.path.join(args.out, f"success_{label}.svg"),
                       title=f"success curve ({label})",
                       xlabel="IoU threshold", ylabel="% frames")
            line_chart([(label, pt, pf * 100.0)],
                       os.path.join(args.out, f"precision_{label}.svg"),
                       title=f"precision curve ({label})",
                       xlabel="center error (px)", ylabel="% frames")
        if any(s.error for s in report.sequences):
            exit_code = 1
        rows.append((label, report))
    _print_table(rows)
    _write_manifest(os.path.join(args.out, "manifest.json"), {
        "command": "eval", "data": args.data, "checkpoint": args.ckpt,
        "compare": args.compare, "attack": args.name, "seed": args.seed,
    })
    return exit_code


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rgbe-advbench",
        description="Adversarial attack benchmark for RGB-Event tracking")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic sequences")
    p.add_argument("--n", type=int, required=True, help="number of sequences")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--frames", type=int, default=32)
    p.add_argument("--objects", type=int, default=2)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the surrogate tracker")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", required=True, help="output checkpoint path")
    p.add_argument("--modality", choices=MODALITIES, default="rgb")
    p.add_argument("--steps", type=int, default=2400)
    p.add_argument("--lr", type=float, default=3e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    def add_attack_flags(p):
        p.add_argument("--name", choices=ATTACK_NAMES, default="pgd-rgb")
        p.add_argument("--eps", type=float, default=None,
                       help="max perturbation (default 10 unimodal, 8 multimodal)")
        p.add_argument("--alpha", type=float, default=1.0)
        p.add_argument("--iters", type=int, default=10)
        p.add_argument("--loss", choices=("adv", "track"), default="adv")
        p.add_argument("--temporal", choices=("on", "off", "eq5-literal"),
                       default="off")
        p.add_argument("--target", default="far-quadrant",
                       help="'far-quadrant' or 'x,y,w,h' in patch coords")
        p.add_argument("--order", choices=("rgb-first", "voxel-first"),
                       default="rgb-first")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("attack", help="run an attack over sequences")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None, help="optional JSON config file")
    add_attack_flags(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("eval", help="evaluate clean and/or attacked tracking")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--compare", choices=("clean", "attacked", "both"),
                   default="clean")
    p.add_argument("--config", default=None)
    add_attack_flags(p)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args = _load_config_file(args)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
