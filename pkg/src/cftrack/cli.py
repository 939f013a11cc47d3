"""Command-line entry point: track one sequence, score predictions, write
synthetic sequences, or benchmark a dataset directory."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import bench
from .tracker import TrackerConfig


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_CONFIG_TYPES = {f.name: type(getattr(TrackerConfig(), f.name))
                 for f in dataclasses.fields(TrackerConfig)}


def load_config(path, overrides: dict | None = None) -> TrackerConfig:
    """Parse a flat key=value config file; unknown keys are a startup error."""
    values: dict = {}
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in _CONFIG_TYPES:
                raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
            typ = _CONFIG_TYPES[key]
            try:
                values[key] = raw if typ is str else typ(raw)
            except ValueError:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {raw!r}") from None
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return TrackerConfig(**values)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _build_parser() -> _Parser:
    parser = _Parser(prog="cftrack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_tracking=True):
        p.add_argument("--out", default="out", help="output directory")
        if with_tracking:
            p.add_argument("--config", default=None, help="key=value config file")
            p.add_argument("--seed", type=int, default=None, help="rng seed (default 0)")
            p.add_argument("--max-frames", type=int, default=None,
                           help="truncate sequences to N frames")
            p.add_argument("--kernel", choices=("linear", "gaussian"), default=None)

    p_track = sub.add_parser("track", help="run the tracker over one sequence")
    p_track.add_argument("seq_dir")
    add_common(p_track)

    p_eval = sub.add_parser("eval", help="score an existing boxes.csv")
    p_eval.add_argument("pred_csv")
    p_eval.add_argument("seq_dir")
    add_common(p_eval, with_tracking=False)

    p_synth = sub.add_parser("synth", help="write a synthetic sequence to disk")
    p_synth.add_argument("spec_name",
                         choices=("static", "linear", "fast", "scale", "occlusion"))
    p_synth.add_argument("--out", default="out")
    p_synth.add_argument("--seed", type=int, default=None)
    p_synth.add_argument("--frames", type=int, default=80)

    p_bench = sub.add_parser("bench", help="evaluate every sequence in a dataset root")
    p_bench.add_argument("dataset_root")
    add_common(p_bench)
    return parser


def _tracking_config(args) -> TrackerConfig:
    return load_config(args.config, {
        "rng_seed": args.seed,
        "kernel": args.kernel,
    })


def _track_one(seq: bench.Sequence, args, out_dir: Path) -> bench.EvalResult:
    cfg = _tracking_config(args)
    boxes, fps = bench.run_ope(seq, cfg, args.max_frames)
    n = len(boxes)
    result = bench.evaluate(boxes, seq.gt[:n], fps)
    bench.emit_results(result, out_dir)
    return result


def run(argv) -> int:
    """Execute one subcommand; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1

    try:
        if args.command == "track":
            seq = bench.load_sequence(args.seq_dir)
            result = _track_one(seq, args, Path(args.out))
            print(f"{seq.name}: precision_20={result.precision_20:.3f} "
                  f"success_auc={result.success_auc:.3f} fps={result.mean_fps:.1f}")
        elif args.command == "eval":
            seq = bench.load_sequence(args.seq_dir)
            pred = bench.read_boxes_csv(args.pred_csv)
            if len(pred) > len(seq.gt):
                raise bench.SequenceFormatError(
                    f"{args.pred_csv}: more predictions than ground-truth frames")
            result = bench.evaluate(pred, seq.gt[:len(pred)], 0.0)
            bench.emit_results(result, Path(args.out))
            print(f"precision_20={result.precision_20:.3f} "
                  f"success_auc={result.success_auc:.3f}")
        elif args.command == "synth":
            seed = args.seed if args.seed is not None else 0
            script = bench.make_script(args.spec_name, n_frames=args.frames)
            seq = bench.gen_synthetic(script, seed)
            bench.write_sequence(seq, Path(args.out))
            print(f"wrote {len(seq)} frames to {args.out}")
        elif args.command == "bench":
            root = Path(args.dataset_root)
            seq_dirs = sorted(d for d in root.iterdir()
                              if d.is_dir() and (d / "img").is_dir())
            if not seq_dirs:
                raise bench.SequenceFormatError(f"{root}: no sequence directories")
            rows = []
            for d in seq_dirs:
                seq = bench.load_sequence(d)
                result = _track_one(seq, args, Path(args.out) / seq.name)
                rows.append((seq.name, result))
                print(f"{seq.name}: precision_20={result.precision_20:.3f} "
                      f"success_auc={result.success_auc:.3f} fps={result.mean_fps:.1f}")
            agg = [
                f"n_sequences={len(rows)}",
                f"precision_20={np.mean([r.precision_20 for _, r in rows]):.6f}",
                f"success_auc={np.mean([r.success_auc for _, r in rows]):.6f}",
                f"mean_fps={np.mean([r.mean_fps for _, r in rows]):.6f}",
            ]
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / "metrics.txt").write_text("\n".join(agg) + "\n")
            print(f"aggregate over {len(rows)} sequences written to {out / 'metrics.txt'}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))
