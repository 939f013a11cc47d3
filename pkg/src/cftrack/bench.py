"""Benchmark harness: OTB-format sequence loading, synthetic sequence
generation, one-pass-evaluation metrics, and result file emission."""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import tracker
from .imaging import Rect, load_frame, resize_bilinear

_FRAME_EXTS = (".jpg", ".jpeg", ".png", ".pgm", ".bmp")


class SequenceFormatError(ValueError):
    """Raised when a sequence directory does not follow the expected layout."""


@dataclass
class Sequence:
    """Ordered frames with per-frame ground-truth boxes in corner form (x, y, w, h)."""

    name: str
    gt: np.ndarray                                # (N, 4)
    frame_paths: list[str] | None = None
    frames: list[np.ndarray] | None = None
    attributes: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.gt)

    def frame(self, i: int) -> np.ndarray:
        if self.frames is not None:
            return self.frames[i]
        return load_frame(self.frame_paths[i])

    def gt_rect(self, i: int) -> Rect:
        x, y, w, h = self.gt[i]
        return Rect.from_corner(x, y, w, h)


def load_sequence(seq_dir) -> Sequence:
    """Read an OTB-style directory: img/ frames plus groundtruth_rect.txt.

    Ground-truth lines are "x,y,w,h" (comma, tab, or whitespace separated)
    and are taken at face value; known per-sequence annotation quirks of the
    public datasets are not corrected here.
    """
    seq_dir = Path(seq_dir)
    img_dir = seq_dir / "img"
    if not img_dir.is_dir():
        raise SequenceFormatError(f"{seq_dir}: missing img/ directory")
    paths = sorted(p for p in img_dir.iterdir() if p.suffix.lower() in _FRAME_EXTS)
    if not paths:
        raise SequenceFormatError(f"{img_dir}: no frames found")
    gt_file = seq_dir / "groundtruth_rect.txt"
    if not gt_file.is_file():
        raise SequenceFormatError(f"{seq_dir}: missing groundtruth_rect.txt")
    boxes = []
    for lineno, line in enumerate(gt_file.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = re.split(r"[,\t ]+", line.strip())
        try:
            vals = [float(v) for v in parts]
        except ValueError as exc:
            raise SequenceFormatError(f"{gt_file}:{lineno}: unparsable line {line!r}") from exc
        if len(vals) != 4:
            raise SequenceFormatError(f"{gt_file}:{lineno}: expected 4 values, got {len(vals)}")
        if vals[2] <= 0 or vals[3] <= 0:
            raise SequenceFormatError(f"{gt_file}:{lineno}: non-positive box extents")
        boxes.append(vals)
    if len(boxes) != len(paths):
        raise SequenceFormatError(
            f"{seq_dir}: {len(paths)} frames but {len(boxes)} ground-truth lines")
    attrs: list[str] = []
    attr_file = seq_dir / "attrs.txt"
    if attr_file.is_file():
        attrs = [a for a in re.split(r"[,\s]+", attr_file.read_text().strip()) if a]
    return Sequence(name=seq_dir.name, gt=np.asarray(boxes, dtype=np.float64),
                    frame_paths=[str(p) for p in paths], attributes=attrs)


# ---------------------------------------------------------------------------
# Synthetic sequences

@dataclass(frozen=True)
class SyntheticScript:
    """Per-frame target placement on a textured square over a noise background."""

    name: str
    width: int
    height: int
    base_w: float
    base_h: float
    centers: np.ndarray                 # (N, 2) as (cx, cy)
    scales: np.ndarray                  # (N,)
    occluded: np.ndarray                # (N,) bool

    def __len__(self) -> int:
        return len(self.scales)


def make_script(name: str, n_frames: int = 80, width: int = 320, height: int = 240,
                base_w: float = 40.0, base_h: float = 40.0) -> SyntheticScript:
    """Named motion scripts used by the CLI and the verification suite."""
    cx0, cy0 = width * 0.35, height * 0.5
    centers = np.tile([cx0, cy0], (n_frames, 1)).astype(np.float64)
    scales = np.ones(n_frames)
    occluded = np.zeros(n_frames, dtype=bool)
    t = np.arange(n_frames, dtype=np.float64)
    if name == "static":
        pass
    elif name == "linear":
        centers[:, 0] = cx0 + 2.0 * t
    elif name == "fast":
        # speed ramps from 1 to 15 px/frame, then stays at 15
        speed = np.minimum(1.0 + t * 0.7, 15.0)
        centers[:, 0] = cx0 + np.cumsum(speed) - speed[0]
    elif name == "scale":
        scales = 1.0 + 0.8 * t / max(n_frames - 1, 1)
    elif name == "occlusion":
        third = n_frames // 3
        occluded[third:third + 5] = True
    else:
        raise ValueError(f"unknown synthetic script: {name}")
    centers[:, 0] = np.clip(centers[:, 0], base_w, width - base_w)
    centers[:, 1] = np.clip(centers[:, 1], base_h, height - base_h)
    return SyntheticScript(name, width, height, base_w, base_h, centers, scales, occluded)


def _target_texture(rng: np.random.Generator, res: int = 64) -> np.ndarray:
    """High-contrast structured pattern sampled when rendering the target."""
    u = (np.arange(res) + 0.5) / res
    uu, vv = np.meshgrid(u, u, indexing="xy")
    checker = ((np.floor(uu * 3) + np.floor(vv * 3)) % 2) * 0.55 + 0.2
    grad = 0.15 * uu
    tex = checker + grad + 0.05 * rng.standard_normal((res, res))
    border = (uu < 0.08) | (uu > 0.92) | (vv < 0.08) | (vv > 0.92)
    tex[border] = 0.95
    return np.clip(tex, 0.0, 1.0)


def _render_target(frame: np.ndarray, tex: np.ndarray, cx: float, cy: float,
                   w: float, h: float) -> None:
    """Paste the texture over [cx +- w/2, cy +- h/2] with 2x2 supersampling."""
    x_lo = max(int(np.ceil(cx - w / 2.0 - 0.5)), 0)
    x_hi = min(int(np.floor(cx + w / 2.0 + 0.5)), frame.shape[1] - 1)
    y_lo = max(int(np.ceil(cy - h / 2.0 - 0.5)), 0)
    y_hi = min(int(np.floor(cy + h / 2.0 + 0.5)), frame.shape[0] - 1)
    if x_hi < x_lo or y_hi < y_lo:
        return
    xs = np.arange(x_lo, x_hi + 1, dtype=np.float64)
    ys = np.arange(y_lo, y_hi + 1, dtype=np.float64)
    acc = np.zeros((len(ys), len(xs)))
    cover = np.zeros((len(ys), len(xs)))
    res = tex.shape[0]
    for oy in (-0.25, 0.25):
        for ox_ in (-0.25, 0.25):
            u = (xs + ox_ - (cx - w / 2.0)) / w
            v = (ys + oy - (cy - h / 2.0)) / h
            inside = (u >= 0) & (u < 1)
            inside_v = (v >= 0) & (v < 1)
            mask = inside_v[:, None] & inside[None, :]
            ti = np.clip((v * res - 0.5), 0, res - 1)
            tj = np.clip((u * res - 0.5), 0, res - 1)
            i0 = np.floor(ti).astype(int); i1 = np.minimum(i0 + 1, res - 1)
            j0 = np.floor(tj).astype(int); j1 = np.minimum(j0 + 1, res - 1)
            fi = (ti - i0)[:, None]; fj = (tj - j0)[None, :]
            sampled = (tex[np.ix_(i0, j0)] * (1 - fi) * (1 - fj)
                       + tex[np.ix_(i0, j1)] * (1 - fi) * fj
                       + tex[np.ix_(i1, j0)] * fi * (1 - fj)
                       + tex[np.ix_(i1, j1)] * fi * fj)
            acc += np.where(mask, sampled, 0.0)
            cover += mask
    region = frame[y_lo:y_hi + 1, x_lo:x_hi + 1]
    frame[y_lo:y_hi + 1, x_lo:x_hi + 1] = region * (1.0 - cover / 4.0) + acc / 4.0


def gen_synthetic(script: SyntheticScript, seed: int = 0) -> Sequence:
    """Materialize a scripted sequence in memory; ground truth equals the script."""
    rng = np.random.default_rng((seed, 0xC0FFEE))
    coarse = rng.standard_normal((script.height // 20 + 2, script.width // 20 + 2))
    background = np.clip(
        0.5
        + 0.10 * resize_bilinear(coarse, script.height, script.width)
        + 0.04 * rng.standard_normal((script.height, script.width)),
        0.0, 1.0)
    tex = _target_texture(rng)
    frames = []
    gt = np.empty((len(script), 4))
    for i in range(len(script)):
        frame = background.copy()
        cx, cy = script.centers[i]
        w = script.base_w * script.scales[i]
        h = script.base_h * script.scales[i]
        if not script.occluded[i]:
            _render_target(frame, tex, cx, cy, w, h)
        frames.append(np.clip(frame, 0.0, 1.0))
        gt[i] = (cx - w / 2.0, cy - h / 2.0, w, h)
    return Sequence(name=script.name, gt=gt, frames=frames)


def write_sequence(seq: Sequence, out_dir) -> None:
    """Write a sequence to disk in the OTB directory layout."""
    out_dir = Path(out_dir)
    img_dir = out_dir / "img"
    img_dir.mkdir(parents=True, exist_ok=True)
    for i in range(len(seq)):
        arr = np.clip(seq.frame(i) * 255.0, 0, 255).astype(np.uint8)
        Image.fromarray(arr, mode="L").save(img_dir / f"{i + 1:04d}.png")
    lines = [",".join(f"{v:.2f}" for v in row) for row in seq.gt]
    (out_dir / "groundtruth_rect.txt").write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Metrics

def iou(a, b) -> float:
    """Intersection over union of two corner-form boxes."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


def center_errors(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    pc = pred[:, :2] + pred[:, 2:] / 2.0
    gc = gt[:, :2] + gt[:, 2:] / 2.0
    return np.hypot(pc[:, 0] - gc[:, 0], pc[:, 1] - gc[:, 1])


def overlaps(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    return np.array([iou(p, g) for p, g in zip(pred, gt)])


def precision_curve(pred, gt) -> tuple[np.ndarray, float]:
    """Fraction of frames with center error <= t for integer t in 0..50."""
    pred, gt = np.atleast_2d(pred), np.atleast_2d(gt)
    if len(pred) != len(gt) or len(pred) == 0:
        raise ValueError("prediction and ground-truth lengths differ or are empty")
    err = center_errors(pred, gt)
    thresholds = np.arange(51)
    curve = np.mean(err[None, :] <= thresholds[:, None], axis=1)
    return curve, float(curve[20])


def success_curve(pred, gt) -> tuple[np.ndarray, float]:
    """Fraction of frames with overlap > t at 21 thresholds 0, 0.05, ..., 1.

    The area under the curve is the mean of the 21 values.
    """
    pred, gt = np.atleast_2d(pred), np.atleast_2d(gt)
    if len(pred) != len(gt) or len(pred) == 0:
        raise ValueError("prediction and ground-truth lengths differ or are empty")
    ov = overlaps(pred, gt)
    thresholds = np.linspace(0.0, 1.0, 21)
    curve = np.mean(ov[None, :] > thresholds[:, None], axis=1)
    return curve, float(np.mean(curve))


@dataclass
class EvalResult:
    boxes: np.ndarray
    center_errors: np.ndarray
    overlaps: np.ndarray
    precision: np.ndarray
    success: np.ndarray
    precision_20: float
    success_auc: float
    mean_fps: float


def evaluate(pred: np.ndarray, gt: np.ndarray, mean_fps: float = 0.0) -> EvalResult:
    prec, p20 = precision_curve(pred, gt)
    succ, auc = success_curve(pred, gt)
    return EvalResult(boxes=np.asarray(pred, dtype=np.float64),
                      center_errors=center_errors(pred, gt),
                      overlaps=overlaps(pred, gt),
                      precision=prec, success=succ,
                      precision_20=p20, success_auc=auc, mean_fps=mean_fps)


def run_ope(seq: Sequence, cfg: tracker.TrackerConfig | None = None,
            max_frames: int | None = None) -> tuple[np.ndarray, float]:
    """One-pass evaluation: init from the first ground-truth box, never restart.

    Returns predicted corner boxes and the mean FPS of the tracking calls
    alone (frame decode excluded).
    """
    n = len(seq) if max_frames is None else min(max_frames, len(seq))
    if n < 1:
        raise ValueError("sequence has no frames")
    boxes = np.empty((n, 4))
    frame0 = seq.frame(0)
    t0 = time.perf_counter()
    state = tracker.init(frame0, seq.gt_rect(0), cfg)
    elapsed = time.perf_counter() - t0
    boxes[0] = seq.gt[0]
    for i in range(1, n):
        frame = seq.frame(i)
        t0 = time.perf_counter()
        state, box = tracker.step(state, frame)
        elapsed += time.perf_counter() - t0
        boxes[i] = box.corner()
    return boxes, (n / elapsed if elapsed > 0 else float("inf"))


# ---------------------------------------------------------------------------
# Result emission

def _fmt(v: float) -> str:
    return f"{v:.6f}"


def emit_results(result: EvalResult, out_dir) -> None:
    """Write boxes.csv, metrics.txt and the two curve tables; deterministic."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    box_lines = ["frame,x,y,w,h"]
    for i, (x, y, w, h) in enumerate(result.boxes, start=1):
        box_lines.append(f"{i},{x:.3f},{y:.3f},{w:.3f},{h:.3f}")
    (out_dir / "boxes.csv").write_text("\n".join(box_lines) + "\n")

    metrics = [
        f"n_frames={len(result.boxes)}",
        f"precision_20={_fmt(result.precision_20)}",
        f"success_auc={_fmt(result.success_auc)}",
        f"mean_fps={_fmt(result.mean_fps)}",
        f"mean_center_error={_fmt(float(np.mean(result.center_errors)))}",
        f"mean_overlap={_fmt(float(np.mean(result.overlaps)))}",
    ]
    (out_dir / "metrics.txt").write_text("\n".join(metrics) + "\n")

    prec = ["threshold,value"] + [
        f"{t},{_fmt(v)}" for t, v in zip(range(51), result.precision)]
    (out_dir / "precision.csv").write_text("\n".join(prec) + "\n")
    succ = ["threshold,value"] + [
        f"{t:.2f},{_fmt(v)}" for t, v in zip(np.linspace(0, 1, 21), result.success)]
    (out_dir / "success.csv").write_text("\n".join(succ) + "\n")


def read_boxes_csv(path) -> np.ndarray:
    """Read a boxes.csv written by emit_results back into corner boxes."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "frame,x,y,w,h":
        raise SequenceFormatError(f"{path}: not a boxes.csv file")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise SequenceFormatError(f"{path}:{lineno}: expected 5 fields")
        rows.append([float(v) for v in parts[1:]])
    return np.asarray(rows, dtype=np.float64)
