"""Weak-expert ensemble: motion-bounded search scope, per-window correlation
detections, reliability scoring and selection of the strongest decision."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import corrfilter, features
from .imaging import Rect, sample_windows


@dataclass(frozen=True)
class SearchScope:
    """Search region centered on the previous target position.

    dx, dy are the per-axis maximum historical displacements; the window grid
    covers [center - (dx, dy), center + (dx, dy)].
    """

    cx: float
    cy: float
    dx: float = 0.0
    dy: float = 0.0
    padding: float = 1.2


@dataclass
class ExpertDecision:
    expert_id: int
    window: Rect
    peak_x: float
    peak_y: float
    response: np.ndarray
    f_max: float
    apce: float
    weight: float = 0.0


@dataclass
class ReliabilityState:
    """Running means of the selected expert's historical peak score and APCE."""

    mean_fmax: float = 0.0
    mean_apce: float = 0.0
    count: int = 0

    def record(self, f_max: float, apce_value: float) -> None:
        self.mean_fmax = (self.mean_fmax * self.count + f_max) / (self.count + 1)
        self.mean_apce = (self.mean_apce * self.count + apce_value) / (self.count + 1)
        self.count += 1


def update_motion_bound(dx: float, dy: float, mu, mu_prev) -> tuple[float, float]:
    """Grow the per-axis displacement bounds with the latest step; never shrinks."""
    return (max(dx, abs(mu[0] - mu_prev[0])), max(dy, abs(mu[1] - mu_prev[1])))


def _axis_offsets(bound: float, stride: float) -> np.ndarray:
    if bound <= 0 or stride <= 0:
        return np.zeros(1)
    n = int(np.ceil(bound / stride))
    return np.arange(-n, n + 1) * (bound / n)


def tile_windows(scope: SearchScope, target: Rect, max_experts: int = 9) -> list[Rect]:
    """Grid of search windows of size padding*target covering the scope.

    Stride is half the target extent per axis (endpoints pinned to the scope
    bounds), the window at the scope center is always present, and when the
    grid exceeds max_experts only the centermost windows are kept.
    """
    ox = _axis_offsets(scope.dx, target.w / 2.0)
    oy = _axis_offsets(scope.dy, target.h / 2.0)
    cells = [(x, y) for y in oy for x in ox]
    cells.sort(key=lambda c: (c[0] ** 2 + c[1] ** 2, c[1], c[0]))
    w, h = target.w * scope.padding, target.h * scope.padding
    return [Rect(scope.cx + x, scope.cy + y, w, h) for x, y in cells[:max_experts]]


def apce(s: np.ndarray) -> float:
    """Average peak-to-correlation energy of a response map; 0 for flat maps."""
    s = np.asarray(s, dtype=np.float64)
    if s.size == 0:
        raise ValueError("empty response map")
    f_min = s.min()
    f_max = s.max()
    denom = np.mean((s - f_min) ** 2)
    if denom < 1e-12:
        return 0.0
    return float(abs(f_max - f_min) ** 2 / denom)


def weak_decide(model: corrfilter.FilterModel, frame: np.ndarray, window: Rect,
                cell_size: int, expert_id: int = 0) -> ExpertDecision:
    """Run one correlation-filter detection on one search window.

    The window is resampled to the model's training patch size, so the cell
    displacement scales back by (window extent / patch extent).
    """
    d = weak_decide_batch(model, frame, [window], cell_size)[0]
    d.expert_id = expert_id
    return d


def weak_decide_batch(model: corrfilter.FilterModel, frame: np.ndarray,
                      windows: list[Rect], cell_size: int) -> list[ExpertDecision]:
    """weak_decide over several windows with one shared feature pass."""
    p, q = model.grid
    patch_h, patch_w = p * cell_size, q * cell_size
    centers = np.array([[w.cx, w.cy] for w in windows])
    sizes = np.array([[w.w, w.h] for w in windows])
    pixels = sample_windows(frame, centers, sizes, patch_h, patch_w)
    feats = features.hog_stack(pixels, cell_size)
    out = []
    for k, window in enumerate(windows):
        resp = corrfilter.respond(model, feats[k])
        dx_cells, dy_cells, f_max = corrfilter.peak_displacement(resp, model.peak)
        peak_x = window.cx + dx_cells * cell_size * (window.w / patch_w)
        peak_y = window.cy + dy_cells * cell_size * (window.h / patch_h)
        out.append(ExpertDecision(k, window, peak_x, peak_y, resp, f_max, apce(resp)))
    return out


def expert_weights(decisions: list[ExpertDecision],
                   mode: str = "fmax_apce") -> list[ExpertDecision]:
    """Fill normalized weights in place; returns the same list.

    Default scores each expert by f_max * apce; mode "fmax" uses f_max alone.
    All-zero scores fall back to uniform weights.
    """
    if not decisions:
        raise ValueError("need at least one decision")
    if mode == "fmax_apce":
        raw = np.array([max(d.f_max, 0.0) * d.apce for d in decisions])
    elif mode == "fmax":
        raw = np.array([max(d.f_max, 0.0) for d in decisions])
    else:
        raise ValueError(f"unknown weight mode: {mode}")
    total = raw.sum()
    weights = raw / total if total > 0 else np.full(len(decisions), 1.0 / len(decisions))
    for d, w in zip(decisions, weights):
        d.weight = float(w)
    return decisions


def select_expert(decisions: list[ExpertDecision]) -> tuple[tuple[float, float], int]:
    """Peak position of the maximum-weight expert; ties go to the lowest id."""
    best = max(decisions, key=lambda d: (d.weight, -d.expert_id))
    return (best.peak_x, best.peak_y), best.expert_id


def reliability_gate(state: ReliabilityState, best: ExpertDecision,
                     beta_f: float, beta_a: float) -> bool:
    """Ratio test of the best decision against historical means.

    Passes unconditionally for the first two frames; the means accumulate
    only on passing frames so unreliable detections never pollute history.
    """
    ok = (state.count < 2
          or (best.f_max >= beta_f * state.mean_fmax
              and best.apce >= beta_a * state.mean_apce))
    if ok:
        state.record(best.f_max, best.apce)
    return ok
