"""Per-sequence tracking loop: weak correlation-filter experts over a
motion-bounded scope, reliability gating, particle-filter fusion, and
gated template/model adaptation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import corrfilter, ensemble, features, gpf
from .imaging import Rect, hann_window, sample_window


@dataclass(frozen=True)
class TrackerConfig:
    padding: float = 1.2
    kernel_sigma: float = 0.5          # feature bandwidth of the Gaussian kernel
    adaptation_rate: float = 0.045
    sample_count: int = 200
    theta: float = 0.65                # HOG share in the fused particle weights
    rho: float = 0.8                   # template retention rate
    ridge_lambda: float = 1e-4
    cell_size: int = 4
    max_experts: int = 9
    beta_f: float = 0.6
    beta_a: float = 0.5
    sigma_l: float = 0.2               # particle likelihood bandwidth
    template_w: int = 32
    template_h: int = 32
    s_min: float = 0.2
    s_max: float = 5.0
    rng_seed: int = 0
    kernel: str = "gaussian"           # "gaussian" | "linear"
    weight_mode: str = "fmax_apce"     # expert weighting: "fmax_apce" | "fmax"
    label_sigma_factor: float = 0.1
    model_size_cap: int = 96           # longest side of the training patch, px
    init_pos_std_factor: float = 0.1   # times the initial box extents
    init_scale_std: float = 0.02
    lost_pos_std: float = 3.0          # sampling spread when the gate fails
    lost_scale_std: float = 0.05
    process_pos_std: float = 1.0       # random-walk spread added per frame
    process_scale_std: float = 0.02

    def __post_init__(self):
        for name in ("adaptation_rate", "rho", "beta_f", "beta_a"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.sample_count < 1 or self.max_experts < 1 or self.cell_size < 1:
            raise ValueError("counts must be at least 1")
        if self.kernel not in ("gaussian", "linear"):
            raise ValueError(f"kernel must be 'gaussian' or 'linear', got {self.kernel!r}")


@dataclass
class TrackerState:
    cfg: TrackerConfig
    belief: gpf.GaussianBelief
    template: gpf.Template
    model: corrfilter.FilterModel
    motion_dx: float
    motion_dy: float
    reliability: ensemble.ReliabilityState
    frame_index: int
    base_w: float
    base_h: float
    patch_h: int
    patch_w: int
    label: corrfilter.GaussianLabel
    window: np.ndarray
    last_gate: bool = True
    last_experts: list = field(default_factory=list)


def _model_patch_size(cfg: TrackerConfig, box: Rect) -> tuple[int, int]:
    """Training patch size in pixels: padded box, capped, snapped to whole cells."""
    w = box.w * cfg.padding
    h = box.h * cfg.padding
    longest = max(w, h)
    if longest > cfg.model_size_cap:
        shrink = cfg.model_size_cap / longest
        w, h = w * shrink, h * shrink
    cell = cfg.cell_size
    pw = max(int(round(w / cell)), 3) * cell
    ph = max(int(round(h / cell)), 3) * cell
    return ph, pw


def _train_model(cfg: TrackerConfig, frame: np.ndarray, center: tuple[float, float],
                 size: tuple[float, float], state_bits) -> corrfilter.FilterModel:
    patch_h, patch_w, label, window = state_bits
    pixels = sample_window(frame, center[0], center[1], size[0], size[1],
                           patch_h, patch_w)
    feat = features.hog_stack(pixels, cfg.cell_size)
    if cfg.kernel == "linear":
        return corrfilter.train_linear(feat, label, cfg.ridge_lambda, window)
    return corrfilter.train_kcf(feat, label, cfg.ridge_lambda, cfg.kernel_sigma, window)


def init(frame: np.ndarray, box: Rect, cfg: TrackerConfig | None = None) -> TrackerState:
    """Train the filter and templates on the first frame and seed the belief."""
    cfg = cfg or TrackerConfig()
    if box.w < 2 or box.h < 2:
        raise ValueError(f"target box too small to track: {box.w}x{box.h}")
    patch_h, patch_w = _model_patch_size(cfg, box)
    p_cells, q_cells = patch_h // cfg.cell_size, patch_w // cfg.cell_size
    label = corrfilter.make_label(p_cells, q_cells,
                                  cfg.label_sigma_factor * np.sqrt(p_cells * q_cells))
    window = hann_window(q_cells, p_cells)
    bits = (patch_h, patch_w, label, window)
    model = _train_model(cfg, frame, (box.cx, box.cy),
                         (box.w * cfg.padding, box.h * cfg.padding), bits)
    template = gpf.make_template(frame, box, cfg.template_h, cfg.template_w,
                                 cfg.cell_size)
    sigma0 = np.diag([(cfg.init_pos_std_factor * box.w) ** 2,
                      (cfg.init_pos_std_factor * box.h) ** 2,
                      cfg.init_scale_std ** 2])
    belief = gpf.GaussianBelief(mu=np.array([box.cx, box.cy, 1.0]), sigma=sigma0)
    return TrackerState(
        cfg=cfg, belief=belief, template=template, model=model,
        motion_dx=0.0, motion_dy=0.0, reliability=ensemble.ReliabilityState(),
        frame_index=1, base_w=box.w, base_h=box.h,
        patch_h=patch_h, patch_w=patch_w, label=label, window=window,
    )


def update_template(t: gpf.Template, f_hog, f_norm, rho: float) -> gpf.Template:
    """Blend new features into the template: rho keeps the old appearance."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    if f_hog.shape != t.f_hog.shape or f_norm.shape != t.f_norm.shape:
        raise ValueError("feature dimensions do not match the template")
    return replace(t, f_hog=rho * t.f_hog + (1.0 - rho) * f_hog,
                   f_norm=rho * t.f_norm + (1.0 - rho) * f_norm)


def step(state: TrackerState, frame: np.ndarray) -> tuple[TrackerState, Rect]:
    """Advance the tracker by one frame; returns the new state and target box."""
    cfg = state.cfg
    mu_prev = state.belief.mu
    s_prev = float(np.clip(mu_prev[2], cfg.s_min, cfg.s_max))

    # Weak decisions over the motion-bounded window grid.
    scope = ensemble.SearchScope(mu_prev[0], mu_prev[1], state.motion_dx,
                                 state.motion_dy, cfg.padding)
    target = Rect(mu_prev[0], mu_prev[1], state.base_w * s_prev, state.base_h * s_prev)
    windows = ensemble.tile_windows(scope, target, cfg.max_experts)
    decisions = ensemble.weak_decide_batch(state.model, frame, windows, cfg.cell_size)
    ensemble.expert_weights(decisions, cfg.weight_mode)
    (best_x, best_y), winner = ensemble.select_expert(decisions)
    best = decisions[winner]

    reliability = replace(state.reliability)
    gate = ensemble.reliability_gate(reliability, best, cfg.beta_f, cfg.beta_a)

    # Particle fusion around the strongest weak decision.
    if gate:
        q = np.diag([cfg.process_pos_std ** 2, cfg.process_pos_std ** 2,
                     cfg.process_scale_std ** 2])
        sigma_s = state.belief.sigma + q
    else:
        sigma_s = np.diag([cfg.lost_pos_std ** 2, cfg.lost_pos_std ** 2,
                           cfg.lost_scale_std ** 2])
    particles = gpf.sample_particles(np.array([best_x, best_y, s_prev]), sigma_s,
                                     cfg.sample_count, (cfg.rng_seed, state.frame_index),
                                     cfg.s_min, cfg.s_max)
    w_hog, w_norm = gpf.both_task_weights(particles, frame, state.template, cfg.sigma_l)
    particles.w_fused = gpf.fuse_weights(w_hog, w_norm, cfg.theta)
    belief = gpf.estimate_moments(particles)

    dx, dy = ensemble.update_motion_bound(state.motion_dx, state.motion_dy,
                                          belief.mu, mu_prev)

    # Learning is frozen on unreliable frames.
    template, model = state.template, state.model
    s_new = float(np.clip(belief.mu[2], cfg.s_min, cfg.s_max))
    if gate:
        cur_w, cur_h = state.base_w * s_new, state.base_h * s_new
        pixels = sample_window(frame, belief.mu[0], belief.mu[1], cur_w, cur_h,
                               cfg.template_h, cfg.template_w)
        template = update_template(template,
                                   features.hog_stack(pixels, cfg.cell_size),
                                   features.gray_norm_stack(pixels), cfg.rho)
        fresh = _train_model(cfg, frame, (belief.mu[0], belief.mu[1]),
                             (cur_w * cfg.padding, cur_h * cfg.padding),
                             (state.patch_h, state.patch_w, state.label, state.window))
        model = corrfilter.adapt(state.model, fresh, cfg.adaptation_rate)

    new_state = replace(state, belief=belief, template=template, model=model,
                        motion_dx=dx, motion_dy=dy, reliability=reliability,
                        frame_index=state.frame_index + 1, last_gate=gate,
                        last_experts=decisions)
    box = Rect(belief.mu[0], belief.mu[1], state.base_w * s_new, state.base_h * s_new)
    return new_state, box
