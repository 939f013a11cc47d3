"""Ensemble correlation-filter tracker with Gaussian particle-filter fusion.

Weak kernelized correlation filters tiled over a motion-bounded search scope
produce candidate detections; the strongest is reliability-gated and refined
by a multi-task Gaussian particle filter that also estimates scale. A bench
harness runs one-pass evaluation on OTB-format or synthetic sequences.
"""

from .imaging import Patch, Rect, extract_patch, hann_window, load_frame, resize_patch
from .features import gray_norm_features, hog_features
from .corrfilter import (
    FilterModel,
    GaussianLabel,
    argmax_response,
    gaussian_kernel_correlation,
    make_label,
    respond,
    respond_kcf,
    respond_linear,
    train_kcf,
    train_linear,
)
from .ensemble import (
    ExpertDecision,
    ReliabilityState,
    SearchScope,
    apce,
    expert_weights,
    reliability_gate,
    select_expert,
    tile_windows,
    update_motion_bound,
    weak_decide,
)
from .gpf import (
    GaussianBelief,
    ParticleSet,
    Template,
    estimate_moments,
    fuse_weights,
    particle_weights,
    sample_particles,
)
from .tracker import TrackerConfig, TrackerState, init, step, update_template
from .bench import (
    EvalResult,
    Sequence,
    SyntheticScript,
    emit_results,
    gen_synthetic,
    load_sequence,
    make_script,
    precision_curve,
    run_ope,
    success_curve,
)

__version__ = "0.1.0"
