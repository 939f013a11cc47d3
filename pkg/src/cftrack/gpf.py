"""Multi-task Gaussian particle filter over (x, y, scale) target states.

Particles are drawn from a Gaussian importance function, weighted by template
similarity under two feature tasks (HOG and gray-normalized intensity), fused
by a convex combination, and summarized by weighted moments. There is no
resampling step: the posterior is re-Gaussianized every frame instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import features
from .imaging import Rect, sample_window, sample_windows

SCALE_MIN = 0.2
SCALE_MAX = 5.0

_COV_FLOOR = 1e-6


@dataclass(frozen=True)
class GaussianBelief:
    """Posterior mean (x, y, s) and 3x3 covariance."""

    mu: np.ndarray
    sigma: np.ndarray

    @property
    def x(self) -> float:
        return float(self.mu[0])

    @property
    def y(self) -> float:
        return float(self.mu[1])

    @property
    def s(self) -> float:
        return float(self.mu[2])


@dataclass
class ParticleSet:
    states: np.ndarray                    # (M, 3) rows (x, y, s)
    w_hog: np.ndarray | None = None
    w_norm: np.ndarray | None = None
    w_fused: np.ndarray | None = None

    def __len__(self) -> int:
        return self.states.shape[0]


@dataclass(frozen=True)
class Template:
    """Running appearance summary of the target for both weighting tasks."""

    f_hog: np.ndarray                     # (P, Q, 31)
    f_norm: np.ndarray                    # (th, tw, 1)
    base_w: float
    base_h: float
    out_h: int
    out_w: int
    cell_size: int


def _chol_psd(sigma: np.ndarray) -> np.ndarray:
    """Cholesky factor with eigenvalue clamping for near-PSD inputs."""
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(sigma)
        if vals.min() < -1e-6 * max(vals.max(), 1.0):
            raise ValueError("covariance is not positive semidefinite") from None
        vals = np.maximum(vals, 1e-12)
        return vecs * np.sqrt(vals)


def sample_particles(mu, sigma, m: int, rng_seed,
                     s_min: float = SCALE_MIN, s_max: float = SCALE_MAX) -> ParticleSet:
    """Draw m Gaussian particles around mu; deterministic for a given seed.

    The scale component is clamped into [s_min, s_max] after sampling.
    """
    if m < 1:
        raise ValueError("need at least one particle")
    mu = np.asarray(mu, dtype=np.float64).reshape(3)
    sigma = np.asarray(sigma, dtype=np.float64).reshape(3, 3)
    rng = np.random.default_rng(rng_seed)
    if np.all(sigma == 0.0):
        states = np.tile(mu, (m, 1))
    else:
        chol = _chol_psd(sigma)
        states = mu + rng.standard_normal((m, 3)) @ chol.T
    states[:, 2] = np.clip(states[:, 2], s_min, s_max)
    return ParticleSet(states=states)


def make_template(frame: np.ndarray, box: Rect, out_h: int, out_w: int,
                  cell_size: int) -> Template:
    """Build the two task templates from the target box of a frame."""
    pixels = sample_window(frame, box.cx, box.cy, box.w, box.h, out_h, out_w)
    return Template(
        f_hog=features.hog_stack(pixels, cell_size),
        f_norm=features.gray_norm_stack(pixels),
        base_w=box.w, base_h=box.h, out_h=out_h, out_w=out_w, cell_size=cell_size,
    )


def _patch_stack(particles: ParticleSet, frame: np.ndarray, t: Template) -> np.ndarray:
    centers = particles.states[:, :2]
    sizes = np.column_stack([particles.states[:, 2] * t.base_w,
                             particles.states[:, 2] * t.base_h])
    return sample_windows(frame, centers, sizes, t.out_h, t.out_w)


def _similarity_weights(feats: np.ndarray, template_feat: np.ndarray,
                        sigma_l: float) -> np.ndarray:
    # The squared distance is scaled by the template energy, not the raw
    # dimension: it calibrates the bandwidth across tasks whose per-entry
    # magnitudes differ by orders of magnitude (HOG vs unit-std intensities).
    diff = feats - template_feat[None]
    d2 = np.sum(diff.reshape(diff.shape[0], -1) ** 2, axis=1)
    energy = max(float(np.sum(template_feat ** 2)), 1e-12)
    raw = np.exp(-d2 / (2.0 * sigma_l * sigma_l * energy))
    return normalize_weights(raw)


def normalize_weights(raw: np.ndarray) -> np.ndarray:
    """Scale weights to sum 1; an all-zero vector falls back to uniform."""
    raw = np.asarray(raw, dtype=np.float64)
    total = raw.sum()
    if total <= 0.0:
        return np.full(raw.shape, 1.0 / raw.size)
    return raw / total


def particle_weights(particles: ParticleSet, frame: np.ndarray, template: Template,
                     task: str, sigma_l: float = 0.2) -> np.ndarray:
    """Normalized per-particle weights for one feature task ("hog" or "norm")."""
    return _task_weights(particles, _patch_stack(particles, frame, template),
                         template, task, sigma_l)


def _task_weights(particles: ParticleSet, patches: np.ndarray, template: Template,
                  task: str, sigma_l: float) -> np.ndarray:
    if task == "hog":
        feats = features.hog_stack(patches, template.cell_size)
        w = _similarity_weights(feats, template.f_hog, sigma_l)
        particles.w_hog = w
    elif task == "norm":
        feats = features.gray_norm_stack(patches)
        w = _similarity_weights(feats, template.f_norm, sigma_l)
        particles.w_norm = w
    else:
        raise ValueError(f"unknown task: {task}")
    return w


def both_task_weights(particles: ParticleSet, frame: np.ndarray, template: Template,
                      sigma_l: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    """HOG and gray-norm weights from a single patch extraction pass."""
    patches = _patch_stack(particles, frame, template)
    return (_task_weights(particles, patches, template, "hog", sigma_l),
            _task_weights(particles, patches, template, "norm", sigma_l))


def fuse_weights(w_hog: np.ndarray, w_norm: np.ndarray, theta: float) -> np.ndarray:
    """Convex combination of the two normalized task weight vectors."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    return theta * np.asarray(w_hog) + (1.0 - theta) * np.asarray(w_norm)


def estimate_moments(particles: ParticleSet,
                     weights: np.ndarray | None = None) -> GaussianBelief:
    """Weighted mean and covariance of the particle set (fused weights by default).

    The covariance diagonal is floored so the next sampling step stays proper.
    """
    w = particles.w_fused if weights is None else np.asarray(weights, dtype=np.float64)
    if w is None:
        raise ValueError("no fused weights on the particle set")
    states = particles.states
    mu = w @ states
    centered = states - mu
    sigma = (centered * w[:, None]).T @ centered
    sigma = 0.5 * (sigma + sigma.T)
    floor = np.maximum(_COV_FLOOR - np.diag(sigma), 0.0)
    sigma = sigma + np.diag(floor)
    return GaussianBelief(mu=mu, sigma=sigma)
