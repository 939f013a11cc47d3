"""Correlation-filter training and detection in the Fourier domain.

Two filter kinds share one model record: the per-channel linear closed form
and the Gaussian-kernel ridge dual. Labels peak at the grid center and are
circularly even, so the response to the training input peaks at the label
peak and a target shifted by s moves the peak by s (with wraparound).

All spectra use numpy's full complex FFT over the leading two axes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class GaussianLabel:
    """Regression target: circular Gaussian bump, value 1 at the peak cell."""

    data: np.ndarray          # (P, Q)
    sigma: float
    peak: tuple[int, int]     # (row, col)


@dataclass(frozen=True)
class FilterModel:
    kind: str                 # "linear" | "gaussian-kernel"
    xf: np.ndarray            # (P, Q, D) spectrum of the (windowed) training map
    coeff: np.ndarray         # linear: W (P, Q, D); kernel: alpha-hat (P, Q)
    yf: np.ndarray            # (P, Q) label spectrum
    lam: float
    sigma_kernel: float
    window: np.ndarray | None
    peak: tuple[int, int]

    @property
    def grid(self) -> tuple[int, int]:
        return self.xf.shape[0], self.xf.shape[1]


def make_label(p: int, q: int, sigma_label: float) -> GaussianLabel:
    """Gaussian label on a PxQ grid with circular distances to the center cell."""
    if p < 1 or q < 1 or sigma_label <= 0:
        raise ValueError("label needs p, q >= 1 and sigma > 0")
    pr, pc = p // 2, q // 2
    di = np.minimum(np.abs(np.arange(p) - pr), p - np.abs(np.arange(p) - pr))
    dj = np.minimum(np.abs(np.arange(q) - pc), q - np.abs(np.arange(q) - pc))
    d2 = di[:, None] ** 2 + dj[None, :] ** 2
    return GaussianLabel(np.exp(-d2 / (2.0 * sigma_label**2)), sigma_label, (pr, pc))


def _as_3d(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x[:, :, None] if x.ndim == 2 else x


def _windowed(x: np.ndarray, window: np.ndarray | None) -> np.ndarray:
    x = _as_3d(x)
    return x if window is None else x * window[:, :, None]


def fft2(x: np.ndarray) -> np.ndarray:
    return np.fft.fft2(x, axes=(0, 1))


def ifft2(x: np.ndarray) -> np.ndarray:
    return np.fft.ifft2(x, axes=(0, 1))


def _real_response(sf: np.ndarray) -> np.ndarray:
    s = ifft2(sf)
    resid = np.max(np.abs(s.imag)) if s.size else 0.0
    if resid >= 1e-8:
        raise AssertionError(f"imaginary residue {resid:.3e} in response")
    return np.ascontiguousarray(s.real)


def train_linear(x: np.ndarray, y: GaussianLabel, lam: float,
                 window: np.ndarray | None = None) -> FilterModel:
    """Per-frequency, per-channel ridge solution with a depth-summed denominator."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    xw = _windowed(x, window)
    xf = fft2(xw)
    yf = fft2(y.data)
    denom = np.sum(xf * np.conj(xf), axis=2).real + lam
    w = (yf / denom)[:, :, None] * np.conj(xf)
    return FilterModel("linear", xf, w, yf, lam, 0.0, window, y.peak)


def respond_linear(m: FilterModel, t: np.ndarray) -> np.ndarray:
    tw = _windowed(t, m.window)
    if tw.shape != m.xf.shape:
        raise ValueError(f"feature grid {tw.shape} does not match model {m.xf.shape}")
    sf = np.sum(fft2(tw) * m.coeff, axis=2)
    return _real_response(sf)


def _norm2_from_spectrum(xf: np.ndarray) -> float:
    # Parseval: sum |x|^2 = sum |xf|^2 / (P*Q)
    return float(np.sum(xf.real**2 + xf.imag**2) / (xf.shape[0] * xf.shape[1]))


def _kernel_map(af: np.ndarray, a_norm2: float, bf: np.ndarray, b_norm2: float,
                sigma: float) -> np.ndarray:
    """Gaussian kernel values for all circular shifts, from spectra.

    Entry s is k(a, roll(b, s)) = exp(-max(0, |a|^2 + |b|^2 - 2 corr(s)) / (sigma^2 N))
    with N the total element count including channels.
    """
    corr = ifft2(np.sum(af * np.conj(bf), axis=2)).real
    n = af.shape[0] * af.shape[1] * af.shape[2]
    d2 = np.maximum(a_norm2 + b_norm2 - 2.0 * corr, 0.0)
    return np.exp(-d2 / (sigma * sigma * n))


def gaussian_kernel_correlation(x: np.ndarray, z: np.ndarray, sigma: float) -> np.ndarray:
    """Kernel map over all shifts of z relative to x; 1.0 at zero shift when z = x."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x3, z3 = _as_3d(x), _as_3d(z)
    if x3.shape != z3.shape:
        raise ValueError(f"feature grids differ: {x3.shape} vs {z3.shape}")
    return _kernel_map(fft2(x3), float(np.sum(x3 * x3)),
                       fft2(z3), float(np.sum(z3 * z3)), sigma)


def train_kcf(x: np.ndarray, y: GaussianLabel, lam: float, sigma: float,
              window: np.ndarray | None = None) -> FilterModel:
    """Kernel ridge dual: alpha-hat = y-hat / (k_xx-hat + lambda)."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    xw = _windowed(x, window)
    xf = fft2(xw)
    yf = fft2(y.data)
    n2 = float(np.sum(xw * xw))
    kxx = _kernel_map(xf, n2, xf, n2, sigma)
    alphaf = yf / (fft2(kxx) + lam)
    return FilterModel("gaussian-kernel", xf, alphaf, yf, lam, sigma, window, y.peak)


def respond_kcf(m: FilterModel, t: np.ndarray) -> np.ndarray:
    tw = _windowed(t, m.window)
    if tw.shape != m.xf.shape:
        raise ValueError(f"feature grid {tw.shape} does not match model {m.xf.shape}")
    tf = fft2(tw)
    kzx = _kernel_map(tf, float(np.sum(tw * tw)), m.xf, _norm2_from_spectrum(m.xf),
                      m.sigma_kernel)
    return _real_response(fft2(kzx) * m.coeff)


def respond(m: FilterModel, t: np.ndarray) -> np.ndarray:
    return respond_linear(m, t) if m.kind == "linear" else respond_kcf(m, t)


def adapt(old: FilterModel, fresh: FilterModel, rate: float) -> FilterModel:
    """Exponential moving average of model spectra: new = (1-rate)*old + rate*fresh."""
    if old.kind != fresh.kind or old.xf.shape != fresh.xf.shape:
        raise ValueError("cannot blend models of different kind or grid")
    return replace(old,
                   xf=(1.0 - rate) * old.xf + rate * fresh.xf,
                   coeff=(1.0 - rate) * old.coeff + rate * fresh.coeff)


def argmax_response(s: np.ndarray) -> tuple[int, int, float]:
    """(x, y, value) of the first maximum in row-major order."""
    s = np.asarray(s)
    if s.size == 0:
        raise ValueError("empty response map")
    row, col = np.unravel_index(int(np.argmax(s)), s.shape)
    return int(col), int(row), float(s[row, col])


def peak_displacement(s: np.ndarray, peak: tuple[int, int]) -> tuple[int, int, float]:
    """Signed (dx, dy) cell displacement of the response argmax from the label peak.

    Indices wrap: displacements land in [-n//2, n - n//2).
    """
    x, y, value = argmax_response(s)
    p, q = s.shape
    dy = (y - peak[0] + p // 2) % p - p // 2
    dx = (x - peak[1] + q // 2) % q - q // 2
    return dx, dy, value
