"""Log-spectrogram front end: AudioClip -> 129x71 feature matrix.

Framing is pinned by the network input shape: 256-sample segments
(129 one-sided bins) hopped by 224 give exactly 71 frames out of 16,000
samples. Each segment is mean-removed, tapered with a periodic Tukey
window (taper fraction 0.25), and squared-magnitude FFT'd; non-DC,
non-Nyquist bins are doubled (one-sided convention). The log gets a
1e-10 additive guard so silent input stays finite.
"""

from __future__ import annotations

import numpy as np

from .audio import AudioClip

SEGMENT = 256
HOP = 224
N_BINS = SEGMENT // 2 + 1  # 129
N_FRAMES = (16_000 - SEGMENT) // HOP + 1  # 71
EPSILON = 1e-10


def tukey_window(n: int, alpha: float = 0.25, periodic: bool = True) -> np.ndarray:
    """Tapered-cosine window; periodic variant for spectral analysis."""
    if periodic:
        return tukey_window(n + 1, alpha, periodic=False)[:n]
    if alpha <= 0:
        return np.ones(n)
    if alpha >= 1:
        return 0.5 * (1 - np.cos(2 * np.pi * np.arange(n) / (n - 1)))
    x = np.arange(n, dtype=np.float64)
    w = np.ones(n)
    width = int(np.floor(alpha * (n - 1) / 2.0))
    left = x[: width + 1]
    w[: width + 1] = 0.5 * (1 + np.cos(np.pi * (-1 + 2.0 * left / alpha / (n - 1))))
    right = x[n - width - 1 :]
    w[n - width - 1 :] = 0.5 * (1 + np.cos(np.pi * (-2.0 / alpha + 1 + 2.0 * right / alpha / (n - 1))))
    return w


def spectrogram(clip: AudioClip) -> np.ndarray:
    """Short-time power spectrum, shape (129, 71): frequency bins low to
    high down the rows, frames early to late across the columns.
    Computed in float64; no density scaling."""
    x = clip.samples.astype(np.float64)
    frames = np.lib.stride_tricks.sliding_window_view(x, SEGMENT)[::HOP][:N_FRAMES]
    frames = frames - frames.mean(axis=1, keepdims=True)
    frames = frames * tukey_window(SEGMENT)
    spec = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    spec[:, 1:-1] *= 2.0  # one-sided: fold negative frequencies
    return spec.T


def log_feature(spec: np.ndarray) -> np.ndarray:
    """Natural log of the power spectrum with the 1e-10 guard; float32 out."""
    spec = np.asarray(spec, dtype=np.float64)
    if spec.shape != (N_BINS, N_FRAMES):
        raise ValueError(f"expected ({N_BINS}, {N_FRAMES}) spectrum, got {spec.shape}")
    if np.any(spec < 0):
        raise ValueError("power spectrum entries must be nonnegative")
    return np.log(spec + EPSILON).astype(np.float32)


def feature_of(clip: AudioClip) -> np.ndarray:
    return log_feature(spectrogram(clip))


def save_feature_text(values: np.ndarray, path) -> None:
    """Debug dump: one row per line, row-major, plain decimal floats."""
    np.savetxt(path, values, fmt="%.9g")
