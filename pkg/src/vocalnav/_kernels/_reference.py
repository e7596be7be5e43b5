"""Pure-numpy implementations of the per-frame audio kernels.

These are the portable reference for the compiled versions in ``_core.pyx``;
the selector in ``__init__`` exposes whichever is importable. Both share the
same contract: float64 input, frames of ``frame_len`` samples every ``hop``
samples starting at sample 0, one output row per complete frame.
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-12


def frame_count(n_samples: int, frame_len: int, hop: int) -> int:
    if n_samples < frame_len:
        return 0
    return 1 + (n_samples - frame_len) // hop


def _frame_matrix(samples: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    n = frame_count(len(samples), frame_len, hop)
    if n == 0:
        return np.empty((0, frame_len))
    stride = samples.strides[0]
    return np.lib.stride_tricks.as_strided(
        samples, shape=(n, frame_len), strides=(hop * stride, stride), writeable=False
    )


def frame_rms(samples: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    """Root-mean-square energy of each complete frame."""
    frames = _frame_matrix(np.ascontiguousarray(samples, dtype=np.float64), frame_len, hop)
    return np.sqrt(np.mean(frames * frames, axis=1))


def acf_pitch(
    samples: np.ndarray,
    frame_len: int,
    hop: int,
    lag_min: int,
    lag_max: int,
    peak_accept: float = 0.9,
) -> tuple[np.ndarray, np.ndarray]:
    """Fundamental-period search via normalized autocorrelation.

    For every frame, the normalized autocorrelation

        r(tau) = sum(x[t] x[t+tau]) / sqrt(sum(x[t]^2) sum(x[t+tau]^2))

    is evaluated for tau in [lag_min, lag_max]. Among local maxima whose
    height reaches ``peak_accept`` times the best one, the smallest lag wins
    (the fundamental rather than one of its multiples), and is refined by
    parabolic interpolation over the neighbouring lags.

    Returns ``(lags, clarity)``: the refined lag in fractional samples (0.0
    where no acceptable peak exists) and the peak height in [0, 1].
    """
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    if lag_min < 2:
        raise ValueError("lag_min must be >= 2")
    if lag_max + 2 > frame_len:
        raise ValueError("frame too short for requested lag range")
    frames = _frame_matrix(samples, frame_len, hop)
    n_frames = len(frames)
    lags_out = np.zeros(n_frames)
    clarity_out = np.zeros(n_frames)
    if n_frames == 0:
        return lags_out, clarity_out

    lo, hi = lag_min - 1, lag_max + 1  # inclusive bounds incl. neighbours
    n_lags = hi - lo + 1
    energy = np.cumsum(frames * frames, axis=1)
    total = energy[:, -1]
    corr = np.empty((n_frames, n_lags))
    n = frames.shape[1]
    for j, tau in enumerate(range(lo, hi + 1)):
        prod = np.einsum("ij,ij->i", frames[:, : n - tau], frames[:, tau:])
        e_head = energy[:, n - tau - 1]
        e_tail = total - energy[:, tau - 1]
        corr[:, j] = prod / np.sqrt(e_head * e_tail + _EPS)

    # local maxima strictly above both neighbours, within [lag_min, lag_max]
    inner = corr[:, 1:-1]
    is_peak = (inner > corr[:, :-2]) & (inner >= corr[:, 2:])
    for i in range(n_frames):
        peak_idx = np.nonzero(is_peak[i])[0] + 1
        if peak_idx.size == 0:
            continue
        heights = corr[i, peak_idx]
        best = heights.max()
        if best <= 0.0:
            continue
        chosen = peak_idx[np.nonzero(heights >= peak_accept * best)[0][0]]
        a, b, c = corr[i, chosen - 1], corr[i, chosen], corr[i, chosen + 1]
        denom = a - 2.0 * b + c
        delta = 0.0 if denom >= -_EPS else (a - c) / (2.0 * denom)
        delta = min(0.5, max(-0.5, delta))
        refined = lo + chosen + delta
        lags_out[i] = min(float(lag_max), max(float(lag_min), refined))
        clarity_out[i] = b if denom >= -_EPS else b - (a - c) * (a - c) / (8.0 * denom)
    return lags_out, clarity_out
