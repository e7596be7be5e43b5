#!/usr/bin/env python3
"""Benchmark the compiled audio kernels against the pure-numpy fallback.

Times frame RMS and autocorrelation pitch over synthetic clips of increasing
length, plus one full vocal-cue extraction through whichever backend is
active. Run from the repository root:

    python benchmarks/bench_kernels.py [--seconds 2 4 8] [--repeat 5]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from vocalnav._kernels import KERNEL_BACKEND, _reference

try:
    from vocalnav._kernels import _core
except ImportError:
    _core = None

SR = 16000
FRAME_RMS_ARGS = (400, 160)  # 25 ms window, 10 ms hop
ACF_ARGS = (534, 160, 40, 267)  # two periods of 60 Hz, 60..400 Hz band


def make_clip(seconds: float) -> np.ndarray:
    t = np.arange(int(seconds * SR)) / SR
    tone = 0.4 * np.sin(2 * math.pi * 210 * t)
    tone[: SR // 4] = 0.0
    return tone


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def row(label: str, seconds: float, py_time: float, c_time: float | None):
    if c_time is None:
        print(f"  {label:<10s} {seconds:>5.1f}s audio   python {py_time * 1e3:8.2f} ms   compiled      n/a")
    else:
        speedup = py_time / c_time if c_time > 0 else float("inf")
        print(
            f"  {label:<10s} {seconds:>5.1f}s audio   python {py_time * 1e3:8.2f} ms   "
            f"compiled {c_time * 1e3:8.2f} ms   x{speedup:5.2f}"
        )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seconds", type=float, nargs="+", default=[2.0, 4.0, 8.0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    print(f"active kernel backend: {KERNEL_BACKEND}")
    if _core is None:
        print("compiled kernels not built; timing the fallback only")
    print()
    for seconds in args.seconds:
        clip = make_clip(seconds)
        py = best_of(lambda: _reference.frame_rms(clip, *FRAME_RMS_ARGS), args.repeat)
        cc = best_of(lambda: _core.frame_rms(clip, *FRAME_RMS_ARGS), args.repeat) if _core else None
        row("frame_rms", seconds, py, cc)
        py = best_of(lambda: _reference.acf_pitch(clip, *ACF_ARGS), args.repeat)
        cc = best_of(lambda: _core.acf_pitch(clip, *ACF_ARGS), args.repeat) if _core else None
        row("acf_pitch", seconds, py, cc)
    print()

    from vocalnav.audio import AudioClip, extract_vocal_cues
    from vocalnav.config import VocalThresholds

    clip = AudioClip(samples=make_clip(6.0), sample_rate=SR)
    cfg = VocalThresholds()
    wall = best_of(lambda: extract_vocal_cues(clip, [(0.3, 5.9)], cfg), args.repeat)
    print(f"full extract_vocal_cues on 6 s audio via {KERNEL_BACKEND}: {wall * 1e3:.2f} ms")


if __name__ == "__main__":
    main()
