"""Shared fixtures and an independent signal-synthesis oracle.

The synthesis helpers here are written against plain ``math``/loop formulas,
deliberately not reusing the corpus generator, so generator bugs cannot hide
behind matching test fixtures.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from vocalnav.config import PipelineConfig, VocalThresholds

SR = 16000


def sine(freq: float, duration: float, amplitude: float = 1.0, sr: int = SR) -> np.ndarray:
    n = int(round(duration * sr))
    return amplitude * np.sin(2.0 * math.pi * freq * np.arange(n) / sr)


def silence(duration: float, sr: int = SR) -> np.ndarray:
    return np.zeros(int(round(duration * sr)))


def glide(f_start: float, f_end: float, duration: float, amplitude: float = 0.5, sr: int = SR) -> np.ndarray:
    """Linear frequency sweep synthesized by phase accumulation."""
    n = int(round(duration * sr))
    inst = f_start + (f_end - f_start) * np.arange(n) / n
    phase = 2.0 * math.pi * np.cumsum(inst) / sr
    return amplitude * np.sin(phase)


@pytest.fixture
def cfg() -> VocalThresholds:
    return VocalThresholds()


@pytest.fixture
def pipeline_cfg() -> PipelineConfig:
    return PipelineConfig()
