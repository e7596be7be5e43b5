"""Prosodic feature tracks and vocal-cue events from mono PCM audio.

The cue model reduces a clip to three signals: the single largest loudness
change, the single largest pitch shift (both gated by thresholds), and a
per-segment speaking-duration profile whose outliers mark hesitation. All
functions are pure; the per-frame inner loops live in ``vocalnav._kernels``.
"""

from __future__ import annotations

import io
import math
import statistics
import wave
from dataclasses import dataclass

import numpy as np

from ._kernels import acf_pitch, frame_count, frame_rms
from .config import VocalThresholds
from .errors import AudioFormatError

DB_FLOOR = -100.0
VOICING_CLARITY = 0.5
LOUDNESS_SMOOTH_FRAMES = 5
PITCH_SMOOTH_FRAMES = 3
PITCH_BRIDGE_FRAMES = 3  # voiced pairs may span up to this many unvoiced frames
ACTIVITY_DB = -60.0
ACTIVITY_MERGE_GAP_S = 0.3
ACTIVITY_MIN_DUR_S = 0.05
_SEMITONE_REF_HZ = 440.0


@dataclass(frozen=True)
class AudioClip:
    """Mono audio, samples normalized into [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate < 8000:
            raise AudioFormatError(f"sample rate {self.sample_rate} Hz below 8 kHz minimum")
        if self.samples.ndim != 1:
            raise AudioFormatError("mono required")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class FrameSeries:
    """Per-frame scalar track; NaN marks frames with no value (unvoiced)."""

    frame_times: np.ndarray
    values: np.ndarray
    hop: float


@dataclass(frozen=True)
class ChangeEvent:
    """A super-threshold frame-to-frame change; magnitude is unsigned."""

    time: float
    magnitude: float
    rise: bool


@dataclass(frozen=True)
class SegmentRate:
    index: int
    duration: float
    hesitant: bool


@dataclass(frozen=True)
class VocalCueReport:
    loudness_event: ChangeEvent | None
    pitch_event: ChangeEvent | None
    segment_rates: tuple[SegmentRate, ...]

    def to_dict(self) -> dict:
        def event(e: ChangeEvent | None):
            if e is None:
                return None
            return {"time": e.time, "magnitude": e.magnitude, "rise": e.rise}

        return {
            "loudness_event": event(self.loudness_event),
            "pitch_event": event(self.pitch_event),
            "segment_rates": [
                {"index": r.index, "duration": r.duration, "hesitant": r.hesitant}
                for r in self.segment_rates
            ],
        }

    @property
    def hesitant_segments(self) -> tuple[int, ...]:
        return tuple(r.index for r in self.segment_rates if r.hesitant)

    @property
    def has_any_cue(self) -> bool:
        return (
            self.loudness_event is not None
            or self.pitch_event is not None
            or bool(self.hesitant_segments)
        )


def decode_audio(raw_bytes: bytes) -> AudioClip:
    """Decode a linear-PCM WAV container into a normalized mono clip."""
    try:
        with wave.open(io.BytesIO(raw_bytes)) as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            n = wf.getnframes()
            payload = wf.readframes(n)
    except (wave.Error, EOFError) as exc:
        raise AudioFormatError(f"malformed WAV container: {exc}") from exc
    if channels != 1:
        raise AudioFormatError("mono required")
    if width != 2:
        raise AudioFormatError("16-bit linear PCM required")
    if rate < 8000:
        raise AudioFormatError(f"sample rate {rate} Hz below 8 kHz minimum")
    ints = np.frombuffer(payload, dtype="<i2")
    if len(ints) != n:
        raise AudioFormatError("malformed WAV container: truncated payload")
    return AudioClip(samples=ints.astype(np.float64) / 32768.0, sample_rate=rate)


def encode_wav(clip: AudioClip) -> bytes:
    """Inverse of :func:`decode_audio`: 16-bit mono PCM WAV bytes."""
    ints = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(ints.tobytes())
    return buf.getvalue()


def _frame_geometry(clip: AudioClip, cfg: VocalThresholds) -> tuple[int, int]:
    frame_len = max(1, round(cfg.frame_ms * clip.sample_rate / 1000.0))
    hop_len = max(1, round(cfg.hop_ms * clip.sample_rate / 1000.0))
    return frame_len, hop_len


def _frame_times(n_frames: int, frame_len: int, hop_len: int, rate: int) -> np.ndarray:
    starts = np.arange(n_frames) * hop_len
    return (starts + frame_len / 2.0) / rate


def loudness_track(clip: AudioClip, cfg: VocalThresholds) -> FrameSeries:
    """Per-frame RMS level in dBFS, clamped to the -100 dB floor."""
    frame_len, hop_len = _frame_geometry(clip, cfg)
    if len(clip.samples) < frame_len:
        raise AudioFormatError("clip shorter than one analysis frame")
    rms = frame_rms(clip.samples, frame_len, hop_len)
    db = 20.0 * np.log10(np.maximum(rms, 1e-10))
    db = np.clip(db, DB_FLOOR, 0.0)
    times = _frame_times(len(db), frame_len, hop_len, clip.sample_rate)
    return FrameSeries(frame_times=times, values=db, hop=hop_len / clip.sample_rate)


def pitch_track(clip: AudioClip, cfg: VocalThresholds) -> FrameSeries:
    """Fundamental frequency per voiced frame (Hz); NaN where unvoiced.

    Uses normalized autocorrelation with parabolic peak refinement inside
    ``cfg.pitch_band_hz``. The analysis window is stretched to cover two
    periods of the lowest searchable pitch, so frames are longer than the
    loudness frames but share the hop grid.
    """
    frame_len, hop_len = _frame_geometry(clip, cfg)
    lag_min = max(2, int(clip.sample_rate / cfg.pitch_band_hz[1]))
    lag_max = int(math.ceil(clip.sample_rate / cfg.pitch_band_hz[0]))
    frame_len = max(frame_len, 2 * lag_max)
    if len(clip.samples) < frame_len:
        raise AudioFormatError("clip shorter than one pitch analysis frame")
    lags, clarity = acf_pitch(clip.samples, frame_len, hop_len, lag_min, lag_max)
    voiced = (lags > 0) & (clarity >= VOICING_CLARITY)
    f0 = np.full(len(lags), np.nan)
    f0[voiced] = np.clip(
        clip.sample_rate / lags[voiced], cfg.pitch_band_hz[0], cfg.pitch_band_hz[1]
    )
    times = _frame_times(len(f0), frame_len, hop_len, clip.sample_rate)
    return FrameSeries(frame_times=times, values=f0, hop=hop_len / clip.sample_rate)


def median_smooth(values: np.ndarray, width: int = LOUDNESS_SMOOTH_FRAMES) -> np.ndarray:
    """Sliding median with a window that shrinks at the edges."""
    half = width // 2
    out = np.empty_like(values, dtype=np.float64)
    for i in range(len(values)):
        lo = max(0, i - half)
        out[i] = np.median(values[lo : i + half + 1])
    return out


def detect_max_change(
    series: FrameSeries, threshold: float, max_span: int = 1
) -> ChangeEvent | None:
    """Largest absolute change between present values at most ``max_span`` apart.

    The default span of 1 compares adjacent frames. Pitch tracks pass a wider
    span so that pairs of voiced frames bridging short unvoiced stretches are
    still compared. Returns None when no change reaches ``threshold``; exact
    ties resolve to the earliest time; the event carries the later frame's
    time and the sign of the change.
    """
    values = np.asarray(series.values, dtype=np.float64)
    present = np.nonzero(~np.isnan(values))[0]
    best: ChangeEvent | None = None
    for pos, b in enumerate(present):
        for a in reversed(present[max(0, pos - max_span) : pos]):
            if b - a > max_span:
                continue
            diff = values[b] - values[a]
            mag = abs(diff)
            if mag < threshold:
                continue
            if best is None or mag > best.magnitude:
                # adjacent pairs: exactly the later frame's time; wider pairs:
                # their midpoint shifted by the same half-hop
                when = (series.frame_times[a] + series.frame_times[b] + series.hop) / 2.0
                best = ChangeEvent(time=float(when), magnitude=float(mag), rise=bool(diff > 0))
    return best


def speech_rate(
    segments: list[tuple[float, float]], cfg: VocalThresholds
) -> list[SegmentRate]:
    """Duration of each speech segment, flagging hesitation outliers.

    A segment is hesitant when it runs longer than ``rate_abs_limit`` seconds
    or ``rate_rel_limit`` times the median segment duration.
    """
    if not segments:
        return []
    prev_end = None
    for start, end in segments:
        if end <= start:
            raise ValueError(f"segment ({start}, {end}) has nonpositive duration")
        if prev_end is not None and start < prev_end:
            raise ValueError("segments must be ordered and nonoverlapping")
        prev_end = end
    durations = [end - start for start, end in segments]
    med = statistics.median(durations)
    return [
        SegmentRate(
            index=i,
            duration=d,
            hesitant=(d > cfg.rate_abs_limit or d > cfg.rate_rel_limit * med),
        )
        for i, d in enumerate(durations)
    ]


def activity_segments(clip: AudioClip, cfg: VocalThresholds) -> list[tuple[float, float]]:
    """Active-speech spans found from the loudness track alone.

    Frames above ``ACTIVITY_DB`` are active; active runs separated by less
    than ``ACTIVITY_MERGE_GAP_S`` merge, and runs shorter than
    ``ACTIVITY_MIN_DUR_S`` are dropped. Independent of any transcript, so a
    text-only attack cannot move these boundaries.
    """
    track = loudness_track(clip, cfg)
    frame_len, hop_len = _frame_geometry(clip, cfg)
    rate = clip.sample_rate
    active = track.values > ACTIVITY_DB
    spans: list[list[float]] = []
    run_start = None
    for i, flag in enumerate(active):
        if flag and run_start is None:
            run_start = i
        elif not flag and run_start is not None:
            spans.append([run_start * hop_len / rate, ((i - 1) * hop_len + frame_len) / rate])
            run_start = None
    if run_start is not None:
        spans.append([run_start * hop_len / rate, ((len(active) - 1) * hop_len + frame_len) / rate])
    merged: list[list[float]] = []
    for span in spans:
        if merged and span[0] - merged[-1][1] < ACTIVITY_MERGE_GAP_S:
            merged[-1][1] = span[1]
        else:
            merged.append(span)
    return [
        (s, min(e, clip.duration)) for s, e in merged if e - s >= ACTIVITY_MIN_DUR_S
    ]


def _masked_change_event(
    track: FrameSeries, threshold: float, smooth_width: int, max_span: int
) -> ChangeEvent | None:
    """Smooth present-value runs, then find the largest spanned change.

    Runs are maximal stretches of present values whose internal gaps do not
    exceed ``max_span``; smoothing never mixes values across runs.
    """
    values = np.asarray(track.values, dtype=np.float64)
    present = np.nonzero(~np.isnan(values))[0]
    if len(present) < 2:
        return None
    smoothed = np.full(len(values), np.nan)
    run: list[int] = []
    runs: list[list[int]] = []
    for idx in present:
        if run and idx - run[-1] > max_span:
            runs.append(run)
            run = []
        run.append(idx)
    runs.append(run)
    for run in runs:
        smoothed[run] = median_smooth(values[run], smooth_width)
    series = FrameSeries(frame_times=track.frame_times, values=smoothed, hop=track.hop)
    return detect_max_change(series, threshold, max_span=max_span)


def _interior_loudness(track: FrameSeries, frame_len: int, hop_len: int) -> FrameSeries:
    """Mask frames whose analysis window touches silence.

    Speech onsets and offsets produce enormous level jumps that would always
    out-rank a within-speech loudness change, so only frames surrounded by
    active neighbours take part in change detection.
    """
    active = track.values > ACTIVITY_DB
    margin = max(1, math.ceil(frame_len / hop_len))
    interior = active.copy()
    for shift in range(1, margin + 1):
        shifted_fwd = np.empty_like(active)
        shifted_fwd[:shift] = False
        shifted_fwd[shift:] = active[:-shift]
        shifted_back = np.empty_like(active)
        shifted_back[-shift:] = False
        shifted_back[:-shift] = active[shift:]
        interior &= shifted_fwd & shifted_back
    values = np.where(interior, track.values, np.nan)
    return FrameSeries(frame_times=track.frame_times, values=values, hop=track.hop)


def _pitch_change_event(track: FrameSeries, cfg: VocalThresholds) -> ChangeEvent | None:
    """Max semitone shift between voiced frames bridging short unvoiced gaps."""
    values = np.asarray(track.values)
    semis = np.where(np.isnan(values), np.nan, 12.0 * np.log2(values / _SEMITONE_REF_HZ))
    series = FrameSeries(frame_times=track.frame_times, values=semis, hop=track.hop)
    return _masked_change_event(
        series, cfg.theta_p, PITCH_SMOOTH_FRAMES, PITCH_BRIDGE_FRAMES + 1
    )


def extract_vocal_cues(
    clip: AudioClip,
    segments: list[tuple[float, float]],
    cfg: VocalThresholds,
) -> VocalCueReport:
    """Full vocal-cue pass: loudness event, pitch event, segment rates."""
    for start, end in segments:
        if start < -1e-6 or end > clip.duration + 1e-6:
            raise ValueError(f"segment ({start}, {end}) outside clip duration {clip.duration}")
    loud = loudness_track(clip, cfg)
    frame_len, hop_len = _frame_geometry(clip, cfg)
    loudness_event = _masked_change_event(
        _interior_loudness(loud, frame_len, hop_len),
        cfg.theta_l,
        LOUDNESS_SMOOTH_FRAMES,
        max_span=1,
    )
    pitch_event = _pitch_change_event(pitch_track(clip, cfg), cfg)
    rates = speech_rate(segments, cfg)
    return VocalCueReport(
        loudness_event=loudness_event,
        pitch_event=pitch_event,
        segment_rates=tuple(rates),
    )
