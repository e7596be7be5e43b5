"""Word-timed transcript parsing, clause segmentation, disfluency spotting,
and forced alignment of vocal events onto words.

Lexicons (hedges, fillers) ship as editable data files; matching is
case-insensitive and ignores leading/trailing punctuation on tokens.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from pathlib import Path

from .audio import VocalCueReport
from .errors import TranscriptError

_DATA_DIR = Path(__file__).parent / "data"
_PUNCT = string.punctuation

CONNECTIVES = (("and", "then"), ("after", "that"), ("then",))
DIRECTION_WORDS = frozenset(
    ["left", "right", "straight", "forward", "back", "backward", "backwards", "around", "ahead"]
)
REPAIR_TRIGGERS = (("i", "mean"), ("no",), ("sorry",), ("wait",))
CLAUSE_END_CHARS = ",.;!?"


def _load_lexicon(name: str) -> tuple[tuple[str, ...], ...]:
    phrases = []
    for line in (_DATA_DIR / name).read_text().splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            phrases.append(tuple(line.split()))
    # longest first so n-grams win over their own prefixes
    return tuple(sorted(phrases, key=len, reverse=True))


HEDGES = _load_lexicon("hedges.txt")
FILLERS = _load_lexicon("fillers.txt")


def normalize_token(text: str) -> str:
    return text.strip(_PUNCT).lower()


@dataclass(frozen=True)
class WordToken:
    text: str
    start: float
    end: float
    index: int

    @property
    def norm(self) -> str:
        return normalize_token(self.text)


@dataclass(frozen=True)
class Transcript:
    words: tuple[WordToken, ...]
    source_clip_id: str = ""

    @property
    def text(self) -> str:
        return " ".join(w.text for w in self.words)

    @property
    def start(self) -> float:
        return self.words[0].start

    @property
    def end(self) -> float:
        return self.words[-1].end


@dataclass(frozen=True)
class InstructionSegment:
    """A contiguous word range forming one instruction clause."""

    word_start: int
    word_end: int  # exclusive
    start: float
    end: float
    text: str

    @property
    def word_range(self) -> range:
        return range(self.word_start, self.word_end)


@dataclass(frozen=True)
class SemanticFlags:
    ambiguous_hits: tuple[int, ...]  # first word index of each hedge match
    repairs: tuple[tuple[tuple[int, int], tuple[int, int]], ...]  # (retracted, replacement) ranges
    hesitations: tuple[int, ...]  # filler word indices

    @property
    def any(self) -> bool:
        return bool(self.ambiguous_hits or self.repairs or self.hesitations)


@dataclass(frozen=True)
class AlignedCueSet:
    loudness_word: int | None
    pitch_word: int | None
    hesitant_segments: tuple[int, ...]
    semantic: SemanticFlags
    loudness_rise: bool = True
    pitch_rise: bool = True
    # word index span each hesitant segment overlaps, parallel to hesitant_segments
    hesitant_word_ranges: tuple[tuple[int, int], ...] = ()

    @property
    def any_vocal(self) -> bool:
        return (
            self.loudness_word is not None
            or self.pitch_word is not None
            or bool(self.hesitant_segments)
        )

    @property
    def empty(self) -> bool:
        return not self.any_vocal and not self.semantic.any


def parse_transcript(entry: dict, clip_id: str = "") -> Transcript:
    """Validate a manifest word list into a Transcript.

    ``entry`` carries ``words``: a list of ``{"text", "start", "end"}``
    mappings with seconds-based spans.
    """
    raw_words = entry.get("words")
    if not raw_words:
        raise TranscriptError("empty transcript")
    words = []
    prev_end = None
    for i, w in enumerate(raw_words):
        try:
            text, start, end = w["text"], float(w["start"]), float(w["end"])
        except (KeyError, TypeError, ValueError) as exc:
            raise TranscriptError(f"word {i} malformed: {exc}") from exc
        if start >= end:
            raise TranscriptError(f"word {i} ({text!r}) has nonpositive span")
        if prev_end is not None and start < prev_end - 1e-9:
            raise TranscriptError(f"word {i} ({text!r}) overlaps the previous word")
        words.append(WordToken(text=text, start=start, end=end, index=i))
        prev_end = end
    return Transcript(words=tuple(words), source_clip_id=clip_id or entry.get("id", ""))


def _matches_at(norms: list[str], i: int, phrase: tuple[str, ...]) -> bool:
    return norms[i : i + len(phrase)] == list(phrase)


def segment_instructions(t: Transcript) -> list[InstructionSegment]:
    """Split at clause punctuation and directive connectives.

    A token carrying trailing clause punctuation ends its segment; a
    connective ("then", "and then", "after that") starts a new one and stays
    with the words it introduces. Segments partition the word list.
    """
    if not t.words:
        raise TranscriptError("empty transcript")
    norms = [w.norm for w in t.words]
    boundaries = set()  # word indices that START a new segment
    for i, w in enumerate(t.words):
        if w.text and w.text[-1] in CLAUSE_END_CHARS and i + 1 < len(t.words):
            boundaries.add(i + 1)
    i = 0
    while i < len(norms):
        hit = next((p for p in CONNECTIVES if _matches_at(norms, i, p)), None)
        if hit is not None:
            if i > 0:
                boundaries.add(i)
            i += len(hit)
        else:
            i += 1
    cuts = sorted(boundaries | {0, len(t.words)})
    segments = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        chunk = t.words[a:b]
        segments.append(
            InstructionSegment(
                word_start=a,
                word_end=b,
                start=chunk[0].start,
                end=chunk[-1].end,
                text=" ".join(w.text for w in chunk),
            )
        )
    return segments


def _find_phrases(norms: list[str], lexicon) -> list[int]:
    """First-word indices of non-overlapping lexicon matches."""
    hits = []
    i = 0
    while i < len(norms):
        matched = 0
        for phrase in lexicon:
            if _matches_at(norms, i, phrase):
                matched = len(phrase)
                break
        if matched:
            hits.append(i)
            i += matched
        else:
            i += 1
    return hits


def detect_semantic_flags(t: Transcript) -> SemanticFlags:
    """Hedges, speech repairs, and filled pauses in one pass.

    Repairs are pattern-based: a trigger ("no", "I mean", "sorry", "wait")
    followed in its clause by a direction word that contradicts an earlier
    one. The retracted range is the clause holding the earlier direction;
    the replacement range is the clause holding the new one.
    """
    if not t.words:
        return SemanticFlags((), (), ())
    norms = [w.norm for w in t.words]
    ambiguous = _find_phrases(norms, HEDGES)
    hesitations = [i for i in _find_phrases(norms, FILLERS)]

    segments = segment_instructions(t)

    def segment_of(word_idx: int) -> InstructionSegment:
        for seg in segments:
            if word_idx in seg.word_range:
                return seg
        raise AssertionError("segments must partition the transcript")

    triggers = _find_phrases(norms, REPAIR_TRIGGERS)
    direction_positions = [i for i, n in enumerate(norms) if n in DIRECTION_WORDS]
    repairs = []
    seen_pairs = set()
    for trig in triggers:
        trig_seg = segment_of(trig)
        replacement_dir = next(
            (i for i in direction_positions if trig < i < trig_seg.word_end), None
        )
        if replacement_dir is None:
            continue
        prior_dir = next(
            (i for i in reversed(direction_positions) if i < trig and norms[i] != norms[replacement_dir]),
            None,
        )
        if prior_dir is None:
            continue
        retracted_seg = segment_of(prior_dir)
        replace_seg = segment_of(replacement_dir)
        if retracted_seg.word_start >= replace_seg.word_start:
            continue
        pair = (
            (retracted_seg.word_start, retracted_seg.word_end),
            (replace_seg.word_start, replace_seg.word_end),
        )
        if pair not in seen_pairs:
            seen_pairs.add(pair)
            repairs.append(pair)
    return SemanticFlags(
        ambiguous_hits=tuple(ambiguous),
        repairs=tuple(repairs),
        hesitations=tuple(hesitations),
    )


def repair_drop_indices(t: Transcript, flags: SemanticFlags | None = None) -> set[int]:
    """Word indices removed when repairs collapse to their replacement clause.

    Everything from the start of the retracted clause up to the replacement
    clause goes, plus the trigger tokens that open the replacement clause.
    """
    if flags is None:
        flags = detect_semantic_flags(t)
    norms = [w.norm for w in t.words]
    dropped: set[int] = set()
    for (retr_start, _retr_end), (repl_start, repl_end) in flags.repairs:
        dropped.update(range(retr_start, repl_start))
        i = repl_start
        while i < repl_end:
            hit = next((p for p in REPAIR_TRIGGERS if _matches_at(norms, i, p)), None)
            if hit is None:
                break
            dropped.update(range(i, i + len(hit)))
            i += len(hit)
    return dropped


def transform_transcript(
    t: Transcript,
    hedge_map: dict[tuple[str, ...], tuple[str, ...]] | None = None,
    drop_fillers: bool = True,
    collapse_repairs: bool = True,
) -> Transcript:
    """Rewrite a transcript without its uncertainty markers.

    Hedge n-grams are replaced per ``hedge_map`` (deleted when absent or
    mapped to an empty tuple), fillers are deleted, and repairs collapse to
    their replacement clause. Surviving words keep their timestamps;
    replacement words split the span of the phrase they replace, and the
    replaced phrase's edge punctuation carries over.
    """
    if hedge_map is None:
        hedge_map = {phrase: () for phrase in HEDGES}
    flags = detect_semantic_flags(t) if t.words else SemanticFlags((), (), ())
    dropped = repair_drop_indices(t, flags) if collapse_repairs else set()
    norms = [w.norm for w in t.words]
    out_words: list[tuple[str, float, float]] = []
    i = 0
    while i < len(t.words):
        if i in dropped:
            i += 1
            continue
        hedge_hit = next((p for p in hedge_map if _matches_at(norms, i, p)), None)
        if hedge_hit is not None:
            replacement = hedge_map[hedge_hit]
            span_words = t.words[i : i + len(hedge_hit)]
            if replacement:
                lead = span_words[0].text[: len(span_words[0].text) - len(span_words[0].text.lstrip(_PUNCT))]
                trail_src = span_words[-1].text
                trail = trail_src[len(trail_src.rstrip(_PUNCT)) :]
                start, end = span_words[0].start, span_words[-1].end
                step = (end - start) / len(replacement)
                for j, token in enumerate(replacement):
                    text = token
                    if j == 0 and lead:
                        text = lead + text
                    if j == len(replacement) - 1 and trail:
                        text = text + trail
                    out_words.append((text, start + j * step, start + (j + 1) * step))
            i += len(hedge_hit)
            continue
        if drop_fillers and next((p for p in FILLERS if _matches_at(norms, i, p)), None):
            i += 1
            continue
        out_words.append((t.words[i].text, t.words[i].start, t.words[i].end))
        i += 1
    words = tuple(
        WordToken(text=text, start=start, end=end, index=idx)
        for idx, (text, start, end) in enumerate(out_words)
    )
    return Transcript(words=words, source_clip_id=t.source_clip_id)


def _word_at_time(t: Transcript, when: float) -> int:
    """Word whose [start, end) span contains ``when``, else nearest boundary.

    Boundary ties and equidistant gaps resolve to the earlier word.
    """
    when = min(max(when, t.start), t.end)
    best_idx = 0
    best_dist = None
    for w in t.words:
        # closed spans, first match: a shared boundary goes to the earlier word
        if w.start <= when <= w.end:
            return w.index
        dist = min(abs(when - w.start), abs(when - w.end))
        if best_dist is None or dist < best_dist:
            best_dist = dist
            best_idx = w.index
    return best_idx


def align(
    t: Transcript,
    segments: list[tuple[float, float]],
    report: VocalCueReport,
) -> AlignedCueSet:
    """Map vocal events onto words and carry hesitation flags through.

    ``segments`` must be the same (start, end) list the report was computed
    from, so hesitant indices stay meaningful.
    """
    flags = detect_semantic_flags(t)
    loudness_word = pitch_word = None
    loudness_rise = pitch_rise = True
    if t.words and report.loudness_event is not None:
        loudness_word = _word_at_time(t, report.loudness_event.time)
        loudness_rise = report.loudness_event.rise
    if t.words and report.pitch_event is not None:
        pitch_word = _word_at_time(t, report.pitch_event.time)
        pitch_rise = report.pitch_event.rise
    ranges = []
    for k in report.hesitant_segments:
        seg_start, seg_end = segments[k]
        overlapped = [
            w.index for w in t.words if w.start < seg_end and w.end > seg_start
        ]
        if overlapped:
            ranges.append((overlapped[0], overlapped[-1]))
        elif t.words:
            mid = _word_at_time(t, (seg_start + seg_end) / 2.0)
            ranges.append((mid, mid))
        else:
            ranges.append((0, 0))
    return AlignedCueSet(
        loudness_word=loudness_word,
        pitch_word=pitch_word,
        hesitant_segments=report.hesitant_segments,
        semantic=flags,
        loudness_rise=loudness_rise,
        pitch_rise=pitch_rise,
        hesitant_word_ranges=tuple(ranges),
    )
