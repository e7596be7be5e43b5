"""Prompt composition, candidate-action construction, and label scoring.

The prompt joins the transcript with a rendered list of detected signals and
three fixed worked examples. Five candidate actions are labeled A..E: A is a
locally synthesized paraphrase of the instruction with uncertainty markers
removed, B..D acknowledge the uncertainty (texts may come from the backend,
plans are canonical), and E is always the fixed ask-a-person fallback.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .backends import (
    LABELS,
    NO_SIGNAL_SENTENCE,
    TAG_AMBIGUOUS,
    TAG_DRAWN_OUT,
    TAG_FILLER,
    TAG_LOUDNESS,
    TAG_PITCH,
    TAG_REPAIR,
    Backend,
)
from .errors import BackendError, ConfigError
from .language import (
    HEDGES,
    AlignedCueSet,
    Transcript,
    _matches_at,
    segment_instructions,
    transform_transcript,
)

_DATA_DIR = Path(__file__).parent / "data"
FALLBACK_TEXT = "ask another person nearby for direction"
PROB_FLOOR = 1e-6
EXAMPLE_KINDS = ("textual", "vocal", "both")


@dataclass(frozen=True)
class InContextExample:
    kind: str
    prompt: str
    reasoning: str
    answer: str


@dataclass(frozen=True)
class PlanStep:
    """One action of a plan: a verb plus optional argument.

    ``explore_here`` steps carry the literal instruction steps they replaced,
    so an executor with scene conjecture disabled can fall back to them.
    """

    verb: str
    arg: str | None = None
    fallback: tuple["PlanStep", ...] = ()

    def render(self) -> str:
        return f"{self.verb}({self.arg})" if self.arg else f"{self.verb}"


@dataclass(frozen=True)
class ActionOption:
    label: str
    text: str
    plan: tuple[PlanStep, ...]

    def __post_init__(self):
        if not self.plan:
            raise ConfigError(f"option {self.label} has an empty plan")


@dataclass(frozen=True)
class OptionSet:
    options: tuple[ActionOption, ...]

    def __post_init__(self):
        if tuple(o.label for o in self.options) != LABELS:
            raise ConfigError("options must be exactly A..E in order")
        for option in self.options[1:]:
            if option.plan[-1].verb not in ("explore_here", "ask_person"):
                raise ConfigError(
                    f"option {option.label} must end in explore_here or ask_person"
                )

    def __getitem__(self, label: str) -> ActionOption:
        return self.options[LABELS.index(label)]


@dataclass(frozen=True)
class TokenDistribution:
    """Probabilities over the five option labels; sums to one."""

    probs: dict[str, float]

    def __post_init__(self):
        if set(self.probs) != set(LABELS):
            raise ConfigError("distribution must cover exactly the labels A..E")
        if any(p < 0 for p in self.probs.values()):
            raise ConfigError("probabilities must be nonnegative")
        if abs(sum(self.probs.values()) - 1.0) > 1e-9:
            raise ConfigError("probabilities must sum to 1")

    @classmethod
    def from_logprob_pairs(cls, pairs: list[tuple[str, float]]) -> "TokenDistribution":
        """Best logprob per label; absent labels get a tiny floor; renormalize."""
        raw: dict[str, float] = {}
        for token, logprob in pairs:
            label = token.strip().upper()
            if label in LABELS:
                prob = math.exp(logprob)
                if label not in raw or prob > raw[label]:
                    raw[label] = prob
        full = {label: raw.get(label, PROB_FLOOR) for label in LABELS}
        total = sum(full.values())
        return cls(probs={label: p / total for label, p in full.items()})


@dataclass(frozen=True)
class PromptBundle:
    system_preamble: str
    examples: tuple[InContextExample, ...]
    transcript_text: str
    cue_rendering: str
    transcript: Transcript = field(compare=False)
    cues: AlignedCueSet = field(compare=False)

    def header_text(self) -> str:
        lines = [self.system_preamble.strip(), "", "Worked examples:"]
        for i, ex in enumerate(self.examples, 1):
            lines += [
                f"Example {i}:",
                ex.prompt,
                f"Reasoning: {ex.reasoning}",
                f"Answer: {ex.answer}",
                "",
            ]
        lines += [
            f'Command transcript: "{self.transcript_text}"',
            self.cue_rendering,
        ]
        return "\n".join(lines)


def load_examples(path: str | Path | None = None) -> tuple[InContextExample, ...]:
    data = json.loads(Path(path or _DATA_DIR / "icl_examples.json").read_text())
    examples = tuple(
        InContextExample(
            kind=e["kind"], prompt=e["prompt"], reasoning=e["reasoning"], answer=e["answer"]
        )
        for e in data["examples"]
    )
    if tuple(sorted(e.kind for e in examples)) != tuple(sorted(EXAMPLE_KINDS)):
        raise ConfigError("worked examples must cover textual, vocal and both exactly once")
    return examples


_PREAMBLE = (_DATA_DIR / "cot_preamble.txt").read_text()
_EXAMPLES = load_examples()


def _hedge_phrase_at(t: Transcript, i: int) -> str:
    norms = [w.norm for w in t.words]
    for phrase in HEDGES:
        if _matches_at(norms, i, phrase):
            return " ".join(w.text for w in t.words[i : i + len(phrase)])
    return t.words[i].text


def _snippet(t: Transcript, a: int, b: int, limit: int = 6) -> str:
    words = [w.text for w in t.words[a : b + 1]][:limit]
    return " ".join(words)


def render_cues(t: Transcript, cues: AlignedCueSet, include_vocal: bool = True) -> str:
    """Deterministic signal section: one line per cue, in word order."""
    items: list[tuple[int, int, str]] = []  # (anchor word, kind priority, line)
    for (retr_start, retr_end), (repl_start, repl_end) in cues.semantic.repairs:
        retracted = _snippet(t, retr_start, retr_end - 1, limit=12)
        replacement = _snippet(t, repl_start, repl_end - 1, limit=12)
        items.append(
            (retr_start, 0, f"- {TAG_REPAIR}: '{retracted}' replaced by '{replacement}'")
        )
    for i in cues.semantic.ambiguous_hits:
        items.append((i, 1, f"- {TAG_AMBIGUOUS} '{_hedge_phrase_at(t, i)}' (word {i})"))
    for i in cues.semantic.hesitations:
        items.append((i, 2, f"- {TAG_FILLER} '{t.words[i].text}' (word {i})"))
    if include_vocal:
        for (a, b) in cues.hesitant_word_ranges:
            items.append(
                (a, 3, f"- {TAG_DRAWN_OUT} across words {a}-{b} ('{_snippet(t, a, b)}')")
            )
        if cues.pitch_word is not None:
            direction = "rise" if cues.pitch_rise else "fall"
            items.append(
                (
                    cues.pitch_word,
                    4,
                    f"- {TAG_PITCH} {direction} on '{t.words[cues.pitch_word].text}' (word {cues.pitch_word})",
                )
            )
        if cues.loudness_word is not None:
            direction = "jump" if cues.loudness_rise else "drop"
            items.append(
                (
                    cues.loudness_word,
                    5,
                    f"- {TAG_LOUDNESS} {direction} on '{t.words[cues.loudness_word].text}' (word {cues.loudness_word})",
                )
            )
    if not items:
        return f"Detected signals: {NO_SIGNAL_SENTENCE}"
    items.sort(key=lambda item: (item[0], item[1]))
    return "\n".join(["Detected signals:"] + [line for _, _, line in items])


def build_prompt(
    t: Transcript, cues: AlignedCueSet, include_vocal: bool = True
) -> PromptBundle:
    """Compose transcript and cue rendering into the model prompt."""
    return PromptBundle(
        system_preamble=_PREAMBLE,
        examples=_EXAMPLES,
        transcript_text=t.text,
        cue_rendering=render_cues(t, cues, include_vocal=include_vocal),
        transcript=t,
        cues=cues,
    )


_ARTICLES = {"the", "a", "an", "your", "my", "this", "that"}
_GO_VERBS = {"go", "move", "head", "walk", "continue", "proceed", "drive"}
_STRAIGHT_WORDS = {"straight", "forward", "ahead"}


def _strip_articles(tokens: list[str]) -> list[str]:
    while tokens and tokens[0] in _ARTICLES:
        tokens = tokens[1:]
    return tokens


def _parse_segment(norms: list[str]) -> list[tuple[str, str | None]]:
    """Steps for one instruction clause, splitting compound 'and' phrases."""
    tokens = [n for n in norms if n]  # punctuation-only tokens normalize to ""
    if tokens[:1] == ["then"]:
        tokens = tokens[1:]
    if tokens[:2] == ["and", "then"] or tokens[:2] == ["after", "that"]:
        tokens = tokens[2:]
    parts: list[list[str]] = [[]]
    for token in tokens:
        if token == "and":
            parts.append([])
        else:
            parts[-1].append(token)
    if len(parts) > 1:
        steps: list[tuple[str, str | None]] = []
        for part in parts:
            if part:
                steps.extend(_parse_clause(part))
        return steps
    return _parse_clause(tokens)


def _parse_clause(tokens: list[str]) -> list[tuple[str, str | None]]:
    """Steps for one simple clause; empty when nothing actionable."""
    if not tokens:
        return []
    if tokens == ["stop"] or tokens[:1] == ["stop"]:
        return [("stop", None)]
    if "ask" in tokens:
        return [("ask_person", None)]
    if tokens[0] in ("explore", "look"):
        return [("explore_here", None)]
    # "turn left", "take a left (turn)", "turn to the left"
    if tokens[0] in ("turn", "take"):
        for token in tokens[1:]:
            if token in ("left", "right"):
                return [("turn", token)]
        return []
    # "the X is on your left/right" / "the X is there"
    if "is" in tokens and tokens[0] in _ARTICLES:
        landmark = " ".join(_strip_articles(tokens[: tokens.index("is")]))
        steps: list[tuple[str, str | None]] = []
        rest = tokens[tokens.index("is") + 1 :]
        for token in rest:
            if token in ("left", "right"):
                steps.append(("turn", token))
                break
        if landmark:
            steps.append(("move_to", landmark))
        return steps
    if tokens[0] in _GO_VERBS:
        if "to" in tokens:
            landmark_tokens = _strip_articles(tokens[tokens.index("to") + 1 :])
            landmark = " ".join(tok for tok in landmark_tokens if tok not in _STRAIGHT_WORDS)
            if landmark:
                return [("move_to", landmark)]
        if any(t in _STRAIGHT_WORDS for t in tokens[1:]):
            return [("forward", None)]
        for token in tokens[1:]:
            if token in ("left", "right"):
                return [("turn", token)]
    return []


def plan_from_transcript(t: Transcript) -> tuple[tuple[PlanStep, ...], int]:
    """Parse an instruction into plan steps.

    Returns the steps and the index where the final clause's steps begin
    (the part treated as the uncertain suffix). An unparseable instruction
    yields a single explore step.
    """
    if not t.words:
        return (PlanStep("explore_here"),), 0
    steps: list[PlanStep] = []
    last_clause_start = 0
    for seg in segment_instructions(t):
        seg_norms = [t.words[i].norm for i in seg.word_range]
        parsed = _parse_segment(seg_norms)
        if parsed:
            last_clause_start = len(steps)
            steps.extend(PlanStep(verb=verb, arg=arg) for verb, arg in parsed)
    if not steps:
        return (PlanStep("explore_here"),), 0
    return tuple(steps), last_clause_start


def synthesize_option_a(t: Transcript) -> ActionOption:
    """Direct paraphrase of the instruction with uncertainty markers removed."""
    cleaned = transform_transcript(t)
    plan, _ = plan_from_transcript(cleaned)
    return ActionOption(label="A", text=cleaned.text, plan=plan)


def canonical_options(t: Transcript, texts: dict[str, str]) -> OptionSet:
    """Assemble the five options around the locally built plans."""
    option_a = synthesize_option_a(t)
    plan, suffix_start = plan_from_transcript(transform_transcript(t))
    prefix = plan[:suffix_start]
    suffix = plan[suffix_start:]
    option_b = ActionOption(
        label="B",
        text=texts.get("B", ""),
        plan=prefix + (PlanStep("explore_here", fallback=suffix),),
    )
    option_c = ActionOption(
        label="C",
        text=texts.get("C", ""),
        plan=(PlanStep("explore_here", fallback=plan),),
    )
    option_d = ActionOption(
        label="D",
        text=texts.get("D", ""),
        plan=prefix + (PlanStep("ask_person"),),
    )
    option_e = ActionOption(label="E", text=FALLBACK_TEXT, plan=(PlanStep("ask_person"),))
    return OptionSet(options=(option_a, option_b, option_c, option_d, option_e))


def _options_prompt(bundle: PromptBundle) -> str:
    return "\n".join(
        [
            bundle.header_text(),
            "",
            "Propose three candidate actions labeled B, C and D that acknowledge",
            "the detected uncertainty (A and E are fixed). Reply as JSON:",
            '{"options": [{"label": "B", "text": "..."}, {"label": "C", "text": "..."},'
            ' {"label": "D", "text": "..."}]}',
        ]
    )


def scoring_prompt(bundle: PromptBundle, options: OptionSet) -> str:
    lines = [bundle.header_text(), "", "Candidate actions:"]
    for option in options.options:
        lines.append(f"{option.label}. {option.text}")
    lines += ["", "Reply with the single letter of the best action.", "Answer:"]
    return "\n".join(lines)


def _with_retry(func, *args):
    try:
        return func(*args)
    except BackendError:
        return func(*args)


def request_options(bundle: PromptBundle, backend: Backend) -> OptionSet:
    """Fetch B..D texts from the backend and build the validated option set.

    One retry on transport failure or an unparseable reply, then the error
    surfaces with the raw reply attached.
    """
    prompt = _options_prompt(bundle)

    def attempt(prompt_text: str) -> OptionSet:
        reply = backend.propose_options(prompt_text)
        try:
            data = json.loads(reply)
            texts = {
                o["label"]: str(o["text"])
                for o in data["options"]
                if o.get("label") in ("B", "C", "D")
            }
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise BackendError(
                f"unparseable options reply: {exc}", raw_reply=reply
            ) from exc
        if set(texts) != {"B", "C", "D"}:
            raise BackendError(
                f"options reply missing labels (got {sorted(texts)})", raw_reply=reply
            )
        return canonical_options(bundle.transcript, texts)

    return _with_retry(attempt, prompt)


def score_options(
    bundle: PromptBundle, options: OptionSet, backend: Backend
) -> TokenDistribution:
    """First-answer-token probabilities over the five labels."""
    prompt = scoring_prompt(bundle, options)

    def attempt(prompt_text: str) -> TokenDistribution:
        pairs = backend.score_labels(prompt_text)
        return TokenDistribution.from_logprob_pairs(pairs)

    return _with_retry(attempt, prompt)
