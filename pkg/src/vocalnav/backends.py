"""Language-model backends: a deterministic rule-driven mock and an HTTP
client for chat-completion endpoints that expose per-token top logprobs.

Both speak the same two-call protocol used by the prompt engine:
``propose_options`` returns the raw reply text for an option-generation
prompt, and ``score_labels`` returns ``(token, logprob)`` pairs for the
first answer token of a scoring prompt.
"""

from __future__ import annotations

import json
import math
import os
import re
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .config import BackendSettings
from .errors import BackendError, ConfigError, UnmatchedBundleError

LABELS = ("A", "B", "C", "D", "E")
ENDPOINT_ENV = "TRUSTNAV_LLM_ENDPOINT"
DEFAULT_KEY_ENV = "TRUSTNAV_LLM_KEY"
_DATA_DIR = Path(__file__).parent / "data"

# stable tags emitted by the prompt renderer; the mock keys its predicates
# off these exact strings
TAG_AMBIGUOUS = "ambiguous word"
TAG_REPAIR = "speech repair"
TAG_FILLER = "filled pause"
TAG_PITCH = "pitch"
TAG_LOUDNESS = "loudness"
TAG_DRAWN_OUT = "drawn-out delivery"
NO_SIGNAL_SENTENCE = "no vocal or semantic uncertainty signals detected"


class Backend(Protocol):
    def propose_options(self, prompt_text: str) -> str: ...

    def score_labels(self, prompt_text: str) -> list[tuple[str, float]]: ...


@dataclass(frozen=True)
class MockRule:
    name: str
    when: str
    favor: str
    prob: float
    option_texts: dict[str, str] | None = None


_PREDICATES = {
    "always": lambda s: True,
    "clean": lambda s: not s,
    "any_signal": lambda s: bool(s),
    "any_vocal": lambda s: bool(s & {"pitch", "loudness", "drawn_out"}),
    "any_semantic": lambda s: bool(s & {"hedge", "repair", "filler"}),
    "both": lambda s: bool(s & {"pitch", "loudness", "drawn_out"}) and bool(s & {"hedge", "repair", "filler"}),
    "hedge": lambda s: "hedge" in s,
    "repair": lambda s: "repair" in s,
    "hedge_or_repair": lambda s: bool(s & {"hedge", "repair"}),
    "filler": lambda s: "filler" in s,
    "pitch": lambda s: "pitch" in s,
    "loudness": lambda s: "loudness" in s,
    "hesitation": lambda s: "drawn_out" in s,
}

_DEFAULT_OPTION_TEXTS = {
    "B": "Follow the clearly stated part of the instruction, then look around here for the target",
    "C": "Explore this area for the target before trusting the stated direction",
    "D": "Move to the last clearly named landmark and ask someone there",
}


COMMAND_MARKER = "Command transcript:"


def signals_in_prompt(prompt_text: str) -> set[str]:
    """Cue tags in the prompt's final signal section.

    Only the text after the last command marker counts; the worked examples
    earlier in the prompt contain the same tags.
    """
    section = prompt_text.rsplit(COMMAND_MARKER, 1)[-1]
    found = set()
    if TAG_AMBIGUOUS in section:
        found.add("hedge")
    if TAG_REPAIR in section:
        found.add("repair")
    if TAG_FILLER in section:
        found.add("filler")
    if re.search(rf"{TAG_PITCH} (rise|fall) on", section):
        found.add("pitch")
    if re.search(rf"{TAG_LOUDNESS} (jump|drop) on", section):
        found.add("loudness")
    if TAG_DRAWN_OUT in section:
        found.add("drawn_out")
    return found


class MockBackend:
    """Deterministic backend driven by a first-match rule table.

    Rules map cue-pattern predicates to a favored label with probability
    ``prob`` (the rest split evenly) and optional option texts. A prompt no
    rule matches raises, so silent fallthrough cannot mask a bad fixture.
    """

    def __init__(self, rules: list[MockRule], name: str = "mock"):
        if not rules:
            raise ConfigError("mock backend needs at least one rule")
        for rule in rules:
            if rule.when not in _PREDICATES:
                raise ConfigError(f"unknown mock predicate {rule.when!r}")
            if rule.favor not in LABELS:
                raise ConfigError(f"rule {rule.name!r} favors unknown label {rule.favor!r}")
            if not 0.0 < rule.prob < 1.0:
                raise ConfigError(f"rule {rule.name!r} prob must be in (0, 1)")
        self.rules = rules
        self.name = name

    @classmethod
    def from_file(cls, path: str | Path) -> "MockBackend":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load mock rules from {path}: {exc}") from exc
        rules = [
            MockRule(
                name=r.get("name", f"rule{i}"),
                when=r["when"],
                favor=r["favor"],
                prob=float(r["prob"]),
                option_texts=r.get("options"),
            )
            for i, r in enumerate(data.get("rules", []))
        ]
        return cls(rules, name=data.get("name", Path(path).stem))

    @classmethod
    def default(cls) -> "MockBackend":
        return cls.from_file(_DATA_DIR / "mock_rules.json")

    @classmethod
    def text_only(cls) -> "MockBackend":
        return cls.from_file(_DATA_DIR / "mock_rules_text_only.json")

    def _match(self, prompt_text: str) -> MockRule:
        signals = signals_in_prompt(prompt_text)
        for rule in self.rules:
            if _PREDICATES[rule.when](signals):
                return rule
        raise UnmatchedBundleError(
            f"mock backend {self.name!r}: unmatched bundle (signals={sorted(signals)})"
        )

    def propose_options(self, prompt_text: str) -> str:
        rule = self._match(prompt_text)
        texts = dict(_DEFAULT_OPTION_TEXTS)
        if rule.option_texts:
            texts.update(rule.option_texts)
        payload = {"options": [{"label": lbl, "text": texts[lbl]} for lbl in ("B", "C", "D")]}
        return json.dumps(payload, sort_keys=True)

    def score_labels(self, prompt_text: str) -> list[tuple[str, float]]:
        rule = self._match(prompt_text)
        rest = (1.0 - rule.prob) / (len(LABELS) - 1)
        return [
            (label, math.log(rule.prob if label == rule.favor else rest))
            for label in LABELS
        ]


class HttpBackend:
    """Chat-completion client for an OpenAI-style endpoint.

    The endpoint and credential come from ``BackendSettings`` or the
    TRUSTNAV_LLM_ENDPOINT / TRUSTNAV_LLM_KEY environment variables. The
    scoring call requests per-token top logprobs and reads the first answer
    token's candidates.
    """

    def __init__(self, settings: BackendSettings):
        self.settings = settings
        self.endpoint = settings.endpoint or os.environ.get(ENDPOINT_ENV, "")
        if not self.endpoint:
            raise ConfigError(
                f"http backend needs an endpoint (config or ${ENDPOINT_ENV})"
            )
        self.api_key = os.environ.get(settings.credential_env or DEFAULT_KEY_ENV, "")

    def _post(self, body: dict) -> dict:
        data = json.dumps(body).encode()
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        req = urllib.request.Request(self.endpoint, data=data, headers=headers)
        try:
            with urllib.request.urlopen(req, timeout=self.settings.timeout_s) as resp:
                raw = resp.read().decode()
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise BackendError(f"backend transport failure: {exc}") from exc
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise BackendError("backend returned non-JSON reply", raw_reply=raw) from exc

    def _messages(self, prompt_text: str) -> list[dict]:
        return [{"role": "user", "content": prompt_text}]

    def propose_options(self, prompt_text: str) -> str:
        reply = self._post(
            {
                "model": self.settings.model,
                "messages": self._messages(prompt_text),
                "temperature": self.settings.temperature,
            }
        )
        try:
            return reply["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(
                "backend reply missing message content", raw_reply=json.dumps(reply)
            ) from exc

    def score_labels(self, prompt_text: str) -> list[tuple[str, float]]:
        reply = self._post(
            {
                "model": self.settings.model,
                "messages": self._messages(prompt_text),
                "temperature": self.settings.temperature,
                "max_tokens": 2,
                "logprobs": True,
                "top_logprobs": self.settings.top_logprobs,
            }
        )
        try:
            first = reply["choices"][0]["logprobs"]["content"][0]["top_logprobs"]
            return [(c["token"], float(c["logprob"])) for c in first]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(
                "backend reply missing top logprobs", raw_reply=json.dumps(reply)
            ) from exc


def make_backend(settings: BackendSettings) -> Backend:
    if settings.kind == "mock":
        if settings.rules_path:
            return MockBackend.from_file(settings.rules_path)
        return MockBackend.default()
    return HttpBackend(settings)
