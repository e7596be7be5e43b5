"""Token attack: rewriting rules, idempotence, and robustness ordering."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vocalnav.attack import AttackLexicon, AttackResult, token_attack
from vocalnav.errors import ConfigError
from vocalnav.language import FILLERS, HEDGES

from test_language import transcript_of


def norm_text(t):
    return " ".join(w.norm for w in t.words if w.norm)


class TestTokenAttack:
    def test_hedge_replaced(self):
        t = transcript_of("the vase maybe is on your left")
        out = token_attack(t)
        assert norm_text(out) == "the vase definitely is on your left"

    def test_fillers_deleted(self):
        t = transcript_of("Err, turn umm left")
        out = token_attack(t)
        assert norm_text(out) == "turn left"

    def test_clean_transcript_fixpoint(self):
        t = transcript_of("go straight to the door")
        out = token_attack(t)
        assert norm_text(out) == norm_text(t)
        assert [(w.start, w.end) for w in out.words] == [(w.start, w.end) for w in t.words]

    def test_repair_collapsed(self):
        t = transcript_of("take a left turn, no no no, I mean take a right turn")
        out = token_attack(t)
        assert norm_text(out) == "take a right turn"

    def test_surviving_timestamps_preserved(self):
        t = transcript_of("err the vase maybe is there")
        out = token_attack(t)
        by_text = {w.norm: w for w in t.words}
        for w in out.words:
            if w.norm in by_text:
                assert w.start == by_text[w.norm].start
                assert w.end == by_text[w.norm].end

    def test_idempotent(self):
        samples = [
            "the vase maybe is on your left",
            "Err, turn umm left",
            "take a left turn, no no no, I mean take a right turn",
            "I assume the door is probably on the right, umm perhaps",
            "go straight to the door",
        ]
        for text in samples:
            once = token_attack(transcript_of(text))
            twice = token_attack(once)
            assert [(w.text, w.start, w.end) for w in twice.words] == [
                (w.text, w.start, w.end) for w in once.words
            ]

    @given(
        st.lists(
            st.sampled_from(
                ["go", "maybe", "umm", "left,", "right", "the", "vase", "probably",
                 "err", "no", "I", "mean", "turn", "might"]
            ),
            min_size=1,
            max_size=12,
        )
    )
    @settings(max_examples=150, deadline=None)
    def test_idempotence_property(self, tokens):
        once = token_attack(transcript_of(" ".join(tokens)))
        twice = token_attack(once)
        assert [(w.text, w.start, w.end) for w in twice.words] == [
            (w.text, w.start, w.end) for w in once.words
        ]

    def test_punctuation_carried_to_replacement(self):
        t = transcript_of("go left maybe, then stop")
        out = token_attack(t)
        texts = [w.text for w in out.words]
        assert "definitely," in texts


class TestLexicon:
    def test_default_loads(self):
        lex = AttackLexicon.default()
        assert ("maybe",) in lex.replacements

    def test_replacement_reintroducing_lexicon_rejected(self):
        with pytest.raises(ConfigError, match="reintroduces"):
            AttackLexicon(replacements={("maybe",): ("probably",)})

    def test_replacements_clean_of_lexicon_phrases(self):
        lex = AttackLexicon.default()
        all_phrases = set(HEDGES) | set(FILLERS)
        for replacement in lex.replacements.values():
            for phrase in all_phrases:
                n = len(phrase)
                for i in range(len(replacement) - n + 1):
                    assert replacement[i : i + n] != phrase


class TestAttackResult:
    def test_decrease_signed(self):
        res = AttackResult(metric="pssr", baseline=0.9, attacked=0.6)
        assert res.decrease == pytest.approx(0.3)
        res = AttackResult(metric="pssr", baseline=0.5, attacked=0.7)
        assert res.decrease == pytest.approx(-0.2)
