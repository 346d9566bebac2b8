import unicodedata

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsk.errors import ValidationError
from lsk.textnorm import DEFAULT_ZERO_WIDTH, NormConfig, normalize, tokenize_words

from helpers import simple_grapheme_count


class TestNormalizeExamples:
    def test_zero_width_removed(self):
        assert normalize("আ​মি") == "আমি"

    def test_whitespace_cleanup(self):
        assert normalize("  ভালো \t আছি \n") == "ভালো আছি"

    def test_nfd_composed(self):
        # KA + two-part vowel sign O written decomposed (E sign + AA sign)
        decomposed = "কো"
        composed = "কো"
        assert decomposed != composed
        result = normalize(decomposed)
        assert result == composed
        assert unicodedata.is_normalized("NFC", result)

    def test_empty(self):
        assert normalize("") == ""

    def test_no_break_space_collapsed(self):
        assert normalize("a  b") == "a b"

    def test_bom_stripped(self):
        assert normalize("﻿hello") == "hello"


class TestNormConfig:
    def test_strip_disabled(self):
        cfg = NormConfig(strip_zero_width=False)
        assert "​" in normalize("a​b", cfg)

    def test_custom_zero_width_set(self):
        cfg = NormConfig(zero_width_set=frozenset({0x200B}))
        out = normalize("a​‌b", cfg)
        assert "​" not in out and "‌" in out

    def test_empty_set_rejected(self):
        with pytest.raises(ValidationError):
            NormConfig(zero_width_set=frozenset())

    def test_nfc_disabled(self):
        cfg = NormConfig(apply_nfc=False)
        decomposed = unicodedata.normalize("NFD", "é")
        assert normalize(decomposed, cfg) == decomposed


class TestTokenize:
    def test_basic(self):
        assert tokenize_words("ভালো আছি") == ["ভালো", "আছি"]

    def test_empty(self):
        assert tokenize_words("") == []

    def test_ascii(self):
        assert tokenize_words("a b c") == ["a", "b", "c"]


# Text-like fuzz alphabet: Bengali block, Latin, combining marks, zero-width
# characters, whitespace.  No emoji: stripping a ZWJ inside an emoji sequence
# legitimately splits one cluster into two.
_alphabet = st.one_of(
    st.characters(min_codepoint=0x0980, max_codepoint=0x09FF),   # Bengali
    st.characters(min_codepoint=0x0041, max_codepoint=0x007A),
    st.characters(min_codepoint=0x0300, max_codepoint=0x036F),   # combining marks
    st.sampled_from("​‌‍﻿ \t\n\r "),
    st.characters(min_codepoint=0x00C0, max_codepoint=0x024F),
)
texts = st.text(alphabet=_alphabet, max_size=60)


@settings(max_examples=300, deadline=None)
@given(texts)
def test_idempotent(text):
    once = normalize(text)
    assert normalize(once) == once


@settings(max_examples=200, deadline=None)
@given(texts)
def test_output_clean(text):
    out = normalize(text)
    assert not any(ord(c) in DEFAULT_ZERO_WIDTH for c in out)
    assert "  " not in out
    assert out == out.strip(" ")
    assert "\t" not in out and "\n" not in out and " " not in out


@settings(max_examples=200, deadline=None)
@given(texts)
def test_grapheme_count_never_increases(text):
    assert simple_grapheme_count(normalize(text)) <= simple_grapheme_count(text)
