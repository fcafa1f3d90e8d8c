import numpy as np

from qtriage.text import tokenize


class TestTokenize:
    def test_stated_rule(self):
        assert tokenize("My ORDER, late!") == ["my", "order", "late"]

    def test_empty_input(self):
        assert tokenize("") == []
        assert tokenize("   \t\n") == []
        assert tokenize("!!! ... ---") == []

    def test_split_on_non_alphanumeric(self):
        assert tokenize("Wi-Fi router #2") == ["wi", "fi", "router", "2"]
        assert tokenize("a_b") == ["a", "b"]
        assert tokenize("order#12345") == ["order", "12345"]

    def test_digits_kept(self):
        assert tokenize("item 42 of 7") == ["item", "42", "of", "7"]

    def test_unicode_lowercasing(self):
        assert tokenize("Café Déjà") == ["café", "déjà"]


class TestTokenizeProperties:
    def test_idempotent_under_rejoin(self):
        rng = np.random.default_rng(7)
        pieces = ["Order", "LATE!", "wi-fi", "#2", "...", "Réfund", "a_b", "12x"]
        for _ in range(200):
            text = " ".join(
                pieces[i] for i in rng.integers(0, len(pieces), size=rng.integers(0, 10))
            )
            once = tokenize(text)
            assert tokenize(" ".join(once)) == once

    def test_case_invariance_ascii(self):
        rng = np.random.default_rng(11)
        alphabet = "abcXYZ 019,.-!"
        for _ in range(200):
            text = "".join(
                alphabet[i] for i in rng.integers(0, len(alphabet), size=rng.integers(0, 30))
            )
            assert tokenize(text.upper()) == tokenize(text.lower())

    def test_deterministic(self):
        text = "Was my Wi-Fi order #42 ever SHIPPED?"
        assert tokenize(text) == tokenize(text)

    def test_tokens_are_alphanumeric(self):
        for tok in tokenize("hello, world! #42 wi-fi"):
            assert tok
            assert tok.isalnum()
