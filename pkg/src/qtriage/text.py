"""Deterministic tokenization shared by the indexer, the query path, and
the toy encoder.

One rule: Unicode-aware lowercasing, then split on every non-alphanumeric
character. No stemming, no stop words — scores stay reproducible by hand,
and IDF already down-weights common terms. Digits are kept (order numbers
carry signal in customer-service text).
"""

from __future__ import annotations

import re

# \w minus underscore == letters + digits, Unicode-aware
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters.

    "My ORDER, late!" -> ["my", "order", "late"]; empty or punctuation-only
    input yields an empty list.
    """
    if not text:
        return []
    return _TOKEN_RE.findall(text.lower())
