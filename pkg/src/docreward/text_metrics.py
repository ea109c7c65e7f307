"""Character-level plain-text scoring: normalization, Levenshtein distance
and normalized edit distance (NED).

Distances are computed over Unicode scalar values, not bytes: CJK content
would otherwise be triple-weighted in UTF-8.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

_WS_RUN = re.compile(r"\s+")


@dataclass(frozen=True)
class TextNormConfig:
    """Canonical normalization profile applied before text distances.

    The defaults are the documented profile used by reward and bench runs:
    NFC, whitespace runs collapsed to single spaces with ends trimmed,
    case preserved.
    """

    unicode_nfc: bool = True
    collapse_whitespace: bool = True
    case_fold: bool = False

    def apply(self, text: str) -> str:
        if self.unicode_nfc:
            text = unicodedata.normalize("NFC", text)
        if self.collapse_whitespace:
            text = _WS_RUN.sub(" ", text).strip()
        if self.case_fold:
            text = text.casefold()
        return text

    def to_dict(self) -> dict:
        return {
            "unicode_nfc": self.unicode_nfc,
            "collapse_whitespace": self.collapse_whitespace,
            "case_fold": self.case_fold,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TextNormConfig":
        return cls(
            unicode_nfc=obj.get("unicode_nfc", True),
            collapse_whitespace=obj.get("collapse_whitespace", True),
            case_fold=obj.get("case_fold", False),
        )


IDENTITY_NORM = TextNormConfig(
    unicode_nfc=False, collapse_whitespace=False, case_fold=False
)


def levenshtein(a: str, b: str) -> int:
    """Minimal number of single-character insertions, deletions and
    substitutions (unit costs) transforming a into b."""
    # Trimming a common prefix/suffix never changes the distance and makes
    # the near-identical case (the common one for OCR rollouts) cheap.
    lo = 0
    hi_a, hi_b = len(a), len(b)
    while lo < hi_a and lo < hi_b and a[lo] == b[lo]:
        lo += 1
    while hi_a > lo and hi_b > lo and a[hi_a - 1] == b[hi_b - 1]:
        hi_a -= 1
        hi_b -= 1
    a = a[lo:hi_a]
    b = b[lo:hi_b]

    n, m = len(a), len(b)
    if n == 0:
        return m
    if m == 0:
        return n
    if n > m:
        a, b, n, m = b, a, m, n
    current = list(range(n + 1))
    for i in range(1, m + 1):
        previous, current = current, [i] + [0] * n
        b_char = b[i - 1]
        for j in range(1, n + 1):
            change = previous[j - 1]
            if a[j - 1] != b_char:
                change += 1
            current[j] = min(previous[j] + 1, current[j - 1] + 1, change)
    return current[n]


def ned(a: str, b: str, cfg: TextNormConfig = IDENTITY_NORM) -> float:
    """Normalized edit distance in [0, 1]: levenshtein over the longer
    normalized length. Both sides empty is defined as 0."""
    na = cfg.apply(a)
    nb = cfg.apply(b)
    denom = max(len(na), len(nb))
    if denom == 0:
        return 0.0
    return levenshtein(na, nb) / denom


def text_reward(pred_text: str, gt_text: str, cfg: TextNormConfig) -> float:
    """String-matching reward for plain text: 1 - NED."""
    return 1.0 - ned(pred_text, gt_text, cfg)
