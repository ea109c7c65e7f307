"""Formula scoring: LaTeX tokenization, canonicalization and BLEU.

Formulas are compared token-wise rather than character-wise so that
surface-level markup variation (spacing commands, size-variant fractions,
redundant grouping) does not leak into the reward.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

_ASCII_LETTERS = frozenset(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
)

SEPARATOR_TOKEN = "<SEP>"


def tokenize_latex(source: str) -> list[str]:
    """Split LaTeX source into control sequences, braces and single
    characters. Whitespace separates tokens and is discarded.

    A control sequence is a backslash followed by a maximal run of ASCII
    letters, or a backslash followed by exactly one non-letter character.
    A trailing lone backslash is kept as the token "\\".
    """
    tokens: list[str] = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "\\":
            j = i + 1
            if j < n and source[j] in _ASCII_LETTERS:
                while j < n and source[j] in _ASCII_LETTERS:
                    j += 1
                tokens.append(source[i:j])
                i = j
            elif j < n:
                tokens.append(source[i : j + 1])
                i = j + 1
            else:
                tokens.append("\\")
                i = j
        else:
            tokens.append(ch)
            i += 1
    return tokens


_SIZE_VARIANT_FRAC = {"\\dfrac": "\\frac", "\\tfrac": "\\frac"}
_SPACING_TOKENS = frozenset(
    {"\\,", "\\;", "\\!", "\\:", "~", "\\quad", "\\qquad"}
)


@dataclass(frozen=True)
class CanonRuleSet:
    """Which canonicalization rule families are active.

    Rules are applied in a fixed order, repeated until the token list
    stops changing, so rules can cascade (e.g. dropping a spacing token
    may expose a single-token braced group to unwrap).
    """

    drop_left_right: bool = True
    normalize_fractions: bool = True
    drop_spacing: bool = True
    strip_array_colspec: bool = True
    unwrap_singleton_groups: bool = True

    def to_dict(self) -> dict:
        return {
            "drop_left_right": self.drop_left_right,
            "normalize_fractions": self.normalize_fractions,
            "drop_spacing": self.drop_spacing,
            "strip_array_colspec": self.strip_array_colspec,
            "unwrap_singleton_groups": self.unwrap_singleton_groups,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "CanonRuleSet":
        return cls(
            drop_left_right=obj.get("drop_left_right", True),
            normalize_fractions=obj.get("normalize_fractions", True),
            drop_spacing=obj.get("drop_spacing", True),
            strip_array_colspec=obj.get("strip_array_colspec", True),
            unwrap_singleton_groups=obj.get("unwrap_singleton_groups", True),
        )

    @classmethod
    def none(cls) -> "CanonRuleSet":
        return cls(False, False, False, False, False)


def _pass_once(tokens: list[str], rules: CanonRuleSet) -> list[str]:
    out: list[str] = []
    i = 0
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        if rules.drop_left_right and tok in ("\\left", "\\right"):
            i += 1
            continue
        if rules.drop_spacing and tok in _SPACING_TOKENS:
            i += 1
            continue
        if rules.normalize_fractions and tok in _SIZE_VARIANT_FRAC:
            out.append(_SIZE_VARIANT_FRAC[tok])
            i += 1
            continue
        if (
            rules.strip_array_colspec
            and tok == "\\begin"
            and i + 6 < n
            and tokens[i + 1] == "{"
            and tokens[i + 2 : i + 5] == ["a", "r", "r"]
        ):
            # \begin {array} {colspec} -> \begin {array}; find the first
            # braced group (the environment name), check it spells "array",
            # then drop the immediately following balanced braced group.
            j = i + 1
            depth = 0
            name_tokens: list[str] = []
            k = j
            while k < n:
                if tokens[k] == "{":
                    depth += 1
                elif tokens[k] == "}":
                    depth -= 1
                    if depth == 0:
                        break
                elif depth >= 1:
                    name_tokens.append(tokens[k])
                k += 1
            if (
                depth == 0
                and k < n
                and "".join(name_tokens) == "array"
                and k + 1 < n
                and tokens[k + 1] == "{"
            ):
                out.extend(tokens[i : k + 1])
                depth2 = 0
                m = k + 1
                while m < n:
                    if tokens[m] == "{":
                        depth2 += 1
                    elif tokens[m] == "}":
                        depth2 -= 1
                        if depth2 == 0:
                            break
                    m += 1
                if depth2 == 0 and m < n:
                    i = m + 1
                    continue
                # Unbalanced column spec: leave the rest untouched.
                out.extend(tokens[k + 1 :])
                return out
            out.append(tok)
            i += 1
            continue
        if (
            rules.unwrap_singleton_groups
            and tok == "{"
            and i + 2 < n
            and tokens[i + 2] == "}"
            and tokens[i + 1] not in ("{", "}")
        ):
            out.append(tokens[i + 1])
            i += 3
            continue
        out.append(tok)
        i += 1
    return out


def canonicalize(
    tokens: Sequence[str], rules: CanonRuleSet | None = None
) -> list[str]:
    """Apply the active rewrite rules until a fixpoint is reached."""
    if rules is None:
        rules = CanonRuleSet()
    current = list(tokens)
    while True:
        rewritten = _pass_once(current, rules)
        if rewritten == current:
            return rewritten
        current = rewritten


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(
        tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)
    )


def bleu(
    candidate: Sequence[str], reference: Sequence[str], max_n: int = 4
) -> float:
    """Sentence BLEU with uniform weights, brevity penalty and additive
    smoothing for zero-match orders.

    Orders run from 1 to min(max_n, len(candidate)); an order with no
    matches contributes 1 / (2 * candidate_ngram_count) instead of zero
    so a single missing order does not zero the whole score.
    """
    c = len(candidate)
    r = len(reference)
    if c == 0:
        return 0.0
    top_n = min(max_n, c)
    log_sum = 0.0
    for n in range(1, top_n + 1):
        cand_counts = _ngram_counts(candidate, n)
        ref_counts = _ngram_counts(reference, n)
        total = c - n + 1
        matched = sum(
            min(count, ref_counts[gram])
            for gram, count in cand_counts.items()
        )
        if matched == 0:
            precision = 1.0 / (2.0 * total)
        else:
            precision = matched / total
        log_sum += math.log(precision)
    score = math.exp(log_sum / top_n)
    if c < r:
        score *= math.exp(1.0 - r / c)
    return score


@dataclass(frozen=True)
class FormulaConfig:
    rules: CanonRuleSet = field(default_factory=CanonRuleSet)
    max_n: int = 4

    def to_dict(self) -> dict:
        return {"rules": self.rules.to_dict(), "max_n": self.max_n}

    @classmethod
    def from_dict(cls, obj: dict) -> "FormulaConfig":
        return cls(
            rules=CanonRuleSet.from_dict(obj.get("rules", {})),
            max_n=obj.get("max_n", 4),
        )


def formula_token_stream(
    formulas: Sequence[str], cfg: FormulaConfig
) -> list[str]:
    """Tokenize and canonicalize each formula, then join the per-formula
    token lists with a separator token that cannot collide with LaTeX."""
    stream: list[str] = []
    for idx, formula in enumerate(formulas):
        if idx:
            stream.append(SEPARATOR_TOKEN)
        stream.extend(canonicalize(tokenize_latex(formula), cfg.rules))
    return stream


def formula_reward(
    pred_formulas: Sequence[str],
    gt_formulas: Sequence[str],
    cfg: FormulaConfig | None = None,
) -> float:
    """BLEU of the predicted token stream against the ground-truth one."""
    if cfg is None:
        cfg = FormulaConfig()
    gt_stream = formula_token_stream(gt_formulas, cfg)
    pred_stream = formula_token_stream(pred_formulas, cfg)
    if not gt_stream:
        # Caller is expected to gate on ground-truth presence; an empty
        # ground truth stream scores 1 only for an equally empty prediction.
        return 1.0 if not pred_stream else 0.0
    return bleu(pred_stream, gt_stream, cfg.max_n)
