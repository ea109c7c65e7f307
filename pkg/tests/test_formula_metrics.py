import json
import pathlib
import random

from hypothesis import given
from hypothesis import strategies as st

from docreward.formula_metrics import (
    SEPARATOR_TOKEN,
    CanonRuleSet,
    FormulaConfig,
    bleu,
    canonicalize,
    formula_reward,
    formula_token_stream,
    tokenize_latex,
)
from oracles.reference_bleu import reference_bleu

FIXTURE = pathlib.Path(__file__).parent / "fixtures" / "bleu_golden.json"


def test_tokenize_commands_and_atoms():
    assert tokenize_latex(r"\frac{1}{2}") == ["\\frac", "{", "1", "}", "{", "2", "}"]
    assert tokenize_latex("a+b") == ["a", "+", "b"]
    assert tokenize_latex(r"\alpha\beta") == ["\\alpha", "\\beta"]


def test_tokenize_whitespace_discarded():
    assert tokenize_latex("a \t b\nc") == ["a", "b", "c"]


def test_tokenize_control_symbols():
    assert tokenize_latex(r"\,x") == ["\\,", "x"]
    assert tokenize_latex("\\ x") == ["\\ ", "x"]
    assert tokenize_latex(r"\%") == ["\\%"]


def test_tokenize_trailing_backslash():
    assert tokenize_latex("x\\") == ["x", "\\"]


def test_tokenize_multibyte_chars():
    assert tokenize_latex("α漢") == ["α", "漢"]


@given(st.text(max_size=40))
def test_tokenize_idempotent_on_own_output(source):
    tokens = tokenize_latex(source)
    assert tokenize_latex("".join(tokens)) == tokens


def test_canonicalize_drops_sizing_wrappers():
    tokens = tokenize_latex(r"\left( \dfrac{a}{b} \right)")
    assert canonicalize(tokens) == ["(", "\\frac", "a", "b", ")"]


def test_canonicalize_fraction_aliases():
    assert canonicalize(tokenize_latex(r"\dfrac{1}{2}")) == canonicalize(
        tokenize_latex(r"\frac{1}{2}")
    )
    assert canonicalize(tokenize_latex(r"\tfrac{1}{2}")) == canonicalize(
        tokenize_latex(r"\frac{1}{2}")
    )


def test_canonicalize_drops_spacing_commands():
    assert canonicalize(tokenize_latex(r"x \, y \quad z~w")) == ["x", "y", "z", "w"]


def test_canonicalize_array_colspec():
    tokens = tokenize_latex(r"\begin{array}{ll} a \end{array}")
    out = canonicalize(tokens)
    # The column spec {ll} is dropped; the environment name stays as its
    # character tokens (multi-token groups are never unwrapped).
    assert "l" not in out
    assert out == (
        ["\\begin", "{", "a", "r", "r", "a", "y", "}"]
        + ["a"]
        + ["\\end", "{", "a", "r", "r", "a", "y", "}"]
    )


def test_canonicalize_unwraps_single_token_groups():
    assert canonicalize(tokenize_latex("{x}+{y}")) == ["x", "+", "y"]
    assert canonicalize(tokenize_latex(r"\frac{1}{3}")) == ["\\frac", "1", "3"]


def test_canonicalize_keeps_multi_token_groups():
    assert canonicalize(tokenize_latex("{xy}")) == ["{", "x", "y", "}"]
    assert canonicalize(tokenize_latex("{x+y}z")) == ["{", "x", "+", "y", "}", "z"]


@given(st.text(max_size=40))
def test_canonicalize_is_a_fixpoint(source):
    once = canonicalize(tokenize_latex(source))
    assert canonicalize(once) == once


def test_canonicalize_rules_can_be_disabled():
    none = CanonRuleSet.none()
    tokens = tokenize_latex(r"\left( x \right)")
    assert canonicalize(tokens, none) == tokens


def test_canon_rule_set_round_trip():
    rules = CanonRuleSet.none()
    assert CanonRuleSet.from_dict(rules.to_dict()) == rules
    assert CanonRuleSet.from_dict(CanonRuleSet().to_dict()) == CanonRuleSet()


def test_bleu_identity_is_one():
    tokens = tokenize_latex(r"\frac{1}{2} + x")
    assert bleu(tokens, tokens) == 1.0


def test_bleu_empty_candidate_is_zero():
    assert bleu([], ["a"]) == 0.0


def test_bleu_known_value():
    cand = canonicalize(tokenize_latex(r"\frac{1}{3}"))
    ref = canonicalize(tokenize_latex(r"\frac{1}{2}"))
    assert abs(bleu(cand, ref) - 0.5503212081491045) < 1e-12


def test_bleu_rewards_structure_over_garbage():
    ref = tokenize_latex(r"\frac{1}{2}")
    close = bleu(tokenize_latex("1/2"), ref)
    far = bleu(tokenize_latex("xyz"), ref)
    assert close > far > 0.0


def test_bleu_short_candidate_caps_order():
    # Candidate of length 2 uses only 1- and 2-gram precisions.
    assert bleu(["a", "b"], ["a", "b"]) == 1.0


def test_bleu_matches_reference_fixture():
    cases = json.loads(FIXTURE.read_text(encoding="utf-8"))
    assert len(cases) >= 200
    for case in cases:
        got = bleu(case["candidate"], case["reference"], case["max_n"])
        assert abs(got - case["bleu"]) < 1e-9, case


def test_bleu_matches_reference_on_fresh_pairs():
    rng = random.Random(23)
    vocab = ["a", "b", "{", "}", "\\frac", "1", "2", "+"]
    for _ in range(300):
        cand = [rng.choice(vocab) for _ in range(rng.randint(0, 10))]
        ref = [rng.choice(vocab) for _ in range(rng.randint(0, 10))]
        assert abs(bleu(cand, ref) - reference_bleu(cand, ref)) < 1e-12


def test_formula_token_stream_joins_with_separator():
    stream = formula_token_stream(["a+b", "x"], FormulaConfig())
    assert stream == ["a", "+", "b", SEPARATOR_TOKEN, "x"]


def test_formula_token_stream_canonicalizes():
    stream = formula_token_stream([r"{x}"], FormulaConfig())
    assert stream == ["x"]


def test_formula_reward_empty_conventions():
    assert formula_reward([], []) == 1.0
    assert formula_reward(["x"], []) == 0.0
    assert formula_reward([], ["x"]) == 0.0


def test_formula_reward_identity():
    formulas = [r"\frac{1}{2}", "a+b"]
    assert formula_reward(formulas, formulas) == 1.0


def test_formula_reward_ignores_presentation_variants():
    assert formula_reward([r"\dfrac{1}{2}"], [r"\frac{1}{2}"]) == 1.0
    assert formula_reward([r"\left( x \right)"], ["( x )"]) == 1.0


def test_formula_config_round_trip():
    cfg = FormulaConfig(rules=CanonRuleSet.none(), max_n=2)
    assert FormulaConfig.from_dict(cfg.to_dict()) == cfg
