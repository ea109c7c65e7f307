import random

from docreward.records import SegmentKind
from docreward.segmenter import segment, type_profile
from generators import fuzz_string, random_document

PLAIN = SegmentKind.PLAIN_TEXT
FORMULA = SegmentKind.FORMULA
TABLE = SegmentKind.TABLE


def kinds(doc):
    return [s.kind for s in segment(doc).segments]


def contents(doc, kind):
    return segment(doc).contents(kind)


def check_partition(doc):
    """Byte spans must be ascending, disjoint and cover the whole source."""
    result = segment(doc)
    encoded = doc.encode("utf-8")
    cursor = 0
    for seg in result.segments:
        start, end = seg.span
        assert start == cursor
        assert end > start
        cursor = end
    assert cursor == len(encoded)
    return result


# ---------------------------------------------------------------- formulas


def test_inline_dollar_math():
    doc = "The sum $a+b$ is small."
    assert kinds(doc) == [PLAIN, FORMULA, PLAIN]
    assert contents(doc, FORMULA) == ["a+b"]


def test_inline_paren_math():
    doc = r"value \(x\) here"
    assert contents(doc, FORMULA) == ["x"]


def test_display_dollar_math():
    # Content drops the delimiters only; inner whitespace is preserved
    # (the formula tokenizer discards it anyway).
    doc = "before\n$$ E = mc^2 $$\nafter"
    assert contents(doc, FORMULA) == [" E = mc^2 "]


def test_display_bracket_math():
    doc = r"\[ x^2 \]"
    assert kinds(doc) == [FORMULA]
    assert contents(doc, FORMULA) == [" x^2 "]


def test_environment_math_keeps_markup():
    doc = "x\n\\begin{align}a &= b\\end{align}\ny"
    formulas = contents(doc, FORMULA)
    assert len(formulas) == 1
    assert formulas[0].startswith("\\begin{align}")
    assert formulas[0].endswith("\\end{align}")


def test_escaped_dollar_is_plain():
    doc = r"costs \$5 total"
    assert kinds(doc) == [PLAIN]


def test_single_dollar_word_is_formula():
    assert contents("$frac$", FORMULA) == ["frac"]


def test_unpaired_dollar_degrades_to_plain():
    doc = "price is $5"
    assert kinds(doc) == [PLAIN]


def test_unpaired_dollar_before_paired_pair():
    # A lone $ must not eat a later well-formed \( \) formula.
    doc = r"cost $5 and \(x\)"
    assert contents(doc, FORMULA) == ["x"]


def test_dollar_pair_spanning_newline_not_inline():
    doc = "a $x\ny$ b"
    assert kinds(doc) == [PLAIN]


def test_empty_dollar_pair_is_plain():
    assert kinds("$$") == [PLAIN]


def test_leading_and_trailing_formula():
    result = check_partition("$x$")
    assert [s.kind for s in result.segments] == [FORMULA]


def test_adjacent_formulas():
    doc = "$a$$b$"
    # First pass claims $a$; the remaining $b$ is still a valid inline pair.
    assert contents(doc, FORMULA) == ["a", "b"]


# ---------------------------------------------------------------- tables


def test_html_table_whole_doc():
    doc = "<table><tr><td>x</td></tr></table>"
    assert kinds(doc) == [TABLE]


def test_html_table_with_surrounding_text():
    doc = "intro\n<table><tr><td>x</td></tr></table>\noutro"
    assert kinds(doc) == [PLAIN, TABLE, PLAIN]


def test_html_table_contains_dollar():
    doc = "<table><tr><td>$5</td></tr></table>"
    assert kinds(doc) == [TABLE]
    assert contents(doc, FORMULA) == []


def test_nested_html_table_single_segment():
    doc = "<table><tr><td><table><tr><td>x</td></tr></table></td></tr></table>"
    assert kinds(doc) == [TABLE]


def test_unclosed_html_table_degrades_to_plain():
    doc = "<table><tr><td>x"
    assert kinds(doc) == [PLAIN]


def test_pipe_table():
    doc = "| a | b |\n|---|---|\n| 1 | 2 |"
    assert kinds(doc) == [TABLE]


def test_pipe_table_with_surrounding_text():
    doc = "before\n| a |\n|---|\n| 1 |\nafter"
    assert kinds(doc) == [PLAIN, TABLE, PLAIN]
    assert contents(doc, TABLE) == ["| a |\n|---|\n| 1 |"]


def test_single_pipe_line_is_plain():
    assert kinds("a | b") == [PLAIN]


# ---------------------------------------------------------------- fences


def test_code_fence_shields_content():
    doc = "```\n$x$\n| a |\n|---|\n```"
    assert kinds(doc) == [PLAIN]


def test_fence_then_real_formula():
    doc = "```\n$shielded$\n```\nand $x$"
    assert contents(doc, FORMULA) == ["x"]


# ---------------------------------------------------------------- general


def test_empty_doc():
    result = segment("")
    assert result.segments == ()


def test_plain_only_doc():
    doc = "just words here"
    assert kinds(doc) == [PLAIN]
    assert contents(doc, PLAIN) == [doc]


def test_spans_partition_source():
    check_partition("a $x$ b\n<table><tr><td>c</td></tr></table>\n| p |\n|---|\n end")


def test_multibyte_byte_spans():
    doc = "漢字 $x$ 漢"
    result = check_partition(doc)
    spans = [s.span for s in result.segments]
    # "漢字 " is 7 bytes, "$x$" is 3, " 漢" is 4.
    assert spans == [(0, 7), (7, 10), (10, 14)]


def test_formula_content_excludes_delimiters():
    result = segment("$a+b$")
    seg = result.segments[0]
    assert seg.content == "a+b"
    start, end = seg.span
    assert "$a+b$".encode("utf-8")[start:end] == b"$a+b$"


def test_plain_resegmentation_is_stable():
    # Concatenating the plain segments of a mixed document yields a
    # document the segmenter sees as plain only.
    doc = "text $x$ more\n| a |\n|---|\nend"
    plain = "".join(contents(doc, PLAIN))
    again = segment(plain)
    assert all(s.kind is PLAIN for s in again.segments)


def test_random_documents_have_valid_partitions():
    rng = random.Random(99)
    for _ in range(200):
        check_partition(random_document(rng))


def test_fuzz_strings_never_crash():
    rng = random.Random(4242)
    for _ in range(2000):
        check_partition(fuzz_string(rng))


# ---------------------------------------------------------------- profile


def test_type_profile_plain_doc():
    profile = type_profile("just text")
    assert profile == {
        "has_formula": False,
        "has_table": False,
        "formatted_ratio": 0.0,
    }


def test_type_profile_mixed_doc():
    profile = type_profile("ab $cd$")
    assert profile["has_formula"] is True
    assert profile["has_table"] is False
    assert profile["formatted_ratio"] == 0.5


def test_type_profile_table_doc():
    profile = type_profile("<table><tr><td>x</td></tr></table>")
    assert profile["has_table"] is True
    assert profile["formatted_ratio"] == 1.0


def test_type_profile_empty_doc():
    assert type_profile("")["formatted_ratio"] == 0.0
