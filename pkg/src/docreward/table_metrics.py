"""Table scoring: canonical table trees, tree edit distance and TEDS.

Tables arrive as raw markup (HTML fragments or Markdown pipe tables), get
parsed leniently into ordered labeled trees, and are compared with the
Zhang-Shasha ordered tree edit distance. TEDS normalizes that distance by
the larger tree's node count; TEDS-S is the structure-only variant that
ignores cell text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Sequence

from .text_metrics import ned


class MalformedTable(ValueError):
    """No table row could be recovered from the markup at all."""


@dataclass
class TableNode:
    """One node of a canonical table tree.

    Tags are restricted to table/thead/tbody/tr/td; header cells (`th`)
    are folded into td with the header flag set. Text is non-empty only
    on td nodes.
    """

    tag: str
    header: bool = False
    rowspan: int = 1
    colspan: int = 1
    text: str = ""
    children: list["TableNode"] = field(default_factory=list)


def tree_size(node: TableNode) -> int:
    total = 0
    stack = [node]
    while stack:
        current = stack.pop()
        total += 1
        stack.extend(current.children)
    return total


def _span_value(raw: object) -> int:
    try:
        value = int(str(raw).strip())
    except (TypeError, ValueError):
        return 1
    return value if value >= 1 else 1


_SECTION_TAGS = ("thead", "tbody", "tfoot")


class _LenientTableParser(HTMLParser):
    """Collects table/thead/tbody/tr/td structure, auto-closing unclosed
    cells and rows at the next sibling or parent open tag. Any other tag
    contributes only the text inside it. Nested <table> markup is flattened
    into the surrounding cell's text stream (depth is tracked so the outer
    close tag still matches)."""

    def __init__(self, keep_sections: bool) -> None:
        super().__init__(convert_charrefs=True)
        self.keep_sections = keep_sections
        self.root = TableNode("table")
        self.section: TableNode | None = None
        self.row: TableNode | None = None
        self.cell: TableNode | None = None
        self.chunks: list[str] = []
        self.table_depth = 0
        self.done = False

    def _row_parent(self) -> TableNode:
        return self.section if self.section is not None else self.root

    def _close_cell(self) -> None:
        if self.cell is not None:
            self.cell.text = " ".join("".join(self.chunks).split())
            self.cell = None
            self.chunks = []

    def _close_row(self) -> None:
        self._close_cell()
        self.row = None

    def _close_section(self) -> None:
        self._close_row()
        self.section = None

    def handle_starttag(self, tag: str, attrs) -> None:
        if self.done:
            return
        if tag == "table":
            self.table_depth += 1
            return
        if self.table_depth > 1:
            # Inside a nested table: no structure, text flows to the
            # enclosing cell via handle_data.
            return
        if tag in _SECTION_TAGS:
            self._close_section()
            if self.keep_sections:
                node = TableNode("thead" if tag == "thead" else "tbody")
                self.root.children.append(node)
                self.section = node
            return
        if tag == "tr":
            self._close_row()
            node = TableNode("tr")
            self._row_parent().children.append(node)
            self.row = node
            return
        if tag in ("td", "th"):
            self._close_cell()
            if self.row is None:
                self.row = TableNode("tr")
                self._row_parent().children.append(self.row)
            attr_map = dict(attrs)
            node = TableNode(
                "td",
                header=(tag == "th"),
                rowspan=_span_value(attr_map.get("rowspan", 1)),
                colspan=_span_value(attr_map.get("colspan", 1)),
            )
            self.row.children.append(node)
            self.cell = node
            return
        # Anything else (b, i, br, span, ...) is formatting noise.

    def handle_endtag(self, tag: str) -> None:
        if self.done:
            return
        if tag == "table":
            if self.table_depth > 1:
                self.table_depth -= 1
            else:
                self._close_section()
                self.done = True
            return
        if self.table_depth > 1:
            return
        if tag in _SECTION_TAGS:
            self._close_section()
        elif tag == "tr":
            self._close_row()
        elif tag in ("td", "th"):
            self._close_cell()

    def handle_data(self, data: str) -> None:
        if not self.done and self.cell is not None:
            self.chunks.append(data)

    def finish(self) -> TableNode:
        self._close_section()
        return self.root


_HTML_TABLE_TAG = re.compile(r"<\s*(table|thead|tbody|tr|td|th)\b", re.IGNORECASE)
_SEPARATOR_CELL = re.compile(r"^:?-+:?$")


def _parse_pipe_table(markup: str) -> TableNode:
    root = TableNode("table")
    for line in markup.splitlines():
        stripped = line.strip()
        if not stripped.startswith("|"):
            continue
        inner = stripped[1:]
        if inner.endswith("|"):
            inner = inner[:-1]
        cells = [" ".join(cell.split()) for cell in inner.split("|")]
        if cells and all(_SEPARATOR_CELL.match(c) for c in cells if c):
            if any(cells):
                continue  # the |---|---| alignment row carries no content
        row = TableNode("tr")
        row.children.extend(TableNode("td", text=cell) for cell in cells)
        root.children.append(row)
    if not root.children:
        raise MalformedTable("no pipe row found")
    return root


def _has_row(node: TableNode) -> bool:
    return any(
        child.tag == "tr" or _has_row(child) for child in node.children
    )


def parse_table(markup: str, keep_sections: bool = True) -> TableNode:
    """Parse an HTML table fragment or a Markdown pipe table into a
    canonical tree.

    Parsing is lenient: unclosed cells and rows are closed at the next
    opening tag, unknown tags contribute only their text, and entity
    references are decoded. Raises MalformedTable only when not a single
    row can be recovered.
    """
    if _HTML_TABLE_TAG.search(markup):
        parser = _LenientTableParser(keep_sections)
        parser.feed(markup)
        parser.close()
        tree = parser.finish()
        if not _has_row(tree):
            raise MalformedTable("no table row found")
        return tree
    return _parse_pipe_table(markup)


class _Annotated:
    """Postorder view of a tree with the leftmost-leaf-descendant table
    and keyroots needed by the Zhang-Shasha dynamic program."""

    __slots__ = ("nodes", "lmds", "keyroots")

    def __init__(self, root: TableNode) -> None:
        order: list[TableNode] = []
        visit: list[tuple[TableNode, bool]] = [(root, False)]
        while visit:
            node, expanded = visit.pop()
            if expanded:
                order.append(node)
                continue
            visit.append((node, True))
            for child in reversed(node.children):
                visit.append((child, False))
        lmd_of: dict[int, int] = {}
        lmds: list[int] = []
        for i, node in enumerate(order):
            lmd = lmd_of[id(node.children[0])] if node.children else i
            lmd_of[id(node)] = lmd
            lmds.append(lmd)
        last_with_lmd: dict[int, int] = {}
        for i, lmd in enumerate(lmds):
            last_with_lmd[lmd] = i
        self.nodes = order
        self.lmds = lmds
        self.keyroots = sorted(last_with_lmd.values())


def _rename_cost(a: TableNode, b: TableNode, structure_only: bool) -> float:
    if a.tag == "td" and b.tag == "td":
        if (
            a.header == b.header
            and a.rowspan == b.rowspan
            and a.colspan == b.colspan
        ):
            return 0.0 if structure_only else ned(a.text, b.text)
        return 1.0
    return 0.0 if a.tag == b.tag else 1.0


def ted(t1: TableNode, t2: TableNode, structure_only: bool = False) -> float:
    """Zhang-Shasha ordered tree edit distance under the table cost model:
    insert/delete cost 1; rename cost 0/1 on tag mismatch for non-cells,
    and NED over cell text (or 0 in structure-only mode) for cells whose
    header flag and spans agree, 1 otherwise."""
    a1 = _Annotated(t1)
    a2 = _Annotated(t2)
    n1 = len(a1.nodes)
    n2 = len(a2.nodes)
    treedists = [[0.0] * n2 for _ in range(n1)]
    rename_memo: dict[tuple[int, int], float] = {}

    def rename(i: int, j: int) -> float:
        key = (i, j)
        hit = rename_memo.get(key)
        if hit is None:
            hit = _rename_cost(a1.nodes[i], a2.nodes[j], structure_only)
            rename_memo[key] = hit
        return hit

    l1, l2 = a1.lmds, a2.lmds
    for i in a1.keyroots:
        for j in a2.keyroots:
            m = i - l1[i] + 2
            n = j - l2[j] + 2
            ioff = l1[i] - 1
            joff = l2[j] - 1
            fd = [[0.0] * n for _ in range(m)]
            for x in range(1, m):
                fd[x][0] = fd[x - 1][0] + 1.0
            for y in range(1, n):
                fd[0][y] = fd[0][y - 1] + 1.0
            for x in range(1, m):
                fdx = fd[x]
                fdx1 = fd[x - 1]
                for y in range(1, n):
                    if l1[i] == l1[x + ioff] and l2[j] == l2[y + joff]:
                        best = min(
                            fdx1[y] + 1.0,
                            fdx[y - 1] + 1.0,
                            fdx1[y - 1] + rename(x + ioff, y + joff),
                        )
                        treedists[x + ioff][y + joff] = best
                    else:
                        p = l1[x + ioff] - 1 - ioff
                        q = l2[y + joff] - 1 - joff
                        best = min(
                            fdx1[y] + 1.0,
                            fdx[y - 1] + 1.0,
                            fd[p][q] + treedists[x + ioff][y + joff],
                        )
                    fdx[y] = best
    return treedists[n1 - 1][n2 - 1]


def teds(
    pred: TableNode, gt: TableNode, structure_only: bool = False
) -> float:
    """Tree-edit-distance-based similarity in [0, 1].

    The distance between very dissimilar shapes can exceed the larger
    tree's size (ancestry constraints may force deletes plus inserts
    where no rename is admissible), so the normalized value is clamped
    at zero.
    """
    if pred == gt:
        return 1.0
    denom = max(tree_size(pred), tree_size(gt))
    return max(0.0, 1.0 - ted(pred, gt, structure_only) / denom)


def table_reward(
    pred_tables: Sequence[str],
    gt_tables: Sequence[str],
    node_cap: int = 5000,
    structure_only: bool = False,
    keep_sections: bool = True,
) -> float:
    """Positionally aligned mean TEDS over table slots.

    The i-th predicted table is scored against the i-th ground-truth
    table; a slot missing on either side, or an unparseable table in it,
    scores 0. Content mode falls back to structure-only distance for
    pairs where either tree exceeds node_cap, bounding worst-case cost.
    """
    slots = max(len(pred_tables), len(gt_tables))
    if slots == 0:
        return 1.0
    total = 0.0
    for i in range(slots):
        if i >= len(pred_tables) or i >= len(gt_tables):
            continue
        try:
            pred_tree = parse_table(pred_tables[i], keep_sections)
            gt_tree = parse_table(gt_tables[i], keep_sections)
        except MalformedTable:
            continue
        capped = structure_only or (
            tree_size(pred_tree) > node_cap or tree_size(gt_tree) > node_cap
        )
        total += teds(pred_tree, gt_tree, capped)
    return total / slots
