"""LaTeX article parsing into the segment model.

Supported subset: a preamble with \\title, \\author, \\keywords and
\\newtheorem, an optional document environment, theorem-like environments
(plus \\newtheorem aliases), equation/align environments, $...$ and
\\[...\\] math, \\label and \\ref/\\eqref. Everything else degrades to
plain narrative text. Parsing is pure and deterministic: identical bytes
give an identical document, segment ids included.

Segments are numbered <doc_id>#s<n> in document order with the Document
root at #s0; formulas are numbered <doc_id>#f<n> document-wide from 1.
Top-level segment spans tile the document body exactly: narrative gaps
become DocumentSegment segments, whitespace-only gaps merge into the
neighboring segment's span.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import EncodingError, MissingTitle, StructureError
from ..formula.parser import ParseError, parse_tex_formula
from .model import (
    PROVABLE_TYPES,
    FormulaRecord,
    MathDocument,
    Metadata,
    Segment,
    SegmentRelation,
    SegmentRelationKind,
    SegmentType,
)

_ENV_TYPES: dict[str, SegmentType] = {
    "theorem": SegmentType.THEOREM,
    "lemma": SegmentType.LEMMA,
    "definition": SegmentType.DEFINITION,
    "proposition": SegmentType.PROPOSITION,
    "axiom": SegmentType.AXIOM,
    "example": SegmentType.EXAMPLE,
    "proof": SegmentType.PROOF,
    "claim": SegmentType.CLAIM,
    "corollary": SegmentType.COROLLARY,
    "remark": SegmentType.REMARK,
    "conjecture": SegmentType.CONJECTURE,
    "notation": SegmentType.NOTATION,
}

_MATH_ENVS = ("equation", "equation*", "align", "align*")

# \newtheorem display names (second mandatory argument) that map to types.
_DISPLAY_TO_TYPE: dict[str, SegmentType] = {
    **{name: t for name, t in _ENV_TYPES.items() if t != SegmentType.PROOF},
    "теорема": SegmentType.THEOREM,
    "лемма": SegmentType.LEMMA,
    "определение": SegmentType.DEFINITION,
    "предложение": SegmentType.PROPOSITION,
    "аксиома": SegmentType.AXIOM,
    "пример": SegmentType.EXAMPLE,
    "утверждение": SegmentType.CLAIM,
    "следствие": SegmentType.COROLLARY,
    "замечание": SegmentType.REMARK,
    "гипотеза": SegmentType.CONJECTURE,
    "обозначение": SegmentType.NOTATION,
}


@dataclass
class _Block:
    """One environment occurrence in the source."""

    name: str
    type: SegmentType | None
    begin_start: int
    content_start: int
    content_end: int = -1
    end_end: int = -1
    opt_arg: tuple[int, int] | None = None
    children: list["_Block"] = field(default_factory=list)


@dataclass
class _MathRegion:
    start: int
    end: int
    content_start: int
    content_end: int
    env_block: _Block | None = None  # set for equation/align regions


def _mask_comments(source: str) -> str:
    """Blank out % comments so scanning and text extraction skip them."""
    out = list(source)
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c == "\\":
            i += 2
            continue
        if c == "%":
            j = source.find("\n", i)
            j = n if j == -1 else j
            for k in range(i, j):
                out[k] = " "
            i = j
            continue
        i += 1
    return "".join(out)


def _balanced_group(text: str, open_pos: int) -> tuple[str, int]:
    """Content of the {...} group opening at ``open_pos``; returns (content, end_pos_after)."""
    if open_pos >= len(text) or text[open_pos] != "{":
        raise StructureError(f"expected '{{' at offset {open_pos}")
    depth = 0
    for i in range(open_pos, len(text)):
        if text[i] == "\\":
            continue
        if text[i] == "{" and (i == 0 or text[i - 1] != "\\"):
            depth += 1
        elif text[i] == "}" and text[i - 1] != "\\":
            depth -= 1
            if depth == 0:
                return text[open_pos + 1 : i], i + 1
    raise StructureError(f"unbalanced braces starting at offset {open_pos}")


def _skip_ws(text: str, i: int) -> int:
    while i < len(text) and text[i].isspace():
        i += 1
    return i


_BEGIN_RE = re.compile(r"\\begin\s*\{([a-zA-Z]+\*?)\}")
_END_RE = re.compile(r"\\end\s*\{([a-zA-Z]+\*?)\}")
_COMMAND_RE = re.compile(r"\\[a-zA-Z]+")


def _scan_body(
    clean: str, body: tuple[int, int], env_types: dict[str, SegmentType]
) -> tuple[list[_Block], list[_MathRegion]]:
    """One pass over the body: environment tree plus math regions."""
    start, end = body
    root = _Block(name="", type=SegmentType.DOCUMENT, begin_start=start, content_start=start)
    stack = [root]
    regions: list[_MathRegion] = []
    i = start
    while i < end:
        c = clean[i]
        if c == "\\":
            if clean.startswith("\\\\", i):
                i += 2
                continue
            if clean.startswith("\\[", i):
                i = _consume_math(clean, i, end, "\\[", "\\]", regions)
                continue
            if clean.startswith("\\]", i):
                raise StructureError(f"stray \\] at offset {i}")
            begin = _BEGIN_RE.match(clean, i)
            if begin:
                name = begin.group(1)
                after = begin.end()
                if name in _MATH_ENVS:
                    i = _consume_math_env(clean, i, after, end, name, regions, stack[-1])
                    continue
                opt_arg = None
                j = _skip_ws(clean, after)
                if j < end and clean[j] == "[":
                    depth = 0
                    k = j
                    while k < end:
                        if clean[k] == "[":
                            depth += 1
                        elif clean[k] == "]":
                            depth -= 1
                            if depth == 0:
                                break
                        k += 1
                    if depth != 0:
                        raise StructureError(f"unclosed optional argument at offset {j}")
                    opt_arg = (j + 1, k)
                    after = k + 1
                block = _Block(
                    name=name,
                    type=env_types.get(name),
                    begin_start=i,
                    content_start=after,
                    opt_arg=opt_arg,
                )
                stack[-1].children.append(block)
                stack.append(block)
                i = after
                continue
            closer = _END_RE.match(clean, i)
            if closer:
                name = closer.group(1)
                if len(stack) == 1:
                    raise StructureError(f"\\end{{{name}}} without \\begin at offset {i}")
                if stack[-1].name != name:
                    raise StructureError(
                        f"\\end{{{name}}} at offset {i} closes \\begin{{{stack[-1].name}}}"
                    )
                block = stack.pop()
                block.content_end = i
                block.end_end = closer.end()
                i = closer.end()
                continue
            command = _COMMAND_RE.match(clean, i)
            i = command.end() if command else i + 2
            continue
        if c == "$":
            if clean.startswith("$$", i):
                i = _consume_math(clean, i, end, "$$", "$$", regions)
            else:
                i = _consume_math(clean, i, end, "$", "$", regions)
            continue
        i += 1
    if len(stack) > 1:
        raise StructureError(f"unclosed environment {stack[-1].name!r}")
    root.content_end = end
    root.end_end = end
    return root.children, regions


def _consume_math(
    clean: str, open_pos: int, end: int, opener: str, closer: str, regions: list[_MathRegion]
) -> int:
    i = open_pos + len(opener)
    while i < end:
        if clean[i] == "\\" and not clean.startswith(closer, i):
            i += 2
            continue
        if clean.startswith(closer, i):
            regions.append(
                _MathRegion(
                    start=open_pos,
                    end=i + len(closer),
                    content_start=open_pos + len(opener),
                    content_end=i,
                )
            )
            return i + len(closer)
        i += 1
    raise StructureError(f"unclosed math starting at offset {open_pos}")


def _consume_math_env(
    clean: str,
    begin_pos: int,
    content_start: int,
    end: int,
    name: str,
    regions: list[_MathRegion],
    parent: _Block,
) -> int:
    closer = f"\\end{{{name}}}"
    at = clean.find(closer, content_start, end)
    if at == -1:
        raise StructureError(f"unclosed environment {name!r} at offset {begin_pos}")
    block = _Block(
        name=name,
        type=SegmentType.EQUATION,
        begin_start=begin_pos,
        content_start=content_start,
        content_end=at,
        end_end=at + len(closer),
    )
    parent.children.append(block)
    regions.append(
        _MathRegion(
            start=begin_pos,
            end=at + len(closer),
            content_start=content_start,
            content_end=at,
            env_block=block,
        )
    )
    return at + len(closer)


def _flatten(blocks: list[_Block]) -> list[_Block]:
    """Drop unknown environments, lifting their children."""
    out: list[_Block] = []
    for block in blocks:
        block.children = _flatten(block.children)
        if block.type is None:
            out.extend(block.children)
        else:
            out.append(block)
    return out


_FORMAT_RE = re.compile(
    r"\\(?:textbf|textit|emph|text|mbox|textsc|texttt|textrm|underline|mathrm)\s*\{([^{}]*)\}"
)
_REF_RE = re.compile(r"\\(?:eqref|ref)\s*\{([^{}]*)\}")
_LABEL_RE = re.compile(r"\\label\s*\{([^{}]*)\}")


def _plain_text(raw: str) -> str:
    s = raw
    s = re.sub(r"\\(?:begin|end)\s*\{[a-zA-Z]+\*?\}", " ", s)
    s = _REF_RE.sub(lambda m: f"[{m.group(1)}]", s)
    s = re.sub(
        r"\\(?:label|cite|vspace|hspace|includegraphics|input|bibliographystyle|bibliography)"
        r"\s*(?:\[[^\]]*\])?\s*\{[^{}]*\}",
        " ",
        s,
    )
    s = re.sub(
        r"\\newtheorem\*?\s*\{[^{}]*\}\s*(?:\[[^\]]*\])?\s*\{[^{}]*\}\s*(?:\[[^\]]*\])?",
        " ",
        s,
    )
    s = re.sub(
        r"\\(?:title|author|keywords|date|thanks|documentclass|usepackage)"
        r"\s*(?:\[[^\]]*\])?\s*\{[^{}]*\}",
        " ",
        s,
    )
    s = re.sub(r"\\(?:section|subsection|subsubsection|paragraph)\*?\s*\{([^{}]*)\}", r" \1. ", s)
    for _ in range(4):  # formatting commands nest a little
        s, n = _FORMAT_RE.subn(r"\1", s)
        if not n:
            break
    s = re.sub(
        r"\\(?:maketitle|tableofcontents|noindent|par|bigskip|medskip|smallskip|newpage|clearpage|and|qed|item)\b",
        " ",
        s,
    )
    s = s.replace("\\\\", " ").replace("~", " ")
    s = re.sub(r"\\([%$&_#{}])", r"\1", s)
    s = re.sub(r"\\[a-zA-Z]+\s*", " ", s)
    s = s.replace("{", " ").replace("}", " ").replace("$", " ")
    return re.sub(r"\s+", " ", s).strip()


def _clean_math(src: str) -> str:
    s = _LABEL_RE.sub(" ", src)
    s = re.sub(r"\\(?:nonumber|notag)\b", " ", s)
    s = s.replace("&", " ")
    return re.sub(r"\s+", " ", s).strip()


def _decode(latex: bytes | str) -> str:
    if isinstance(latex, str):
        return latex
    try:
        return latex.decode("utf-8")
    except UnicodeDecodeError as err:
        raise EncodingError(f"source is not valid UTF-8: {err}") from err


def _find_body(clean: str) -> tuple[int, int]:
    begin = re.search(r"\\begin\s*\{document\}", clean)
    if not begin:
        return 0, len(clean)
    end = re.search(r"\\end\s*\{document\}", clean)
    if not end or end.start() < begin.end():
        raise StructureError("\\begin{document} without matching \\end{document}")
    return begin.end(), end.start()


def _alias_types(clean: str) -> dict[str, SegmentType]:
    env_types = dict(_ENV_TYPES)
    for m in re.finditer(
        r"\\newtheorem\*?\s*\{([a-zA-Z]+)\}\s*(?:\[[^\]]*\])?\s*\{([^{}]*)\}", clean
    ):
        alias, display = m.group(1), m.group(2).strip().casefold()
        if display in _DISPLAY_TO_TYPE:
            env_types.setdefault(alias, _DISPLAY_TO_TYPE[display])
    return env_types


def _detect_language(sample: str) -> str:
    cyrillic = sum(1 for ch in sample if "\u0400" <= ch <= "\u04ff")
    latin = sum(1 for ch in sample if ch.isascii() and ch.isalpha())
    return "ru" if cyrillic > latin else "en"


def _command_arg(clean: str, command: str) -> str | None:
    m = re.search(rf"\\{command}\s*(?:\[[^\]]*\])?\s*(?=\{{)", clean)
    if not m:
        return None
    content, _ = _balanced_group(clean, m.end())
    return content


def extract_metadata(latex: bytes | str, source_path: str = "") -> Metadata:
    """Metadata from \\title, \\author (split on \\and), abstract, \\keywords.

    Raises MissingTitle when no \\title command is present, EncodingError
    on non-UTF-8 bytes.
    """
    source = _decode(latex)
    clean = _mask_comments(source)
    title_raw = _command_arg(clean, "title")
    if title_raw is None or not _plain_text(title_raw):
        raise MissingTitle("no \\title found")
    return _metadata_with_title(clean, _plain_text(title_raw), source_path)


def _metadata_with_title(clean: str, title: str, source_path: str) -> Metadata:
    authors: tuple[str, ...] = ()
    author_raw = _command_arg(clean, "author")
    if author_raw is not None:
        parts = re.split(r"\\and\b", author_raw)
        authors = tuple(p for p in (_plain_text(part) for part in parts) if p)

    abstract = None
    m = re.search(r"\\begin\s*\{abstract\}(.*?)\\end\s*\{abstract\}", clean, re.DOTALL)
    if m:
        abstract = _plain_text(m.group(1)) or None

    keywords: tuple[str, ...] = ()
    keywords_raw = _command_arg(clean, "keywords")
    if keywords_raw is not None:
        keywords = tuple(
            p for p in (_plain_text(part) for part in re.split(r"[,;]", keywords_raw)) if p
        )

    body = _find_body(clean)
    sample = title + " " + (abstract or "") + " " + clean[body[0] : body[0] + 2000]
    return Metadata(
        title=title,
        authors=authors,
        abstract=abstract,
        keywords=keywords,
        language=_detect_language(sample),
        source_path=source_path,
    )


_CUE_DEPENDS_RE = re.compile(
    r"by\s+(?:theorem|lemma|proposition|corollary|claim|axiom|definition)[\s~]*$",
    re.IGNORECASE,
)


def parse_document(latex: bytes | str, doc_id: str, source_path: str = "") -> MathDocument:
    """Parse one article into segments, relations, and formulas.

    Unlike extract_metadata, a missing \\title falls back to the document
    id so fragment sources stay ingestable.
    """
    source = _decode(latex)
    clean = _mask_comments(source)
    title_raw = _command_arg(clean, "title")
    title = _plain_text(title_raw) if title_raw is not None else ""
    metadata = _metadata_with_title(clean, title or doc_id, source_path)

    env_types = _alias_types(clean)
    body = _find_body(clean)
    top_blocks, regions = _scan_body(clean, body, env_types)
    top_blocks = _flatten(top_blocks)

    return _assemble(doc_id, metadata, clean, source, body, top_blocks, regions)


@dataclass
class _SegmentDraft:
    block: _Block | None  # None for narrative gap tiles
    type: SegmentType
    span: tuple[int, int]  # tile for top level, env range for nested
    own_ranges: list[tuple[int, int]]
    depth_key: tuple[int, int]
    id: str = ""
    title: str | None = None
    label: str | None = None
    parent: "_SegmentDraft | None" = None


def _assemble(
    doc_id: str,
    metadata: Metadata,
    clean: str,
    source: str,
    body: tuple[int, int],
    top_blocks: list[_Block],
    regions: list[_MathRegion],
) -> MathDocument:
    drafts: list[_SegmentDraft] = []
    root = _SegmentDraft(
        block=None,
        type=SegmentType.DOCUMENT,
        span=body,
        own_ranges=[],
        depth_key=(body[0], -1),
    )

    def add_block(block: _Block, parent: _SegmentDraft, span: tuple[int, int]) -> None:
        draft = _SegmentDraft(
            block=block,
            type=block.type or SegmentType.DOCUMENT_SEGMENT,
            span=span,
            own_ranges=_own_ranges(block),
            depth_key=(block.begin_start, 0),
            parent=parent,
        )
        drafts.append(draft)
        for child in block.children:
            add_block(child, draft, (child.begin_start, child.end_end))

    # Top level: tile the body. Whitespace-only gaps merge into a neighbor.
    cursor = body[0]
    pending_start = cursor
    last_block_draft: _SegmentDraft | None = None
    for block in top_blocks:
        gap = (pending_start, block.begin_start)
        gap_text = _gap_visible_text(clean, gap, regions)
        if gap_text:
            drafts.append(
                _SegmentDraft(
                    block=None,
                    type=SegmentType.DOCUMENT_SEGMENT,
                    span=gap,
                    own_ranges=[gap],
                    depth_key=(gap[0], 0),
                    parent=root,
                )
            )
            tile_start = block.begin_start
        else:
            tile_start = pending_start  # absorb the whitespace
        add_block(block, root, (tile_start, block.end_end))
        last_block_draft = drafts[-len(_block_family(block))]
        pending_start = block.end_end
    trailing = (pending_start, body[1])
    if _gap_visible_text(clean, trailing, regions):
        drafts.append(
            _SegmentDraft(
                block=None,
                type=SegmentType.DOCUMENT_SEGMENT,
                span=trailing,
                own_ranges=[trailing],
                depth_key=(trailing[0], 0),
                parent=root,
            )
        )
    elif last_block_draft is not None and trailing[0] < trailing[1]:
        last_block_draft.span = (last_block_draft.span[0], body[1])

    ordered = [root] + sorted(drafts, key=lambda d: d.depth_key)
    for n, draft in enumerate(ordered):
        draft.id = f"{doc_id}#s{n}"

    def owner_of(pos: int) -> _SegmentDraft:
        best = root
        for draft in ordered[1:]:
            if draft.block is None:
                lo, hi = draft.span
            else:
                lo, hi = draft.block.begin_start, draft.block.end_end
            if lo <= pos < hi and (best is root or _inside(draft, best)):
                best = draft
        return best

    # Formulas in document order.
    records_by_draft: dict[str, list[FormulaRecord]] = {d.id: [] for d in ordered}
    placeholders: dict[str, list[tuple[int, str]]] = {d.id: [] for d in ordered}
    counter = 0
    for region in sorted(regions, key=lambda r: r.start):
        if region.env_block is not None:
            holder = next(d for d in ordered if d.block is region.env_block)
        else:
            holder = owner_of(region.start)
        content = clean[region.content_start : region.content_end]
        rows = [r for r in (
            _clean_math(row) for row in re.split(r"\\\\", content)
        ) if r]
        if not rows:
            rows = [""]
        for row in rows:
            counter += 1
            fid = f"{doc_id}#f{counter}"
            try:
                ast = parse_tex_formula(row) if row else None
                unparsed = ast is None
            except ParseError:
                ast, unparsed = None, True
            records_by_draft[holder.id].append(
                FormulaRecord(id=fid, source=row, ast=ast, unparsed=unparsed)
            )
            placeholders[holder.id].append((region.start, f"⟨f{counter}⟩"))

    # Labels attach to the innermost enclosing segment.
    label_map: dict[str, str] = {}
    for m in _LABEL_RE.finditer(clean, body[0], body[1]):
        holder = owner_of(m.start())
        if holder.label is None:
            holder.label = m.group(1)
        label_map.setdefault(m.group(1), holder.id)

    for draft in ordered:
        if draft.block is not None and draft.block.opt_arg:
            draft.title = _plain_text(clean[draft.block.opt_arg[0] : draft.block.opt_arg[1]]) or None

    relations: list[SegmentRelation] = []
    for draft in ordered[1:]:
        parent = draft.parent or root
        relations.append(
            SegmentRelation(parent.id, SegmentRelationKind.HAS_SEGMENT, draft.id)
        )

    # proves: explicit target in the proof's bracket argument, else the
    # nearest preceding provable segment.
    by_id = {d.id: d for d in ordered}
    for draft in ordered:
        if draft.type != SegmentType.PROOF:
            continue
        target_id = None
        if draft.block is not None and draft.block.opt_arg:
            arg = clean[draft.block.opt_arg[0] : draft.block.opt_arg[1]]
            for ref in _REF_RE.finditer(arg):
                candidate = label_map.get(ref.group(1))
                if candidate and by_id[candidate].type in PROVABLE_TYPES:
                    target_id = candidate
                    break
        if target_id is None:
            preceding = [
                d
                for d in ordered
                if d.type in PROVABLE_TYPES and d.depth_key < draft.depth_key
            ]
            if preceding:
                target_id = preceding[-1].id
        if target_id is not None:
            relations.append(SegmentRelation(draft.id, SegmentRelationKind.PROVES, target_id))

    # References out of narrative text (proof bracket arguments excluded).
    opt_ranges = [
        d.block.opt_arg for d in ordered if d.block is not None and d.block.opt_arg
    ]
    for m in _REF_RE.finditer(clean, body[0], body[1]):
        if any(lo <= m.start() < hi for lo, hi in opt_ranges):
            continue
        holder = owner_of(m.start())
        target = label_map.get(m.group(1))
        if target is None or target == holder.id:
            continue
        window = clean[max(body[0], m.start() - 60) : m.start()].casefold()
        kinds = [SegmentRelationKind.REFERS_TO]
        if _CUE_DEPENDS_RE.search(window):
            kinds.append(SegmentRelationKind.DEPENDS_ON)
        elif "for example" in window or "например" in window:
            kinds.append(SegmentRelationKind.EXEMPLIFIES)
        elif "therefore" in window or "hence" in window:
            kinds.append(SegmentRelationKind.HAS_CONSEQUENCE)
        for kind in kinds:
            relations.append(SegmentRelation(holder.id, kind, target))

    seen: set[SegmentRelation] = set()
    unique_relations = []
    for rel in relations:
        if rel not in seen:
            seen.add(rel)
            unique_relations.append(rel)

    segments = []
    for draft in ordered:
        text = _segment_text(clean, draft, regions, placeholders[draft.id])
        segments.append(
            Segment(
                id=draft.id,
                type=draft.type,
                text=text,
                title=draft.title,
                label=draft.label,
                formulas=tuple(records_by_draft[draft.id]),
                span=(_byte_offset(source, draft.span[0]), _byte_offset(source, draft.span[1])),
            )
        )

    return MathDocument(
        id=doc_id,
        metadata=metadata,
        segments=tuple(segments),
        relations=tuple(unique_relations),
    )


def _block_family(block: _Block) -> list[_Block]:
    out = [block]
    for child in block.children:
        out.extend(_block_family(child))
    return out


def _inside(a: _SegmentDraft, b: _SegmentDraft) -> bool:
    """True when a's range nests inside b's range."""
    a_lo, a_hi = (a.block.begin_start, a.block.end_end) if a.block else a.span
    b_lo, b_hi = (b.block.begin_start, b.block.end_end) if b.block else b.span
    return b_lo <= a_lo and a_hi <= b_hi


def _own_ranges(block: _Block) -> list[tuple[int, int]]:
    ranges = []
    cursor = block.content_start
    for child in block.children:
        if child.begin_start > cursor:
            ranges.append((cursor, child.begin_start))
        cursor = child.end_end
    if block.content_end > cursor:
        ranges.append((cursor, block.content_end))
    return ranges


def _gap_visible_text(clean: str, gap: tuple[int, int], regions: list[_MathRegion]) -> bool:
    lo, hi = gap
    if lo >= hi:
        return False
    if any(lo <= r.start < hi for r in regions if r.env_block is None):
        return True
    return bool(_plain_text(clean[lo:hi]))


def _segment_text(
    clean: str,
    draft: _SegmentDraft,
    regions: list[_MathRegion],
    marks: list[tuple[int, str]],
) -> str:
    if draft.type == SegmentType.DOCUMENT:
        return ""
    if draft.block is not None and draft.block.type == SegmentType.EQUATION:
        return " ".join(text for _, text in marks)
    pieces: list[str] = []
    mark_list = sorted(marks)
    for lo, hi in draft.own_ranges:
        cursor = lo
        for region in sorted(regions, key=lambda r: r.start):
            if region.env_block is not None or region.start < lo or region.start >= hi:
                continue
            pieces.append(clean[cursor : region.start])
            pieces.extend(text for pos, text in mark_list if pos == region.start)
            cursor = region.end
        pieces.append(clean[cursor:hi])
    return _plain_text("".join(pieces))


def _byte_offset(source: str, char_offset: int) -> int:
    return len(source[:char_offset].encode("utf-8"))
