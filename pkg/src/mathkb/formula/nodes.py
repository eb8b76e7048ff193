"""Tree representation of mathematical expressions.

All nodes are immutable; operand collections are stored as tuples so that
structural equality and hashing come for free. A node position inside a
tree is addressed by a path: the tuple of child indices from the root.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Union


class Fixity(str, Enum):
    PREFIX = "prefix"
    INFIX = "infix"
    POSTFIX = "postfix"


@dataclass(frozen=True)
class Identifier:
    """A variable symbol. Greek command names are stored as Unicode chars."""

    name: str


@dataclass(frozen=True)
class NumberLit:
    """A numeric literal, kept as its decimal lexeme."""

    lexeme: str


@dataclass(frozen=True)
class Operator:
    """A fixed named operation applied to one or more operands.

    Covers infix arithmetic (``+ - * /``), prefix minus, ``sqrt``, named
    functions (``sin``, ``log``, ...) and big operators (``∑ ∫ ∏``). A big
    operator has either a single operand (the body) or exactly three
    (lower bound, upper bound, body) where an absent bound is an empty
    Sequence.
    """

    symbol: str
    operands: tuple["AstNode", ...]
    fixity: Fixity = Fixity.INFIX

    def __post_init__(self) -> None:
        if not isinstance(self.operands, tuple):
            object.__setattr__(self, "operands", tuple(self.operands))
        if len(self.operands) < 1:
            raise ValueError(f"operator {self.symbol!r} needs at least one operand")
        if not isinstance(self.fixity, Fixity):
            object.__setattr__(self, "fixity", Fixity(self.fixity))


@dataclass(frozen=True)
class Apply:
    """Application of a computed function, e.g. f(x) for a variable f.

    The TeX grammar never produces Apply (juxtaposition with a known
    function name becomes an Operator); it exists for programmatically
    built expressions.
    """

    function: "AstNode"
    arguments: tuple["AstNode", ...]

    def __post_init__(self) -> None:
        if not isinstance(self.arguments, tuple):
            object.__setattr__(self, "arguments", tuple(self.arguments))
        if len(self.arguments) < 1:
            raise ValueError("apply needs at least one argument")


@dataclass(frozen=True)
class Relation:
    """A binary relation such as = < > ≤ ≥ ≠. Arity is exactly two."""

    symbol: str
    left: "AstNode"
    right: "AstNode"


@dataclass(frozen=True)
class Sequence:
    """An ordered, possibly empty, grouping of expressions."""

    items: tuple["AstNode", ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.items, tuple):
            object.__setattr__(self, "items", tuple(self.items))


@dataclass(frozen=True)
class Sub:
    base: "AstNode"
    script: "AstNode"


@dataclass(frozen=True)
class Sup:
    base: "AstNode"
    script: "AstNode"


@dataclass(frozen=True)
class Wildcard:
    """Pattern-only leaf. ``tag`` is None for the anonymous wildcard ``?_``,
    which matches anything without constraining other occurrences."""

    tag: str | None = None


AstNode = Union[Identifier, NumberLit, Operator, Apply, Relation, Sequence, Sub, Sup]
PatternNode = Union[AstNode, Wildcard]
Path = tuple[int, ...]


@dataclass(frozen=True)
class FormulaAst:
    """A parsed formula: the expression tree plus its original TeX source."""

    root: AstNode
    source: str = ""


def children(node: PatternNode) -> tuple[PatternNode, ...]:
    """Ordered child nodes; the order defines paths and left-to-right walks."""
    if isinstance(node, (Identifier, NumberLit, Wildcard)):
        return ()
    if isinstance(node, Operator):
        return node.operands
    if isinstance(node, Apply):
        return (node.function, *node.arguments)
    if isinstance(node, Relation):
        return (node.left, node.right)
    if isinstance(node, Sequence):
        return node.items
    if isinstance(node, (Sub, Sup)):
        return (node.base, node.script)
    raise TypeError(f"not an expression node: {node!r}")


def walk(node: PatternNode, path: Path = ()) -> Iterator[tuple[Path, PatternNode]]:
    """Pre-order traversal yielding (path, node) pairs."""
    yield path, node
    for i, child in enumerate(children(node)):
        yield from walk(child, path + (i,))


def subterms(ast: FormulaAst | AstNode) -> list[tuple[Path, AstNode]]:
    """All subtrees of a formula in pre-order, each with its path."""
    root = ast.root if isinstance(ast, FormulaAst) else ast
    return list(walk(root))


def node_at(node: PatternNode, path: Path) -> PatternNode:
    """Resolve a path produced by walk/subterms back to its node."""
    for i in path:
        node = children(node)[i]
    return node


def identifier_names(node: PatternNode) -> list[str]:
    """Distinct identifier names in first pre-order (left-to-right) occurrence order."""
    seen: dict[str, None] = {}
    for _, sub in walk(node):
        if isinstance(sub, Identifier) and sub.name not in seen:
            seen[sub.name] = None
    return list(seen)


def rename_identifiers(node: PatternNode, mapping: dict[str, str]) -> PatternNode:
    """Rebuild a tree with identifier names replaced per ``mapping``.

    Names absent from the mapping are kept; everything else is preserved.
    """
    if isinstance(node, Identifier):
        return Identifier(mapping.get(node.name, node.name))
    if isinstance(node, (NumberLit, Wildcard)):
        return node
    if isinstance(node, Operator):
        return Operator(
            node.symbol,
            tuple(rename_identifiers(o, mapping) for o in node.operands),
            node.fixity,
        )
    if isinstance(node, Apply):
        return Apply(
            rename_identifiers(node.function, mapping),
            tuple(rename_identifiers(a, mapping) for a in node.arguments),
        )
    if isinstance(node, Relation):
        return Relation(
            node.symbol,
            rename_identifiers(node.left, mapping),
            rename_identifiers(node.right, mapping),
        )
    if isinstance(node, Sequence):
        return Sequence(tuple(rename_identifiers(i, mapping) for i in node.items))
    if isinstance(node, Sub):
        return Sub(rename_identifiers(node.base, mapping), rename_identifiers(node.script, mapping))
    if isinstance(node, Sup):
        return Sup(rename_identifiers(node.base, mapping), rename_identifiers(node.script, mapping))
    raise TypeError(f"not an expression node: {node!r}")
