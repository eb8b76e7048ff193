"""Renaming-invariant canonical form.

Two formulas that differ only by a consistent bijective renaming of their
identifiers get the same skeleton: identifiers are replaced by positional
names v1, v2, ... in order of first left-to-right (pre-order) occurrence.
The skeleton's deterministic string serialization is the index key for
syntactic formula search.
"""

from __future__ import annotations

from dataclasses import dataclass

from .nodes import (
    Apply,
    AstNode,
    FormulaAst,
    Identifier,
    NumberLit,
    Operator,
    Relation,
    Sequence,
    Sub,
    Sup,
    identifier_names,
    rename_identifiers,
)


@dataclass(frozen=True)
class CanonicalForm:
    """Positional skeleton plus the renaming that produced it."""

    skeleton: AstNode
    renaming: dict[str, str]

    def __post_init__(self) -> None:
        # Freeze against accidental mutation through the shared dict.
        object.__setattr__(self, "renaming", dict(self.renaming))


def normalize(ast: FormulaAst | AstNode) -> CanonicalForm:
    """Rename identifiers to v1..vK by first occurrence, keeping all structure."""
    root = ast.root if isinstance(ast, FormulaAst) else ast
    renaming = {name: f"v{k}" for k, name in enumerate(identifier_names(root), start=1)}
    return CanonicalForm(skeleton=rename_identifiers(root, renaming), renaming=renaming)


def alpha_equal(a: FormulaAst | AstNode, b: FormulaAst | AstNode) -> bool:
    """True iff some bijective identifier renaming carries one formula to the other."""
    return normalize(a).skeleton == normalize(b).skeleton


def skeleton_key(node: AstNode) -> str:
    """Deterministic compact serialization of a tree, usable as a dict key."""
    if isinstance(node, Identifier):
        return f"i:{node.name}"
    if isinstance(node, NumberLit):
        return f"n:{node.lexeme}"
    if isinstance(node, Operator):
        inner = " ".join(skeleton_key(o) for o in node.operands)
        return f"(o:{node.symbol}:{node.fixity.value} {inner})"
    if isinstance(node, Apply):
        inner = " ".join(skeleton_key(a) for a in node.arguments)
        return f"(a {skeleton_key(node.function)} {inner})"
    if isinstance(node, Relation):
        return f"(r:{node.symbol} {skeleton_key(node.left)} {skeleton_key(node.right)})"
    if isinstance(node, Sequence):
        return "(q" + "".join(" " + skeleton_key(i) for i in node.items) + ")"
    if isinstance(node, Sub):
        return f"(b {skeleton_key(node.base)} {skeleton_key(node.script)})"
    if isinstance(node, Sup):
        return f"(p {skeleton_key(node.base)} {skeleton_key(node.script)})"
    raise TypeError(f"not an expression node: {node!r}")


def canonical_key(node: FormulaAst | AstNode) -> str:
    """Index key shared by all formulas equal up to identifier renaming."""
    return skeleton_key(normalize(node).skeleton)
