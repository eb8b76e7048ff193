"""Structural pattern matching over formula trees.

A pattern is a formula whose leaves may be wildcards. Matching a pattern
against a formula tries every subterm as an anchor and succeeds when:

* each tagged wildcard binds a whole subtree, the same subtree at every
  occurrence of the tag; the anonymous wildcard ``?_`` binds nothing;
* pattern identifiers map to target identifiers under a single injective
  renaming per match, so distinct pattern variables stay distinct.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .nodes import (
    Apply,
    AstNode,
    FormulaAst,
    Identifier,
    NumberLit,
    Operator,
    Path,
    PatternNode,
    Relation,
    Sequence,
    Sub,
    Sup,
    Wildcard,
    walk,
)
from .parser import FormulaPattern


@dataclass
class MatchResult:
    """One successful anchor: wildcard bindings, identifier renaming, node path."""

    bindings: dict[str, AstNode] = field(default_factory=dict)
    renaming: dict[str, str] = field(default_factory=dict)
    location: Path = ()


class _MatchState:
    __slots__ = ("bindings", "renaming", "used_targets")

    def __init__(self) -> None:
        self.bindings: dict[str, AstNode] = {}
        self.renaming: dict[str, str] = {}
        self.used_targets: set[str] = set()


def _match(pattern: PatternNode, node: AstNode, state: _MatchState) -> bool:
    if isinstance(pattern, Wildcard):
        if pattern.tag is None:
            return True
        bound = state.bindings.get(pattern.tag)
        if bound is None:
            state.bindings[pattern.tag] = node
            return True
        return bound == node
    if isinstance(pattern, Identifier):
        if not isinstance(node, Identifier):
            return False
        mapped = state.renaming.get(pattern.name)
        if mapped is not None:
            return mapped == node.name
        if node.name in state.used_targets:
            return False  # injectivity: two pattern variables cannot collapse
        state.renaming[pattern.name] = node.name
        state.used_targets.add(node.name)
        return True
    if isinstance(pattern, NumberLit):
        return isinstance(node, NumberLit) and pattern.lexeme == node.lexeme
    if isinstance(pattern, Operator):
        return (
            isinstance(node, Operator)
            and pattern.symbol == node.symbol
            and pattern.fixity == node.fixity
            and len(pattern.operands) == len(node.operands)
            and all(_match(p, t, state) for p, t in zip(pattern.operands, node.operands))
        )
    if isinstance(pattern, Apply):
        return (
            isinstance(node, Apply)
            and len(pattern.arguments) == len(node.arguments)
            and _match(pattern.function, node.function, state)
            and all(_match(p, t, state) for p, t in zip(pattern.arguments, node.arguments))
        )
    if isinstance(pattern, Relation):
        return (
            isinstance(node, Relation)
            and pattern.symbol == node.symbol
            and _match(pattern.left, node.left, state)
            and _match(pattern.right, node.right, state)
        )
    if isinstance(pattern, Sequence):
        return (
            isinstance(node, Sequence)
            and len(pattern.items) == len(node.items)
            and all(_match(p, t, state) for p, t in zip(pattern.items, node.items))
        )
    if isinstance(pattern, Sub):
        return (
            isinstance(node, Sub)
            and _match(pattern.base, node.base, state)
            and _match(pattern.script, node.script, state)
        )
    if isinstance(pattern, Sup):
        return (
            isinstance(node, Sup)
            and _match(pattern.base, node.base, state)
            and _match(pattern.script, node.script, state)
        )
    raise TypeError(f"not a pattern node: {pattern!r}")


def match_pattern(pattern: FormulaPattern, ast: FormulaAst | AstNode) -> list[MatchResult]:
    """All anchors (root or subterm) of ``ast`` where the pattern matches.

    Results come in pre-order of anchor position; empty list when nothing
    matches.
    """
    root = ast.root if isinstance(ast, FormulaAst) else ast
    results: list[MatchResult] = []
    for path, node in walk(root):
        state = _MatchState()
        if _match(pattern.root, node, state):
            results.append(
                MatchResult(bindings=state.bindings, renaming=state.renaming, location=path)
            )
    return results
