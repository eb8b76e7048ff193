"""Formula handling: TeX parsing, canonical forms, pattern matching, rendering."""

from .canonical import CanonicalForm, alpha_equal, canonical_key, normalize, skeleton_key
from .nodes import (
    Apply,
    AstNode,
    Fixity,
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
    children,
    identifier_names,
    node_at,
    rename_identifiers,
    subterms,
    walk,
)
from .parser import FormulaPattern, ParseError, parse_pattern, parse_tex_formula
from .pattern import MatchResult, match_pattern
from .render import to_mathml, to_tex

__all__ = [
    "Apply",
    "AstNode",
    "CanonicalForm",
    "Fixity",
    "FormulaAst",
    "FormulaPattern",
    "Identifier",
    "MatchResult",
    "NumberLit",
    "Operator",
    "ParseError",
    "Path",
    "PatternNode",
    "Relation",
    "Sequence",
    "Sub",
    "Sup",
    "Wildcard",
    "alpha_equal",
    "canonical_key",
    "children",
    "identifier_names",
    "match_pattern",
    "node_at",
    "normalize",
    "parse_pattern",
    "parse_tex_formula",
    "rename_identifiers",
    "skeleton_key",
    "subterms",
    "to_mathml",
    "to_tex",
    "walk",
]
