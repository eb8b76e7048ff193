"""Rendering of formula trees to Presentation MathML and back to TeX."""

from __future__ import annotations

from .nodes import (
    Apply,
    AstNode,
    Fixity,
    FormulaAst,
    Identifier,
    NumberLit,
    Operator,
    Relation,
    Sequence,
    Sub,
    Sup,
    Wildcard,
)

_BIG_OPERATORS = {"∑", "∫", "∏"}

# Precedence levels used only to decide display parentheses. Big operators
# sit between additive and multiplicative: their body is greedy, so they
# must be fenced whenever they appear inside a product.
_PREC_SEQUENCE = 0
_PREC_RELATION = 1
_PREC_ADDITIVE = 2
_PREC_BIGOP = 3
_PREC_MULTIPLICATIVE = 4
_PREC_PREFIX = 5
_PREC_ATOM = 6

_INFIX_PREC = {
    "+": _PREC_ADDITIVE,
    "-": _PREC_ADDITIVE,
    "−": _PREC_ADDITIVE,
    "*": _PREC_MULTIPLICATIVE,
    "·": _PREC_MULTIPLICATIVE,
    "×": _PREC_MULTIPLICATIVE,
}


def _precedence(node: AstNode) -> int:
    if isinstance(node, Relation):
        return _PREC_RELATION
    if isinstance(node, Sequence):
        return _PREC_SEQUENCE
    if isinstance(node, Operator):
        if node.symbol == "/":
            return _PREC_ATOM  # mfrac / \frac group visually on their own
        if node.symbol in _BIG_OPERATORS:
            return _PREC_BIGOP
        if node.fixity == Fixity.INFIX:
            return _INFIX_PREC.get(node.symbol, _PREC_MULTIPLICATIVE)
        if node.symbol == "-":
            return _PREC_ADDITIVE  # unary minus scopes like an additive term
        return _PREC_PREFIX
    return _PREC_ATOM


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _mathml(node: AstNode, parent_prec: int = 0) -> str:
    inner = _mathml_node(node)
    if _precedence(node) < parent_prec:
        return f"<mrow><mo>(</mo>{inner}<mo>)</mo></mrow>"
    return inner


def _mathml_node(node: AstNode) -> str:
    if isinstance(node, Identifier):
        return f"<mi>{_escape(node.name)}</mi>"
    if isinstance(node, NumberLit):
        return f"<mn>{_escape(node.lexeme)}</mn>"
    if isinstance(node, Wildcard):
        tag = node.tag if node.tag is not None else "_"
        return f"<mi>?{_escape(tag)}</mi>"
    if isinstance(node, Sub):
        base = _mathml(node.base, _PREC_ATOM)
        return f"<msub>{base}{_mathml(node.script)}</msub>"
    if isinstance(node, Sup):
        base = _mathml(node.base, _PREC_ATOM)
        return f"<msup>{base}{_mathml(node.script)}</msup>"
    if isinstance(node, Relation):
        left = _mathml(node.left, _PREC_RELATION)
        right = _mathml(node.right, _PREC_RELATION)
        return f"<mrow>{left}<mo>{_escape(node.symbol)}</mo>{right}</mrow>"
    if isinstance(node, Sequence):
        parts = [_mathml(item, _PREC_RELATION) for item in node.items]
        return f"<mrow>{'<mo>,</mo>'.join(parts)}</mrow>"
    if isinstance(node, Apply):
        func = _mathml(node.function, _PREC_ATOM)
        args = "<mo>,</mo>".join(_mathml(a) for a in node.arguments)
        return f"<mrow>{func}<mo>(</mo>{args}<mo>)</mo></mrow>"
    if isinstance(node, Operator):
        return _mathml_operator(node)
    raise TypeError(f"not a formula node: {node!r}")


def _mathml_operator(node: Operator) -> str:
    if node.symbol == "/" and len(node.operands) == 2:
        num, den = node.operands
        return f"<mfrac>{_mathml_node(num)}{_mathml_node(den)}</mfrac>"
    if node.symbol == "sqrt" and len(node.operands) == 1:
        return f"<msqrt>{_mathml_node(node.operands[0])}</msqrt>"
    if node.symbol in _BIG_OPERATORS:
        return _mathml_big_operator(node)
    if node.fixity == Fixity.INFIX:
        prec = _INFIX_PREC.get(node.symbol, _PREC_MULTIPLICATIVE)
        # Later operands need fencing at equal precedence too, or the
        # left-associative reading would regroup them.
        rendered = [
            _mathml(op, prec if i == 0 else prec + 1)
            for i, op in enumerate(node.operands)
        ]
        if node.symbol == "*":
            # Implicit product: invisible times keeps operands adjacent.
            joiner = "<mo>&#x2062;</mo>"
        else:
            joiner = f"<mo>{_escape(node.symbol)}</mo>"
        return f"<mrow>{joiner.join(rendered)}</mrow>"
    if node.fixity == Fixity.POSTFIX and len(node.operands) == 1:
        arg = _mathml(node.operands[0], _PREC_ATOM)
        return f"<mrow>{arg}<mo>{_escape(node.symbol)}</mo></mrow>"
    # Prefix: named functions and unary minus.
    if node.symbol == "-" and len(node.operands) == 1:
        arg = _mathml(node.operands[0], _PREC_MULTIPLICATIVE)
        return f"<mrow><mo>-</mo>{arg}</mrow>"
    if len(node.operands) == 1:
        arg = _mathml(node.operands[0], _PREC_PREFIX)
        if node.symbol.isalpha():
            return f"<mrow><mi>{_escape(node.symbol)}</mi><mo>&#x2061;</mo>{arg}</mrow>"
        return f"<mrow><mo>{_escape(node.symbol)}</mo>{arg}</mrow>"
    args = "<mo>,</mo>".join(_mathml(a) for a in node.operands)
    head = f"<mi>{_escape(node.symbol)}</mi>" if node.symbol.isalpha() else f"<mo>{_escape(node.symbol)}</mo>"
    return f"<mrow>{head}<mo>(</mo>{args}<mo>)</mo></mrow>"


def _mathml_big_operator(node: Operator) -> str:
    op = f"<mo>{_escape(node.symbol)}</mo>"
    if len(node.operands) == 1:
        return f"<mrow>{op}{_mathml(node.operands[0], _PREC_MULTIPLICATIVE)}</mrow>"
    lower, upper, body = node.operands
    has_lower = not (isinstance(lower, Sequence) and not lower.items)
    has_upper = not (isinstance(upper, Sequence) and not upper.items)
    if has_lower and has_upper:
        head = f"<munderover>{op}{_mathml_node(lower)}{_mathml_node(upper)}</munderover>"
    elif has_lower:
        head = f"<munder>{op}{_mathml_node(lower)}</munder>"
    else:
        head = f"<mover>{op}{_mathml_node(upper)}</mover>"
    return f"<mrow>{head}{_mathml(body, _PREC_MULTIPLICATIVE)}</mrow>"


def to_mathml(ast: FormulaAst | AstNode) -> str:
    """Presentation MathML for a formula tree, wrapped in a ``<math>`` element."""
    root = ast.root if isinstance(ast, FormulaAst) else ast
    return f"<math>{_mathml(root)}</math>"


_TEX_COMMANDS = {
    "≤": r"\leq",
    "≥": r"\geq",
    "≠": r"\neq",
    "·": r"\cdot",
    "×": r"\times",
    "∑": r"\sum",
    "∫": r"\int",
    "∏": r"\prod",
    "π": r"\pi",
    "α": r"\alpha",
    "β": r"\beta",
    "γ": r"\gamma",
    "δ": r"\delta",
    "ε": r"\varepsilon",
    "ϵ": r"\epsilon",
    "ζ": r"\zeta",
    "η": r"\eta",
    "θ": r"\theta",
    "ι": r"\iota",
    "κ": r"\kappa",
    "λ": r"\lambda",
    "μ": r"\mu",
    "ν": r"\nu",
    "ξ": r"\xi",
    "ρ": r"\rho",
    "σ": r"\sigma",
    "τ": r"\tau",
    "υ": r"\upsilon",
    "φ": r"\varphi",
    "ϕ": r"\phi",
    "χ": r"\chi",
    "ψ": r"\psi",
    "ω": r"\omega",
    "Γ": r"\Gamma",
    "Δ": r"\Delta",
    "Θ": r"\Theta",
    "Λ": r"\Lambda",
    "Ξ": r"\Xi",
    "Π": r"\Pi",
    "Σ": r"\Sigma",
    "Υ": r"\Upsilon",
    "Φ": r"\Phi",
    "Ψ": r"\Psi",
    "Ω": r"\Omega",
}


def _tex(node: AstNode, parent_prec: int = 0) -> str:
    inner = _tex_node(node)
    if _precedence(node) < parent_prec:
        return f"({inner})"
    return inner


def _tex_script(node: AstNode) -> str:
    text = _tex_node(node)
    if isinstance(node, (Identifier, NumberLit, Wildcard)) and len(text) == 1:
        return text
    return "{" + text + "}"


def _tex_node(node: AstNode) -> str:
    if isinstance(node, Identifier):
        return _TEX_COMMANDS.get(node.name, node.name)
    if isinstance(node, NumberLit):
        return node.lexeme
    if isinstance(node, Wildcard):
        return f"?{node.tag}" if node.tag is not None else "?_"
    if isinstance(node, Sub):
        return f"{_tex(node.base, _PREC_ATOM)}_{_tex_script(node.script)}"
    if isinstance(node, Sup):
        return f"{_tex(node.base, _PREC_ATOM)}^{_tex_script(node.script)}"
    if isinstance(node, Relation):
        sym = _TEX_COMMANDS.get(node.symbol, node.symbol)
        return f"{_tex(node.left, _PREC_RELATION)} {sym} {_tex(node.right, _PREC_RELATION)}"
    if isinstance(node, Sequence):
        return ", ".join(_tex(item, _PREC_RELATION) for item in node.items)
    if isinstance(node, Apply):
        args = ", ".join(_tex(a) for a in node.arguments)
        return f"{_tex(node.function, _PREC_ATOM)}({args})"
    if isinstance(node, Operator):
        return _tex_operator(node)
    raise TypeError(f"not a formula node: {node!r}")


def _tex_operator(node: Operator) -> str:
    if node.symbol == "/" and len(node.operands) == 2:
        num, den = node.operands
        return f"\\frac{{{_tex_node(num)}}}{{{_tex_node(den)}}}"
    if node.symbol == "sqrt" and len(node.operands) == 1:
        return f"\\sqrt{{{_tex_node(node.operands[0])}}}"
    if node.symbol in _BIG_OPERATORS:
        return _tex_big_operator(node)
    if node.fixity == Fixity.INFIX:
        prec = _INFIX_PREC.get(node.symbol, _PREC_MULTIPLICATIVE)
        rendered = [
            _tex(op, prec if i == 0 else prec + 1)
            for i, op in enumerate(node.operands)
        ]
        if node.symbol == "*":
            return " ".join(rendered)
        sym = _TEX_COMMANDS.get(node.symbol, node.symbol)
        return f" {sym} ".join(rendered)
    if node.fixity == Fixity.POSTFIX and len(node.operands) == 1:
        return f"{_tex(node.operands[0], _PREC_ATOM)}{node.symbol}"
    if node.symbol == "-" and len(node.operands) == 1:
        return f"-{_tex(node.operands[0], _PREC_MULTIPLICATIVE)}"
    if len(node.operands) == 1:
        head = "\\" + node.symbol if node.symbol.isalpha() and len(node.symbol) > 1 else node.symbol
        arg = node.operands[0]
        text = _tex_node(arg)
        # A leading paren would reparse as an argument-list call.
        if isinstance(arg, (Identifier, NumberLit, Sub, Sup)) and not text.startswith("("):
            return f"{head} {text}"
        return f"{head}({text})"
    head = "\\" + node.symbol if node.symbol.isalpha() and len(node.symbol) > 1 else node.symbol
    args = ", ".join(_tex(a) for a in node.operands)
    return f"{head}({args})"


def _tex_big_operator(node: Operator) -> str:
    sym = _TEX_COMMANDS[node.symbol]
    if len(node.operands) == 1:
        return f"{sym} {_tex(node.operands[0], _PREC_MULTIPLICATIVE)}"
    lower, upper, body = node.operands
    text = sym
    if not (isinstance(lower, Sequence) and not lower.items):
        text += f"_{{{_tex_node(lower)}}}"
    if not (isinstance(upper, Sequence) and not upper.items):
        text += f"^{{{_tex_node(upper)}}}"
    return f"{text} {_tex(body, _PREC_MULTIPLICATIVE)}"


def to_tex(ast: FormulaAst | AstNode) -> str:
    """Best-effort TeX source for a formula tree; parses back to an equal tree."""
    root = ast.root if isinstance(ast, FormulaAst) else ast
    return _tex(root)
