"""TeX math parser for a fixed grammar subset.

Supported input: identifiers (Latin letters, Greek commands or Greek
Unicode), decimal numbers, + - * / ^ _, the relations = < > \\leq \\geq
\\neq, \\frac, \\sqrt, parentheses and braces, known function names
applied by juxtaposition (\\sin x), and \\sum \\int \\prod with optional
sub/sup bounds. Comma-separated lists parse to a Sequence.

Precedence, tightest first: scripts (^ _), implicit multiplication by
juxtaposition, explicit * and /, + and binary -, relations. All
multiplication spellings (juxtaposition, *, \\cdot, \\times) collapse to
the single product operator "*"; \\frac{a}{b} and a/b both become the
"/" operator, so notational variants share one structure.

Pattern syntax is the same grammar plus ?tag wildcards (?_ anonymous).
"""

from __future__ import annotations

from dataclasses import dataclass

from .nodes import (
    AstNode,
    Fixity,
    FormulaAst,
    Identifier,
    NumberLit,
    Operator,
    PatternNode,
    Relation,
    Sequence,
    Sub,
    Sup,
    Wildcard,
)


class ParseError(ValueError):
    """Raised on input outside the supported grammar."""

    def __init__(self, position: int, expected: str):
        self.position = position
        self.expected = expected
        super().__init__(f"at offset {position}: expected {expected}")


@dataclass(frozen=True)
class FormulaPattern:
    """A formula tree whose leaves may include wildcards."""

    root: PatternNode
    source: str = ""


GREEK = {
    "alpha": "α", "beta": "β", "gamma": "γ", "delta": "δ", "epsilon": "ϵ",
    "varepsilon": "ε", "zeta": "ζ", "eta": "η", "theta": "θ", "vartheta": "ϑ",
    "iota": "ι", "kappa": "κ", "lambda": "λ", "mu": "μ", "nu": "ν", "xi": "ξ",
    "pi": "π", "varpi": "ϖ", "rho": "ρ", "varrho": "ϱ", "sigma": "σ",
    "varsigma": "ς", "tau": "τ", "upsilon": "υ", "phi": "ϕ", "varphi": "φ",
    "chi": "χ", "psi": "ψ", "omega": "ω",
    "Gamma": "Γ", "Delta": "Δ", "Theta": "Θ", "Lambda": "Λ", "Xi": "Ξ",
    "Pi": "Π", "Sigma": "Σ", "Upsilon": "Υ", "Phi": "Φ", "Psi": "Ψ",
    "Omega": "Ω",
}
GREEK_CHARS = frozenset(GREEK.values())

KNOWN_FUNCTIONS = frozenset(
    "sin cos tan cot sec csc sinh cosh tanh coth arcsin arccos arctan "
    "exp log ln lg min max gcd det dim deg arg lim inf sup".split()
)

RELATION_COMMANDS = {"leq": "≤", "le": "≤", "geq": "≥", "ge": "≥", "neq": "≠", "ne": "≠"}
BIGOP_COMMANDS = {"sum": "∑", "int": "∫", "prod": "∏"}
MUL_COMMANDS = {"cdot", "times"}
SPACING_COMMANDS = {",", ";", "!", " ", "quad", "qquad"}

_RELATION_CHARS = "=<>≤≥≠"


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT NUMBER FUNC MUL DIV PLUS MINUS CARET UNDER REL LPAREN RPAREN LBRACE RBRACE COMMA FRAC SQRT BIGOP WILD END
    value: str
    pos: int


def _tokenize(text: str, allow_wildcards: bool) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    single = {
        "+": "PLUS", "-": "MINUS", "−": "MINUS", "*": "MUL", "/": "DIV",
        "^": "CARET", "_": "UNDER", "(": "LPAREN", ")": "RPAREN",
        "{": "LBRACE", "}": "RBRACE", ",": "COMMA",
        "·": "MUL", "×": "MUL",
    }
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in single:
            tokens.append(_Token(single[c], "*" if single[c] == "MUL" else c, i))
            i += 1
            continue
        if c in _RELATION_CHARS:
            tokens.append(_Token("REL", c, i))
            i += 1
            continue
        if c.isdigit():
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            tokens.append(_Token("NUMBER", text[i:j], i))
            i = j
            continue
        if c == "?" and allow_wildcards:
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            if j == i + 1:
                raise ParseError(i, "wildcard tag after '?'")
            tokens.append(_Token("WILD", text[i + 1 : j], i))
            i = j
            continue
        if c == "\\":
            j = i + 1
            while j < n and text[j].isalpha():
                j += 1
            if j == i + 1 and j < n:
                name = text[j]  # control symbol such as \, or \!
                j += 1
            else:
                name = text[i + 1 : j]
            if not name:
                raise ParseError(i, "command name after backslash")
            tokens.extend(_command_tokens(name, i))
            i = j
            continue
        if c.isalpha() and c.isascii():
            j = i + 1
            while j < n and text[j].isalpha() and text[j].isascii():
                j += 1
            run = text[i:j]
            if run in KNOWN_FUNCTIONS:
                tokens.append(_Token("FUNC", run, i))
            else:
                tokens.extend(_Token("IDENT", ch, i + k) for k, ch in enumerate(run))
            i = j
            continue
        if c in GREEK_CHARS:
            tokens.append(_Token("IDENT", c, i))
            i += 1
            continue
        if c in "∑∫∏":
            tokens.append(_Token("BIGOP", c, i))
            i += 1
            continue
        raise ParseError(i, "a supported character")
    tokens.append(_Token("END", "", n))
    return tokens


def _command_tokens(name: str, pos: int) -> list[_Token]:
    if name in GREEK:
        return [_Token("IDENT", GREEK[name], pos)]
    if name in KNOWN_FUNCTIONS:
        return [_Token("FUNC", name, pos)]
    if name in RELATION_COMMANDS:
        return [_Token("REL", RELATION_COMMANDS[name], pos)]
    if name in BIGOP_COMMANDS:
        return [_Token("BIGOP", BIGOP_COMMANDS[name], pos)]
    if name in MUL_COMMANDS:
        return [_Token("MUL", "*", pos)]
    if name in SPACING_COMMANDS:
        return []
    if name == "frac":
        return [_Token("FRAC", name, pos)]
    if name == "sqrt":
        return [_Token("SQRT", name, pos)]
    raise ParseError(pos, "known command")


# Token kinds that can begin an atom, hence continue an implicit product.
_ATOM_START = frozenset(
    {"IDENT", "NUMBER", "FUNC", "LPAREN", "LBRACE", "FRAC", "SQRT", "BIGOP", "WILD"}
)


class _Parser:
    def __init__(self, text: str, allow_wildcards: bool = False):
        self.text = text
        self.tokens = _tokenize(text, allow_wildcards)
        self.k = 0

    def peek(self) -> _Token:
        return self.tokens[self.k]

    def take(self) -> _Token:
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect(self, kind: str, expected: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(tok.pos, expected)
        return self.take()

    def parse(self) -> PatternNode:
        if self.peek().kind == "END":
            raise ParseError(0, "a non-empty formula")
        node = self.expr_list()
        tok = self.peek()
        if tok.kind != "END":
            raise ParseError(tok.pos, "end of formula")
        return node

    def expr_list(self) -> PatternNode:
        items = [self.relational()]
        while self.peek().kind == "COMMA":
            self.take()
            items.append(self.relational())
        return items[0] if len(items) == 1 else Sequence(tuple(items))

    def relational(self) -> PatternNode:
        left = self.additive()
        if self.peek().kind == "REL":
            tok = self.take()
            right = self.additive()
            if self.peek().kind == "REL":
                raise ParseError(self.peek().pos, "no further relation (relations do not chain)")
            return Relation(tok.value, left, right)
        return left

    def additive(self) -> PatternNode:
        node = self.signed_term()
        while self.peek().kind in ("PLUS", "MINUS"):
            tok = self.take()
            rhs = self.signed_term()
            node = Operator("+" if tok.kind == "PLUS" else "-", (node, rhs), Fixity.INFIX)
        return node

    def signed_term(self) -> PatternNode:
        if self.peek().kind == "MINUS":
            self.take()
            return Operator("-", (self.multiplicative(),), Fixity.PREFIX)
        return self.multiplicative()

    def multiplicative(self) -> PatternNode:
        node = self.juxtaposition()
        while self.peek().kind in ("MUL", "DIV"):
            tok = self.take()
            rhs = self.juxtaposition()
            node = Operator("*" if tok.kind == "MUL" else "/", (node, rhs), Fixity.INFIX)
        return node

    def juxtaposition(self) -> PatternNode:
        # Implicit multiplication binds tighter than explicit * and /.
        node = self.scripted()
        while self.peek().kind in _ATOM_START:
            rhs = self.scripted()
            node = Operator("*", (node, rhs), Fixity.INFIX)
        return node

    def scripted(self) -> PatternNode:
        if self.peek().kind == "BIGOP":
            return self.big_operator()
        node = self.atom()
        while self.peek().kind in ("CARET", "UNDER"):
            tok = self.take()
            script = self.script_arg()
            node = Sup(node, script) if tok.kind == "CARET" else Sub(node, script)
        return node

    def script_arg(self) -> PatternNode:
        # A script takes a single token or a braced group, as in TeX.
        tok = self.peek()
        if tok.kind == "IDENT":
            return Identifier(self.take().value)
        if tok.kind == "NUMBER":
            return NumberLit(self.take().value)
        if tok.kind == "WILD":
            return self.wildcard(self.take())
        if tok.kind in ("LBRACE", "FRAC", "SQRT"):
            return self.atom()
        raise ParseError(tok.pos, "script argument (token or braced group)")

    def big_operator(self) -> PatternNode:
        op = self.take()
        lower: PatternNode | None = None
        upper: PatternNode | None = None
        while self.peek().kind in ("UNDER", "CARET"):
            tok = self.take()
            if tok.kind == "UNDER":
                if lower is not None:
                    raise ParseError(tok.pos, "at most one lower bound")
                lower = self.script_arg()
            else:
                if upper is not None:
                    raise ParseError(tok.pos, "at most one upper bound")
                upper = self.script_arg()
        body = self.bigop_body()
        if lower is None and upper is None:
            return Operator(op.value, (body,), Fixity.PREFIX)
        return Operator(
            op.value,
            (lower if lower is not None else Sequence(), upper if upper is not None else Sequence(), body),
            Fixity.PREFIX,
        )

    def bigop_body(self) -> PatternNode:
        # The body spans products but not sums: ∑ x_i y_i + 1 is (∑ x_i·y_i) + 1.
        tok = self.peek()
        if tok.kind not in _ATOM_START and tok.kind != "BIGOP":
            raise ParseError(tok.pos, "operand for big operator")
        return self.multiplicative()

    def atom(self) -> PatternNode:
        tok = self.take()
        if tok.kind == "IDENT":
            return Identifier(tok.value)
        if tok.kind == "NUMBER":
            return NumberLit(tok.value)
        if tok.kind == "WILD":
            return self.wildcard(tok)
        if tok.kind == "FUNC":
            return self.function_application(tok)
        if tok.kind == "LPAREN":
            inner = self.expr_list()
            close = self.peek()
            if close.kind != "RPAREN":
                raise ParseError(tok.pos, "closing parenthesis")
            self.take()
            return inner
        if tok.kind == "LBRACE":
            inner = self.expr_list()
            close = self.peek()
            if close.kind != "RBRACE":
                raise ParseError(tok.pos, "closing brace")
            self.take()
            return inner
        if tok.kind == "FRAC":
            num = self.braced_group()
            den = self.braced_group()
            return Operator("/", (num, den), Fixity.INFIX)
        if tok.kind == "SQRT":
            return Operator("sqrt", (self.script_arg(),), Fixity.PREFIX)
        if tok.kind == "BIGOP":
            self.k -= 1
            return self.big_operator()
        raise ParseError(tok.pos, "an operand")

    def braced_group(self) -> PatternNode:
        brace = self.peek()
        if brace.kind != "LBRACE":
            raise ParseError(brace.pos, "braced argument")
        self.take()
        inner = self.expr_list()
        if self.peek().kind != "RBRACE":
            raise ParseError(brace.pos, "closing brace")
        self.take()
        return inner

    def function_application(self, tok: _Token) -> PatternNode:
        # \max(a, b) applies to the whole list; \sin x takes one tight atom.
        if self.peek().kind == "LPAREN":
            open_tok = self.take()
            args = [self.relational()]
            while self.peek().kind == "COMMA":
                self.take()
                args.append(self.relational())
            if self.peek().kind != "RPAREN":
                raise ParseError(open_tok.pos, "closing parenthesis")
            self.take()
            return Operator(tok.value, tuple(args), Fixity.PREFIX)
        nxt = self.peek()
        if nxt.kind not in _ATOM_START:
            raise ParseError(nxt.pos, f"argument for function {tok.value}")
        return Operator(tok.value, (self.scripted(),), Fixity.PREFIX)

    def wildcard(self, tok: _Token) -> Wildcard:
        return Wildcard(None if tok.value == "_" else tok.value)


def parse_tex_formula(tex: str) -> FormulaAst:
    """Parse a math-mode TeX fragment into a formula tree.

    Raises ParseError on empty input, unbalanced groups, unknown commands
    or characters outside the grammar.
    """
    root = _Parser(tex, allow_wildcards=False).parse()
    return FormulaAst(root=root, source=tex)


def parse_pattern(tex: str) -> FormulaPattern:
    """Parse a query pattern: the formula grammar plus ?tag wildcards."""
    root = _Parser(tex, allow_wildcards=True).parse()
    return FormulaPattern(root=root, source=tex)
