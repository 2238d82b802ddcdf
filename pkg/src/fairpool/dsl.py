"""Text format for probabilistic causal models (``.scm`` files).

Grammar::

    model    := 'model' STRING '{' decl* '}'
    decl     := 'exogenous' ID '~' NAME '(' [param (',' param)*] ')'
              | 'endogenous' ID '=' expr
              | 'predictor' ID '=' expr
    param    := ID '=' (NUMBER | '[' NUMBER (',' NUMBER)* ']')
    expr     := 'if' expr 'then' expr 'else' expr      # condition must be a comparison
              | compare
    compare  := sum [('=' | '!=' | '<' | '<=' | '>' | '>=') sum]
    sum      := product (('+' | '-') product)*
    product  := unary (('*' | '/') unary)*
    unary    := '-' unary | atom
    atom     := NUMBER | ID | '(' expr ')'

``#`` starts a comment running to the end of the line. ``≠ ≤ ≥ × ÷`` are
accepted as spellings of ``!= <= >= * /``.
"""

from __future__ import annotations

import bisect
import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterator

from .distributions import Distribution, make_distribution
from .errors import DuplicateDeclaration, ModelError, ModelSyntaxError, UndeclaredVariable
from .expr import (COMPARISON_OPS, PRECEDENCE, Binary, Comparison, Constant, Expr,
                   IfThenElse, VarRef)
from .scm import KEYWORDS, ProbabilisticCausalModel

MAX_NESTING = 200

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n\f\v]+|\#[^\n]*)
  | (?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|!=|[=<>+\-*/(){}\[\],~≠≤≥×÷])
""", re.VERBOSE)

_SPELLINGS = {"≠": "!=", "≤": "<=", "≥": ">=", "×": "*", "÷": "/"}


@dataclass(frozen=True)
class Token:
    kind: str  # number, string, ident, keyword, op, eof
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def where(offset: int) -> tuple[int, int]:
        line = bisect.bisect_right(starts, offset)
        return line, offset - starts[line - 1] + 1

    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            line, col = where(pos)
            raise ModelSyntaxError(f"unexpected character {text[pos]!r}", line=line, column=col)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "ident" and value in KEYWORDS:
                kind = "keyword"
            elif kind == "op":
                value = _SPELLINGS.get(value, value)
            tokens.append(Token(kind, value, *where(pos)))
        pos = m.end()
    tokens.append(Token("eof", "", *where(len(text))))
    return tokens


@dataclass
class ModelDocument:
    """A parsed model together with its source and declaration locations."""

    source: str
    model: ProbabilisticCausalModel
    spans: dict[str, tuple[int, int]] = field(default_factory=dict)


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.depth = 0
        # (referenced name, line, column, declaring variable)
        self.refs: list[tuple[str, int, int, str]] = []
        self.current = ""

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, tok: Token | None = None) -> ModelSyntaxError:
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ModelSyntaxError(f"{message}, found {found}", line=tok.line, column=tok.column)

    def accept(self, text: str) -> Token | None:
        if self.tok.text == text and self.tok.kind in ("op", "keyword"):
            tok = self.tok
            self.pos += 1
            return tok
        return None

    def expect(self, text: str) -> Token:
        tok = self.accept(text)
        if tok is None:
            raise self.error(f"expected {text!r}")
        return tok

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            raise self.error(f"expected {what}")
        tok = self.tok
        self.pos += 1
        return tok

    # -- declarations
    def document(self, source: str) -> ModelDocument:
        self.expect("model")
        label_tok = self.expect_kind("string", "a quoted model label")
        try:
            label = json.loads(label_tok.text, strict=False)
        except ValueError:
            raise ModelSyntaxError("malformed string escape in model label",
                                   line=label_tok.line, column=label_tok.column) from None
        self.expect("{")
        exogenous: dict[str, Distribution] = {}
        endogenous: dict[str, Expr] = {}
        spans: dict[str, tuple[int, int]] = {}
        predictor = None
        while not self.accept("}"):
            kw = self.tok
            if kw.text not in ("exogenous", "endogenous", "predictor") or kw.kind != "keyword":
                raise self.error("expected a declaration or '}'")
            self.pos += 1
            name_tok = self.expect_kind("ident", "a variable name")
            name = name_tok.text
            if name in spans:
                line, col = spans[name]
                raise DuplicateDeclaration(
                    f"{name} already declared at {line}:{col}", variable=name,
                    line=name_tok.line, column=name_tok.column)
            spans[name] = (name_tok.line, name_tok.column)
            if kw.text == "exogenous":
                self.expect("~")
                exogenous[name] = self.distribution()
            else:
                if kw.text == "predictor":
                    if predictor is not None:
                        raise DuplicateDeclaration(
                            f"second predictor {name} (already {predictor})", variable=name,
                            line=kw.line, column=kw.column)
                    predictor = name
                self.expect("=")
                self.current = name
                endogenous[name] = self.expr()
        if self.tok.kind != "eof":
            raise self.error("expected end of input after the model")
        if predictor is None:
            raise ModelSyntaxError("model declares no predictor",
                                   line=label_tok.line, column=label_tok.column)
        declared = spans.keys()
        for ref, line, col, owner in self.refs:
            if ref not in declared:
                raise UndeclaredVariable(f"{owner} references undeclared variable {ref}",
                                         variable=ref, line=line, column=col)
        try:
            model = ProbabilisticCausalModel(label, exogenous, endogenous, predictor)
        except ModelError as exc:
            exc.located(*spans.get(exc.variable, (label_tok.line, label_tok.column)))
            raise
        return ModelDocument(source, model, spans)

    def distribution(self) -> Distribution:
        family_tok = self.expect_kind("ident", "a distribution family")
        self.expect("(")
        params: dict[str, object] = {}
        if not self.accept(")"):
            while True:
                key = self.expect_kind("ident", "a parameter name")
                if key.text in params:
                    raise DuplicateDeclaration(f"parameter {key.text} given twice",
                                               line=key.line, column=key.column)
                self.expect("=")
                if self.accept("["):
                    values = [self.number()]
                    while self.accept(","):
                        values.append(self.number())
                    self.expect("]")
                    params[key.text] = values
                else:
                    params[key.text] = self.number()
                if self.accept(")"):
                    break
                self.expect(",")
        try:
            return make_distribution(family_tok.text, params)
        except ModelError as exc:
            raise exc.located(family_tok.line, family_tok.column)

    def number(self) -> float:
        negative = self.accept("-") is not None
        value = float(self.expect_kind("number", "a number").text)
        return -value if negative else value

    # -- expressions
    def nested(self):
        self.depth += 1
        if self.depth > MAX_NESTING:
            raise self.error("expression nested too deeply")

    def expr(self) -> Expr:
        self.nested()
        try:
            if_tok = self.accept("if")
            if if_tok is None:
                return self.compare()
            cond = self.expr()
            if not isinstance(cond, Comparison):
                raise ModelSyntaxError("the condition of 'if' must be a comparison",
                                       line=if_tok.line, column=if_tok.column)
            self.expect("then")
            then = self.expr()
            self.expect("else")
            return IfThenElse(cond, then, self.expr())
        finally:
            self.depth -= 1

    def compare(self) -> Expr:
        lhs = self.sum()
        if self.tok.kind == "op" and self.tok.text in COMPARISON_OPS:
            op = self.tok.text
            self.pos += 1
            return Comparison(op, lhs, self.sum())
        return lhs

    def sum(self) -> Expr:
        lhs = self.product()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.pos += 1
            lhs = Binary(op, lhs, self.product())
        return lhs

    def product(self) -> Expr:
        lhs = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.tok.text
            self.pos += 1
            lhs = Binary(op, lhs, self.unary())
        return lhs

    def unary(self) -> Expr:
        self.nested()
        try:
            if self.accept("-"):
                operand = self.unary()
                if isinstance(operand, Constant):
                    return Constant(-operand.value)
                return Binary("-", Constant(0.0), operand)
            return self.atom()
        finally:
            self.depth -= 1

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.pos += 1
            value = float(tok.text)
            if not math.isfinite(value):
                raise ModelSyntaxError(f"number {tok.text} out of range",
                                       line=tok.line, column=tok.column)
            return Constant(value)
        if tok.kind == "ident":
            self.pos += 1
            self.refs.append((tok.text, tok.line, tok.column, self.current))
            return VarRef(tok.text)
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        raise self.error("expected an expression")


def parse_document(text: str | bytes) -> ModelDocument:
    """Parse one ``model`` block, keeping source and declaration spans.

    Every failure is a :class:`~fairpool.errors.ModelError` carrying a line
    and column, whatever the input bytes.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            prefix = bytes(text)[:exc.start]
            line = prefix.count(b"\n") + 1
            column = exc.start - (prefix.rfind(b"\n") + 1) + 1
            raise ModelSyntaxError("input is not valid UTF-8", line=line, column=column) from None
    return _Parser(text).document(text)


def parse_model(text: str | bytes) -> ProbabilisticCausalModel:
    return parse_document(text).model


# -- serialisation ----------------------------------------------------------

def format_number(value: float) -> str:
    value = float(value)
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def format_expr(expr: Expr) -> str:
    """Canonical text for an expression, with the fewest parentheses that
    re-parse to the same tree."""
    return _fmt(expr)


def _fmt(expr: Expr) -> str:
    if isinstance(expr, Constant):
        return format_number(expr.value)
    if isinstance(expr, VarRef):
        return expr.name
    if isinstance(expr, IfThenElse):
        return f"if {_fmt(expr.cond)} then {_fmt(expr.then)} else {_fmt(expr.orelse)}"
    prec = PRECEDENCE[expr.op]
    lhs = _operand(expr.lhs, prec, right=False)
    rhs = _operand(expr.rhs, prec, right=True)
    return f"{lhs} {expr.op} {rhs}"


def _operand(expr: Expr, prec: int, right: bool) -> str:
    text = _fmt(expr)
    if isinstance(expr, IfThenElse):
        return f"({text})"
    if isinstance(expr, (Binary, Comparison)):
        inner = PRECEDENCE[expr.op]
        # comparisons never chain; operators are left-associative
        if inner < prec or (inner == prec and (right or isinstance(expr, Comparison))):
            return f"({text})"
    return text


def format_distribution(dist: Distribution) -> str:
    parts = []
    for name, value in dist.params():
        if isinstance(value, list):
            value = "[" + ", ".join(format_number(v) for v in value) + "]"
        else:
            value = format_number(value)
        parts.append(f"{name}={value}")
    return f"{dist.family}({', '.join(parts)})"


def _lines(model: ProbabilisticCausalModel) -> Iterator[str]:
    yield f"model {json.dumps(model.label)} {{"
    for name, dist in model.exogenous.items():
        yield f"  exogenous {name} ~ {format_distribution(dist)}"
    for name, eq in model.endogenous.items():
        keyword = "predictor" if name == model.predictor else "endogenous"
        yield f"  {keyword} {name} = {format_expr(eq)}"
    yield "}"


def serialize_model(model: ProbabilisticCausalModel) -> str:
    """Canonical text: exogenous declarations first, then endogenous ones,
    each group in declaration order."""
    return "\n".join(_lines(model)) + "\n"
