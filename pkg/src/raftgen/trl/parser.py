"""Recursive-descent parser for ``.trl`` rule files.

A file is a sequence of blocks, each opened by ``rule <n>`` at the start of a
line and followed by ``if <condition> then <outcome>``.  Keywords are
case-insensitive.  A bad block produces diagnostics and is skipped; parsing
always continues with the next block.

Grammar (the fixed skeleton; only key vocabulary varies per domain)::

    file      ::= block*
    block     ::= "rule" INT "if" or_expr "then" outcome
    outcome   ::= and_expr                  (no "or" / "not")
    or_expr   ::= and_expr ("or" and_expr)*
    and_expr  ::= unary ("and" unary)*
    unary     ::= "not" unary | "(" or_expr ")" | atom
    atom      ::= KEY ["%" NUMBER] COMPARATOR value
    value     ::= STRING | IDENT | NUMBER | "-" NUMBER | TIME ["-" TIME]
                | "true" | "false" | "[" item ("," item)* "]"
"""

from __future__ import annotations

import re
from decimal import Decimal, InvalidOperation

from .lexer import Token, tokenize
from .model import (
    And,
    AtomicClause,
    Boolean,
    Comparator,
    Expr,
    Not,
    Number,
    Or,
    ParseDiagnostic,
    Rule,
    RuleSet,
    String,
    StringList,
    Time,
    TimeRange,
    TimeRangeSet,
    Value,
    atoms,
)

_COMPARATORS = {
    "=": Comparator.EQ,
    "==": Comparator.EQ,
    "!=": Comparator.NEQ,
    ">": Comparator.GT,
    ">=": Comparator.GE,
    "<": Comparator.LT,
    "<=": Comparator.LE,
}
_COMPARATOR_NAMES = ("=", "!=", ">", ">=", "<", "<=", "in")
_TIME_RE = re.compile(r"(\d{1,2}):(\d{2})(?::(\d{2}))?")
_ESCAPE_RE = re.compile(r"\\(.)")


class _Fail(Exception):
    def __init__(self, token: Token, message: str, expected: tuple[str, ...] = ()):
        super().__init__(message)
        self.token = token
        self.message = message
        self.expected = expected


def _time(text: str) -> Time:
    m = _TIME_RE.fullmatch(text)
    if not m:
        raise ValueError(f"not a time literal: {text}")
    return Time(int(m.group(1)), int(m.group(2)), int(m.group(3) or 0))


def _unquote(text: str) -> str:
    return _ESCAPE_RE.sub(r"\1", text[1:-1])


class _BlockParser:
    def __init__(self, tokens: list[Token], eof: Token):
        self.tokens = tokens
        self.pos = 0
        self.eof = eof
        self.warnings: list[tuple[Token, str]] = []

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else self.eof

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect_kw(self, word: str) -> Token:
        if not self.tok.is_kw(word):
            raise _Fail(self.tok, f"expected '{word}', found {self._describe(self.tok)}", (word,))
        return self.advance()

    @staticmethod
    def _describe(t: Token) -> str:
        return "end of rule" if t.kind == "eof" else repr(t.text)

    def parse(self) -> tuple[int, Expr, Expr, Token]:
        header = self.expect_kw("rule")
        num = self.advance()
        if num.kind != "number" or not num.text.isdigit() or int(num.text) < 1:
            raise _Fail(num, "rule id must be a positive integer", ("INTEGER",))
        self.expect_kw("if")
        if self.tok.is_kw("then") or self.tok.kind == "eof":
            raise _Fail(self.tok, "empty condition", ("KEY", "(", "not"))
        condition = self.or_expr()
        self.expect_kw_after_expr("then")
        then_tok = self.tokens[self.pos - 1]
        if self.tok.kind == "eof":
            raise _Fail(self.tok, "empty outcome after 'then'", ("KEY",))
        outcome = self.or_expr()
        if self.tok.kind != "eof":
            raise _Fail(
                self.tok,
                f"unexpected {self._describe(self.tok)} after outcome",
                ("and", "rule"),
            )
        if not _outcome_conjunctive(outcome):
            raise _Fail(
                then_tok,
                "outcome may only combine clauses with 'and' "
                "(CompoundOutcome ::= \"(\" ExpectedOutcome \")\" | ExpectedOutcome \"AND\" ExpectedOutcome)",
                ("and",),
            )
        return int(num.text), condition, outcome, header

    def expect_kw_after_expr(self, word: str) -> None:
        if not self.tok.is_kw(word):
            expected = ("and", "or", word)
            if self.tok.kind == "rparen":
                raise _Fail(self.tok, "unbalanced ')'", expected)
            raise _Fail(
                self.tok, f"expected '{word}', found {self._describe(self.tok)}", expected
            )
        self.advance()

    def or_expr(self) -> Expr:
        items = [self.and_expr()]
        while self.tok.is_kw("or"):
            self.advance()
            items.append(self.and_expr())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def and_expr(self) -> Expr:
        items = [self.unary()]
        while self.tok.is_kw("and"):
            self.advance()
            items.append(self.unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def unary(self) -> Expr:
        t = self.tok
        if t.is_kw("not"):
            self.advance()
            return Not(self.unary())
        if t.kind == "lparen":
            self.advance()
            inner = self.or_expr()
            if self.tok.kind != "rparen":
                raise _Fail(self.tok, "unbalanced '(': missing ')'", (")", "and", "or"))
            self.advance()
            return inner
        return self.atom()

    def atom(self) -> AtomicClause:
        key_tok = self.tok
        if key_tok.kind != "ident":
            raise _Fail(
                key_tok,
                f"expected a key, found {self._describe(key_tok)}",
                ("KEY", "(", "not"),
            )
        self.advance()
        if not key_tok.text[0].isupper():
            raise _Fail(key_tok, f"key {key_tok.text!r} must be UpperCamelCase", ("KEY",))
        modulus = None
        if self.tok.kind == "op" and self.tok.text == "%":
            self.advance()
            mod_tok = self.advance()
            modulus = self._decimal(mod_tok)
            if modulus is None or modulus <= 0:
                raise _Fail(mod_tok, "modulus must be a positive number", ("NUMBER",))
        cmp_tok = self.tok
        if cmp_tok.is_kw("in"):
            comparator = Comparator.IN
        elif cmp_tok.kind == "op" and cmp_tok.text in _COMPARATORS:
            comparator = _COMPARATORS[cmp_tok.text]
            if cmp_tok.text == "==":
                self.warnings.append((cmp_tok, "'==' accepted as '='"))
        else:
            raise _Fail(
                cmp_tok,
                f"malformed clause: missing comparator after key {key_tok.text!r}",
                _COMPARATOR_NAMES,
            )
        self.advance()
        value = self.value(comparator)
        if modulus is not None:
            if comparator not in (Comparator.EQ, Comparator.NEQ):
                raise _Fail(cmp_tok, "modulo clauses only support '=' and '!='", ("=", "!="))
            if not isinstance(value, Number):
                raise _Fail(cmp_tok, "modulo clauses compare against a number", ("NUMBER",))
        try:
            return AtomicClause(key_tok.text, comparator, value, modulus)
        except ValueError as exc:
            raise _Fail(cmp_tok, str(exc)) from None

    @staticmethod
    def _decimal(t: Token) -> Decimal | None:
        if t.kind != "number":
            return None
        try:
            return Decimal(t.text)
        except InvalidOperation:
            return None

    def value(self, comparator: Comparator) -> Value:
        t = self.tok
        if t.kind == "lbrack":
            if comparator is not Comparator.IN:
                raise _Fail(t, "list values require the 'in' comparator", ("VALUE",))
            return self.list_value()
        if comparator is Comparator.IN:
            if t.kind == "time" or (t.kind == "string" and _TIME_RE.fullmatch(_unquote(t.text))):
                start = self.scalar()
                return self.range_set([self.time_range(start, t)])
            raise _Fail(t, "'in' requires a bracketed list", ("[",))
        v = self.scalar()
        if isinstance(v, Time) and self.tok.kind == "dash":
            raise _Fail(self.tok, "time ranges require the 'in' comparator", ("in",))
        return v

    def scalar(self) -> Value:
        t = self.advance()
        if t.kind == "string":
            text = _unquote(t.text)
            if _TIME_RE.fullmatch(text):
                return self._make_time(t, text)
            return String(text)
        if t.kind == "ident":
            return String(t.text)
        if t.kind == "number":
            d = self._decimal(t)
            if d is None:
                raise _Fail(t, f"malformed number {t.text!r}", ("NUMBER",))
            return Number(d)
        if t.kind == "dash" and self.tok.kind == "number":
            d = self._decimal(self.advance())
            if d is None:
                raise _Fail(t, "malformed number", ("NUMBER",))
            return Number(-d)
        if t.kind == "time":
            return self._make_time(t, t.text)
        if t.is_kw("true") or t.is_kw("false"):
            return Boolean(t.text.lower() == "true")
        if t.kind == "unterminated":
            raise _Fail(t, "unterminated string literal", ('"',))
        raise _Fail(t, f"malformed clause: expected a value, found {self._describe(t)}", ("VALUE",))

    @staticmethod
    def _make_time(t: Token, text: str) -> Time:
        try:
            return _time(text)
        except ValueError as exc:
            raise _Fail(t, str(exc), ("HH:MM",)) from None

    def time_range(self, start: Value, at: Token) -> TimeRange:
        if not isinstance(start, Time):
            raise _Fail(at, "expected a time", ("HH:MM",))
        if self.tok.kind != "dash":
            raise _Fail(self.tok, "expected '-' in time range", ("-",))
        self.advance()
        end_tok = self.tok
        end = self.scalar()
        if not isinstance(end, Time):
            raise _Fail(end_tok, "expected a time after '-'", ("HH:MM",))
        try:
            return TimeRange(start, end)
        except ValueError as exc:
            raise _Fail(at, str(exc)) from None

    def range_set(self, ranges: list[TimeRange]) -> TimeRangeSet:
        try:
            return TimeRangeSet(tuple(ranges))
        except ValueError as exc:
            raise _Fail(self.tok, str(exc)) from None

    def list_value(self) -> Value:
        open_tok = self.advance()
        items: list[Value] = []
        ranges: list[TimeRange] = []
        while True:
            t = self.tok
            if t.kind == "rbrack" and not items and not ranges:
                raise _Fail(t, "empty list", ("VALUE",))
            v = self.scalar()
            if isinstance(v, Time):
                ranges.append(self.time_range(v, t))
            elif isinstance(v, (String, Number)):
                items.append(v)
            else:
                raise _Fail(t, "lists hold strings or time ranges", ("VALUE",))
            if self.tok.kind == "comma":
                self.advance()
                continue
            if self.tok.kind == "rbrack":
                self.advance()
                break
            raise _Fail(self.tok, "unterminated list", (",", "]"))
        if ranges and items:
            raise _Fail(open_tok, "cannot mix time ranges and strings in one list")
        if ranges:
            return self.range_set(ranges)
        return StringList(
            tuple(v.text if isinstance(v, String) else format(v.value, "f") for v in items)
        )


def _outcome_conjunctive(expr: Expr) -> bool:
    if isinstance(expr, AtomicClause):
        return True
    if isinstance(expr, And):
        return all(_outcome_conjunctive(c) for c in expr.children)
    return False


def _split_blocks(tokens: list[Token]) -> tuple[list[Token], list[list[Token]]]:
    preamble: list[Token] = []
    blocks: list[list[Token]] = []
    for t in tokens:
        if t.is_kw("rule") and t.first_on_line:
            blocks.append([t])
        elif blocks:
            blocks[-1].append(t)
        else:
            preamble.append(t)
    return preamble, blocks


def _eof_after(tokens: list[Token]) -> Token:
    last = tokens[-1]
    return Token("eof", "", last.line, last.end_column)


def parse_rules(
    source: str | bytes,
    symbols=None,
    strict_keys: bool = False,
    source_name: str = "",
) -> tuple[RuleSet, list[ParseDiagnostic]]:
    """Parse a ``.trl`` text into a RuleSet plus diagnostics.

    Never raises on malformed input.  When *symbols* (a ``SymbolLibrary``) is
    given, keys absent from it produce a warning, or an error that rejects
    the rule when *strict_keys* is set.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    diagnostics: list[ParseDiagnostic] = []
    preamble, blocks = _split_blocks(tokenize(source))
    if preamble:
        t = preamble[0]
        diagnostics.append(
            ParseDiagnostic(t.line, t.column, f"text outside a rule block: {t.text!r}", ("rule",))
        )
    rules: list[Rule] = []
    seen: set[int] = set()
    for block in blocks:
        parser = _BlockParser(block, _eof_after(block))
        try:
            rule_id, condition, outcome, header = parser.parse()
        except _Fail as f:
            diagnostics.append(ParseDiagnostic(f.token.line, f.token.column, f.message, f.expected))
            continue
        for tok, msg in parser.warnings:
            diagnostics.append(ParseDiagnostic(tok.line, tok.column, msg, (), "warning"))
        if rule_id in seen:
            diagnostics.append(
                ParseDiagnostic(header.line, header.column, f"duplicate rule id {rule_id}", ())
            )
            continue
        rejected = False
        if symbols is not None:
            rejected = _check_keys(condition, outcome, block, symbols, strict_keys, diagnostics)
        if rejected:
            continue
        seen.add(rule_id)
        rules.append(Rule(rule_id, condition, outcome, (block[0].line, block[-1].line)))
    return RuleSet(tuple(rules), source_name), diagnostics


def _check_keys(condition, outcome, block, symbols, strict, diagnostics) -> bool:
    from .classify import Category, classify_key

    rejected = False
    reported: set[str] = set()
    for atom in atoms(condition) + atoms(outcome):
        tok = next((t for t in block if t.kind == "ident" and t.text == atom.key), block[0])
        if classify_key(atom.key, symbols) is Category.UNKNOWN:
            if atom.key in reported:
                continue
            reported.add(atom.key)
            severity = "error" if strict else "warning"
            diagnostics.append(
                ParseDiagnostic(
                    tok.line,
                    tok.column,
                    f"key {atom.key!r} is not in the symbol library",
                    tuple(symbols.all_keys()),
                    severity,
                )
            )
            rejected = rejected or strict
        elif atom.modulus is not None:
            kind = symbols.type_of(atom.key)
            if kind is not None and kind != "number":
                diagnostics.append(
                    ParseDiagnostic(
                        tok.line,
                        tok.column,
                        f"modulo clause on non-numeric key {atom.key!r}",
                        ("NUMERIC KEY",),
                    )
                )
                rejected = True
    return rejected
