"""Tokenizer for ``.trl`` rule files.

The lexer is total: characters it cannot classify become ``ERROR`` tokens
rather than exceptions, so callers always get a token stream back.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

KEYWORDS = frozenset({"rule", "if", "then", "and", "or", "not", "in", "true", "false"})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<newline>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<time>\d{1,2}:\d{2}(?::\d{2})?(?![\d:]))
  | (?P<number>\d[\w.]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<unterminated>"[^\n]*)
  | (?P<op>!=|>=|<=|==|=|>|<|%)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<lbrack>\[)
  | (?P<rbrack>\])
  | (?P<comma>,)
  | (?P<dash>-)
  | (?P<ident>[^\W\d]\w*)
  | (?P<error>.)
    """,
    re.VERBOSE | re.UNICODE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int
    first_on_line: bool = False

    @property
    def end_column(self) -> int:
        return self.column + max(len(self.text), 1) - 1

    def is_kw(self, word: str) -> bool:
        return self.kind == "kw" and self.text.lower() == word


def tokenize(source: str) -> list[Token]:
    """Split *source* into tokens; whitespace and ``#`` comments are dropped."""
    tokens: list[Token] = []
    line, line_start = 1, 0
    first = True
    for m in _TOKEN_RE.finditer(source):
        kind = m.lastgroup
        text = m.group()
        col = m.start() - line_start + 1
        if kind == "newline":
            line += 1
            line_start = m.end()
            first = True
            continue
        if kind in ("ws", "comment"):
            continue
        if kind == "ident" and text.lower() in KEYWORDS:
            kind = "kw"
        elif kind == "number" and not re.fullmatch(r"\d+(?:\.\d+)?", text):
            kind = "error"
        tokens.append(Token(kind, text, line, col, first))
        first = False
    return tokens


def token_texts(source: str) -> list[str]:
    """Lexer token texts, keywords case-folded; used for token-level scoring."""
    return [t.text.lower() if t.kind == "kw" else t.text for t in tokenize(source)]
