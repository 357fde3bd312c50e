"""Tokenizer for `.act` sources."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError

KEYWORDS = {
    "class", "main", "new", "await", "get", "return", "if", "else",
    "while", "skip", "this", "true", "false", "unit",
}

# longest-match first
SYMBOLS = ["==", "&&", "{", "}", "(", ")", ";", ",", "=", "!", "?", ".", "+", "-", "<"]


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' | 'int' | 'kw' | 'sym' | 'annot' | 'eof'
    text: str
    line: int
    col: int

    def describe(self) -> str:
        return "end of input" if self.kind == "eof" else repr(self.text)


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(source)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                advance(1)
            continue
        if ch == "@":
            start_line, start_col = line, col
            if not source.startswith("@pp:", i):
                raise ParseError("malformed annotation, expected '@pp:NAME'", line, col)
            advance(4)
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            if j == i:
                raise ParseError("annotation '@pp:' needs a name", start_line, start_col)
            name = source[i:j]
            advance(j - i)
            tokens.append(Token("annot", name, start_line, start_col))
            continue
        if ch.isdigit():
            start_line, start_col = line, col
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("int", source[i:j], start_line, start_col))
            advance(j - i)
            continue
        if ch.isalpha() or ch == "_":
            start_line, start_col = line, col
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            kind = "kw" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, start_line, start_col))
            advance(j - i)
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token("sym", sym, line, col))
                advance(len(sym))
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens
