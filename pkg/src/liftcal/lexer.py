"""Shared tokenizer for program files, feature expressions, and abstraction specs."""

from dataclasses import dataclass

from .errors import ParseError

# Maximal munch: multi-character symbols must precede their prefixes.
_SYMBOLS = (
    "=>", ":=", ">>", "||", "#if",
    "|", "&", "!", "(", ")", "{", "}", ",", ";", "<", "=", "+", "-", "*",
)


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' | 'num' | 'sym' | 'eof'
    text: str
    line: int
    col: int


def tokenize(text):
    tokens = []
    pos, line, col = 0, 1, 1
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch == "\n":
            pos += 1
            line += 1
            col = 1
            continue
        if ch.isspace():
            pos += 1
            col += 1
            continue
        if ch.isalpha() or ch == "_":
            start = pos
            while pos < n and (text[pos].isalnum() or text[pos] == "_"):
                pos += 1
            word = text[start:pos]
            tokens.append(Token("ident", word, line, col))
            col += pos - start
            continue
        if ch.isdigit():
            start = pos
            while pos < n and text[pos].isdigit():
                pos += 1
            tokens.append(Token("num", text[start:pos], line, col))
            col += pos - start
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, pos):
                tokens.append(Token("sym", sym, line, col))
                pos += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


class Cursor:
    """A peek/advance view over a token list, shared by the recursive-descent parsers."""

    def __init__(self, tokens):
        self._tokens = tokens
        self._pos = 0

    @property
    def current(self):
        return self._tokens[self._pos]

    def at(self, kind, text=None):
        tok = self.current
        return tok.kind == kind and (text is None or tok.text == text)

    def at_sym(self, *texts):
        tok = self.current
        return tok.kind == "sym" and tok.text in texts

    def advance(self):
        tok = self.current
        if tok.kind != "eof":
            self._pos += 1
        return tok

    def expect(self, kind, text=None):
        tok = self.current
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            got = tok.text if tok.kind != "eof" else "end of input"
            raise ParseError(f"expected {want!r}, found {got!r}", tok.line, tok.col)
        return self.advance()

    def error(self, message):
        tok = self.current
        raise ParseError(message, tok.line, tok.col)
