"""Lexer for the C subset.

Produces a flat token stream with line/column positions. Preprocessor
handling is line-based and minimal: ``#include`` lines are dropped,
object-like ``#define NAME tokens`` macros are recorded and substituted
inline, and everything else (function-like macros, conditional
compilation) fails loudly.
"""

from typing import NamedTuple

from ..errors import LexError, UnsupportedConstruct


class Token(NamedTuple):
    kind: str  # kw | id | int | float | char | str | punct | eof
    lexeme: str
    line: int
    col: int


KEYWORDS = frozenset({
    "int", "float", "double", "char", "void", "long", "short", "unsigned",
    "signed", "const", "if", "else", "for", "while", "do", "return",
    "break", "continue", "typedef", "sizeof", "struct",
})

# Recognised so the parser can reject them by name instead of producing a
# confusing ParseError.
UNSUPPORTED_KEYWORDS = frozenset({
    "goto", "switch", "case", "default", "union", "enum", "static",
    "extern", "register", "volatile", "auto",
})

_PUNCTUATORS = [
    "<<=", ">>=", "...",
    "==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "->",
    "+", "-", "*", "/", "%", "=", "<", ">", "!", "~", "&", "|", "^",
    "?", ":", ";", ",", ".", "(", ")", "[", "]", "{", "}",
]

_DIGRAPHS = ("<%", "%>", "<:", ":>", "%:")

_MAX_MACRO_DEPTH = 8


def _strip_directives(text):
    """Drop/record preprocessor lines, keeping line numbers stable.

    Returns (code_lines, macros) where macros maps NAME -> body text.
    """
    macros = {}
    code_lines = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        stripped = raw.lstrip()
        if not stripped.startswith("#"):
            code_lines.append(raw)
            continue
        code_lines.append("")
        body = stripped[1:].lstrip()
        if body.endswith("\\"):
            raise UnsupportedConstruct(lineno, "line continuation in directive")
        if body.startswith("include"):
            continue
        if body.startswith("define"):
            rest = body[len("define"):].lstrip()
            name = ""
            i = 0
            while i < len(rest) and (rest[i].isalnum() or rest[i] == "_"):
                name += rest[i]
                i += 1
            if not name:
                raise UnsupportedConstruct(lineno, "malformed #define")
            if i < len(rest) and rest[i] == "(":
                raise UnsupportedConstruct(lineno, "function-like macro")
            macros[name] = rest[i:].strip()
            continue
        raise UnsupportedConstruct(lineno, f"preprocessor directive #{body.split()[0] if body else ''}")
    return code_lines, macros


def _scan(lines):
    tokens = []
    in_comment = False
    comment_start = (1, 1)
    for lineno, line in enumerate(lines, start=1):
        i = 0
        n = len(line)
        while i < n:
            if in_comment:
                end = line.find("*/", i)
                if end < 0:
                    i = n
                    continue
                in_comment = False
                i = end + 2
                continue
            ch = line[i]
            col = i + 1
            if ch in " \t\r\f\v":
                i += 1
                continue
            if line.startswith("//", i):
                break
            if line.startswith("/*", i):
                in_comment = True
                comment_start = (lineno, col)
                i += 2
                continue
            two = line[i:i + 2]
            if two in _DIGRAPHS:
                raise UnsupportedConstruct(lineno, f"digraph {two!r}")
            if ch == "L" and i + 1 < n and line[i + 1] in "\"'":
                raise UnsupportedConstruct(lineno, "wide string/char literal")
            if ch.isalpha() or ch == "_":
                j = i
                while j < n and (line[j].isalnum() or line[j] == "_"):
                    j += 1
                word = line[i:j]
                kind = "kw" if (word in KEYWORDS or word in UNSUPPORTED_KEYWORDS) else "id"
                tokens.append(Token(kind, word, lineno, col))
                i = j
                continue
            if ch.isdigit() or (ch == "." and i + 1 < n and line[i + 1].isdigit()):
                tok, i = _scan_number(line, i, lineno)
                tokens.append(tok)
                continue
            if ch == '"':
                tok, i = _scan_string(line, i, lineno)
                tokens.append(tok)
                continue
            if ch == "'":
                tok, i = _scan_char(line, i, lineno)
                tokens.append(tok)
                continue
            for punct in _PUNCTUATORS:
                if line.startswith(punct, i):
                    tokens.append(Token("punct", punct, lineno, col))
                    i += len(punct)
                    break
            else:
                raise LexError(lineno, col, f"unexpected character {ch!r}")
    if in_comment:
        raise LexError(comment_start[0], comment_start[1], "unterminated comment")
    return tokens


def _scan_number(line, i, lineno):
    col = i + 1
    n = len(line)
    j = i
    is_float = False
    if line.startswith(("0x", "0X"), i):
        j = i + 2
        while j < n and (line[j].isdigit() or line[j] in "abcdefABCDEF"):
            j += 1
    else:
        while j < n and line[j].isdigit():
            j += 1
        if j < n and line[j] == ".":
            is_float = True
            j += 1
            while j < n and line[j].isdigit():
                j += 1
        if j < n and line[j] in "eE":
            k = j + 1
            if k < n and line[k] in "+-":
                k += 1
            if k < n and line[k].isdigit():
                is_float = True
                j = k
                while j < n and line[j].isdigit():
                    j += 1
    while j < n and line[j] in "uUlLfF":
        if line[j] in "fF":
            is_float = True
        j += 1
    return Token("float" if is_float else "int", line[i:j], lineno, col), j


def _scan_string(line, i, lineno):
    col = i + 1
    j = i + 1
    n = len(line)
    while j < n:
        if line[j] == "\\":
            j += 2
            continue
        if line[j] == '"':
            return Token("str", line[i:j + 1], lineno, col), j + 1
        j += 1
    raise LexError(lineno, col, "unterminated string literal")


def _scan_char(line, i, lineno):
    col = i + 1
    j = i + 1
    n = len(line)
    while j < n:
        if line[j] == "\\":
            j += 2
            continue
        if line[j] == "'":
            return Token("char", line[i:j + 1], lineno, col), j + 1
        j += 1
    raise LexError(lineno, col, "unterminated character literal")


def _expand_macros(tokens, macros):
    if not macros:
        return tokens
    bodies = {}
    for name, body in macros.items():
        bodies[name] = _scan([body])
    out = []
    # (token, depth) worklist; depth guards against mutually recursive defines
    work = [(tok, 0) for tok in reversed(tokens)]
    while work:
        tok, depth = work.pop()
        if tok.kind == "id" and tok.lexeme in bodies:
            if depth >= _MAX_MACRO_DEPTH:
                raise UnsupportedConstruct(tok.line, f"recursive macro {tok.lexeme!r}")
            replacement = [
                Token(t.kind, t.lexeme, tok.line, tok.col) for t in bodies[tok.lexeme]
            ]
            work.extend((t, depth + 1) for t in reversed(replacement))
            continue
        out.append(tok)
    return out


def tokenize(src):
    """Tokenize a SourceProgram (or raw text) into a list of Tokens.

    ``#include`` lines are dropped and object-like ``#define`` macros are
    substituted. Raises LexError for unterminated literals/comments and
    UnsupportedConstruct for function-like macros, digraphs, and wide
    strings.
    """
    text = src if isinstance(src, str) else src.text
    lines, macros = _strip_directives(text)
    tokens = _scan(lines)
    return _expand_macros(tokens, macros)
