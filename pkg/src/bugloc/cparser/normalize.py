"""Identifier normalization.

User-chosen variable and function names are noise for vocabulary
purposes, so every distinct identifier is replaced with a positional
placeholder ``ID_k``. Standard-library call names on a fixed allowlist
keep their identity (their presence is semantically meaningful).

Placeholder numbering scans identifier *uses* (ID nodes) in a
depth-first pre-order walk first, then assigns remaining numbers to
declared names (Decl/TypeDecl/Typedef attributes and typedef'd type
names) in the same walk order. A name declared and initialized on one
line therefore gets its number from its first expression use when one
exists, e.g. ``int even = !(num % 2);`` maps num to ID_1 and even to
ID_2.
"""

from ..errors import PlaceholderExhausted
from .astnodes import AstNode

STDLIB_ALLOWLIST = frozenset({
    "printf", "scanf", "getchar", "strlen", "malloc", "free", "sqrt", "abs",
})

_BUILTIN_TYPE_WORDS = frozenset({
    "int", "float", "double", "char", "void", "long", "short",
    "unsigned", "signed",
})

PLACEHOLDER_LIMIT = 64

_DECLARING_KINDS = frozenset({"Decl", "TypeDecl", "Typedef"})


def _is_builtin_type(attr):
    words = attr.replace("*", " ").split()
    return bool(words) and all(w in _BUILTIN_TYPE_WORDS for w in words)


def _is_user_identifier(node):
    if node.kind == "ID":
        return node.attr not in STDLIB_ALLOWLIST
    if node.kind in _DECLARING_KINDS:
        return bool(node.attr) and node.attr not in STDLIB_ALLOWLIST
    if node.kind == "IdentifierType":
        return bool(node.attr) and not _is_builtin_type(node.attr)
    return False


def normalize_identifiers(root, limit=PLACEHOLDER_LIMIT):
    """Return a new tree with user identifiers replaced by ID_k placeholders.

    Pure function: the input tree is left untouched. Raises
    PlaceholderExhausted when a program uses more than ``limit`` distinct
    identifiers.
    """
    mapping = {}

    def assign(name):
        if name not in mapping:
            if len(mapping) >= limit:
                raise PlaceholderExhausted(
                    f"program uses more than {limit} distinct identifiers"
                )
            mapping[name] = f"ID_{len(mapping) + 1}"

    for node in root.walk():
        if node.kind == "ID" and _is_user_identifier(node):
            assign(node.attr)
    for node in root.walk():
        if node.kind != "ID" and _is_user_identifier(node):
            assign(node.attr)

    def rebuild(node):
        attr = node.attr
        if _is_user_identifier(node):
            attr = mapping[node.attr]
        return AstNode(node.kind, attr, [rebuild(c) for c in node.children],
                       node.line, node.col)

    return rebuild(root)
