from .astnodes import NODE_KINDS, AstNode, SourceProgram, dump_ast, node_line_map
from .lexer import Token, tokenize
from .normalize import PLACEHOLDER_LIMIT, STDLIB_ALLOWLIST, normalize_identifiers
from .parser import parse_program

__all__ = [
    "NODE_KINDS", "AstNode", "SourceProgram", "dump_ast", "node_line_map",
    "Token", "tokenize",
    "PLACEHOLDER_LIMIT", "STDLIB_ALLOWLIST", "normalize_identifiers",
    "parse_program",
]
