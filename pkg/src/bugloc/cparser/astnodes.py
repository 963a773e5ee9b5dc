"""Syntax tree nodes for the supported C subset.

Every node carries a kind from a fixed catalogue, an attribute string
(operator symbol, declared name, type name, or literal rendering), an
ordered child list, and the line/column of its first source token.
ID and Constant nodes are always leaves.
"""

from dataclasses import dataclass, field

NODE_KINDS = frozenset({
    "FileAST", "FuncDef", "Decl", "TypeDecl", "ArrayDecl", "PtrDecl",
    "IdentifierType", "Compound", "If", "For", "While", "DoWhile",
    "Return", "Break", "Continue", "FuncCall", "ExprList", "Assignment",
    "BinaryOp", "UnaryOp", "TernaryOp", "ArrayRef", "StructRef", "ID",
    "Constant", "Cast", "Typedef", "EmptyStatement",
})


class AstNode:
    """A single tree node. Identity-based hashing so nodes can key maps."""

    __slots__ = ("kind", "attr", "children", "line", "col")

    def __init__(self, kind, attr="", children=None, line=1, col=1):
        if kind not in NODE_KINDS:
            raise ValueError(f"unknown node kind {kind!r}")
        self.kind = kind
        self.attr = attr
        self.children = list(children) if children else []
        self.line = line
        self.col = col

    @property
    def token(self):
        """Canonical vocabulary token: ``Kind`` or ``Kind:attr``."""
        return f"{self.kind}:{self.attr}" if self.attr else self.kind

    def walk(self):
        """Yield this node and all descendants in depth-first pre-order."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def same_structure(self, other):
        """Structural equality over kind, attr, line, and children (col ignored)."""
        if (self.kind, self.attr, self.line) != (other.kind, other.attr, other.line):
            return False
        if len(self.children) != len(other.children):
            return False
        return all(a.same_structure(b) for a, b in zip(self.children, other.children))

    def __repr__(self):
        return f"AstNode({self.token!r} @{self.line}, {len(self.children)} children)"


@dataclass
class SourceProgram:
    """A program text with identity metadata. Lines are 1-indexed throughout."""

    task_id: str
    program_id: str
    author_id: str
    text: str
    role: str = "unknown"  # correct | buggy | unknown

    def lines(self):
        return self.text.split("\n")

    @property
    def line_count(self):
        return len(self.lines())


def node_line_map(root):
    """Total map from node identity to the source line of its first token."""
    return {node: node.line for node in root.walk()}


def dump_ast(root, indent="  "):
    """Render a tree as indented ``kind:attr @line`` text, one node per line."""
    out = []

    def rec(node, depth):
        out.append(f"{indent * depth}{node.token} @{node.line}")
        for child in node.children:
            rec(child, depth + 1)

    rec(root, 0)
    return "\n".join(out)
