"""Recursive-descent parser for the C subset.

Covers the constructs found in introductory-course programs: global and
local declarations (scalar, array, pointer), function definitions and
prototypes, if/else, for, while, do-while, return/break/continue, the
full C expression operator set, calls, casts, and int/float/char/string
literals. Anything outside the subset (structs, goto, switch, varargs
definitions) raises UnsupportedConstruct rather than degrading silently.

The produced tree uses the fixed node catalogue in ``astnodes``:

* ``Decl:name`` wraps a type chain ``[ArrayDecl|PtrDecl]* -> TypeDecl:name
  -> IdentifierType:type`` plus an optional initializer.
* A function definition is ``FuncDef -> (Decl:name, Compound)`` where the
  Decl holds the return TypeDecl followed by one Decl per parameter.
* ``for`` always has four children; omitted init/cond/step clauses become
  EmptyStatement nodes. ``do``-``while`` children follow source order:
  body first, condition second.
* Brace initializer lists are rendered as ExprList.
"""

from ..errors import ParseError, UnsupportedConstruct
from .astnodes import AstNode
from .lexer import Token, tokenize

_TYPE_KEYWORDS = frozenset({
    "int", "float", "double", "char", "void", "long", "short",
    "unsigned", "signed",
})

# Binary operator precedence, lowest first. Each level is left-associative.
_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("|",),
    ("^",),
    ("&",),
    ("==", "!="),
    ("<", ">", "<=", ">="),
    ("<<", ">>"),
    ("+", "-"),
    ("*", "/", "%"),
]

_ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="})

_UNARY_OPS = frozenset({"!", "~", "+", "-", "*", "&"})


class _Declarator:
    __slots__ = ("name", "line", "col", "pointers", "arrays", "params", "is_func")

    def __init__(self):
        self.name = ""
        self.line = 0
        self.col = 0
        self.pointers = 0
        self.arrays = []  # dim expression AstNode or None, outermost first
        self.params = None  # list of Decl nodes when a function declarator
        self.is_func = False


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0
        self.typedefs = set()

    # -- token helpers ----------------------------------------------------

    def peek(self, offset=0):
        i = self.pos + offset
        if i < len(self.tokens):
            return self.tokens[i]
        last = self.tokens[-1].line if self.tokens else 1
        return Token("eof", "", last, 1)

    def advance(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def at(self, lexeme):
        tok = self.peek()
        return tok.kind in ("punct", "kw") and tok.lexeme == lexeme

    def accept(self, lexeme):
        if self.at(lexeme):
            return self.advance()
        return None

    def expect(self, lexeme):
        tok = self.peek()
        if not self.at(lexeme):
            raise ParseError(tok.line, repr(lexeme), tok.lexeme or "end of input")
        return self.advance()

    def _fail(self, expected):
        tok = self.peek()
        raise ParseError(tok.line, expected, tok.lexeme or "end of input")

    def _check_unsupported(self):
        tok = self.peek()
        if tok.kind == "kw":
            if tok.lexeme == "goto":
                raise UnsupportedConstruct(tok.line, "goto")
            if tok.lexeme == "struct":
                raise UnsupportedConstruct(tok.line, "struct declaration")
            if tok.lexeme in ("switch", "case", "default"):
                raise UnsupportedConstruct(tok.line, "switch statement")
            if tok.lexeme in ("union", "enum", "static", "extern", "register",
                              "volatile", "auto"):
                raise UnsupportedConstruct(tok.line, tok.lexeme)

    # -- types and declarations -------------------------------------------

    def _at_type_start(self):
        tok = self.peek()
        if tok.kind == "kw" and (tok.lexeme in _TYPE_KEYWORDS or tok.lexeme == "const"):
            return True
        return tok.kind == "id" and tok.lexeme in self.typedefs

    def _parse_type_specifiers(self):
        """Consume type keywords (or one typedef name) into a type string."""
        tok = self.peek()
        words = []
        line, col = tok.line, tok.col
        while True:
            tok = self.peek()
            if tok.kind == "kw" and tok.lexeme == "const":
                self.advance()  # qualifier carries no tree node
                continue
            if tok.kind == "kw" and tok.lexeme in _TYPE_KEYWORDS:
                words.append(self.advance().lexeme)
                continue
            if not words and tok.kind == "id" and tok.lexeme in self.typedefs:
                words.append(self.advance().lexeme)
            break
        if not words:
            self._fail("type name")
        return " ".join(words), line, col

    def _parse_declarator(self, allow_abstract=False):
        d = _Declarator()
        while self.accept("*"):
            d.pointers += 1
        tok = self.peek()
        if tok.kind == "id":
            self.advance()
            d.name = tok.lexeme
            d.line, d.col = tok.line, tok.col
        elif tok.kind == "kw" and tok.lexeme in _TYPE_KEYWORDS:
            self._fail("declarator name")
        elif not allow_abstract:
            self._fail("declarator name")
        else:
            d.line, d.col = tok.line, tok.col
        while True:
            if self.at("["):
                self.advance()
                dim = None
                if not self.at("]"):
                    dim = self._parse_ternary()
                self.expect("]")
                d.arrays.append(dim)
            elif self.at("(") and not d.is_func:
                self.advance()
                d.is_func = True
                d.params = self._parse_param_list()
                self.expect(")")
            else:
                break
        return d

    def _parse_param_list(self):
        params = []
        if self.at(")"):
            return params
        # f(void) declares no parameters
        if (self.peek().kind == "kw" and self.peek().lexeme == "void"
                and self.peek(1).kind == "punct" and self.peek(1).lexeme == ")"):
            self.advance()
            return params
        while True:
            if self.at("..."):
                raise UnsupportedConstruct(self.peek().line, "varargs definition")
            self._check_unsupported()
            base, line, col = self._parse_type_specifiers()
            d = self._parse_declarator(allow_abstract=True)
            params.append(self._build_decl(base, d, None, line, col))
            if not self.accept(","):
                break
        return params

    def _build_type_chain(self, base, decl, line, col):
        node = AstNode("TypeDecl", decl.name, [
            AstNode("IdentifierType", base, [], line, col),
        ], decl.line or line, decl.col or col)
        for _ in range(decl.pointers):
            node = AstNode("PtrDecl", "", [node], decl.line or line, decl.col or col)
        for dim in reversed(decl.arrays):
            children = [node] + ([dim] if dim is not None else [])
            node = AstNode("ArrayDecl", "", children, decl.line or line, decl.col or col)
        return node

    def _build_decl(self, base, decl, init, line, col):
        children = [self._build_type_chain(base, decl, line, col)]
        if decl.is_func:
            children.extend(decl.params or [])
        if init is not None:
            children.append(init)
        return AstNode("Decl", decl.name, children, line, col)

    def _parse_initializer(self):
        if self.at("{"):
            brace = self.advance()
            items = []
            if not self.at("}"):
                while True:
                    items.append(self._parse_initializer())
                    if not self.accept(","):
                        break
            self.expect("}")
            return AstNode("ExprList", "", items, brace.line, brace.col)
        return self._parse_assignment()

    def _parse_declaration(self, context="statement"):
        """Parse one declaration line into a list of Decl nodes."""
        base, line, col = self._parse_type_specifiers()
        decls = []
        while True:
            d = self._parse_declarator()
            if d.is_func and context != "toplevel":
                raise UnsupportedConstruct(d.line, "nested function declaration")
            init = None
            if self.accept("="):
                init = self._parse_initializer()
            decls.append(self._build_decl(base, d, init, line, col))
            if not self.accept(","):
                break
        self.expect(";")
        return decls

    def _parse_typedef(self):
        kw = self.expect("typedef")
        base, line, col = self._parse_type_specifiers()
        d = self._parse_declarator()
        self.expect(";")
        self.typedefs.add(d.name)
        chain = self._build_type_chain(base, d, line, col)
        return AstNode("Typedef", d.name, [chain], kw.line, kw.col)

    # -- statements --------------------------------------------------------

    def _parse_compound(self):
        brace = self.expect("{")
        items = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                self._fail("'}'")
            self._check_unsupported()
            if self.at("typedef"):
                items.append(self._parse_typedef())
            elif self._at_type_start():
                items.extend(self._parse_declaration())
            else:
                items.append(self._parse_statement())
        self.expect("}")
        return AstNode("Compound", "", items, brace.line, brace.col)

    def _parse_statement(self):
        self._check_unsupported()
        tok = self.peek()
        if self.at("{"):
            return self._parse_compound()
        if self.at(";"):
            self.advance()
            return AstNode("EmptyStatement", "", [], tok.line, tok.col)
        if self.at("if"):
            return self._parse_if()
        if self.at("for"):
            return self._parse_for()
        if self.at("while"):
            return self._parse_while()
        if self.at("do"):
            return self._parse_do_while()
        if self.at("return"):
            self.advance()
            children = []
            if not self.at(";"):
                children.append(self._parse_expression())
            self.expect(";")
            return AstNode("Return", "", children, tok.line, tok.col)
        if self.at("break"):
            self.advance()
            self.expect(";")
            return AstNode("Break", "", [], tok.line, tok.col)
        if self.at("continue"):
            self.advance()
            self.expect(";")
            return AstNode("Continue", "", [], tok.line, tok.col)
        expr = self._parse_expression()
        self.expect(";")
        return expr

    def _parse_if(self):
        kw = self.expect("if")
        self.expect("(")
        cond = self._parse_expression()
        self.expect(")")
        then = self._parse_statement()
        children = [cond, then]
        if self.accept("else"):
            children.append(self._parse_statement())
        return AstNode("If", "", children, kw.line, kw.col)

    def _parse_for(self):
        kw = self.expect("for")
        self.expect("(")
        semi = self.peek()
        if self.at(";"):
            self.advance()
            init = AstNode("EmptyStatement", "", [], semi.line, semi.col)
        elif self._at_type_start():
            decls = self._parse_declaration()
            if len(decls) != 1:
                raise UnsupportedConstruct(kw.line, "multiple declarations in for-init")
            init = decls[0]
        else:
            init = self._parse_expression()
            self.expect(";")
        semi = self.peek()
        if self.at(";"):
            self.advance()
            cond = AstNode("EmptyStatement", "", [], semi.line, semi.col)
        else:
            cond = self._parse_expression()
            self.expect(";")
        close = self.peek()
        if self.at(")"):
            step = AstNode("EmptyStatement", "", [], close.line, close.col)
        else:
            step = self._parse_expression()
        self.expect(")")
        body = self._parse_statement()
        return AstNode("For", "", [init, cond, step, body], kw.line, kw.col)

    def _parse_while(self):
        kw = self.expect("while")
        self.expect("(")
        cond = self._parse_expression()
        self.expect(")")
        body = self._parse_statement()
        return AstNode("While", "", [cond, body], kw.line, kw.col)

    def _parse_do_while(self):
        kw = self.expect("do")
        body = self._parse_statement()
        self.expect("while")
        self.expect("(")
        cond = self._parse_expression()
        self.expect(")")
        self.expect(";")
        return AstNode("DoWhile", "", [body, cond], kw.line, kw.col)

    # -- expressions ---------------------------------------------------------

    def _parse_expression(self):
        first = self._parse_assignment()
        if not self.at(","):
            return first
        items = [first]
        while self.accept(","):
            items.append(self._parse_assignment())
        return AstNode("ExprList", "", items, first.line, first.col)

    def _parse_assignment(self):
        lhs = self._parse_ternary()
        tok = self.peek()
        if tok.kind == "punct" and tok.lexeme in _ASSIGN_OPS:
            self.advance()
            rhs = self._parse_assignment()
            return AstNode("Assignment", tok.lexeme, [lhs, rhs], lhs.line, lhs.col)
        return lhs

    def _parse_ternary(self):
        cond = self._parse_binary(0)
        if self.at("?"):
            self.advance()
            then = self._parse_expression()
            self.expect(":")
            other = self._parse_assignment()
            return AstNode("TernaryOp", "", [cond, then, other], cond.line, cond.col)
        return cond

    def _parse_binary(self, level):
        if level >= len(_BINARY_LEVELS):
            return self._parse_unary()
        ops = _BINARY_LEVELS[level]
        node = self._parse_binary(level + 1)
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.lexeme in ops:
                self.advance()
                rhs = self._parse_binary(level + 1)
                node = AstNode("BinaryOp", tok.lexeme, [node, rhs], node.line, node.col)
            else:
                return node

    def _parse_unary(self):
        tok = self.peek()
        if tok.kind == "punct" and tok.lexeme in ("++", "--"):
            self.advance()
            operand = self._parse_unary()
            return AstNode("UnaryOp", tok.lexeme, [operand], tok.line, tok.col)
        if tok.kind == "punct" and tok.lexeme in _UNARY_OPS:
            self.advance()
            operand = self._parse_unary()
            return AstNode("UnaryOp", tok.lexeme, [operand], tok.line, tok.col)
        if tok.kind == "kw" and tok.lexeme == "sizeof":
            self.advance()
            if self.at("(") and self._is_type_paren():
                self.expect("(")
                base, line, col = self._parse_type_specifiers()
                stars = 0
                while self.accept("*"):
                    stars += 1
                self.expect(")")
                type_node = AstNode("IdentifierType", base + "*" * stars, [], line, col)
                return AstNode("UnaryOp", "sizeof", [type_node], tok.line, tok.col)
            operand = self._parse_unary()
            return AstNode("UnaryOp", "sizeof", [operand], tok.line, tok.col)
        if self.at("(") and self._is_type_paren():
            self.expect("(")
            base, line, col = self._parse_type_specifiers()
            stars = 0
            while self.accept("*"):
                stars += 1
            self.expect(")")
            operand = self._parse_unary()
            return AstNode("Cast", base + "*" * stars, [operand], tok.line, tok.col)
        return self._parse_postfix()

    def _is_type_paren(self):
        """True when '(' begins a parenthesized type name (a cast or sizeof)."""
        nxt = self.peek(1)
        if nxt.kind == "kw" and nxt.lexeme in _TYPE_KEYWORDS:
            return True
        return nxt.kind == "id" and nxt.lexeme in self.typedefs

    def _parse_postfix(self):
        node = self._parse_primary()
        while True:
            tok = self.peek()
            if self.at("("):
                self.advance()
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self._parse_assignment())
                        if not self.accept(","):
                            break
                self.expect(")")
                children = [node]
                if args:
                    children.append(AstNode("ExprList", "", args, args[0].line, args[0].col))
                node = AstNode("FuncCall", "", children, node.line, node.col)
            elif self.at("["):
                self.advance()
                index = self._parse_expression()
                self.expect("]")
                node = AstNode("ArrayRef", "", [node, index], node.line, node.col)
            elif self.at(".") or self.at("->"):
                op = self.advance()
                field = self.peek()
                if field.kind != "id":
                    self._fail("field name")
                self.advance()
                field_node = AstNode("ID", field.lexeme, [], field.line, field.col)
                node = AstNode("StructRef", op.lexeme, [node, field_node], node.line, node.col)
            elif tok.kind == "punct" and tok.lexeme in ("++", "--"):
                self.advance()
                node = AstNode("UnaryOp", "p" + tok.lexeme, [node], node.line, node.col)
            else:
                return node

    def _parse_primary(self):
        tok = self.peek()
        if self.at("("):
            self.advance()
            expr = self._parse_expression()
            self.expect(")")
            return expr
        if tok.kind == "id":
            self.advance()
            return AstNode("ID", tok.lexeme, [], tok.line, tok.col)
        if tok.kind == "int":
            self.advance()
            return AstNode("Constant", f"int,{tok.lexeme}", [], tok.line, tok.col)
        if tok.kind == "float":
            self.advance()
            return AstNode("Constant", f"float,{tok.lexeme}", [], tok.line, tok.col)
        if tok.kind == "char":
            self.advance()
            return AstNode("Constant", f"char,{tok.lexeme}", [], tok.line, tok.col)
        if tok.kind == "str":
            self.advance()
            return AstNode("Constant", f"string,{tok.lexeme}", [], tok.line, tok.col)
        self._check_unsupported()
        self._fail("expression")

    # -- top level -----------------------------------------------------------

    def parse_file(self):
        items = []
        while self.peek().kind != "eof" and self.pos < len(self.tokens):
            self._check_unsupported()
            if self.at("typedef"):
                items.append(self._parse_typedef())
                continue
            if not self._at_type_start():
                self._fail("declaration or function definition")
            base, line, col = self._parse_type_specifiers()
            d = self._parse_declarator()
            if d.is_func and self.at("{"):
                decl = self._build_decl(base, d, None, line, col)
                body = self._parse_compound()
                items.append(AstNode("FuncDef", "", [decl, body], line, col))
                continue
            # declaration list (possibly including prototypes)
            decls = []
            init = None
            if self.accept("="):
                init = self._parse_initializer()
            decls.append(self._build_decl(base, d, init, line, col))
            while self.accept(","):
                d = self._parse_declarator()
                init = None
                if self.accept("="):
                    init = self._parse_initializer()
                decls.append(self._build_decl(base, d, init, line, col))
            self.expect(";")
            items.extend(decls)
        return AstNode("FileAST", "", items, 1, 1)


def parse_program(src):
    """Parse a SourceProgram (or raw text) into a FileAST tree."""
    tokens = tokenize(src)
    return _Parser(tokens).parse_file()
