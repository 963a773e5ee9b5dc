"""Synthetic corpus generator.

Emits small C programs for a handful of arithmetic/conditional/loop
tasks, together with a manifest, per-test outcomes, line coverage, and
planted bug-location ground truth. Outcomes and coverage are computed
analytically: every program is rendered from a tiny statement IR whose
simulator mirrors the emitted C exactly, so nothing is ever compiled or
executed.

Each task offers several structurally distinct solution families
(different loop kinds, guard styles, formula variants). Correct
programs render a family verbatim; buggy ones apply a single-line
mutation (operator swap, off-by-one bound, wrong constant, swapped
output format) whose effect the simulator reproduces, giving exact
pass/fail labels and a known planted line. Every mutation is checked to
fail at least one test and pass at least one.
"""

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..groundtruth import GroundTruth
from ..spectra import CoverageRecord
from .manifest import DatasetManifest, ProgramEntry

# -- expression / statement IR ---------------------------------------------------

# Expressions are nested tuples:
#   ("const", 7) | ("var", key) | ("slot", name) -> params[name] (expr or leaf)
#   ("bin", op_or_slot, lhs, rhs) | ("neg", e) | ("idx", key, e) | ("call", e)


def c_div(a, b):
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def c_mod(a, b):
    return a - c_div(a, b) * b


_BIN_EVAL = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": c_div,
    "%": c_mod,
    "&": lambda a, b: a & b,
    "<": lambda a, b: int(a < b),
    "<=": lambda a, b: int(a <= b),
    ">": lambda a, b: int(a > b),
    ">=": lambda a, b: int(a >= b),
    "==": lambda a, b: int(a == b),
    "!=": lambda a, b: int(a != b),
}


@dataclass(frozen=True)
class Decl:
    names: tuple
    array: tuple = ()  # (key, size) entries


@dataclass(frozen=True)
class Read:
    targets: tuple  # var keys or ("idx", key, expr)


@dataclass(frozen=True)
class Assign:
    var: object  # var key or ("idx", key, expr)
    expr: tuple
    role: str = ""


@dataclass(frozen=True)
class Incr:
    var: str
    delta: int = 1


@dataclass(frozen=True)
class For:
    init: Assign
    cond: tuple
    step: object  # Assign or Incr
    body: tuple
    role: str = ""


@dataclass(frozen=True)
class While:
    cond: tuple
    body: tuple
    role: str = ""


@dataclass(frozen=True)
class DoWhile:
    body: tuple
    cond: tuple
    role: str = ""


@dataclass(frozen=True)
class If:
    cond: tuple
    then: tuple
    els: tuple = ()
    role: str = ""


@dataclass(frozen=True)
class Print:
    fmt: object  # literal str or ("slot", name)
    args: tuple = ()
    role: str = ""


@dataclass(frozen=True)
class Mutation:
    kind: str  # operator-swap | off-by-one | wrong-constant | format-swap
    slot: str
    value: object
    role: str  # role label of the line the mutation lands on


@dataclass(frozen=True)
class Family:
    family_id: str
    var_keys: tuple
    body: tuple
    params: dict
    mutations: tuple
    helper: tuple = ()  # optional helper-function template lines


@dataclass(frozen=True)
class TestCase:
    test_id: str
    stdin_values: tuple
    expected: str


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    tests: tuple
    families: tuple


# -- rendering --------------------------------------------------------------------


def _resolve(params, value):
    while isinstance(value, tuple) and value and value[0] == "slot":
        value = params[value[1]]
    return value


def _render_expr(expr, names, params, nested=False):
    expr = _resolve(params, expr)
    kind = expr[0]
    if kind == "const":
        return str(expr[1])
    if kind == "var":
        return names[expr[1]]
    if kind == "neg":
        return f"-{_render_expr(expr[1], names, params, nested=True)}"
    if kind == "idx":
        return f"{names[expr[1]]}[{_render_expr(expr[2], names, params)}]"
    if kind == "call":
        return f"{names['fn']}({_render_expr(expr[1], names, params)})"
    if kind == "bin":
        op = _resolve(params, expr[1])
        lhs, rhs = expr[2], expr[3]
        # render additions of negative/zero constants naturally
        rhs_r = _resolve(params, rhs)
        if op == "+" and rhs_r[0] == "const":
            if rhs_r[1] == 0:
                return _render_expr(lhs, names, params, nested=nested)
            if rhs_r[1] < 0:
                op, rhs = "-", ("const", -rhs_r[1])
        text = (f"{_render_expr(lhs, names, params, nested=True)} {op} "
                f"{_render_expr(rhs, names, params, nested=True)}")
        return f"({text})" if nested else text
    raise ValueError(f"bad expr {expr!r}")


def _render_cond(expr, names, params):
    return _render_expr(expr, names, params)


def _c_escape(fmt):
    return fmt.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def _render_assign(stmt, names, params):
    if isinstance(stmt, Incr):
        return f"{names[stmt.var]}{'++' if stmt.delta > 0 else '--'}"
    target = stmt.var
    if isinstance(target, tuple):
        lhs = f"{names[target[1]]}[{_render_expr(target[2], names, params)}]"
    else:
        lhs = names[target]
    return f"{lhs} = {_render_expr(stmt.expr, names, params)}"


class _Renderer:
    def __init__(self, names, params):
        self.names = names
        self.params = params
        self.lines = []
        self.roles = {}
        self.stmt_lines = {}  # id(stmt) -> first rendered line

    def emit(self, text, role=""):
        self.lines.append(text)
        if role:
            self.roles[role] = len(self.lines)

    def body(self, stmts, depth):
        pad = "    " * depth
        n = self.names
        p = self.params
        for stmt in stmts:
            self.stmt_lines[id(stmt)] = len(self.lines) + 1
            if isinstance(stmt, Incr):
                self.emit(f"{pad}{_render_assign(stmt, n, p)};")
            elif isinstance(stmt, Decl):
                parts = [n[k] for k in stmt.names]
                parts += [f"{n[k]}[{size}]" for k, size in stmt.array]
                self.emit(f"{pad}int {', '.join(parts)};")
            elif isinstance(stmt, Read):
                fmts = " ".join("%d" for _ in stmt.targets)
                args = []
                for t in stmt.targets:
                    if isinstance(t, tuple):
                        args.append(f"&{n[t[1]]}[{_render_expr(t[2], n, p)}]")
                    else:
                        args.append(f"&{n[t]}")
                self.emit(f'{pad}scanf("{fmts}", {", ".join(args)});')
            elif isinstance(stmt, Assign):
                self.emit(f"{pad}{_render_assign(stmt, n, p)};", stmt.role)
            elif isinstance(stmt, For):
                head = (f"for ({_render_assign(stmt.init, n, p)}; "
                        f"{_render_cond(stmt.cond, n, p)}; "
                        f"{_render_assign(stmt.step, n, p)})")
                self.emit(f"{pad}{head} {{", stmt.role)
                self.body(stmt.body, depth + 1)
                self.emit(f"{pad}}}")
            elif isinstance(stmt, While):
                self.emit(f"{pad}while ({_render_cond(stmt.cond, n, p)}) {{", stmt.role)
                self.body(stmt.body, depth + 1)
                self.emit(f"{pad}}}")
            elif isinstance(stmt, DoWhile):
                self.emit(f"{pad}do {{", stmt.role)
                self.body(stmt.body, depth + 1)
                # the condition lives on the closing line; give it its own role
                self.emit(f"{pad}}} while ({_render_cond(stmt.cond, n, p)});",
                          f"{stmt.role}_end" if stmt.role else "")
            elif isinstance(stmt, If):
                self.emit(f"{pad}if ({_render_cond(stmt.cond, n, p)}) {{", stmt.role)
                self.body(stmt.then, depth + 1)
                if stmt.els:
                    self.emit(f"{pad}}} else {{")
                    self.body(stmt.els, depth + 1)
                self.emit(f"{pad}}}")
            elif isinstance(stmt, Print):
                fmt = _resolve(p, stmt.fmt)
                args = "".join(f", {_render_expr(a, n, p)}" for a in stmt.args)
                self.emit(f'{pad}printf("{_c_escape(fmt)}"{args});', stmt.role)
            else:
                raise ValueError(f"bad statement {stmt!r}")


def _fill_helper_line(line, names, params):
    text = line
    for key, name in names.items():
        text = text.replace("${%s}" % key, name)

    def sub(match):
        value = _resolve(params, ("slot", match.group(1)))
        return str(value[1] if isinstance(value, tuple) else value)

    return re.sub(r"\$\{slot:(\w+)\}", sub, text)


@dataclass
class Rendered:
    text: str
    roles: dict  # role label -> line number
    stmt_lines: dict  # id(stmt) -> line number
    helper_body_line: int = 0


def render_program(family, params, names):
    """Render to C text, resolving roles and per-statement line numbers."""
    r = _Renderer(names, params)
    r.emit("#include <stdio.h>")
    helper_body_line = 0
    for line in family.helper:
        r.emit(_fill_helper_line(line, names, params))
        if "return" in line:
            helper_body_line = len(r.lines)
            r.roles.setdefault("helper", helper_body_line)
    r.emit("int main() {")
    r.body(family.body, 1)
    r.emit("    return 0;")
    r.emit("}")
    return Rendered("\n".join(r.lines) + "\n", r.roles, r.stmt_lines,
                    helper_body_line)


# -- simulation -------------------------------------------------------------------


class _Sim:
    def __init__(self, names, params, roles, stdin_values, helper_fn=None):
        self.names = names
        self.params = params
        self.roles = roles
        self.inputs = list(stdin_values)
        self.env = {}
        self.arrays = {}
        self.output = []
        self.executed = set()
        self.helper_fn = helper_fn

    def mark(self, role):
        if role:
            self.executed.add(self.roles[role])

    def mark_line(self, line):
        self.executed.add(line)

    def eval(self, expr):
        expr = _resolve(self.params, expr)
        kind = expr[0]
        if kind == "const":
            return expr[1]
        if kind == "var":
            return self.env[expr[1]]
        if kind == "neg":
            return -self.eval(expr[1])
        if kind == "idx":
            return self.arrays[expr[1]][self.eval(expr[2])]
        if kind == "call":
            return self.helper_fn(self.eval(expr[1]))
        if kind == "bin":
            op = _resolve(self.params, expr[1])
            return _BIN_EVAL[op](self.eval(expr[2]), self.eval(expr[3]))
        raise ValueError(f"bad expr {expr!r}")

    def do_assign(self, stmt):
        if isinstance(stmt, Incr):
            self.env[stmt.var] += stmt.delta
            return
        value = self.eval(stmt.expr)
        if isinstance(stmt.var, tuple):
            self.arrays[stmt.var[1]][self.eval(stmt.var[2])] = value
        else:
            self.env[stmt.var] = value

    def run_body(self, stmts, line_of):
        for stmt in stmts:
            line = line_of[id(stmt)]
            if isinstance(stmt, Incr):
                self.mark_line(line)
                self.do_assign(stmt)
            elif isinstance(stmt, Decl):
                self.mark_line(line)
                for key, _ in stmt.array:
                    self.arrays[key] = {}
            elif isinstance(stmt, Read):
                self.mark_line(line)
                for t in stmt.targets:
                    value = self.inputs.pop(0) if self.inputs else 0
                    if isinstance(t, tuple):
                        self.arrays[t[1]][self.eval(t[2])] = value
                    else:
                        self.env[t] = value
            elif isinstance(stmt, Assign):
                self.mark_line(line)
                self.do_assign(stmt)
            elif isinstance(stmt, For):
                self.mark_line(line)
                self.do_assign(stmt.init)
                guard = 0
                while self.eval(stmt.cond):
                    self.run_body(stmt.body, line_of)
                    self.do_assign(stmt.step)
                    guard += 1
                    if guard > 10000:
                        raise RuntimeError("runaway loop in synthetic program")
            elif isinstance(stmt, While):
                self.mark_line(line)
                guard = 0
                while self.eval(stmt.cond):
                    self.run_body(stmt.body, line_of)
                    guard += 1
                    if guard > 10000:
                        raise RuntimeError("runaway loop in synthetic program")
            elif isinstance(stmt, DoWhile):
                self.mark_line(line)
                guard = 0
                while True:
                    self.run_body(stmt.body, line_of)
                    guard += 1
                    if guard > 10000 or not self.eval(stmt.cond):
                        break
            elif isinstance(stmt, If):
                self.mark_line(line)
                if self.eval(stmt.cond):
                    self.run_body(stmt.then, line_of)
                elif stmt.els:
                    self.run_body(stmt.els, line_of)
            elif isinstance(stmt, Print):
                self.mark_line(line)
                fmt = _resolve(self.params, stmt.fmt)
                values = tuple(self.eval(a) for a in stmt.args)
                self.output.append(fmt % values if values else fmt)


def simulate(family, params, names, stdin_values, rendered=None):
    """Run the IR body; returns (stdout text, executed line set)."""
    rendered = rendered or render_program(family, params, names)
    sim = _Sim(names, params, rendered.roles, stdin_values)
    if family.helper:
        mod = _resolve(params, ("slot", "mod"))[1]
        par = _resolve(params, ("slot", "par"))[1]
        helper_line = rendered.helper_body_line

        def helper_fn(v):
            sim.mark_line(helper_line)
            return int(c_mod(v, mod) == par)

        sim.helper_fn = helper_fn
    sim.run_body(family.body, rendered.stmt_lines)
    return "".join(sim.output), sim.executed


# -- task definitions -------------------------------------------------------------


def _sum_tests():
    return tuple(
        TestCase(f"sum_t{i}", (n,), f"{n * (n + 1) // 2}\n")
        for i, n in enumerate([0, 1, 5, 12])
    )


def _sum_families():
    fams = []
    # upward for loop
    body = (
        Decl(("n", "s", "i")),
        Read(("n",)),
        Assign("s", ("slot", "init_s")),
        For(Assign("i", ("slot", "init_i")), ("bin", ("slot", "cmp"), ("var", "i"), ("var", "n")),
            Incr("i"),
            (Assign("s", ("bin", "+", ("var", "s"), ("var", "i"))),), role="loop"),
        Print(("slot", "fmt"), (("var", "s"),), role="out"),
    )
    fams.append(Family(
        "for_up", ("n", "s", "i"), body,
        {"init_s": ("const", 0), "init_i": ("const", 1), "cmp": "<=", "fmt": "%d\n"},
        (
            Mutation("off-by-one", "cmp", "<", "loop"),
            Mutation("wrong-constant", "init_i", ("const", 2), "loop"),
        ),
    ))
    # while loop; s seeded before the read so placeholder order differs
    body = (
        Decl(("n", "s", "i")),
        Assign("s", ("const", 0)),
        Read(("n",)),
        Assign("i", ("slot", "init_i"), role="seed"),
        While(("bin", ("slot", "cmp"), ("var", "i"), ("var", "n")),
              (Assign("s", ("bin", "+", ("var", "s"), ("var", "i"))), Incr("i")),
              role="loop"),
        Print(("slot", "fmt"), (("var", "s"),), role="out"),
    )
    fams.append(Family(
        "while_up", ("n", "s", "i"), body,
        {"init_i": ("const", 1), "cmp": "<=", "fmt": "%d\n"},
        (
            Mutation("off-by-one", "cmp", "<", "loop"),
            Mutation("wrong-constant", "init_i", ("const", 2), "seed"),
        ),
    ))
    # downward for loop
    body = (
        Decl(("n", "s", "i")),
        Read(("n",)),
        Assign("s", ("const", 0)),
        For(Assign("i", ("var", "n")), ("bin", ("slot", "cmp"), ("var", "i"), ("slot", "lo")),
            Incr("i", -1),
            (Assign("s", ("bin", "+", ("var", "s"), ("var", "i"))),), role="loop"),
        Print(("slot", "fmt"), (("var", "s"),), role="out"),
    )
    fams.append(Family(
        "for_down", ("n", "s", "i"), body,
        {"cmp": ">=", "lo": ("const", 1), "fmt": "%d\n"},
        (
            Mutation("off-by-one", "cmp", ">", "loop"),
            Mutation("wrong-constant", "lo", ("const", 2), "loop"),
        ),
    ))
    # closed formula
    body = (
        Decl(("n", "s")),
        Read(("n",)),
        Assign("s", ("bin", "/",
                     ("bin", "*", ("var", "n"),
                      ("bin", ("slot", "op2"), ("var", "n"), ("const", 1))),
                     ("slot", "den")), role="formula"),
        Print(("slot", "fmt"), (("var", "s"),), role="out"),
    )
    fams.append(Family(
        "formula", ("n", "s"), body,
        {"op2": "+", "den": ("const", 2), "fmt": "%d\n"},
        (
            Mutation("operator-swap", "op2", "-", "formula"),
            Mutation("wrong-constant", "den", ("const", 3), "formula"),
        ),
    ))
    # guarded do-while against a copied limit variable
    body = (
        Decl(("n", "s", "i", "lim")),
        Read(("n",)),
        Assign("lim", ("var", "n")),
        Assign("s", ("const", 0)),
        If(("bin", ">=", ("var", "n"), ("slot", "guard")),
           (Assign("i", ("const", 1)),
            DoWhile((Assign("s", ("bin", "+", ("var", "s"), ("var", "i"))), Incr("i")),
                    ("bin", ("slot", "cmp"), ("var", "i"), ("var", "lim")), role="loop")),
           role="guard"),
        Print(("slot", "fmt"), (("var", "s"),), role="out"),
    )
    fams.append(Family(
        "guarded_do", ("n", "s", "i", "lim"), body,
        {"guard": ("const", 1), "cmp": "<=", "fmt": "%d\n"},
        (
            Mutation("off-by-one", "cmp", "<", "loop_end"),
            Mutation("wrong-constant", "guard", ("const", 2), "guard"),
        ),
    ))
    # accumulate then adjust: s = sum(0..n) computed from 0
    body = (
        Decl(("n", "s", "i")),
        Read(("n",)),
        Assign("s", ("const", 0)),
        For(Assign("i", ("slot", "init_i")),
            ("bin", "<=", ("var", "i"), ("var", "n")), Incr("i"),
            (Assign("s", ("bin", ("slot", "acc"), ("var", "s"), ("var", "i")),
                    role="acc"),),
            role="loop"),
        Print(("slot", "fmt"), (("var", "s"),), role="out"),
    )
    fams.append(Family(
        "for_zero", ("n", "s", "i"), body,
        {"init_i": ("const", 0), "acc": "+", "fmt": "%d\n"},
        (
            Mutation("operator-swap", "acc", "-", "acc"),
            Mutation("wrong-constant", "init_i", ("const", 2), "loop"),
        ),
    ))
    return tuple(fams)


def _parity_tests():
    return tuple(
        TestCase(f"par_t{i}", (x,), ("EVEN\n" if x % 2 == 0 else "ODD\n"))
        for i, x in enumerate([0, 3, 6, 7])
    )


def _parity_families():
    fams = []
    even_print = Print(("slot", "fmt_even"), role="even")
    odd_print = Print(("slot", "fmt_odd"), role="odd")
    base_fmt = {"fmt_even": "EVEN\n", "fmt_odd": "ODD\n"}
    # plain if/else on x % 2 == 0
    body = (
        Decl(("x",)),
        Read(("x",)),
        If(("bin", "==", ("bin", "%", ("var", "x"), ("slot", "mod")), ("const", 0)),
           (even_print,), (odd_print,), role="branch"),
    )
    fams.append(Family(
        "ifelse_mod", ("x",), body,
        {"mod": ("const", 2), **base_fmt},
        (
            Mutation("wrong-constant", "mod", ("const", 3), "branch"),
            Mutation("format-swap", "fmt_odd", "ODD", "odd"),
            Mutation("format-swap", "fmt_even", "Even\n", "even"),
        ),
    ))
    # inverted test: x % 2 == 1 -> odd
    body = (
        Decl(("x",)),
        Read(("x",)),
        If(("bin", "==", ("bin", "%", ("var", "x"), ("slot", "mod")), ("const", 1)),
           (odd_print,), (even_print,), role="branch"),
    )
    fams.append(Family(
        "ifelse_inv", ("x",), body,
        {"mod": ("const", 2), **base_fmt},
        (
            Mutation("wrong-constant", "mod", ("const", 4), "branch"),
            Mutation("format-swap", "fmt_odd", "ODD \n", "odd"),
        ),
    ))
    # bitwise and
    body = (
        Decl(("x", "b")),
        Read(("x",)),
        Assign("b", ("bin", "&", ("var", "x"), ("slot", "mask")), role="mask"),
        If(("bin", "==", ("var", "b"), ("const", 0)),
           (even_print,), (odd_print,), role="branch"),
    )
    fams.append(Family(
        "bitwise", ("x", "b"), body,
        {"mask": ("const", 1), **base_fmt},
        (
            Mutation("wrong-constant", "mask", ("const", 2), "mask"),
            Mutation("format-swap", "fmt_even", "EVEN", "even"),
        ),
    ))
    # repeated subtraction
    body = (
        Decl(("x",)),
        Read(("x",)),
        While(("bin", ">=", ("var", "x"), ("slot", "bound")),
              (Assign("x", ("bin", "-", ("var", "x"), ("slot", "step")), role="sub"),),
              role="loop"),
        If(("bin", "==", ("var", "x"), ("const", 0)),
           (even_print,), (odd_print,), role="branch"),
    )
    fams.append(Family(
        "subtract", ("x",), body,
        {"bound": ("const", 2), "step": ("const", 2), **base_fmt},
        (
            Mutation("off-by-one", "bound", ("const", 3), "loop"),
            Mutation("wrong-constant", "step", ("const", 4), "sub"),
            Mutation("format-swap", "fmt_odd", "odd\n", "odd"),
        ),
    ))
    # helper function
    helper = (
        "int ${fn}(int ${v}) {",
        "    return ${v} % ${slot:mod} == ${slot:par};",
        "}",
    )
    body = (
        Decl(("x",)),
        Read(("x",)),
        If(("call", ("var", "x")), (even_print,), (odd_print,), role="branch"),
    )
    fams.append(Family(
        "helper_fn", ("x", "fn", "v"), body,
        {"mod": ("const", 2), "par": ("const", 0), **base_fmt},
        (
            Mutation("wrong-constant", "mod", ("const", 3), "helper"),
            Mutation("format-swap", "fmt_odd", "ODD", "odd"),
        ),
        helper=helper,
    ))
    # normalized then ternary-style chain (kept as if/else with dead negative guard)
    body = (
        Decl(("x",)),
        Read(("x",)),
        If(("bin", "<", ("var", "x"), ("const", 0)),
           (Assign("x", ("neg", ("var", "x"))),), role="normalize"),
        If(("bin", "!=", ("bin", "%", ("var", "x"), ("slot", "mod")), ("const", 0)),
           (odd_print,), (even_print,), role="branch"),
    )
    fams.append(Family(
        "normalized", ("x",), body,
        {"mod": ("const", 2), **base_fmt},
        (
            Mutation("wrong-constant", "mod", ("const", 3), "branch"),
            Mutation("format-swap", "fmt_even", " EVEN\n", "even"),
        ),
    ))
    return tuple(fams)


def _arrmax_tests():
    cases = [(7,), (3, 9, 2), (10, 4, 10, 2), (-5, -2)]
    return tuple(
        TestCase(f"max_t{i}", (len(vals),) + vals, f"{max(vals)}\n")
        for i, vals in enumerate(cases)
    )


def _arrmax_families():
    fams = []
    # array scan
    body = (
        Decl(("n", "i", "m"), array=(("a", 100),)),
        Read(("n",)),
        For(Assign("i", ("const", 0)), ("bin", "<", ("var", "i"), ("var", "n")),
            Incr("i"), (Read((("idx", "a", ("var", "i")),)),), role="readloop"),
        Assign("m", ("slot", "seed"), role="seed"),
        For(Assign("i", ("const", 1)),
            ("bin", "<", ("var", "i"), ("bin", ("slot", "boundop"), ("var", "n"), ("slot", "bound_adj"))),
            Incr("i"),
            (If(("bin", ("slot", "cmp"), ("idx", "a", ("var", "i")), ("var", "m")),
                (Assign("m", ("idx", "a", ("var", "i"))),), role="pick"),),
            role="scan"),
        Print("%d\n", (("var", "m"),), role="out"),
    )
    fams.append(Family(
        "array_scan", ("n", "i", "m", "a"), body,
        {"seed": ("idx", "a", ("const", 0)), "cmp": ">",
         "boundop": "+", "bound_adj": ("const", 0)},
        (
            Mutation("operator-swap", "cmp", "<", "pick"),
            Mutation("wrong-constant", "seed", ("const", 0), "seed"),
            Mutation("off-by-one", "bound_adj", ("const", -1), "scan"),
        ),
    ))
    # streaming with for
    body = (
        Decl(("n", "i", "m", "v")),
        Read(("n",)),
        Read(("m",)),
        For(Assign("i", ("slot", "start")), ("bin", "<", ("var", "i"), ("var", "n")),
            Incr("i"),
            (Read(("v",)),
             If(("bin", ("slot", "cmp"), ("var", "v"), ("var", "m")),
                (Assign("m", ("var", "v")),), role="pick")),
            role="scan"),
        Print("%d\n", (("var", "m"),), role="out"),
    )
    fams.append(Family(
        "stream_for", ("n", "i", "m", "v"), body,
        {"start": ("const", 1), "cmp": ">"},
        (
            Mutation("operator-swap", "cmp", "<", "pick"),
            Mutation("off-by-one", "start", ("const", 2), "scan"),
        ),
    ))
    # streaming with while
    body = (
        Decl(("n", "i", "m", "v")),
        Read(("n",)),
        Read(("m",)),
        Assign("i", ("slot", "start"), role="seed"),
        While(("bin", "<", ("var", "i"), ("var", "n")),
              (Read(("v",)),
               If(("bin", ("slot", "cmp"), ("var", "v"), ("var", "m")),
                  (Assign("m", ("var", "v")),), role="pick"),
               Incr("i")),
              role="scan"),
        Print("%d\n", (("var", "m"),), role="out"),
    )
    fams.append(Family(
        "stream_while", ("n", "i", "m", "v"), body,
        {"start": ("const", 1), "cmp": ">"},
        (
            Mutation("operator-swap", "cmp", "<", "pick"),
            Mutation("off-by-one", "start", ("const", 2), "seed"),
        ),
    ))
    # array scan tracking the best index; bi seeded before the reads
    body = (
        Decl(("n", "i", "bi"), array=(("a", 100),)),
        Read(("n",)),
        Assign("bi", ("slot", "seed_idx"), role="seed"),
        For(Assign("i", ("const", 0)), ("bin", "<", ("var", "i"), ("var", "n")),
            Incr("i"), (Read((("idx", "a", ("var", "i")),)),), role="readloop"),
        For(Assign("i", ("const", 1)), ("bin", "<", ("var", "i"), ("var", "n")),
            Incr("i"),
            (If(("bin", ("slot", "cmp"), ("idx", "a", ("var", "i")), ("idx", "a", ("var", "bi"))),
                (Assign("bi", ("var", "i")),), role="pick"),),
            role="scan"),
        Print("%d\n", (("idx", "a", ("var", "bi")),), role="out"),
    )
    fams.append(Family(
        "index_track", ("n", "i", "bi", "a"), body,
        {"seed_idx": ("const", 0), "cmp": ">"},
        (
            Mutation("operator-swap", "cmp", "<", "pick"),
            Mutation("operator-swap", "cmp", ">=", "pick"),
        ),
    ))
    # backward array scan
    body = (
        Decl(("n", "i", "m"), array=(("a", 100),)),
        Read(("n",)),
        For(Assign("i", ("const", 0)), ("bin", "<", ("var", "i"), ("var", "n")),
            Incr("i"), (Read((("idx", "a", ("var", "i")),)),), role="readloop"),
        Assign("m", ("idx", "a", ("bin", "-", ("var", "n"), ("const", 1)))),
        For(Assign("i", ("bin", "-", ("var", "n"), ("slot", "back"))),
            ("bin", ">=", ("var", "i"), ("const", 0)), Incr("i", -1),
            (If(("bin", ("slot", "cmp"), ("idx", "a", ("var", "i")), ("var", "m")),
                (Assign("m", ("idx", "a", ("var", "i"))),), role="pick"),),
            role="scan"),
        Print("%d\n", (("var", "m"),), role="out"),
    )
    fams.append(Family(
        "array_back", ("n", "i", "m", "a"), body,
        {"back": ("const", 2), "cmp": ">"},
        (
            Mutation("operator-swap", "cmp", "<", "pick"),
            Mutation("off-by-one", "back", ("const", 3), "scan"),
        ),
    ))
    return tuple(fams)


def _powmod_tests():
    cases = [(2, 3, 5), (3, 0, 7), (5, 4, 9), (9, 9, 10)]
    return tuple(
        TestCase(f"pow_t{i}", c, f"{pow(c[0], c[1], c[2])}\n")
        for i, c in enumerate(cases)
    )


def _powmod_families():
    fams = []
    # modular product inside an upward for loop
    body = (
        Decl(("a", "b", "m", "r", "i")),
        Read(("a", "b", "m")),
        Assign("r", ("const", 1)),
        For(Assign("i", ("slot", "start")),
            ("bin", ("slot", "cmp"), ("var", "i"), ("var", "b")), Incr("i"),
            (Assign("r", ("bin", "%", ("bin", ("slot", "mul"), ("var", "r"), ("var", "a")), ("var", "m")),
                    role="acc"),),
            role="loop"),
        Print("%d\n", (("var", "r"),), role="out"),
    )
    fams.append(Family(
        "modmul_for", ("a", "b", "m", "r", "i"), body,
        {"start": ("const", 1), "cmp": "<=", "mul": "*"},
        (
            Mutation("off-by-one", "cmp", "<", "loop"),
            Mutation("operator-swap", "mul", "+", "acc"),
        ),
    ))
    # while counting down
    body = (
        Decl(("a", "b", "m", "r")),
        Read(("a", "b", "m")),
        Assign("r", ("const", 1)),
        While(("bin", ">", ("var", "b"), ("slot", "floor")),
              (Assign("r", ("bin", "%", ("bin", "*", ("var", "r"), ("var", "a")), ("var", "m")), role="acc"),
               Incr("b", -1)),
              role="loop"),
        Print("%d\n", (("var", "r"),), role="out"),
    )
    fams.append(Family(
        "countdown", ("a", "b", "m", "r"), body,
        {"floor": ("const", 0)},
        (
            Mutation("off-by-one", "floor", ("const", 1), "loop"),
            Mutation("wrong-constant", "floor", ("const", -1), "loop"),
        ),
    ))
    # two-statement body: multiply then reduce; r seeded before the read
    body = (
        Decl(("a", "b", "m", "r", "i")),
        Assign("r", ("const", 1)),
        Read(("a", "b", "m")),
        For(Assign("i", ("const", 0)), ("bin", "<", ("var", "i"), ("var", "b")),
            Incr("i"),
            (Assign("r", ("bin", "*", ("var", "r"), ("var", "a")), role="mul"),
             Assign("r", ("bin", "%", ("var", "r"), ("slot", "modout")), role="red")),
            role="loop"),
        Print("%d\n", (("var", "r"),), role="out"),
    )
    fams.append(Family(
        "two_step", ("a", "b", "m", "r", "i"), body,
        {"modout": ("var", "m")},
        (
            Mutation("wrong-constant", "modout", ("const", 10), "red"),
            Mutation("wrong-constant", "modout", ("const", 100), "red"),
        ),
    ))
    # full power, final reduction
    body = (
        Decl(("a", "b", "m", "p", "i")),
        Read(("a", "b", "m")),
        Assign("p", ("const", 1)),
        For(Assign("i", ("const", 1)), ("bin", "<=", ("var", "i"), ("var", "b")),
            Incr("i"),
            (Assign("p", ("bin", ("slot", "mul"), ("var", "p"), ("var", "a")), role="acc"),),
            role="loop"),
        Assign("p", ("bin", "%", ("var", "p"), ("slot", "modout")), role="final"),
        Print("%d\n", (("var", "p"),), role="out"),
    )
    fams.append(Family(
        "final_mod", ("a", "b", "m", "p", "i"), body,
        {"mul": "*", "modout": ("var", "m")},
        (
            Mutation("operator-swap", "mul", "+", "acc"),
            Mutation("wrong-constant", "modout", ("const", 10), "final"),
        ),
    ))
    # guarded do-while
    body = (
        Decl(("a", "b", "m", "r", "i")),
        Read(("a", "b", "m")),
        Assign("r", ("const", 1)),
        If(("bin", ">", ("var", "b"), ("const", 0)),
           (Assign("i", ("slot", "start"), role="seed"),
            DoWhile((Assign("r", ("bin", "%", ("bin", "*", ("var", "r"), ("var", "a")), ("var", "m")), role="acc"),
                     Incr("i")),
                    ("bin", "<=", ("var", "i"), ("var", "b")), role="loop")),
           role="guard"),
        Assign("r", ("bin", "%", ("var", "r"), ("var", "m")), role="post"),
        Print("%d\n", (("var", "r"),), role="out"),
    )
    fams.append(Family(
        "guarded_do", ("a", "b", "m", "r", "i"), body,
        {"start": ("const", 1)},
        (
            Mutation("off-by-one", "start", ("const", 2), "seed"),
            Mutation("wrong-constant", "start", ("const", 3), "seed"),
        ),
    ))
    return tuple(fams)


def default_tasks():
    return (
        TaskSpec("sumn", _sum_tests(), _sum_families()),
        TaskSpec("parity", _parity_tests(), _parity_families()),
        TaskSpec("arrmax", _arrmax_tests(), _arrmax_families()),
        TaskSpec("powmod", _powmod_tests(), _powmod_families()),
    )


# -- corpus assembly ---------------------------------------------------------------

_NAME_POOLS = {
    "n": ["n", "num", "count", "total", "len"],
    "s": ["s", "sum", "acc", "res", "ans"],
    "i": ["i", "j", "k", "idx", "pos"],
    "x": ["x", "val", "num", "inp", "t"],
    "b": ["b", "bit", "low", "rem", "flag"],
    "m": ["m", "best", "big", "mx", "top"],
    "v": ["v", "cur", "next", "item", "elem"],
    "a": ["a", "arr", "data", "buf", "vals"],
    "bi": ["bi", "pos", "loc", "at", "where"],
    "lim": ["lim", "end", "stop", "bound", "last"],
    "r": ["r", "res", "out", "prod", "ans"],
    "p": ["p", "pw", "full", "raw", "acc"],
    "fn": ["check", "test", "iseven", "query", "pred"],
}
_FALLBACK_NAMES = ["q", "w", "u", "z", "y"]


def _names_for(var_keys, rng):
    names = {}
    used = set()
    for key in var_keys:
        pool = _NAME_POOLS.get(key, _FALLBACK_NAMES)
        choices = [c for c in pool if c not in used]
        if not choices:
            choices = [f"{key}{rng.integers(10, 99)}"]
        name = choices[int(rng.integers(len(choices)))]
        used.add(name)
        names[key] = name
    return names


@dataclass
class SyntheticCorpus:
    manifest: DatasetManifest
    truths: dict  # program_id -> GroundTruth (planted)
    coverage: list  # CoverageRecord
    eval_pairs: list  # (program_id, test_id) designated for localization eval
    planted_lines: dict  # program_id -> planted line number


def _validated_mutations(task, family, names):
    """Mutations that fail at least one test and pass at least one."""
    valid = []
    for mutation in family.mutations:
        params = dict(family.params)
        params[mutation.slot] = mutation.value
        rendered = render_program(family, params, names)
        outcomes = []
        for test in task.tests:
            out, _ = simulate(family, params, names, test.stdin_values, rendered)
            outcomes.append(out == test.expected)
        if any(outcomes) and not all(outcomes):
            valid.append(mutation)
    return valid


def gen_synth(out_dir, tasks=None, programs_per_task=100, seed=0,
              correct_fraction=0.3, eval_fraction=0.25):
    """Generate a synthetic corpus under ``out_dir``.

    Writes program sources, manifest.txt, truth.txt, results.txt,
    coverage.txt, and eval_pairs.txt; returns the in-memory corpus.
    Deterministic for a fixed seed.
    """
    tasks = tasks or default_tasks()
    out_dir = Path(out_dir)
    (out_dir / "programs").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    manifest = DatasetManifest(root=out_dir)
    manifest.notes.append(f"synthetic corpus seed={seed}")
    truths = {}
    coverage = []
    eval_pairs = []
    planted_lines = {}

    for task_index, task in enumerate(tasks):
        manifest.tasks[task.task_id] = [t.test_id for t in task.tests]
        n_correct = max(len(task.families), int(round(programs_per_task * correct_fraction)))
        n_buggy = max(1, programs_per_task - n_correct)

        # authors: one per correct program, each owning one family + name map
        authors = []
        for i in range(n_correct):
            family = task.families[i % len(task.families)]
            author_rng = np.random.default_rng(seed * 7919 + task_index * 1013 + i)
            names = _names_for(family.var_keys, author_rng)
            authors.append((f"{task.task_id}_a{i:03d}", family, names))

        def emit_program(pid, author_id, family, names, params, role):
            rendered = render_program(family, params, names)
            rel = f"programs/{pid}.c"
            (out_dir / rel).write_text(rendered.text)
            manifest.programs[pid] = ProgramEntry(pid, task.task_id, author_id, role, rel)
            failing = []
            for test in task.tests:
                out, executed = simulate(family, params, names,
                                         test.stdin_values, rendered)
                outcome = "pass" if out == test.expected else "fail"
                if outcome == "fail":
                    failing.append(test.test_id)
                manifest.results[(pid, test.test_id)] = outcome
                coverage.append(CoverageRecord(pid, test.test_id, outcome,
                                               frozenset(executed)))
            return rendered, failing

        correct_by_author = {}
        for i, (author_id, family, names) in enumerate(authors):
            pid = f"{task.task_id}_c{i:03d}"
            _, failing = emit_program(pid, author_id, family, names,
                                      family.params, "correct")
            assert not failing, f"correct program {pid} fails {failing}"
            correct_by_author[author_id] = pid

        # buggy programs cycle over (author, valid mutation) combinations
        combos = []
        for author_id, family, names in authors:
            for mutation in _validated_mutations(task, family, names):
                combos.append((author_id, family, names, mutation))
        assert combos, f"task {task.task_id}: no valid mutations"
        order = rng.permutation(len(combos))
        for j in range(n_buggy):
            author_id, family, names, mutation = combos[order[j % len(combos)]]
            pid = f"{task.task_id}_b{j:03d}"
            params = dict(family.params)
            params[mutation.slot] = mutation.value
            rendered, failing = emit_program(pid, author_id, family, names,
                                             params, "buggy")
            assert failing, f"buggy program {pid} fails nothing"
            assert len(failing) < len(task.tests), f"buggy program {pid} fails everything"
            planted = rendered.roles[mutation.role]
            planted_lines[pid] = planted
            truths[pid] = GroundTruth(
                program_id=pid,
                reference_id=correct_by_author[author_id],
                hunks=[],
                buggy_line_set=frozenset({planted}),
                causes={tid: frozenset({planted}) for tid in failing},
            )
        # a seeded subset of buggy programs is reserved for evaluation
        buggy_ids = [f"{task.task_id}_b{j:03d}" for j in range(n_buggy)]
        n_eval = max(1, int(len(buggy_ids) * eval_fraction))
        eval_ids = sorted(
            np.array(buggy_ids)[rng.permutation(len(buggy_ids))[:n_eval]].tolist()
        )
        for pid in eval_ids:
            for tid in sorted(truths[pid].causes):
                eval_pairs.append((pid, tid))

    from .manifest import save_manifest
    from ..groundtruth import save_truths
    from ..spectra import save_coverage

    save_manifest(manifest, out_dir / "manifest.txt")
    save_truths(list(truths.values()), out_dir / "truth.txt")
    save_coverage(coverage, out_dir / "coverage.txt")
    with open(out_dir / "results.txt", "w") as fh:
        for (pid, tid) in sorted(manifest.results):
            fh.write(f"{pid} {tid} {manifest.results[(pid, tid)]}\n")
    with open(out_dir / "eval_pairs.txt", "w") as fh:
        for pid, tid in eval_pairs:
            fh.write(f"{pid} {tid}\n")
    return SyntheticCorpus(manifest, truths, coverage, eval_pairs, planted_lines)


def load_eval_pairs(path):
    pairs = []
    with open(path) as fh:
        for raw in fh:
            raw = raw.strip()
            if raw and not raw.startswith("#"):
                pid, tid = raw.split()
                pairs.append((pid, tid))
    return pairs
