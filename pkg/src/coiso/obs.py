"""Small arithmetic expression language for observables over chart coordinates.

Grammar (standard precedence, caret binds tighter than unary minus):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' exponent)*        # left associative
    exponent := '-' exponent | atom
    atom   := NUMBER | IDENT | IDENT '(' args ')' | '(' expr ')'

so "-2^2" parses as -(2^2) = -4.  Identifiers resolve at compile time to
chart coordinates, registered scalar fields (zero-argument names), or
registered accessor factories called with constant arguments.  Builtin
calls: sin, cos, exp, sqrt, abs.
"""

from dataclasses import dataclass, field

import numpy as np

from .geom import ScalarField

BUILTINS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
}


class ParseError(ValueError):
    def __init__(self, message, offset, src=""):
        self.offset = offset
        marker = ""
        if src:
            marker = f"\n  {src}\n  {' ' * offset}^"
        super().__init__(f"{message} at offset {offset}{marker}")


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class Num:
    value: float
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Neg:
    arg: object
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Bin:
    op: str
    lhs: object
    rhs: object
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    span: tuple = field(default=(0, 0), compare=False)


def _tokenize(src):
    tokens = []
    i = 0
    n = len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (src[j].isdigit() or (src[j] == "." and not seen_dot)):
                if src[j] == ".":
                    seen_dot = True
                j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            tokens.append(("num", src[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("ident", src[i:j], i))
            i = j
            continue
        if ch in "+-*/^(),":
            tokens.append((ch, ch, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", i, src)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, src):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.peek()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1]!r}", tok[2], self.src)
        return self.advance()

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected trailing input {tok[1]!r}", tok[2], self.src)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op, _, off = self.advance()
            rhs = self.term()
            node = Bin(op, node, rhs, (node.span[0], rhs.span[1]))
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op, _, off = self.advance()
            rhs = self.unary()
            node = Bin(op, node, rhs, (node.span[0], rhs.span[1]))
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "-":
            self.advance()
            arg = self.unary()
            return Neg(arg, (tok[2], arg.span[1]))
        return self.power()

    def power(self):
        node = self.atom()
        while self.peek()[0] == "^":
            self.advance()
            rhs = self.exponent()
            node = Bin("^", node, rhs, (node.span[0], rhs.span[1]))
        return node

    def exponent(self):
        tok = self.peek()
        if tok[0] == "-":
            self.advance()
            arg = self.exponent()
            return Neg(arg, (tok[2], arg.span[1]))
        return self.atom()

    def atom(self):
        tok = self.advance()
        kind, text, off = tok
        if kind == "num":
            return Num(float(text), (off, off + len(text)))
        if kind == "ident":
            if self.peek()[0] == "(":
                self.advance()
                args = []
                if self.peek()[0] != ")":
                    args.append(self.expr())
                    while self.peek()[0] == ",":
                        self.advance()
                        args.append(self.expr())
                close = self.expect(")")
                return Call(text, tuple(args), (off, close[2] + 1))
            return Var(text, (off, off + len(text)))
        if kind == "(":
            node = self.expr()
            close = self.expect(")")
            return node
        raise ParseError(f"unexpected token {text!r}", off, self.src)


def parse(src):
    """Parse an expression into its AST (spans carried, ignored by ==)."""
    return _Parser(src).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def to_source(node, parent_prec=0):
    """Minimal-parentheses printer; parse(to_source(ast)) == ast."""
    if isinstance(node, Num):
        text = repr(node.value)
        return text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        inner = to_source(node.arg, _PREC["neg"])
        text = f"-{inner}"
        return f"({text})" if parent_prec > _PREC["neg"] else text
    if isinstance(node, Call):
        args = ", ".join(to_source(a, 0) for a in node.args)
        return f"{node.name}({args})"
    if isinstance(node, Bin):
        prec = _PREC[node.op]
        lhs = to_source(node.lhs, prec)
        # left-associative operators need parens on an equal-precedence rhs
        rhs = to_source(node.rhs, prec + 1)
        text = f"{lhs} {node.op} {rhs}" if node.op in "+-" else f"{lhs}{node.op}{rhs}"
        return f"({text})" if parent_prec > prec else text
    raise TypeError(f"not an AST node: {node!r}")


def _const_value(node):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg):
        return -_const_value(node.arg)
    raise CompileError("accessor arguments must be numeric constants")


def compile_expr(ast, chart, registry=None):
    """Compile an AST into a ScalarField on the chart.

    ``registry`` maps names to ScalarFields (zero-argument observables) or
    to callables returning a ScalarField when applied to constant arguments
    (site-field accessors).
    """
    registry = registry or {}
    clash = set(chart.coord_names) & set(registry)
    if clash:
        raise CompileError(
            f"names {sorted(clash)} are both coordinates and observables")

    def build(node):
        if isinstance(node, Num):
            v = node.value
            return lambda p: v
        if isinstance(node, Var):
            if node.name in chart.coord_names:
                i = chart.index(node.name)
                return lambda p: p[i]
            if node.name in registry:
                target = registry[node.name]
                if isinstance(target, ScalarField):
                    return target.eval
                raise CompileError(
                    f"observable {node.name!r} needs call arguments")
            raise CompileError(f"unknown identifier {node.name!r}")
        if isinstance(node, Neg):
            inner = build(node.arg)
            return lambda p: -inner(p)
        if isinstance(node, Bin):
            lf = build(node.lhs)
            rf = build(node.rhs)
            op = node.op
            if op == "+":
                return lambda p: lf(p) + rf(p)
            if op == "-":
                return lambda p: lf(p) - rf(p)
            if op == "*":
                return lambda p: lf(p) * rf(p)
            if op == "/":
                return lambda p: lf(p) / rf(p)
            return lambda p: lf(p) ** rf(p)
        if isinstance(node, Call):
            if node.name in BUILTINS:
                if len(node.args) != 1:
                    raise CompileError(
                        f"builtin {node.name!r} takes exactly one argument")
                fn = BUILTINS[node.name]
                inner = build(node.args[0])
                return lambda p: float(fn(inner(p)))
            if node.name in registry:
                target = registry[node.name]
                if isinstance(target, ScalarField):
                    if node.args:
                        raise CompileError(
                            f"observable {node.name!r} takes no arguments")
                    return target.eval
                args = [_const_value(a) for a in node.args]
                fieldv = target(*args)
                return fieldv.eval
            raise CompileError(f"unknown function {node.name!r}")
        raise TypeError(f"not an AST node: {node!r}")

    fn = build(ast)
    return ScalarField(chart, lambda p: float(fn(np.asarray(p, dtype=float))),
                       name=to_source(ast))


def compile_source(src, chart, registry=None):
    return compile_expr(parse(src), chart, registry)
