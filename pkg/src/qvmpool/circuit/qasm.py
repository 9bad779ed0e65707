"""Parser for the OpenQASM 2.0 subset used by the benchmark workload.

Supported: one ``qreg``, one ``creg``, the gates in :data:`ir.KINDS` (plus the
aliases ``U``/``u3`` and ``CX``), ``measure``, ``barrier``, and user ``gate``
definitions built from those, which are inlined. Anything else is rejected.
"""

from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass
from pathlib import Path

from .ir import KINDS, N_PARAMS, TWO_QUBIT, CircuitIR, Gate

ALIASES = {"U": "u", "u3": "u", "CX": "cx"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+|//[^\n]*)
  | (?P<nl>\n)
  | (?P<num>(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<sym>[;,()\[\]{}+\-*/^])
    """,
    re.VERBOSE,
)


class QasmError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise QasmError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            start = m.end()
        elif kind != "ws":
            toks.append(_Tok(kind, m.group(), line, pos - start + 1))
        pos = m.end()
    return toks


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp, "ln": math.log, "sqrt": math.sqrt}


def _eval(node: ast.AST, env: dict[str, float]) -> float:
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id == "pi":
            return math.pi
        if node.id in env:
            return env[node.id]
        raise ValueError(f"unknown identifier {node.id!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand, env)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and len(node.args) == 1:
        return _FUNCS[node.func.id](_eval(node.args[0], env))
    raise ValueError("unsupported expression")


@dataclass
class _GateDef:
    params: list[str]
    args: list[str]
    body: list[tuple[str, list[str], list[str], _Tok]]  # (name, param exprs, arg names, token)


class _Parser:
    def __init__(self, text: str, name: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.name = name
        self.qreg: tuple[str, int] | None = None
        self.creg: tuple[str, int] | None = None
        self.defs: dict[str, _GateDef] = {}
        self.gates: list[Gate] = []

    # token helpers
    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def err(self, msg: str, tok: _Tok | None = None) -> QasmError:
        tok = tok or self.peek() or (self.toks[-1] if self.toks else _Tok("", "", 1, 1))
        return QasmError(msg, tok.line, tok.col)

    def next(self) -> _Tok:
        tok = self.peek()
        if tok is None:
            raise self.err("unexpected end of input")
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text:
            raise self.err(f"expected {text!r}, found {tok.text!r}", tok)
        return tok

    def ident(self) -> _Tok:
        tok = self.next()
        if tok.kind != "id":
            raise self.err(f"expected identifier, found {tok.text!r}", tok)
        return tok

    def integer(self) -> int:
        tok = self.next()
        if tok.kind != "num" or not tok.text.isdigit():
            raise self.err(f"expected integer, found {tok.text!r}", tok)
        return int(tok.text)

    def expr_list(self) -> list[str]:
        """Raw expression texts between parentheses; the '(' is already consumed."""
        exprs, cur, depth = [], [], 0
        while True:
            tok = self.next()
            if tok.text == "(":
                depth += 1
            elif tok.text == ")":
                if depth == 0:
                    if cur:
                        exprs.append(" ".join(cur))
                    elif exprs:
                        raise self.err("empty expression", tok)
                    return exprs
                depth -= 1
            elif tok.text == "," and depth == 0:
                if not cur:
                    raise self.err("empty expression", tok)
                exprs.append(" ".join(cur))
                cur = []
                continue
            elif tok.text in (";", "{", "}"):
                raise self.err(f"unexpected {tok.text!r} in expression", tok)
            cur.append("**" if tok.text == "^" else tok.text)

    def evaluate(self, text: str, env: dict[str, float], tok: _Tok) -> float:
        try:
            return _eval(ast.parse(text, mode="eval"), env)
        except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as exc:
            raise self.err(f"bad expression {text!r}: {exc}", tok) from None

    # grammar
    def parse(self) -> CircuitIR:
        tok = self.next()
        if tok.text != "OPENQASM":
            raise self.err("missing OPENQASM header", tok)
        ver = self.next()
        if ver.text not in ("2.0", "2"):
            raise self.err(f"unsupported OpenQASM version {ver.text}", ver)
        self.expect(";")
        while self.peek() is not None:
            self.statement()
        if self.qreg is None:
            raise self.err("no qreg declared")
        nq = self.qreg[1]
        nc = self.creg[1] if self.creg else 0
        return CircuitIR(self.name, nq, nc, tuple(self.gates))

    def statement(self) -> None:
        tok = self.ident()
        word = tok.text
        if word == "include":
            self.next()
            self.expect(";")
        elif word in ("qreg", "creg"):
            reg = self.ident().text
            self.expect("[")
            size = self.integer()
            self.expect("]")
            self.expect(";")
            if word == "qreg":
                if self.qreg is not None:
                    raise self.err("only one qreg is supported", tok)
                self.qreg = (reg, size)
            else:
                if self.creg is not None:
                    raise self.err("only one creg is supported", tok)
                self.creg = (reg, size)
        elif word == "gate":
            self.gate_def()
        elif word == "measure":
            src = self.argument(self.qreg, tok)
            self.next_is("->")
            dst = self.argument(self.creg, tok)
            self.expect(";")
            if len(src) != len(dst):
                raise self.err("measure register sizes differ", tok)
            for q, c in zip(src, dst):
                self.gates.append(Gate("measure", (q,), clbit=c))
        elif word == "barrier":
            qs = []
            for a in self.arg_list():
                qs.extend(a)
            self.gates.append(Gate("barrier", tuple(sorted(set(qs)))))
        elif word in ("opaque", "reset", "if"):
            raise self.err(f"unsupported statement {word!r}", tok)
        else:
            params = []
            if self.peek() and self.peek().text == "(":
                self.next()
                params = [self.evaluate(e, {}, tok) for e in self.expr_list()]
            args = self.arg_list()
            self.apply(word, params, args, tok)

    def next_is(self, text: str) -> None:
        tok = self.next()
        if tok.text != text:
            raise self.err(f"expected {text!r}, found {tok.text!r}", tok)

    def argument(self, reg: tuple[str, int] | None, at: _Tok) -> list[int]:
        tok = self.ident()
        if reg is None or tok.text != reg[0]:
            raise self.err(f"unknown register {tok.text!r}", tok)
        if self.peek() and self.peek().text == "[":
            self.next()
            idx = self.integer()
            self.expect("]")
            if idx >= reg[1]:
                raise self.err(f"index {idx} out of range for {reg[0]}[{reg[1]}]", tok)
            return [idx]
        return list(range(reg[1]))

    def arg_list(self) -> list[list[int]]:
        args = [self.argument(self.qreg, self.peek())]
        while True:
            tok = self.next()
            if tok.text == ";":
                return args
            if tok.text != ",":
                raise self.err(f"expected ',' or ';', found {tok.text!r}", tok)
            args.append(self.argument(self.qreg, tok))

    def gate_def(self) -> None:
        name_tok = self.ident()
        params: list[str] = []
        if self.peek() and self.peek().text == "(":
            self.next()
            if self.peek() and self.peek().text == ")":
                self.next()
            else:
                while True:
                    params.append(self.ident().text)
                    t = self.next()
                    if t.text == ")":
                        break
                    if t.text != ",":
                        raise self.err("expected ',' or ')'", t)
        args = [self.ident().text]
        while self.peek() and self.peek().text == ",":
            self.next()
            args.append(self.ident().text)
        self.expect("{")
        body = []
        while self.peek() and self.peek().text != "}":
            tok = self.ident()
            exprs: list[str] = []
            if self.peek() and self.peek().text == "(":
                self.next()
                exprs = self.expr_list()
            names = [self.ident().text]
            while True:
                t = self.next()
                if t.text == ";":
                    break
                if t.text != ",":
                    raise self.err("expected ',' or ';'", t)
                names.append(self.ident().text)
            for n in names:
                if n not in args:
                    raise self.err(f"unknown gate argument {n!r}", tok)
            body.append((tok.text, exprs, names, tok))
        self.expect("}")
        self.defs[name_tok.text] = _GateDef(params, args, body)

    def apply(self, word: str, params: list[float], args: list[list[int]], tok: _Tok, depth: int = 0) -> None:
        if depth > 32:
            raise self.err("gate definitions nest too deeply", tok)
        if word in self.defs:
            d = self.defs[word]
            if len(params) != len(d.params) or len(args) != len(d.args):
                raise self.err(f"wrong number of parameters or arguments for {word!r}", tok)
            width = max(len(a) for a in args)
            for k in range(width):
                qmap = {}
                for name, a in zip(d.args, args):
                    qmap[name] = a[k] if len(a) > 1 else a[0]
                env = dict(zip(d.params, params))
                for sub, exprs, names, sub_tok in d.body:
                    if sub == "barrier":
                        continue
                    vals = [self.evaluate(e, env, sub_tok) for e in exprs]
                    self.apply(sub, vals, [[qmap[n]] for n in names], sub_tok, depth + 1)
            return
        kind = ALIASES.get(word, word)
        if kind not in KINDS or kind in ("measure", "barrier"):
            raise self.err(f"unsupported gate {word!r}", tok)
        if len(params) != N_PARAMS.get(kind, 0):
            raise self.err(f"{word} expects {N_PARAMS.get(kind, 0)} parameter(s)", tok)
        arity = 2 if kind in TWO_QUBIT else 1
        if len(args) != arity:
            raise self.err(f"{word} expects {arity} argument(s)", tok)
        width = max(len(a) for a in args)
        if any(len(a) not in (1, width) for a in args):
            raise self.err("register broadcast sizes differ", tok)
        for k in range(width):
            qs = tuple(a[k] if len(a) > 1 else a[0] for a in args)
            try:
                self.gates.append(Gate(kind, qs, tuple(params)))
            except ValueError as exc:
                raise self.err(str(exc), tok) from None


def parse_qasm(text: str | bytes, name: str = "circuit") -> CircuitIR:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text, name).parse()


def load_qasm(path) -> CircuitIR:
    p = Path(path)
    return parse_qasm(p.read_text(), p.stem)
