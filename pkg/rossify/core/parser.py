#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Gramática de expressões aritméticas dos arquivos de modelo.

Gramática (precedência crescente)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom (("^" | "**") unary)?
    atom   := NUMBER | "x1".."xN" | "pi" | "e"
            | FUNC "(" expr ")" | FUNC2 "(" expr "," expr ")" | "(" expr ")"

Funções: exp, log, sqrt, tanh, cosh, sinh; max e min (dois argumentos,
viram Piecewise para que as derivadas sejam definidas por partes). O
resultado é uma expressão sympy, derivada simbolicamente e compilada com
``lambdify``.
"""

import re
from typing import Callable, List, NamedTuple, Tuple

import numpy as np
import sympy

from rossify.utils.exceptions import ExpressionError

FUNCTIONS = {
    "exp": sympy.exp,
    "log": sympy.log,
    "sqrt": sympy.sqrt,
    "tanh": sympy.tanh,
    "cosh": sympy.cosh,
    "sinh": sympy.sinh,
}

BINARY_FUNCTIONS = {
    "max": lambda a, b: sympy.Piecewise((a, a >= b), (b, True)),
    "min": lambda a, b: sympy.Piecewise((a, a <= b), (b, True)),
}

CONSTANTS = {"pi": sympy.pi, "e": sympy.E}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


class Token(NamedTuple):
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> List[Token]:
    """Quebra a expressão em tokens."""
    tokens: List[Token] = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if not match or match.end() == pos:
            raise ExpressionError(
                f"Caractere inesperado na posição {pos}: {text[pos]!r}", text, pos
            )
        kind = match.lastgroup or ""
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.tokens = tokenize(text)
        self.index = 0
        self.symbols = symbols_for(dim)

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def _fail(self, message: str) -> ExpressionError:
        return ExpressionError(
            f"{message} (posição {self.current.pos} em {self.text!r})",
            self.text,
            self.current.pos,
        )

    def _accept(self, *ops: str) -> bool:
        if self.current.kind == "op" and self.current.text in ops:
            self.index += 1
            return True
        return False

    def _expect(self, op: str) -> None:
        if not self._accept(op):
            raise self._fail(f"Esperado {op!r}")

    def parse(self) -> sympy.Expr:
        if self.current.kind == "end":
            raise self._fail("Expressão vazia")
        node = self.expr()
        if self.current.kind != "end":
            raise self._fail(f"Token inesperado {self.current.text!r}")
        return node

    def expr(self) -> sympy.Expr:
        node = self.term()
        while True:
            if self._accept("+"):
                node = node + self.term()
            elif self._accept("-"):
                node = node - self.term()
            else:
                return node

    def term(self) -> sympy.Expr:
        node = self.unary()
        while True:
            if self._accept("*"):
                node = node * self.unary()
            elif self._accept("/"):
                node = node / self.unary()
            else:
                return node

    def unary(self) -> sympy.Expr:
        if self._accept("-"):
            return -self.unary()
        if self._accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> sympy.Expr:
        base = self.atom()
        if self._accept("^", "**"):
            return base ** self.unary()
        return base

    def atom(self) -> sympy.Expr:
        token = self.current
        if token.kind == "num":
            self.index += 1
            return sympy.Float(token.text) if any(c in token.text for c in ".eE") else sympy.Integer(token.text)
        if token.kind == "name":
            self.index += 1
            name = token.text
            if name in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return FUNCTIONS[name](arg)
            if name in BINARY_FUNCTIONS:
                self._expect("(")
                first = self.expr()
                self._expect(",")
                second = self.expr()
                self._expect(")")
                return BINARY_FUNCTIONS[name](first, second)
            if name in CONSTANTS:
                return CONSTANTS[name]
            match = re.fullmatch(r"x([1-9]\d*)", name)
            if match:
                i = int(match.group(1))
                if i > self.dim:
                    raise ExpressionError(
                        f"Variável {name} fora da dimensão {self.dim} em {self.text!r}",
                        self.text,
                        token.pos,
                    )
                return self.symbols[i - 1]
            raise ExpressionError(
                f"Identificador desconhecido {name!r} em {self.text!r}", self.text, token.pos
            )
        if self._accept("("):
            node = self.expr()
            self._expect(")")
            return node
        raise self._fail("Esperado número, variável ou '('")


def symbols_for(dim: int) -> Tuple[sympy.Symbol, ...]:
    """Símbolos x1..xN."""
    return tuple(sympy.Symbol(f"x{i + 1}", real=True) for i in range(dim))


def parse_expression(text: str, dim: int) -> sympy.Expr:
    """
    Converte o texto em expressão sympy.

    Args:
        text: Expressão, por exemplo ``"0.05 + 0.01*tanh(x1)"``.
        dim: Dimensão N do estado.

    Returns:
        sympy.Expr: Expressão nas variáveis x1..xN.

    Raises:
        ExpressionError: Se a expressão for inválida.
    """
    if not isinstance(text, str):
        raise ExpressionError(f"Expressão deve ser texto, recebido {type(text).__name__}")
    return _Parser(text, dim).parse()


def vectorize(expr: sympy.Expr, dim: int) -> Callable[[np.ndarray], np.ndarray]:
    """Compila ``expr`` para uma função de pontos (M, N) -> (M,)."""
    symbols = symbols_for(dim)
    compiled = sympy.lambdify(symbols, expr, modules="numpy")

    def evaluate(points: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            out = compiled(*points.T)
        return np.broadcast_to(np.asarray(out, dtype=float), (points.shape[0],)).copy()

    return evaluate


def compile_scalar(
    text: str, dim: int
) -> Tuple[sympy.Expr, Callable, Callable, Callable]:
    """
    Compila valor, gradiente e hessiana analíticos de uma expressão.

    Returns:
        Tupla (expr, f, grad, hess) com f: (M,N)->(M,), grad: (M,N)->(M,N) e
        hess: (M,N)->(M,N,N).
    """
    expr = parse_expression(text, dim)
    symbols = symbols_for(dim)
    grad_exprs = [sympy.diff(expr, s) for s in symbols]
    hess_exprs = [[sympy.diff(g, s) for s in symbols] for g in grad_exprs]

    value_fn = vectorize(expr, dim)
    grad_fns = [vectorize(g, dim) for g in grad_exprs]
    hess_fns = [[vectorize(h, dim) for h in row] for row in hess_exprs]

    def grad(points: np.ndarray) -> np.ndarray:
        return np.stack([g(points) for g in grad_fns], axis=-1)

    def hess(points: np.ndarray) -> np.ndarray:
        return np.stack(
            [np.stack([h(points) for h in row], axis=-1) for row in hess_fns], axis=-2
        )

    return expr, value_fn, grad, hess
