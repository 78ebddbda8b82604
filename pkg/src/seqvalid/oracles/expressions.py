"""Validity of arithmetic expressions written over the digit/operator alphabet.

An expression is valid when it compiles as a Python 3 expression and its
evaluation does not raise. Parsing and evaluation are done here rather than
by calling ``eval``: the evaluator applies Python's own numeric operators to
Python ints, floats and the empty tuple (so ZeroDivisionError, OverflowError
and TypeError arise exactly where they would), but it refuses operations whose
integer result would exceed a magnitude budget. Chained comparisons
short-circuit, so ``1>2<1/0`` is valid.
"""
from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass

from .base import VALID, Verdict, invalid


@dataclass(frozen=True)
class EvalBudget:
    max_magnitude_digits: int = 4096
    max_steps: int = 100_000

    @property
    def max_bits(self) -> int:
        return int(self.max_magnitude_digits * math.log2(10)) + 1


DEFAULT_BUDGET = EvalBudget()

# Python operator tokens spellable with this character set, longest first.
_OPERATORS = sorted(
    ["**=", "//=", "<<=", ">>=",
     "!=", "%=", "*=", "**", "+=", "-=", "->", "//", "/=", "<<", "<=", "<>", "==", ">=", ">>",
     "%", "(", ")", "*", "+", "-", "/", "<", "=", ">"],
    key=len, reverse=True,
)
# Tokens that can never appear in a valid eval-mode expression here.
_FORBIDDEN = {"**=", "//=", "<<=", ">>=", "%=", "*=", "+=", "-=", "/=", "->", "<>", "="}
_COMPARE = {"==": operator.eq, "!=": operator.ne, "<": operator.lt, ">": operator.gt,
            "<=": operator.le, ">=": operator.ge}
_BINARY = {"+": operator.add, "-": operator.sub, "*": operator.mul, "/": operator.truediv,
           "//": operator.floordiv, "%": operator.mod, "<<": operator.lshift,
           ">>": operator.rshift, "**": operator.pow}


class _SyntaxError(Exception):
    pass


class _BudgetExceeded(Exception):
    pass


class _Raised(Exception):
    """Evaluation raised; carries the Python exception type name."""


_TOKEN = re.compile(r"(\d+)|(" + "|".join(re.escape(op) for op in _OPERATORS) + r")")


def _lex(text: str) -> list[tuple[str, str]]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        m = _TOKEN.match(text, i)
        if m is None:
            raise _SyntaxError(f"unexpected {text[i]!r} at {i}")
        lit, op = m.groups()
        if lit is not None:
            if lit[0] == "0" and lit.strip("0"):
                raise _SyntaxError(f"leading zeros in literal at {i}")
            toks.append(("num", lit))
        else:
            if op in _FORBIDDEN:
                raise _SyntaxError(f"'{op}' at {i}")
            toks.append(("op", op))
        i = m.end()
    return toks


class _Parser:
    # AST nodes: ("num", int) | ("tuple",) | ("unary", op, node) | ("bin", op, l, r)
    #            | ("cmp", [node...], [op...]) | ("call", callee, arg|None, star)

    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self):
        return self.toks[self.pos][1] if self.pos < len(self.toks) else None

    def peek_kind(self):
        return self.toks[self.pos][0] if self.pos < len(self.toks) else None

    def take(self, value=None):
        if self.pos >= len(self.toks):
            raise _SyntaxError("unexpected end")
        kind, tok = self.toks[self.pos]
        if value is not None and (kind != "op" or tok != value):
            raise _SyntaxError(f"expected {value!r} at token {self.pos}")
        self.pos += 1
        return kind, tok

    def parse(self):
        if not self.toks:
            raise _SyntaxError("empty expression")
        node = self.comparison()
        if self.pos != len(self.toks):
            raise _SyntaxError(f"unexpected token {self.peek()!r} at {self.pos}")
        return node

    def comparison(self):
        first = self.shift()
        operands, ops = [first], []
        while self.peek_kind() == "op" and self.peek() in _COMPARE:
            ops.append(self.take()[1])
            operands.append(self.shift())
        return first if not ops else ("cmp", operands, ops)

    def _left_assoc(self, sub, ops):
        node = sub()
        while self.peek_kind() == "op" and self.peek() in ops:
            op = self.take()[1]
            node = ("bin", op, node, sub())
        return node

    def shift(self):
        return self._left_assoc(self.arith, ("<<", ">>"))

    def arith(self):
        return self._left_assoc(self.term, ("+", "-"))

    def term(self):
        return self._left_assoc(self.factor, ("*", "/", "//", "%"))

    def factor(self):
        if self.peek_kind() == "op" and self.peek() in ("+", "-"):
            op = self.take()[1]
            return ("unary", op, self.factor())
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek_kind() == "op" and self.peek() == "**":
            self.take()
            return ("bin", "**", base, self.factor())
        return base

    def primary(self):
        node = self.atom()
        while self.peek_kind() == "op" and self.peek() == "(":
            self.take()
            arg, star = None, None
            if self.peek() in ("*", "**"):
                star = self.take()[1]
                arg = self.comparison()
            elif self.peek() != ")":
                arg = self.comparison()
            self.take(")")
            node = ("call", node, arg, star)
        return node

    def atom(self):
        kind, tok = self.take()
        if kind == "num":
            return ("num", int(tok))
        if tok == "(":
            if self.peek() == ")":
                self.take()
                return ("tuple",)
            inner = self.comparison()
            self.take(")")
            return inner
        raise _SyntaxError(f"unexpected {tok!r}")


class _Evaluator:
    def __init__(self, budget: EvalBudget):
        self.budget = budget
        self.max_bits = budget.max_bits
        self.steps = 0

    def _tick(self):
        self.steps += 1
        if self.steps > self.budget.max_steps:
            raise _BudgetExceeded("steps")

    def _check(self, value):
        if type(value) is int and value.bit_length() > self.max_bits:
            raise _BudgetExceeded("magnitude")
        return value

    def _guard_binary(self, op, a, b):
        if not (isinstance(a, int) and isinstance(b, int)):
            return
        if op == "**" and b > 0 and abs(a) > 1:
            if b * math.log2(abs(a)) > self.max_bits:
                raise _BudgetExceeded("magnitude")
        elif op == "<<" and a != 0 and b > self.max_bits:
            raise _BudgetExceeded("magnitude")

    def eval(self, node):
        self._tick()
        kind = node[0]
        if kind == "num":
            return self._check(node[1])
        if kind == "tuple":
            return ()
        try:
            if kind == "unary":
                value = self.eval(node[2])
                return self._check(operator.pos(value) if node[1] == "+" else operator.neg(value))
            if kind == "bin":
                a = self.eval(node[2])
                b = self.eval(node[3])
                self._guard_binary(node[1], a, b)
                return self._check(_BINARY[node[1]](a, b))
            if kind == "cmp":
                operands, ops = node[1], node[2]
                left = self.eval(operands[0])
                result = True
                for op, right_node in zip(ops, operands[1:]):
                    right = self.eval(right_node)
                    result = _COMPARE[op](left, right)
                    if not result:
                        return result
                    left = right
                return result
            if kind == "call":
                self.eval(node[1])
                if node[2] is not None:
                    self.eval(node[2])
                raise _Raised("TypeError: object is not callable")
        except (_BudgetExceeded, _Raised):
            raise
        except (ArithmeticError, TypeError, ValueError) as exc:
            raise _Raised(f"{type(exc).__name__}: {exc}") from None
        raise AssertionError(f"unknown node {kind}")


def parse_expression(text: str):
    """Parse ``text``; returns the AST or raises ``SyntaxError``."""
    try:
        return _Parser(_lex(text)).parse()
    except _SyntaxError as exc:
        raise SyntaxError(str(exc)) from None


def eval_expression(text: str, budget: EvalBudget = DEFAULT_BUDGET) -> Verdict:
    try:
        tree = _Parser(_lex(text)).parse()
    except _SyntaxError as exc:
        return invalid(f"syntax error: {exc}")
    try:
        _Evaluator(budget).eval(tree)
    except _BudgetExceeded:
        return invalid("budget")
    except _Raised as exc:
        return invalid(str(exc))
    except RecursionError:
        return invalid("budget")
    return VALID


def is_valid_expression(text: str, budget: EvalBudget = DEFAULT_BUDGET) -> bool:
    return eval_expression(text, budget).valid
