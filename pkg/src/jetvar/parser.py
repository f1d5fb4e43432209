"""Model-file and expression parsing with Einstein-summation expansion.

Grammar (plain style; the same one the printer emits):

    expr    := term (('+' | '-') term)*
    term    := factor ('*' factor)*
    factor  := ['-'] atom ['^' ['-'] INT]
    atom    := RATIONAL | ref | 'd' '(' expr ';' index ')'
             | 'eps' '[' index (',' index)* ']' | '(' expr ')'
    ref     := NAME ['[' index (',' index)* ']']
    RATIONAL:= INT ['/' INT]
    index   := INT | IDENT

``NAME`` may end in ``*`` (an antifield): a ``*`` glued to an identifier is
part of the name when the next character cannot start an operand, so
``u* * v`` and ``A*[0]`` are antifields while ``u*v`` is a product.

An index identifier that names a declared variable refers to it; any other
identifier is a summation letter.  A letter repeated within a multiplicative
term is summed over its slot's range; when both slots are metric slots
(derivative positions, or component slots declared ``dim``) each value
contributes one inverse-metric diagonal factor.  ``eps[...]`` is the totally
antisymmetric symbol on whatever range its letters are contracted against.
In gauge-operator expressions all sums are plain: the operator pairs with
the Euler-Lagrange system rather than contracting indices, so no metric
factors are inserted there.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

from .core import (
    EVEN,
    Expression,
    FIELD,
    GHOST,
    Generator,
    Grading,
    ODD,
    PARAM,
    Signature,
    VAR,
    invert_monomial,
)
from . import jetcalc
from .errors import (
    IndexRangeError,
    MetricDimensionError,
    ParseError,
    UndeclaredIdentifierError,
)
from .theory import NoetherOperator, Theory

# ---------------------------------------------------------------------------
# lexer


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_SYMBOLS = ("..", "+", "-", "*", "^", "(", ")", "[", "]", ";", ",", ":", "=", "/")
_OPERAND_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_0123456789(")


def tokenize(text: str, line: int = 1, col0: int = 1) -> List[Token]:
    tokens = []
    i = 0
    n = len(text)
    cur_line, cur_col = line, col0
    while i < n:
        ch = text[i]
        if ch == "\n":
            cur_line += 1
            cur_col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            cur_col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = cur_col
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("int", text[i:j], cur_line, start_col))
            cur_col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            name = text[i:j]
            # a glued '*' belongs to the name when what follows cannot start an operand
            if j < n and text[j] == "*" and (j + 1 >= n or text[j + 1] not in _OPERAND_START):
                name += "*"
                j += 1
            tokens.append(Token("name", name, cur_line, start_col))
            cur_col += j - i
            i = j
            continue
        two = text[i : i + 2]
        if two == "..":
            tokens.append(Token("..", two, cur_line, start_col))
            i += 2
            cur_col += 2
            continue
        if ch in "+-*^()[];,:=/":
            tokens.append(Token(ch, ch, cur_line, start_col))
            i += 1
            cur_col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", cur_line, start_col)
    tokens.append(Token("end", "", cur_line, cur_col))
    return tokens


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Index:
    """One bracket или derivative slot: an integer, a variable, or a letter."""

    kind: str  # 'int' | 'letter'
    value: Union[int, str]
    line: int
    col: int


class Node:
    __slots__ = ("kind", "data", "line", "col")

    def __init__(self, kind, data, line, col):
        self.kind = kind
        self.data = data
        self.line = line
        self.col = col


class _Parser:
    """Recursive-descent expression parser producing index-carrying ASTs."""

    def __init__(self, tokens: List[Token], allow_el: bool = False):
        self.tokens = tokens
        self.pos = 0
        self.allow_el = allow_el

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(
                f"unexpected {tok.text!r}" if tok.kind != "end" else "unexpected end of input",
                tok.line,
                tok.col,
                expected=[kind],
            )
        return self.next()

    def at_end(self) -> bool:
        return self.peek().kind == "end"

    # grammar ----------------------------------------------------------------

    def parse_full(self) -> Node:
        node = self.parse_expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected trailing {tok.text!r}", tok.line, tok.col)
        return node

    def parse_expr(self) -> Node:
        tok = self.peek()
        terms = [(1, self.parse_term())]
        while self.peek().kind in ("+", "-"):
            op = self.next()
            terms.append((1 if op.kind == "+" else -1, self.parse_term()))
        return Node("sum", terms, tok.line, tok.col)

    def parse_term(self) -> Node:
        tok = self.peek()
        factors = [self.parse_factor()]
        while self.peek().kind == "*":
            self.next()
            factors.append(self.parse_factor())
        return Node("mul", factors, tok.line, tok.col)

    def parse_factor(self) -> Node:
        tok = self.peek()
        negated = False
        if tok.kind == "-":
            self.next()
            negated = True
        atom = self.parse_atom()
        if self.peek().kind == "^":
            self.next()
            sign = 1
            if self.peek().kind == "-":
                self.next()
                sign = -1
            exp = self.expect("int")
            atom = Node("pow", (atom, sign * int(exp.text)), atom.line, atom.col)
        if negated:
            atom = Node("neg", atom, tok.line, tok.col)
        return atom

    def parse_atom(self) -> Node:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            value = Fraction(int(tok.text))
            if self.peek().kind == "/":
                self.next()
                den = self.expect("int")
                if int(den.text) == 0:
                    raise ParseError("zero denominator", den.line, den.col)
                value = Fraction(int(tok.text), int(den.text))
            return Node("num", value, tok.line, tok.col)
        if tok.kind == "(":
            self.next()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if tok.kind == "name":
            if tok.text == "d":
                # lookahead: 'd' is only the derivative head before '('
                if self.tokens[self.pos + 1].kind == "(":
                    self.next()
                    self.expect("(")
                    body = self.parse_expr()
                    self.expect(";")
                    slot = self.parse_index()
                    self.expect(")")
                    return Node("d", (body, slot), tok.line, tok.col)
            if tok.text == "eps":
                self.next()
                idx = self.parse_indices()
                if len(idx) != 3:
                    raise ParseError("eps takes exactly 3 indices", tok.line, tok.col)
                return Node("eps", idx, tok.line, tok.col)
            if tok.text == "EL" and self.allow_el:
                self.next()
                self.expect("(")
                ref = self.peek()
                if ref.kind != "name":
                    raise ParseError("EL(...) expects a field reference", ref.line, ref.col)
                self.next()
                idx = self.parse_indices() if self.peek().kind == "[" else []
                self.expect(")")
                return Node("el", (ref.text, idx), tok.line, tok.col)
            self.next()
            idx = self.parse_indices() if self.peek().kind == "[" else []
            return Node("ref", (tok.text, idx), tok.line, tok.col)
        raise ParseError(
            f"unexpected {tok.text!r}" if tok.kind != "end" else "unexpected end of input",
            tok.line,
            tok.col,
            expected=["a rational", "an identifier", "'('"],
        )

    def parse_indices(self) -> List[Index]:
        self.expect("[")
        items = [self.parse_index()]
        while self.peek().kind == ",":
            self.next()
            items.append(self.parse_index())
        self.expect("]")
        return items

    def parse_index(self) -> Index:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return Index("int", int(tok.text), tok.line, tok.col)
        if tok.kind == "name":
            self.next()
            return Index("letter", tok.text, tok.line, tok.col)
        raise ParseError(
            f"unexpected {tok.text!r}", tok.line, tok.col, expected=["an index"]
        )


# ---------------------------------------------------------------------------
# Einstein expansion


@dataclass(frozen=True)
class Slot:
    lo: int
    hi: int
    metric: Optional[bool]  # None: wildcard (eps), inherits from its partner


@dataclass
class DefEntry:
    params: Tuple[str, ...]
    body: Node


class Expander:
    """Evaluate an AST over a signature, expanding index sums and metric factors."""

    def __init__(self, sig: Signature, defs: Dict[str, DefEntry] = None, operator_mode=False):
        self.sig = sig
        self.defs = defs or {}
        self.operator_mode = operator_mode
        self._def_stack: List[str] = []

    # -- letter analysis ------------------------------------------------------

    def _index_slots(self, name: str, idx: List[Index], line, col):
        """Slot descriptors for a generator or def reference."""
        sig = self.sig
        if name in self.defs:
            if name in self._def_stack:
                raise ParseError(f"def {name!r} is recursive", line, col)
            entry = self.defs[name]
            if len(idx) != len(entry.params):
                raise ParseError(
                    f"def {name!r} takes {len(entry.params)} indices, got {len(idx)}", line, col
                )
            # a def argument ranges over whatever its use inside the body demands;
            # collect the body slot of each parameter
            self._def_stack.append(name)
            try:
                inner = self._letter_slots(entry.body)
            finally:
                self._def_stack.pop()
            slots = []
            for param in entry.params:
                got = inner.get(param)
                if not got:
                    raise ParseError(f"def {name!r} never uses index {param!r}", line, col)
                slots.append(got[0])
            return slots
        if not sig.has_generator(name):
            raise UndeclaredIdentifierError(f"undeclared identifier {name!r}", line, col)
        gen = sig.generator(name)
        if len(idx) != len(gen.index_ranges):
            raise IndexRangeError(
                f"{name!r} takes {len(gen.index_ranges)} indices, got {len(idx)}", line, col
            )
        metric_slots = gen.metric_slots or (False,) * len(gen.index_ranges)
        return [
            Slot(lo, hi, bool(ms)) for (lo, hi), ms in zip(gen.index_ranges, metric_slots)
        ]

    def _letter_slots(self, node: Node) -> Dict[str, list]:
        """Exposed letters of a node with the slots they occupy."""
        kind = node.kind
        if kind == "num":
            return {}
        if kind == "neg":
            return self._letter_slots(node.data)
        if kind == "pow":
            base, _ = node.data
            inner = self._letter_slots(base)
            if inner:
                raise ParseError("index letters cannot appear under an exponent", node.line, node.col)
            return {}
        if kind in ("ref", "el"):
            name, idx = node.data
            if kind == "el":
                if not self.sig.has_generator(name):
                    raise UndeclaredIdentifierError(
                        f"undeclared identifier {name!r}", node.line, node.col
                    )
                gen = self.sig.generator(name)
                slots = [Slot(lo, hi, False) for lo, hi in gen.index_ranges]
            else:
                slots = self._index_slots(name, idx, node.line, node.col)
            out = {}
            for item, slot in zip(idx, slots):
                if item.kind == "letter" and not self._is_variable(item.value):
                    out.setdefault(item.value, []).append(slot)
            return out
        if kind == "eps":
            out = {}
            for item in node.data:
                if item.kind == "letter" and not self._is_variable(item.value):
                    out.setdefault(item.value, []).append(Slot(0, 0, None))
            return out
        if kind == "d":
            body, slot = node.data
            out = {k: list(v) for k, v in self._letter_slots(body).items()}
            if slot.kind == "letter" and not self._is_variable(slot.value):
                out.setdefault(slot.value, []).append(Slot(0, self.sig.nvars - 1, True))
            return out
        if kind == "mul":
            out = {}
            for f in node.data:
                for k, v in self._letter_slots(f).items():
                    out.setdefault(k, []).extend(v)
            return out
        if kind == "sum":
            exposed = None
            for _, term in node.data:
                letters = self._letter_slots(term)
                over = {k for k, v in letters.items() if len(v) == 1}
                if exposed is None:
                    exposed = {k: letters[k] for k in over}
                elif set(exposed) != over:
                    raise ParseError(
                        "summands expose different free index letters", node.line, node.col
                    )
            return exposed or {}
        raise AssertionError(f"unhandled node {kind}")

    def _is_variable(self, name: str) -> bool:
        return self.sig.has_generator(name) and self.sig.generator(name).role == VAR

    # -- evaluation -------------------------------------------------------------

    def expression(self, node: Node, env: Dict[str, int] = None) -> Expression:
        env = env or {}
        leftovers = {
            k: v for k, v in self._letter_slots(node).items() if k not in env
        }
        for letter, slots in sorted(leftovers.items()):
            if len(slots) == 1:
                raise ParseError(f"unbound index letter {letter!r}", node.line, node.col)
        return self._eval(node, env)

    def _eval(self, node: Node, env) -> Expression:
        kind = node.kind
        if kind == "sum":
            total = self.sig.zero()
            for sign, term in node.data:
                total = total + self._eval(term, env) * sign
            return total
        if kind == "mul":
            return self._eval_product(node.data, env, node)
        return self._eval_product([node], env, node)

    def _contractions(self, factors, env, node):
        """Yield (extended env, metric factor) over all contracted assignments."""
        counts: Dict[str, list] = {}
        for f in factors:
            for k, v in self._letter_slots(f).items():
                counts.setdefault(k, []).extend(v)
        pairs = []
        for letter, slots in sorted(counts.items()):
            if letter in env:
                continue
            if len(slots) == 1:
                continue  # exposed upward; validated at the top
            if len(slots) > 2:
                raise ParseError(
                    f"index letter {letter!r} appears more than twice in a term",
                    node.line,
                    node.col,
                )
            a, b = slots
            if self.operator_mode:
                # operator indices pair with the EL system; no metric, no
                # metric/plain distinction
                a = Slot(a.lo, a.hi, None if a.metric is None else False)
                b = Slot(b.lo, b.hi, None if b.metric is None else False)
            if a.metric is None and b.metric is None:
                raise ParseError(
                    f"cannot infer the range of {letter!r}", node.line, node.col
                )
            # one inverse-metric factor only when both occurrences sit in
            # metric slots; a mixed pair is a plain duality pairing
            metric = bool(a.metric) and bool(b.metric)
            ref = a if a.metric is not None else b
            other = b if ref is a else a
            if other.metric is not None and (other.lo, other.hi) != (ref.lo, ref.hi):
                raise IndexRangeError(
                    f"index letter {letter!r} joins slots of different ranges",
                    node.line,
                    node.col,
                )
            if self.operator_mode:
                metric = False
            pairs.append((letter, ref.lo, ref.hi, metric))
        if not pairs:
            yield env, Fraction(1)
            return
        ranges = [range(lo, hi + 1) for _, lo, hi, _ in pairs]
        for values in itertools.product(*ranges):
            env2 = dict(env)
            factor = Fraction(1)
            for (letter, lo, _, metric), v in zip(pairs, values):
                env2[letter] = v
                if metric:
                    # metric slots always range over the variable positions 0..n-1
                    factor /= self.sig.metric[v]
            yield env2, factor

    def _eval_product(self, factors, env, node) -> Expression:
        total = self.sig.zero()
        for env2, metric in self._contractions(factors, env, node):
            acc = self.sig.const(metric)
            for f in factors:
                acc = acc * self._eval_factor(f, env2)
                if acc.is_zero():
                    break
            total = total + acc
        return total

    def _eval_factor(self, node: Node, env) -> Expression:
        kind = node.kind
        if kind == "num":
            return self.sig.const(node.data)
        if kind == "neg":
            return -self._eval_factor(node.data, env)
        if kind == "pow":
            base, exp = node.data
            value = self._eval_factor(base, env)
            if exp >= 0:
                return value ** exp
            try:
                return invert_monomial(value ** (-exp))
            except Exception:
                raise ParseError(
                    "negative exponents require a parameter monomial", node.line, node.col
                ) from None
        if kind == "sum":
            return self._eval(node, env)
        if kind == "mul":
            return self._eval_product(node.data, env, node)
        if kind == "eps":
            values = [self._index_value(item, env) for item in node.data]
            return self.sig.const(_eps_sign(values))
        if kind == "d":
            body, slot = node.data
            pos = self._slot_position(slot, env)
            return jetcalc.total_derivative(self._eval_factor(body, env), pos)
        if kind == "ref":
            return self._eval_ref(node, env)
        if kind == "el":
            raise ParseError("EL(...) is only allowed in gauge operators", node.line, node.col)
        raise AssertionError(f"unhandled node {kind}")

    def _index_value(self, item: Index, env) -> int:
        if item.kind == "int":
            return item.value
        if self._is_variable(item.value):
            return self.sig.var_position(item.value)
        if item.value in env:
            return env[item.value]
        raise ParseError(f"unbound index letter {item.value!r}", item.line, item.col)

    def _slot_position(self, item: Index, env) -> int:
        v = self._index_value(item, env)
        if not 0 <= v < self.sig.nvars:
            raise IndexRangeError(
                f"derivative slot {v} outside the {self.sig.nvars} declared variables",
                item.line,
                item.col,
            )
        return v

    def _eval_ref(self, node: Node, env) -> Expression:
        name, idx = node.data
        if name in self.defs:
            if name in self._def_stack:
                raise ParseError(f"def {name!r} is recursive", node.line, node.col)
            entry = self.defs[name]
            if len(idx) != len(entry.params):
                raise ParseError(
                    f"def {name!r} takes {len(entry.params)} indices, got {len(idx)}",
                    node.line,
                    node.col,
                )
            inner_env = {
                p: self._index_value(item, env) for p, item in zip(entry.params, idx)
            }
            self._def_stack.append(name)
            try:
                return self.expression(entry.body, inner_env)
            finally:
                self._def_stack.pop()
        if not self.sig.has_generator(name):
            raise UndeclaredIdentifierError(
                f"undeclared identifier {name!r}", node.line, node.col
            )
        gen = self.sig.generator(name)
        comp = tuple(self._index_value(item, env) for item in idx)
        if len(comp) != len(gen.index_ranges):
            raise IndexRangeError(
                f"{name!r} takes {len(gen.index_ranges)} indices, got {len(comp)}",
                node.line,
                node.col,
            )
        for value, (lo, hi), item in zip(comp, gen.index_ranges, idx):
            if not lo <= value <= hi:
                raise IndexRangeError(
                    f"component {value} of {name!r} outside {lo}..{hi}", item.line, item.col
                )
        return self.sig.from_atom(self.sig.atom(name, comp))

    # -- gauge operators -----------------------------------------------------------

    def operator_table(self, node: Node, env) -> Dict[tuple, Dict[tuple, Expression]]:
        """Expand an EL(...)-linear expression into Noether-operator coefficients."""
        table: Dict[tuple, Dict[tuple, Expression]] = {}
        if node.kind != "sum":
            node = Node("sum", [(1, node)], node.line, node.col)
        for sign, term in node.data:
            factors = term.data if term.kind == "mul" else [term]
            for env2, metric in self._contractions(factors, env, term):
                self._operator_term(factors, sign * metric, env2, table, term)
        return table

    def _operator_term(self, factors, scale, env, table, node):
        el_part = None
        coeff = self.sig.const(scale)
        for f in factors:
            chain = self._el_chain(f, env)
            if chain is not None:
                if el_part is not None:
                    raise ParseError(
                        "gauge operator terms must be linear in EL(...)", node.line, node.col
                    )
                el_part = chain
            else:
                coeff = coeff * self._eval_factor(f, env)
        if el_part is None:
            raise ParseError(
                "gauge operator terms must contain one EL(...) factor", node.line, node.col
            )
        (name, comp), mindex, sign = el_part
        coeff = coeff * sign
        if coeff.is_zero():
            return
        entry = table.setdefault((name, comp), {})
        entry[mindex] = entry.get(mindex, self.sig.zero()) + coeff

    def _el_chain(self, node: Node, env):
        """Unwrap d(...; i) chains around an EL(...) head, or None.

        Returns ((field, component), multi-index, sign); a leading minus is
        part of the coefficient.
        """
        mindex = [0] * self.sig.nvars
        sign = 1
        while True:
            if node.kind == "neg":
                sign = -sign
                node = node.data
                continue
            if node.kind == "sum" and len(node.data) == 1:
                sign *= node.data[0][0]
                node = node.data[0][1]
                continue
            if node.kind == "mul" and len(node.data) == 1:
                node = node.data[0]
                continue
            if node.kind == "d":
                body, slot = node.data
                if not self._contains_el(body):
                    return None
                mindex[self._slot_position(slot, env)] += 1
                node = body
                continue
            break
        if node.kind != "el":
            if self._contains_el(node):
                raise ParseError(
                    "EL(...) may only be nested under derivatives", node.line, node.col
                )
            return None
        name, idx = node.data
        gen = self.sig.generator(name)
        comp = tuple(self._index_value(item, env) for item in idx)
        if len(comp) != len(gen.index_ranges):
            raise IndexRangeError(
                f"{name!r} takes {len(gen.index_ranges)} indices", node.line, node.col
            )
        return (name, comp), tuple(mindex), sign

    def _contains_el(self, node: Node) -> bool:
        if node.kind == "el":
            return True
        if node.kind in ("neg", "pow"):
            inner = node.data if node.kind == "neg" else node.data[0]
            return self._contains_el(inner)
        if node.kind == "d":
            return self._contains_el(node.data[0])
        if node.kind == "mul":
            return any(self._contains_el(f) for f in node.data)
        if node.kind == "sum":
            return any(self._contains_el(t) for _, t in node.data)
        return False


def _eps_sign(values) -> int:
    if len(set(values)) != len(values):
        return 0
    sign = 1
    vals = list(values)
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            if vals[i] > vals[j]:
                sign = -sign
    return sign


# ---------------------------------------------------------------------------
# public expression API


def _context_signature(context) -> Signature:
    from .bv import BVExtension

    if isinstance(context, Signature):
        return context
    if isinstance(context, Theory):
        return context.signature
    if isinstance(context, BVExtension):
        return context.signature
    raise TypeError("context must be a Signature, Theory, or BVExtension")


def parse_expression(text: str, context) -> Expression:
    """Parse one expression in the given theory context."""
    sig = _context_signature(context)
    ast = _Parser(tokenize(text)).parse_full()
    return Expander(sig).expression(ast)


def _split_top_level(tokens: List[Token]) -> List[List[Token]]:
    """Split a token stream at semicolons outside any parentheses."""
    chunks: List[List[Token]] = []
    current: List[Token] = []
    depth = 0
    end = tokens[-1]
    for tok in tokens[:-1]:
        if tok.kind == "(":
            depth += 1
        elif tok.kind == ")":
            depth -= 1
        if tok.kind == ";" and depth == 0:
            chunks.append(current)
            current = []
            continue
        current.append(tok)
    chunks.append(current)
    return [c + [Token("end", "", end.line, end.col)] for c in chunks if c]


def parse_assignments(text: str, context) -> Dict[tuple, Expression]:
    """Parse ``ref = expr [; ref = expr]*``; letters on the left enumerate components."""
    sig = _context_signature(context)
    out: Dict[tuple, Expression] = {}
    for tokens in _split_top_level(tokenize(text)):
        parser = _Parser(tokens)
        head = parser.expect("name")
        idx = parser.parse_indices() if parser.peek().kind == "[" else []
        parser.expect("=")
        body = parser.parse_expr()
        tok = parser.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected trailing {tok.text!r}", tok.line, tok.col)
        expander = Expander(sig)
        if not sig.has_generator(head.text):
            raise UndeclaredIdentifierError(
                f"undeclared identifier {head.text!r}", head.line, head.col
            )
        gen = sig.generator(head.text)
        if len(idx) != len(gen.index_ranges):
            raise IndexRangeError(
                f"{head.text!r} takes {len(gen.index_ranges)} indices", head.line, head.col
            )
        letters = []
        for item, (lo, hi) in zip(idx, gen.index_ranges):
            if item.kind == "letter" and not expander._is_variable(item.value):
                letters.append((item.value, lo, hi))
        ranges = [range(lo, hi + 1) for _, lo, hi in letters]
        for values in itertools.product(*ranges) if ranges else [()]:
            env = {name: v for (name, _, _), v in zip(letters, values)}
            comp = tuple(expander._index_value(item, env) for item in idx)
            key = (head.text, comp)
            if key in out:
                raise ParseError(
                    f"component {head.text}{list(comp)} assigned twice", head.line, head.col
                )
            out[key] = expander.expression(body, env)
    return out


# ---------------------------------------------------------------------------
# model files


_RANGE_DIM = object()

# identifiers with grammar-level meaning; not usable as generator names
_RESERVED = frozenset({"d", "eps", "EL", "dim", "diag"})


def _check_name(tok: Token):
    if tok.text in _RESERVED:
        raise ParseError(f"{tok.text!r} is reserved", tok.line, tok.col)
    return tok


def _parse_range(parser: _Parser, tok0):
    tok = parser.peek()
    if tok.kind == "name":
        if tok.text != "dim":
            raise ParseError(f"expected a range, got {tok.text!r}", tok.line, tok.col)
        parser.next()
        return _RANGE_DIM
    lo = int(parser.expect("int").text)
    parser.expect("..")
    hi = int(parser.expect("int").text)
    if lo > hi:
        raise IndexRangeError(f"empty range {lo}..{hi}", tok.line, tok.col)
    return (lo, hi)


def _parse_generator_line(parser: _Parser, role: str, nvars: int):
    name_tok = _check_name(parser.expect("name"))
    ranges = []
    metric_slots = []
    if parser.peek().kind == "[":
        parser.next()
        while True:
            r = _parse_range(parser, name_tok)
            if r is _RANGE_DIM:
                ranges.append((0, nvars - 1))
                metric_slots.append(True)
            else:
                ranges.append(r)
                metric_slots.append(False)
            if parser.peek().kind == ",":
                parser.next()
                continue
            break
        parser.expect("]")
    parity = ODD if role == GHOST else EVEN
    ghost_number = 1 if role == GHOST else 0
    while parser.peek().kind == "name":
        opt = parser.next()
        parser.expect("=")
        if opt.text == "parity":
            val = parser.expect("name")
            if val.text not in ("even", "odd"):
                raise ParseError("parity must be 'even' or 'odd'", val.line, val.col)
            parity = EVEN if val.text == "even" else ODD
        elif opt.text == "ghost":
            sign = 1
            if parser.peek().kind == "-":
                parser.next()
                sign = -1
            ghost_number = sign * int(parser.expect("int").text)
        else:
            raise ParseError(f"unknown option {opt.text!r}", opt.line, opt.col)
    tok = parser.peek()
    if tok.kind != "end":
        raise ParseError(f"unexpected trailing {tok.text!r}", tok.line, tok.col)
    return Generator(
        name_tok.text,
        role,
        tuple(ranges),
        Grading(parity, ghost_number),
        tuple(metric_slots),
    )


def _logical_lines(text: str):
    """(line_number, content) with comments stripped and backslash continuation."""
    out = []
    pending = ""
    pending_line = None
    for i, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if pending:
            line_no = pending_line
            body = pending + body
        else:
            line_no = i
        stripped = body.rstrip()
        if stripped.endswith("\\"):
            pending = stripped[:-1] + " "
            pending_line = line_no
            continue
        pending = ""
        if stripped.strip():
            out.append((line_no, stripped))
    if pending.strip():
        out.append((pending_line, pending.rstrip()))
    return out


class _ModelBuilder:
    def __init__(self):
        self.variables: List[str] = []
        self.metric: Optional[List[Fraction]] = None
        self.parameters: List[str] = []
        self.fields: List[Generator] = []
        self.ghost_specs: List[Generator] = []
        self.defs: Dict[str, DefEntry] = {}
        self.lagrangian_ast: Optional[Node] = None
        self.gauge_lines: List[tuple] = []
        self.master_ast: Optional[Node] = None
        self.signature: Optional[Signature] = None
        self.theory: Optional[Theory] = None

    def build_signature(self, line):
        if self.signature is not None:
            return
        if not self.variables:
            raise ParseError("no independent variables declared", line, 1)
        metric = self.metric if self.metric is not None else [Fraction(1)] * len(self.variables)
        if len(metric) != len(self.variables):
            raise MetricDimensionError(
                f"metric has {len(metric)} entries for {len(self.variables)} variables", line, 1
            )
        gens = [Generator(v, VAR) for v in self.variables]
        gens += [Generator(p, PARAM) for p in self.parameters]
        gens += self.fields
        try:
            self.signature = Signature(gens, metric)
        except ValueError as exc:
            raise ParseError(str(exc), line, 1) from None


def parse_model(text: str):
    """Parse a model file; returns a Theory, or a BVExtension when gauge or
    master sections are present."""
    from .bv import BVExtension, extend_to_bv

    builder = _ModelBuilder()
    seen = set()

    for line_no, content in _logical_lines(text):
        tokens = tokenize(content, line=line_no)
        head = tokens[0]
        if head.kind != "name":
            raise ParseError(f"expected a statement, got {head.text!r}", head.line, head.col)
        rest = _Parser(tokens[1:])
        keyword = head.text

        if keyword == "vars":
            if builder.signature is not None:
                raise ParseError("declarations must precede the lagrangian", head.line, head.col)
            while True:
                builder.variables.append(_check_name(rest.expect("name")).text)
                if rest.peek().kind == ",":
                    rest.next()
                    continue
                break
            rest.expect("end")
        elif keyword == "metric":
            tag = rest.expect("name")
            if tag.text != "diag":
                raise ParseError("expected 'diag(...)'", tag.line, tag.col)
            rest.expect("(")
            entries = []
            while True:
                sign = 1
                if rest.peek().kind == "-":
                    rest.next()
                    sign = -1
                num = int(rest.expect("int").text)
                den = 1
                if rest.peek().kind == "/":
                    rest.next()
                    den = int(rest.expect("int").text)
                entries.append(Fraction(sign * num, den))
                if rest.peek().kind == ",":
                    rest.next()
                    continue
                break
            rest.expect(")")
            rest.expect("end")
            builder.metric = entries
        elif keyword == "params":
            while True:
                builder.parameters.append(_check_name(rest.expect("name")).text)
                if rest.peek().kind == ",":
                    rest.next()
                    continue
                break
            rest.expect("end")
        elif keyword in ("field", "ghost"):
            if builder.signature is not None:
                raise ParseError("declarations must precede the lagrangian", head.line, head.col)
            role = FIELD if keyword == "field" else GHOST
            gen = _parse_generator_line(rest, role, len(builder.variables))
            if gen.name in seen:
                raise ParseError(f"duplicate declaration of {gen.name!r}", head.line, head.col)
            seen.add(gen.name)
            if role == FIELD:
                builder.fields.append(gen)
            else:
                builder.ghost_specs.append(gen)
        elif keyword == "def":
            name_tok = _check_name(rest.expect("name"))
            params = []
            if rest.peek().kind == "[":
                rest.next()
                while True:
                    params.append(rest.expect("name").text)
                    if rest.peek().kind == ",":
                        rest.next()
                        continue
                    break
                rest.expect("]")
            rest.expect("=")
            body = rest.parse_expr()
            rest.expect("end")
            if name_tok.text in builder.defs or name_tok.text in seen:
                raise ParseError(
                    f"duplicate declaration of {name_tok.text!r}", name_tok.line, name_tok.col
                )
            builder.defs[name_tok.text] = DefEntry(tuple(params), body)
        elif keyword == "lagrangian":
            builder.build_signature(head.line)
            builder.lagrangian_ast = rest.parse_expr()
            rest.expect("end")
        elif keyword == "gauge":
            name_tok = rest.expect("name")
            letters = []
            if rest.peek().kind == "[":
                rest.next()
                while True:
                    letters.append(rest.expect("name").text)
                    if rest.peek().kind == ",":
                        rest.next()
                        continue
                    break
                rest.expect("]")
            rest.expect(":")
            body = _Parser(rest.tokens[rest.pos :], allow_el=True).parse_full()
            builder.gauge_lines.append((name_tok, tuple(letters), body))
        elif keyword == "master":
            builder.master_ast = rest.parse_expr()
            rest.expect("end")
        else:
            raise ParseError(f"unknown statement {keyword!r}", head.line, head.col)

    if builder.lagrangian_ast is None:
        raise ParseError("model file has no lagrangian", 1, 1)
    builder.build_signature(1)
    sig = builder.signature
    expander = Expander(sig, builder.defs)
    lagrangian = expander.expression(builder.lagrangian_ast)
    theory = Theory(sig, lagrangian)
    if not builder.gauge_lines and builder.master_ast is None and not builder.ghost_specs:
        return theory

    # assemble the BV extension: gauge lines attach operators to ghost components
    ghosts = {g.name: g for g in builder.ghost_specs}
    tables: Dict[str, Dict[tuple, Dict]] = {}
    op_expander = Expander(sig, builder.defs, operator_mode=True)
    for name_tok, letters, body in builder.gauge_lines:
        ghost = ghosts.get(name_tok.text)
        if ghost is None:
            raise UndeclaredIdentifierError(
                f"gauge block names undeclared ghost {name_tok.text!r}",
                name_tok.line,
                name_tok.col,
            )
        if len(letters) != len(ghost.index_ranges):
            raise IndexRangeError(
                f"gauge header for {ghost.name!r} must bind {len(ghost.index_ranges)} letters",
                name_tok.line,
                name_tok.col,
            )
        per_comp = tables.setdefault(ghost.name, {})
        ranges = [range(lo, hi + 1) for lo, hi in ghost.index_ranges]
        for comp in itertools.product(*ranges) if ranges else [()]:
            env = dict(zip(letters, comp))
            raw = op_expander.operator_table(body, env)
            if comp in per_comp:
                raise ParseError(
                    f"gauge block for {ghost.name}{list(comp)} given twice",
                    name_tok.line,
                    name_tok.col,
                )
            per_comp[comp] = NoetherOperator(theory, raw)

    gauge = []
    for ghost in builder.ghost_specs:
        ops = tables.get(ghost.name)
        if ops is None:
            raise ParseError(f"ghost {ghost.name!r} has no gauge block", 1, 1)
        gauge.append((ghost, ops))
    bv = extend_to_bv(theory, gauge)
    if builder.master_ast is not None:
        master_expander = Expander(bv.signature, builder.defs)
        bv = bv.with_master(master_expander.expression(builder.master_ast))
    return bv
