"""Graded commutative differential polynomial expressions with exact coefficients.

Everything downstream (total derivatives, Euler-Lagrange systems, the
antibracket) reduces to arithmetic in one structure: a free graded-commutative
algebra over the rationals whose atoms are jet coordinates ``u^a_alpha``,
independent variables, and parameters.  Expressions are kept in a unique
canonical normal form, so equality and zero-recognition are exact, and every
Koszul sign is produced by one mechanism: counting odd transpositions while
sorting odd factors into the canonical atom order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

from .errors import (
    GeneratorMismatchError,
    GradingViolationError,
    InhomogeneousExpressionError,
    UnknownGeneratorError,
    ZeroExpressionGradingError,
)

EVEN = 0
ODD = 1

# generator roles
VAR = "independent-variable"
PARAM = "parameter"
FIELD = "field"
GHOST = "ghost"
ANTIFIELD = "antifield"

JET_ROLES = (FIELD, GHOST, ANTIFIELD)

Rat = Union[int, Fraction]


@dataclass(frozen=True)
class Grading:
    """Parity, ghost number, and antifield number of a homogeneous element."""

    parity: int
    ghost: int = 0
    antifield: int = 0

    def __post_init__(self):
        if self.parity not in (EVEN, ODD):
            raise ValueError(f"parity must be 0 (even) or 1 (odd), got {self.parity}")
        if self.antifield < 0:
            raise ValueError("antifield number must be nonnegative")

    def __add__(self, other: "Grading") -> "Grading":
        return Grading(
            (self.parity + other.parity) % 2,
            self.ghost + other.ghost,
            self.antifield + other.antifield,
        )

    def __str__(self):
        p = "odd" if self.parity else "even"
        return f"({p}, gh={self.ghost}, afn={self.antifield})"


EVEN_GRADING = Grading(EVEN, 0, 0)


@dataclass(frozen=True)
class Generator:
    """A declared symbol family: variable, parameter, field, ghost, or antifield.

    ``index_ranges`` are inclusive ``(lo, hi)`` pairs, one per component slot.
    ``metric_slots`` marks which slots are spacetime-valued and therefore
    contract with the metric in the frontend; the kernel ignores it.
    """

    name: str
    role: str
    index_ranges: tuple = ()
    grading: Grading = EVEN_GRADING
    metric_slots: tuple = ()

    def __post_init__(self):
        if self.role not in (VAR, PARAM, FIELD, GHOST, ANTIFIELD):
            raise ValueError(f"unknown generator role {self.role!r}")
        if self.role in (VAR, PARAM):
            if self.grading != EVEN_GRADING:
                raise ValueError(f"{self.role} {self.name!r} must be even with ghost number 0")
            if self.index_ranges:
                raise ValueError(f"{self.role} {self.name!r} cannot carry index ranges")
        if self.role == GHOST and self.grading.ghost < 1:
            raise ValueError(f"ghost {self.name!r} must have ghost number >= 1")
        if self.role == ANTIFIELD and self.grading.ghost > -1:
            raise ValueError(f"antifield {self.name!r} must have ghost number <= -1")
        if self.role in (VAR, PARAM, FIELD, GHOST) and self.grading.antifield != 0:
            raise ValueError(f"{self.role} {self.name!r} must have antifield number 0")
        for lo, hi in self.index_ranges:
            if lo > hi:
                raise ValueError(f"empty index range {lo}..{hi} on {self.name!r}")

    def components(self):
        """Iterate all component tuples of this generator."""
        tuples = [()]
        for lo, hi in self.index_ranges:
            tuples = [t + (i,) for t in tuples for i in range(lo, hi + 1)]
        return tuples


class Atom(NamedTuple):
    """One multiplicative symbol: a jet coordinate, variable, or parameter.

    ``gen`` is the generator's position in the signature, ``comp`` the
    component tuple, and ``mindex`` the per-variable derivative counts
    (symmetrized by representation, so D_i D_j = D_j D_i holds for free).
    """

    gen: int
    comp: tuple
    mindex: tuple

    @property
    def order(self) -> int:
        return sum(self.mindex)

    def key(self):
        """Canonical sort key: declaration order, component, total order, counts."""
        return (self.gen, self.comp, sum(self.mindex), self.mindex)


class Monomial(NamedTuple):
    """coefficient * product of even factors * ordered product of odd factors."""

    coeff: Fraction
    even: tuple  # ((Atom, exponent), ...) sorted by atom key
    odd: tuple  # (Atom, ...) sorted by atom key, distinct


class Signature:
    """An ordered set of generators with a constant diagonal metric.

    The declaration order fixes the canonical order of atoms and hence all
    normal forms and Koszul signs.  Signatures compare structurally, so two
    independently parsed copies of the same model are compatible.
    """

    __slots__ = ("generators", "metric", "_by_name", "_var_ids", "_key")

    def __init__(self, generators: Sequence[Generator], metric: Sequence[Rat]):
        self.generators = tuple(generators)
        self.metric = tuple(Fraction(m) for m in metric)
        self._by_name = {}
        for i, g in enumerate(self.generators):
            if g.name in self._by_name:
                raise ValueError(f"duplicate generator name {g.name!r}")
            self._by_name[g.name] = i
        self._var_ids = tuple(i for i, g in enumerate(self.generators) if g.role == VAR)
        if len(self.metric) != len(self._var_ids):
            raise ValueError("metric dimension must equal the number of independent variables")
        if any(m == 0 for m in self.metric):
            raise ValueError("metric diagonal entries must be nonzero")
        self._key = (
            self.generators,
            self.metric,
        )

    # -- structural identity ------------------------------------------------

    def __eq__(self, other):
        return isinstance(other, Signature) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    # -- lookups -------------------------------------------------------------

    @property
    def nvars(self) -> int:
        return len(self._var_ids)

    @property
    def variables(self) -> tuple:
        return tuple(self.generators[i] for i in self._var_ids)

    def var_position(self, name: str) -> int:
        """Position of an independent variable among the declared variables."""
        gid = self._by_name.get(name)
        if gid is None or self.generators[gid].role != VAR:
            raise UnknownGeneratorError(f"unknown independent variable {name!r}")
        return self._var_ids.index(gid)

    def var_generator_id(self, pos: int) -> int:
        return self._var_ids[pos]

    def generator_id(self, name: str) -> int:
        gid = self._by_name.get(name)
        if gid is None:
            raise UnknownGeneratorError(f"unknown generator {name!r}")
        return gid

    def generator(self, name: str) -> Generator:
        return self.generators[self.generator_id(name)]

    def has_generator(self, name: str) -> bool:
        return name in self._by_name

    def jet_generators(self):
        """(id, Generator) pairs for every field, ghost, and antifield."""
        return [(i, g) for i, g in enumerate(self.generators) if g.role in JET_ROLES]

    # -- atom and expression construction -------------------------------------

    def atom(self, name: str, comp: Sequence[int] = (), mindex: Sequence[int] = None) -> Atom:
        gid = self.generator_id(name)
        gen = self.generators[gid]
        comp = tuple(comp)
        if len(comp) != len(gen.index_ranges):
            raise UnknownGeneratorError(
                f"{name!r} takes {len(gen.index_ranges)} component indices, got {len(comp)}"
            )
        for c, (lo, hi) in zip(comp, gen.index_ranges):
            if not lo <= c <= hi:
                raise UnknownGeneratorError(f"component {c} of {name!r} outside {lo}..{hi}")
        if mindex is None:
            mindex = (0,) * self.nvars
        else:
            mindex = tuple(mindex)
            if len(mindex) != self.nvars or any(k < 0 for k in mindex):
                raise UnknownGeneratorError(f"bad derivative multi-index {mindex} for {name!r}")
        if gen.role not in JET_ROLES and any(mindex):
            raise UnknownGeneratorError(f"{gen.role} {name!r} cannot carry derivatives")
        return Atom(gid, comp, mindex)

    def coord(self, name: str, comp: Sequence[int] = (), d: Sequence[str] = ()) -> "Expression":
        """Expression consisting of one atom; ``d`` lists variable names to derive by."""
        mindex = [0] * self.nvars
        for v in d:
            mindex[self.var_position(v)] += 1
        return self.from_atom(self.atom(name, comp, mindex))

    def from_atom(self, atom: Atom) -> "Expression":
        parity = self.generators[atom.gen].grading.parity
        if parity == ODD:
            mono = Monomial(Fraction(1), (), (atom,))
        else:
            mono = Monomial(Fraction(1), ((atom, 1),), ())
        return Expression(self, (mono,))

    def const(self, value: Rat) -> "Expression":
        value = Fraction(value)
        if value == 0:
            return Expression(self, ())
        return Expression(self, (Monomial(value, (), ()),))

    def zero(self) -> "Expression":
        return Expression(self, ())

    def one(self) -> "Expression":
        return self.const(1)

    def atom_grading(self, atom: Atom) -> Grading:
        return self.generators[atom.gen].grading

    def shift_atom(self, atom: Atom, var_pos: int) -> Atom:
        """Raise the derivative count of ``atom`` in the ``var_pos``-th variable."""
        m = list(atom.mindex)
        m[var_pos] += 1
        return Atom(atom.gen, atom.comp, tuple(m))


# ---------------------------------------------------------------------------
# normalization helpers


def _merge_even(e1: tuple, e2: tuple):
    """Merge two sorted even-factor lists, adding exponents."""
    out = []
    i = j = 0
    n1, n2 = len(e1), len(e2)
    while i < n1 and j < n2:
        a1, x1 = e1[i]
        a2, x2 = e2[j]
        k1, k2 = a1.key(), a2.key()
        if k1 == k2:
            x = x1 + x2
            if x != 0:
                out.append((a1, x))
            i += 1
            j += 1
        elif k1 < k2:
            out.append(e1[i])
            i += 1
        else:
            out.append(e2[j])
            j += 1
    out.extend(e1[i:])
    out.extend(e2[j:])
    return tuple(out)


def _merge_odd(o1: tuple, o2: tuple):
    """Merge sorted odd-factor tuples; returns (merged, sign) or (None, 0) if a square occurs."""
    if not o1:
        return o2, 1
    if not o2:
        return o1, 1
    out = []
    i = j = 0
    n1, n2 = len(o1), len(o2)
    inversions = 0
    while i < n1 and j < n2:
        k1, k2 = o1[i].key(), o2[j].key()
        if k1 == k2:
            return None, 0
        if k1 < k2:
            out.append(o1[i])
            i += 1
        else:
            # o2[j] jumps over the n1-i remaining odd factors of o1
            inversions += n1 - i
            out.append(o2[j])
            j += 1
    out.extend(o1[i:])
    out.extend(o2[j:])
    return tuple(out), (-1 if inversions % 2 else 1)


def _mul_monomials(m1: Monomial, m2: Monomial):
    odd, sign = _merge_odd(m1.odd, m2.odd)
    if odd is None:
        return None
    return Monomial(m1.coeff * m2.coeff * sign, _merge_even(m1.even, m2.even), odd)


def _term_key(mono: Monomial):
    return (
        tuple((a.key(), x) for a, x in mono.even),
        tuple(a.key() for a in mono.odd),
    )


class Expression:
    """A normal-form sum of monomials over a fixed signature.

    Instances are immutable; all arithmetic returns new normalized values.
    Two expressions are equal iff their signatures and term lists coincide.
    """

    __slots__ = ("sig", "terms")

    def __init__(self, sig: Signature, terms: tuple):
        object.__setattr__(self, "sig", sig)
        object.__setattr__(self, "terms", terms)

    def __setattr__(self, *args):
        raise AttributeError("Expression is immutable")

    # -- construction ---------------------------------------------------------

    @staticmethod
    def from_terms(sig: Signature, monomials: Iterable[Monomial]) -> "Expression":
        acc = {}
        for m in monomials:
            if m is None or m.coeff == 0:
                continue
            key = (m.even, m.odd)
            c = acc.get(key)
            acc[key] = m.coeff if c is None else c + m.coeff
        return Expression._from_map(sig, acc)

    @staticmethod
    def _from_map(sig: Signature, acc: dict) -> "Expression":
        terms = [
            Monomial(c, even, odd) for (even, odd), c in acc.items() if c != 0
        ]
        terms.sort(key=_term_key)
        return Expression(sig, tuple(terms))

    # -- basic predicates ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.sig.const(other)
        if not isinstance(other, Expression):
            return NotImplemented
        return self.sig == other.sig and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    # -- arithmetic -------------------------------------------------------------

    def _coerce(self, other) -> "Expression":
        if isinstance(other, (int, Fraction)):
            return self.sig.const(other)
        if not isinstance(other, Expression):
            raise TypeError(f"cannot combine Expression with {type(other).__name__}")
        if other.sig != self.sig:
            raise GeneratorMismatchError("expressions belong to different theories")
        return other

    def __add__(self, other):
        other = self._coerce(other)
        acc = {}
        for m in self.terms:
            acc[(m.even, m.odd)] = m.coeff
        for m in other.terms:
            key = (m.even, m.odd)
            c = acc.get(key)
            acc[key] = m.coeff if c is None else c + m.coeff
        return Expression._from_map(self.sig, acc)

    __radd__ = __add__

    def __neg__(self):
        return Expression(
            self.sig, tuple(Monomial(-m.coeff, m.even, m.odd) for m in self.terms)
        )

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            if c == 0:
                return self.sig.zero()
            return Expression(
                self.sig, tuple(Monomial(m.coeff * c, m.even, m.odd) for m in self.terms)
            )
        other = self._coerce(other)
        acc = {}
        for m1 in self.terms:
            for m2 in other.terms:
                m = _mul_monomials(m1, m2)
                if m is None:
                    continue
                key = (m.even, m.odd)
                c = acc.get(key)
                acc[key] = m.coeff if c is None else c + m.coeff
        return Expression._from_map(self.sig, acc)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return self._coerce(other) * self

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponents must be nonnegative integers")
        result = self.sig.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and other != 0:
            return self * (Fraction(1) / Fraction(other))
        raise TypeError("division is only defined by nonzero rationals")

    # -- structure access ----------------------------------------------------------

    def atoms(self) -> set:
        """All distinct atoms occurring in the expression."""
        out = set()
        for m in self.terms:
            out.update(a for a, _ in m.even)
            out.update(m.odd)
        return out

    def jet_atoms(self) -> set:
        gens = self.sig.generators
        return {a for a in self.atoms() if gens[a.gen].role in JET_ROLES}

    def max_jet_order(self) -> int:
        orders = [a.order for a in self.jet_atoms()]
        return max(orders, default=0)

    def constant_value(self) -> Fraction:
        """The value of a constant expression, else UnknownGeneratorError."""
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1 and not self.terms[0].even and not self.terms[0].odd:
            return self.terms[0].coeff
        raise UnknownGeneratorError("expression is not a rational constant")

    def monomial_grading(self, mono: Monomial) -> Grading:
        gens = self.sig.generators
        parity = len(mono.odd) % 2
        ghost = 0
        afn = 0
        for a, x in mono.even:
            g = gens[a.gen].grading
            ghost += g.ghost * x
            afn += g.antifield * x
        for a in mono.odd:
            g = gens[a.gen].grading
            ghost += g.ghost
            afn += g.antifield
        return Grading(parity, ghost, afn)

    def __repr__(self):
        from .printer import format_expression

        return f"<Expression {format_expression(self)}>"


# ---------------------------------------------------------------------------
# public operations


def add(a: Expression, b: Expression) -> Expression:
    """Normalized sum of two expressions over the same theory."""
    return a + b


def mul(a: Expression, b: Expression) -> Expression:
    """Graded-commutative product; Koszul signs from canonical odd sorting."""
    return a * b


def partial_derivative(e: Expression, c: Atom, side: str = "left") -> Expression:
    """Graded partial derivative of ``e`` with respect to the atom ``c``.

    For an odd ``c``, side="left" picks up one sign per odd factor standing to
    the left of ``c``; side="right" counts odd factors to the right instead.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    sig = e.sig
    parity = sig.atom_grading(c).parity
    out = []
    if parity == EVEN:
        for m in e.terms:
            for idx, (a, x) in enumerate(m.even):
                if a == c:
                    rest = m.even[:idx] + ((a, x - 1),) if x != 1 else m.even[:idx]
                    rest += m.even[idx + 1:]
                    out.append(Monomial(m.coeff * x, rest, m.odd))
                    break
    else:
        for m in e.terms:
            for j, a in enumerate(m.odd):
                if a == c:
                    exposed = j if side == "left" else len(m.odd) - 1 - j
                    sign = -1 if exposed % 2 else 1
                    out.append(Monomial(m.coeff * sign, m.even, m.odd[:j] + m.odd[j + 1:]))
                    break
    return Expression.from_terms(sig, out)


def grading_of(e: Expression) -> Grading:
    """Common grading of all terms; errors on zero or mixed expressions."""
    if e.is_zero():
        raise ZeroExpressionGradingError("the zero expression has no definite grading")
    gradings = {e.monomial_grading(m) for m in e.terms}
    if len(gradings) > 1:
        raise InhomogeneousExpressionError(sorted(gradings, key=str))
    return gradings.pop()


def is_homogeneous_of(e: Expression, grading: Grading) -> bool:
    """True when every term of ``e`` has the given grading (zero passes any)."""
    return all(e.monomial_grading(m) == grading for m in e.terms)


def homogeneous_components(e: Expression) -> dict:
    """Split an expression into its graded-homogeneous parts, keyed by grading."""
    buckets = {}
    for m in e.terms:
        buckets.setdefault(e.monomial_grading(m), []).append(m)
    return {g: Expression(e.sig, tuple(monos)) for g, monos in buckets.items()}


def parity_ghost_of(e: Expression):
    """Common (parity, ghost number) of all terms, ignoring antifield number.

    BV master actions are homogeneous in parity and ghost number but mix
    antifield numbers, so this is the homogeneity the antibracket demands.
    """
    if e.is_zero():
        raise ZeroExpressionGradingError("the zero expression has no definite grading")
    seen = set()
    for m in e.terms:
        g = e.monomial_grading(m)
        seen.add((g.parity, g.ghost))
    if len(seen) > 1:
        raise InhomogeneousExpressionError(
            sorted((Grading(p, gh) for p, gh in seen), key=str)
        )
    return seen.pop()


def substitute(e: Expression, bindings: Mapping[Atom, Expression]) -> Expression:
    """Simultaneous substitution of atoms by equally-graded expressions."""
    sig = e.sig
    for atom, repl in bindings.items():
        repl = e._coerce(repl)
        want = sig.atom_grading(atom)
        if not is_homogeneous_of(repl, want):
            raise GradingViolationError(
                f"replacement for atom of grading {want} is not homogeneous of that grading"
            )
    result = sig.zero()
    for m in e.terms:
        acc = sig.const(m.coeff)
        for a, x in m.even:
            if x < 0:
                if a in bindings:
                    raise GradingViolationError(
                        "cannot substitute a parameter occurring with a negative exponent"
                    )
                acc = acc * _param_power(sig, a, x)
                continue
            repl = bindings.get(a)
            if repl is None:
                repl = sig.from_atom(a)
            acc = acc * repl ** x
            if acc.is_zero():
                break
        else:
            for a in m.odd:
                repl = bindings.get(a)
                if repl is None:
                    repl = sig.from_atom(a)
                acc = acc * repl
                if acc.is_zero():
                    break
        result = result + acc
    return result


def _param_power(sig: Signature, atom: Atom, exponent: int) -> Expression:
    """Laurent monomial in a parameter (negative exponents arise on-shell only)."""
    if sig.generators[atom.gen].role != PARAM:
        raise GradingViolationError("negative exponents are reserved for parameters")
    return Expression(sig, (Monomial(Fraction(1), ((atom, exponent),), ()),))


def invert_monomial(e: Expression) -> Expression:
    """Inverse of a single monomial whose atoms are all parameters."""
    if len(e.terms) != 1 or e.terms[0].odd:
        raise GradingViolationError("only parameter monomials are invertible")
    m = e.terms[0]
    sig = e.sig
    for a, _ in m.even:
        if sig.generators[a.gen].role != PARAM:
            raise GradingViolationError("only parameter monomials are invertible")
    even = tuple((a, -x) for a, x in m.even)
    return Expression(sig, (Monomial(Fraction(1) / m.coeff, even, ()),))
