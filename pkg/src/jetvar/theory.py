"""Theories, local functionals, symmetries, and Noether identities.

A Theory packages a signature with a Lagrangian density.  Local functionals
are densities considered modulo total divergences, which is exactly how the
Euler-Lagrange system, symmetry checks, and the evaluation pairing treat
them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Mapping, Optional, Tuple

from .core import (
    Atom,
    EVEN,
    EVEN_GRADING,
    Expression,
    FIELD,
    JET_ROLES,
    Monomial,
    ODD,
    PARAM,
    Signature,
    VAR,
    grading_of,
    invert_monomial,
    is_homogeneous_of,
    partial_derivative,
    substitute,
)
from . import jetcalc
from .errors import (
    GeneratorMismatchError,
    GradingViolationError,
    MissingCharacteristicError,
    NonzeroGhostNumberError,
    NotSolvableError,
    OddDensityError,
    RewriteBudgetError,
    UnboundParameterError,
    UnknownGeneratorError,
    ZeroExpressionGradingError,
)

Component = Tuple[str, tuple]


class Theory:
    """Independent variables with a metric, generators, and a Lagrangian."""

    __slots__ = ("signature", "lagrangian")

    def __init__(self, signature: Signature, lagrangian: Expression):
        if lagrangian.sig != signature:
            raise GeneratorMismatchError("lagrangian does not belong to this signature")
        if not is_homogeneous_of(lagrangian, EVEN_GRADING):
            raise GradingViolationError(
                "the lagrangian must be even with ghost number 0 and antifield number 0"
            )
        self.signature = signature
        self.lagrangian = lagrangian

    def __eq__(self, other):
        return (
            isinstance(other, Theory)
            and self.signature == other.signature
            and self.lagrangian == other.lagrangian
        )

    def __hash__(self):
        return hash((self.signature, self.lagrangian))

    # -- enumeration ----------------------------------------------------------

    def components(self, roles=JET_ROLES):
        out = []
        for _, gen in self.signature.jet_generators():
            if gen.role in roles:
                out.extend((gen.name, comp) for comp in gen.components())
        return out

    def field_components(self):
        return self.components(roles=(FIELD,))

    # -- conveniences -----------------------------------------------------------

    def parse(self, text: str) -> Expression:
        from .parser import parse_expression

        return parse_expression(text, self)

    def density(self, expr) -> "Density":
        if isinstance(expr, str):
            expr = self.parse(expr)
        return Density(self, expr)

    def functional(self, expr) -> "LocalFunctional":
        return LocalFunctional(self.density(expr))


class Density:
    """An expression regarded as the integrand of a local functional."""

    __slots__ = ("theory", "expr")

    def __init__(self, theory: Theory, expr: Expression):
        if expr.sig != theory.signature:
            raise GeneratorMismatchError("density expression uses a different generator set")
        self.theory = theory
        self.expr = expr

    def __eq__(self, other):
        return (
            isinstance(other, Density)
            and self.theory == other.theory
            and self.expr == other.expr
        )

    def __hash__(self):
        return hash(self.expr)

    def __repr__(self):
        return f"<Density {self.expr!r}>"


class LocalFunctional:
    """A density modulo total divergences; equality is integration by parts."""

    __slots__ = ("density",)

    def __init__(self, density: Density):
        self.density = density

    @property
    def theory(self) -> Theory:
        return self.density.theory

    @property
    def expr(self) -> Expression:
        return self.density.expr

    def __eq__(self, other):
        if not isinstance(other, LocalFunctional):
            return NotImplemented
        if self.theory.signature != other.theory.signature:
            raise GeneratorMismatchError("functionals over different theories")
        return jetcalc.ibp_equal(self.expr, other.expr)

    __hash__ = None

    def __repr__(self):
        return f"<LocalFunctional {self.expr!r}>"


@dataclass
class EvolutionaryVF:
    """An evolutionary vector field given by one characteristic per field component.

    The characteristics may carry a uniform grading shift relative to their
    fields (ghost-parameterized gauge transformations); the shift is inferred
    and recorded at construction.
    """

    theory: Theory
    characteristics: Dict[Component, Expression]
    shift: tuple = field(init=False)

    def __post_init__(self):
        sig = self.theory.signature
        chars = {}
        for (name, comp), q in self.characteristics.items():
            sig.atom(name, comp)  # validates the component
            if sig.generator(name).role != FIELD:
                raise UnknownGeneratorError(f"{name!r} is not a field")
            if q.sig != sig:
                raise GeneratorMismatchError("characteristic uses a different generator set")
            chars[(name, tuple(comp))] = q
        for name, comp in self.theory.field_components():
            if (name, comp) not in chars:
                raise MissingCharacteristicError(
                    f"no characteristic for field component {name}{list(comp)}"
                )
        self.characteristics = chars
        shift = None
        for (name, comp), q in chars.items():
            if q.is_zero():
                continue
            base = sig.generator(name).grading
            try:
                got = grading_of(q)
            except ZeroExpressionGradingError:  # pragma: no cover - zero handled above
                continue
            this = (
                (got.parity - base.parity) % 2,
                got.ghost - base.ghost,
                got.antifield - base.antifield,
            )
            if shift is None:
                shift = this
            elif shift != this:
                raise GradingViolationError(
                    "characteristics do not share a uniform grading shift"
                )
        self.shift = shift if shift is not None else (0, 0, 0)


@dataclass
class NoetherOperator:
    """A linear differential operator to be paired against the EL system.

    ``coefficients`` maps a field component to a finite mapping from
    derivative multi-indices to coefficient expressions.
    """

    theory: Theory
    coefficients: Dict[Component, Dict[tuple, Expression]]

    def __post_init__(self):
        sig = self.theory.signature
        clean = {}
        for (name, comp), table in self.coefficients.items():
            sig.atom(name, comp)
            if sig.generator(name).role != FIELD:
                raise UnknownGeneratorError(f"{name!r} is not a field")
            entry = {}
            for mindex, coeff in table.items():
                mindex = tuple(mindex)
                if len(mindex) != sig.nvars or any(k < 0 for k in mindex):
                    raise UnknownGeneratorError(f"bad multi-index {mindex}")
                if coeff.sig != sig:
                    raise GeneratorMismatchError("coefficient uses a different generator set")
                if coeff:
                    entry[mindex] = coeff
            if entry:
                clean[(name, tuple(comp))] = entry
        self.coefficients = clean


@dataclass
class Section:
    """Polynomial field values in the base variables and parameters."""

    theory: Theory
    values: Dict[Component, Expression]

    def __post_init__(self):
        sig = self.theory.signature
        clean = {}
        for (name, comp), poly in self.values.items():
            sig.atom(name, comp)
            gen = sig.generator(name)
            if gen.role != FIELD:
                raise UnknownGeneratorError(f"{name!r} is not a field")
            if poly.sig != sig:
                raise GeneratorMismatchError("section value uses a different generator set")
            for a in poly.atoms():
                if sig.generators[a.gen].role not in (VAR, PARAM):
                    raise GradingViolationError(
                        "section values must be polynomials in variables and parameters"
                    )
            if gen.grading.parity == ODD and poly:
                raise GradingViolationError(
                    f"odd field {name!r} admits only the zero numeric section"
                )
            clean[(name, tuple(comp))] = poly
        self.values = clean

    def value(self, name: str, comp: tuple) -> Expression:
        try:
            return self.values[(name, tuple(comp))]
        except KeyError:
            raise MissingCharacteristicError(
                f"section does not assign field component {name}{list(comp)}"
            ) from None


# ---------------------------------------------------------------------------
# operations


def euler_lagrange_system(theory: Theory) -> Dict[Component, Expression]:
    """The full EL system: generators of the Euler-Lagrange ideal."""
    return {
        (name, comp): jetcalc.variational_derivative(theory.lagrangian, name, comp)
        for name, comp in theory.field_components()
    }


def is_symmetry(theory: Theory, vf: EvolutionaryVF) -> bool:
    """True iff the prolonged vector field moves the Lagrangian by a divergence."""
    if vf.theory.signature != theory.signature:
        raise GeneratorMismatchError("vector field belongs to a different theory")
    moved = jetcalc.prolong_apply(vf.characteristics, theory.lagrangian)
    return jetcalc.is_total_divergence(moved)


def noether_residual(theory: Theory, op: NoetherOperator) -> Expression:
    """Pair the operator against the EL system; zero residual = Noether identity."""
    if op.theory.signature != theory.signature:
        raise GeneratorMismatchError("operator belongs to a different theory")
    el = euler_lagrange_system(theory)
    result = theory.signature.zero()
    for key, table in op.coefficients.items():
        base = el[key]
        if base.is_zero():
            continue
        for mindex, coeff in table.items():
            result = result + coeff * jetcalc.apply_multi_derivative(base, mindex)
    return result


def is_noether_identity(theory: Theory, op: NoetherOperator) -> bool:
    return noether_residual(theory, op).is_zero()


# -- on-shell reduction -------------------------------------------------------


def _lead_key(atom: Atom):
    # derivative order dominates so the rewrite points from higher jets downward
    return (atom.order, atom.gen, atom.comp, atom.mindex)


def _solve_for_leading(name: str, comp: tuple, el: Expression):
    """Orient EL = 0 as leading-coordinate -> lower terms; error if nonlinear."""
    sig = el.sig
    lead = max(el.jet_atoms(), key=_lead_key, default=None)
    if lead is None:
        raise NotSolvableError(
            f"EL for {name}{list(comp)} contains no jet coordinate to solve for"
        )
    coeff = partial_derivative(el, lead, "left")
    if lead in coeff.atoms():
        raise NotSolvableError(f"EL for {name}{list(comp)} is nonlinear in its leading coordinate")
    try:
        inv = invert_monomial(coeff)
    except GradingViolationError:
        raise NotSolvableError(
            f"leading coefficient of EL for {name}{list(comp)} is not an invertible parameter monomial"
        ) from None
    rest = el - coeff * sig.from_atom(lead)
    return lead, -(inv * rest)


def _all_mindices(nvars: int, max_total: int):
    if nvars == 0:
        yield ()
        return

    def rec(prefix, remaining, slots):
        if slots == 1:
            for k in range(remaining + 1):
                yield prefix + (k,)
            return
        for k in range(remaining + 1):
            yield from rec(prefix + (k,), remaining - k, slots - 1)

    yield from rec((), max_total, nvars)


def on_shell_reduce(
    e: Expression, theory: Theory, max_order: int, budget: int = 10_000
) -> Expression:
    """Canonical representative of ``e`` modulo the EL ideal truncated at ``max_order``.

    The EL relations are oriented highest-coordinate to lower terms, prolonged
    up to ``max_order``, and applied until a fixed point; a budget guards
    against non-terminating orientations.
    """
    sig = theory.signature
    if e.sig != sig:
        raise GeneratorMismatchError("expression belongs to a different theory")
    rules: Dict[Atom, Expression] = {}
    for (name, comp), el in sorted(euler_lagrange_system(theory).items()):
        if el.is_zero():
            continue
        lead, rhs = _solve_for_leading(name, comp, el)
        for mindex in _all_mindices(sig.nvars, max(0, max_order - lead.order)):
            shifted = Atom(lead.gen, lead.comp, tuple(a + b for a, b in zip(lead.mindex, mindex)))
            if shifted not in rules:
                rules[shifted] = jetcalc.apply_multi_derivative(rhs, mindex)
    steps = 0
    while True:
        hits = [a for a in e.jet_atoms() if a in rules]
        if not hits:
            return e
        if steps >= budget:
            raise RewriteBudgetError(
                f"on-shell reduction did not terminate within {budget} steps"
            )
        target = max(hits, key=_lead_key)
        e = substitute(e, {target: rules[target]})
        steps += 1


# -- exact evaluation -----------------------------------------------------------


def _check_evaluable(expr: Expression):
    if expr.is_zero():
        return
    g = grading_of(expr)
    if g.parity != EVEN:
        raise OddDensityError("cannot integrate an odd density")
    if g.ghost != 0 or g.antifield != 0:
        raise NonzeroGhostNumberError("cannot integrate a density of nonzero ghost number")


def evaluate_density(density_expr: Expression, section: Section) -> Expression:
    """Substitute the jets of a section into a density."""
    sig = density_expr.sig
    bindings = {}
    for atom in density_expr.jet_atoms():
        gen = sig.generators[atom.gen]
        if gen.role != FIELD:
            raise UnknownGeneratorError(
                f"cannot evaluate {gen.role} coordinate {gen.name!r} on a section"
            )
        poly = section.value(gen.name, atom.comp)
        bindings[atom] = jetcalc.apply_multi_derivative(poly, atom.mindex)
    return substitute(density_expr, bindings)


def integrate_box_polynomial(expr: Expression, box: Mapping[str, tuple]) -> Expression:
    """Integrate a jet-free polynomial over a rational box, variable by variable."""
    sig = expr.sig
    spans = {}
    for var in sig.variables:
        if var.name not in box:
            raise UnknownGeneratorError(f"box does not bound variable {var.name!r}")
        lo, hi = box[var.name]
        spans[sig.generator_id(var.name)] = (Fraction(lo), Fraction(hi))
    out = []
    for m in expr.terms:
        if m.odd:
            raise OddDensityError("cannot integrate an odd integrand")
        coeff = m.coeff
        kept = []
        seen = set()
        for atom, exp in m.even:
            gid = atom.gen
            if gid in spans:
                lo, hi = spans[gid]
                coeff *= (hi ** (exp + 1) - lo ** (exp + 1)) / (exp + 1)
                seen.add(gid)
            else:
                if sig.generators[gid].role != PARAM:
                    raise UnknownGeneratorError(
                        f"integrand still contains jet coordinate {sig.generators[gid].name!r}"
                    )
                kept.append((atom, exp))
        for gid, (lo, hi) in spans.items():
            if gid not in seen:
                coeff *= hi - lo
        out.append(Monomial(coeff, tuple(kept), ()))
    return Expression.from_terms(sig, out)


def integrate_on_box_expression(
    functional, section: Section, box: Mapping[str, tuple]
) -> Expression:
    """Exact value of a functional on a section, symbolic in the parameters."""
    expr = functional.expr if isinstance(functional, (LocalFunctional, Density)) else functional
    _check_evaluable(expr)
    return integrate_box_polynomial(evaluate_density(expr, section), box)


def integrate_on_box(
    functional,
    section: Section,
    box: Mapping[str, tuple],
    params: Optional[Mapping[str, Fraction]] = None,
) -> Fraction:
    """Exact rational value of a functional on a polynomial section over a box."""
    value = integrate_on_box_expression(functional, section, box)
    if params:
        sig = value.sig
        bindings = {}
        for name, v in params.items():
            gid = sig.generator_id(name)
            if sig.generators[gid].role != PARAM:
                raise UnknownGeneratorError(f"{name!r} is not a parameter")
            bindings[Atom(gid, (), (0,) * sig.nvars)] = sig.const(Fraction(v))
        value = substitute(value, bindings)
    try:
        return value.constant_value()
    except UnknownGeneratorError:
        raise UnboundParameterError(
            "the value still depends on parameters; bind them via 'params'"
        ) from None
