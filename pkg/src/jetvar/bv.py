"""Field-antifield extension, the antibracket, and the master equation.

The extension appends one ghost per gauge generator and one antifield per
field and ghost component.  The single normative grading convention: a
generator of grading (p, g, 0) gets an antifield of grading
(p+1 mod 2, -g-1, afn) with afn = 1 for fields and afn = 2 for ghosts.

The antibracket is realized on densities through left/right variational
derivatives,

    (F, G) = sum over generator pairs of
             dR F/dPhi * dL G/dPhi*  -  dR F/dPhi* * dL G/dPhi,

which satisfies the bracket identities up to total divergences, i.e. as
local functionals; that is also where the master equation is tested.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .core import (
    ANTIFIELD,
    Atom,
    EVEN,
    Expression,
    FIELD,
    GHOST,
    Generator,
    Grading,
    Signature,
    parity_ghost_of,
    partial_derivative,
)
from . import jetcalc
from .errors import (
    DuplicateGhostNameError,
    GeneratorMismatchError,
    GradingViolationError,
    NotAnIdentityError,
    UnknownGeneratorError,
)
from .theory import (
    Component,
    Density,
    LocalFunctional,
    NoetherOperator,
    Theory,
    euler_lagrange_system,
    noether_residual,
    on_shell_reduce,
)


def antifield_name(name: str) -> str:
    return name + "*"


def antifield_grading(g: Grading, role: str) -> Grading:
    afn = 1 if role == FIELD else 2
    return Grading((g.parity + 1) % 2, -g.ghost - 1, afn)


def _transfer(e: Expression, sig: Signature) -> Expression:
    """Reinterpret an expression over a signature that extends its own."""
    if e.sig == sig:
        return e
    n = len(e.sig.generators)
    if sig.generators[:n] != e.sig.generators or sig.metric != e.sig.metric:
        raise GeneratorMismatchError("expression does not embed into the extended theory")
    return Expression(sig, e.terms)


@dataclass(frozen=True)
class GaugePair:
    """A ghost together with the Noether identities it resolves, per component."""

    ghost: Generator
    operators: Dict[tuple, NoetherOperator]


class BVExtension:
    """A theory extended by ghosts and antifields, with a candidate master action."""

    __slots__ = ("base", "theory", "gauge", "master_action")

    def __init__(self, base: Theory, theory: Theory, gauge: Tuple[GaugePair, ...],
                 master_action: LocalFunctional):
        self.base = base
        self.theory = theory
        self.gauge = gauge
        self.master_action = master_action

    # -- structure ---------------------------------------------------------

    @property
    def signature(self) -> Signature:
        return self.theory.signature

    def pairs(self) -> List[Tuple[Component, Component]]:
        """(generator component, antifield component) for every field and ghost."""
        out = []
        for _, gen in self.signature.jet_generators():
            if gen.role in (FIELD, GHOST):
                star = antifield_name(gen.name)
                out.extend(((gen.name, c), (star, c)) for c in gen.components())
        return out

    def generator_expressions(self) -> Dict[Component, Expression]:
        """Every field, ghost, and antifield component as an expression."""
        sig = self.signature
        out = {}
        for _, gen in sig.jet_generators():
            for comp in gen.components():
                out[(gen.name, comp)] = sig.from_atom(sig.atom(gen.name, comp))
        return out

    def with_master(self, density) -> "BVExtension":
        """Replace the candidate master action, revalidating the invariants."""
        if isinstance(density, str):
            density = self.theory.parse(density)
        if isinstance(density, (LocalFunctional, Density)):
            density = density.expr
        density = _transfer(density, self.signature)
        if density and parity_ghost_of(density) != (EVEN, 0):
            raise GradingViolationError("the master action must be even of ghost number 0")
        if antifield_component(density, 0) != _transfer(self.base.lagrangian, self.signature):
            raise GradingViolationError(
                "the antifield-number-0 part of the master action must equal the lagrangian"
            )
        functional = LocalFunctional(Density(self.theory, density))
        return BVExtension(self.base, self.theory, self.gauge, functional)


def antifield_component(e: Expression, level: int) -> Expression:
    """The part of an expression with the given total antifield number."""
    terms = tuple(m for m in e.terms if e.monomial_grading(m).antifield == level)
    return Expression(e.sig, terms)


def extend_to_bv(
    theory: Theory,
    gauge: Sequence[Tuple[Generator, Union[NoetherOperator, Dict[tuple, NoetherOperator]]]] = (),
    on_shell_order: Optional[int] = None,
) -> BVExtension:
    """Adjoin ghosts and antifields and emit the minimal master-action proposal.

    Each gauge entry pairs a ghost generator with the Noether operator (or a
    mapping of ghost component to operator) whose identity it resolves; the
    identities are verified exactly, or on-shell up to ``on_shell_order`` when
    given.  The proposal couples every field antifield to the gauge
    characteristic obtained from the operator's adjoint; higher ghost terms
    are the caller's to add via ``with_master``.
    """
    sig = theory.signature
    pairs: List[GaugePair] = []
    names = {g.name for g in sig.generators}
    for ghost_spec, ops in gauge:
        if ghost_spec.role != GHOST:
            raise GradingViolationError(f"{ghost_spec.name!r} is not declared as a ghost")
        if ghost_spec.name in names:
            raise DuplicateGhostNameError(f"generator name {ghost_spec.name!r} already in use")
        names.add(ghost_spec.name)
        if isinstance(ops, NoetherOperator):
            if ghost_spec.index_ranges:
                raise UnknownGeneratorError(
                    f"ghost {ghost_spec.name!r} has components; give one operator per component"
                )
            ops = {(): ops}
        table = {}
        for comp in ghost_spec.components():
            op = ops.get(tuple(comp))
            if op is None:
                raise UnknownGeneratorError(
                    f"no Noether operator for ghost component {ghost_spec.name}{list(comp)}"
                )
            residual = noether_residual(theory, op)
            if residual and on_shell_order is not None:
                residual = on_shell_reduce(residual, theory, on_shell_order)
            if residual:
                raise NotAnIdentityError(residual)
            table[tuple(comp)] = op
        pairs.append(GaugePair(ghost_spec, table))

    generators = list(sig.generators) + [p.ghost for p in pairs]
    for gen in list(generators):
        if gen.role in (FIELD, GHOST):
            # antifield indices pair with the field's by duality, so their
            # slots never contract through the metric
            generators.append(
                Generator(
                    antifield_name(gen.name),
                    ANTIFIELD,
                    gen.index_ranges,
                    antifield_grading(gen.grading, gen.role),
                    (False,) * len(gen.index_ranges),
                )
            )
    ext_sig = Signature(generators, sig.metric)
    lagrangian = _transfer(theory.lagrangian, ext_sig)
    ext_theory = Theory(ext_sig, lagrangian)

    proposal = lagrangian
    for pair in pairs:
        for ghost_comp, op in pair.operators.items():
            ghost = ext_sig.from_atom(ext_sig.atom(pair.ghost.name, ghost_comp))
            for (fname, fcomp), table in op.coefficients.items():
                star = ext_sig.from_atom(ext_sig.atom(antifield_name(fname), fcomp))
                q = ext_sig.zero()
                for mindex, coeff in table.items():
                    term = jetcalc.apply_multi_derivative(
                        _transfer(coeff, ext_sig) * ghost, mindex
                    )
                    q = q - term if sum(mindex) % 2 else q + term
                proposal = proposal + star * q
    master = LocalFunctional(Density(ext_theory, proposal))
    return BVExtension(theory, ext_theory, tuple(pairs), master)


# ---------------------------------------------------------------------------
# bracket machinery


def _as_expression(f, sig: Signature) -> Expression:
    if isinstance(f, (LocalFunctional, Density)):
        f = f.expr
    if not isinstance(f, Expression):
        raise TypeError("expected an expression, density, or local functional")
    if f.sig != sig:
        raise GeneratorMismatchError("operand belongs to a different BV extension")
    return f


def antibracket_density(bv: BVExtension, f, g) -> Expression:
    """Density of (F, G); defined up to a total divergence."""
    sig = bv.signature
    f = _as_expression(f, sig)
    g = _as_expression(g, sig)
    if f:
        parity_ghost_of(f)
    if g:
        parity_ghost_of(g)
    result = sig.zero()
    for (name, comp), (star, _) in bv.pairs():
        rf_phi = jetcalc.variational_derivative(f, name, comp, side="right")
        lg_star = jetcalc.variational_derivative(g, star, comp, side="left")
        if rf_phi and lg_star:
            result = result + rf_phi * lg_star
        rf_star = jetcalc.variational_derivative(f, star, comp, side="right")
        lg_phi = jetcalc.variational_derivative(g, name, comp, side="left")
        if rf_star and lg_phi:
            result = result - rf_star * lg_phi
    return result


def antibracket(bv: BVExtension, f, g) -> LocalFunctional:
    """The antibracket of two local functionals over the extension."""
    return LocalFunctional(Density(bv.theory, antibracket_density(bv, f, g)))


def _apply_derivation(e: Expression, base_rules: Dict[Tuple[int, tuple], Expression]) -> Expression:
    """Extend atom-level assignments to a derivation commuting with D_i."""
    sig = e.sig
    result = sig.zero()
    for atom in sorted(e.jet_atoms(), key=Atom.key):
        rule = base_rules.get((atom.gen, atom.comp))
        if rule is None:
            continue
        left = jetcalc.apply_multi_derivative(rule, atom.mindex)
        if left.is_zero():
            continue
        result = result + left * partial_derivative(e, atom, "left")
    return result


def koszul_tate_apply(bv: BVExtension, e: Expression) -> Expression:
    """The Koszul-Tate differential: antifields to EL expressions, antighosts
    to the Noether combination of antifields, fields and ghosts to zero."""
    sig = bv.signature
    e = _as_expression(e, sig)
    rules: Dict[Tuple[int, tuple], Expression] = {}
    el = euler_lagrange_system(bv.base)
    for (fname, fcomp), expr in el.items():
        gid = sig.generator_id(antifield_name(fname))
        rules[(gid, fcomp)] = _transfer(expr, sig)
    for pair in bv.gauge:
        star_gid = sig.generator_id(antifield_name(pair.ghost.name))
        for ghost_comp, op in pair.operators.items():
            image = sig.zero()
            for (fname, fcomp), table in op.coefficients.items():
                star = sig.from_atom(sig.atom(antifield_name(fname), fcomp))
                for mindex, coeff in table.items():
                    image = image + _transfer(coeff, sig) * jetcalc.apply_multi_derivative(
                        star, mindex
                    )
            rules[(star_gid, ghost_comp)] = image
    return _apply_derivation(e, rules)


def hamiltonian_derivation(bv: BVExtension, f, e: Expression) -> Expression:
    """The evolutionary derivation X_F with X_F(g) = (F, g) modulo divergences.

    Unlike the density-level bracket, X_F is an honest graded derivation, so
    the bracket's Leibniz rule holds with X_F inside the products.
    """
    sig = bv.signature
    f = _as_expression(f, sig)
    rules: Dict[Tuple[int, tuple], Expression] = {}
    for (name, comp), (star, _) in bv.pairs():
        rf_phi = jetcalc.variational_derivative(f, name, comp, side="right")
        if rf_phi:
            rules[(sig.generator_id(star), comp)] = rf_phi
        rf_star = jetcalc.variational_derivative(f, star, comp, side="right")
        if rf_star:
            rules[(sig.generator_id(name), comp)] = -rf_star
    return _apply_derivation(_as_expression(e, sig), rules)


def brst_apply(bv: BVExtension, e: Expression) -> Expression:
    """The derivation {S_cm, -} on densities; raises ghost number by one."""
    return antibracket_density(bv, bv.master_action, e)


@dataclass(frozen=True)
class MasterReport:
    holds: bool
    residual: LocalFunctional


def check_master_equation(bv: BVExtension) -> MasterReport:
    """Test {S_cm, S_cm} = 0 in h(A): the residual must be a total divergence."""
    s = bv.master_action
    if s.expr and parity_ghost_of(s.expr) != (EVEN, 0):
        raise GradingViolationError("the master action must be even of ghost number 0")
    residual = antibracket(bv, s, s)
    return MasterReport(jetcalc.is_total_divergence(residual.expr), residual)
