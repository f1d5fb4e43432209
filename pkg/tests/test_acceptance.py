"""Acceptance criteria.

Each test enforces one criterion exactly as stated: the required case count,
exact rational equality (no tolerances anywhere), and the wall-clock budget.
One PASS/FAIL line per criterion is printed; run with ``pytest -s`` to see
them live.
"""

import random
import time
from contextlib import contextmanager
from fractions import Fraction

from jetvar import jetcalc
from jetvar.bv import (
    antibracket_density,
    check_master_equation,
    extend_to_bv,
    koszul_tate_apply,
)
from jetvar.core import (
    ANTIFIELD,
    FIELD,
    GHOST,
    Generator,
    Grading,
    ODD,
    PARAM,
    Signature,
    VAR,
    partial_derivative,
    substitute,
)
from jetvar.models import builtin, model_source, yang_mills_su2_source
from jetvar.parser import parse_expression, parse_model
from jetvar.printer import format_expression
from jetvar.jetcalc import variational_derivative
from jetvar.theory import (
    NoetherOperator,
    Section,
    Theory,
    euler_lagrange_system,
    evaluate_density,
    integrate_box_polynomial,
    integrate_on_box_expression,
    noether_residual,
)

from conftest import homogeneous_pick, random_expression


@contextmanager
def criterion(number, description, budget_seconds):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"criterion {number}: FAIL - {description}")
        raise
    elapsed = time.perf_counter() - start
    if elapsed >= budget_seconds:
        print(f"criterion {number}: FAIL - {description} ({elapsed:.2f}s over budget)")
        raise AssertionError(
            f"criterion {number} exceeded its {budget_seconds}s budget ({elapsed:.2f}s)"
        )
    print(f"criterion {number}: PASS - {description} ({elapsed:.2f}s)")


def _random_potential(theory, rng):
    sig = theory.signature
    v = sig.zero()
    for _ in range(rng.randint(1, 4)):
        term = sig.const(Fraction(rng.randint(-5, 5), rng.randint(1, 3)))
        for _ in range(rng.randint(1, 3)):
            term = term * sig.coord("u", (rng.randint(1, 3),))
        v = v + term
    return v


def test_criterion_1_newton_equation():
    with criterion(1, "free particle EL reproduces the Newton equation", 1.0):
        rng = random.Random(2024)
        blank = builtin("free_particle").theory
        potentials = [blank.signature.zero()]
        potentials += [_random_potential(blank, rng) for _ in range(6)]
        for v in potentials:
            sig = blank.signature
            theory = Theory(sig, blank.lagrangian - v)
            el = euler_lagrange_system(theory)
            m = sig.from_atom(sig.atom("m"))
            for i in (1, 2, 3):
                utt = sig.coord("u", (i,), d=("t", "t"))
                gradient = partial_derivative(v, sig.atom("u", (i,)))
                assert el[("u", (i,))] == -(m * utt) - gradient


def test_criterion_2_commuting_total_derivatives():
    with criterion(2, "D_i D_j = D_j D_i on 500 random expressions", 5.0):
        sig = Signature(
            [
                Generator("t", VAR),
                Generator("x", VAR),
                Generator("y", VAR),
                Generator("u", FIELD),
                Generator("psi", FIELD, grading=Grading(ODD, 0)),
            ],
            [1, -1, -1],
        )
        rng = random.Random(2025)
        for _ in range(500):
            e = random_expression(sig, rng, max_terms=6, max_order=4)
            i = rng.randrange(3)
            j = rng.randrange(3)
            dij = jetcalc.total_derivative(jetcalc.total_derivative(e, i), j)
            dji = jetcalc.total_derivative(jetcalc.total_derivative(e, j), i)
            assert dij == dji


def test_criterion_3_el_annihilates_divergences():
    with criterion(3, "EL kills divergences and is ibp-invariant, 200 cases", 10.0):
        sig = Signature(
            [
                Generator("t", VAR),
                Generator("x", VAR),
                Generator("u", FIELD),
                Generator("psi", FIELD, grading=Grading(ODD, 0)),
            ],
            [1, -1],
        )
        rng = random.Random(2026)
        targets = [("u", ()), ("psi", ())]
        for _ in range(200):
            e = random_expression(sig, rng, max_terms=3, max_order=2)
            i = rng.randrange(2)
            div = jetcalc.total_derivative(e, i)
            for name, comp in targets:
                assert variational_derivative(div, name, comp).is_zero()
            d = random_expression(sig, rng, max_terms=3, max_order=2)
            for name, comp in targets:
                assert variational_derivative(d + div, name, comp) == \
                    variational_derivative(d, name, comp)


def _gateaux_case(rng):
    sig = Signature(
        [
            Generator("t", VAR),
            Generator("eps", PARAM),
            Generator("u", FIELD, index_ranges=((1, 2),)),
        ],
        [1],
    )
    t = sig.coord("t")
    one = sig.one()

    lagrangian = sig.zero()
    for _ in range(rng.randint(1, 4)):
        term = sig.const(Fraction(rng.randint(-4, 4), rng.randint(1, 3)))
        for _ in range(rng.randint(1, 3)):
            comp = (rng.randint(1, 2),)
            order = rng.randint(0, 2)
            term = term * sig.from_atom(sig.atom("u", comp, (order,)))
        lagrangian = lagrangian + term
    max_order = lagrangian.max_jet_order()

    def poly(max_deg):
        p = sig.const(Fraction(rng.randint(-3, 3), rng.randint(1, 2)))
        for _ in range(rng.randint(0, max_deg)):
            p = p * t
        return p + sig.const(rng.randint(-2, 2))

    section_polys = {("u", (i,)): poly(3) for i in (1, 2)}
    bump = (t * (one - t)) ** max_order
    perturbations = {("u", (i,)): bump * poly(1) for i in (1, 2)}
    return sig, lagrangian, section_polys, perturbations


def test_criterion_4_gateaux_oracle():
    with criterion(4, "directional derivative equals the EL pairing, 50 triples", 30.0):
        rng = random.Random(2027)
        box = {"t": (Fraction(0), Fraction(1))}
        done = 0
        while done < 50:
            sig, lagrangian, s_polys, h_polys = _gateaux_case(rng)
            if lagrangian.is_zero():
                continue
            theory = Theory(sig, lagrangian)
            eps = sig.atom("eps")
            eps_expr = sig.from_atom(eps)

            shifted = Section(
                theory,
                {key: s_polys[key] + eps_expr * h_polys[key] for key in s_polys},
            )
            total = integrate_on_box_expression(
                theory.functional(lagrangian), shifted, box
            )
            directional = substitute(
                partial_derivative(total, eps), {eps: sig.zero()}
            ).constant_value()

            base = Section(theory, s_polys)
            pairing = Fraction(0)
            for (name, comp), h in h_polys.items():
                el = variational_derivative(lagrangian, name, comp)
                if el.is_zero():
                    continue
                integrand = evaluate_density(el, base) * h
                pairing += integrate_box_polynomial(integrand, box).constant_value()
            assert directional == pairing
            done += 1


def test_criterion_5_maxwell_noether_identity():
    with criterion(5, "Maxwell Noether identity in dimensions 2, 3, 4", 5.0):
        for dim in (2, 3, 4):
            theory = builtin("maxwell", dim=dim).theory
            one = theory.signature.one()
            coefficients = {}
            for nu in range(dim):
                e_nu = tuple(1 if k == nu else 0 for k in range(dim))
                coefficients[("A", (nu,))] = {e_nu: one}
            op = NoetherOperator(theory, coefficients)
            assert noether_residual(theory, op).is_zero()


def test_criterion_6_master_equations():
    with criterion(6, "master equations: Maxwell n=2,3,4; su(2) YM; mutated YM fails", 60.0):
        for dim in (2, 3, 4):
            assert check_master_equation(builtin("maxwell", dim=dim).bv).holds
        assert check_master_equation(builtin("yang_mills_su2", dim=2).bv).holds

        mutated_source = yang_mills_su2_source(2).replace(
            " + 1/2 * eps[a,b,c]*C*[a]*C[b]*C[c]", ""
        )
        report = check_master_equation(parse_model(mutated_source))
        assert not report.holds
        residual = report.residual.expr
        assert not residual.is_zero()
        text = format_expression(residual)
        print(f"  mutated su(2) residual ({len(residual.terms)} terms): {text[:100]}...")


def _bracket_playground():
    sig = Signature(
        [
            Generator("t", VAR),
            Generator("u", FIELD),
            Generator("psi", FIELD, grading=Grading(ODD, 0)),
        ],
        [1],
    )
    ut = sig.coord("u", d=("t",))
    return extend_to_bv(Theory(sig, ut * ut * Fraction(1, 2)), [])


def test_criterion_7_antibracket_algebra():
    with criterion(7, "antibracket antisymmetry (100 pairs) and Jacobi (20 triples)", 60.0):
        bv = _bracket_playground()
        sig = bv.signature
        roles = (FIELD, ANTIFIELD)
        rng = random.Random(2028)

        def pick(max_terms=3, max_factors=3):
            return homogeneous_pick(
                sig, rng, max_terms=max_terms, max_order=1, max_factors=max_factors,
                roles=roles, allow_base=False,
            )

        for _ in range(100):
            f, gf = pick()
            g, gg = pick()
            fg = antibracket_density(bv, f, g)
            gf_ = antibracket_density(bv, g, f)
            sign = -((-1) ** ((gf.parity + 1) * (gg.parity + 1)))
            assert jetcalc.ibp_equal(fg, gf_ * sign)

        for _ in range(20):
            f, gf = pick(max_terms=2, max_factors=2)
            g, gg = pick(max_terms=2, max_factors=2)
            h, _ = pick(max_terms=2, max_factors=2)
            lhs = antibracket_density(bv, f, antibracket_density(bv, g, h))
            rhs = antibracket_density(bv, antibracket_density(bv, f, g), h)
            rhs = rhs + antibracket_density(
                bv, g, antibracket_density(bv, f, h)
            ) * ((-1) ** ((gf.parity + 1) * (gg.parity + 1)))
            assert jetcalc.ibp_equal(lhs, rhs)


def test_criterion_8_koszul_tate_nilpotence():
    with criterion(8, "Koszul-Tate differential squares to zero on every generator", 5.0):
        for name in ("free_particle", "scalar_phi4", "maxwell", "yang_mills_su2"):
            bv = builtin(name).bv
            for expr in bv.generator_expressions().values():
                assert koszul_tate_apply(bv, koszul_tate_apply(bv, expr)).is_zero()


def test_criterion_9_frontend_roundtrip():
    with criterion(9, "parse-format identity on 500 expressions and 4 model files", 5.0):
        bv = builtin("yang_mills_su2", dim=2).bv
        sig = bv.signature
        rng = random.Random(2029)
        for _ in range(500):
            e = random_expression(
                sig, rng, max_terms=4, max_order=2,
                roles=(FIELD, GHOST, ANTIFIELD),
            )
            assert parse_expression(format_expression(e), bv) == e

        for name in ("free_particle", "scalar_phi4", "maxwell", "yang_mills_su2"):
            parsed = parse_model(model_source(name))
            theory = parsed.base if hasattr(parsed, "base") else parsed
            lagr = theory.lagrangian
            assert parse_expression(format_expression(lagr), theory) == lagr
            if hasattr(parsed, "master_action"):
                master = parsed.master_action.expr
                assert parse_expression(format_expression(master), parsed) == master
