"""Expression grammar, Einstein expansion, model files, and error positions."""

from fractions import Fraction

import pytest

from jetvar.bv import BVExtension
from jetvar.core import EVEN, Grading, grading_of
from jetvar.errors import (
    IndexRangeError,
    ParseError,
    UndeclaredIdentifierError,
)
from jetvar.models import builtin
from jetvar.parser import parse_assignments, parse_expression, parse_model
from jetvar.theory import Theory


@pytest.fixture
def free(mech):
    return mech  # vars t, param m, field u, ghosts th1 th2


class TestGrammar:
    def test_rationals_and_powers(self, free):
        sig = free.signature
        assert parse_expression("2/3", free) == sig.const(Fraction(2, 3))
        assert parse_expression("d(u;t)^2", free) == sig.coord("u", d=("t",)) ** 2

    def test_unary_minus_binds_the_power(self, free):
        sig = free.signature
        assert parse_expression("-u^2", free) == -(sig.coord("u") ** 2)

    def test_nested_derivatives(self, free):
        assert parse_expression("d(d(u;t);t)", free) == free.signature.coord(
            "u", d=("t", "t")
        )

    def test_product_requires_explicit_star(self, free):
        with pytest.raises(ParseError):
            parse_expression("2 u", free)

    def test_parenthesized_sums(self, free):
        sig = free.signature
        u, ut = sig.coord("u"), sig.coord("u", d=("t",))
        assert parse_expression("(u + d(u;t)) * u", free) == u * u + ut * u

    def test_negative_exponent_on_parameter(self, free):
        sig = free.signature
        m = sig.from_atom(sig.atom("m"))
        assert parse_expression("m^-1", free) * m == sig.one()
        with pytest.raises(ParseError):
            parse_expression("u^-1", free)

    def test_antifield_lexing(self):
        bv = builtin("maxwell", dim=2).bv
        sig = bv.signature
        e = parse_expression("A*[0] * d(C;t)", bv)
        assert e == sig.from_atom(sig.atom("A*", (0,))) * sig.coord("C", d=("t",))
        assert grading_of(e) == Grading(EVEN, 0, 1)

    def test_star_before_operand_is_multiplication(self, free):
        sig = free.signature
        u = sig.coord("u")
        assert parse_expression("u*u", free) == u * u
        assert parse_expression("u*2", free) == u * 2
        assert parse_expression("u*(u)", free) == u * u


class TestEinstein:
    def test_metric_contraction(self):
        theory = builtin("scalar_phi4").theory
        sig = theory.signature
        pt = sig.coord("phi", d=("t",))
        px = sig.coord("phi", d=("x",))
        # metric diag(1,-1): repeated derivative pair sums with inverse factors
        assert parse_expression("d(phi;mu)*d(phi;mu)", theory) == pt * pt - px * px

    def test_trace_within_one_factor(self):
        theory = builtin("maxwell", dim=2).theory
        # F[mu,mu] is antisymmetric, so its metric trace vanishes
        bv_src = "d(A[mu];mu)"
        e = parse_expression(bv_src, theory)
        sig = theory.signature
        assert e == sig.coord("A", (0,), d=("t",)) - sig.coord("A", (1,), d=("x",))

    def test_plain_range_summation(self):
        theory = builtin("free_particle").theory
        sig = theory.signature
        total = sig.zero()
        for i in (1, 2, 3):
            total = total + sig.coord("u", (i,)) ** 2
        assert parse_expression("u[i]*u[i]", theory) == total

    def test_factor_permutation_respects_koszul_law(self):
        bv = builtin("maxwell", dim=2).bv
        a = parse_expression("A*[mu] * d(C;mu)", bv)
        b = parse_expression("d(C;mu) * A*[mu]", bv)
        assert b == -a  # both factors are odd
        theory = builtin("scalar_phi4").theory
        c = parse_expression("d(phi;mu)*d(phi;mu)", theory)
        d = parse_expression("d(phi;mu)*d(phi;mu)", theory)
        assert c == d

    def test_eps_symbol(self):
        theory = builtin("yang_mills_su2", dim=2).theory
        sig = theory.signature
        e = parse_expression("eps[a,b,c]*A[a,0]*A[b,0]*A[c,0]", theory)
        assert e.is_zero()  # symmetric contraction against eps
        f = parse_expression("eps[1,2,3]", theory)
        assert f == sig.one()
        assert parse_expression("eps[2,1,3]", theory) == -sig.one()
        assert parse_expression("eps[1,1,3]", theory).is_zero()

    def test_too_many_occurrences(self, free):
        theory = builtin("free_particle").theory
        with pytest.raises(ParseError):
            parse_expression("u[i]*u[i]*u[i]", theory)

    def test_unbound_letter(self):
        theory = builtin("free_particle").theory
        with pytest.raises(ParseError):
            parse_expression("u[i]", theory)

    def test_letters_forbidden_under_exponent(self):
        theory = builtin("free_particle").theory
        with pytest.raises(ParseError):
            parse_expression("u[i]^2", theory)


class TestErrors:
    def test_caret_position_on_unclosed_paren(self, free):
        with pytest.raises(ParseError) as err:
            parse_expression("d(u;t", free)
        assert err.value.line == 1
        assert err.value.column == 6

    def test_component_out_of_range_position(self):
        theory = builtin("free_particle").theory
        with pytest.raises(IndexRangeError) as err:
            parse_expression("u[1] + u[5]", theory)
        assert err.value.line == 1
        assert err.value.column == 10

    def test_undeclared_identifier(self, free):
        with pytest.raises(UndeclaredIdentifierError):
            parse_expression("qq + u", free)

    def test_metric_dimension_mismatch(self):
        bad = "vars t, x\nmetric diag(1)\nfield u\nlagrangian u\n"
        with pytest.raises(ParseError):
            parse_model(bad)

    def test_declarations_precede_use(self):
        bad = "vars t\nfield u\nlagrangian u * v\nfield v\n"
        with pytest.raises(ParseError):
            parse_model(bad)


class TestModelFiles:
    def test_plain_theory(self):
        theory = parse_model(
            "vars t\nmetric diag(1)\nparams m\nfield u[1..3]\n"
            "lagrangian 1/2 * m * d(u[i];t) * d(u[i];t)\n"
        )
        assert isinstance(theory, Theory)
        assert theory.signature.nvars == 1

    def test_gauge_returns_bv(self):
        parsed = parse_model(builtin("maxwell", dim=2).source)
        assert isinstance(parsed, BVExtension)

    def test_defaults_without_metric(self):
        theory = parse_model("vars t\nfield u\nlagrangian d(u;t)^2\n")
        assert theory.signature.metric == (Fraction(1),)

    def test_def_inlining(self):
        theory = parse_model(
            "vars t\nfield u\ndef K = d(u;t)^2\nlagrangian 1/2 * K\n"
        )
        sig = theory.signature
        assert theory.lagrangian == sig.coord("u", d=("t",)) ** 2 * Fraction(1, 2)

    def test_line_continuation(self):
        theory = parse_model(
            "vars t\nfield u\nlagrangian d(u;t)^2 \\\n + u^2\n"
        )
        sig = theory.signature
        assert theory.lagrangian == sig.coord("u", d=("t",)) ** 2 + sig.coord("u") ** 2

    def test_duplicate_field(self):
        with pytest.raises(ParseError):
            parse_model("vars t\nfield u\nfield u\nlagrangian u\n")


class TestAssignments:
    def test_indexed_family(self):
        bv = builtin("maxwell", dim=2).bv
        out = parse_assignments("A[mu]=d(C;mu)", bv)
        sig = bv.signature
        assert out[("A", (0,))] == sig.coord("C", d=("t",))
        assert out[("A", (1,))] == sig.coord("C", d=("x",))

    def test_multiple_statements_with_semicolons_inside_d(self):
        theory = builtin("free_particle").theory
        out = parse_assignments("u[1]=t; u[2]=t^2; u[3]=0", theory)
        assert len(out) == 3

    def test_duplicate_assignment(self):
        theory = builtin("free_particle").theory
        with pytest.raises(ParseError):
            parse_assignments("u[i]=t; u[1]=t", theory)
