"""Shared fixtures: small theories and seeded random expression generators."""

import random
from fractions import Fraction

import pytest

from jetvar.core import (
    Expression,
    homogeneous_components,
    FIELD,
    GHOST,
    Generator,
    Grading,
    ODD,
    PARAM,
    Signature,
    VAR,
)
from jetvar.theory import Theory


@pytest.fixture
def mech_sig():
    """One time variable, a mass parameter, one even field, two odd ghosts."""
    return Signature(
        [
            Generator("t", VAR),
            Generator("m", PARAM),
            Generator("u", FIELD),
            Generator("th1", GHOST, grading=Grading(ODD, 1)),
            Generator("th2", GHOST, grading=Grading(ODD, 1)),
        ],
        [1],
    )


@pytest.fixture
def mech(mech_sig):
    """Free particle in one dimension: L = 1/2 m u_t^2."""
    ut = mech_sig.coord("u", d=("t",))
    m = mech_sig.from_atom(mech_sig.atom("m"))
    return Theory(mech_sig, m * ut * ut * Fraction(1, 2))


@pytest.fixture
def plane_sig():
    """Two variables with an indefinite metric, two even fields, one odd field."""
    return Signature(
        [
            Generator("t", VAR),
            Generator("x", VAR),
            Generator("u", FIELD),
            Generator("v", FIELD),
            Generator("psi", FIELD, grading=Grading(ODD, 0)),
        ],
        [1, -1],
    )


def random_expression(
    sig,
    rng: random.Random,
    max_terms=4,
    max_order=3,
    max_factors=3,
    max_exp=2,
    roles=(FIELD, GHOST),
    allow_base=True,
):
    """A random normal-form expression; odd atoms exercise the Koszul signs."""
    jet_gens = [(i, g) for i, g in enumerate(sig.generators) if g.role in roles]
    expr = sig.zero()
    for _ in range(rng.randint(1, max_terms)):
        coeff = Fraction(rng.randint(-6, 6), rng.randint(1, 4))
        if coeff == 0:
            coeff = Fraction(1)
        term = sig.const(coeff)
        for _ in range(rng.randint(0, max_factors)):
            kind = rng.random()
            if allow_base and kind < 0.2:
                var = rng.choice(sig.variables)
                term = term * sig.coord(var.name) ** rng.randint(1, max_exp)
                continue
            gid, gen = rng.choice(jet_gens)
            comp = tuple(rng.randint(lo, hi) for lo, hi in gen.index_ranges)
            order = rng.randint(0, max_order)
            mindex = [0] * sig.nvars
            for _ in range(order):
                mindex[rng.randrange(sig.nvars)] += 1
            atom = sig.atom(gen.name, comp, mindex)
            if gen.grading.parity == ODD:
                term = term * sig.from_atom(atom)
            else:
                term = term * sig.from_atom(atom) ** rng.randint(1, max_exp)
        expr = expr + term
    return expr


def homogeneous_pick(sig, rng, **kwargs):
    """A random nonzero expression homogeneous in every grading component."""
    for _ in range(50):
        e = random_expression(sig, rng, **kwargs)
        if e.is_zero():
            continue
        by_grading = homogeneous_components(e)
        grading = rng.choice(sorted(by_grading, key=str))
        return by_grading[grading], grading
    raise AssertionError("could not generate a homogeneous expression")
