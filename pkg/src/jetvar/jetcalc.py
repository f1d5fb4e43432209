"""Total derivatives, variational derivatives, and the divergence decision.

All functions act on normal-form expressions; the theory-level wrappers in
``jetvar.theory`` add the bookkeeping around densities and functionals.

The divergence test uses the kernel criterion: over a free (graded) jet
algebra with polynomial base coefficients the variational complex is exact,
so a density is a total divergence exactly when every variational derivative
vanishes.  The one-variable witness is constructed by peeling: the top jet
coordinate of a true divergence always enters linearly, and integrating its
coefficient recovers, monomial block by monomial block, the potential it came
from, so the loop strictly shrinks the remaining witness.
"""

from __future__ import annotations

from typing import Mapping, Sequence, Tuple, Union

from .core import (
    Atom,
    Expression,
    JET_ROLES,
    Monomial,
    ODD,
    PARAM,
    VAR,
    partial_derivative,
)
from .errors import (
    NotADivergenceError,
    UnknownGeneratorError,
    UnsupportedDimensionError,
    ZeroVariablesError,
)

VarRef = Union[str, int]


def _var_pos(e: Expression, var: VarRef) -> int:
    if isinstance(var, str):
        return e.sig.var_position(var)
    if not 0 <= var < e.sig.nvars:
        raise UnknownGeneratorError(f"variable position {var} out of range")
    return var


def total_derivative(e: Expression, var: VarRef) -> Expression:
    """D_i e: shift jet coordinates and differentiate explicit base variables."""
    sig = e.sig
    pos = _var_pos(e, var)
    var_gid = sig.var_generator_id(pos)
    gens = sig.generators
    out = []
    for m in e.terms:
        for idx, (a, x) in enumerate(m.even):
            role = gens[a.gen].role
            if role == PARAM:
                continue
            if x != 1:
                lowered = m.even[:idx] + ((a, x - 1),) + m.even[idx + 1:]
            else:
                lowered = m.even[:idx] + m.even[idx + 1:]
            if role == VAR:
                if a.gen == var_gid:
                    out.append(Monomial(m.coeff * x, lowered, m.odd))
                continue
            shifted = sig.shift_atom(a, pos)
            mono = Monomial(m.coeff * x, _merge_one_even(lowered, shifted), m.odd)
            out.append(mono)
        for j, a in enumerate(m.odd):
            shifted = sig.shift_atom(a, pos)
            others = m.odd[:j] + m.odd[j + 1:]
            placed = _insert_odd(others, shifted, j)
            if placed is None:
                continue
            new_odd, sign = placed
            out.append(Monomial(m.coeff * sign, m.even, new_odd))
    return Expression.from_terms(sig, out)


def _merge_one_even(even: tuple, atom: Atom) -> tuple:
    """Insert one even atom (exponent 1) into a sorted factor list."""
    key = atom.key()
    for idx, (a, x) in enumerate(even):
        k = a.key()
        if k == key:
            return even[:idx] + ((a, x + 1),) + even[idx + 1:]
        if k > key:
            return even[:idx] + ((atom, 1),) + even[idx:]
    return even + ((atom, 1),)


def _insert_odd(others: tuple, atom: Atom, removed_at: int):
    """Place ``atom`` into the sorted tuple ``others``; None if it already occurs."""
    key = atom.key()
    p = 0
    for a in others:
        k = a.key()
        if k == key:
            return None
        if k < key:
            p += 1
        else:
            break
    new = others[:p] + (atom,) + others[p:]
    sign = -1 if (p - removed_at) % 2 else 1
    return new, sign


def apply_multi_derivative(e: Expression, mindex: Sequence[int]) -> Expression:
    """D_alpha for a multi-index of per-variable counts."""
    for pos, count in enumerate(mindex):
        for _ in range(count):
            e = total_derivative(e, pos)
    return e


def occurring_mindices(e: Expression, gid: int, comp: tuple) -> list:
    seen = {a.mindex for a in e.jet_atoms() if a.gen == gid and a.comp == comp}
    return sorted(seen)


def variational_derivative(
    e: Expression, name: str, comp: Sequence[int] = (), side: str = "left"
) -> Expression:
    """Euler-Lagrange derivative of a density with respect to one component.

    Computes sum over occurring multi-indices of (-1)^|alpha| D_alpha of the
    graded partial derivative; ``side`` selects the left or right variant for
    odd targets.
    """
    sig = e.sig
    gid = sig.generator_id(name)
    gen = sig.generators[gid]
    if gen.role not in JET_ROLES:
        raise UnknownGeneratorError(f"{name!r} is not a field, ghost, or antifield")
    comp = tuple(comp)
    result = sig.zero()
    for mindex in occurring_mindices(e, gid, comp):
        partial = partial_derivative(e, Atom(gid, comp, mindex), side)
        if partial.is_zero():
            continue
        term = apply_multi_derivative(partial, mindex)
        if sum(mindex) % 2:
            term = -term
        result = result + term
    return result


def prolong_apply(
    characteristics: Mapping[Tuple[str, tuple], Expression], e: Expression
) -> Expression:
    """Apply the prolongation of an evolutionary vector field to ``e``.

    ``characteristics`` maps (generator name, component) to the expression the
    vector field assigns to that undifferentiated coordinate.
    """
    sig = e.sig
    result = sig.zero()
    for (name, comp), q in characteristics.items():
        gid = sig.generator_id(name)
        comp = tuple(comp)
        for mindex in occurring_mindices(e, gid, comp):
            partial = partial_derivative(e, Atom(gid, comp, mindex), "left")
            if partial.is_zero():
                continue
            result = result + apply_multi_derivative(q, mindex) * partial
    return result


def is_total_divergence(e: Expression) -> bool:
    """True iff every variational derivative of the density vanishes."""
    sig = e.sig
    if sig.nvars == 0:
        raise ZeroVariablesError("the theory declares no independent variables")
    targets = {(a.gen, a.comp) for a in e.jet_atoms()}
    for gid, comp in sorted(targets):
        name = sig.generators[gid].name
        if not variational_derivative(e, name, comp).is_zero():
            return False
    return True


def ibp_equal(e1: Expression, e2: Expression) -> bool:
    """Equality of densities modulo total divergences."""
    return is_total_divergence(e1 - e2)


def _antiderivative_even(e: Expression, atom: Atom) -> Expression:
    """Formal antiderivative of ``e`` in one even atom: b^k -> b^(k+1)/(k+1)."""
    sig = e.sig
    key = atom.key()
    out = []
    for m in e.terms:
        placed = False
        even = list(m.even)
        for idx, (a, x) in enumerate(even):
            if a.key() == key:
                even[idx] = (a, x + 1)
                out.append(Monomial(m.coeff / (x + 1), tuple(even), m.odd))
                placed = True
                break
        if not placed:
            out.append(
                Monomial(m.coeff, _merge_one_even(m.even, atom), m.odd)
            )
    return Expression.from_terms(sig, out)


_WITNESS_BUDGET = 100_000


def divergence_witness(e: Expression) -> dict:
    """Construct F with D_t F = e in a one-variable theory.

    Peels the top jet coordinate: its coefficient is integrated in the
    once-lower coordinate, the resulting block is subtracted, and the
    remainder recursed on; the leftover base polynomial is integrated
    directly.  Raises if the theory has more than one variable or the density
    is not a divergence.
    """
    sig = e.sig
    if sig.nvars == 0:
        raise ZeroVariablesError("the theory declares no independent variables")
    if sig.nvars != 1:
        raise UnsupportedDimensionError(
            "divergence witnesses are only constructed for one independent variable"
        )
    if not is_total_divergence(e):
        raise NotADivergenceError("density is not a total divergence")

    witness = sig.zero()
    remainder = e
    for _ in range(_WITNESS_BUDGET):
        jets = remainder.jet_atoms()
        if not jets:
            break
        r = max(a.order for a in jets)
        top = max((a for a in jets if a.order == r), key=Atom.key)
        coeff = partial_derivative(remainder, top, "left")
        if top in coeff.atoms() or coeff.max_jet_order() > r - 1:
            raise NotADivergenceError(
                "top jet coordinate does not enter linearly; no witness exists"
            )
        below = Atom(top.gen, top.comp, (r - 1,))
        if sig.atom_grading(top).parity == ODD:
            if below in coeff.atoms():
                raise NotADivergenceError(
                    "odd coordinate coefficient is not integrable; no witness exists"
                )
            block = sig.from_atom(below) * coeff
        else:
            block = _antiderivative_even(coeff, below)
        witness = witness + block
        remainder = remainder - total_derivative(block, 0)
    else:
        raise NotADivergenceError("witness construction exceeded its budget")

    if remainder:
        var_atom = sig.atom(sig.variables[0].name)
        witness = witness + _antiderivative_even(remainder, var_atom)
    return {sig.variables[0].name: witness}
