"""Deterministic rendering of expressions.

The plain style emits exactly the grammar the parser accepts, so
parse(format(e)) is the identity on normal forms.  The latex style is for
human consumption only.
"""

from __future__ import annotations

from fractions import Fraction

from .core import Atom, Expression, Monomial


def _plain_atom(e_sig, atom: Atom) -> str:
    gen = e_sig.generators[atom.gen]
    text = gen.name
    if atom.comp:
        text += "[" + ",".join(str(c) for c in atom.comp) + "]"
    for pos, count in enumerate(atom.mindex):
        var = e_sig.variables[pos].name
        for _ in range(count):
            text = f"d({text};{var})"
    return text


def _plain_coeff(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def _plain_monomial(sig, m: Monomial) -> str:
    factors = []
    for atom, exp in m.even:
        base = _plain_atom(sig, atom)
        factors.append(base if exp == 1 else f"{base}^{exp}")
    for atom in m.odd:
        factors.append(_plain_atom(sig, atom))
    coeff = abs(m.coeff)
    if not factors:
        return _plain_coeff(coeff)
    body = " * ".join(factors)
    if coeff == 1:
        return body
    return f"{_plain_coeff(coeff)} * {body}"


def _latex_atom(sig, atom: Atom) -> str:
    gen = sig.generators[atom.gen]
    name = gen.name
    star = name.endswith("*")
    if star:
        name = name[:-1]
    subs = []
    if atom.comp:
        subs.append(",".join(str(c) for c in atom.comp))
    letters = ""
    for pos, count in enumerate(atom.mindex):
        letters += sig.variables[pos].name * count
    if letters:
        subs.append(letters)
    text = name
    if star:
        text += "^{*}"
    if subs:
        text += "_{" + ",".join(subs) + "}"
    return text


def _latex_coeff(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    sign = "-" if c < 0 else ""
    return f"{sign}\\frac{{{abs(c.numerator)}}}{{{c.denominator}}}"


def _latex_monomial(sig, m: Monomial) -> str:
    factors = []
    for atom, exp in m.even:
        base = _latex_atom(sig, atom)
        factors.append(base if exp == 1 else f"{base}^{{{exp}}}")
    for atom in m.odd:
        factors.append(_latex_atom(sig, atom))
    coeff = abs(m.coeff)
    if not factors:
        return _latex_coeff(coeff)
    body = "\\,".join(factors)
    if coeff == 1:
        return body
    return f"{_latex_coeff(coeff)}\\,{body}"


def format_expression(e: Expression, style: str = "plain") -> str:
    """Render an expression; plain output re-parses to the same normal form."""
    if style not in ("plain", "latex"):
        raise ValueError(f"unknown style {style!r}")
    if e.is_zero():
        return "0"
    render = _plain_monomial if style == "plain" else _latex_monomial
    parts = []
    for i, m in enumerate(e.terms):
        body = render(e.sig, m)
        if i == 0:
            parts.append("-" + body if m.coeff < 0 else body)
        else:
            parts.append(("- " if m.coeff < 0 else "+ ") + body)
    return " ".join(parts)
