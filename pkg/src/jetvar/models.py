"""Built-in example theories; they double as the acceptance corpus.

Every builtin is defined by its model-file source and constructed through the
parser, so the shipped files and the in-memory descriptors cannot drift
apart.  The expected tables are verified end-to-end by the test harness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

from .bv import BVExtension, check_master_equation, extend_to_bv, koszul_tate_apply
from .errors import UnknownGeneratorError
from .theory import (
    EvolutionaryVF,
    Theory,
    euler_lagrange_system,
    is_symmetry,
    noether_residual,
)

_VAR_NAMES = ("t", "x", "y", "z")
_GAUGE_DIMS = (2, 3, 4)


def _base_lines(dim: int) -> str:
    names = ", ".join(_VAR_NAMES[:dim])
    metric = ", ".join(["1"] + ["-1"] * (dim - 1))
    return f"vars {names}\nmetric diag({metric})\n"


def free_particle_source(potential: Optional[str] = None) -> str:
    lines = [
        "# non-relativistic particle in a polynomial potential",
        "vars t",
        "metric diag(1)",
        "params m",
        "field u[1..3]",
    ]
    lagrangian = "lagrangian 1/2 * m * d(u[i];t) * d(u[i];t)"
    if potential:
        lagrangian += f" - ({potential})"
    lines.append(lagrangian)
    return "\n".join(lines) + "\n"


def scalar_phi4_source(dim: int = 2) -> str:
    return (
        "# self-interacting scalar field\n"
        + _base_lines(dim)
        + "params m, g\n"
        + "field phi\n"
        + "lagrangian 1/2 * d(phi;mu)*d(phi;mu) - 1/2 * m * phi^2 - 1/24 * g * phi^4\n"
    )


def maxwell_source(dim: int = 2) -> str:
    return (
        "# pure electromagnetism\n"
        + _base_lines(dim)
        + "field A[dim]\n"
        + "ghost C\n"
        + "def F[mu,nu] = d(A[nu];mu) - d(A[mu];nu)\n"
        + "lagrangian -1/4 * F[mu,nu]*F[mu,nu]\n"
        + "gauge C: -d(EL(A[nu]); nu)\n"
        + "master -1/4 * F[mu,nu]*F[mu,nu] + A*[mu] * d(C;mu)\n"
    )


def yang_mills_su2_source(dim: int = 2) -> str:
    return (
        "# su(2) Yang-Mills, structure constants eps[a,b,c]\n"
        + _base_lines(dim)
        + "field A[1..3, dim]\n"
        + "ghost C[1..3]\n"
        + "def F[a,mu,nu] = d(A[a,nu];mu) - d(A[a,mu];nu) + eps[a,b,c]*A[b,mu]*A[c,nu]\n"
        + "lagrangian -1/4 * F[a,mu,nu]*F[a,mu,nu]\n"
        + "gauge C[g]: -d(EL(A[g,nu]); nu) - eps[g,a,c]*A[a,nu]*EL(A[c,nu])\n"
        + "master -1/4 * F[a,mu,nu]*F[a,mu,nu] + A*[a,mu]*d(C[a];mu)"
        + " - eps[g,a,c]*A*[c,mu]*A[a,mu]*C[g]"
        + " + 1/2 * eps[a,b,c]*C*[a]*C[b]*C[c]\n"
    )


_SOURCES = {
    "free_particle": free_particle_source,
    "scalar_phi4": scalar_phi4_source,
    "maxwell": maxwell_source,
    "yang_mills_su2": yang_mills_su2_source,
}

_EXPECTED = {
    "free_particle": {
        "newton_equation": True,
        "master_holds": True,
        "kt_nilpotent": True,
    },
    "scalar_phi4": {
        "el_nontrivial": True,
        "master_holds": True,
        "kt_nilpotent": True,
    },
    "maxwell": {
        "noether_identity": True,
        "gauge_symmetry": True,
        "master_holds": True,
        "kt_nilpotent": True,
    },
    "yang_mills_su2": {
        "noether_identity": True,
        "gauge_symmetry": True,
        "master_holds": True,
        "kt_nilpotent": True,
    },
}


@dataclass
class ModelDescriptor:
    name: str
    source: str
    theory: Theory
    bv: Optional[BVExtension]
    expected: Dict[str, bool]


def list_models():
    """Names of the built-in models."""
    return sorted(_SOURCES)


def model_source(name: str, dim: Optional[int] = None, potential: Optional[str] = None) -> str:
    """The model-file text of a builtin."""
    if name not in _SOURCES:
        raise UnknownGeneratorError(f"unknown model {name!r}")
    kwargs = {}
    if name == "free_particle":
        if dim is not None:
            raise UnknownGeneratorError("free_particle has a fixed one-dimensional base")
        if potential is not None:
            kwargs["potential"] = potential
    else:
        if potential is not None:
            raise UnknownGeneratorError(f"{name} takes no potential")
        if dim is not None:
            if name != "scalar_phi4" and dim not in _GAUGE_DIMS:
                raise UnknownGeneratorError(f"{name} supports base dimensions {_GAUGE_DIMS}")
            if not 1 <= dim <= len(_VAR_NAMES):
                raise UnknownGeneratorError(f"base dimension {dim} not supported")
            kwargs["dim"] = dim
    return _SOURCES[name](**kwargs)


def builtin(name: str, dim: Optional[int] = None, potential: Optional[str] = None) -> ModelDescriptor:
    """Construct a built-in model through the frontend parser."""
    from .parser import parse_model

    source = model_source(name, dim=dim, potential=potential)
    parsed = parse_model(source)
    if isinstance(parsed, BVExtension):
        theory, bv = parsed.base, parsed
    else:
        theory, bv = parsed, extend_to_bv(parsed, [])
    return ModelDescriptor(name, source, theory, bv, dict(_EXPECTED[name]))


# ---------------------------------------------------------------------------
# the expected-table checks


def _check_newton_equation(desc: ModelDescriptor) -> bool:
    """EL_i must be -m * u_i'' minus the gradient of the potential."""
    theory = desc.theory
    sig = theory.signature
    el = euler_lagrange_system(theory)
    m = sig.from_atom(sig.atom("m"))
    kinetic = theory.parse("1/2 * m * d(u[i];t) * d(u[i];t)")
    potential = kinetic - theory.lagrangian
    from .core import partial_derivative

    for i in (1, 2, 3):
        expected = -(m * sig.coord("u", (i,), d=("t", "t")))
        expected = expected - partial_derivative(potential, sig.atom("u", (i,)))
        if el[("u", (i,))] != expected:
            return False
    return True


def _check_el_nontrivial(desc: ModelDescriptor) -> bool:
    return any(not e.is_zero() for e in euler_lagrange_system(desc.theory).values())


def _check_noether_identity(desc: ModelDescriptor) -> bool:
    if desc.bv is None or not desc.bv.gauge:
        return False
    for pair in desc.bv.gauge:
        for op in pair.operators.values():
            if not noether_residual(desc.theory, op).is_zero():
                return False
    return True


def _check_gauge_symmetry(desc: ModelDescriptor) -> bool:
    """The BRST transform of the fields is a symmetry of the action."""
    from .bv import brst_apply

    bv = desc.bv
    sig = bv.signature
    chars = {}
    for name, comp in bv.theory.field_components():
        chars[(name, comp)] = brst_apply(bv, sig.from_atom(sig.atom(name, comp)))
    vf = EvolutionaryVF(bv.theory, chars)
    return is_symmetry(bv.theory, vf)


def _check_master_holds(desc: ModelDescriptor) -> bool:
    return check_master_equation(desc.bv).holds


def _check_kt_nilpotent(desc: ModelDescriptor) -> bool:
    bv = desc.bv
    for expr in bv.generator_expressions().values():
        if not koszul_tate_apply(bv, koszul_tate_apply(bv, expr)).is_zero():
            return False
    return True


_CHECKS = {
    "newton_equation": _check_newton_equation,
    "el_nontrivial": _check_el_nontrivial,
    "noether_identity": _check_noether_identity,
    "gauge_symmetry": _check_gauge_symmetry,
    "master_holds": _check_master_holds,
    "kt_nilpotent": _check_kt_nilpotent,
}


def run_checks(desc: ModelDescriptor) -> Dict[str, bool]:
    """Evaluate every check named in the descriptor's expected table."""
    return {name: _CHECKS[name](desc) for name in desc.expected}
