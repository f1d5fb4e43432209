"""jetvar: exact variational calculus on jet spaces and the classical BV formalism."""

from .core import (
    ANTIFIELD,
    Atom,
    EVEN,
    EVEN_GRADING,
    Expression,
    FIELD,
    GHOST,
    Generator,
    Grading,
    Monomial,
    ODD,
    PARAM,
    Signature,
    VAR,
    add,
    grading_of,
    homogeneous_components,
    is_homogeneous_of,
    mul,
    parity_ghost_of,
    partial_derivative,
    substitute,
)
from .jetcalc import (
    apply_multi_derivative,
    divergence_witness,
    ibp_equal,
    is_total_divergence,
    prolong_apply,
    total_derivative,
    variational_derivative,
)
from .theory import (
    Density,
    EvolutionaryVF,
    LocalFunctional,
    NoetherOperator,
    Section,
    Theory,
    euler_lagrange_system,
    integrate_on_box,
    is_noether_identity,
    is_symmetry,
    noether_residual,
    on_shell_reduce,
)
from .bv import (
    BVExtension,
    antibracket,
    antibracket_density,
    brst_apply,
    check_master_equation,
    extend_to_bv,
    koszul_tate_apply,
)
from .models import ModelDescriptor, builtin, list_models, model_source
from .parser import parse_expression, parse_model
from .printer import format_expression

__all__ = [
    "ANTIFIELD",
    "Atom",
    "BVExtension",
    "Density",
    "EVEN",
    "EVEN_GRADING",
    "EvolutionaryVF",
    "Expression",
    "FIELD",
    "GHOST",
    "Generator",
    "Grading",
    "LocalFunctional",
    "ModelDescriptor",
    "Monomial",
    "NoetherOperator",
    "ODD",
    "PARAM",
    "Section",
    "Signature",
    "Theory",
    "VAR",
    "add",
    "antibracket",
    "antibracket_density",
    "apply_multi_derivative",
    "brst_apply",
    "builtin",
    "check_master_equation",
    "divergence_witness",
    "euler_lagrange_system",
    "extend_to_bv",
    "format_expression",
    "grading_of",
    "homogeneous_components",
    "ibp_equal",
    "integrate_on_box",
    "is_homogeneous_of",
    "is_noether_identity",
    "is_symmetry",
    "is_total_divergence",
    "koszul_tate_apply",
    "list_models",
    "model_source",
    "mul",
    "noether_residual",
    "on_shell_reduce",
    "parity_ghost_of",
    "parse_expression",
    "parse_model",
    "partial_derivative",
    "prolong_apply",
    "substitute",
    "total_derivative",
    "variational_derivative",
]
__version__ = "0.1.0"
