"""
Effex Core
==========

Main Modules:
- effex_types: value, computation and effect types
- effex_ast: de Bruijn terms, substitution and alpha-equivalence
- effex_surface: parser and printer of the surface syntax
- effex_typesys: bidirectional type checkers and the monad judgement
- effex_opsem: small-step reduction by context decomposition
- effex_denot: finite set denotations, monad laws and the pigeonhole demo
- effex_xlate: macro translations and the simulation checker
- effex_gen: seeded generator of well-typed programs
"""

from .effex_types import Calculus, Pure
from .effex_ast import Term, alpha_eq, check_tags, erase_annotations, scope_check
from .effex_surface import SourceFile, parse, print_source, print_term, print_type, show_result
from .effex_typesys import (
    CheckReport,
    TypeChecker,
    check_monad,
    check_source,
    elaborate,
    first_untypeable,
)
from .effex_opsem import NormalForm, OutOfFuel, Stuck, Trace, run, step
from .effex_denot import (
    adequacy_check,
    cardinality,
    check_monad_laws,
    den_ctype,
    den_program,
    den_vtype,
    pigeonhole_demo,
)
from .effex_xlate import (
    SimReport,
    TranslationId,
    all_translations,
    simulate_check,
    translate,
    translate_source,
    translate_typed,
)
from .effex_gen import ProgramGenerator, random_term

__all__ = [
    # Syntax
    "Calculus",
    "Pure",
    "Term",
    "alpha_eq",
    "check_tags",
    "erase_annotations",
    "scope_check",
    "SourceFile",
    "parse",
    "print_source",
    "print_term",
    "print_type",
    "show_result",
    # Typing
    "CheckReport",
    "TypeChecker",
    "check_monad",
    "check_source",
    "elaborate",
    "first_untypeable",
    # Reduction
    "NormalForm",
    "OutOfFuel",
    "Stuck",
    "Trace",
    "run",
    "step",
    # Semantics
    "adequacy_check",
    "cardinality",
    "check_monad_laws",
    "den_ctype",
    "den_program",
    "den_vtype",
    "pigeonhole_demo",
    # Translations
    "SimReport",
    "TranslationId",
    "all_translations",
    "simulate_check",
    "translate",
    "translate_source",
    "translate_typed",
    # Generation
    "ProgramGenerator",
    "random_term",
]
