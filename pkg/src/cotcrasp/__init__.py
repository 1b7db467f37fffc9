"""CoT C-RASP toolchain: evaluate C-RASP, run CoT programs, simulate and
compile counter machines, and generate trace-supervised datasets."""

__version__ = "0.1.0"

from .cot import Answer, CotProgram, CotRule, RunResult, Verdict, accepts, generate, step
from .incremental import IncrementalTable, incremental_push, value_at_last
from .lowering import BACKENDS, DEFAULT_BACKEND
from .rpe import RelKind, beta, mu, one_positions, preimages, rel_contains, sigma
from .semantics import eval_formula, eval_term
from .syntax import (
    Add, And, Atom, Compare, Const, Count, CountRel, CraspError, Not, Or, Scale, Sub, TrueF,
)

__all__ = [
    "Add", "And", "Answer", "Atom", "BACKENDS", "Compare", "Const", "CotProgram", "CotRule",
    "Count", "CountRel", "CraspError", "DEFAULT_BACKEND", "IncrementalTable", "Not", "Or",
    "RelKind", "RunResult", "Scale", "Sub", "TrueF", "Verdict", "accepts", "beta", "eval_formula",
    "eval_term", "generate", "incremental_push", "mu", "one_positions", "preimages",
    "rel_contains", "sigma", "step", "value_at_last",
]
