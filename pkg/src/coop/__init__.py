"""An interpreter for a calculus of runners of algebraic effects.

Modules: :mod:`coop.types` and :mod:`coop.syntax` (abstract syntax),
:mod:`coop.parser`, :mod:`coop.typecheck`, :mod:`coop.evaluator`,
:mod:`coop.containers`, :mod:`coop.oracle` (denotational reference) and
:mod:`coop.cli`.
"""

from .parser import parse_program
from .pipeline import check_source, run_source
from .typecheck import check_program

__all__ = ["parse_program", "check_program", "check_source", "run_source"]
__version__ = "0.1.0"
