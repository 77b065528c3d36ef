"""Denotational reference semantics used to cross-check the evaluator."""

from .denote import (
    Denoter,
    SemRunner,
    denote_kernel,
    denote_user,
    denote_value,
    finalisation_apply,
    generic_tree,
    recover_coops,
    runner_to_morphism,
)
from .trees import Leaf, Node, OracleBug, OracleLimit, bind, enumerate_ground, freeze, kleisli, trees_equal

__all__ = [
    "Denoter", "SemRunner", "denote_kernel", "denote_user", "denote_value",
    "finalisation_apply", "generic_tree", "recover_coops", "runner_to_morphism",
    "Leaf", "Node", "OracleBug", "OracleLimit", "bind", "enumerate_ground",
    "freeze", "kleisli", "trees_equal",
]
