"""CHAM engine for cognitive cross-modal computing programs."""

from .engine import check_confluence, check_termination, enabled_rules, explore, fire, replay, run
from .errors import (
    BoundExceeded,
    ChamError,
    ChamSyntaxError,
    CyclicDependency,
    ParseError,
    StageError,
    StageFailure,
)
from .model import (
    CnccFramework,
    HormoneGate,
    builtin_cncc_learning,
    builtin_cncc_recognition,
    dataflow_closure_check,
    dependency_order,
    endocrine_gate_eval,
)
from .parser import parse_molecule, parse_program, parse_solution, render_program
from .program import ChamProgram, ReactionRule
from .terms import Molecule, Solution

__all__ = [
    "BoundExceeded", "ChamError", "ChamProgram", "ChamSyntaxError", "CnccFramework",
    "CyclicDependency", "HormoneGate", "Molecule", "ParseError", "ReactionRule", "Solution",
    "StageError", "StageFailure", "builtin_cncc_learning", "builtin_cncc_recognition",
    "check_confluence", "check_termination", "dataflow_closure_check", "dependency_order",
    "enabled_rules", "endocrine_gate_eval", "explore", "fire", "parse_molecule",
    "parse_program", "parse_solution", "render_program", "replay", "run",
]
