"""QCTL model checking over Kripke structures by reduction to QBF."""

from .kripke import (KripkeStructure, KripkeError, KriParseError,
                     parse_kripke, serialize_kripke, vertex_connectivity)
from .qctl import Formula, NotPrenexable, QctlParseError, parse_qctl, unparse
from .qbf import QbfCircuit, emit_qcir, emit_smt, parse_qcir
from .oracle import BudgetExceeded, eval_qbf, holds, mc_qctl, mc_sml
from .reduction import (ReductionConfig, STRATEGIES, met_fbv, met_fp, met_fpf,
                        met_pnf, met_uu, reduce_to_qbf)

__all__ = [
    "KripkeStructure", "KripkeError", "KriParseError", "parse_kripke",
    "serialize_kripke", "vertex_connectivity",
    "Formula", "NotPrenexable", "QctlParseError", "parse_qctl", "unparse",
    "QbfCircuit", "emit_qcir", "emit_smt", "parse_qcir",
    "BudgetExceeded", "eval_qbf", "holds", "mc_qctl", "mc_sml",
    "ReductionConfig", "STRATEGIES", "met_fbv", "met_fp", "met_fpf",
    "met_pnf", "met_uu", "reduce_to_qbf",
]

__version__ = "0.1.0"
