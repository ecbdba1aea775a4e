"""ebmc: explicit-state checking for machine/context models.

Library layout mirrors the pipeline: parse (.ebm text) -> model
(contexts/machines, well-formedness) -> explorer (reachability, invariant
and deadlock checking) -> refinement / composition / instantiation on top
of explored graphs.  The bundled metro corpus lives under corpus/ at the
repository root and is loaded through ebmc.corpus.
"""

from .values import Value, value_str
from .exprs import Expr, Pred, closure, eval_expr, eval_pred

__all__ = [
    "Value",
    "value_str",
    "Expr",
    "Pred",
    "closure",
    "eval_expr",
    "eval_pred",
]
