"""Multiparametric linear systems: pencils, dilations, realizations and von Neumann violations."""

__version__ = "0.1.0"

from .linalg import Colligation, SubspaceBasis, spectral_norm, stack_colligation  # noqa: E402
from .pencil import (  # noqa: E402
    PencilReport,
    Verdict,
    eval_pencil,
    is_conservative_algebraic,
    random_conservative_pencil,
    torus_norm_max,
)
from .transfer import CommutingTuple, eval_on_tuple, pencil_on_tuple, taylor_coeff, transfer_eval  # noqa: E402

__all__ = [
    "Colligation",
    "CommutingTuple",
    "PencilReport",
    "SubspaceBasis",
    "Verdict",
    "eval_on_tuple",
    "eval_pencil",
    "is_conservative_algebraic",
    "pencil_on_tuple",
    "random_conservative_pencil",
    "spectral_norm",
    "stack_colligation",
    "taylor_coeff",
    "torus_norm_max",
    "transfer_eval",
]
