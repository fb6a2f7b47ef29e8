"""Gradient checks and brute-force oracles for the numeric core"""

from dual_view_seg.verification.gradcheck import (
    GRADCHECK_TARGETS,
    GradcheckResult,
    run_gradcheck,
)
from dual_view_seg.verification.oracles import ORACLES, OracleResult, run_oracle

__all__ = [
    "GRADCHECK_TARGETS",
    "ORACLES",
    "GradcheckResult",
    "OracleResult",
    "run_gradcheck",
    "run_oracle",
]
