"""Exact remote state preparation with a finite classical channel."""
from .protocol import RunResult, Transcript, run, run_all_branches
from .statekit import BipartiteState, PureState, SchmidtNumberError, SchmidtVector

__all__ = [
    "BipartiteState",
    "PureState",
    "RunResult",
    "SchmidtNumberError",
    "SchmidtVector",
    "Transcript",
    "run",
    "run_all_branches",
]
