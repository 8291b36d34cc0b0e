"""Symmetry indices and bulk-edge correspondence for one-dimensional quantum walks."""

from .indices import (
    AmbiguousAttribution,
    GapClosed,
    IndexTable,
    analyze_cut,
    bulk_winding,
    compare_gentle_vs_local,
    cut_edge_states,
    verify_cut_independence,
)
from .lattice import BandedUnitary, CellStructure, StateVector, TIWalkSymbol, check_unitary
from .models import (
    WalkModel,
    build_window,
    crossover,
    decoupler_gentle,
    decoupler_reflection,
    four_step_model,
    model_from_angles,
    split_step_model,
)
from .schur import SchurContext, eigendetect, renewal_check, schur_eval
from .spectral import eigenspace_near, essential_gap
from .symmetry import SYMMETRY_TYPES, IndexValue, SymmetryRep, check_admissible, rep_index

__version__ = "0.1.0"

__all__ = [
    "AmbiguousAttribution",
    "BandedUnitary",
    "CellStructure",
    "GapClosed",
    "IndexTable",
    "IndexValue",
    "SYMMETRY_TYPES",
    "SchurContext",
    "StateVector",
    "SymmetryRep",
    "TIWalkSymbol",
    "WalkModel",
    "analyze_cut",
    "build_window",
    "bulk_winding",
    "check_admissible",
    "check_unitary",
    "compare_gentle_vs_local",
    "crossover",
    "cut_edge_states",
    "decoupler_gentle",
    "decoupler_reflection",
    "eigendetect",
    "eigenspace_near",
    "essential_gap",
    "four_step_model",
    "model_from_angles",
    "rep_index",
    "renewal_check",
    "schur_eval",
    "split_step_model",
    "verify_cut_independence",
]
