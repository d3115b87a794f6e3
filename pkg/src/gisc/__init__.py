"""Generalized-impedance stability analysis for grid-connected converters.

The public surface is re-exported here; see the submodules for details:

* :mod:`gisc.ratfun`    polynomial / rational-function algebra
* :mod:`gisc.vsc`       converter model, operating point, ``Y_g(s)``
* :mod:`gisc.grid`      line and filter-capacitor admittances
* :mod:`gisc.genimp`    generalized admittances and sequence split
* :mod:`gisc.criterion` loop gain, Nyquist verdict, closed-loop roots
* :mod:`gisc.sim`       nonlinear time-domain simulator
"""

from .criterion import (
    FrequencyGrid,
    NyquistReport,
    StationaryFrequencyPair,
    assess_stability,
    assess_system,
    build_system,
    closed_loop_roots,
    mimo_char_eval,
    nyquist_curve,
    open_loop_gain,
    winding_number,
)
from .genimp import generalized_triple, sequence_decompose, series_resonance_impedance
from .grid import CALIBRATED_C_F_PU, GridParams, SwingMatrix, build_cap_admittance, build_line_admittance
from .ratfun import Polynomial, RationalFunction, poly_roots, rf_arith, rf_conj_coeffs, rf_eval
from .sim import Event, Scenario, assemble_model, dominant_frequency, eigenvalues, linearize_numeric, simulate
from .vsc import OperatingPoint, VscParams, build_vsc_admittance, numeric_admittance_scan, solve_operating_point

__version__ = "0.1.0"

__all__ = [
    "CALIBRATED_C_F_PU",
    "Event",
    "FrequencyGrid",
    "GridParams",
    "NyquistReport",
    "OperatingPoint",
    "Polynomial",
    "RationalFunction",
    "Scenario",
    "StationaryFrequencyPair",
    "SwingMatrix",
    "VscParams",
    "assemble_model",
    "assess_stability",
    "assess_system",
    "build_cap_admittance",
    "build_line_admittance",
    "build_system",
    "build_vsc_admittance",
    "closed_loop_roots",
    "dominant_frequency",
    "eigenvalues",
    "generalized_triple",
    "linearize_numeric",
    "mimo_char_eval",
    "numeric_admittance_scan",
    "nyquist_curve",
    "open_loop_gain",
    "poly_roots",
    "rf_arith",
    "rf_conj_coeffs",
    "rf_eval",
    "sequence_decompose",
    "series_resonance_impedance",
    "simulate",
    "solve_operating_point",
    "winding_number",
]
