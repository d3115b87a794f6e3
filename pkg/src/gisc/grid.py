"""Polar-coordinate admittance of the grid side: line inductor and filter capacitor."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ratfun import Polynomial, RationalFunction

# Filter capacitance committed after scanning c_f_pu over [0, 0.2]; see
# gisc.criterion.calibrate_filter_capacitance for the selection rule.
CALIBRATED_C_F_PU = 0.0


@dataclass(frozen=True)
class GridParams:
    """Network seen from the PCC.  Reactances/susceptances are pu at ``f0_hz``."""

    l_line_pu: float = 0.26
    c_f_pu: float = CALIBRATED_C_F_PU
    u_grid_pu: float = 1.0
    f0_hz: float = 50.0

    def __post_init__(self):
        if not self.l_line_pu > 0:
            raise ValueError(f"l_line_pu must be > 0, got {self.l_line_pu}")
        if not self.c_f_pu >= 0:
            raise ValueError(f"c_f_pu must be >= 0, got {self.c_f_pu}")
        if not self.u_grid_pu > 0:
            raise ValueError(f"u_grid_pu must be > 0, got {self.u_grid_pu}")
        if not self.f0_hz > 0:
            raise ValueError(f"f0_hz must be > 0, got {self.f0_hz}")

    @property
    def omega0(self) -> float:
        return 2.0 * math.pi * self.f0_hz


@dataclass(frozen=True)
class SwingMatrix:
    """The 2x2 rational matrix ``[[a, -b], [b, a]]`` with real-coefficient a, b.

    Sums and products follow the complex arithmetic of ``a + j b``.
    """

    a: RationalFunction
    b: RationalFunction

    @classmethod
    def zero(cls) -> SwingMatrix:
        return cls(RationalFunction.zero(), RationalFunction.zero())

    @classmethod
    def from_complex(cls, w: RationalFunction) -> SwingMatrix:
        """Split a complex-coefficient ``w`` into real parts ``a + j b``."""
        wc = w.conj_coeffs()
        a = (w + wc) * 0.5
        b = (w - wc) * (-0.5j)
        return cls(a.real(), b.real())

    def is_zero(self) -> bool:
        return self.a.is_zero() and self.b.is_zero()

    def __add__(self, other: SwingMatrix) -> SwingMatrix:
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        return SwingMatrix(self.a + other.a, self.b + other.b)

    def __mul__(self, other: SwingMatrix) -> SwingMatrix:
        return SwingMatrix(
            self.a * other.a - self.b * other.b,
            self.a * other.b + self.b * other.a,
        )

    def complex_form(self) -> RationalFunction:
        return self.a + self.b * 1j

    def entries(self):
        """(m11, m12, m21, m22) as rational functions."""
        return self.a, -self.b, self.b, self.a

    def __call__(self, s) -> np.ndarray:
        a = self.a(s)
        b = self.b(s)
        return np.array([[a, -b], [b, a]], dtype=complex)


def _rotation_terms(phi: float):
    return math.cos(phi), math.sin(phi)


def build_line_admittance(grid: GridParams, op) -> SwingMatrix:
    """Line inductor in polar coordinates, complex form ``e^{j phi}/(l (s + j w0))``.

    ``l = l_line_pu / w0`` so the fundamental-frequency reactance is
    ``l_line_pu``.  The rotation angle is ``op.phi_line``.
    """
    w0 = grid.omega0
    ell = grid.l_line_pu / w0
    c, s = _rotation_terms(op.phi_line)
    den = Polynomial([ell * w0 * w0, 0.0, ell])
    a = RationalFunction(Polynomial([w0 * s, c]), den)
    b = RationalFunction(Polynomial([-w0 * c, s]), den)
    return SwingMatrix(a, b)


def build_cap_admittance(grid: GridParams, op) -> SwingMatrix:
    """Filter capacitor in polar coordinates, complex form ``c (s + j w0) e^{j phi}``."""
    if grid.c_f_pu == 0:
        return SwingMatrix.zero()
    w0 = grid.omega0
    cap = grid.c_f_pu / w0
    c, s = _rotation_terms(op.phi_c)
    a = RationalFunction(Polynomial([-cap * w0 * s, cap * c]))
    b = RationalFunction(Polynomial([cap * w0 * c, cap * s]))
    return SwingMatrix(a, b)


def total_network_admittance(line: SwingMatrix, cap: SwingMatrix) -> SwingMatrix:
    return line + cap


def network_admittance(grid: GridParams, op) -> SwingMatrix:
    return total_network_admittance(build_line_admittance(grid, op), build_cap_admittance(grid, op))
