"""Generalized admittances/impedances and the sequence (T-transform) split."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import SwingMatrix
from .ratfun import RationalFunction
from .vsc import PolarAdmittanceMatrix

_R2 = 1.0 / math.sqrt(2.0)
T = _R2 * np.array([[1, 1j], [1, -1j]])
T_INV = _R2 * np.array([[1, 1], [-1j, 1j]])


class StructureError(ValueError):
    pass


class NotApplicableError(ValueError):
    """The converter's generalized admittance vanishes (passive VSC)."""


@dataclass(frozen=True)
class SequencePair:
    y_plus: RationalFunction
    y_minus: RationalFunction

    @property
    def z_plus(self) -> RationalFunction:
        return self.y_plus.inv()

    @property
    def z_minus(self) -> RationalFunction:
        return self.y_minus.inv()


@dataclass(frozen=True)
class GeneralizedTriple:
    yg1: RationalFunction
    yg2: RationalFunction
    yg3: RationalFunction
    owner: str

    def impedances(self):
        """(zg1, zg2, zg3); ``None`` where the admittance is identically zero."""
        return tuple(None if y.is_zero() else y.inv() for y in (self.yg1, self.yg2, self.yg3))


def _entries(m):
    if isinstance(m, (SwingMatrix, PolarAdmittanceMatrix)):
        return m.entries()
    raise TypeError(f"expected SwingMatrix or PolarAdmittanceMatrix, got {type(m).__name__}")


def t_similarity(m: np.ndarray) -> np.ndarray:
    """``T M T^-1`` for a numeric 2x2 matrix."""
    return T @ m @ T_INV


def sequence_decompose(m) -> SequencePair:
    """Diagonalize a swing-structured matrix: ``T M T^-1 = diag(a + j b, a - j b)``."""
    if isinstance(m, SwingMatrix):
        a, b = m.a, m.b
    else:
        m11, m12, m21, m22 = _entries(m)
        if not (m11 - m22).is_zero() or not (m12 + m21).is_zero():
            raise StructureError("matrix is not of the form [[a, -b], [b, a]]")
        a, b = m11, m21
    return SequencePair(a + b * 1j, a - b * 1j)


def generalized_triple(m, owner: str | None = None) -> GeneralizedTriple:
    """``(D - A, A + jC, A - jC)`` for ``m = [[A, -C], [C, D]]``."""
    m11, m12, m21, m22 = _entries(m)
    if not (m12 + m21).is_zero():
        raise StructureError("off-diagonal entries m12 and m21 are not negatives of each other")
    if owner is None:
        owner = "grid" if isinstance(m, SwingMatrix) else "vsc"
    a, c, d = m11, m21, m22
    return GeneralizedTriple(d - a, a + c * 1j, a - c * 1j, owner)


def series_resonance_impedance(vsc_triple: GeneralizedTriple, grid_triple: GeneralizedTriple) -> RationalFunction:
    """``2 Z_g1(vsc) + Z_g2(grid) + Z_g3(grid)``; its zeros are the closed-loop roots."""
    if vsc_triple.yg1.is_zero():
        raise NotApplicableError("criterion not applicable - VSC passive (Y_g identically zero)")
    if grid_triple.yg2.is_zero() or grid_triple.yg3.is_zero():
        raise ZeroDivisionError("grid sequence admittance is identically zero")
    return vsc_triple.yg1.inv() * 2 + grid_triple.yg2.inv() + grid_triple.yg3.inv()
