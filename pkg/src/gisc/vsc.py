"""Converter side: parameters, operating point, closed-form admittance and its
finite-difference check against the nonlinear controller model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .numdiff import jacobian
from .ratfun import Polynomial, RationalFunction

if TYPE_CHECKING:
    from .grid import GridParams

VSC_STATE_NAMES = ("theta_pll", "pll_integrator", "ccl_integrator_d", "ccl_integrator_q", "i_d", "i_q")


class OperatingPointError(ValueError):
    def __init__(self, msg, residual=float("nan")):
        super().__init__(f"{msg} (residual={residual:.3e})")
        self.residual = residual


def wrap_angle(x: float) -> float:
    """Map an angle into (-pi, pi]."""
    a = math.remainder(x, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    return a


@dataclass(frozen=True)
class VscParams:
    """Converter parameters.

    ``lf_pu`` is the filter reactance at the base frequency; the controllers
    are ``G_i(s) = kp_i + ki_i/s`` and ``G_pll(s) = kp_pll/s + ki_pll/s**2``
    with ``s`` in rad/s.
    """

    lf_pu: float = 0.2
    kp_i: float = 0.6
    ki_i: float = 15.0
    kp_pll: float = 2.5
    ki_pll: float = 3020.0
    id_ref: float = 1.0
    iq_ref: float = 0.0
    f0_hz: float = 50.0

    def __post_init__(self):
        if not self.lf_pu > 0:
            raise ValueError(f"lf_pu must be > 0, got {self.lf_pu}")
        if not self.f0_hz > 0:
            raise ValueError(f"f0_hz must be > 0, got {self.f0_hz}")
        for name in ("kp_i", "ki_i", "kp_pll", "ki_pll"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    @property
    def omega0(self) -> float:
        return 2.0 * math.pi * self.f0_hz

    @property
    def lf_henry_pu(self) -> float:
        """Inductance in pu*s, so that ``lf_henry_pu * s`` is the impedance."""
        return self.lf_pu / self.omega0

    def g_i(self) -> RationalFunction:
        return RationalFunction(Polynomial([self.ki_i, self.kp_i]), Polynomial([0, 1]))

    def g_pll(self) -> RationalFunction:
        return RationalFunction(Polynomial([self.ki_pll, self.kp_pll]), Polynomial([0, 0, 1]))


@dataclass(frozen=True)
class OperatingPoint:
    """Steady-state phasors.  Angles are measured from the grid source voltage.

    ``phi_line`` and ``phi_c`` are the angles by which the branch admittances
    are rotated into the polar frame of the PCC: voltage angle minus the
    angle of the grid-side current ``I_G = -I`` at the PCC.
    """

    u0: float
    i0: float
    delta0: float
    phi0: float
    phi_line: float
    phi_c: float

    @property
    def u_xy(self) -> complex:
        return self.u0 * complex(math.cos(self.delta0), math.sin(self.delta0))

    @property
    def i_xy(self) -> complex:
        return self.i0 * complex(math.cos(self.phi0), math.sin(self.phi0))


@dataclass(frozen=True)
class PolarAdmittanceMatrix:
    """2x2 map from (dU, U d_delta) to (dI, I d_phi)."""

    m11: RationalFunction
    m12: RationalFunction
    m21: RationalFunction
    m22: RationalFunction

    def entries(self):
        return self.m11, self.m12, self.m21, self.m22

    @property
    def has_swing_offdiagonal(self) -> bool:
        return (self.m12 + self.m21).is_zero()

    def __call__(self, s) -> np.ndarray:
        return np.array([[self.m11(s), self.m12(s)], [self.m21(s), self.m22(s)]], dtype=complex)


def solve_operating_point(vsc: VscParams, grid: GridParams) -> OperatingPoint:
    """Fundamental-frequency solution of source - line - (C_f) - converter.

    The converter injects ``(id_ref + j iq_ref)`` in a frame aligned with the
    PCC voltage ``U e^{j delta}``.  Eliminating the line current gives
    ``Ug e^{-j delta} = U (1 - l c) - j l id + l iq`` which is solved in
    closed form.
    """
    if not math.isclose(vsc.f0_hz, grid.f0_hz):
        raise ValueError("converter and grid base frequencies differ")
    ug, l, c = grid.u_grid_pu, grid.l_line_pu, grid.c_f_pu
    sin_d = l * vsc.id_ref / ug
    if abs(sin_d) >= 1.0:
        raise OperatingPointError("no phasor solution: line too weak for the requested active current", abs(sin_d) - 1.0)
    k = 1.0 - l * c
    if abs(k) < 1e-12:
        raise OperatingPointError("parallel resonance of line and filter capacitor at the base frequency", abs(k))
    delta = math.asin(sin_d)
    u = (ug * math.cos(delta) - l * vsc.iq_ref) / k
    if not u > 0:
        raise OperatingPointError("no solution with positive PCC voltage", u)
    i_dq = complex(vsc.id_ref, vsc.iq_ref)
    i0 = abs(i_dq)
    phi0 = wrap_angle(delta + math.atan2(vsc.iq_ref, vsc.id_ref)) if i0 > 0 else delta

    # KCL/KVL check on the reconstructed phasors
    u_xy = u * complex(math.cos(delta), math.sin(delta))
    i_xy = i_dq * complex(math.cos(delta), math.sin(delta))
    i_line = (u_xy - ug) / (1j * l)
    residual = abs(i_xy - i_line - 1j * c * u_xy)
    if residual > 1e-9:
        raise OperatingPointError("operating point fails Kirchhoff check", residual)

    phi_grid = wrap_angle(delta - (phi0 + math.pi))
    return OperatingPoint(
        u0=u, i0=i0, delta0=wrap_angle(delta), phi0=phi0, phi_line=phi_grid, phi_c=phi_grid
    )


def build_vsc_admittance(vsc: VscParams, op: OperatingPoint):
    """``Y_g = G_i G_pll I0 / ((G_i + Lf s)(1 + G_pll U0))`` and the matrix diag(0, Y_g)."""
    gi = vsc.g_i()
    gpll = vsc.g_pll()
    lf_s = RationalFunction(Polynomial([0, vsc.lf_henry_pu]))
    yg = (gi * gpll * op.i0) / ((gi + lf_s) * (1 + gpll * op.u0))
    zero = RationalFunction.zero()
    return yg, PolarAdmittanceMatrix(zero, zero, zero, yg)


def equilibrium_state(vsc: VscParams, op: OperatingPoint) -> np.ndarray:
    return np.array([op.delta0, 0.0, 0.0, 0.0, vsc.id_ref, vsc.iq_ref])


def vsc_dynamics_rhs(state, pcc_voltage_xy, vsc: VscParams) -> np.ndarray:
    """Time derivative of the converter state.

    State: PLL angle (relative to the grid frame), PLL integrator (rad/s),
    current-controller integrators, dq filter currents.  The modulated
    voltage equals its reference; feed-forward decoupling uses the nominal
    speed while the inductor cross-coupling uses the PLL speed.
    """
    theta, pll_int, xd, xq, i_d, i_q = state
    ux, uy = pcc_voltage_xy
    c, s = math.cos(theta), math.sin(theta)
    u_d = c * ux + s * uy
    u_q = c * uy - s * ux
    w0 = vsc.omega0
    lf = vsc.lf_pu
    w_dev = vsc.kp_pll * u_q + pll_int
    usd = vsc.kp_i * (vsc.id_ref - i_d) + xd + u_d - lf * i_q
    usq = vsc.kp_i * (vsc.iq_ref - i_q) + xq + u_q + lf * i_d
    w_pu = 1.0 + w_dev / w0
    inv_l = w0 / lf
    return np.array(
        [
            w_dev,
            vsc.ki_pll * u_q,
            vsc.ki_i * (vsc.id_ref - i_d),
            vsc.ki_i * (vsc.iq_ref - i_q),
            (usd - u_d + w_pu * lf * i_q) * inv_l,
            (usq - u_q - w_pu * lf * i_d) * inv_l,
        ]
    )


def vsc_current_xy(state) -> complex:
    theta, i_d, i_q = state[0], state[4], state[5]
    return complex(i_d, i_q) * complex(math.cos(theta), math.sin(theta))


def numeric_admittance_scan(vsc: VscParams, op: OperatingPoint, s_points) -> list[np.ndarray]:
    """Frequency response of the finite-difference linearized converter.

    Inputs are the polar voltage perturbations (dU, U d_delta); outputs are
    the current perturbations (dI, I d_phi), taken as the real and imaginary
    parts of ``e^{-j phi0} dI_xy``.
    """
    x0 = equilibrium_state(vsc, op)
    z0 = np.concatenate([x0, [0.0, 0.0]])
    rot_out = complex(math.cos(op.phi0), -math.sin(op.phi0))

    def voltage(z):
        mag = op.u0 + z[6]
        ang = op.delta0 + z[7] / op.u0
        return mag * math.cos(ang), mag * math.sin(ang)

    def f(z):
        return vsc_dynamics_rhs(z[:6], voltage(z), vsc)

    def g(z):
        i = rot_out * vsc_current_xy(z[:6])
        return np.array([i.real, i.imag])

    jf = jacobian(f, z0)
    jg = jacobian(g, z0)
    a, b = jf[:, :6], jf[:, 6:]
    c, d = jg[:, :6], jg[:, 6:]
    eye = np.eye(6)
    out = []
    for s in np.atleast_1d(s_points):
        out.append(c @ np.linalg.solve(s * eye - a, b.astype(complex)) + d)
    return out
