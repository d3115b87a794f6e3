import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gisc import GridParams, VscParams
from gisc.ratfun import Polynomial, RationalFunction
from gisc.vsc import (
    OperatingPointError,
    build_vsc_admittance,
    equilibrium_state,
    numeric_admittance_scan,
    solve_operating_point,
    vsc_current_xy,
    vsc_dynamics_rhs,
    wrap_angle,
)

W0 = 100 * math.pi


def test_parameter_validation():
    with pytest.raises(ValueError):
        VscParams(lf_pu=0.0)
    with pytest.raises(ValueError):
        VscParams(ki_pll=-1.0)
    with pytest.raises(ValueError):
        VscParams(f0_hz=0.0)


def test_controller_transfer_functions(vsc):
    assert vsc.g_pll()(10j) == pytest.approx(-30.2 - 0.25j, abs=1e-12)
    assert vsc.g_i()(15j) == pytest.approx(0.6 - 1.0j, abs=1e-12)


def test_wrap_angle_range():
    for x in (-7.0, -math.pi, 0.0, math.pi, 3 * math.pi, 10.0):
        y = wrap_angle(x)
        assert -math.pi < y <= math.pi
        assert math.isclose(math.cos(y), math.cos(x), abs_tol=1e-12)


# -- operating point ----------------------------------------------------------

def test_operating_point_inductive_line(vsc):
    op = solve_operating_point(vsc, GridParams(l_line_pu=0.2, c_f_pu=0.0))
    # closed form: |U - j X I| = 1 with I = 1 aligned to U
    assert op.u0 == pytest.approx(math.sqrt(1 - 0.2**2), abs=1e-12)
    assert op.u0 == pytest.approx(0.97980, abs=1e-5)
    assert op.delta0 == pytest.approx(math.atan(0.2 / 0.97979589711), abs=1e-9)
    assert op.delta0 == pytest.approx(0.20136, abs=1e-5)
    assert op.phi0 == pytest.approx(op.delta0)
    assert op.i0 == 1.0
    # branch angle: U against the grid-side current -I, half a turn at unity power factor
    assert abs(op.phi_line) == pytest.approx(math.pi)
    assert op.phi_c == op.phi_line


def test_phasor_equation_holds(vsc):
    op = solve_operating_point(vsc, GridParams(l_line_pu=0.2, c_f_pu=0.0))
    ug = op.u_xy - 1j * 0.2 * op.i_xy
    assert abs(ug) == pytest.approx(1.0, abs=1e-12)
    assert ug.imag == pytest.approx(0.0, abs=1e-12)


def test_zero_current_gives_divider_voltage():
    vsc0 = VscParams(id_ref=0.0, iq_ref=0.0)
    op = solve_operating_point(vsc0, GridParams(l_line_pu=0.2, c_f_pu=0.05))
    assert op.i0 == 0.0
    # unloaded L-C divider: U = Ug / (1 - l c)
    assert op.u0 == pytest.approx(1.0 / (1 - 0.2 * 0.05), rel=1e-12)
    assert op.delta0 == pytest.approx(0.0, abs=1e-15)


def test_kirchhoff_substitution_with_capacitor(vsc):
    grid = GridParams(l_line_pu=0.2, c_f_pu=0.05)
    op = solve_operating_point(vsc, grid)
    u, i = op.u_xy, op.i_xy
    i_line = (u - grid.u_grid_pu) / (1j * grid.l_line_pu)
    i_cap = 1j * grid.c_f_pu * u
    assert abs(i - i_line - i_cap) <= 1e-9
    # converter current aligned with the PCC voltage (unity power factor)
    assert cmath.phase(i) == pytest.approx(cmath.phase(u), abs=1e-12)


def test_reactive_reference_moves_current_angle():
    op = solve_operating_point(VscParams(iq_ref=0.3), GridParams(l_line_pu=0.2))
    assert op.phi0 - op.delta0 == pytest.approx(math.atan2(0.3, 1.0), abs=1e-12)
    assert op.i0 == pytest.approx(math.hypot(1.0, 0.3))


def test_weak_line_has_no_solution(vsc):
    with pytest.raises(OperatingPointError):
        solve_operating_point(vsc, GridParams(l_line_pu=1.2))


def test_base_frequency_mismatch(vsc):
    with pytest.raises(ValueError):
        solve_operating_point(vsc, GridParams(f0_hz=60.0))


@given(st.floats(0.05, 0.9), st.floats(0.0, 0.3), st.floats(-0.5, 0.5))
def test_operating_point_invariants(l_line, c_f, iq):
    vsc = VscParams(iq_ref=iq)
    try:
        op = solve_operating_point(vsc, GridParams(l_line_pu=l_line, c_f_pu=c_f))
    except OperatingPointError:
        return
    assert op.u0 > 0 and op.i0 >= 0
    for a in (op.delta0, op.phi0, op.phi_line, op.phi_c):
        assert -math.pi < a <= math.pi
    res = op.i_xy - (op.u_xy - 1.0) / (1j * l_line) - 1j * c_f * op.u_xy
    assert abs(res) <= 1e-9


# -- closed-form admittance ---------------------------------------------------

def test_yg_matches_expanded_form(vsc):
    op = solve_operating_point(vsc, GridParams(l_line_pu=0.2, c_f_pu=0.0))
    yg, _ = build_vsc_admittance(vsc, op)
    u0 = op.u0
    num = Polynomial([15, 0.6]) * Polynomial([3020, 2.5])
    den = Polynomial([15, 0.6, 0.2 / W0]) * Polynomial([u0 * 3020, u0 * 2.5, 1])
    ref = RationalFunction(num, den, canonical=False)
    for w in np.logspace(-1, 4, 40):
        assert yg(1j * w) == pytest.approx(ref(1j * w), rel=1e-12)


def test_yg_structure(vsc, grid_unstable):
    op = solve_operating_point(vsc, grid_unstable)
    yg, mat = build_vsc_admittance(vsc, op)
    assert mat.m11.is_zero() and mat.m12.is_zero() and mat.m21.is_zero()
    assert mat.m22 is yg
    assert mat.has_swing_offdiagonal
    assert yg.is_real()
    for w in (0.5, 30.0, 700.0):
        assert yg(-1j * w) == pytest.approx(yg(1j * w).conjugate(), rel=1e-13)


def test_zero_current_admittance_vanishes():
    vsc0 = VscParams(id_ref=0.0)
    op = solve_operating_point(vsc0, GridParams(l_line_pu=0.2))
    yg, _ = build_vsc_admittance(vsc0, op)
    assert yg.is_zero()


def test_yg_peaks_near_pll_natural_frequency(vsc, grid_stable):
    op = solve_operating_point(vsc, grid_stable)
    yg, _ = build_vsc_admittance(vsc, op)
    w = np.logspace(0, 3, 3001)
    peak = w[np.argmax(np.abs(yg(1j * w)))]
    assert peak == pytest.approx(math.sqrt(vsc.ki_pll * op.u0), rel=0.1)


# -- nonlinear converter model ------------------------------------------------

def test_equilibrium_residual(vsc, grid_unstable):
    op = solve_operating_point(vsc, grid_unstable)
    x0 = equilibrium_state(vsc, op)
    u = op.u_xy
    assert np.max(np.abs(vsc_dynamics_rhs(x0, (u.real, u.imag), vsc))) <= 1e-9
    assert vsc_current_xy(x0) == pytest.approx(op.i_xy, abs=1e-14)


def test_pll_proportional_path(vsc, grid_stable):
    op = solve_operating_point(vsc, grid_stable)
    x0 = equilibrium_state(vsc, op)
    eps = 1e-7
    # raise u_q by eps: rotate (0, eps) from the PLL frame into xy
    du = 1j * eps * cmath.exp(1j * x0[0])
    u = op.u_xy + du
    d = vsc_dynamics_rhs(x0, (u.real, u.imag), vsc)
    assert d[0] == pytest.approx(vsc.kp_pll * eps, rel=1e-6)
    assert d[1] == pytest.approx(vsc.ki_pll * eps, rel=1e-6)


def test_numeric_scan_matches_closed_form(vsc, grid_unstable):
    op = solve_operating_point(vsc, grid_unstable)
    yg, _ = build_vsc_admittance(vsc, op)
    omegas = np.logspace(0, 3, 20)
    mats = numeric_admittance_scan(vsc, op, 1j * omegas)
    for w, m in zip(omegas, mats):
        y = yg(1j * w)
        assert abs(m[1, 1] - y) <= 1e-6 * abs(y)
        assert max(abs(m[0, 0]), abs(m[0, 1]), abs(m[1, 0])) <= 1e-6


def test_numeric_scan_at_50_rad_s(vsc):
    op = solve_operating_point(vsc, GridParams())
    m = numeric_admittance_scan(vsc, op, [50j])[0]
    yg, _ = build_vsc_admittance(vsc, op)
    assert m[1, 1] == pytest.approx(yg(50j), rel=1e-6)
    assert np.max(np.abs([m[0, 0], m[0, 1], m[1, 0]])) <= 1e-6


def test_numeric_scan_zero_current():
    vsc0 = VscParams(id_ref=0.0)
    op = solve_operating_point(vsc0, GridParams(l_line_pu=0.2))
    m = numeric_admittance_scan(vsc0, op, [1j, 50j, 1000j])
    assert np.max(np.abs(m)) <= 1e-6
