import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gisc import GridParams, VscParams
from gisc.criterion import build_system, closed_loop_roots
from gisc.ratfun import Polynomial, poly_roots
from gisc.sim import (
    EquilibriumError,
    Event,
    Scenario,
    WindowTooShortError,
    assemble_model,
    dominant_frequency,
    eigenvalues,
    linearize_numeric,
    simulate,
)
from gisc.vsc import VSC_STATE_NAMES


def _kick(model, index=0, size=1e-3):
    x0 = model.equilibrium.copy()
    x0[index] += size
    return tuple(x0)


# -- model assembly -----------------------------------------------------------

def test_state_dimensions(vsc):
    assert assemble_model(vsc, GridParams(l_line_pu=0.2, c_f_pu=0.0)).n_states == 6
    assert assemble_model(vsc, GridParams(l_line_pu=0.2, c_f_pu=0.05)).n_states == 10


@pytest.mark.parametrize("c_f", [0.0, 0.05])
def test_equilibrium_is_stationary(vsc, c_f):
    model = assemble_model(vsc, GridParams(l_line_pu=0.2, c_f_pu=c_f))
    assert np.max(np.abs(model.rhs(model.equilibrium))) <= 1e-9
    tr = simulate(model, Scenario(t_end=5.0 if c_f == 0 else 1.0))
    assert np.max(np.abs(tr.states - model.equilibrium)) <= 1e-7


def test_pcc_voltage_matches_operating_point(vsc, grid_unstable):
    from gisc.vsc import solve_operating_point

    model = assemble_model(vsc, grid_unstable)
    op = solve_operating_point(vsc, grid_unstable)
    assert model.pcc_voltage(model.equilibrium) == pytest.approx(op.u_xy, abs=1e-12)


def test_unloaded_lc_ringing():
    # a near-open converter branch leaves the bare L-C resonance w0 / sqrt(l c)
    vsc = VscParams(lf_pu=100.0, id_ref=0.0, iq_ref=0.0)
    grid = GridParams(l_line_pu=0.2, c_f_pu=0.05)
    model = assemble_model(vsc, grid)
    tr = simulate(model, Scenario(t_end=0.1, x0=_kick(model, 6, 0.01)))
    u_eq = complex(model.equilibrium[6], model.equilibrium[7])
    dev = tr.column("u_a") - (u_eq * np.exp(1j * grid.omega0 * tr.time)).real
    f, amp, growth = dominant_frequency(dev, dt=2e-5)
    assert f == pytest.approx(50.0 / math.sqrt(0.2 * 0.05), rel=5e-3)
    assert amp == pytest.approx(0.01, rel=0.05)
    assert abs(growth) < 0.5


# -- integrator ---------------------------------------------------------------

def test_rk4_order(vsc, grid_stable):
    model = assemble_model(vsc, grid_stable)
    x0 = _kick(model, 0, 0.05)
    ref = simulate(model, Scenario(t_end=0.05, dt=2.5e-6, x0=x0)).states[-1]
    errs = [np.max(np.abs(simulate(model, Scenario(t_end=0.05, dt=dt, x0=x0)).states[-1] - ref))
            for dt in (4e-5, 2e-5)]
    assert errs[0] / errs[1] >= 8.0


def test_step_halving_changes_little(vsc, grid_stable):
    model = assemble_model(vsc, grid_stable)
    x0 = _kick(model, 0, 0.05)
    a = simulate(model, Scenario(t_end=0.5, dt=2e-5, x0=x0))
    b = simulate(model, Scenario(t_end=0.5, dt=1e-5, x0=x0))
    assert np.max(np.abs(a.states - b.states[::2])) < 1e-6


def test_dt_limits(vsc, grid_stable):
    model = assemble_model(vsc, grid_stable)
    with pytest.raises(ValueError):
        simulate(model, Scenario(t_end=0.1, dt=2e-4))
    with pytest.raises(ValueError):
        simulate(model, Scenario(t_end=0.1, dt=0.0))
    with pytest.raises(ValueError):
        simulate(model, Scenario(t_end=0.1, x0=(0.0, 1.0)))


def test_stable_perturbation_decays(vsc, grid_stable):
    model = assemble_model(vsc, grid_stable)
    tr = simulate(model, Scenario(t_end=3.0, x0=_kick(model, 0, 0.01)))
    u = tr.column("u_mag")
    early = np.ptp(u[(tr.time > 0.2) & (tr.time < 0.7)])
    late = np.ptp(u[tr.time > 2.5])
    rate = eigenvalues(linearize_numeric(model))[0].real
    assert rate < 0
    assert late / early == pytest.approx(math.exp(rate * 2.3), rel=0.1)


def test_small_signal_matches_linearization(vsc, grid_stable):
    model = assemble_model(vsc, grid_stable)
    tr = simulate(model, Scenario(t_end=3.0, x0=_kick(model, 0, 1e-4)))
    f, _, growth = dominant_frequency(tr, "u_mag", window=(0.5, 3.0))
    lam = eigenvalues(linearize_numeric(model))
    osc = [z for z in lam if 20 < z.imag < 100 * math.pi]
    dom = max(osc, key=lambda z: z.real)
    assert f == pytest.approx(dom.imag / (2 * math.pi), rel=0.02)
    assert growth == pytest.approx(dom.real, abs=0.02 * abs(dom))


# -- events and output --------------------------------------------------------

def test_event_validation(vsc, grid_stable):
    model = assemble_model(vsc, grid_stable)
    with pytest.raises(ValueError, match="unknown event"):
        simulate(model, Scenario(t_end=0.01, events=(Event(0.001, "nope", 1.0),)))
    with pytest.raises(ValueError, match="capacitor"):
        simulate(model, Scenario(t_end=0.01, events=(Event(0.001, "c_f_pu", 0.05),)))


def test_event_is_logged_and_states_continuous(vsc, grid_stable):
    model = assemble_model(vsc, grid_stable)
    tr = simulate(model, Scenario(t_end=0.02, events=(Event(0.01, "l_line_pu", 0.26),)))
    assert tr.events and tr.events[0][0] == pytest.approx(0.01)
    k = int(round(0.01 / 2e-5))
    assert np.max(np.abs(tr.states[k + 1] - tr.states[k])) < 1e-2
    # the algebraic PCC voltage follows the new line reactance at once
    assert abs(tr.column("u_mag")[k] - tr.column("u_mag")[k - 1]) > 1e-3


def test_csv_header_and_rows(vsc, grid_stable, tmp_path):
    model = assemble_model(vsc, grid_stable)
    tr = simulate(model, Scenario(t_end=0.002))
    path = tmp_path / "trace.csv"
    tr.write_csv(path, every=10)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", *VSC_STATE_NAMES, "u_mag", "delta", "i_mag"]
    assert len(rows) == 1 + 11
    assert float(rows[-1][0]) == pytest.approx(0.002)


def test_growing_oscillation_after_line_step(line_step_trace):
    tr = line_step_trace
    u = tr.column("u_mag")
    before = np.ptp(u[(tr.time > 1.0) & (tr.time < 1.99)])
    early = np.ptp(u[(tr.time > 3.0) & (tr.time < 4.0)])
    late = np.ptp(u[(tr.time > 9.0) & (tr.time <= 10.0)])
    assert before < 1e-9
    assert late > 1.3 * early > 0
    assert not tr.diverged


# -- eigenvalues --------------------------------------------------------------

def test_eigenvalues_of_diagonal():
    lam = eigenvalues(np.diag([-1.0, -3.0, 2.0]))
    assert np.allclose(lam, [2.0, -1.0, -3.0])


def test_eigenvalues_of_rotation():
    w = 5.0
    lam = eigenvalues(np.array([[0.0, -w], [w, 0.0]]))
    assert np.allclose(lam, [-5j, 5j])


def test_eigenvalue_input_checks():
    with pytest.raises(ValueError):
        eigenvalues(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eigenvalues(np.array([[np.nan]]))


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6))
def test_companion_matrix_matches_poly_roots(coeffs):
    c = [*coeffs, 1.0]
    n = len(coeffs)
    comp = np.zeros((n, n))
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -np.array(coeffs)
    lam = sorted(eigenvalues(comp), key=lambda z: (z.real, z.imag))
    ref = poly_roots(Polynomial(c))
    for z in ref:
        assert min(abs(z - q) for q in lam) <= 1e-5 * max(1.0, abs(z))


def test_decoupled_block_keeps_its_eigenvalues(rng):
    a = rng.normal(size=(3, 3))
    b = rng.normal(size=(2, 2))
    m = np.zeros((5, 5))
    m[:3, :3], m[3:, 3:] = a, b
    m[3:, :3] = rng.normal(size=(2, 3))  # one-way coupling leaves the spectrum alone
    ref = np.concatenate([np.linalg.eigvals(a), np.linalg.eigvals(b)])
    for z in eigenvalues(m):
        assert np.min(np.abs(ref - z)) <= 1e-9 * max(1.0, abs(z))


def test_linearization_rejects_non_equilibrium(vsc, grid_stable):
    model = assemble_model(vsc, grid_stable)
    with pytest.raises(EquilibriumError):
        linearize_numeric(model, model.equilibrium + 0.1)


@pytest.mark.parametrize("l_line, c_f", [(0.20, 0.0), (0.26, 0.0), (0.26, 0.05)])
def test_state_matrix_shares_closed_loop_roots(vsc, l_line, c_f):
    grid = GridParams(l_line_pu=l_line, c_f_pu=c_f)
    lam = eigenvalues(linearize_numeric(assemble_model(vsc, grid)))
    roots, _ = closed_loop_roots(build_system(vsc, grid).loop_gain)
    for r in roots:
        assert np.min(np.abs(lam - r)) <= 1e-3 * max(1.0, abs(r))


# -- spectral estimate --------------------------------------------------------

def test_dominant_frequency_synthetic():
    dt = 1e-3
    t = np.arange(0, 6.0, dt)
    x = 0.3 + 0.01 * np.exp(0.5 * t) * np.sin(2 * math.pi * 8.0 * t)
    f, amp, growth = dominant_frequency(x, dt=dt)
    assert f == pytest.approx(8.0, abs=0.05)
    assert growth == pytest.approx(0.5, abs=0.02)
    assert amp > 0


def test_dominant_frequency_of_constant():
    assert dominant_frequency(np.full(1000, 2.5), dt=1e-3) == (0.0, 0.0, 0.0)


def test_dominant_frequency_window_too_short():
    t = np.arange(0, 1.0, 1e-3)
    with pytest.raises(WindowTooShortError):
        dominant_frequency(np.sin(2 * math.pi * 8.0 * t), dt=1e-3)
    with pytest.raises(WindowTooShortError):
        dominant_frequency(np.zeros(10), dt=1e-3)


def test_line_step_oscillation_frequency(line_step_trace, vsc):
    f, _, growth = dominant_frequency(line_step_trace, "u_mag", window=(3.0, 10.0))
    lam = eigenvalues(linearize_numeric(assemble_model(vsc, GridParams(l_line_pu=0.26))))
    top = lam[0]
    assert top.real > 0
    assert f == pytest.approx(abs(top.imag) / (2 * math.pi), abs=0.05)
    assert growth == pytest.approx(top.real, abs=0.02)
