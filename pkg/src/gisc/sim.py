"""Nonlinear time-domain model of converter + network, numerical linearization
and spectral estimation of simulated oscillations.

Converter states live in the PLL dq frame, network states in the grid xy
frame rotating at the nominal speed.  Time is in seconds, quantities in pu.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal as sps

from .grid import GridParams
from .numdiff import jacobian
from .vsc import VSC_STATE_NAMES, VscParams, solve_operating_point, vsc_dynamics_rhs

NETWORK_STATE_NAMES = ("u_cx", "u_cy", "i_line_x", "i_line_y")
DERIVED_COLUMNS = ("u_mag", "delta", "i_mag")
DIVERGENCE_LIMIT = 1e6


class EquilibriumError(ValueError):
    def __init__(self, residual):
        super().__init__(f"base point is not an equilibrium (max |f(x)| = {residual:.3e})")
        self.residual = residual


class WindowTooShortError(ValueError):
    pass


@dataclass(frozen=True)
class SystemModel:
    vsc: VscParams
    grid: GridParams
    state_names: tuple[str, ...]
    equilibrium: np.ndarray = field(repr=False)

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    @property
    def has_capacitor(self) -> bool:
        return self.grid.c_f_pu > 0

    def pcc_voltage(self, x) -> complex:
        """PCC voltage in the grid frame.

        Without the filter capacitor the PCC node is algebraic:
        ``U = Ug + j l I + (l/lf) e^{j theta} E`` with ``E`` the current
        controller output, obtained by substituting the inductor dynamics
        into the line equation.
        """
        if self.has_capacitor:
            return complex(x[6], x[7])
        vsc, g = self.vsc, self.grid
        theta = x[0]
        rot = complex(math.cos(theta), math.sin(theta))
        i_xy = complex(x[4], x[5]) * rot
        e = complex(vsc.kp_i * (vsc.id_ref - x[4]) + x[2], vsc.kp_i * (vsc.iq_ref - x[5]) + x[3])
        return g.u_grid_pu + 1j * g.l_line_pu * i_xy + (g.l_line_pu / vsc.lf_pu) * rot * e

    def vsc_current(self, x) -> complex:
        return complex(x[4], x[5]) * complex(math.cos(x[0]), math.sin(x[0]))

    def rhs(self, x) -> np.ndarray:
        u = self.pcc_voltage(x)
        dv = vsc_dynamics_rhs(x[:6], (u.real, u.imag), self.vsc)
        if not self.has_capacitor:
            return dv
        g = self.grid
        w0 = g.omega0
        i_xy = self.vsc_current(x)
        i_l = complex(x[8], x[9])
        du = w0 * (i_xy - i_l) / g.c_f_pu - 1j * w0 * u
        dil = w0 * (u - g.u_grid_pu) / g.l_line_pu - 1j * w0 * i_l
        return np.concatenate([dv, [du.real, du.imag, dil.real, dil.imag]])


def assemble_model(vsc: VscParams, grid: GridParams) -> SystemModel:
    op = solve_operating_point(vsc, grid)
    x0 = [op.delta0, 0.0, 0.0, 0.0, vsc.id_ref, vsc.iq_ref]
    names = VSC_STATE_NAMES
    if grid.c_f_pu > 0:
        u = op.u_xy
        i_l = (u - grid.u_grid_pu) / (1j * grid.l_line_pu)
        x0 += [u.real, u.imag, i_l.real, i_l.imag]
        names = names + NETWORK_STATE_NAMES
    return SystemModel(vsc, grid, names, np.array(x0))


@dataclass(frozen=True)
class Event:
    """Step of one parameter (a field of GridParams or VscParams) at ``time``."""

    time: float
    name: str
    value: float


@dataclass(frozen=True)
class Scenario:
    t_end: float
    dt: float = 2e-5
    events: tuple[Event, ...] = ()
    x0: tuple[float, ...] | None = None


@dataclass
class SimTrace:
    time: np.ndarray
    states: np.ndarray
    state_names: tuple[str, ...]
    signals: dict[str, np.ndarray]
    events: list[tuple[float, str]]
    diverged: bool = False
    divergence_time: float | None = None

    def column(self, name: str) -> np.ndarray:
        if name in self.signals:
            return self.signals[name]
        return self.states[:, self.state_names.index(name)]

    def write_csv(self, path, every: int = 1) -> None:
        header = ("t",) + self.state_names + DERIVED_COLUMNS
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for k in range(0, self.time.size, every):
                row = [self.time[k], *self.states[k], *(self.signals[c][k] for c in DERIVED_COLUMNS)]
                w.writerow([repr(float(v)) for v in row])


def _apply_event(model: SystemModel, ev: Event) -> SystemModel:
    if ev.name in GridParams.__dataclass_fields__:
        if ev.name == "c_f_pu" and (ev.value > 0) != model.has_capacitor:
            raise ValueError("c_f_pu events may not add or remove the capacitor node")
        return replace(model, grid=replace(model.grid, **{ev.name: ev.value}))
    if ev.name in VscParams.__dataclass_fields__:
        return replace(model, vsc=replace(model.vsc, **{ev.name: ev.value}))
    raise ValueError(f"unknown event parameter {ev.name!r}")


def simulate(model: SystemModel, scenario: Scenario) -> SimTrace:
    """Fixed-step RK4.  States are continuous across parameter events."""
    dt = scenario.dt
    if not 0 < dt <= 1e-4:
        raise ValueError("dt must be in (0, 1e-4] s")
    n_steps = int(round(scenario.t_end / dt))
    x = np.array(scenario.x0 if scenario.x0 is not None else model.equilibrium, dtype=float)
    if x.size != model.n_states:
        raise ValueError(f"initial state has {x.size} entries, model has {model.n_states}")
    pending = sorted(scenario.events, key=lambda e: e.time)
    ev_steps = [int(round(e.time / dt)) for e in pending]
    log: list[tuple[float, str]] = []

    xs = np.empty((n_steps + 1, x.size))
    xs[0] = x
    diverged = False
    last = n_steps
    cur = model
    ei = 0
    f = cur.rhs
    for k in range(n_steps):
        while ei < len(pending) and ev_steps[ei] == k:
            cur = _apply_event(cur, pending[ei])
            f = cur.rhs
            log.append((k * dt, f"{pending[ei].name} -> {pending[ei].value!r}"))
            ei += 1
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x[1:])) > DIVERGENCE_LIMIT:
            diverged = True
            last = k
            log.append(((k + 1) * dt, "diverged"))
            break
        xs[k + 1] = x
    xs = xs[: last + 1]
    t = np.arange(xs.shape[0]) * dt

    # derived signals use the parameters active at each instant
    models = [model]
    bounds = [0]
    m = model
    for ev, ks in zip(pending, ev_steps):
        m = _apply_event(m, ev)
        models.append(m)
        bounds.append(ks)
    u = np.empty(t.size, dtype=complex)
    for j, mod in enumerate(models):
        lo = bounds[j]
        hi = bounds[j + 1] if j + 1 < len(bounds) else t.size
        for k in range(lo, min(hi, t.size)):
            u[k] = mod.pcc_voltage(xs[k])
    i = (xs[:, 4] + 1j * xs[:, 5]) * np.exp(1j * xs[:, 0])
    rot = np.exp(1j * model.grid.omega0 * t)
    signals = {
        "u_mag": np.abs(u),
        "delta": np.angle(u),
        "i_mag": np.abs(i),
        "u_a": (u * rot).real,
        "i_a": (i * rot).real,
    }
    return SimTrace(t, xs, model.state_names, signals, log, diverged, (last + 1) * dt if diverged else None)


def linearize_numeric(model: SystemModel, x0=None) -> np.ndarray:
    """Finite-difference state matrix at the equilibrium."""
    x0 = model.equilibrium if x0 is None else np.asarray(x0, dtype=float)
    res = float(np.max(np.abs(model.rhs(x0))))
    if res > 1e-9:
        raise EquilibriumError(res)
    return jacobian(model.rhs, x0)


def eigenvalues(a) -> np.ndarray:
    """Spectrum sorted by real part (descending), then imaginary part."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.all(np.isfinite(a)):
        raise ValueError("eigenvalues need a finite square matrix")
    try:
        lam = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ArithmeticError(f"eigenvalue iteration did not converge: {exc}") from exc
    # A - lam I must be numerically singular; this holds even where balancing
    # spoils the eigenvectors of badly scaled matrices
    norm = np.linalg.norm(a, 2) if a.size else 0.0
    eye = np.eye(a.shape[0])
    for k in range(lam.size):
        smin = np.linalg.svd(a - lam[k] * eye, compute_uv=False)[-1]
        if smin > 1e-8 * max(norm, 1e-300):
            raise ArithmeticError(f"eigenvalue {k} leaves A - lam I regular (sigma_min {smin:.3e})")
    order = sorted(range(lam.size), key=lambda k: (-lam[k].real, lam[k].imag))
    return lam[order]


def dominant_frequency(trace, name: str | None = None, window=None, dt: float | None = None):
    """Frequency (Hz), amplitude and exponential growth rate (1/s) of the
    strongest oscillation in a signal.

    ``trace`` is either a :class:`SimTrace` (with ``name`` selecting the
    signal) or a 1-D array sampled at ``dt``.  The signal is linearly
    detrended and Hann-windowed; the spectral peak is refined by parabolic
    interpolation of the log-magnitude.  The growth rate is the slope of the
    log-envelope of the band around the peak.  A signal with no oscillatory
    content returns ``(0.0, 0.0, 0.0)``.
    """
    if isinstance(trace, SimTrace):
        t = trace.time
        x = trace.column(name)
    else:
        x = np.asarray(trace, dtype=float)
        t = np.arange(x.size) * dt
    if window is not None:
        mask = (t >= window[0]) & (t <= window[1])
        t, x = t[mask], x[mask]
    if x.size < 16:
        raise WindowTooShortError("window holds fewer than 16 samples")
    h = t[1] - t[0]
    y = sps.detrend(x, type="linear")
    if np.max(np.abs(y)) <= 1e-12 * max(1.0, float(np.max(np.abs(x)))):
        return 0.0, 0.0, 0.0

    n = y.size
    win = np.hanning(n)
    nfft = 16 * (1 << (n - 1).bit_length())
    spec = np.abs(np.fft.rfft(y * win, nfft))
    freqs = np.fft.rfftfreq(nfft, h)
    k = int(np.argmax(spec[1:])) + 1
    if 1 <= k < spec.size - 1 and spec[k - 1] > 0 and spec[k + 1] > 0:
        a, b, c = np.log(spec[k - 1]), np.log(spec[k]), np.log(spec[k + 1])
        delta = 0.5 * (a - c) / (a - 2 * b + c)
    else:
        delta = 0.0
    f = float(freqs[k] + delta * (freqs[1] - freqs[0]))
    duration = t[-1] - t[0]
    if f * duration < 20:
        raise WindowTooShortError(f"window spans {f * duration:.1f} cycles of {f:.3g} Hz; need >= 20")
    amplitude = float(2.0 * spec[k] / np.sum(win))

    # analytic signal restricted to the band around the peak
    full = np.fft.fft(y)
    fr = np.fft.fftfreq(n, h)
    band = (fr > 0.5 * f) & (fr < 1.5 * f)
    env = np.abs(np.fft.ifft(np.where(band, 2.0 * full, 0.0)))
    trim = n // 6
    te, le = t[trim : n - trim], np.log(np.maximum(env[trim : n - trim], 1e-300))
    growth = float(np.polyfit(te, le, 1)[0])
    return f, amplitude, growth


__all__ = [
    "Event",
    "Scenario",
    "SimTrace",
    "SystemModel",
    "assemble_model",
    "dominant_frequency",
    "eigenvalues",
    "linearize_numeric",
    "simulate",
]
