"""Equivalent SISO loop gain, Nyquist verdict, closed-loop roots and the MIMO
determinant identity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .genimp import NotApplicableError, SequencePair, sequence_decompose
from .grid import GridParams, SwingMatrix, network_admittance
from .ratfun import RationalFunction, poly_roots
from .vsc import OperatingPoint, PolarAdmittanceMatrix, VscParams, build_vsc_admittance, solve_operating_point

RHP_RTOL = 1e-9


class ImaginaryAxisPoleError(ValueError):
    def __init__(self, omegas):
        self.omegas = list(omegas)
        super().__init__(
            "loop gain has poles on the imaginary axis at omega = "
            + ", ".join(f"{w:.6g}" for w in self.omegas)
            + " rad/s; set an indentation radius on the frequency grid"
        )


class MarginalError(ValueError):
    """The curve passes through the critical point."""


def is_rhp(z: complex) -> bool:
    return z.real > RHP_RTOL * max(1.0, abs(z))


def on_axis(z: complex, rtol: float) -> bool:
    return abs(z.real) <= rtol * max(1.0, abs(z))


@dataclass(frozen=True)
class FrequencyGrid:
    omega_min: float = 1e-2
    omega_max: float = 1e5
    points_per_decade: int = 400
    # phase step seen from (-1, 0) while the curve is within near_distance
    max_phase_step: float = math.pi / 36
    near_distance: float = 2.0
    indent_radius: float | None = 1e-6
    axis_pole_rtol: float = 1e-8
    max_passes: int = 40


@dataclass(frozen=True)
class NyquistCurve:
    s: np.ndarray
    values: np.ndarray

    @property
    def omega(self) -> np.ndarray:
        return self.s.imag

    @property
    def samples(self) -> list[tuple[float, complex]]:
        return list(zip(self.omega.tolist(), self.values.tolist()))


@dataclass(frozen=True)
class StationaryFrequencyPair:
    f_sub: float
    f_super: float

    @classmethod
    def from_mode(cls, omega_sync: float, f0_hz: float) -> StationaryFrequencyPair:
        f_super = f0_hz + abs(omega_sync) / (2.0 * math.pi)
        return cls(2.0 * f0_hz - f_super, f_super)

    @property
    def f_sync(self) -> float:
        return 0.5 * (self.f_super - self.f_sub)


@dataclass(frozen=True)
class NyquistReport:
    samples: NyquistCurve
    winding_number: int
    verdict: str
    margin: float
    rhp_pole_count: int
    rhp_open_loop_poles: int
    loop_gain: RationalFunction = field(repr=False)

    @property
    def signed_margin(self) -> float:
        """Distance to (-1, 0), negated unless the verdict is stable."""
        return self.margin if self.verdict == "stable" else -self.margin

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "winding_number": self.winding_number,
            "margin": self.margin,
            "signed_margin": self.signed_margin,
            "rhp_pole_count": self.rhp_pole_count,
            "rhp_open_loop_poles": self.rhp_open_loop_poles,
            "n_samples": int(self.samples.s.size),
        }


@dataclass(frozen=True)
class SmallSignalSystem:
    vsc: VscParams
    grid: GridParams
    op: OperatingPoint
    yg: RationalFunction
    vsc_matrix: PolarAdmittanceMatrix
    network: SwingMatrix
    seq: SequencePair

    @property
    def loop_gain(self) -> RationalFunction:
        return open_loop_gain(self.yg, self.seq)


def build_system(vsc: VscParams, grid: GridParams) -> SmallSignalSystem:
    op = solve_operating_point(vsc, grid)
    yg, mat = build_vsc_admittance(vsc, op)
    net = network_admittance(grid, op)
    return SmallSignalSystem(vsc, grid, op, yg, mat, net, sequence_decompose(net))


def open_loop_gain(yg: RationalFunction, seq: SequencePair) -> RationalFunction:
    """``L = Y_g (Z+ + Z-) / 2`` with real coefficients."""
    if seq.y_plus.is_zero() or seq.y_minus.is_zero():
        raise ZeroDivisionError("sequence admittance is identically zero")
    if yg.is_zero():
        return RationalFunction.zero()
    loop = yg * (seq.z_plus + seq.z_minus) * 0.5
    if not loop.is_real(1e-10):
        raise ValueError("loop gain has non-negligible imaginary coefficients")
    return loop.real()


# -- Nyquist contour ------------------------------------------------------

_AXIS, _INDENT = 0, 1


def _contour_s(kind, center, param, radius):
    return np.where(kind == _AXIS, 1j * param, 1j * center + radius * np.exp(1j * param))


def _loop_limit(loop: RationalFunction) -> complex:
    rd = loop.relative_degree
    if rd < 0:
        raise ValueError("loop gain is improper; the Nyquist curve does not close")
    if rd > 0:
        return 0j
    return loop.num.lead / loop.den.lead


def nyquist_curve(loop: RationalFunction, grid: FrequencyGrid = FrequencyGrid()) -> NyquistCurve:
    """Sample ``L`` along the imaginary axis from ``-j omega_max`` to ``+j omega_max``.

    Poles on the axis are bypassed by right-hand semicircles of radius
    ``grid.indent_radius``.  Sampling is refined until the phase seen from
    (-1, 0) changes by at most ``max_phase_step`` per step near the critical
    point, and by less than pi/2 everywhere.
    """
    limit = _loop_limit(loop)
    axis_poles = sorted(
        {round(p.imag, 12) for p in loop.poles() if on_axis(p, grid.axis_pole_rtol) and abs(p.imag) < grid.omega_max}
    )
    if axis_poles and not grid.indent_radius:
        raise ImaginaryAxisPoleError(axis_poles)
    r = grid.indent_radius or 0.0

    n_dec = math.log10(grid.omega_max / grid.omega_min)
    pos = np.logspace(
        math.log10(grid.omega_min), math.log10(grid.omega_max), int(round(n_dec * grid.points_per_decade)) + 1
    )
    base = np.concatenate([-pos[::-1], [0.0], pos])

    kinds, centers, params = [], [], []
    lo = -grid.omega_max
    for wp in axis_poles + [None]:
        hi = grid.omega_max if wp is None else wp - r
        seg = base[(base > lo) & (base < hi)]
        seg = np.concatenate([[lo], seg, [hi]])
        kinds.append(np.full(seg.size, _AXIS))
        centers.append(np.zeros(seg.size))
        params.append(seg)
        if wp is not None:
            th = np.linspace(-math.pi / 2, math.pi / 2, 33)
            kinds.append(np.full(th.size, _INDENT))
            centers.append(np.full(th.size, wp))
            params.append(th)
            lo = wp + r
    kind = np.concatenate(kinds)
    center = np.concatenate(centers)
    param = np.concatenate(params)
    s = _contour_s(kind, center, param, r)
    vals = loop(s)

    for _ in range(grid.max_passes):
        w = vals + 1.0
        step = np.abs(np.angle(w[1:] / np.where(w[:-1] == 0, 1e-300, w[:-1])))
        near = np.minimum(np.abs(w[1:]), np.abs(w[:-1])) < grid.near_distance
        same = (kind[1:] == kind[:-1]) & (center[1:] == center[:-1])
        bad = same & (((step > grid.max_phase_step) & near) | (step >= math.pi / 2))
        if not np.any(bad):
            break
        idx = np.nonzero(bad)[0]
        mid = 0.5 * (param[idx] + param[idx + 1])
        if np.all(mid == param[idx]):
            break
        ms = _contour_s(kind[idx], center[idx], mid, r)
        mv = loop(ms)
        at = idx + 1
        kind = np.insert(kind, at, kind[idx])
        center = np.insert(center, at, center[idx])
        param = np.insert(param, at, mid)
        s = np.insert(s, at, ms)
        vals = np.insert(vals, at, mv)

    # closure through s = infinity, where L tends to its limit
    end_dev = max(abs(vals[0] - limit), abs(vals[-1] - limit))
    if end_dev >= 0.5 * abs(limit + 1.0):
        raise ValueError(
            f"curve has not converged to L(inf)={limit:.3g} at omega_max={grid.omega_max:g}; raise omega_max"
        )
    return NyquistCurve(s, vals)


def winding_number(values, about: complex = -1.0 + 0j) -> int:
    """Counter-clockwise encirclements of ``about`` by the closed curve ``values``."""
    z = np.asarray(values, dtype=complex) - about
    if np.min(np.abs(z)) < 1e-9:
        raise MarginalError(f"curve passes within 1e-9 of {about}")
    zc = np.append(z, z[0])
    inc = np.angle(zc[1:] / zc[:-1])
    if np.max(np.abs(inc)) >= math.pi / 2:
        raise ValueError("curve too coarse: phase step about the point reaches pi/2")
    return int(round(float(np.sum(inc)) / (2.0 * math.pi)))


def open_loop_rhp_poles(loop: RationalFunction) -> int:
    return sum(1 for p in loop.poles() if is_rhp(p))


def assess_stability(yg: RationalFunction, seq: SequencePair, config: FrequencyGrid = FrequencyGrid()) -> NyquistReport:
    """Generalized-impedance Nyquist verdict.

    ``rhp_pole_count = P - N`` with ``P`` the open-loop RHP poles and ``N`` the
    counter-clockwise encirclements of (-1, 0) as omega runs from -inf to +inf.
    Verdict ``not_applicable`` when ``Y_g`` vanishes or the loop gain has RHP
    poles (the criterion assumes neither occurs).
    """
    loop = open_loop_gain(yg, seq)
    p = open_loop_rhp_poles(loop)
    curve = nyquist_curve(loop, config)
    n = winding_number(curve.values, -1.0)
    if yg.is_zero() or p > 0:
        verdict = "not_applicable"
    elif n == 0:
        verdict = "stable"
    else:
        verdict = "unstable"
    margin = float(np.min(np.abs(curve.values + 1.0)))
    return NyquistReport(curve, n, verdict, margin, p - n, p, loop)


def assess_system(system: SmallSignalSystem, config: FrequencyGrid = FrequencyGrid()) -> NyquistReport:
    return assess_stability(system.yg, system.seq, config)


def closed_loop_roots(loop: RationalFunction, f0_hz: float = 50.0):
    """Roots of ``num(1 + L)`` and the stationary-frame pair of each RHP complex pair."""
    if loop.relative_degree < 0:
        raise ValueError("loop gain must be proper")
    char = loop.num + loop.den
    roots = poly_roots(char)
    pairs = [
        StationaryFrequencyPair.from_mode(z.imag, f0_hz)
        for z in roots
        if is_rhp(z) and z.imag > RHP_RTOL * max(1.0, abs(z))
    ]
    return roots, pairs


def rhp_count(roots) -> int:
    return sum(1 for z in roots if is_rhp(z))


def mimo_char_eval(yg: RationalFunction, y: SwingMatrix, s):
    """``det(diag(0, Y_g) + Y)`` at ``s`` and its relative mismatch with ``Y+ Y- (1 + L)``.

    ``s`` may be a scalar or an array; the symbolic reduction is done once.
    """
    s_arr = np.asarray(s, dtype=complex)
    a = y.a(s_arr)
    b = y.b(s_arr)
    g = yg(s_arr)
    det = a * (a + g) + b * b
    seq = sequence_decompose(y)
    other = seq.y_plus(s_arr) * seq.y_minus(s_arr)
    if not yg.is_zero():
        other = other * (1.0 + open_loop_gain(yg, seq)(s_arr))
    scale = np.maximum(np.abs(det), np.abs(other))
    with np.errstate(invalid="ignore", divide="ignore"):
        residual = np.where(scale == 0, 0.0, np.abs(det - other) / np.where(scale == 0, 1.0, scale))
    if s_arr.ndim == 0:
        return complex(det), float(residual)
    return det, residual


def pll_margin_sweep(vsc: VscParams, grid: GridParams, param: str, values, config: FrequencyGrid = FrequencyGrid()):
    """Margin and verdict over one PLL (or any converter) parameter."""
    from dataclasses import replace

    rows = []
    for v in values:
        rep = assess_system(build_system(replace(vsc, **{param: float(v)}), grid), config)
        rows.append((float(v), rep))
    return rows


def calibrate_filter_capacitance(
    vsc: VscParams = VscParams(),
    candidates=None,
    l_stable: float = 0.20,
    l_unstable: float = 0.26,
    target_sync_hz: float = 8.0,
    config: FrequencyGrid = FrequencyGrid(),
):
    """Scan ``c_f_pu`` for the stable -> unstable flip between two line reactances.

    Among candidates giving a stable verdict at ``l_stable`` and an unstable
    verdict with two RHP roots at ``l_unstable``, the one whose RHP mode is
    closest to ``target_sync_hz`` (the 50 -/+ 8 Hz observation) is returned;
    ties go to the smaller capacitance.  Returns ``(best, rows)``.
    """
    if candidates is None:
        candidates = np.round(np.linspace(0.0, 0.2, 21), 10)
    rows = []
    for c in candidates:
        g_s = GridParams(l_line_pu=l_stable, c_f_pu=float(c), f0_hz=vsc.f0_hz)
        g_u = GridParams(l_line_pu=l_unstable, c_f_pu=float(c), f0_hz=vsc.f0_hz)
        rep_s = assess_system(build_system(vsc, g_s), config)
        rep_u = assess_system(build_system(vsc, g_u), config)
        _, pairs = closed_loop_roots(rep_u.loop_gain, vsc.f0_hz)
        f_sync = pairs[0].f_sync if pairs else float("nan")
        flips = rep_s.verdict == "stable" and rep_u.verdict == "unstable" and rep_u.rhp_pole_count == 2
        rows.append({"c_f_pu": float(c), "flip": flips, "f_sync_hz": f_sync,
                     "margin_stable": rep_s.margin, "margin_unstable": rep_u.margin})
    ok = [r for r in rows if r["flip"]]
    if not ok:
        return None, rows
    best = min(ok, key=lambda r: (abs(r["f_sync_hz"] - target_sync_hz), r["c_f_pu"]))
    return best["c_f_pu"], rows


__all__ = [
    "FrequencyGrid",
    "ImaginaryAxisPoleError",
    "MarginalError",
    "NotApplicableError",
    "NyquistCurve",
    "NyquistReport",
    "SmallSignalSystem",
    "StationaryFrequencyPair",
    "assess_stability",
    "assess_system",
    "build_system",
    "calibrate_filter_capacitance",
    "closed_loop_roots",
    "mimo_char_eval",
    "nyquist_curve",
    "open_loop_gain",
    "open_loop_rhp_poles",
    "pll_margin_sweep",
    "rhp_count",
    "winding_number",
]
