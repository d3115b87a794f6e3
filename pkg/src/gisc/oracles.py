"""Brute-force cross-checks of the analytic chain.

Each check returns a plain dict ``{"passed", "residual", "threshold", ...}``
so that the CLI can emit it verbatim as JSON.
"""

from __future__ import annotations

import numpy as np

from .criterion import assess_system, build_system, closed_loop_roots, is_rhp, mimo_char_eval
from .grid import GridParams, SwingMatrix
from .ratfun import Polynomial, RationalFunction
from .sim import assemble_model, eigenvalues, linearize_numeric
from .vsc import VscParams, numeric_admittance_scan

DET_RTOL = 1e-9
SCAN_RTOL = 1e-6
ROOT_RTOL = 1e-3


def _random_rf(rng: np.random.Generator, max_degree: int = 3) -> RationalFunction:
    dn = int(rng.integers(0, max_degree + 1))
    dd = int(rng.integers(0, max_degree + 1))
    num = rng.uniform(-2.0, 2.0, dn + 1)
    den = rng.uniform(-2.0, 2.0, dd + 1)
    num[-1] = np.sign(num[-1]) * (0.5 + abs(num[-1]))
    den[-1] = np.sign(den[-1]) * (0.5 + abs(den[-1]))
    return RationalFunction(Polynomial(num), Polynomial(den))


def random_swing_system(rng: np.random.Generator, max_degree: int = 3):
    """A random real-coefficient pair ``(Y_g, [[a, -b], [b, a]])``."""
    return _random_rf(rng, max_degree), SwingMatrix(_random_rf(rng, max_degree), _random_rf(rng, max_degree))


def _away_from_poles(fns, s, min_rel=1e-6):
    for f in fns:
        for p in f.poles():
            if abs(s - p) <= min_rel * max(1.0, abs(p)):
                return False
        if abs(f.den.abs_eval(s)) == 0:
            return False
    return True


def sample_disc(rng: np.random.Generator, n: int, radius: float, avoid=()) -> list[complex]:
    """``n`` points uniformly in a disc, skipping those next to a pole of ``avoid``."""
    pts: list[complex] = []
    while len(pts) < n:
        r = radius * np.sqrt(rng.uniform())
        s = complex(r * np.exp(2j * np.pi * rng.uniform()))
        if _away_from_poles(avoid, s):
            pts.append(s)
    return pts


def determinant_identity(yg: RationalFunction, y: SwingMatrix, s_points) -> float:
    """Largest relative residual of ``det(diag(0, Y_g) + Y) = Y+ Y- (1 + L)``."""
    return float(np.max(mimo_char_eval(yg, y, np.asarray(s_points))[1]))


def check_determinant_identity(vsc: VscParams, grid: GridParams, n_points: int = 100,
                               n_random: int = 20, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    sys_ = build_system(vsc, grid)
    pts = sample_disc(rng, n_points, 1000.0, (sys_.yg, sys_.network.a, sys_.network.b, sys_.loop_gain))
    worst = determinant_identity(sys_.yg, sys_.network, pts)
    worst_random = 0.0
    for _ in range(n_random):
        yg, y = random_swing_system(rng)
        seq_fns = (yg, y.a, y.b, (y.a + y.b * 1j).inv(), (y.a - y.b * 1j).inv())
        pts_r = sample_disc(rng, n_points, 10.0, seq_fns)
        worst_random = max(worst_random, determinant_identity(yg, y, pts_r))
    res = max(worst, worst_random)
    return {"passed": bool(res <= DET_RTOL), "residual": res, "residual_system": worst,
            "residual_random": worst_random, "threshold": DET_RTOL, "points": n_points, "random_systems": n_random}


def check_admittance_scan(vsc: VscParams, grid: GridParams, n_points: int = 20) -> dict:
    """Finite-difference converter response vs the closed-form ``Y_g``."""
    sys_ = build_system(vsc, grid)
    omegas = np.logspace(0.0, 3.0, n_points)
    mats = numeric_admittance_scan(vsc, sys_.op, 1j * omegas)
    rel = 0.0
    off = 0.0
    for w, m in zip(omegas, mats):
        y = sys_.yg(1j * w)
        rel = max(rel, float(abs(m[1, 1] - y) / abs(y)))
        off = max(off, float(max(abs(m[0, 0]), abs(m[0, 1]), abs(m[1, 0]))))
    return {"passed": bool(rel <= SCAN_RTOL and off <= SCAN_RTOL), "residual": rel,
            "off_target": off, "threshold": SCAN_RTOL, "points": n_points}


def root_comparison(vsc: VscParams, grid: GridParams) -> dict:
    """RHP counts from the Nyquist winding, ``1 + L`` roots and state-matrix eigenvalues."""
    sys_ = build_system(vsc, grid)
    rep = assess_system(sys_)
    roots, pairs = closed_loop_roots(sys_.loop_gain, vsc.f0_hz)
    eig = eigenvalues(linearize_numeric(assemble_model(vsc, grid)))
    rhp_roots = [z for z in roots if is_rhp(z)]
    rhp_eigs = [z for z in eig if is_rhp(z)]
    dist = 0.0
    for z in rhp_roots:
        dist = max(dist, float(np.min(np.abs(eig - z))) / abs(z))
    return {
        "nyquist_rhp": rep.rhp_pole_count,
        "roots_rhp": len(rhp_roots),
        "eig_rhp": len(rhp_eigs),
        "verdict": rep.verdict,
        "rhp_roots": rhp_roots,
        "rhp_eigs": list(rhp_eigs),
        "pairs": pairs,
        "location_residual": dist,
        "agree": rep.rhp_pole_count == len(rhp_roots) == len(rhp_eigs) and dist <= ROOT_RTOL,
    }


def check_eigen_roots(vsc: VscParams, grid: GridParams) -> dict:
    r = root_comparison(vsc, grid)
    return {"passed": bool(r["agree"]), "residual": r["location_residual"], "threshold": ROOT_RTOL,
            "nyquist_rhp": r["nyquist_rhp"], "roots_rhp": r["roots_rhp"], "eig_rhp": r["eig_rhp"]}


def run_all(vsc: VscParams, grid: GridParams) -> dict:
    checks = {
        "determinant_identity": check_determinant_identity(vsc, grid),
        "admittance_scan": check_admittance_scan(vsc, grid),
        "eigen_vs_roots": check_eigen_roots(vsc, grid),
    }
    return {"passed": all(c["passed"] for c in checks.values()), "checks": checks}
