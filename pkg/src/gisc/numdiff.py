"""Central-difference Jacobians with one level of Richardson extrapolation."""

from __future__ import annotations

import numpy as np


class JacobianConvergenceError(ArithmeticError):
    pass


def jacobian(f, x0, *, rel_step: float = 1e-6, rtol: float = 1e-5) -> np.ndarray:
    """Jacobian of ``f`` at ``x0``.

    Column ``k`` uses ``h = rel_step * max(1, |x0[k]|)``; the estimates at
    ``h`` and ``h/2`` are combined as ``(4 D(h/2) - D(h)) / 3``.  Raises
    :class:`JacobianConvergenceError` when the two estimates disagree by more
    than ``rtol`` relative to the largest Jacobian entry.
    """
    x0 = np.asarray(x0, dtype=float)
    f0 = np.asarray(f(x0), dtype=float)
    jac = np.empty((f0.size, x0.size))
    coarse = np.empty_like(jac)
    for k in range(x0.size):
        h = rel_step * max(1.0, abs(x0[k]))
        cols = []
        for step in (h, 0.5 * h):
            xp = x0.copy()
            xm = x0.copy()
            xp[k] += step
            xm[k] -= step
            cols.append((np.asarray(f(xp)) - np.asarray(f(xm))) / (2.0 * step))
        coarse[:, k] = cols[1]
        jac[:, k] = (4.0 * cols[1] - cols[0]) / 3.0
    scale = max(1.0, float(np.max(np.abs(jac))) if jac.size else 1.0)
    err = float(np.max(np.abs(jac - coarse))) if jac.size else 0.0
    if err > rtol * scale:
        raise JacobianConvergenceError(
            f"Richardson estimate did not settle: |R - D(h/2)| = {err:.3e} "
            f"vs tolerance {rtol * scale:.3e}"
        )
    return jac
