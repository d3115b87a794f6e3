"""Polynomial and rational-function algebra over complex coefficients.

Coefficients are stored in ascending powers of ``s`` (rad/s).  Every value is
immutable; arithmetic returns new, canonicalized objects.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import polynomial as npp

__all__ = [
    "Polynomial",
    "RationalFunction",
    "PoleHitError",
    "ZeroDivisionRationalError",
    "rf_arith",
    "rf_eval",
    "rf_conj_coeffs",
    "poly_roots",
    "CANCEL_RTOL",
]

# a sum's leading coefficient below this fraction of the summands' is cancellation residue
TRIM_RTOL = 1e-13
# num/den roots closer than this (relative to max(1, |r|)) cancel
CANCEL_RTOL = 1e-9
# roots closer than this are treated as one cluster (multiple root)
CLUSTER_RTOL = 1e-6
# denominators this close are treated as one when adding
SHARED_DEN_RTOL = 1e-13


class PoleHitError(ArithmeticError):
    """Raised when a rational function is evaluated at (or next to) a pole."""

    def __init__(self, s, pole):
        super().__init__(f"pole hit: evaluation at s={s!r} coincides with pole {pole!r}")
        self.s = s
        self.pole = pole


class ZeroDivisionRationalError(ZeroDivisionError):
    pass


def _trim(c: np.ndarray, ref: np.ndarray | None = None) -> np.ndarray:
    """Drop zero leading coefficients.

    With ``ref`` (the coefficient-wise sum of operand magnitudes) a leading
    coefficient counts as zero when it is cancellation residue of that size.
    """
    n = c.size
    while n > 1 and (c[n - 1] == 0 or (ref is not None and abs(c[n - 1]) <= TRIM_RTOL * ref[n - 1])):
        n -= 1
    if n == 0:
        return np.zeros(1, dtype=complex)
    if n == 1 and ref is not None and abs(c[0]) <= TRIM_RTOL * ref[0]:
        return np.zeros(1, dtype=complex)
    return c[:n].copy()


class Polynomial:
    """Polynomial with complex coefficients, ``coeffs[k]`` multiplies ``s**k``."""

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=complex)).ravel()
        c = _trim(c)
        c.flags.writeable = False
        self._c = c

    @classmethod
    def from_roots(cls, roots, lead=1.0) -> Polynomial:
        c = np.array([1.0 + 0j])
        for r in roots:
            c = npp.polymul(c, [-r, 1.0])
        return cls(lead * c)

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def degree(self) -> int:
        return 0 if self.is_zero() else self._c.size - 1

    @property
    def lead(self) -> complex:
        return complex(self._c[-1])

    def is_zero(self) -> bool:
        return self._c.size == 1 and self._c[0] == 0

    def is_real(self, rtol: float = 0.0) -> bool:
        scale = np.max(np.abs(self._c))
        return bool(np.all(np.abs(self._c.imag) <= rtol * scale))

    def real(self) -> Polynomial:
        return Polynomial(self._c.real)

    def conj(self) -> Polynomial:
        return Polynomial(np.conj(self._c))

    def deriv(self) -> Polynomial:
        return Polynomial(npp.polyder(self._c)) if self._c.size > 1 else Polynomial([0])

    def __call__(self, s):
        # Horner
        acc = np.zeros_like(np.asarray(s, dtype=complex))
        for a in self._c[::-1]:
            acc = acc * s + a
        return acc if acc.ndim else complex(acc)

    def abs_eval(self, s):
        """Sum of |c_k| |s|^k, the scale used for relative error bounds."""
        r = np.abs(np.asarray(s, dtype=complex))
        acc = np.zeros_like(r, dtype=float)
        for a in np.abs(self._c[::-1]):
            acc = acc * r + a
        return acc if acc.ndim else float(acc)

    def __add__(self, other):
        other = _as_poly(other)
        n = max(self._c.size, other._c.size)
        a = np.zeros(n, complex)
        b = np.zeros(n, complex)
        a[: self._c.size] = self._c
        b[: other._c.size] = other._c
        return Polynomial._raw(_trim(a + b, np.abs(a) + np.abs(b)))

    @classmethod
    def _raw(cls, c: np.ndarray) -> Polynomial:
        obj = cls.__new__(cls)
        c.flags.writeable = False
        obj._c = c
        return obj

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-self._c)

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        return Polynomial(npp.polymul(self._c, other._c))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = Polynomial([1])
        for _ in range(n):
            out = out * self
        return out

    def allclose(self, other, rtol=1e-10) -> bool:
        other = _as_poly(other)
        n = max(self._c.size, other._c.size)
        a = np.zeros(n, complex)
        b = np.zeros(n, complex)
        a[: self._c.size] = self._c
        b[: other._c.size] = other._c
        scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
        return bool(np.max(np.abs(a - b)) <= rtol * scale)

    def roots(self) -> list[complex]:
        return poly_roots(self)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._c.shape == other._c.shape and bool(np.all(self._c == other._c))

    def __hash__(self):
        # adding +0 maps -0.0 to 0.0 so equal polynomials hash alike
        return hash((self._c + 0.0).tobytes())

    def __repr__(self):
        return f"Polynomial({np.array2string(self._c, precision=6)})"


def _as_poly(x) -> Polynomial:
    return x if isinstance(x, Polynomial) else Polynomial([x])


def poly_roots(p: Polynomial) -> list[complex]:
    """All roots of ``p`` sorted by (real, imag).

    Companion-matrix eigenvalues followed by one Newton polish step per root.
    """
    if not isinstance(p, Polynomial):
        p = Polynomial(p)
    if p.is_zero():
        raise ValueError("the zero polynomial has no well-defined roots")
    if p.degree == 0:
        return []
    c = p.coeffs
    # exact zero roots from vanishing low-order coefficients
    k = 0
    while c[k] == 0:
        k += 1
    rest = c[k:]
    roots = list(np.zeros(k, dtype=complex))
    if rest.size > 1:
        r = npp.polyroots(rest)
        dp = npp.polyder(rest)
        polished = []
        for z in r:
            f = npp.polyval(z, rest)
            d = npp.polyval(z, dp)
            if d != 0:
                z2 = z - f / d
                if abs(npp.polyval(z2, rest)) < abs(f):
                    z = z2
            polished.append(complex(z))
        roots.extend(polished)
    roots = [complex(z) for z in roots]
    if p.is_real():
        # real polynomials: snap round-off imaginary parts of real roots
        roots = [complex(z.real, 0.0) if abs(z.imag) <= 1e-12 * max(1.0, abs(z)) else z for z in roots]
    return sorted(roots, key=lambda z: (z.real, z.imag))


def _clusters(roots):
    """Group nearly-coincident roots; returns list of (mean, multiplicity)."""
    out: list[list[complex]] = []
    for r in roots:
        for grp in out:
            m = np.mean(grp)
            if abs(r - m) <= CLUSTER_RTOL * max(1.0, abs(m)):
                grp.append(r)
                break
        else:
            out.append([r])
    return [(complex(np.mean(g)), len(g)) for g in out]


def _deflate(c: np.ndarray, r: complex) -> np.ndarray:
    # synthetic division by (s - r), remainder dropped
    n = c.size - 1
    q = np.zeros(n, dtype=complex)
    acc = 0j
    for k in range(n, 0, -1):
        acc = acc * r + c[k]
        q[k - 1] = acc
    return q


class RationalFunction:
    """Ratio ``num(s) / den(s)`` kept in canonical form.

    Canonical form: zero numerator stored as ``0/1``; common num/den roots
    removed; denominator monic.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=1, *, canonical: bool = True):
        num = _as_poly(num) if not isinstance(num, (list, tuple, np.ndarray)) else Polynomial(num)
        den = _as_poly(den) if not isinstance(den, (list, tuple, np.ndarray)) else Polynomial(den)
        if den.is_zero():
            raise ZeroDivisionRationalError("denominator is the zero polynomial")
        if canonical:
            num, den = _canonicalize(num, den)
        self.num = num
        self.den = den

    # constructors -----------------------------------------------------
    @classmethod
    def const(cls, k) -> RationalFunction:
        return cls(Polynomial([k]), Polynomial([1]))

    @classmethod
    def s(cls) -> RationalFunction:
        return cls(Polynomial([0, 1]), Polynomial([1]))

    @classmethod
    def zero(cls) -> RationalFunction:
        return cls.const(0)

    # queries ----------------------------------------------------------
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_real(self, rtol: float = 0.0) -> bool:
        return self.num.is_real(rtol) and self.den.is_real(rtol)

    @property
    def relative_degree(self) -> int:
        if self.is_zero():
            return np.iinfo(np.int64).max
        return self.den.degree - self.num.degree

    def poles(self) -> list[complex]:
        return poly_roots(self.den)

    def zeros(self) -> list[complex]:
        return [] if self.is_zero() else poly_roots(self.num)

    # evaluation -------------------------------------------------------
    def __call__(self, s):
        return rf_eval(self, s)

    # algebra ----------------------------------------------------------
    def __add__(self, other):
        return rf_arith(self, other, "add")

    def __radd__(self, other):
        return rf_arith(_as_rf(other), self, "add")

    def __sub__(self, other):
        return rf_arith(self, other, "sub")

    def __rsub__(self, other):
        return rf_arith(_as_rf(other), self, "sub")

    def __mul__(self, other):
        return rf_arith(self, other, "mul")

    def __rmul__(self, other):
        return rf_arith(_as_rf(other), self, "mul")

    def __truediv__(self, other):
        return rf_arith(self, other, "div")

    def __rtruediv__(self, other):
        return rf_arith(_as_rf(other), self, "div")

    def __neg__(self):
        return RationalFunction(-self.num, self.den, canonical=False)

    def inv(self) -> RationalFunction:
        return rf_arith(RationalFunction.const(1), self, "div")

    def conj_coeffs(self) -> RationalFunction:
        return rf_conj_coeffs(self)

    def real(self) -> RationalFunction:
        """Drop imaginary parts of all coefficients."""
        return RationalFunction(self.num.real(), self.den.real())

    def allclose(self, other, rtol: float = 1e-9) -> bool:
        other = _as_rf(other)
        return self.num.allclose(other.num, rtol) and self.den.allclose(other.den, rtol)

    def __eq__(self, other):
        """Exact equality of the canonical coefficient arrays."""
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        return f"RationalFunction(num={self.num.coeffs!r}, den={self.den.coeffs!r})"


def _as_rf(x) -> RationalFunction:
    if isinstance(x, RationalFunction):
        return x
    if isinstance(x, Polynomial):
        return RationalFunction(x, Polynomial([1]))
    return RationalFunction.const(x)


def _shared_roots(ra, rb, real: bool) -> list[complex]:
    """Roots common to two root lists, with multiplicity.

    For real polynomials only closed-upper-half-plane clusters are matched and
    complex matches are returned together with their conjugates, so deflating
    by the result keeps the coefficients real.
    """
    cb = _clusters(rb)
    used = [0] * len(cb)
    shared: list[complex] = []
    for r, m in _clusters(ra):
        if real and r.imag < 0:
            continue
        for j, (q, mq) in enumerate(cb):
            avail = mq - used[j]
            # repeated roots are only resolved to about sqrt(eps)
            tol = CANCEL_RTOL if min(m, mq) == 1 else CLUSTER_RTOL
            if avail <= 0 or abs(r - q) > tol * max(1.0, abs(r)):
                continue
            # a simple root is the better estimate of the common location
            z = r if m < mq else q if mq < m else 0.5 * (r + q)
            k = min(m, avail)
            if real and abs(z.imag) > CLUSTER_RTOL * max(1.0, abs(z)):
                z = complex(z.real, abs(z.imag))
                shared += [z, z.conjugate()] * k
            else:
                shared += [complex(z.real) if real else z] * k
            used[j] += k
            break
    return shared


def _canonicalize(num: Polynomial, den: Polynomial):
    if num.is_zero():
        return Polynomial([0]), Polynomial([1])
    real_in = num.is_real() and den.is_real()
    n, d = num.coeffs, den.coeffs
    # common powers of s cancel exactly
    k = 0
    while k < n.size - 1 and k < d.size - 1 and n[k] == 0 and d[k] == 0:
        k += 1
    n, d = n[k:], d[k:]
    if n.size > 1 and d.size > 1:
        for r in _shared_roots(poly_roots(Polynomial(n)), poly_roots(Polynomial(d)), real_in):
            n = _deflate(n, r)
            d = _deflate(d, r)
    lead = d[-1]
    n, d = n / lead, d / lead
    if real_in:
        n, d = n.real.astype(complex), d.real.astype(complex)
    return Polynomial(n), Polynomial(d)


def _strip_common_factor(da: Polynomial, db: Polynomial):
    """``(da / g, db / g)`` for the largest shared factor ``g`` found by root matching.

    Forming the sum over ``da * db / g`` keeps root multiplicities low, which
    keeps the later cancellation step well conditioned.
    """
    if da.degree == 0 or db.degree == 0:
        return da, db
    real = da.is_real() and db.is_real()
    shared = _shared_roots(poly_roots(da), poly_roots(db), real)
    if not shared:
        return da, db
    if len(shared) == min(da.degree, db.degree):
        # one denominator divides the other: long division by its exact
        # coefficients avoids the root error of repeated factors
        swap = da.degree < db.degree
        hi, lo = (db, da) if swap else (da, db)
        q = npp.polydiv(hi.coeffs, lo.coeffs)[0]
        q = q.real.astype(complex) if real else q
        one = Polynomial([1.0])
        return (one, Polynomial(q)) if swap else (Polynomial(q), one)
    ca, cb = da.coeffs, db.coeffs
    for z in shared:
        ca = _deflate(ca, z)
        cb = _deflate(cb, z)
    if real:
        ca, cb = ca.real.astype(complex), cb.real.astype(complex)
    return Polynomial(ca), Polynomial(cb)


def rf_arith(a, b, kind: str) -> RationalFunction:
    """Pointwise arithmetic ``a <kind> b`` for ``kind`` in add/sub/mul/div."""
    a, b = _as_rf(a), _as_rf(b)
    if kind == "add" or kind == "sub":
        bn = b.num if kind == "add" else -b.num
        if a.den.degree == b.den.degree and a.den.allclose(b.den, SHARED_DEN_RTOL):
            return RationalFunction(a.num + bn, a.den)
        da, db = _strip_common_factor(a.den, b.den)
        return RationalFunction(a.num * db + bn * da, a.den * db)
    if kind == "mul":
        return RationalFunction(a.num * b.num, a.den * b.den)
    if kind == "div":
        if b.is_zero():
            raise ZeroDivisionRationalError("division by the identically-zero rational function")
        return RationalFunction(a.num * b.den, a.den * b.num)
    raise ValueError(f"unknown arithmetic kind {kind!r}")


def rf_eval(f: RationalFunction, s):
    """Evaluate ``f`` at scalar or array ``s`` (Horner on num and den)."""
    s_arr = np.asarray(s, dtype=complex)
    d = f.den(s_arr)
    bound = f.den.abs_eval(s_arr)
    hit = np.abs(d) <= 1e-13 * bound
    if np.any(hit):
        bad = complex(np.atleast_1d(s_arr)[np.argmax(np.atleast_1d(hit))])
        poles = f.poles()
        pole = min(poles, key=lambda p: abs(p - bad)) if poles else bad
        raise PoleHitError(bad, pole)
    out = f.num(s_arr) / d
    return complex(out) if np.ndim(out) == 0 else out


def rf_conj_coeffs(f: RationalFunction) -> RationalFunction:
    """Conjugate every coefficient: result(s) == conj(f(conj(s)))."""
    return RationalFunction(f.num.conj(), f.den.conj(), canonical=False)
