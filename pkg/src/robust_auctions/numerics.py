"""Shared numerical kernels.

Adaptive Gauss-Kronrod quadrature, bracketed Brent root finding, and the
stabilized series evaluators for the two integral families that appear all
over the closed forms:

    log_tail(n, u)  = sum_{k>=n} u^k / k
                    = -log(1-u) - sum_{k<n} u^k / k
    iso_integral(n, phi0, a, v)        = int_a^v (t-a)^{n-1} / (t-phi0)^n dt
                                       = log_tail(n, (v-a)/(v-phi0))
    iso_integral_mixed(n, phi0, a, v, lam)
        = int_a^v [(t-a)^{n-1}/(t-phi0)^n - (1-lam)(t-a)^n/(t-phi0)^{n+1}] dt
        = u^n/n + lam * log_tail(n+1, u),   u = (v-a)/(v-phi0)

Everything here is a pure function; the module is thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ToleranceConfig",
    "DEFAULT_TOL",
    "QuadratureError",
    "BracketError",
    "SingularConfigurationError",
    "integrate",
    "find_root",
    "log_tail",
    "log_tail_deriv",
    "iso_integral",
    "iso_integral_mixed",
]


class QuadratureError(RuntimeError):
    """Quadrature did not converge; carries the partial estimate."""

    def __init__(self, message, partial, error):
        super().__init__(f"{message} (partial estimate {partial!r}, error bound {error!r})")
        self.partial = partial
        self.error = error


class BracketError(ValueError):
    """Root finder was given an interval without a sign change."""


class SingularConfigurationError(ValueError):
    """Integral parameters put a pole inside the integration range."""


@dataclass(frozen=True)
class ToleranceConfig:
    quad_abs_tol: float = 1e-11
    root_abs_tol: float = 1e-12
    series_term_tol: float = 1e-15
    max_iter: int = 200

    def __post_init__(self):
        if self.quad_abs_tol <= 0 or self.root_abs_tol <= 0 or self.series_term_tol <= 0:
            raise ValueError("tolerances must be strictly positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


DEFAULT_TOL = ToleranceConfig()

# 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule,
# on [-1, 1].  Standard QUADPACK constants.
_KRONROD_X = np.array([
    -0.991455371120812639206854697526329,
    -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926,
    -0.741531185599394439863864773280788,
    -0.586087235467691130294144838258730,
    -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245,
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_KRONROD_W = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_GAUSS_W = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
])
_GAUSS_IDX = np.arange(1, 15, 2)


def _eval_batch(f, x):
    """Evaluate f on an array, tolerating scalar-only callables."""
    try:
        y = np.asarray(f(x), dtype=float)
        if y.shape == x.shape:
            return y
    except (TypeError, ValueError):
        pass
    return np.array([float(f(t)) for t in x], dtype=float)


def _gk15(f, lo, hi):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    fx = _eval_batch(f, mid + half * _KRONROD_X)
    k = half * float(_KRONROD_W @ fx)
    g = half * float(_GAUSS_W @ fx[_GAUSS_IDX])
    return k, abs(k - g)


def integrate(f, lo, hi, cfg: ToleranceConfig = DEFAULT_TOL) -> float:
    """Adaptive Gauss-Kronrod estimate of int_lo^hi f(t) dt.

    Bisects the worst interval until the summed Kronrod-Gauss discrepancy
    falls below ``cfg.quad_abs_tol``.  Raises :class:`QuadratureError` with
    the partial estimate if the interval budget is exhausted first.
    """
    if lo > hi:
        raise ValueError(f"need lo <= hi, got [{lo}, {hi}]")
    if lo == hi:
        return 0.0
    val, err = _gk15(f, lo, hi)
    intervals = [(err, lo, hi, val)]
    max_intervals = 64 * cfg.max_iter
    while True:
        total_err = sum(e for e, *_ in intervals)
        if total_err <= cfg.quad_abs_tol:
            return sum(v for *_, v in intervals)
        if len(intervals) >= max_intervals:
            raise QuadratureError(
                "quadrature failed to converge",
                partial=sum(v for *_, v in intervals),
                error=total_err,
            )
        intervals.sort(key=lambda it: it[0])
        _, a, b, _ = intervals.pop()
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            # interval at floating point resolution; keep its estimate
            va, ea = _gk15(f, a, b)
            intervals.append((0.0, a, b, va))
            continue
        vl, el = _gk15(f, a, m)
        vr, er = _gk15(f, m, b)
        intervals.append((el, a, m, vl))
        intervals.append((er, m, b, vr))


def integrate_split(f, points, cfg: ToleranceConfig = DEFAULT_TOL) -> float:
    """Integrate piecewise-smooth f, splitting at the given breakpoints."""
    pts = sorted(points)
    return sum(integrate(f, x, y, cfg) for x, y in zip(pts[:-1], pts[1:]) if y > x)


def find_root(f, lo, hi, cfg: ToleranceConfig = DEFAULT_TOL) -> float:
    """Brent's method on a bracketing interval, bisection as fallback.

    Requires f(lo) and f(hi) of opposite signs (or one of them zero);
    raises :class:`BracketError` otherwise.  Converges to a bracket of
    width max(root_abs_tol, 4 eps |x|).
    """
    a, b = float(lo), float(hi)
    fa, fb = float(f(a)), float(f(b))
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: f(lo)={fa}, f(hi)={fb}")
    c, fc = a, fa
    d = e = b - a
    for _ in range(cfg.max_iter):
        if fb * fc > 0.0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * np.finfo(float).eps * abs(b) + 0.5 * cfg.root_abs_tol
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0:
            return b
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = xm
        else:
            d = e = xm
        a, fa = b, fb
        b += d if abs(d) > tol1 else math.copysign(tol1, xm)
        fb = float(f(b))
    return b


def expand_bracket_down(f, lo, hi, factor=1e-6, floor=1e-290):
    """Shrink lo geometrically until f(lo) changes sign (or the floor)."""
    flo = f(lo)
    fhi = f(hi)
    while flo * fhi > 0 and lo > floor:
        lo *= factor
        flo = f(lo)
    return lo


def log_tail(n: int, u, cfg: ToleranceConfig = DEFAULT_TOL):
    """sum_{k>=n} u^k / k for u in [0, 1); vectorized over u.

    Small u uses the series directly, truncated once the next term falls
    below ``series_term_tol`` relative to the running sum; with the ratio
    at most 1/2 the geometric tail bound term/(1-u) then sits below the
    same relative tolerance, so truncation never costs relative accuracy
    (the sum itself can be tiny and is later divided by powers of u).
    Large u switches to the closed log form, where the partial sum being
    subtracted is bounded by the harmonic number and no cancellation
    occurs.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    u_arr = np.asarray(u, dtype=float)
    scalar = u_arr.ndim == 0
    u_arr = np.atleast_1d(u_arr)
    if np.any(u_arr < -1e-15) or np.any(u_arr >= 1.0):
        raise ValueError("log_tail requires 0 <= u < 1")
    u_arr = np.clip(u_arr, 0.0, 1.0 - 1e-16)
    out = np.zeros_like(u_arr)

    lo = u_arr <= 0.5
    if np.any(lo):
        ul = u_arr[lo]
        term = ul**n
        acc = term / n
        k = n
        while k < n + 128:
            k += 1
            term = term * ul
            acc = acc + term / k
            tail = term / (k + 1)  # bounds every later summand
            if np.all(tail <= cfg.series_term_tol * np.maximum(acc, 1e-300)):
                break
        out[lo] = acc
    hi = ~lo
    if np.any(hi):
        uh = u_arr[hi]
        acc = -np.log1p(-uh)
        term = np.ones_like(uh)
        for k in range(1, n):
            term = term * uh
            acc = acc - term / k
        out[hi] = acc
    return float(out[0]) if scalar else out


def log_tail_deriv(n: int, u):
    """d/du of log_tail(n, u), i.e. u^{n-1} / (1-u)."""
    u_arr = np.asarray(u, dtype=float)
    return u_arr ** (n - 1) / (1.0 - u_arr)


def log_tail_scaled(n: int, shift: int, u, cfg: ToleranceConfig = DEFAULT_TOL):
    """u^{-shift} * log_tail(n, u) = sum_{k>=n} u^{k-shift} / k, shift <= n.

    Evaluated as a series in its own right, so u -> 0 never produces the
    inf * 0 of the naive product (the closed forms multiply the tail by
    u^{1-n} or u^{-n} everywhere).
    """
    if shift > n:
        raise ValueError("shift must not exceed n")
    u_arr = np.asarray(u, dtype=float)
    scalar = u_arr.ndim == 0
    u_arr = np.clip(np.atleast_1d(u_arr), 0.0, 1.0 - 1e-16)
    out = np.zeros_like(u_arr)
    lo = u_arr <= 0.5
    if np.any(lo):
        ul = u_arr[lo]
        term = ul ** (n - shift)
        acc = term / n
        k = n
        while k < n + 128:
            k += 1
            term = term * ul
            acc = acc + term / k
            if np.all(term / (k + 1) <= cfg.series_term_tol * np.maximum(acc, 1e-300)):
                break
        out[lo] = acc
    hi = ~lo
    if np.any(hi):
        uh = u_arr[hi]
        out[hi] = uh ** (-shift) * log_tail(n, uh, cfg)
    return float(out[0]) if scalar else out


def log_tail_scaled_deriv(n: int, shift: int, u, cfg: ToleranceConfig = DEFAULT_TOL):
    """d/du of log_tail_scaled(n, shift, u) = sum_{k>=n} (k-shift) u^{k-shift-1} / k."""
    if shift > n:
        raise ValueError("shift must not exceed n")
    u_arr = np.asarray(u, dtype=float)
    scalar = u_arr.ndim == 0
    u_arr = np.clip(np.atleast_1d(u_arr), 0.0, 1.0 - 1e-16)
    out = np.zeros_like(u_arr)
    lo = u_arr <= 0.5
    if np.any(lo):
        ul = u_arr[lo]
        if n == shift:
            # sum_{j>=1} j u^{j-1} / (n+j): the k = n summand is constant
            term = np.ones_like(ul)      # u^{j-1}
            acc = np.zeros_like(ul)
            for j in range(1, 132):
                acc = acc + j * term / (n + j)
                term = term * ul
                if np.all(term <= cfg.series_term_tol * np.maximum(acc, 1e-300)):
                    break
        else:
            term = ul ** (n - shift - 1)
            acc = (n - shift) * term / n
            k = n
            while k < n + 130:
                k += 1
                term = term * ul
                acc = acc + (k - shift) * term / k
                if np.all(term <= cfg.series_term_tol * np.maximum(acc, 1e-300)):
                    break
        out[lo] = acc
    hi = ~lo
    if np.any(hi):
        uh = u_arr[hi]
        out[hi] = uh ** (-shift) * (log_tail_deriv(n, uh)
                                    - shift * log_tail(n, uh, cfg) / uh)
    return float(out[0]) if scalar else out


def _iso_ratio(n, phi0, a, v):
    if v < a:
        raise ValueError(f"need v >= a, got v={v}, a={a}")
    if v == a:
        return 0.0
    if a <= phi0:
        raise SingularConfigurationError(
            f"lower endpoint a={a} must exceed phi0={phi0} when v > a"
        )
    return (v - a) / (v - phi0)


def iso_integral(n: int, phi0: float, a: float, v: float,
                 cfg: ToleranceConfig = DEFAULT_TOL) -> float:
    """int_a^v (t-a)^{n-1} / (t-phi0)^n dt via its series form.

    Exact 0 at v = a; increasing in v.  Requires a > phi0 for v > a.
    """
    u = _iso_ratio(n, phi0, a, v)
    return log_tail(n, u, cfg) if u else 0.0


def iso_integral_mixed(n: int, phi0: float, a: float, v: float, lam: float,
                       cfg: ToleranceConfig = DEFAULT_TOL) -> float:
    """int_a^v [(t-a)^{n-1}/(t-phi0)^n - (1-lam)(t-a)^n/(t-phi0)^{n+1}] dt."""
    if not 0.0 < lam <= 1.0:
        raise ValueError("lam must lie in (0, 1]")
    u = _iso_ratio(n, phi0, a, v)
    if u == 0.0:
        return 0.0
    return u**n / n + lam * log_tail(n + 1, u, cfg)
