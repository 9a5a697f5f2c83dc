"""Closed-form saddle points for the four mechanism classes.

Everything reduces to the tail series T(n, u) = sum_{k>=n} u^k/k
(``numerics.log_tail``):

* k_l solves  lam T(n, 1-k) = (1-k)^{n-1}
* k_h solves  lam T(n+1, 1-k) = (1 - 1/n)(1-k)^n          (k_h = 1 for n = 1)
* k_h' = lam n / ((1+lam) n - 1)

Minimax lambda-regret values in closed form (b the upper bound, at = a/b):

* low      -(1-lam) b + b (1-k_l)^{n-1} [(1-lam)(1-k_l) + n k_l]
* moderate -(1-lam) b + (1-lam) b (1-at)^n + lam n a T(n, 1-at)
* high     -(1-lam) b + (b-a)(1-k_h)^{n-1} [(1-lam)(1-k_h) + n k_h]

The moderate/low and moderate/high expressions agree at k_l and k_h, which
the regime-continuity tests exercise numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import (
    CurvePiece,
    DomainError,
    GuGdMechanism,
    MechanismClass,
    PiecewiseCdf,
    ProblemInstance,
    SaddleSolution,
    Segment,
)
from .mechanisms import spa_fixed
from .numerics import (
    DEFAULT_TOL,
    ToleranceConfig,
    expand_bracket_down,
    find_root,
    log_tail,
    log_tail_deriv,
    log_tail_scaled,
    log_tail_scaled_deriv,
)

__all__ = [
    "RegimeConstants",
    "regime_constants",
    "classify_regime",
    "minimax_value",
    "optimal_all",
    "optimal_std",
    "optimal_spa_rand",
    "worst_regret_spa_fixed",
    "SpaDetResult",
    "optimal_spa_det",
    "solve",
]


@dataclass(frozen=True)
class RegimeConstants:
    k_l: float
    k_h: float
    k_h_prime: float

    def to_json(self):
        return {"k_l": self.k_l, "k_h": self.k_h, "k_h_prime": self.k_h_prime}


def _solve_k_l(n, lam, cfg):
    f = lambda k: lam * log_tail(n, 1 - k, cfg) - (1 - k) ** (n - 1)
    lo = expand_bracket_down(f, 1e-9, 1 - 1e-14)
    return find_root(f, lo, 1 - 1e-14, _tight(cfg))


def _solve_k_h(n, lam, cfg):
    if n == 1:
        return 1.0
    f = lambda k: lam * log_tail(n + 1, 1 - k, cfg) - (1 - 1 / n) * (1 - k) ** n
    lo = expand_bracket_down(f, 1e-9, 1 - 1e-14)
    return find_root(f, lo, 1 - 1e-14, _tight(cfg))


def _tight(cfg):
    # defining-equation residuals are required at 1e-12; solve to eps
    return ToleranceConfig(cfg.quad_abs_tol, 1e-16, cfg.series_term_tol, cfg.max_iter)


def regime_constants(n: int, lam: float, cfg: ToleranceConfig = DEFAULT_TOL) -> RegimeConstants:
    """Thresholds k_l < k_h (and k_h' for the SPA-rand class)."""
    if n < 1 or not 0 < lam <= 1:
        raise DomainError("need n >= 1 and lambda in (0, 1]")
    return RegimeConstants(
        k_l=_solve_k_l(n, lam, cfg),
        k_h=_solve_k_h(n, lam, cfg),
        k_h_prime=lam * n / ((1 + lam) * n - 1),
    )


def classify_regime(n: int, lam: float, k: float, cfg: ToleranceConfig = DEFAULT_TOL) -> str:
    """LOW/MODERATE/HIGH by sign tests on the defining equations (no root solve)."""
    if k <= 0:
        return "LOW"  # k_l > 0 for every (n, lam)
    if lam * log_tail(n, 1 - k, cfg) >= (1 - k) ** (n - 1):
        return "LOW"
    if n >= 2 and lam * log_tail(n + 1, 1 - k, cfg) <= (1 - 1 / n) * (1 - k) ** n:
        return "HIGH"
    return "MODERATE"


# ---------------------------------------------------------------------------
# minimax values (closed forms)
# ---------------------------------------------------------------------------

def _value_low(n, lam, b, k_l):
    return -(1 - lam) * b + b * (1 - k_l) ** (n - 1) * ((1 - lam) * (1 - k_l) + n * k_l)


def _value_moderate(n, lam, a, b, cfg=DEFAULT_TOL):
    at = a / b
    return (-(1 - lam) * b + (1 - lam) * b * (1 - at) ** n
            + lam * n * a * log_tail(n, 1 - at, cfg))


def _value_high(n, lam, a, b, k_h):
    return -(1 - lam) * b + (b - a) * (1 - k_h) ** (n - 1) * ((1 - lam) * (1 - k_h) + n * k_h)


def minimax_value(mech_class: MechanismClass, inst: ProblemInstance,
                  cfg: ToleranceConfig = DEFAULT_TOL) -> float:
    """Minimax lambda-regret of the class, without building the mechanism.

    Used by the maximin-ratio bisection, so it avoids any work that is not
    needed for the value itself.
    """
    n, lam, a, b = inst.n, inst.lam, inst.a, inst.b
    if mech_class is MechanismClass.ALL:
        regime = classify_regime(n, lam, inst.k, cfg)
        if regime == "LOW":
            return _value_low(n, lam, b, _solve_k_l(n, lam, cfg))
        if regime == "HIGH":
            return _value_high(n, lam, a, b, _solve_k_h(n, lam, cfg))
        return _value_moderate(n, lam, a, b, cfg)
    if mech_class is MechanismClass.STD:
        if n == 1 or classify_regime(n, lam, inst.k, cfg) == "LOW":
            return minimax_value(MechanismClass.ALL, inst, cfg)
        return optimal_std(inst, cfg).value
    if mech_class is MechanismClass.SPA_RAND:
        if n == 1:
            return minimax_value(MechanismClass.ALL, inst, cfg)
        if classify_regime(n, lam, inst.k, cfg) == "LOW":
            return _value_low(n, lam, b, _solve_k_l(n, lam, cfg))
        if inst.k >= lam * n / ((1 + lam) * n - 1):
            return worst_regret_spa_fixed(inst, a)
        return _spa_rand_moderate(inst, cfg)["value"]
    if mech_class is MechanismClass.SPA_DET:
        return optimal_spa_det(inst).value
    if mech_class is MechanismClass.SPA_NO_RESERVE:
        return worst_regret_spa_fixed(inst, a)
    raise DomainError(f"unknown class {mech_class}")


# ---------------------------------------------------------------------------
# mechanism curve pieces
# ---------------------------------------------------------------------------

def _piece_low_phi(r, n, lam):
    """lam (v/(v-r))^{n-1} int_r^v (t-r)^{n-1}/t^n dt and its derivative."""

    def f(v):
        u = np.clip((v - r) / v, 0.0, 1 - 1e-16)
        return lam * log_tail_scaled(n, n - 1, u)

    def df(v):
        u = np.clip((v - r) / v, 0.0, 1 - 1e-16)
        du = r / v**2
        return lam * du * log_tail_scaled_deriv(n, n - 1, u)

    return f, df


def _piece_moderate_upper(n, lam, a, b):
    """g_u on [v*, b]: (v/(v-a))^n [((b-a)/b)^n - int_v^b mixed]."""
    ub = (b - a) / b
    gb = ub**n / n + lam * log_tail(n + 1, ub)

    def core(u):
        return ub**n - (gb - (u**n / n + lam * log_tail(n + 1, u)))

    def f(v):
        u = (v - a) / v
        return core(u) / u**n

    def df(v):
        u = (v - a) / v
        du = a / v**2
        dcore = (u ** (n - 1) + lam * log_tail_deriv(n + 1, u)) * du
        return (dcore - core(u) * n * du / u) / u**n

    return f, df


def _piece_high_gu(n, lam, a, phi0):
    """g_u = 1/n + lam ((v-phi0)/(v-a))^n int_a^v (t-a)^n/(t-phi0)^{n+1} dt."""

    def f(v):
        u = np.clip((v - a) / (v - phi0), 0.0, 1 - 1e-16)
        return 1.0 / n + lam * log_tail_scaled(n + 1, n, u)

    def df(v):
        u = np.clip((v - a) / (v - phi0), 0.0, 1 - 1e-16)
        du = (a - phi0) / (v - phi0) ** 2
        return lam * du * log_tail_scaled_deriv(n + 1, n, u)

    return f, df


def _const_piece(c):
    fn = lambda v: np.full_like(np.asarray(v, dtype=float), c)
    zero = lambda v: np.zeros_like(np.asarray(v, dtype=float))
    return fn, zero


def _complement(fp, dfp, n):
    f = lambda v: (1.0 - fp(v)) / (n - 1)
    df = lambda v: -dfp(v) / (n - 1)
    return f, df


# ---------------------------------------------------------------------------
# the ALL class (Theorem: full saddle characterization)
# ---------------------------------------------------------------------------

def _low_solution(inst, cfg):
    n, lam, a, b = inst.n, inst.lam, inst.a, inst.b
    k_l = _solve_k_l(n, lam, cfg)
    r_star = k_l * b
    f, df = _piece_low_phi(r_star, n, lam)
    zf, zd = _const_piece(0.0)
    gu = []
    if r_star > a:
        gu.append(CurvePiece(a, r_star, zf, zd))
    gu.append(CurvePiece(r_star, b, f, df))
    gd = [CurvePiece(a, b, zf, zd)]
    mech = GuGdMechanism(inst, gu, gd, v_star=b, alpha=0.0, form="saddle_low",
                         params={"r_star": r_star, "n": n, "lam": lam}, jumps=[])
    segs = []
    if r_star > a:
        segs.append(Segment(a, r_star, "flat", {"level": 0.0}))
    segs.append(Segment(r_star, b, "low_phi", {"r": r_star, "n": n, "lam": lam}))
    phi = PiecewiseCdf((a, b), [], segs)
    fsegs = []
    if r_star > a:
        fsegs.append(Segment(a, r_star, "flat", {"level": 0.0}))
    fsegs.append(Segment(r_star, b, "iso_revenue", {"c": r_star}))
    worst = PiecewiseCdf((a, b), [(b, k_l)], fsegs)
    value = _value_low(n, lam, b, k_l)
    return mech, phi, worst, value, {"k_l": k_l, "r_star": r_star}


def _moderate_vstar_alpha(inst, cfg):
    n, lam, a, b = inst.n, inst.lam, inst.a, inst.b
    ub = (b - a) / b
    target = n * ub**n
    gb = ub**n / n + lam * log_tail(n + 1, ub, cfg)

    def fn(v):
        u = (v - a) / v
        gv = u**n / n + lam * log_tail(n + 1, u, cfg)
        return u**n + (n - 1) * u * lam * log_tail(n, u, cfg) + n * (gb - gv) - target

    v_star = find_root(fn, a, b, _tight(cfg))
    u = (v_star - a) / v_star
    if u > 0:
        alpha = (1 - lam * log_tail(n, u, cfg) / u ** (n - 1)) / n
    else:
        alpha = 1.0 / n
    return v_star, min(max(alpha, 0.0), 1.0 / n)


def _moderate_solution(inst, cfg):
    n, lam, a, b = inst.n, inst.lam, inst.a, inst.b
    v_star, alpha = _moderate_vstar_alpha(inst, cfg)
    lo_f_raw, lo_df = _piece_low_phi(a, n, lam)
    lo_f = lambda v: alpha + lo_f_raw(v)
    up_f, up_df = _piece_moderate_upper(n, lam, a, b)
    cf, cz = _const_piece(alpha)
    gu = [CurvePiece(a, v_star, lo_f, lo_df), CurvePiece(v_star, b, up_f, up_df)]
    if n >= 2:
        gd = [CurvePiece(a, v_star, cf, cz),
              CurvePiece(v_star, b, *_complement(up_f, up_df, n))]
    else:
        gd = [CurvePiece(a, b, *_const_piece(0.0))]
    mech = GuGdMechanism(inst, gu, gd, v_star=v_star, alpha=alpha,
                         form="saddle_moderate",
                         params={"v_star": v_star, "alpha": alpha, "n": n, "lam": lam},
                         jumps=[])
    if n >= 2:
        segs = [Segment(a, v_star, "spa_part", {"a": a, "n": n, "lam": lam}),
                Segment(v_star, b, "pool_part", {"a": a, "b": b, "n": n, "lam": lam})]
        atoms = []
    else:
        # one bidder: the pooling weight is a point mass at a on the price CDF
        segs = [Segment(a, b, "spa_part", {"a": a, "n": n, "lam": lam, "offset": alpha})]
        atoms = [(a, alpha)]
    unified = PiecewiseCdf((a, b), atoms, segs)
    worst = PiecewiseCdf((a, b), [(b, a / b)], [Segment(a, b, "iso_revenue", {"c": a})])
    value = _value_moderate(n, lam, a, b, cfg)
    return mech, unified, worst, value, {"v_star": v_star, "alpha": alpha}


def _high_solution(inst, cfg):
    n, lam, a, b = inst.n, inst.lam, inst.a, inst.b
    k_h = _solve_k_h(n, lam, cfg)
    phi0 = (a - k_h * b) / (1 - k_h)
    f, df = _piece_high_gu(n, lam, a, phi0)
    gu = [CurvePiece(a, b, f, df)]
    gd = [CurvePiece(a, b, *_complement(f, df, n))]
    mech = GuGdMechanism(inst, gu, gd, v_star=a, alpha=1.0 / n, form="saddle_high",
                         params={"phi_0": phi0, "n": n, "lam": lam}, jumps=[])
    psi = PiecewiseCdf((a, b), [], [Segment(a, b, "high_psi",
                                            {"a": a, "phi0": phi0, "n": n, "lam": lam})])
    worst = PiecewiseCdf((a, b), [(b, (a - phi0) / (b - phi0))],
                         [Segment(a, b, "const_virtual", {"a": a, "phi0": phi0})])
    value = _value_high(n, lam, a, b, k_h)
    return mech, psi, worst, value, {"k_h": k_h, "phi_0": phi0}


def optimal_all(inst: ProblemInstance, cfg: ToleranceConfig = DEFAULT_TOL) -> SaddleSolution:
    """Optimal DSIC mechanism, worst case, and minimax value (all three regimes)."""
    n, lam = inst.n, inst.lam
    consts = regime_constants(n, lam, cfg)
    regime = classify_regime(n, lam, inst.k, cfg)
    if regime == "LOW":
        mech, thr, worst, value, extra = _low_solution(inst, cfg)
    elif regime == "HIGH":
        mech, thr, worst, value, extra = _high_solution(inst, cfg)
    else:
        mech, thr, worst, value, extra = _moderate_solution(inst, cfg)
    constants = dict(consts.to_json())
    constants.update(extra)
    return SaddleSolution(inst, MechanismClass.ALL, regime, mech, worst, value,
                          constants, threshold_cdf=thr)


# ---------------------------------------------------------------------------
# standard mechanisms (generous SPA)
# ---------------------------------------------------------------------------

def _genspa_reserve_cdf(inst, cfg):
    """Solve c in (0, a] such that the GenSPA reserve CDF closes at 1."""
    n, lam, a, b = inst.n, inst.lam, inst.a, inst.b

    def phi_b(c):
        ua, ub = 1 - c / a, 1 - c / b
        return lam * (log_tail(n, ub, cfg) - log_tail(n, ua, cfg)) / (
            ub ** (n - 1) - ua ** (n - 1))

    f = lambda c: phi_b(c) - 1.0
    lo = expand_bracket_down(f, a * 1e-6, a * (1 - 1e-13), factor=1e-4,
                             floor=a * 1e-280)
    c = find_root(f, lo, a * (1 - 1e-13), _tight(cfg))
    atom = lam * (a - c) / ((n - 1) * c)
    phi = PiecewiseCdf((a, b), [(a, atom)],
                       [Segment(a, b, "genspa_phi",
                                {"a": a, "b": b, "c": c, "n": n, "lam": lam})])
    return c, atom, phi


def optimal_std(inst: ProblemInstance, cfg: ToleranceConfig = DEFAULT_TOL) -> SaddleSolution:
    """Optimal standard mechanism: Theorem 2's SPA for low support
    information, otherwise the generous SPA with its reserve distribution."""
    n, lam, a, b = inst.n, inst.lam, inst.a, inst.b
    if n == 1:
        sol = optimal_all(inst, cfg)
        return SaddleSolution(inst, MechanismClass.STD, sol.regime, sol.mechanism,
                              sol.worst_case, sol.value, sol.constants,
                              threshold_cdf=sol.threshold_cdf)
    consts = regime_constants(n, lam, cfg)
    if classify_regime(n, lam, inst.k, cfg) == "LOW":
        mech, thr, worst, value, extra = _low_solution(inst, cfg)
        constants = dict(consts.to_json())
        constants.update(extra)
        return SaddleSolution(inst, MechanismClass.STD, "LOW", mech, worst, value,
                              constants, threshold_cdf=thr)
    c, atom, phi = _genspa_reserve_cdf(inst, cfg)
    f0 = 1 - c / a
    worst = PiecewiseCdf((a, b), [(a, f0), (b, c / b)],
                         [Segment(a, b, "iso_revenue", {"c": c})])
    from .regret import lambda_regret_genspa

    value = lambda_regret_genspa(phi, worst, inst, cfg)
    constants = dict(consts.to_json())
    constants.update({"c": c, "F_0": f0, "phi_atom_a": atom})
    return SaddleSolution(inst, MechanismClass.STD, "HIGH", phi, worst, value,
                          constants, threshold_cdf=phi)


# ---------------------------------------------------------------------------
# SPA with random reserve
# ---------------------------------------------------------------------------

def _spa_rand_moderate(inst, cfg):
    n, lam, a, b = inst.n, inst.lam, inst.a, inst.b
    at = inst.k

    def partial(x, m):
        return sum(x**k / k for k in range(1, m))

    def fn(f0):
        q = (n - (n - 1) * f0) / n
        ub = 1 - q * at
        lhs = lam * f0**n / ((n - 1) * (1 - f0)) - ub ** (n - 1)
        rhs = lam * (math.log(q * at / (1 - f0)) - partial(f0, n) + partial(ub, n))
        return lhs - rhs

    cap = (n - 1) / (n - 1 + lam)
    f_0 = find_root(fn, 1e-14, cap, _tight(cfg))
    r_star = (n - (n - 1) * f_0) / (n * (1 - f_0)) * a
    c = (n - (n - 1) * f_0) / n * a
    phi_0 = lam * f_0 / ((n - 1) * (1 - f_0))
    d = f_0**n / ((n - 1) * (1 - f_0)) + math.log(1 - f_0) + partial(f_0, n)
    ub = 1 - c / b
    value = (-(1 - lam) * b + (1 - lam) * b * ub**n + lam * a * f_0**n
             + lam * n * c * (log_tail(n, ub, cfg) - log_tail(n, f_0, cfg)))
    return {"F_0": f_0, "r_star": r_star, "c": c, "Phi_0": phi_0, "d": d,
            "value": value}


def _spa_rand_gugd(inst, params):
    n, lam, a, b = inst.n, inst.lam, inst.a, inst.b
    r, c, d, phi_0 = params["r_star"], params["c"], params["d"], params["Phi_0"]

    def f(v):
        u = np.clip(1 - c / v, 1e-300, 1 - 1e-16)
        return lam * u ** (1 - n) * (d + log_tail(n, u))

    def df(v):
        u = np.clip(1 - c / v, 1e-300, 1 - 1e-16)
        du = c / v**2
        return lam * du * ((1 - n) * u ** (-n) * (d + log_tail(n, u))
                           + u ** (1 - n) * log_tail_deriv(n, u))

    cf, cz = _const_piece(phi_0)
    gu = [CurvePiece(a, r, cf, cz), CurvePiece(r, b, f, df)]
    gd = [CurvePiece(a, b, *_const_piece(0.0))]
    return GuGdMechanism(inst, gu, gd, v_star=b, alpha=0.0, form="spa_rand_moderate",
                         params={k: params[k] for k in ("F_0", "r_star", "c", "Phi_0", "d")},
                         jumps=[])


def optimal_spa_rand(inst: ProblemInstance, cfg: ToleranceConfig = DEFAULT_TOL) -> SaddleSolution:
    """Optimal SPA with random reserve (three regimes split by k_l, k_h')."""
    n, lam, a, b = inst.n, inst.lam, inst.a, inst.b
    if n == 1:
        # every one-bidder DSIC mechanism with full allocation at the top is
        # a randomized posted price, so the class optimum is the ALL optimum
        sol = optimal_all(inst, cfg)
        return SaddleSolution(inst, MechanismClass.SPA_RAND, sol.regime,
                              sol.mechanism, sol.worst_case, sol.value,
                              sol.constants, threshold_cdf=sol.threshold_cdf)
    consts = regime_constants(n, lam, cfg)
    constants = dict(consts.to_json())
    if classify_regime(n, lam, inst.k, cfg) == "LOW":
        mech, thr, worst, value, extra = _low_solution(inst, cfg)
        constants.update(extra)
        return SaddleSolution(inst, MechanismClass.SPA_RAND, "LOW", mech, worst,
                              value, constants, threshold_cdf=thr)
    if inst.k >= consts.k_h_prime:
        f_a = (n - 1) / (n - 1 + lam)
        f_b = lam / (n - 1 + lam)
        worst = PiecewiseCdf((a, b), [(a, f_a), (b, f_b)],
                             [Segment(a, b, "flat", {"level": f_a})])
        mech = spa_fixed(a, inst)
        value = worst_regret_spa_fixed(inst, a)
        thr = PiecewiseCdf((a, b), [(a, 1.0)], [Segment(a, b, "flat", {"level": 1.0})])
        return SaddleSolution(inst, MechanismClass.SPA_RAND, "HIGH", mech, worst,
                              value, constants, threshold_cdf=thr)
    params = _spa_rand_moderate(inst, cfg)
    r, c, f_0, phi_0 = params["r_star"], params["c"], params["F_0"], params["Phi_0"]
    mech = _spa_rand_gugd(inst, params)
    thr = PiecewiseCdf((a, b), [(a, phi_0)],
                       [Segment(a, r, "flat", {"level": phi_0}),
                        Segment(r, b, "spa_rand_phi",
                                {"c": c, "d": params["d"], "n": n, "lam": lam})])
    worst = PiecewiseCdf((a, b), [(a, f_0), (b, c / b)],
                         [Segment(a, r, "flat", {"level": f_0}),
                          Segment(r, b, "iso_revenue", {"c": c})])
    constants.update({k: params[k] for k in ("F_0", "r_star", "c", "Phi_0", "d")})
    return SaddleSolution(inst, MechanismClass.SPA_RAND, "MODERATE", mech, worst,
                          params["value"], constants, threshold_cdf=thr)


# ---------------------------------------------------------------------------
# deterministic reserve
# ---------------------------------------------------------------------------

def _pow_ratio(x, y, m):
    """(x/y)^m with the n=1 convention that a 0-exponent reads as 1."""
    return 1.0 if m == 0 else (x / y) ** m


def worst_regret_spa_fixed(inst: ProblemInstance, r: float) -> float:
    """Worst-case lambda-regret of SPA(r) over all i.i.d. distributions."""
    n, lam, a, b = inst.n, inst.lam, inst.a, inst.b
    if not a <= r <= b:
        raise DomainError(f"reserve {r} outside [{a}, {b}]")
    if r == a:
        return -(1 - lam) * b + (b - a) * _pow_ratio(n - 1, n - 1 + lam, n - 1)
    if r <= lam * b / (1 + lam):
        if n == 1:
            return lam * b - r
        return -(1 - lam) * b + (b - r) ** n * (n - 1) ** (n - 1) / (
            (n - 1 + lam) * (b - r) - r) ** (n - 1)
    return lam * r


@dataclass(frozen=True)
class SpaDetResult:
    r_star: float
    value: float

    def to_json(self):
        return {"r_star": self.r_star, "value": self.value}


def optimal_spa_det(inst: ProblemInstance) -> SpaDetResult:
    """Regret-minimizing deterministic reserve and its worst-case regret."""
    n, lam, a, b = inst.n, inst.lam, inst.a, inst.b
    threshold = 1 - (n / (n + lam)) ** n * _pow_ratio(n - 1 + lam, n - 1, n - 1)
    if inst.k <= threshold:
        r_star = lam * b / (n + lam)
        value = -(1 - lam) * b + (n / (n + lam)) ** n * b
    else:
        r_star = a
        value = worst_regret_spa_fixed(inst, a)
    return SpaDetResult(r_star=r_star, value=value)


def _spa_no_reserve_solution(inst, mech_class):
    n, lam, a, b = inst.n, inst.lam, inst.a, inst.b
    f_a = (n - 1) / (n - 1 + lam) if n >= 2 else 0.0
    f_b = 1.0 - f_a if n == 1 else lam / (n - 1 + lam)
    atoms = [(a, f_a), (b, f_b)] if f_a > 0 else [(b, 1.0)]
    worst = PiecewiseCdf((a, b), atoms, [Segment(a, b, "flat", {"level": f_a})])
    value = worst_regret_spa_fixed(inst, a)
    return SaddleSolution(inst, mech_class, "HIGH", spa_fixed(a, inst), worst,
                          value, {"r_star": a})


def solve(mech_class: MechanismClass, inst: ProblemInstance,
          cfg: ToleranceConfig = DEFAULT_TOL) -> SaddleSolution:
    """Dispatch to the class-specific construction.

    For SPA_DET with an interior optimal reserve, the worst case is a
    supremum approached by mass just below the reserve and is not attained;
    the solution then carries no worst-case CDF.
    """
    if mech_class is MechanismClass.ALL:
        return optimal_all(inst, cfg)
    if mech_class is MechanismClass.STD:
        return optimal_std(inst, cfg)
    if mech_class is MechanismClass.SPA_RAND:
        return optimal_spa_rand(inst, cfg)
    if mech_class is MechanismClass.SPA_NO_RESERVE:
        return _spa_no_reserve_solution(inst, mech_class)
    if mech_class is MechanismClass.SPA_DET:
        res = optimal_spa_det(inst)
        if res.r_star == inst.a:
            sol = _spa_no_reserve_solution(inst, MechanismClass.SPA_DET)
            sol.constants["r_star"] = res.r_star
            return sol
        return SaddleSolution(inst, MechanismClass.SPA_DET, "LOW",
                              spa_fixed(res.r_star, inst), None, res.value,
                              {"r_star": res.r_star})
    raise DomainError(f"unknown class {mech_class}")
