"""Mechanism constructors and the allocation/payment engine.

Payments follow Myerson's envelope formula, pinned at the bottom by
p_i(a, v_-i) = a x_i(a, v_-i), which the closed forms below implement:

    highest bidder:   v1 g_u(v1) - (v2 - a) g_d(v2) - int_{v2}^{v1} g_u
    each other bidder: a g_d(v1)

With k bidders tied at the top each receives g_u/k + (k-1)/k g_d in
expectation and pays v1 * (own allocation) - (v1 - a) g_d(v1); summed
revenue agrees with the untied formula at v2 = v1 for every k.
"""

from __future__ import annotations

import numpy as np

from .domain import (
    AuctionOutcome,
    CurvePiece,
    DomainError,
    GuGdMechanism,
    PiecewiseCdf,
    ProblemInstance,
)

__all__ = [
    "InconsistentMixtureError",
    "spa_fixed",
    "pool_fixed",
    "spa_random",
    "mixture_to_gugd",
    "gugd_to_mixture",
    "allocate_and_pay",
    "genspa_allocate_and_pay",
]


class InconsistentMixtureError(DomainError):
    """Mixture component masses do not add up to a feasible mechanism."""


def _const(c):
    return lambda v: np.full_like(np.asarray(v, dtype=float), c)


_ZERO = _const(0.0)


def spa_fixed(r: float, inst: ProblemInstance) -> GuGdMechanism:
    """Second-price auction with deterministic reserve r."""
    a, b = inst.a, inst.b
    if not a <= r <= b:
        raise DomainError(f"reserve {r} outside [{a}, {b}]")
    if r > a:
        gu = [CurvePiece(a, r, _ZERO, _ZERO), CurvePiece(r, b, _const(1.0), _ZERO)]
        jumps = [r]
    else:
        gu = [CurvePiece(a, b, _const(1.0), _ZERO)]
        jumps = []
    gd = [CurvePiece(a, b, _ZERO, _ZERO)]
    return GuGdMechanism(inst, gu, gd, v_star=b, alpha=0.0, form="spa_fixed",
                         params={"r": r}, jumps=jumps, validate=False)


def pool_fixed(tau: float, inst: ProblemInstance) -> GuGdMechanism:
    """Pooling auction: highest bidder above tau, uniform among all below."""
    a, b, n = inst.a, inst.b, inst.n
    if not a <= tau <= b:
        raise DomainError(f"threshold {tau} outside [{a}, {b}]")
    if n == 1:
        # degenerate: always allocates to the single bidder
        gu = [CurvePiece(a, b, _const(1.0), _ZERO)]
        gd = [CurvePiece(a, b, _ZERO, _ZERO)]
        return GuGdMechanism(inst, gu, gd, v_star=a, alpha=0.0, form="pool_fixed",
                             params={"tau": tau}, jumps=[], validate=False)
    if tau > a:
        gu = [CurvePiece(a, tau, _const(1.0 / n), _ZERO),
              CurvePiece(tau, b, _const(1.0), _ZERO)]
        gd = [CurvePiece(a, tau, _const(1.0 / n), _ZERO),
              CurvePiece(tau, b, _ZERO, _ZERO)]
        jumps = [tau]
    else:
        gu = [CurvePiece(a, b, _const(1.0), _ZERO)]
        gd = [CurvePiece(a, b, _ZERO, _ZERO)]
        jumps = []
    return GuGdMechanism(inst, gu, gd, v_star=a, alpha=1.0 / n, form="pool_fixed",
                         params={"tau": tau}, jumps=jumps, validate=False)


def spa_random(phi: PiecewiseCdf, inst: ProblemInstance) -> GuGdMechanism:
    """SPA with random reserve drawn from phi (total mass 1)."""
    m = mixture_to_gugd(phi, None, 0.0, inst)
    m.form = "spa_random"
    return m


def mixture_to_gugd(phi, psi, alpha: float, inst: ProblemInstance) -> GuGdMechanism:
    """Assemble the (g_u, g_d) curves of a threshold mixture.

    phi is the SPA-reserve measure on [a, v*] with mass 1 - n*alpha, psi the
    POOL-threshold measure on [v*, b] with mass n*alpha; either may be None
    when its mass is zero.  The correspondence is

        g_u(v) = phi(v) + alpha + (n-1)/n psi(v)
        g_d(v) = alpha - psi(v)/n
    """
    a, b, n = inst.a, inst.b, inst.n
    if not 0 <= alpha <= 1.0 / n + 1e-12:
        raise InconsistentMixtureError(f"alpha={alpha} outside [0, 1/n]")
    phi_mass = phi.total_mass if phi is not None else 0.0
    psi_mass = psi.total_mass if psi is not None else 0.0
    if abs(phi_mass - (1 - n * alpha)) > 1e-9:
        raise InconsistentMixtureError(
            f"phi mass {phi_mass} != 1 - n alpha = {1 - n * alpha}")
    if abs(psi_mass - n * alpha) > 1e-9:
        raise InconsistentMixtureError(f"psi mass {psi_mass} != n alpha = {n * alpha}")

    v_star = phi.support[1] if phi is not None else (psi.support[0] if psi else b)

    def phi_at(v):
        if phi is None:
            return np.zeros_like(np.asarray(v, dtype=float))
        return phi.eval(np.clip(v, phi.support[0], phi.support[1]))

    def psi_at(v):
        if psi is None:
            return np.zeros_like(np.asarray(v, dtype=float))
        v_arr = np.asarray(v, dtype=float)
        out = np.where(v_arr < psi.support[0], 0.0,
                       psi.eval(np.clip(v_arr, psi.support[0], psi.support[1])))
        return out

    def dphi_at(v):
        if phi is None:
            return np.zeros_like(np.asarray(v, dtype=float))
        v_arr = np.asarray(v, dtype=float)
        inside = (v_arr >= phi.support[0]) & (v_arr < phi.support[1])
        return np.where(inside, phi.density(np.clip(v_arr, *phi.support)), 0.0)

    def dpsi_at(v):
        if psi is None:
            return np.zeros_like(np.asarray(v, dtype=float))
        v_arr = np.asarray(v, dtype=float)
        inside = (v_arr >= psi.support[0]) & (v_arr < psi.support[1])
        return np.where(inside, psi.density(np.clip(v_arr, *psi.support)), 0.0)

    gu = [CurvePiece(a, b,
                     lambda v: phi_at(v) + alpha + (n - 1) / n * psi_at(v),
                     lambda v: dphi_at(v) + (n - 1) / n * dpsi_at(v))]
    if n == 1:
        gd = [CurvePiece(a, b, _ZERO, _ZERO)]
    else:
        gd = [CurvePiece(a, b,
                         lambda v: alpha - psi_at(v) / n,
                         lambda v: -dpsi_at(v) / n)]
    jumps = [at.loc for at in (phi.interior_atoms if phi else [])]
    jumps += [at.loc for at in (psi.interior_atoms if psi else [])]
    return GuGdMechanism(inst, gu, gd, v_star=v_star, alpha=alpha,
                         form="mixture", params={}, jumps=jumps, validate=False)


def gugd_to_mixture(mech: GuGdMechanism, v):
    """Invert the correspondence pointwise: (phi(v), psi(v), alpha).

    phi(v) = g_u + (n-1) g_d - n alpha,  psi(v) = n (alpha - g_d).
    """
    n = mech.inst.n
    alpha = mech.alpha
    gu = mech.gu(v)
    gd = mech.gd(v) if n >= 2 else np.zeros_like(np.asarray(v, dtype=float)) + alpha * 0
    if n == 1:
        return mech.gu(v) - alpha, np.zeros_like(np.asarray(v, dtype=float)), alpha
    return gu + (n - 1) * gd - n * alpha, n * (alpha - gd), alpha


def _check_support(vals, inst):
    lo = inst.a * (1 - 1e-12) - 1e-300
    hi = inst.b * (1 + 1e-12)
    if np.any(vals < lo) or np.any(vals > hi):
        raise DomainError(f"valuation outside [{inst.a}, {inst.b}]")


def allocate_and_pay(mech: GuGdMechanism, valuations, inst: ProblemInstance) -> AuctionOutcome:
    """Run a (g_u, g_d) mechanism on one valuation vector.

    Ties at the top get the exact expected split of Definition of the
    representation (g_u/k + (k-1)/k g_d each); payments come from the
    envelope applied to the expected allocation curve, so the outcome is
    deterministic.
    """
    vals = np.asarray(valuations, dtype=float)
    _check_support(vals, inst)
    if len(vals) != inst.n:
        raise DomainError(f"expected {inst.n} valuations, got {len(vals)}")
    a = inst.a
    v1 = float(np.max(vals))
    top = np.isclose(vals, v1, rtol=1e-14, atol=0)
    k = int(np.count_nonzero(top))
    gu1 = float(mech.gu(v1))
    gd1 = float(mech.gd(v1)) if inst.n >= 2 else 0.0

    alloc = np.empty(inst.n)
    pay = np.empty(inst.n)
    if k >= 2:
        share = gu1 / k + (k - 1) / k * gd1
        alloc[top] = share
        pay[top] = v1 * share - (v1 - a) * gd1
    else:
        i = int(np.argmax(top))
        rest = np.delete(vals, i)
        v2 = float(np.max(rest)) if len(rest) else a
        gd2 = float(mech.gd(v2)) if inst.n >= 2 else 0.0
        alloc[i] = gu1
        pay[i] = v1 * gu1 - (v2 - a) * gd2 - mech.gu_integral(v2, v1)
    alloc[~top] = gd1
    pay[~top] = a * gd1
    return AuctionOutcome(tuple(alloc), tuple(pay))


def genspa_allocate_and_pay(phi: PiecewiseCdf, valuations,
                            inst: ProblemInstance) -> AuctionOutcome:
    """Generous SPA: behaves as SPA(phi) except when every non-highest
    bidder sits at a, where it allocates to the highest with probability one
    (and the envelope pins that payment at a).
    """
    if inst.n == 1:
        raise DomainError("the generous SPA needs a second-order statistic (n >= 2)")
    vals = np.asarray(valuations, dtype=float)
    _check_support(vals, inst)
    if len(vals) != inst.n:
        raise DomainError(f"expected {inst.n} valuations, got {len(vals)}")
    a, b = inst.a, inst.b
    v1 = float(np.max(vals))
    top = np.isclose(vals, v1, rtol=1e-14, atol=0)
    k = int(np.count_nonzero(top))
    alloc = np.zeros(inst.n)
    pay = np.zeros(inst.n)

    def phi_int(x, y):
        pts = [x] + [p for p in phi.breakpoints() if x < p < y] + [y]
        from .numerics import integrate
        return sum(integrate(lambda t: phi.eval(t), lo, hi)
                   for lo, hi in zip(pts[:-1], pts[1:]) if hi > lo)

    if k == inst.n and v1 == a:
        alloc[:] = 1.0 / inst.n
        pay[:] = a / inst.n
        return AuctionOutcome(tuple(alloc), tuple(pay))
    if k >= 2:
        share = float(phi.eval(v1)) / k
        alloc[top] = share
        pay[top] = v1 * share
        return AuctionOutcome(tuple(alloc), tuple(pay))
    i = int(np.argmax(top))
    v2 = float(np.max(np.delete(vals, i)))
    if v2 == a:
        alloc[i] = 1.0
        pay[i] = a
    else:
        p1 = float(phi.eval(v1))
        alloc[i] = p1
        pay[i] = v1 * p1 - phi_int(v2, v1)
    return AuctionOutcome(tuple(alloc), tuple(pay))
