"""Core data model: problem instances, piecewise CDFs with atoms, the
(g_u, g_d) mechanism representation, and solution records.

CDFs are stored symbolically: each continuous stretch is a named closed
form with parameters, and point masses are explicit atoms.  Segment
evaluators return the absolute CDF value (right-continuous, so the value
at an atom location includes its mass).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    log_tail,
    log_tail_deriv,
    log_tail_scaled,
    log_tail_scaled_deriv,
)

__all__ = [
    "DomainError",
    "ProblemInstance",
    "MechanismClass",
    "Atom",
    "Segment",
    "PiecewiseCdf",
    "cdf_eval",
    "cdf_sample",
    "GuGdMechanism",
    "CurvePiece",
    "SaddleSolution",
    "AuctionOutcome",
]


class DomainError(ValueError):
    """Argument outside the object's support or an invariant violation."""


@dataclass(frozen=True)
class ProblemInstance:
    """One robust design problem: n i.i.d. bidders on [a, b], weight lam."""

    a: float
    b: float
    n: int
    lam: float

    def __post_init__(self):
        if not (0 <= self.a < self.b):
            raise DomainError(f"need 0 <= a < b, got a={self.a}, b={self.b}")
        if self.n < 1:
            raise DomainError(f"need n >= 1, got {self.n}")
        if not (0 < self.lam <= 1):
            raise DomainError(f"need lambda in (0, 1], got {self.lam}")

    @property
    def k(self) -> float:
        """Relative support information a/b."""
        return self.a / self.b

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "n": self.n, "lambda": self.lam}

    @classmethod
    def from_json(cls, d: dict) -> "ProblemInstance":
        return cls(a=d["a"], b=d["b"], n=d["n"], lam=d["lambda"])


class MechanismClass(enum.Enum):
    ALL = "all"
    STD = "std"
    SPA_RAND = "spa-rand"
    SPA_DET = "spa-det"
    SPA_NO_RESERVE = "spa-no-reserve"

    @classmethod
    def parse(cls, tag: str) -> "MechanismClass":
        tag = tag.strip().lower().replace("_", "-")
        for m in cls:
            if m.value == tag:
                return m
        raise DomainError(f"unknown mechanism class {tag!r}; "
                          f"expected one of {[m.value for m in cls]}")


# ---------------------------------------------------------------------------
# segment forms
# ---------------------------------------------------------------------------
# Each form maps (v, params) -> absolute CDF value, plus a density.
# v is a numpy array.

def _f_flat(v, p):
    return np.full_like(v, p["level"])


def _d_flat(v, p):
    return np.zeros_like(v)


def _f_iso(v, p):
    return 1.0 - p["c"] / v


def _d_iso(v, p):
    return p["c"] / v**2


def _f_const_virtual(v, p):
    return (v - p["a"]) / (v - p["phi0"])


def _d_const_virtual(v, p):
    return (p["a"] - p["phi0"]) / (v - p["phi0"]) ** 2


def _masked(u, fn, limit):
    """Evaluate fn on the u > 0 mask, the limit value elsewhere."""
    u = np.asarray(u, dtype=float)
    out = np.full_like(u, limit)
    m = u > 1e-250
    if np.any(m):
        out[m] = fn(u[m])
    return out


def _f_low_phi(v, p):
    # lam * (v/(v-r))^{n-1} * int_r^v (t-r)^{n-1}/t^n dt, zero at v = r
    n, lam, r = p["n"], p["lam"], p["r"]
    u = np.clip((v - r) / v, 0.0, 1.0 - 1e-16)
    return lam * log_tail_scaled(n, n - 1, u)


def _d_low_phi(v, p):
    n, lam, r = p["n"], p["lam"], p["r"]
    u = np.clip((v - r) / v, 0.0, 1.0 - 1e-16)
    du = r / v**2
    return lam * du * log_tail_scaled_deriv(n, n - 1, u)


def _f_spa_part(v, p):
    # offset + lam * (v/(v-a))^{n-1} * int_a^v (t-a)^{n-1}/t^n dt
    n, lam, a = p["n"], p["lam"], p["a"]
    off = p.get("offset", 0.0)
    u = np.clip((v - a) / v, 0.0, 1.0 - 1e-16)
    return off + lam * log_tail_scaled(n, n - 1, u)


def _d_spa_part(v, p):
    return _d_low_phi(v, {"n": p["n"], "lam": p["lam"], "r": p["a"]})


def _g_upper(v, p):
    """g_u on [v*, b] in the moderate regime (phi0 = 0)."""
    n, lam, a, b = p["n"], p["lam"], p["a"], p["b"]
    u = (v - a) / v
    ub = (b - a) / b
    gb = ub**n / n + lam * log_tail(n + 1, ub)
    gv = u**n / n + lam * log_tail(n + 1, u)
    return (ub**n - (gb - gv)) / u**n


def _dg_upper(v, p):
    n, lam, a, b = p["n"], p["lam"], p["a"], p["b"]
    u = (v - a) / v
    du = a / v**2
    ub = (b - a) / b
    gb = ub**n / n + lam * log_tail(n + 1, ub)
    gv = u**n / n + lam * log_tail(n + 1, u)
    core = ub**n - (gb - gv)
    dcore = (u ** (n - 1) + lam * log_tail_deriv(n + 1, u)) * du
    return (dcore - core * n * du / u) / u**n


def _f_pool_part(v, p):
    # unified-threshold CDF on [v*, b]: -1/(n-1) + n/(n-1) g_u(v)
    n = p["n"]
    return (-1.0 + n * _g_upper(v, p)) / (n - 1)


def _d_pool_part(v, p):
    n = p["n"]
    return n * _dg_upper(v, p) / (n - 1)


def _f_high_psi(v, p):
    # POOL threshold CDF: n lam/(n-1) ((v-phi0)/(v-a))^n int_a^v (t-a)^n/(t-phi0)^{n+1}
    n, lam, a, phi0 = p["n"], p["lam"], p["a"], p["phi0"]
    u = np.clip((v - a) / (v - phi0), 0.0, 1.0 - 1e-16)
    return n * lam / (n - 1) * log_tail_scaled(n + 1, n, u)


def _d_high_psi(v, p):
    n, lam, a, phi0 = p["n"], p["lam"], p["a"], p["phi0"]
    u = np.clip((v - a) / (v - phi0), 0.0, 1.0 - 1e-16)
    du = (a - phi0) / (v - phi0) ** 2
    return n * lam / (n - 1) * du * log_tail_scaled_deriv(n + 1, n, u)


def _f_spa_rand_phi(v, p):
    # lam u^{-(n-1)} (d + log_tail-form), u = 1 - c/v  (Theorem on SPA-rand)
    n, lam, c, d = p["n"], p["lam"], p["c"], p["d"]
    u = np.clip(1.0 - c / v, 1e-300, 1 - 1e-16)
    return lam * u ** (1 - n) * (d + log_tail(n, u))


def _d_spa_rand_phi(v, p):
    n, lam, c, d = p["n"], p["lam"], p["c"], p["d"]
    u = np.clip(1.0 - c / v, 1e-300, 1 - 1e-16)
    du = c / v**2
    return lam * du * ((1 - n) * u ** (-n) * (d + log_tail(n, u))
                       + u ** (1 - n) * log_tail_deriv(n, u))


def _genspa_raw(v, p):
    n, lam, a, c = p["n"], p["lam"], p["a"], p["c"]
    ua = 1.0 - c / a
    uv = np.clip(1.0 - c / v, 0.0, 1 - 1e-16)
    num = lam * (log_tail(n, uv) - log_tail(n, ua))
    den = uv ** (n - 1) - ua ** (n - 1)
    atom = lam * (a - c) / ((n - 1) * c)
    # quotient is 0/0 at v = a; the window where the naive ratio loses
    # digits is O(1e-9) wide, use the L'Hopital value there
    safe = den > 1e-9 * max(ua ** (n - 1), 1e-6)
    return np.where(safe, np.where(safe, num, 1.0) / np.where(safe, den, 1.0), atom)


def _f_genspa_phi(v, p):
    return _genspa_raw(v, p)


def _d_genspa_phi(v, p):
    # from d/dv[(F^{n-1} - F0^{n-1}) Phi] = lam F^{n-1} / v  with F = 1-c/v
    n, lam, a, c = p["n"], p["lam"], p["a"], p["c"]
    ua = 1.0 - c / a
    uv = np.clip(1.0 - c / v, 0.0, 1 - 1e-16)
    den = uv ** (n - 1) - ua ** (n - 1)
    dden = (n - 1) * uv ** (n - 2) * c / v**2
    phi = _genspa_raw(v, p)
    safe = den > 1e-7 * max(ua ** (n - 1), 1e-6)
    num = lam * uv ** (n - 1) / v - phi * dden
    # slope just right of a, reused inside the unsafe window
    eps = 1e-6 * (p.get("b", 2 * a) - a) + 1e-12 * a
    if np.any(~safe):
        v1, v2 = a + eps, a + 2 * eps
        slope = (_genspa_raw(np.array([v2]), p) - _genspa_raw(np.array([v1]), p))[0] / eps
    else:
        slope = 0.0
    return np.where(safe, num / np.where(safe, den, 1.0), slope)


def _f_grid(v, p):
    return np.interp(v, p["vs"], p["fs"])


def _d_grid(v, p):
    vs, fs = np.asarray(p["vs"]), np.asarray(p["fs"])
    idx = np.clip(np.searchsorted(vs, v, side="right") - 1, 0, len(vs) - 2)
    return (fs[idx + 1] - fs[idx]) / (vs[idx + 1] - vs[idx])


_FORMS = {
    "flat": (_f_flat, _d_flat),
    "iso_revenue": (_f_iso, _d_iso),
    "const_virtual": (_f_const_virtual, _d_const_virtual),
    "low_phi": (_f_low_phi, _d_low_phi),
    "spa_part": (_f_spa_part, _d_spa_part),
    "pool_part": (_f_pool_part, _d_pool_part),
    "high_psi": (_f_high_psi, _d_high_psi),
    "spa_rand_phi": (_f_spa_rand_phi, _d_spa_rand_phi),
    "genspa_phi": (_f_genspa_phi, _d_genspa_phi),
    "grid": (_f_grid, _d_grid),
}


@dataclass(frozen=True)
class Atom:
    loc: float
    mass: float


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    form: str
    params: dict = field(default_factory=dict)

    def value(self, v):
        return _FORMS[self.form][0](np.asarray(v, dtype=float), self.params)

    def density(self, v):
        return _FORMS[self.form][1](np.asarray(v, dtype=float), self.params)


class PiecewiseCdf:
    """Right-continuous CDF on [a, b] made of atoms plus closed-form segments.

    Segments carry absolute CDF values and must tile [a, b] (gaps are not
    allowed; encode flat stretches with the ``flat`` form).  ``total_mass``
    is 1 for probability distributions; mixture components may use less.
    """

    def __init__(self, support, atoms, segments, total_mass=1.0, validate=True):
        self.support = (float(support[0]), float(support[1]))
        self.atoms = sorted((Atom(float(l), float(m)) for l, m in
                             ((at.loc, at.mass) if isinstance(at, Atom) else at
                              for at in atoms)), key=lambda at: at.loc)
        self.segments = list(segments)
        self.total_mass = float(total_mass)
        self._inverse_table = None
        if validate:
            self._validate()

    def _validate(self):
        a, b = self.support
        if not self.segments:
            raise DomainError("a CDF needs at least one segment")
        lo = self.segments[0].lo
        if abs(lo - a) > 1e-12 * max(1, abs(a)):
            raise DomainError("segments must start at the lower support bound")
        for s, t in zip(self.segments[:-1], self.segments[1:]):
            if abs(s.hi - t.lo) > 1e-12 * max(1.0, abs(s.hi)):
                raise DomainError(f"segment gap between {s.hi} and {t.lo}")
        if abs(self.segments[-1].hi - b) > 1e-12 * max(1, abs(b)):
            raise DomainError("segments must end at the upper support bound")
        for at in self.atoms:
            if at.mass < -1e-15:
                raise DomainError("atom masses must be nonnegative")
            if not (a <= at.loc <= b):
                raise DomainError("atom outside the support")
        if sum(at.mass for at in self.atoms) > self.total_mass + 1e-9:
            raise DomainError("atom masses exceed total mass")
        # raw segment values (the public eval clips floating fuzz away,
        # which must not mask genuine invariant violations)
        raws = []
        for seg in self.segments:
            if seg.hi > seg.lo:
                raws.append(np.asarray(seg.value(np.linspace(seg.lo, seg.hi, 65))))
        vals = np.concatenate(raws)
        if np.any(np.diff(vals) < -1e-9):
            raise DomainError("CDF values must be nondecreasing")
        if np.any(vals < -1e-9) or np.any(vals > self.total_mass + 1e-9):
            raise DomainError("CDF values must stay within [0, total_mass]")
        closing = float(vals[-1]) + self.mass_at(b)
        if abs(closing - self.total_mass) > 1e-8:
            raise DomainError(
                f"CDF must reach total mass {self.total_mass} at b, got {closing}")

    # -- evaluation ---------------------------------------------------------

    def eval(self, v):
        """Right-continuous CDF value; the mass at b closes to total_mass."""
        v_arr = np.atleast_1d(np.asarray(v, dtype=float))
        a, b = self.support
        if np.any(v_arr < a - 1e-12 * max(1, abs(a))) or np.any(v_arr > b * (1 + 1e-12) + 1e-300):
            raise DomainError(f"value outside support [{a}, {b}]")
        out = np.empty_like(v_arr)
        filled = np.zeros(v_arr.shape, dtype=bool)
        for seg in self.segments:
            m = (~filled) & (v_arr >= seg.lo) & (v_arr < seg.hi)
            if np.any(m):
                out[m] = seg.value(v_arr[m])
                filled[m] = True
        at_end = ~filled
        if np.any(at_end):
            out[at_end] = self.total_mass
        mass_b = self.mass_at(b)
        if mass_b:
            exact_b = np.isclose(v_arr, b, rtol=1e-15, atol=0)
            out[exact_b] = self.total_mass
        out = np.clip(out, 0.0, self.total_mass)
        return out if np.asarray(v).ndim else float(out[0])

    def left_value(self, v):
        """CDF limit from the left, i.e. mass strictly below v."""
        return float(self.eval(v)) - self.mass_at(v)

    def density(self, v):
        v_arr = np.atleast_1d(np.asarray(v, dtype=float))
        out = np.zeros_like(v_arr)
        for seg in self.segments:
            m = (v_arr >= seg.lo) & (v_arr < seg.hi)
            if np.any(m):
                out[m] = seg.density(v_arr[m])
        # the top endpoint carries the last segment's left-limit density
        top = v_arr == self.segments[-1].hi
        if np.any(top):
            out[top] = self.segments[-1].density(v_arr[top])
        return out if np.asarray(v).ndim else float(out[0])

    def mass_at(self, loc) -> float:
        return sum(at.mass for at in self.atoms if at.loc == loc)

    @property
    def interior_atoms(self):
        a, b = self.support
        return [at for at in self.atoms if a < at.loc < b and at.mass > 0]

    def breakpoints(self):
        pts = {self.support[0], self.support[1]}
        pts.update(s.lo for s in self.segments)
        pts.update(s.hi for s in self.segments)
        pts.update(at.loc for at in self.atoms)
        return sorted(pts)

    # -- sampling -----------------------------------------------------------

    def _build_inverse(self, nodes_per_segment=2049):
        xs, us = [], []
        a, b = self.support
        atom_a = self.mass_at(a)
        if atom_a > 0:
            xs += [a, a]
            us += [0.0, atom_a]
        for seg in self.segments:
            grid = np.linspace(seg.lo, seg.hi, nodes_per_segment)
            vals = np.clip(seg.value(grid), 0.0, self.total_mass)
            vals = np.maximum.accumulate(vals)
            xs.extend(grid.tolist())
            us.extend(vals.tolist())
        mass_b = self.mass_at(b)
        xs += [b, b]
        us += [self.total_mass - mass_b, self.total_mass]
        us = np.maximum.accumulate(np.asarray(us))
        return np.asarray(xs), us

    def sample(self, seed, count):
        """Inverse-transform sampling, reproducible for a fixed seed."""
        if count < 1:
            raise DomainError("count must be >= 1")
        if self._inverse_table is None:
            self._inverse_table = self._build_inverse()
        xs, us = self._inverse_table
        rng = np.random.default_rng(seed)
        u = rng.random(count) * self.total_mass
        draws = np.interp(u, us, xs)
        # snap endpoint atoms exactly (ties at a and b are semantically loaded)
        a, b = self.support
        atom_a = self.mass_at(a)
        if atom_a > 0:
            draws[u <= atom_a] = a
        mass_b = self.mass_at(b)
        if mass_b > 0:
            draws[u >= self.total_mass - mass_b] = b
        return draws

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "support": list(self.support),
            "total_mass": self.total_mass,
            "atoms": [[at.loc, at.mass] for at in self.atoms],
            "segments": [
                {"lo": s.lo, "hi": s.hi, "form": s.form,
                 "params": {k: (v if not isinstance(v, np.ndarray) else v.tolist())
                            for k, v in s.params.items()}}
                for s in self.segments
            ],
        }

    @classmethod
    def from_json(cls, d: dict) -> "PiecewiseCdf":
        return cls(
            support=tuple(d["support"]),
            atoms=[tuple(at) for at in d["atoms"]],
            segments=[Segment(s["lo"], s["hi"], s["form"], s["params"])
                      for s in d["segments"]],
            total_mass=d.get("total_mass", 1.0),
        )

    def __repr__(self):
        forms = "+".join(s.form for s in self.segments)
        return (f"PiecewiseCdf([{self.support[0]:g},{self.support[1]:g}], "
                f"{len(self.atoms)} atoms, {forms})")


def cdf_eval(F: PiecewiseCdf, v):
    """Right-continuous CDF value at v (vectorized)."""
    return F.eval(v)


def cdf_sample(F: PiecewiseCdf, seed, count):
    """i.i.d. samples from F by inverse transform."""
    return F.sample(seed, count)


# ---------------------------------------------------------------------------
# mechanisms in (g_u, g_d) form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurvePiece:
    """One smooth stretch of an allocation curve: value and derivative."""

    lo: float
    hi: float
    fn: object
    dfn: object


class GuGdMechanism:
    """Allocation curves: g_u(v_max) to the highest bidder, g_d(v_max) to
    each other bidder.  Curves are piecewise smooth; jump locations are
    explicit so payment integrals split exactly.

    A point exactly at a piece boundary evaluates on the right piece
    (right-continuity, matching the >= convention of reserve thresholds).
    """

    def __init__(self, inst, gu_pieces, gd_pieces, v_star, alpha, form, params,
                 jumps=(), validate=True):
        self.inst = inst
        self.gu_pieces = list(gu_pieces)
        self.gd_pieces = list(gd_pieces)
        self.v_star = float(v_star)
        self.alpha = float(alpha)
        self.form = form
        self.params = dict(params)
        self.jumps = sorted(jumps)
        if validate:
            self._validate()

    @staticmethod
    def _eval_pieces(pieces, v, deriv=False):
        v_arr = np.atleast_1d(np.asarray(v, dtype=float))
        out = np.zeros_like(v_arr)
        filled = np.zeros(v_arr.shape, dtype=bool)
        for pc in pieces:
            m = (~filled) & (v_arr >= pc.lo) & (v_arr < pc.hi)
            if np.any(m):
                out[m] = (pc.dfn if deriv else pc.fn)(v_arr[m])
                filled[m] = True
        if np.any(~filled):  # points at/above the last piece's hi
            last = pieces[-1]
            out[~filled] = (last.dfn if deriv else last.fn)(v_arr[~filled])
        return out if np.asarray(v).ndim else float(out[0])

    def gu(self, v):
        return self._eval_pieces(self.gu_pieces, v)

    def gd(self, v):
        return self._eval_pieces(self.gd_pieces, v)

    def gu_prime(self, v):
        return self._eval_pieces(self.gu_pieces, v, deriv=True)

    def gd_prime(self, v):
        return self._eval_pieces(self.gd_pieces, v, deriv=True)

    @property
    def is_continuous(self) -> bool:
        return not self.jumps

    def breakpoints(self):
        pts = {self.inst.a, self.inst.b, self.v_star}
        for pc in self.gu_pieces + self.gd_pieces:
            pts.update((pc.lo, pc.hi))
        pts.update(self.jumps)
        return sorted(p for p in pts if self.inst.a <= p <= self.inst.b)

    def gu_integral(self, x, y, cfg=None):
        """int_x^y g_u(t) dt, split exactly at piece boundaries and jumps."""
        from .numerics import DEFAULT_TOL, integrate

        cfg = cfg or DEFAULT_TOL
        if y < x:
            return -self.gu_integral(y, x, cfg)
        pts = [x] + [p for p in self.breakpoints() if x < p < y] + [y]
        return sum(integrate(self.gu, lo, hi, cfg)
                   for lo, hi in zip(pts[:-1], pts[1:]) if hi > lo)

    def _validate(self):
        inst = self.inst
        grid = np.linspace(inst.a, inst.b, 2001)
        gu = self.gu(grid)
        gd = self.gd(grid)
        if np.any(np.diff(gu) < -1e-10):
            raise DomainError("g_u must be nondecreasing")
        if np.any(gu < -1e-12) or np.any(gu > 1 + 1e-12):
            raise DomainError("g_u must map into [0, 1]")
        if np.any(gu + (inst.n - 1) * gd > 1 + 1e-9):
            raise DomainError("allocation exceeds one item: g_u + (n-1) g_d > 1")
        if inst.n >= 2:
            below = grid <= self.v_star
            if np.any(np.abs(gd[below] - self.alpha) > 1e-9):
                raise DomainError("g_d must equal alpha below v_star")
            above = grid >= self.v_star
            if np.any(np.abs(gu[above] + (inst.n - 1) * gd[above] - 1) > 1e-9):
                raise DomainError("total allocation must be one above v_star")

    def to_json(self) -> dict:
        return {"v_star": self.v_star, "alpha": self.alpha,
                "form": self.form, "params": self.params}

    def __repr__(self):
        return (f"GuGdMechanism({self.form}, v*={self.v_star:.6g}, "
                f"alpha={self.alpha:.6g})")


@dataclass
class SaddleSolution:
    """Optimal mechanism + worst case + value for one (class, instance)."""

    instance: ProblemInstance
    mech_class: MechanismClass
    regime: str                      # LOW | MODERATE | HIGH
    mechanism: object                # GuGdMechanism, or PiecewiseCdf for STD
    worst_case: PiecewiseCdf | None
    value: float
    constants: dict
    threshold_cdf: PiecewiseCdf | None = None   # distribution of thresholds/reserves

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise DomainError("minimax value must be finite")
        if self.value > self.instance.lam * self.instance.b + 1e-9:
            raise DomainError("minimax value cannot exceed lambda * b")

    def to_json(self) -> dict:
        if isinstance(self.mechanism, GuGdMechanism):
            mech = self.mechanism.to_json()
        elif isinstance(self.mechanism, PiecewiseCdf):
            mech = {"form": "genspa", "reserve_cdf": self.mechanism.to_json()}
        else:
            mech = self.mechanism
        return {
            "instance": self.instance.to_json(),
            "class": self.mech_class.value,
            "regime": self.regime,
            "value": self.value,
            "constants": {k: v for k, v in self.constants.items() if v is not None},
            "mechanism": mech,
            "worst_case": self.worst_case.to_json() if self.worst_case else None,
            "threshold_cdf": self.threshold_cdf.to_json() if self.threshold_cdf else None,
        }

    def to_json_str(self, **kw) -> str:
        return json.dumps(self.to_json(), **kw)


@dataclass(frozen=True)
class AuctionOutcome:
    """Per-bidder allocation probabilities and expected payments."""

    allocations: tuple
    payments: tuple

    def __post_init__(self):
        if len(self.allocations) != len(self.payments):
            raise DomainError("allocation/payment length mismatch")
        if any(x < -1e-12 for x in self.allocations):
            raise DomainError("allocations must be nonnegative")
        if sum(self.allocations) > 1 + 1e-9:
            raise DomainError("allocations must sum to at most one")

    @property
    def revenue(self) -> float:
        return float(sum(self.payments))

    def to_json(self) -> dict:
        return {"allocations": list(self.allocations),
                "payments": list(self.payments)}
