import math

import numpy as np
import pytest

from robust_auctions.domain import (
    DomainError,
    PiecewiseCdf,
    ProblemInstance,
    Segment,
)
from robust_auctions.mechanisms import (
    InconsistentMixtureError,
    allocate_and_pay,
    genspa_allocate_and_pay,
    gugd_to_mixture,
    mixture_to_gugd,
    pool_fixed,
    spa_fixed,
)
from robust_auctions.saddle import optimal_all

INST2 = ProblemInstance(a=0.2, b=1.0, n=2, lam=1.0)


class TestSpaFixed:
    def test_no_reserve(self):
        m = spa_fixed(INST2.a, INST2)
        grid = np.linspace(INST2.a, INST2.b, 50)
        assert np.all(m.gu(grid) == 1.0)
        assert np.all(m.gd(grid) == 0.0)

    def test_reserve_at_b(self):
        m = spa_fixed(1.0, INST2)
        assert m.gu(0.999) == 0.0
        assert m.gu(1.0) == 1.0

    def test_step_at_reserve(self):
        r = 0.6
        m = spa_fixed(r, INST2)
        assert m.gu(r - 1e-9) == 0.0
        assert m.gu(r) == 1.0

    def test_reserve_outside_support(self):
        with pytest.raises(DomainError):
            spa_fixed(1.5, INST2)


class TestPoolFixed:
    def test_threshold_at_a_degenerates_to_spa(self):
        m = pool_fixed(INST2.a, INST2)
        grid = np.linspace(INST2.a, INST2.b, 50)
        assert np.all(m.gu(grid) == 1.0)
        assert np.all(m.gd(grid) == 0.0)

    def test_one_bidder_always_allocates(self):
        inst = ProblemInstance(a=0.2, b=1.0, n=1, lam=1.0)
        m = pool_fixed(0.7, inst)
        assert np.all(m.gu(np.linspace(0.2, 1.0, 20)) == 1.0)

    def test_below_threshold_split(self):
        m = pool_fixed(0.7, INST2)
        assert m.gu(0.5) == pytest.approx(0.5)
        assert m.gd(0.5) == pytest.approx(0.5)
        assert m.gu(0.7) == 1.0
        assert m.gd(0.7) == 0.0


class TestAllocateAndPay:
    def test_pool_both_below_revenue_a(self):
        # Figure-style cell: both valuations below the threshold
        m = pool_fixed(0.7, INST2)
        out = allocate_and_pay(m, [0.4, 0.3], INST2)
        assert out.revenue == pytest.approx(INST2.a)
        assert out.allocations == pytest.approx((0.5, 0.5))

    def test_pool_one_above_revenue(self):
        # winner above tau, loser below: revenue (tau + a) / 2
        tau = 0.7
        m = pool_fixed(tau, INST2)
        out = allocate_and_pay(m, [0.9, 0.4], INST2)
        assert out.revenue == pytest.approx((tau + INST2.a) / 2)

    def test_pool_both_above_second_price(self):
        m = pool_fixed(0.7, INST2)
        out = allocate_and_pay(m, [0.9, 0.8], INST2)
        assert out.revenue == pytest.approx(0.8)

    def test_spa_winner_pays_reserve(self):
        r = 0.6
        m = spa_fixed(r, INST2)
        out = allocate_and_pay(m, [0.9, 0.4], INST2)
        assert out.revenue == pytest.approx(r)
        assert out.allocations == pytest.approx((1.0, 0.0))

    def test_spa_below_reserve_no_sale(self):
        m = spa_fixed(0.6, INST2)
        out = allocate_and_pay(m, [0.5, 0.4], INST2)
        assert out.revenue == 0.0
        assert out.allocations == pytest.approx((0.0, 0.0))

    def test_tie_split(self):
        m = spa_fixed(INST2.a, INST2)
        out = allocate_and_pay(m, [0.8, 0.8], INST2)
        assert out.allocations == pytest.approx((0.5, 0.5))
        assert out.revenue == pytest.approx(0.8)

    def test_outside_support_rejected(self):
        with pytest.raises(DomainError):
            allocate_and_pay(spa_fixed(0.5, INST2), [1.2, 0.4], INST2)


def random_mixture(inst, seed):
    """A simple valid mixture: uniform reserves + uniform pool thresholds."""
    rng = np.random.default_rng(seed)
    alpha = float(rng.uniform(0, 1 / inst.n))
    v_star = float(rng.uniform(inst.a + 0.1 * (inst.b - inst.a),
                               inst.b - 0.1 * (inst.b - inst.a)))
    phi = PiecewiseCdf((inst.a, v_star), [],
                       [Segment(inst.a, v_star, "grid",
                                {"vs": [inst.a, v_star],
                                 "fs": [0.0, 1 - inst.n * alpha]})],
                       total_mass=1 - inst.n * alpha)
    psi = PiecewiseCdf((v_star, inst.b), [],
                       [Segment(v_star, inst.b, "grid",
                                {"vs": [v_star, inst.b],
                                 "fs": [0.0, inst.n * alpha]})],
                       total_mass=inst.n * alpha)
    return phi, psi, alpha, v_star


class TestMixture:
    def test_pure_spa(self):
        phi = PiecewiseCdf((INST2.a, INST2.b), [],
                           [Segment(INST2.a, INST2.b, "grid",
                                    {"vs": [INST2.a, INST2.b], "fs": [0.0, 1.0]})])
        m = mixture_to_gugd(phi, None, 0.0, INST2)
        grid = np.linspace(INST2.a, INST2.b, 33)
        np.testing.assert_allclose(m.gu(grid), phi.eval(grid), atol=1e-12)
        np.testing.assert_allclose(m.gd(grid), 0.0, atol=1e-15)

    def test_pure_pool(self):
        n = INST2.n
        psi = PiecewiseCdf((INST2.a, INST2.b), [],
                           [Segment(INST2.a, INST2.b, "grid",
                                    {"vs": [INST2.a, INST2.b], "fs": [0.0, 1.0]})])
        m = mixture_to_gugd(None, psi, 1.0 / n, INST2)
        grid = np.linspace(INST2.a, INST2.b, 33)
        np.testing.assert_allclose(psi.eval(grid), 1 - n * m.gd(grid), atol=1e-12)
        np.testing.assert_allclose(m.gu(grid) + (n - 1) * m.gd(grid), 1.0, atol=1e-12)

    def test_round_trip(self):
        for seed in range(5):
            phi, psi, alpha, v_star = random_mixture(INST2, seed)
            m = mixture_to_gugd(phi, psi, alpha, INST2)
            grid = np.linspace(INST2.a, INST2.b, 257)
            phi_back, psi_back, alpha_back = gugd_to_mixture(m, grid)
            assert alpha_back == pytest.approx(alpha, abs=1e-12)
            want_phi = np.where(grid <= v_star, phi.eval(np.clip(grid, *phi.support)),
                                phi.total_mass)
            want_psi = np.where(grid >= v_star, psi.eval(np.clip(grid, *psi.support)),
                                0.0)
            np.testing.assert_allclose(phi_back, want_phi, atol=1e-12)
            np.testing.assert_allclose(psi_back, want_psi, atol=1e-12)

    def test_mass_mismatch_rejected(self):
        phi, psi, alpha, _ = random_mixture(INST2, 1)
        with pytest.raises(InconsistentMixtureError):
            mixture_to_gugd(phi, psi, alpha + 0.05, INST2)


class TestGenSpa:
    def phi(self):
        return PiecewiseCdf((INST2.a, INST2.b), [],
                            [Segment(INST2.a, INST2.b, "grid",
                                     {"vs": [INST2.a, INST2.b], "fs": [0.0, 1.0]})])

    def test_all_others_at_a(self):
        # alone above a: allocation one, envelope integral pins payment at a
        out = genspa_allocate_and_pay(self.phi(), [1.0, INST2.a], INST2)
        assert out.allocations[0] == pytest.approx(1.0)
        assert out.payments[0] == pytest.approx(INST2.a)

    def test_matches_spa_off_boundary(self):
        phi = self.phi()
        vals = [0.9, 0.5]
        out = genspa_allocate_and_pay(phi, vals, INST2)
        m = mixture_to_gugd(phi, None, 0.0, INST2)
        base = allocate_and_pay(m, vals, INST2)
        assert out.allocations == pytest.approx(base.allocations, abs=1e-10)
        assert out.payments == pytest.approx(base.payments, abs=1e-10)

    def test_all_at_a_tie(self):
        out = genspa_allocate_and_pay(self.phi(), [INST2.a, INST2.a], INST2)
        assert sum(out.allocations) == pytest.approx(1.0)
        assert out.revenue == pytest.approx(INST2.a)

    def test_n1_rejected(self):
        inst = ProblemInstance(a=0.2, b=1.0, n=1, lam=1.0)
        with pytest.raises(DomainError):
            genspa_allocate_and_pay(self.phi(), [0.5], inst)


class TestIncentives:
    """DSIC and IR spot checks on random mechanisms and valuation profiles."""

    def mechanisms(self):
        inst3 = ProblemInstance(a=0.3, b=1.0, n=3, lam=1.0)
        yield spa_fixed(0.55, INST2), INST2
        yield pool_fixed(0.6, INST2), INST2
        yield pool_fixed(0.5, inst3), inst3
        yield optimal_all(INST2).mechanism, INST2
        yield optimal_all(ProblemInstance(a=0.5, b=1.0, n=2, lam=1.0)).mechanism, \
            ProblemInstance(a=0.5, b=1.0, n=2, lam=1.0)
        phi, psi, alpha, _ = random_mixture(inst3, 3)
        yield mixture_to_gugd(phi, psi, alpha, inst3), inst3

    def test_truthful_reporting_dominates(self):
        rng = np.random.default_rng(0)
        reports = np.linspace(0, 1, 21)
        for mech, inst in self.mechanisms():
            for _ in range(25):
                others = rng.uniform(inst.a, inst.b, inst.n - 1)
                v = float(rng.uniform(inst.a, inst.b))
                honest = allocate_and_pay(mech, np.concatenate([[v], others]), inst)
                u_honest = v * honest.allocations[0] - honest.payments[0]
                for t in inst.a + reports * (inst.b - inst.a):
                    dev = allocate_and_pay(mech, np.concatenate([[t], others]), inst)
                    u_dev = v * dev.allocations[0] - dev.payments[0]
                    assert u_honest >= u_dev - 1e-8 * inst.b

    def test_individual_rationality(self):
        rng = np.random.default_rng(1)
        for mech, inst in self.mechanisms():
            for _ in range(60):
                vals = rng.uniform(inst.a, inst.b, inst.n)
                out = allocate_and_pay(mech, vals, inst)
                for v, x, p in zip(vals, out.allocations, out.payments):
                    assert p <= v * x + 1e-12 * inst.b

    def test_allocation_feasible(self):
        rng = np.random.default_rng(2)
        for mech, inst in self.mechanisms():
            for _ in range(40):
                vals = rng.uniform(inst.a, inst.b, inst.n)
                out = allocate_and_pay(mech, vals, inst)
                assert sum(out.allocations) <= 1 + 1e-9
