import numpy as np
import pytest

from robust_auctions.domain import (
    DomainError,
    MechanismClass,
    PiecewiseCdf,
    ProblemInstance,
    Segment,
    cdf_eval,
    cdf_sample,
)


def iso_cdf(a, b, c, atom_b):
    segs = []
    if c > a:
        segs.append(Segment(a, c, "flat", {"level": 0.0}))
    segs.append(Segment(max(a, c), b, "iso_revenue", {"c": c}))
    return PiecewiseCdf((a, b), [(b, atom_b)], segs)


def two_point(a, b, mass_a):
    return PiecewiseCdf((a, b), [(a, mass_a), (b, 1 - mass_a)],
                        [Segment(a, b, "flat", {"level": mass_a})])


class TestProblemInstance:
    def test_valid(self):
        inst = ProblemInstance(a=0.5, b=1.0, n=2, lam=1.0)
        assert inst.k == 0.5

    @pytest.mark.parametrize("kw", [
        dict(a=1.0, b=0.5, n=2, lam=1.0),
        dict(a=-0.1, b=1.0, n=2, lam=1.0),
        dict(a=0.0, b=1.0, n=0, lam=1.0),
        dict(a=0.0, b=1.0, n=2, lam=0.0),
        dict(a=0.0, b=1.0, n=2, lam=1.5),
    ])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            ProblemInstance(**kw)

    def test_json_round_trip(self):
        inst = ProblemInstance(0.25, 1.0, 3, 0.7)
        assert ProblemInstance.from_json(inst.to_json()) == inst


def test_mechanism_class_parse():
    assert MechanismClass.parse("spa-rand") is MechanismClass.SPA_RAND
    assert MechanismClass.parse("SPA_NO_RESERVE") is MechanismClass.SPA_NO_RESERVE
    with pytest.raises(DomainError):
        MechanismClass.parse("bogus")


class TestCdfEval:
    def test_iso_revenue_near_b(self):
        # worst case of the low regime with r* = 0.2032 b
        F = iso_cdf(0.0, 1.0, 0.2032, 0.2032)
        assert cdf_eval(F, 1.0 - 1e-12) == pytest.approx(1 - 0.2032, abs=1e-9)

    def test_total_mass_at_b(self):
        for F in (iso_cdf(0.0, 1.0, 0.3, 0.3), two_point(0.0, 1.0, 0.5)):
            assert cdf_eval(F, 1.0) == 1.0

    def test_two_point_midpoint(self):
        # n=2, lam=1 two-point worst case has mass 1/2 at each endpoint
        F = two_point(0.0, 1.0, 0.5)
        assert cdf_eval(F, 0.5) == pytest.approx(0.5)

    def test_right_continuity_at_atom(self):
        F = two_point(0.0, 1.0, 0.4)
        assert cdf_eval(F, 0.0) == pytest.approx(0.4)
        assert F.left_value(0.0) == pytest.approx(0.0)

    def test_outside_support(self):
        F = two_point(0.0, 1.0, 0.5)
        with pytest.raises(DomainError):
            cdf_eval(F, 1.5)

    def test_monotone_on_grid(self):
        F = iso_cdf(0.2, 1.0, 0.2, 0.2)
        grid = np.linspace(0.2, 1.0, 10_000)
        vals = F.eval(grid)
        assert np.all(np.diff(vals) >= -1e-12)
        assert np.all((vals >= 0) & (vals <= 1))

    def test_invariant_violation_rejected(self):
        with pytest.raises(DomainError):
            # decreasing "CDF"
            PiecewiseCdf((0.0, 1.0), [], [Segment(0.0, 1.0, "flat", {"level": 2.0})])


class TestCdfSample:
    def test_point_mass_at_b(self):
        F = PiecewiseCdf((0.0, 1.0), [(1.0, 1.0)],
                         [Segment(0.0, 1.0, "flat", {"level": 0.0})])
        assert list(cdf_sample(F, seed=1, count=5)) == [1.0] * 5

    def test_two_point_fractions(self):
        F = two_point(0.0, 1.0, 0.5)
        draws = cdf_sample(F, seed=42, count=200_000)
        assert np.mean(draws == 0.0) == pytest.approx(0.5, abs=5e-3)
        assert np.mean(draws == 1.0) == pytest.approx(0.5, abs=5e-3)

    def test_reproducible(self):
        F = iso_cdf(0.0, 1.0, 0.25, 0.25)
        a = cdf_sample(F, seed=7, count=100)
        b = cdf_sample(F, seed=7, count=100)
        np.testing.assert_array_equal(a, b)

    def test_ks_distance_iso(self):
        # KS with atoms: compare right-continuous ecdf and F on unique values
        F = iso_cdf(0.0, 1.0, 0.2032, 0.2032)
        n = 1_000_000
        draws = np.sort(cdf_sample(F, seed=3, count=n))
        uniq, counts = np.unique(draws, return_counts=True)
        ecdf = np.cumsum(counts) / n
        theo = F.eval(uniq)
        theo_left = theo - np.array([F.mass_at(x) for x in uniq])
        d_plus = np.max(ecdf - theo)
        d_minus = np.max(theo_left - np.concatenate([[0.0], ecdf[:-1]]))
        assert max(d_plus, d_minus) < 0.005


def test_serialization_round_trip():
    F = PiecewiseCdf((0.1, 1.0), [(0.1, 0.3), (1.0, 0.35)],
                     [Segment(0.1, 0.5, "flat", {"level": 0.3}),
                      Segment(0.5, 1.0, "iso_revenue", {"c": 0.35})])
    G = PiecewiseCdf.from_json(F.to_json())
    grid = np.linspace(0.1, 1.0, 101)
    np.testing.assert_allclose(F.eval(grid), G.eval(grid), atol=1e-15)
