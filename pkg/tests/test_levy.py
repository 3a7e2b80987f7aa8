import cmath
import math
from fractions import Fraction

import pytest

from padicprob.charfn import RadialCharFn, StableParams, stable_cf, substream
from padicprob.errors import InfiniteMassError, ToleranceError
from padicprob.levy import (
    CfEvaluator,
    LevyExponent,
    cf_from_levy,
    classify_two_valued,
    invert_exponent,
    levy_exponent,
    levy_exponent_exact,
    make_example_measure,
    make_measure,
    measure_mass,
    random_self_similar_measure,
    validate_scaling,
)
from padicprob.padic import PAdicNumber, from_rational, grid_points
from padicprob.sets import Ball, CompactOpenSet, TailSet, annulus, split_sphere


def test_example_measure_construction():
    m = make_example_measure(1, 1, 2)
    assert m.beta == Fraction(1, 2)
    assert m.gamma0 == 2
    assert m.j == 1
    assert m.sphere_mass(0) == Fraction(2, 3)
    assert m.sphere_mass(1) == Fraction(1, 3)
    assert m.is_symmetric() and m.is_radial()


def test_example_measure_masses():
    m = make_example_measure(1, 1, 2)
    assert measure_mass(m, TailSet(2, 0)) == Fraction(2, 3)
    assert measure_mass(m, annulus(0, 2, 2)) == Fraction(1, 2)
    # half of the fundamental ball carries half its weight
    assert measure_mass(m, Ball(2, 1, -2)) == Fraction(1, 3)
    with pytest.raises(InfiniteMassError):
        measure_mass(m, Ball(2, 0, 0))


def test_measure_validation():
    with pytest.raises(ValueError):
        make_measure(2, Fraction(3, 2), 2, ((),))  # beta out of range
    with pytest.raises(ValueError):
        make_measure(2, Fraction(1, 2), 3, ((),))  # |gamma0| = 1
    with pytest.raises(ValueError):
        # ball not inside its declared fundamental sphere
        make_measure(
            2, Fraction(1, 2), 2, (((Ball(2, Fraction(1, 2), -2), 1),),)
        )


def test_validate_scaling_example_and_empty():
    m = make_example_measure(1, 1, 2)
    assert validate_scaling(m, trials=30, seed=5).passed
    empty = CompactOpenSet(2, [])
    assert measure_mass(m, empty) == 0


def test_levy_exponent_closed_form_values():
    m = make_example_measure(1, 1, 2)
    for num, den, want in ((1, 4, -4.0), (1, 1, -1.0), (4, 1, -0.25)):
        t = from_rational(num, den, p=2)
        val = levy_exponent(m, t)
        assert val == complex(want, 0.0)
    assert levy_exponent(m, PAdicNumber.zero(2)) == 0


def test_levy_exponent_scaling_exact():
    rng = substream(77, 0)
    for i in range(5):
        m = random_self_similar_measure(rng)
        for t in grid_points(m.prime, -3, 3, unit_digit_sets=((1,), (1, 1))):
            lhs = levy_exponent_exact(m, t.mul_rational(m.gamma0))
            rhs = levy_exponent_exact(m, t).scale(m.beta)
            assert lhs == rhs


def test_levy_exponent_symmetric_is_real():
    # residues 1 and 2 mod 3 swap under negation: symmetric data
    balls = split_sphere(0, 1, 3)
    m = make_measure(3, Fraction(1, 3), 3, ((tuple((b, Fraction(2, 5)) for b in balls)),))
    assert m.is_symmetric()
    for t in grid_points(3, -3, 3):
        assert levy_exponent(m, t).imag == 0.0


def test_levy_exponent_brute_force_two_ball():
    # single fundamental sphere, two balls: expand the defining sum by hand.
    # For |t| = 3 the character factor survives only on the unit sphere
    # (|t * 3**-N| <= 3**1 needs N <= 0), so
    #   phi(t) = w1 chi(t c1) + w2 chi(t c2) - sum_{N>=0} beta**N (w1+w2)
    p = 3
    b1, b2 = split_sphere(0, 1, p)
    w1, w2 = Fraction(1, 2), Fraction(1, 4)
    m = make_measure(p, Fraction(1, 3), p, (((b1, w1), (b2, w2)),))
    t = from_rational(1, 3, p=p)

    def chi(fr):
        return cmath.exp(2j * math.pi * float(fr % 1))

    beta = Fraction(1, 3)
    tail = float((w1 + w2) * sum(beta**k for k in range(0, 60)))
    hand = (
        float(w1) * chi(Fraction(1, 3) * b1.center)
        + float(w2) * chi(Fraction(1, 3) * b2.center)
        - tail
    )
    val = complex(levy_exponent(m, t))
    assert abs(val - hand) <= 1e-12


def test_cf_matches_closed_form_grid():
    for p, a, alpha in ((2, 1, 1), (3, 0.5, 2), (5, 2, 0.5)):
        m = make_example_measure(a, alpha, p)
        params = StableParams(float(a), float(alpha), p)
        for k in range(-4, 5):
            t = from_rational(Fraction(p) ** (-k), p=p)
            assert abs(cf_from_levy(m, t) - stable_cf(params, t)) <= 1e-12


def test_cf_basics_and_nonvanishing():
    m = make_example_measure(1, 1, 2)
    assert cf_from_levy(m, PAdicNumber.zero(2)) == 1.0
    for t in grid_points(2, -5, 5):
        g = cf_from_levy(m, t)
        assert abs(g) <= 1.0 + 1e-15
        tau = -t.valuation
        lower = math.exp(-2.0 * float(measure_mass(m, TailSet(2, -tau))))
        assert abs(g) >= lower - 1e-15
        assert abs(g) > 0.0


def test_cf_modulus_scaling_identity():
    m = make_example_measure(1, 1, 2)
    g = CfEvaluator(m)
    for t in grid_points(2, -4, 4):
        lhs = abs(g(t.mul_rational(m.gamma0)))
        rhs = abs(g(t)) ** float(m.beta)
        assert abs(lhs - rhs) <= 1e-14


def test_invert_exponent_annulus_and_tail():
    m = make_example_measure(1, 1, 2)
    phi = LevyExponent(m)
    got = invert_exponent(phi, 0, 2, 2)
    assert abs(got - 0.5) <= 1e-10
    tail = invert_exponent(phi, 0, None, 2, tol=1e-8)
    assert abs(tail - 2.0 / 3.0) <= 1e-8
    assert invert_exponent(lambda t: 0j, 0, 2, 2) == 0.0


def test_invert_exponent_random_round_trip():
    rng = substream(123, 9)
    for _ in range(3):
        m = random_self_similar_measure(rng)
        phi = LevyExponent(m)
        for (i, l) in ((0, 2), (-1, 1)):
            exact = float(measure_mass(m, annulus(i, l, m.prime)))
            got = invert_exponent(phi, i, l, m.prime, tol=1e-12)
            assert abs(got - exact) <= 1e-10 * max(1.0, abs(exact))


def test_invert_exponent_refinement_cap():
    # an evaluator that is not locally constant anywhere
    import random

    noisy = lambda t: complex(random.random())  # noqa: E731
    with pytest.raises(ToleranceError):
        invert_exponent(noisy, 0, 2, 2, refine_cap=3)


def test_classify_cutoff():
    g = RadialCharFn.indicator(2, 0)
    form = classify_two_valued(lambda t: complex(g(t)), 2)
    assert form.kind == "haar_cutoff"
    assert form.cutoff_exp == 0
    assert form.xi.is_zero


def test_classify_pure_character():
    xi = Fraction(1, 3)
    ev = lambda t: t.mul_rational(xi).character_phase().to_complex()  # noqa: E731
    form = classify_two_valued(ev, 3)
    assert form.kind == "delta"
    assert form.xi.as_rational() == xi


def test_classify_stable_not_two_valued():
    g = RadialCharFn.stable(StableParams(1.0, 1.0, 2))
    form = classify_two_valued(lambda t: complex(g(t)), 2)
    assert form.kind == "not_two_valued"


def test_classify_shifted_cutoff():
    # chi(t xi) on |t| <= p, 0 above: uniform law on a shifted ball
    p = 2
    xi = Fraction(1, 2)

    def ev(t):
        if t.is_zero or -t.valuation <= 1:
            return t.mul_rational(xi).character_phase().to_complex()
        return complex(0.0, 0.0)

    form = classify_two_valued(ev, p)
    assert form.kind == "haar_cutoff"
    assert form.cutoff_exp == 1
    assert form.xi.as_rational() == xi


def test_classify_inconsistent_phases_raise():
    # unit-modulus values whose phases fit the snap grid but belong to
    # no single point
    quarter = cmath.exp(2j * math.pi * 0.25)
    with pytest.raises(ValueError):
        classify_two_valued(lambda t: quarter, 2)
    # phases that do not even lie on a p-power grid
    off_grid = cmath.exp(2j * math.pi * 0.137)
    with pytest.raises(ValueError):
        classify_two_valued(lambda t: off_grid, 2)


def test_classify_symmetric_never_offcenter_delta():
    m = make_example_measure(1, 2, 3)
    form = classify_two_valued(CfEvaluator(m), 3, search_radius_exp=3, probe_depth=5)
    assert form.kind == "not_two_valued"


def test_gamma0_with_unit_part():
    # gamma0 = 3 * 2**2: the unit part rotates balls exactly
    p = 2
    balls0 = split_sphere(0, 2, p)
    balls1 = split_sphere(1, 1, p)
    m = make_measure(
        p,
        Fraction(1, 3),
        Fraction(12),
        (
            ((balls0[0], Fraction(1, 2)), (balls0[1], Fraction(1, 5))),
            ((balls1[0], Fraction(2, 3)),),
        ),
    )
    assert m.j == 2
    assert validate_scaling(m, trials=25, seed=1).passed
    exact = float(measure_mass(m, annulus(0, 2, p)))
    got = invert_exponent(LevyExponent(m), 0, 2, p, tol=1e-12)
    assert abs(got - exact) <= 1e-10 * max(1.0, exact)
