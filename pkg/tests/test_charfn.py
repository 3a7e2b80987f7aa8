import math
from collections import Counter
from fractions import Fraction

import pytest

from padicprob.charfn import (
    CompoundPoissonSampler,
    HaarBallSampler,
    PointMassSampler,
    RadialCharFn,
    RadialSampler,
    StableParams,
    ball_probability,
    empirical_cf,
    poisson_draw,
    sphere_masses,
    stable_cf,
    stable_sampler,
    substream,
)
from padicprob.errors import PrecisionError
from padicprob.levy import make_example_measure
from padicprob.padic import PAdicNumber, from_rational
from padicprob.sets import Ball

# frozen independent oracle: sum_{j<=0} 2**(j-1) exp(-2**j), j down to -60
Z2_STABLE_MASS = 0.5480427915295704

# chi-square 1% critical values by degrees of freedom
CHI2_99 = {1: 6.635, 2: 9.210, 3: 11.345, 4: 13.277}


def test_stable_cf_basics():
    params = StableParams(1.0, 1.0, 2)
    assert stable_cf(params, PAdicNumber.zero(2)) == 1.0
    t = from_rational(1, 2, p=2)  # |t| = 2
    assert abs(stable_cf(params, t) - math.exp(-2.0)) < 1e-15
    # scaling: g(p t) = g(t)**(p**-alpha)
    for num, den in ((1, 2), (3, 4), (5, 1)):
        t = from_rational(num, den, p=2)
        lhs = stable_cf(params, t.mul_rational(2))
        rhs = stable_cf(params, t) ** 0.5
        assert abs(lhs - rhs) < 1e-14


def test_ball_probability_point_mass_at_zero():
    g = RadialCharFn.one(5)
    res = ball_probability(g, Ball(5, 0, 0))
    assert res.value == 1.0 and res.exact == 1
    off = ball_probability(g, Ball(5, 1, -1))
    assert off.value == 0.0 and off.exact == 0


def test_ball_probability_haar_exact():
    g = RadialCharFn.indicator(3, 0)  # uniform on the unit ball
    assert ball_probability(g, Ball(3, 0, 0)).exact == 1
    assert ball_probability(g, Ball(3, 0, -2)).exact == Fraction(1, 9)
    assert ball_probability(g, Ball(3, 1, -1)).exact == Fraction(1, 3)
    assert ball_probability(g, Ball(3, Fraction(1, 3), -1)).exact == 0


def test_ball_probability_stable_frozen_reference():
    g = RadialCharFn.stable(StableParams(1.0, 1.0, 2))
    res = ball_probability(g, Ball(2, 0, 0), tol=1e-12)
    assert abs(res.value - Z2_STABLE_MASS) <= 1e-10
    assert res.error_bound <= 1e-12


def test_ball_probability_monotone_in_radius():
    g = RadialCharFn.stable(StableParams(0.7, 1.3, 3))
    vals = [ball_probability(g, Ball(3, 0, n)).value for n in range(-3, 4)]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))


def test_sphere_masses_haar():
    g = RadialCharFn.indicator(2, 0)
    table = sphere_masses(g, -4, 4)
    for n, mass in table.masses:
        want = float((1 - Fraction(1, 2)) * Fraction(2) ** n) if n <= 0 else 0.0
        assert mass == pytest.approx(want, abs=1e-15)
    assert table.total() == pytest.approx(1.0, abs=1e-12)


def test_sphere_masses_point_mass():
    table = sphere_masses(RadialCharFn.one(3), -5, 5)
    assert all(m == 0 for _, m in table.masses)
    assert table.mass_at_zero == 1.0


def test_sphere_masses_stable_normalised():
    g = RadialCharFn.stable(StableParams(1.0, 1.0, 2))
    table = sphere_masses(g, -40, 40)
    assert abs(table.total() - 1.0) <= 1e-12


def test_point_mass_sampler():
    xi = from_rational(7, 3, p=5)
    s = PointMassSampler(xi=xi)
    rng = substream(1, 0)
    assert all(x == xi for x in s.sample(rng, 10))


def test_haar_sampler_frequency():
    s = HaarBallSampler(ball=Ball(2, 0, 0), resolution=-10)
    rng = substream(2, 0)
    n = 4000
    draws = s.sample(rng, n)
    target = Ball(2, 1, -1)  # 1 + 2 Z_2, probability 1/2
    freq = sum(1 for x in draws if target.contains(x)) / n
    assert abs(freq - 0.5) <= 4 * math.sqrt(0.25 / n)


def test_radial_sampler_matches_ball_probability():
    params = StableParams(1.0, 1.0, 2)
    s = stable_sampler(params, resolution=-8)
    rng = substream(3, 0)
    n = 4000
    draws = s.sample(rng, n)
    q = ball_probability(RadialCharFn.stable(params), Ball(2, 0, 0)).value
    freq = sum(1 for x in draws if Ball(2, 0, 0).contains(x)) / n
    assert abs(freq - q) <= 4 * math.sqrt(q * (1 - q) / n)


def test_radial_sampler_first_digit_uniform():
    params = StableParams(1.0, 1.0, 5)
    s = stable_sampler(params, resolution=-6)
    rng = substream(4, 0)
    counts = Counter()
    n = 3000
    for x in s.sample(rng, n):
        if not x.is_zero:
            counts[x.digits[0]] += 1
    total = sum(counts.values())
    expected = total / 4
    chi2 = sum((counts.get(d, 0) - expected) ** 2 / expected for d in (1, 2, 3, 4))
    assert chi2 <= CHI2_99[3]


def test_compound_poisson_zero_jump_draw_is_resolved_zero():
    m = make_example_measure(1, 1, 2)
    s = CompoundPoissonSampler(measure=m, resolution=-4)
    rng = substream(5, 0)
    draws = s.sample(rng, 50)
    for x in draws:
        assert x.known_mod_exp >= 4
    assert any(x.is_zero for x in draws)  # rate 32/3: zero draws are rare but the window marking must hold on all


def test_compound_poisson_ball_fidelity_small():
    m = make_example_measure(1, 1, 2)
    s = CompoundPoissonSampler(measure=m, resolution=-4)
    rng = substream(6, 0)
    n = 3000
    draws = s.sample(rng, n)
    g = RadialCharFn.stable(StableParams(1.0, 1.0, 2))
    for ball in (Ball(2, 0, 0), Ball(2, 0, 2), Ball(2, 1, -1)):
        q = ball_probability(g, ball).value
        freq = sum(1 for x in draws if ball.contains(x)) / n
        assert abs(freq - q) <= 4 * math.sqrt(q * (1 - q) / n)


def test_compound_poisson_resolution_scale_balls_on_high_spheres():
    # regression: rescaled jumps on spheres above the fundamental ones
    # must carry uniform digits all the way down to the resolution scale
    m = make_example_measure(1, 1, 2)
    s = CompoundPoissonSampler(measure=m, resolution=-1)
    rng = substream(5150, 0)
    n = 20000
    draws = s.sample(rng, n)
    g = RadialCharFn.stable(StableParams(1.0, 1.0, 2))
    for center in (Fraction(1, 4), Fraction(3, 4), Fraction(5, 4), Fraction(7, 4)):
        ball = Ball(2, center, -1)  # radius = resolution, inside |x| = 4
        q = ball_probability(g, ball).value
        freq = sum(1 for x in draws if ball.contains(x)) / n
        assert abs(freq - q) <= 4 * math.sqrt(q * (1 - q) / n)


def test_compound_poisson_empirical_cf_agreement():
    # the sampled law must reproduce the measure's transform at every t
    # the resolution supports
    from padicprob.levy import cf_from_levy

    m = make_example_measure(1, 1, 2)
    s = CompoundPoissonSampler(measure=m, resolution=-4)
    n = 3000
    draws = s.sample(substream(31, 0), n)
    band = 4.0 / math.sqrt(n)
    for k in range(-3, 5):
        t = from_rational(Fraction(2) ** (-k), p=2)
        assert abs(empirical_cf(draws, t) - cf_from_levy(m, t)) <= band


def test_compound_poisson_nonradial_measure_cf_agreement():
    # arbitrary (non-radial, two fundamental spheres, rotated) measure:
    # the sampled law still matches the exact transform on the grid
    from fractions import Fraction as F

    from padicprob.levy import cf_from_levy, make_measure
    from padicprob.padic import grid_points
    from padicprob.sets import split_sphere

    p = 2
    s0 = split_sphere(0, 2, p)
    s1 = split_sphere(1, 1, p)
    m = make_measure(
        p,
        F(1, 3),
        F(12),  # gamma0 = 3 * 2**2: unit rotation exercised
        (((s0[0], F(1, 2)),), ((s1[0], F(3, 4)),)),
    )
    assert not m.is_radial()
    cp = CompoundPoissonSampler(measure=m, resolution=-3)
    n = 2500
    draws = cp.sample(substream(778, 2), n)
    band = 4.0 / math.sqrt(n)
    for t in grid_points(p, -2, 3, unit_digit_sets=((1,), (1, 1)), precision=160):
        assert abs(empirical_cf(draws, t) - cf_from_levy(m, t)) <= band


def test_empirical_cf_point_mass_exact():
    xi = from_rational(1, 3, p=3)
    samples = [xi] * 17
    t = from_rational(1, p=3)
    got = empirical_cf(samples, t)
    want = (t * xi).character_phase().to_complex()
    assert got == want


def test_empirical_cf_zero_t():
    samples = [from_rational(k + 1, p=2) for k in range(5)]
    assert empirical_cf(samples, PAdicNumber.zero(2)) == 1.0


def test_empirical_cf_haar_local_constancy():
    s = HaarBallSampler(ball=Ball(3, 0, 0), resolution=-8)
    rng = substream(7, 0)
    samples = s.sample(rng, 200)
    t = from_rational(1, p=3)  # |t| = 1: every character value is exactly 1
    assert empirical_cf(samples, t) == 1.0


def test_empirical_cf_resolution_guard():
    s = HaarBallSampler(ball=Ball(2, 0, 0), resolution=-2)
    rng = substream(8, 0)
    samples = s.sample(rng, 5)
    t = from_rational(1, 16, p=2)  # |t| = 16 exceeds the resolution
    with pytest.raises(PrecisionError):
        empirical_cf(samples, t)


def test_empirical_cf_symmetric_imaginary_part_shrinks():
    params = StableParams(1.0, 1.0, 2)
    s = stable_sampler(params, resolution=-8)
    t = from_rational(1, 4, p=2)
    sizes = (200, 3200)
    ims = []
    for i, n in enumerate(sizes):
        draws = s.sample(substream(9, i), n)
        ims.append(abs(empirical_cf(draws, t).imag))
    assert ims[1] <= max(ims[0], 0.02) * 1.5  # O(1/sqrt(n)) shrinkage, loose


def test_poisson_inversion_moments():
    rng = substream(10, 0)
    mean = 3.5
    n = 20000
    draws = [poisson_draw(rng, mean) for _ in range(n)]
    avg = sum(draws) / n
    var = sum((d - avg) ** 2 for d in draws) / n
    assert abs(avg - mean) <= 4 * math.sqrt(mean / n)
    assert abs(var - mean) <= 0.2
    assert poisson_draw(rng, 0.0) == 0


def test_poisson_rejection_moments():
    rng = substream(11, 0)
    mean = 80.0
    n = 8000
    draws = [poisson_draw(rng, mean) for _ in range(n)]
    avg = sum(draws) / n
    assert abs(avg - mean) <= 4 * math.sqrt(mean / n)


def test_substream_independence_and_reproducibility():
    a1 = substream(42, 1).random(4).tolist()
    a2 = substream(42, 1).random(4).tolist()
    b = substream(42, 2).random(4).tolist()
    assert a1 == a2
    assert a1 != b


def test_radial_sampler_rejects_shallow_table():
    g = RadialCharFn.stable(StableParams(1.0, 1.0, 2))
    table = sphere_masses(g, -2, 10)
    with pytest.raises(ValueError):
        RadialSampler(table=table, resolution=-8)
