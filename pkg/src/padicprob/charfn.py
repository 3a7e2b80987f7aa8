"""Radial characteristic functions, ball probabilities, samplers, and
empirical characteristic functions.

A radial characteristic function depends on t only through |t|_p and is
real-valued (these are the transforms of symmetric laws).  For such a g
the probability of a ball has an explicit sphere series:

    mu(B(0, p**N)) = p**N * sum_{k <= -N} (1 - 1/p) p**k g(p**k)

and for a ball away from the origin with |center| = p**C > p**N,

    mu(B(c, p**N)) = p**N * ( sum_{k <= -C} (1-1/p) p**k g(p**k)
                              - p**-C g(p**(1-C)) ).

Both series carry a certified geometric tail bound, and collapse to
exact rationals whenever g is 0/1-valued (point mass at 0, uniform laws).

Sampling follows a splittable counter-based RNG contract: streams are
keyed by (seed, *indices) so parallel replication is deterministic.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ToleranceError
from .padic import CharacterSum, PAdicNumber, _check_prime, rational_valuation
from .sets import Ball

DEFAULT_RESOLUTION = -12


# ---------------------------------------------------------------------
# RNG plumbing
# ---------------------------------------------------------------------


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based stream keyed by (seed, *key).

    Philox streams have period >= 2**128 and distinct spawn keys give
    statistically independent substreams, so replicates can be drawn in
    parallel and still reproduce bit-identically in any worker layout.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def poisson_draw(rng: np.random.Generator, mean: float) -> int:
    """Poisson sample: exact inversion for mean <= 30, PTRS rejection above."""
    if mean <= 0:
        return 0
    if mean <= 30.0:
        limit = math.exp(-mean)
        k = 0
        prod = rng.random()
        while prod > limit:
            k += 1
            prod *= rng.random()
        return k
    # transformed rejection with squeeze (Hormann's PTRS)
    b = 0.931 + 2.53 * math.sqrt(mean)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    log_mean = math.log(mean)
    while True:
        u = rng.random() - 0.5
        v = rng.random()
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + mean + 0.43)
        if us >= 0.07 and v <= v_r:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        if math.log(v * inv_alpha / (a / (us * us) + b)) <= (
            -mean + k * log_mean - math.lgamma(k + 1.0)
        ):
            return k


# ---------------------------------------------------------------------
# Radial characteristic functions
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class StableParams:
    """Scale/exponent pair of the closed-form law exp(-a |t|^alpha)."""

    a: float
    alpha: float
    prime: int

    def __post_init__(self) -> None:
        _check_prime(self.prime)
        if not (self.a > 0 and self.alpha > 0):
            raise ValueError("need a > 0 and alpha > 0")


def stable_cf(params: StableParams, t: PAdicNumber) -> float:
    """exp(-a * |t|_p**alpha), exact in |t|."""
    if t.is_zero:
        return 1.0
    return math.exp(-params.a * float(t.abs_value()) ** params.alpha)


@lru_cache(maxsize=65536)
def _measure_radial_value(measure, k: int) -> float:
    from .levy import cf_from_levy  # local import; levy does not import us

    t = PAdicNumber.from_rational(
        Fraction(measure.prime) ** (-k), p=measure.prime
    )
    return cf_from_levy(measure, t).real


@dataclass(frozen=True)
class RadialCharFn:
    """Radial evaluation rule k -> g on the sphere |t| = p**k; g(0) = 1.

    Pure data (no closures) so instances serialise and pickle cleanly.
    Kinds: 'one' (point mass at 0), 'indicator' (uniform law cutoff),
    'stable' (closed form), 'measure' (transform of a self-similar jump
    measure with rotation-invariant sphere data).
    """

    prime: int
    kind: str
    a: float | None = None
    alpha: float | None = None
    cutoff_exp: int | None = None
    measure: object | None = None

    @classmethod
    def one(cls, p: int) -> "RadialCharFn":
        return cls(p, "one")

    @classmethod
    def indicator(cls, p: int, cutoff_exp: int) -> "RadialCharFn":
        return cls(p, "indicator", cutoff_exp=cutoff_exp)

    @classmethod
    def stable(cls, params: StableParams) -> "RadialCharFn":
        return cls(params.prime, "stable", a=params.a, alpha=params.alpha)

    @classmethod
    def from_measure(cls, measure) -> "RadialCharFn":
        if not measure.is_radial():
            raise ValueError(
                "sphere data is not rotation-invariant; radial evaluation "
                "would be unsound"
            )
        return cls(measure.prime, "measure", measure=measure)

    def radial(self, k: int) -> float:
        if self.kind == "one":
            return 1.0
        if self.kind == "indicator":
            return 1.0 if k <= self.cutoff_exp else 0.0
        if self.kind == "stable":
            return math.exp(-self.a * float(self.prime) ** (self.alpha * k))
        if self.kind == "measure":
            return _measure_radial_value(self.measure, k)
        raise ValueError(f"unknown kind {self.kind!r}")

    def radial_exact(self, k: int) -> Fraction | None:
        """Exact rational value on the sphere, when one exists."""
        if self.kind == "one":
            return Fraction(1)
        if self.kind == "indicator":
            return Fraction(1 if k <= self.cutoff_exp else 0)
        return None

    def tail_constant(self, k: int) -> Fraction | None:
        """c if g == c on every sphere at or below index k, else None."""
        if self.kind == "one":
            return Fraction(1)
        if self.kind == "indicator" and k <= self.cutoff_exp:
            return Fraction(1)
        return None

    def __call__(self, t: PAdicNumber) -> float:
        if t.is_zero:
            return 1.0
        return self.radial(-t.valuation)


class BallProbability(NamedTuple):
    value: float
    error_bound: float
    exact: Fraction | None


def ball_probability(
    g: RadialCharFn,
    ball: Ball,
    tol: float = 1e-12,
    max_terms: int = 2000,
) -> BallProbability:
    """Probability of a ball under the symmetric law with transform g.

    Returns the truncated sphere series together with its certified tail
    bound; the result is exact (bound 0) when g is 0/1 valued.
    """
    p = g.prime
    if ball.prime != p:
        raise ValueError("ball and transform over different primes")
    n = ball.radius_exp
    if ball.center == 0:
        start = -n
        corr_sphere = None
    else:
        c_exp = ball.sphere_exp
        start = -c_exp
        corr_sphere = 1 - c_exp

    # exact short-circuit for 0/1-valued transforms
    if g.radial_exact(start) is not None:
        total = Fraction(0)
        k = start
        while True:
            c = g.tail_constant(k)
            if c is not None:
                total += c * Fraction(p) ** k
                break
            total += Fraction(p - 1, p) * Fraction(p) ** k * g.radial_exact(k)
            k -= 1
        if corr_sphere is not None:
            total -= Fraction(p) ** start * g.radial_exact(corr_sphere)
        exact = Fraction(p) ** n * total
        return BallProbability(float(exact), 0.0, exact)

    acc = 0.0
    k = start
    terms = 0
    frac = (p - 1) / p
    while True:
        acc += frac * float(p) ** k * g.radial(k)
        bound = float(p) ** (n + k - 1)
        if bound <= tol:
            break
        k -= 1
        terms += 1
        if terms > max_terms:
            raise ToleranceError(
                f"ball probability did not reach tol={tol} in {max_terms} terms"
            )
    if corr_sphere is not None:
        acc -= float(p) ** start * g.radial(corr_sphere)
    return BallProbability(float(p) ** n * acc, bound, None)


@dataclass(frozen=True)
class SphereMassTable:
    """Sphere masses mu({|x| = p**N}) for N in [n_lo, n_hi].

    The mass below p**n_lo is folded into ``mass_at_zero`` (it contains
    any atom at 0 plus the unresolved small spheres) and the mass above
    p**n_hi is reported as ``tail_above``; the sampler folds that tail
    onto the top index.  ``clamped`` lists sphere indices whose tiny
    negative float mass was clamped to zero.
    """

    prime: int
    n_lo: int
    n_hi: int
    masses: tuple[tuple[int, float], ...]
    mass_at_zero: float
    tail_above: float
    error_bound: float
    clamped: tuple[int, ...] = ()

    def mass(self, n: int) -> float:
        for k, v in self.masses:
            if k == n:
                return v
        return 0.0

    def total(self) -> float:
        return self.mass_at_zero + sum(v for _, v in self.masses) + self.tail_above


def sphere_masses(
    g: RadialCharFn, n_lo: int, n_hi: int, tol: float = 1e-12
) -> SphereMassTable:
    """Sphere masses as differences of ball probabilities."""
    if n_lo > n_hi:
        raise ValueError("need n_lo <= n_hi")
    p = g.prime
    probs: dict[int, BallProbability] = {}
    for n in range(n_lo - 1, n_hi + 1):
        probs[n] = ball_probability(g, Ball(p, 0, n), tol=tol)
    masses = []
    clamped = []
    bound = 2.0 * max(pr.error_bound for pr in probs.values())
    for n in range(n_lo, n_hi + 1):
        m = probs[n].value - probs[n - 1].value
        if m < 0:
            if m < -(tol + bound):
                raise ToleranceError(
                    f"sphere mass at {n} is {m}, below -tol; transform is "
                    "not a valid radial characteristic function at this tol"
                )
            m = 0.0
            clamped.append(n)
        masses.append((n, m))
    return SphereMassTable(
        prime=p,
        n_lo=n_lo,
        n_hi=n_hi,
        masses=tuple(masses),
        mass_at_zero=probs[n_lo - 1].value,
        tail_above=max(0.0, 1.0 - probs[n_hi].value),
        error_bound=bound,
        clamped=tuple(clamped),
    )


# ---------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------


def _rational_at_resolution(
    value: Fraction, p: int, resolution: int
) -> PAdicNumber:
    """Exact rational draw reduced to the sampler's resolution window."""
    if value == 0:
        return PAdicNumber.zero(p, -resolution)
    v = rational_valuation(value, p)
    if v >= -resolution:
        return PAdicNumber.zero(p, -resolution)
    return PAdicNumber.from_rational(value, p=p, precision=-resolution - v)


def _uniform_digits_int(rng: np.random.Generator, p: int, count: int) -> int:
    if count <= 0:
        return 0
    digs = rng.integers(0, p, size=count)
    u = 0
    for d in reversed(digs):
        u = u * p + int(d)
    return u


class Sampler:
    """Base: immutable descriptor, RNG owned by the caller."""

    prime: int
    resolution: int | None

    def draw(self, rng: np.random.Generator) -> PAdicNumber:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, count: int) -> list[PAdicNumber]:
        return [self.draw(rng) for _ in range(count)]

    def spec(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PointMassSampler(Sampler):
    xi: PAdicNumber

    @property
    def prime(self) -> int:  # type: ignore[override]
        return self.xi.prime

    @property
    def resolution(self) -> int | None:  # type: ignore[override]
        e = self.xi.known_mod_exp
        return None if e == math.inf else -int(e)

    def draw(self, rng: np.random.Generator) -> PAdicNumber:
        return self.xi

    def spec(self) -> dict:
        return {"kind": "point_mass", "xi": str(self.xi)}


@dataclass(frozen=True)
class HaarBallSampler(Sampler):
    """Haar-uniform draws from one ball, resolved to the stated scale."""

    ball: Ball
    resolution: int = DEFAULT_RESOLUTION

    @property
    def prime(self) -> int:  # type: ignore[override]
        return self.ball.prime

    def draw(self, rng: np.random.Generator) -> PAdicNumber:
        p = self.ball.prime
        n = self.ball.radius_exp
        count = n - self.resolution
        u = _uniform_digits_int(rng, p, count)
        value = self.ball.center + Fraction(u) * Fraction(p) ** (-n)
        return _rational_at_resolution(value, p, self.resolution)

    def spec(self) -> dict:
        return {
            "kind": "haar_ball",
            "center": str(self.ball.center),
            "radius_exp": self.ball.radius_exp,
            "resolution": self.resolution,
        }


@dataclass(frozen=True)
class RadialSampler(Sampler):
    """Sphere index by inverse CDF on a mass table, then Haar-uniform
    digits on the sphere (first digit uniform on 1..p-1).

    Sphere-first sampling is sound precisely because the law is radial:
    conditioned on |X| = p**N the law is invariant under unit rotation,
    hence Haar-uniform on the sphere.  The table tails are folded: the
    mass below n_lo draws the zero-at-resolution element, the mass above
    n_hi draws from the top sphere.
    """

    table: SphereMassTable
    resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self) -> None:
        if self.table.n_lo - 1 > self.resolution:
            raise ValueError(
                "mass table must extend to the resolution scale: "
                f"n_lo={self.table.n_lo}, resolution={self.resolution}"
            )
        if not self.table.total() > 0:
            raise ValueError("empty mass table")
        # cumulative bins; index 0 folds to zero, the top bin to n_hi
        edges: list[float] = [self.table.mass_at_zero]
        labels: list[int | None] = [None]
        acc = self.table.mass_at_zero
        for n, m in self.table.masses:
            acc += m
            edges.append(acc)
            labels.append(n)
        edges.append(acc + self.table.tail_above)
        labels.append(self.table.n_hi)
        object.__setattr__(self, "_edges", tuple(edges))
        object.__setattr__(self, "_labels", tuple(labels))

    @property
    def prime(self) -> int:  # type: ignore[override]
        return self.table.prime

    def draw(self, rng: np.random.Generator) -> PAdicNumber:
        import bisect

        p = self.table.prime
        edges = self._edges  # type: ignore[attr-defined]
        labels = self._labels  # type: ignore[attr-defined]
        u = rng.random() * edges[-1]
        idx = min(bisect.bisect_left(edges, u), len(labels) - 1)
        n = labels[idx]
        if n is None or n <= self.resolution:
            return PAdicNumber.zero(p, -self.resolution)
        count = n - self.resolution
        first = int(rng.integers(1, p))
        rest = _uniform_digits_int(rng, p, count - 1)
        unit = first + p * rest
        value = Fraction(unit) * Fraction(p) ** (-n)
        return _rational_at_resolution(value, p, self.resolution)

    def spec(self) -> dict:
        return {
            "kind": "radial_table",
            "n_lo": self.table.n_lo,
            "n_hi": self.table.n_hi,
            "resolution": self.resolution,
        }


def stable_sampler(
    params: StableParams,
    resolution: int = DEFAULT_RESOLUTION,
    n_lo: int = -40,
    n_hi: int = 40,
    tol: float = 1e-12,
) -> RadialSampler:
    table = sphere_masses(
        RadialCharFn.stable(params), min(n_lo, resolution + 1), n_hi, tol=tol
    )
    return RadialSampler(table=table, resolution=resolution)


@dataclass(frozen=True)
class CompoundPoissonSampler(Sampler):
    """Sum of a Poisson number of jumps from a self-similar jump measure,
    truncated at the resolution scale.

    Jumps not exceeding p**resolution are dropped; by the ultrametric
    inequality their sum cannot move the draw across any ball of radius
    >= p**resolution, so the sampled law is exact in distribution on all
    such balls.  The jump rate is the (finite, exact) measure of
    {|y| > p**resolution}; note it grows like beta**(resolution/j), so
    fine resolutions are expensive by construction.
    """

    measure: object
    resolution: int = DEFAULT_RESOLUTION
    max_sphere_span: int = 400

    def __post_init__(self) -> None:
        meas = self.measure
        lam = float(meas.tail_mass(self.resolution))
        # cumulative sphere masses {|y| = p**n}, n = resolution+1, ...
        cums: list[float] = []
        acc = 0.0
        n = self.resolution + 1
        while (acc < lam * (1.0 - 1e-14) or len(cums) < 4) and len(
            cums
        ) < self.max_sphere_span:
            acc += float(meas.sphere_mass(n))
            cums.append(acc)
            n += 1
        fund = []
        for entries in meas.fundamental:
            cw: list[float] = []
            tot = 0.0
            for _, w in entries:
                tot += float(w)
                cw.append(tot)
            fund.append((tuple(cw), tuple(b for b, _ in entries)))
        object.__setattr__(self, "_lam", lam)
        object.__setattr__(self, "_cums", tuple(cums))
        object.__setattr__(self, "_fund", tuple(fund))
        object.__setattr__(self, "_gpow", {})

    @property
    def prime(self) -> int:  # type: ignore[override]
        return self.measure.prime

    def _jump_rate(self) -> float:
        return self._lam  # type: ignore[attr-defined]

    def _gamma_power(self, k: int) -> Fraction:
        cache: dict = self._gpow  # type: ignore[attr-defined]
        g = cache.get(k)
        if g is None:
            g = Fraction(self.measure.gamma0) ** (-k)
            cache[k] = g
        return g

    def _draw_jump(self, rng: np.random.Generator) -> Fraction:
        import bisect

        meas = self.measure
        p = meas.prime
        j = meas.j
        cums = self._cums  # type: ignore[attr-defined]
        target = rng.random() * self._lam  # type: ignore[attr-defined]
        idx = min(bisect.bisect_left(cums, target), len(cums) - 1)
        n = self.resolution + 1 + idx
        r = n % j
        k = (n - r) // j
        cw, balls = self._fund[r]  # type: ignore[attr-defined]
        u2 = rng.random() * cw[-1]
        chosen = balls[min(bisect.bisect_left(cw, u2), len(balls) - 1)]
        # uniform point of the fundamental ball, deep enough that the
        # rescaled jump y = gamma0**-k z is resolved at the sampler
        # resolution: z needs digits modulo p**(k*j - resolution), i.e.
        # radius_exp + k*j - resolution free digits inside the ball
        count = chosen.radius_exp + k * j - self.resolution
        u = _uniform_digits_int(rng, p, count)
        z = chosen.center + Fraction(u) * Fraction(p) ** (-chosen.radius_exp)
        return z * self._gamma_power(k)

    def draw(self, rng: np.random.Generator) -> PAdicNumber:
        p = self.measure.prime
        jumps = poisson_draw(rng, self._lam)  # type: ignore[attr-defined]
        if jumps == 0:
            return PAdicNumber.zero(p, -self.resolution)
        total = Fraction(0)
        for _ in range(jumps):
            total += self._draw_jump(rng)
        # reducing the exact sum at the resolution window is equivalent
        # to adding resolved jumps: dropped small jumps cannot carry
        # across the resolution scale (ultrametric)
        return _rational_at_resolution(total, p, self.resolution)

    def spec(self) -> dict:
        return {
            "kind": "compound_poisson",
            "resolution": self.resolution,
            "rate": self._jump_rate(),
        }


def sample(
    sampler: Sampler, rng: np.random.Generator, count: int
) -> list[PAdicNumber]:
    return sampler.sample(rng, count)


# ---------------------------------------------------------------------
# Empirical characteristic function
# ---------------------------------------------------------------------


def empirical_phase_counts(
    samples: Sequence[PAdicNumber], t: PAdicNumber
) -> Counter:
    """Multiset of character phases chi-arguments of t * x_i.

    Exact bookkeeping: phases are rationals, so the empirical transform
    is a character sum with rational coefficients.
    """
    from .errors import PrecisionError

    counts: Counter = Counter()
    for x in samples:
        try:
            counts[(t * x).character_phase()] += 1
        except PrecisionError as exc:
            # heavy-tailed laws can produce draws so large that the
            # phase at this t needs more digits of t than were supplied
            raise PrecisionError(
                f"sample with |x| = {x.abs_value()} needs more digits of "
                f"t (|t| = {t.abs_value()}, {t.precision} known); widen "
                "the evaluation point's precision or coarsen |t|"
            ) from exc
    return counts


def empirical_cf(samples: Sequence[PAdicNumber], t: PAdicNumber) -> complex:
    """(1/n) sum_i chi(t * x_i); raises PrecisionError when |t| exceeds
    what the sample resolution can support."""
    if not samples:
        raise ValueError("no samples")
    counts = empirical_phase_counts(samples, t)
    n = len(samples)
    cs = CharacterSum(
        t.prime, {ph: Fraction(c, n) for ph, c in counts.items()}
    )
    return cs.to_complex()


def frequency(samples: Iterable[PAdicNumber], ball: Ball) -> float:
    xs = list(samples)
    return sum(1 for x in xs if ball.contains(x)) / len(xs)
