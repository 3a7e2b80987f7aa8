"""Exact p-adic arithmetic, Haar/character integration, self-similar
jump measures, samplers for their laws, and limit-law experiments."""

__version__ = "0.1.0"

from .errors import (
    InfiniteMassError,
    PrecisionError,
    PrimeMismatchError,
    ToleranceError,
)
from .padic import (
    CharacterSum,
    DEFAULT_PRECISION,
    PAdicNumber,
    Phase,
    abs_val,
    add,
    character_phase,
    divide,
    format_padic,
    frac_part,
    from_rational,
    grid_points,
    invert,
    mul,
    negate,
    parse_number,
    parse_padic,
    rational_char_phase,
    subtract,
)
from .sets import (
    Ball,
    CompactOpenSet,
    StepFunction,
    TailSet,
    annulus,
    fourier_indicator,
    haar_measure,
    integrate_char,
    integrate_char_exact,
    integrate_step,
    integrate_step_inverse,
    normalize,
    sphere,
    split_sphere,
)
from .charfn import (
    BallProbability,
    CompoundPoissonSampler,
    HaarBallSampler,
    PointMassSampler,
    RadialCharFn,
    RadialSampler,
    Sampler,
    SphereMassTable,
    StableParams,
    ball_probability,
    empirical_cf,
    poisson_draw,
    sample,
    sphere_masses,
    stable_cf,
    stable_sampler,
    substream,
)
from .levy import (
    CfEvaluator,
    LevyExponent,
    SelfSimilarLevyMeasure,
    TwoValuedForm,
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
from .limits import (
    ConvergenceReport,
    LimitScheme,
    Scenario,
    convergence_report,
    default_ball_family,
    phi_n_measure,
    scaling_identity_check,
    simulate_sums,
    theoretical_fn,
)
