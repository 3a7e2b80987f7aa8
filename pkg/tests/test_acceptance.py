"""Acceptance battery: one test per criterion, each printing its
pass/fail line and asserting both the verdict and the runtime limit."""

from padicprob import selftest


def _check(fn, **kwargs):
    res = fn(**kwargs)
    print()
    print(res.line())
    assert res.runtime_s < res.limit_s, f"runtime limit exceeded: {res.line()}"
    assert res.passed, res.details
    return res


def test_criterion_1_character_arithmetic_exactness():
    res = _check(selftest.criterion_1)
    assert res.metrics["failures"] == 0
    assert res.metrics["checks"] == 10_000


def test_criterion_2_fourier_residue_oracle():
    res = _check(selftest.criterion_2)
    assert res.metrics["max_error"] <= 1e-12


def test_criterion_3_closed_form_transform():
    res = _check(selftest.criterion_3)
    assert res.metrics["max_error"] <= 1e-12


def test_criterion_4_scaling_law():
    res = _check(selftest.criterion_4)
    assert res.metrics["max_residual"] <= 1e-14
    assert res.metrics["mass_identities"]


def test_criterion_5_inversion_round_trip():
    res = _check(selftest.criterion_5)
    assert res.metrics["max_rel_error"] <= 1e-10


def test_criterion_6_convergence():
    res = _check(selftest.criterion_6)
    assert res.metrics["worst_exact"] <= 1e-14


def test_criterion_7_sampler_fidelity():
    res = _check(selftest.criterion_7)
    assert abs(res.metrics["reference"] - selftest.STABLE_UNIT_BALL_REFERENCE) <= 1e-10


def test_criterion_8_trajectory():
    res = _check(selftest.criterion_8)
    assert res.metrics["errors"][-1] <= 5e-3


def test_criterion_9_degenerate_cases():
    res = _check(selftest.criterion_9)
    assert res.metrics["beta_one"] == "delta"
    assert res.metrics["bounded_normalizers"] == "haar_cutoff"


def test_criterion_10_determinism():
    _check(selftest.criterion_10, workers=2)


def test_negative_control_is_detected():
    res = selftest.criterion_3(negative_control=True)
    print()
    print(res.line())
    assert not res.passed
