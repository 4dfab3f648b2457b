import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agrifin.errors import DomainError
from agrifin.gaussian import (
    gaussian_partial_moment,
    gaussian_partial_second_moment,
    normal_cdf,
    normal_pdf,
    survival_probability,
)


def test_partial_moments_match_quadrature(frozen):
    for case in frozen["partial_moment"]:
        a, m, s = case["a"], case["mu"], case["s"]
        assert gaussian_partial_moment(a, m, s) == pytest.approx(case["pm1"], rel=1e-10, abs=1e-14)
        assert gaussian_partial_second_moment(a, m, s) == pytest.approx(case["pm2"], rel=1e-10, abs=1e-14)


def test_full_line_recovers_raw_moments():
    assert gaussian_partial_moment(-np.inf, 0.3, 0.2) == pytest.approx(0.3, abs=1e-15)
    assert gaussian_partial_second_moment(-np.inf, 0.3, 0.2) == pytest.approx(0.3**2 + 0.2**2, abs=1e-15)


def test_vectorised_and_scalar_agree():
    a = np.linspace(-1, 1, 7)
    vec = gaussian_partial_moment(a, 0.5, 0.2)
    assert isinstance(gaussian_partial_moment(0.1, 0.5, 0.2), float)
    assert np.allclose(vec, [gaussian_partial_moment(x, 0.5, 0.2) for x in a], rtol=0, atol=0)


def test_cdf_pdf_reference_values():
    assert normal_cdf(0.0) == 0.5
    assert normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert survival_probability(0.5, 0.5, 0.2) == pytest.approx(0.5)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_nonpositive_std_rejected(bad):
    with pytest.raises(DomainError):
        gaussian_partial_moment(0.0, 0.5, bad)
    with pytest.raises(DomainError):
        survival_probability(0.0, 0.5, bad)


def test_nonfinite_cdf_argument_rejected():
    with pytest.raises(DomainError):
        normal_cdf(float("nan"))


@settings(max_examples=200, deadline=None)
@given(
    a=st.floats(-3, 3),
    b=st.floats(-3, 3),
    m=st.floats(-2, 2),
    s=st.floats(0.01, 2),
)
def test_partial_moment_bounds_and_monotonicity(a, b, m, s):
    lo, hi = min(a, b), max(a, b)
    # E[X 1(X>a)] is nonincreasing in a where a >= 0 contributes nonnegative mass
    assert gaussian_partial_moment(max(lo, 0.0), m, s) >= gaussian_partial_moment(max(hi, 0.0), m, s) - 1e-15
    assert 0.0 <= survival_probability(lo, m, s) <= 1.0
    assert survival_probability(lo, m, s) >= survival_probability(hi, m, s)
    # second partial moment is positive and dominates the squared first over the tail mass
    pm0 = survival_probability(lo, m, s)
    pm1 = gaussian_partial_moment(lo, m, s)
    pm2 = gaussian_partial_second_moment(lo, m, s)
    assert pm2 >= -1e-15
    if pm0 > 1e-8:
        assert pm2 * pm0 >= pm1 * pm1 * (1 - 1e-9) - 1e-15
