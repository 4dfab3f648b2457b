import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agrifin import REFERENCE, ScenarioParams, build_grid
from agrifin.errors import DomainError


def test_reference_defaults():
    p = REFERENCE
    assert (p.beta, p.w, p.sigma_bar, p.sigma, p.theta0, p.c_f, p.c_s) == (0.6, 0.02, 0.1, 0.2, 0.5, 0.6, 0.0002)
    assert p.alpha == 0.0 and p.tau == 1.0


@pytest.mark.parametrize("field,value", [("beta", 0.0), ("w", -1.0), ("theta0", 0.0), ("sigma", -0.1), ("alpha", -0.01), ("c_s", math.nan), ("tau", math.inf)])
def test_invalid_parameters_rejected(field, value):
    with pytest.raises(DomainError):
        REFERENCE.with_(**{field: value})


def test_fixed_cost_units():
    assert REFERENCE.fixed_cost(0.2) == pytest.approx(0.6 * 0.01)
    assert REFERENCE.with_(fixed_cost_units="absolute").fixed_cost(0.2) == 0.6
    with pytest.raises(DomainError):
        REFERENCE.with_(fixed_cost_units="percent")


def test_grid_layout():
    g = build_grid(REFERENCE)
    assert len(g) == 133
    assert g.nodes[0] == pytest.approx(0.1) and g.nodes[-1] == pytest.approx(0.9)
    assert g.nodes[66] == 0.5
    assert np.allclose(np.diff(g.nodes), 0.8 / 132)
    assert not g.weights.flags.writeable


def test_degenerate_grid():
    g = build_grid(REFERENCE.with_(sigma_bar=0.0))
    assert list(g.nodes) == [0.5] and list(g.weights) == [1.0]


def test_grid_arguments_validated():
    with pytest.raises(DomainError):
        build_grid(REFERENCE, n_points=2)
    with pytest.raises(DomainError):
        build_grid(REFERENCE, truncation=0.0)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(3, 400),
    k=st.floats(0.5, 8),
    theta0=st.floats(0.1, 5),
    sb=st.floats(1e-4, 1),
)
def test_grid_weights_normalised_and_symmetric(n, k, theta0, sb):
    p = ScenarioParams(theta0=theta0, sigma_bar=sb)
    g = build_grid(p, n, k)
    assert abs(g.weights.sum() - 1.0) < 1e-12
    assert np.all(g.weights > 0)
    assert np.allclose(g.weights, g.weights[::-1], rtol=0, atol=1e-15)
    # zero net supply: odd central moment of the rule vanishes
    assert abs(g.expect(g.nodes - theta0)) < 1e-12 * max(1.0, theta0)
