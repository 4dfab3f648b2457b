import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agrifin import ScenarioParams
from agrifin.config import (
    ConfigError,
    MarketBConfig,
    OutputConfig,
    RunConfig,
    SolverConfig,
    SweepConfig,
    dump_config,
    load_config,
    loads_config,
)

SCENARIO = "[scenario]\nbeta = 0.6\nw = 0.02\nsigma_bar = 0.1\nsigma = 0.2\ntheta0 = 0.5\nc_f = 0.6\nc_s = 0.0002\n"


def test_defaults_without_scenario_section():
    assert loads_config("") == RunConfig()


def test_full_scenario_section():
    cfg = loads_config(SCENARIO + "alpha = 0.05\n")
    assert cfg.scenario == ScenarioParams(alpha=0.05)


def test_missing_beta_is_named():
    with pytest.raises(ConfigError, match="beta"):
        loads_config(SCENARIO.replace("beta = 0.6\n", ""))


@pytest.mark.parametrize(
    "text,match",
    [
        ("[solver]\nn_pionts = 10\n", "n_pionts"),
        ("[plots]\nx = 1\n", "plots"),
        ("[solver]\nn_points = 1.5\n", "integer"),
        ("[solver]\ntol = 'small'\n", "number"),
        ("[solver]\nn_points = 2\n", "n_points"),
        ("[sweep]\nmode = 'lazy'\n", "mode"),
        ("[sweep]\nthreads = 'many'\n", "threads"),
        ("[market_b]\ntarget_default = 1.2\n", "target_default"),
        ("[output]\nformats = ['xlsx']\n", "xlsx"),
        (SCENARIO.replace("beta = 0.6", "beta = -1.0"), "beta"),
        ("[scenario\n", "line 1"),
    ],
)
def test_strict_rejection(text, match):
    with pytest.raises(ConfigError, match=match):
        loads_config(text)


def test_file_round_trip(tmp_path):
    cfg = RunConfig(scenario=ScenarioParams(alpha=0.03, fixed_cost_units="absolute", c_f=0.005))
    path = tmp_path / "run.toml"
    dump_config(cfg, path)
    assert load_config(path) == cfg
    assert b"\r\n" not in path.read_bytes()


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.toml")


pos = st.floats(1e-3, 10, allow_nan=False)


@settings(max_examples=80, deadline=None)
@given(
    beta=pos, w=pos, sb=st.floats(0, 1), sigma=st.floats(0, 1), theta0=pos, c_f=st.floats(0, 2),
    alpha=st.floats(0, 1), n=st.integers(3, 1000), tol=st.floats(1e-14, 1e-3),
    values=st.lists(st.floats(0, 1), max_size=5, unique=True).map(sorted),
    mode=st.sampled_from(["rational", "naive", "both"]), threads=st.sampled_from(["1", "4", "auto"]),
    anchor=st.booleans(), formats=st.sampled_from([("csv",), ("json",), ("csv", "json")]),
)
def test_round_trip_property(beta, w, sb, sigma, theta0, c_f, alpha, n, tol, values, mode, threads, anchor, formats):
    cfg = RunConfig(
        scenario=ScenarioParams(beta=beta, w=w, sigma_bar=sb, sigma=sigma, theta0=theta0, c_f=c_f, alpha=alpha),
        solver=SolverConfig(n_points=n, tol=tol),
        sweep=SweepConfig(values=tuple(values), mode=mode, threads=threads),
        market_b=MarketBConfig(anchor_fixed_cost=anchor),
        output=OutputConfig(formats=formats),
    )
    assert loads_config(cfg.to_toml()) == cfg
