import math

import numpy as np
import pytest

from mdyn.dynamics import MarketParams
from mdyn.errors import InvalidParameterError
from mdyn.hiam import (
    HiamConfig,
    compare,
    compare_to_deterministic,
    config_from_dict,
    config_to_dict,
    replicate,
    run_hiam,
    speculator_count,
    write_comparison_csv,
)

REF = MarketParams(alpha=0.5, J=0.8, lam=0.1, V=10.0)


def cfg(**kw):
    base = dict(params=REF, K=1000, p0=10.5, dbar0=0.0, horizon=50, seed=7)
    base.update(kw)
    return HiamConfig(**base)


@pytest.mark.parametrize("alpha, K, S", [(0.5, 1, 1), (0.5, 3, 2), (0.25, 2, 1), (0.3, 1000, 300), (0.01, 10, 0)])
def test_speculator_count_rounds_half_up(alpha, K, S):
    assert speculator_count(alpha, K) == S


@pytest.mark.parametrize("kw", [dict(K=0), dict(dbar0=1.5), dict(horizon=-1), dict(seed=-1), dict(K=10.0)])
def test_invalid_config(kw):
    with pytest.raises(InvalidParameterError):
        cfg(**kw)


def test_granularity_and_bounds():
    t = run_hiam(cfg(K=37))
    k_d = 37 * t.demands[1:]
    assert np.all(np.abs(k_d - np.round(k_d)) < 1e-9)
    assert np.all(np.abs(t.demands) <= 1.0)


def test_single_agent_decisions_are_signs():
    t = run_hiam(cfg(K=1, horizon=20))
    assert set(t.demands[1:].tolist()) <= {-1.0, 1.0}


def test_price_rule():
    t = run_hiam(cfg())
    lam = REF.lam
    # integrated offsets obey the update exactly; prices up to the final shift by V
    for n in range(50):
        assert t.offsets[n + 1] == t.offsets[n] + lam * t.demands[n]
    np.testing.assert_allclose(t.prices[1:] - t.prices[0], lam * np.cumsum(t.demands[:-1]), atol=1e-12)


def test_reproducible_and_seed_dependent():
    a, b = run_hiam(cfg()), run_hiam(cfg())
    np.testing.assert_array_equal(a.prices, b.prices)
    np.testing.assert_array_equal(a.demands, b.demands)
    assert not np.array_equal(a.demands, run_hiam(cfg(seed=8)).demands)


def test_value_shift_is_exact():
    a = run_hiam(cfg())
    b = run_hiam(cfg(params=REF.replace(V=0.0), p0=0.5))
    np.testing.assert_array_equal(a.demands, b.demands)
    np.testing.assert_array_equal(a.prices, b.prices + 10.0)


def test_all_fundamentalists_far_below_value():
    c = cfg(params=REF.replace(alpha=0.01), K=10, p0=-40.0, horizon=5)
    t = run_hiam(c)
    assert np.all(t.demands[1:] == 1.0)


def test_zero_horizon():
    assert compare_to_deterministic(cfg(horizon=0)) == 0.0


def test_noise_at_equilibrium_scales_like_binomial():
    # deterministic orbit stays at (V, 0); the error is pure sampling noise of a mean of K signs
    for K in (400, 10_000):
        stats = replicate(cfg(K=K, p0=10.0), 15)
        assert 0.5 / math.sqrt(K) < stats.median < 5.0 / math.sqrt(K)


def test_comparison_starts_together():
    c = compare(cfg())
    assert c.abs_err_p[0] == 0.0 and c.abs_err_d[0] == 0.0
    assert c.sup_error == max(c.abs_err_p.max(), c.abs_err_d.max())
    assert len(c.p_det) == 51


def test_replicate_basics(monkeypatch):
    one = replicate(cfg(), 1)
    assert one.median == compare_to_deterministic(cfg())
    monkeypatch.setenv("MDYN_THREADS", "1")
    serial = replicate(cfg(), 6, base_seed=100)
    monkeypatch.setenv("MDYN_THREADS", "4")
    threaded = replicate(cfg(), 6, base_seed=100)
    assert serial == threaded
    assert serial.errors[2] == compare_to_deterministic(cfg(seed=102))
    assert serial.q1 <= serial.median <= serial.q3


def test_replicate_rejects_zero():
    with pytest.raises(InvalidParameterError):
        replicate(cfg(), 0)


def test_config_round_trip():
    c = cfg(seed=2 ** 64 - 1)
    assert config_from_dict(config_to_dict(c)) == c


def test_csv(tmp_path):
    path = tmp_path / "h.csv"
    write_comparison_csv(compare(cfg(horizon=5)), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,p_st,dbar_st,p_det,d_det,abs_err_p,abs_err_d"
    assert len(lines) == 7
