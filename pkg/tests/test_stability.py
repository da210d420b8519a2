import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mdyn.distributions import normal_zero_mean
from mdyn.dynamics import MarketParams
from mdyn.stability import (
    Region,
    UWCoordinates,
    Verdict,
    classify,
    classify_params,
    eigen_from_uw,
    jacobian_at_origin,
    phase_diagram,
    region_counts,
    uw_of,
    write_phase_diagram_csv,
)


def test_uw_unit_point(unit_peak):
    uw = uw_of(MarketParams(0.5, 1.0, 0.5, dist=unit_peak))
    assert uw.u == pytest.approx(1.0, abs=1e-15)
    assert uw.w == pytest.approx(1.0, abs=1e-15)


def test_jacobian_trace_and_determinant():
    p = MarketParams(0.3, 2.0, 0.7)
    jac = jacobian_at_origin(p)
    uw = uw_of(p)
    assert np.trace(jac) == pytest.approx(1 + uw.u - uw.w, abs=1e-14)
    assert np.linalg.det(jac) == pytest.approx(uw.u, abs=1e-14)


def test_jacobian_against_finite_differences():
    from mdyn.dynamics import State, step
    p = MarketParams(0.3, 2.0, 0.7)
    h = 1e-7
    cols = []
    for e in ((h, 0.0), (0.0, h)):
        plus, minus = step(p, State(*e)), step(p, State(-e[0], -e[1]))
        cols.append([(plus.p - minus.p) / (2 * h), (plus.d - minus.d) / (2 * h)])
    np.testing.assert_allclose(np.array(cols).T, jacobian_at_origin(p), atol=1e-7)


@pytest.mark.parametrize("u, w", [(0.5, 0.3), (2.0, 0.5), (0.25, 0.1), (4.0, 9.5), (0.3, 5.0)])
def test_eigenvalues_match_numpy(u, w):
    e = eigen_from_uw(u, w)
    ref = np.linalg.eigvals(np.array([[0.0, -u], [1.0, 1 + u - w]]))
    got = sorted([e.mu1, e.mu2], key=lambda z: (z.real, z.imag))
    ref = sorted(ref, key=lambda z: (z.real, z.imag))
    np.testing.assert_allclose(got, ref, atol=1e-12)
    assert e.spectral_radius == pytest.approx(max(abs(ref[0]), abs(ref[1])), abs=1e-12)


@pytest.mark.parametrize("u, w, region, verdict", [
    (0.5, 0.3, Region.R1a, Verdict.STABLE),
    (2.0, 0.5, Region.R1b, Verdict.UNSTABLE),
    (0.25, 0.1, Region.R2, Verdict.STABLE),
    (0.25, 2.4, Region.R3, Verdict.STABLE),
    (4.0, 0.5, Region.R4, Verdict.UNSTABLE),
    (4.0, 9.5, Region.R5, Verdict.UNSTABLE),
    (0.5, 4.0, Region.R6, Verdict.UNSTABLE),
    (4.0, 11.0, Region.R6, Verdict.UNSTABLE),
])
def test_representative_points(u, w, region, verdict):
    r = classify(UWCoordinates(u, w))
    assert r.region is region
    assert r.verdict is verdict


def test_tie_on_line_above_unit_goes_to_r5():
    # for u > 1 the line w = 2 + 2u separates two unstable regions
    assert classify(UWCoordinates(2.0, 6.0)).region is Region.R5


@pytest.mark.parametrize("u, w", [(1.0, 0.5), (0.25, 0.25), (0.25, 2.25), (0.25, 2.5)])
def test_boundaries(u, w):
    r = classify(UWCoordinates(u, w))
    assert r.region is Region.BOUNDARY
    assert r.verdict is Verdict.INDETERMINATE


def test_near_unit_determinant_from_parameters():
    # sigma truncated to 10 digits leaves u within 1e-11 of 1
    p = MarketParams(0.5, 1.0, 0.5, dist=normal_zero_mean(0.3989422804))
    assert classify_params(p).region is Region.BOUNDARY


@pytest.mark.parametrize("u, w", [(0.0, 1.0), (1.0, -0.1)])
def test_rejects_nonpositive(u, w):
    with pytest.raises(ValueError):
        classify(UWCoordinates(u, w))


@settings(max_examples=300, deadline=None)
@given(u=st.floats(1e-3, 5.0), w=st.floats(1e-3, 12.0))
def test_verdict_agrees_with_spectral_radius(u, w):
    r = classify(UWCoordinates(u, w), boundary_margin=1e-9)
    assume(r.region is not Region.BOUNDARY)
    # stay clear of the unit circle where rounding decides
    assume(abs(r.eigen.spectral_radius - 1.0) > 1e-9)
    assert (r.verdict is Verdict.STABLE) == (r.eigen.spectral_radius < 1.0)


def test_phase_diagram_order_and_csv(tmp_path):
    reps = phase_diagram((0.5, 2.0), (0.5, 4.0), (4, 3))
    assert len(reps) == 12
    assert [r.uw.u for r in reps[:4]] == list(np.linspace(0.5, 2.0, 4))
    assert all(r.uw.w == 0.5 for r in reps[:4])
    counts = region_counts(reps)
    assert sum(counts.values()) == 12 and set(counts) == {r.value for r in Region}
    path = tmp_path / "pd.csv"
    write_phase_diagram_csv(reps, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "u,w,delta,region,verdict,spectral_radius"
    assert len(lines) == 13
    assert lines[1].split(",")[3] == reps[0].region.value
    assert math.isclose(float(lines[1].split(",")[2]), reps[0].eigen.delta)


@settings(max_examples=200, deadline=None)
@given(u=st.floats(1e-3, 5.0), frac=st.floats(1e-3, 1.0))
def test_below_diagonal_stability_is_u_below_one(u, frac):
    # with w <= 1 + u the determinant alone decides
    r = classify(UWCoordinates(u, frac * (1.0 + u)))
    assume(r.region is not Region.BOUNDARY)
    assert (r.verdict is Verdict.STABLE) == (u < 1.0)


@settings(max_examples=100, deadline=None)
@given(u=st.floats(1e-3, 5.0), extra=st.floats(1e-6, 10.0))
def test_region_six_has_root_below_minus_one(u, extra):
    r = classify(UWCoordinates(u, 2.0 + 2.0 * u + extra))
    assume(r.region is not Region.BOUNDARY)
    assert r.region is Region.R6
    assert min(r.eigen.mu1.real, r.eigen.mu2.real) < -1.0


@settings(max_examples=100, deadline=None)
@given(alpha=st.floats(0.01, 0.99), J=st.floats(0.01, 10.0), lam=st.floats(0.01, 10.0), sigma=st.floats(0.1, 10.0))
def test_eigen_from_params_matches_uw(alpha, J, lam, sigma):
    from mdyn.stability import eigen_at_origin
    p = MarketParams(alpha, J, lam, dist=normal_zero_mean(sigma))
    e1 = eigen_at_origin(p)
    ev = np.linalg.eigvals(jacobian_at_origin(p))
    assert e1.spectral_radius == pytest.approx(float(np.max(np.abs(ev))), abs=1e-12, rel=1e-12)
    uw = uw_of(p)
    e2 = eigen_from_uw(uw.u, uw.w)
    assert e1.delta == e2.delta
