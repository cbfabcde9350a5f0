"""Potential families, the effective weight M, and critical radius search."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shellwave.exceptions import (
    ConfigError,
    EllipticityViolation,
    NoCriticalPoint,
)
from shellwave.potentials import (
    PotentialSpec,
    eval_M,
    find_critical_radius,
    stationarity_identity,
)


def test_family_values():
    r = np.linspace(0.1, 20.0, 57)
    assert np.all(PotentialSpec.zero().value(r) == 0.0)
    s = PotentialSpec.sine(amplitude=0.3, frequency=2.0, phase=0.5)
    assert np.allclose(s.value(r), 0.3 * np.sin(2.0 * r + 0.5), rtol=1e-15)
    c = PotentialSpec.cosine(amplitude=0.7)
    assert np.allclose(c.value(r), 0.7 * np.cos(r), rtol=1e-15)
    # bounded_poly is a polynomial in y = 1/(1+r)
    poly = PotentialSpec.bounded_poly([0.1, -0.02, 0.001])
    y = 1.0 / (1.0 + r)
    want = 0.1 - 0.02 * y + 0.001 * y**2
    assert np.allclose(poly.value(r), want, rtol=1e-13)


def test_bounds_are_bounds():
    r = np.linspace(0.0, 60.0, 4001)
    for spec in (
        PotentialSpec.sine(amplitude=0.4, frequency=3.0),
        PotentialSpec.cosine(amplitude=1.2),
    ):
        assert np.max(np.abs(spec.value(r))) <= spec.bound_V + 1e-12
        assert np.max(np.abs(spec.deriv(r))) <= spec.bound_Vp + 1e-12


def test_tabulated_matches_source():
    r_nodes = np.linspace(0.0, 30.0, 3001)
    src = PotentialSpec.sine()
    tab = PotentialSpec.tabulated(r_nodes, src.value(r_nodes))
    r = np.linspace(0.5, 29.5, 97)
    assert np.max(np.abs(tab.value(r) - src.value(r))) < 1e-4


@given(
    r=st.floats(min_value=0.5, max_value=40.0),
    eps=st.floats(min_value=0.1, max_value=0.6),
    n=st.integers(min_value=2, max_value=4),
    p=st.floats(min_value=1.5, max_value=6.0),
)
@settings(max_examples=50, deadline=None)
def test_eval_M_derivatives_match_fd(r, eps, n, p):
    spec = PotentialSpec.sine(amplitude=0.8)
    h = 1e-5 * max(1.0, r)
    pt = eval_M(spec, n, p, eps, r)
    hi = eval_M(spec, n, p, eps, r + h)
    lo = eval_M(spec, n, p, eps, r - h)
    fd1 = (hi.M - lo.M) / (2 * h)
    fd2 = (hi.M - 2 * pt.M + lo.M) / h**2
    scale = max(1.0, abs(float(pt.M))) / max(h, 1e-12)
    assert float(pt.Mp) == pytest.approx(float(fd1), abs=1e-7 * scale)
    assert float(pt.Mpp) == pytest.approx(float(fd2), rel=1e-4, abs=1e-3)


def test_eval_M_zero_potential_closed_form():
    r = np.linspace(1.0, 10.0, 19)
    for n in (2, 3):
        pt = eval_M(PotentialSpec.zero(), n, 3.0, 0.4, r)
        pref = 0.4 ** (2 * (n - 2))
        assert np.allclose(pt.M, pref * r ** (n - 1), rtol=1e-14)
        assert np.allclose(pt.Mp, pref * (n - 1) * r ** (n - 2), rtol=1e-14)


def test_ellipticity_violation_raised():
    spec = PotentialSpec.sine(amplitude=1.0)
    with pytest.raises(EllipticityViolation):
        eval_M(spec, 2, 3.0, 1.2, np.linspace(1.0, 20.0, 200))


def test_critical_radius_sine_independent_equation():
    # n=2, p=3: M'(t) = 0 reduces to 1 + e^2 sin t + (3/2) e^2 t cos t = 0
    spec = PotentialSpec.sine()
    for eps in (0.5, 0.4, 0.3):
        res = find_critical_radius(spec, 2, 3.0, eps, (7.5, 9.5))
        t = res.t_eps
        g = 1.0 + eps**2 * np.sin(t) + 1.5 * eps**2 * t * np.cos(t)
        assert abs(g) < 1e-9
        assert 7.5 <= t <= 9.5
        assert res.curvature != 0.0
        # returned root is a genuine sign change of M'
        d = 1e-3
        mp_lo = float(eval_M(spec, 2, 3.0, eps, t - d).Mp)
        mp_hi = float(eval_M(spec, 2, 3.0, eps, t + d).Mp)
        assert mp_lo * mp_hi < 0.0


def test_critical_radius_frozen_value():
    # frozen from an independent bisection of the reduced equation above
    res = find_critical_radius(PotentialSpec.sine(), 2, 3.0, 0.4, (7.5, 9.5))
    assert res.t_eps == pytest.approx(8.446843652, abs=1e-8)


def test_no_critical_point_for_flat_weight():
    # n=2, V=0: M = r has no interior critical point
    with pytest.raises(NoCriticalPoint):
        find_critical_radius(PotentialSpec.zero(), 2, 3.0, 0.4, (1.0, 30.0))


def test_critical_radius_rejects_bad_bracket():
    with pytest.raises(ConfigError):
        find_critical_radius(PotentialSpec.sine(), 2, 3.0, 0.4, (9.5, 7.5))


def test_stationarity_identity_vanishes_at_root():
    spec = PotentialSpec.sine()
    res = find_critical_radius(spec, 2, 3.0, 0.4, (7.5, 9.5))
    val = stationarity_identity(spec, 2, 3.0, 0.4, res.t_eps)
    off = stationarity_identity(spec, 2, 3.0, 0.4, res.t_eps + 0.3)
    assert abs(val) < 1e-9
    assert abs(off) > 1e-3
