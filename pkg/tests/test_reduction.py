"""Projected solves, the bordered spectral gap, the energy scan, and rho*."""

import numpy as np
import pytest

from shellwave.ansatz import AnsatzParams, build_z, build_zdot, grid_for
from shellwave.exceptions import ConfigError, NoSignChange
from shellwave.grids import DiscreteOperators
from shellwave.potentials import PotentialSpec, find_critical_radius
from shellwave.reduction import (
    calibrate_gamma,
    domega_drho,
    find_rho_star,
    projected_hessian_gap,
    reduced_energy_scan,
    solve_projected,
)

EPS, RHO = 0.4, 21.0


@pytest.fixture(scope="module")
def setup():
    spec = PotentialSpec.sine()
    params = AnsatzParams.make(2, 3.0, EPS, RHO, spec, 0.5, 1.5,
                               gamma=0.6, eps_max=0.5)
    grid = grid_for(params, 0.02, rho_max=params.omega_window[1])
    return params, spec, grid


def test_orthogonality_both_modes(setup):
    params, spec, grid = setup
    ops = DiscreteOperators(grid, EPS, spec, 3.0)
    zdot = build_zdot(params, spec, grid)
    nzd = ops.norm(zdot)
    for mode in ("newton", "fixed-point"):
        sol = solve_projected(params, spec, grid, mode=mode)
        assert sol.converged
        rel = abs(ops.inner(sol.omega, zdot)) / (nzd * max(ops.norm(sol.omega), 1e-30))
        assert rel <= 1e-12


def test_modes_agree(setup):
    params, spec, grid = setup
    ops = DiscreteOperators(grid, EPS, spec, 3.0)
    a = solve_projected(params, spec, grid, mode="newton")
    b = solve_projected(params, spec, grid, mode="fixed-point")
    assert ops.norm(a.omega - b.omega) <= 1e-8
    assert abs(a.alpha - b.alpha) <= 1e-8


def test_envelope_with_calibrated_gamma(setup):
    params, spec, grid = setup
    ops = DiscreteOperators(grid, EPS, spec, 3.0)
    gamma = calibrate_gamma(params, spec)
    sol = solve_projected(params, spec, grid)
    z = build_z(params, spec, grid)
    assert ops.norm(sol.omega) <= gamma * EPS**3 * ops.norm(z)


def test_fixed_point_contracts(setup):
    params, spec, grid = setup
    sol = solve_projected(params, spec, grid, mode="fixed-point")
    ratios = sol.contraction_ratios
    assert len(ratios) >= 1
    assert max(ratios) < 0.5


def test_residual_small(setup):
    params, spec, grid = setup
    sol = solve_projected(params, spec, grid)
    assert sol.residual_norm <= 1e-10


def test_spectral_gap_dense_vs_sparse(setup):
    params, spec, _ = setup
    coarse = grid_for(params, 0.25, rho_max=params.rho + 10.0)
    dense = projected_hessian_gap(params, spec, coarse, dense_limit=10**6)
    sparse = projected_hessian_gap(params, spec, coarse, dense_limit=1)
    assert dense.method == "dense" and sparse.method == "shift-invert"
    assert sparse.complement_min == pytest.approx(dense.complement_min, rel=1e-6)


def test_spectral_gap_properties(setup):
    params, spec, _ = setup
    grid = grid_for(params, 0.04, rho_max=params.rho + 25.0)
    rep = projected_hessian_gap(params, spec, grid)
    assert rep.complement_min >= 0.02
    assert rep.form_zz < 0.0
    assert rep.form_zz == pytest.approx(rep.form_zz_ref, rel=0.05)
    fine = projected_hessian_gap(params, spec, grid.refine())
    assert fine.complement_min >= rep.complement_min - 1e-6


def test_scan_needs_enough_samples(setup):
    params, spec, _ = setup
    with pytest.raises(ConfigError):
        reduced_energy_scan(params, spec, 7)


def test_scan_alpha_sign_change(setup):
    params, spec, _ = setup
    curve = reduced_energy_scan(params, spec, 9)
    rho = np.asarray(curve.rho)
    assert np.all(np.diff(rho) > 0)
    lo, hi = params.omega_window
    assert rho[0] >= lo - 1e-9 and rho[-1] <= hi + 1e-9
    alpha = np.asarray(curve.alpha)
    ok = np.asarray(curve.ok, dtype=bool)
    pairs = [(alpha[i], alpha[i + 1]) for i in range(len(alpha) - 1)
             if ok[i] and ok[i + 1]]
    assert any(a * b < 0 for a, b in pairs)


def test_find_rho_star_quality(setup):
    params, spec, grid = setup
    res = find_rho_star(params, spec, (7.5 / EPS, 9.5 / EPS))
    ops = DiscreteOperators(grid, EPS, spec, 3.0)
    zdot = build_zdot(params.with_rho(res.rho_star), spec, grid)
    assert abs(res.alpha) <= 1e-9 * ops.norm(zdot)
    # the multiplier root tracks the critical radius of the weight
    crit = find_critical_radius(spec, 2, 3.0, EPS, (7.5, 9.5))
    assert abs(EPS * res.rho_star - crit.t_eps) <= 0.1 * crit.t_eps
    assert res.dpsi_ok
    assert abs(res.dpsi_drho) <= 1e-6 * abs(res.psi)
    lo, hi = params.omega_window
    assert lo < res.rho_star < hi


def test_find_rho_star_no_sign_change(setup):
    params, spec, _ = setup
    with pytest.raises(NoSignChange):
        find_rho_star(params, spec, (22.0, 23.0), pre_scan=5)


def test_domega_drho_bounded(setup):
    params, spec, grid = setup
    vec, rel = domega_drho(params, spec, grid)
    assert np.all(np.isfinite(vec))
    assert 0.0 < rel < 10.0
