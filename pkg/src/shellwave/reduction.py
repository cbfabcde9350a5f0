"""Projected solve orthogonal to the manifold tangent, the reduced energy,
and the critical-radius equation alpha(rho) = 0.

The stationarity system in the unknowns (omega, alpha) is

    grad J(z + omega) - alpha * G zdot = 0,      zdot^T G omega = 0,

with G the Gram matrix of the weighted inner product, so alpha is the
multiplier of the tangent constraint and omega the remainder.  The default
path is a bordered Newton iteration; a fixed-point mode iterating
omega <- -[P J''(z)]^{-1} P(J'(z) + higher-order terms) is kept as a
fidelity check, and both must agree at the common fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import eigh, null_space
from scipy.sparse.linalg import splu

from .ansatz import AnsatzParams, build_z, build_zdot, grid_for
from .exceptions import (
    ConfigError,
    EigensolverError,
    HessianSingular,
    NewtonDivergence,
    NoSignChange,
    SolverError,
)
from .grids import DiscreteOperators, RadialGrid
from .ground_state import GroundStateProfile, ground_state_constants
from .potentials import PotentialSpec, eval_M

__all__ = [
    "ReducedSolution",
    "solve_projected",
    "SpectralReport",
    "projected_hessian_gap",
    "ScanCurve",
    "reduced_energy_scan",
    "RhoStarResult",
    "find_rho_star",
    "domega_drho",
    "calibrate_gamma",
]


@dataclass(frozen=True)
class ReducedSolution:
    eps: float
    rho: float
    omega: np.ndarray
    alpha: float
    psi: float
    newton_iters: int
    residual_norm: float
    converged: bool
    mode: str
    zdot_norm: float
    contraction_ratios: tuple[float, ...] = ()


def _bordered(H: sparse.csc_matrix, gzd: np.ndarray) -> sparse.csc_matrix:
    col = sparse.csc_matrix(-gzd[:, None])
    row = sparse.csc_matrix(gzd[None, :])
    return sparse.bmat([[H, col], [row, None]], format="csc")


def _factor(K: sparse.csc_matrix):
    try:
        return splu(K)
    except RuntimeError as exc:  # exactly singular factor
        raise HessianSingular(str(exc)) from exc


def solve_projected(
    params: AnsatzParams,
    spec: PotentialSpec,
    grid: RadialGrid,
    mode: str = "newton",
    tol: float = 1e-10,
    max_iter: int = 60,
) -> ReducedSolution:
    ops = DiscreteOperators(grid, params.eps, spec, params.p)
    z = build_z(params, spec, grid)
    zdot = build_zdot(params, spec, grid)
    gzd = ops.gram_mul(zdot)
    nzd2 = float(np.dot(zdot, gzd))
    nzd = np.sqrt(nzd2)

    def residual_measure(omega: np.ndarray, alpha: float) -> tuple[np.ndarray, float]:
        r1 = ops.grad(z + omega) - alpha * gzd
        return r1, ops.dual_norm(r1) + abs(float(np.dot(gzd, omega))) / nzd

    if mode == "newton":
        solver = _newton_iterates
    elif mode == "fixed-point":
        solver = _fixed_point_iterates
    else:
        raise ConfigError(f"unknown mode {mode!r}")

    omega, alpha, iters, converged, ratios = solver(
        ops, z, zdot, gzd, nzd2, residual_measure, tol, max_iter
    )
    _, res = residual_measure(omega, alpha)
    return ReducedSolution(
        eps=params.eps,
        rho=params.rho,
        omega=omega,
        alpha=float(alpha),
        psi=float(ops.energy(z + omega)),
        newton_iters=iters,
        residual_norm=float(res),
        converged=converged,
        mode=mode,
        zdot_norm=float(nzd),
        contraction_ratios=tuple(ratios),
    )


def _project_out(omega: np.ndarray, zdot: np.ndarray, gzd: np.ndarray, nzd2: float) -> np.ndarray:
    return omega - (float(np.dot(gzd, omega)) / nzd2) * zdot


def _newton_iterates(ops, z, zdot, gzd, nzd2, residual_measure, tol, max_iter):
    m = len(z)
    omega = np.zeros(m)
    alpha = 0.0
    best = (omega, alpha, np.inf)
    stall = 0
    for it in range(max_iter):
        r1, res = residual_measure(omega, alpha)
        if res < best[2]:
            best, stall = (omega.copy(), alpha, res), 0
        else:
            stall += 1
        if res <= tol or stall >= 3:
            break
        K = _bordered(ops.hess_csc(z + omega), gzd)
        lu = _factor(K)
        rhs = np.concatenate([r1, [float(np.dot(gzd, omega))]])
        step = lu.solve(rhs)
        t, ok = 1.0, False
        while t > 1e-8:
            cand_o = _project_out(omega - t * step[:-1], zdot, gzd, nzd2)
            cand_a = alpha - t * step[-1]
            _, cres = residual_measure(cand_o, cand_a)
            if cres <= (1.0 - 1e-4 * t) * res:
                ok = True
                break
            t /= 2
        if not ok:
            stall += 1
        omega = _project_out(omega - t * step[:-1], zdot, gzd, nzd2)
        alpha = alpha - t * step[-1]
    omega, alpha, res = best
    return omega, alpha, it + 1, bool(res <= tol), ()


def _fixed_point_iterates(ops, z, zdot, gzd, nzd2, residual_measure, tol, max_iter):
    m = len(z)
    Hz = ops.hess_csc(z)
    lu = _factor(_bordered(Hz, gzd))
    omega = np.zeros(m)
    alpha = 0.0
    deltas: list[float] = []
    converged = False
    for it in range(max_iter):
        # J'(z+omega) = J''(z) omega + (J'(z) + higher order); feed the
        # frozen-Hessian bordered system the full nonlinear right-hand side
        rhs1 = -(ops.grad(z + omega) - Hz.dot(omega))
        sol = lu.solve(np.concatenate([rhs1, [0.0]]))
        new_omega = _project_out(sol[:-1], zdot, gzd, nzd2)
        alpha = float(sol[-1])
        deltas.append(ops.norm(new_omega - omega))
        omega = new_omega
        if deltas[-1] <= tol:
            converged = True
            break
        if len(deltas) >= 3 and deltas[-1] > deltas[-2] > deltas[-3]:
            break  # expanding; not a contraction here
    ratios = tuple(
        deltas[k] / deltas[k - 1] for k in range(1, len(deltas)) if deltas[k - 1] > 0
    )
    return omega, alpha, it + 1, converged, ratios


# alpha sign depends on the sign of zdot; the root is what matters.


@dataclass(frozen=True)
class SpectralReport:
    form_zz: float
    form_zz_ref: float
    complement_min: float
    bordered_sigma_min: float
    method: str


def _complement_min_dense(H, G, gz, gzd) -> float:
    B = np.column_stack([gz, gzd])
    Z = null_space(B.T)
    Hd = Z.T @ (H @ Z)
    Gd = Z.T @ (G @ Z)
    vals = eigh(Hd, Gd, subset_by_index=[0, 0], eigvals_only=True)
    return float(vals[0])


def _complement_min_sparse(
    H: sparse.csc_matrix,
    G: sparse.csc_matrix,
    gz: np.ndarray,
    gzd: np.ndarray,
    tol: float = 1e-11,
    max_iter: int = 60,
) -> float:
    """Smallest eigenvalue of H v = theta G v restricted to the G-orthogonal
    complement of span{z, zdot}, by shift-invert inverse iteration on the
    bordered pencil (the border enforces the constraints exactly)."""
    m = H.shape[0]
    GY = sparse.csc_matrix(np.column_stack([gz, gzd]))

    def factor(sigma: float):
        return _factor(sparse.bmat([[H - sigma * G, GY], [GY.T, None]], format="csc"))

    sigma = 0.0
    lu = factor(sigma)
    v = np.ones(m)
    v /= np.sqrt(max(float(v @ (G @ v)), np.finfo(float).tiny))
    theta_prev = np.inf
    for it in range(max_iter):
        w = lu.solve(np.concatenate([G @ v, [0.0, 0.0]]))[:m]
        nw = np.sqrt(float(w @ (G @ w)))
        if not np.isfinite(nw) or nw == 0.0:
            raise EigensolverError("constrained inverse iteration collapsed")
        v = w / nw
        theta = float(v @ (H @ v))
        if abs(theta - theta_prev) <= tol * max(1.0, abs(theta)):
            return theta
        theta_prev = theta
        if it % 6 == 5:  # Rayleigh re-shift; cubic convergence from here
            sigma = theta
            lu = factor(sigma)
    raise EigensolverError("constrained inverse iteration did not settle")


def _bordered_sigma_min(K: sparse.csc_matrix, iters: int = 80) -> float:
    lu = _factor(K)
    v = np.ones(K.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = lu.solve(lu.solve(v, trans="T"))
        lam = float(np.dot(v, w))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            raise EigensolverError("inverse iteration collapsed")
        v = w / nw
    return 1.0 / np.sqrt(lam)


def projected_hessian_gap(
    params: AnsatzParams,
    spec: PotentialSpec,
    grid: RadialGrid,
    dense_limit: int = 1500,
) -> SpectralReport:
    ops = DiscreteOperators(grid, params.eps, spec, params.p)
    z = build_z(params, spec, grid)
    zdot = build_zdot(params, spec, grid)
    H = ops.hess_csc(z)
    G = ops.gram_csc()
    gz = ops.gram_mul(z)
    gzd = ops.gram_mul(zdot)
    form_zz = ops.hess_quadform(z, z)
    form_ref = (1.0 - params.p) * ops.quad(np.abs(z) ** (params.p + 1))
    if grid.size <= dense_limit:
        comp, method = _complement_min_dense(H.toarray(), G.toarray(), gz, gzd), "dense"
    else:
        try:
            comp, method = _complement_min_sparse(H, G, gz, gzd), "shift-invert"
        except EigensolverError:
            if grid.size <= 4000:
                comp, method = (
                    _complement_min_dense(H.toarray(), G.toarray(), gz, gzd),
                    "dense-fallback",
                )
            else:
                raise
    sigma = _bordered_sigma_min(_bordered(H, gzd))
    return SpectralReport(
        form_zz=float(form_zz),
        form_zz_ref=float(form_ref),
        complement_min=float(comp),
        bordered_sigma_min=float(sigma),
        method=method,
    )


@dataclass(frozen=True)
class ScanCurve:
    eps: float
    rho: np.ndarray
    psi: np.ndarray
    alpha: np.ndarray
    discrepancy: np.ndarray
    ok: np.ndarray


def reduced_energy_scan(
    params: AnsatzParams,
    spec: PotentialSpec,
    rho_samples: int,
    h: float = 0.02,
    mode: str = "newton",
) -> ScanCurve:
    """Psi, alpha, and the leading-order discrepancy over the rho window."""
    if rho_samples < 8:
        raise ConfigError(f"need at least 8 rho samples, got {rho_samples}")
    lo, hi = params.omega_window
    rhos = np.linspace(lo, hi, rho_samples)
    grid = grid_for(params, h, rho_max=hi)
    consts = ground_state_constants(GroundStateProfile(p=params.p, lam=1.0), params.n)
    eps = params.eps
    psi = np.full(rho_samples, np.nan)
    alpha = np.full(rho_samples, np.nan)
    disc = np.full(rho_samples, np.nan)
    ok = np.zeros(rho_samples, dtype=bool)
    for i, rho in enumerate(rhos):
        try:
            sol = solve_projected(params.with_rho(rho), spec, grid, mode=mode)
        except SolverError:
            continue
        if not sol.converged:
            continue
        psi[i] = sol.psi
        alpha[i] = sol.alpha
        M = eval_M(spec, params.n, params.p, eps, eps * rho).M
        disc[i] = abs(eps ** (3 * params.n - 3) * sol.psi - consts.energy_const * eps**2 * M)
        ok[i] = True
    return ScanCurve(eps=eps, rho=rhos, psi=psi, alpha=alpha, discrepancy=disc, ok=ok)


@dataclass(frozen=True)
class RhoStarResult:
    rho_star: float
    alpha: float
    psi: float
    dpsi_drho: float
    dpsi_ok: bool
    solution: ReducedSolution
    evaluations: int


def find_rho_star(
    params: AnsatzParams,
    spec: PotentialSpec,
    bracket: tuple[float, float],
    h: float = 0.02,
    mode: str = "newton",
    alpha_factor: float = 1e-9,
    max_bisect: int = 200,
    check_dpsi: bool = True,
    pre_scan: int = 9,
) -> RhoStarResult:
    """Root of alpha(rho) in the bracket, down to |alpha| <= factor * ||zdot||.

    A short scan walks the bracket first and bisection runs on the first
    subinterval with an alpha sign change, so brackets enclosing an even
    number of roots (wide windows over an oscillatory potential) still
    resolve; the scan order makes the choice deterministic and keeps
    continuation runs on the branch nearest the lower edge.
    """
    a, b = float(bracket[0]), float(bracket[1])
    grid = grid_for(params, h, rho_max=b)
    evals = 0

    def at(rho: float) -> ReducedSolution:
        nonlocal evals
        evals += 1
        sol = solve_projected(params.with_rho(rho), spec, grid, mode=mode)
        if not sol.converged:
            raise NewtonDivergence(f"projected solve stalled at rho={rho}")
        return sol

    sa = at(a)
    best = sa
    sb = None
    for rho in np.linspace(a, b, max(pre_scan, 2))[1:]:
        cand = at(float(rho))
        if abs(cand.alpha) < abs(best.alpha):
            best = cand
        if np.sign(cand.alpha) != np.sign(sa.alpha):
            b, sb = float(rho), cand
            break
        a, sa = float(rho), cand
    if sb is None:
        raise NoSignChange(
            f"alpha keeps the sign of alpha({bracket[0]})={sa.alpha:.3e} "
            f"across [{bracket[0]}, {bracket[1]}] ({evals} samples)"
        )
    for _ in range(max_bisect):
        if abs(best.alpha) <= alpha_factor * best.zdot_norm:
            break
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        sm = at(mid)
        if abs(sm.alpha) < abs(best.alpha):
            best = sm
        if np.sign(sm.alpha) == np.sign(sa.alpha):
            a, sa = mid, sm
        else:
            b, sb = mid, sm
    star = best
    dpsi = np.nan
    dpsi_ok = False
    if check_dpsi:
        delta = 3e-4 * star.rho
        up = at(min(star.rho + delta, params.omega_window[1]))
        dn = at(max(star.rho - delta, params.omega_window[0]))
        dpsi = (up.psi - dn.psi) / (up.rho - dn.rho)
        dpsi_ok = bool(abs(dpsi) <= 1e-6 * abs(star.psi))
    return RhoStarResult(
        rho_star=star.rho,
        alpha=star.alpha,
        psi=star.psi,
        dpsi_drho=float(dpsi),
        dpsi_ok=dpsi_ok,
        solution=star,
        evaluations=evals,
    )


def domega_drho(
    params: AnsatzParams,
    spec: PotentialSpec,
    grid: RadialGrid,
    mode: str = "newton",
    delta: float | None = None,
) -> tuple[np.ndarray, float]:
    """Centered difference of the remainder in rho, and its size against zdot."""
    if delta is None:
        delta = 1e-3 * params.rho
    up = solve_projected(params.with_rho(params.rho + delta), spec, grid, mode=mode)
    dn = solve_projected(params.with_rho(params.rho - delta), spec, grid, mode=mode)
    if not (up.converged and dn.converged):
        raise NewtonDivergence("projected solve stalled during rho differencing")
    dod = (up.omega - dn.omega) / (2.0 * delta)
    ops = DiscreteOperators(grid, params.eps, spec, params.p)
    zdot = build_zdot(params, spec, grid)
    return dod, float(ops.norm(dod) / ops.norm(zdot))


def calibrate_gamma(
    params: AnsatzParams,
    spec: PotentialSpec,
    h: float = 0.02,
    safety: float = 2.0,
) -> float:
    """Fix the remainder-set radius from the observed ||omega||/(eps^3 ||z||)."""
    grid = grid_for(params, h)
    sol = solve_projected(params, spec, grid)
    if not sol.converged:
        raise NewtonDivergence("projected solve stalled during gamma calibration")
    ops = DiscreteOperators(grid, params.eps, spec, params.p)
    z = build_z(params, spec, grid)
    ratio = ops.norm(sol.omega) / (params.eps**3 * ops.norm(z))
    return float(safety * ratio)
