"""Back to the original eigenvalue problem and its necessary conditions.

A layer profile u on the stretched grid (radial variable s = x/eps) turns
into the unit-mass solution of

    -Laplace(u_a) + V(x) u_a = a u_a^p + mu u_a,     int u_a^2 dx = 1,

through u_a(x) = c u(x/eps) with c = (eps^n m)^(-1/2), m the full n-dim
mass of u, which forces a = (m eps^(n - 4/(p-1)))^((p-1)/2) and
mu = -1/eps^2.  Everything here is bookkeeping on top of solved profiles:
no new discretization enters, so the original-equation residual inherits
the collocation residual through E(eps s) = c eps^{-2} R(s).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import BracketFailure, InsufficientFamily, ToleranceNotReached
from .full_solver import ContinuationResult, FullSolution, solve_full
from .grids import RadialGrid
from .ground_state import sphere_area
from .potentials import PotentialSpec, eval_M

__all__ = [
    "NormalizedRecord",
    "mass_to_a",
    "to_original",
    "ScalingLawReport",
    "scaling_law_check",
    "SolveForEpsResult",
    "solve_F_for_eps",
    "NecessaryConditionsReport",
    "necessary_conditions_report",
]


@dataclass(frozen=True)
class NormalizedRecord:
    eps: float
    n: int
    p: float
    a: float
    mu: float
    mass_check: float
    rho: float            # layer radius in the stretched variable
    rho_orig: float       # eps * rho, the radius of the original solution
    m_prime_abs: float
    v_prime_abs: float
    eq1_residual: float


def mass_to_a(mass_full_nd: float, eps: float, n: int, p: float) -> float:
    """Nonlinearity coefficient forced by unit L^2 mass."""
    return float((mass_full_nd * eps ** (n - 4.0 / (p - 1.0))) ** ((p - 1.0) / 2.0))


def to_original(
    full: FullSolution, spec: PotentialSpec, rho: float | None = None
) -> NormalizedRecord:
    n, p, eps = full.n, full.p, full.eps
    if rho is None:
        rho = full.peak_rho
    area = sphere_area(n)
    m_nd = area * full.mass_weighted
    a = mass_to_a(m_nd, eps, n, p)
    c2 = 1.0 / (eps**n * m_nd)
    mass_check = c2 * eps**n * m_nd
    peak = float(np.abs(full.profile).max())
    eq1_rel = full.residual_max / peak
    t = eps * rho
    point = eval_M(spec, n, p, eps, t)
    return NormalizedRecord(
        eps=eps,
        n=n,
        p=p,
        a=a,
        mu=-1.0 / eps**2,
        mass_check=float(mass_check),
        rho=float(rho),
        rho_orig=float(t),
        m_prime_abs=abs(float(point.Mp)),
        v_prime_abs=abs(float(spec.deriv(t))),
        eq1_residual=float(eq1_rel),
    )


@dataclass(frozen=True)
class ScalingLawReport:
    eps: tuple[float, ...]
    ratios: tuple[float, ...]
    in_band_at_smallest: bool
    deviation_decreasing: bool


def scaling_law_check(
    records: list[NormalizedRecord], band: tuple[float, float] = (0.85, 1.15)
) -> ScalingLawReport:
    """Compare a^(2/(p-1)) with its shell prediction across the family.

    The prediction is C_mass * area * t^(n-1) * eps^(1 - 4/(p-1)) with
    t = eps rho; the ratio tends to 1 like beta(t)^(4/(p-1) - 1).
    """
    if len(records) < 3:
        raise InsufficientFamily(
            f"scaling-law trend needs at least 3 family members, got {len(records)}"
        )
    from .ground_state import GroundStateProfile, ground_state_constants

    recs = sorted(records, key=lambda r: -r.eps)
    n, p = recs[0].n, recs[0].p
    consts = ground_state_constants(GroundStateProfile(p=p, lam=1.0), n)
    area = sphere_area(n)
    ratios = []
    for r in recs:
        denom = consts.mass_const * area * r.rho_orig ** (n - 1) * r.eps ** (
            1.0 - 4.0 / (p - 1.0)
        )
        ratios.append(r.a ** (2.0 / (p - 1.0)) / denom)
    dev = np.abs(np.asarray(ratios) - 1.0)
    return ScalingLawReport(
        eps=tuple(r.eps for r in recs),
        ratios=tuple(float(x) for x in ratios),
        in_band_at_smallest=bool(band[0] <= ratios[-1] <= band[1]),
        deviation_decreasing=bool(np.all(np.diff(dev) < 0.0)),
    )


@dataclass(frozen=True)
class SolveForEpsResult:
    eps: float
    record: NormalizedRecord
    full: FullSolution
    iterations: int
    history: tuple[tuple[float, float], ...]  # (eps, a) pairs, probe order


def solve_F_for_eps(
    family: ContinuationResult,
    spec: PotentialSpec,
    a_target: float,
    rel_tol: float = 1e-8,
    max_iter: int = 40,
    h_solve: float = 2e-3,
    trunc_K: float | None = None,
) -> SolveForEpsResult:
    """Solve a(eps) = a_target by inverse interpolation with fresh solves.

    Family members provide the initial samples; every new probe is a full
    Newton solve at the proposed eps, seeded from the nearest member's
    profile shifted to the radius predicted by linear interpolation of
    t(eps).  A member already within tolerance short-circuits.
    """
    members = list(family.members)
    if len(members) < 2:
        raise InsufficientFamily("need at least 2 family members to bracket a(eps)")
    n, p = members[0].full.n, members[0].full.p

    samples = []  # (eps, a)
    for m in members:
        rec = to_original(m.full, spec)
        if abs(rec.a - a_target) <= rel_tol * a_target:
            return SolveForEpsResult(
                eps=m.eps, record=rec, full=m.full, iterations=0,
                history=((m.eps, rec.a),),
            )
        samples.append((m.eps, rec.a))
    a_vals = np.array([a for _, a in samples])
    if not (a_vals.min() <= a_target <= a_vals.max()):
        raise BracketFailure(
            f"a_target={a_target:.6e} outside the family range "
            f"[{a_vals.min():.6e}, {a_vals.max():.6e}]"
        )

    t_of_eps_x = np.array([m.eps for m in members])[::-1]   # increasing eps
    t_of_eps_y = np.array([m.t_value for m in members])[::-1]
    history = list(samples)

    lam0 = spec.lambda0(float(t_of_eps_x[-1]))

    def probe(eps_new: float) -> tuple[FullSolution, NormalizedRecord]:
        t_pred = float(np.interp(eps_new, t_of_eps_x, t_of_eps_y))
        rho_pred = t_pred / eps_new
        near = min(members, key=lambda m: abs(m.eps - eps_new))
        grid = RadialGrid.make(n, rho_pred + 40.0 / lam0, h_solve)
        seed = np.interp(
            grid.nodes - (rho_pred - near.full.peak_rho),
            near.full.grid.nodes,
            near.full.profile,
            left=0.0,
            right=0.0,
        )
        full = solve_full(n, p, eps_new, spec, seed, grid, trunc_K=trunc_K)
        return full, to_original(full, spec)

    for it in range(1, max_iter + 1):
        # inverse interpolation of the monotone sample cloud
        pts = sorted(history, key=lambda ea: ea[1])
        xs = np.array([a for _, a in pts])
        ys = np.array([e for e, _ in pts])
        eps_new = float(np.interp(a_target, xs, ys))
        full, rec = probe(eps_new)
        history.append((eps_new, rec.a))
        if abs(rec.a - a_target) <= rel_tol * a_target:
            return SolveForEpsResult(
                eps=eps_new, record=rec, full=full, iterations=it,
                history=tuple(history),
            )
    raise ToleranceNotReached(
        f"a(eps) did not reach {a_target:.6e} within {max_iter} probes"
    )


@dataclass(frozen=True)
class NecessaryConditionsReport:
    eps: tuple[float, ...]
    rho: tuple[float, ...]
    rho_orig: tuple[float, ...]
    a: tuple[float, ...]
    stationarity_gap: tuple[float, ...]   # min(|M'|, |V'|) at the layer radius
    rho_increasing: bool
    rho_orig_increasing: bool
    a_increasing: bool
    stationarity_tightening: bool
    vacuous: bool
    warning: str | None


def necessary_conditions_report(
    records: list[NormalizedRecord],
) -> NecessaryConditionsReport:
    """Trend checks along a family sorted by decreasing eps.

    With a single member every trend is vacuously true and flagged as such.
    """
    recs = sorted(records, key=lambda r: -r.eps)
    gaps = [min(r.m_prime_abs, r.v_prime_abs) for r in recs]
    vacuous = len(recs) < 2
    return NecessaryConditionsReport(
        eps=tuple(r.eps for r in recs),
        rho=tuple(r.rho for r in recs),
        rho_orig=tuple(r.rho_orig for r in recs),
        a=tuple(r.a for r in recs),
        stationarity_gap=tuple(gaps),
        rho_increasing=vacuous
        or bool(np.all(np.diff([r.rho for r in recs]) > 0.0)),
        rho_orig_increasing=vacuous
        or bool(np.all(np.diff([r.rho_orig for r in recs]) > 0.0)),
        a_increasing=vacuous or bool(np.all(np.diff([r.a for r in recs]) > 0.0)),
        stationarity_tightening=vacuous or bool(np.all(np.diff(gaps) <= 1e-12)),
        vacuous=vacuous,
        warning="single member: trend checks are vacuous" if vacuous else None,
    )
