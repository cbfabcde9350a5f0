"""Layer ansatz: origin cutoff, manifold element z, its rho-derivative,
remainder-set membership, and the gradient-scaling diagnostic.

z places a 1D ground-state profile at radius rho with local dispersion
beta = (1 + eps^2 V(eps rho))^(1/2), multiplied by a cutoff vanishing
near the origin.  rho ranges over the configuration window
[C1/(2 eps^3), 2 C2/eps^3].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigError, OutOfConfigurationSet
from .grids import DiscreteOperators, RadialGrid
from .ground_state import GroundStateProfile
from .potentials import PotentialSpec

__all__ = [
    "AnsatzParams",
    "cutoff",
    "build_z",
    "build_zdot",
    "MembershipReport",
    "membership_E",
    "GradientScalingRow",
    "gradient_norm_scaling",
    "grid_for",
]

# p <= ~1 makes the decay-rate window lambda0/min{p,2} < lambda1 < lambda0
# collapse; reject early rather than emit garbage profiles
P_FLOOR = 1.05


@dataclass(frozen=True)
class AnsatzParams:
    """Frozen parameter bundle for one (eps, rho) manifold element."""

    n: int
    p: float
    eps: float
    rho: float
    C1: float
    C2: float
    gamma: float
    lambda0: float
    lambda1: float
    eta: float

    @classmethod
    def make(
        cls,
        n: int,
        p: float,
        eps: float,
        rho: float,
        spec: PotentialSpec,
        C1: float,
        C2: float,
        gamma: float = 2.0,
        eta: float | None = None,
        eps_max: float | None = None,
    ) -> "AnsatzParams":
        if p <= P_FLOOR:
            raise ConfigError(
                f"p={p} rejected: the decay window lambda0/min(p,2) < lambda1 "
                f"nearly closes for p near 1 (floor {P_FLOOR})"
            )
        if n < 2:
            raise ConfigError(f"need n >= 2, got {n}")
        if not (eps > 0 and C1 > 0 and C2 > 0 and gamma > 0):
            raise ConfigError("eps, C1, C2, gamma must be positive")
        lam0 = spec.lambda0(eps_max if eps_max is not None else eps)
        if eta is None:
            eta = 0.05 * lam0
        lam1 = lam0 - eta
        if not (lam1 > lam0 / min(p, 2.0)):
            raise ConfigError(
                f"eta={eta} leaves lambda1={lam1} outside "
                f"({lam0 / min(p, 2.0)}, {lam0})"
            )
        params = cls(
            n=int(n), p=float(p), eps=float(eps), rho=float(rho),
            C1=float(C1), C2=float(C2), gamma=float(gamma),
            lambda0=float(lam0), lambda1=float(lam1), eta=float(eta),
        )
        params._check_rho()
        beta = params.beta(spec)
        if beta < lam0 - 1e-12:
            raise OutOfConfigurationSet(
                f"beta(eps rho)={beta} dips below lambda0={lam0}"
            )
        return params

    def _check_rho(self) -> None:
        lo, hi = self.omega_window
        if not (lo <= self.rho <= hi):
            raise OutOfConfigurationSet(
                f"rho={self.rho} outside [{lo}, {hi}] at eps={self.eps}"
            )

    @property
    def omega_window(self) -> tuple[float, float]:
        e3 = self.eps**3
        return (self.C1 / (2.0 * e3), 2.0 * self.C2 / e3)

    def with_rho(self, rho: float) -> "AnsatzParams":
        out = replace(self, rho=float(rho))
        out._check_rho()
        return out

    def beta(self, spec: PotentialSpec) -> float:
        return math.sqrt(1.0 + self.eps**2 * float(spec.value(self.eps * self.rho)))

    def profile(self, spec: PotentialSpec) -> GroundStateProfile:
        return GroundStateProfile(p=self.p, lam=self.beta(spec))


def grid_for(params: AnsatzParams, h: float, rho_max: float | None = None,
             tail: float = 40.0) -> RadialGrid:
    """Grid from the origin past the layer, with tail/lambda0 of decay room."""
    top = params.rho if rho_max is None else rho_max
    return RadialGrid.make(params.n, top + tail / params.lambda0, h)


def cutoff(params: AnsatzParams, r):
    """Quintic smoothstep ramp from 0 at C1/(16 eps^3) to 1 at C1/(8 eps^3)."""
    lo = params.C1 / (16.0 * params.eps**3)
    hi = params.C1 / (8.0 * params.eps**3)
    t = np.clip((np.asarray(r, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def _coverage_check(params: AnsatzParams, grid: RadialGrid) -> None:
    need = params.rho + 40.0 / params.lambda0
    if grid.s_max < need - 1e-9:
        raise ConfigError(
            f"grid ends at {grid.s_max}, needs to cover rho + 40/lambda0 = {need}"
        )
    if grid.s_min != 0.0:
        raise ConfigError("ansatz grids start at the origin")


def build_z(params: AnsatzParams, spec: PotentialSpec, grid: RadialGrid) -> np.ndarray:
    """Manifold element z(s) = cutoff(s) * Q_beta(s - rho)."""
    params._check_rho()
    _coverage_check(params, grid)
    prof = params.profile(spec)
    return cutoff(params, grid.nodes) * prof.value(grid.nodes - params.rho)


def build_zdot(params: AnsatzParams, spec: PotentialSpec, grid: RadialGrid) -> np.ndarray:
    """d z / d rho: dispersion drift through beta(eps rho) plus translation.

    The dispersion term differentiates the closed-form profile in lambda^2
    (lambda^2 = 1 + eps^2 V(eps rho), so d lambda^2/d rho = eps^3 V'(eps rho)).
    """
    params._check_rho()
    _coverage_check(params, grid)
    prof = params.profile(spec)
    s = grid.nodes - params.rho
    dlam2 = params.eps**3 * float(spec.deriv(params.eps * params.rho))
    drift = dlam2 * prof.dvalue_dlambda_sq(s) if dlam2 != 0.0 else 0.0
    return cutoff(params, grid.nodes) * (drift - prof.derivative(s))


@dataclass(frozen=True)
class MembershipReport:
    """Margins of a remainder against the contraction set.

    norm_margin = gamma eps^3 ||z|| - ||omega||  (>= 0 when inside)
    envelope_margin = gamma - max over r in [0, rho] of
                      |omega(r)| e^{lambda1 (rho - r)}
    """

    member: bool
    norm_value: float
    norm_bound: float
    norm_margin: float
    envelope_sup: float
    envelope_margin: float
    worst_node: float


def membership_E(
    params: AnsatzParams,
    spec: PotentialSpec,
    grid: RadialGrid,
    omega: np.ndarray,
) -> MembershipReport:
    ops = DiscreteOperators(grid, params.eps, spec, params.p)
    z = build_z(params, spec, grid)
    norm_value = ops.norm(omega)
    norm_bound = params.gamma * params.eps**3 * ops.norm(z)
    inside = grid.nodes <= params.rho
    # weighted sup: |omega| against gamma e^{-lambda1 (rho - r)}
    scaled = np.abs(omega[inside]) * np.exp(
        params.lambda1 * (params.rho - grid.nodes[inside])
    )
    k = int(np.argmax(scaled))
    envelope_sup = float(scaled[k])
    report = MembershipReport(
        member=bool(norm_value <= norm_bound and envelope_sup <= params.gamma),
        norm_value=float(norm_value),
        norm_bound=float(norm_bound),
        norm_margin=float(norm_bound - norm_value),
        envelope_sup=envelope_sup,
        envelope_margin=float(params.gamma - envelope_sup),
        worst_node=float(grid.nodes[inside][k]),
    )
    return report


@dataclass(frozen=True)
class GradientScalingRow:
    eps: float
    rho: float
    grad_dual_norm: float
    z_norm: float
    ratio: float


def gradient_norm_scaling(
    params_list: list[AnsatzParams],
    spec: PotentialSpec,
    h: float = 0.02,
) -> list[GradientScalingRow]:
    """Dual norm of the energy gradient at z, against the eps^3 ||z|| scale.

    The ratio staying bounded across an eps-sweep is the discrete analogue
    of the first a-priori estimate behind the reduction.
    """
    rows = []
    for params in params_list:
        grid = grid_for(params, h)
        ops = DiscreteOperators(grid, params.eps, spec, params.p)
        z = build_z(params, spec, grid)
        dual = ops.dual_norm(ops.grad(z))
        zn = ops.norm(z)
        rows.append(
            GradientScalingRow(
                eps=params.eps,
                rho=params.rho,
                grad_dual_norm=float(dual),
                z_norm=float(zn),
                ratio=float(dual / (params.eps**3 * zn)),
            )
        )
    return rows
