"""Bounded radial potentials and the effective concentration weight.

A solution layer sitting on the sphere of radius r feels the weight

    M_eps(r) = eps^(2(n-2)) * r^(n-1) * (1 + eps^2 V(r))^((p+3)/(2(p-1))),

and layers can only equilibrate where M_eps'(r) = 0 with nonzero curvature.
This module owns the potential families (all bounded with bounded first
derivative), the evaluation of M and its derivatives, and the critical
radius search.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .exceptions import (
    ConfigError,
    DegenerateCriticalPoint,
    EllipticityViolation,
    NoCriticalPoint,
)

__all__ = [
    "PotentialSpec",
    "EffectivePotentialPoint",
    "CriticalRadiusResult",
    "eval_M",
    "find_critical_radius",
    "stationarity_identity",
]


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """A bounded potential V on [0, inf) with declared bounds.

    bound_V >= sup |V| and bound_Vp >= sup |V'|; the constructors below set
    them from the family parameters.  The ellipticity requirement
    1 + eps^2 V >= lambda0^2 > 0 is enforced through lambda0(eps_max).
    """

    family: str
    bound_V: float
    bound_Vp: float
    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0
    coeffs: tuple[float, ...] = ()
    table_r: np.ndarray | None = field(default=None, repr=False)
    table_v: np.ndarray | None = field(default=None, repr=False)

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls(family="zero", bound_V=0.0, bound_Vp=0.0)

    @classmethod
    def sine(cls, amplitude: float = 1.0, frequency: float = 1.0, phase: float = 0.0):
        return cls(
            family="sine",
            bound_V=abs(amplitude),
            bound_Vp=abs(amplitude * frequency),
            amplitude=amplitude,
            frequency=frequency,
            phase=phase,
        )

    @classmethod
    def cosine(cls, amplitude: float = 1.0, frequency: float = 1.0, phase: float = 0.0):
        return cls(
            family="cosine",
            bound_V=abs(amplitude),
            bound_Vp=abs(amplitude * frequency),
            amplitude=amplitude,
            frequency=frequency,
            phase=phase,
        )

    @classmethod
    def bounded_poly(cls, coeffs) -> "PotentialSpec":
        """Polynomial in y = 1/(1+r): bounded on [0, inf) with bounded slope."""
        c = tuple(float(x) for x in coeffs)
        if not c:
            raise ConfigError("bounded_poly needs at least one coefficient")
        bv = sum(abs(x) for x in c)
        bvp = sum(j * abs(x) for j, x in enumerate(c))
        return cls(family="bounded_poly", bound_V=bv, bound_Vp=bvp, coeffs=c)

    @classmethod
    def tabulated(cls, r_nodes, values) -> "PotentialSpec":
        r = np.asarray(r_nodes, dtype=float)
        v = np.asarray(values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or len(r) < 2:
            raise ConfigError("tabulated potential needs matching 1-d arrays")
        if np.any(np.diff(r) <= 0):
            raise ConfigError("tabulated nodes must be strictly increasing")
        slopes = np.diff(v) / np.diff(r)
        return cls(
            family="tabulated",
            bound_V=float(np.max(np.abs(v))),
            bound_Vp=float(np.max(np.abs(slopes))),
            table_r=r,
            table_v=v,
        )

    # -- evaluation ---------------------------------------------------

    def value(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.family == "zero":
            return np.zeros_like(r)
        if self.family == "sine":
            return self.amplitude * np.sin(self.frequency * r + self.phase)
        if self.family == "cosine":
            return self.amplitude * np.cos(self.frequency * r + self.phase)
        if self.family == "bounded_poly":
            y = 1.0 / (1.0 + r)
            out = np.zeros_like(r)
            for c in reversed(self.coeffs):
                out = out * y + c
            return out
        if self.family == "tabulated":
            return np.interp(r, self.table_r, self.table_v)
        raise ConfigError(f"unknown potential family {self.family!r}")

    def deriv(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.family == "zero":
            return np.zeros_like(r)
        if self.family == "sine":
            return self.amplitude * self.frequency * np.cos(self.frequency * r + self.phase)
        if self.family == "cosine":
            return -self.amplitude * self.frequency * np.sin(self.frequency * r + self.phase)
        if self.family == "bounded_poly":
            y = 1.0 / (1.0 + r)
            dp = np.zeros_like(r)
            for j in range(len(self.coeffs) - 1, 0, -1):
                dp = dp * y + j * self.coeffs[j]
            return -dp * y * y
        if self.family == "tabulated":
            idx = np.clip(np.searchsorted(self.table_r, r, side="right") - 1, 0, len(self.table_r) - 2)
            slopes = (self.table_v[idx + 1] - self.table_v[idx]) / (
                self.table_r[idx + 1] - self.table_r[idx]
            )
            inside = (r >= self.table_r[0]) & (r <= self.table_r[-1])
            return np.where(inside, slopes, 0.0)
        raise ConfigError(f"unknown potential family {self.family!r}")

    @property
    def has_second_deriv(self) -> bool:
        return self.family in ("zero", "sine", "cosine", "bounded_poly")

    def second_deriv(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.family == "zero":
            return np.zeros_like(r)
        if self.family == "sine":
            return -self.amplitude * self.frequency**2 * np.sin(self.frequency * r + self.phase)
        if self.family == "cosine":
            return -self.amplitude * self.frequency**2 * np.cos(self.frequency * r + self.phase)
        if self.family == "bounded_poly":
            y = 1.0 / (1.0 + r)
            dp = np.zeros_like(r)
            for j in range(len(self.coeffs) - 1, 0, -1):
                dp = dp * y + j * self.coeffs[j]
            d2p = np.zeros_like(r)
            for j in range(len(self.coeffs) - 1, 1, -1):
                d2p = d2p * y + j * (j - 1) * self.coeffs[j]
            return d2p * y**4 + 2.0 * dp * y**3
        raise ConfigError(f"no second derivative for family {self.family!r}")

    def lambda0(self, eps_max: float) -> float:
        """Uniform ellipticity floor: 1 + eps^2 V >= lambda0^2 for eps <= eps_max."""
        floor = 1.0 - eps_max**2 * self.bound_V
        if floor <= 0.0:
            raise ConfigError(
                f"ellipticity lost: eps_max^2 * bound_V = {eps_max**2 * self.bound_V} >= 1"
            )
        return float(np.sqrt(floor))

    def validate_bounds(self, r_max: float = 200.0, samples: int = 20001) -> None:
        """Spot-check the declared bounds on a dense grid (raises ConfigError)."""
        r = np.linspace(0.0, r_max, samples)
        if np.max(np.abs(self.value(r))) > self.bound_V * (1 + 1e-12) + 1e-15:
            raise ConfigError("declared bound_V violated")
        if np.max(np.abs(self.deriv(r))) > self.bound_Vp * (1 + 1e-12) + 1e-15:
            raise ConfigError("declared bound_Vp violated")


@dataclass(frozen=True)
class EffectivePotentialPoint:
    r: np.ndarray
    M: np.ndarray
    Mp: np.ndarray
    Mpp: np.ndarray


def eval_M(
    spec: PotentialSpec, n: int, p: float, eps: float, r
) -> EffectivePotentialPoint:
    """Effective weight M_eps and its first two radial derivatives.

    Derivatives are analytic through the chain rule whenever the family
    provides V' and V''; the tabulated family falls back to a central
    difference of the analytic M' for the curvature.
    """
    r = np.asarray(r, dtype=float)
    q = (p + 3.0) / (2.0 * (p - 1.0))
    pref = eps ** (2 * (n - 2))

    W = 1.0 + eps**2 * spec.value(r)
    if np.any(W <= 0.0):
        raise EllipticityViolation("1 + eps^2 V <= 0 inside evaluation range")
    Vp = spec.deriv(r)

    rn1 = r ** (n - 1)
    rn2 = r ** (n - 2) if n >= 2 else r ** (n - 2)
    M = pref * rn1 * W**q
    Mp = pref * ((n - 1) * rn2 * W**q + rn1 * q * W ** (q - 1.0) * eps**2 * Vp)

    if spec.has_second_deriv:
        Vpp = spec.second_deriv(r)
        term0 = (
            (n - 1) * (n - 2) * r ** (n - 3) * W**q
            if n > 2
            else np.zeros_like(r)
        )
        Mpp = pref * (
            term0
            + 2.0 * (n - 1) * rn2 * q * W ** (q - 1.0) * eps**2 * Vp
            + rn1
            * (
                q * (q - 1.0) * W ** (q - 2.0) * eps**4 * Vp**2
                + q * W ** (q - 1.0) * eps**2 * Vpp
            )
        )
    else:
        h = 1e-6 * np.maximum(1.0, np.abs(r))
        Mp_hi = eval_M(spec, n, p, eps, r + h).Mp
        Mp_lo = eval_M(spec, n, p, eps, r - h).Mp
        Mpp = (Mp_hi - Mp_lo) / (2.0 * h)

    return EffectivePotentialPoint(r=r, M=M, Mp=Mp, Mpp=Mpp)


def stationarity_identity(
    spec: PotentialSpec, n: int, p: float, eps: float, t
) -> np.ndarray:
    """Scalar form of M'(t) = 0 after dividing out the radial power:

        2 (n-1) W^((p+3)/(2(p-1))) + ((p+3)/(p-1)) W^(2/(p-1) - 1/2) eps^2 t V'(t),

    which vanishes exactly at critical radii.
    """
    t = np.asarray(t, dtype=float)
    W = 1.0 + eps**2 * spec.value(t)
    if np.any(W <= 0.0):
        raise EllipticityViolation("1 + eps^2 V <= 0 at identity evaluation")
    e1 = (p + 3.0) / (2.0 * (p - 1.0))
    e2 = 2.0 / (p - 1.0) - 0.5
    return 2.0 * (n - 1) * W**e1 + (p + 3.0) / (p - 1.0) * W**e2 * eps**2 * t * spec.deriv(t)


@dataclass(frozen=True)
class CriticalRadiusResult:
    t_eps: float
    curvature: float           # M''(t_eps)
    roots: tuple[float, ...]   # every root located on the scan grid
    bracket: tuple[float, float]


def find_critical_radius(
    spec: PotentialSpec,
    n: int,
    p: float,
    eps: float,
    bracket: tuple[float, float],
    beta_floor: float = 0.05,
    scan_points: int = 10_000,
) -> CriticalRadiusResult:
    """Locate the smallest nondegenerate critical radius of M_eps in bracket.

    Scans M' on a uniform grid, bisects every sign change, and polishes with
    Newton on M' using the analytic curvature.  Roots whose |M''| falls below
    beta_floor are reported but not eligible.  Raises NoCriticalPoint when the
    scan finds no sign change, DegenerateCriticalPoint when roots exist but
    all are flatter than the floor.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (0.0 < lo < hi):
        raise ConfigError(f"invalid bracket {bracket}")
    grid = np.linspace(lo, hi, scan_points)
    mp = eval_M(spec, n, p, eps, grid).Mp

    def mp_scalar(r: float) -> float:
        return float(eval_M(spec, n, p, eps, np.array([r])).Mp[0])

    roots: list[float] = []
    sign = np.sign(mp)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        root = brentq(mp_scalar, grid[i], grid[i + 1], xtol=1e-13, rtol=1e-14)
        roots.append(float(root))
    for i in np.nonzero(sign == 0)[0]:
        roots.append(float(grid[i]))

    # Newton polish on M' using M''
    polished: list[float] = []
    for t in roots:
        for _ in range(8):
            pt = eval_M(spec, n, p, eps, np.array([t]))
            if abs(pt.Mpp[0]) < 1e-300:
                break
            dt = pt.Mp[0] / pt.Mpp[0]
            t -= dt
            if abs(dt) <= 1e-14 * max(1.0, abs(t)):
                break
        if lo <= t <= hi:
            polished.append(float(t))

    uniq: list[float] = []
    for t in sorted(polished):
        if not uniq or abs(t - uniq[-1]) > 1e-7 * (hi - lo):
            uniq.append(t)

    if not uniq:
        raise NoCriticalPoint(
            f"M' has no sign change in [{lo}, {hi}] (eps={eps}, family={spec.family})"
        )

    eligible = [
        t for t in uniq if abs(float(eval_M(spec, n, p, eps, np.array([t])).Mpp[0])) >= beta_floor
    ]
    if not eligible:
        raise DegenerateCriticalPoint(
            f"all critical radii in [{lo}, {hi}] have |M''| < {beta_floor}"
        )
    t_star = eligible[0]
    curv = float(eval_M(spec, n, p, eps, np.array([t_star])).Mpp[0])
    return CriticalRadiusResult(
        t_eps=t_star, curvature=curv, roots=tuple(uniq), bracket=(lo, hi)
    )
