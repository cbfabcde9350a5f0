"""One-dimensional ground state of -u'' + lam^2 u = u^p and its linearization.

The profile has the closed form

    Q_lam(s) = ((p+1) lam^2 / 2)^(1/(p-1)) * sech((p-1) lam s / 2)^(2/(p-1)),

positive, even, exponentially decaying like exp(-lam |s|).  Everything else
in the package is built on top of this profile: quadrature constants, the
linearized operator -d^2/ds^2 + lam^2 - p Q^(p-1), and an independent
shooting cross-check used to validate the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal, null_space
from scipy.special import gamma as _gamma

from .exceptions import (
    ConfigError,
    EigensolverError,
    ShootingBracketError,
    ToleranceNotReached,
)

__all__ = [
    "GroundStateProfile",
    "GroundStateConstants",
    "NondegeneracyReport",
    "sphere_area",
    "eval_ground_state",
    "ground_state_constants",
    "shoot_ground_state",
    "linearized_spectrum",
    "nondegeneracy_report",
]


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n: 2 pi^(n/2) / Gamma(n/2)."""
    if n < 1:
        raise ConfigError(f"dimension must be >= 1, got {n}")
    return float(2.0 * np.pi ** (n / 2.0) / _gamma(n / 2.0))


@dataclass(frozen=True)
class GroundStateProfile:
    """Closed-form even positive solution of -u'' + lam^2 u = u^p on R."""

    p: float
    lam: float = 1.0

    def __post_init__(self) -> None:
        if not self.p > 1.0:
            raise ConfigError(f"exponent p must exceed 1, got {self.p}")
        if not self.lam > 0.0:
            raise ConfigError(f"lam must be positive, got {self.lam}")

    @property
    def amplitude(self) -> float:
        """Peak value Q_lam(0) = ((p+1) lam^2 / 2)^(1/(p-1))."""
        return float(((self.p + 1.0) * self.lam**2 / 2.0) ** (1.0 / (self.p - 1.0)))

    @property
    def sech_rate(self) -> float:
        """Argument rate kappa = (p-1) lam / 2 inside the sech."""
        return 0.5 * (self.p - 1.0) * self.lam

    @property
    def sech_power(self) -> float:
        return 2.0 / (self.p - 1.0)

    def _sech_pow(self, x: np.ndarray, m: float) -> np.ndarray:
        # sech(x)^m written in exponentials so large |x| underflows cleanly
        # instead of overflowing cosh.
        ax = np.abs(x)
        return np.exp(m * (np.log(2.0) - ax - np.log1p(np.exp(-2.0 * ax))))

    def value(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return self.amplitude * self._sech_pow(self.sech_rate * s, self.sech_power)

    def derivative(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        x = self.sech_rate * s
        return -self.sech_power * self.sech_rate * np.tanh(x) * self.value(s)

    def second_derivative(self, s) -> np.ndarray:
        # straight from the defining ODE, valid everywhere
        q = self.value(s)
        return self.lam**2 * q - q**self.p

    def dvalue_dlambda_sq(self, s) -> np.ndarray:
        """Derivative of the profile with respect to lam^2 at fixed s.

        Writing U_V(s) = V^(1/(p-1)) Q_1(sqrt(V) s) with V = lam^2 gives

            dU/dV = lam^(2/(p-1)-2) [ Q_1(lam s)/(p-1) + (lam s / 2) Q_1'(lam s) ].
        """
        s = np.asarray(s, dtype=float)
        base = GroundStateProfile(self.p, 1.0)
        pref = self.lam ** (2.0 / (self.p - 1.0) - 2.0)
        return pref * (
            base.value(self.lam * s) / (self.p - 1.0)
            + 0.5 * self.lam * s * base.derivative(self.lam * s)
        )


def eval_ground_state(profile: GroundStateProfile, s) -> np.ndarray:
    """Evaluate the closed-form profile at s (scalar or array)."""
    return profile.value(s)


@dataclass(frozen=True)
class GroundStateConstants:
    """Quadrature constants of a profile, plus derived prefactors.

    mass_full    = int_R Q^2
    kinetic_half = int_0^inf (Q')^2
    lp1_full     = int_R Q^(p+1)
    energy_const = (1/2 - 1/(p+1)) lp1_full      (equals 2*kinetic_half)
    mass_const   = 2 (p+3)/(p-1) kinetic_half    (equals mass_full)
    B_const      = sphere_area(n) * mass_full
    """

    p: float
    lam: float
    n: int
    mass_full: float
    kinetic_half: float
    lp1_full: float
    energy_const: float
    mass_const: float
    B_const: float


def _simpson(vals: np.ndarray, h: float) -> float:
    # composite Simpson; vals must have an odd length (even interval count)
    if len(vals) % 2 == 0:
        raise ValueError("Simpson rule needs an even number of intervals")
    acc = vals[0] + vals[-1] + 4.0 * vals[1:-1:2].sum() + 2.0 * vals[2:-2:2].sum()
    return float(acc * h / 3.0)


def ground_state_constants(
    profile: GroundStateProfile,
    n: int,
    tol: float = 1e-10,
    tail: float = 40.0,
    step: float = 1e-3,
) -> GroundStateConstants:
    """Integrate the profile on [0, tail/lam] with step refinement until stable.

    The tail bound exp(-2 lam S) with S = tail/lam is far below tol, so the
    truncation never dominates.  Raises ToleranceNotReached if halving the
    step three times fails to stabilize the integrals.
    """
    S = tail / profile.lam

    def integrals(h: float) -> tuple[float, float, float]:
        m = int(np.ceil(S / h))
        m += m % 2
        s = np.linspace(0.0, S, m + 1)
        hh = s[1] - s[0]
        q = profile.value(s)
        qp = profile.derivative(s)
        return (
            2.0 * _simpson(q**2, hh),
            _simpson(qp**2, hh),
            2.0 * _simpson(q ** (profile.p + 1.0), hh),
        )

    prev = integrals(step)
    h = step
    for _ in range(3):
        h /= 2.0
        cur = integrals(h)
        err = max(abs(a - b) / max(1.0, abs(b)) for a, b in zip(prev, cur))
        if err <= tol:
            break
        prev = cur
    else:
        raise ToleranceNotReached(
            f"ground-state quadrature did not stabilize to {tol}"
        )

    mass_full, kinetic_half, lp1_full = cur
    p = profile.p
    return GroundStateConstants(
        p=p,
        lam=profile.lam,
        n=n,
        mass_full=mass_full,
        kinetic_half=kinetic_half,
        lp1_full=lp1_full,
        energy_const=(0.5 - 1.0 / (p + 1.0)) * lp1_full,
        mass_const=2.0 * (p + 3.0) / (p - 1.0) * kinetic_half,
        B_const=sphere_area(n) * mass_full,
    )


def _integrate_shot(
    p: float, lam: float, amp: float, step: float, s_end: float
) -> tuple[int, np.ndarray]:
    """Explicit midpoint integration of u'' = lam^2 u - |u|^(p-1) u from (amp, 0).

    Returns (verdict, trajectory): verdict +1 if u crossed zero (overshoot),
    -1 if u' turned positive (undershoot), 0 if neither happened by s_end.
    Trajectory holds u at every node, valid up to the event.
    """
    nsteps = int(round(s_end / step))
    u, v = amp, 0.0
    lam2 = lam * lam
    traj = np.empty(nsteps + 1)
    traj[0] = u
    verdict = 0
    for i in range(1, nsteps + 1):
        fu = lam2 * u - abs(u) ** (p - 1.0) * u
        um = u + 0.5 * step * v
        vm = v + 0.5 * step * fu
        fum = lam2 * um - abs(um) ** (p - 1.0) * um
        u += step * vm
        v += step * fum
        traj[i] = u
        if u < 0.0:
            verdict = 1
            traj[i:] = 0.0
            break
        if v > 0.0:
            verdict = -1
            traj[i:] = u
            break
    return verdict, traj


@dataclass(frozen=True)
class ShotProfile:
    nodes: np.ndarray
    values: np.ndarray
    amplitude: float


def shoot_ground_state(
    p: float,
    lam: float,
    step: float = 1e-3,
    s_out: float | None = None,
) -> ShotProfile:
    """Independent shooting construction of the even ground state on [0, s_out].

    Bisects the initial amplitude between undershoot (orbit turns back up)
    and overshoot (orbit crosses zero).  Deliberately avoids the closed form;
    the bracket starts just above the constant equilibrium lam^(2/(p-1)).
    Integration is second order (explicit midpoint), so the returned profile
    deviates from the exact one by O(step^2).
    """
    if s_out is None:
        s_out = 10.0 / lam
    s_end = s_out + 5.0 / lam

    equilibrium = lam ** (2.0 / (p - 1.0))
    lo = 1.02 * equilibrium
    verdict, _ = _integrate_shot(p, lam, lo, step, s_end)
    if verdict != -1:
        raise ShootingBracketError("expected undershoot just above equilibrium")
    hi = lo
    for _ in range(40):
        hi *= 1.5
        verdict, _ = _integrate_shot(p, lam, hi, step, s_end)
        if verdict == 1:
            break
    else:
        raise ShootingBracketError("no overshoot amplitude found")

    for _ in range(200):
        if (hi - lo) <= 1e-15 * hi:
            break
        mid = 0.5 * (lo + hi)
        verdict, _ = _integrate_shot(p, lam, mid, step, s_end)
        if verdict == 1:
            hi = mid
        elif verdict == -1:
            lo = mid
        else:
            break

    amp = 0.5 * (lo + hi)
    _, traj = _integrate_shot(p, lam, amp, step, s_end)
    n_out = int(round(s_out / step))
    nodes = step * np.arange(n_out + 1)
    return ShotProfile(nodes=nodes, values=traj[: n_out + 1], amplitude=amp)


def linearized_spectrum(
    profile: GroundStateProfile,
    half_width: float | None = None,
    step: float = 1e-2,
    k: int = 2,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lowest k eigenpairs of -d^2/ds^2 + lam^2 - p Q^(p-1) with zero BCs.

    Discretized by second differences on (-W, W); returns (eigenvalues,
    eigenvectors, nodes) with eigenvectors l2-normalized, sign fixed so the
    largest-magnitude component is positive.
    """
    if half_width is None:
        half_width = 20.0 / profile.lam
    if half_width < 10.0 / profile.lam:
        raise ConfigError("domain too small for the requested spectrum")
    m = int(round(2.0 * half_width / step))
    nodes = -half_width + step * np.arange(1, m)
    pot = profile.lam**2 - profile.p * profile.value(nodes) ** (profile.p - 1.0)
    diag = 2.0 / step**2 + pot
    off = np.full(m - 2, -1.0 / step**2)
    try:
        vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))
    except Exception as exc:  # pragma: no cover - backend failure
        raise EigensolverError(str(exc)) from exc
    for j in range(vecs.shape[1]):
        i = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[i, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return vals, vecs, nodes


@dataclass(frozen=True)
class NondegeneracyReport:
    """Numerical check of the kernel structure of the linearized operator."""

    quad_form_qq: float          # quadratic form evaluated at Q itself
    quad_form_qq_ref: float      # closed-form reference (1-p) * lp1_full
    eigenvalues: np.ndarray      # lowest two eigenvalues
    kernel_cosine: float         # |cos| between the second eigenvector and Q'
    complement_floor: float      # min Rayleigh quotient orthogonal to {Q, Q'}


def nondegeneracy_report(
    profile: GroundStateProfile,
    half_width: float | None = None,
    step: float = 1e-2,
    floor_step: float = 0.05,
) -> NondegeneracyReport:
    """Spectral audit of L = -d^2/ds^2 + lam^2 - p Q^(p-1).

    Reports the quadratic form at Q (strictly negative), the lowest two
    eigenvalues (one negative, one numerically zero with eigenfunction
    parallel to Q'), and the minimum H^1 Rayleigh quotient on the complement
    of span{Q, Q'}, which must be strictly positive.  Orthogonality and the
    quotient both use the flat H^1 inner product int(v'w' + vw).
    """
    if half_width is None:
        half_width = 20.0 / profile.lam

    # quadratic form at Q by quadrature
    S = half_width
    m = int(np.ceil(2 * S / step))
    m += m % 2
    s = np.linspace(-S, S, m + 1)
    h = s[1] - s[0]
    q = profile.value(s)
    qp = profile.derivative(s)
    integrand = qp**2 + profile.lam**2 * q**2 - profile.p * q ** (profile.p + 1.0)
    form_qq = _simpson(integrand, h)
    lp1 = _simpson(q ** (profile.p + 1.0), h)
    form_ref = (1.0 - profile.p) * lp1

    vals, vecs, nodes = linearized_spectrum(profile, half_width, step, k=2)
    qp_nodes = profile.derivative(nodes)
    cos = float(
        abs(np.dot(vecs[:, 1], qp_nodes))
        / (np.linalg.norm(vecs[:, 1]) * np.linalg.norm(qp_nodes))
    )

    # complement Rayleigh floor on a coarser grid (dense reduced eigenproblem)
    mf = int(round(2.0 * half_width / floor_step))
    nf = -half_width + floor_step * np.arange(1, mf)
    hf = floor_step
    pot = profile.lam**2 - profile.p * profile.value(nf) ** (profile.p - 1.0)
    main = 2.0 / hf**2
    L = np.diag(main + pot)
    B = np.diag(np.full(mf - 1, main + 1.0))
    idx = np.arange(mf - 2)
    L[idx, idx + 1] = L[idx + 1, idx] = -1.0 / hf**2
    B[idx, idx + 1] = B[idx + 1, idx] = -1.0 / hf**2
    qf = profile.value(nf)
    qpf = profile.derivative(nf)
    constraints = np.vstack([qf @ B, qpf @ B])
    Z = null_space(constraints)
    try:
        floor_vals = eigh(
            Z.T @ L @ Z, Z.T @ B @ Z, subset_by_index=[0, 0], eigvals_only=True
        )
    except Exception as exc:  # pragma: no cover
        raise EigensolverError(str(exc)) from exc

    return NondegeneracyReport(
        quad_form_qq=form_qq,
        quad_form_qq_ref=form_ref,
        eigenvalues=vals,
        kernel_cosine=cos,
        complement_floor=float(floor_vals[0]),
    )
