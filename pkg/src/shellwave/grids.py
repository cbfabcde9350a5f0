"""Radial grids, weighted quadrature, discrete energy and residuals.

All rescaled computations live on a uniform grid in the stretched radial
variable s, carrying the measure s^(n-1) ds.

Two discrete pictures coexist and are kept strictly separate:

* the energy picture (energy, gradient, Hessian, Gram matrix of the
  weighted inner product), used by the reduction.  The kinetic term uses
  first differences weighted at interval midpoints and the mass terms use
  the trapezoid rule, so the Euler-Lagrange system of the discrete energy
  is the standard conservative three-point scheme: pointwise consistent,
  tridiagonal, no odd-even decoupling.  (Simpson weights inside the
  quadratic forms look more accurate but make the discrete gradient
  inconsistent at O(1): the kinetic part of row i carries the neighbours'
  alternating coefficients while the mass part carries the node's own, so
  the cancellation between -u'' and (w u - u^p) fails node by node.)
* the collocation picture (pointwise residual of the radial ODE with a
  mirror node at the origin and Dirichlet at s_max), used by the full
  Newton solver.

Scalar integrals of known samples (masses, Pohozaev terms, asymptotic
checks) go through composite Simpson, which is a quadrature question only
and free to be higher order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solve_banded
from scipy.sparse import csc_matrix

from .exceptions import ConfigError, EllipticityViolation
from .forces import PowerForce
from .potentials import PotentialSpec

__all__ = [
    "RadialGrid",
    "DiscreteOperators",
    "quadrature",
    "weighted_h1_inner",
    "energy_J",
    "energy_gradient",
    "residual_full",
    "deriv4",
]


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Uniform radial grid on [s_min, s_max] with an even interval count."""

    n: int
    s_min: float
    s_max: float
    h: float
    nodes: np.ndarray

    @classmethod
    def make(cls, n: int, s_max: float, h: float, s_min: float = 0.0) -> "RadialGrid":
        if n < 2 or int(n) != n:
            raise ConfigError(f"dimension must be an integer >= 2, got {n}")
        if not (h > 0 and s_max > s_min >= 0):
            raise ConfigError(f"bad grid request: [{s_min}, {s_max}], h={h}")
        m = int(np.ceil((s_max - s_min) / h - 1e-12))
        m += m % 2  # Simpson wants an even number of intervals
        nodes = s_min + h * np.arange(m + 1)
        return cls(n=int(n), s_min=s_min, s_max=float(nodes[-1]), h=h, nodes=nodes)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @cached_property
    def simpson_coeffs(self) -> np.ndarray:
        m = len(self.nodes) - 1
        c = np.empty(m + 1)
        if m % 2 == 0:
            c[:] = 2.0
            c[1::2] = 4.0
            c[0] = c[-1] = 1.0
            c *= self.h / 3.0
        else:
            # composite Simpson on the first m-3 intervals, 3/8 rule on the rest
            c[:] = 0.0
            head = m - 3
            ch = np.full(head + 1, 2.0)
            ch[1::2] = 4.0
            ch[0] = ch[-1] = 1.0
            c[: head + 1] += ch * self.h / 3.0
            c[head:] += np.array([1.0, 3.0, 3.0, 1.0]) * 3.0 * self.h / 8.0
        return c

    @cached_property
    def trapezoid_coeffs(self) -> np.ndarray:
        c = np.full(len(self.nodes), self.h)
        c[0] = c[-1] = self.h / 2.0
        return c

    @cached_property
    def radial_weight(self) -> np.ndarray:
        return self.nodes ** (self.n - 1)

    @cached_property
    def mid_weight(self) -> np.ndarray:
        """s^(n-1) at interval midpoints."""
        return (self.nodes[:-1] + self.h / 2.0) ** (self.n - 1)

    def refine(self) -> "RadialGrid":
        """Same span, half the step."""
        return RadialGrid.make(self.n, self.s_max, self.h / 2.0, self.s_min)


def quadrature(grid: RadialGrid, samples: np.ndarray) -> float:
    """integral of f(s) s^(n-1) ds over the grid by composite Simpson."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape != grid.nodes.shape:
        raise ConfigError(
            f"sample length {samples.shape} does not match grid {grid.nodes.shape}"
        )
    return float(np.dot(grid.simpson_coeffs * grid.radial_weight, samples))


def _banded_to_csc(ab: np.ndarray) -> csc_matrix:
    """Symmetric tridiagonal matrix from scipy upper-banded storage."""
    m = ab.shape[1]
    i = np.arange(m)
    rows = [i, i[:-1], i[1:]]
    cols = [i, i[1:], i[:-1]]
    vals = [ab[1], ab[0, 1:], ab[0, 1:]]
    return csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(m, m),
    )


def deriv4(grid: RadialGrid, u: np.ndarray, even_origin: bool = True) -> np.ndarray:
    """Fourth-order first derivative, used only by integral audits.

    Assumes an even extension through s=0 when the grid starts at the origin
    (mirror node), and degrades to low order at the far end where profiles
    have already decayed to roundoff.
    """
    h = grid.h
    du = np.empty_like(u)
    du[2:-2] = (-u[4:] + 8.0 * u[3:-1] - 8.0 * u[1:-3] + u[:-4]) / (12.0 * h)
    if even_origin and grid.s_min == 0.0:
        du[0] = 0.0
        du[1] = (-u[3] + 8.0 * u[2] - 8.0 * u[0] + u[1]) / (12.0 * h)
    else:
        du[0] = (u[1] - u[0]) / h
        du[1] = (u[2] - u[0]) / (2.0 * h)
    du[-2] = (u[-1] - u[-3]) / (2.0 * h)
    du[-1] = (u[-1] - u[-2]) / h
    return du


class DiscreteOperators:
    """Cached discrete calculus for one (grid, eps, potential, p) quadruple."""

    def __init__(self, grid: RadialGrid, eps: float, spec: PotentialSpec, p: float):
        self.grid = grid
        self.eps = float(eps)
        self.spec = spec
        self.p = float(p)
        self.force = PowerForce(p)
        s = grid.nodes
        self.h = grid.h
        self.omega = grid.simpson_coeffs * grid.radial_weight
        self.mass_w = grid.trapezoid_coeffs * grid.radial_weight
        self.kin_w = grid.mid_weight / grid.h
        self.w = 1.0 + eps**2 * spec.value(eps * s)
        if np.any(self.w <= 0.0):
            raise EllipticityViolation(
                f"1 + eps^2 V <= 0 on the grid (eps={eps}, family={spec.family})"
            )
        self._gram_banded = self._assemble_gram()
        self._gram_cho = cholesky_banded(self._gram_banded, lower=False)

    # ---- weighted inner product and Gram matrix ----------------------

    def quad(self, f: np.ndarray, extra: np.ndarray | None = None) -> float:
        if extra is None:
            return float(np.dot(self.omega, f))
        return float(np.dot(self.omega, extra * f))

    def kinetic_form(self, u: np.ndarray, v: np.ndarray | None = None) -> float:
        du = np.diff(u)
        dv = du if v is None else np.diff(v)
        return float(np.dot(self.kin_w, du * dv))

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return self.kinetic_form(u, v) + float(np.dot(self.mass_w * self.w, u * v))

    def norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(u, u), 0.0)))

    def norm_eps(self, u: np.ndarray) -> float:
        """Scaled-gradient norm sqrt(int s^(n-1) (eps^2 u'^2 + u^2))."""
        val = self.eps**2 * self.kinetic_form(u) + np.dot(self.mass_w, u * u)
        return float(np.sqrt(max(val, 0.0)))

    def _assemble_gram(self) -> np.ndarray:
        m = self.grid.size
        kin = self.kin_w
        ab = np.zeros((2, m))
        ab[1] = self.mass_w * self.w
        ab[1, :-1] += kin
        ab[1, 1:] += kin
        ab[0, 1:] = -kin
        return ab

    def gram_mul(self, v: np.ndarray) -> np.ndarray:
        ab = self._gram_banded
        out = ab[1] * v
        out[1:] += ab[0, 1:] * v[:-1]
        out[:-1] += ab[0, 1:] * v[1:]
        return out

    def riesz(self, g: np.ndarray) -> np.ndarray:
        """Representative of the functional v -> g.v in the weighted product."""
        return cho_solve_banded((self._gram_cho, False), g)

    def dual_norm(self, g: np.ndarray) -> float:
        return float(np.sqrt(max(np.dot(g, self.riesz(g)), 0.0)))

    def gram_csc(self) -> csc_matrix:
        return _banded_to_csc(self._gram_banded)

    # ---- energy picture ----------------------------------------------

    def energy(self, u: np.ndarray) -> float:
        return float(
            0.5 * self.kinetic_form(u)
            + 0.5 * np.dot(self.mass_w * self.w, u * u)
            - np.dot(self.mass_w, self.force.energy_density(u))
        )

    def grad(self, u: np.ndarray) -> np.ndarray:
        """Vector g with <J'(u), v> = g . v for every grid direction v."""
        return self.gram_mul(u) - self.mass_w * self.force.f(u)

    def hess_banded(self, u: np.ndarray) -> np.ndarray:
        """Upper banded (tridiagonal) form of the symmetric discrete J''(u)."""
        ab = self._gram_banded.copy()
        ab[1] -= self.mass_w * self.force.fp(u)
        return ab

    def hess_csc(self, u: np.ndarray) -> csc_matrix:
        return _banded_to_csc(self.hess_banded(u))

    def hess_quadform(self, u: np.ndarray, v: np.ndarray) -> float:
        return self.kinetic_form(v) + float(
            np.dot(self.mass_w * (self.w - self.force.fp(u)), v * v)
        )

    # ---- collocation picture ------------------------------------------

    def strong_residual(self, u: np.ndarray, force=None, origin: str = "mirror") -> np.ndarray:
        """Pointwise residual of -u'' - (n-1)/s u' + w u - f(u) with BC rows.

        Needs the grid to start at the origin; the first row uses the
        symmetric limit -n u''(0) (mirror node) unless origin="dirichlet",
        and the last row is the Dirichlet condition u(s_max) = 0.
        """
        if self.grid.s_min != 0.0:
            raise ConfigError("collocation residual requires a grid starting at 0")
        if force is None:
            force = self.force
        s = self.grid.nodes
        h = self.h
        n = self.grid.n
        R = np.empty_like(u)
        # difference-of-differences: on monotone stretches the first
        # differences are exact, so the evaluation floor is ~eps*|u''|
        # instead of ~eps*|u|/h^2 (matters for the residual invariant)
        fwd = u[1:] - u[:-1]
        lap = (fwd[1:] - fwd[:-1]) / h**2 + (
            (n - 1) / s[1:-1]
        ) * (u[2:] - u[:-2]) / (2.0 * h)
        R[1:-1] = -lap + self.w[1:-1] * u[1:-1] - force.f(u[1:-1])
        if origin == "mirror":
            R[0] = -2.0 * n * (u[1] - u[0]) / h**2 + self.w[0] * u[0] - force.f(u[0])
        elif origin == "dirichlet":
            R[0] = u[0]
        else:
            raise ConfigError(f"unknown origin treatment {origin!r}")
        R[-1] = u[-1]
        return R

    def strong_jacobian(self, u: np.ndarray, force=None, origin: str = "mirror") -> np.ndarray:
        """Tridiagonal Jacobian of strong_residual in solve_banded (1,1) layout."""
        if force is None:
            force = self.force
        s = self.grid.nodes
        h = self.h
        n = self.grid.n
        m = self.grid.size
        ab = np.zeros((3, m))
        transport = (n - 1) / (2.0 * h * s[1:-1])
        ab[0, 2:] = -1.0 / h**2 - transport          # superdiagonal for rows 1..m-2
        ab[1, 1:-1] = 2.0 / h**2 + self.w[1:-1] - force.fp(u[1:-1])
        ab[2, :-2] = -1.0 / h**2 + transport          # subdiagonal
        if origin == "mirror":
            ab[1, 0] = 2.0 * n / h**2 + self.w[0] - force.fp(np.asarray(u[0]))
            ab[0, 1] = -2.0 * n / h**2
        else:
            ab[1, 0] = 1.0
            ab[0, 1] = 0.0
        ab[1, -1] = 1.0
        ab[2, -2] = 0.0
        return ab

    def solve_strong_linear(self, ab: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        return solve_banded((1, 1), ab, rhs)


# ---- thin functional wrappers over DiscreteOperators -------------------


def weighted_h1_inner(
    grid: RadialGrid, eps: float, spec: PotentialSpec, u: np.ndarray, v: np.ndarray
) -> float:
    return DiscreteOperators(grid, eps, spec, p=2.0).inner(u, v)


def energy_J(
    grid: RadialGrid, eps: float, spec: PotentialSpec, p: float, u: np.ndarray
) -> float:
    return DiscreteOperators(grid, eps, spec, p).energy(u)


def energy_gradient(
    grid: RadialGrid, eps: float, spec: PotentialSpec, p: float, u: np.ndarray
) -> np.ndarray:
    return DiscreteOperators(grid, eps, spec, p).grad(u)


def residual_full(
    grid: RadialGrid,
    eps: float,
    spec: PotentialSpec,
    p: float,
    u: np.ndarray,
    force=None,
    origin: str = "mirror",
) -> np.ndarray:
    return DiscreteOperators(grid, eps, spec, p).strong_residual(u, force, origin)
