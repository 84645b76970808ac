"""Closed-form oracles for the symmetric two-atom source and the sine kernel.

For the source with atoms at +-a (equal weight, a > 1) the limiting density
has the algebraic form rho(x) = Im(xi(x)) / pi, where xi is the root of

    xi^3 - z*xi^2 - (a^2 - 1)*xi + a^2*z = 0

that behaves like z at infinity, continued down to the real axis from above.
The support edges are the images of the real critical points of the inverse
map z(xi).  These provide an independent cross-check for the fixed-point
solver, and the sine-kernel determinant is the universal limit for rescaled
bulk correlations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

REAL_AXIS_OFFSET = 1e-8


@dataclass(frozen=True)
class BkParameters:
    a: float
    alpha: float  # outer edge
    beta: float  # inner edge; support is [-alpha,-beta] U [beta, alpha]

    @property
    def intervals(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return ((-self.alpha, -self.beta), (self.beta, self.alpha))


def bk_branch(z: complex, a: float) -> complex:
    """The cubic root with xi ~ z as z -> infinity, tracked down to z.

    Real z is lifted to z + i*1e-8.  Tracking starts at Im = 1e3*(1+a) and
    halves the height until z is reached, following the nearest companion-
    matrix root at each rung.
    """
    if a <= 1:
        raise ValueError("closed-form branch requires a > 1")
    z = complex(z)
    if z.imag < 0:
        raise ValueError("bk_branch expects Im z >= 0")
    im = max(z.imag, REAL_AXIS_OFFSET)
    t_start = 1e3 * (1.0 + a)
    out = _kernels.cubic_branch_batch(np.array([z.real]), a, im, t_start)
    return complex(out[0])


def bk_branch_grid(xs: np.ndarray, a: float, im: float = REAL_AXIS_OFFSET) -> np.ndarray:
    if a <= 1:
        raise ValueError("closed-form branch requires a > 1")
    return _kernels.cubic_branch_batch(np.asarray(xs, dtype=float), a, im, 1e3 * (1.0 + a))


DENSITY_FLOOR = 1e-7  # below the i*1e-8 lift's leakage resolution


def bk_density(x, a: float):
    """Density of the +-a source at real x: Im(branch)/pi clipped at zero.

    Values below 1e-7 are reported as exactly zero: the real-axis offset
    leaks that much imaginary part into gaps, so smaller densities are not
    resolvable anyway.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    rho = np.clip(bk_branch_grid(xs, a).imag / np.pi, 0.0, None)
    rho[rho < DENSITY_FLOOR] = 0.0
    return float(rho[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else rho


def bk_support(a: float) -> BkParameters:
    """Support edges for the +-a source, a > 1.

    The inverse map z(xi) = (xi^3 - (a^2-1) xi)/(xi^2 - a^2) has four real
    critical points +-xi_1, +-xi_2 solving a biquadratic; their images give
    the edges.  Validated against a density sign change across each edge.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if a == 1.0:
        raise ValueError("a = 1 is the critical single/double-interval transition")
    if a < 1:
        raise ValueError("single-interval regime (0 < a < 1): use the fixed-point solver")
    # critical points: xi^4 - (2a^2+1) xi^2 + a^2(a^2-1) = 0
    quart = np.array([1.0, 0.0, -(2 * a * a + 1), 0.0, a * a * (a * a - 1)])
    roots = np.roots(quart)
    xis = np.array(sorted(r.real for r in roots if abs(r.imag) < 1e-9 and r.real > 0))
    if xis.size != 2:
        raise RuntimeError(f"expected 2 positive critical points, found {xis}")
    zs = (xis**3 - (a * a - 1) * xis) / (xis**2 - a * a)
    beta, alpha = np.sort(np.abs(zs))
    probe = min(1e-4 * max(1.0, alpha), 0.4 * beta, 0.4 * (alpha - beta))
    if probe > 1e-7:  # nearly-touching intervals leave no room for the probe
        # the i*1e-8 lift leaks ~ 1e-8/sqrt(probe) outside; sqrt growth inside
        cut = max(1e-5, 20.0 * REAL_AXIS_OFFSET / np.sqrt(probe) / np.pi)
        for edge in (beta, alpha):
            lo = bk_density(np.array([edge - probe]), a)[0]
            hi = bk_density(np.array([edge + probe]), a)[0]
            if (lo > cut) == (hi > cut):
                raise RuntimeError(f"edge {edge} not confirmed by a density sign change")
    return BkParameters(a=float(a), alpha=float(alpha), beta=float(beta))


def sine_kernel(u: float, v: float) -> float:
    """sin(pi(u-v)) / (pi(u-v)) with the removable singularity set to 1."""
    return float(np.sinc(u - v))


def sine_correlation(points) -> float:
    """Determinant of the sine-kernel matrix K(u_i, u_j) over the points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 1 or pts.size < 1:
        raise ValueError("need a 1-d sequence of at least one point")
    K = np.sinc(pts[:, None] - pts[None, :])
    return float(np.linalg.det(K))
