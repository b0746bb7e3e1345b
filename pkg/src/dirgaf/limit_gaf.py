"""The limit Gaussian analytic process: kernels, samplers, and conformal transports.

The limit of the scaled series is a centered Gaussian analytic function on the
right half-plane whose law is pinned down by two kernels: the plain product
moment E[X(z1) X(z2)] and the conjugated one E[X(z1) conj(X(z2))].  Two
independent sampling routes are provided (finite-dimensional Cholesky and a
discretized Brownian stochastic integral); their agreement is the module's
strongest self-check.  Time changes connect the half-plane process to power
series on the unit disk and to a stationary process on a horizontal strip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator
from scipy.special import gamma, gammainc

from .coeff_models import CovarianceSpec, covariance_sqrt
from .errors import (
    AlignmentError,
    ArgumentError,
    DegenerateGridError,
    DiscretizationError,
    KernelInconsistencyError,
    PoleError,
)


@dataclass(frozen=True)
class KernelParams:
    """Exponent alpha and coefficient covariance parameterizing the limit process."""

    alpha: float
    cov: CovarianceSpec

    def __post_init__(self) -> None:
        if not self.alpha > -0.5:
            raise ArgumentError(f"alpha must exceed -1/2, got {self.alpha}")


@dataclass
class GridSample:
    """A realization of a complex process restricted to a finite grid."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.points = np.atleast_1d(np.asarray(self.points, dtype=complex))
        self.values = np.atleast_1d(np.asarray(self.values, dtype=complex))
        if len(self.points) != len(self.values):
            raise ArgumentError("points and values must have equal length")

    def to_csv_rows(self):
        """Rows (re_z, im_z, re_val, im_val) for serialization."""
        for z, v in zip(self.points, self.values):
            yield (z.real, z.imag, v.real, v.imag)


@dataclass
class BrownianGrid:
    """Two independent Brownian paths tabulated as increments over a time grid."""

    times: np.ndarray
    increments: np.ndarray  # shape (2, cells), Var of column i = times step

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(self.times) <= 0) or self.times[0] <= 0:
            raise ArgumentError("times must be strictly increasing and start after 0")
        if self.increments.shape != (2, len(self.times)):
            raise ArgumentError("increments must have shape (2, len(times))")


def _require_half_plane(*zs: complex) -> None:
    for z in zs:
        if not complex(z).real > 0:
            raise ArgumentError(f"point {z} is not in the open right half-plane")


def kernel_pseudo(params: KernelParams, z1: complex, z2: complex) -> complex:
    """Plain product moment of the limit process at (z1, z2).

    Gamma(1+2 alpha) (sigma1^2 - sigma2^2 + 2 i rho) / (z1 + z2)^(1+2 alpha),
    with the principal power (safe: Re(z1 + z2) > 0 in-domain).  Vanishes
    identically for isotropic coefficients.
    """
    _require_half_plane(z1, z2)
    c = params.cov
    num = gamma(1.0 + 2.0 * params.alpha) * (c.sigma1_sq - c.sigma2_sq + 2j * c.rho)
    return num / (complex(z1) + complex(z2)) ** (1.0 + 2.0 * params.alpha)


def kernel_hermitian(params: KernelParams, z1: complex, z2: complex) -> complex:
    """Conjugated product moment: Gamma(1+2 alpha)(sigma1^2+sigma2^2)/(z1+conj z2)^(1+2 alpha)."""
    _require_half_plane(z1, z2)
    num = gamma(1.0 + 2.0 * params.alpha) * params.cov.second_moment
    return num / (complex(z1) + np.conj(complex(z2))) ** (1.0 + 2.0 * params.alpha)


def joint_real_covariance(params: KernelParams, grid) -> np.ndarray:
    """Real covariance of (Re X(z_1..z_m), Im X(z_1..z_m)) as a 2m x 2m matrix.

    Built from the two kernels through the standard complex-Gaussian identities
    (with H = E[X conj(Y)], P = E[X Y]):

        E[Re X Re Y] = (Re P + Re H) / 2      E[Im X Im Y] = (Re H - Re P) / 2
        E[Re X Im Y] = (Im P - Im H) / 2      E[Im X Re Y] = (Im P + Im H) / 2

    Raises KernelInconsistencyError when the assembled matrix fails positivity
    beyond tolerance, which would indicate a kernel bug.
    """
    z = np.atleast_1d(np.asarray(grid, dtype=complex))
    _require_half_plane(*z)
    m = len(z)
    cov = np.empty((2 * m, 2 * m))
    for i in range(m):
        for j in range(i, m):
            h = kernel_hermitian(params, z[i], z[j])
            p = kernel_pseudo(params, z[i], z[j])
            rr = 0.5 * (p.real + h.real)
            ii = 0.5 * (h.real - p.real)
            ri = 0.5 * (p.imag - h.imag)  # E[Re_i Im_j]
            ir = 0.5 * (p.imag + h.imag)  # E[Im_i Re_j]
            cov[i, j] = cov[j, i] = rr
            cov[m + i, m + j] = cov[m + j, m + i] = ii
            cov[i, m + j] = cov[m + j, i] = ri
            cov[m + i, j] = cov[j, m + i] = ir
    trace = np.trace(cov)
    eig_min = float(np.linalg.eigvalsh(cov).min())
    if eig_min < -1e-10 * max(trace, 1e-300):
        raise KernelInconsistencyError(
            f"covariance not PSD: min eigenvalue {eig_min:g} vs trace {trace:g}"
        )
    return cov


def _cholesky_with_jitter(cov: np.ndarray) -> np.ndarray:
    n = len(cov)
    base = np.trace(cov) / n
    jitter = 1e-12 * base
    for _ in range(3):
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(n))
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise DegenerateGridError(
        f"Cholesky failed after jitter escalation to {jitter:g} (relative {jitter / base:g})"
    )


def _check_distinct(z: np.ndarray) -> None:
    if len(z) == 0:
        raise ArgumentError("grid must be nonempty")
    for i in range(len(z)):
        for j in range(i + 1, len(z)):
            if z[i] == z[j]:
                raise DegenerateGridError(f"duplicated grid point {z[i]}")


def sample_gaf_cholesky(params: KernelParams, grid, rng: Generator, n_draws: int = 1):
    """Draws of the limit process on a grid via Cholesky of the joint real covariance.

    Returns a GridSample for a single draw, or an (n_draws, m) complex array.
    """
    z = np.atleast_1d(np.asarray(grid, dtype=complex))
    _check_distinct(z)
    m = len(z)
    chol = _cholesky_with_jitter(joint_real_covariance(params, z))
    g = rng.standard_normal((n_draws, 2 * m))
    xy = g @ chol.T
    vals = xy[:, :m] + 1j * xy[:, m:]
    if n_draws == 1:
        return GridSample(z, vals[0])
    return vals


def brownian_cells(x_min: float, y_max: float, cells: int, first_fraction: float = 1e-8) -> np.ndarray:
    """Cell boundaries 0 = t_0 < t_1 < ... < t_cells = y_max, geometric near 0."""
    if y_max * x_min < 30.0:
        raise DiscretizationError(
            f"y_max * min Re(grid) = {y_max * x_min:g} < 30: truncated integral tail too fat"
        )
    if cells < 1000:
        raise DiscretizationError(f"cells = {cells} < 1000: discretization too coarse")
    return np.concatenate([[0.0], y_max * np.geomspace(first_fraction, 1.0, cells)])


def integral_cell_variances(alpha: float, x: float, edges: np.ndarray) -> np.ndarray:
    """Exact per-cell values of the integral of y^(2 alpha) e^(-2 x y) over each cell.

    Uses the regularized lower incomplete gamma; the first cell is the exact
    integral of y^(2 alpha) alone, absorbing the origin singularity for
    alpha < 0 (the e^(-2xy) factor there is 1 + O(x t_1)).
    """
    a = 1.0 + 2.0 * alpha
    reg = gammainc(a, 2.0 * x * edges)
    v = np.diff(reg) * gamma(a) / (2.0 * x) ** a
    v[0] = edges[1] ** a / a
    return v


def sample_brownian_grid(edges: np.ndarray, rng: Generator) -> BrownianGrid:
    """Independent increments of two Brownian paths over the given cells."""
    dt = np.diff(edges)
    inc = rng.standard_normal((2, len(dt))) * np.sqrt(dt)
    return BrownianGrid(times=edges[1:], increments=inc)


def sample_gaf_integral(
    params: KernelParams,
    grid,
    rng: Generator,
    y_max: float | None = None,
    cells: int = 2 ** 14,
    n_draws: int = 1,
):
    """Draws of the limit process via the discretized Brownian stochastic integral.

    Each coordinate process is approximated by sum_i w_i(z) dB_i with the cell
    weight chosen so the cell variance matches the exact integral of
    y^(2 alpha) e^(-2 Re(z) y) and the oscillatory factor e^(-i Im(z) y)
    frozen at the cell midpoint.  The two coordinates are then combined through
    the symmetric square root of the coefficient covariance.

    Precondition: y_max * min Re(grid) >= 30 and cells >= 1000.
    """
    z = np.atleast_1d(np.asarray(grid, dtype=complex))
    _require_half_plane(*z)
    x_min = float(z.real.min())
    if y_max is None:
        y_max = 30.0 / x_min
    edges = brownian_cells(x_min, y_max, cells)
    dt = np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    # weight matrix (m, cells): sqrt(cell variance)/sqrt(dt) * midpoint phase
    w = np.empty((len(z), len(dt)), dtype=complex)
    for i, zi in enumerate(z):
        v = integral_cell_variances(params.alpha, zi.real, edges)
        w[i] = np.sqrt(v / dt) * np.exp(-1j * zi.imag * mid)
    m_half = covariance_sqrt(params.cov)
    c1 = m_half[0, 0] + 1j * m_half[1, 0]
    c2 = m_half[0, 1] + 1j * m_half[1, 1]
    if n_draws == 1:
        bg = sample_brownian_grid(edges, rng)
        i1 = w @ bg.increments[0]
        i2 = w @ bg.increments[1]
        return GridSample(z, c1 * i1 + c2 * i2)
    out = np.empty((n_draws, len(z)), dtype=complex)
    batch = 256
    sq = np.sqrt(dt)
    for start in range(0, n_draws, batch):
        n = min(batch, n_draws - start)
        g1 = rng.standard_normal((n, len(dt))) * sq
        g2 = rng.standard_normal((n, len(dt))) * sq
        out[start : start + n] = g1 @ (c1 * w).T + g2 @ (c2 * w).T
    return out


def hyperbolic_gaf_coeff_sq(alpha: float, n: int) -> float:
    """Squared power-series coefficient (1+2a)(2+2a)...(n+2a)/n! by stable recurrence."""
    if n < 0:
        raise ArgumentError("n must be >= 0")
    if not alpha > -0.5:
        raise ArgumentError("alpha must exceed -1/2")
    c = 1.0
    for j in range(1, n + 1):
        c *= (j + 2.0 * alpha) / j
    return c


def coeff_sq_vector(alpha: float, n_terms: int) -> np.ndarray:
    """c_n^2 for n = 0..n_terms-1 (same recurrence, vectorized)."""
    j = np.arange(1, n_terms)
    return np.concatenate([[1.0], np.cumprod((j + 2.0 * alpha) / j)])


def sample_power_series_gaf(alpha: float, complex_coeffs: bool, rng: Generator, n_terms: int) -> np.ndarray:
    """Random power-series coefficients c_n * N_n for the disk process.

    Standard complex N has independent real and imaginary parts of variance
    1/2 each; the real variant uses standard real Gaussians.  Evaluation at
    |z| <= r has tail variance sum_{n >= n_terms} c_n^2 r^(2n), bounded by the
    closed form (1 - r^2)^(-(1+2 alpha)) remainder.
    """
    if n_terms < 1:
        raise ArgumentError("n_terms must be >= 1")
    c = np.sqrt(coeff_sq_vector(alpha, n_terms))
    if complex_coeffs:
        norm = (rng.standard_normal(n_terms) + 1j * rng.standard_normal(n_terms)) * math.sqrt(0.5)
    else:
        norm = rng.standard_normal(n_terms)
    return c * norm


def eval_power_series(coeffs: np.ndarray, z) -> np.ndarray:
    return np.polynomial.polynomial.polyval(np.asarray(z), coeffs)


def mobius(z: complex) -> complex:
    """(1 + z)/(1 - z): conformal bijection of the unit disk onto the half-plane."""
    z = complex(z)
    if z == 1:
        raise PoleError("mobius has a pole at z = 1")
    return (1 + z) / (1 - z)


def mobius_inv(w: complex) -> complex:
    """(w - 1)/(w + 1), inverse of :func:`mobius`."""
    w = complex(w)
    if w == -1:
        raise PoleError("mobius_inv has a pole at w = -1")
    return (w - 1) / (w + 1)


def time_change_to_disk(params: KernelParams, half_plane_sample: GridSample, disk_points) -> GridSample:
    """Transport half-plane process values to the unit-disk power-series process.

    Each disk point z maps to its half-plane image (1+z)/(1-z), which must be
    present among the sample's points; the value is rescaled by
    2^alpha Gamma(1+2 alpha)^(-1/2) (1-z)^(-(1+2 alpha)).
    """
    disk = np.atleast_1d(np.asarray(disk_points, dtype=complex))
    if np.any(np.abs(disk) >= 1):
        raise ArgumentError("disk points must satisfy |z| < 1")
    a = params.alpha
    pref = 2.0 ** a / math.sqrt(gamma(1.0 + 2.0 * a))
    out = np.empty(len(disk), dtype=complex)
    for i, z in enumerate(disk):
        img = mobius(z)
        hits = np.nonzero(np.abs(half_plane_sample.points - img) < 1e-12)[0]
        if len(hits) == 0:
            raise AlignmentError(f"image point {img} of disk point {z} missing from sample")
        out[i] = pref * (1 - z) ** (-(1.0 + 2.0 * a)) * half_plane_sample.values[hits[0]]
    return GridSample(disk, out)


def s_alpha_covariance(alpha: float, z1: complex, z2: complex) -> complex:
    """Stationary strip-process covariance cosh(z1 - conj z2)^(-(1+2 alpha)).

    Defined on the horizontal strip |Im z| < pi/4, where Re cosh(z1 - conj z2)
    stays positive and the principal power is branch-safe.
    """
    z1, z2 = complex(z1), complex(z2)
    if abs(z1.imag) >= math.pi / 4 or abs(z2.imag) >= math.pi / 4:
        raise ArgumentError("strip violation: need |Im z| < pi/4")
    return np.cosh(z1 - np.conj(z2)) ** (-(1.0 + 2.0 * alpha))
