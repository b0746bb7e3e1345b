"""Evaluation of the truncated random series and its scaled small-parameter form.

The object of interest is the weighted sum over n >= 2 of
(log n)^alpha * (eta_n + i theta_n) * n^(-w), together with its scaled version
s^(1/2+alpha) * (sum at w = 1/2 + s z).  Everything here is deterministic given
the coefficient array; randomness lives in :mod:`dirgaf.coeff_models`.

Besides plain truncation (with a certified tail standard-deviation bound),
the module provides :class:`ScaledSeriesSampler`, a hybrid path sampler that
keeps an exact non-Gaussian head of the series and completes the far tail by
block-Gaussian increments with matched covariance.  At small s the variance of
the series sits at indices near exp(1/s), far beyond any feasible truncation,
so distributional experiments must use the hybrid form; see the README.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma, gammaincc

from .coeff_models import CoefficientModel, CoefficientStream, covariance_sqrt, implied_covariance
from .errors import ArgumentError, ResourceCapError, UndefinedEstimatorError

DEFAULT_TRUNCATION_CAP = 2 ** 27


@dataclass(frozen=True)
class SeriesSpec:
    """Exponent alpha, truncation level N, and summation policy."""

    alpha: float
    truncation_n: int
    compensated_summation: bool = True

    def __post_init__(self) -> None:
        if not self.alpha > -0.5:
            raise ArgumentError(f"alpha must exceed -1/2, got {self.alpha}")
        if self.truncation_n < 2:
            raise ArgumentError("truncation_n must be >= 2")


@dataclass(frozen=True)
class EvalRequest:
    """Evaluation point z in the right half-plane and scale parameter s > 0."""

    z: complex
    s: float

    def __post_init__(self) -> None:
        if not complex(self.z).real > 0:
            raise ArgumentError(f"Re(z) must be positive, got {self.z}")
        if not self.s > 0:
            raise ArgumentError(f"s must be positive, got {self.s}")


# -- shared log table ---------------------------------------------------------

_log_lock = threading.Lock()
_log_table = np.log(np.arange(2, 1026).astype(np.float64))
_log_table.setflags(write=False)


def log_table(n: int) -> np.ndarray:
    """Read-only view of log(2), ..., log(n); grown on demand, built once."""
    global _log_table
    if n - 1 > len(_log_table):
        with _log_lock:
            if n - 1 > len(_log_table):
                grown = np.log(np.arange(2, max(n, 2 * len(_log_table)) + 1, dtype=np.float64))
                grown.setflags(write=False)
                _log_table = grown
    return _log_table[: n - 1]


def compensated_sum(values: np.ndarray) -> complex:
    """Neumaier-compensated sum of a 1-d array (complex or real).

    Short arrays are summed term by term; long ones are first reduced in
    chunks by numpy's pairwise sum, then the chunk partials are compensated.
    """
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return complex(compensated_sum(values.real), compensated_sum(values.imag))
    chunk = 4096
    if len(values) > chunk:
        n_chunks = -(-len(values) // chunk)
        padded = np.zeros(n_chunks * chunk)
        padded[: len(values)] = values
        values = padded.reshape(n_chunks, chunk).sum(axis=1)
    total = 0.0
    comp = 0.0
    for x in map(float, values):
        t = total + x
        if abs(total) >= abs(x):
            comp += (total - t) + x
        else:
            comp += (x - t) + total
        total = t
    return total + comp


def _as_pairs(coeffs) -> np.ndarray:
    arr = np.asarray(coeffs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ArgumentError("coeffs must be a sequence of (eta, theta) pairs")
    return arr


def eval_partial(coeffs, spec: SeriesSpec, w: complex) -> complex:
    """Sum over n = 2..N of (log n)^alpha (eta_n + i theta_n) n^(-w).

    ``coeffs`` supplies the pairs for n = 2, 3, ...; at least N - 1 are needed.
    n^(-w) is computed as exp(-w log n) with the shared real log table.
    """
    n = spec.truncation_n
    pairs = _as_pairs(coeffs)
    if len(pairs) < n - 1:
        raise ArgumentError(f"need at least {n - 1} coefficient pairs, got {len(pairs)}")
    logs = log_table(n)
    c = pairs[: n - 1, 0] + 1j * pairs[: n - 1, 1]
    terms = logs ** spec.alpha * c * np.exp(-w * logs)
    if spec.compensated_summation:
        return compensated_sum(terms)
    return complex(np.sum(terms))


def scaled_eval(coeffs, spec: SeriesSpec, req: EvalRequest) -> complex:
    """s^(1/2+alpha) times the partial sum at w = 1/2 + s z."""
    w = 0.5 + req.s * complex(req.z)
    return req.s ** (0.5 + spec.alpha) * eval_partial(coeffs, spec, w)


def eval_shifted_alpha_derivative(coeffs, spec: SeriesSpec, w: complex) -> complex:
    """Minus the w-derivative of the partial sum, i.e. the alpha+1 sum.

    Term-by-term differentiation multiplies each term by -log n, so the result
    coincides exactly with :func:`eval_partial` at alpha + 1.
    """
    bumped = SeriesSpec(spec.alpha + 1.0, spec.truncation_n, spec.compensated_summation)
    return eval_partial(coeffs, bumped, w)


def tail_integral(alpha: float, n_from: float, decay: float) -> float:
    """Closed form of the integral over [n_from, inf) of (log x)^(2 alpha) x^(-1-decay).

    Substituting t = decay*log(x) turns it into an upper incomplete gamma:
    decay^(-(1+2 alpha)) * Gamma(1+2 alpha, decay*log(n_from)).
    """
    a = 1.0 + 2.0 * alpha
    if decay <= 0:
        raise ArgumentError("decay must be positive")
    return gammaincc(a, decay * math.log(n_from)) * gamma(a) / decay ** a


def tail_std_bound(spec: SeriesSpec, s: float, x0: float, second_moment: float = 1.0) -> float:
    """Upper bound on the std of the discarded scaled tail beyond N.

    The bound is the square root of
    E(eta^2+theta^2) * s^(1+2 alpha) * integral_N^inf (log x)^(2 alpha) x^(-1-2 s x0) dx,
    where x0 is the smallest Re(z) over the evaluation grid.  Monotone
    decreasing in N.
    """
    if s <= 0 or x0 <= 0:
        raise ArgumentError("s and x0 must be positive")
    var = second_moment * s ** (1.0 + 2.0 * spec.alpha) * tail_integral(
        spec.alpha, spec.truncation_n, 2.0 * s * x0
    )
    return math.sqrt(var)


def choose_truncation(
    alpha: float,
    s: float,
    x0: float,
    eps: float,
    second_moment: float = 1.0,
    hard_cap: int = DEFAULT_TRUNCATION_CAP,
) -> int:
    """Smallest power-of-two N whose tail std bound falls below eps."""
    if eps <= 0:
        raise ArgumentError("eps must be positive")
    n = 2
    while n <= hard_cap:
        spec = SeriesSpec(alpha, n)
        if tail_std_bound(spec, s, x0, second_moment) < eps:
            return n
        n *= 2
    raise ResourceCapError(
        f"tail std bound does not reach eps={eps:g} below the truncation cap {hard_cap}"
        f" (=2**{hard_cap.bit_length() - 1}) at s={s:g}, x0={x0:g}"
    )


def estimate_sigma_c(coeffs, spec: SeriesSpec, n_max: int, grid_size: int = 200) -> float:
    """Abscissa-of-convergence probe from partial coefficient sums.

    Returns the maximum over a geometric checkpoint grid n_j = floor(n_max^(j/J))
    of log(|S_n| / (log n)^alpha) / log n, where S_n sums
    (log k)^alpha (eta_k + i theta_k) for k = 2..n.  The probe targets the
    limsup formula whose value is 1/2 for centered square-integrable
    coefficients.  Dividing out (log n)^alpha changes nothing in the limit
    (the weight is subpolynomial) but removes the dominant finite-n bias:
    |S_n| grows like (log n)^alpha sqrt(2 n loglog n), and without the
    correction the alpha*loglog(n)/log(n) term still exceeds 0.1 at n = 1e6.
    """
    if n_max < 100:
        raise ArgumentError("n_max must be >= 100")
    pairs = _as_pairs(coeffs)
    if len(pairs) < n_max - 1:
        raise ArgumentError(f"need at least {n_max - 1} coefficient pairs")
    logs = log_table(n_max)
    x = logs ** spec.alpha * (pairs[: n_max - 1, 0] + 1j * pairs[: n_max - 1, 1])
    partial = np.cumsum(x)
    exps = np.arange(1, grid_size + 1) / grid_size
    checkpoints = np.unique(np.floor(n_max ** exps).astype(np.int64))
    checkpoints = checkpoints[checkpoints >= 2]
    log_n = np.log(checkpoints)
    mags = np.abs(partial[checkpoints - 2]) / log_n ** spec.alpha
    ok = mags > 0
    if not ok.any():
        raise UndefinedEstimatorError("all checkpointed partial sums vanish")
    return float(np.max(np.log(mags[ok]) / log_n[ok]))


# -- hybrid path sampler -------------------------------------------------------


@dataclass
class ExpSumPath:
    """One realization of the scaled series as a finite exponential sum.

    value(z) = scale * sum_m amps[m] * exp(-freqs[m] * z), analytic on the
    half-plane.  Low frequencies are folded into a Taylor polynomial (exact to
    ~1e-13 inside |z| <= r_max) so that evaluation cost is governed by the
    number of genuinely oscillatory atoms.
    """

    scale: float
    freqs: np.ndarray
    amps: np.ndarray
    r_max: float
    is_real: bool
    _poly: np.ndarray | None = None
    _hi_freqs: np.ndarray | None = None
    _hi_amps: np.ndarray | None = None

    def _compile(self) -> None:
        # atoms with freq*r_max <= split contribute through moment polynomials
        split = 0.25
        degree = 20
        lo = self.freqs * self.r_max <= split
        f_lo, a_lo = self.freqs[lo], self.amps[lo]
        powers = np.arange(degree + 1)
        # moment q: sum_m a_m (-u_m)^q / q!
        mono = (-f_lo[:, None]) ** powers / np.cumprod(np.concatenate([[1.0], np.maximum(powers[1:], 1)]))
        self._poly = mono.T @ a_lo
        self._hi_freqs = self.freqs[~lo]
        self._hi_amps = self.amps[~lo]

    def eval(self, z) -> np.ndarray:
        """Values at complex points ``z`` (array-like), |z| <= r_max."""
        if self._poly is None:
            self._compile()
        zz = np.atleast_1d(np.asarray(z, dtype=complex))
        head = np.polynomial.polynomial.polyval(zz, self._poly)
        if len(self._hi_freqs):
            tail = np.exp(-np.outer(zz, self._hi_freqs)) @ self._hi_amps
        else:
            tail = 0.0
        out = self.scale * (head + tail)
        return out

    def eval_real(self, x) -> np.ndarray:
        """Values on the positive real axis; real output for real-coefficient paths."""
        vals = self.eval(np.asarray(x, dtype=float))
        return vals.real if self.is_real else vals

    def __call__(self, z):
        return self.eval(z)


def _tail_blocks(alpha: float, head_n: int, y_max: float, ratio: float) -> tuple[np.ndarray, np.ndarray]:
    """Geometric blocks of the index range (head_n, exp(y_max)) in y = log k.

    Returns per-block variances sum_{k in block} (log k)^(2 alpha) / k (via the
    exact antiderivative y^(1+2 alpha)/(1+2 alpha)) and variance-weighted
    centroids of y.  Block ratio controls the covariance discretization error,
    which is second order in (ratio - 1).
    """
    a = 1.0 + 2.0 * alpha
    y0 = math.log(head_n + 0.5)
    if y_max <= y0:
        return np.empty(0), np.empty(0)
    count = int(math.ceil(math.log(y_max / y0) / math.log(ratio))) + 1
    edges = y0 * ratio ** np.arange(count + 1)
    var = np.diff(edges ** a) / a
    cent = np.diff(edges ** (a + 1.0)) / (a + 1.0) / var
    return var, cent


@dataclass(frozen=True)
class ScaledSeriesSampler:
    """Sampler for paths of the scaled series on a bounded region of the half-plane.

    Indices 2..head_n are drawn exactly from the coefficient model; the far
    tail, whose individual terms are negligible but whose aggregate variance
    dominates as s -> 0, is replaced by independent Gaussian block increments
    with the exact per-block variance profile and the model's 2x2 covariance.
    ``tail="none"`` disables the completion and reproduces plain truncation.

    x_min and r_max describe where paths will be evaluated: x_min is the
    smallest Re(z) (sets how far the tail must reach before it is negligible),
    r_max the largest |z| (sets the Taylor compression split).
    """

    model: CoefficientModel
    alpha: float
    s: float
    head_n: int
    x_min: float
    r_max: float
    tail: str = "gaussian"
    block_ratio: float = 1.02
    tail_cap: float = 45.0

    def __post_init__(self) -> None:
        if not self.alpha > -0.5:
            raise ArgumentError("alpha must exceed -1/2")
        if self.s <= 0 or self.x_min <= 0 or self.r_max < self.x_min:
            raise ArgumentError("need s > 0 and 0 < x_min <= r_max")
        if self.head_n < 2:
            raise ArgumentError("head_n must be >= 2")
        if self.tail not in ("gaussian", "none"):
            raise ArgumentError("tail must be 'gaussian' or 'none'")

    def sample_path(self, stream: CoefficientStream) -> ExpSumPath:
        k = np.arange(2, self.head_n + 1)
        logk = np.log(k)
        pairs = stream.pairs(self.head_n - 1)
        head_amps = logk ** self.alpha * np.exp(-0.5 * logk) * (pairs[:, 0] + 1j * pairs[:, 1])
        freqs = self.s * logk
        amps = head_amps
        if self.tail == "gaussian":
            y_max = self.tail_cap / (2.0 * self.s * self.x_min)
            var, cent = _tail_blocks(self.alpha, self.head_n, y_max, self.block_ratio)
            if len(var):
                g = stream.tail_normals(len(var))
                m = covariance_sqrt(implied_covariance(self.model))
                et = g @ m.T  # rows (eta_j, theta_j), covariance matches the model
                tail_amps = np.sqrt(var) * (et[:, 0] + 1j * et[:, 1])
                amps = np.concatenate([head_amps, tail_amps])
                freqs = np.concatenate([freqs, self.s * cent])
        return ExpSumPath(
            scale=self.s ** (0.5 + self.alpha),
            freqs=freqs,
            amps=amps,
            r_max=self.r_max,
            is_real=self.model.is_real,
        )

    def path_weights(self, z_grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Deterministic weight matrices for bulk replicate evaluation.

        Returns (head_w, tail_w): head_w[k, i] multiplies coefficient k at grid
        point i; tail_w[j, i] multiplies the j-th tail block's Gaussian pair.
        Used by experiments that evaluate many replicates on a fixed grid.
        """
        z = np.asarray(z_grid, dtype=complex)
        k = np.arange(2, self.head_n + 1)
        logk = np.log(k)
        head_w = logk[:, None] ** self.alpha * np.exp(-np.outer(logk, 0.5 + self.s * z))
        if self.tail == "gaussian":
            y_max = self.tail_cap / (2.0 * self.s * self.x_min)
            var, cent = _tail_blocks(self.alpha, self.head_n, y_max, self.block_ratio)
            tail_w = np.sqrt(var)[:, None] * np.exp(-self.s * np.outer(cent, z))
        else:
            tail_w = np.empty((0, len(z)))
        return head_w, tail_w

    def total_variance(self, x: float) -> float:
        """Variance profile sum_k (log k)^(2 alpha) k^(-1-2 s x) of the representation.

        Per unit second moment of the coefficients; useful as an oracle target
        against the exact series value.
        """
        return self._moment_sum(2.0 * x).real

    def _moment_sum(self, decay: complex) -> complex:
        """sum over the representation of (log k)^(2 alpha) k^(-1) e^(-s decay log k)."""
        k = np.arange(2, self.head_n + 1)
        logk = np.log(k)
        total = complex(np.sum(logk ** (2 * self.alpha) * np.exp(-(1.0 + self.s * decay) * logk)))
        if self.tail == "gaussian":
            y_max = self.tail_cap / (2.0 * self.s * self.x_min)
            var, cent = _tail_blocks(self.alpha, self.head_n, y_max, self.block_ratio)
            total += complex(np.sum(var * np.exp(-self.s * decay * cent)))
        return total

    def exact_pseudo(self, cov, z1: complex, z2: complex) -> complex:
        """Exact plain product moment E[V(z1) V(z2)] of sampled paths.

        Deterministic: s^(1+2a) (sigma1^2 - sigma2^2 + 2 i rho) times the
        representation's weighted zeta-type sum at decay z1 + z2.
        """
        factor = cov.sigma1_sq - cov.sigma2_sq + 2j * cov.rho
        return self.s ** (1.0 + 2.0 * self.alpha) * factor * self._moment_sum(complex(z1) + complex(z2))

    def exact_hermitian(self, cov, z1: complex, z2: complex) -> complex:
        """Exact conjugated product moment E[V(z1) conj(V(z2))] of sampled paths."""
        decay = complex(z1) + np.conj(complex(z2))
        return self.s ** (1.0 + 2.0 * self.alpha) * cov.second_moment * self._moment_sum(decay)
