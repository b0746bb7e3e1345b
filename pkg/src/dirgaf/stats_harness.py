"""Statistical confrontation of simulation output with the limit laws.

Each experiment draws replicates with deterministic (seed, replicate) stream
binding, compares an empirical quantity against its closed-form limit, and
returns a :class:`StatReport` carrying the test statistic, a p-value or total
variation distance, and a verdict.  Smoke checks (the iterated-logarithm band)
report ``verdict="smoke"`` and never fail a run: at reachable scales the
loglog normalization is still far from its limit, so only a sanity band is
asserted.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import stats
from scipy.special import gamma

from .coeff_models import (
    CoefficientModel,
    CoefficientStream,
    covariance_sqrt,
    draw_pairs_bulk,
    implied_covariance,
)
from .errors import ArgumentError
from .series_eval import ScaledSeriesSampler, _tail_blocks
from .limit_gaf import mobius_inv, sample_power_series_gaf
from .zero_finder import Region, count_in_mapped_disk, disk_image, locate_zeros, real_zeros


@dataclass(frozen=True)
class ReplicateSet:
    """Per-replicate scalar outcomes plus the metadata that produced them."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.atleast_1d(np.asarray(self.values)))
        if len(self.values) == 0:
            raise ArgumentError("replicate set must be nonempty")


@dataclass
class StatReport:
    """Outcome of one statistical check."""

    name: str
    statistic: float
    n_replicates: int
    seed: int
    verdict: str  # "pass" | "fail" | "smoke"
    p_value: float | None = None
    tv_distance: float | None = None
    details: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {
            "name": self.name,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "tv_distance": self.tv_distance,
            "n_replicates": self.n_replicates,
            "seed": self.seed,
            "verdict": self.verdict,
        }
        out.update({k: v for k, v in self.details.items() if isinstance(v, (int, float, str, list))})
        return out

    def csv_row(self) -> tuple:
        return (
            self.name,
            self.statistic,
            "" if self.p_value is None else self.p_value,
            "" if self.tv_distance is None else self.tv_distance,
            self.n_replicates,
            self.seed,
            self.verdict,
        )


CSV_REPORT_HEADER = "name,statistic,p_value,tv_distance,n_replicates,seed,verdict"


def replicate_map(fn, n_replicates: int, threads: int = 1) -> list:
    """fn(replicate_id) for ids 0..n-1, merged in replicate order.

    Results are identical for any thread count: each replicate binds its own
    random stream and lands in its slot by index.
    """
    if threads <= 1:
        return [fn(i) for i in range(n_replicates)]
    out = [None] * n_replicates
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for i, res in enumerate(pool.map(fn, range(n_replicates))):
            out[i] = res
    return out


# -- basic estimators ----------------------------------------------------------


def empirical_complex_covariance(xs, ys) -> tuple[complex, complex, float]:
    """Empirical plain and conjugated product moments of paired complex samples.

    Returns (pseudo, hermitian, se) with pseudo = mean(x*y), hermitian =
    mean(x*conj(y)); se is the largest per-component standard error.
    """
    x = np.asarray(xs.values if isinstance(xs, ReplicateSet) else xs, dtype=complex)
    y = np.asarray(ys.values if isinstance(ys, ReplicateSet) else ys, dtype=complex)
    if len(x) != len(y):
        raise ArgumentError(f"pairing error: lengths {len(x)} != {len(y)}")
    if len(x) < 30:
        raise ArgumentError("need at least 30 paired replicates")
    # products assembled from real components: commutativity of float * and +
    # then makes hermitian(x, y) == conj(hermitian(y, x)) bitwise
    xr, xi, yr, yi = x.real, x.imag, y.real, y.imag
    prod_p = (xr * yr - xi * yi) + 1j * (xr * yi + xi * yr)
    prod_h = (xr * yr + xi * yi) + 1j * (xi * yr - xr * yi)
    m = len(x)
    se = max(
        float(np.std(prod_p.real)), float(np.std(prod_p.imag)),
        float(np.std(prod_h.real)), float(np.std(prod_h.imag)),
    ) / math.sqrt(m)
    return complex(prod_p.mean()), complex(prod_h.mean()), se


def tv_distance(p, q) -> float:
    """Half the l1 distance between two pmfs (padded to a common length)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    n = max(len(p), len(q))
    p = np.pad(p, (0, n - len(p)))
    q = np.pad(q, (0, n - len(q)))
    return 0.5 * float(np.abs(p - q).sum())


def _merge_tail_bins(observed: np.ndarray, expected: np.ndarray, min_expected: float = 5.0):
    """Merge right-tail bins until every expected count reaches the threshold."""
    obs = list(observed.astype(float))
    exp = list(expected.astype(float))
    while len(exp) > 1 and exp[-1] < min_expected:
        exp[-2] += exp[-1]
        obs[-2] += obs[-1]
        exp.pop()
        obs.pop()
    # a deficient leading bin is folded right as well
    while len(exp) > 1 and exp[0] < min_expected:
        exp[1] += exp[0]
        obs[1] += obs[0]
        exp.pop(0)
        obs.pop(0)
    return np.array(obs), np.array(exp)


def chi_square_vs_pmf(counts: np.ndarray, pmf: np.ndarray) -> tuple[float, float]:
    """Chi-square goodness of fit of observed count frequencies against a pmf."""
    n = max(len(counts), len(pmf))
    obs = np.pad(np.asarray(counts, dtype=float), (0, n - len(counts)))
    exp = np.pad(np.asarray(pmf, dtype=float), (0, n - len(pmf))) * obs.sum()
    obs, exp = _merge_tail_bins(obs, exp)
    if len(obs) < 2:
        return 0.0, 1.0
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = len(obs) - 1
    return stat, float(stats.chi2.sf(stat, dof))


def two_sample_counts_chi2(counts_a: np.ndarray, counts_b: np.ndarray) -> tuple[float, float]:
    """Two-sample chi-square on count histograms (tail bins merged jointly)."""
    n = max(len(counts_a), len(counts_b))
    a = np.pad(np.asarray(counts_a, dtype=float), (0, n - len(counts_a)))
    b = np.pad(np.asarray(counts_b, dtype=float), (0, n - len(counts_b)))
    tot = a + b
    a, _ = _merge_tail_bins(a, tot)
    b, _ = _merge_tail_bins(b, tot)
    table = np.vstack([a, b])
    keep = table.sum(axis=0) > 0
    table = table[:, keep]
    if table.shape[1] < 2:
        return 0.0, 1.0
    res = stats.chi2_contingency(table)
    return float(res.statistic), float(res.pvalue)


# -- one-dimensional CLT --------------------------------------------------------


def clt_normality_check(
    model: CoefficientModel,
    alpha: float,
    s: float,
    n_replicates: int,
    master_seed: int,
    head_n: int = 2 ** 16,
    tail: str = "gaussian",
    eps: float | None = None,
    break_normalizer: bool = False,
) -> StatReport:
    """KS test of the normalized real series value at z = 1 against Normal(0, 1).

    Replicate m draws the coefficient head exactly from the model and (by
    default) completes the far tail with matched-variance Gaussian blocks,
    then applies the closed-form normalizer ((2s)^(1+2a)/(Gamma(1+2a) sigma1^2))^(1/2).
    ``break_normalizer`` drops the 2^(1+2a) factor, a deliberate negative
    control that must fail decisively.

    ``tail="truncate"`` instead picks the truncation level from the certified
    tail bound at tolerance ``eps`` (default: 1e-3 of the limit standard
    deviation) and drops the completion.  At small s this raises the
    truncation resource cap: the variance of the series sits at indices near
    exp(1/s), which is the reason the Gaussian completion is the default.
    """
    if not model.is_real:
        raise ArgumentError("clt check requires a real coefficient model")
    if not 0 < s < 0.1:
        raise ArgumentError("need 0 < s < 0.1")
    if n_replicates < 500:
        raise ArgumentError("need at least 500 replicates")
    sigma1_sq = implied_covariance(model).sigma1_sq
    if tail == "truncate":
        from .series_eval import choose_truncation

        if eps is None:
            limit_std = math.sqrt(gamma(1.0 + 2.0 * alpha) * sigma1_sq / (2.0 * s) ** (1.0 + 2.0 * alpha))
            eps = 1e-3 * limit_std
        head_n = choose_truncation(alpha, s, 1.0, eps, second_moment=sigma1_sq)
    k = np.arange(2, head_n + 1)
    logk = np.log(k)
    w_head = logk ** alpha * k ** (-0.5 - s)
    if tail == "gaussian":
        y_max = 45.0 / (2.0 * s)
        var, cent = _tail_blocks(alpha, head_n, y_max, 1.02)
        w_tail = math.sqrt(sigma1_sq) * np.sqrt(var) * np.exp(-s * cent)
    else:
        w_tail = np.empty(0)
    values = np.empty(n_replicates)
    for m in range(n_replicates):
        gen = CoefficientStream(model, master_seed, m).bulk_generator()
        eta = draw_pairs_bulk(model, gen, head_n - 1)[:, 0]
        total = float(w_head @ eta)
        if len(w_tail):
            total += float(w_tail @ gen.standard_normal(len(w_tail)))
        values[m] = total
    factor = (2.0 * s) ** (1.0 + 2.0 * alpha)
    if break_normalizer:
        factor = s ** (1.0 + 2.0 * alpha)
    norm = math.sqrt(factor / (gamma(1.0 + 2.0 * alpha) * sigma1_sq))
    values *= norm
    ks = stats.kstest(values, "norm")
    return StatReport(
        name="clt",
        statistic=float(ks.statistic),
        p_value=float(ks.pvalue),
        n_replicates=n_replicates,
        seed=master_seed,
        verdict="pass" if ks.pvalue > 1e-3 else "fail",
        details={
            "alpha": alpha,
            "s": s,
            "model": model.kind,
            "head_n": head_n,
            "tail_blocks": int(len(w_tail)),
            "sample_variance": float(values.var()),
        },
    )


# -- zero counting law -----------------------------------------------------------


@dataclass(frozen=True)
class ZeroCountLaw:
    """Distribution of the zero count of the disk process in a centered r-disk.

    The count is a sum of independent Bernoulli(r^(2k)) variables, truncated
    at the first k with r^(2k) below 1e-15.
    """

    r: float
    pmf: np.ndarray
    k_max: int

    def mean(self) -> float:
        return float(np.arange(len(self.pmf)) @ self.pmf)

    def variance(self) -> float:
        j = np.arange(len(self.pmf))
        return float(j * j @ self.pmf - self.mean() ** 2)

    def generating_function(self, t: float) -> float:
        """E (1+t)^N from the pmf."""
        return float(np.sum(self.pmf * (1.0 + t) ** np.arange(len(self.pmf))))


def zero_count_pmf(r: float) -> ZeroCountLaw:
    """Pmf of the limit zero count by sequential Bernoulli convolution."""
    if not 0 < r < 1:
        raise ArgumentError(f"r must lie in (0, 1), got {r}")
    # smallest k with r^(2k) below working precision
    k_max = 1
    while r ** (2 * k_max) >= 1e-15:
        k_max += 1
    pmf = np.array([1.0])
    for k in range(1, k_max + 1):
        p = r ** (2 * k)
        nxt = np.zeros(len(pmf) + 1)
        nxt[:-1] += pmf * (1.0 - p)
        nxt[1:] += pmf * p
        pmf = nxt
    return ZeroCountLaw(r=r, pmf=pmf, k_max=k_max)


def zero_count_experiment(
    model: CoefficientModel,
    s: float,
    r: float,
    n_replicates: int,
    master_seed: int,
    head_n: int = 2 ** 12,
    tol: float = 5e-3,
    margin: float = 0.1,
    threads: int = 1,
) -> StatReport:
    """Empirical zero counts of the scaled series in the mapped r-disk vs the limit law.

    Requires an isotropic model (Var eta = Var theta, zero correlation); the
    exponent is fixed at 0, the only case with a closed-form count law.
    Each replicate locates all zeros in a rectangle covering the image disk by
    the argument principle and counts inside the disk.
    """
    cov = implied_covariance(model)
    if not cov.is_isotropic:
        raise ArgumentError("zero count law needs an isotropic model (equal variances, rho = 0)")
    center, radius = disk_image(r)
    pad = margin * radius
    lo = complex(center - radius - pad, -radius - pad)
    hi = complex(center + radius + pad, radius + pad)
    if lo.real <= 0:
        raise ArgumentError(f"margin {margin} pushes the rectangle out of the half-plane")
    rect = Region.rectangle(lo, hi)
    r_max = max(abs(lo), abs(hi))
    sampler = ScaledSeriesSampler(model, 0.0, s, head_n, x_min=lo.real, r_max=r_max)

    def one(rep: int) -> int:
        path = sampler.sample_path(CoefficientStream(model, master_seed, rep))
        measure = locate_zeros(path.eval, rect, tol)
        return count_in_mapped_disk(measure, r)

    counts = np.array(replicate_map(one, n_replicates, threads))
    law = zero_count_pmf(r)
    hist = np.bincount(counts, minlength=len(law.pmf)).astype(float)
    emp = hist / n_replicates
    tv = tv_distance(emp, law.pmf)
    chi, p = chi_square_vs_pmf(hist, law.pmf)
    return StatReport(
        name="zero-count",
        statistic=chi,
        p_value=p,
        tv_distance=tv,
        n_replicates=n_replicates,
        seed=master_seed,
        verdict="pass" if tv < 0.1 else "fail",
        details={
            "model": model.kind,
            "s": s,
            "r": r,
            "head_n": head_n,
            "mean_count": float(counts.mean()),
            "law_mean": law.mean(),
            "histogram": [int(c) for c in hist],
        },
    )


# -- iterated-logarithm band ------------------------------------------------------


@dataclass(frozen=True)
class LILParams:
    """Exponent, coefficient variance, and the decreasing s-grid of the band check."""

    alpha: float
    sigma1_sq: float
    s_grid: tuple

    def __post_init__(self) -> None:
        if not self.alpha > -0.5:
            raise ArgumentError("alpha must exceed -1/2")
        if self.sigma1_sq <= 0:
            raise ArgumentError("sigma1_sq must be positive")
        grid = tuple(float(s) for s in self.s_grid)
        if any(not 0 < s < 1 / math.e for s in grid):
            raise ArgumentError("every s must lie in (0, 1/e) so loglog(1/s) > 0")
        if any(a <= b for a, b in zip(grid, grid[1:])):
            raise ArgumentError("s_grid must be strictly decreasing")
        object.__setattr__(self, "s_grid", grid)

    @property
    def c_alpha(self) -> float:
        return gamma(1.0 + 2.0 * self.alpha) / 2.0 ** (2.0 * self.alpha)

    def normalizer(self, s: float) -> float:
        """f(s) = (s^(1+2a) / (c_a loglog 1/s))^(1/2)."""
        return math.sqrt(s ** (1.0 + 2.0 * self.alpha) / (self.c_alpha * math.log(math.log(1.0 / s))))


def lil_band_check(
    model: CoefficientModel,
    params: LILParams,
    master_seed: int,
    head_n: int = 10 ** 5,
    tail: str = "gaussian",
) -> StatReport:
    """Single-path normalized series values along a decreasing s-grid.

    The same coefficient stream (and the same tail Gaussians) is reused for
    every s: the law of the iterated logarithm is a statement about one path.
    Reported as a smoke check; the loglog normalization converges far too
    slowly for the limit constants to be visible at reachable scales.
    """
    if not model.is_real:
        raise ArgumentError("the iterated-logarithm band applies to real models")
    grid = np.array(params.s_grid)
    if grid.max() > 1e-2 or grid.min() < 1e-6:
        raise ArgumentError("s_grid must lie within [1e-6, 1e-2]")
    stream = CoefficientStream(model, master_seed, 0)
    eta = stream.pairs(head_n - 1)[:, 0]
    k = np.arange(2, head_n + 1)
    logk = np.log(k)
    head_base = logk ** params.alpha * k ** -0.5
    sigma1 = math.sqrt(params.sigma1_sq)
    if tail == "gaussian":
        y_max = 45.0 / (2.0 * grid.min())
        var, cent = _tail_blocks(params.alpha, head_n, y_max, 1.01)
        g = stream.tail_normals(len(var))[:, 0]
        tail_base = sigma1 * np.sqrt(var) * g
    else:
        tail_base, cent = np.empty(0), np.empty(0)
    r_vals = np.empty(len(grid))
    for i, s in enumerate(grid):
        total = float(head_base @ (eta * k ** -s))
        if len(tail_base):
            total += float(tail_base @ np.exp(-s * cent))
        r_vals[i] = params.normalizer(s) * total / sigma1
    frac_in = float(np.mean(np.abs(r_vals) <= 1.05))
    return StatReport(
        name="lil-band",
        statistic=float(np.max(np.abs(r_vals))),
        n_replicates=1,
        seed=master_seed,
        verdict="smoke",
        details={
            "alpha": params.alpha,
            "model": model.kind,
            "head_n": head_n,
            "max_r": float(r_vals.max()),
            "min_r": float(r_vals.min()),
            "fraction_in_band": frac_in,
            "s_grid": [float(s) for s in grid],
            "r_values": [float(v) for v in r_vals],
        },
    )


# -- deterministic zeta-type limit -------------------------------------------------


def zeta_partial_with_tail(beta: float, z: complex, k_cut: int = 10 ** 5) -> complex:
    """sum_{k >= 2} (log k)^beta k^(-1-z) via partial sum plus integral tail.

    The tail over (k_cut, inf) is the closed form z^(-(1+beta)) Gamma(1+beta, z log k_cut)
    (upper incomplete gamma with complex argument).  Direct truncation alone
    would be off by O(1) for Re(z) near 1e-4.
    """
    z = complex(z)
    k = np.arange(2, k_cut + 1)
    logk = np.log(k)
    head = complex(np.sum(logk ** beta * np.exp(-(1.0 + z) * logk)))
    a = mpmath.mpf(1) + mpmath.mpf(beta)
    arg = mpmath.mpc(z.real, z.imag) * mpmath.log(k_cut)
    tail = complex(mpmath.gammainc(a, arg)) / z ** (1.0 + beta)
    return head + tail


def zeta_limit_check(beta: float, z_list, k_cut: int = 10 ** 5) -> list[tuple[complex, float]]:
    """|z^(1+beta) S(z) - Gamma(1+beta)| for each z, S the weighted zeta-type sum.

    Valid for beta > -1 and z in the right half-plane with |z| <= 1; the error
    vanishes as z -> 0 and measures how far z is from the scaling limit.
    """
    if not beta > -1:
        raise ArgumentError("beta must exceed -1")
    out = []
    target = gamma(1.0 + beta)
    for z in np.atleast_1d(np.asarray(z_list, dtype=complex)):
        z = complex(z)
        if z.real <= 0 or abs(z) > 1:
            raise ArgumentError(f"z must satisfy Re(z) > 0 and |z| <= 1, got {z}")
        s_val = zeta_partial_with_tail(beta, z, k_cut)
        out.append((z, float(abs(z ** (1.0 + beta) * s_val - target))))
    return out


# -- real zero process comparison ---------------------------------------------------


def real_zero_process_comparison(
    model: CoefficientModel,
    s: float,
    window: tuple[float, float],
    n_replicates: int,
    master_seed: int,
    head_n: int = 2 ** 12,
    n_terms: int = 200,
    threads: int = 1,
) -> StatReport:
    """Real-zero counts of the scaled series vs the unit-interval power-series process.

    Both sides are Monte Carlo: the series side counts sign-change zeros of a
    sampled path in the window; the disk side counts zeros of a truncated
    random real power series in the pulled-back window.  Count distributions
    are compared by total variation and a two-sample chi-square.
    """
    if not model.is_real:
        raise ArgumentError("real-zero comparison requires a real model")
    a, b = float(window[0]), float(window[1])
    if not 0 < a < b:
        raise ArgumentError("window must be a compact subinterval of (0, inf)")
    sampler = ScaledSeriesSampler(model, 0.0, s, head_n, x_min=a, r_max=b)

    def series_side(rep: int) -> int:
        path = sampler.sample_path(CoefficientStream(model, master_seed, rep))
        return real_zeros(path.eval_real, a, b).total()

    da, db = mobius_inv(a).real, mobius_inv(b).real

    def gaf_side(rep: int) -> int:
        gen = CoefficientStream(model, master_seed ^ 0x5F5F5F5F, rep).bulk_generator()
        coeffs = sample_power_series_gaf(0.0, False, gen, n_terms)
        poly = np.polynomial.polynomial.Polynomial(coeffs)
        return real_zeros(poly, da, db).total()

    counts_series = np.array(replicate_map(series_side, n_replicates, threads))
    counts_gaf = np.array(replicate_map(gaf_side, n_replicates, threads))
    width = max(counts_series.max(), counts_gaf.max()) + 1
    hist_series = np.bincount(counts_series, minlength=width).astype(float)
    hist_gaf = np.bincount(counts_gaf, minlength=width).astype(float)
    tv = tv_distance(hist_series / n_replicates, hist_gaf / n_replicates)
    chi, p = two_sample_counts_chi2(hist_series, hist_gaf)
    mean_gap = float(counts_series.mean() - counts_gaf.mean())
    se = math.sqrt(counts_series.var() / n_replicates + counts_gaf.var() / n_replicates)
    verdict = "pass" if tv < 0.15 and abs(mean_gap) <= 3.0 * se else "fail"
    return StatReport(
        name="real-zeros",
        statistic=chi,
        p_value=p,
        tv_distance=tv,
        n_replicates=n_replicates,
        seed=master_seed,
        verdict=verdict,
        details={
            "model": model.kind,
            "s": s,
            "window": [a, b],
            "mean_series": float(counts_series.mean()),
            "mean_gaf": float(counts_gaf.mean()),
            "mean_gap_se": float(se),
            "hist_series": [int(c) for c in hist_series],
            "hist_gaf": [int(c) for c in hist_gaf],
        },
    )


# -- covariance convergence ----------------------------------------------------------


def scaled_covariance_experiment(
    model: CoefficientModel,
    alpha: float,
    s_list,
    z_grid,
    n_replicates: int,
    master_seed: int,
    head_n: int = 2 ** 12,
    chunk: int = 512,
) -> dict:
    """Empirical product moments of the scaled series across an s-sweep.

    Uses common random numbers: the same replicate draws feed every s, so the
    Monte Carlo noise nearly cancels in cross-s comparisons and the shrinking
    bias of the covariance toward its kernel limit is visible.  Returns, per s,
    the empirical pseudo and hermitian m x m matrices plus per-entry standard
    errors.
    """
    z = np.asarray(z_grid, dtype=complex)
    s_list = [float(s) for s in s_list]
    x_min = float(z.real.min())
    r_max = float(np.abs(z).max())
    samplers = [
        ScaledSeriesSampler(model, alpha, s, head_n, x_min=x_min, r_max=r_max) for s in s_list
    ]
    weights = [smp.path_weights(z) for smp in samplers]
    n_tail_max = max(w[1].shape[0] for w in weights)
    m = len(z)
    chol = covariance_sqrt(implied_covariance(model))
    acc = [
        {
            "p": np.zeros((m, m), dtype=complex),
            "h": np.zeros((m, m), dtype=complex),
            "p2re": np.zeros((m, m)),
            "p2im": np.zeros((m, m)),
            "h2re": np.zeros((m, m)),
            "h2im": np.zeros((m, m)),
        }
        for _ in s_list
    ]
    done = 0
    block_id = 0
    while done < n_replicates:
        n = min(chunk, n_replicates - done)
        gen = CoefficientStream(model, master_seed, block_id).bulk_generator()
        block_id += 1
        pairs = draw_pairs_bulk(model, gen, n * (head_n - 1)).reshape(n, head_n - 1, 2)
        eta_head = pairs[..., 0] + 1j * pairs[..., 1]
        g = gen.standard_normal((n, n_tail_max, 2)) @ chol.T
        eta_tail = g[..., 0] + 1j * g[..., 1]
        for i, (head_w, tail_w) in enumerate(weights):
            scale = s_list[i] ** (0.5 + alpha)
            vals = scale * (eta_head @ head_w + eta_tail[:, : tail_w.shape[0]] @ tail_w)
            prod_p = vals[:, :, None] * vals[:, None, :]
            prod_h = vals[:, :, None] * np.conj(vals[:, None, :])
            acc[i]["p"] += prod_p.sum(axis=0)
            acc[i]["h"] += prod_h.sum(axis=0)
            acc[i]["p2re"] += (prod_p.real ** 2).sum(axis=0)
            acc[i]["p2im"] += (prod_p.imag ** 2).sum(axis=0)
            acc[i]["h2re"] += (prod_h.real ** 2).sum(axis=0)
            acc[i]["h2im"] += (prod_h.imag ** 2).sum(axis=0)
        done += n
    out = {"z_grid": z, "s_list": s_list, "per_s": []}
    for i, s in enumerate(s_list):
        a = acc[i]
        mean_p = a["p"] / n_replicates
        mean_h = a["h"] / n_replicates
        var_p = np.maximum(
            np.maximum(a["p2re"] / n_replicates - mean_p.real ** 2, a["p2im"] / n_replicates - mean_p.imag ** 2),
            0.0,
        )
        var_h = np.maximum(
            np.maximum(a["h2re"] / n_replicates - mean_h.real ** 2, a["h2im"] / n_replicates - mean_h.imag ** 2),
            0.0,
        )
        out["per_s"].append(
            {
                "s": s,
                "pseudo": mean_p,
                "hermitian": mean_h,
                "se_pseudo": np.sqrt(var_p / n_replicates),
                "se_hermitian": np.sqrt(var_h / n_replicates),
            }
        )
    return out
