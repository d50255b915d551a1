"""Acceptance gate: every release criterion at its stated tolerance.

Each test is one criterion; the terminal summary hook in conftest prints one
PASS/FAIL line per criterion at the end of the run. Runtime budgets are
asserted where the criterion states one.
"""

import math
import time

import numpy as np
import pytest

import bicausal as bc
from bicausal.cli import main as cli_main

CRITERIA = {
    1: "likelihood equivalence of the two connected structures (1e-12, < 1 s)",
    2: "MLE push-forward identity on 1000 random datasets (1e-12, < 5 s)",
    3: "closed-form evidence matches tensor quadrature (1e-4 rel, < 2 min)",
    4: "score equivalence under symmetric hyperparameters (1e-10, up to n = 1e5)",
    5: "observational posterior-odds plateau matches the prior-ratio limit",
    6: "sqrt(n)-scaled independence-model error is bounded across n",
    7: "scaled posterior odds pass a chi-squared(1) KS test (p > 0.01)",
    8: "fitted concentration exponents within 10% of theory (< 10 min)",
    9: "exponent curve structure: concavity, positivity, order, limits, optima",
    10: "figure4 preset exponents strictly decrease in the observational ratio",
    11: "Laplace evidence error decays like 1/n against the exact form",
    12: "experiment bundles are byte-identical across reruns",
}

SYM = bc.bge_symmetric_hyper(3.0, 0.5)
UNIT = bc.Params(1.0, 1.0, 1.0)


def _random_theta(rng, lo=0.25, hi=4.0, allow_zero_w=False):
    w = float(rng.uniform(-2.0, 2.0))
    if not allow_zero_w and abs(w) < 0.05:
        w = 0.3
    return bc.Params(w, float(rng.uniform(lo, hi)), float(rng.uniform(lo, hi)))


def test_criterion_01_likelihood_equivalence():
    rng = np.random.default_rng(101)
    start = time.monotonic()
    worst = 0.0
    for _ in range(10_000):
        theta = _random_theta(rng, allow_zero_w=True)
        x = bc.sample_obs(bc.Structure.S1, theta, 1, rng)[0]
        a = bc.obs_logpdf(x, bc.Structure.S1, theta)
        b = bc.obs_logpdf(x, bc.Structure.S2, bc.gamma_map(theta))
        worst = max(worst, abs(a - b))
    elapsed = time.monotonic() - start
    assert worst < 1e-12, f"max log-density gap {worst:.3e}"
    assert elapsed < 1.0, f"runtime {elapsed:.2f} s exceeds 1 s"


def test_criterion_02_mle_pushforward():
    rng = np.random.default_rng(202)
    start = time.monotonic()
    for _ in range(1000):
        theta = _random_theta(rng)
        n = int(np.exp(rng.uniform(np.log(2.0), np.log(10_000.0))))
        st = bc.suffstats(bc.sample_obs(bc.Structure.S1, theta, max(n, 2), rng))
        triple = bc.mle_obs(st)
        np.testing.assert_allclose(
            bc.gamma_map(triple.theta1).as_array(),
            triple.theta2.as_array(),
            rtol=1e-12,
            atol=1e-12,
        )
    elapsed = time.monotonic() - start
    assert elapsed < 5.0, f"runtime {elapsed:.2f} s exceeds 5 s"


def test_criterion_03_exact_vs_quadrature():
    hypers = [
        SYM,
        bc.BgeHyper(4.0, 2.5, 2.5, 3.0, 3.0, 3.0, 0.5, 1.0),
        bc.BgeHyper(2.0, 1.5, 1.8, 2.2, 1.2, 2.8, 0.8, 0.6),
    ]
    start = time.monotonic()
    rng = np.random.default_rng(303)
    for h in hypers:
        for n, m in ((5, 0), (4, 3)):
            for _ in range(50):
                theta = _random_theta(rng)
                obs = bc.sample_obs(bc.Structure.S1, theta, n, rng)
                interv = None
                if m:
                    iv = bc.InterventionSpec(float(rng.uniform(-2.0, 2.0)))
                    interv = bc.sample_interv(bc.Structure.S1, theta, iv, m, rng)
                st = bc.suffstats(obs, interv)
                for s in bc.Structure:
                    exact = bc.log_marginal_mixed(st, s, h)
                    oracle = bc.quadrature_log_marginal(st, s, h)
                    rel = abs(math.expm1(oracle - exact))
                    assert rel < 1e-4, f"{s.value} n={n} m={m}: rel err {rel:.2e}"
    elapsed = time.monotonic() - start
    assert elapsed < 120.0, f"runtime {elapsed:.1f} s exceeds 2 min"


def test_criterion_04_score_equivalence():
    for seed, n in ((1, 10), (2, 100), (3, 1000), (4, 10_000), (5, 100_000)):
        theta = bc.Params(0.9, 1.2, 0.8)
        st = bc.suffstats(bc.sample_obs(bc.Structure.S1, theta, n, seed))
        post = bc.posterior(st, SYM)
        assert abs(post.p[0] - post.p[1]) < 1e-10, f"n={n}"


def test_criterion_05_plateau():
    ratios = []
    for seed in range(20):
        st = bc.suffstats(bc.sample_obs(bc.Structure.S1, UNIT, 100_000, seed))
        post = bc.posterior(st, SYM)
        ratios.append(post.p[0] / post.p[1])
    mean = float(np.mean(ratios))
    assert 0.9 <= mean <= 1.1, f"symmetric mean ratio {mean:.4f}"

    asym = bc.BgeHyper(4.0, 2.5, 2.5, 3.0, 3.0, 3.0, 0.5, 1.0)
    lim = bc.nonident_posterior_limit(UNIT, asym, bc.Structure.S1)
    ratio_limit = lim / (1.0 - lim)
    ratios = []
    for seed in range(20):
        st = bc.suffstats(bc.sample_obs(bc.Structure.S1, UNIT, 100_000, seed))
        post = bc.posterior(st, asym)
        ratios.append(math.exp(post.log_odds(bc.Structure.S1, bc.Structure.S2)))
    mean = float(np.mean(ratios))
    assert abs(mean - ratio_limit) / ratio_limit < 0.10, (
        f"asymmetric mean ratio {mean:.4f} vs limit {ratio_limit:.4f}"
    )


def test_criterion_06_sqrt_n_boundedness():
    theta = bc.Params(0.0, 1.0, 1.0)
    medians = []
    for n in (1000, 10_000, 100_000):
        vals = []
        for trial in range(200):
            st = bc.suffstats(bc.sample_obs(bc.Structure.S3, theta, n, 600_000 + 7 * trial + n))
            post = bc.posterior(st, SYM)
            vals.append(math.sqrt(n) * (1.0 - post.prob(bc.Structure.S3)))
        medians.append(float(np.median(vals)))
    spread = max(medians) / min(medians)
    assert spread < 3.0, f"medians {medians} spread {spread:.2f}"


def test_criterion_07_chi_squared_convergence():
    theta = bc.Params(0.0, 1.0, 1.0)
    cfg_obs = bc.ExperimentConfig(
        true_model=bc.Structure.S3, theta_star=theta, hyper=SYM,
        sample_sizes=(5000,), trials=500, base_seed=11,
    )
    _, ks, p = bc.run_chi2_diagnostic(cfg_obs)
    assert p > 0.01, f"observational KS {ks:.4f}, p {p:.4f}"

    cfg_mix = bc.ExperimentConfig(
        true_model=bc.Structure.S3, theta_star=theta, hyper=SYM, y=1.5,
        eta=0.5, sample_sizes=(5000,), trials=500, base_seed=13,
    )
    _, ks, p = bc.run_chi2_diagnostic(cfg_mix)
    assert p > 0.01, f"mixed KS {ks:.4f}, p {p:.4f}"


def test_criterion_08_concentration_exponents():
    start = time.monotonic()
    sizes = (200, 400, 800, 1600, 3200)
    protocols = [
        (bc.Structure.S1, (0.1, 0.5)),
        (bc.Structure.S2, (0.3, 0.5, 0.7)),
    ]
    for true_model, etas in protocols:
        for eta in etas:
            cfg = bc.ExperimentConfig(
                true_model=true_model, theta_star=UNIT, hyper=SYM, y=2.0,
                eta=eta, sample_sizes=sizes, trials=100, base_seed=99,
            )
            res = bc.run_concentration(cfg)
            fit = bc.fitted_exponent(cfg, res)
            theory = bc.theory_exponent(cfg)
            rel = abs(fit.slope + theory) / theory
            assert rel < 0.10, (
                f"{true_model.value} eta={eta}: slope {fit.slope:.5f} vs "
                f"-{theory:.5f} (rel {rel:.3f})"
            )
    elapsed = time.monotonic() - start
    assert elapsed < 600.0, f"runtime {elapsed:.0f} s exceeds 10 min"


def test_criterion_09_rate_structure():
    rng = np.random.default_rng(909)
    grid = np.linspace(0.001, 0.999, 1000)
    argmax_grid = np.linspace(1e-6, 1.0 - 1e-6, 4001)
    for _ in range(100):
        theta = _random_theta(rng)
        y = float(rng.uniform(0.2, 2.5))
        if abs(y * y - theta.tau2_sq) < 5e-2:
            y += 0.3
        curves = {}
        for name, f in (("d12", bc.d12), ("d21", bc.d21), ("d13", bc.d13), ("d23", bc.d23)):
            curves[name] = np.array([f(bc.RateInput(theta, y, float(e))) for e in grid])
        # positivity and ordering on (0, 1)
        for name in ("d12", "d21", "d13", "d23"):
            assert np.all(curves[name] > 0.0), name
        assert np.all(curves["d12"] < curves["d13"])
        assert np.all(curves["d21"] < curves["d23"])
        # strict concavity of the two primary exponents
        for name in ("d12", "d21"):
            assert np.all(np.diff(curves[name], 2) < 0.0), name
        # boundary limits against the displayed closed forms
        lim0 = 0.5 * math.log1p(theta.w ** 2 * y ** 2 / theta.tau1_sq)
        assert abs(bc.d12(bc.RateInput(theta, y, 0.0)) - lim0) < 1e-9
        assert abs(bc.d12(bc.RateInput(theta, y, 1.0))) < 1e-9
        assert abs(bc.d21(bc.RateInput(theta, y, 0.0))) < 1e-9
        assert abs(bc.d21(bc.RateInput(theta, y, 1.0))) < 1e-9
        # boundary continuity at the clamp points
        assert abs(bc.d12(bc.RateInput(theta, y, 1e-7)) - lim0) < 2e-6
        assert abs(bc.d21(bc.RateInput(theta, y, 1.0 - 1e-7))) < 2e-6
        # optimizer vs dense grid argmax
        eta_star, _ = bc.optimal_eta(bc.RateId.D21, theta, y)
        vals = 0.5 * np.log(
            1.0
            - argmax_grid ** 2 * theta.w ** 2 * theta.tau1_sq
            / (argmax_grid * (theta.w ** 2 * theta.tau1_sq + theta.tau2_sq)
               + (1.0 - argmax_grid) * y * y)
        ) + 0.5 * argmax_grid * math.log(
            (theta.w ** 2 * theta.tau1_sq + theta.tau2_sq) / theta.tau2_sq
        )
        assert abs(eta_star - argmax_grid[int(np.argmax(vals))]) < 1e-3
        # KL mixture identity
        eta = float(rng.uniform(0.05, 0.95))
        assert bc.d12(bc.RateInput(theta, y, eta)) == pytest.approx(
            bc.kl_mixture_exponent(bc.Structure.S1, bc.Structure.S2, theta, y, eta), abs=1e-9
        )
        assert bc.d21(bc.RateInput(theta, y, eta)) == pytest.approx(
            bc.kl_mixture_exponent(bc.Structure.S2, bc.Structure.S1, theta, y, eta), abs=1e-9
        )


def test_criterion_10_figure4_pattern(tmp_path):
    out = tmp_path / "figure4"
    assert cli_main(["experiment", "--preset", "figure4", "--seed", "0", "--out", str(out)]) == 0
    rows = [
        l for l in (out / "slopes.csv").read_text().splitlines() if not l.startswith("#")
    ][1:]
    by_eta = {float(r.split(",")[0]): -float(r.split(",")[1]) for r in rows}
    exps = [by_eta[e] for e in (0.1, 0.5, 0.9)]
    assert exps[0] > exps[1] > exps[2], f"exponents {exps} not strictly decreasing"


def test_criterion_11_laplace_quality():
    gaps = {}
    for n in (100, 400, 1600):
        st = bc.suffstats(bc.sample_obs(bc.Structure.S1, UNIT, n, 5))
        mle = bc.mle_mixed(st).theta1
        lap = bc.laplace_log_marginal(
            st, bc.Structure.S1, lambda t: bc.prior_logpdf(t, bc.Structure.S1, SYM), mle
        )
        exact = bc.log_marginal_mixed(st, bc.Structure.S1, SYM)
        gaps[n] = abs(lap - exact)
    assert gaps[100] > gaps[400] > gaps[1600], f"gaps not decreasing: {gaps}"
    base = 100 * gaps[100]
    for n in (400, 1600):
        assert n * gaps[n] < 3.0 * base, f"n*gap at {n} = {n * gaps[n]:.3f} vs base {base:.3f}"


def test_criterion_12_determinism(tmp_path):
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    for out in (out1, out2):
        assert cli_main(["experiment", "--preset", "figure4", "--seed", "7", "--out", str(out)]) == 0
    files1 = sorted(p.name for p in out1.iterdir())
    files2 = sorted(p.name for p in out2.iterdir())
    assert files1 == files2 and files1
    for name in files1:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
