"""Deterministic Monte Carlo harness for the concentration studies.

Every trial draws its data from a generator seeded by
``base_seed + trial * 10**6 + size_index``, so results are independent of
execution order and a full run is reproducible byte for byte. Records are
kept in fixed ``(trial, N)`` order; trial averages are accumulated in trial
order for the same reason.

CSV schemas (one file per experiment; floats use 17 significant digits):

* ``concentration.csv``: trial, N, n, m, p_s1, p_s2, p_s3, log_inv_odds
* ``plateau.csv``: trial, n, ratio_12, theory_limit
* ``chi2.csv``: trial, stat_s1, stat_s2
* ``slopes.csv``: eta, fitted_slope, theory_exponent, rel_err
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateData, InvalidParameter
from .estimation import SuffStats, suffstats
from .exact import augmented_odds_statistic, log_inverse_odds, posterior
from .priors import BgeHyper, prior_logpdf, pushforward_prior_logpdf
from .rates import RateInput, d12, d21
from .sem import InterventionSpec, Params, Structure, gamma_map_inverse, sample_interv, sample_obs

_TRIAL_SEED_STRIDE = 10 ** 6


def _safe_exp(x: float) -> float:
    """exp that saturates to inf/0 instead of raising far in the tails."""
    if x > 709.0:
        return math.inf
    if x < -745.0:
        return 0.0
    return math.exp(x)


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration of one Monte Carlo experiment.

    ``eta = None`` selects the observational-only regime (``sample_sizes``
    are then observational counts). Otherwise ``n = floor(eta*N + 1/2)`` and
    ``m = N - n`` per total size ``N``.
    """

    true_model: Structure
    theta_star: Params
    hyper: BgeHyper
    y: float = 0.0
    eta: float | None = None
    sample_sizes: tuple[int, ...] = (50, 100, 200, 400, 800, 1600, 3200)
    trials: int = 100
    base_seed: int = 0

    def __post_init__(self) -> None:
        sizes = tuple(int(v) for v in self.sample_sizes)
        if len(sizes) == 0 or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise InvalidParameter("sample_sizes must be a strictly increasing nonempty list")
        if sizes[0] < 2:
            raise InvalidParameter("smallest sample size must be >= 2")
        object.__setattr__(self, "sample_sizes", sizes)
        if self.trials < 1:
            raise InvalidParameter(f"trials must be >= 1, got {self.trials}")
        if self.eta is not None and not 0.0 < self.eta < 1.0:
            raise InvalidParameter(f"eta must lie in (0, 1) when mixed, got {self.eta!r}")

    @property
    def mixed(self) -> bool:
        return self.eta is not None

    def split(self, total: int) -> tuple[int, int]:
        """(n, m) for total size ``total``; half counts round up."""
        if not self.mixed:
            return total, 0
        n = int(math.floor(self.eta * total + 0.5))
        n = min(max(n, 1), total - 1)
        return n, total - n


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one (trial, N) cell."""

    trial: int
    total: int
    n: int
    m: int
    p: tuple[float, float, float]
    log_inv_odds: float
    ratio_12: float
    stat_s1: float = math.nan
    stat_s2: float = math.nan


@dataclass
class ExperimentResult:
    records: list[TrialRecord] = field(default_factory=list)
    skipped: int = 0

    def mean_log_inv_odds(self, total: int) -> float:
        """Trial average at one size, accumulated in trial order."""
        acc = 0.0
        cnt = 0
        for r in self.records:
            if r.total == total:
                acc += r.log_inv_odds
                cnt += 1
        if cnt == 0:
            raise InvalidParameter(f"no records at N={total}")
        return acc / cnt


def _cell_seed(cfg: ExperimentConfig, trial: int, size_index: int) -> int:
    return cfg.base_seed + trial * _TRIAL_SEED_STRIDE + size_index


def _simulate_cell(cfg: ExperimentConfig, trial: int, size_index: int) -> SuffStats:
    total = cfg.sample_sizes[size_index]
    n, m = cfg.split(total)
    rng = np.random.default_rng(_cell_seed(cfg, trial, size_index))
    obs = sample_obs(cfg.true_model, cfg.theta_star, n, rng)
    interv = None
    if m > 0:
        interv = sample_interv(cfg.true_model, cfg.theta_star, InterventionSpec(cfg.y), m, rng)
    return suffstats(obs, interv)


def run_concentration(cfg: ExperimentConfig) -> ExperimentResult:
    """Posterior records over the (trial, size) grid for the configured model.

    Degenerate draws are skipped and counted; at the default configurations
    they are vanishingly rare.
    """
    result = ExperimentResult()
    for trial in range(cfg.trials):
        for idx, total in enumerate(cfg.sample_sizes):
            try:
                st = _simulate_cell(cfg, trial, idx)
                post = posterior(st, cfg.hyper)
                lio = log_inverse_odds(st, cfg.hyper, cfg.true_model)
                ratio = _safe_exp(post.log_odds(Structure.S1, Structure.S2))
            except DegenerateData:
                result.skipped += 1
                continue
            result.records.append(
                TrialRecord(
                    trial=trial,
                    total=total,
                    n=st.n,
                    m=st.m,
                    p=(float(post.p[0]), float(post.p[1]), float(post.p[2])),
                    log_inv_odds=lio,
                    ratio_12=ratio,
                )
            )
    return result


def plateau_theory_ratio(cfg: ExperimentConfig) -> float:
    """Limiting observational posterior ratio ``p(S1)/p(S2)``.

    Determined by the generating law alone: with ``theta`` the law's ``S1``
    coordinates, the ratio tends to ``prior(theta | S1)`` over the pulled-back
    ``S2`` prior at ``theta``.
    """
    if cfg.true_model is Structure.S1:
        theta = cfg.theta_star
    elif cfg.true_model is Structure.S2:
        theta = gamma_map_inverse(cfg.theta_star)
    else:
        raise InvalidParameter("plateau defined for connected true models")
    return math.exp(
        prior_logpdf(theta, Structure.S1, cfg.hyper) - pushforward_prior_logpdf(theta, cfg.hyper)
    )


def run_odds_plateau(cfg: ExperimentConfig) -> ExperimentResult:
    """Observational posterior-odds trajectory against its theoretical plateau."""
    if cfg.mixed:
        raise InvalidParameter("plateau experiment is observational-only")
    if cfg.true_model is Structure.S3:
        raise InvalidParameter("plateau experiment requires a connected true model")
    return run_concentration(cfg)


def run_chi2_diagnostic(cfg: ExperimentConfig) -> tuple[ExperimentResult, float, float]:
    """Scaled posterior-odds statistics under a true independence model.

    Uses the largest configured sample size for every trial. Returns the
    records plus the worse (larger-distance) of the two per-structure
    Kolmogorov-Smirnov comparisons against the chi-squared(1) law.
    """
    if cfg.true_model is not Structure.S3:
        raise InvalidParameter("chi-squared diagnostic requires true model S3")
    idx = len(cfg.sample_sizes) - 1
    total = cfg.sample_sizes[idx]
    result = ExperimentResult()
    for trial in range(cfg.trials):
        try:
            st = _simulate_cell(cfg, trial, idx)
            post = posterior(st, cfg.hyper)
            s1 = augmented_odds_statistic(st, Structure.S1, cfg.theta_star, cfg.hyper)
            s2 = augmented_odds_statistic(st, Structure.S2, cfg.theta_star, cfg.hyper)
            lio = log_inverse_odds(st, cfg.hyper, cfg.true_model)
        except DegenerateData:
            result.skipped += 1
            continue
        result.records.append(
            TrialRecord(
                trial=trial,
                total=total,
                n=st.n,
                m=st.m,
                p=(float(post.p[0]), float(post.p[1]), float(post.p[2])),
                log_inv_odds=lio,
                ratio_12=_safe_exp(post.log_odds(Structure.S1, Structure.S2)),
                stat_s1=s1,
                stat_s2=s2,
            )
        )
    ks1, p1 = ks_test_chi2_1(np.array([r.stat_s1 for r in result.records]))
    ks2, p2 = ks_test_chi2_1(np.array([r.stat_s2 for r in result.records]))
    if ks1 >= ks2:
        return result, ks1, p1
    return result, ks2, p2


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float


def fit_slope(x_values, y_values) -> SlopeFit:
    """Ordinary least squares of ``y`` on ``x``; needs >= 4 distinct x."""
    x = np.asarray(x_values, dtype=np.float64)
    y = np.asarray(y_values, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidParameter("x and y must be 1d arrays of equal length")
    if np.unique(x).size < 4:
        raise InvalidParameter("slope fit needs at least 4 distinct x values")
    xbar = float(np.mean(x))
    ybar = float(np.mean(y))
    sxx = float(np.sum((x - xbar) ** 2))
    sxy = float(np.sum((x - xbar) * (y - ybar)))
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    resid = y - (intercept + slope * x)
    sst = float(np.sum((y - ybar) ** 2))
    ssr = float(np.sum(resid ** 2))
    r2 = 1.0 if sst == 0.0 else max(0.0, 1.0 - ssr / sst)
    return SlopeFit(slope=slope, intercept=intercept, r_squared=r2)


def fitted_exponent(cfg: ExperimentConfig, result: ExperimentResult) -> SlopeFit:
    """Slope of trial-averaged ``log(1/p_true - 1)`` against total sample size."""
    means = [result.mean_log_inv_odds(total) for total in cfg.sample_sizes]
    return fit_slope(np.array(cfg.sample_sizes, dtype=np.float64), np.array(means))


def theory_exponent(cfg: ExperimentConfig) -> float:
    """The exponent the fitted slope should approach (sign flipped)."""
    if not cfg.mixed:
        raise InvalidParameter("exponent defined for mixed-data configurations")
    ri = RateInput(cfg.theta_star, cfg.y, cfg.eta)
    if cfg.true_model is Structure.S1:
        return d12(ri)
    if cfg.true_model is Structure.S2:
        return d21(ri)
    raise InvalidParameter("exponent defined for connected true models")


# ---------------------------------------------------------------------------
# chi-squared(1) CDF and Kolmogorov-Smirnov helpers (no stats dependency)
# ---------------------------------------------------------------------------


def chi2_1_cdf(x: float) -> float:
    """CDF of chi-squared with one degree of freedom: ``erf(sqrt(x/2))``."""
    if x <= 0.0:
        return 0.0
    return math.erf(math.sqrt(0.5 * x))


def _kolmogorov_sf(t: float) -> float:
    """Survival function of the Kolmogorov distribution (asymptotic series)."""
    if t <= 0.0:
        return 1.0
    total = 0.0
    for k in range(1, 101):
        term = 2.0 * (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * t * t)
        total += term
        if abs(term) < 1e-12:
            break
    return min(max(total, 0.0), 1.0)


def ks_test_chi2_1(samples: np.ndarray) -> tuple[float, float]:
    """One-sample KS statistic and approximate p-value against chi-squared(1).

    The p-value uses the Stephens small-sample correction of the asymptotic
    Kolmogorov law, accurate for a few dozen samples and up.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    nn = x.size
    if nn == 0:
        raise InvalidParameter("empty sample")
    cdf = np.array([chi2_1_cdf(float(v)) for v in x])
    upper = np.arange(1, nn + 1) / nn
    lower = np.arange(0, nn) / nn
    d = float(max(np.max(upper - cdf), np.max(cdf - lower)))
    root = math.sqrt(nn)
    p = _kolmogorov_sf((root + 0.12 + 0.11 / root) * d)
    return d, p


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _header_lines(cfg: ExperimentConfig, extra: dict | None = None) -> list[str]:
    th = cfg.theta_star
    items = {
        "true_model": cfg.true_model.value,
        "w": _fmt(th.w),
        "tau1_sq": _fmt(th.tau1_sq),
        "tau2_sq": _fmt(th.tau2_sq),
        "y": _fmt(cfg.y),
        "eta": "" if cfg.eta is None else _fmt(cfg.eta),
        "sample_sizes": ",".join(str(v) for v in cfg.sample_sizes),
        "trials": str(cfg.trials),
        "base_seed": str(cfg.base_seed),
        "alpha": ",".join(
            _fmt(a)
            for a in (
                cfg.hyper.alpha1,
                cfg.hyper.alpha2,
                cfg.hyper.alpha3,
                cfg.hyper.alpha4,
                cfg.hyper.alpha5,
                cfg.hyper.alpha6,
            )
        ),
        "beta": _fmt(cfg.hyper.beta),
        "lambda": _fmt(cfg.hyper.lam),
    }
    if extra:
        items.update({k: str(v) for k, v in extra.items()})
    return [f"# {k} = {v}" for k, v in items.items()]


def log_inv_odds_quantiles(
    result: ExperimentResult, total: int, probs=(0.1, 0.5, 0.9)
) -> tuple[float, ...]:
    """Per-size quantile band of ``log(1/p_true - 1)`` across trials."""
    vals = np.sort([r.log_inv_odds for r in result.records if r.total == total])
    if vals.size == 0:
        raise InvalidParameter(f"no records at N={total}")
    return tuple(float(np.quantile(vals, q)) for q in probs)


def write_concentration_csv(path, cfg: ExperimentConfig, result: ExperimentResult) -> None:
    lines = _header_lines(cfg, {"skipped": result.skipped})
    for total in cfg.sample_sizes:
        try:
            q10, q50, q90 = log_inv_odds_quantiles(result, total)
        except InvalidParameter:
            continue
        lines.append(
            f"# log_inv_odds_quantiles N={total}: "
            f"q10={_fmt(q10)} q50={_fmt(q50)} q90={_fmt(q90)}"
        )
    lines.append("trial,N,n,m,p_s1,p_s2,p_s3,log_inv_odds")
    for r in result.records:
        lines.append(
            f"{r.trial},{r.total},{r.n},{r.m},"
            f"{_fmt(r.p[0])},{_fmt(r.p[1])},{_fmt(r.p[2])},{_fmt(r.log_inv_odds)}"
        )
    _write_lines(path, lines)


def write_plateau_csv(path, cfg: ExperimentConfig, result: ExperimentResult) -> None:
    limit = plateau_theory_ratio(cfg)
    lines = _header_lines(cfg, {"skipped": result.skipped})
    lines.append("trial,n,ratio_12,theory_limit")
    for r in result.records:
        lines.append(f"{r.trial},{r.n},{_fmt(r.ratio_12)},{_fmt(limit)}")
    _write_lines(path, lines)


def write_chi2_csv(
    path, cfg: ExperimentConfig, result: ExperimentResult, ks: float, pvalue: float
) -> None:
    lines = _header_lines(
        cfg, {"skipped": result.skipped, "ks_statistic": _fmt(ks), "ks_pvalue": _fmt(pvalue)}
    )
    lines.append("trial,stat_s1,stat_s2")
    for r in result.records:
        lines.append(f"{r.trial},{_fmt(r.stat_s1)},{_fmt(r.stat_s2)}")
    _write_lines(path, lines)


def write_slopes_csv(path, rows: list[tuple[float, float, float]], header_lines: list[str]) -> None:
    """Rows are (eta, fitted_slope, theory_exponent)."""
    lines = list(header_lines)
    lines.append("eta,fitted_slope,theory_exponent,rel_err")
    for eta, slope, theory in rows:
        rel = abs(slope + theory) / abs(theory) if theory != 0.0 else math.nan
        lines.append(f"{_fmt(eta)},{_fmt(slope)},{_fmt(theory)},{_fmt(rel)}")
    _write_lines(path, lines)


def _write_lines(path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
