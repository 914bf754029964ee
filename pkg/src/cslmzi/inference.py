"""Fringe fitting, contrast-decay fitting, and the parameter exclusion scan.

Pipeline: population-vs-chirp scans are fit to
P(alpha) = P_mean + (C/2)*cos((alpha0 - alpha)*T^2) for the contrast C;
ln C is then regressed on T (slope -2*lam*N^2 in the short-correlation
regime, or the full closed form at a given r_C), and the fitted collapse
rate is combined with the packet overlap bound into an exclusion curve in
the (r_C, lambda) plane.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from .core import (
    AtomSpecies,
    CslParams,
    InterferometerConfig,
    phase_variance,
)
from .wavepacket import overlap_bound

__all__ = [
    "ContrastSeries",
    "DecayFit",
    "DegenerateScanError",
    "ExclusionCurve",
    "FitConvergenceError",
    "FringeFit",
    "FringeScan",
    "FringeTruth",
    "ReadNoise",
    "SingularFitError",
    "contrast_series_from_fits",
    "exclusion_curve",
    "fit_contrast_decay",
    "fit_fringe",
    "fit_lambda_at_rc",
    "lambda_upper_bound",
    "synth_fringe",
    "synth_fringes",
]

logger = logging.getLogger(__name__)


class DegenerateScanError(ValueError):
    """Scan cannot constrain the fringe model (too few or collinear points)."""


class SingularFitError(ValueError):
    """Normal matrix of the weighted regression is singular."""


class FitConvergenceError(RuntimeError):
    """Optimizer failed to reach the gradient criterion within its budget."""


@dataclass(frozen=True)
class FringeScan:
    """One population-vs-chirp-rate scan at fixed pulse separation."""

    t_sep: float
    alpha: np.ndarray  # rad/s^2
    population: np.ndarray  # in [0, 1]
    weight: np.ndarray | None = None

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        pop = np.asarray(self.population, dtype=float)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "population", pop)
        if self.weight is not None:
            object.__setattr__(self, "weight", np.asarray(self.weight, dtype=float))
        if self.t_sep <= 0.0:
            raise ValueError(f"t_sep must be > 0, got {self.t_sep}")
        if alpha.shape != pop.shape or alpha.ndim != 1:
            raise ValueError("alpha and population must be 1-d arrays of equal length")
        if alpha.size < 6:
            raise DegenerateScanError(f"need >= 6 points, got {alpha.size}")
        if np.any(pop < 0.0) or np.any(pop > 1.0):
            raise ValueError("populations must lie in [0, 1]")
        period = 2.0 * math.pi / self.t_sep**2
        # slack covers rounding of alpha0 +- half-period at large alpha0
        slack = 1e-12 * period + 16.0 * np.finfo(float).eps * float(np.abs(alpha).max())
        if np.ptp(alpha) < period - slack:
            raise DegenerateScanError(
                "scan must span at least one full fringe period (2*pi/T^2)"
            )


@dataclass(frozen=True)
class FringeFit:
    """Best-fit fringe parameters with 1-sigma contrast uncertainty."""

    p_mean: float
    contrast: float
    alpha0: float  # rad/s^2
    sigma_c: float
    residual_rms: float

    def __post_init__(self):
        if self.contrast < 0.0:
            raise ValueError("contrast must be >= 0 after canonicalization")
        if self.sigma_c < 0.0:
            raise ValueError("sigma_c must be >= 0")


@dataclass(frozen=True)
class ContrastSeries:
    """Fitted contrasts across pulse separation times."""

    t_sep: np.ndarray  # s
    contrast: np.ndarray
    sigma_c: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_sep, dtype=float)
        c = np.asarray(self.contrast, dtype=float)
        s = np.asarray(self.sigma_c, dtype=float)
        object.__setattr__(self, "t_sep", t)
        object.__setattr__(self, "contrast", c)
        object.__setattr__(self, "sigma_c", s)
        if not (t.shape == c.shape == s.shape) or t.ndim != 1:
            raise ValueError("t_sep, contrast, sigma_c must be 1-d of equal length")
        # two distinct times already determine the line; >= 3 recommended
        # for a meaningful fit uncertainty
        if t.size < 2:
            raise ValueError("need >= 2 contrast points")
        if np.any(c <= 0.0) or np.any(c > 1.0):
            raise ValueError("contrasts must lie in (0, 1]")
        if np.any(s <= 0.0):
            raise ValueError("sigma_c must be > 0")

    @classmethod
    def from_points(cls, points) -> "ContrastSeries":
        t, c, s = (np.asarray(col, dtype=float) for col in zip(*points))
        return cls(t, c, s)


@dataclass(frozen=True)
class DecayFit:
    """Weighted-fit result for ln C(T) = ln C0 - 2*lam*N^2*T (or the r_C form)."""

    ln_c0: float
    lambda_fit: float  # 1/s
    sigma_lambda: float  # 1/s
    covariance: np.ndarray  # 2x2 over (ln_c0, lambda)

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        object.__setattr__(self, "covariance", cov)
        if cov.shape != (2, 2):
            raise ValueError("covariance must be 2x2")
        if not np.allclose(cov, cov.T, rtol=1e-8, atol=0.0):
            raise ValueError("covariance must be symmetric")
        if cov[0, 0] < 0.0 or cov[1, 1] < 0.0:
            raise ValueError("covariance diagonal must be >= 0")


@dataclass(frozen=True)
class ExclusionCurve:
    """Sampled exclusion boundary in the (r_C, lambda) plane.

    Each sample is (r_c, lambda_bound, source) with source "overlap" exactly
    where the overlap bound undercuts the interferometric one.
    """

    samples: tuple[tuple[float, float, str], ...]
    crossover_rc: float | None

    def __post_init__(self):
        rcs = [s[0] for s in self.samples]
        if any(b <= 0.0 for _, b, _ in self.samples):
            raise ValueError("lambda_bound must be > 0")
        if any(a >= b for a, b in zip(rcs, rcs[1:])):
            raise ValueError("samples must be sorted by r_c")


@dataclass(frozen=True)
class FringeTruth:
    """Ground-truth parameters for synthetic fringe generation."""

    collapse_rate: float
    correlation_length: float
    c0: float
    p_mean: float


@dataclass(frozen=True)
class ReadNoise:
    """Gaussian detection noise on the populations."""

    sigma_p: float
    seed: int

    def __post_init__(self):
        if self.sigma_p < 0.0:
            raise ValueError("sigma_p must be >= 0")


def _fringe_system(scan: FringeScan):
    """Residual/Jacobian in scaled parameters (p_mean, C, phi0) with
    phi0 = (alpha0 - mean(alpha))*T^2, which keeps the problem O(1)."""
    t2 = scan.t_sep**2
    abar = float(scan.alpha.mean())
    da = (scan.alpha - abar) * t2
    pop = scan.population
    sqw = np.sqrt(scan.weight) if scan.weight is not None else np.ones_like(pop)

    def resid(p):
        pm, c, phi0 = p
        return (pm + 0.5 * c * np.cos(phi0 - da) - pop) * sqw

    def jac(p):
        _, c, phi0 = p
        th = phi0 - da
        return np.column_stack(
            [sqw, 0.5 * np.cos(th) * sqw, -0.5 * c * np.sin(th) * sqw]
        )

    return resid, jac, da, abar, t2, sqw


def fit_fringe(scan: FringeScan, max_iter: int = 100) -> FringeFit:
    """Least-squares fit of one fringe scan.

    Initialization: P_mean from the data mean, C from the peak-to-peak
    amplitude, and the fringe phase from a coarse grid over one period (the
    model is periodic in alpha0, so a global start prevents period
    aliasing); then local refinement until the gradient norm drops to 1e-10
    of its initial value.  A fitted C < 0 is canonicalized by flipping its
    sign and shifting alpha0 by half a period.
    """
    resid, jac, da, abar, t2, _ = _fringe_system(scan)
    # degeneracy check on the linearized basis [1, cos, sin]
    basis = np.column_stack([np.ones_like(da), np.cos(da), np.sin(da)])
    if np.linalg.matrix_rank(basis, tol=1e-10 * da.size) < 3:
        raise DegenerateScanError("design matrix is rank-deficient")

    pm0 = float(scan.population.mean())
    c0 = float(np.ptp(scan.population))
    grid = np.linspace(-math.pi, math.pi, 64, endpoint=False)
    sse_grid = [float(np.sum(resid((pm0, c0, g)) ** 2)) for g in grid]
    p = np.array([pm0, c0, grid[int(np.argmin(sse_grid))]])

    g0 = float(np.linalg.norm(jac(p).T @ resid(p)))
    tol = max(1e-10 * g0, 1e-13 * (1.0 + g0))

    sol = least_squares(resid, p, jac=jac, method="lm", xtol=1e-15, ftol=1e-15,
                        gtol=1e-15, max_nfev=max(1, 200 * max_iter))
    p = sol.x

    # Gauss-Newton polish down to the gradient criterion.  Near the optimum
    # the SSE decrease falls below its own rounding, so steps that shrink
    # the gradient at unchanged SSE are still accepted.
    for _ in range(max_iter):
        r = resid(p)
        J = jac(p)
        gnorm = float(np.linalg.norm(J.T @ r))
        if gnorm <= tol:
            break
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        sse = float(r @ r)
        accepted = False
        for _ in range(20):
            p_new = p + step
            r_new = resid(p_new)
            sse_new = float(r_new @ r_new)
            if sse_new < sse or (
                sse_new <= sse * (1.0 + 1e-14)
                and float(np.linalg.norm(jac(p_new).T @ r_new)) < gnorm
            ):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # at the numerical floor
        p = p_new
    gnorm = float(np.linalg.norm(jac(p).T @ resid(p)))
    if gnorm > tol:
        raise FitConvergenceError(
            f"gradient norm {gnorm:.3e} above criterion {tol:.3e} "
            f"after {max_iter} iterations"
        )

    pm, c, phi0 = p
    if c < 0.0:
        c = -c
        phi0 += math.pi
    phi0 = (phi0 + math.pi) % (2.0 * math.pi) - math.pi
    p = np.array([pm, c, phi0])

    r = resid(p)
    J = jac(p)
    n = r.size
    s2 = float(r @ r) / (n - 3)
    cov = s2 * np.linalg.pinv(J.T @ J)
    return FringeFit(
        p_mean=float(pm),
        contrast=float(c),
        alpha0=abar + phi0 / t2,
        sigma_c=float(math.sqrt(max(cov[1, 1], 0.0))),
        residual_rms=float(math.sqrt(float(r @ r) / n)),
    )


def contrast_series_from_fits(
    t_list, fits: list[FringeFit]
) -> ContrastSeries:
    return ContrastSeries(
        t_sep=np.asarray(t_list, dtype=float),
        contrast=np.array([f.contrast for f in fits]),
        sigma_c=np.array([f.sigma_c for f in fits]),
    )


def _wls_line(x: np.ndarray, y: np.ndarray, w: np.ndarray):
    """Weighted straight-line fit; covariance from the normal equations."""
    design = np.column_stack([np.ones_like(x), x])
    normal = design.T @ (design * w[:, None])
    if not np.all(np.isfinite(normal)) or np.linalg.cond(normal) > 1e14:
        raise SingularFitError("normal matrix is singular (no spread in regressor)")
    cov = np.linalg.inv(normal)
    beta = cov @ (design.T @ (w * y))
    return beta, cov


def _usable_points(series: ContrastSeries):
    """Drop points whose contrast is within 3 sigma of zero: their log is
    ill-conditioned and would dominate the weighted fit spuriously."""
    keep = series.contrast > 3.0 * series.sigma_c
    if not np.all(keep):
        warnings.warn(
            f"excluding {int(np.sum(~keep))} contrast point(s) with C <= 3*sigma_C "
            "from the decay fit",
            stacklevel=3,
        )
    t, c, s = series.t_sep[keep], series.contrast[keep], series.sigma_c[keep]
    if np.unique(t).size < 2:
        raise SingularFitError("need >= 2 distinct t_sep values after exclusions")
    return t, c, s


def fit_contrast_decay(series: ContrastSeries, species: AtomSpecies) -> DecayFit:
    """Weighted regression of ln C on T; slope mapped to lambda via -2*N^2.

    Weights are 1/sigma_lnC^2 with sigma_lnC = sigma_c/contrast (first-order
    propagation).
    """
    t, c, s = _usable_points(series)
    y = np.log(c)
    w = (c / s) ** 2
    beta, cov = _wls_line(t, y, w)
    scale = -1.0 / (2.0 * species.nucleon_count**2)
    jac = np.diag([1.0, scale])
    cov_out = jac @ cov @ jac.T
    return DecayFit(
        ln_c0=float(beta[0]),
        lambda_fit=float(beta[1] * scale),
        sigma_lambda=float(math.sqrt(cov_out[1, 1])),
        covariance=cov_out,
    )


def fit_lambda_at_rc(
    series: ContrastSeries,
    r_c: float,
    species: AtomSpecies,
    geometry: InterferometerConfig,
) -> DecayFit:
    """Decay fit keeping the full r_C dependence of the phase variance.

    The variance is linear in lambda, so ln C = ln C0 - lam * g(T) with
    g(T) = phase_variance(lam=1, r_C; T)/2 is still a linear regression.
    """
    if r_c <= 0.0:
        raise ValueError(f"r_c must be > 0, got {r_c}")
    t, c, s = _usable_points(series)
    unit = CslParams(collapse_rate=1.0, correlation_length=r_c)
    x = np.array(
        [
            -0.5 * phase_variance(unit, species, replace(geometry, t_sep=float(ti)))
            for ti in t
        ]
    )
    y = np.log(c)
    w = (c / s) ** 2
    beta, cov = _wls_line(x, y, w)
    return DecayFit(
        ln_c0=float(beta[0]),
        lambda_fit=float(beta[1]),
        sigma_lambda=float(math.sqrt(cov[1, 1])),
        covariance=cov,
    )


def lambda_upper_bound(
    fit: DecayFit, policy: str = "fit-value", k: float = 1.0
) -> float:
    """Collapse-rate upper bound under the chosen reporting policy.

    "fit-value" reports max(lambda_fit, 0) with sigma_lambda alongside in
    the fit; "fit-plus-k-sigma" adds k standard deviations.
    """
    clamped = max(fit.lambda_fit, 0.0)
    if policy == "fit-value":
        return clamped
    if policy == "fit-plus-k-sigma":
        return clamped + k * fit.sigma_lambda
    raise ValueError(f"unknown bound policy: {policy!r}")


def exclusion_curve(
    series: ContrastSeries,
    species: AtomSpecies,
    geometry: InterferometerConfig,
    sigma: float,
    rc_grid,
    safety: float = 0.1,
    policy: str = "fit-value",
    k: float = 1.0,
) -> ExclusionCurve:
    """Combined exclusion boundary over a sorted r_C grid.

    At each r_C the bound is the smaller of the interferometric fit bound
    and the packet-overlap bound (slope * r_C^2, with the slope set by the
    longest interferometer time in the series).  The crossover r_C between
    the two branches is located by bisection.
    """
    rc_grid = np.asarray(rc_grid, dtype=float)
    if rc_grid.size < 1 or np.any(rc_grid <= 0.0):
        raise ValueError("rc_grid must contain positive values")
    if np.any(np.diff(rc_grid) <= 0.0):
        raise ValueError("rc_grid must be strictly increasing")

    slope = overlap_bound(sigma, 2.0 * float(series.t_sep.max()), species, safety)

    def interferometric(rc: float) -> float:
        return lambda_upper_bound(
            fit_lambda_at_rc(series, rc, species, geometry), policy, k
        )

    samples = []
    for rc in rc_grid:
        li = interferometric(float(rc))
        lo = slope * rc * rc
        if lo < li:
            samples.append((float(rc), float(lo), "overlap"))
        else:
            samples.append((float(rc), float(li), "interferometric"))

    crossover = None
    for (r_lo, _, s_lo), (r_hi, _, s_hi) in zip(samples, samples[1:]):
        if s_lo != s_hi:
            f_lo = interferometric(r_lo) - slope * r_lo**2
            lo, hi = r_lo, r_hi
            if f_lo < 0.0:
                lo, hi = hi, lo  # keep f(lo) > 0
            for _ in range(100):
                if abs(hi - lo) <= 1e-9 * min(abs(lo), abs(hi)):
                    break
                mid = math.sqrt(lo * hi)
                if interferometric(mid) - slope * mid**2 > 0.0:
                    lo = mid
                else:
                    hi = mid
            crossover = math.sqrt(lo * hi)
            break

    return ExclusionCurve(samples=tuple(samples), crossover_rc=crossover)


def synth_fringe(
    truth: FringeTruth,
    geometry: InterferometerConfig,
    t_sep: float,
    noise: ReadNoise,
    species: AtomSpecies,
    n_points: int = 40,
    scan_index: int = 0,
) -> FringeScan:
    """One synthetic fringe scan at the given pulse separation.

    Populations follow the fringe model with contrast
    c0 * exp(-phase_variance/2), plus Gaussian read noise, clamped to
    [0, 1] (clamps are logged).  The noise comes from the substream
    (seed, scan_index), so any scan regenerates on its own.
    """
    t = float(t_sep)
    csl = CslParams(truth.collapse_rate, truth.correlation_length)
    ifo = replace(geometry, t_sep=t)
    c_t = truth.c0 * math.exp(-0.5 * phase_variance(csl, species, ifo))
    alpha0 = ifo.k_eff * ifo.gravity
    half = math.pi / t**2
    alphas = alpha0 + np.linspace(-half, half, n_points)
    pop = truth.p_mean + 0.5 * c_t * np.cos((alpha0 - alphas) * t**2)
    if noise.sigma_p > 0.0:
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=noise.seed, spawn_key=(scan_index,))
        )
        pop = pop + noise.sigma_p * rng.standard_normal(n_points)
    n_clamped = int(np.sum((pop < 0.0) | (pop > 1.0)))
    if n_clamped:
        logger.warning(
            "scan %d (T=%g s): clamped %d of %d populations to [0, 1]",
            scan_index, t, n_clamped, n_points,
        )
        pop = np.clip(pop, 0.0, 1.0)
    return FringeScan(t_sep=t, alpha=alphas, population=pop)


def synth_fringes(
    truth: FringeTruth,
    geometry: InterferometerConfig,
    t_list,
    noise: ReadNoise,
    species: AtomSpecies,
    n_points: int = 40,
) -> list[FringeScan]:
    """Synthetic fringe scans, one per pulse separation time."""
    return [
        synth_fringe(truth, geometry, t, noise, species, n_points, scan_index=i)
        for i, t in enumerate(t_list)
    ]
