"""Monte Carlo oracle for the collapse phase, independent of the closed form.

The 3-D white-noise field is never put on a spatial grid: its spatial
integral is collapsed analytically, leaving per-time-step Gaussian phase
increments whose variance depends only on the instantaneous arm separation,

    step_variance = 2 * lam * N**2 * (1 - exp(-sep**2 / (4*r_C**2))) * dt.

Each sampled phase is the sum of independent zero-mean Gaussian increments
over the time grid (midpoint separations).  For speed, contiguous steps are
pooled into at most _POOL_GROUPS exact group increments; the pooled variance
is the sum of the step variances, so the sampled distribution is unchanged.

Determinism contract: samples are produced in fixed chunks of _CHUNK draws,
each chunk from its own counter-based Philox stream keyed by
(seed, chunk_index), and moments are reduced in fixed chunk order.  Results
are therefore bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import AtomSpecies, CslParams, InterferometerConfig

__all__ = [
    "McEstimate",
    "NoiseModel",
    "PathPair",
    "estimate_contrast_mc",
    "estimate_phase_variance_mc",
    "riemann_phase_variance",
    "sample_phase",
    "sample_phases",
    "step_variance",
]

_CHUNK = 4096  # samples per RNG stream
_POOL_GROUPS = 256  # max Gaussian increments drawn per sample
_STEP_FLOOR = 100  # dt must resolve T at least this finely


@dataclass(frozen=True)
class PathPair:
    """Closed interferometer loop as two piecewise-linear (t, z) breakpoint lists.

    Coordinates are in the frame falling with the atoms (only the path
    difference matters, so the frame choice drops out).  Upper arm: kick to
    v2 first, back to v1 after the mirror pulse; lower arm the other way
    round.  Both start and end at the same point.
    """

    upper: tuple[tuple[float, float], ...]
    lower: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.upper[0] != self.lower[0] or self.upper[-1] != self.lower[-1]:
            raise ValueError("paths must form a closed loop")

    @classmethod
    def from_config(cls, ifo: InterferometerConfig) -> "PathPair":
        t, v1, v2 = ifo.t_sep, ifo.v1, ifo.v2
        upper = ((0.0, 0.0), (t, v2 * t), (2.0 * t, v2 * t + v1 * t))
        lower = ((0.0, 0.0), (t, v1 * t), (2.0 * t, v1 * t + v2 * t))
        return cls(upper, lower)

    @property
    def total_time(self) -> float:
        return self.upper[-1][0]

    def separations(self, times: np.ndarray) -> np.ndarray:
        """|z_upper - z_lower| at the given times (piecewise-linear interp)."""
        tu, zu = zip(*self.upper)
        tl, zl = zip(*self.lower)
        return np.abs(np.interp(times, tu, zu) - np.interp(times, tl, zl))


@dataclass(frozen=True)
class NoiseModel:
    """Seed and time resolution of the sampled noise.

    Identical (seed, dt) and inputs give bit-identical sample streams.
    """

    seed: int
    dt: float  # s

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")


@dataclass(frozen=True)
class McEstimate:
    """Point estimate with its sampling uncertainty.

    `variance` is the sample variance of the per-draw statistic behind
    `mean`, so std_error = sqrt(variance / n_samples).
    """

    mean: float
    variance: float
    std_error: float
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")


def step_variance(
    csl: CslParams, species: AtomSpecies, separation: float, dt: float
) -> float:
    """Variance of one Gaussian phase increment at the given arm separation."""
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    x = (separation / (2.0 * csl.correlation_length)) ** 2
    return 2.0 * csl.collapse_rate * species.nucleon_count**2 * (-np.expm1(-x)) * dt


def _step_grid(paths: PathPair, dt: float) -> tuple[np.ndarray, float]:
    """Midpoint separations on a uniform grid tiling [0, total_time].

    The step is snapped so an integer number of steps covers the loop;
    dt must satisfy the resolution floor dt <= T/100.
    """
    total = paths.total_time
    t_sep = 0.5 * total
    if dt > t_sep / _STEP_FLOOR * (1.0 + 1e-12):
        raise ValueError(
            f"dt={dt} too coarse: resolution floor is T/{_STEP_FLOOR} = {t_sep / _STEP_FLOOR}"
        )
    n_steps = max(1, round(total / dt))
    dt_eff = total / n_steps
    mids = (np.arange(n_steps) + 0.5) * dt_eff
    return paths.separations(mids), dt_eff


def _step_variances(
    csl: CslParams, species: AtomSpecies, paths: PathPair, dt: float
) -> tuple[np.ndarray, float]:
    seps, dt_eff = _step_grid(paths, dt)
    x = (seps / (2.0 * csl.correlation_length)) ** 2
    v = 2.0 * csl.collapse_rate * species.nucleon_count**2 * (-np.expm1(-x)) * dt_eff
    return v, dt_eff


def riemann_phase_variance(
    csl: CslParams, species: AtomSpecies, paths: PathPair, dt: float
) -> float:
    """Deterministic midpoint Riemann sum of step_variance over the loop.

    Converges to the closed-form phase variance as dt -> 0; this sum is the
    exact variance of the sampled phase distribution at resolution dt.
    """
    v, _ = _step_variances(csl, species, paths, dt)
    return float(v.sum())


def _group_sigmas(v: np.ndarray) -> np.ndarray:
    """Pool consecutive step variances into <= _POOL_GROUPS exact groups."""
    n = v.size
    ng = min(n, _POOL_GROUPS)
    edges = (np.arange(ng) * n) // ng
    return np.sqrt(np.add.reduceat(v, edges))


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, chunk_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_phases(
    csl: CslParams,
    species: AtomSpecies,
    paths: PathPair,
    noise: NoiseModel,
    n_samples: int,
    threads: int = 1,
) -> np.ndarray:
    """Draw n_samples independent collapse phases along the loop.

    Each draw sums independent zero-mean Gaussian increments over the time
    grid; the result is exactly Gaussian with the Riemann-sum variance.
    The output is independent of `threads`.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    v, _ = _step_variances(csl, species, paths, noise.dt)
    sig = _group_sigmas(v)
    out = np.empty(n_samples)
    n_chunks = -(-n_samples // _CHUNK)

    def fill(ci: int) -> None:
        lo = ci * _CHUNK
        hi = min(lo + _CHUNK, n_samples)
        draws = _chunk_rng(noise.seed, ci).standard_normal((hi - lo, sig.size))
        out[lo:hi] = np.einsum("ij,j->i", draws, sig)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(n_chunks)))
    else:
        for ci in range(n_chunks):
            fill(ci)
    return out


def sample_phase(
    csl: CslParams, species: AtomSpecies, paths: PathPair, noise: NoiseModel
) -> float:
    """One draw of the collapse phase (the first sample of the stream)."""
    return float(sample_phases(csl, species, paths, noise, 1)[0])


def estimate_phase_variance_mc(
    csl: CslParams,
    species: AtomSpecies,
    ifo: InterferometerConfig,
    n_samples: int,
    noise: NoiseModel,
    threads: int = 1,
) -> McEstimate:
    """Sample-variance estimate of the collapse phase over the loop."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    phases = sample_phases(
        csl, species, PathPair.from_config(ifo), noise, n_samples, threads
    )
    dev2 = (phases - phases.mean()) ** 2
    var_hat = float(dev2.sum() / (n_samples - 1))
    se = float(dev2.std(ddof=1) / math.sqrt(n_samples))
    return McEstimate(
        mean=var_hat,
        variance=float(dev2.var(ddof=1)),
        std_error=se,
        n_samples=n_samples,
    )


def estimate_contrast_mc(
    csl: CslParams,
    species: AtomSpecies,
    ifo: InterferometerConfig,
    n_samples: int,
    noise: NoiseModel,
    threads: int = 1,
) -> McEstimate:
    """Contrast estimate |mean(exp(i*phase))| over the samples.

    For the Gaussian phase this converges to exp(-var/2).  The uncertainty
    is taken along the mean-vector direction, which is the first-order
    (delta-method) standard error of the modulus.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    phases = sample_phases(
        csl, species, PathPair.from_config(ifo), noise, n_samples, threads
    )
    c, s = np.cos(phases), np.sin(phases)
    mx, my = float(c.mean()), float(s.mean())
    mod = math.hypot(mx, my)
    if mod > 0.0:
        proj = (c * mx + s * my) / mod
    else:
        proj = c
    var = float(proj.var(ddof=1))
    return McEstimate(
        mean=mod,
        variance=var,
        std_error=math.sqrt(var / n_samples),
        n_samples=n_samples,
    )
