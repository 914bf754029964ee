"""Finite-size wave-packet analysis: spreading, coherence damping, overlap bound.

A pair of Gaussian packets with wave numbers k1 != k2 separates as
x_j(t) = hbar*t*k_j/m while each packet spreads to the physical width
ell(t) = sigma*sqrt(1 + (hbar*t / (2*m*sigma^2))^2).  Collapse noise damps
the coherence between the packets (same closed form as the loop phase
variance) and diffuses each packet in position, which yields the overlap
bound on collapse_rate / r_C^2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy.integrate import IntegrationWarning, quad

from .constants import CONSTANTS
from .core import AtomSpecies, CslParams, variance_bracket

__all__ = [
    "QuadratureError",
    "SeparationRegimeError",
    "SpreadReport",
    "WavePacketPair",
    "coherence_damping",
    "csl_position_variance",
    "decoherence_factor",
    "heating_energy",
    "overlap_bound",
    "packet_width",
    "spread_report",
]


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach its tolerance within the budget."""


class SeparationRegimeError(ValueError):
    """Packets not well separated; the coherence-damping closed form does
    not apply (requires separation >> width and k-split >> 1/width)."""


@dataclass(frozen=True)
class WavePacketPair:
    """Two Gaussian packets of initial width sigma with wave numbers k1, k2."""

    sigma: float  # m
    k1: float  # 1/m
    k2: float  # 1/m
    species: AtomSpecies

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.k1 == self.k2:
            raise ValueError("k1 must differ from k2 for interferometric states")

    def centers(self, t: float) -> tuple[float, float]:
        """Packet centers x_j = hbar*t*k_j/m."""
        scale = CONSTANTS.hbar * t / self.species.mass
        return scale * self.k1, scale * self.k2

    def center_separation(self, t: float) -> float:
        """|x1 - x2| = hbar*t*|k1 - k2|/m."""
        return CONSTANTS.hbar * t * abs(self.k1 - self.k2) / self.species.mass


@dataclass(frozen=True)
class SpreadReport:
    """Packet widths and position variances at one time.

    total_variance is the quantum spread plus the collapse-noise diffusion.
    """

    sigma_t_mag: float  # m, modulus of the complex width
    ell_t: float  # m, physical packet width
    csl_variance: float  # m^2
    total_variance: float  # m^2


def packet_width(sigma: float, t: float, species: AtomSpecies) -> float:
    """Physical width of a freely spreading Gaussian packet at time t."""
    if sigma <= 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    spread = CONSTANTS.hbar * t / (2.0 * species.mass * sigma**2)
    return sigma * math.sqrt(1.0 + spread**2)


def decoherence_factor(
    csl: CslParams,
    species: AtomSpecies,
    k: float,
    dx: float,
    t: float,
    rel_tol: float = 1e-10,
    quad_limit: int = 200,
) -> float:
    """Collapse-noise factor multiplying a density-matrix element.

    exp[-lam*(m/m0)^2 * t * (1 - (1/t) * I)] with
    I = integral_0^t exp(-(dx - hbar*k*tau/m)^2 / (4*r_C^2)) dtau,
    evaluated by adaptive quadrature with subdivision hints at the moving
    Gaussian (center dx*m/(hbar*k), width ~ 2*r_C*m/(hbar*|k|)).
    """
    if t <= 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    r = csl.correlation_length
    vk = CONSTANTS.hbar * k / species.mass

    def integrand(tau: float) -> float:
        return math.exp(-(((dx - vk * tau) / (2.0 * r)) ** 2))

    points = None
    if vk != 0.0:
        center = dx / vk
        width = 2.0 * r / abs(vk)
        points = [
            p for p in (center - 4.0 * width, center, center + 4.0 * width)
            if 0.0 < p < t
        ] or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, abserr = quad(
            integrand, 0.0, t, points=points, epsabs=0.0, epsrel=1e-12,
            limit=quad_limit,
        )
    # the 1e-16*t floor admits errors below double-precision significance
    if abserr > max(rel_tol * abs(val), 1e-16 * t):
        raise QuadratureError(
            f"integral error {abserr:.3e} exceeds tolerance on value {val:.3e}"
        )
    bracket = max(0.0, 1.0 - val / t)
    return math.exp(-csl.collapse_rate * species.mass_ratio**2 * t * bracket)


def coherence_damping(
    csl: CslParams, wp: WavePacketPair, t: float, regime_ratio: float = 10.0
) -> float:
    """Damping of the coherence between the two packets after time t.

    Valid when the packets are far apart compared to their width; the
    factor is then independent of the packet extent and reduces to the
    closed erf form exp[-lam*(m/m0)^2 * t * B(u)], u = hbar*|k1-k2|*t/(2*r_C*m).
    Raises SeparationRegimeError when either separation margin is below
    `regime_ratio`.
    """
    if t <= 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    species = wp.species
    ell = packet_width(wp.sigma, t, species)
    dk = abs(wp.k1 - wp.k2)
    sep = wp.center_separation(t)
    if sep < regime_ratio * ell or dk * ell < regime_ratio:
        raise SeparationRegimeError(
            f"separation/width = {sep / ell:.3g} and k-split*width = "
            f"{dk * ell:.3g}; both must be >= {regime_ratio}"
        )
    u = CONSTANTS.hbar * dk * t / (2.0 * csl.correlation_length * species.mass)
    return math.exp(
        -csl.collapse_rate * species.mass_ratio**2 * t * variance_bracket(u)
    )


def heating_energy(csl: CslParams, species: AtomSpecies, t: float) -> float:
    """Mean energy gained from collapse-noise diffusion after time t (J)."""
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    return (
        3.0
        * species.mass
        * CONSTANTS.hbar**2
        * csl.collapse_rate
        * t
        / (4.0 * CONSTANTS.m0**2 * csl.correlation_length**2)
    )


def csl_position_variance(csl: CslParams, species: AtomSpecies, t: float) -> float:
    """Position variance added by collapse-noise diffusion along z (m^2).

    lam*hbar^2*t^3 / (6*m0^2*r_C^2); an ensemble spread, not a single-packet
    width.
    """
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    return (
        csl.collapse_rate
        * CONSTANTS.hbar**2
        * t**3
        / (6.0 * CONSTANTS.m0**2 * csl.correlation_length**2)
    )


def overlap_bound(
    sigma: float, two_t: float, species: AtomSpecies, safety: float = 0.1
) -> float:
    """Upper bound on collapse_rate / r_C^2 from packet overlap at recombination.

    Requiring the collapse diffusion sqrt(csl_position_variance) to stay
    below safety * ell(2T) gives

        collapse_rate / r_C^2 <= safety^2 * ell(2T)^2 * 6*m0^2 / (hbar^2 * (2T)^3).

    Units 1/(m^2 s).  safety defaults to the conservative 0.1.
    """
    if not 0.0 < safety <= 1.0:
        raise ValueError(f"safety must be in (0, 1], got {safety}")
    if two_t <= 0.0:
        raise ValueError(f"two_t must be > 0, got {two_t}")
    ell = packet_width(sigma, two_t, species)
    return (
        safety**2 * ell**2 * 6.0 * CONSTANTS.m0**2 / (CONSTANTS.hbar**2 * two_t**3)
    )


def spread_report(
    csl: CslParams, species: AtomSpecies, sigma: float, t: float
) -> SpreadReport:
    """Widths and variances of one packet at time t."""
    spread = CONSTANTS.hbar * t / (2.0 * species.mass * sigma**2)
    ell = packet_width(sigma, t, species)
    csl_var = csl_position_variance(csl, species, t)
    return SpreadReport(
        sigma_t_mag=sigma * (1.0 + spread**2) ** 0.25,
        ell_t=ell,
        csl_variance=csl_var,
        total_variance=ell**2 + csl_var,
    )
