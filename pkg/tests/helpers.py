"""Shared test oracles and generators, independent of the package internals."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.integrate import quad

from cslmzi import AtomSpecies, CslParams, InterferometerConfig, WavePacketPair
from cslmzi.constants import CONSTANTS


def erf_maclaurin(x: float, terms: int = 200) -> float:
    """erf by its power series summed in exact rational arithmetic.

    erf(x) = (2/sqrt(pi)) * sum_n (-1)^n x^(2n+1) / (n! (2n+1)); the sum is
    exact in Fractions, so the only rounding is the final float conversion.
    Adequate for |x| <= 6 with 200 terms.
    """
    xf = Fraction(x)
    x2 = xf * xf
    power = xf  # x^(2n+1) / n!, with sign
    total = Fraction(0)
    for n in range(terms):
        total += power / (2 * n + 1)
        power = -power * x2 / (n + 1)
    return 2.0 / math.sqrt(math.pi) * float(total)


def quad_loop_variance(
    csl: CslParams, species: AtomSpecies, ifo: InterferometerConfig
) -> float:
    """Loop phase variance by direct time quadrature, no erf involved.

    Integrates 2*lam*N^2 * (1 - exp(-(sep(t)/(2*r_C))^2)) over [0, 2T] with
    the piecewise-linear separation profile sep(t) = dv*t then dv*(2T - t).
    """
    dv = abs(ifo.v2 - ifo.v1)
    t_sep = ifo.t_sep
    r = csl.correlation_length
    pref = 2.0 * csl.collapse_rate * species.nucleon_count**2

    def integrand(t: float) -> float:
        sep = dv * t if t <= t_sep else dv * (2.0 * t_sep - t)
        return -math.expm1(-((sep / (2.0 * r)) ** 2))

    # bracket the boundary layers at t = 0 and t = 2T with a geometric
    # ladder so the adaptive rule cannot step over them at large u
    pts = {t_sep}
    if dv > 0.0:
        width = 2.0 * r / dv  # scale on which the integrand turns over
        for k in (1.0, 2.0, 4.0, 8.0, 16.0, 32.0):
            pts.add(k * width)
            pts.add(2.0 * t_sep - k * width)
    pts = sorted(p for p in pts if 0.0 < p < 2.0 * t_sep)
    val, _ = quad(
        integrand, 0.0, 2.0 * t_sep, points=pts, epsabs=0.0, epsrel=1e-11,
        limit=400,
    )
    return pref * val


def draw_param_sets(seed: int, n: int, u_lo: float = 1e-3, u_hi: float = 1e4):
    """Random parameter sets spanning both correlation-length regimes.

    Masses are exact nucleon multiples of m0 so that closed-loop and
    wave-packet expressions use identical mass factors; the arm split is
    drawn large enough that the packet-separation regime holds with margin
    (the packet width is taken at its minimizing sigma).
    """
    rng = np.random.default_rng(seed)
    sets = []
    for _ in range(n):
        nucleons = int(rng.integers(1, 301))
        mass = nucleons * CONSTANTS.m0
        species = AtomSpecies(nucleon_count=nucleons, mass=mass)
        t_sep = float(rng.uniform(0.02, 0.6))
        dv_min = 12.0 / math.sqrt(mass * t_sep / CONSTANTS.hbar)
        dv = 10.0 ** rng.uniform(math.log10(max(1e-4, dv_min)), math.log10(0.1))
        u = 10.0 ** rng.uniform(math.log10(u_lo), math.log10(u_hi))
        r_c = dv * t_sep / (2.0 * u)
        lam = 10.0 ** rng.uniform(-7.0, -3.0)
        csl = CslParams(collapse_rate=lam, correlation_length=r_c)
        ifo = InterferometerConfig.for_species(species, t_sep, 0.0, dv)
        sigma = math.sqrt(CONSTANTS.hbar * t_sep / (2.0 * mass))
        wp = WavePacketPair(
            sigma=sigma, k1=0.0, k2=mass * dv / CONSTANTS.hbar, species=species
        )
        sets.append({"csl": csl, "species": species, "ifo": ifo, "wp": wp, "u": u})
    return sets
