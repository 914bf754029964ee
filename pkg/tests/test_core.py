import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cslmzi import (
    AtomSpecies,
    CslParams,
    InterferometerConfig,
    RUBIDIUM_87,
    contrast,
    erf,
    mz_phase,
    phase_statistics,
    phase_variance,
    phase_variance_large_rc,
    phase_variance_small_rc,
    population,
    variance_bracket,
)
from helpers import draw_param_sets, erf_maclaurin, quad_loop_variance

RB = RUBIDIUM_87


def rb_ifo(t_sep=0.26, v1=0.0, v2=11e-3, chirp_rate=0.0):
    return InterferometerConfig.for_species(RB, t_sep, v1, v2, chirp_rate)


# ----------------------------------------------------------------- erf


def test_erf_frozen_values():
    assert erf(0.0) == 0.0
    assert abs(erf(1.0) - 0.8427007929497149) < 1e-15
    assert abs(erf(10.0) - 1.0) < 1e-15  # saturated
    assert abs(erf(-10.0) + 1.0) < 1e-15


def test_erf_against_series_oracle():
    for x in np.linspace(0.05, 6.0, 40):
        assert abs(erf(float(x)) - erf_maclaurin(float(x))) <= 1e-12


@given(st.floats(min_value=-6.0, max_value=6.0))
def test_erf_odd_and_bounded(x):
    assert abs(erf(-x) + erf(x)) <= 1e-15
    assert abs(erf(x)) <= 1.0


# ------------------------------------------------------ variance bracket


def test_bracket_seam_continuity():
    # series side and erf side agree around the switch point
    for u in (0.029, 0.0299, 0.03, 0.0301, 0.031):
        direct = 1.0 - 0.5 * math.sqrt(math.pi) * erf(u) / u
        assert variance_bracket(u) == pytest.approx(direct, rel=1e-11)


def test_bracket_range_and_evenness():
    assert variance_bracket(0.0) == 0.0
    for u in (1e-6, 1e-3, 0.1, 1.0, 10.0, 1e4):
        b = variance_bracket(u)
        assert 0.0 < b < 1.0
        assert b <= u * u / 3.0 * (1.0 + 1e-12)
        assert variance_bracket(-u) == b


# -------------------------------------------------------- phase variance


def test_phase_variance_identical_arms_is_zero():
    csl = CslParams(1e-4, 1e-7)
    assert phase_variance(csl, RB, rb_ifo(v1=5e-3, v2=5e-3)) == 0.0


def test_phase_variance_zero_rate_is_zero():
    assert phase_variance(CslParams(0.0, 1e-7), RB, rb_ifo()) == 0.0


def test_phase_variance_reference_point():
    # u ~ 1.43e4, correction term (sqrt(pi)/2)/u ~ 6e-5 relative
    csl = CslParams(5.6e-5, 1e-7)
    v = phase_variance(csl, RB, rb_ifo())
    flat = 4.0 * 5.6e-5 * 87**2 * 0.26
    assert abs(v - flat) / flat < 1e-4
    assert v < flat


def test_phase_variance_against_quadrature():
    for params in draw_param_sets(seed=101, n=5):
        expected = quad_loop_variance(params["csl"], params["species"], params["ifo"])
        got = phase_variance(params["csl"], params["species"], params["ifo"])
        assert got == pytest.approx(expected, rel=1e-8)


def test_phase_variance_sign_convention():
    # even in the velocity difference
    csl = CslParams(3e-5, 2e-5)
    a = phase_variance(csl, RB, rb_ifo(v1=0.0, v2=11e-3))
    b = phase_variance(csl, RB, rb_ifo(v1=11e-3, v2=0.0))
    assert a == b


@settings(max_examples=60, deadline=None)
@given(
    lam=st.floats(1e-8, 1e-2),
    rc=st.floats(1e-9, 1e-2),
    t_sep=st.floats(0.01, 1.0),
    dv=st.floats(1e-5, 0.1),
    nucleons=st.integers(1, 300),
    scale=st.floats(1.1, 10.0),
)
def test_phase_variance_monotonicity(lam, rc, t_sep, dv, nucleons, scale):
    species = AtomSpecies(nucleons, nucleons * 1.66053906660e-27)
    base = phase_variance(
        CslParams(lam, rc), species, rb_ifo(t_sep=t_sep, v2=dv)
    )
    assert base >= 0.0
    up = [
        phase_variance(CslParams(lam * scale, rc), species, rb_ifo(t_sep=t_sep, v2=dv)),
        phase_variance(CslParams(lam, rc), species, rb_ifo(t_sep=t_sep * scale, v2=dv)),
        phase_variance(CslParams(lam, rc), species, rb_ifo(t_sep=t_sep, v2=dv * scale)),
        phase_variance(
            CslParams(lam, rc),
            AtomSpecies(nucleons + 1, (nucleons + 1) * 1.66053906660e-27),
            rb_ifo(t_sep=t_sep, v2=dv),
        ),
    ]
    assert all(v >= base * (1.0 - 1e-12) for v in up)
    down = phase_variance(CslParams(lam, rc * scale), species, rb_ifo(t_sep=t_sep, v2=dv))
    assert down <= base * (1.0 + 1e-12)


# ------------------------------------------------------------ the limits


def test_small_rc_value():
    csl = CslParams(5.6e-5, 1e-9)
    assert phase_variance_small_rc(csl, RB, rb_ifo()) == pytest.approx(
        0.44081856, rel=1e-10
    )
    assert phase_variance_small_rc(CslParams(0.0, 1e-9), RB, rb_ifo()) == 0.0
    # linear in T
    assert phase_variance_small_rc(csl, RB, rb_ifo(t_sep=0.52)) == pytest.approx(
        2.0 * phase_variance_small_rc(csl, RB, rb_ifo(t_sep=0.26)), rel=1e-12
    )
    # cross-check against the full expression deep in the regime
    full = phase_variance(csl, RB, rb_ifo())
    assert full == pytest.approx(phase_variance_small_rc(csl, RB, rb_ifo()), rel=1e-3)


def test_large_rc_value():
    csl = CslParams(1e-4, 1.0)
    expected = 1e-4 * 87**2 * (11e-3) ** 2 * 0.26**3 / 3.0  # direct arithmetic
    got = phase_variance_large_rc(csl, RB, rb_ifo())
    assert got == pytest.approx(expected, rel=1e-12)
    # full expression agrees to 1e-6 at these inputs (u ~ 1.4e-3)
    assert phase_variance(csl, RB, rb_ifo()) == pytest.approx(got, rel=1e-6)


def test_large_rc_scalings():
    assert phase_variance_large_rc(CslParams(1e-4, 1.0), RB, rb_ifo(v1=3e-3, v2=3e-3)) == 0.0
    a = phase_variance_large_rc(CslParams(1e-4, 1.0), RB, rb_ifo())
    b = phase_variance_large_rc(CslParams(1e-4, 10.0), RB, rb_ifo())
    assert b == pytest.approx(a / 100.0, rel=1e-12)


def test_asymptotic_agreement():
    csl_for = lambda u: CslParams(3e-5, 11e-3 * 0.26 / (2.0 * u))
    for u in (100.0, 1e3, 1e4):
        v = phase_variance(csl_for(u), RB, rb_ifo())
        flat = phase_variance_small_rc(csl_for(u), RB, rb_ifo())
        assert abs(v - flat) / flat <= 2.0 / (math.sqrt(math.pi) * u) + 1e-12
    for u in (1e-4, 1e-3, 1e-2):
        v = phase_variance(csl_for(u), RB, rb_ifo())
        lim = phase_variance_large_rc(csl_for(u), RB, rb_ifo())
        assert abs(v - lim) / lim <= 1e-3


# -------------------------------------------------------------- MZ phase


def test_mz_phase_compensated_chirp_is_zero():
    ifo = rb_ifo()
    balanced = replace(ifo, chirp_rate=ifo.k_eff * ifo.gravity)
    assert mz_phase(balanced) == 0.0


def test_mz_phase_effective_wave_number():
    ifo = rb_ifo()
    assert ifo.k_eff == pytest.approx(1.502e7, rel=1e-3)
    # one significant figure consistent with the quoted 1.6e7
    assert abs(ifo.k_eff - 1.6e7) < 1.5e6


def test_mz_phase_direct_product():
    ifo = InterferometerConfig(t_sep=1.0, v1=0.0, v2=0.0, chirp_rate=0.0,
                               gravity=9.81, k_eff=1.0)
    assert mz_phase(ifo) == pytest.approx(9.81, rel=1e-15)


# ------------------------------------------------------------ population


def test_population_extremes():
    no_csl = CslParams(0.0, 1e-7)
    ifo0 = InterferometerConfig(t_sep=1.0, v1=0.0, v2=1e-3, chirp_rate=0.0,
                                gravity=9.812, k_eff=0.0)
    assert population(no_csl, RB, replace(ifo0, gravity=0.0)) == 1.0
    assert population(no_csl, RB, replace(ifo0, gravity=0.0, chirp_rate=-math.pi)) == 0.0


def test_population_reference_value():
    # variance 0.4408 at zero deterministic phase
    csl = CslParams(5.6e-5, 1e-9)
    ifo = rb_ifo()
    balanced = replace(ifo, chirp_rate=ifo.k_eff * ifo.gravity)
    p = population(csl, RB, balanced)
    assert p == pytest.approx(0.5 * (1.0 + math.exp(-0.2204)), abs=2e-5)


@settings(max_examples=50, deadline=None)
@given(
    lam=st.floats(0.0, 1e-2),
    chirp=st.floats(-1e3, 1e3),
    t_sep=st.floats(0.01, 1.0),
)
def test_population_in_unit_interval(lam, chirp, t_sep):
    csl = CslParams(lam, 1e-6)
    ifo = InterferometerConfig(t_sep=t_sep, v1=0.0, v2=11e-3, chirp_rate=chirp,
                               gravity=9.812, k_eff=0.0)
    assert 0.0 <= population(csl, RB, ifo) <= 1.0


def test_population_periodic_in_phase():
    csl = CslParams(2e-5, 1e-7)
    ifo = InterferometerConfig(t_sep=1.0, v1=0.0, v2=11e-3, chirp_rate=-0.5,
                               gravity=9.812, k_eff=0.0)
    shifted = replace(ifo, chirp_rate=-0.5 - 2.0 * math.pi)
    assert abs(population(csl, RB, ifo) - population(csl, RB, shifted)) <= 1e-15


# -------------------------------------------------------------- contrast


def test_contrast_no_collapse():
    assert contrast(CslParams(0.0, 1e-7), RB, rb_ifo()) == 1.0


def test_contrast_reference_value():
    c = contrast(CslParams(5.6e-5, 1e-9), RB, rb_ifo())
    assert c == pytest.approx(math.exp(-0.5 * 0.44081856), rel=1e-5)
    assert c == pytest.approx(0.8022, abs=5e-5)


def test_contrast_exponential_additivity():
    csl = CslParams(5.6e-5, 1e-9)
    t1, t2 = 0.11, 0.17
    lhs = contrast(csl, RB, rb_ifo(t_sep=t1)) * contrast(csl, RB, rb_ifo(t_sep=t2))
    both = math.exp(
        -0.5 * (phase_variance(csl, RB, rb_ifo(t_sep=t1))
                + phase_variance(csl, RB, rb_ifo(t_sep=t2)))
    )
    assert lhs == pytest.approx(both, rel=1e-12)


def test_phase_statistics_fields():
    stats = phase_statistics(CslParams(5.6e-5, 1e-7), RB, rb_ifo())
    assert stats.mean_phase == 0.0
    assert stats.damping_factor == math.exp(-0.5 * stats.phase_variance)


# ------------------------------------------------------------- validation


def test_parameter_validation():
    with pytest.raises(ValueError):
        CslParams(-1e-5, 1e-7)
    with pytest.raises(ValueError):
        CslParams(1e-5, 0.0)
    with pytest.raises(ValueError):
        AtomSpecies(0, 1e-25)
    with pytest.raises(ValueError):
        AtomSpecies(87, -1.0)
    with pytest.raises(ValueError):
        InterferometerConfig(t_sep=0.0, v1=0.0, v2=1e-3)


def test_mass_ratio_close_to_nucleon_count():
    # (m/m0)^2 vs N^2 differ by under 1% for the default species
    assert abs(RB.mass_ratio**2 / RB.nucleon_count**2 - 1.0) < 0.01
