import io
import math
from dataclasses import replace

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from rbcom.config import CavityParams, MediumParams, PhysicalConstants, SystemConfig, validate
from rbcom.echo import round_trip_coefficient
from rbcom.gain import (
    GainState,
    RateEquationParams,
    gain_from_n2,
    integrate_to_steady,
    loop_survival,
    medium_round_trip_time,
    photon_lifetime_from_losses,
    pump_rate_from_power,
    rate_derivatives,
    rate_params_from_config,
    steady_state_gain,
    write_trajectory_csv,
)

import oracles as o

C = 299792458.0


def _params(rp=1e27, tau_c=5e-10, S=0.0):
    return RateEquationParams(rp, tau_c, S, 2.8e-23, C, 230e-6)


@pytest.fixture(scope="module")
def baseline():
    vcfg = validate(SystemConfig())
    params = rate_params_from_config(vcfg)
    sol = integrate_to_steady(GainState(0.0, 0.0), params)
    return vcfg, params, sol


def test_state_rejects_negative():
    with pytest.raises(ValueError):
        GainState(-1.0, 0.0)
    with pytest.raises(ValueError):
        GainState(0.0, -1.0)


def test_params_reject_zero_lifetime():
    with pytest.raises(ValueError):
        _params(tau_c=0.0)


def test_derivatives_empty_cavity():
    assert rate_derivatives(GainState(0.0, 0.0), _params(rp=3e27)) == (3e27, 0.0)


def test_derivatives_balanced_inversion():
    p = _params(rp=1e28)
    n2 = 2e24
    phi = (p.pump_rate_Rp - n2 / p.tau_f) / (n2 * p.sigma * p.light_speed_v)
    dn2, _ = rate_derivatives(GainState(n2, phi), p)
    assert abs(dn2) <= 1e-12 * p.pump_rate_Rp


def test_derivatives_extended_precision():
    p = _params(rp=4.1e27, tau_c=7.3e-10, S=1.2e12)
    n2, phi = 1.3e24, 4.4e17
    dn2, dphi = rate_derivatives(GainState(n2, phi), p)
    sv = mp.mpf(2.8e-23) * mp.mpf(C)
    ref_n2 = -mp.mpf(n2) * phi * sv - mp.mpf(n2) / mp.mpf(230e-6) + mp.mpf(4.1e27)
    ref_phi = mp.mpf(n2) * phi * sv - mp.mpf(phi) / mp.mpf(7.3e-10) + mp.mpf(1.2e12)
    assert o.rel(dn2, ref_n2) < 1e-12
    assert o.rel(dphi, ref_phi) < 1e-12


@pytest.mark.parametrize(
    "n2, expected",
    [(0.0, 1.0), (2 * math.log(1.1738) / (2.8e-23 * 0.01), 1.1738)],
)
def test_gain_from_n2(n2, expected):
    assert gain_from_n2(n2, 2.8e-23, 0.01) == pytest.approx(expected, rel=1e-14)


def test_steady_state_gain_examples():
    assert steady_state_gain(CavityParams(r_s=0.0), 1.0, 1.0) == 1.0
    g = steady_state_gain(CavityParams(), 0.9, 0.949)
    assert o.rel(g, o.steady_gain(1, 1, o.t_s(0.1), 0.9, 0.949)) < 1e-14
    assert g == pytest.approx(1.1738, abs=5e-5)
    assert round_trip_coefficient(1.0, 1.0, 0.9, 0.949, g, math.sqrt(0.99)) == pytest.approx(1.0, abs=1e-12)


def test_steady_state_gain_zero_guard():
    with pytest.raises(ZeroDivisionError):
        steady_state_gain(CavityParams(), 0.0, 0.949)


@given(st.floats(0.05, 0.99), st.floats(0.05, 0.99), st.floats(0.0, 0.95), st.floats(1.001, 1.2))
def test_steady_state_gain_decreasing(p, ed, rs, factor):
    cav = CavityParams(r_s=rs)
    g = steady_state_gain(cav, p, ed)
    assert steady_state_gain(cav, min(p * factor, 1.0), ed) < g
    assert steady_state_gain(cav, p, min(ed * factor, 1.0)) < g
    assert steady_state_gain(replace(cav, r_s=min(rs * factor + 0.01, 0.99)), p, ed) > g
    assert steady_state_gain(replace(cav, r1=0.9), p, ed) > g


def test_pump_rate():
    med, const = MediumParams(), PhysicalConstants()
    assert pump_rate_from_power(0.0, med, const) == 0.0
    rp = pump_rate_from_power(30.0, med, const)
    ref = mp.mpf(0.65) * 30 / (o.H * mp.mpf(371e12) * mp.mpf(7.854e-7) * mp.mpf(0.01))
    assert o.rel(rp, ref) < 1e-13
    assert pump_rate_from_power(60.0, med, const) == pytest.approx(2 * rp, rel=1e-15)


def test_photon_lifetime_definitional():
    # survival s = p^2, so p = e^(-1/4) gives s^2 = 1/e
    p = math.exp(-0.25)
    cav = CavityParams(r_s=0.0)
    assert photon_lifetime_from_losses(cav, p, 1.0, 1e-9) == pytest.approx(1e-9, rel=1e-14)


def test_photon_lifetime_baseline_and_limits():
    cav = CavityParams()
    tau = photon_lifetime_from_losses(cav, 0.9, 0.949, 2 * 5.0 / C)
    s = o.t_s(0.1) * mp.mpf(0.81) * mp.mpf(0.949) ** 2
    assert o.rel(tau, (2 * mp.mpf(5) / o.C) / (-mp.log(s**2))) < 1e-13
    taus = [photon_lifetime_from_losses(CavityParams(r_s=0.0), p, 1.0, 1e-9) for p in (0.9, 0.99, 0.999)]
    assert taus[0] < taus[1] < taus[2]
    with pytest.raises(ValueError):
        photon_lifetime_from_losses(CavityParams(r_s=0.0), 1.0, 1.0, 1e-9)


def test_loop_survival_matches_product():
    assert loop_survival(CavityParams(), 0.9, 0.949) == pytest.approx(math.sqrt(0.99) * 0.81 * 0.949**2, rel=1e-15)


def test_pure_decay_to_zero():
    p = _params(rp=0.0, S=0.0)
    sol = integrate_to_steady(GainState(1e24, 1e16), p)
    assert sol.converged
    assert sol.state.n2 < 1e-6 * 1e24
    assert sol.state.phi < 1e-6 * 1e16


def test_zero_pump_cold_start_unity_gain():
    vcfg = validate(replace(SystemConfig(), pump=replace(SystemConfig().pump, power_Pin=0.0)))
    sol = integrate_to_steady(GainState(0.0, 0.0), rate_params_from_config(vcfg))
    assert sol.converged
    assert gain_from_n2(sol.state.n2, 2.8e-23, 0.01) == 1.0


def test_baseline_steady_state_algebraic(baseline):
    _, params, sol = baseline
    assert sol.converged
    rp, tc, S = mp.mpf(params.pump_rate_Rp), mp.mpf(params.photon_lifetime_tau_c), mp.mpf(params.spont_seed_S)
    sv, tf = mp.mpf(params.sigma) * mp.mpf(params.light_speed_v), mp.mpf(params.tau_f)
    # eliminate n2 from dn2/dt = 0 and solve dphi/dt = 0 for phi
    n2_of = lambda phi: rp / (phi * sv + 1 / tf)
    phi_star = mp.findroot(lambda phi: n2_of(phi) * phi * sv - phi / tc + S, mp.mpf(sol.state.phi))
    assert o.rel(sol.state.phi, phi_star) < 1e-6
    assert o.rel(sol.state.n2, n2_of(phi_star)) < 1e-7


def test_baseline_stationarity(baseline):
    _, params, sol = baseline
    dn2, dphi = rate_derivatives(sol.state, params)
    assert abs(dn2) * params.tau_f / sol.state.n2 < 1e-7
    assert abs(dphi) * params.photon_lifetime_tau_c / sol.state.phi < 1e-7


def test_baseline_dynamic_gain_matches_closed_form(baseline):
    vcfg, _, sol = baseline
    g_dyn = gain_from_n2(sol.state.n2, vcfg.medium.sigma, vcfg.medium.length_l)
    g_closed = steady_state_gain(vcfg.cavity, vcfg.bias_p, vcfg.eta_d)
    assert abs(g_dyn - g_closed) / g_closed < 1e-6
    loop = round_trip_coefficient(1.0, 1.0, vcfg.bias_p, vcfg.eta_d, g_dyn, vcfg.t_s)
    assert abs(loop - 1.0) < 1e-4


def test_fixed_point_idempotent(baseline):
    _, params, sol = baseline
    again = integrate_to_steady(sol.state, params)
    assert again.converged
    assert again.state.n2 == pytest.approx(sol.state.n2, rel=1e-7)
    assert again.state.phi == pytest.approx(sol.state.phi, rel=1e-7)


def test_non_convergence_reported():
    vcfg = validate(SystemConfig())
    sol = integrate_to_steady(GainState(0.0, 0.0), rate_params_from_config(vcfg), max_time=1e-5)
    assert not sol.converged
    assert sol.state.time_t == pytest.approx(1e-5, rel=1e-12)


def test_trajectory_non_negative_and_increasing(baseline):
    _, _, sol = baseline
    assert (sol.n2 >= 0).all() and (sol.phi >= 0).all()
    assert (sol.t[1:] > sol.t[:-1]).all()


def test_trajectory_csv(baseline):
    _, _, sol = baseline
    buf = io.StringIO()
    write_trajectory_csv(sol, 2.8e-23, 0.01, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,n2,phi,G"
    assert len(lines) == sol.t.size + 1


@settings(max_examples=8, deadline=None)
@given(st.floats(15.0, 60.0), st.floats(0.02, 0.25), st.floats(0.0, 0.5))
def test_negative_feedback_reaches_unit_loop_gain(power, m, r_s):
    cfg = SystemConfig()
    cfg = replace(cfg, pump=replace(cfg.pump, power_Pin=power),
                  modulation=replace(cfg.modulation, depth_m=m, bias_p=1 - m),
                  cavity=replace(cfg.cavity, r_s=r_s))
    vcfg = validate(cfg)
    params = rate_params_from_config(vcfg)
    if params.steady_phi_estimate == 0.0:
        return  # below threshold: nothing to balance
    sol = integrate_to_steady(GainState(0.0, 0.0), params)
    assert sol.converged
    g = gain_from_n2(sol.state.n2, vcfg.medium.sigma, vcfg.medium.length_l)
    loop = round_trip_coefficient(1.0, 1.0, vcfg.bias_p, vcfg.eta_d, g, vcfg.t_s)
    assert abs(loop - 1.0) < 1e-4


def test_medium_round_trip():
    assert medium_round_trip_time(MediumParams(), PhysicalConstants()) == 2 * 0.01 / C
