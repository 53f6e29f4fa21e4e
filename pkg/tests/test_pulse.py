import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dtft_oracle, rrc_b, rrc_pulse, rrc_time, sinc_pulse, sinc_time
from mscdma.pulse import (
    ChipPulse,
    RootRaisedCosine,
    Sinc,
    Tabulated,
    TypeA,
    TypeB,
    continuous_spectrum,
    delta_vector,
    energy_coefficient,
    folded_transform,
    fourier_phase_vector,
    load_tabulated,
    phase_basis,
    q_matrix,
    q_matrix_fluctuation,
    q_matrix_mean,
    q_scalar_frontend_b,
    rrc_energy,
    rrc_energy_closed_form,
    save_tabulated,
    time_samples,
)
from mscdma.quadrature import QuadratureError, integrate_piecewise

omegas = st.floats(-np.pi, np.pi, allow_nan=False)
taus = st.floats(0.0, 0.999, allow_nan=False)


def test_sinc_spectrum_level_and_support():
    p = sinc_pulse(1.0)
    assert continuous_spectrum(p, 0.0) == pytest.approx(1.0)
    assert continuous_spectrum(p, 2 * np.pi) == 0.0
    p2 = sinc_pulse(2.0, r=2, tc=0.5)
    assert continuous_spectrum(p2, 0.0) == pytest.approx(np.sqrt(0.25))


def test_rrc_band_edge_half_power():
    p = rrc_pulse(0.5)
    assert abs(continuous_spectrum(p, np.pi)) ** 2 == pytest.approx(0.5, abs=1e-14)
    assert continuous_spectrum(p, 1.6 * np.pi) == 0.0


def test_rrc_unit_energy_by_quadrature():
    p = rrc_pulse(0.5)
    val = integrate_piecewise(lambda w: np.abs(continuous_spectrum(p, w)) ** 2 / (2 * np.pi),
                              p.knots(), -p.omega_max, p.omega_max)
    assert val == pytest.approx(1.0, abs=1e-10)


def test_frontend_b_spectrum_is_power_spectrum():
    pa, pb = rrc_pulse(0.3, r=1 if False else 2), rrc_b(0.3)
    w = np.linspace(-4, 4, 41)
    np.testing.assert_allclose(continuous_spectrum(pb, w), np.abs(continuous_spectrum(pa, w)) ** 2, atol=1e-15)


def test_constructor_rejects_invalid_pulses():
    with pytest.raises(ValueError, match="sampling theorem"):
        ChipPulse(Sinc(1.5), 1.0, TypeA(1))
    with pytest.raises(ValueError, match="root-Nyquist"):
        ChipPulse(Sinc(1.5), 1.0, TypeB())
    with pytest.raises(ValueError):
        ChipPulse(Sinc(2.5), 1.0, TypeA(4))
    with pytest.raises(ValueError):
        ChipPulse(RootRaisedCosine(1.2), 1.0, TypeA(2))
    with pytest.raises(ValueError):
        ChipPulse(Sinc(1.0), 0.0, TypeA(1))


def test_bandwidth():
    assert sinc_pulse(1.5, r=2).bandwidth == pytest.approx(0.75)
    assert rrc_pulse(0.5, tc=2.0).bandwidth == pytest.approx(1.5 / 4)


def test_flat_pulse_folds_to_one():
    p = sinc_pulse(1.0)
    Om = np.linspace(-3.1, 3.1, 17)
    np.testing.assert_allclose(folded_transform(p, Om, 0.0), 1.0, atol=1e-14)


def test_folded_transform_against_time_domain_dtft():
    # 64-point (Omega, tau) grid away from the spectral discontinuities
    cases = [
        (sinc_pulse(1.5, r=2), lambda t: sinc_time(t, 1.5)),
        (rrc_pulse(0.5), lambda t: rrc_time(t, 0.5)),
    ]
    Om = np.linspace(-3.0, 3.0, 8)
    tau = np.linspace(0.05, 0.95, 8)
    for pulse, fn in cases:
        for o in Om:
            for t in tau:
                assert abs(folded_transform(pulse, o, t) - dtft_oracle(fn, o, t)) < 1e-6


def test_folded_transform_single_point_example():
    p = sinc_pulse(1.5, r=2)
    ref = dtft_oracle(lambda t: sinc_time(t, 1.5), 0.7, 0.3)
    assert abs(folded_transform(p, 0.7, 0.3) - ref) < 1e-10


def test_time_samples_match_closed_form():
    t = np.array([0.0, 0.37, 1.3, -2.2])
    np.testing.assert_allclose(time_samples(rrc_pulse(0.5), t), rrc_time(t, 0.5), atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(omegas, taus, st.sampled_from([sinc_pulse(1.5, r=2), rrc_pulse(0.7), rrc_b(0.4)]))
def test_periodicity_and_shift(Om, tau, pulse):
    a = folded_transform(pulse, Om, tau)
    assert abs(folded_transform(pulse, Om + 2 * np.pi, tau) - a) < 1e-12
    shifted = folded_transform(pulse, Om, tau + pulse.chip_interval)
    assert abs(shifted - np.exp(1j * Om) * a) < 1e-12


def test_delta_vector_entries():
    p = sinc_pulse(1.0, r=2)
    d = delta_vector(p, 0.0, 0.0)
    assert d.shape == (2,)
    assert d[0] == folded_transform(p, 0.0, 0.0)
    assert d[1] == folded_transform(p, 0.0, -0.5)
    p1 = sinc_pulse(1.0)
    assert delta_vector(p1, 0.4, 0.2)[0] == folded_transform(p1, 0.4, 0.2)


def test_delta_vector_against_oracle():
    p = sinc_pulse(2.0, r=2)
    d = delta_vector(p, 1.1, 0.25)
    for t in range(2):
        ref = dtft_oracle(lambda x: sinc_time(x, 2.0), 1.1, 0.25 - t / 2)
        assert abs(d[t] - ref) < 1e-6


@pytest.mark.parametrize("gamma", [1.0, 1.25, 1.5, 1.75])
def test_sinc_q_matrix_inner_band(gamma):
    # Delta Delta^H puts exp(+j Omega/2) above the diagonal
    p = sinc_pulse(gamma, r=2)
    edge = min(2 * np.pi * (1 - gamma / 2), np.pi)
    for Om in np.linspace(-edge, edge, 7)[1:-1]:
        ref = np.array([[1, np.exp(1j * Om / 2)], [np.exp(-1j * Om / 2), 1]]) / gamma
        np.testing.assert_allclose(q_matrix(p, Om, 0.0), ref, atol=1e-13)


@pytest.mark.parametrize("gamma", [1.25, 1.5, 2.0])
def test_sinc_q_matrix_outer_band(gamma):
    p = sinc_pulse(gamma, r=2)
    lo = 2 * np.pi * (1 - gamma / 2)
    ref = np.array([[4, 0], [0, 0]]) / gamma
    for Om in np.linspace(lo, np.pi, 6)[1:]:
        np.testing.assert_allclose(q_matrix(p, Om, 0.0), ref, atol=1e-13)
        np.testing.assert_allclose(q_matrix(p, -Om, 0.0), ref, atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(omegas, taus, st.sampled_from([sinc_pulse(1.5, r=2), rrc_pulse(0.7, r=3)]))
def test_q_matrix_hermitian_psd(Om, tau, pulse):
    Q = q_matrix(pulse, Om, tau)
    np.testing.assert_allclose(Q, Q.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(Q).min() >= -1e-10
    assert np.linalg.matrix_rank(Q, tol=1e-9) <= 1


@pytest.mark.parametrize("pulse", [sinc_pulse(1.5, r=2), rrc_pulse(0.5), rrc_pulse(1.0, r=3)])
def test_delay_average_matches_closed_form(pulse):
    from mscdma.quadrature import gauss_legendre

    x, w = gauss_legendre(64, 0.0, pulse.chip_interval)
    for Om in (-2.5, -0.3, 0.0, 1.7, 3.0):
        Qs = q_matrix(pulse, Om, x)
        avg = np.tensordot(w, Qs, axes=1) / pulse.chip_interval
        np.testing.assert_allclose(avg, q_matrix_mean(pulse, Om), atol=1e-8)


def test_delay_average_with_random_samples():
    p = sinc_pulse(1.5, r=2)
    tau = np.random.default_rng(0).uniform(0, 1, 10_000)
    avg = q_matrix(p, 0.8, tau).mean(axis=0)
    np.testing.assert_allclose(avg, q_matrix_mean(p, 0.8), atol=0.03)


def test_fluctuation_integrates_to_zero():
    from mscdma.quadrature import gauss_legendre

    p = rrc_pulse(0.6)
    x, w = gauss_legendre(64, 0.0, 1.0)
    for Om in (-1.0, 0.4, 2.9):
        fl = q_matrix_fluctuation(p, Om, x)
        assert np.abs(np.tensordot(w, fl, axes=1)).max() < 1e-8


def test_frontend_b_scalar_branches():
    assert q_scalar_frontend_b(0.5, 0.3, 0.4) == pytest.approx(1.0)
    assert q_scalar_frontend_b(0.7, np.pi, 0.0) == pytest.approx(1.0)
    assert q_scalar_frontend_b(0.0, 3.0, 0.2) == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0), omegas, taus)
def test_frontend_b_scalar_matches_generic_path(rolloff, Om, tau):
    pb = rrc_b(rolloff)
    ref = abs(folded_transform(pb, Om, tau)) ** 2
    assert q_scalar_frontend_b(rolloff, Om, tau) == pytest.approx(ref, abs=1e-12)


def test_frontend_b_scalar_example():
    ref = abs(folded_transform(rrc_b(0.5), 0.9 * np.pi, 0.25)) ** 2
    assert q_scalar_frontend_b(0.5, 0.9 * np.pi, 0.25) == pytest.approx(ref, abs=1e-14)


@pytest.mark.parametrize("gamma", [1.0, 1.25, 1.5, 2.0])
def test_sinc_energy_coefficients(gamma):
    p = sinc_pulse(gamma, r=2)
    for s in range(1, 9):
        exact = energy_coefficient(p, s)
        assert exact == gamma ** (1 - s)
        assert energy_coefficient(p, s, method="quadrature") == pytest.approx(exact, rel=1e-10)


def test_energy_example_values():
    assert energy_coefficient(sinc_pulse(2.0, r=2), 3) == 0.25
    assert energy_coefficient(rrc_pulse(0.35), 1) == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(ValueError):
        energy_coefficient(sinc_pulse(), 0)


@pytest.mark.parametrize("rolloff", [0.0, 0.25, 0.5, 1.0])
def test_rrc_energy_closed_form_matches_quadrature(rolloff):
    for s in range(1, 6):
        e = rrc_energy(rolloff, s)
        assert e.quadrature == pytest.approx(e.closed_form, rel=1e-10)
    assert rrc_energy_closed_form(rolloff, 1) == pytest.approx(1.0)


def test_printed_rrc_formula_does_not_give_unit_energy():
    # the garbled expression is kept only to document the discrepancy
    for rolloff, s in ((0.25, 1), (0.5, 2), (1.0, 1)):
        e = rrc_energy(rolloff, s)
        assert abs(e.printed_formula - e.quadrature) > 0.2


def test_energy_independent_of_chip_interval():
    for tc in (0.5, 2.0):
        assert energy_coefficient(rrc_pulse(0.4, tc=tc), 3) == pytest.approx(rrc_energy_closed_form(0.4, 3), rel=1e-10)


def test_quadrature_failure_is_reported():
    with pytest.raises(QuadratureError):
        integrate_piecewise(lambda x: np.sin(1e4 * x), [], 0.0, 1.0, max_nodes=64)


def test_phase_vector():
    assert fourier_phase_vector(1.3, 1) == pytest.approx(np.array([1.0]))
    np.testing.assert_allclose(fourier_phase_vector(np.pi, 2), np.array([1, -1j]) / np.sqrt(2), atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(omegas, st.integers(1, 6))
def test_phase_vector_unit_norm_and_basis_unitary(Om, r):
    e = fourier_phase_vector(Om, r)
    assert np.vdot(e, e).real == pytest.approx(1.0, abs=1e-12)
    U = phase_basis(Om, r)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(r), atol=1e-12)


def test_tabulated_round_trip(tmp_path):
    ref = rrc_pulse(0.5)
    w = np.linspace(-1.5 * np.pi, 1.5 * np.pi, 4096)
    path = tmp_path / "rrc.txt"
    save_tabulated(path, w, continuous_spectrum(ref, w))
    tab = load_tabulated(path, 1.0, TypeA(2))
    assert isinstance(tab.kind, Tabulated)
    assert energy_coefficient(tab, 1) == pytest.approx(1.0, abs=1e-5)
    assert abs(folded_transform(tab, 0.5, 0.3) - folded_transform(ref, 0.5, 0.3)) < 1e-5


def test_tabulated_from_function_and_bad_file(tmp_path):
    tab = Tabulated.from_function(lambda w: np.where(np.abs(w) <= np.pi, 1.0, 0.0), 1.2 * np.pi)
    assert tab(0.0) == 1.0 and tab(4.0) == 0.0
    bad = tmp_path / "bad.txt"
    bad.write_text("# header\n0.0 1.0\n")
    with pytest.raises(ValueError, match="bad.txt:2"):
        load_tabulated(bad)
