import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from cascadeqed.pulse import (
    ExponentialPulse,
    PulseClippingError,
    carrier_from_spectrum,
    gaussian_norm,
    make_gaussian_pulse,
)


def test_normalization_by_quadrature():
    p = make_gaussian_pulse(1500.0, 4500.0, omega_in=1.37)
    val, _ = quad(lambda t: float(p.envelope(t)) ** 2, 0.0, 4500.0 + 6 * 1500.0, points=[4500.0], limit=200)
    assert val == pytest.approx(1.0, abs=1e-8)


def test_default_t0_and_clipping():
    assert make_gaussian_pulse(100.0).t0 == 300.0
    with pytest.raises(PulseClippingError):
        make_gaussian_pulse(100.0, t0=250.0)
    with pytest.raises(ValueError):
        make_gaussian_pulse(0.0)


def test_gaussian_shape():
    p = make_gaussian_pulse(200.0, 800.0, omega_in=2.0)
    assert abs(p.xi(800.0)) == pytest.approx(p.norm)
    assert abs(p.xi(600.0)) == pytest.approx(p.norm / np.e)
    assert abs(p.xi(1000.0)) == pytest.approx(p.norm / np.e)
    assert p.xi(-1.0) == 0


def test_norm_tends_to_unclipped_gaussian():
    T = 50.0
    assert gaussian_norm(T, 20 * T) == pytest.approx((2 / np.pi) ** 0.25 / np.sqrt(T), rel=1e-12)
    # quadrature check of the clipped case against the closed form
    val, _ = quad(lambda t: np.exp(-2 * ((t - 3 * T) / T) ** 2), 0, 20 * T, points=[3 * T])
    assert gaussian_norm(T, 3 * T) == pytest.approx(1 / np.sqrt(val), rel=1e-10)


@given(st.floats(0.0, 1e4), st.floats(-3.0, 3.0))
@settings(max_examples=50, deadline=None)
def test_carrier_factorization(t, omega):
    p = make_gaussian_pulse(300.0, 1000.0, omega_in=omega)
    z = p.xi(t) * np.exp(1j * omega * t)
    assert abs(z.imag) <= 1e-12 * max(1.0, abs(z))
    assert z.real >= 0


@given(st.floats(0.0, 500.0), st.floats(0.0, 3000.0))
@settings(max_examples=50, deadline=None)
def test_time_shift_covariance(delta, t):
    a = make_gaussian_pulse(300.0, 1000.0, omega_in=1.1)
    b = make_gaussian_pulse(300.0, 1000.0 + delta, omega_in=1.1)
    # peak shift, and the shifted mode differs only by a carrier phase
    assert np.real(b.envelope(1000.0 + delta)) == pytest.approx(b.norm)
    ratio_mag = abs(b.xi(t + delta)) / b.norm - abs(a.xi(t)) / a.norm
    assert abs(ratio_mag) <= 1e-12
    phase = b.xi(t + delta) / a.xi(t) if abs(a.xi(t)) > 1e-300 else 1.0
    assert abs(abs(phase) - b.norm / a.norm) <= 1e-9 * b.norm / a.norm


def test_carrier_from_spectrum():
    assert carrier_from_spectrum(0, 2, 2) == 2
    assert carrier_from_spectrum(1, 3, 5) == 3
    with pytest.raises(ValueError):
        carrier_from_spectrum(0, 5, 3)


def test_exponential_mode():
    p = ExponentialPulse(kappa_s=0.01, omega_in=1.0)
    val, _ = quad(lambda t: float(p.envelope(t)) ** 2, 0, p.support_end(), limit=200)
    assert val == pytest.approx(1.0, abs=1e-10)
    assert p.xi(-1.0) == 0
    with pytest.raises(ValueError):
        ExponentialPulse(kappa_s=0.0, omega_in=1.0)


def test_carrier_at_located_crossing(ref_model, ref_point):
    e = ref_model.energies
    omega_in = carrier_from_spectrum(e[0], e[4], e[5])
    assert omega_in == ref_point.omega_in
    # [DERIVED] the dressed qubit sits near 0.69, so the two-excitation resonance is well below 2
    assert omega_in == pytest.approx(1.371428, abs=5e-6)
