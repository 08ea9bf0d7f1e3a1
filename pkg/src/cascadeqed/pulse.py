"""Time-domain single-photon modes.

The spatial mode ``u(x)`` is mapped to time once: ``xi(t) = sqrt(c) u(x1 - c t)``,
so the speed of light never appears and distances become delays ``d/c`` in
units of ``1/omega_q``.  A wave ``exp(i w x / c)`` moving in +x past a fixed
point oscillates as ``exp(-i w t)``; every mode here is
``xi(t) = envelope(t) * exp(-i omega_in t)`` with a real, non-negative
envelope that vanishes for ``t < 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf


class PulseClippingError(ValueError):
    """The envelope start at t=0 would cut off a non-negligible tail."""


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian mode ``norm * exp(-((t - t0)/T)^2)`` switched on at ``t = 0``."""

    T: float
    t0: float
    omega_in: float
    norm: float

    kind = "gaussian"

    @property
    def duration(self) -> float:
        return self.T

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0.0, self.norm * np.exp(-(((t - self.t0) / self.T) ** 2)), 0.0)

    def xi(self, t):
        t = np.asarray(t, dtype=float)
        return self.envelope(t) * np.exp(-1j * self.omega_in * t)

    def support_end(self) -> float:
        """Time after which the envelope is below 1e-16 of its peak."""
        return self.t0 + 6.1 * self.T

    def describe(self) -> dict:
        return {"pulse": self.kind, "T": self.T, "t0": self.t0, "omega_in": self.omega_in}


@dataclass(frozen=True)
class ExponentialPulse:
    """Mode emitted by a decaying source cavity: ``sqrt(k) exp(-k t / 2)`` for t >= 0."""

    kappa_s: float
    omega_in: float

    kind = "exponential"

    def __post_init__(self):
        if not self.kappa_s > 0:
            raise ValueError(f"kappa_s must be positive, got {self.kappa_s}")

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.kappa_s))

    @property
    def duration(self) -> float:
        return 1.0 / self.kappa_s

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0.0, self.norm * np.exp(-0.5 * self.kappa_s * np.clip(t, 0.0, None)), 0.0)

    def xi(self, t):
        t = np.asarray(t, dtype=float)
        return self.envelope(t) * np.exp(-1j * self.omega_in * t)

    def support_end(self) -> float:
        return 75.0 / self.kappa_s

    def describe(self) -> dict:
        return {"pulse": self.kind, "kappa_s": self.kappa_s, "omega_in": self.omega_in}


def gaussian_norm(T: float, t0: float) -> float:
    """Normalization of the clipped Gaussian so that the integral of |xi|^2 over t >= 0 is 1."""
    weight = T * np.sqrt(np.pi / 8.0) * (1.0 + erf(np.sqrt(2.0) * t0 / T))
    return float(1.0 / np.sqrt(weight))


def make_gaussian_pulse(T: float, t0: float | None = None, omega_in: float = 0.0) -> PulseSpec:
    if not T > 0:
        raise ValueError(f"pulse duration T must be positive, got {T}")
    if t0 is None:
        t0 = 3.0 * T
    if t0 < 3.0 * T:
        raise PulseClippingError(
            f"t0={t0} < 3T={3 * T}: the clipped leading tail would distort the normalization"
        )
    return PulseSpec(T=float(T), t0=float(t0), omega_in=float(omega_in), norm=gaussian_norm(T, t0))


def carrier_from_spectrum(omega0: float, omega4: float, omega5: float) -> float:
    """Carrier in the middle of the 4-5 two-excitation crossing."""
    if not omega0 <= omega4 <= omega5:
        raise ValueError(f"levels must be ordered omega0 <= omega4 <= omega5, got {omega0}, {omega4}, {omega5}")
    return 0.5 * (omega4 + omega5 - 2.0 * omega0)
