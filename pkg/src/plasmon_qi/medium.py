"""Physical configuration: metal response, wire geometry, emitter array.

All quantities in the package unit system (hbar = 1, energies in eV,
lengths in nm; see units.py).  Dipoles are radial; the wire kernel
assumes it throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .units import HBAR_C_EV_NM, transition_wavelength


@dataclass(frozen=True)
class DrudeMetal:
    """Drude response eps_inf - omega_p^2 / (omega (omega + i gamma_p)).

    omega_p = 0 turns the wire into vacuum (used by the homogeneous-space
    checks); physical configs keep omega_p > 0.
    """

    eps_inf: float = 5.7
    omega_p: float = 9.0   # eV
    gamma_p: float = 0.1   # eV

    def __post_init__(self):
        if self.omega_p < 0:
            raise ValidationError("omega_p must be >= 0")
        if self.gamma_p < 0:
            raise ValidationError("gamma_p must be >= 0")
        if self.eps_inf < 1:
            raise ValidationError("eps_inf must be >= 1")

    @property
    def is_vacuum(self):
        return self.omega_p == 0.0 and self.eps_inf == 1.0


def silver():
    """Default silver parameters (eps_inf 5.7, omega_p 9 eV, gamma_p 0.1 eV)."""
    return DrudeMetal(eps_inf=5.7, omega_p=9.0, gamma_p=0.1)


@dataclass(frozen=True)
class WireGeometry:
    radius: float  # nm

    def __post_init__(self):
        if self.radius <= 0:
            raise ValidationError("wire radius must be > 0")


@dataclass(frozen=True)
class EmitterArray:
    """N identical two-level emitters on a line parallel to the wire axis.

    All sit at distance r_a from the axis, spaced d along z, radial
    dipoles, transition energy omega_0 and free-space decay rate gamma_0.
    """

    count: int
    omega_0: float   # eV
    gamma_0: float   # eV
    r_a: float       # nm, distance from wire axis
    spacing: float   # nm, nearest-neighbour separation along z

    def __post_init__(self):
        if self.count < 1:
            raise ValidationError("emitter count must be >= 1")
        if self.omega_0 <= 0:
            raise ValidationError("omega_0 must be > 0")
        if self.gamma_0 <= 0:
            raise ValidationError("gamma_0 must be > 0")
        if self.r_a <= 0:
            raise ValidationError("r_a must be > 0")
        if self.spacing < 0:
            raise ValidationError("spacing must be >= 0")

    @property
    def lambda_0(self):
        return transition_wavelength(self.omega_0)


def validate_layout(geometry: WireGeometry, emitters: EmitterArray):
    """Emitters must sit strictly outside the wire."""
    if emitters.r_a <= geometry.radius:
        raise ValidationError(
            f"emitters at r_a={emitters.r_a} nm must lie outside the wire "
            f"radius {geometry.radius} nm"
        )


def permittivity(metal: DrudeMetal, omega):
    """Drude permittivity at omega (eV); passive (Im >= 0) for omega > 0."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise DomainError("permittivity requires omega > 0")
    if metal.omega_p == 0.0:
        return np.complex128(metal.eps_inf) * np.ones_like(omega, dtype=complex) \
            if omega.shape else complex(metal.eps_inf)
    val = metal.eps_inf - metal.omega_p**2 / (omega * (omega + 1j * metal.gamma_p))
    return val if val.shape else complex(val)


def radial_wavenumber(k, k_z):
    """sqrt(k^2 - k_z^2) on the branch with Im >= 0 (Re >= 0 when Im = 0).

    This branch makes H_n^(1)(k_r r) decay (or radiate outward) as
    r -> infinity, which the k_z integrals require.
    """
    k = np.asarray(k, dtype=complex)
    k_z = np.asarray(k_z, dtype=float)
    val = np.sqrt(k * k - k_z * k_z + 0j)
    flip = (val.imag < 0) | ((val.imag == 0) & (val.real < 0))
    val = np.where(flip, -val, val)
    if val.shape == ():
        return complex(val)
    return val


def inner_wavenumber(metal: DrudeMetal, omega):
    """Wavenumber inside the metal, sqrt(eps) * omega / (hbar c), Im >= 0."""
    eps = permittivity(metal, omega)
    k1 = np.sqrt(np.asarray(eps, dtype=complex)) * (omega / HBAR_C_EV_NM)
    k1 = np.where(np.imag(k1) < 0, -k1, k1)
    if k1.shape == ():
        return complex(k1)
    return k1
