"""Unit conventions used at every module boundary.

Natural units with hbar = 1.  Energies (and angular frequencies) are in
eV, lengths in nm, so time is measured in hbar/eV and wavenumbers in
1/nm.  The only dimensional constant needed is hbar*c, which converts an
energy to a vacuum wavenumber: k = omega / HBAR_C_EV_NM.
"""

HBAR_C_EV_NM = 197.3269804  # hbar * c in eV nm (CODATA)


def vacuum_wavenumber(omega_ev):
    """Vacuum wavenumber (1/nm) for photon energy omega (eV)."""
    return omega_ev / HBAR_C_EV_NM


def transition_wavelength(omega_ev):
    """Free-space wavelength lambda0 = 2 pi c / omega, in nm."""
    import math

    return 2.0 * math.pi * HBAR_C_EV_NM / omega_ev
