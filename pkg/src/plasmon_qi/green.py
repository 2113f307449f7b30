"""Scattering kernel of the wire and emitter-emitter spectral densities.

For each azimuthal order n and axial wavenumber k_z, the tangential
continuity of E and curl E at the wire surface fixes four reflection
and four transmission coefficients (complex-exponential azimuthal
basis, so cross-polarization bookkeeping is a single 4x4 solve; the
polarization-preserving coefficients are even in k_z, the cross ones
odd).  The radial-radial kernel at emitter distance r_a is assembled
from those coefficients, summed over orders, and integrated over k_z to
give the spectral-density entries

    J_m(omega) = (3 gamma_0 c omega^2 / (8 pi omega_0^3))
                 * 2 Int_0^inf cos(k_z m d) Re[F(k_z)] dk_z,

with F the azimuthal sum of the radial kernel.  The overall real-part
convention is anchored by the homogeneous-space limit J_0(omega_0) =
gamma_0 / (2 pi), which the test suite checks directly.

The reflected part of Re[F] decays like exp(-2 k_z (r_a - R)), so the
k_z cutoff combines the configured multiple of the largest medium
wavenumber with a near-field term ~ 1/(r_a - R), clamped so special
function arguments stay inside their documented domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NearSingularSystemError, NumericalError
from .medium import (DrudeMetal, EmitterArray, WireGeometry, inner_wavenumber,
                     permittivity, radial_wavenumber, validate_layout)
from .quadrature import adaptive_gauss_kronrod
from .special import MAX_IMAG, _hn_table, _jn_table
from .units import HBAR_C_EV_NM


@dataclass(frozen=True)
class QuadratureSpec:
    """Knobs of the k_z integration and the azimuthal truncation."""

    cutoff_factor: float = 40.0        # k_z cutoff in multiples of max(k0, |k1|)
    near_field_exponent: float = 10.0  # adds cutoff >= this / (r_a - R)
    rel_tol: float = 1e-8
    abs_tol: float = 0.0
    max_subdivisions: int = 4000
    azimuthal_tol: float = 1e-8
    azimuthal_cap: int = 64

    def __post_init__(self):
        if self.rel_tol <= 0 or self.azimuthal_tol <= 0:
            raise DomainError("quadrature tolerances must be > 0")
        if self.abs_tol < 0:
            raise DomainError("abs_tol must be >= 0")
        if not (0 < self.azimuthal_cap <= 64):
            raise DomainError("azimuthal_cap must be in (0, 64]")


@dataclass
class ModeCoefficients:
    """Reflection/transmission coefficients of one (n, k_z) mode."""

    n: int
    k_z: float
    A_R: complex
    B_R: complex
    C_R: complex
    D_R: complex
    A_T: complex
    B_T: complex
    C_T: complex
    D_T: complex
    residual: float


_RESIDUAL_LIMIT = 1e-10

# orders whose Hankel magnitude would pass e^350 are dropped: their true
# contribution to Re[F] underflows long before that, but the factors
# J_n -> 0 and H_n -> inf cannot be represented separately in doubles
_ORDER_LOG_CAP = 350.0

# half-width (in the sqrt-folded variable) of the frozen zone around the
# radial branch point k_z = k0
_BRANCH_CLAMP = 1e-4
_LGAMMA = np.array([math.lgamma(max(n, 1)) for n in range(128)])


def _live_orders(mag, nmax):
    """Boolean (len(mag), nmax+1): orders with representable Hankel values.

    Uses ln|H_n(x)| ~ lgamma(n) + n ln(2/|x|) for |x| < 2; everything is
    live for |x| >= 2 at the order cap this package allows.
    """
    mag = np.maximum(np.asarray(mag, dtype=float), 1e-290)
    ln2m = np.log(np.maximum(2.0 / mag, 1.0))
    orders = np.arange(nmax + 1, dtype=float)
    logmag = _LGAMMA[None, : nmax + 1] + orders[None, :] * ln2m[:, None]
    return logmag < _ORDER_LOG_CAP


def _derivative_columns(tab):
    """(f_{n-1} - f_{n+1})/2 per order, -f_1 at n=0; drops the last order."""
    d = np.empty((tab.shape[0], tab.shape[1] - 1), dtype=complex)
    d[:, 0] = -tab[:, 1]
    if tab.shape[1] > 2:
        d[:, 1:] = 0.5 * (tab[:, :-2] - tab[:, 2:])
    return d


def _solve_modes(nmax, kz, omega, metal, geometry):
    """Batched boundary solve.

    Returns (A, B, C, D, AT, BT, CT, DT, residual), each (nkz, nmax+1).
    A/C (and their transmissions) preserve polarization, B/D are the
    cross couplings; all zero for a vacuum wire.
    """
    kz = np.atleast_1d(np.asarray(kz, dtype=float))
    nk = kz.shape[0]
    shape = (nk, nmax + 1)
    if metal.is_vacuum:
        zero = np.zeros(shape, dtype=complex)
        return (zero,) * 8 + (np.zeros(shape),)

    k0 = omega / HBAR_C_EV_NM
    k1 = inner_wavenumber(metal, omega)
    R = geometry.radius
    kr0 = radial_wavenumber(k0, kz)
    kr1 = radial_wavenumber(k1, kz)
    x0 = kr0 * R
    x1 = kr1 * R

    # order n is usable only if order n+1 (needed by derivatives) is too
    live_full = _live_orders(np.minimum(np.abs(x0), np.abs(x1)), nmax + 1)
    live = live_full[:, 1:]
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        J0 = _jn_table(nmax + 1, x0)
        H0 = _hn_table(nmax + 1, x0, jtab=J0)
        J1 = _jn_table(nmax + 1, x1)
        for tab in (J0, H0, J1):
            tab[~live_full] = 0.0
        J0p = _derivative_columns(J0)
        H0p = _derivative_columns(H0)
        J1p = _derivative_columns(J1)
    J0 = J0[:, : nmax + 1]
    H0 = H0[:, : nmax + 1]
    J1 = J1[:, : nmax + 1]

    orders = np.arange(nmax + 1, dtype=float)
    g = orders[None, :] * kz[:, None]             # n * k_z
    c0 = kr0[:, None]
    c1 = kr1[:, None]

    K = np.zeros((nk, nmax + 1, 4, 4), dtype=complex)
    K[..., 0, 0] = -c0 * H0p
    K[..., 0, 1] = -(g / (k0 * R)) * H0
    K[..., 0, 2] = c1 * J1p
    K[..., 0, 3] = (g / (k1 * R)) * J1
    K[..., 1, 1] = (c0 * c0 / k0) * H0
    K[..., 1, 3] = -(c1 * c1 / k1) * J1
    K[..., 2, 0] = -(g / R) * H0
    K[..., 2, 1] = -(k0 * c0) * H0p
    K[..., 2, 2] = (g / R) * J1
    K[..., 2, 3] = (k1 * c1) * J1p
    K[..., 3, 0] = (c0 * c0) * H0
    K[..., 3, 2] = -(c1 * c1) * J1

    rhs = np.zeros((nk, nmax + 1, 4, 2), dtype=complex)
    rhs[..., 0, 0] = c0 * J0p
    rhs[..., 2, 0] = (g / R) * J0
    rhs[..., 3, 0] = -(c0 * c0) * J0
    # second column: same matrix solves the cross system with the unknown
    # order (D, C, D_T, C_T)
    rhs[..., 0, 1] = (g / (k0 * R)) * J0
    rhs[..., 1, 1] = -(c0 * c0 / k0) * J0
    rhs[..., 2, 1] = (k0 * c0) * J0p

    # dropped orders get the identity system (=> zero coefficients)
    dead = ~live
    if np.any(dead):
        K[dead] = np.eye(4)
        rhs[dead] = 0.0

    # full equilibration: the raw system's columns span x0^(+-n) at small
    # radial arguments and the cross-term cancellation at the branch
    # point needs relative-accurate coefficients
    row_scale = np.max(np.abs(K), axis=-1)
    row_scale = np.where(row_scale == 0.0, 1.0, row_scale)
    Ks = K / row_scale[..., None]
    rs = rhs / row_scale[..., None]
    col_scale = np.max(np.abs(Ks), axis=-2)
    col_scale = np.where(col_scale == 0.0, 1.0, col_scale)
    Ks = Ks / col_scale[..., None, :]
    sol = np.linalg.solve(Ks, rs)

    resid = np.einsum("pnij,pnjc->pnic", Ks, sol) - rs
    residual = np.max(np.abs(resid), axis=(-2, -1))
    sol = sol / col_scale[..., :, None]
    if np.max(residual) > _RESIDUAL_LIMIT:
        idx = np.unravel_index(np.argmax(residual), residual.shape)
        raise NearSingularSystemError(
            f"boundary solve residual {residual[idx]:.3e} at "
            f"n={idx[1]}, k_z={kz[idx[0]]:.6e} 1/nm, omega={omega:.6e} eV"
        )

    A, B, AT, BT = (sol[..., i, 0] for i in range(4))
    D, C, DT, CT = (sol[..., i, 1] for i in range(4))
    return A, B, C, D, AT, BT, CT, DT, residual


def scattering_coefficients(n, k_z, omega, metal, geometry):
    """Boundary coefficients of a single (n, k_z) mode at omega (eV)."""
    if n < 0:
        raise DomainError("order n must be >= 0")
    if omega <= 0:
        raise DomainError("omega must be > 0")
    A, B, C, D, AT, BT, CT, DT, res = _solve_modes(
        n, np.array([k_z]), omega, metal, geometry)
    return ModeCoefficients(
        n=n, k_z=float(k_z),
        A_R=complex(A[0, n]), B_R=complex(B[0, n]),
        C_R=complex(C[0, n]), D_R=complex(D[0, n]),
        A_T=complex(AT[0, n]), B_T=complex(BT[0, n]),
        C_T=complex(CT[0, n]), D_T=complex(DT[0, n]),
        residual=float(res[0, n]),
    )


def _xi_terms(nmax, kz, omega, metal, geometry, r, coeffs=None):
    """Radial kernel xi_n for all orders at once; (nkz, nmax+1)."""
    kz = np.atleast_1d(np.asarray(kz, dtype=float))
    k0 = omega / HBAR_C_EV_NM
    kr0 = radial_wavenumber(k0, kz)
    xa = kr0 * r
    live_full = _live_orders(np.abs(xa), nmax + 1)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        Ja = _jn_table(nmax + 1, xa)
        Ha = _hn_table(nmax + 1, xa, jtab=Ja)
        Ja[~live_full] = 0.0
        Ha[~live_full] = 0.0
        Jap = _derivative_columns(Ja)
        Hap = _derivative_columns(Ha)
    Ja = Ja[:, : nmax + 1]
    Ha = Ha[:, : nmax + 1]

    orders = np.arange(nmax + 1, dtype=float)[None, :]
    xa_col = xa[:, None]
    kzfac = (kz[:, None] / k0) ** 2

    n2_over_x2 = np.zeros_like(Ja)
    n2_over_x2[:, 1:] = (orders[:, 1:] ** 2) / (xa_col ** 2)
    xi = n2_over_x2 * (Ha * Ja) + kzfac * (Hap * Jap)

    if coeffs is None:
        coeffs = _solve_modes(nmax, kz, omega, metal, geometry)
    A, B, C, D = coeffs[0], coeffs[1], coeffs[2], coeffs[3]
    if not metal.is_vacuum:
        # multiply coefficient * H first: the pair is always representable
        cross = np.zeros_like(Ja)
        cross[:, 1:] = (B[:, 1:] + D[:, 1:]) * orders[:, 1:] \
            * kz[:, None] / (k0 * xa_col)
        xi = xi + n2_over_x2 * ((A * Ha) * Ha) + kzfac * ((C * Hap) * Hap) \
            + (cross * Ha) * Hap
    if not np.all(np.isfinite(xi)):
        raise NumericalError(
            f"non-finite radial kernel at omega={omega:.6e} eV")
    return xi


def xi_n(n, k_z, omega, r, metal, geometry):
    """Radial kernel of one azimuthal order at radius r > R (scalar)."""
    if r <= geometry.radius:
        raise DomainError("xi_n requires r > wire radius")
    if omega <= 0:
        raise DomainError("omega must be > 0")
    xi = _xi_terms(n, np.array([k_z]), omega, metal, geometry, r)
    return complex(xi[0, n])


def _kz_cutoff(omega, metal, geometry, emitters, quad):
    """k_z integration cutoff honoring the special-function domain."""
    k0 = omega / HBAR_C_EV_NM
    k1 = inner_wavenumber(metal, omega)
    base = quad.cutoff_factor * max(k0, abs(k1))
    gap = emitters.r_a - geometry.radius
    near = quad.near_field_exponent / gap
    raw = max(base, near, 3.0 * k0)
    # keep |Im z| of every Bessel argument below its documented cap
    cap = np.sqrt(max((0.98 * MAX_IMAG / emitters.r_a) ** 2 - abs(k1) ** 2,
                      (3.0 * k0) ** 2))
    return min(raw, cap)


def _det_minima_edges(nmax_scan, kz_grid, omega, metal, geometry):
    """Panel edges bracketing guided-mode peaks, from the n=0,1 boundary
    determinants scanned over real k_z."""
    if metal.is_vacuum:
        return []
    k0 = omega / HBAR_C_EV_NM
    k1 = inner_wavenumber(metal, omega)
    R = geometry.radius
    kr0 = radial_wavenumber(k0, kz_grid)
    kr1 = radial_wavenumber(k1, kz_grid)
    x0 = kr0 * R
    x1 = kr1 * R
    J0 = _jn_table(nmax_scan + 1, x0)
    H0 = _hn_table(nmax_scan + 1, x0, jtab=J0)
    J1 = _jn_table(nmax_scan + 1, x1)
    J0p = _derivative_columns(J0)
    H0p = _derivative_columns(H0)
    J1p = _derivative_columns(J1)
    edges = []
    # n = 0 TM block: det = (kr0^2/k0) H0 * k1 kr1 J1' - (-kr1^2/k1 J1)(-k0 kr0 H0')
    det_tm = (kr0**2 / k0) * H0[:, 0] * (k1 * kr1) * J1p[:, 0] \
        - (kr1**2 / k1) * J1[:, 0] * (k0 * kr0) * H0p[:, 0]
    norm_tm = np.abs((kr0**2 / k0) * H0[:, 0] * (k1 * kr1) * J1p[:, 0]) \
        + np.abs((kr1**2 / k1) * J1[:, 0] * (k0 * kr0) * H0p[:, 0])
    dets = [np.abs(det_tm) / np.where(norm_tm == 0, 1.0, norm_tm)]
    if nmax_scan >= 1:
        # n = 1 full 4x4, row-equilibrated
        g = kz_grid
        K = np.zeros((kz_grid.shape[0], 4, 4), dtype=complex)
        K[:, 0, 0] = -kr0 * H0p[:, 1]
        K[:, 0, 1] = -(g / (k0 * R)) * H0[:, 1]
        K[:, 0, 2] = kr1 * J1p[:, 1]
        K[:, 0, 3] = (g / (k1 * R)) * J1[:, 1]
        K[:, 1, 1] = (kr0**2 / k0) * H0[:, 1]
        K[:, 1, 3] = -(kr1**2 / k1) * J1[:, 1]
        K[:, 2, 0] = -(g / R) * H0[:, 1]
        K[:, 2, 1] = -(k0 * kr0) * H0p[:, 1]
        K[:, 2, 2] = (g / R) * J1[:, 1]
        K[:, 2, 3] = (k1 * kr1) * J1p[:, 1]
        K[:, 3, 0] = (kr0**2) * H0[:, 1]
        K[:, 3, 2] = -(kr1**2) * J1[:, 1]
        scale = np.max(np.abs(K), axis=-1)
        scale = np.where(scale == 0, 1.0, scale)
        dets.append(np.abs(np.linalg.det(K / scale[..., None])))
    for dmag in dets:
        i = int(np.argmin(dmag))
        if 0 < i < len(kz_grid) - 1:
            neighborhood = dmag[max(0, i - 8):i + 9]
            if dmag[i] < 0.5 * np.median(neighborhood):
                kp = kz_grid[i]
                edges.extend([kp / 1.3, kp / 1.05, kp * 1.05, kp * 1.3])
    return edges


def _pick_azimuthal_cutoff(probe_xi, quad):
    """Smallest order where three consecutive terms fall below tolerance.

    Only the real part of the kernel survives the assembled integrand,
    so the stop criterion weighs |Re xi_n| accumulated over the probe
    grid (the imaginary part decays far more slowly in n).
    """
    weights = 2.0 * np.ones(probe_xi.shape[1])
    weights[0] = 1.0
    per_n = np.sum(np.abs(probe_xi.real), axis=0) * weights
    total = np.cumsum(per_n)
    total = np.where(total == 0, 1e-300, total)
    nmax_avail = probe_xi.shape[1] - 1
    for n in range(3, nmax_avail + 1):
        window = per_n[n - 2:n + 1] / total[n]
        if np.all(window < quad.azimuthal_tol):
            return min(n + 4, nmax_avail)
    return nmax_avail


class SpectralDensityCalculator:
    """Evaluates J_m(omega) for one physical configuration.

    Pure given (metal, geometry, emitters, quad); safe to share across
    processes.  Separations are multiples of the emitter spacing.
    """

    def __init__(self, metal: DrudeMetal, geometry: WireGeometry,
                 emitters: EmitterArray, quad: QuadratureSpec | None = None):
        validate_layout(geometry, emitters)
        self.metal = metal
        self.geometry = geometry
        self.emitters = emitters
        self.quad = quad or QuadratureSpec()

    def _frequency_prefactor(self, omega):
        e = self.emitters
        return 3.0 * e.gamma_0 * HBAR_C_EV_NM * omega**2 / (8.0 * np.pi * e.omega_0**3)

    def entries(self, omega, separations=None, nmax_override=None):
        """J at the given z-separations (nm); default 0..(N-1) spacings."""
        if omega <= 0:
            raise DomainError("omega must be > 0")
        e = self.emitters
        if separations is None:
            separations = e.spacing * np.arange(e.count, dtype=float)
        separations = np.atleast_1d(np.asarray(separations, dtype=float))
        k0 = omega / HBAR_C_EV_NM
        kzmax = _kz_cutoff(omega, self.metal, self.geometry, e, self.quad)

        probe = np.unique(np.concatenate([
            np.linspace(0.0, k0, 17)[1:-1],
            np.geomspace(1.0001 * k0, kzmax, 56),
        ]))
        cap = self.quad.azimuthal_cap
        probe_xi = _xi_terms(cap, probe, omega, self.metal, self.geometry, e.r_a)
        nmax = nmax_override if nmax_override is not None \
            else _pick_azimuthal_cutoff(probe_xi, self.quad)

        weights = 2.0 * np.ones(nmax + 1)
        weights[0] = 1.0

        def integrand(kz):
            xi = _xi_terms(nmax, kz, omega, self.metal, self.geometry, e.r_a)
            F = (xi * weights[None, :]).sum(axis=1)
            return np.cos(np.outer(kz, separations)) * F.real[:, None]

        # kz = k0 (1 + s|s|) on a single folded axis: s < 0 covers
        # [0, k0], s > 0 covers [k0, kzmax].  The sqrt substitution
        # regularizes the branch-point endpoint, where the kernel is
        # log-singular, and one call keeps a shared error budget.
        # Within |s| < clamp the reflected-part cancellation exceeds
        # double precision; the kernel is frozen at the clamp point,
        # whose k_z measure (~1e-8 k0) is far below the tolerance.
        clamp = _BRANCH_CLAMP
        def folded(s):
            t = np.abs(s)
            s_eff = np.where(t < clamp, np.where(s >= 0, clamp, -clamp), s)
            kz = k0 * (1.0 + s_eff * np.abs(s_eff))
            out = integrand(kz) * (2.0 * k0 * t)[:, None]
            return out

        edges_above = list(np.geomspace(1e-6, kzmax / k0 - 1.0, 17))
        edges_above.extend(
            kp / k0 - 1.0 for kp in _det_minima_edges(
                min(1, nmax), probe[probe > k0], omega, self.metal,
                self.geometry)
            if k0 < kp < kzmax)
        s_edges = np.concatenate([
            -np.sqrt([1.0, 0.55, 0.2, 0.04]),
            [0.0],
            np.sqrt(np.concatenate([np.array(edges_above),
                                    [kzmax / k0 - 1.0]])),
        ])
        res = adaptive_gauss_kronrod(
            folded, s_edges, rel_tol=self.quad.rel_tol,
            abs_tol=self.quad.abs_tol,
            max_subdivisions=self.quad.max_subdivisions)
        return self._frequency_prefactor(omega) * 2.0 * res.value


def spectral_density_entry(m, omega, metal, geometry, emitters, quad=None):
    """J_m(omega) in eV for separation index m = |l - j| (scalar op)."""
    if m < 0 or int(m) != m:
        raise DomainError("separation index m must be a nonnegative integer")
    calc = SpectralDensityCalculator(metal, geometry, emitters, quad)
    sep = np.array([m * emitters.spacing])
    return float(calc.entries(omega, separations=sep)[0])
