"""Cylindrical special functions of complex argument.

Integer-order Bessel J_n and outgoing Hankel H_n^(1) plus their
argument-derivatives, for the order/argument range the wire kernel
needs (n <= 64, |z| <= 1e4, |Im z| <= 100).  No external special
function library is used; scipy/mpmath appear only in the test suite
as independent oracles.

Method selection
----------------
J_n: ascending power series for |z| <= 12, otherwise backward (Miller)
recurrence normalized against exp(-i sgn(Im z) z) via the plane-wave
expansion sum J_0 + 2 sum_k (i sigma)^k J_k.  That normalizer has the
same magnitude as the largest terms of the sum, so the normalization
never loses precision to cancellation.

H_n^(1): power series (J + iY) for |z| <= 2 where cancellation is
bounded by e^{2|Im z|} ~ 1e-15; a Lentz continued fraction for the
logarithmic derivative H0'/H0 combined with the Wronskian against J for
2 < |z| < 16 (the J+iY route loses e^{2 Im z} digits there); and the
large-argument Hankel expansion for |z| >= 16.  Higher orders by
forward recurrence, which tracks the dominant solution and is
relative-error stable for H.

All kernels are vectorized over numpy arrays of arguments; the scalar
operations below are thin wrappers.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, SingularityError

MAX_ORDER = 64
MAX_ABS = 1.0e4
MAX_IMAG = 1.0e2

_EULER_GAMMA = 0.57721566490153286060651209008240243

_SERIES_CUT_J = 12.0
_SERIES_CUT_H = 2.0
_ASYMPTOTIC_CUT_H = 16.0


def _check_order(n):
    if not isinstance(n, (int, np.integer)):
        raise DomainError(f"order must be an integer, got {n!r}")
    if n < 0 or n > MAX_ORDER:
        raise DomainError(f"order n={n} outside [0, {MAX_ORDER}]")


def _check_argument(z):
    z = complex(z)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise DomainError(f"argument must be finite, got {z!r}")
    if abs(z) > MAX_ABS or abs(z.imag) > MAX_IMAG:
        raise DomainError(
            f"argument z={z!r} outside documented domain "
            f"(|z| <= {MAX_ABS:g}, |Im z| <= {MAX_IMAG:g})"
        )
    return z


# ----------------------------------------------------------------------
# J_n tables
# ----------------------------------------------------------------------

def _jn_series(nmax, z):
    """Ascending series for all orders 0..nmax, z an ndarray, |z| <= ~12."""
    z = np.asarray(z, dtype=complex)
    half = 0.5 * z  # (nz,)
    nz = z.shape[0]
    # leading terms t0[n] = (z/2)^n / n!, built cumulatively
    t = np.empty((nz, nmax + 1), dtype=complex)
    t[:, 0] = 1.0
    for n in range(1, nmax + 1):
        t[:, n] = t[:, n - 1] * half / n
    out = t.copy()
    q = -(half * half)  # common ratio numerator, sign included
    term = t
    ns = np.arange(nmax + 1)[None, :]
    for k in range(1, 70):
        term = term * (q[:, None] / (k * (ns + k)))
        out += term
        if k % 8 == 0 and np.max(np.abs(term)) < 1e-18 * max(np.max(np.abs(out)), 1e-300):
            break
    return out


def _miller_start(nmax, absz):
    turn = absz + 12.0 * np.cbrt(np.maximum(absz, 1.0))
    return int(max(nmax, np.ceil(turn))) + 40


def _jn_miller(nmax, z):
    """Backward recurrence, normalized by exp(i sigma z); z ndarray."""
    z = np.asarray(z, dtype=complex)
    nz = z.shape[0]
    sigma = np.where(z.imag > 0.0, -1.0, 1.0)
    isig = 1j * sigma
    nstart = _miller_start(nmax, float(np.max(np.abs(z))))
    fp = np.zeros(nz, dtype=complex)   # f_{k+1}
    f = np.full(nz, 1e-30, dtype=complex)  # f_k at k = nstart
    out = np.empty((nz, nmax + 1), dtype=complex)
    norm = np.zeros(nz, dtype=complex)
    # phase weights (i sigma)^k accumulated downward
    w = isig ** nstart
    inv_isig = 1.0 / isig
    two_over_z = 2.0 / z
    for k in range(nstart, 0, -1):
        if k <= nmax:
            out[:, k] = f
        norm += 2.0 * w * f
        fm = k * two_over_z * f - fp
        fp = f
        f = fm
        w = w * inv_isig
        if k % 64 == 0:
            big = np.abs(f) > 1e250
            if np.any(big):
                scale = np.where(big, 1e-250, 1.0)
                f *= scale
                fp *= scale
                norm *= scale
                out[:, k:] *= scale[:, None]
    out[:, 0] = f
    norm += f  # k = 0 term, weight 1
    ref = np.exp(1j * sigma * z)
    out *= (ref / norm)[:, None]
    return out


def _jn_table(nmax, z):
    """J_0..J_nmax at each z (ndarray) -> shape (len(z), nmax+1)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty((z.shape[0], nmax + 1), dtype=complex)
    absz = np.abs(z)
    zero = absz == 0.0
    if np.any(zero):
        out[zero, :] = 0.0
        out[zero, 0] = 1.0
    small = (~zero) & (absz <= _SERIES_CUT_J)
    if np.any(small):
        out[small] = _jn_series(nmax, z[small])
    large = (~zero) & (absz > _SERIES_CUT_J)
    if np.any(large):
        # bucket by magnitude so one oversized nstart does not tax all
        zl = z[large]
        idx = np.nonzero(large)[0]
        order = np.argsort(np.abs(zl))
        zl = zl[order]
        idx = idx[order]
        pos = 0
        while pos < zl.shape[0]:
            lo = np.abs(zl[pos])
            end = pos
            while end < zl.shape[0] and np.abs(zl[end]) <= 2.0 * lo:
                end += 1
            out[idx[pos:end]] = _jn_miller(nmax, zl[pos:end])
            pos = end
    return out


# ----------------------------------------------------------------------
# H_n^(1) tables
# ----------------------------------------------------------------------

def _y01_series(z, j0, j1):
    """Y_0 and Y_1 by the logarithmic series; z ndarray, |z| <= ~2."""
    z = np.asarray(z, dtype=complex)
    lg = np.log(0.5 * z) + _EULER_GAMMA
    q = 0.25 * z * z
    # Y0 = (2/pi)[ (ln(z/2)+gamma) J0 + sum_{k>=1} (-1)^{k+1} h_k q^k / (k!)^2 ]
    s0 = np.zeros_like(z)
    term = np.ones_like(z)
    h = 0.0
    for k in range(1, 40):
        term = term * q / (k * k)
        h += 1.0 / k
        s0 += (-1.0) ** (k + 1) * h * term
    y0 = (2.0 / np.pi) * (lg * j0 + s0)
    # Y1 = (2/pi)[ (ln(z/2)+gamma) J1 - 1/z - (z/4) sum_k (-1)^k (h_k + h_{k+1}) q^k/(k!(k+1)!) ]
    s1 = np.ones_like(z)  # k = 0 term: h_0 + h_1 = 1
    term = np.ones_like(z)
    hk = 0.0
    hk1 = 1.0
    for k in range(1, 40):
        term = term * q / (k * (k + 1))
        hk += 1.0 / k
        hk1 += 1.0 / (k + 1)
        s1 += (-1.0) ** k * (hk + hk1) * term
    y1 = (2.0 / np.pi) * (lg * j1 - 1.0 / z - 0.25 * z * s1)
    return y0, y1


def _h01_lentz(z, j0, j1):
    """H_0^(1), H_1^(1) from the continued fraction for H0'/H0.

    Modified Lentz evaluation of the Steed/Thompson-Barnett CF2; valid
    on the closed upper half plane away from the origin.  Normalized by
    the Wronskian J0 H0' - J0' H0 = 2i/(pi z).
    """
    z = np.asarray(z, dtype=complex)
    tiny = 1e-290
    b = 2.0 * (z + 1j)
    cf = b.copy()
    c = b.copy()
    d = np.zeros_like(z)
    for k in range(2, 400):
        a = (k - 0.5) ** 2
        b = 2.0 * (z + k * 1j)
        d = b + a * d
        d = np.where(d == 0, tiny, d)
        c = b + a / c
        c = np.where(c == 0, tiny, c)
        d = 1.0 / d
        delta = c * d
        cf = cf * delta
        if np.all(np.abs(delta - 1.0) < 1e-16):
            break
    # cf is the full continued fraction denominator chain: CF = 0.25/cf-style
    theta = 1j - 0.5 / z + (1j / z) * (0.25 / cf)
    h0 = (2j / (np.pi * z)) / (j0 * theta + j1)  # J0' = -J1
    h1 = -theta * h0
    return h0, h1


_ASYM_TERMS = 40


def _h01_asymptotic(z):
    """Large-|z| Hankel expansion for orders 0 and 1."""
    z = np.asarray(z, dtype=complex)
    pref = np.sqrt(2.0 / (np.pi * z))
    out = []
    for n in (0, 1):
        mu = 4.0 * n * n
        s = np.ones_like(z)
        term = np.ones_like(z)
        live = np.ones(z.shape, dtype=bool)
        prev = np.full(z.shape, np.inf)
        for k in range(1, _ASYM_TERMS):
            term = term * (1j * (mu - (2 * k - 1) ** 2) / (8.0 * k)) / z
            mag = np.abs(term)
            live &= mag < prev
            prev = mag
            s = np.where(live, s + term, s)
            if not np.any(live):
                break
        out.append(pref * np.exp(1j * (z - 0.5 * n * np.pi - 0.25 * np.pi)) * s)
    return out[0], out[1]


def _hn_table(nmax, z, jtab=None):
    """H^(1)_0..H^(1)_nmax at each z (ndarray) -> (len(z), nmax+1)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z == 0):
        raise SingularityError("H_n^(1) is singular at z = 0")
    if jtab is None:
        jtab = _jn_table(max(nmax, 1), z)
    absz = np.abs(z)
    h0 = np.empty_like(z)
    h1 = np.empty_like(z)
    small = absz <= _SERIES_CUT_H
    if np.any(small):
        y0, y1 = _y01_series(z[small], jtab[small, 0], jtab[small, 1])
        h0[small] = jtab[small, 0] + 1j * y0
        h1[small] = jtab[small, 1] + 1j * y1
    mid = (~small) & (absz < _ASYMPTOTIC_CUT_H)
    if np.any(mid):
        h0[mid], h1[mid] = _h01_lentz(z[mid], jtab[mid, 0], jtab[mid, 1])
    big = absz >= _ASYMPTOTIC_CUT_H
    if np.any(big):
        h0[big], h1[big] = _h01_asymptotic(z[big])
    out = np.empty((z.shape[0], nmax + 1), dtype=complex)
    out[:, 0] = h0
    if nmax >= 1:
        out[:, 1] = h1
    for n in range(1, nmax):
        out[:, n + 1] = (2.0 * n / z) * out[:, n] - out[:, n - 1]
    return out


# ----------------------------------------------------------------------
# public scalar operations
# ----------------------------------------------------------------------

def bessel_j(n, z):
    """Bessel function J_n(z) for integer n >= 0, complex z."""
    _check_order(n)
    z = _check_argument(z)
    return complex(_jn_table(n, np.array([z]))[0, n])


def hankel1(n, z):
    """Hankel function of the first kind H_n^(1)(z); z != 0."""
    _check_order(n)
    z = _check_argument(z)
    if z == 0:
        raise SingularityError("H_n^(1) is singular at z = 0")
    return complex(_hn_table(n, np.array([z]))[0, n])


def radial_derivative(kind, n, z):
    """d/dz of J_n or H_n^(1) via (f_{n-1} - f_{n+1})/2 (and -f_1 at n=0).

    This is the derivative with respect to the *argument*; callers apply
    the chain-rule wavenumber factor themselves.
    """
    if kind not in ("J", "H1"):
        raise DomainError(f"kind must be 'J' or 'H1', got {kind!r}")
    _check_order(n)
    z = _check_argument(z)
    if kind == "J":
        tab = _jn_table(n + 1, np.array([z]))[0]
    else:
        if z == 0:
            raise SingularityError("H_n^(1) is singular at z = 0")
        tab = _hn_table(n + 1, np.array([z]))[0]
    if n == 0:
        return complex(-tab[1])
    return complex(0.5 * (tab[n - 1] - tab[n + 1]))


def bessel_j_table(nmax, z):
    """Vectorized J_0..J_nmax for an array of arguments.

    Returns shape (len(z), nmax+1).  Same domain as bessel_j.
    """
    _check_order(nmax)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    for zv in z.ravel():
        _check_argument(zv)
    return _jn_table(nmax, z)


def hankel1_table(nmax, z):
    """Vectorized H^(1)_0..H^(1)_nmax; rejects z = 0."""
    _check_order(nmax)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    for zv in z.ravel():
        _check_argument(zv)
    return _hn_table(nmax, z)
