"""Bound states and long-time amplitudes from the spectral table.

Discrete poles below the continuum satisfy, per channel with density
D(omega),

    varpi = omega_0 - Int domega D(omega) / (omega - varpi),

which has at most one root on (-inf, 0) per channel since the right
side decreases there.  The residue of a simple pole is
[1 + Int D/(omega - varpi)^2]^{-1} in (0, 1].

Self-energy integrals run over the tabulated window [omega_min,
omega_max]; the sub-window piece [0, omega_min] is added analytically
using the cubic low-frequency envelope D ~ D(omega_min) (omega /
omega_min)^3.  Frequencies above omega_max are outside the model: the
dynamics solver truncates its kernel at the same point, which keeps the
pole analysis and the time evolution mutually consistent.

For three emitters the long-time amplitudes come from the two pole
families of the Laplace-domain solution: the symmetric-sector function
Y(varpi) and the antisymmetric combination built on J_0 - J_2.  Their
roots are the exact spectrum (the determinant factorizes); per-channel
equations on the omega-dependent eigenvalues are exact only for N <= 2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BracketingError, DomainError, ValidationError
from .quadrature import gauss_legendre_panels
from .table import SpectralTable, _hermite_slopes

_ROOT_TOL_FACTOR = 1e-10     # |y(varpi) - varpi| <= factor * omega_0
_DEGENERATE_FACTOR = 1e-6
_EMPTY_CHANNEL_LEVEL = 1e-300


@dataclass
class BoundState:
    """Discrete pole below the continuum with its weight factor."""

    channel: str
    varpi: float        # eV
    residue: float      # in (0, 1]


@dataclass
class SteadyState:
    """Bound-state set of one table plus the derived long-time solution."""

    states: list
    count: int          # number of emitters

    @property
    def M(self):
        return len(self.states)


class ChannelSelfEnergy:
    """sigma(varpi) = Int D(omega)/(omega - varpi) domega and its
    varpi-derivative, for one sampled channel density."""

    def __init__(self, omega, density):
        omega = np.asarray(omega, dtype=float)
        density = np.asarray(density, dtype=float)
        if omega.ndim != 1 or omega.shape != density.shape:
            raise ValidationError("channel samples must be 1-d and aligned")
        if omega[0] <= 0:
            raise ValidationError("channel grid must start above 0")
        self.omega = omega
        self.density = density
        self._slopes = _hermite_slopes(omega, density[:, None])[:, 0]
        self.level = float(np.max(np.abs(density)))

    @property
    def is_empty(self):
        return self.level <= _EMPTY_CHANNEL_LEVEL

    def _interp(self, w):
        x, y, m = self.omega, self.density, self._slopes
        i = np.clip(np.searchsorted(x, w, side="right") - 1, 0, len(x) - 2)
        h = x[i + 1] - x[i]
        t = (w - x[i]) / h
        h00 = (1 + 2 * t) * (1 - t) ** 2
        h10 = t * (1 - t) ** 2
        h01 = t * t * (3 - 2 * t)
        h11 = t * t * (t - 1)
        return h00 * y[i] + h10 * h * m[i] + h01 * y[i + 1] + h11 * h * m[i + 1]

    def _tail_sigma(self, varpi):
        # Int_0^a C w^3/(w - p) dw with C w^3 matching D at the grid floor
        a = self.omega[0]
        c = self.density[0] / a**3
        p = varpi
        return c * (a**3 / 3.0 + p * a**2 / 2.0 + p**2 * a
                    + p**3 * np.log((a - p) / (-p)))

    def _tail_sigma_prime(self, varpi):
        a = self.omega[0]
        c = self.density[0] / a**3
        u1, u0 = a - varpi, -varpi
        term = lambda u: 0.5 * u**2 + 3.0 * varpi * u \
            + 3.0 * varpi**2 * np.log(u) - varpi**3 / u
        return c * (term(u1) - term(u0))

    def sigma(self, varpi):
        """Self-energy integral for varpi strictly below the continuum."""
        if varpi >= self.omega[0]:
            raise DomainError(
                f"self-energy pole {varpi} inside the continuum support")
        if self.is_empty:
            return 0.0
        val = gauss_legendre_panels(
            lambda w: self._interp(w) / (w - varpi), self.omega)
        if varpi < 0:
            val += self._tail_sigma(varpi)
        return float(val)

    def sigma_prime(self, varpi):
        if varpi >= self.omega[0]:
            raise DomainError(
                f"self-energy pole {varpi} inside the continuum support")
        if self.is_empty:
            return 0.0
        val = gauss_legendre_panels(
            lambda w: self._interp(w) / (w - varpi) ** 2, self.omega)
        if varpi < 0:
            val += self._tail_sigma_prime(varpi)
        return float(val)


def self_energy(omega, density, varpi):
    """Int D(omega)/(omega - varpi) over a sampled channel (scalar op)."""
    return ChannelSelfEnergy(omega, density).sigma(varpi)


def _bisect_root(g, lo, hi, tol):
    """Hybrid bisection/secant on a sign change; g increasing not assumed."""
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0:
        raise BracketingError("no sign change in root bracket",
                              samples=[(lo, glo), (hi, ghi)])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ghi != glo:
            sec = hi - ghi * (hi - lo) / (ghi - glo)
            if lo + 0.25 * (hi - lo) < sec < hi - 0.25 * (hi - lo):
                mid = sec
        gm = g(mid)
        if abs(gm) <= tol or (hi - lo) < 1e-16 * max(abs(lo), abs(hi), 1.0):
            return mid
        if glo * gm <= 0:
            hi, ghi = mid, gm
        else:
            lo, glo = mid, gm
    return mid


def _channel_bound_state(se: ChannelSelfEnergy, omega_0, label):
    """Root of varpi = omega_0 - sigma(varpi) on (-inf, 0) for one channel."""
    if se.is_empty:
        # empty continuum: the bare pole survives with full weight
        return BoundState(channel=label, varpi=omega_0, residue=1.0)
    tol = _ROOT_TOL_FACTOR * omega_0

    def g(p):
        return p - omega_0 + se.sigma(p)

    eps = -1e-12 * omega_0
    if g(eps) <= 0.0:
        return None
    lo = -omega_0
    for _ in range(80):
        if g(lo) < 0.0:
            break
        lo *= 2.0
    else:
        raise BracketingError("bound-state bracket did not close",
                              samples=[(eps, g(eps)), (lo, g(lo))])
    varpi = _bisect_root(g, lo, eps, tol)
    residue = 1.0 / (1.0 + se.sigma_prime(varpi))
    return BoundState(channel=label, varpi=float(varpi),
                      residue=float(residue))


def _scan_roots(f, lo, hi, n_scan, tol, label):
    """All simple roots of f on (lo, hi) by sign-change scan + bisection."""
    xs = np.linspace(lo, hi, n_scan)
    fs = np.array([f(x) for x in xs])
    roots = []
    for i in range(len(xs) - 1):
        if fs[i] == 0.0:
            roots.append(xs[i])
        elif fs[i] * fs[i + 1] < 0:
            roots.append(_bisect_root(f, xs[i], xs[i + 1], tol))
    uniq = []
    for r in roots:
        if not uniq or abs(r - uniq[-1]) > 1e-14 * max(1.0, abs(r)):
            uniq.append(r)
    return uniq


def find_bound_states(table: SpectralTable):
    """Discrete poles below the continuum for the tabulated system.

    N = 1, 2: per-channel roots (channels J_0 and J_0 +- J_1 are exact).
    N = 3: the two pole families of the Laplace solution; the middle
    symmetric sector uses Y(varpi), the antisymmetric one J_0 - J_2.
    """
    n = table.count
    w, e = table.omega, table.entries
    if n == 1:
        se = ChannelSelfEnergy(w, e[:, 0])
        st = _channel_bound_state(se, table.omega_0, "j0")
        return [st] if st else []
    if n == 2:
        out = []
        for label, dens in (("plus", e[:, 0] + e[:, 1]),
                            ("minus", e[:, 0] - e[:, 1])):
            st = _channel_bound_state(ChannelSelfEnergy(w, dens),
                                      table.omega_0, label)
            if st:
                out.append(st)
        _warn_near_degenerate(out, table.omega_0)
        return out
    if n == 3:
        states, _, _ = _n3_pole_data(table)
        _warn_near_degenerate(states, table.omega_0)
        return states
    raise NotImplementedError(
        "bound-state search beyond N = 3 needs the matrix pole condition "
        "det[(omega_0 - varpi) I + Sigma(varpi)] = 0; not implemented")


def _warn_near_degenerate(states, omega_0):
    vs = sorted(s.varpi for s in states)
    for a, b in zip(vs, vs[1:]):
        if abs(b - a) < _DEGENERATE_FACTOR * omega_0:
            warnings.warn(
                f"bound states within {_DEGENERATE_FACTOR:g} omega_0 of "
                "each other; residue evaluation is near-degenerate",
                stacklevel=3)


# ----------------------------------------------------------------------
# long-time solutions
# ----------------------------------------------------------------------

def steady_state_n2(bound_states, t):
    """Long-time amplitudes for two emitters started in (1, 0).

    Z(t) = (1/2) sum_j K_j e^{-i varpi_j t} (1, s_j) with s = +1 for the
    symmetric channel and -1 for the antisymmetric one.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    z = np.zeros((t.size, 2), dtype=complex)
    for st in bound_states:
        if st.channel not in ("plus", "minus"):
            raise ValidationError(f"unexpected N=2 channel {st.channel!r}")
        sgn = 1.0 if st.channel == "plus" else -1.0
        osc = np.exp(-1j * st.varpi * t)
        z[:, 0] += 0.5 * st.residue * osc
        z[:, 1] += 0.5 * st.residue * sgn * osc
    return z


def steady_concurrence_n2(bound_states, t):
    """Long-time pairwise entanglement for two emitters started in (1, 0).

    0 for no bound state, 2 K_1^2 for one, and
    2 |K_1^2 - K_2^2 + 2 i K_1 K_2 sin((varpi_1 - varpi_2) t)| for two.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    ks = {st.channel: st for st in bound_states}
    m = len(bound_states)
    if m == 0:
        return np.zeros(t.size)
    if m == 1:
        k = bound_states[0].residue
        return np.full(t.size, 2.0 * k * k)
    k1, k2 = ks["plus"].residue, ks["minus"].residue
    dv = ks["plus"].varpi - ks["minus"].varpi
    d = 2j * k1 * k2 * np.sin(dv * t)
    return 2.0 * np.abs(k1**2 - k2**2 + d)


def _n3_pole_data(table: SpectralTable):
    """Pole families of the three-emitter Laplace solution.

    Returns (states, y_terms, k02_state).  y_terms holds per Y-family
    root the weights entering Z: (varpi, w13, w2) with Z_{1,3} picking
    up w13 e^{-i varpi t} each and Z_2 picking up w2 e^{-i varpi t}.
    The k02 state enters Z_1 with +residue/2 and Z_3 with -residue/2.
    """
    w, e = table.omega, table.entries
    w0 = table.omega_0
    se0 = ChannelSelfEnergy(w, e[:, 0])
    se1 = ChannelSelfEnergy(w, e[:, 1])
    se02p = ChannelSelfEnergy(w, e[:, 0] + e[:, 2])
    se02m = ChannelSelfEnergy(w, e[:, 0] - e[:, 2])
    tol = _ROOT_TOL_FACTOR * w0

    states = []
    y_terms = []

    if se1.is_empty:
        # Y factorizes into the J0 and J0+J2 channel functions; the J0
        # root cancels against the numerator, leaving the J0+J2 pole
        st = _channel_bound_state(se02p, w0, "y-family")
        if st:
            states.append(st)
            y_terms.append((st.varpi, 0.5 * st.residue, 0.0))
    else:
        def g0(p):
            return p - w0 + se0.sigma(p)

        def g02p(p):
            return p - w0 + se02p.sigma(p)

        def f_y(p):
            return g0(p) * g02p(p) - 2.0 * se1.sigma(p) ** 2

        # widen until the quadratic growth of f_y dominates on the left
        lo = -w0
        for _ in range(80):
            if f_y(lo) > 0 and g0(lo) < 0 and g02p(lo) < 0:
                break
            lo *= 2.0
        hi = -1e-12 * w0
        for r in _scan_roots(f_y, lo, hi, 400, tol * max(w0, 1.0), "Y"):
            d_fy = (g0(r) * (1.0 + se02p.sigma_prime(r))
                    + g02p(r) * (1.0 + se0.sigma_prime(r))
                    - 4.0 * se1.sigma(r) * se1.sigma_prime(r))
            # guarded finite-difference check of the analytic derivative
            h = 1e-6 * max(abs(r), w0)
            if r + h < 0:
                fd = (f_y(r + h) - f_y(r - h)) / (2 * h)
                if abs(fd - d_fy) > 5e-3 * max(abs(d_fy), 1e-300):
                    warnings.warn(
                        f"Y-family derivative mismatch at varpi={r:.6e}: "
                        f"analytic {d_fy:.6e} vs finite-difference {fd:.6e}",
                        stacklevel=2)
            w13 = 0.5 * g0(r) / d_fy
            w2 = -se1.sigma(r) / d_fy
            y_terms.append((float(r), float(w13), float(w2)))
            states.append(BoundState(
                channel="y-family", varpi=float(r),
                residue=float(min(abs(2.0 * w13) + abs(w2), 1.0))))

    k02_state = _channel_bound_state(se02m, w0, "k02")
    if k02_state:
        states.append(k02_state)
    states.sort(key=lambda s: s.varpi)
    return states, y_terms, k02_state


def steady_state_n3(table: SpectralTable, t):
    """Long-time amplitudes for three emitters started in (1, 0, 0)."""
    if table.count != 3:
        raise ValidationError("steady_state_n3 needs a three-emitter table")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    _, y_terms, k02_state = _n3_pole_data(table)
    z = np.zeros((t.size, 3), dtype=complex)
    for varpi, w13, w2 in y_terms:
        osc = np.exp(-1j * varpi * t)
        z[:, 0] += w13 * osc
        z[:, 2] += w13 * osc
        z[:, 1] += w2 * osc
    if k02_state is not None:
        osc = np.exp(-1j * k02_state.varpi * t)
        z[:, 0] += 0.5 * k02_state.residue * osc
        z[:, 2] -= 0.5 * k02_state.residue * osc
    return z
