"""Adaptive Gauss-Kronrod quadrature for vector-valued integrands.

The integrand is evaluated on whole arrays of abscissae at once (all
pending panels in one call), which keeps the numpy-vectorized wire
kernel efficient.  Error control is per output component with a shared
relative floor so components passing through zero do not trigger
endless refinement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError

# 15-point Kronrod nodes (positive half) and weights, 7-point Gauss embedded
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full node set on [-1, 1], ordered; Gauss nodes sit at odd positions
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
_WK_FULL = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
_WG_FULL = np.zeros(15)
_WG_FULL[1:14:2] = np.concatenate([_WG[:-1], [_WG[-1]], _WG[:-1][::-1]])


@dataclass
class QuadratureResult:
    value: np.ndarray      # (ncomp,)
    error: np.ndarray      # (ncomp,) accumulated error estimate
    n_eval: int
    n_panels: int
    converged: bool


def _panel_eval(f, a, b):
    """Evaluate K15/G7 on panels given by edge arrays a, b (shape (np,))."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    xs = mid[:, None] + half[:, None] * _NODES[None, :]   # (np, 15)
    vals = f(xs.ravel())
    vals = np.asarray(vals)
    ncomp = vals.shape[1]
    vals = vals.reshape(len(a), 15, ncomp)
    k15 = np.einsum("k,pkc->pc", _WK_FULL, vals) * half[:, None]
    g7 = np.einsum("k,pkc->pc", _WG_FULL, vals) * half[:, None]
    err = np.abs(k15 - g7)
    return k15, err


def adaptive_gauss_kronrod(f, edges, rel_tol=1e-9, abs_tol=0.0,
                           max_subdivisions=4000, rel_floor=1e-6):
    """Integrate f over the union of [edges[i], edges[i+1]] panels.

    f maps an array of abscissae (n,) to values (n, ncomp).  Returns a
    QuadratureResult; raises QuadratureError when the panel budget is
    exhausted before the tolerance is met.
    """
    edges = np.unique(np.asarray(edges, dtype=float))
    if edges.size < 2:
        raise ValueError("need at least two panel edges")
    a = edges[:-1].copy()
    b = edges[1:].copy()
    keep = b > a
    a, b = a[keep], b[keep]
    vals, errs = _panel_eval(f, a, b)
    n_eval = 15 * len(a)

    for _ in range(200):
        total = vals.sum(axis=0)
        scale = np.abs(vals).sum(axis=0)
        err_tot = errs.sum(axis=0)
        floor = rel_floor * scale.max() if scale.size else 0.0
        tol = np.maximum(abs_tol, rel_tol * np.maximum(scale, floor))
        # |K15-G7| saturates near machine precision; don't chase roundoff
        tol = np.maximum(tol, 5e-14 * scale.max())
        if np.all(err_tot <= tol):
            return QuadratureResult(total, err_tot, n_eval, len(a), True)
        if len(a) >= max_subdivisions:
            break
        # refine panels contributing meaningfully to any failing component;
        # panels at relative machine width cannot improve further
        ratio = np.zeros(len(a))
        for m in range(vals.shape[1]):
            if err_tot[m] > tol[m]:
                ratio = np.maximum(ratio, errs[:, m] / max(tol[m], 1e-300))
        span = b.max() - a.min()
        ratio[(b - a) < 1e-13 * span] = 0.0
        if ratio.max() == 0.0:
            return QuadratureResult(total, err_tot, n_eval, len(a), False)
        # focus on the dominant error carriers, capped per round
        worst = ratio >= 0.25 * ratio.max()
        if worst.sum() > 64:
            order = np.argsort(-ratio, kind="stable")
            sel = np.zeros(len(a), dtype=bool)
            sel[order[:64]] = True
            worst = sel
        n_new = int(worst.sum())
        if len(a) + n_new > max_subdivisions:
            order = np.argsort(-ratio)
            allowed = max_subdivisions - len(a)
            if allowed <= 0:
                break
            sel = np.zeros(len(a), dtype=bool)
            sel[order[:allowed]] = True
            worst = sel
            n_new = allowed
        am, bm = a[worst], b[worst]
        mid = 0.5 * (am + bm)
        new_a = np.concatenate([a[~worst], am, mid])
        new_b = np.concatenate([b[~worst], mid, bm])
        keep_vals = vals[~worst]
        keep_errs = errs[~worst]
        fresh_vals, fresh_errs = _panel_eval(
            f, np.concatenate([am, mid]), np.concatenate([mid, bm]))
        n_eval += 15 * 2 * n_new
        a, b = new_a, new_b
        vals = np.concatenate([keep_vals, fresh_vals], axis=0)
        errs = np.concatenate([keep_errs, fresh_errs], axis=0)

    total = vals.sum(axis=0)
    err_tot = errs.sum(axis=0)
    scale = np.abs(vals).sum(axis=0)
    floor = rel_floor * scale.max() if scale.size else 0.0
    tol = np.maximum(abs_tol, rel_tol * np.maximum(scale, floor))
    raise QuadratureError(
        f"adaptive quadrature did not converge: error {err_tot} vs tol {tol} "
        f"with {len(a)} panels",
        achieved=err_tot, requested=tol,
    )


def gauss_legendre_panels(f, edges, order=10):
    """Fixed-order Gauss-Legendre on each panel; no adaptivity.

    Used for smooth integrals over tabulated grids (self-energies),
    where the grid itself sets the resolution.  f maps (n,) -> (n,) or
    (n, ncomp).
    """
    edges = np.asarray(edges, dtype=float)
    xg, wg = np.polynomial.legendre.leggauss(order)
    a = edges[:-1]
    b = edges[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    xs = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    vals = np.asarray(f(xs))
    if vals.ndim == 1:
        vals = vals.reshape(len(a), order)
        return float(np.sum(vals * wg[None, :] * half[:, None]))
    vals = vals.reshape(len(a), order, -1)
    return np.einsum("pkc,k,p->c", vals, wg, half)
