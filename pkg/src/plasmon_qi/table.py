"""Frequency tables of the emitter-emitter spectral densities.

A SpectralTable samples J_m(omega), m = 0..N-1, on a strictly
increasing grid that concentrates points around the surface-mode band
edge omega_p / sqrt(eps_inf + 1), where the response is sharpest.
Tables are deterministic functions of the physical configuration and
are cached as versioned JSON keyed by a configuration fingerprint.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, ValidationError
from .green import QuadratureSpec, SpectralDensityCalculator
from .medium import DrudeMetal, EmitterArray, WireGeometry

TABLE_FORMAT = "plasmon-qi-table/1"


@dataclass(frozen=True)
class GridSpec:
    """Frequency grid layout for table builds."""

    n_points: int = 1200
    omega_min_factor: float = 1e-3     # times omega_0
    omega_max: float | None = None     # eV; None -> automatic
    edge_window: float = 0.4           # eV half-width of the dense band-edge zone
    taper_width: float | None = None   # eV; smooth roll-off below omega_max

    def __post_init__(self):
        if self.n_points < 16:
            raise ValidationError("grid needs at least 16 points")
        if not 0 < self.omega_min_factor < 1:
            raise ValidationError("omega_min_factor must be in (0, 1)")
        if self.omega_max is not None and self.omega_max <= 0:
            raise ValidationError("omega_max must be > 0")
        if self.edge_window <= 0:
            raise ValidationError("edge_window must be > 0")
        if self.taper_width is not None and self.taper_width <= 0:
            raise ValidationError("taper_width must be > 0")


def band_edge(metal: DrudeMetal):
    """Flat-interface surface-mode limit omega_p / sqrt(eps_inf + 1)."""
    if metal.omega_p == 0:
        return None
    return metal.omega_p / np.sqrt(metal.eps_inf + 1.0)


def default_omega_max(metal: DrudeMetal, emitters: EmitterArray):
    edge = band_edge(metal)
    if edge is None:
        return 3.0 * emitters.omega_0
    return max(3.0 * emitters.omega_0, 1.2 * edge)


def build_grid(metal: DrudeMetal, emitters: EmitterArray, spec: GridSpec):
    """Strictly increasing omega grid with band-edge concentration."""
    w_min = spec.omega_min_factor * emitters.omega_0
    w_max = spec.omega_max if spec.omega_max is not None \
        else default_omega_max(metal, emitters)
    if w_max <= w_min:
        raise ValidationError("omega_max must exceed omega_min")
    n = spec.n_points
    edge = band_edge(metal)
    lo_edge = None if edge is None else edge - spec.edge_window
    hi_edge = None if edge is None else edge + spec.edge_window
    if edge is None or hi_edge <= w_min or lo_edge >= w_max:
        n_log = max(int(0.3 * n), 2)
        grid = np.concatenate([
            np.geomspace(w_min, 0.3 * w_max, n_log, endpoint=False),
            np.linspace(0.3 * w_max, w_max, n - n_log),
        ])
        return np.unique(grid)
    lo_edge = max(lo_edge, w_min)
    hi_edge = min(hi_edge, w_max)
    mid = max(min(0.3 * w_max, lo_edge), w_min * 1.001)
    n_log = max(int(0.12 * n), 2)
    n_pre = max(int(0.22 * n), 2)
    n_edge = max(int(0.45 * n), 4)
    n_post = n - n_log - n_pre - n_edge
    parts = [
        np.geomspace(w_min, mid, n_log, endpoint=False),
        np.linspace(mid, lo_edge, n_pre, endpoint=False),
        np.linspace(lo_edge, hi_edge, n_edge, endpoint=False),
        np.linspace(hi_edge, w_max, max(n_post, 2)),
    ]
    return np.unique(np.concatenate(parts))


def table_fingerprint(metal, geometry, emitters, grid_spec, quad):
    """Stable hash over everything that affects table values."""
    payload = {
        "metal": asdict(metal),
        "geometry": asdict(geometry),
        "emitters": asdict(emitters),
        "grid": asdict(grid_spec),
        "quadrature": asdict(quad),
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class SpectralTable:
    """J_m(omega) samples plus provenance metadata."""

    omega: np.ndarray        # (P,) strictly increasing, eV
    entries: np.ndarray      # (P, N) real, eV
    count: int               # number of emitters N
    omega_0: float
    gamma_0: float
    spacing: float
    config_hash: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.entries = np.asarray(self.entries, dtype=float)
        if self.omega.ndim != 1 or np.any(np.diff(self.omega) <= 0):
            raise ValidationError("table grid must be strictly increasing")
        if self.entries.shape != (self.omega.size, self.count):
            raise ValidationError("table entries shape mismatch")
        if not np.all(np.isfinite(self.entries)):
            raise ValidationError("table entries must be finite")

    def matrix_at(self, idx):
        """N x N symmetric spectral matrix at grid index idx."""
        m = np.abs(np.subtract.outer(np.arange(self.count),
                                     np.arange(self.count)))
        return self.entries[idx][m]

    def channel_values(self):
        return eigen_channels(self).values


def _rows_for(metal, geometry, emitters, quad, omegas):
    calc = SpectralDensityCalculator(metal, geometry, emitters, quad)
    return np.array([calc.entries(w) for w in omegas])


def _worker(args):
    metal, geometry, emitters, quad, chunk = args
    return _rows_for(metal, geometry, emitters, quad, chunk)


def taper_window(grid, omega_max, width):
    """Cosine roll-off from 1 to 0 over [omega_max - width, omega_max].

    A hard window edge with J(omega_max) > 0 plants a spurious
    weakly-bound pole just above the window at strong coupling; the
    taper removes it while leaving the bulk of the density untouched.
    """
    w = np.ones_like(grid)
    sel = grid > omega_max - width
    x = (grid[sel] - (omega_max - width)) / width
    w[sel] = 0.5 * (1.0 + np.cos(np.pi * np.clip(x, 0.0, 1.0)))
    return w


def build_table(metal, geometry, emitters, grid_spec=None, quad=None,
                n_workers=1):
    """Sample J_m on the configured grid.

    Deterministic given the configuration; the worker count changes
    neither values nor ordering (rows are computed independently per
    frequency and reassembled in grid order).
    """
    grid_spec = grid_spec or GridSpec()
    quad = quad or QuadratureSpec()
    grid = build_grid(metal, emitters, grid_spec)
    if n_workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        chunks = np.array_split(grid, n_workers * 4)
        chunks = [c for c in chunks if c.size]
        args = [(metal, geometry, emitters, quad, c) for c in chunks]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(_worker, args))
        entries = np.concatenate(parts, axis=0)
    else:
        entries = _rows_for(metal, geometry, emitters, quad, grid)
    if grid_spec.taper_width is not None:
        entries = entries * taper_window(grid, grid[-1],
                                         grid_spec.taper_width)[:, None]
    return SpectralTable(
        omega=grid,
        entries=entries,
        count=emitters.count,
        omega_0=emitters.omega_0,
        gamma_0=emitters.gamma_0,
        spacing=emitters.spacing,
        config_hash=table_fingerprint(metal, geometry, emitters, grid_spec, quad),
        meta={
            "format": TABLE_FORMAT,
            "grid_spec": asdict(grid_spec),
            "quadrature": asdict(quad),
        },
    )


@dataclass
class EigenChannels:
    """Eigenvalues of the N x N spectral matrix per grid point, sorted
    descending.  For N <= 3 closed forms are used and cross-checked
    against the numeric symmetric eigensolver."""

    omega: np.ndarray
    values: np.ndarray    # (P, N) descending


_ANALYTIC_NUMERIC_TOL = 1e-10


def _channels_closed_form(entries):
    n = entries.shape[1]
    if n == 1:
        return entries.copy()
    if n == 2:
        j0, j1 = entries[:, 0], entries[:, 1]
        return np.stack([j0 + j1, j0 - j1], axis=1)
    if n == 3:
        j0, j1, j2 = entries[:, 0], entries[:, 1], entries[:, 2]
        root = np.sqrt(8.0 * j1**2 + j2**2)
        return np.stack([
            j0 - j2,
            0.5 * (2.0 * j0 + j2 - root),
            0.5 * (2.0 * j0 + j2 + root),
        ], axis=1)
    return None


def _channels_numeric(entries):
    n = entries.shape[1]
    idx = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    mats = entries[:, idx]
    return np.linalg.eigvalsh(mats)


def eigen_channels(table: SpectralTable):
    closed = _channels_closed_form(table.entries)
    numeric = _channels_numeric(table.entries)   # ascending
    if closed is not None:
        scale = np.maximum(np.max(np.abs(numeric), axis=1, keepdims=True),
                           1e-300)
        dev = np.abs(np.sort(closed, axis=1) - numeric) / scale
        if np.max(dev) > _ANALYTIC_NUMERIC_TOL:
            raise ValidationError(
                f"closed-form channels deviate from eigensolver by "
                f"{np.max(dev):.3e}")
        vals = np.sort(closed, axis=1)[:, ::-1]
    else:
        vals = numeric[:, ::-1]
    return EigenChannels(omega=table.omega.copy(), values=vals)


def _hermite_slopes(x, y):
    """Centered-difference slopes on a nonuniform grid; one-sided ends."""
    h = np.diff(x)
    s = np.diff(y, axis=0) / h[:, None]
    m = np.empty_like(y)
    m[0] = s[0]
    m[-1] = s[-1]
    if len(x) > 2:
        w1 = h[1:, None]
        w2 = h[:-1, None]
        m[1:-1] = (w1 * s[:-1] + w2 * s[1:]) / (w1 + w2)
    return m


def interpolate(table: SpectralTable, omega):
    """Cubic Hermite (C1) interpolation of all J_m at omega.

    omega may be scalar or array; values outside the grid span raise.
    """
    x = table.omega
    y = table.entries
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(w < x[0]) or np.any(w > x[-1]):
        raise DomainError("interpolation frequency outside the table span")
    i = np.clip(np.searchsorted(x, w, side="right") - 1, 0, len(x) - 2)
    m = _hermite_slopes(x, y)
    h = (x[i + 1] - x[i])[:, None]
    t = ((w - x[i]) / (x[i + 1] - x[i]))[:, None]
    h00 = (1 + 2 * t) * (1 - t) ** 2
    h10 = t * (1 - t) ** 2
    h01 = t * t * (3 - 2 * t)
    h11 = t * t * (t - 1)
    vals = h00 * y[i] + h10 * h * m[i] + h01 * y[i + 1] + h11 * h * m[i + 1]
    if np.isscalar(omega) or np.asarray(omega).ndim == 0:
        return vals[0]
    return vals


def save_table(table: SpectralTable, path):
    """Versioned JSON container; the payload section is byte-stable."""
    payload = {
        "format": TABLE_FORMAT,
        "config_hash": table.config_hash,
        "count": table.count,
        "omega_0": table.omega_0,
        "gamma_0": table.gamma_0,
        "spacing": table.spacing,
        "omega": table.omega.tolist(),
        "entries": table.entries.tolist(),
        "meta": {k: table.meta[k] for k in sorted(table.meta)
                 if k != "created"},
    }
    doc = {
        "payload": payload,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))


def load_table(path, expected_hash=None):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    payload = doc.get("payload", {})
    if payload.get("format") != TABLE_FORMAT:
        raise ValidationError(
            f"unsupported table format {payload.get('format')!r}")
    if expected_hash is not None and payload["config_hash"] != expected_hash:
        raise ValidationError(
            "cached table was built from a different configuration "
            f"({payload['config_hash'][:12]} != {expected_hash[:12]})")
    meta = dict(payload["meta"])
    meta["created"] = doc.get("created")
    return SpectralTable(
        omega=np.array(payload["omega"]),
        entries=np.array(payload["entries"]),
        count=payload["count"],
        omega_0=payload["omega_0"],
        gamma_0=payload["gamma_0"],
        spacing=payload["spacing"],
        config_hash=payload["config_hash"],
        meta=meta,
    )
