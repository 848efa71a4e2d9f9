"""Level-set machinery for lifetime fields.

Distribution functions mu(t) = volume of {u > t}, the level thresholds used
by the certificates, layer-cake L^p norms, ball closed forms, and the
symmetric decreasing rearrangement.  Everything here is a pure function of
immutable inputs.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverError, ValidationError
from .fields import ScalarField
from .geometry import unit_ball_volume


@dataclass(frozen=True)
class DistributionFunction:
    """Piecewise-linear table of super-level volumes.

    levels are strictly increasing starting at 0; volumes are non-increasing
    with volumes[0] = |D| and 0 at the top level (strict ">" counting).
    """

    levels: np.ndarray
    volumes: np.ndarray
    total_volume: float

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=np.float64)
        vol = np.asarray(self.volumes, dtype=np.float64)
        if lv.ndim != 1 or lv.size < 2 or lv.shape != vol.shape:
            raise ValidationError("distribution table needs matching 1-D arrays, >= 2 rows")
        if np.any(np.diff(lv) <= 0.0):
            raise ValidationError("breakpoints must increase strictly")
        if np.any(np.diff(vol) > 1e-12 * max(self.total_volume, 1.0)):
            raise ValidationError("volumes must be non-increasing")
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "volumes", vol)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        below = t <= self.levels[0]
        out = np.interp(t, self.levels, self.volumes, left=self.volumes[0], right=0.0)
        out = np.where(t >= self.levels[-1], 0.0, out)
        return np.where(below, self.volumes[0], out)

    @property
    def max_level(self) -> float:
        return float(self.levels[-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,mu\n")
        for t, m in zip(self.levels, self.volumes):
            buf.write(f"{float(t)!r},{float(m)!r}\n")
        return buf.getvalue()


def distribution_function(field: ScalarField, slices: int = 256) -> DistributionFunction:
    """Table of mu(t_i) = h^n count{cells: value > t_i}, t_i uniform on [0, max]."""
    if slices < 2:
        raise ValidationError("need at least 2 level slices")
    if not field.mask.any():
        raise ValidationError("field has no interior cells")
    vals = field.values[field.mask]
    top = float(np.max(vals))
    if top <= 0.0:
        levels = np.linspace(0.0, 1.0, slices)
        vols = np.zeros(slices)
        vols[0] = float(np.count_nonzero(field.mask)) * field.cell_volume
        # constant-zero field: mu drops to 0 immediately after t = 0
        return DistributionFunction(levels, vols, vols[0])
    levels = np.linspace(0.0, top, slices)
    sorted_vals = np.sort(vals)
    counts = sorted_vals.size - np.searchsorted(sorted_vals, levels, side="right")
    total = float(np.count_nonzero(field.mask)) * field.cell_volume
    volumes = counts.astype(np.float64) * field.cell_volume
    volumes[0] = total  # mu(0) counts the whole domain, including zero cells
    return DistributionFunction(levels, volumes, total)


def ball_distribution(n: int, v: float, t) -> np.ndarray:
    """Super-level volume of the ball lifetime at volume v.

    For the unit-volume ball mu(t) = (1 - 2 n omega_n^{2/n} t)_+^{n/2};
    general volumes follow from u_{rB}(rx) = r^2 u_B(x).
    """
    if v <= 0.0:
        raise ValidationError("ball volume must be positive")
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0.0):
        raise ValidationError("level must be >= 0")
    omega = unit_ball_volume(n)
    base = 1.0 - 2.0 * n * omega ** (2.0 / n) * t * v ** (-2.0 / n)
    out = v * np.maximum(base, 0.0) ** (n / 2.0)
    return out if out.ndim else float(out)


def level_cutoff(mu: DistributionFunction, asymmetry: float, fraction: float = 0.25) -> float:
    """Largest level t at which mu(t) still exceeds |D|(1 - fraction*asymmetry).

    Positive whenever the asymmetry is; solved on the interpolated table by
    inverse linear interpolation, taking the left endpoint across jumps.
    """
    if asymmetry <= 0.0:
        raise ValidationError("level cutoff is undefined at zero asymmetry")
    if not 0.0 < fraction < 1.0:
        raise ValidationError("fraction must lie in (0, 1)")
    target = mu.total_volume * (1.0 - fraction * asymmetry)
    lv, vol = mu.levels, mu.volumes
    if vol[0] <= target:
        return 0.0
    above = vol > target
    # last breakpoint still above the threshold
    i = int(np.max(np.flatnonzero(above)))
    if i == lv.size - 1:
        return float(lv[-1])
    drop = vol[i] - vol[i + 1]
    if drop <= 0.0:
        return float(lv[i + 1])
    frac = (vol[i] - target) / drop
    return float(lv[i] + frac * (lv[i + 1] - lv[i]))


def ball_depletion_level(n: int, asymmetry: float) -> float:
    """Level at which the unit-volume ball keeps 1 - asymmetry/8 of its volume, halved.

    Closed form (1/(4 n omega_n^{2/n}))(1 - (1 - A/8)^{2/n}); always at least
    A/(16 n^2 omega_n^{2/n}), which is asserted.
    """
    if not 0.0 < asymmetry <= 2.0:
        raise ValidationError("asymmetry must lie in (0, 2]")
    omega = unit_ball_volume(n)
    value = (1.0 - (1.0 - asymmetry / 8.0) ** (2.0 / n)) / (4.0 * n * omega ** (2.0 / n))
    floor = asymmetry / (16.0 * n * n * omega ** (2.0 / n))
    if value < floor * (1.0 - 1e-12):
        raise SolverError("depletion level fell below its analytic floor")
    return value


def lp_norm(mu: DistributionFunction, p) -> float:
    """Layer-cake value: integral of p t^{p-1} mu(t) dt; the p-th power of the norm.

    p = inf returns the essential sup (the top breakpoint).
    """
    if p == math.inf or p == "inf":
        return mu.max_level
    p = float(p)
    if p < 1.0:
        raise ValidationError("p must be >= 1")
    t = mu.levels
    integrand = p * np.power(t, p - 1.0) * mu.volumes
    return float(np.trapezoid(integrand, t))


def ball_lp_norm(n: int, v: float, p: float) -> float:
    """Closed-form ||u_B||_p^p at ball volume v.

    For the unit-volume ball the radial integral evaluates to
    (n/2) B(p+1, n/2) / ((2n)^p omega_n^{2p/n}); other volumes scale by
    v^{(2p+n)/n}.
    """
    if v <= 0.0:
        raise ValidationError("ball volume must be positive")
    p = float(p)
    if p < 1.0:
        raise ValidationError("p must be >= 1")
    omega = unit_ball_volume(n)
    beta = math.exp(math.lgamma(p + 1.0) + math.lgamma(n / 2.0) - math.lgamma(p + 1.0 + n / 2.0))
    unit = (n / 2.0) * beta / ((2.0 * n) ** p * omega ** (2.0 * p / n))
    return unit * v ** ((2.0 * p + n) / n)


def ball_sup_norm(n: int, v: float) -> float:
    """Peak ball lifetime at volume v: R^2/(2n) with omega_n R^n = v."""
    radius = (v / unit_ball_volume(n)) ** (1.0 / n)
    return radius * radius / (2.0 * n)


# ---------------------------------------------------------------------------
# rearrangement


@dataclass(frozen=True)
class RadialProfile:
    """Non-increasing step profile: value values[k] on the shell up to radii[k]."""

    radii: np.ndarray
    values: np.ndarray
    n: int

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        idx = np.searchsorted(self.radii, r, side="left")
        inside = idx < self.radii.size
        safe = np.minimum(idx, self.radii.size - 1)
        out = np.where(inside, self.values[safe], 0.0)
        return out if out.ndim else float(out)

    @property
    def support_radius(self) -> float:
        return float(self.radii[-1])

    def as_field(self, h: float) -> ScalarField:
        """Resample onto a centered grid of cell size h (zero outside support)."""
        if h <= 0.0:
            raise ValidationError("cell size must be positive")
        half = int(math.ceil(self.support_radius / h)) + 1
        m = 2 * half
        origin = np.full(self.n, -half * h)
        axes = [origin[i] + (np.arange(m) + 0.5) * h for i in range(self.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        rr = np.sqrt(sum(m_ * m_ for m_ in mesh))
        vals = self(rr.reshape(-1)).reshape(rr.shape)
        mask = rr < self.support_radius
        return ScalarField(origin, h, np.where(mask, vals, 0.0), mask)


def rearrangement(field: ScalarField) -> RadialProfile:
    """Symmetric decreasing rearrangement as a radial profile.

    Cell values sorted descending; the k-th cell (0-based) maps to the shell
    whose outer radius encloses volume (k+1) h^n, giving a profile
    equimeasurable with the input up to one cell volume per level.
    """
    if not field.mask.any():
        raise ValidationError("cannot rearrange an empty field")
    vals = np.sort(field.values[field.mask])[::-1]
    shells = (np.arange(vals.size) + 1.0) * field.cell_volume
    radii = (shells / unit_ball_volume(field.n)) ** (1.0 / field.n)
    return RadialProfile(radii, vals, field.n)


# ---------------------------------------------------------------------------
# energy-derivative identity


def gradient_sq(field: ScalarField) -> np.ndarray:
    """|grad u|^2 per cell by central differences, zero extension outside."""
    vals = field.values * field.mask
    out = np.zeros_like(vals)
    inv = 1.0 / (2.0 * field.h)
    for ax in range(field.n):
        pad = [(0, 0)] * field.n
        pad[ax] = (1, 1)
        padded = np.pad(vals, pad)
        lo = tuple(slice(0, -2) if k == ax else slice(None) for k in range(field.n))
        hi = tuple(slice(2, None) if k == ax else slice(None) for k in range(field.n))
        out += ((padded[hi] - padded[lo]) * inv) ** 2
    return out


def energy_derivative_check(field: ScalarField, levels: int = 64) -> float:
    """Max relative defect of mu(t) = -d/dt integral_{u>t} |grad u|^2.

    Central differences for the level derivative, middle 80% of the level
    range only (the extremes are dominated by staircase boundary error and
    vanishing set size).
    """
    if levels < 8:
        raise ValidationError("need at least 8 levels")
    vals = field.values[field.mask]
    top = float(np.max(vals)) if vals.size else 0.0
    if top <= 0.0:
        raise ValidationError("field is degenerate: no positive levels")
    gsq = gradient_sq(field)[field.mask] * field.cell_volume
    ts = np.linspace(0.0, top, levels)
    order = np.argsort(vals)
    sorted_vals = vals[order]
    gsq_sorted = gsq[order]
    # suffix sums give E(t) = sum of |grad u|^2 over cells above the level
    suffix = np.concatenate([np.cumsum(gsq_sorted[::-1])[::-1], [0.0]])
    idx = np.searchsorted(sorted_vals, ts, side="right")
    energy = suffix[idx]
    mu = (sorted_vals.size - idx) * field.cell_volume
    dt = ts[1] - ts[0]
    deriv = (energy[2:] - energy[:-2]) / (2.0 * dt)
    mu_mid = mu[1:-1]
    t_mid = ts[1:-1]
    keep = (t_mid >= 0.1 * top) & (t_mid <= 0.9 * top) & (mu_mid > 0.0)
    if not keep.any():
        raise ValidationError("no usable levels in the middle of the range")
    defect = np.abs(-deriv[keep] - mu_mid[keep]) / mu_mid[keep]
    return float(np.max(defect))
