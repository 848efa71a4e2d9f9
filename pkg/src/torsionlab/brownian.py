"""Expected-lifetime solvers for Brownian motion with generator Laplacian.

The lifetime function u(x) = E^x[tau_D] solves -Lap u = 1 in D, u = 0
outside; for the ball of radius R this is (R^2 - |x|^2)/(2n).  Four
independent routes are provided: closed forms for balls and ellipses,
walk-on-spheres, a finite-difference Poisson solve on the standard grid, and
direct Euler path simulation for exit-time moments and survival
probabilities.  The Monte Carlo routines draw from counter-based streams, so
a (seed, paths) pair pins every number regardless of batching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from . import rng
from .errors import MaskMismatchError, SolverError, ValidationError
from .fields import ScalarField, cell_centers, grid_geometry
from .geometry import Ball, Domain, Ellipse


@dataclass(frozen=True)
class WosConfig:
    paths: int = 100_000
    boundary_eps: float | None = None  # None: 1e-4 * domain diameter
    max_steps: int = 10_000
    seed: int = 0
    antithetic: bool = False

    def __post_init__(self):
        if self.paths < 1:
            raise ValidationError("paths must be >= 1")
        if self.boundary_eps is not None and self.boundary_eps <= 0.0:
            raise ValidationError("boundary_eps must be positive")
        if self.max_steps < 1:
            raise ValidationError("max_steps must be >= 1")


@dataclass(frozen=True)
class PathConfig:
    dt: float
    paths: int = 10_000
    t_max: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValidationError("dt must be positive")
        if self.t_max <= 0.0:
            raise ValidationError("t_max must be positive")
        if self.paths < 1:
            raise ValidationError("paths must be >= 1")


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    paths: int
    warning: str | None = None

    def interval(self, k: float = 3.0) -> tuple[float, float]:
        return (self.value - k * self.stderr, self.value + k * self.stderr)


# ---------------------------------------------------------------------------
# closed forms


def ball_lifetime(radius: float, x, n: int) -> float:
    """(R^2 - |x|^2)/(2n) for the ball of radius R about the origin."""
    if radius <= 0.0:
        raise ValidationError("radius must be positive")
    pt = np.asarray(x, dtype=np.float64).reshape(-1)
    if pt.size != n:
        raise ValidationError("point dimension disagrees with n")
    r2 = float(pt @ pt)
    if r2 > radius * radius * (1.0 + 1e-12):
        raise ValidationError("point lies outside the ball")
    return max(radius * radius - r2, 0.0) / (2.0 * n)


def ellipse_axes_lifetime(a: float, b: float, x) -> float:
    """Lifetime in the ellipse x1^2/a^2 + x2^2/b^2 < 1; 0 outside.

    The quadratic q(x) = (a^2 b^2 / (2(a^2+b^2)))(1 - x1^2/a^2 - x2^2/b^2)
    has Laplacian -1 and vanishes on the boundary, so it is the lifetime.
    """
    if a <= 0.0 or b <= 0.0:
        raise ValidationError("semi-axes must be positive")
    pt = np.asarray(x, dtype=np.float64).reshape(-1)
    if pt.size != 2:
        raise ValidationError("ellipse lifetime is for 2-D points")
    q = 1.0 - (pt[0] / a) ** 2 - (pt[1] / b) ** 2
    if q <= 0.0:
        return 0.0
    return (a * b) ** 2 / (2.0 * (a * a + b * b)) * q


def ellipse_lifetime(eps: float, x) -> float:
    """Lifetime in the ellipse with semi-axes (1, 1+eps); 0 outside."""
    if eps < 0.0:
        raise ValidationError("eps must be >= 0")
    return ellipse_axes_lifetime(1.0, 1.0 + eps, x)


def exact_lifetime(domain: Domain, x):
    """Closed-form lifetime where the kind admits one, else None."""
    if isinstance(domain, Ball):
        pt = np.asarray(x, dtype=np.float64) - domain.center
        return ball_lifetime(domain.radius, pt, domain.n)
    if isinstance(domain, Ellipse):
        pt = np.asarray(x, dtype=np.float64) - domain.center
        return ellipse_axes_lifetime(domain.semi_axes[0], domain.semi_axes[1], pt)
    return None


# ---------------------------------------------------------------------------
# walk on spheres


def wos_lifetime(domain: Domain, x, cfg: WosConfig) -> McEstimate:
    """Walk-on-spheres estimate of E^x[tau_D] with standard error.

    Each step centered at y adds r^2/(2n) with r = boundary_distance(y) and
    jumps uniformly on the sphere of radius r; the walk is absorbed once the
    boundary distance drops under eps, leaving the remaining contribution at
    0 (one-sided O(eps) bias).
    """
    pt = np.asarray(x, dtype=np.float64).reshape(-1)
    if pt.size != domain.n:
        raise ValidationError("point dimension disagrees with the domain")
    if not bool(domain.contains_points(pt[None, :])[0]):
        raise ValidationError("walk-on-spheres start point must lie inside the domain")
    eps = cfg.boundary_eps
    if eps is None:
        eps = 1e-4 * domain.diameter_bound()
    n = domain.n
    paths = cfg.paths
    path_ids = np.arange(paths, dtype=np.uint64)
    if cfg.antithetic:
        streams = path_ids >> np.uint64(1)
        signs = np.where(path_ids & np.uint64(1), -1.0, 1.0)
    else:
        streams = path_ids
        signs = np.ones(paths)
    pos = np.repeat(pt[None, :], paths, axis=0)
    acc = np.zeros(paths)
    alive = np.arange(paths)
    exhausted = 0
    for step in range(cfg.max_steps):
        if alive.size == 0:
            break
        r = domain.distance_points(pos[alive])
        going = r >= eps
        walkers = alive[going]
        if walkers.size == 0:
            alive = walkers
            break
        rr = r[going]
        acc[walkers] += rr * rr / (2.0 * n)
        dirs = rng.unit_directions(cfg.seed, rng.TAG_WOS, streams[walkers],
                                   np.uint64(step), n)
        pos[walkers] += rr[:, None] * dirs * signs[walkers, None]
        alive = walkers
    else:
        exhausted = alive.size
    warning = None
    if exhausted > 0.01 * paths:
        warning = (f"{exhausted} of {paths} walks hit the step cap "
                   f"{cfg.max_steps}; estimate is biased low")
    mean = float(np.mean(acc))
    stderr = float(np.std(acc, ddof=1) / math.sqrt(paths)) if paths > 1 else float("inf")
    return McEstimate(mean, stderr, paths, warning)


# ---------------------------------------------------------------------------
# grid Poisson solve


def _neighbor_pairs(index: np.ndarray):
    ndim = index.ndim
    rows, cols = [], []
    for ax in range(ndim):
        sl_a = tuple(slice(0, -1) if k == ax else slice(None) for k in range(ndim))
        sl_b = tuple(slice(1, None) if k == ax else slice(None) for k in range(ndim))
        a = index[sl_a].reshape(-1)
        b = index[sl_b].reshape(-1)
        ok = (a >= 0) & (b >= 0)
        rows.append(a[ok])
        cols.append(b[ok])
    return np.concatenate(rows), np.concatenate(cols)


def _poisson_matrix(mask: np.ndarray, h: float) -> sp.csr_matrix:
    count = int(np.count_nonzero(mask))
    index = np.full(mask.shape, -1, dtype=np.int64)
    index[mask] = np.arange(count)
    rows, cols = _neighbor_pairs(index)
    inv_h2 = 1.0 / (h * h)
    diag = np.full(count, 2.0 * mask.ndim * inv_h2)
    data = np.concatenate([diag, np.full(rows.size, -inv_h2), np.full(rows.size, -inv_h2)])
    i = np.concatenate([np.arange(count), rows, cols])
    j = np.concatenate([np.arange(count), cols, rows])
    return sp.coo_matrix((data, (i, j)), shape=(count, count)).tocsr()


def _amg_preconditioner(matrix: sp.csr_matrix):
    if matrix.shape[0] < 512:
        return None
    try:
        import pyamg
        # setup estimates a spectral radius by power iteration from a random
        # start vector; pin the global stream so hierarchies (and therefore
        # solver output bytes) are reproducible across processes
        state = np.random.get_state()
        np.random.seed(0)
        try:
            ml = pyamg.smoothed_aggregation_solver(matrix, max_coarse=64)
        finally:
            np.random.set_state(state)
        return ml.aspreconditioner(cycle="V")
    except Exception:
        return None


def grid_torsion(domain: Domain, resolution: int,
                 cell_size: float | None = None) -> ScalarField:
    """Finite-difference lifetime field on the standard grid.

    Five-point (2-D) / seven-point (3-D) Laplacian with Dirichlet zero on
    cells outside the domain, right side 1, conjugate gradient to relative
    residual 1e-10.  An explicit cell_size pins the grid spacing so two
    domains can be solved on identical cells (resolution is then ignored).
    """
    if cell_size is not None:
        if cell_size <= 0.0:
            raise ValidationError("cell size must be positive")
        lo, hi = domain.bounding_box()
        h = float(cell_size)
        shape = tuple(int(math.ceil(s / h - 1e-9)) for s in (hi - lo))
        origin = lo
    else:
        if resolution < 16:
            raise ValidationError("grid resolution must be >= 16")
        origin, h, shape = grid_geometry(domain, resolution)
    mask = domain.contains_points(cell_centers(origin, h, shape)).reshape(shape)
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise SolverError("no grid cells fall inside the domain")
    matrix = _poisson_matrix(mask, h)
    b = np.ones(count)
    u, info = cg(matrix, b, rtol=1e-10, atol=0.0, maxiter=20000,
                 M=_amg_preconditioner(matrix))
    if info != 0:
        raise SolverError(f"conjugate gradient failed to converge (info={info})")
    values = np.zeros(shape)
    # CG noise can leave values a hair below zero next to the boundary
    values[mask] = np.maximum(u, 0.0)
    return ScalarField(origin, h, values, mask)


# ---------------------------------------------------------------------------
# direct path simulation


def _closure_status(domain: Domain, pt: np.ndarray) -> str:
    if bool(domain.contains_points(pt[None, :])[0]):
        return "inside"
    sd = domain.signed_distance_points(pt[None, :])
    if sd is not None and sd[0] >= -1e-9 * domain.diameter_bound():
        return "boundary"
    return "outside"


def _crossing_fraction(domain: Domain, start: np.ndarray, stop: np.ndarray) -> np.ndarray:
    sd_in = domain.signed_distance_points(start)
    sd_out = domain.signed_distance_points(stop)
    if sd_in is None or sd_out is None:
        return np.full(start.shape[0], 0.5)
    denom = sd_in - sd_out
    theta = np.where(denom > 0.0, sd_in / np.maximum(denom, 1e-300), 0.5)
    return np.clip(theta, 0.0, 1.0)


def _exit_times(domain: Domain, pt: np.ndarray, cfg: PathConfig):
    """Euler paths; returns (exit times, censored flags).

    Per-coordinate increments are Gaussian with variance 2*dt (generator
    Laplacian); the exit time is the first step outside the domain, refined
    linearly within the step from signed distances.
    """
    n = domain.n
    paths = cfg.paths
    steps = int(math.ceil(cfg.t_max / cfg.dt - 1e-12))
    scale = math.sqrt(2.0 * cfg.dt)
    pos = np.repeat(pt[None, :], paths, axis=0)
    tau = np.full(paths, cfg.t_max)
    censored = np.ones(paths, dtype=bool)
    alive = np.arange(paths, dtype=np.int64)
    for step in range(steps):
        if alive.size == 0:
            break
        inc = scale * rng.normal_vectors(cfg.seed, rng.TAG_EM_PATH,
                                         alive.astype(np.uint64), np.uint64(step), n)
        nxt = pos[alive] + inc
        out = ~domain.contains_points(nxt)
        if out.any():
            exiting = alive[out]
            theta = _crossing_fraction(domain, pos[exiting], nxt[out])
            tau[exiting] = np.minimum((step + theta) * cfg.dt, cfg.t_max)
            censored[exiting] = False
        pos[alive] = nxt
        alive = alive[~out]
    return tau, censored


def exit_moment_mc(domain: Domain, x, p: float, cfg: PathConfig) -> McEstimate:
    """Monte Carlo estimate of E^x[tau_D^p] by direct path simulation."""
    if p <= 0.0:
        raise ValidationError("moment order p must be positive")
    pt = np.asarray(x, dtype=np.float64).reshape(-1)
    if pt.size != domain.n:
        raise ValidationError("point dimension disagrees with the domain")
    status = _closure_status(domain, pt)
    if status == "outside":
        raise ValidationError("start point must lie in the closed domain")
    if status == "boundary":
        return McEstimate(0.0, 0.0, cfg.paths)
    tau, censored = _exit_times(domain, pt, cfg)
    warning = None
    still = int(np.count_nonzero(censored))
    if still > 0.001 * cfg.paths:
        warning = (f"{still} of {cfg.paths} paths alive at t_max={cfg.t_max}; "
                   "moment estimate is truncated")
    vals = tau ** p
    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / math.sqrt(cfg.paths)) if cfg.paths > 1 else float("inf")
    return McEstimate(mean, stderr, cfg.paths, warning)


def survival_mc(domain: Domain, x, t: float, cfg: PathConfig) -> McEstimate:
    """Fraction of paths with tau > t, with binomial standard error."""
    if t < 0.0:
        raise ValidationError("time must be >= 0")
    pt = np.asarray(x, dtype=np.float64).reshape(-1)
    if pt.size != domain.n:
        raise ValidationError("point dimension disagrees with the domain")
    status = _closure_status(domain, pt)
    if status == "outside":
        raise ValidationError("start point must lie in the closed domain")
    if t == 0.0:
        return McEstimate(1.0, 0.0, cfg.paths)
    if status == "boundary":
        return McEstimate(0.0, 0.0, cfg.paths)
    horizon = PathConfig(dt=cfg.dt, paths=cfg.paths, t_max=t, seed=cfg.seed)
    tau, censored = _exit_times(domain, pt, horizon)
    hits = int(np.count_nonzero(censored | (tau > t)))
    p_hat = hits / cfg.paths
    stderr = math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / cfg.paths)
    return McEstimate(p_hat, stderr, cfg.paths)


# ---------------------------------------------------------------------------
# integral functionals


def torsional_rigidity(field: ScalarField) -> float:
    """h^n times the sum of field values (the L1 norm of the lifetime)."""
    return float(np.sum(field.values) * field.cell_volume)


def dirichlet_energy(field: ScalarField) -> float:
    """Integral of |grad u|^2 with u extended by zero outside the mask."""
    vals = field.values * field.mask
    total = 0.0
    for ax in range(field.n):
        pad = [(0, 0)] * field.n
        pad[ax] = (1, 1)
        padded = np.pad(vals, pad)
        total += float(np.sum(np.diff(padded, axis=ax) ** 2))
    return total * field.h ** (field.n - 2)


def variational_bound(field: ScalarField, test: ScalarField) -> float:
    """2*integral(test) - dirichlet_energy(test); never exceeds the rigidity.

    The quadratic functional is maximized exactly by the lifetime field, at
    which it equals the torsional rigidity, so any admissible test field
    (zero outside the domain mask) yields a lower bound.
    """
    if test.shape != field.shape or test.h != field.h \
            or not np.allclose(test.origin, field.origin):
        raise MaskMismatchError("test field must live on the same grid")
    if np.any(test.values[~field.mask] != 0.0):
        raise MaskMismatchError("test field must vanish outside the domain mask")
    return 2.0 * float(np.sum(test.values) * test.cell_volume) - dirichlet_energy(test)
