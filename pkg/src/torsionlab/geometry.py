"""Domain descriptions and the geometric queries every solver builds on.

A Domain is an open bounded region of R^n described by kind-specific
parameters.  All kinds support vectorised membership tests, positive lower
bounds on the distance to the boundary from interior points, bounding boxes
that strictly contain the region, and similarity scaling about the origin.
Analytic kinds (ball, ellipse, rectangle, stadium, polygon) carry exact
volumes; implicit kinds fall back to midpoint-grid counting with an error
estimate of (boundary area bound) * cell size.

Distance conventions
--------------------
``distance_points`` returns a positive lower bound on dist(x, boundary) for
interior points; it is exact for balls, rectangles, polygons and stadiums.
For ellipses the bound comes from a bisection solve of the closest-point
equation and is exact up to a relative safety margin of 1e-12.  For implicit
domains the bound is min over 64 fixed rays of the bisected exit radius,
halved, which keeps a ball of that radius inside the domain for any region
whose boundary is resolved by the ray fan.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import rng
from .errors import SolverError, ValidationError

_EDGE_TOL = 1e-12
_RAY_COUNT = 64
_RAY_BISECTIONS = 48


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n."""
    if n < 1:
        raise ValidationError("dimension must be a positive integer")
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def equivalent_ball_radius(volume: float, n: int) -> float:
    """Radius of the ball in R^n with the given volume."""
    if volume <= 0.0:
        raise ValidationError("volume must be positive")
    return (volume / unit_ball_volume(n)) ** (1.0 / n)


@dataclass(frozen=True)
class EquivalentBall:
    """Ball matched in volume to a domain."""

    radius: float
    center: tuple
    n: int

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.n) * self.radius ** self.n


@dataclass(frozen=True)
class VolumeResult:
    value: float
    error: float
    method: str


def _as_points(x, n: int) -> tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != n:
        raise ValidationError(f"expected points of dimension {n}, got shape {pts.shape}")
    return pts, single


class Domain:
    """Base class; subclasses fill in the kind-specific geometry."""

    kind = "abstract"
    n = 0

    # -- vector interface ------------------------------------------------
    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def distance_points(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def signed_distance_points(self, pts: np.ndarray):
        """Signed distance (positive inside) where cheaply available, else None."""
        return None

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def exact_volume(self):
        return None

    def scaled(self, r: float) -> "Domain":
        raise NotImplementedError

    def translated(self, shift) -> "Domain":
        raise NotImplementedError

    def spec_dict(self) -> dict:
        raise NotImplementedError

    # -- shared helpers --------------------------------------------------
    def diameter_bound(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def volume_value(self, resolution: int = 1024) -> float:
        v = self.exact_volume()
        if v is not None:
            return v
        return volume(self, resolution).value


def _bbox_pad(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    span = np.max(hi - lo)
    pad = 1e-9 * max(span, 1.0)
    return lo - pad, hi + pad


class Ball(Domain):
    kind = "ball"

    def __init__(self, radius: float, center=None, n: int | None = None):
        if radius <= 0.0:
            raise ValidationError("ball radius must be positive")
        if center is not None:
            center = np.asarray(center, dtype=np.float64)
            if n is not None and n != center.size:
                raise ValidationError("ball center length disagrees with n")
            n = center.size
        if n is None:
            n = 2
        if n < 1:
            raise ValidationError("ball dimension must be >= 1")
        self.n = int(n)
        self.radius = float(radius)
        self.center = np.zeros(self.n) if center is None else center.astype(np.float64)

    def contains_points(self, pts):
        d = pts - self.center
        return np.einsum("ij,ij->i", d, d) < self.radius ** 2

    def distance_points(self, pts):
        d = pts - self.center
        return self.radius - np.sqrt(np.einsum("ij,ij->i", d, d))

    def signed_distance_points(self, pts):
        return self.distance_points(pts)

    def bounding_box(self):
        return _bbox_pad(self.center - self.radius, self.center + self.radius)

    def exact_volume(self):
        return unit_ball_volume(self.n) * self.radius ** self.n

    def scaled(self, r):
        return Ball(self.radius * r, self.center * r)

    def translated(self, shift):
        return Ball(self.radius, self.center + np.asarray(shift, dtype=np.float64))

    def spec_dict(self):
        return {
            "kind": "ball",
            "n": self.n,
            "radius": self.radius,
            "center": [float(c) for c in self.center],
        }


class Ellipse(Domain):
    """Open 2-D ellipse with semi-axes (a, b)."""

    kind = "ellipse"
    n = 2

    def __init__(self, semi_axes, center=None):
        a, b = (float(semi_axes[0]), float(semi_axes[1]))
        if a <= 0.0 or b <= 0.0:
            raise ValidationError("ellipse semi-axes must be positive")
        self.semi_axes = np.array([a, b], dtype=np.float64)
        self.center = np.zeros(2) if center is None else np.asarray(center, dtype=np.float64)

    @classmethod
    def from_flattening(cls, eps: float) -> "Ellipse":
        if eps < 0.0:
            raise ValidationError("ellipse eps must be >= 0")
        return cls((1.0, 1.0 + eps))

    def contains_points(self, pts):
        q = (pts - self.center) / self.semi_axes
        return np.einsum("ij,ij->i", q, q) < 1.0

    def _closest_point_gap(self, pts):
        # Bisection on t for the closest-point parameter: the projection of p
        # onto the ellipse is y_i = e_i^2 p_i / (e_i^2 + t), with t the root of
        # sum_i (e_i p_i / (e_i^2 + t))^2 = 1.  Inside points have the root in
        # (-min(e)^2, 0), outside points in (0, inf).
        e = self.semi_axes
        p = np.abs(pts - self.center)
        p = np.maximum(p, 1e-14 * e)
        g = np.einsum("ij,ij->i", p / e, p / e) - 1.0
        inside = g < 0.0
        emin2 = float(np.min(e) ** 2)
        lo = np.where(inside, -emin2 * (1.0 - 1e-14), 0.0)
        hi = np.where(inside, 0.0, np.sqrt(np.einsum("ij,j->i", p ** 2, e ** 2)) + 1.0)
        ep = p * e
        for _ in range(96):
            mid = 0.5 * (lo + hi)
            f = np.einsum("ij->i", (ep / (e ** 2 + mid[:, None])) ** 2) - 1.0
            pos = f > 0.0
            lo = np.where(pos, mid, lo)
            hi = np.where(pos, hi, mid)
        t = 0.5 * (lo + hi)
        y = (e ** 2) * p / (e ** 2 + t[:, None])
        gap = np.sqrt(np.einsum("ij,ij->i", y - p, y - p))
        return gap, inside

    def distance_points(self, pts):
        gap, inside = self._closest_point_gap(pts)
        return np.where(inside, gap * (1.0 - 1e-12), -gap)

    def signed_distance_points(self, pts):
        return self.distance_points(pts)

    def bounding_box(self):
        return _bbox_pad(self.center - self.semi_axes, self.center + self.semi_axes)

    def exact_volume(self):
        return math.pi * self.semi_axes[0] * self.semi_axes[1]

    def scaled(self, r):
        return Ellipse(self.semi_axes * r, self.center * r)

    def translated(self, shift):
        return Ellipse(self.semi_axes, self.center + np.asarray(shift, dtype=np.float64))

    def spec_dict(self):
        a, b = self.semi_axes
        d = {"kind": "ellipse", "n": 2, "semi_axes": [float(a), float(b)],
             "center": [float(c) for c in self.center]}
        if a == 1.0 and b >= 1.0:
            d["eps"] = float(b - 1.0)
        return d


class Box(Domain):
    kind = "rectangle"

    def __init__(self, corners):
        c = np.asarray(corners, dtype=np.float64)
        if c.shape[0] != 2 or c.ndim != 2:
            raise ValidationError("rectangle needs two corner points")
        self.lo = np.minimum(c[0], c[1])
        self.hi = np.maximum(c[0], c[1])
        if np.any(self.hi - self.lo <= 0.0):
            raise ValidationError("rectangle sides must have positive length")
        self.n = int(self.lo.size)

    def contains_points(self, pts):
        return np.all((pts > self.lo) & (pts < self.hi), axis=1)

    def distance_points(self, pts):
        t = np.minimum(pts - self.lo, self.hi - pts)
        return np.min(t, axis=1)

    def signed_distance_points(self, pts):
        t = np.minimum(pts - self.lo, self.hi - pts)
        inner = np.min(t, axis=1)
        out = np.sqrt(np.sum(np.minimum(t, 0.0) ** 2, axis=1))
        return np.where(inner > 0.0, inner, -out)

    def bounding_box(self):
        return _bbox_pad(self.lo.copy(), self.hi.copy())

    def exact_volume(self):
        return float(np.prod(self.hi - self.lo))

    def scaled(self, r):
        return Box([self.lo * r, self.hi * r])

    def translated(self, shift):
        s = np.asarray(shift, dtype=np.float64)
        return Box([self.lo + s, self.hi + s])

    def spec_dict(self):
        return {"kind": "rectangle", "n": self.n,
                "corners": [[float(v) for v in self.lo], [float(v) for v in self.hi]]}


class Polygon(Domain):
    """Simple polygon, winding-number containment, 2-D only."""

    kind = "polygon"
    n = 2

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValidationError("polygon needs at least three 2-D vertices")
        self.vertices = v

    def _edges(self):
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def _edge_distance(self, pts):
        a, b = self._edges()
        ab = b - a                                   # (E,2)
        denom = np.maximum(np.einsum("ej,ej->e", ab, ab), 1e-300)
        ap = pts[:, None, :] - a[None, :, :]          # (N,E,2)
        t = np.clip(np.einsum("nej,ej->ne", ap, ab) / denom, 0.0, 1.0)
        closest = a[None, :, :] + t[..., None] * ab[None, :, :]
        gap = pts[:, None, :] - closest
        return np.sqrt(np.min(np.einsum("nej,nej->ne", gap, gap), axis=1))

    def contains_points(self, pts):
        a, b = self._edges()
        x = pts[:, 0][:, None]
        y = pts[:, 1][:, None]
        ya, yb = a[:, 1][None, :], b[:, 1][None, :]
        cross = (b[:, 0] - a[:, 0])[None, :] * (y - ya) - (x - a[:, 0][None, :]) * (yb - ya)
        up = (ya <= y) & (yb > y) & (cross > 0.0)
        dn = (yb <= y) & (ya > y) & (cross < 0.0)
        wn = up.sum(axis=1) - dn.sum(axis=1)
        inside = wn != 0
        if inside.any():
            near = self._edge_distance(pts[inside]) <= _EDGE_TOL
            if near.any():
                sel = np.flatnonzero(inside)
                inside[sel[near]] = False
        return inside

    def distance_points(self, pts):
        return self._edge_distance(pts)

    def signed_distance_points(self, pts):
        d = self._edge_distance(pts)
        return np.where(self.contains_points(pts), d, -d)

    def bounding_box(self):
        return _bbox_pad(self.vertices.min(axis=0), self.vertices.max(axis=0))

    def exact_volume(self):
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        x2, y2 = np.roll(x, -1), np.roll(y, -1)
        return float(abs(np.sum(x * y2 - x2 * y)) / 2.0)

    def scaled(self, r):
        return Polygon(self.vertices * r)

    def translated(self, shift):
        return Polygon(self.vertices + np.asarray(shift, dtype=np.float64))

    def spec_dict(self):
        return {"kind": "polygon", "n": 2,
                "vertices": [[float(a), float(b)] for a, b in self.vertices]}


class Stadium(Domain):
    """Capsule: all points within `radius` of the segment [p, q], 2-D."""

    kind = "stadium"
    n = 2

    def __init__(self, p, q, radius: float):
        if radius <= 0.0:
            raise ValidationError("stadium radius must be positive")
        self.p = np.asarray(p, dtype=np.float64)
        self.q = np.asarray(q, dtype=np.float64)
        if self.p.shape != (2,) or self.q.shape != (2,):
            raise ValidationError("stadium endpoints must be 2-D points")
        self.radius = float(radius)

    def _segment_distance(self, pts):
        ab = self.q - self.p
        denom = max(float(ab @ ab), 1e-300)
        t = np.clip((pts - self.p) @ ab / denom, 0.0, 1.0)
        closest = self.p + t[:, None] * ab
        gap = pts - closest
        return np.sqrt(np.einsum("ij,ij->i", gap, gap))

    def contains_points(self, pts):
        return self._segment_distance(pts) < self.radius

    def distance_points(self, pts):
        return self.radius - self._segment_distance(pts)

    def signed_distance_points(self, pts):
        return self.distance_points(pts)

    def bounding_box(self):
        lo = np.minimum(self.p, self.q) - self.radius
        hi = np.maximum(self.p, self.q) + self.radius
        return _bbox_pad(lo, hi)

    def exact_volume(self):
        length = float(np.linalg.norm(self.q - self.p))
        return math.pi * self.radius ** 2 + 2.0 * self.radius * length

    def scaled(self, r):
        return Stadium(self.p * r, self.q * r, self.radius * r)

    def translated(self, shift):
        s = np.asarray(shift, dtype=np.float64)
        return Stadium(self.p + s, self.q + s, self.radius)

    def spec_dict(self):
        return {"kind": "stadium", "n": 2,
                "capsule": {"p": [float(v) for v in self.p],
                            "q": [float(v) for v in self.q],
                            "radius": self.radius}}


def _ray_fan(n: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        th = 2.0 * np.pi * np.arange(_RAY_COUNT) / _RAY_COUNT
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    if n == 3:
        # Fibonacci sphere
        k = np.arange(_RAY_COUNT) + 0.5
        phi = np.arccos(1.0 - 2.0 * k / _RAY_COUNT)
        th = np.pi * (1.0 + math.sqrt(5.0)) * k
        return np.stack([np.sin(phi) * np.cos(th), np.sin(phi) * np.sin(th), np.cos(phi)], axis=1)
    rng = np.random.default_rng(1234)
    v = rng.standard_normal((_RAY_COUNT, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


class Implicit(Domain):
    """Domain given by an inside predicate plus a strict bounding box."""

    kind = "implicit"

    def __init__(self, predicate: Callable[[np.ndarray], np.ndarray], lo, hi,
                 volume_hint: float | None = None, name: str = "implicit"):
        self.predicate = predicate
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise ValidationError("implicit bounding box must have positive extent")
        self.n = int(self.lo.size)
        self.volume_hint = volume_hint
        self.name = name
        self._rays = _ray_fan(self.n)

    def contains_points(self, pts):
        inside = np.asarray(self.predicate(pts), dtype=bool)
        in_box = np.all((pts > self.lo) & (pts < self.hi), axis=1)
        return inside & in_box

    def distance_points(self, pts):
        # exit radius along each fixed ray by bisection, then halve the minimum
        npts = pts.shape[0]
        rays = self._rays
        # range to the box wall along each ray gives a sure-outside endpoint
        with np.errstate(divide="ignore", invalid="ignore"):
            t_lo = (self.lo[None, None, :] - pts[:, None, :]) / rays[None, :, :]
            t_hi = (self.hi[None, None, :] - pts[:, None, :]) / rays[None, :, :]
        t_wall = np.where(rays[None, :, :] > 0, t_hi, np.where(rays[None, :, :] < 0, t_lo, np.inf))
        hi = np.min(t_wall, axis=2)
        hi = np.maximum(hi, 1e-12)
        lo = np.zeros_like(hi)
        for _ in range(_RAY_BISECTIONS):
            mid = 0.5 * (lo + hi)
            probe = pts[:, None, :] + mid[..., None] * rays[None, :, :]
            ins = self.contains_points(probe.reshape(-1, self.n)).reshape(npts, rays.shape[0])
            lo = np.where(ins, mid, lo)
            hi = np.where(ins, hi, mid)
        return 0.5 * np.min(lo, axis=1)

    def bounding_box(self):
        return self.lo.copy(), self.hi.copy()

    def exact_volume(self):
        return None

    def scaled(self, r):
        base = self.predicate
        return Implicit(lambda pts: base(np.asarray(pts) / r), self.lo * r, self.hi * r,
                        None if self.volume_hint is None else self.volume_hint * r ** self.n,
                        name=self.name)

    def translated(self, shift):
        s = np.asarray(shift, dtype=np.float64)
        base = self.predicate
        return Implicit(lambda pts: base(np.asarray(pts) - s), self.lo + s, self.hi + s,
                        self.volume_hint, name=self.name)

    def spec_dict(self):
        raise ValidationError("implicit domains have no JSON form")


# ---------------------------------------------------------------------------
# module-level operation surface


def parse_domain_spec(text: str) -> Domain:
    """Build a Domain from its JSON description.

    Schema: {"kind": ..., "n": ..., "radius"/"eps"/"semi_axes"/"vertices"/
    "corners"/"capsule"/"center" per kind}.  Errors name the offending field.
    """
    try:
        raw = json.loads(text) if isinstance(text, str) else dict(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"domain spec is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError("domain spec must be a JSON object")
    kind = raw.get("kind")
    if kind == "ball":
        if "radius" not in raw:
            raise ValidationError("ball spec missing field 'radius'")
        return Ball(raw["radius"], center=raw.get("center"), n=raw.get("n"))
    if kind == "ellipse":
        if "semi_axes" in raw:
            return Ellipse(raw["semi_axes"], center=raw.get("center"))
        if "eps" not in raw:
            raise ValidationError("ellipse spec missing field 'eps' (or 'semi_axes')")
        dom = Ellipse.from_flattening(raw["eps"])
        if raw.get("center") is not None:
            dom = dom.translated(raw["center"])
        return dom
    if kind == "rectangle":
        if "corners" not in raw:
            raise ValidationError("rectangle spec missing field 'corners'")
        return Box(raw["corners"])
    if kind == "polygon":
        if "vertices" not in raw:
            raise ValidationError("polygon spec missing field 'vertices'")
        return Polygon(raw["vertices"])
    if kind == "stadium":
        cap = raw.get("capsule")
        if not isinstance(cap, dict) or not {"p", "q", "radius"} <= set(cap):
            raise ValidationError("stadium spec needs capsule {p, q, radius}")
        return Stadium(cap["p"], cap["q"], cap["radius"])
    if kind == "implicit":
        raise ValidationError("implicit domains cannot be described in JSON")
    raise ValidationError(f"unknown domain kind: {kind!r}")


def contains(domain: Domain, x) -> bool:
    pts, single = _as_points(x, domain.n)
    res = domain.contains_points(pts)
    return bool(res[0]) if single else res


def boundary_distance(domain: Domain, x) -> float:
    pts, single = _as_points(x, domain.n)
    if not np.all(domain.contains_points(pts)):
        raise ValidationError("boundary_distance requires interior points")
    d = domain.distance_points(pts)
    return float(d[0]) if single else d


def volume(domain: Domain, resolution: int = 1024) -> VolumeResult:
    """Domain volume: exact closed form where available, grid count otherwise."""
    exact = domain.exact_volume()
    if exact is not None:
        return VolumeResult(float(exact), 0.0, "exact")
    if resolution < 2:
        raise ValidationError("volume grid resolution must be >= 2")
    lo, hi = domain.bounding_box()
    side = hi - lo
    h = float(np.min(side)) / resolution
    counts = [int(math.ceil(s / h - 1e-9)) for s in side]
    if np.prod(counts, dtype=np.float64) > 5e7:
        raise ValidationError("volume grid would exceed the cell budget; lower the resolution")
    axes = [lo[i] + (np.arange(counts[i]) + 0.5) * h for i in range(domain.n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    inside = 0
    step = 2_000_000
    for start in range(0, pts.shape[0], step):
        inside += int(np.count_nonzero(domain.contains_points(pts[start:start + step])))
    if inside == 0:
        raise SolverError("volume grid too coarse: no cell centers fall inside the domain")
    value = inside * h ** domain.n
    if domain.n == 1:
        surf = 2.0
    else:
        surf = 2.0 * sum(np.prod(np.delete(side, i)) for i in range(domain.n))
    return VolumeResult(float(value), float(surf * h), "grid")


def equivalent_ball(domain: Domain, resolution: int = 1024) -> EquivalentBall:
    v = volume(domain, resolution).value
    return EquivalentBall(radius=equivalent_ball_radius(v, domain.n),
                          center=tuple(0.0 for _ in range(domain.n)), n=domain.n)


def scale(domain: Domain, r: float) -> Domain:
    if r <= 0.0:
        raise ValidationError("scale factor must be positive")
    return domain.scaled(r)


def translate(domain: Domain, shift) -> Domain:
    return domain.translated(shift)


def sample_interior(domain: Domain, count: int, seed: int = 0,
                    min_distance: float = 0.0) -> np.ndarray:
    """Draw `count` points inside the domain, rejection-sampled over the
    bounding box with a counter-based stream so results are reproducible
    for a given (count, seed).  `min_distance` additionally requires
    boundary_distance >= min_distance (useful for keeping evaluation
    points away from grid staircase effects near the boundary)."""
    if count < 1:
        raise ValidationError("count must be at least 1")
    lo, hi = domain.bounding_box()
    span = hi - lo
    out = np.empty((count, domain.n))
    have = 0
    for block in range(512):
        counters = np.arange(block * 4 * count, (block + 1) * 4 * count, dtype=np.uint64)
        u = rng.uniforms(seed, rng.TAG_POINTS, np.zeros_like(counters), counters)
        pts = lo + span * u[: (u.size // domain.n) * domain.n].reshape(-1, domain.n)
        keep = domain.contains_points(pts)
        if min_distance > 0.0:
            keep &= domain.distance_points(pts) >= min_distance
        good = pts[keep]
        take = min(count - have, good.shape[0])
        out[have:have + take] = good[:take]
        have += take
        if have == count:
            return out
    raise SolverError("rejection sampling failed; domain too thin for its bbox")


def canonical_spec(domain: Domain) -> str:
    """Canonical JSON for cache keys: sorted keys, shortest float repr."""
    return json.dumps(domain.spec_dict(), sort_keys=True, separators=(",", ":"))
