"""Regular-grid scalar fields over a domain.

Values live at cell centers of a uniform grid with square cells of side h;
the grid is pinned to the domain bounding box with `grid_geometry`, which
fixes h = (shortest box side) / resolution so refinement studies use nested
cell sizes.  A boolean mask marks which centers lie inside the domain; field
values are zero outside the mask by construction, matching the solvers'
extension-by-zero convention.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MaskMismatchError, ValidationError
from .geometry import Domain


def grid_geometry(domain: Domain, resolution: int):
    """Origin, cell size and shape of the standard grid for a domain."""
    if resolution < 2:
        raise ValidationError("grid resolution must be >= 2")
    lo, hi = domain.bounding_box()
    side = hi - lo
    h = float(np.min(side)) / resolution
    shape = tuple(int(math.ceil(s / h - 1e-9)) for s in side)
    return lo.copy(), h, shape


def _center_axes(origin, h, shape):
    return [origin[i] + (np.arange(shape[i]) + 0.5) * h for i in range(len(shape))]


def cell_centers(origin, h, shape) -> np.ndarray:
    """All cell centers as an (N, n) array in C order."""
    mesh = np.meshgrid(*_center_axes(origin, h, shape), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


@dataclass
class ScalarField:
    origin: np.ndarray
    h: float
    values: np.ndarray
    mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.mask is None:
            self.mask = self.values != 0.0
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.values.shape:
            raise MaskMismatchError(
                f"mask shape {self.mask.shape} != values shape {self.values.shape}")
        if self.origin.size != self.values.ndim:
            raise ValidationError("origin length must equal the grid dimension")
        if self.h <= 0.0:
            raise ValidationError("cell size must be positive")

    # -- basic geometry ----------------------------------------------------
    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def shape(self):
        return self.values.shape

    def centers(self) -> np.ndarray:
        return cell_centers(self.origin, self.h, self.shape)

    def center_axes(self):
        return _center_axes(self.origin, self.h, self.shape)

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    # -- calculus ------------------------------------------------------------
    def integral(self) -> float:
        return float(np.sum(self.values[self.mask]) * self.cell_volume)

    def masked_values(self) -> np.ndarray:
        return self.values[self.mask]

    def max(self) -> float:
        if not self.mask.any():
            return 0.0
        return float(np.max(self.values[self.mask]))

    def copy(self) -> "ScalarField":
        return ScalarField(self.origin.copy(), self.h, self.values.copy(), self.mask.copy())

    def zeros_like(self) -> "ScalarField":
        return ScalarField(self.origin.copy(), self.h, np.zeros_like(self.values),
                           self.mask.copy())

    # -- sampling ------------------------------------------------------------
    def sample(self, points) -> np.ndarray:
        """Multilinear interpolation in the cell-center lattice, 0 outside."""
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        if pts.shape[1] != self.n:
            raise ValidationError("sample points have the wrong dimension")
        # position in lattice coordinates where center i sits at coordinate i
        q = (pts - self.origin) / self.h - 0.5
        i0 = np.floor(q).astype(np.int64)
        frac = q - i0
        out = np.zeros(pts.shape[0])
        vals = self.values * self.mask
        for corner in range(1 << self.n):
            idx = []
            w = np.ones(pts.shape[0])
            ok = np.ones(pts.shape[0], dtype=bool)
            for ax in range(self.n):
                bit = (corner >> ax) & 1
                ii = i0[:, ax] + bit
                ok &= (ii >= 0) & (ii < self.shape[ax])
                idx.append(np.clip(ii, 0, self.shape[ax] - 1))
                w *= frac[:, ax] if bit else (1.0 - frac[:, ax])
            out += np.where(ok, w * vals[tuple(idx)], 0.0)
        return out[0] if single else out

    # -- serialisation ---------------------------------------------------
    def to_json(self) -> str:
        payload = {
            "origin": [float(v) for v in self.origin],
            "h": float(self.h),
            "shape": list(self.shape),
            "values": [float(v) for v in self.values.reshape(-1)],
            "mask": [int(v) for v in self.mask.reshape(-1)],
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ScalarField":
        raw = json.loads(text)
        shape = tuple(raw["shape"])
        return cls(np.array(raw["origin"]), float(raw["h"]),
                   np.array(raw["values"], dtype=np.float64).reshape(shape),
                   np.array(raw["mask"], dtype=bool).reshape(shape))

    def to_csv(self) -> str:
        """Rows of cell-center coordinates and value, header first."""
        buf = io.StringIO()
        cols = ["x", "y", "z"][: self.n]
        buf.write(",".join(cols + ["value", "inside"]) + "\n")
        pts = self.centers()
        vals = self.values.reshape(-1)
        mask = self.mask.reshape(-1)
        for i in range(pts.shape[0]):
            coords = ",".join(repr(float(c)) for c in pts[i])
            buf.write(f"{coords},{vals[i]!r},{int(mask[i])}\n")
        return buf.getvalue()


def field_from_function(domain: Domain, fn, resolution: int) -> ScalarField:
    """Evaluate fn at interior cell centers; zero outside."""
    origin, h, shape = grid_geometry(domain, resolution)
    pts = cell_centers(origin, h, shape)
    mask = domain.contains_points(pts)
    vals = np.zeros(pts.shape[0])
    if mask.any():
        vals[mask] = np.asarray(fn(pts[mask]), dtype=np.float64)
    return ScalarField(origin, h, vals.reshape(shape), mask.reshape(shape))


def mask_field(domain: Domain, resolution: int) -> ScalarField:
    """Indicator field of the domain on the standard grid."""
    return field_from_function(domain, lambda pts: np.ones(pts.shape[0]), resolution)
