"""First-natural-frequency fields, shaper sensitivity workspaces and path checks."""
from __future__ import annotations

import csv
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import shaping
from .errors import CdprError, EmptyGrid
from .model import RobotModel, natural_frequencies
from .tension import TensionLimits, static_tensions
from .trajectory import PlatformTrajectory

FIELD_MAGIC = b"CDPRFLD1"


@dataclass(frozen=True)
class GridSpec:
    origin: tuple
    spacing: tuple
    shape: tuple

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "spacing", tuple(float(v) for v in self.spacing))
        object.__setattr__(self, "shape", tuple(int(v) for v in self.shape))
        if len(self.shape) != 3 or min(self.shape) <= 0:
            raise EmptyGrid(f"grid dimensions must be positive, got {self.shape}")
        if any(s <= 0 for s in self.spacing):
            raise ValueError("grid spacing must be positive")

    @classmethod
    def from_box(cls, lower, upper, spacing=0.05) -> "GridSpec":
        """Grid covering the box ``[lower, upper]`` with the given spacing."""
        lower = np.asarray(lower, float)
        upper = np.asarray(upper, float)
        step = np.broadcast_to(np.asarray(spacing, float), (3,))
        if np.any(upper < lower):
            raise EmptyGrid("upper corner below lower corner")
        shape = np.floor((upper - lower) / step + 1e-9).astype(int) + 1
        return cls(tuple(lower), tuple(step), tuple(shape))

    @classmethod
    def from_counts(cls, lower, upper, counts) -> "GridSpec":
        lower = np.asarray(lower, float)
        upper = np.asarray(upper, float)
        counts = np.asarray(counts, int)
        if np.any(counts <= 0):
            raise EmptyGrid("grid counts must be positive")
        step = np.where(counts > 1, (upper - lower) / np.maximum(counts - 1, 1), 1.0)
        return cls(tuple(lower), tuple(step), tuple(counts))

    def axes(self):
        return [self.origin[i] + self.spacing[i] * np.arange(self.shape[i]) for i in range(3)]

    def points(self) -> np.ndarray:
        """All grid points, row-major (x slowest, z fastest)."""
        x, y, z = self.axes()
        X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])


@dataclass(frozen=True)
class ScalarField:
    grid: GridSpec
    values: np.ndarray  # shape == grid.shape, NaN where masked
    mask: np.ndarray  # True where the point is unusable

    def flat(self):
        return self.grid.points(), self.values.ravel(), self.mask.ravel()

    def to_csv(self, path, value_name="value") -> None:
        pts, vals, _ = self.flat()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "z", value_name])
            for p, v in zip(pts, vals):
                w.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(p[2])), repr(float(v))])

    def to_bytes(self) -> bytes:
        """Binary export: magic, 3 x uint32 dims, 3 x f64 origin, 3 x f64 spacing,
        then the row-major f64 values, all little-endian."""
        head = FIELD_MAGIC + struct.pack("<3I", *self.grid.shape)
        head += struct.pack("<3d", *self.grid.origin) + struct.pack("<3d", *self.grid.spacing)
        return head + np.ascontiguousarray(self.values, dtype="<f8").tobytes()

    def to_binary(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "ScalarField":
        if data[:8] != FIELD_MAGIC:
            raise ValueError("not a field file")
        shape = struct.unpack_from("<3I", data, 8)
        origin = struct.unpack_from("<3d", data, 20)
        spacing = struct.unpack_from("<3d", data, 44)
        values = np.frombuffer(data, dtype="<f8", offset=68).reshape(shape).astype(float)
        return cls(GridSpec(origin, spacing, shape), values, np.isnan(values))


@dataclass(frozen=True)
class ShaperBand:
    f_m1: float
    insensitivity: float
    kind: str

    def __post_init__(self):
        if not self.f_m1 > 0:
            raise ValueError("f_m1 must be positive")
        if not self.insensitivity > 0:
            raise ValueError("insensitivity must be positive")

    @property
    def bounds(self) -> tuple[float, float]:
        half = self.insensitivity / 2.0
        return (1.0 - half) * self.f_m1, (1.0 + half) * self.f_m1

    @classmethod
    def for_kind(cls, kind: str, f_m1: float, level: float = 0.05) -> "ShaperBand":
        return cls(f_m1, shaping.family_insensitivity(kind, 1.0, level), kind.lower())


def first_frequency(model: RobotModel, point, limits: TensionLimits | None = None) -> float:
    """Lowest natural frequency at ``point``, or NaN where the robot cannot hold it."""
    try:
        if not static_tensions(model, point, limits).feasible:
            return float("nan")
        return float(natural_frequencies(model, point)[0])
    except CdprError:
        return float("nan")


def default_workers() -> int:
    cap = os.environ.get("CDPR_THREADS")
    if cap:
        return max(1, int(cap))
    return min(8, os.cpu_count() or 1)


def frequency_field(model: RobotModel, grid: GridSpec, limits: TensionLimits | None = None,
                    workers: int | None = None) -> ScalarField:
    """f1 at every grid point.  Output is independent of the worker count."""
    pts = grid.points()
    if pts.shape[0] == 0:
        raise EmptyGrid("grid has no points")
    out = np.empty(pts.shape[0])
    workers = default_workers() if workers is None else max(1, int(workers))

    def fill(lo, hi):
        for i in range(lo, hi):
            out[i] = first_frequency(model, pts[i], limits)

    if workers == 1:
        fill(0, pts.shape[0])
    else:
        edges = np.linspace(0, pts.shape[0], workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda k: fill(edges[k], edges[k + 1]), range(workers)))
    values = out.reshape(grid.shape)
    return ScalarField(grid, values, np.isnan(values))


def in_band(f1, band: ShaperBand):
    lo, hi = band.bounds
    f1 = np.asarray(f1, dtype=float)
    res = (f1 >= lo) & (f1 <= hi)
    return bool(res) if res.ndim == 0 else res


def robustness_index(f1, band: ShaperBand):
    """Distance [Hz] from ``f1`` to the nearer band edge, negative outside."""
    lo, hi = band.bounds
    f1 = np.asarray(f1, dtype=float)
    nu = np.minimum(f1 - lo, hi - f1)
    return float(nu) if nu.ndim == 0 else nu


def robustness_field(field: ScalarField, band: ShaperBand) -> ScalarField:
    return ScalarField(field.grid, robustness_index(field.values, band), field.mask)


@dataclass(frozen=True)
class PathReport:
    time: np.ndarray
    f1: np.ndarray
    nu: np.ndarray
    inside: np.ndarray
    band: ShaperBand

    @property
    def fraction_in_band(self) -> float:
        return float(np.mean(self.inside))

    @property
    def min_nu(self) -> float:
        return float(np.nanmin(self.nu)) if np.any(np.isfinite(self.nu)) else float("nan")

    def as_dict(self) -> dict:
        lo, hi = self.band.bounds
        return {
            "kind": self.band.kind,
            "f_m1_hz": self.band.f_m1,
            "insensitivity": self.band.insensitivity,
            "band_hz": [lo, hi],
            "fraction_in_band": self.fraction_in_band,
            "min_nu_hz": self.min_nu,
            "samples": len(self.time),
        }


def validate_path(traj: PlatformTrajectory, model: RobotModel, band: ShaperBand,
                  limits: TensionLimits | None = None, stride: int = 1) -> PathReport:
    """f1 and robustness index along a trajectory (every ``stride``-th sample)."""
    idx = np.arange(0, len(traj), max(1, int(stride)))
    f1 = np.array([first_frequency(model, traj.pose[i], limits) for i in idx])
    nu = robustness_index(f1, band)
    inside = np.isfinite(f1) & (nu >= 0)
    return PathReport(traj.time[idx], f1, nu, inside, band)
