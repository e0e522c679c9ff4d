"""Elevation maps and the staged difficulty curriculum.

A HeightMap is a row-major grid of elevations in meters over a physical
extent. Maps are loaded from and saved to 8-bit grayscale BMP (pixel 0 =
min_elev, pixel 255 = max_elev, linear in between), generated procedurally
as superpositions of smooth radial bumps, blended along a linear difficulty
ramp between a start and an end map, and sampled continuously with bilinear
interpolation, including vehicle-aligned rotated crops.

Grid convention: data[row, col] covers the cell centered at
x = (col + 0.5) * cell_size, y = (row + 0.5) * cell_size, so row 0 is the
bottom (south) edge. Interpolation happens on metric elevations, never on
quantized pixel values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bmp


@dataclass(frozen=True, eq=False)
class HeightMap:
    """Immutable 2-D elevation grid with physical extents.

    ``data`` is float64 meters with shape (height_cells, width_cells); every
    value lies in [min_elev, max_elev] and cell_size is meters per cell.
    """

    data: np.ndarray
    cell_size: float
    min_elev: float
    max_elev: float

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"elevation grid must be non-empty 2-D, got shape {arr.shape}")
        if not self.cell_size > 0:
            raise ValueError(f"cell_size must be > 0, got {self.cell_size}")
        if not self.max_elev >= self.min_elev:
            raise ValueError(f"max_elev {self.max_elev} < min_elev {self.min_elev}")
        lo, hi = float(arr.min()), float(arr.max())
        if lo < self.min_elev or hi > self.max_elev:
            raise ValueError(
                f"elevations [{lo}, {hi}] fall outside [{self.min_elev}, {self.max_elev}]")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width_cells(self) -> int:
        return self.data.shape[1]

    @property
    def height_cells(self) -> int:
        return self.data.shape[0]

    @property
    def width_m(self) -> float:
        """Physical extent along x."""
        return self.width_cells * self.cell_size

    @property
    def height_m(self) -> float:
        """Physical extent along y."""
        return self.height_cells * self.cell_size

    @property
    def elev_range(self) -> float:
        return self.max_elev - self.min_elev


@dataclass(frozen=True)
class CurriculumSpec:
    """Linear difficulty ramp from start_map (stage 0) to end_map (stage N)."""

    start_map: HeightMap
    end_map: HeightMap
    num_stages: int

    def __post_init__(self):
        a, b = self.start_map, self.end_map
        if a.data.shape != b.data.shape:
            raise ValueError(
                f"start/end grids differ: {a.data.shape} vs {b.data.shape}")
        if a.cell_size != b.cell_size:
            raise ValueError(
                f"start/end cell sizes differ: {a.cell_size} vs {b.cell_size}")
        if self.num_stages < 1:
            raise ValueError(f"num_stages must be >= 1, got {self.num_stages}")


@dataclass(frozen=True)
class TerrainGenParams:
    """Knobs for the procedural rugged end map.

    Scale defaults match a small indoor course: 3.1 x 1.3 m, boulders
    averaging 0.30 m, elevations up to 0.5 m.
    """

    course_length: float = 3.1
    course_width: float = 1.3
    max_elevation: float = 0.5
    boulder_mean_size: float = 0.30
    boulder_count: int = 200
    seed: int = 0
    cell_size: float = 0.01

    def __post_init__(self):
        if self.course_length <= 0 or self.course_width <= 0:
            raise ValueError("course dimensions must be positive")
        if self.max_elevation < 0:
            raise ValueError(f"max_elevation must be >= 0, got {self.max_elevation}")
        if self.boulder_mean_size <= 0:
            raise ValueError("boulder_mean_size must be positive")
        if self.boulder_count < 0:
            raise ValueError(f"boulder_count must be >= 0, got {self.boulder_count}")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")


def load_bmp(data: bytes, *, min_elev: float, max_elev: float,
             cell_size: float) -> HeightMap:
    """Decode BMP bytes into a HeightMap.

    Pixel value 0 maps to min_elev and 255 to max_elev, linearly in between
    (the darkest pixel is the lowest point). min/max/cell_size are side
    parameters; the BMP itself stores only quantized shape.
    """
    pixels = bmp.decode_gray8(data)
    t = pixels.astype(np.float64) / 255.0
    elev = min_elev * (1.0 - t) + max_elev * t
    # The convex form keeps endpoints exact; clip guards 1-ulp rounding on
    # interior values so the [min_elev, max_elev] invariant holds exactly.
    np.clip(elev, min_elev, max_elev, out=elev)
    return HeightMap(elev, cell_size=cell_size, min_elev=min_elev, max_elev=max_elev)


def save_bmp(m: HeightMap) -> bytes:
    """Encode a HeightMap as canonical 8-bit grayscale BMP bytes.

    Elevation is quantized to the nearest of 256 levels spanning
    [min_elev, max_elev], rounding halves to even. A constant map
    (max_elev == min_elev) is emitted as all-zero pixels.
    load_bmp(save_bmp(m)) reproduces m up to quantization, and
    save_bmp(load_bmp(b)) is bit-identical to b for files in the canonical
    layout this encoder produces.
    """
    if m.elev_range > 0:
        t = (m.data - m.min_elev) / m.elev_range
        pixels = np.rint(t * 255.0)
        np.clip(pixels, 0, 255, out=pixels)
        pixels = pixels.astype(np.uint8)
    else:
        pixels = np.zeros(m.data.shape, dtype=np.uint8)
    return bmp.encode_gray8(pixels)


def write_sidecar(path, m: HeightMap, seed: int = 0) -> None:
    """Write the plain-text metadata sidecar (key=value lines)."""
    lines = [
        f"min_elev={m.min_elev!r}",
        f"max_elev={m.max_elev!r}",
        f"cell_size={m.cell_size!r}",
        f"seed={seed}",
    ]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_sidecar(path) -> dict:
    """Parse a sidecar file into {min_elev, max_elev, cell_size, seed}."""
    values = {}
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or "=" not in line:
                continue
            key, _, raw = line.partition("=")
            values[key.strip()] = raw.strip()
    try:
        return {
            "min_elev": float(values["min_elev"]),
            "max_elev": float(values["max_elev"]),
            "cell_size": float(values["cell_size"]),
            "seed": int(values.get("seed", "0")),
        }
    except KeyError as missing:
        raise ValueError(f"sidecar {path} is missing key {missing}") from None


def write_map(bmp_path, m: HeightMap, seed: int = 0):
    """Write <stem>.bmp plus its <stem>.txt sidecar; returns the sidecar path."""
    with open(bmp_path, "wb") as fh:
        fh.write(save_bmp(m))
    sidecar = _sidecar_path(bmp_path)
    write_sidecar(sidecar, m, seed=seed)
    return sidecar


def read_map(bmp_path) -> HeightMap:
    """Load a map written by write_map (BMP + sidecar)."""
    meta = read_sidecar(_sidecar_path(bmp_path))
    with open(bmp_path, "rb") as fh:
        data = fh.read()
    return load_bmp(data, min_elev=meta["min_elev"], max_elev=meta["max_elev"],
                    cell_size=meta["cell_size"])


def _sidecar_path(bmp_path):
    import pathlib

    return pathlib.Path(bmp_path).with_suffix(".txt")


def generate_end_map(params: TerrainGenParams) -> HeightMap:
    """Procedural rugged terrain: random smooth radial bumps, rescaled.

    Superposes ``boulder_count`` cosine bumps with radii spread around
    boulder_mean_size / 2, then rescales so the global minimum is exactly 0
    and the maximum exactly max_elevation. Bump centers are placed on a
    jittered grid (one bump per grid cell, random offset within the cell)
    rather than i.i.d. uniform: that bounds how many bumps can stack on one
    spot, so the rescale does not flatten the rest of the field to please a
    single tall cluster, and the course keeps steep faces throughout.
    Deterministic for a fixed seed. boulder_count == 0 yields a flat 0 m map.
    """
    cols = max(1, round(params.course_length / params.cell_size))
    rows = max(1, round(params.course_width / params.cell_size))
    grid = np.zeros((rows, cols), dtype=np.float64)
    if params.boulder_count == 0 or params.max_elevation == 0.0:
        return HeightMap(grid, cell_size=params.cell_size, min_elev=0.0, max_elev=0.0)

    rng = np.random.default_rng(params.seed)
    n = params.boulder_count
    ny = max(1, round(math.sqrt(n * params.course_width / params.course_length)))
    nx = max(1, math.ceil(n / ny))
    hosts = rng.permutation(nx * ny)[:n]
    centers_x = (hosts % nx + rng.uniform(0.0, 1.0, size=n)) \
        * (params.course_length / nx)
    centers_y = (hosts // nx + rng.uniform(0.0, 1.0, size=n)) \
        * (params.course_width / ny)
    radii = rng.uniform(0.75, 1.25, size=n) * (params.boulder_mean_size / 2.0)
    heights = rng.uniform(0.7, 1.0, size=n)

    xs = (np.arange(cols) + 0.5) * params.cell_size
    ys = (np.arange(rows) + 0.5) * params.cell_size
    gx, gy = np.meshgrid(xs, ys)
    for cx, cy, r, h in zip(centers_x, centers_y, radii, heights):
        d = np.hypot(gx - cx, gy - cy)
        inside = d < r
        grid[inside] += 0.5 * h * (1.0 + np.cos(np.pi * d[inside] / r))

    lo, hi = grid.min(), grid.max()
    if hi > lo:
        grid = (grid - lo) / (hi - lo) * params.max_elevation
    else:
        grid.fill(0.0)
    return HeightMap(grid, cell_size=params.cell_size,
                     min_elev=0.0, max_elev=params.max_elevation)


def flat_map(params: TerrainGenParams) -> HeightMap:
    """All-zero map with the same grid as generate_end_map would produce."""
    cols = max(1, round(params.course_length / params.cell_size))
    rows = max(1, round(params.course_width / params.cell_size))
    grid = np.zeros((rows, cols), dtype=np.float64)
    return HeightMap(grid, cell_size=params.cell_size, min_elev=0.0, max_elev=0.0)


def interpolate_stage(spec: CurriculumSpec, k: int) -> HeightMap:
    """Stage-k map: per-cell (1 - k/N) * start + (k/N) * end, in meters.

    k must lie in [0, num_stages]; the endpoints are returned bit-equal to
    the inputs. The blend runs on metric elevations so no double
    quantization through the pixel domain occurs.
    """
    n = spec.num_stages
    if not 0 <= k <= n:
        raise ValueError(f"stage {k} outside [0, {n}]")
    if k == 0:
        return spec.start_map
    if k == n:
        return spec.end_map
    w = k / n
    a, b = spec.start_map, spec.end_map
    data = (1.0 - w) * a.data + w * b.data
    min_elev = min((1.0 - w) * a.min_elev + w * b.min_elev, float(data.min()))
    max_elev = max((1.0 - w) * a.max_elev + w * b.max_elev, float(data.max()))
    return HeightMap(data, cell_size=a.cell_size, min_elev=min_elev, max_elev=max_elev)


def sample_elevation(m: HeightMap, x, y):
    """Bilinear elevation at world coordinates; vectorized over x, y.

    Out-of-bounds queries clamp to the boundary cell, so the terrain
    continues flat past the edges instead of dropping off a cliff.
    """
    gx = np.asarray(x, dtype=np.float64) / m.cell_size - 0.5
    gy = np.asarray(y, dtype=np.float64) / m.cell_size - 0.5
    rows, cols = m.data.shape
    gx = np.clip(gx, 0.0, cols - 1.0)
    gy = np.clip(gy, 0.0, rows - 1.0)
    ix = np.minimum(np.floor(gx).astype(np.intp), max(cols - 2, 0))
    iy = np.minimum(np.floor(gy).astype(np.intp), max(rows - 2, 0))
    fx = gx - ix
    fy = gy - iy
    ix1 = np.minimum(ix + 1, cols - 1)
    iy1 = np.minimum(iy + 1, rows - 1)
    z00 = m.data[iy, ix]
    z01 = m.data[iy, ix1]
    z10 = m.data[iy1, ix]
    z11 = m.data[iy1, ix1]
    return (1.0 - fy) * ((1.0 - fx) * z00 + fx * z01) + fy * ((1.0 - fx) * z10 + fx * z11)


def elevation_at(m: HeightMap, x: float, y: float) -> float:
    """Scalar bilinear elevation at (x, y) meters."""
    return float(sample_elevation(m, x, y))


def crop_centered(m: HeightMap, pose, size: int) -> np.ndarray:
    """size x size elevation crop centered at and aligned with a vehicle pose.

    pose is (x, y, heading). The crop lattice has the map's cell spacing and
    is rotated so that row 0 lies furthest AHEAD of the vehicle (the top of
    the crop is the forward direction) and column 0 lies furthest to the
    vehicle's LEFT. Samples go through sample_elevation, so off-map points
    clamp to the boundary.
    """
    if size < 1:
        raise ValueError(f"crop size must be >= 1, got {size}")
    x, y, heading = pose
    c = (size - 1) / 2.0
    idx = np.arange(size, dtype=np.float64)
    fwd = (c - idx)[:, None] * m.cell_size      # rows: + ahead, - behind
    left = (c - idx)[None, :] * m.cell_size     # cols: + left, - right
    cos_h, sin_h = math.cos(heading), math.sin(heading)
    px = x + fwd * cos_h - left * sin_h
    py = y + fwd * sin_h + left * cos_h
    return sample_elevation(m, px, py)
