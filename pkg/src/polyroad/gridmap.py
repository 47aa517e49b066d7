"""Static occupancy grid: storage, a text file format, and coverage tracking.

The ``.grid`` format is line-oriented: a fixed magic line, three header fields,
then a run-length encoded occupancy stream in x-fastest order (x varies
quickest, then y, then z)::

    polyroad-grid 1
    resolution 0.2
    dims 40 20 10
    origin 0.0 0.0 0.0
    rle
    7997x0 3x1 ...
    end

Cell (i, j, k) spans ``origin + res*(i,j,k) .. origin + res*(i+1,j+1,k+1)``;
its center is the sample point for both occupancy and coverage counting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import AABB, HPolyhedron

GRID_MAGIC = "polyroad-grid 1"


class GridFormatError(ValueError):
    """Malformed .grid file."""


class GridError(ValueError):
    """Invalid grid-map operation."""


@dataclass
class GridMap:
    origin: np.ndarray
    resolution: float
    occupancy: np.ndarray  # bool, shape (nx, ny, nz)

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float).reshape(3)
        self.resolution = float(self.resolution)
        if self.resolution <= 0:
            raise GridError("resolution must be positive")
        occ = np.asarray(self.occupancy, dtype=bool)
        if occ.ndim != 3:
            raise GridError("occupancy must be a 3D array")
        self.occupancy = occ

    # -- basic queries ------------------------------------------------------

    @property
    def dims(self):
        return self.occupancy.shape

    @property
    def n_cells(self) -> int:
        return int(self.occupancy.size)

    @property
    def free_count(self) -> int:
        return int(self.n_cells - self.occupancy.sum())

    @property
    def bounds(self) -> AABB:
        hi = self.origin + self.resolution * np.array(self.dims, dtype=float)
        return AABB(self.origin, hi)

    def cell_center(self, ijk) -> np.ndarray:
        return self.origin + self.resolution * (np.asarray(ijk, dtype=float) + 0.5)

    def cell_centers(self, idx: np.ndarray) -> np.ndarray:
        return self.origin + self.resolution * (np.asarray(idx, dtype=float) + 0.5)

    def world_to_cell(self, p):
        """Cell index containing p, or None when p is outside the map."""
        q = (np.asarray(p, dtype=float) - self.origin) / self.resolution
        ijk = np.floor(q).astype(int)
        # points exactly on the upper boundary belong to the last cell
        ijk = np.minimum(ijk, np.array(self.dims) - 1)
        if np.any(ijk < 0) or np.any(ijk >= self.dims) or np.any(q < 0) \
                or np.any(q > np.array(self.dims) + 1e-12):
            return None
        return tuple(int(v) for v in ijk)

    def is_occupied_cell(self, ijk) -> bool:
        return bool(self.occupancy[tuple(ijk)])

    def occupied_indices_in_aabb(self, box: AABB) -> np.ndarray:
        """(n,3) integer indices of occupied cells whose volume intersects box."""
        lo = np.floor((box.min - self.origin) / self.resolution).astype(int)
        hi = np.ceil((box.max - self.origin) / self.resolution).astype(int)
        lo = np.maximum(lo, 0)
        hi = np.minimum(hi, self.dims)
        if np.any(hi <= lo):
            return np.empty((0, 3), dtype=int)
        window = self.occupancy[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]]
        idx = np.argwhere(window)
        return idx + lo

    def cell_box(self, ijk) -> AABB:
        lo = self.origin + self.resolution * np.asarray(ijk, dtype=float)
        return AABB(lo, lo + self.resolution)

    # -- file format ----------------------------------------------------------

    def save(self, path):
        flat = self.occupancy.ravel(order="F").astype(np.int8)
        runs = []
        if flat.size:
            change = np.flatnonzero(np.diff(flat)) + 1
            starts = np.concatenate([[0], change])
            ends = np.concatenate([change, [flat.size]])
            runs = [f"{e - s}x{int(flat[s])}" for s, e in zip(starts, ends)]
        lines = [
            GRID_MAGIC,
            f"resolution {self.resolution!r}",
            "dims {} {} {}".format(*self.dims),
            "origin {!r} {!r} {!r}".format(*(float(v) for v in self.origin)),
            "rle",
        ]
        for i in range(0, len(runs), 16):
            lines.append(" ".join(runs[i:i + 16]))
        lines.append("end")
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "GridMap":
        with open(path) as f:
            lines = [ln.strip() for ln in f]
        lines = [ln for ln in lines if ln]
        if not lines or lines[0] != GRID_MAGIC:
            raise GridFormatError(f"bad magic line in {path}")
        header = {}
        i = 1
        while i < len(lines) and lines[i] != "rle":
            parts = lines[i].split()
            header[parts[0]] = parts[1:]
            i += 1
        if i == len(lines):
            raise GridFormatError("missing rle section")
        for key in ("resolution", "dims", "origin"):
            if key not in header:
                raise GridFormatError(f"missing header field {key}")
        try:
            resolution = float(header["resolution"][0])
            dims = tuple(int(v) for v in header["dims"])
            origin = np.array([float(v) for v in header["origin"]])
        except (ValueError, IndexError) as e:
            raise GridFormatError(f"malformed header: {e}") from e
        if len(dims) != 3 or any(d <= 0 for d in dims):
            raise GridFormatError("dims must be three positive integers")
        total = dims[0] * dims[1] * dims[2]
        bits = np.empty(total, dtype=bool)
        pos = 0
        closed = False
        for ln in lines[i + 1:]:
            if ln == "end":
                closed = True
                break
            for tok in ln.split():
                try:
                    count_s, bit_s = tok.split("x")
                    count, bit = int(count_s), int(bit_s)
                except ValueError as e:
                    raise GridFormatError(f"bad rle token {tok!r}") from e
                if bit not in (0, 1) or count <= 0:
                    raise GridFormatError(f"bad rle token {tok!r}")
                if pos + count > total:
                    raise GridFormatError("rle stream longer than dims")
                bits[pos:pos + count] = bool(bit)
                pos += count
        if not closed:
            raise GridFormatError("truncated file: no end marker")
        if pos != total:
            raise GridFormatError(
                f"rle stream has {pos} cells, dims imply {total}")
        occ = bits.reshape(dims, order="F")
        return cls(origin=origin, resolution=resolution, occupancy=occ)


@dataclass
class CoverageTracker:
    """Tracks which free cells are covered by accepted polyhedra."""

    gmap: GridMap
    covered: np.ndarray = field(init=False)
    covered_count: int = field(init=False, default=0)

    def __post_init__(self):
        self.covered = np.zeros(self.gmap.dims, dtype=bool)

    @property
    def free_total(self) -> int:
        return self.gmap.free_count

    @property
    def rho(self) -> float:
        if self.free_total == 0:
            return 1.0
        return self.covered_count / self.free_total


def update_ratio(tracker: CoverageTracker, gmap: GridMap, poly: HPolyhedron) -> float:
    """Mark free cells whose centers lie in poly as covered; return new rho."""
    if poly.is_empty:
        return tracker.rho
    window = poly.aabb.intersection(gmap.bounds)
    if window is None:
        return tracker.rho
    lo = np.floor((window.min - gmap.origin) / gmap.resolution).astype(int)
    hi = np.ceil((window.max - gmap.origin) / gmap.resolution).astype(int)
    lo = np.maximum(lo, 0)
    hi = np.minimum(hi, gmap.dims)
    if np.any(hi <= lo):
        return tracker.rho
    ii, jj, kk = np.meshgrid(*(np.arange(lo[d], hi[d]) for d in range(3)),
                             indexing="ij")
    idx = np.column_stack([ii.ravel(), jj.ravel(), kk.ravel()])
    centers = gmap.cell_centers(idx)
    inside = poly.contains_points(centers, tol=1e-9)
    sel = idx[inside]
    free = ~gmap.occupancy[sel[:, 0], sel[:, 1], sel[:, 2]]
    sel = sel[free]
    newly = ~tracker.covered[sel[:, 0], sel[:, 1], sel[:, 2]]
    sel = sel[newly]
    tracker.covered[sel[:, 0], sel[:, 1], sel[:, 2]] = True
    tracker.covered_count += len(sel)
    return tracker.rho


def sample_uncovered_free(gmap: GridMap, tracker: CoverageTracker, rng):
    """Uniform random center of an uncovered free cell; None when saturated.

    ``rng`` may be a numpy Generator or an integer seed.
    """
    rng = np.random.default_rng(rng)
    candidates = np.flatnonzero(~gmap.occupancy & ~tracker.covered)
    if len(candidates) == 0:
        return None
    pick = int(candidates[int(rng.integers(len(candidates)))])
    ijk = np.unravel_index(pick, gmap.dims)
    return gmap.cell_center(ijk)
