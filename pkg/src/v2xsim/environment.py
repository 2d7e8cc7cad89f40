"""Street-grid world: buildings, torus wrap, vehicle drop, mobility, LOS.

The map is a block template replicated blocks_x x blocks_y times.  Each
block is a lattice of square building cells separated by streets of constant
width; one lattice column (or one cell, when park_row is set) is a park:
open space with no building.  The world wraps as a torus; all distances use
the minimum-image convention so the map has no edges.  Vehicles drive on
street centerlines and turn uniformly at random at intersections, never
reversing.

Line of sight between two ground points fails only when the segment passes
through the interior of a building footprint; touching a wall or sliding
along one does not block.  This footprint test applies to vehicle-to-vehicle
links; base-station links use the cellular model's distance-based LOS
probability instead (see channel module).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import RngStreams

_TURN_EPS = 1e-9


@dataclass
class Grid:
    world: tuple[float, float]            # torus periods (Wx, Wy), m
    buildings: np.ndarray                 # [M,4] x0,y0,x1,y1 footprints
    building_height_m: float
    xs: np.ndarray                        # vertical street centerline x coords
    ys: np.ndarray                        # horizontal street centerline y coords
    bs_xy: np.ndarray                     # [2] base station position
    bs_height_m: float
    street_m: float
    building_m: float
    pitch: float                          # building_m + street_m
    parks: np.ndarray = None              # [P,4] park rectangles (open space)
    tiled_buildings: np.ndarray = field(repr=False, default=None)  # [9M,4]
    tiled_corners: np.ndarray = field(repr=False, default=None)    # [9K,2]

    @property
    def area_km2(self) -> float:
        return self.world[0] * self.world[1] / 1e6

    def street_polylines(self) -> list[list[list[float]]]:
        wx, wy = self.world
        lines = [[[0.0, float(y)], [wx, float(y)]] for y in self.ys]
        lines += [[[float(x), 0.0], [float(x), wy]] for x in self.xs]
        return lines

    def on_street(self, pts: np.ndarray, tol: float = 1e-6) -> np.ndarray:
        pts = np.atleast_2d(pts)
        near_h = np.min(np.abs(pts[:, 1:2] - self.ys[None, :]), axis=1) < tol
        near_v = np.min(np.abs(pts[:, 0:1] - self.xs[None, :]), axis=1) < tol
        return near_h | near_v

    def geometry_dict(self) -> dict:
        return {
            "world_m": [self.world[0], self.world[1]],
            "area_km2": self.area_km2,
            "buildings": self.buildings.tolist(),
            "building_height_m": self.building_height_m,
            "parks": self.parks.tolist() if self.parks is not None else [],
            "streets": self.street_polylines(),
            "bs_xy": [float(self.bs_xy[0]), float(self.bs_xy[1])],
            "bs_height_m": self.bs_height_m,
        }


@dataclass
class Fleet:
    pos: np.ndarray       # [N,2]
    axis: np.ndarray      # [N] 0 = on a horizontal street, 1 = vertical
    line: np.ndarray      # [N] index into grid.ys (axis 0) or grid.xs (axis 1)
    sign: np.ndarray      # [N] +1 / -1 travel direction along the street
    speed: np.ndarray     # [N] m/s, constant per vehicle
    phase_ms: np.ndarray  # [N] traffic phase offset within the period

    @property
    def n(self) -> int:
        return self.pos.shape[0]


def _tile(geom: np.ndarray, world: tuple[float, float]) -> np.ndarray:
    """Replicate rectangles or points into the 3x3 torus image neighbourhood."""
    wx, wy = world
    reps = geom.shape[1] // 2
    out = []
    for ox in (-wx, 0.0, wx):
        for oy in (-wy, 0.0, wy):
            out.append(geom + np.array([ox, oy] * reps))
    return np.concatenate(out, axis=0)


def build_grid(blocks_x: int, blocks_y: int, geo: dict, bs_height_m: float = 25.0) -> Grid:
    """Assemble the replicated block lattice and place the rooftop site.

    The base station sits on the building nearest the world centre.
    """
    if blocks_x < 1 or blocks_y < 1:
        raise ValueError("block counts must be >= 1")
    b = float(geo["building_m"])
    s = float(geo["street_m"])
    if b <= 0 or s <= 0:
        raise ValueError("building footprints would overlap: building_m and street_m must be positive")
    pitch = b + s
    cols = int(geo["lattice_cols"]) * blocks_x
    rows = int(geo["lattice_rows"]) * blocks_y
    world = (cols * pitch, rows * pitch)

    lat_cols = int(geo["lattice_cols"])
    lat_rows = int(geo["lattice_rows"])
    park_col = int(geo["park_col"])
    park_row = geo.get("park_row")

    rects, parks = [], []
    for i in range(cols):
        for j in range(rows):
            ci, cj = i % lat_cols, j % lat_rows
            x0, y0 = i * pitch + s, j * pitch + s
            cell = (x0, y0, x0 + b, y0 + b)
            if ci == park_col and (park_row is None or cj == int(park_row)):
                parks.append(cell)  # open space, no LOS obstruction
            else:
                rects.append(cell)
    buildings = np.array(rects, dtype=float)

    xs = np.array([s / 2 + i * pitch for i in range(cols)])
    ys = np.array([s / 2 + j * pitch for j in range(rows)])
    corners = np.array([(x, y) for x in xs for y in ys])

    centers = np.column_stack([(buildings[:, 0] + buildings[:, 2]) / 2,
                               (buildings[:, 1] + buildings[:, 3]) / 2])
    mid = np.array([world[0] / 2, world[1] / 2])
    bs_xy = centers[int(np.argmin(np.linalg.norm(centers - mid, axis=1)))]

    return Grid(
        world=world,
        buildings=buildings,
        building_height_m=float(geo.get("building_height_m", 25.0)),
        xs=xs,
        ys=ys,
        bs_xy=bs_xy,
        bs_height_m=float(bs_height_m),
        street_m=s,
        building_m=b,
        pitch=pitch,
        parks=np.array(parks, dtype=float) if parks else np.zeros((0, 4)),
        tiled_buildings=_tile(buildings, world),
        tiled_corners=_tile(corners, world),
    )


def torus_delta(grid: Grid, origin: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Minimum-image displacement from origin to each point; shape follows pts."""
    w = np.asarray(grid.world)
    d = np.asarray(pts, dtype=float) - np.asarray(origin, dtype=float)
    return (d + w / 2) % w - w / 2


def torus_distance(grid: Grid, origin: np.ndarray, pts: np.ndarray) -> np.ndarray:
    return np.linalg.norm(torus_delta(grid, origin, pts), axis=-1)


def drop_vehicles(grid: Grid, density: float, rngs: RngStreams,
                  speed_max_kmh: float = 50.0, period_ms: int = 100,
                  fixed: list | None = None) -> Fleet:
    """Drop a Poisson(density x area) count of vehicles uniformly over street length.

    The `fixed` hook bypasses the random drop: entries [x, y, speed_kmh]
    or [x, y, speed_kmh, phase_ms] snapped to the nearest centerline.
    """
    if fixed is not None:
        return _fixed_fleet(fixed, grid, period_ms)

    rng = rngs.stream("deploy")
    n = int(rng.poisson(density * grid.area_km2))
    wx, wy = grid.world

    lens = np.concatenate([np.full(len(grid.ys), wx), np.full(len(grid.xs), wy)])
    line_pick = rng.choice(len(lens), size=n, p=lens / lens.sum())
    axis = (line_pick >= len(grid.ys)).astype(np.int64)
    line = np.where(axis == 0, line_pick, line_pick - len(grid.ys))
    coord = rng.uniform(0.0, 1.0, size=n) * np.where(axis == 0, wx, wy)
    sign = np.where(rng.uniform(size=n) < 0.5, 1, -1).astype(np.int64)
    speed = (1.0 - rng.uniform(size=n)) * speed_max_kmh / 3.6  # (0, vmax] in m/s

    pos = np.empty((n, 2))
    horiz = axis == 0
    pos[horiz, 0] = coord[horiz]
    pos[horiz, 1] = grid.ys[line[horiz]]
    pos[~horiz, 0] = grid.xs[line[~horiz]]
    pos[~horiz, 1] = coord[~horiz]

    phase = rngs.stream("traffic").integers(0, period_ms, size=n)
    return Fleet(pos=pos, axis=axis, line=line, sign=sign, speed=speed,
                 phase_ms=phase.astype(np.int64))


def _fixed_fleet(entries: list, grid: Grid, period_ms: int) -> Fleet:
    n = len(entries)
    pos = np.empty((n, 2))
    axis = np.zeros(n, dtype=np.int64)
    line = np.zeros(n, dtype=np.int64)
    sign = np.ones(n, dtype=np.int64)
    speed = np.zeros(n)
    phase = np.zeros(n, dtype=np.int64)
    for i, entry in enumerate(entries):
        x, y, kmh = float(entry[0]), float(entry[1]), float(entry[2])
        phase[i] = int(entry[3]) % period_ms if len(entry) > 3 else 0
        dh = np.abs(grid.ys - y)
        dv = np.abs(grid.xs - x)
        if dh.min() <= dv.min():  # snap to the nearest street centerline
            axis[i], line[i] = 0, int(np.argmin(dh))
            pos[i] = (x % grid.world[0], grid.ys[line[i]])
        else:
            axis[i], line[i] = 1, int(np.argmin(dv))
            pos[i] = (grid.xs[line[i]], y % grid.world[1])
        speed[i] = kmh / 3.6
    return Fleet(pos=pos, axis=axis, line=line, sign=sign, speed=speed, phase_ms=phase)


def step_mobility(fleet: Fleet, grid: Grid, dt_ms: float, rngs: RngStreams) -> None:
    """Advance every vehicle dt_ms milliseconds along the street graph, in place.

    At each intersection the vehicle picks uniformly among straight, left and
    right (no U-turn).  Streets wrap around the torus.
    """
    rng = rngs.stream("mobility")
    s2 = grid.street_m / 2
    p = grid.pitch
    wx, wy = grid.world
    for i in range(fleet.n):
        remaining = fleet.speed[i] * dt_ms / 1000.0
        axis = int(fleet.axis[i])
        line = int(fleet.line[i])
        sign = int(fleet.sign[i])
        c = fleet.pos[i, 0] if axis == 0 else fleet.pos[i, 1]
        while remaining > 0.0:
            gap = (sign * (s2 - c)) % p
            if gap < _TURN_EPS:
                gap = p  # standing exactly on an intersection: cross it
            if remaining < gap:
                c = (c + sign * remaining) % (wx if axis == 0 else wy)
                remaining = 0.0
            else:
                c = (c + sign * gap) % (wx if axis == 0 else wy)
                remaining -= gap
                # index of the crossing street we just reached
                cross = int(round((c - s2) / p)) % (len(grid.xs) if axis == 0 else len(grid.ys))
                turn = int(rng.integers(0, 3))  # 0 straight, 1 and 2 onto the crossing street
                if turn:
                    # coordinate along the crossing street = where we stand now
                    c = grid.ys[line] if axis == 0 else grid.xs[line]
                    line = cross
                    axis = 1 - axis
                    sign = 1 if turn == 1 else -1
        if axis == 0:
            fleet.pos[i, 0] = c % wx
            fleet.pos[i, 1] = grid.ys[line]
        else:
            fleet.pos[i, 0] = grid.xs[line]
            fleet.pos[i, 1] = c % wy
        fleet.axis[i], fleet.line[i], fleet.sign[i] = axis, line, sign


def classify_los(tx, rx, grid: Grid) -> str:
    """"los" or "nlos" for one ground-level pair (minimum-image segment)."""
    los, _, _ = classify_los_batch(grid, np.asarray(tx, dtype=float),
                                   np.asarray(rx, dtype=float).reshape(1, 2))
    return "los" if bool(los[0]) else "nlos"


def classify_los_batch(grid: Grid, a: np.ndarray, b: np.ndarray
                       ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """LOS test plus around-the-corner split for segment batches.

    a: [2] or [N,2]; b: [N,2].  Segments run from a to a + minimum-image
    delta, tested against torus-tiled building interiors.  Returns
    (los[N] bool, d1[N], d2[N]): LOS rows carry (direct distance, 0);
    blocked rows carry the legs to and from the street intersection
    minimizing d1 + d2.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == 1:
        a = np.broadcast_to(a, b.shape)
    delta = torus_delta(grid, a, b)
    b_sh = a + delta  # shifted frame: straight segment, buildings tiled

    los = ~_segments_cross_interiors(a, b_sh, grid.tiled_buildings)
    dist = np.linalg.norm(delta, axis=1)
    d1 = dist.copy()
    d2 = np.zeros_like(dist)

    idx = np.flatnonzero(~los)
    for lo in range(0, idx.size, 4096):
        sub = idx[lo:lo + 4096]
        ca = a[sub, None, :] - grid.tiled_corners[None, :, :]
        cb = b_sh[sub, None, :] - grid.tiled_corners[None, :, :]
        tot = np.linalg.norm(ca, axis=2) + np.linalg.norm(cb, axis=2)
        k = np.argmin(tot, axis=1)
        rows = np.arange(sub.size)
        d1[sub] = np.linalg.norm(ca[rows, k], axis=1)
        d2[sub] = np.linalg.norm(cb[rows, k], axis=1)
    return los, d1, d2


def _segments_cross_interiors(a: np.ndarray, b: np.ndarray, rects: np.ndarray) -> np.ndarray:
    """True where segment a[i]->b[i] passes through any open rectangle interior.

    Open-slab clipping: a segment that only grazes a wall or corner keeps a
    zero-length clip interval and stays clear.
    """
    n = a.shape[0]
    hit = np.zeros(n, dtype=bool)
    if rects.size == 0 or n == 0:
        return hit

    # bounding-box prefilter, pairs [n, m]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    overlap = (
        (lo[:, None, 0] < rects[None, :, 2]) & (hi[:, None, 0] > rects[None, :, 0])
        & (lo[:, None, 1] < rects[None, :, 3]) & (hi[:, None, 1] > rects[None, :, 1])
    )
    pair_i, pair_j = np.nonzero(overlap)
    if pair_i.size == 0:
        return hit

    pa = a[pair_i]
    d = b[pair_i] - pa
    r = rects[pair_j]
    t_lo = np.zeros(pair_i.size)
    t_hi = np.ones(pair_i.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        for dim in (0, 1):
            r0, r1 = r[:, dim], r[:, dim + 2]
            moving = d[:, dim] != 0.0
            safe = np.where(moving, d[:, dim], 1.0)
            t1 = (r0 - pa[:, dim]) / safe
            t2 = (r1 - pa[:, dim]) / safe
            slab_lo = np.minimum(t1, t2)
            slab_hi = np.maximum(t1, t2)
            inside = (pa[:, dim] > r0) & (pa[:, dim] < r1)
            slab_lo = np.where(moving, slab_lo, np.where(inside, -np.inf, np.inf))
            slab_hi = np.where(moving, slab_hi, np.where(inside, np.inf, -np.inf))
            t_lo = np.maximum(t_lo, slab_lo)
            t_hi = np.minimum(t_hi, slab_hi)
    crossing = t_hi - t_lo > 1e-9
    hit[pair_i[crossing]] = True
    return hit
