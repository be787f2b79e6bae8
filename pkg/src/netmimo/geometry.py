"""Random network layout.

Homogeneous Poisson point processes on a rectangle, nearest-BS association,
user-centric disk clusters, and a disjoint partition built from the Voronoi
cells of a triangular lattice (regular hexagons) together with the
equal-area circular approximation of those hexagons.

Point sets are (N, 2) float arrays throughout; `Point2D` exists for single
named locations. Everything is a pure function of its inputs, with RNG state
passed explicitly, so calls are reproducible and parallel-safe.
"""

from dataclasses import dataclass

import numpy as np

USER_CENTRIC = "user_centric"
DISJOINT = "disjoint"

_SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError("coordinates must be finite")

    def as_array(self):
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangle in meters."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("window must have positive extent")

    @classmethod
    def centered_square(cls, half_side):
        return cls(-half_side, half_side, -half_side, half_side)

    def area(self):
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    def contains(self, xy):
        xy = np.atleast_2d(xy)
        return ((xy[:, 0] >= self.xmin) & (xy[:, 0] <= self.xmax)
                & (xy[:, 1] >= self.ymin) & (xy[:, 1] <= self.ymax))


@dataclass
class Deployment:
    """One sampled network layout."""

    bs_xy: np.ndarray
    user_xy: np.ndarray
    window: Window
    bs_intensity: float
    user_intensity: float

    def __post_init__(self):
        self.bs_xy = np.atleast_2d(np.asarray(self.bs_xy, dtype=float))
        self.user_xy = np.atleast_2d(np.asarray(self.user_xy, dtype=float))
        for pts in (self.bs_xy, self.user_xy):
            if pts.size and not self.window.contains(pts).all():
                raise ValueError("points must lie inside the window")


@dataclass(frozen=True)
class Cluster:
    """Serving-BS set of one user (user-centric) or one hexagon (disjoint)."""

    member_bs: np.ndarray  # indices into a deployment's bs_xy
    center: tuple
    radius: float
    scheme: str

    @property
    def is_empty(self):
        return len(self.member_bs) == 0

    @property
    def size(self):
        return len(self.member_bs)


class EmptyNetworkError(ValueError):
    pass


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_ppp(intensity, window, seed):
    """Sample a homogeneous PPP: Poisson count, i.i.d. uniform locations.

    Returns an (N, 2) array. Deterministic given an integer seed; an existing
    numpy Generator may be passed instead to compose with a larger draw.
    """
    if intensity <= 0:
        raise ValueError("intensity must be positive")
    rng = _as_rng(seed)
    n = rng.poisson(intensity * window.area())
    x = rng.uniform(window.xmin, window.xmax, n)
    y = rng.uniform(window.ymin, window.ymax, n)
    return np.column_stack([x, y])


def associate_users(bs_xy, user_xy):
    """Nearest-BS index per user; distance ties go to the lowest BS index."""
    bs_xy = np.atleast_2d(bs_xy)
    user_xy = np.atleast_2d(user_xy)
    if bs_xy.shape[0] == 0:
        raise EmptyNetworkError("cannot associate users with no base stations")
    if user_xy.shape[0] == 0:
        return np.zeros(0, dtype=np.intp)
    d2 = ((user_xy[:, None, :] - bs_xy[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)  # first minimum = lowest index


def nearest_bs(bs_xy, point):
    """Index of the BS closest to a single (x, y) point."""
    return int(associate_users(bs_xy, np.asarray(point, dtype=float)[None, :])[0])


def user_centric_cluster(bs_xy, user_point, R):
    """All BSs within distance R of the user; empty membership signals that
    the caller must fall back (the simulator uses the nearest BS)."""
    if R <= 0:
        raise ValueError("cluster radius must be positive")
    bs_xy = np.atleast_2d(bs_xy)
    p = np.asarray(user_point, dtype=float).reshape(2)
    if bs_xy.shape[0] == 0:
        members = np.zeros(0, dtype=np.intp)
    else:
        d2 = ((bs_xy - p[None, :]) ** 2).sum(axis=1)
        members = np.flatnonzero(d2 <= R * R)
    return Cluster(member_bs=members, center=(p[0], p[1]), radius=R,
                   scheme=USER_CENTRIC)


@dataclass(frozen=True)
class HexPartition:
    """Triangular lattice of hexagonal cells, pitch = nearest-center spacing.

    The equal-area disk radius R satisfies pi R^2 = (sqrt(3)/2) pitch^2; both
    constructors keep that identity exact.
    """

    lattice_pitch: float
    equivalent_disk_radius: float

    def __post_init__(self):
        if self.lattice_pitch <= 0:
            raise ValueError("lattice pitch must be positive")
        area_hex = 0.5 * _SQRT3 * self.lattice_pitch ** 2
        area_disk = np.pi * self.equivalent_disk_radius ** 2
        if abs(area_hex - area_disk) > 1e-9 * area_hex:
            raise ValueError("hexagon and disk areas disagree")

    @classmethod
    def from_disk_radius(cls, R):
        pitch = R * np.sqrt(2.0 * np.pi / _SQRT3)
        return cls(lattice_pitch=pitch, equivalent_disk_radius=R)

    @classmethod
    def from_pitch(cls, pitch):
        R = pitch * np.sqrt(0.5 * _SQRT3 / np.pi)
        return cls(lattice_pitch=pitch, equivalent_disk_radius=R)

    def basis(self):
        p = self.lattice_pitch
        return np.array([[p, 0.5 * p], [0.0, 0.5 * _SQRT3 * p]])


# candidate lattice offsets around the rounded fractional coordinate
_HEX_OFFSETS = np.array([(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)],
                        dtype=np.int64)


def hex_assign(xy, part):
    """Integer lattice coordinates (i, j) of the hexagon holding each point.

    Boundary points (equidistant centers) resolve to the lexicographically
    smallest center coordinates (x, then y): the documented half-open rule
    that keeps lower/left edges inside.
    """
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    B = part.basis()
    frac = xy @ np.linalg.inv(B).T
    base = np.round(frac).astype(np.int64)
    cand = base[:, None, :] + _HEX_OFFSETS[None, :, :]  # (N, 9, 2)
    centers = cand @ B.T
    d2 = ((xy[:, None, :] - centers) ** 2).sum(axis=2)
    dmin = d2.min(axis=1, keepdims=True)
    tied = d2 <= dmin
    cx = np.where(tied, centers[:, :, 0], np.inf)
    tied &= cx <= cx.min(axis=1, keepdims=True)
    cy = np.where(tied, centers[:, :, 1], np.inf)
    tied &= cy <= cy.min(axis=1, keepdims=True)
    pick = np.argmax(tied, axis=1)
    return cand[np.arange(len(xy)), pick]


def hex_center(ij, part):
    """Cartesian center of the hexagon at integer lattice coordinates."""
    arr = np.asarray(ij, dtype=np.int64)
    out = np.atleast_2d(arr) @ part.basis().T
    return out[0] if arr.ndim == 1 else out


def disjoint_clusters(bs_xy, part):
    """Partition the BSs by hexagon. Every BS lands in exactly one cluster."""
    bs_xy = np.atleast_2d(bs_xy)
    if bs_xy.shape[0] == 0:
        return []
    ids = hex_assign(bs_xy, part)
    order = np.lexsort((ids[:, 1], ids[:, 0]))
    sorted_ids = ids[order]
    boundaries = np.flatnonzero(np.any(np.diff(sorted_ids, axis=0) != 0, axis=1)) + 1
    groups = np.split(order, boundaries)
    clusters = []
    for g in groups:
        ij = ids[g[0]]
        cx, cy = hex_center(ij, part)
        clusters.append(Cluster(member_bs=np.sort(g), center=(float(cx), float(cy)),
                                radius=part.equivalent_disk_radius,
                                scheme=DISJOINT))
    return clusters


def sample_in_hexagon(part, center_ij, n, seed):
    """n points uniform in the hexagon at the given lattice coordinates.

    Rejection from the bounding box; containment reuses hex_assign so the
    boundary convention matches the partition exactly.
    """
    rng = _as_rng(seed)
    center = np.asarray(hex_center(np.asarray(center_ij, dtype=np.int64), part),
                        dtype=float).reshape(2)
    half_x = 0.5 * part.lattice_pitch           # vertex x-extent
    half_y = part.lattice_pitch / _SQRT3        # circumradius along y
    out = np.empty((n, 2))
    have = 0
    target = np.asarray(center_ij, dtype=np.int64).reshape(2)
    while have < n:
        m = max(16, int(1.4 * (n - have)))
        pts = center[None, :] + np.column_stack([
            rng.uniform(-half_x, half_x, m), rng.uniform(-half_y, half_y, m)])
        inside = np.all(hex_assign(pts, part) == target[None, :], axis=1)
        take = min(n - have, int(inside.sum()))
        out[have:have + take] = pts[inside][:take]
        have += take
    return out
