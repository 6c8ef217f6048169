"""Subdomain polygons, boundary segments and deterministic collocation sampling."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

GEOM_TOL = 1e-12


class GeometryError(ValueError):
    pass


class EmptySampleError(GeometryError):
    pass


class MismatchedInterfaceError(GeometryError):
    pass


def _polygon_area(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segment_distance(x, a, b):
    ab = b - a
    L2 = float(ab @ ab)
    t = np.clip(((x - a) @ ab) / L2, 0.0, 1.0) if L2 > 0 else np.zeros(len(x))
    proj = a + t[:, None] * ab
    return np.hypot(*(x - proj).T)


@dataclass(frozen=True)
class SubdomainSpec:
    """Counter-clockwise polygon owning one network.

    ``side_normal`` points from the crack line into this subdomain; it fixes
    which face (theta = +pi or -pi) points on the crack line belong to.
    """

    id: int
    polygon: np.ndarray
    side_normal: np.ndarray | None = None

    def __post_init__(self):
        poly = np.asarray(self.polygon, dtype=float)
        object.__setattr__(self, "polygon", poly)
        if self.side_normal is not None:
            object.__setattr__(self, "side_normal", np.asarray(self.side_normal, dtype=float))
        if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
            raise GeometryError("polygon needs at least three 2D vertices")
        if _polygon_area(poly) <= 0:
            raise GeometryError(f"subdomain {self.id} polygon must be counter-clockwise with positive area")

    @property
    def area(self):
        return _polygon_area(self.polygon)

    def boundary_distance(self, x):
        x = np.atleast_2d(x)
        poly = self.polygon
        return np.min([_segment_distance(x, poly[i], poly[(i + 1) % len(poly)]) for i in range(len(poly))], axis=0)

    def contains(self, x, strict=True, tol=1e-9):
        """Point-in-polygon test; ``strict`` drops points within ``tol`` of an edge."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        px, py = x[:, 0], x[:, 1]
        poly = self.polygon
        inside = np.zeros(len(x), dtype=bool)
        for i in range(len(poly)):
            (x0, y0), (x1, y1) = poly[i], poly[(i + 1) % len(poly)]
            crosses = (y0 > py) != (y1 > py)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                xint = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
            inside ^= crosses & (px < xint)
        near = self.boundary_distance(x) <= tol
        return inside & ~near if strict else inside | near

    def to_dict(self):
        return {
            "id": self.id,
            "polygon": self.polygon.tolist(),
            "side_normal": None if self.side_normal is None else self.side_normal.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["id"], np.array(d["polygon"]), None if d["side_normal"] is None else np.array(d["side_normal"]))


def locate_points(subdomains, x):
    """Index of the first (closed) subdomain containing each point, -1 if none."""
    x = np.atleast_2d(x)
    owner = np.full(len(x), -1, dtype=int)
    for k, sd in enumerate(subdomains):
        free = owner < 0
        if np.any(free):
            hit = sd.contains(x[free], strict=False)
            owner[np.flatnonzero(free)[hit]] = k
    return owner


class ConditionKind(str, enum.Enum):
    DIRICHLET_U1 = "u1"
    DIRICHLET_U2 = "u2"
    TRACTION = "traction"
    CRACK_FACE = "crack_face"
    INTERFACE = "interface"


@dataclass(frozen=True)
class BoundarySegment:
    """Straight boundary piece with one condition.

    ``value`` is the prescribed displacement for Dirichlet kinds, or the
    traction pair ``(t1, t2)`` for ``TRACTION`` where ``None`` leaves that
    component free.  Interface segments name their partner in ``peer``.
    """

    start: tuple
    end: tuple
    subdomain: int
    normal: tuple
    kind: ConditionKind
    value: object = None
    peer: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(self, "end", tuple(float(v) for v in self.end))
        object.__setattr__(self, "kind", ConditionKind(self.kind))
        n = np.asarray(self.normal, dtype=float)
        d = np.subtract(self.end, self.start)
        L = float(np.hypot(*d))
        if abs(np.hypot(*n) - 1.0) > 1e-12:
            raise GeometryError(f"segment normal {tuple(n)} is not unit length")
        if L > 0 and abs(float(n @ d)) > 1e-12 * max(L, 1.0):
            raise GeometryError("segment normal is not orthogonal to the segment")
        object.__setattr__(self, "normal", tuple(float(v) for v in n))

    @property
    def length(self):
        return float(np.hypot(*np.subtract(self.end, self.start)))

    def traction_target(self):
        if self.kind is ConditionKind.CRACK_FACE:
            return (0.0, 0.0)
        if self.kind is ConditionKind.TRACTION:
            return tuple(np.nan if v is None else float(v) for v in self.value)
        return (np.nan, np.nan)

    def to_dict(self):
        value = self.value
        if isinstance(value, tuple):
            value = list(value)
        return {
            "start": list(self.start),
            "end": list(self.end),
            "subdomain": self.subdomain,
            "normal": list(self.normal),
            "kind": self.kind.value,
            "value": value,
            "peer": self.peer,
        }

    @classmethod
    def from_dict(cls, d):
        value = d.get("value")
        if isinstance(value, list):
            value = tuple(value)
        return cls(d["start"], d["end"], d["subdomain"], d["normal"], d["kind"], value, d.get("peer"))


def _far_from_tips(points, tips):
    keep = np.ones(len(points), dtype=bool)
    for t in tips:
        keep &= np.hypot(*(points - np.asarray(t.position)).T) >= t.exclusion_radius
    return keep


def sample_grid(subdomains, m, n, tips=()):
    """Lattice points strictly inside each subdomain, row-major (x fastest).

    Returns one (N_s, 2) array per subdomain.
    """
    if m < 2 or n < 2:
        raise GeometryError("grid needs m, n >= 2")
    allv = np.vstack([sd.polygon for sd in subdomains])
    lo, hi = allv.min(axis=0), allv.max(axis=0)
    xs = np.linspace(lo[0], hi[0], m)
    ys = np.linspace(lo[1], hi[1], n)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    pts = pts[_far_from_tips(pts, tips)]
    tol = 1e-9 * float(np.max(hi - lo))
    out = []
    taken = np.zeros(len(pts), dtype=bool)
    for sd in subdomains:
        hit = sd.contains(pts, strict=True, tol=tol) & ~taken
        taken |= hit
        out.append(pts[hit])
    if sum(len(p) for p in out) == 0:
        raise EmptySampleError("no lattice point falls inside the domain")
    return tuple(out)


def segment_points(seg: BoundarySegment, density):
    """Equally spaced points strictly between the segment endpoints."""
    k = int(round(seg.length * density))
    if k <= 0:
        return np.zeros((0, 2))
    t = np.arange(1, k + 1) / (k + 1)
    a, b = np.asarray(seg.start), np.asarray(seg.end)
    return a + t[:, None] * (b - a)


@dataclass(frozen=True)
class BoundarySamples:
    """Boundary points of one subdomain with nan-masked targets."""

    points: np.ndarray
    normals: np.ndarray
    u_target: np.ndarray  # (M, 2), nan where unconstrained
    t_target: np.ndarray  # (M, 2), nan where unconstrained
    crack_face: np.ndarray  # (M,) bool

    @classmethod
    def empty(cls):
        z = np.zeros((0, 2))
        return cls(z, z, z, z, np.zeros(0, dtype=bool))


def sample_boundary(segments, density, tips=(), n_subdomains=None):
    """Sample every non-interface segment; returns one BoundarySamples per subdomain."""
    if density <= 0:
        raise GeometryError("boundary density must be positive")
    if n_subdomains is None:
        n_subdomains = 1 + max((s.subdomain for s in segments), default=0)
    buckets = [[] for _ in range(n_subdomains)]
    for seg in segments:
        if seg.kind is ConditionKind.INTERFACE:
            continue
        p = segment_points(seg, density)
        p = p[_far_from_tips(p, tips)]
        if len(p) == 0:
            continue
        u = np.full((len(p), 2), np.nan)
        if seg.kind is ConditionKind.DIRICHLET_U1:
            u[:, 0] = float(seg.value)
        elif seg.kind is ConditionKind.DIRICHLET_U2:
            u[:, 1] = float(seg.value)
        t = np.tile(np.array(seg.traction_target(), dtype=float), (len(p), 1))
        nrm = np.tile(np.array(seg.normal), (len(p), 1))
        face = np.full(len(p), seg.kind is ConditionKind.CRACK_FACE)
        buckets[seg.subdomain].append((p, nrm, u, t, face))
    out = []
    for b in buckets:
        if not b:
            out.append(BoundarySamples.empty())
            continue
        out.append(BoundarySamples(*(np.concatenate(parts) for parts in zip(*b))))
    return tuple(out)


@dataclass(frozen=True)
class InterfacePairs:
    sub_a: int
    sub_b: int
    points: np.ndarray
    normal_a: np.ndarray  # outward normal of sub_a; sub_b's is the negative


def sample_interface(seg_a: BoundarySegment, seg_b: BoundarySegment, density, tips=()):
    """Coincident point pairs on two matching interface segments."""
    a0, a1 = np.asarray(seg_a.start), np.asarray(seg_a.end)
    b0, b1 = np.asarray(seg_b.start), np.asarray(seg_b.end)
    same = np.allclose(a0, b0, atol=GEOM_TOL, rtol=0) and np.allclose(a1, b1, atol=GEOM_TOL, rtol=0)
    flipped = np.allclose(a0, b1, atol=GEOM_TOL, rtol=0) and np.allclose(a1, b0, atol=GEOM_TOL, rtol=0)
    if not (same or flipped):
        raise MismatchedInterfaceError("interface segments do not coincide")
    if not np.allclose(np.add(seg_a.normal, seg_b.normal), 0.0, atol=GEOM_TOL):
        raise MismatchedInterfaceError("interface normals must be opposite")
    p = segment_points(seg_a, density)
    p = p[_far_from_tips(p, tips)]
    nrm = np.tile(np.array(seg_a.normal), (len(p), 1))
    return InterfacePairs(seg_a.subdomain, seg_b.subdomain, p, nrm)


@dataclass(frozen=True)
class CollocationSet:
    interior: tuple  # per subdomain (N_s, 2)
    boundary: tuple  # per subdomain BoundarySamples
    interface: tuple  # InterfacePairs

    @property
    def counts(self):
        n_u = [sum(int(np.sum(~np.isnan(b.u_target[:, k]))) for b in self.boundary) for k in range(2)]
        n_t = [sum(int(np.sum(~np.isnan(b.t_target[:, k]))) for b in self.boundary) for k in range(2)]
        return {
            "n_pde": sum(len(p) for p in self.interior),
            "n_u1": n_u[0],
            "n_u2": n_u[1],
            "n_t1": n_t[0],
            "n_t2": n_t[1],
            "n_interface": sum(len(ip.points) for ip in self.interface),
        }


@dataclass(frozen=True)
class CrackedGeometry:
    """Subdomains, boundary segments and tip placements for one crack."""

    subdomains: tuple
    segments: tuple
    tip_positions: tuple  # ((x, y), orientation) per tip
    crack_length: float  # characteristic length a
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "subdomains": [s.to_dict() for s in self.subdomains],
            "segments": [s.to_dict() for s in self.segments],
            "tip_positions": [[list(p), o] for p, o in self.tip_positions],
            "crack_length": self.crack_length,
            "extra": dict(self.extra),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            tuple(SubdomainSpec.from_dict(s) for s in d["subdomains"]),
            tuple(BoundarySegment.from_dict(s) for s in d["segments"]),
            tuple((tuple(p), float(o)) for p, o in d["tip_positions"]),
            float(d["crack_length"]),
            dict(d.get("extra", {})),
        )


def collocation(geometry: CrackedGeometry, tips, m, n, density):
    """Build the full CollocationSet for a cracked geometry."""
    interior = sample_grid(geometry.subdomains, m, n, tips)
    boundary = sample_boundary(geometry.segments, density, tips, len(geometry.subdomains))
    pairs = []
    segs = geometry.segments
    for i, s in enumerate(segs):
        if s.kind is ConditionKind.INTERFACE and s.peer is not None and i < s.peer:
            ip = sample_interface(s, segs[s.peer], density, tips)
            if len(ip.points):
                pairs.append(ip)
    return CollocationSet(interior, boundary, tuple(pairs))


_EDGE_NORMALS = {"bottom": (0.0, -1.0), "right": (1.0, 0.0), "top": (0.0, 1.0), "left": (-1.0, 0.0)}


def _edge_conditions(conditions):
    """Normalise ``{edge: [(kind, value), ...]}`` (a bare pair is allowed)."""
    out = {}
    for edge in _EDGE_NORMALS:
        c = conditions.get(edge, [])
        if c and isinstance(c[0], (str, ConditionKind)):
            c = [c]
        out[edge] = [(ConditionKind(k), v) for k, v in c]
    return out


def cracked_rectangle(lower, upper, point, direction, crack_range, conditions):
    """Split a rectangle along the full line through ``point`` with ``direction``.

    ``crack_range`` = (s0, s1) gives the crack as the part of the line between
    ``point + s0*d`` and ``point + s1*d``.  The region left of ``d`` becomes
    subdomain 0 ("upper"), the other subdomain 1 ("lower").  Crack pieces are
    emitted as crack-face segments for both sides, the rest of the line as
    interface pairs.  Crack ends strictly inside the rectangle become tips.
    ``conditions`` maps edge names (bottom/right/top/left) to lists of
    ``(kind, value)`` applied to both pieces of that edge.
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    p = np.asarray(point, dtype=float)
    d = np.asarray(direction, dtype=float)
    d = d / np.hypot(*d)
    nl = np.array([-d[1], d[0]])
    corners = [np.array([lo[0], lo[1]]), np.array([hi[0], lo[1]]), np.array([hi[0], hi[1]]), np.array([lo[0], hi[1]])]
    edge_names = ["bottom", "right", "top", "left"]
    conds = _edge_conditions(conditions)

    # line/rectangle intersection parameters
    ts = []
    for k in range(2):
        if abs(d[k]) > 1e-15:
            for v in (lo[k], hi[k]):
                t = (v - p[k]) / d[k]
                q = p + t * d
                if np.all(q >= lo - 1e-12) and np.all(q <= hi + 1e-12):
                    ts.append(t)
    if len(ts) < 2:
        raise GeometryError("crack line does not cross the rectangle")
    t_in, t_out = min(ts), max(ts)
    if t_out - t_in <= 0:
        raise GeometryError("crack line touches the rectangle in a single point")
    p_in, p_out = p + t_in * d, p + t_out * d
    s0, s1 = sorted(crack_range)
    s0, s1 = max(s0, t_in), min(s1, t_out)

    sizes = hi - lo
    perimeter = 2.0 * (sizes[0] + sizes[1])
    corner_s = np.array([0.0, sizes[0], sizes[0] + sizes[1], 2 * sizes[0] + sizes[1]])

    def arc(q):
        """Counter-clockwise arc length of a boundary point from the lower-left corner."""
        x, y = q - lo
        tol = 1e-12 * (1.0 + perimeter)
        if abs(y) <= tol:
            return x
        if abs(x - sizes[0]) <= tol:
            return sizes[0] + y
        if abs(y - sizes[1]) <= tol:
            return corner_s[2] + (sizes[0] - x)
        return corner_s[3] + (sizes[1] - y)

    def edge_at(s):
        return int(np.searchsorted(corner_s, s % perimeter, side="right") - 1)

    def walk(q_from, q_to):
        """Boundary pieces ``(edge, start, end)`` going counter-clockwise."""
        sa, sb = arc(q_from), arc(q_to)
        if sb <= sa:
            sb += perimeter
        pts = [q_from]
        for k in range(8):
            sc = corner_s[k % 4] + perimeter * (k // 4)
            if sa + 1e-14 < sc < sb - 1e-14:
                pts.append(corners[k % 4])
        pts.append(q_to)
        pieces = []
        for a, b in zip(pts[:-1], pts[1:]):
            mid_s = arc(a) + 0.5 * np.hypot(*(b - a))
            pieces.append((edge_at(mid_s), a, b))
        return pieces

    up_walk = walk(p_out, p_in)
    lo_walk = walk(p_in, p_out)
    up_poly = [p_in, p_out] + [b for _, _, b in up_walk[:-1]]
    lo_poly = [p_out, p_in] + [b for _, _, b in lo_walk[:-1]]
    subdomains = (
        SubdomainSpec(0, _dedupe(up_poly), nl),
        SubdomainSpec(1, _dedupe(lo_poly), -nl),
    )

    segments = []
    for sub, pieces in ((0, up_walk), (1, lo_walk)):
        for k, a, b in pieces:
            if np.hypot(*(b - a)) <= 1e-14:
                continue
            for kind, value in conds[edge_names[k]]:
                segments.append(BoundarySegment(a, b, sub, _EDGE_NORMALS[edge_names[k]], kind, value))

    # pieces of the cut line, in increasing line parameter
    cuts = [(t_in, s0, ConditionKind.INTERFACE), (s0, s1, ConditionKind.CRACK_FACE), (s1, t_out, ConditionKind.INTERFACE)]
    for ta, tb, kind in cuts:
        if tb - ta <= 1e-14:
            continue
        a, b = p + ta * d, p + tb * d
        i_up = len(segments)
        segments.append(BoundarySegment(a, b, 0, -nl, kind, None, i_up + 1 if kind is ConditionKind.INTERFACE else None))
        segments.append(BoundarySegment(a, b, 1, nl, kind, None, i_up if kind is ConditionKind.INTERFACE else None))

    tips = []
    for s, orient_dir in ((s1, d), (s0, -d)):
        q = p + s * d
        inside = np.all(q > lo + 1e-12) and np.all(q < hi - 1e-12)
        if inside:
            tips.append((tuple(float(v) for v in q), float(np.arctan2(orient_dir[1], orient_dir[0]))))
    return subdomains, tuple(segments), tuple(tips)


def _dedupe(vertices):
    out = []
    for v in vertices:
        if not out or np.hypot(*(v - out[-1])) > 1e-14:
            out.append(np.asarray(v, dtype=float))
    if len(out) > 1 and np.hypot(*(out[0] - out[-1])) <= 1e-14:
        out.pop()
    return np.array(out)
