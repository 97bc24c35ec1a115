"""Geometry on round spheres.

Points, geodesic distance, spherical caps, algebraic regions, geodesic
segments with arc-length measure, cap covers with multiplicity control,
and grid-based thickness estimation on the sphere of radius R embedded
in R^d (d = 2: circle, d = 3: two-sphere).

Conventions
-----------
* Points are plain float arrays of length d with |x| = R.
* A cap of radius parameter ``a`` is the geodesic ball of radius pi*a,
  i.e. membership is dist(center, y) <= pi*a (angular radius pi*a/R).
* Regions are immutable trees of caps, bands (d = 3), arcs (d = 2) and
  boolean combinators; every node has a total, vectorized indicator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SphereContext",
    "sphere_point",
    "random_points",
    "distance",
    "Region",
    "Cap",
    "Band",
    "Arc",
    "Union",
    "Intersection",
    "Complement",
    "FullSphere",
    "Empty",
    "region_from_json",
    "region_to_json",
    "cap_measure",
    "cap_for_measure_fraction",
    "region_measure",
    "LineSegment",
    "geodesic_segment",
    "arc_measure",
    "orthonormal_frame",
    "fibonacci_points",
    "cover_grid",
    "CapCover",
    "build_cap_cover",
    "cover_multiplicity_bound",
    "ThicknessReport",
    "thickness",
    "CoveringComparison",
    "covering_comparison",
    "DirectionSearch",
    "select_direction",
    "CoverageError",
    "NoDirectionFoundError",
]

# |x| must equal R to this relative tolerance for a valid sphere point
POINT_RTOL = 1e-12
# p.v must vanish to this tolerance (times R^2) for a valid direction
ORTHO_RTOL = 1e-10


class CoverageError(RuntimeError):
    """A constructed cap cover failed verification (gap or multiplicity)."""


class NoDirectionFoundError(RuntimeError):
    """Every tested direction missed the target region entirely."""


@dataclass(frozen=True)
class SphereContext:
    """Ambient dimension d and radius R of the sphere S^{d-1}_R."""

    d: int
    R: float

    def __post_init__(self) -> None:
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.d}")
        if not (self.R > 0):
            raise ValueError(f"radius must be positive, got {self.R}")

    def sphere_measure(self) -> float:
        """Total surface measure |S^{d-1}_R| = 2 pi^{d/2} R^{d-1} / Gamma(d/2)."""
        d, R = self.d, self.R
        return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0) * R ** (d - 1)


def sphere_point(coords, ctx: SphereContext) -> np.ndarray:
    """Validate and return a point on the radius-R sphere as a float array."""
    x = np.asarray(coords, dtype=float)
    if x.shape != (ctx.d,):
        raise ValueError(f"expected {ctx.d} coordinates, got shape {x.shape}")
    r = float(np.linalg.norm(x))
    if abs(r - ctx.R) > POINT_RTOL * ctx.R:
        raise ValueError(f"point has norm {r!r}, not on sphere of radius {ctx.R}")
    return x


def random_points(ctx: SphereContext, n: int, rng) -> np.ndarray:
    """n uniform points on the sphere, shape (n, d). rng: seed or Generator."""
    gen = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    g = gen.standard_normal((n, ctx.d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return ctx.R * g


def distance(u, v, ctx: SphereContext) -> float:
    """Geodesic distance R*arccos(u.v / R^2), clamped against rounding."""
    c = float(np.dot(u, v)) / ctx.R**2
    return ctx.R * math.acos(min(1.0, max(-1.0, c)))


def _angles_to(points: np.ndarray, x: np.ndarray, ctx: SphereContext) -> np.ndarray:
    """Geodesic angle (distance / R) from each row of points to x."""
    c = points @ np.asarray(x, dtype=float) / ctx.R**2
    return np.arccos(np.clip(c, -1.0, 1.0))


# ---------------------------------------------------------------------------
# regions


class Region:
    """Base class for measurable subsets of the sphere (immutable trees)."""

    def contains(self, points: np.ndarray, ctx: SphereContext) -> np.ndarray:
        """Vectorized indicator: points (n, d) -> bool array (n,)."""
        raise NotImplementedError


@dataclass(eq=False)
class Cap(Region):
    """Geodesic ball: membership dist(center, y) <= pi * radius_a."""

    center: np.ndarray
    radius_a: float

    def __post_init__(self) -> None:
        self.center = np.asarray(self.center, dtype=float)
        if not (self.radius_a > 0):
            raise ValueError(f"cap radius must be positive, got {self.radius_a}")

    def angular_radius(self, ctx: SphereContext) -> float:
        return min(math.pi * self.radius_a / ctx.R, math.pi)

    def contains(self, points, ctx):
        return _angles_to(np.atleast_2d(points), self.center, ctx) <= self.angular_radius(ctx)


@dataclass(eq=False)
class Band(Region):
    """Latitude band on the 2-sphere: asin(z/R) in [lat_min, lat_max]."""

    lat_min: float
    lat_max: float

    def contains(self, points, ctx):
        if ctx.d != 3:
            raise ValueError("band regions are defined for d = 3 only")
        lat = np.arcsin(np.clip(np.atleast_2d(points)[:, 2] / ctx.R, -1.0, 1.0))
        return (lat >= self.lat_min) & (lat <= self.lat_max)


@dataclass(eq=False)
class Arc(Region):
    """Angular interval on the circle, taken mod 2*pi (wraparound allowed)."""

    angle_min: float
    angle_max: float

    def contains(self, points, ctx):
        if ctx.d != 2:
            raise ValueError("arc regions are defined for d = 2 only")
        pts = np.atleast_2d(points)
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        width = self.angle_max - self.angle_min
        if width >= 2 * math.pi:
            return np.ones(len(pts), dtype=bool)
        return np.mod(theta - self.angle_min, 2 * math.pi) <= width


@dataclass(eq=False)
class Union(Region):
    parts: list

    def contains(self, points, ctx):
        return np.logical_or.reduce([p.contains(points, ctx) for p in self.parts])


@dataclass(eq=False)
class Intersection(Region):
    parts: list

    def contains(self, points, ctx):
        return np.logical_and.reduce([p.contains(points, ctx) for p in self.parts])


@dataclass(eq=False)
class Complement(Region):
    of: Region

    def contains(self, points, ctx):
        return ~self.of.contains(points, ctx)


@dataclass(eq=False)
class FullSphere(Region):
    def contains(self, points, ctx):
        return np.ones(len(np.atleast_2d(points)), dtype=bool)


@dataclass(eq=False)
class Empty(Region):
    def contains(self, points, ctx):
        return np.zeros(len(np.atleast_2d(points)), dtype=bool)


def region_from_json(obj: dict, ctx: SphereContext) -> Region:
    """Parse the region JSON schema; cap centers are validated against |x| = R.

    Schema: {"type":"cap","center":[...],"a":0.1} | {"type":"band","lat":[t1,t2]}
    | {"type":"arc","angle":[t1,t2]} | {"type":"union","parts":[...]}
    | {"type":"intersection","parts":[...]} | {"type":"complement","of":{...}}
    | {"type":"full"} | {"type":"empty"}.
    """
    if not isinstance(obj, dict) or "type" not in obj:
        raise ValueError(f"region node must be an object with a 'type' key, got {obj!r}")
    kind = obj["type"]
    if kind == "cap":
        return Cap(sphere_point(obj["center"], ctx), float(obj["a"]))
    if kind == "band":
        t1, t2 = obj["lat"]
        if ctx.d != 3:
            raise ValueError("band regions require d = 3")
        return Band(float(t1), float(t2))
    if kind == "arc":
        t1, t2 = obj["angle"]
        if ctx.d != 2:
            raise ValueError("arc regions require d = 2")
        return Arc(float(t1), float(t2))
    if kind == "union":
        return Union([region_from_json(p, ctx) for p in obj["parts"]])
    if kind == "intersection":
        return Intersection([region_from_json(p, ctx) for p in obj["parts"]])
    if kind == "complement":
        return Complement(region_from_json(obj["of"], ctx))
    if kind == "full":
        return FullSphere()
    if kind == "empty":
        return Empty()
    raise ValueError(f"unknown region type {kind!r}")


def region_to_json(region: Region) -> dict:
    if isinstance(region, Cap):
        return {"type": "cap", "center": [float(c) for c in region.center], "a": region.radius_a}
    if isinstance(region, Band):
        return {"type": "band", "lat": [region.lat_min, region.lat_max]}
    if isinstance(region, Arc):
        return {"type": "arc", "angle": [region.angle_min, region.angle_max]}
    if isinstance(region, Union):
        return {"type": "union", "parts": [region_to_json(p) for p in region.parts]}
    if isinstance(region, Intersection):
        return {"type": "intersection", "parts": [region_to_json(p) for p in region.parts]}
    if isinstance(region, Complement):
        return {"type": "complement", "of": region_to_json(region.of)}
    if isinstance(region, FullSphere):
        return {"type": "full"}
    if isinstance(region, Empty):
        return {"type": "empty"}
    raise TypeError(f"cannot serialize region of type {type(region).__name__}")


# ---------------------------------------------------------------------------
# measures


def cap_measure(cap: Cap, ctx: SphereContext) -> float:
    """Closed-form surface measure of a cap, clamped at the whole sphere."""
    if not (cap.radius_a > 0):
        raise ValueError(f"cap radius must be positive, got {cap.radius_a}")
    if ctx.d == 2:
        return 2.0 * math.pi * min(cap.radius_a, ctx.R)
    if ctx.d == 3:
        theta = math.pi * cap.radius_a / ctx.R
        if theta >= math.pi:
            return 4.0 * math.pi * ctx.R**2
        return 2.0 * math.pi * ctx.R**2 * (1.0 - math.cos(theta))
    raise NotImplementedError(f"cap measure implemented for d in {{2, 3}}, got d = {ctx.d}")


def cap_for_measure_fraction(ctx: SphereContext, fraction: float, center=None) -> Cap:
    """Cap whose measure is the given fraction of the whole sphere."""
    if not (0 < fraction <= 1):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if center is None:
        center = np.zeros(ctx.d)
        center[-1] = ctx.R
    if ctx.d == 2:
        a = fraction * ctx.R
    elif ctx.d == 3:
        a = ctx.R / math.pi * math.acos(max(-1.0, 1.0 - 2.0 * fraction))
    else:
        raise NotImplementedError("implemented for d in {2, 3}")
    return Cap(sphere_point(center, ctx), a)


def region_measure(region: Region, rule) -> float:
    """Quadrature measure: sum of rule weights where the indicator holds."""
    mask = region.contains(rule.nodes, rule.ctx)
    return float(np.sum(rule.weights * mask))


# ---------------------------------------------------------------------------
# geodesic segments


@dataclass(eq=False)
class LineSegment:
    """Trace of t -> cos(t) p + sin(t) v on [0, length_param], with p.v = 0.

    The curve has constant speed R, so the arc length is R * length_param.
    """

    p: np.ndarray
    v: np.ndarray
    length_param: float
    ctx: SphereContext

    @property
    def arc_length(self) -> float:
        return self.ctx.R * self.length_param

    def point_at(self, t) -> np.ndarray:
        """Point(s) at parameter t; t may be a scalar or an array."""
        t = np.asarray(t, dtype=float)
        return np.cos(t)[..., None] * self.p + np.sin(t)[..., None] * self.v


def geodesic_segment(p, v, length_param: float, ctx: SphereContext) -> LineSegment:
    """Build a segment from a start point and an orthogonal direction.

    Rejects directions with p.v != 0 (tolerance ORTHO_RTOL * R^2); the
    diagnostic carries the offending inner product.
    """
    p = sphere_point(p, ctx)
    v = sphere_point(v, ctx)
    ip = float(np.dot(p, v))
    if abs(ip) > ORTHO_RTOL * ctx.R**2:
        raise ValueError(f"direction not orthogonal to base point: p.v = {ip!r}")
    if not (0 < length_param <= 2 * math.pi):
        raise ValueError(f"length parameter must be in (0, 2*pi], got {length_param}")
    return LineSegment(p, v, float(length_param), ctx)


def arc_measure(seg: LineSegment, region: Region, n_samples: int = 512) -> float:
    """Composite-midpoint estimate of the arc length of segment-in-region.

    Approximates R * integral of the region indicator along the segment;
    the error is at most one sample cell per indicator crossing, i.e.
    O(arc_length / n_samples) for boolean regions with smooth boundaries.
    """
    if n_samples < 64:
        raise ValueError(f"n_samples must be >= 64, got {n_samples}")
    h = seg.length_param / n_samples
    t = (np.arange(n_samples) + 0.5) * h
    inside = region.contains(seg.point_at(t), seg.ctx)
    return seg.ctx.R * h * float(np.sum(inside))


def orthonormal_frame(p, ctx: SphereContext) -> np.ndarray:
    """Orthonormal basis of the tangent space at p, rows of shape (d-1, d)."""
    p = np.asarray(p, dtype=float)
    u = p / np.linalg.norm(p)
    if ctx.d == 2:
        return np.array([[-u[1], u[0]]])
    if ctx.d == 3:
        helper = np.array([0.0, 0.0, 1.0])
        if abs(u @ helper) > 0.9:
            helper = np.array([1.0, 0.0, 0.0])
        e1 = np.cross(u, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(u, e1)
        return np.array([e1, e2])
    raise NotImplementedError("frames implemented for d in {2, 3}")


# ---------------------------------------------------------------------------
# covers and thickness


def fibonacci_points(n: int, ctx: SphereContext) -> np.ndarray:
    """Fibonacci-spiral points on the 2-sphere, shape (n, 3). Deterministic."""
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    i = np.arange(n)
    theta = 2.0 * math.pi * i / golden
    z = 1.0 - 2.0 * (i + 0.5) / n
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return ctx.R * np.column_stack([s * np.cos(theta), s * np.sin(theta), z])


def cover_grid(ctx: SphereContext, n: int) -> np.ndarray:
    """n candidate cap centers: uniform angles (d=2) or Fibonacci spiral (d=3)."""
    if ctx.d == 2:
        ang = 2.0 * math.pi * np.arange(n) / n
        return ctx.R * np.column_stack([np.cos(ang), np.sin(ang)])
    if ctx.d == 3:
        return fibonacci_points(n, ctx)
    raise NotImplementedError("cover grids implemented for d in {2, 3}")


def cover_multiplicity_bound(d: int) -> float:
    """Admissible covering multiplicity: 400 * d * log d."""
    return 400.0 * d * math.log(d)


@dataclass(eq=False)
class CapCover:
    """A verified cover of the sphere by equal-radius caps."""

    caps: list
    multiplicity_kappa: int
    coverage_verified: bool
    verification_grid_n: int

    @property
    def centers(self) -> np.ndarray:
        return np.array([c.center for c in self.caps])


def build_cap_cover(ctx: SphereContext, a: float, verify_factor: int = 4) -> CapCover:
    """Cover the sphere with caps of radius a and verify it.

    Centers: d = 2 uses a uniform angular grid of 2*ceil(2R/a) points
    (spacing <= pi*a/(2R)); d = 3 uses ceil(16 R^2/a^2) Fibonacci-spiral
    points. Coverage and the multiplicity kappa are checked on a sample
    grid at verify_factor times the cover density; a gap or a multiplicity
    above 400*d*log d raises CoverageError.
    """
    if not (0 < a <= ctx.R):
        raise ValueError(f"cap radius must satisfy 0 < a <= R, got a = {a}")
    if a >= ctx.R:
        # the cap of radius R is the whole sphere
        north = np.zeros(ctx.d)
        north[-1] = ctx.R
        single = Cap(north, a)
        return CapCover([single], 1, True, 1)

    if ctx.d == 2:
        n_caps = 2 * math.ceil(2.0 * ctx.R / a)
    else:
        n_caps = math.ceil(16.0 * ctx.R**2 / a**2)
    centers = cover_grid(ctx, n_caps)
    caps = [Cap(c, a) for c in centers]

    n_check = verify_factor * n_caps
    grid = cover_grid(ctx, n_check)
    cos_thresh = math.cos(min(math.pi * a / ctx.R, math.pi))

    kappa = 0
    covered = True
    block = max(1, 2_000_000 // max(1, n_caps))
    for start in range(0, n_check, block):
        dots = grid[start : start + block] @ centers.T / ctx.R**2
        counts = np.sum(dots >= cos_thresh - 1e-15, axis=1)
        if counts.min() < 1:
            covered = False
            break
        kappa = max(kappa, int(counts.max()))
    if not covered:
        raise CoverageError(
            f"cap cover with a = {a} left sample points uncovered (n_caps = {n_caps})"
        )
    bound = cover_multiplicity_bound(ctx.d)
    if kappa > bound:
        raise CoverageError(f"cover multiplicity {kappa} exceeds bound {bound:.1f}")
    return CapCover(caps, kappa, True, n_check)


@dataclass(eq=False)
class ThicknessReport:
    """Grid minimum of |S intersect K| / |K| over test caps of radius a.

    The minimum over a finite grid of centers is an upper estimate of the
    true thickness at this scale; grid_resolution records the grid size so
    callers can demand convergence under refinement.
    """

    scale_a: float
    gamma_estimate: float
    worst_cap: Cap
    grid_resolution: int


def thickness(region: Region, a: float, grid_n: int, rule) -> ThicknessReport:
    """Estimate the thickness of a region at cap scale a on a center grid.

    Both |S intersect K| and |K| are quadrature measures under the supplied
    rule, so the ratio is exactly in [0, 1]; caps that capture no quadrature
    node are rejected (refine the rule or enlarge a).
    """
    if grid_n < 16:
        raise ValueError(f"grid_n must be >= 16, got {grid_n}")
    ctx = rule.ctx
    centers = cover_grid(ctx, grid_n)
    cos_thresh = math.cos(min(math.pi * a / ctx.R, math.pi))
    in_region = region.contains(rule.nodes, ctx)

    membership = (rule.nodes @ centers.T / ctx.R**2) >= cos_thresh  # (nodes, caps)
    denom = rule.weights @ membership
    if denom.min() <= 0:
        i = int(np.argmin(denom))
        raise ValueError(
            f"test cap at grid index {i} contains no quadrature node (a = {a}); "
            "refine the rule or enlarge the scale"
        )
    numer = (rule.weights * in_region) @ membership
    ratios = numer / denom
    worst = int(np.argmin(ratios))
    return ThicknessReport(a, float(ratios[worst]), Cap(centers[worst], a), grid_n)


@dataclass(eq=False)
class CoveringComparison:
    """Relates the cap-scale thickness to the global measure fraction.

    For a cover with per-cap mass ratios bounded below by gamma0 and node
    multiplicity kappa, the measure fraction of the region is at least
    gamma0 / kappa.
    """

    scale_a: float
    gamma0: float
    kappa: int
    measure_fraction: float
    satisfied: bool


def covering_comparison(region: Region, a: float, rule, slack: float = 1e-6) -> CoveringComparison:
    """Check measure_fraction >= gamma0/kappa at scale a on the rule nodes.

    gamma0, kappa and all measures are evaluated on the same quadrature
    nodes, which makes the inequality exact up to float roundoff.
    """
    ctx = rule.ctx
    cover = build_cap_cover(ctx, a)
    centers = cover.centers
    cos_thresh = math.cos(min(math.pi * a / ctx.R, math.pi))
    membership = (rule.nodes @ centers.T / ctx.R**2) >= cos_thresh - 1e-15
    node_mult = membership.sum(axis=1)
    if node_mult.min() < 1:
        raise CoverageError("cover does not reach every quadrature node")
    kappa = int(node_mult.max())

    in_region = region.contains(rule.nodes, ctx)
    denom = rule.weights @ membership
    numer = (rule.weights * in_region) @ membership
    if denom.min() <= 0:
        raise ValueError("a cover cap contains no quadrature node; refine the rule")
    gamma0 = float(np.min(numer / denom))
    fraction = float(np.sum(rule.weights * in_region) / np.sum(rule.weights))
    ok = fraction >= gamma0 / max(kappa, 1) - slack
    return CoveringComparison(a, gamma0, kappa, fraction, ok)


# ---------------------------------------------------------------------------
# direction selection


@dataclass(eq=False)
class DirectionSearch:
    """Best segment found by the direction fan, with its mass ratio.

    ratio = arc(I in M) / arc(I); c4_implied = (|K in M|/|K|) / ratio when a
    quadrature rule was supplied (None otherwise).
    """

    segment: LineSegment
    ratio: float
    direction_index: int
    c4_implied: float | None


def _max_param_in_cap(p, v, cap: Cap, ctx: SphereContext, n_scan: int = 512) -> float:
    """sup{t in [0, pi]: the curve stays in the cap on [0, t]}, by bisection."""
    theta_a = cap.angular_radius(ctx)
    center = cap.center

    def inside(t: float) -> bool:
        y = math.cos(t) * p + math.sin(t) * v
        c = float(y @ center) / ctx.R**2
        return math.acos(min(1.0, max(-1.0, c))) <= theta_a + 1e-15

    ts = np.linspace(0.0, math.pi, n_scan + 1)
    ys = np.cos(ts)[:, None] * p + np.sin(ts)[:, None] * v
    ang = _angles_to(ys, center, ctx)
    out = np.nonzero(ang > theta_a + 1e-15)[0]
    if len(out) == 0:
        return math.pi
    first = int(out[0])
    if first == 0:
        return 0.0
    lo, hi = ts[first - 1], ts[first]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if inside(mid):
            lo = mid
        else:
            hi = mid
    return lo


def select_direction(
    p,
    region: Region,
    cap: Cap,
    ctx: SphereContext,
    n_dirs: int = 64,
    n_samples: int = 512,
    rule=None,
) -> DirectionSearch:
    """Pick the tangent direction whose maximal in-cap segment sees the most
    of the region, by arc-length fraction.

    Scans a deterministic fan of n_dirs directions orthogonal to p (both
    tangents for d = 2), extends each segment to the cap boundary, and
    returns the one maximizing arc(I in M)/arc(I); ties break toward the
    lowest direction index. Raises NoDirectionFoundError if every segment
    misses the region.
    """
    if n_dirs < 8:
        raise ValueError(f"n_dirs must be >= 8, got {n_dirs}")
    p = sphere_point(p, ctx)
    if not bool(cap.contains(p[None, :], ctx)[0]):
        raise ValueError("base point must lie in the cap")

    frame = orthonormal_frame(p, ctx)
    if ctx.d == 2:
        dirs = [ctx.R * frame[0], -ctx.R * frame[0]]
    else:
        phis = 2.0 * math.pi * np.arange(n_dirs) / n_dirs
        dirs = [ctx.R * (math.cos(f) * frame[0] + math.sin(f) * frame[1]) for f in phis]

    best = None
    for i, v in enumerate(dirs):
        l = _max_param_in_cap(p, v, cap, ctx)
        if l <= 1e-9:
            continue
        seg = LineSegment(p, v, l, ctx)
        hit = arc_measure(seg, region, n_samples)
        ratio = hit / seg.arc_length
        if hit > 0 and (best is None or ratio > best[0]):
            best = (ratio, i, seg)
    if best is None:
        raise NoDirectionFoundError(
            f"no direction out of {len(dirs)} met the region; raise n_dirs or n_samples"
        )
    ratio, index, seg = best

    c4 = None
    if rule is not None:
        k_mass = region_measure(cap, rule)
        km_mass = region_measure(Intersection([cap, region]), rule)
        if k_mass > 0 and ratio > 0:
            c4 = (km_mass / k_mass) / ratio
    return DirectionSearch(seg, float(ratio), index, c4)
