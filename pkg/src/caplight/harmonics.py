"""Orthonormal eigenbasis of the Laplace-Beltrami operator on S^{d-1}_R.

d = 2 uses normalized cosine/sine pairs on the circle; d = 3 uses real
spherical harmonics built from a stable fully-normalized associated
Legendre recurrence (no Condon-Shortley phase, so the degree-1 functions
are exactly sqrt(3/4pi) times the coordinate functions on the unit
sphere). The basis is orthonormal with respect to the surface measure of
the radius-R sphere, which carries an extra factor R^{-(d-1)/2} relative
to unit-sphere values; with that choice the L2 norm of a polynomial
equals the Euclidean norm of its coefficients.

Index layout: coefficients are ordered lexicographically in (ell, k) with
k = 1..n_ell, n_ell = 1 for ell = 0 and 2 for ell >= 1 when d = 2
(cos, sin), and n_ell = 2*ell + 1 when d = 3 (k maps to the azimuthal
order m = k - ell - 1, so sine terms come first, then m = 0, then cosine
terms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import LineSegment, Region, SphereContext

__all__ = [
    "BasisIndex",
    "multiplicity",
    "basis_dimension",
    "basis_indices",
    "basis_matrix",
    "eval_basis",
    "laplace_eigenvalue",
    "eigenvalue_vector",
    "SphericalPolynomial",
    "eval_poly",
    "lq_norm",
    "degree_from_energy",
    "random_poly",
    "to_exponential_sum",
    "poly_to_json",
    "poly_from_json",
]


@dataclass(frozen=True)
class BasisIndex:
    """Degree ell >= 0 and position k in 1..n_ell within the degree block."""

    ell: int
    k: int


def multiplicity(ctx: SphereContext, ell: int) -> int:
    if ell < 0:
        raise ValueError(f"degree must be >= 0, got {ell}")
    if ctx.d == 2:
        return 1 if ell == 0 else 2
    if ctx.d == 3:
        return 2 * ell + 1
    raise NotImplementedError("basis implemented for d in {2, 3}")


def basis_dimension(ctx: SphereContext, N: int) -> int:
    return sum(multiplicity(ctx, l) for l in range(N + 1))


def basis_indices(ctx: SphereContext, N: int) -> list[BasisIndex]:
    return [BasisIndex(l, k) for l in range(N + 1) for k in range(1, multiplicity(ctx, l) + 1)]


def laplace_eigenvalue(ell: int, ctx: SphereContext) -> float:
    """Eigenvalue ell*(ell + d - 2) / R^2 of the degree-ell eigenspace."""
    if ell < 0:
        raise ValueError(f"degree must be >= 0, got {ell}")
    return ell * (ell + ctx.d - 2) / ctx.R**2


def eigenvalue_vector(ctx: SphereContext, N: int) -> np.ndarray:
    """Eigenvalues aligned with the coefficient layout up to degree N."""
    return np.array([laplace_eigenvalue(i.ell, ctx) for i in basis_indices(ctx, N)])


def _normalized_legendre(N: int, x: np.ndarray, s: np.ndarray) -> dict:
    """A[(ell, m)] = N_{ell,m} P_ell^m(x) with unit L2 norm over the sphere.

    x = cos(theta), s = sin(theta) >= 0. Standard three-term recurrence in
    the degree at fixed order, seeded along the diagonal; all returned
    arrays share the shape of x. Condon-Shortley phase omitted.
    """
    A = {(0, 0): np.full_like(x, 1.0 / math.sqrt(4.0 * math.pi))}
    for m in range(1, N + 1):
        A[(m, m)] = math.sqrt((2 * m + 1) / (2.0 * m)) * s * A[(m - 1, m - 1)]
    for m in range(0, N):
        A[(m + 1, m)] = math.sqrt(2 * m + 3.0) * x * A[(m, m)]
    for m in range(0, N + 1):
        for l in range(m + 2, N + 1):
            alpha = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            beta = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            A[(l, m)] = alpha * (x * A[(l - 1, m)] - beta * A[(l - 2, m)])
    return A


def basis_matrix(ctx: SphereContext, N: int, points) -> np.ndarray:
    """Values of all basis functions up to degree N at the given points.

    Returns an array of shape (n_points, basis_dimension(ctx, N)) with
    columns in (ell, k) order.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(pts)
    cols = np.empty((n, basis_dimension(ctx, N)))
    if ctx.d == 2:
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        cols[:, 0] = 1.0 / math.sqrt(2.0 * math.pi * ctx.R)
        c = 1.0 / math.sqrt(math.pi * ctx.R)
        for l in range(1, N + 1):
            cols[:, 2 * l - 1] = c * np.cos(l * theta)
            cols[:, 2 * l] = c * np.sin(l * theta)
        return cols
    if ctx.d == 3:
        x = np.clip(pts[:, 2] / ctx.R, -1.0, 1.0)
        s = np.sqrt(np.maximum(0.0, 1.0 - x * x))
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        A = _normalized_legendre(N, x, s)
        scale = 1.0 / ctx.R  # R^{-(d-1)/2}
        j = 0
        for l in range(N + 1):
            for k in range(1, 2 * l + 2):
                m = k - l - 1
                if m == 0:
                    cols[:, j] = scale * A[(l, 0)]
                elif m > 0:
                    cols[:, j] = scale * math.sqrt(2.0) * A[(l, m)] * np.cos(m * phi)
                else:
                    cols[:, j] = scale * math.sqrt(2.0) * A[(l, -m)] * np.sin(-m * phi)
                j += 1
        return cols
    raise NotImplementedError("basis implemented for d in {2, 3}")


def eval_basis(idx: BasisIndex, x, ctx: SphereContext) -> float:
    """Single basis function at a single point."""
    n_l = multiplicity(ctx, idx.ell)
    if not (1 <= idx.k <= n_l):
        raise ValueError(f"k = {idx.k} outside 1..{n_l} for ell = {idx.ell}")
    col = basis_dimension(ctx, idx.ell - 1) + idx.k - 1 if idx.ell > 0 else idx.k - 1
    return float(basis_matrix(ctx, idx.ell, np.asarray(x, dtype=float)[None, :])[0, col])


@dataclass(eq=False)
class SphericalPolynomial:
    """Coefficients over the orthonormal eigenbasis up to degree_N."""

    ctx: SphereContext
    degree_N: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        dim = basis_dimension(self.ctx, self.degree_N)
        if self.coeffs.shape != (dim,):
            raise ValueError(
                f"coefficient vector has shape {self.coeffs.shape}, expected ({dim},)"
            )


def eval_poly(f: SphericalPolynomial, points) -> np.ndarray:
    """Values of the polynomial at points (n, d) -> (n,)."""
    return basis_matrix(f.ctx, f.degree_N, points) @ f.coeffs


def lq_norm(f: SphericalPolynomial, region: Region, rule, q) -> float:
    """L^q norm of f over a region, evaluated on the rule nodes.

    For q = inf this is the node maximum of |f| inside the region, a lower
    estimate of the essential sup at the rule's resolution.
    """
    if not (q == math.inf or q >= 1):
        raise ValueError(f"q must be in [1, inf], got {q}")
    mask = region.contains(rule.nodes, rule.ctx)
    vals = eval_poly(f, rule.nodes)
    if q == math.inf:
        if not mask.any():
            raise ValueError("empty region: no quadrature node lies inside")
        return float(np.max(np.abs(vals[mask])))
    return float(np.sum(rule.weights * mask * np.abs(vals) ** q) ** (1.0 / q))


def degree_from_energy(E: float, ctx: SphereContext) -> int:
    """Largest degree whose eigenfunctions have energy <= E: floor(R*sqrt(E)).

    Values within 1e-9 of an integer snap to it first, so energies given as
    exact squares are not pushed below the boundary by rounding.
    """
    if E < 0:
        raise ValueError(f"energy must be >= 0, got {E}")
    x = ctx.R * math.sqrt(E)
    nearest = round(x)
    if abs(x - nearest) < 1e-9 * max(1.0, x):
        return int(nearest)
    return int(math.floor(x))


def random_poly(N: int, seed: int, ctx: SphereContext) -> SphericalPolynomial:
    """Seeded standard-normal coefficients, normalized to unit L2 norm."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(basis_dimension(ctx, N))
    return SphericalPolynomial(ctx, N, c / np.linalg.norm(c))


def to_exponential_sum(f: SphericalPolynomial, seg: LineSegment):
    """Restrict f to a geodesic segment as a finite exponential sum.

    With kappa(t) = cos(arc*t/R) p + sin(arc*t/R) v for t in [0, 1] and
    arc the segment's arc length, f(kappa(t)) equals a sum of 2N+1 terms
    beta_m exp(i m (arc/R) t). Coefficients come from trigonometric
    interpolation at 2N+1 equispaced parameters; the reconstruction is
    verified on a dense grid and must match to 1e-9 relative, otherwise a
    ValueError carrying the interpolation condition number is raised.
    """
    from .turan import ExponentialSum

    if seg.ctx != f.ctx:
        raise ValueError("segment and polynomial live on different spheres")
    N = f.degree_N
    n_terms = 2 * N + 1
    base_rate = seg.arc_length / seg.ctx.R  # equals length_param
    t = np.arange(n_terms) / max(2 * N, 1)
    ms = np.arange(-N, N + 1)
    M = np.exp(1j * base_rate * np.outer(t, ms))
    g = eval_poly(f, seg.point_at(base_rate * t))
    betas = np.linalg.solve(M, g.astype(complex))
    lambdas = ms * base_rate

    t_dense = np.linspace(0.0, 1.0, 1024)
    exact = eval_poly(f, seg.point_at(base_rate * t_dense))
    recon = np.exp(1j * np.outer(t_dense, lambdas)) @ betas
    scale = max(float(np.max(np.abs(exact))), 1e-30)
    resid = float(np.max(np.abs(exact - recon)))
    if resid > 1e-9 * scale:
        cond = float(np.linalg.cond(M))
        raise ValueError(
            f"exponential-sum interpolation failed: residual {resid:.3e} "
            f"(scale {scale:.3e}), condition number {cond:.3e}; "
            "the segment may be too short for this degree"
        )
    return ExponentialSum(betas, lambdas)


def poly_to_json(f: SphericalPolynomial) -> dict:
    return {"d": f.ctx.d, "R": f.ctx.R, "N": f.degree_N, "coeffs": f.coeffs.tolist()}


def poly_from_json(obj: dict) -> SphericalPolynomial:
    ctx = SphereContext(int(obj["d"]), float(obj["R"]))
    return SphericalPolynomial(ctx, int(obj["N"]), np.array(obj["coeffs"], dtype=float))
