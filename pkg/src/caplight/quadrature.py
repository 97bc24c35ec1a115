"""Quadrature on circles and 2-spheres with certified polynomial exactness.

sphere_rule builds product rules (uniform azimuthal grid, Gauss-Legendre in
the polar cosine for d = 3) that integrate spherical polynomials up to a
requested degree exactly. polar_integrate evaluates the same surface
integral through geodesic polar coordinates centered at a point, which is
useful as an independent cross-check of any rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import SphereContext, orthonormal_frame, sphere_point

__all__ = ["QuadratureRule", "sphere_rule", "integrate", "polar_integrate",
           "rule_to_json", "rule_from_json"]


@dataclass(eq=False)
class QuadratureRule:
    """Nodes on the sphere with positive weights summing to its measure."""

    ctx: SphereContext
    nodes: np.ndarray
    weights: np.ndarray
    exact_degree: int

    def __post_init__(self) -> None:
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.nodes) != len(self.weights):
            raise ValueError("nodes and weights must have equal length")
        total = self.ctx.sphere_measure()
        if abs(float(self.weights.sum()) - total) > 1e-10 * total:
            raise ValueError("weights do not sum to the sphere measure")


def sphere_rule(ctx: SphereContext, degree: int) -> QuadratureRule:
    """Product rule exact for spherical polynomials of degree <= degree.

    d = 2: uniform angular grid with 2*degree + 2 equal-weight nodes.
    d = 3: Gauss-Legendre in cos(theta) with ceil((degree+2)/2) nodes
    tensored with a uniform grid of 2*degree + 2 azimuthal nodes.
    """
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    m = 2 * degree + 2
    if ctx.d == 2:
        ang = 2.0 * math.pi * np.arange(m) / m
        nodes = ctx.R * np.column_stack([np.cos(ang), np.sin(ang)])
        weights = np.full(m, 2.0 * math.pi * ctx.R / m)
        return QuadratureRule(ctx, nodes, weights, degree)
    if ctx.d == 3:
        q = (degree + 2 + 1) // 2  # ceil((degree + 2) / 2)
        mu, w_mu = np.polynomial.legendre.leggauss(q)
        ang = 2.0 * math.pi * np.arange(m) / m
        s = np.sqrt(np.maximum(0.0, 1.0 - mu**2))
        X = np.empty((q * m, 3))
        W = np.empty(q * m)
        for i in range(q):
            sl = slice(i * m, (i + 1) * m)
            X[sl, 0] = s[i] * np.cos(ang)
            X[sl, 1] = s[i] * np.sin(ang)
            X[sl, 2] = mu[i]
            W[sl] = w_mu[i] * (2.0 * math.pi / m)
        return QuadratureRule(ctx, ctx.R * X, ctx.R**2 * W, degree)
    raise NotImplementedError(f"rules implemented for d in {{2, 3}}, got d = {ctx.d}")


def integrate(rule: QuadratureRule, f) -> float:
    """Weighted node sum of f; f maps an (n, d) array to n values."""
    vals = np.asarray(f(rule.nodes), dtype=float)
    if vals.shape != (len(rule.nodes),):
        raise ValueError(f"integrand returned shape {vals.shape}, expected ({len(rule.nodes)},)")
    if not np.all(np.isfinite(vals)):
        raise ValueError("integrand produced non-finite values at quadrature nodes")
    return float(np.sum(rule.weights * vals))


def _gauss_on_interval(lo: float, hi: float, n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def polar_integrate(p, ctx: SphereContext, f, n_t: int = 512, n_dir: int = 256) -> float:
    """Surface integral via geodesic polar coordinates centered at p.

    Evaluates (R/2) * sum over directions v orthogonal to p of the weighted
    arc integral of f(cos(t) p + sin(t) v) |sin t|^{d-2} over t in [0, 2*pi].
    Directions form a uniform tensor grid carrying the measure of the
    direction sphere (total 2*pi*R for d = 3; two atoms of mass 1 each for
    d = 2). The arc parameter uses Gauss-Legendre nodes on [0, pi] and
    [pi, 2*pi] separately since |sin t| has corners at 0 and pi.
    """
    if n_t < 32:
        raise ValueError(f"n_t must be >= 32, got {n_t}")
    p = sphere_point(p, ctx)
    frame = orthonormal_frame(p, ctx)

    half = max(16, n_t // 2)
    t1, w1 = _gauss_on_interval(0.0, math.pi, half)
    t2, w2 = _gauss_on_interval(math.pi, 2.0 * math.pi, half)
    t = np.concatenate([t1, t2])
    w_t = np.concatenate([w1, w2])
    sin_factor = np.abs(np.sin(t)) ** (ctx.d - 2)

    if ctx.d == 2:
        dirs = [ctx.R * frame[0], -ctx.R * frame[0]]
        dir_weights = [1.0, 1.0]
    elif ctx.d == 3:
        if n_dir < 16:
            raise ValueError(f"n_dir must be >= 16 for d = 3, got {n_dir}")
        phis = 2.0 * math.pi * np.arange(n_dir) / n_dir
        dirs = [ctx.R * (math.cos(a) * frame[0] + math.sin(a) * frame[1]) for a in phis]
        dir_weights = [2.0 * math.pi * ctx.R / n_dir] * n_dir
    else:
        raise NotImplementedError("polar integration implemented for d in {2, 3}")

    cos_t = np.cos(t)
    sin_t = np.sin(t)
    total = 0.0
    for v, dw in zip(dirs, dir_weights):
        pts = cos_t[:, None] * p + sin_t[:, None] * v
        vals = np.asarray(f(pts), dtype=float)
        total += dw * float(np.sum(w_t * sin_factor * vals))
    return 0.5 * ctx.R * total


def rule_to_json(rule: QuadratureRule) -> dict:
    return {
        "d": rule.ctx.d,
        "R": rule.ctx.R,
        "exact_degree": rule.exact_degree,
        "nodes": rule.nodes.tolist(),
        "weights": rule.weights.tolist(),
    }


def rule_from_json(obj: dict) -> QuadratureRule:
    ctx = SphereContext(int(obj["d"]), float(obj["R"]))
    return QuadratureRule(ctx, np.array(obj["nodes"], dtype=float),
                          np.array(obj["weights"], dtype=float), int(obj["exact_degree"]))
