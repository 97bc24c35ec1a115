"""Sharp norm-concentration constants via restricted Gram matrices.

For the subspace of spherical polynomials up to degree N, the ratio
||f||_{L2(sphere)} / ||f||_{L2(S)} is maximized by the eigenvector of the
smallest eigenvalue of the Gram matrix G_S of the basis restricted to S,
and the sharp constant is lambda_min^{-1/2}. General L^q constants get
randomized lower bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from . import harmonics as ha

__all__ = [
    "GramMatrix",
    "gram",
    "eig_sym",
    "DegenerateGramError",
    "SpectralReport",
    "sharp_constant",
    "spectral_inequality_check",
    "lq_constant_lower_bound",
]


class DegenerateGramError(RuntimeError):
    """Restricted Gram matrix is numerically singular for this degree."""

    def __init__(self, message: str, lambda_min: float):
        super().__init__(message)
        self.lambda_min = lambda_min


@dataclass(eq=False)
class GramMatrix:
    """G_ij = integral over the region of Y_i Y_j, for indices up to N."""

    ctx: geo.SphereContext
    N: int
    region: geo.Region
    entries: np.ndarray


def gram(region: geo.Region, N: int, rule) -> GramMatrix:
    """Assemble the restricted Gram matrix by quadrature.

    The rule must be exact to degree 2N so that basis products are
    integrated exactly up to the indicator's own quadrature error.
    """
    if rule.exact_degree < 2 * N:
        raise ValueError(
            f"rule exact to degree {rule.exact_degree} cannot support N = {N} "
            f"(needs {2 * N})"
        )
    B = ha.basis_matrix(rule.ctx, N, rule.nodes)
    w = rule.weights * region.contains(rule.nodes, rule.ctx)
    G = (B * w[:, None]).T @ B
    return GramMatrix(rule.ctx, N, region, 0.5 * (G + G.T))


def eig_sym(M: np.ndarray, off_rtol: float = 1e-13, max_sweeps: int = 60):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius mass drops below
    off_rtol * ||M||_F. Returns (eigenvalues ascending, eigenvectors as
    columns). Rejects non-symmetric input.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))))
    if float(np.max(np.abs(M - M.T))) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric to 1e-10")
    A = 0.5 * (M + M.T)
    V = np.eye(n)
    if n == 1:
        return A.diagonal().copy(), V
    norm = float(np.linalg.norm(A, "fro")) or 1.0
    target = off_rtol * norm
    skip = 0.1 * target / n

    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(A[off_mask] ** 2)))
        if off < target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    w = A.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


@dataclass(eq=False)
class SpectralReport:
    """Sharp L2 concentration constant for one (region, subspace) pair."""

    N: int
    q: float
    gamma_used: float | None
    scale_a: float | None
    C_star: float
    implied_c1: float | None
    eigen_extremizer: ha.SphericalPolynomial
    lambda_min: float
    exponent: float
    energy: float | None = None


def sharp_constant(
    region: geo.Region,
    N: int,
    rule,
    gamma: float | None = None,
    a: float | None = None,
) -> SpectralReport:
    """C* = lambda_min(G_S)^{-1/2}, with the minimizing eigenvector.

    When a thickness estimate gamma (at scale a) is supplied, the report
    carries the implied base constant gamma * C*^{1/(2N + 1/2)}.
    """
    G = gram(region, N, rule)
    w, V = eig_sym(G.entries)
    lam_min = float(w[0])
    if lam_min <= 1e-14:
        raise DegenerateGramError(
            f"region too small for degree {N} at this quadrature "
            f"(lambda_min = {lam_min:.3e})",
            lam_min,
        )
    c_star = lam_min**-0.5
    exponent = 2.0 * N + 0.5
    implied = gamma * c_star ** (1.0 / exponent) if gamma is not None else None
    extremizer = ha.SphericalPolynomial(rule.ctx, N, V[:, 0].copy())
    return SpectralReport(
        N=N,
        q=2.0,
        gamma_used=gamma,
        scale_a=a,
        C_star=float(c_star),
        implied_c1=implied,
        eigen_extremizer=extremizer,
        lambda_min=lam_min,
        exponent=exponent,
    )


def spectral_inequality_check(
    region: geo.Region,
    E: float,
    ctx: geo.SphereContext,
    rule,
    gamma: float | None = None,
    a: float | None = None,
) -> SpectralReport:
    """Sharp constant for the spectral subspace of energy <= E.

    Delegates to sharp_constant at N = floor(R*sqrt(E)); the implied base
    constant uses the energy exponent R*sqrt(E) + 1/2.
    """
    if E < 0:
        raise ValueError(f"energy must be >= 0, got {E}")
    N = ha.degree_from_energy(E, ctx)
    rep = sharp_constant(region, N, rule, gamma=gamma, a=a)
    exponent = ctx.R * math.sqrt(E) + 0.5
    implied = gamma * rep.C_star ** (1.0 / exponent) if gamma is not None else None
    return SpectralReport(
        N=N,
        q=2.0,
        gamma_used=gamma,
        scale_a=a,
        C_star=rep.C_star,
        implied_c1=implied,
        eigen_extremizer=rep.eigen_extremizer,
        lambda_min=rep.lambda_min,
        exponent=exponent,
        energy=E,
    )


def lq_constant_lower_bound(
    region: geo.Region,
    N: int,
    q: float,
    trials: int,
    seed: int,
    rule,
    include_extremizer: bool = True,
) -> float:
    """Certified lower bound on the best L^q constant for the subspace.

    Maximum of ||f||_{L^q(sphere)} / ||f||_{L^q(S)} over seeded random
    polynomials, plus the L2 extremizer as an extra candidate.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    full = geo.FullSphere()
    candidates = [ha.random_poly(N, s, rule.ctx)
                  for s in np.random.SeedSequence(seed).generate_state(trials)]
    if include_extremizer:
        candidates.append(sharp_constant(region, N, rule).eigen_extremizer)
    best = 0.0
    for f in candidates:
        denom = ha.lq_norm(f, region, rule, q)
        if denom == 0.0:
            return math.inf
        best = max(best, ha.lq_norm(f, full, rule, q) / denom)
    return float(best)
