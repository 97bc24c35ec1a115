"""Heat semigroup, observability constants, and null-control synthesis.

Everything lives in the eigenbasis truncated at a spectral cutoff L: the
semigroup damps mode ell by exp(-t * ell(ell+d-2)/R^2), observation happens
on a region S through the restricted Gram matrix, and the minimal-norm
control comes from the time-weighted observability Gramian

    W_ij = G_ij * (1 - exp(-T (mu_i + mu_j))) / (mu_i + mu_j).

Controls are kept in closed form (diagonal matrix exponentials applied to
the multiplier), and terminal states are always re-simulated with a
Simpson-rule Duhamel integral, so the reported residuals are independent
of the algebra that produced the control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from . import harmonics as ha
from .concentration import eig_sym, gram

__all__ = [
    "ModeVector",
    "heat_evolve",
    "weighted_gramian",
    "ObservabilityReport",
    "observability_constant",
    "extremal_initial_datum",
    "ControlSolution",
    "hum_control",
    "cost_sweep",
    "StageRecord",
    "StagedControlSolution",
    "lebeau_robbiano_control",
    "SingularGramianError",
    "ControlToleranceError",
    "observability_report_to_json",
    "control_to_json",
]

SCHEMA = "caplight/v1"


class SingularGramianError(RuntimeError):
    """Observability Gramian numerically singular: region/time too small."""


class ControlToleranceError(RuntimeError):
    """Simulated terminal state missed the requested tolerance."""

    def __init__(self, message: str, residual: float, trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace


@dataclass(eq=False)
class ModeVector:
    """Coefficients over the eigenbasis up to degree cutoff_L."""

    ctx: geo.SphereContext
    cutoff_L: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        dim = ha.basis_dimension(self.ctx, self.cutoff_L)
        if self.coeffs.shape != (dim,):
            raise ValueError(f"coefficients have shape {self.coeffs.shape}, expected ({dim},)")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def to_polynomial(self) -> ha.SphericalPolynomial:
        return ha.SphericalPolynomial(self.ctx, self.cutoff_L, self.coeffs.copy())


def heat_evolve(u: ModeVector, t: float) -> ModeVector:
    """Damp each mode by exp(-t * mu); norm is nonincreasing."""
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    mu = ha.eigenvalue_vector(u.ctx, u.cutoff_L)
    return ModeVector(u.ctx, u.cutoff_L, u.coeffs * np.exp(-t * mu))


def weighted_gramian(region: geo.Region, L: int, T: float, rule) -> np.ndarray:
    """Observability Gramian of the region over [0, T] at cutoff L."""
    if T <= 0:
        raise ValueError(f"horizon must be positive, got {T}")
    G = gram(region, L, rule).entries
    mu = ha.eigenvalue_vector(rule.ctx, L)
    S = mu[:, None] + mu[None, :]
    factor = np.where(S > 0, -np.expm1(-T * S) / np.where(S > 0, S, 1.0), T)
    return G * factor


def _cholesky_with_shift(W: np.ndarray):
    """Lower Cholesky factor of W, with one diagonal-shift retry."""
    try:
        return np.linalg.cholesky(W), 0.0
    except np.linalg.LinAlgError:
        shift = 1e-14 * float(np.trace(W)) / len(W)
        try:
            return np.linalg.cholesky(W + shift * np.eye(len(W))), shift
        except np.linalg.LinAlgError:
            raise SingularGramianError(
                f"observability Gramian is singular even after shift {shift:.3e}; "
                "region/time too small at this cutoff"
            ) from None


@dataclass(eq=False)
class ObservabilityReport:
    """Finite-dimensional observability constant and its context."""

    L: int
    T: float
    region: geo.Region
    C_obs: float
    extremal_g: ModeVector
    gamma_used: float
    scale_a: float
    implied_c2: float
    paper_c2: float
    paper_bound: float
    d0: float
    d1: float
    lambda_min_w: float
    cholesky_shift: float
    gramian: np.ndarray = field(repr=False)


def _bound_formula(c: float, T: float, R: float, gamma: float) -> float:
    B = R**2 * math.log(gamma) ** 2 / T + abs(math.log(gamma))
    return c / T * math.exp(c * B)


def _implied_c2(c_obs: float, T: float, R: float, gamma: float) -> float:
    """Solve (c/T) exp(c (R^2 log^2 gamma / T + |log gamma|)) = c_obs for c."""
    if not (0.0 < gamma <= 1.0):
        return math.nan
    lo, hi = 1e-300, 1.0
    while _bound_formula(hi, T, R, gamma) < c_obs and hi < 1e6:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _bound_formula(mid, T, R, gamma) < c_obs:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def observability_constant(
    region: geo.Region,
    L: int,
    T: float,
    rule,
    gamma: float | None = None,
    a: float | None = None,
    c1: float = 316.0,
    c2: float = 1.0,
) -> ObservabilityReport:
    """Largest generalized eigenvalue of (diag(e^{-2T mu}), W) at cutoff L.

    Solved by Cholesky-of-W reduction to a standard symmetric problem. The
    report also evaluates the reference bound (c2/T) exp(c2 (R^2 log^2
    gamma / T + |log gamma|)) for the caller's c2, the implied c2 solving
    that formula for the computed constant, and the pair d0 = (c1/gamma)^{1/2},
    d1 = R log(c1/gamma) for the caller's c1. gamma defaults to the region's
    measure fraction (its thickness at scale a = R).
    """
    ctx = rule.ctx
    W = weighted_gramian(region, L, T, rule)
    w_eigs, _ = eig_sym(W)
    lam_min_w = float(w_eigs[0])
    if lam_min_w <= 1e-14:
        raise SingularGramianError(
            f"observability Gramian has lambda_min = {lam_min_w:.3e}; "
            f"region/time too small at cutoff L = {L}"
        )
    Lc, shift = _cholesky_with_shift(W)

    mu = ha.eigenvalue_vector(ctx, L)
    sqrt_d = np.exp(-T * mu)
    Y = np.linalg.solve(Lc, np.diag(sqrt_d))
    M = Y @ Y.T
    vals, vecs = eig_sym(0.5 * (M + M.T))
    c_obs = float(vals[-1])
    g = np.linalg.solve(Lc.T, vecs[:, -1])
    g /= np.linalg.norm(g)

    if gamma is None:
        gamma = geo.region_measure(region, rule) / ctx.sphere_measure()
        a = ctx.R
    if a is None:
        a = ctx.R
    implied = _implied_c2(c_obs, T, ctx.R, gamma)
    bound = _bound_formula(c2, T, ctx.R, gamma) if 0.0 < gamma <= 1.0 else math.inf
    return ObservabilityReport(
        L=L,
        T=T,
        region=region,
        C_obs=c_obs,
        extremal_g=ModeVector(ctx, L, g),
        gamma_used=float(gamma),
        scale_a=float(a),
        implied_c2=float(implied),
        paper_c2=c2,
        paper_bound=float(bound),
        d0=math.sqrt(c1 / gamma),
        d1=ctx.R * math.log(c1 / gamma),
        lambda_min_w=lam_min_w,
        cholesky_shift=shift,
        gramian=W,
    )


def extremal_initial_datum(report: ObservabilityReport) -> ModeVector:
    """Initial state whose minimal-norm control cost attains C_obs.

    The generalized eigenvector g gives exp(T mu) W g as the extremal
    datum; through the eigenrelation this equals exp(-T mu) g / C_obs,
    which is the numerically stable form (no growing exponentials).
    Returned normalized.
    """
    mu = ha.eigenvalue_vector(report.extremal_g.ctx, report.L)
    u = np.exp(-report.T * mu) * report.extremal_g.coeffs
    u /= np.linalg.norm(u)
    return ModeVector(report.extremal_g.ctx, report.L, u)


@dataclass(eq=False)
class ControlSolution:
    """Minimal-norm null control of the truncated heat equation.

    force(s) is the mode-space forcing G exp(-(T-s) mu) eta at time s;
    terminal_state is the re-simulated state at time T.
    """

    eta: ModeVector
    cost: float
    terminal_residual: float
    terminal_state: ModeVector
    T: float
    force: object = field(repr=False)


def hum_control(
    u0: ModeVector,
    region: geo.Region,
    L: int,
    T: float,
    rule,
    tol: float = 1e-8,
    simpson_n: int = 2048,
) -> ControlSolution:
    """Steer u0 to zero at time T with the control supported on the region.

    Solves W eta = -exp(-T mu) u0 and applies the spatially truncated
    control whose mode-space forcing is G exp(-(T-s) mu) eta. The terminal
    state is re-simulated with a Simpson-rule Duhamel integral at
    simpson_n >= 1000 nodes; a relative residual above tol raises
    ControlToleranceError carrying the achieved value.
    """
    if u0.cutoff_L != L:
        raise ValueError(f"initial state cutoff {u0.cutoff_L} does not match L = {L}")
    if simpson_n < 1000:
        raise ValueError(f"simpson_n must be >= 1000, got {simpson_n}")
    if simpson_n % 2:
        simpson_n += 1
    ctx = rule.ctx
    W = weighted_gramian(region, L, T, rule)
    G = gram(region, L, rule).entries
    mu = ha.eigenvalue_vector(ctx, L)

    target = np.exp(-T * mu) * u0.coeffs
    Lc, _ = _cholesky_with_shift(W)
    eta = -np.linalg.solve(Lc.T, np.linalg.solve(Lc, target))
    cost = math.sqrt(max(0.0, float(eta @ W @ eta)))

    def force(s):
        return G @ (np.exp(-(T - s) * mu) * eta)

    s_grid = np.linspace(0.0, T, simpson_n + 1)
    w_simp = np.ones(simpson_n + 1)
    w_simp[1:-1:2] = 4.0
    w_simp[2:-1:2] = 2.0
    w_simp *= T / simpson_n / 3.0
    E = np.exp(-np.outer(T - s_grid, mu))  # (n+1, dim)
    F = (E * eta) @ G  # G symmetric
    u_T = target + np.sum(w_simp[:, None] * E * F, axis=0)

    scale = float(np.linalg.norm(u0.coeffs))
    residual = float(np.linalg.norm(u_T)) / scale if scale > 0 else float(np.linalg.norm(u_T))
    if residual > tol:
        raise ControlToleranceError(
            f"terminal residual {residual:.3e} exceeds tolerance {tol:.3e}", residual
        )
    return ControlSolution(
        eta=ModeVector(ctx, L, eta),
        cost=cost,
        terminal_residual=residual,
        terminal_state=ModeVector(ctx, L, u_T),
        T=T,
        force=force,
    )


def cost_sweep(
    ctx: geo.SphereContext,
    gammas,
    L: int,
    T_grid,
    rule,
    tol: float = 1e-6,
    c2: float = 1.0,
) -> list[dict]:
    """Observability and worst-case control cost over caps and horizons.

    For each measure fraction gamma builds the cap of that fraction, and
    for each horizon T reports the observability constant, the implied c2,
    and the realized cost of controlling the extremal initial state.
    Rows carry keys d, R, gamma, a, L, T, C_obs, implied_c2, cost_sq_max,
    residual.
    """
    rows = []
    for gamma_target in gammas:
        if not (0.0 < gamma_target <= 1.0 / math.e):
            raise ValueError(
                f"sweep fractions must be in (0, 1/e] so |log gamma| >= 1, got {gamma_target}"
            )
        cap = geo.cap_for_measure_fraction(ctx, float(gamma_target))
        for T in T_grid:
            rep = observability_constant(
                cap, L, float(T), rule, gamma=float(gamma_target), a=cap.radius_a, c2=c2
            )
            u_star = extremal_initial_datum(rep)
            sol = hum_control(u_star, cap, L, float(T), rule, tol=tol)
            rows.append(
                {
                    "d": ctx.d,
                    "R": ctx.R,
                    "gamma": float(gamma_target),
                    "a": cap.radius_a,
                    "L": L,
                    "T": float(T),
                    "C_obs": rep.C_obs,
                    "implied_c2": rep.implied_c2,
                    "cost_sq_max": sol.cost**2 / u_star.norm**2,
                    "residual": sol.terminal_residual,
                }
            )
    return rows


@dataclass(eq=False)
class StageRecord:
    """One stage of the staged control: cutoff, time window, cost, residual."""

    cutoff: int
    t_start: float
    t_control: float
    t_free: float
    cost: float
    residual_after: float


@dataclass(eq=False)
class StagedControlSolution:
    """Concatenated control built from geometric time/cutoff stages."""

    stages: list
    total_cost: float
    terminal_residual: float
    single_shot_cost: float
    T: float
    force: object = field(repr=False)


def lebeau_robbiano_control(
    u0: ModeVector,
    region: geo.Region,
    T: float,
    rule,
    tol: float = 1e-6,
    L0: int = 1,
    simpson_n: int = 2048,
) -> StagedControlSolution:
    """Null control by alternating finite-dimensional control and free decay.

    The horizon splits into windows of length T * 2^{-(j+1)} plus a final
    slack window; stage j nulls the modes up to L_j = min(2^j L0, L_max) on
    the window's first half (HUM control of the L_j-truncated model, so
    forcing above L_j is out of model) and evolves freely on the second.
    The last stage reaches L_max = u0.cutoff_L, so within the truncated
    model the terminal state is zero up to simulation accuracy. Raises
    ControlToleranceError with the per-stage residual trace if the final
    relative residual exceeds tol.
    """
    if T <= 0:
        raise ValueError(f"horizon must be positive, got {T}")
    L_max = u0.cutoff_L
    ctx = u0.ctx
    mu = ha.eigenvalue_vector(ctx, L_max)

    cutoffs = []
    j = 0
    while True:
        Lj = min(L0 * 2**j, L_max)
        cutoffs.append(Lj)
        if Lj == L_max:
            break
        j += 1

    scale = u0.norm
    state = u0.coeffs.copy()
    t_cursor = 0.0
    stages: list[StageRecord] = []
    stage_controls = []
    for j, Lj in enumerate(cutoffs):
        dT = T * 2.0 ** (-(j + 1))
        half = 0.5 * dT
        dim_j = ha.basis_dimension(ctx, Lj)
        sub = ModeVector(ctx, Lj, state[:dim_j].copy())
        sol = hum_control(sub, region, Lj, half, rule, tol=math.inf, simpson_n=simpson_n)
        state[:dim_j] = sol.terminal_state.coeffs
        state[dim_j:] *= np.exp(-half * mu[dim_j:])
        state *= np.exp(-half * mu)
        stage_controls.append((t_cursor, half, dim_j, sol))
        t_cursor += dT
        residual = float(np.linalg.norm(state)) / scale if scale > 0 else 0.0
        stages.append(StageRecord(Lj, t_cursor - dT, half, half, sol.cost, residual))

    slack = T - t_cursor
    state *= np.exp(-slack * mu)
    terminal = float(np.linalg.norm(state)) / scale if scale > 0 else 0.0

    total_cost = math.sqrt(sum(s.cost**2 for s in stages))
    single = hum_control(u0, region, L_max, T, rule, tol=math.inf, simpson_n=simpson_n)

    def force(s):
        out = np.zeros(len(mu))
        for t0, half, dim_j, sol in stage_controls:
            if t0 <= s < t0 + half:
                out[:dim_j] = sol.force(s - t0)
                break
        return out

    if terminal > tol:
        raise ControlToleranceError(
            f"staged control residual {terminal:.3e} exceeds tolerance {tol:.3e}",
            terminal,
            trace=[s.residual_after for s in stages],
        )
    return StagedControlSolution(
        stages=stages,
        total_cost=total_cost,
        terminal_residual=terminal,
        single_shot_cost=single.cost,
        T=T,
        force=force,
    )


def observability_report_to_json(rep: ObservabilityReport) -> dict:
    return {
        "schema": SCHEMA,
        "L": rep.L,
        "T": rep.T,
        "region": geo.region_to_json(rep.region),
        "C_obs": rep.C_obs,
        "gamma": rep.gamma_used,
        "a": rep.scale_a,
        "implied_c2": rep.implied_c2,
        "paper_c2": rep.paper_c2,
        "paper_bound": rep.paper_bound,
        "d0": rep.d0,
        "d1": rep.d1,
        "lambda_min_w": rep.lambda_min_w,
        "cholesky_shift": rep.cholesky_shift,
        "extremal_g": rep.extremal_g.coeffs.tolist(),
    }


def control_to_json(sol: ControlSolution, ctx: geo.SphereContext) -> dict:
    return {
        "schema": SCHEMA,
        "d": ctx.d,
        "R": ctx.R,
        "L": sol.eta.cutoff_L,
        "T": sol.T,
        "eta": sol.eta.coeffs.tolist(),
        "cost": sol.cost,
        "terminal_residual": sol.terminal_residual,
    }
