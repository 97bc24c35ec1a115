"""Command-line front end: reproducible experiments over all subsystems.

Subcommands
-----------
polar-check   polar-coordinate integration against the product rule
turan-fuzz    seeded exponential-sum sup-bound corpus
local-lemma   seeded cap-local inequality corpus
cover         build and verify a cap cover
thickness     grid thickness estimate of a region
spectral      sharp-constant sweep over degrees
observe       observability constant at one cutoff/horizon
control       HUM null control plus the staged scheme
sweep         observability/cost table over cap fractions and horizons

Exit codes: 0 all contracts met, 1 an invariant or inequality check
failed (JSON diagnostics on stderr), 2 invalid input. Reports embed the
fully resolved configuration; identical config and seed give identical
bytes. The CAPLIGHT_THREADS environment variable (0 = auto) is recorded
in the provenance; all computations are deterministic regardless of it.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys

import numpy as np

from . import concentration as conc
from . import geometry as geo
from . import harmonics as ha
from . import heat_control as hc
from . import quadrature as quad
from . import turan

SCHEMA = "caplight/v1"


class ConfigError(ValueError):
    pass


@dataclasses.dataclass
class ExperimentConfig:
    """Resolved experiment parameters; unknown config keys are rejected."""

    d: int = 3
    R: float = 1.0
    region: dict | None = None
    degree: int | None = None
    cutoff: int | None = None
    T: float | None = None
    T_grid: list | None = None
    gamma_scale: float | None = None
    gammas: list | None = None
    quad_degree: int | None = None
    seed: int = 0
    seeds: list | None = None
    trials: int | None = None
    tol: float | None = None
    grid_n: int = 256
    out: str | None = None
    format: str = "json"
    threads: int = 0

    @classmethod
    def load(cls, path: str | None, args: argparse.Namespace) -> "ExperimentConfig":
        data: dict = {}
        if path:
            with open(path) as fh:
                data = json.load(fh)
            known = {f.name for f in dataclasses.fields(cls)}
            unknown = set(data) - known
            if unknown:
                raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        for name in ("d", "R", "degree", "cutoff", "T", "gamma_scale", "quad_degree",
                     "seed", "trials", "out", "format", "tol"):
            val = getattr(args, name.replace("-", "_"), None)
            if val is not None:
                setattr(cfg, name, val)
        if getattr(args, "region", None) is not None:
            raw = args.region
            if os.path.exists(raw):
                with open(raw) as fh:
                    cfg.region = json.load(fh)
            else:
                try:
                    cfg.region = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"--region is neither a file nor valid JSON: {exc}")
        env_threads = os.environ.get("CAPLIGHT_THREADS")
        if env_threads is not None:
            try:
                cfg.threads = int(env_threads)
            except ValueError:
                raise ConfigError(f"CAPLIGHT_THREADS must be an integer, got {env_threads!r}")
        if cfg.format not in ("json", "csv"):
            raise ConfigError(f"format must be 'json' or 'csv', got {cfg.format!r}")
        if cfg.d not in (2, 3):
            raise ConfigError(f"dimension must be 2 or 3, got {cfg.d}")
        if not cfg.R > 0:
            raise ConfigError(f"radius must be positive, got {cfg.R}")
        return cfg

    def ctx(self) -> geo.SphereContext:
        return geo.SphereContext(self.d, self.R)

    def resolved_region(self, ctx: geo.SphereContext) -> geo.Region:
        if self.region is None:
            return geo.FullSphere()
        return geo.region_from_json(self.region, ctx)

    def provenance(self) -> dict:
        return dataclasses.asdict(self)


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _emit(cfg: ExperimentConfig, command: str, payload: dict, rows: list[dict] | None = None) -> None:
    """Write the report as JSON (payload) or CSV (rows) to out or stdout."""
    if cfg.format == "csv" and rows is not None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if rows:
            header = list(rows[0].keys())
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(row[k]) for k in header])
        text = f"# schema={SCHEMA} command={command} config={json.dumps(cfg.provenance(), sort_keys=True)}\n"
        text += buf.getvalue()
    else:
        report = {
            "schema": SCHEMA,
            "command": command,
            "config": cfg.provenance(),
            "results": payload,
        }
        if rows is not None:
            report["rows"] = rows
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fail(command: str, reason: str, **extra) -> int:
    diag = {"schema": SCHEMA, "command": command, "status": "fail", "reason": reason}
    diag.update(extra)
    print(json.dumps(diag, sort_keys=True), file=sys.stderr)
    return 1


# ---------------------------------------------------------------------------
# subcommand implementations


def _cmd_polar_check(cfg: ExperimentConfig) -> int:
    ctx = cfg.ctx()
    degree = cfg.degree if cfg.degree is not None else 8
    trials = cfg.trials if cfg.trials is not None else 10
    rule = quad.sphere_rule(ctx, max(2 * degree, cfg.quad_degree or 0))
    north = np.zeros(ctx.d)
    north[-1] = ctx.R
    worst = 0.0
    for i in range(trials):
        f = ha.random_poly(degree, cfg.seed + i, ctx)
        ref = quad.integrate(rule, lambda pts: ha.eval_poly(f, pts))
        val = quad.polar_integrate(north, ctx, lambda pts: ha.eval_poly(f, pts),
                                   n_t=512, n_dir=256)
        scale = max(1.0, abs(ref))
        worst = max(worst, abs(val - ref) / scale)
    payload = {"max_discrepancy": worst, "trials": trials, "degree": degree}
    _emit(cfg, "polar-check", payload)
    if worst > 1e-6:
        return _fail("polar-check", f"discrepancy {worst:.3e} exceeds 1e-6")
    return 0


def _cmd_turan_fuzz(cfg: ExperimentConfig) -> int:
    trials = cfg.trials if cfg.trials is not None else 500
    if cfg.seeds is not None:
        reports = []
        for s in cfg.seeds:
            reports.extend(turan.run_nazarov_trials(1, int(s)))
    else:
        reports = turan.run_nazarov_trials(trials, cfg.seed)
    bad = [i for i, r in enumerate(reports) if not r.holds]
    payload = {
        "trials": len(reports),
        "failures": bad,
        "max_ratio": max(r.lhs / r.rhs_bound for r in reports),
    }
    _emit(cfg, "turan-fuzz", payload)
    if bad:
        return _fail("turan-fuzz", f"{len(bad)} instances violated the sup bound", indices=bad)
    return 0


def _cmd_local_lemma(cfg: ExperimentConfig) -> int:
    ctx = cfg.ctx()
    trials = cfg.trials if cfg.trials is not None else 100
    degree = cfg.degree if cfg.degree is not None else 6
    rule = quad.sphere_rule(ctx, max(2 * degree, cfg.quad_degree or 24))
    reports = turan.run_local_lemma_trials(trials, cfg.seed, ctx, rule, max_degree=degree)
    bad = [i for i, r in enumerate(reports) if not r.holds]
    peaks = [i for i, r in enumerate(reports) if not r.peak_beats_mean]
    payload = {
        "trials": trials,
        "failures": bad,
        "peak_failures": peaks,
        "min_margin": min(r.margin for r in reports),
    }
    _emit(cfg, "local-lemma", payload)
    if bad or peaks:
        return _fail("local-lemma", "cap-local inequality violated", indices=bad + peaks)
    return 0


def _cmd_cover(cfg: ExperimentConfig) -> int:
    ctx = cfg.ctx()
    a = cfg.gamma_scale if cfg.gamma_scale is not None else 0.1 * ctx.R
    try:
        cover = geo.build_cap_cover(ctx, a)
    except geo.CoverageError as exc:
        return _fail("cover", str(exc))
    payload = {
        "a": a,
        "n_caps": len(cover.caps),
        "kappa": cover.multiplicity_kappa,
        "bound": geo.cover_multiplicity_bound(ctx.d),
        "verification_grid_n": cover.verification_grid_n,
    }
    _emit(cfg, "cover", payload)
    return 0


def _cmd_thickness(cfg: ExperimentConfig) -> int:
    ctx = cfg.ctx()
    region = cfg.resolved_region(ctx)
    a = cfg.gamma_scale if cfg.gamma_scale is not None else 0.25 * ctx.R
    rule = quad.sphere_rule(ctx, cfg.quad_degree or 48)
    rep = geo.thickness(region, a, cfg.grid_n, rule)
    comparison = geo.covering_comparison(region, a, rule)
    payload = {
        "a": a,
        "gamma_estimate": rep.gamma_estimate,
        "grid_resolution": rep.grid_resolution,
        "worst_cap_center": rep.worst_cap.center.tolist(),
        "kappa": comparison.kappa,
        "measure_fraction": comparison.measure_fraction,
        "covering_inequality_ok": comparison.satisfied,
    }
    _emit(cfg, "thickness", payload)
    if not comparison.satisfied:
        return _fail("thickness", "covering comparison inequality violated")
    return 0


def _cmd_spectral(cfg: ExperimentConfig) -> int:
    ctx = cfg.ctx()
    region = cfg.resolved_region(ctx)
    n_max = cfg.degree if cfg.degree is not None else 6
    rule = quad.sphere_rule(ctx, cfg.quad_degree or max(2 * n_max, 48))
    a = cfg.gamma_scale if cfg.gamma_scale is not None else ctx.R
    gamma = geo.thickness(region, a, cfg.grid_n, rule).gamma_estimate
    rows = []
    prev = 0.0
    monotone = True
    for N in range(n_max + 1):
        try:
            rep = conc.sharp_constant(region, N, rule, gamma=gamma, a=a)
        except conc.DegenerateGramError as exc:
            return _fail("spectral", str(exc), N=N, lambda_min=exc.lambda_min)
        rows.append(
            {
                "d": ctx.d, "R": ctx.R, "N": N, "q": 2.0, "gamma": gamma, "a": a,
                "C_star": rep.C_star, "implied_c1": rep.implied_c1,
                "lambda_min": rep.lambda_min,
            }
        )
        if rep.C_star < prev * (1 - 1e-9):
            monotone = False
        prev = rep.C_star
    payload = {"gamma": gamma, "monotone_in_N": monotone}
    _emit(cfg, "spectral", payload, rows=rows)
    if not monotone or any(r["C_star"] < 1 - 1e-9 for r in rows):
        return _fail("spectral", "sharp-constant invariants violated")
    return 0


def _cmd_observe(cfg: ExperimentConfig) -> int:
    ctx = cfg.ctx()
    region = cfg.resolved_region(ctx)
    L = cfg.cutoff if cfg.cutoff is not None else 6
    T = cfg.T if cfg.T is not None else 1.0
    rule = quad.sphere_rule(ctx, cfg.quad_degree or max(2 * L, 48))
    try:
        rep = hc.observability_constant(region, L, T, rule)
    except hc.SingularGramianError as exc:
        return _fail("observe", str(exc))
    g = rep.extremal_g.coeffs
    mu = ha.eigenvalue_vector(ctx, L)
    quotient = float((g * np.exp(-2 * T * mu)) @ g / (g @ rep.gramian @ g))
    consistent = abs(quotient - rep.C_obs) <= 1e-8 * rep.C_obs
    payload = hc.observability_report_to_json(rep)
    payload["rayleigh_consistent"] = consistent
    _emit(cfg, "observe", payload)
    if not consistent:
        return _fail("observe", "extremal quotient does not reproduce C_obs")
    return 0


def _cmd_control(cfg: ExperimentConfig) -> int:
    ctx = cfg.ctx()
    region = cfg.resolved_region(ctx)
    L = cfg.cutoff if cfg.cutoff is not None else 6
    T = cfg.T if cfg.T is not None else 1.0
    tol = cfg.tol if cfg.tol is not None else 1e-8
    rule = quad.sphere_rule(ctx, cfg.quad_degree or max(2 * L, 48))
    rng = np.random.default_rng(cfg.seed)
    u0 = hc.ModeVector(ctx, L, rng.standard_normal(ha.basis_dimension(ctx, L)))
    try:
        sol = hc.hum_control(u0, region, L, T, rule, tol=tol)
        staged = hc.lebeau_robbiano_control(u0, region, T, rule, tol=max(tol, 1e-6))
    except (hc.SingularGramianError, hc.ControlToleranceError) as exc:
        extra = {"residual": getattr(exc, "residual", None)}
        return _fail("control", str(exc), **extra)
    payload = {
        "hum": hc.control_to_json(sol, ctx),
        "staged": {
            "total_cost": staged.total_cost,
            "terminal_residual": staged.terminal_residual,
            "single_shot_cost": staged.single_shot_cost,
            "stage_residuals": [s.residual_after for s in staged.stages],
            "stage_cutoffs": [s.cutoff for s in staged.stages],
        },
    }
    _emit(cfg, "control", payload)
    return 0


def _cmd_sweep(cfg: ExperimentConfig) -> int:
    ctx = cfg.ctx()
    L = cfg.cutoff if cfg.cutoff is not None else 4
    gammas = cfg.gammas if cfg.gammas is not None else [0.02, 0.05]
    T_grid = cfg.T_grid if cfg.T_grid is not None else [0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
    rule = quad.sphere_rule(ctx, cfg.quad_degree or max(2 * L, 48))
    try:
        rows = hc.cost_sweep(ctx, gammas, L, T_grid, rule,
                             tol=cfg.tol if cfg.tol is not None else 1e-4)
    except (hc.SingularGramianError, hc.ControlToleranceError, ValueError) as exc:
        return _fail("sweep", str(exc))
    _emit(cfg, "sweep", {"n_rows": len(rows)}, rows=rows)
    return 0


_COMMANDS = {
    "polar-check": _cmd_polar_check,
    "turan-fuzz": _cmd_turan_fuzz,
    "local-lemma": _cmd_local_lemma,
    "cover": _cmd_cover,
    "thickness": _cmd_thickness,
    "spectral": _cmd_spectral,
    "observe": _cmd_observe,
    "control": _cmd_control,
    "sweep": _cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="caplight", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--d", type=int, default=None)
        p.add_argument("--R", type=float, default=None)
        p.add_argument("--region", type=str, default=None,
                       help="path to a region JSON file, or inline JSON")
        p.add_argument("--degree", type=int, default=None)
        p.add_argument("--cutoff", type=int, default=None)
        p.add_argument("--T", type=float, default=None)
        p.add_argument("--gamma-scale", dest="gamma_scale", type=float, default=None)
        p.add_argument("--quad-degree", dest="quad_degree", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--format", type=str, default=None, choices=("json", "csv"))
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config, args)
    except (ConfigError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"schema": SCHEMA, "status": "invalid", "reason": str(exc)}),
              file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](cfg)
    except (ValueError, geo.CoverageError) as exc:
        print(json.dumps({"schema": SCHEMA, "status": "invalid", "reason": str(exc)}),
              file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
