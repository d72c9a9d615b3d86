"""Run configuration, deterministic initial data, output files and the CLI.

Config files are plain ``key = value`` text (``#`` starts a comment); flags
override file values.  Outputs per run: ``profile.csv`` (final x,u),
``kymograph.csv`` (header row "t" plus cell centers, one row per snapshot),
``manifest.json`` (resolved config, version, step statistics, final
diagnostics) and ``config.txt`` (re-emittable config).

Subcommands: ``run``, ``sweep``, ``validate``, ``dispersion``.  The default
output root is ``$ADHESION1D_OUT`` or ``./runs``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import detect_steady, diagnostics, dispersion_table, peak_census
from .discretization import AdhesionProblem, FluxBC, build_grid, precompute_weights
from .errors import ConfigError, IntegrationFailureError
from .integrator import IntegratorConfig, State, integrate
from .kernels import DomainKind, make_kernel, make_sampling_domain, validate_suitable

__all__ = [
    "RunConfig",
    "RunManifest",
    "parse_config",
    "emit_config",
    "make_initial_condition",
    "run",
    "sweep",
    "main",
]

log = logging.getLogger("adhesion1d")

_BC_NAMES = {
    "periodic": (DomainKind.PERIODIC, FluxBC.PERIODIC),
    "naive": (DomainKind.NAIVE, FluxBC.NEUMANN),
    "noflux": (DomainKind.NOFLUX, FluxBC.NEUMANN),
    "adhesive": (DomainKind.WALL_INTERACTION, FluxBC.NEUMANN),
    "repulsive": (DomainKind.WALL_INTERACTION, FluxBC.NEUMANN),
}


@dataclass
class RunConfig:
    """Reference defaults: L=5, 128 cells per unit, D=1, R=1, t_final=25,
    tolerance 1e-5 (applied to both the absolute and relative component of
    the step error norm), IC mean 1 with unit normal noise clipped at 0."""

    alpha: float
    L: float = 5.0
    n_per_unit: int = 128
    D: float = 1.0
    R: float = 1.0
    bc: str = "periodic"
    beta0: float = 0.0
    betaL: float = 0.0
    kernel: str = "uniform"
    h_kind: str = "identity"
    ic_mean: float = 1.0
    ic_noise: float = 1.0
    seed: int | None = None
    ic_file: str | None = None
    t_final: float = 25.0
    n_snapshots: int = 250
    output_times: tuple[float, ...] | None = None
    tol: float = 1e-5
    out_dir: str | None = None

    def validate(self) -> "RunConfig":
        if self.bc not in _BC_NAMES:
            raise ConfigError(f"bc: unknown boundary treatment {self.bc!r} "
                              f"(choose from {sorted(_BC_NAMES)})")
        for key in ("L", "D", "R", "t_final", "tol"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key}: must be positive, got {getattr(self, key)}")
        if self.alpha < 0:
            raise ConfigError(f"alpha: must be non-negative, got {self.alpha}")
        if self.n_per_unit < 8:
            raise ConfigError(f"n_per_unit: must be at least 8, got {self.n_per_unit}")
        if self.n_snapshots < 2:
            raise ConfigError(f"n_snapshots: must be at least 2, got {self.n_snapshots}")
        if self.bc not in ("adhesive", "repulsive") and (self.beta0 or self.betaL):
            raise ConfigError("beta0/betaL: wall strengths require bc=adhesive or bc=repulsive")
        if self.bc == "adhesive" and (self.beta0 < 0 or self.betaL < 0):
            raise ConfigError("beta0/betaL: bc=adhesive needs non-negative wall strengths")
        if self.bc == "repulsive" and (self.beta0 > 0 or self.betaL > 0):
            raise ConfigError("beta0/betaL: bc=repulsive needs non-positive wall strengths")
        if self.ic_noise < 0:
            raise ConfigError(f"ic_noise: must be non-negative, got {self.ic_noise}")
        if self.ic_noise > 0 and self.ic_file is None and self.seed is None:
            raise ConfigError("seed: required when the initial condition is noisy")
        return self


@dataclass
class RunManifest:
    config: dict
    version: str
    wall_clock_s: float
    stats: dict
    final_diagnostics: dict
    limiter: str = "koren"
    rng: str = "philox (numpy.random.Philox, counter-based)"
    clipped_cells: int = 0
    tolerance_note: str = "tol applies to both abs_tol and rel_tol of the weighted RMS error norm"


_CONFIG_KEYS = {f.name: f for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    f = _CONFIG_KEYS[key]
    raw = raw.strip()
    if raw.lower() in ("none", ""):
        return None
    try:
        if key == "output_times":
            return tuple(float(v) for v in raw.split(","))
        if f.type in ("int", "int | None"):
            return int(raw)
        if f.type in ("float", "float | None"):
            return float(raw)
        return raw
    except ValueError as e:
        raise ConfigError(f"{key}: cannot parse value {raw!r}") from e


def parse_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Read a key=value config file; apply overrides; validate.

    Unknown keys and type mismatches raise ConfigError naming the key.
    alpha has no default and must come from the file or the overrides.
    """
    values: dict = {}
    if path is not None:
        for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {ln}: expected 'key = value', got {line!r}")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{key}: unknown configuration key (line {ln})")
            values[key] = _coerce(key, raw)
    for key, val in (overrides or {}).items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{key}: unknown configuration key")
        if val is not None:
            values[key] = val
    if "alpha" not in values or values["alpha"] is None:
        raise ConfigError("alpha: required (adhesion strength has no default)")
    return RunConfig(**values).validate()


def emit_config(config: RunConfig) -> str:
    """Emit the config in the key=value format parse_config reads back."""
    lines = []
    for f in fields(RunConfig):
        val = getattr(config, f.name)
        if val is None:
            continue
        if f.name == "output_times":
            val = ",".join(repr(v) for v in val)
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{f.name} = {val}")
    return "\n".join(lines) + "\n"


def make_initial_condition(config: RunConfig, grid) -> tuple[State, int]:
    """Seeded initial density: mean + noise * xi, xi ~ N(0,1) from a Philox
    counter-based generator; negatives are clipped to zero and the clip
    count is reported.  File initial conditions must match the grid."""
    n = grid.n_cells
    if config.ic_file is not None:
        u = _read_profile(config.ic_file)
        if u.size != n:
            raise ConfigError(
                f"ic_file: expected {n} values to match the grid, got {u.size}"
            )
    else:
        u = np.full(n, config.ic_mean)
        if config.ic_noise > 0:
            rng = np.random.Generator(np.random.Philox(config.seed))
            u = u + config.ic_noise * rng.standard_normal(n)
    clipped = int(np.count_nonzero(u < 0))
    if clipped:
        log.info("clipped %d negative initial cells to zero", clipped)
        u = np.maximum(u, 0.0)
    m0 = float(grid.h * np.sum(u))
    return State(t=0.0, u=u, m0=m0), clipped


def _read_profile(path: str | Path) -> np.ndarray:
    rows = Path(path).read_text().strip().splitlines()
    start = 1 if rows and rows[0].lstrip().startswith("x") else 0
    vals = []
    for row in rows[start:]:
        parts = row.split(",")
        vals.append(float(parts[-1]))
    return np.array(vals)


def _assemble(config: RunConfig):
    grid = build_grid(config.L, config.n_per_unit, config.R)
    kernel = make_kernel(config.kernel, config.R, config.h_kind)
    domain_kind, flux_bc = _BC_NAMES[config.bc]
    domain = make_sampling_domain(
        domain_kind, config.L, config.R, beta0=config.beta0, betaL=config.betaL
    )
    weights = precompute_weights(grid, domain, kernel)
    problem = AdhesionProblem(grid, weights, config.D, config.alpha, flux_bc)
    return grid, kernel, domain, weights, problem


def _output_times(config: RunConfig) -> np.ndarray:
    if config.output_times is not None:
        return np.asarray(config.output_times, dtype=float)
    return np.linspace(0.0, config.t_final, config.n_snapshots)


def _write_outputs(out: Path, grid, trajectory: list[State], manifest: RunManifest,
                   config: RunConfig) -> None:
    out.mkdir(parents=True, exist_ok=True)
    final = trajectory[-1]
    with open(out / "profile.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "u"])
        for x, u in zip(grid.centers, final.u):
            w.writerow([f"{x:.17g}", f"{u:.17g}"])
    with open(out / "kymograph.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"{x:.17g}" for x in grid.centers])
        for s in trajectory:
            w.writerow([f"{s.t:.17g}"] + [f"{v:.17g}" for v in s.u])
    (out / "manifest.json").write_text(json.dumps(asdict(manifest), indent=2) + "\n")
    (out / "config.txt").write_text(emit_config(config))


def run(config: RunConfig, out_dir: str | Path | None = None) -> tuple[RunManifest, list[State]]:
    """Execute one simulation and write its output tree.

    Returns the manifest and the trajectory; raises IntegrationFailureError
    if the solver cannot reach t_final.
    """
    config = config.validate()
    out = Path(out_dir if out_dir is not None else _default_out(config))
    grid, kernel, domain, weights, problem = _assemble(config)
    state0, clipped = make_initial_condition(config, grid)
    int_cfg = IntegratorConfig(
        rel_tol=config.tol,
        abs_tol=config.tol,
        t_final=config.t_final,
        output_times=_output_times(config),
    )
    t0 = time.perf_counter()
    trajectory, stats = integrate(state0, problem.rhs, int_cfg, jac_fn=problem.jacobian)
    wall = time.perf_counter() - t0
    manifest = RunManifest(
        config=asdict(config),
        version=__version__,
        wall_clock_s=wall,
        stats=stats.as_dict(),
        final_diagnostics=diagnostics(trajectory[-1], config.L),
        clipped_cells=clipped,
    )
    _write_outputs(out, grid, trajectory, manifest, config)
    return manifest, trajectory


def _default_out(config: RunConfig) -> Path:
    """An explicit out_dir is the run directory itself; otherwise a named
    directory is created under $ADHESION1D_OUT (default ./runs)."""
    if config.out_dir:
        return Path(config.out_dir)
    root = Path(os.environ.get("ADHESION1D_OUT", "runs"))
    return root / f"{config.bc}_alpha{config.alpha:g}_seed{config.seed}"


def sweep(
    base: RunConfig, alphas: list[float], seeds: list[int], out_root: str | Path | None = None
) -> list[dict]:
    """Run every (alpha, seed) combination; failures are recorded and the
    sweep continues.  Returns the summary table that is also written to
    ``summary.csv`` in the sweep root."""
    if not alphas:
        raise ConfigError("alpha: sweep needs a non-empty list of alpha values")
    if not seeds:
        raise ConfigError("seed: sweep needs a non-empty list of seeds")
    root = Path(out_root if out_root is not None
                else (base.out_dir or os.environ.get("ADHESION1D_OUT", "runs")))
    rows = []
    for alpha in alphas:
        for seed in seeds:
            cfg = replace(base, alpha=alpha, seed=seed)
            run_dir = root / f"{cfg.bc}_alpha{alpha:g}_seed{seed}"
            row = {"alpha": alpha, "seed": seed, "dir": str(run_dir), "status": "ok",
                   "peaks": None, "left_half_peak": None, "right_half_peak": None,
                   "settling_time": None, "u_left": None, "u_right": None}
            try:
                manifest, trajectory = run(cfg, out_dir=run_dir)
            except (IntegrationFailureError, ConfigError) as e:
                row["status"] = f"failed: {e}"
                rows.append(row)
                continue
            final = trajectory[-1]
            grid_x = (np.arange(final.u.size) + 0.5) * cfg.L / final.u.size
            census = peak_census(final.u, 0.1, x=grid_x, periodic=(cfg.bc == "periodic"),
                                 wall_layer=0.5 * cfg.R)
            steady, t_settle = detect_steady(trajectory)
            row.update(
                peaks=census.count,
                left_half_peak=census.left_half_peak,
                right_half_peak=census.right_half_peak,
                settling_time=t_settle if steady else None,
                u_left=float(final.u[0]),
                u_right=float(final.u[-1]),
            )
            rows.append(row)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        w.writeheader()
        w.writerows(rows)
    return rows


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adhesion1d",
                                description="1D non-local cell adhesion solver")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", type=str, default=None, help="key=value config file")
        sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--bc", choices=sorted(_BC_NAMES), default=None)
        sp.add_argument("--beta", type=float, default=None,
                        help="wall strength for both walls (adhesive/repulsive bc)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--tf", type=float, default=None)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--L", type=float, default=None)
        sp.add_argument("--n-per-unit", type=int, default=None)
        sp.add_argument("--D", type=float, default=None)
        sp.add_argument("--R", type=float, default=None)
        sp.add_argument("--kernel", choices=["uniform", "tent"], default=None)
        sp.add_argument("--ic-mean", type=float, default=None)
        sp.add_argument("--ic-noise", type=float, default=None)
        sp.add_argument("--ic-file", type=str, default=None)

    sp_run = sub.add_parser("run", help="single simulation")
    add_common(sp_run)

    sp_sweep = sub.add_parser("sweep", help="alpha x seed sweep")
    add_common(sp_sweep)
    sp_sweep.add_argument("--alphas", type=str, required=True,
                          help="comma-separated alpha values")
    sp_sweep.add_argument("--seeds", type=str, required=True,
                          help="comma-separated seeds")

    sp_val = sub.add_parser("validate", help="check a sampling domain's suitability")
    sp_val.add_argument("--bc", choices=sorted(_BC_NAMES), required=True)
    sp_val.add_argument("--L", type=float, default=5.0)
    sp_val.add_argument("--R", type=float, default=1.0)
    sp_val.add_argument("--beta", type=float, default=0.0)

    sp_disp = sub.add_parser("dispersion", help="print bifurcation values alpha_n")
    sp_disp.add_argument("--L", type=float, default=5.0)
    sp_disp.add_argument("--D", type=float, default=1.0)
    sp_disp.add_argument("--R", type=float, default=1.0)
    sp_disp.add_argument("--ubar", type=float, default=1.0)
    sp_disp.add_argument("--kernel", choices=["uniform", "tent"], default="uniform")
    sp_disp.add_argument("--n-max", type=int, default=3)
    return p


def _overrides_from_args(args) -> dict:
    ov = {
        "alpha": args.alpha,
        "bc": args.bc,
        "seed": args.seed,
        "t_final": args.tf,
        "tol": args.tol,
        "L": args.L,
        "n_per_unit": args.n_per_unit,
        "D": args.D,
        "R": args.R,
        "kernel": args.kernel,
        "ic_mean": args.ic_mean,
        "ic_noise": args.ic_noise,
        "ic_file": args.ic_file,
        "out_dir": args.out,
    }
    if args.beta is not None:
        ov["beta0"] = args.beta
        ov["betaL"] = args.beta
    return {k: v for k, v in ov.items() if v is not None}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = _build_parser().parse_args(argv)

    if args.command == "dispersion":
        kernel = make_kernel(args.kernel, args.R)
        for pt in dispersion_table(args.L, args.D, args.ubar, kernel, args.n_max):
            print(f"alpha_{pt.mode_index} = {pt.alpha:.17g}   (k = {pt.k:.17g})")
        return 0

    if args.command == "validate":
        kind, _ = _BC_NAMES[args.bc]
        beta = args.beta if kind is DomainKind.WALL_INTERACTION else 0.0
        domain = make_sampling_domain(kind, args.L, args.R, beta0=beta, betaL=beta)
        report = validate_suitable(domain)
        print(f"suitable: {report.suitable}")
        print(f"no-flux capable: {report.no_flux_capable}")
        for v in report.violations:
            print(f"violation: {v}")
        return 0 if report.suitable else 1

    overrides = _overrides_from_args(args)
    if args.command == "sweep":
        alphas = [float(v) for v in args.alphas.split(",") if v.strip()]
        seeds = [int(v) for v in args.seeds.split(",") if v.strip()]
        if not alphas or not seeds:
            print("config error: sweep needs non-empty --alphas and --seeds", file=sys.stderr)
            return 2
        overrides.setdefault("alpha", alphas[0])
        overrides.setdefault("seed", seeds[0])

    try:
        config = parse_config(args.config, overrides)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    if args.command == "run":
        try:
            manifest, _ = run(config)
        except IntegrationFailureError as e:
            print(f"integration failed: {e}", file=sys.stderr)
            return 1
        except OSError as e:
            print(f"cannot write outputs: {e}", file=sys.stderr)
            return 1
        print(json.dumps(manifest.stats, indent=2))
        return 0

    if args.command == "sweep":
        try:
            rows = sweep(config, alphas, seeds)
        except ConfigError as e:
            print(f"config error: {e}", file=sys.stderr)
            return 2
        failures = [r for r in rows if r["status"] != "ok"]
        for r in rows:
            print(f"alpha={r['alpha']:g} seed={r['seed']} status={r['status']} "
                  f"peaks={r['peaks']}")
        return 0 if not failures else 1

    return 2  # pragma: no cover
