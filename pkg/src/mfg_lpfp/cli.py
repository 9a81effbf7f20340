"""Run configuration, experiment orchestration, artifact emission.

Configuration format: flat ``key = value`` lines with dotted section keys
and ``#`` comments.  Recognized keys (defaults in parentheses):

    problem.name            os_example | control_example       [required]
    problem.drift_scale     os_example drift level (1.0)
    problem.kernel_weight   control_example crowd weight (10.0)
    problem.variance        initial-law variance (model default)
    grid.t_horizon          horizon (1.0)
    grid.n_t                time steps (model default)
    grid.n_s                state steps (model default)
    grid.x_min, grid.x_max  state bounds (model default)
    grid.n_a                action intervals, control only (4; n_a+1 actions)
    fp.iterations           fictitious-play steps (100)
    fp.method               lp | dp (dp)
    fp.early_stop_eps       optional exploitability threshold (off)
    fp.cfl_override         run despite a CFL failure (false)
    lp.residual_tol         equality residual tolerance (1e-9)
    lp.optimality_tol       reduced-cost tolerance (1e-10)
    output.dir              artifact directory (out)
    output.formats          any of csv,svg,json (all)

``run`` emits exploitability.csv, m_bar.csv, mu_bar.csv (+ control.csv for
control runs), SVG figures, and run.json (resolved config, summary, wall
times).  CSV outputs are deterministic byte-for-byte for a fixed config;
timings live in run.json only.

Exit codes: 0 success, 2 configuration error, 3 CFL failure, 4 solver
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, render
from .errors import CflError, ConfigError, GridError, LpError, MfgLpfpError, ModelError, SolverError
from .fictitious_play import extract_markov_control, loglog_slope, lpfp_run
from .grid import CflReport, GridSpec, build_grid, validate_cfl
from .lp import build_lp_control, build_lp_stopping, export_mps
from .measures import STOPPING
from .models import ModelSpec, builtin_model, builtin_names, precompute_reward_tables

_DEFAULT_GRIDS = {
    "os_example": {"n_t": 50, "n_s": 80},
    "control_example": {"n_t": 240, "n_s": 60},
}
_PROBLEM_PARAM_KEYS = ("drift_scale", "kernel_weight", "variance")
_FORMATS = ("csv", "svg", "json")


@dataclass
class RunConfig:
    problem_name: str
    problem_params: dict = field(default_factory=dict)
    t_horizon: float = 1.0
    n_t: int = 0
    n_s: int = 0
    x_min: float | None = None
    x_max: float | None = None
    n_a: int = 4
    iterations: int = 100
    method: str = "dp"
    early_stop_eps: float | None = None
    cfl_override: bool = False
    residual_tol: float = 1e-9
    optimality_tol: float = 1e-10
    export_path: str | None = None
    out_dir: str = "out"
    formats: tuple = _FORMATS

    def resolved_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["formats"] = list(self.formats)
        return d


def _parse_scalar(key: str, raw: str, line: int):
    if key in ("problem.name", "fp.method", "output.dir", "lp.export_path"):
        return raw
    if key == "output.formats":
        fmts = tuple(p.strip() for p in raw.split(",") if p.strip())
        bad = [f for f in fmts if f not in _FORMATS]
        if bad:
            raise ConfigError(f"line {line}: unknown output format(s) {bad}", line=line, field=key)
        return fmts
    if key in ("fp.cfl_override",):
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"line {line}: {key} expects a boolean, got {raw!r}", line=line, field=key)
    if key in ("grid.n_t", "grid.n_s", "grid.n_a", "fp.iterations"):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"line {line}: {key} expects an integer, got {raw!r}", line=line, field=key) from None
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"line {line}: {key} expects a number, got {raw!r}", line=line, field=key) from None


_KNOWN_KEYS = {
    "problem.name",
    *(f"problem.{p}" for p in _PROBLEM_PARAM_KEYS),
    "grid.t_horizon",
    "grid.n_t",
    "grid.n_s",
    "grid.x_min",
    "grid.x_max",
    "grid.n_a",
    "fp.iterations",
    "fp.method",
    "fp.early_stop_eps",
    "fp.cfl_override",
    "lp.residual_tol",
    "lp.optimality_tol",
    "lp.export_path",
    "output.dir",
    "output.formats",
}

_POSITIVE_KEYS = {
    "grid.t_horizon",
    "grid.n_t",
    "grid.n_s",
    "fp.iterations",
    "lp.residual_tol",
    "lp.optimality_tol",
}


def parse_config(path: str) -> RunConfig:
    """Parse and resolve a configuration file (defaults filled from the model)."""
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None

    raw: dict[str, tuple] = {}
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}", line=lineno)
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", line=lineno, field=key)
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", line=lineno, field=key)
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}", line=lineno, field=key)
        raw[key] = (_parse_scalar(key, value, lineno), lineno)

    if "problem.name" not in raw:
        raise ConfigError("missing required key problem.name", field="problem.name")
    name, name_line = raw["problem.name"]
    if name not in builtin_names():
        raise ConfigError(
            f"line {name_line}: unknown problem {name!r}; available: {builtin_names()}",
            line=name_line,
            field="problem.name",
        )

    for key in _POSITIVE_KEYS:
        if key in raw and not raw[key][0] > 0:
            raise ConfigError(f"line {raw[key][1]}: {key} must be positive", line=raw[key][1], field=key)

    params = {p: raw[f"problem.{p}"][0] for p in _PROBLEM_PARAM_KEYS if f"problem.{p}" in raw}
    try:
        model = builtin_model(name, **params)
    except ModelError as exc:
        raise ConfigError(str(exc), field="problem") from None

    cfg = RunConfig(problem_name=name, problem_params=params)
    cfg.t_horizon = raw.get("grid.t_horizon", (1.0, 0))[0]
    defaults = _DEFAULT_GRIDS[name]
    cfg.n_t = raw.get("grid.n_t", (defaults["n_t"], 0))[0]
    cfg.n_s = raw.get("grid.n_s", (defaults["n_s"], 0))[0]
    bounds = model.default_x_bounds(cfg.t_horizon)
    cfg.x_min = raw.get("grid.x_min", (bounds[0], 0))[0]
    cfg.x_max = raw.get("grid.x_max", (bounds[1], 0))[0]
    cfg.n_a = raw.get("grid.n_a", (4, 0))[0]
    if model.kind == STOPPING and "grid.n_a" in raw:
        raise ConfigError("grid.n_a applies only to control problems", line=raw["grid.n_a"][1], field="grid.n_a")
    if model.kind != STOPPING and cfg.n_a < 1:
        raise ConfigError("grid.n_a must be >= 1", field="grid.n_a")
    cfg.iterations = raw.get("fp.iterations", (100, 0))[0]
    cfg.method = raw.get("fp.method", ("dp", 0))[0]
    if cfg.method not in ("lp", "dp"):
        raise ConfigError(f"fp.method must be lp or dp, got {cfg.method!r}", field="fp.method")
    cfg.early_stop_eps = raw.get("fp.early_stop_eps", (None, 0))[0]
    cfg.cfl_override = raw.get("fp.cfl_override", (False, 0))[0]
    cfg.residual_tol = raw.get("lp.residual_tol", (1e-9, 0))[0]
    cfg.optimality_tol = raw.get("lp.optimality_tol", (1e-10, 0))[0]
    cfg.export_path = raw.get("lp.export_path", (None, 0))[0]
    cfg.out_dir = raw.get("output.dir", ("out", 0))[0]
    cfg.formats = raw.get("output.formats", (_FORMATS, 0))[0]
    return cfg


def instantiate(cfg: RunConfig) -> tuple[ModelSpec, GridSpec]:
    model = builtin_model(cfg.problem_name, **cfg.problem_params)
    actions = ()
    if model.kind != STOPPING:
        lo, hi = model.action_bounds
        actions = np.linspace(lo, hi, cfg.n_a + 1)
    try:
        grid = build_grid(cfg.t_horizon, cfg.n_t, cfg.x_min, cfg.x_max, cfg.n_s, actions)
    except GridError as exc:
        raise ConfigError(f"grid: {exc}", field="grid") from None
    return model, grid


@dataclass
class ValidationReport:
    ok: bool
    errors: list[str]
    config: RunConfig | None = None
    cfl: CflReport | None = None

    def render(self) -> str:
        lines = []
        if not self.ok:
            lines.append("config: FAIL")
            lines.extend(f"  {e}" for e in self.errors)
            return "\n".join(lines)
        lines.append("config: ok")
        for key, val in sorted(self.config.resolved_dict().items()):
            lines.append(f"  {key} = {val}")
        lines.append(f"  cfl = {self.cfl}")
        return "\n".join(lines)


def validate_config(path: str) -> ValidationReport:
    """Parse-only validation: resolved defaults plus CFL status, no run."""
    try:
        cfg = parse_config(path)
        model, grid = instantiate(cfg)
    except ConfigError as exc:
        return ValidationReport(ok=False, errors=[str(exc)])
    report = validate_cfl(grid, model)
    return ValidationReport(ok=True, errors=[], config=cfg, cfl=report)


def _fmt(v) -> str:
    if isinstance(v, float) and np.isnan(v):
        return "nan"
    return f"{v:.17g}"


class _ArtifactWriter:
    """Write files atomically: temp in the target dir, then rename."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir

    def write(self, name: str, text: str) -> None:
        tmp = os.path.join(self.out_dir, name + ".tmp")
        try:
            with open(tmp, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, os.path.join(self.out_dir, name))
        except BaseException:
            if os.path.exists(tmp):
                os.remove(tmp)
            raise


def run_experiment(cfg: RunConfig, progress=None) -> dict:
    """Execute the configured run and emit artifacts; returns the summary."""
    model, grid = instantiate(cfg)
    report = validate_cfl(grid, model)
    if not report.passed and not cfg.cfl_override:
        raise CflError(str(report))
    try:
        os.makedirs(cfg.out_dir, exist_ok=True)
        probe = os.path.join(cfg.out_dir, ".write-probe.tmp")
        with open(probe, "w") as fh:
            fh.write("")
        os.remove(probe)
    except OSError as exc:
        raise ConfigError(f"output directory {cfg.out_dir!r} is not writable: {exc}", field="output.dir") from None

    def callback(record, average, response):
        if progress is not None:
            progress(record)

    t_start = time.perf_counter()
    trace = lpfp_run(
        grid,
        model,
        cfg.iterations,
        method=cfg.method,
        early_stop_eps=cfg.early_stop_eps,
        cfl_override=cfg.cfl_override,
        callback=callback,
        lp_tol=cfg.residual_tol,
        lp_opt_tol=cfg.optimality_tol,
    )
    total_seconds = time.perf_counter() - t_start
    final = trace.final

    writer = _ArtifactWriter(cfg.out_dir)
    ts, xs = grid.t_nodes, grid.x_nodes
    if "csv" in cfg.formats:
        rows = ["N,eps_raw,eps_clamped,dm_step,w1_step,wtv_step"]
        rows += [
            f"{r.n},{_fmt(r.eps_raw)},{_fmt(r.eps_clamped)},{_fmt(r.dm_step)},{_fmt(r.w1_step)},{_fmt(r.wtv_step)}"
            for r in trace.rows
        ]
        writer.write("exploitability.csv", "\n".join(rows) + "\n")

        m_x = final.m_x
        rows = ["t,x,mass"]
        rows += [
            f"{_fmt(ts[i])},{_fmt(xs[j])},{_fmt(m_x[i, j])}" for i in range(grid.n_t) for j in range(grid.n_s + 1)
        ]
        writer.write("m_bar.csv", "\n".join(rows) + "\n")

        rows = ["t,x,mass"]
        rows += [
            f"{_fmt(ts[i])},{_fmt(xs[j])},{_fmt(final.mu[i, j])}"
            for i in range(grid.n_t + 1)
            for j in range(grid.n_s + 1)
        ]
        writer.write("mu_bar.csv", "\n".join(rows) + "\n")

        if model.kind != STOPPING:
            alpha = extract_markov_control(grid, final)
            in_game = final.m_x
            rows = ["t,x,alpha,in_game_mass"]
            rows += [
                f"{_fmt(ts[i])},{_fmt(xs[j])},{_fmt(alpha[i, j])},{_fmt(in_game[i, j])}"
                for i in range(grid.n_t)
                for j in range(grid.n_s + 1)
            ]
            writer.write("control.csv", "\n".join(rows) + "\n")

    if "svg" in cfg.formats:
        t_ext = (0.0, grid.t_horizon)
        x_ext = (grid.x_min, grid.x_max)
        writer.write("m_bar.svg", render.heatmap_svg(final.m_x, t_ext, x_ext, "occupation flow (state marginal)"))
        if model.kind == STOPPING:
            writer.write("mu_bar.svg", render.heatmap_svg(final.mu, t_ext, x_ext, "exit measure"))
        else:
            writer.write(
                "boundary_exit.svg",
                render.line_chart_svg(
                    [
                        ("exit at x_max", ts, final.mu[:, -1]),
                        ("exit at x_min", ts, final.mu[:, 0]),
                    ],
                    "boundary exit mass over time",
                    "t",
                    "mass",
                ),
            )
            writer.write(
                "terminal_slice.svg",
                render.line_chart_svg(
                    [("terminal exit mass", xs, final.mu[-1])], "terminal-time exit mass", "x", "mass"
                ),
            )
            alpha = extract_markov_control(grid, final)
            writer.write(
                "alpha.svg",
                render.heatmap_svg(alpha, t_ext, x_ext, "extracted Markov control", diverging=True),
            )

    slope = loglog_slope(trace, 10, len(trace.rows))
    summary = {
        "iterations": len(trace.rows),
        "final_eps_raw": trace.rows[-1].eps_raw,
        "final_eps_clamped": trace.rows[-1].eps_clamped,
        "sum_mu": float(final.mu.sum()),
        "loglog_slope_from_10": None if np.isnan(slope) else slope,
        "w1_step_exact": trace.rows[-1].w1_exact,
        "kernel_backend": _kernels.BACKEND,
        "timings_seconds": {
            "total": total_seconds,
            "per_iteration": [r.seconds for r in trace.rows],
        },
    }
    if "json" in cfg.formats:
        writer.write(
            "run.json",
            json.dumps({"config": cfg.resolved_dict(), "summary": summary}, indent=2, sort_keys=True) + "\n",
        )
    return summary


def export_lp(cfg: RunConfig, out_path: str) -> None:
    """Assemble the best-response LP at the initial guess and write MPS."""
    from .fictitious_play import initial_guess

    model, grid = instantiate(cfg)
    report = validate_cfl(grid, model)
    if not report.passed and not cfg.cfl_override:
        raise CflError(str(report))
    guess = initial_guess(grid, model)
    tables = precompute_reward_tables(model, grid, guess)
    if model.kind == STOPPING:
        program = build_lp_stopping(grid, model, guess, tables)
    else:
        program = build_lp_control(grid, model, guess, tables)
    export_mps(program, out_path)


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    if args.out is not None:
        cfg.out_dir = args.out
    if args.method is not None:
        cfg.method = args.method
    if args.iters is not None:
        if args.iters < 1:
            raise ConfigError("--iters must be >= 1")
        cfg.iterations = args.iters

    def progress(record):
        sys.stderr.write(f"\r[{record.n}/{cfg.iterations}] eps={record.eps_clamped:.6e}")
        sys.stderr.flush()

    summary = run_experiment(cfg, progress=progress)
    sys.stderr.write("\n")
    print(f"final exploitability: {summary['final_eps_clamped']:.6e} (raw {summary['final_eps_raw']:.6e})")
    print(f"artifacts written to {cfg.out_dir}")
    return 0


def _cmd_validate(args) -> int:
    report = validate_config(args.config)
    print(report.render())
    if not report.ok:
        return 2
    if not report.cfl.passed and not report.config.cfl_override:
        return 3
    return 0


def _cmd_export_lp(args) -> int:
    cfg = parse_config(args.config)
    out = args.out or cfg.export_path
    if not out:
        raise ConfigError("export-lp needs --out or lp.export_path")
    export_lp(cfg, out)
    print(f"wrote {out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mfg-lpfp", description="fictitious-play solver for mean-field games")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run fictitious play and emit artifacts")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="override output.dir")
    p_run.add_argument("--method", choices=("lp", "dp"), default=None, help="override fp.method")
    p_run.add_argument("--iters", type=int, default=None, help="override fp.iterations")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=_cmd_validate)

    p_exp = sub.add_parser("export-lp", help="assemble and write the MPS file without solving")
    p_exp.add_argument("--config", required=True)
    p_exp.add_argument("--out", default=None)
    p_exp.set_defaults(func=_cmd_export_lp)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CflError as exc:
        print(f"CFL failure: {exc}", file=sys.stderr)
        return 3
    except (SolverError, LpError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 4
    except MfgLpfpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
