"""Command-line front end.

Exit codes: 0 ok, 1 configuration error, 2 infeasible initial condition,
3 numerical failure, 4 an asserted report invariant failed (the report is
still written).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis
from .dynamics import estimate_lipschitz, estimate_monotonicity
from .errors import InfeasibleError, NumericalError
from .integrator import bounded_solution, catch_up, richardson_order, velocity_bound
from .io import dumps, series_csv, write_atomic
from .scenarios import REGISTRY, get_scenario

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERIC, EXIT_ASSERT = 0, 1, 2, 3, 4

AVERAGED_OF = {"example2": "example2_averaged"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario_id: str = "example1"
    eps: Optional[float] = None
    h: Optional[float] = None
    t_start: Optional[float] = None
    t_end: Optional[float] = None
    seed: int = 0
    output_dir: str = "out"
    x0: Optional[list] = None
    window: Optional[list] = None
    eps_list: Optional[list] = None
    tol: Optional[float] = None
    alpha: Optional[float] = None
    starts: Optional[list] = None
    s_range: Optional[list] = None
    s_grid: Optional[float] = None
    t_grid: Optional[float] = None
    target: str = "set"
    h_list: Optional[list] = None
    samples: int = 10_000

    def validate(self):
        if self.scenario_id not in REGISTRY:
            raise ConfigError(f"unknown scenario {self.scenario_id!r}")
        if self.h is not None and not self.h > 0:
            raise ConfigError("step must be positive")
        if self.t_start is not None and self.t_end is not None and not self.t_end > self.t_start:
            raise ConfigError("t_end must exceed t_start")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        return self


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"bad number list {text!r}") from e


def _points(text: str) -> list:
    return [_floats(p) for p in text.split(";") if p.strip()]


FLAG_MAP = {
    "scenario": ("scenario_id", str), "eps": ("eps", float), "step": ("h", float),
    "t_start": ("t_start", float), "t_end": ("t_end", float), "window": ("window", _floats),
    "eps_list": ("eps_list", _floats), "tol": ("tol", float), "seed": ("seed", int),
    "out": ("output_dir", str), "x0": ("x0", _floats), "alpha": ("alpha", float),
    "starts": ("starts", _points), "s_range": ("s_range", _floats), "s_grid": ("s_grid", float),
    "t_grid": ("t_grid", float), "target": ("target", str), "h_list": ("h_list", _floats),
    "samples": ("samples", int),
}


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the configuration code, not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sweepsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("simulate", "stability", "response", "average", "almost-period", "order"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
        sp.add_argument("--scenario")
        sp.add_argument("--eps")
        sp.add_argument("--step")
        sp.add_argument("--t-start", dest="t_start")
        sp.add_argument("--t-end", dest="t_end")
        sp.add_argument("--window", help="t0,t1")
        sp.add_argument("--eps-list", dest="eps_list", help="comma-separated")
        sp.add_argument("--tol")
        sp.add_argument("--seed")
        sp.add_argument("--out")
        sp.add_argument("--x0", help="comma-separated initial state")
        sp.add_argument("--alpha", help="declared monotonicity constant")
        sp.add_argument("--starts", help="initial states separated by ';'")
        sp.add_argument("--s-range", dest="s_range", help="s0,s1")
        sp.add_argument("--s-grid", dest="s_grid")
        sp.add_argument("--t-grid", dest="t_grid")
        sp.add_argument("--target", help="set or trajectory")
        sp.add_argument("--h-list", dest="h_list", help="comma-separated, decreasing")
        sp.add_argument("--samples")
    sub.add_parser("list-scenarios")
    return p


def load_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config file: {e}") from e
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(data)
    for flag, (key, conv) in FLAG_MAP.items():
        raw = getattr(args, flag, None)
        if raw is not None:
            try:
                values[key] = conv(raw)
            except ValueError as e:
                raise ConfigError(f"bad value for --{flag.replace('_', '-')}: {raw!r}") from e
    return RunConfig(**values).validate()


def scenario_from(cfg: RunConfig, **extra):
    kw = dict(eps=cfg.eps, h=cfg.h, t_start=cfg.t_start, t_end=cfg.t_end, x0=cfg.x0)
    kw.update(extra)
    return get_scenario(cfg.scenario_id, **kw)


def _alpha_for(s, cfg: RunConfig) -> float:
    if cfg.alpha is not None:
        return cfg.alpha
    rng = np.random.default_rng(cfg.seed)
    a = estimate_monotonicity(s.field, s.field.eps0, s.moving_set.bound_M,
                              (s.t_start, s.t_end), cfg.samples, rng)
    return a - 0.05


def _echo(s) -> dict:
    return {"name": s.name, "eps": s.eps, "x0": s.x0, "t_start": s.t_start, "t_end": s.t_end,
            "h": s.h, "n_steps": s.n_steps, "L_C": s.moving_set.lipschitz_L_C,
            "M": s.moving_set.bound_M, "eps0": s.field.eps0}


def _table(rows: list[tuple]) -> str:
    width = max(len(str(r[0])) for r in rows)
    return "\n".join(f"{str(k):<{width}}  {v}" for k, v in rows)


def cmd_simulate(cfg: RunConfig) -> int:
    s = scenario_from(cfg)
    traj = catch_up(s)
    rng = np.random.default_rng(cfg.seed)
    window = (s.t_start, s.t_end)
    alpha = estimate_monotonicity(s.field, s.eps, s.moving_set.bound_M, window, cfg.samples, rng)
    L_x, L_t = estimate_lipschitz(s.field, s.eps, s.moving_set.bound_M, window, cfg.samples, rng)
    out = Path(cfg.output_dir)
    write_atomic(out / "trajectory.csv", traj.to_csv())
    meta = {"scenario": _echo(s), "seed": cfg.seed,
            "constants": {"alpha_hat": alpha, "L_x_hat": L_x, "L_t_hat": L_t,
                          "M": s.moving_set.bound_M, "velocity_bound": velocity_bound(traj)}}
    write_atomic(out / "meta.json", dumps(meta))
    print(_table([("scenario", s.name), ("steps", s.n_steps), ("x(t_end)", traj.states[-1]),
                  ("alpha_hat", f"{alpha:.6g}"), ("L_x_hat", f"{L_x:.6g}"),
                  ("L_t_hat", f"{L_t:.6g}")]))
    return EXIT_OK


def cmd_stability(cfg: RunConfig) -> int:
    s = scenario_from(cfg)
    if cfg.starts:
        a, b = cfg.starts[0], cfg.starts[1]
    else:
        snap = s.moving_set(s.t_start)
        e = np.zeros(s.x0.shape[0])
        e[0] = 1.0
        a, b = snap.support_points(-e[None])[0], snap.support_points(e[None])[0]
    alpha = _alpha_for(s, cfg)
    rep = analysis.incremental_decay(s, a, b, alpha)
    out = Path(cfg.output_dir)
    write_atomic(out / "stability.json", dumps(rep))
    write_atomic(out / "gap.csv", series_csv(["t", "gap"], rep.gap_samples))
    print(_table([("fitted_rate", rep.fitted_rate), ("r_squared", rep.r_squared),
                  ("alpha_declared", alpha), ("reliable", rep.reliable),
                  ("gronwall_satisfied", rep.gronwall_satisfied)]))
    return EXIT_OK if rep.gronwall_satisfied else EXIT_ASSERT


def _response_rows(rep) -> list:
    rows = [("eps", "sup_gap / bound")]
    for e, g, b in zip(rep.eps_values, rep.sup_gaps, rep.bound_values):
        rows.append((e, f"{g:.6g} / {b:.6g}" if b is not None else f"{g:.6g}"))
    return rows


def cmd_response(cfg: RunConfig) -> int:
    if not cfg.eps_list or not cfg.window:
        raise ConfigError("response needs --eps-list and --window")
    s = scenario_from(cfg, t_end=cfg.t_end if cfg.t_end is not None else cfg.window[1])
    alpha = _alpha_for(s, cfg)
    rep = analysis.perturbation_response(s, cfg.eps_list, tuple(cfg.window), alpha,
                                         cfg.tol if cfg.tol is not None else 1e-4)
    doc = dict(vars(rep), passed=rep.passed, alpha=alpha)
    write_atomic(Path(cfg.output_dir) / "response.json", dumps(doc))
    print(_table(_response_rows(rep) + [("window_too_early", rep.window_too_early),
                                        ("passed", rep.passed)]))
    return EXIT_OK if rep.passed else EXIT_ASSERT


def cmd_average(cfg: RunConfig) -> int:
    if not cfg.eps_list or not cfg.window:
        raise ConfigError("average needs --eps-list and --window")
    avg_id = AVERAGED_OF.get(cfg.scenario_id)
    if avg_id is None:
        raise ConfigError(f"scenario {cfg.scenario_id!r} has no registered averaged process")
    t_end = cfg.t_end if cfg.t_end is not None else cfg.window[1]

    def family(e):
        return get_scenario(cfg.scenario_id, eps=e, h=cfg.h, t_start=cfg.t_start, t_end=t_end,
                            x0=cfg.x0)

    averaged = get_scenario(avg_id, t_start=cfg.t_start, t_end=t_end)
    rep = analysis.averaging_check(family, averaged, cfg.eps_list, tuple(cfg.window),
                                   cfg.alpha, cfg.tol if cfg.tol is not None else 1e-4)
    doc = dict(vars(rep), passed=rep.passed)
    write_atomic(Path(cfg.output_dir) / "average.json", dumps(doc))
    print(_table(_response_rows(rep) + [("decreasing (20% band)", rep.decreasing)]))
    return EXIT_OK if rep.passed else EXIT_ASSERT


def cmd_almost_period(cfg: RunConfig) -> int:
    s = scenario_from(cfg)
    s_range = cfg.s_range or [6.0, 7.0]
    window = cfg.window or [s.t_start, s.t_start + 5 * s_range[1]]
    eps_tol = cfg.tol if cfg.tol is not None else 1e-6
    s_grid = cfg.s_grid or 1e-2
    t_grid = cfg.t_grid or 5e-2
    if cfg.target == "set":
        target = s.moving_set
    elif cfg.target == "trajectory":
        alpha = _alpha_for(s, cfg)
        target = bounded_solution(replace(s, t_end=window[1] + s_range[1] + s.h), alpha, 1e-4)
    else:
        raise ConfigError("--target must be 'set' or 'trajectory'")
    rep = analysis.almost_period_search(target, eps_tol, s_range, s_grid, window, t_grid)
    write_atomic(Path(cfg.output_dir) / "almost_period.json", dumps(rep))
    print(_table([("target", cfg.target), ("eps_tol", eps_tol),
                  ("periods_found", rep.periods_found)]))
    return EXIT_OK if rep.periods_found else EXIT_ASSERT


def cmd_order(cfg: RunConfig) -> int:
    s = scenario_from(cfg)
    h_list = cfg.h_list or [1e-2, 5e-3, 2.5e-3]
    rep = richardson_order(s, h_list)
    write_atomic(Path(cfg.output_dir) / "order.json", dumps(asdict(rep)))
    print(_table([("order", "saturated" if rep.saturated else f"{rep.order:.4f}"),
                  ("raw_slope", rep.raw_slope), ("errors", rep.errors)]))
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "stability": cmd_stability, "response": cmd_response,
            "average": cmd_average, "almost-period": cmd_almost_period, "order": cmd_order}


def cmd_list() -> int:
    for name, entry in REGISTRY.items():
        print(f"{name:<22} {entry.description}")
        print(f"{'':<22} defaults: {entry.defaults}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_CONFIG
    if args.command == "list-scenarios":
        return cmd_list()
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
