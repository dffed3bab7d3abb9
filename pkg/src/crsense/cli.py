"""Command-line front end: TOML config in, CSV curves and a gnuplot script out.

    crsense region   --config fig2.cfg --output out/
    crsense optimize --config fig2.cfg
    crsense simulate --config fig2.cfg --seed 7 --slots 200000
    crsense compare  --config tradeoff.cfg --tau-points 51

See README.md for the config key reference.
"""
import argparse
import csv
import os
import sys
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import tomli

from .optimizer import (
    best_scheme,
    crossover,
    max_feasible_lambda_p,
    maximize_scheme,
    region_curve,
    tau_grid,
)
from .phy import EXOGENOUS, ROC, LinkParams, SensingModel
from .queue_sim import BACKLOGGED, SimConfig, reports_to_csv, simulate
from .schemes import CONSTANT, PHYSICAL, SCHEME_ORDER, NetworkEnv, Scheme

COMMANDS = ("region", "optimize", "simulate", "compare")
REGION_HEADER = ["scheme", "lambda_p", "lambda_s_max", "tau", "a_s", "b_s", "feasible"]

_TOP_KEYS = {"bits_per_packet", "slot_duration", "bandwidth", "snr_p_pd", "snr_s_sd",
             "mean_gain_p_pd", "mean_gain_s_sd", "scheme", "sensing", "success", "sweep", "sim"}
_SECTION_KEYS = {
    "sensing": {"mode", "p_fa", "p_md", "f_s", "snr"},
    "success": {"mode", "p_ppd", "p_ssd"},
    "sweep": {"lambda_p_points", "tau_points", "b_points"},
    "sim": {"slots", "seed", "lambda_p", "lambda_s"},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Grids:
    tau_points: int = 101
    b_points: int = 101
    lambda_p_points: int = 50

    def __post_init__(self):
        for name in ("tau_points", "b_points", "lambda_p_points"):
            if getattr(self, name) < 2:
                raise ConfigError(f"sweep.{name}: needs at least 2 points")


@dataclass(frozen=True)
class RunConfig:
    env: NetworkEnv
    command: str
    grids: Grids
    sim: SimConfig
    output_path: str
    scheme: Optional[Scheme] = None

    def schemes(self):
        return (self.scheme,) if self.scheme else SCHEME_ORDER


def _num(doc, key, default=None, *, required=False, positive=False, prob=False, integer=False):
    section, _, name = key.rpartition(".")
    table = doc.get(section, {}) if section else doc
    if name not in table:
        if required:
            raise ConfigError(f"{key}: missing required key")
        return default
    v = table[name]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {v!r}")
    if integer and (not float(v).is_integer()):
        raise ConfigError(f"{key}: expected an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{key}: must be positive, got {v!r}")
    if prob and not 0.0 <= v <= 1.0:
        raise ConfigError(f"{key}: must be a probability in [0, 1], got {v!r}")
    return int(v) if integer else float(v)


def _mode(doc, key, default, allowed):
    section, _, name = key.rpartition(".")
    v = doc.get(section, {}).get(name, default)
    if v not in allowed:
        raise ConfigError(f"{key}: must be one of {', '.join(allowed)}, got {v!r}")
    return v


def _check_keys(doc):
    for key in doc:
        if key not in _TOP_KEYS:
            raise ConfigError(f"{key}: unknown key")
    for section, allowed in _SECTION_KEYS.items():
        table = doc.get(section, {})
        if not isinstance(table, dict):
            raise ConfigError(f"{section}: expected a table")
        for key in table:
            if key not in allowed:
                raise ConfigError(f"{section}.{key}: unknown key")


def parse_config(text: str, command: str = "region", output_path: str = "out") -> RunConfig:
    """Validate a TOML config document and apply defaults."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"malformed config: {e}") from None
    _check_keys(doc)
    if command not in COMMANDS:
        raise ConfigError(f"command: must be one of {', '.join(COMMANDS)}, got {command!r}")

    success_mode = _mode(doc, "success.mode", PHYSICAL, (CONSTANT, PHYSICAL))
    physical = success_mode == PHYSICAL
    b = _num(doc, "bits_per_packet", 1000.0)
    if b < 0:
        raise ConfigError("bits_per_packet: must be non-negative")
    T = _num(doc, "slot_duration", 1.0, positive=True)
    W = _num(doc, "bandwidth", 1000.0, positive=True)
    primary = LinkParams(b, T, W,
                         _num(doc, "snr_p_pd", 10.0, required=physical, positive=True),
                         _num(doc, "mean_gain_p_pd", 1.0, positive=True))
    secondary = LinkParams(b, T, W,
                           _num(doc, "snr_s_sd", 10.0, required=physical, positive=True),
                           _num(doc, "mean_gain_s_sd", 1.0, positive=True))

    sensing_mode = _mode(doc, "sensing.mode", EXOGENOUS, (EXOGENOUS, ROC))
    p_fa = _num(doc, "sensing.p_fa", 0.2, prob=True)
    if sensing_mode == ROC:
        sensing = SensingModel.roc(p_fa, _num(doc, "sensing.f_s", required=True, positive=True),
                                   _num(doc, "sensing.snr", required=True, positive=True))
    else:
        sensing = SensingModel.exogenous(_num(doc, "sensing.p_md", 0.3, prob=True), p_fa)

    env = NetworkEnv(primary, secondary, sensing, success_mode,
                     _num(doc, "success.p_ppd", required=not physical, prob=True),
                     _num(doc, "success.p_ssd", required=not physical, prob=True))

    grids = Grids(_num(doc, "sweep.tau_points", 101, integer=True),
                  _num(doc, "sweep.b_points", 101, integer=True),
                  _num(doc, "sweep.lambda_p_points", 50, integer=True))

    lam_s = doc.get("sim", {}).get("lambda_s", BACKLOGGED)
    if lam_s != BACKLOGGED:
        lam_s = _num(doc, "sim.lambda_s", prob=True)
    seed = _num(doc, "sim.seed", 0, integer=True)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("sim.seed: must be a 64-bit unsigned integer")
    sim = SimConfig(slots=_num(doc, "sim.slots", 1_000_000, positive=True, integer=True),
                    seed=seed,
                    lambda_p=_num(doc, "sim.lambda_p", 0.2, prob=True),
                    lambda_s=lam_s)

    scheme = doc.get("scheme")
    if scheme is not None:
        try:
            scheme = Scheme(scheme)
        except ValueError:
            raise ConfigError(f"scheme: must be one of So, Sc, S1, S2, got {scheme!r}") from None
    return RunConfig(env, command, grids, sim, output_path, scheme)


def _f(x):
    return f"{x:.12g}"


def _region_row(scheme, lam, value, policy, feasible):
    return [str(scheme), _f(lam), _f(value), _f(policy.tau), _f(policy.a_s), _f(policy.b_s),
            "1" if feasible else "0"]


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _plot_script(path, title, series):
    """gnuplot script drawing lambda_s_max against lambda_p for each CSV."""
    lines = [
        "# gnuplot script; run with: gnuplot -p " + os.path.basename(path),
        "set datafile separator ','",
        "set key top right",
        "set xlabel 'lambda_p (packets/slot)'",
        "set ylabel 'lambda_s (packets/slot)'",
        f"set title '{title}'",
    ]
    plots = [f"'{os.path.basename(csv_path)}' using {x}:{y} every ::1 with linespoints title '{label}'"
             for csv_path, x, y, label in series]
    lines.append("plot " + ", \\\n     ".join(plots))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _lambda_grid(cfg: RunConfig):
    top = min(cfg.env.primary_success(), 1.0)
    return np.linspace(0.0, top, cfg.grids.lambda_p_points)


def _cmd_region(cfg: RunConfig, out):
    series = []
    for scheme in cfg.schemes():
        curve = region_curve(scheme, cfg.env, cfg.grids.lambda_p_points,
                             cfg.grids.tau_points, cfg.grids.b_points)
        path = os.path.join(out, f"region_{scheme}.csv")
        _write_csv(path, REGION_HEADER,
                   [_region_row(scheme, r.lambda_p, r.lambda_s_max, r.policy, r.feasible) for r in curve.rows])
        series.append((path, 2, 3, str(scheme)))
    _plot_script(os.path.join(out, "plot_region.gp"), "stability region boundaries", series)


def _cmd_optimize(cfg: RunConfig, out):
    schemes = cfg.schemes() if cfg.scheme else (Scheme.SC, Scheme.S2)
    rows, series = [], []
    for scheme in schemes:
        for lam in _lambda_grid(cfg):
            opt = maximize_scheme(scheme, cfg.env, float(lam), cfg.grids.tau_points, cfg.grids.b_points)
            p = opt.policy
            rows.append([str(scheme), _f(lam), _f(p.tau), _f(p.a_s), _f(p.b_s), _f(opt.lambda_s_max),
                         "1" if opt.feasible else "0"])
    path = _write_csv(os.path.join(out, "optimize.csv"),
                      ["scheme", "lambda_p", "tau_opt", "a_s_opt", "b_s_opt", "lambda_s_max", "feasible"], rows)
    for scheme in schemes:
        series.append((path, 2, f"(strcol(1) eq '{scheme}' ? $6 : 1/0)", str(scheme)))
    _plot_script(os.path.join(out, "plot_optimize.gp"), "optimised boundaries", series)


def _cmd_simulate(cfg: RunConfig, out):
    reports = []
    for scheme in cfg.schemes():
        opt = maximize_scheme(scheme, cfg.env, cfg.sim.lambda_p, cfg.grids.tau_points, cfg.grids.b_points)
        if not opt.feasible:
            raise ConfigError(f"sim.lambda_p={cfg.sim.lambda_p} is infeasible for scheme {scheme}")
        reports.append(simulate(cfg.env, opt.policy, cfg.sim))
    path = os.path.join(out, "simulate.csv")
    with open(path, "w", newline="") as fh:
        fh.write(reports_to_csv(reports))
    _plot_script(os.path.join(out, "plot_simulate.gp"), "measured vs offered load",
                 [(path, 5, 14, "empirical mu_s per policy")])


def _cmd_compare(cfg: RunConfig, out):
    taus = tau_grid(cfg.env, cfg.grids.tau_points)
    positive = taus[taus > 0]
    tau_short = float(positive.min()) if positive.size else float(taus.min())
    tau_long = float(taus.max())
    best_rows, all_rows, cross_rows = [], [], []
    for lam in _lambda_grid(cfg):
        lam = float(lam)
        for scheme in SCHEME_ORDER:
            opt = maximize_scheme(scheme, cfg.env, lam, cfg.grids.tau_points, cfg.grids.b_points)
            all_rows.append(_region_row(scheme, lam, opt.lambda_s_max, opt.policy, opt.feasible))
        choice = best_scheme(cfg.env, lam, cfg.grids.tau_points, cfg.grids.b_points)
        best_rows.append(_region_row(choice.scheme, lam, choice.lambda_s_max, choice.policy, choice.feasible))
        c = crossover(cfg.env, lam, tau_short, tau_long, cfg.grids.b_points)
        cross_rows.append([_f(lam), _f(c.so), _f(c.s2_short_tau), _f(c.s2_long_tau), _f(tau_short), _f(tau_long),
                           int(c.so_beats_long_sensing), int(c.short_sensing_beats_so),
                           int(c.short_beats_long_sensing)])
    best = _write_csv(os.path.join(out, "compare.csv"), REGION_HEADER, best_rows)
    _write_csv(os.path.join(out, "compare_schemes.csv"), REGION_HEADER, all_rows)
    cross = _write_csv(os.path.join(out, "compare_crossover.csv"),
                       ["lambda_p", "so", "s2_short_tau", "s2_long_tau", "tau_short", "tau_long",
                        "so_beats_long_sensing", "short_sensing_beats_so", "short_beats_long_sensing"],
                       cross_rows)
    _plot_script(os.path.join(out, "plot_compare.gp"), "best scheme and sensing-duration crossover",
                 [(best, 2, 3, "best scheme"), (cross, 1, 2, "So"),
                  (cross, 1, 3, "S2 short tau"), (cross, 1, 4, "S2 long tau")])


_DISPATCH = {"region": _cmd_region, "optimize": _cmd_optimize,
             "simulate": _cmd_simulate, "compare": _cmd_compare}


def run(config: RunConfig) -> int:
    """Execute ``config.command``; 0 iff every output file was written."""
    env = config.env
    if env.primary_success() == 0 or max(max_feasible_lambda_p(s, env, config.grids.tau_points)
                                         for s in SCHEME_ORDER) == 0:
        print("error: infeasible environment: the primary link never succeeds", file=sys.stderr)
        return 2
    os.makedirs(config.output_path, exist_ok=True)
    try:
        _DISPATCH[config.command](config, config.output_path)
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="crsense", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="TOML config file")
    p.add_argument("--output", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int)
    p.add_argument("--slots", type=int)
    p.add_argument("--tau-points", type=int)
    p.add_argument("--b-points", type=int)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read(), args.command, args.output)
        sim = cfg.sim
        if args.seed is not None:
            sim = replace(sim, seed=args.seed)
        if args.slots is not None:
            sim = replace(sim, slots=args.slots)
        grids = cfg.grids
        if args.tau_points is not None:
            grids = replace(grids, tau_points=args.tau_points)
        if args.b_points is not None:
            grids = replace(grids, b_points=args.b_points)
        cfg = replace(cfg, sim=sim, grids=grids)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
