"""Batch front end: ``equiabos {generate,thresholds,simulate,sweep,check}``.

The config is one JSON file::

    {
      "model":  {"m": 1000, "p": 0.01, "sigma_eps_sq": 1, "rho": 0.5,
                 "sigma0_sq": 0, "tau_sq": 99},
      "losses": {"delta0": 1, "deltaA": 1},
      "rules":  [{"name": "oracle"}, {"name": "bh", "alpha": 0.05}],
      "mc":     {"n_replicates": 200, "master_seed": 7},
      "regime": {"regime": "extreme_sparse", "s_target": 1, "C": 2,
                 "delta": 1, "alpha": 0.05, "m_grid": [100, 1000, 10000]},
      "output": {"directory": "out"}
    }

Exit codes: 0 success, 2 configuration error, 3 solver or model error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import asymptotics as asy
from .data import generate, replicate_seed, write_dataset_csv
from .exceptions import EquiabosError, ParameterError
from .model import LossParams, ModelParams, derive_scales, validate_params
from .risk import MC_RULES, monte_carlo_metrics, write_risk_csv
from .thresholds import bh_random_threshold, rule_threshold, write_thresholds_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

KNOWN_RULES = ("oracle", "bfdr_fixed", "gw", "bonferroni", "bonferroni_expansion", "bh")
SWEEP_RULES = ("oracle", "bfdr_fixed", "gw", "bonferroni", "bh")


class ConfigError(Exception):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        raise ConfigError("--config is required")
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be an object")
    return cfg


def _model(cfg: dict) -> tuple[ModelParams, LossParams]:
    if "model" not in cfg:
        raise ConfigError("config needs a 'model' section")
    try:
        params = ModelParams.from_dict(cfg["model"])
        losses = LossParams(**cfg.get("losses", {}))
    except TypeError as exc:
        raise ConfigError(f"bad model/losses section: {exc}") from exc
    problems = validate_params(params, losses)
    if problems:
        raise ParameterError(problems)
    return params, losses


def _rules(cfg: dict) -> list[tuple[str, float | None]]:
    out = []
    for item in cfg.get("rules", []):
        if isinstance(item, str):
            item = {"name": item}
        name = item.get("name")
        if name not in KNOWN_RULES:
            raise ConfigError(f"unknown rule {name!r}; expected one of {KNOWN_RULES}")
        alpha = item.get("alpha")
        if name != "oracle" and alpha is None:
            raise ConfigError(f"rule {name!r} needs 'alpha'")
        out.append((name, None if alpha is None else float(alpha)))
    if not out:
        raise ConfigError("config needs a non-empty 'rules' list")
    return out


def _seed(cfg: dict, args) -> int:
    if args.seed is not None:
        return args.seed
    seed = cfg.get("mc", {}).get("master_seed")
    if seed is None:
        raise ConfigError("a seed is required: set mc.master_seed or pass --seed")
    return int(seed)


def _n_replicates(cfg: dict) -> int:
    n = cfg.get("mc", {}).get("n_replicates")
    if n is None or int(n) < 2:
        raise ConfigError("mc.n_replicates must be an integer >= 2")
    return int(n)


def _out_dir(cfg: dict, args) -> Path:
    out = Path(args.out or cfg.get("output", {}).get("directory", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _regime(cfg: dict) -> asy.RegimeSpec:
    if "regime" not in cfg:
        raise ConfigError("config needs a 'regime' section")
    r = dict(cfg["regime"])
    grid = tuple(int(m) for m in r.pop("m_grid", ()))
    alpha = r.pop("alpha", 0.05)
    r.pop("alpha_rule", None)
    if isinstance(alpha, list):
        if len(alpha) != len(grid):
            raise ConfigError("a sequence 'alpha' needs one value per m_grid entry")
        table = dict(zip(grid, (float(a) for a in alpha)))
        alpha = table.__getitem__
    try:
        return asy.RegimeSpec(m_grid=grid, alpha=alpha, **r)
    except TypeError as exc:
        raise ConfigError(f"bad regime section: {exc}") from exc
    except EquiabosError as exc:
        raise ConfigError(f"bad regime section: {exc}") from exc


def cmd_generate(cfg, args) -> int:
    params, _ = _model(cfg)
    seed = _seed(cfg, args)
    data = generate(params, replicate_seed(seed, 0))
    write_dataset_csv(data, _out_dir(cfg, args) / "dataset.csv")
    return EXIT_OK


def cmd_thresholds(cfg, args) -> int:
    params, losses = _model(cfg)
    scales = derive_scales(params, losses)
    results = []
    for name, alpha in _rules(cfg):
        if name == "bh":
            data = generate(params, replicate_seed(_seed(cfg, args), 0))
            results.append(bh_random_threshold(data.u_centered, math.sqrt(scales.sigma_sq), alpha))
        else:
            results.append(rule_threshold(name, scales, params.p, params.m, alpha))
    write_thresholds_csv(results, _out_dir(cfg, args) / "thresholds.csv")
    return EXIT_OK


def cmd_simulate(cfg, args) -> int:
    params, losses = _model(cfg)
    seed, n = _seed(cfg, args), _n_replicates(cfg)
    rows = []
    for name, alpha in _rules(cfg):
        if name not in MC_RULES:
            raise ConfigError(f"rule {name!r} cannot be simulated")
        summary = monte_carlo_metrics(params, losses, name, alpha, n, seed, jobs=args.jobs)
        rows.append((summary, params, losses))
    write_risk_csv(rows, _out_dir(cfg, args) / "risk_summary.csv")
    return EXIT_OK


def cmd_sweep(cfg, args) -> int:
    spec = _regime(cfg)
    rules = [name for name, _ in _rules(cfg) if name in SWEEP_RULES]
    points = asy.build_sequence(spec)
    mc = None
    if "bh" in rules:
        mc = asy.MonteCarloConfig(_n_replicates(cfg), _seed(cfg, args), jobs=args.jobs)
    curves = {rule: asy.risk_ratio_curve(points, rule, mc) for rule in rules}
    asy.write_trace_csv(points, curves, _out_dir(cfg, args) / "sweep_trace.csv")
    return EXIT_OK


def cmd_check(cfg, args) -> int:
    spec = _regime(cfg)
    points = asy.build_sequence(spec)
    reports = [asy.check_assumption1(points, spec.C)]
    rules = [name for name, _ in _rules(cfg)] if "rules" in cfg else list(asy.CLOSED_FORM_RULES)
    for rule in rules:
        if rule in asy.CLOSED_FORM_RULES:
            reports.append(asy.check_abos_conditions(points, rule))
    reports.append(asy.check_bfdr_conditions(points))
    asy.reports_to_json(reports, _out_dir(cfg, args) / "check_report.json")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "thresholds": cmd_thresholds,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="equiabos", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--seed", type=int, help="override mc.master_seed")
    parser.add_argument("--out", help="output directory (overrides output.directory)")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for replicates")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.jobs < 1:
        print("equiabos: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, ParameterError) as exc:
        print(f"equiabos {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EquiabosError as exc:
        print(f"equiabos {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def main() -> None:
    sys.exit(run())
