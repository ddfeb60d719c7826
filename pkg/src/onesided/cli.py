"""Command line entry point: ``onesided solve|simulate|match|diagnose --config FILE``."""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import COMMANDS, RunConfig, _opponent, _perturbation, parse_config
from .errors import ConfigError, DomainError
from .kernel import build_kernel, perturb_kernel
from .paths import dp_estimate, estimate_value_mc, knot_means, path_diagnostics, posterior_consistency, sample_paths
from .pde import conjugate_pde_residual, non_revealing_set, time_residuals
from .simplex import make_grid, min_second_differences
from .solver import TimeGrid, ValueTable, closed_form_value, solve_backward
from .strategy import UninformedStrategy, play_match, synthesize_informed

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


@dataclass
class Check:
    name: str
    value: float
    bound: float
    passed: bool

    def as_dict(self) -> dict:
        return {"name": self.name, "value": _num(self.value), "bound": _num(self.bound), "pass": bool(self.passed)}


@dataclass
class RunReport:
    command: str
    config_hash: str
    config: dict
    headline: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, value: float, bound: float, ok: bool):
        self.checks.append(Check(name, float(value), float(bound), bool(ok)))

    def body(self) -> str:
        """The report text; wall-clock time is kept out so reruns are byte-identical."""
        doc = {
            "command": self.command,
            "config_hash": self.config_hash,
            "config": self.config,
            "headline": {k: _num(v) for k, v in self.headline.items()},
            "checks": [c.as_dict() for c in self.checks],
            "passed": self.passed,
        }
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _num(x):
    if isinstance(x, dict):
        return {k: _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    if x is None or isinstance(x, (bool, str)):
        return x
    x = float(x)
    return x if math.isfinite(x) else None


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_values_csv(path: Path, table: ValueTable, knots) -> None:
    grid = table.grid
    ks = [table.tgrid.index_of(t) for t in knots]
    head = [f"p{i + 1}" for i in range(grid.dim)] + [f"V(t={_fmt(table.tgrid.knots[k])})" for k in ks]
    lines = [",".join(head)]
    for j in range(grid.size):
        row = [_fmt(x) for x in grid.points[j]] + [_fmt(table.values[k, j]) for k in ks]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def read_values_csv(path: Path) -> tuple[list[str], np.ndarray]:
    text = Path(path).read_text().splitlines()
    return text[0].split(","), np.array([[float(x) for x in ln.split(",")] for ln in text[1:]])


class Runner:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.spec = cfg.build_spec()
        self.p0 = np.asarray(cfg.p0 if cfg.p0 is not None else np.full(self.spec.dim, 1.0 / self.spec.dim))
        self.report = RunReport(cfg.command, cfg.digest(), cfg.as_dict())
        self.out = Path(cfg.out)

    def solve(self) -> ValueTable:
        cfg, spec = self.cfg, self.spec
        tg = TimeGrid(cfg.t0, spec.horizon, cfg.n)
        table = solve_backward(spec, tg, make_grid(spec.dim, cfg.m))
        start, snap = table.grid.nearest_node(self.p0)
        self.report.headline["value"] = table.values[0, start]
        self.report.headline["snap_distance"] = snap
        return table

    # -- commands

    def run_solve(self):
        cfg, table = self.cfg, self.solve()
        knots = cfg.value_knots if cfg.value_knots is not None else [cfg.t0]
        try:
            for t in knots:
                table.tgrid.index_of(t)
        except DomainError as exc:
            raise ConfigError(str(exc), field="value_knots") from None
        write_values_csv(self.out / "values.csv", table, knots)
        worst, probed = 0.0, False
        for t in knots:
            k = table.tgrid.index_of(t)
            for j in range(table.grid.size):
                try:
                    exact = closed_form_value(self.spec, table.tgrid.knots[k], table.grid.points[j])
                except DomainError:
                    break
                probed = True
                worst = max(worst, abs(exact - table.values[k, j]))
        if probed:
            self.report.headline["max_closed_form_error"] = worst
            self.report.check("closed_form", worst, cfg.closed_form_tol, worst <= cfg.closed_form_tol)

    def run_simulate(self):
        cfg, table = self.cfg, self.solve()
        rep = self.report
        kernel = build_kernel(table)
        paths = sample_paths(kernel, self.p0, cfg.N, cfg.seed)
        value = table.values[0, paths.start]
        est = estimate_value_mc(paths, self.spec)
        rep.headline.update(mc_mean=est.mean, mc_se=est.se)
        bound = cfg.sigma * est.se + cfg.mc_floor
        rep.check("mc_value", abs(est.mean - value), bound, abs(est.mean - value) <= bound)
        n = table.tgrid.n
        for k in sorted({n // 4, n // 2, (3 * n) // 4}):
            d = dp_estimate(paths, table, k)
            bound = cfg.sigma * d.se + cfg.mc_floor
            rep.check(f"dynamic_programming_k{k}", abs(d.mean - value), bound, abs(d.mean - value) <= bound)
        means, ses = knot_means(paths)
        drift = np.abs(means - table.grid.points[paths.start]) - cfg.sigma * ses - cfg.mc_floor
        rep.check("empirical_martingale", float(drift.max()), 0.0, bool(drift.max() <= 0))
        post = posterior_consistency(paths)
        rep.headline["posterior_max_deviation"] = post.max_deviation
        rep.check("posterior", post.max_deviation, cfg.posterior_tol, post.max_deviation <= cfg.posterior_tol)
        nrs = non_revealing_set(table, cfg.h_constant)
        diag = path_diagnostics(table, nrs, paths)
        rep.headline.update(in_H_fraction=diag.in_H_fraction, max_jump_residual=diag.max_jump_residual)
        rep.check("in_H_fraction", diag.in_H_fraction, cfg.in_H_min, diag.in_H_fraction >= cfg.in_H_min)
        rep.check("jump_flatness", diag.max_jump_residual, cfg.jump_tol, diag.max_jump_residual <= cfg.jump_tol)
        for item in cfg.perturbations:
            mode, theta = _perturbation(item)
            alt = sample_paths(perturb_kernel(kernel, mode, theta), self.p0, cfg.N, cfg.seed)
            e = estimate_value_mc(alt, self.spec)
            margin = e.mean - value
            rep.headline[f"perturbed_{item}_margin"] = margin
            floor = -cfg.sigma * e.se - cfg.perturb_slack
            rep.check(f"minimization_{item}", margin, floor, margin >= floor)

    def run_match(self):
        cfg, table = self.cfg, self.solve()
        rep = self.report
        informed = synthesize_informed(table, self.spec)
        value = table.values[0, table.grid.nearest_node(self.p0)[0]]
        for item in cfg.opponents:
            kind, v = _opponent(item)
            who = UninformedStrategy(kind, v)
            res = play_match(informed, who, cfg.N, cfg.seed, self.p0)
            rep.headline[f"match_{item}_mean"] = res.mean
            rep.headline[f"match_{item}_se"] = res.se
            slack = cfg.sigma * res.se + cfg.guarantee_slack
            if kind == "posterior_best_response":
                rep.check(f"attains_{item}", abs(res.mean - value), slack, abs(res.mean - value) <= slack)
            elif who.legal:
                rep.check(f"guarantee_{item}", res.mean - value, slack, res.mean - value <= slack)
            gap = abs(res.decomposed - res.mean)
            rep.check(f"decomposition_{item}", gap, 1e-12, gap <= 1e-12)
            if who.legal:
                gap = abs(res.terminal_pairing - res.running_pairing)
                bound = cfg.sigma * res.pairing_se + cfg.mc_floor
                rep.check(f"martingale_payoff_{item}", gap, bound, gap <= bound)

    def run_diagnose(self):
        cfg, table = self.cfg, self.solve()
        rep = self.report
        tr = time_residuals(table)
        rep.headline["min_time_residual"] = tr.min()
        rep.check("obstacle_time", -tr.min(), cfg.mc_floor, tr.min() >= -cfg.mc_floor)
        conv = np.nanmin([np.nanmin(min_second_differences(table.grid, v)) for v in table.values[:-1]])
        rep.headline["min_convexity_residual"] = conv
        rep.check("obstacle_convexity", -conv, cfg.mc_floor, conv >= -cfg.mc_floor)
        nrs = non_revealing_set(table, cfg.h_constant)
        rep.headline["H_constant"] = nrs.c
        rep.headline["H_fraction"] = nrs.members.mean()
        conj = conjugate_pde_residual(table, cfg.dual_half_width, cfg.dual_resolution)
        rep.headline.update(
            conjugate_max_abs=conj.max_abs,
            conjugate_masked_fraction=conj.masked_fraction,
            conjugate_terminal_error=conj.terminal_error,
        )
        rep.check("conjugate_pde", conj.max_abs, cfg.conjugate_tol, conj.max_abs <= cfg.conjugate_tol)
        rep.check("conjugate_terminal", conj.terminal_error, 1e-12, conj.terminal_error <= 1e-12)
        np.savez_compressed(
            self.out / "diagnose.npz",
            time_residuals=tr,
            nonrevealing=nrs.members,
            conjugate_residual=conj.residual,
            conjugate_mask=conj.mask,
        )


def run(cfg: RunConfig) -> RunReport:
    """Execute ``cfg.command`` and write ``report.json`` (plus artifacts) under ``cfg.out``."""
    if cfg.command not in COMMANDS:
        raise ConfigError(f"unknown command {cfg.command!r}", field="command")
    start = time.perf_counter()
    runner = Runner(cfg)
    runner.out.mkdir(parents=True, exist_ok=True)
    getattr(runner, f"run_{cfg.command}")()
    rep = runner.report
    rep.wall_clock = time.perf_counter() - start
    (runner.out / "report.json").write_text(rep.body())
    return rep


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="onesided", description=__doc__)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="YAML config file")
    ap.add_argument("--seed", type=int, help="override the master seed")
    ap.add_argument("--out", help="output directory")
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    overrides = {"command": args.command}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    try:
        cfg = parse_config(Path(args.config), overrides)
        rep = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.6g} (bound {c.bound:.6g})")
    print(f"{args.command}: {'all checks passed' if rep.passed else 'some checks failed'} "
          f"in {rep.wall_clock:.2f}s -> {Path(cfg.out) / 'report.json'}")
    return EXIT_OK if rep.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
