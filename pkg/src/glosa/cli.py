"""Command-line front end.

    glosa run [--config FILE] [--scenario det|stoch|base|matrix] [--sweep default] ...
    glosa validate [--config FILE] [--set section.key=value ...]

Exit codes: 0 success, 2 configuration error, 3 runtime diagnostic. On
failure a JSON error record goes to stderr and, when possible, to
error.json in the output directory.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import tomli

from . import __version__
from . import svg
from .config import (GRADE_ALIASES, SCENARIO_ALIASES, ConfigError, ExperimentConfig,
                     apply_overrides)
from .harness import (RunResult, ScenarioKind, ScenarioSpec, SweepResult, proportion_array,
                      run_many, run_matrix, savings_proportion_surface, sensitivity_sweep,
                      summary, summary_json)
from .optimizer import PlanningError
from .trajectory import Trajectory, to_csv_string

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
log = logging.getLogger("glosa")

TRACE_COLUMNS = ("run_id", "t", "x", "v", "a", "control_kind", "control_value", "forced",
                 "predicted_switch", "upstream_L", "downstream_L")


class CliError(Exception):
    def __init__(self, code: int, kind: str, messages: list[str]):
        super().__init__("; ".join(messages))
        self.code, self.kind, self.messages = code, kind, messages


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="glosa", description="Signal-aware approach planning experiments")
    ap.add_argument("--version", action="version", version=f"glosa {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML experiment file")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override any config value (repeatable)")
        p.add_argument("--scenario", choices=("det", "stoch", "base", "matrix"))
        p.add_argument("--ttg", type=float, help="time to green at range entry (s)")
        p.add_argument("--grade", choices=("down", "up"))
        p.add_argument("--v0", type=float, help="initial speed (m/s)")
        p.add_argument("--bias", type=float, help="prediction bias (s)")
        p.add_argument("--sd", type=float, help="prediction standard deviation (s)")
        p.add_argument("--reps", type=int, help="replications per stochastic cell")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--sweep", choices=("default",), help="run the bias x sd sensitivity sweep")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--verbose", action="store_true", default=None)

    run = sub.add_parser("run", help="execute scenarios and write results")
    common(run)
    run.add_argument("--plots", action=argparse.BooleanOptionalAction, default=True,
                     help="write SVG figures (default on)")
    common(sub.add_parser("validate", help="check the configuration without running"))
    return ap


def load_config(args: argparse.Namespace) -> tuple[ExperimentConfig, list[str]]:
    """Resolve file, overrides and flags; returns the config and every problem found."""
    errors: list[str] = []
    data: dict = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                data = tomli.load(fh)
        except FileNotFoundError:
            raise CliError(EXIT_CONFIG, "config", [f"config file not found: {args.config}"])
        except (OSError, tomli.TOMLDecodeError) as exc:
            raise CliError(EXIT_CONFIG, "config", [f"cannot read {args.config}: {exc}"])
    try:
        data = apply_overrides(data, args.set)
    except ConfigError as exc:
        errors += exc.messages
    cfg = ExperimentConfig.from_mapping(data, args.config, errors)
    for flag, attr in (("seed", "seed"), ("reps", "replications"), ("out", "output_dir"),
                       ("workers", "workers"), ("verbose", "verbose")):
        v = getattr(args, flag)
        if v is not None:
            setattr(cfg, attr, v)
    if args.scenario in ("det", "stoch", "base"):
        kind = SCENARIO_ALIASES[args.scenario]
        stoch = kind is ScenarioKind.STOCHASTIC
        spec = ScenarioSpec(
            kind, GRADE_ALIASES[args.grade or "down"],
            args.v0 if args.v0 is not None else ScenarioSpec.initial_speed_mps,
            args.ttg if args.ttg is not None else ScenarioSpec.ttg_s,
            args.bias if args.bias is not None else 0.0,
            args.sd if args.sd is not None else 0.0,
            cfg.replications if stoch else 1, cfg.seed, 0)
        cfg.scenarios = [spec]
    else:
        # flags refine scenarios coming from the file
        upd = {}
        for flag, name in (("ttg", "ttg_s"), ("v0", "initial_speed_mps"), ("bias", "bias_s"),
                           ("sd", "sd_s")):
            if getattr(args, flag) is not None:
                upd[name] = getattr(args, flag)
        if args.grade:
            upd["grade_direction"] = GRADE_ALIASES[args.grade]
        cfg.scenarios = [replace(s, seed=cfg.seed, **upd,
                                 **({"replications": cfg.replications}
                                    if s.scenario_kind is ScenarioKind.STOCHASTIC and args.reps
                                    else {}))
                         for s in cfg.scenarios]
        if args.v0 is not None:
            cfg.sweep = replace(cfg.sweep, initial_speed_mps=args.v0)
    return cfg, errors + cfg.violations()


def _error_record(err: CliError) -> dict:
    return {"status": "error", "kind": err.kind, "exit_code": err.code, "messages": err.messages}


def _emit_error(err: CliError, out_dir: str | None) -> None:
    text = json.dumps(_error_record(err), indent=2, sort_keys=True)
    print(text, file=sys.stderr)
    if out_dir:
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            (Path(out_dir) / "error.json").write_text(text + "\n")
        except OSError:
            pass


def _meta(cfg: ExperimentConfig) -> dict:
    res = cfg.resolved()
    # keep outputs independent of where they were written
    res["experiment"].pop("output_dir", None)
    res["experiment"].pop("source", None)
    return {"version": __version__, "config": res}


def _distinct(result: RunResult) -> list[tuple[str, Trajectory]]:
    """Run ids and trajectories, dropping the copies of deterministic runs."""
    trajs = result.trajectories
    if result.spec.scenario_kind is not ScenarioKind.STOCHASTIC:
        trajs = trajs[:1]
    return [(f"{result.spec.label}-r{r}", t) for r, t in enumerate(trajs)]


def trace_csv(runs: Sequence[tuple[str, Trajectory]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for rid, tr in runs:
        n = len(tr)
        up = tr.upstream_cost if tr.upstream_cost is not None else [float("nan")] * n
        down = tr.downstream_cost if tr.downstream_cost is not None else [float("nan")] * n
        for k in range(n):
            w.writerow([rid, repr(float(tr.t[k])), repr(float(tr.x[k])), repr(float(tr.v[k])),
                        repr(float(tr.a[k])), int(tr.control_kind[k]),
                        repr(float(tr.control_value[k])), int(tr.forced[k]),
                        repr(float(tr.predicted[k])), repr(float(up[k])), repr(float(down[k]))])
    return buf.getvalue()


class _Writer:
    """Single writer for every file of one invocation."""

    def __init__(self, root: Path):
        self.root = root
        self.written: list[str] = []
        root.mkdir(parents=True, exist_ok=True)

    def __call__(self, name: str, text: str) -> None:
        with open(self.root / name, "w", newline="") as fh:
            fh.write(text)
        self.written.append(name)
        log.info("wrote %s", self.root / name)


def _sweep_outputs(sweep: SweepResult, cfg: ExperimentConfig, write: _Writer, plots: bool,
                   bar: bool) -> list:
    write("sweep_cells.csv", sweep.cells_csv())
    write("sweep_runs.csv", sweep.runs_csv())
    matrix = run_matrix(sweep)
    if not plots:
        return matrix
    g = sweep.grid
    bias_labels = [f"{b:g}" for b in g.biases]
    sd_labels = [f"{s:g}" for s in g.sds]
    for grade in g.grades:
        for ttg in g.ttgs:
            write(f"heatmap_{grade}_ttg{ttg:g}.svg", svg.heatmap(
                1000.0 * sweep.slice(grade, ttg), bias_labels, sd_labels,
                f"Mean fuel (mL), {grade}, TTG {ttg:g} s", "bias (s)", "sd (s)", "{:.2f}"))
    surf = proportion_array(savings_proportion_surface(sweep), g)
    write("proportion_surface.svg", svg.heatmap(
        surf, bias_labels, sd_labels, "Share of maximum possible savings", "bias (s)", "sd (s)",
        "{:.2f}"))
    if bar:
        cats, det, sto = [], [], []
        for c in matrix:
            if c.kind is ScenarioKind.DETERMINISTIC:
                cats.append(f"{c.grade_direction[:4]} {c.ttg_s:g}")
                det.append(c.savings_pct)
            elif c.kind is ScenarioKind.STOCHASTIC:
                sto.append(c.savings_pct)
        write("savings.svg", svg.bar_chart(cats, [("deterministic", det), ("stochastic", sto)],
                                           "Fuel savings against the uninformed driver",
                                           "savings (%)"))
    return matrix


def cmd_run(args: argparse.Namespace) -> int:
    cfg, problems = load_config(args)
    if problems:
        raise CliError(EXIT_CONFIG, "config", problems)
    do_sweep = args.sweep is not None or args.scenario == "matrix"
    if not cfg.scenarios and not do_sweep:
        raise CliError(EXIT_CONFIG, "config",
                       ["nothing to run: give --scenario, --sweep or [[scenario]] entries"])
    write = _Writer(Path(cfg.output_dir))
    setup = cfg.setup
    try:
        results = run_many(cfg.scenarios, setup, keep_trajectories=True, workers=cfg.workers)
        runs = [rt for r in results for rt in _distinct(r)]
        sweep = matrix = None
        if do_sweep:
            log.info("sweep: %d cells x %d replications", cfg.sweep.n_cells, cfg.replications)
            sweep = sensitivity_sweep(cfg.sweep, cfg.replications, cfg.seed, setup, cfg.workers)
            if args.scenario == "matrix":
                # reference runs of every slice, kept for export
                refs = [ScenarioSpec(k, gr, cfg.sweep.initial_speed_mps, t)
                        for gr in cfg.sweep.grades for t in cfg.sweep.ttgs
                        for k in (ScenarioKind.UNINFORMED, ScenarioKind.DETERMINISTIC)]
                for r in run_many(refs, setup, keep_trajectories=True, workers=cfg.workers):
                    runs += _distinct(r)
    except PlanningError as exc:
        raise CliError(EXIT_RUNTIME, "runtime", [f"planning failed: {exc}"])
    except (RuntimeError, ValueError, ArithmeticError) as exc:
        raise CliError(EXIT_RUNTIME, "runtime", [f"{type(exc).__name__}: {exc}"])

    if runs:
        write("trajectories.csv", to_csv_string(runs))
    if cfg.verbose and runs:
        write("planning_trace.csv", trace_csv(runs))
    if sweep is not None:
        matrix = _sweep_outputs(sweep, cfg, write, args.plots, args.scenario == "matrix")
    if args.plots:
        for r in results:
            shown = _distinct(r)[:5]
            if r.baseline is not None and r.spec.scenario_kind is not ScenarioKind.UNINFORMED:
                shown.append(("uninformed", r.baseline))
            write(f"trajectory_{r.spec.label}.svg", svg.trajectory_panels(shown, r.spec.label))
    data = summary(matrix or (), sweep, results, _meta(cfg))
    write("summary.json", summary_json(data))
    for r in results:
        log.info("%s: mean fuel %.5f L, savings %.1f %%", r.spec.label, r.mean_fuel_L,
                 r.savings_vs_baseline_pct)
    print(json.dumps({"status": "ok", "output_dir": str(cfg.output_dir),
                      "files": write.written}, sort_keys=True))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    cfg, problems = load_config(args)
    print(json.dumps(cfg.resolved(), indent=2, sort_keys=True))
    if problems:
        raise CliError(EXIT_CONFIG, "config", problems)
    print(json.dumps({"status": "ok", "checked": "all invariants"}, sort_keys=True))
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return cmd_run(args) if args.command == "run" else cmd_validate(args)
    except OSError as exc:
        err = CliError(EXIT_CONFIG, "io", [f"cannot write output: {exc}"])
        _emit_error(err, None)
        return err.code
    except CliError as err:
        # an unwritable output directory is itself the error; do not retry it
        out = None if err.kind == "config" and any("output_dir" in m for m in err.messages) \
            else (args.out or None)
        _emit_error(err, out)
        return err.code


if __name__ == "__main__":
    sys.exit(main())
