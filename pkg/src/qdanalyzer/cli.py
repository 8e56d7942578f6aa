"""Command-line front end: ``qda --mode MODE [options]``.

Exit status: 0 success, 2 usage error, 3 I/O error, 4 oracle non-convergence.
Angles on the command line and in the CSV are degrees.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import shlex
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import _kernels
from .experiment import (
    chsh_bound_check,
    chsh_settings,
    inequality5_diagnostic,
    run_four_angle_sweep,
    run_malus_sequence,
    run_sweep,
)
from .reference import (
    OracleConvergenceError,
    model_closed_form,
    model_expectation_oracle,
)
from .sources import PairKind, SourceConfig
from .stokes import RESIDUAL_TOL, eigencheck

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_ORACLE = 4

MODES = ("proton", "photon", "photon4", "malus", "ineq5", "eigcheck", "oracle")
STRATEGIES = ("deterministic", "probabilistic")
GRID_DEFAULTS = {
    "proton": (0.0, 90.0, 15.0),
    "malus": (0.0, 90.0, 15.0),
}
PHOTON_GRID = (0.0, 90.0, 7.5)

CORRELATION_HEADER = [
    "theta_deg", "n_pp", "n_pm", "n_mp", "n_mm", "n_degenerate", "gamma", "std_error", "qm_reference",
]
FOUR_ANGLE_EXTRA = ["gamma4", "gamma4_se", "chsh_violation"]
MALUS_HEADER = ["theta_deg", "n_plus", "n_minus", "n_degenerate", "fraction", "std_error", "malus_reference"]
INEQ5_HEADER = ["theta_deg", "n", "n_degenerate", "gamma4", "lhs", "rhs", "sign_change_fraction"]
EIGCHECK_HEADER = ["quantity", "max_residual", "tolerance", "pass"]
ORACLE_HEADER = ["theta_deg", "kind", "strategy", "oracle", "closed_form", "abs_diff"]


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    mode: str = "proton"
    pairs: int = 10_000
    seed: int = 1
    theta_start: float = 0.0
    theta_end: float = 90.0
    theta_step: float = 15.0
    triplet_fraction: float = 0.0
    strategy: str = "deterministic"
    rotation_sign: int = 1
    output_path: str = "proton.csv"
    plot: bool = False

    def theta_grid_deg(self) -> list[float]:
        count = int(math.floor((self.theta_end - self.theta_start) / self.theta_step + 1e-9)) + 1
        return [self.theta_start + k * self.theta_step for k in range(count)]

    def to_argv(self) -> list[str]:
        argv = [
            "--mode", self.mode,
            "--pairs", str(self.pairs),
            "--seed", str(self.seed),
            "--theta-start", repr(self.theta_start),
            "--theta-end", repr(self.theta_end),
            "--theta-step", repr(self.theta_step),
            "--triplet-fraction", repr(self.triplet_fraction),
            "--strategy", self.strategy,
            "--rotation-sign", str(self.rotation_sign),
            "--output", self.output_path,
        ]
        if self.plot:
            argv.append("--plot")
        return argv


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qda", description="Quasi-deterministic analyzer pair-correlation simulator.")
    p.add_argument("--mode", choices=MODES, default="proton")
    p.add_argument("--pairs", type=int, default=10_000,
                   help="pairs per angular setting (matrices in eigcheck mode)")
    p.add_argument("--seed", type=int, default=None, help="defaults to $QDA_SEED, else 1")
    p.add_argument("--theta-start", type=float, default=None, help="degrees")
    p.add_argument("--theta-end", type=float, default=None, help="degrees")
    p.add_argument("--theta-step", type=float, default=None, help="degrees")
    p.add_argument("--triplet-fraction", type=float, default=0.0)
    p.add_argument("--strategy", choices=STRATEGIES, default="deterministic")
    p.add_argument("--rotation-sign", type=int, choices=(1, -1), default=1)
    p.add_argument("--output", dest="output_path", default=None, help="CSV path (default MODE.csv)")
    p.add_argument("--plot", action="store_true", help="also write a gnuplot script next to the CSV")
    p.add_argument("--workers", type=int, default=1,
                   help="threads per run; results do not depend on it")
    return p


def parse_args(argv=None, environ=None) -> tuple[RunConfig, argparse.Namespace]:
    environ = os.environ if environ is None else environ
    ns = _parser().parse_args(argv)
    seed = ns.seed
    if seed is None:
        raw = environ.get("QDA_SEED")
        try:
            seed = int(raw) if raw else 1
        except ValueError:
            raise UsageError(f"QDA_SEED: invalid int value: {raw!r}") from None
    start, end, step = GRID_DEFAULTS.get(ns.mode, PHOTON_GRID)
    config = RunConfig(
        mode=ns.mode,
        pairs=ns.pairs,
        seed=seed,
        theta_start=start if ns.theta_start is None else ns.theta_start,
        theta_end=end if ns.theta_end is None else ns.theta_end,
        theta_step=step if ns.theta_step is None else ns.theta_step,
        triplet_fraction=ns.triplet_fraction,
        strategy=ns.strategy,
        rotation_sign=ns.rotation_sign,
        output_path=ns.output_path or f"{ns.mode}.csv",
        plot=ns.plot,
    )
    _validate(config)
    if ns.workers < 1:
        raise UsageError("argument --workers: must be >= 1")
    return config, ns


def parse_config(argv=None, environ=None) -> RunConfig:
    return parse_args(argv, environ)[0]


def _validate(config: RunConfig) -> None:
    checks = [
        (config.pairs >= 1, "--pairs", "must be >= 1"),
        (0 <= config.seed < 2**64, "--seed", "must be a 64-bit unsigned integer"),
        (config.theta_step > 0, "--theta-step", "must be > 0"),
        (config.theta_end >= config.theta_start, "--theta-end", "must be >= --theta-start"),
        (0.0 <= config.triplet_fraction <= 1.0, "--triplet-fraction", "must lie in [0, 1]"),
    ]
    for name in ("theta_start", "theta_end", "theta_step", "triplet_fraction"):
        if not math.isfinite(getattr(config, name)):
            raise UsageError(f"argument --{name.replace('_', '-')}: must be finite")
    for ok, flag, message in checks:
        if not ok:
            raise UsageError(f"argument {flag}: {message}")


# ------------------------------------------------------------------ running


def run(config: RunConfig, workers: int = 1) -> list[dict]:
    """Execute the configured mode; one dict per CSV row."""
    grid = config.theta_grid_deg()
    radians = [math.radians(t) for t in grid]
    rows = []
    if config.mode in ("proton", "photon"):
        kind = PairKind.SINGLET_SPINOR if config.mode == "proton" else PairKind.PHOTON_VECTOR
        source = SourceConfig(kind, config.triplet_fraction if kind.is_spinor else 0.0, config.seed)
        for deg, res in zip(grid, run_sweep(source, radians, config.pairs, config.strategy,
                                            rotation_sign=config.rotation_sign, workers=workers)):
            rows.append(_correlation_row(deg, res))
    elif config.mode == "photon4":
        source = SourceConfig(PairKind.PHOTON_VECTOR, seed=config.seed)
        sweep = run_four_angle_sweep(source, radians, config.pairs, config.strategy,
                                     rotation_sign=config.rotation_sign, workers=workers)
        for deg, res in zip(grid, sweep):
            row = _correlation_row(deg, res.components[0])
            row["gamma4"] = res.gamma4
            row["gamma4_se"] = res.std_error
            row["chsh_violation"] = chsh_bound_check(res).violation
            row["_qm4"] = res.qm_reference
            rows.append(row)
    elif config.mode == "malus":
        for i, (deg, theta) in enumerate(zip(grid, radians)):
            res = run_malus_sequence(1, theta, config.pairs, seed=config.seed, stream=(i,),
                                     rotation_sign=config.rotation_sign, workers=workers)
            rows.append({
                "theta_deg": deg, "n_plus": res.n_plus, "n_minus": res.n_minus,
                "n_degenerate": res.n_degenerate, "fraction": res.fraction,
                "std_error": res.std_error, "malus_reference": res.reference,
            })
    elif config.mode == "ineq5":
        source = SourceConfig(PairKind.PHOTON_VECTOR, seed=config.seed)
        for i, (deg, theta) in enumerate(zip(grid, radians)):
            rep = inequality5_diagnostic(source.with_stream(i), *chsh_settings(theta),
                                         n_pairs=config.pairs, rotation_sign=config.rotation_sign,
                                         workers=workers)
            rows.append({
                "theta_deg": deg, "n": rep.n, "n_degenerate": rep.n_degenerate,
                "gamma4": rep.gamma4, "lhs": rep.lhs, "rhs": rep.rhs,
                "sign_change_fraction": rep.sign_change_fraction,
            })
    elif config.mode == "eigcheck":
        for name, value in eigencheck(config.pairs, config.seed).items():
            rows.append({"quantity": name, "max_residual": value, "tolerance": RESIDUAL_TOL,
                         "pass": value <= RESIDUAL_TOL})
    elif config.mode == "oracle":
        for kind in (PairKind.SINGLET_SPINOR, PairKind.PHOTON_VECTOR):
            for deg, theta in zip(grid, radians):
                value = model_expectation_oracle(theta, kind, config.strategy,
                                                 rotation_sign=config.rotation_sign)
                closed = model_closed_form(kind, config.strategy, theta)
                rows.append({
                    "theta_deg": deg, "kind": kind.name.lower(), "strategy": config.strategy,
                    "oracle": value, "closed_form": closed, "abs_diff": abs(value - closed),
                })
    return rows


def _correlation_row(deg, res) -> dict:
    c = res.counts
    return {
        "theta_deg": deg, "n_pp": c.n_pp, "n_pm": c.n_pm, "n_mp": c.n_mp, "n_mm": c.n_mm,
        "n_degenerate": c.n_degenerate, "gamma": res.gamma, "std_error": res.std_error,
        "qm_reference": res.qm_reference,
    }


def header_for(mode: str) -> list[str]:
    return {
        "proton": CORRELATION_HEADER,
        "photon": CORRELATION_HEADER,
        "photon4": CORRELATION_HEADER + FOUR_ANGLE_EXTRA,
        "malus": MALUS_HEADER,
        "ineq5": INEQ5_HEADER,
        "eigcheck": EIGCHECK_HEADER,
        "oracle": ORACLE_HEADER,
    }[mode]


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def format_csv(rows: list[dict], config: RunConfig) -> str:
    buf = io.StringIO()
    buf.write("# qda " + shlex.join(config.to_argv()) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    header = header_for(config.mode)
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row[h]) for h in header])
    return buf.getvalue()


def config_from_csv(text: str) -> RunConfig:
    """Recover the RunConfig echoed in a CSV's first line."""
    first = text.splitlines()[0]
    if not first.startswith("# qda "):
        raise ValueError("missing '# qda' header comment")
    return parse_config(shlex.split(first[len("# qda "):]), environ={})


def emit_results(rows: list[dict], config: RunConfig, out=None) -> str:
    """Write the CSV to ``config.output_path`` and a summary to ``out``.

    Raises OSError if the path cannot be written.
    """
    out = sys.stdout if out is None else out
    text = format_csv(rows, config)
    with open(config.output_path, "w", newline="") as fh:
        fh.write(text)
    out.write(summary(rows, config))
    return text


def summary(rows: list[dict], config: RunConfig) -> str:
    lines = [f"qda mode={config.mode} seed={config.seed} strategy={config.strategy} "
             f"backend={_kernels.BACKEND}"]
    if config.mode == "eigcheck":
        lines.append(f"random matrices: {config.pairs}")
        for r in rows:
            lines.append(f"  {r['quantity']:<18} {r['max_residual']:.3e}  {'ok' if r['pass'] else 'FAIL'}")
        return "\n".join(lines) + "\n"
    if config.mode == "oracle":
        worst = max((r["abs_diff"] for r in rows), default=0.0)
        lines.append(f"oracle points: {len(rows)}  max |oracle - closed form| = {worst:.2e}")
        return "\n".join(lines) + "\n"
    settings = {"photon4": 3}.get(config.mode, 1)
    lines.append(f"total pairs: {config.pairs * settings * len(rows)} "
                 f"({config.pairs} per setting, {len(rows)} angles)")
    if config.mode in ("proton", "photon"):
        lines.append(f"{'theta':>7} {'gamma':>9} {'se':>8} {'qm':>9}")
        for r in rows:
            lines.append(f"{r['theta_deg']:7.2f} {r['gamma']:9.5f} {r['std_error']:8.5f} "
                         f"{r['qm_reference']:9.5f}")
    elif config.mode == "photon4":
        lines.append(f"{'theta':>7} {'gamma4':>9} {'se':>8} {'qm':>9}  CHSH")
        for r in rows:
            lines.append(f"{r['theta_deg']:7.2f} {r['gamma4']:9.5f} {r['gamma4_se']:8.5f} "
                         f"{r['_qm4']:9.5f}  {'VIOLATED' if r['chsh_violation'] else '-'}")
    elif config.mode == "malus":
        lines.append(f"{'theta':>7} {'fraction':>9} {'cos^2':>9}")
        for r in rows:
            lines.append(f"{r['theta_deg']:7.2f} {r['fraction']:9.5f} {r['malus_reference']:9.5f}")
    elif config.mode == "ineq5":
        lines.append(f"{'theta':>7} {'|g4|':>9} {'bound':>9} {'flip':>7}")
        for r in rows:
            lines.append(f"{r['theta_deg']:7.2f} {r['lhs']:9.5f} {r['rhs']:9.5f} "
                         f"{r['sign_change_fraction']:7.4f}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ plotting

_PLOT_SPECS = {
    # mode: (y column, error column or None, reference expression, y label)
    "proton": ("gamma", "std_error", None, "gamma(theta)"),
    "photon": ("gamma", "std_error", "cos(2*d2r(x))", "gamma(theta)"),
    "photon4": ("gamma4", "gamma4_se", "3*cos(2*d2r(x)) - cos(6*d2r(x))", "gamma_4(theta)"),
    "malus": ("fraction", "std_error", "cos(d2r(x))**2", "transmitted fraction"),
    "ineq5": ("lhs", None, "3*cos(2*d2r(x)) - cos(6*d2r(x))", "|gamma_4| and bound"),
    "oracle": ("oracle", None, None, "E[AB]"),
}


def plot_script(rows: list[dict], config: RunConfig, csv_name: str | None = None) -> str:
    """Self-contained gnuplot script: data inline, reference curves analytic."""
    if config.mode not in _PLOT_SPECS:
        raise ValueError(f"no plot for mode {config.mode!r}")
    ycol, ecol, ref, ylabel = _PLOT_SPECS[config.mode]
    lines = [
        "# gnuplot script written by qda",
        "# " + shlex.join(config.to_argv()),
        f"set terminal pngcairo size 800,600",
        f"set output '{os.path.splitext(csv_name or config.output_path)[0]}.png'",
        "d2r(x) = x*pi/180",
        "set xlabel 'theta (deg)'",
        f"set ylabel '{ylabel}'",
        f"set xrange [{config.theta_start!r}:{config.theta_end!r}]",
        "set key outside bottom center horizontal",
    ]
    if rows:
        lines.append("$data << EOD")
        for r in rows:
            cols = [_fmt(r["theta_deg"]), _fmt(r[ycol]), _fmt(r[ecol]) if ecol else "0"]
            if config.mode == "ineq5":
                cols.append(_fmt(r["rhs"]))
            lines.append(" ".join(cols))
        lines.append("EOD")
    curves = []
    if rows:
        style = "with yerrorbars" if ecol else "with points"
        curves.append(f"$data using 1:2:3 {style} pt 7 title 'simulated'")
        if config.mode == "ineq5":
            curves.append("$data using 1:4 with points pt 5 title 'per-trial bound'")
    if config.mode == "proton":
        curves.append("-cos(d2r(x)) with lines lw 2 title '-cos(theta)'")
        if config.triplet_fraction:
            f = config.triplet_fraction
            curves.append(f"-(1-2*{f!r})*cos(d2r(x)) with lines dt 3 title 'mixture'")
    elif ref:
        curves.append(f"{ref} with lines lw 2 title 'quantum mechanics'")
    if config.mode in ("photon4", "ineq5"):
        curves.append("2 with lines dt 2 lc rgb 'black' title 'CHSH limits'")
        curves.append("-2 with lines dt 2 lc rgb 'black' notitle")
    lines.append("plot " + ", \\\n     ".join(curves))
    return "\n".join(lines) + "\n"


def emit_plot_script(rows: list[dict], config: RunConfig, err=None) -> str:
    err = sys.stderr if err is None else err
    if not rows:
        err.write("qda: warning: no results; plot script has reference curves only\n")
    path = os.path.splitext(config.output_path)[0] + ".gp"
    with open(path, "w") as fh:
        fh.write(plot_script(rows, config))
    return path


def main(argv=None) -> int:
    try:
        config, ns = parse_args(argv)
    except UsageError as exc:
        _parser().print_usage(sys.stderr)
        sys.stderr.write(f"qda: error: {exc}\n")
        return EXIT_USAGE
    try:
        rows = run(config, workers=ns.workers)
    except OracleConvergenceError as exc:
        sys.stderr.write(f"qda: {exc}\n")
        return EXIT_ORACLE
    try:
        emit_results(rows, config)
        if config.plot:
            if config.mode in _PLOT_SPECS:
                emit_plot_script(rows, config)
            else:
                sys.stderr.write(f"qda: warning: no plot for mode {config.mode}\n")
    except OSError as exc:
        sys.stderr.write(f"qda: cannot write output: {exc}\n")
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
