"""Command-line surface: purity queries, channel simulation, correction,
variance sweeps and figure-data reproduction as CSV.

Every command is deterministic given its configuration and seed.  CSV goes
to stdout (or --output); JSON summaries go to stderr (or --json).  Exit
codes: 0 success, 2 invalid configuration, 3 singular corrector.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import channels, correction, figures, network, purity, variance
from .beamsplitter import PhysicalParams, physics_summary
from .states import (
    QubitRegisterState,
    apply_dephasing,
    make_classical_correlated,
    make_cluster,
    make_ghz,
    make_macro_superposition,
    make_phi_state,
    make_werner,
)

FAMILIES = ("ghz", "macro", "phi", "cluster", "werner", "classical")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SINGULAR = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Parsed command configuration; validated before execution."""

    command: str
    n: int = 0
    family: str = "ghz"
    gamma: complex = 0.0
    phi: float = math.pi
    dephase: float = 0.0
    werner_d: float = 0.0
    q: float = 0.0
    p: float = 0.0
    sigma: float = 0.0
    wavelength: float = 1.0
    physical: PhysicalParams | None = None
    n_runs: int = 0
    seed: int = 0
    method: str = "explicit"
    mode: str = "combined"
    k: int | None = None
    unconstrained: bool = False
    subsets: bool = False
    figure_index: int = 0
    which: str = "both"
    output: str | None = None
    json_path: str | None = None
    out_dir: str = "."
    input_path: str | None = None
    threads: int = 1
    svg: bool = False
    overrides: dict = field(default_factory=dict)


def build_state(cfg: RunConfig) -> QubitRegisterState:
    if cfg.n < 1:
        raise ConfigError("--n must be at least 1")
    if cfg.family == "ghz":
        state = make_ghz(cfg.n)
    elif cfg.family == "macro":
        state = make_macro_superposition(cfg.n, cfg.gamma)
    elif cfg.family == "phi":
        state = make_phi_state(cfg.n, cfg.phi)
    elif cfg.family == "cluster":
        state = make_cluster(cfg.n)
    elif cfg.family == "werner":
        state = make_werner(cfg.n, cfg.werner_d)
    elif cfg.family == "classical":
        state = make_classical_correlated(cfg.n)
    else:
        raise ConfigError(f"unknown family {cfg.family!r}")
    if cfg.dephase > 0.0:
        state = apply_dephasing(state, cfg.dephase)
    return state


def _open_output(cfg: RunConfig):
    if cfg.output:
        return open(cfg.output, "w", newline="")
    return sys.stdout


def _emit_json(cfg: RunConfig, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True)
    if cfg.json_path:
        Path(cfg.json_path).write_text(text + "\n")
    else:
        print(text, file=sys.stderr)


def _mask_key(bits: int, n: int) -> str:
    return format(bits, f"0{n}b")


def cmd_purities(cfg: RunConfig) -> int:
    state = build_state(cfg)
    profile = purity.avpur_profile(state)
    verdict = purity.check_subset_inequalities(profile)
    out = _open_output(cfg)
    try:
        purity.profile_to_csv(profile, out)
        if cfg.subsets:
            if cfg.n > 10:
                raise ConfigError("--subsets requires n <= 10")
            out.write("\n")
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(["mask", "purity"])
            for bits, val in sorted(purity.all_subset_purities(state).items()):
                writer.writerow([_mask_key(bits, cfg.n), repr(float(val))])
    finally:
        if out is not sys.stdout:
            out.close()
    _emit_json(
        cfg,
        {
            "violated": verdict.violated,
            "margin": verdict.margin,
            "witness": verdict.witness,
            "tolerance": verdict.tolerance,
        },
    )
    return EXIT_OK


def cmd_pj(cfg: RunConfig) -> int:
    state = build_state(cfg)
    dist = network.singles_distribution(purity.avpur_profile(state))
    out = _open_output(cfg)
    try:
        network.distribution_to_csv(dist, out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_physics(cfg: RunConfig) -> int:
    if cfg.physical is None:
        raise ConfigError("physics requires --J, --delta-J, --U, --tau-d, --tau-s")
    print(json.dumps(physics_summary(cfg.physical), sort_keys=True))
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.n_runs < 1:
        raise ConfigError("--N must be at least 1")
    state = build_state(cfg)
    profile = purity.avpur_profile(state)
    errors = channels.ErrorParams(q=cfg.q, p=cfg.p, sigma=cfg.sigma, wavelength=cfg.wavelength)
    result = variance.monte_carlo_estimate(profile, errors, cfg.n_runs, cfg.seed, cfg.method)
    exact_reports = variance.state_variances(profile, cfg.p, cfg.q, "combined", cfg.method)
    verdict = purity.check_subset_inequalities(result.profile)
    out = _open_output(cfg)
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["k", "estimate", "std_error", "predicted_std_error"])
        for k in range(cfg.n + 1):
            writer.writerow(
                [
                    k,
                    repr(float(result.profile.avpur[k])),
                    repr(float(math.sqrt(result.estimate_variance[k]))),
                    repr(float(math.sqrt(max(exact_reports[k].value, 0.0) / cfg.n_runs))),
                ]
            )
    finally:
        if out is not sys.stdout:
            out.close()
    _emit_json(
        cfg,
        {
            "violated": verdict.violated,
            "margin": verdict.margin,
            "witness": verdict.witness,
            "method": result.method,
            "n_runs": cfg.n_runs,
            "seed": cfg.seed,
            "p": cfg.p,
            "q": cfg.q,
        },
    )
    return EXIT_OK


def _read_distribution_csv(path: str, n: int) -> network.OutcomeDistribution:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) != 2:
            raise ConfigError(f"expected two CSV columns, got {header!r}")
        vals = {int(row[0]): float(row[1]) for row in reader if row}
    probs = np.zeros(2 * n + 1)
    for idx, val in vals.items():
        if not 0 <= idx <= 2 * n:
            raise ConfigError(f"atom count {idx} outside 0..{2 * n}")
        probs[idx] = val
    return network.OutcomeDistribution(
        mode=network.SINGLES_COUNT, n=n, probs=probs, counts_atoms=True
    )


def cmd_correct(cfg: RunConfig) -> int:
    if not cfg.input_path:
        raise ConfigError("correct requires --input with an atom-count CSV")
    if cfg.n < 1:
        raise ConfigError("--n must be at least 1")
    dist = _read_distribution_csv(cfg.input_path, cfg.n)
    corrected = correction.correct_combined(dist, cfg.p, cfg.q, cfg.method)
    out = _open_output(cfg)
    try:
        purity.profile_to_csv(corrected.profile, out)
    finally:
        if out is not sys.stdout:
            out.close()
    verdict = purity.check_subset_inequalities(corrected.profile)
    _emit_json(
        cfg,
        {
            "violated": verdict.violated,
            "margin": verdict.margin,
            "detector_method": corrected.detector_method,
        },
    )
    return EXIT_OK


def cmd_variance(cfg: RunConfig) -> int:
    state = build_state(cfg)
    reports = variance.state_variances(
        purity.avpur_profile(state), cfg.p, cfg.q, cfg.mode, cfg.method
    )
    out = _open_output(cfg)
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["k", "variance", "bound", "method", "mode", "n", "p", "q"])
        for rep in reports:
            writer.writerow(
                [
                    rep.k,
                    repr(rep.value),
                    repr(rep.bound),
                    rep.method,
                    rep.mode,
                    rep.n,
                    repr(rep.p),
                    repr(rep.q),
                ]
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_worstcase(cfg: RunConfig) -> int:
    if cfg.k is None:
        raise ConfigError("worstcase requires --k")
    if not 0 <= cfg.k <= cfg.n:
        raise ConfigError(f"--k must lie in 0..{cfg.n}")
    wc = variance.worst_case_variance(
        cfg.n,
        cfg.k,
        p=cfg.p,
        q=cfg.q,
        mode=cfg.mode,
        method=cfg.method,
        constrain_pj=not cfg.unconstrained,
        seed=cfg.seed,
    )
    bound = variance.analytic_bounds(cfg.n, cfg.k, cfg.p, cfg.q, cfg.mode)
    out = _open_output(cfg)
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["k", "v_max", "bound", "mode", "method", "constrained"])
        writer.writerow(
            [cfg.k, repr(wc.value), repr(bound), cfg.mode, cfg.method, not cfg.unconstrained]
        )
        out.write("\n")
        purity.profile_to_csv(wc.profile, out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_figure(cfg: RunConfig) -> int:
    if cfg.figure_index not in figures.FIGURE_INDICES:
        raise ConfigError(f"unknown figure index {cfg.figure_index}; valid 1..8")
    overrides = dict(cfg.overrides)
    if cfg.figure_index == 5 and cfg.which != "both":
        overrides["which"] = cfg.which
    tables = figures.figure_data(cfg.figure_index, **overrides)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, table in tables.items():
        path = out_dir / f"{name}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(table.columns)
            for row in table.rows:
                writer.writerow([repr(float(v)) for v in row])
        written.append(str(path))
        if cfg.svg:
            _render_svg(table, out_dir / f"{name}.svg")
            written.append(str(out_dir / f"{name}.svg"))
    for path in written:
        print(path)
    return EXIT_OK


def _render_svg(table: figures.FigureTable, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    x = table.rows[:, 0]
    for idx, name in enumerate(table.columns[1:], start=1):
        ax.plot(x, table.rows[:, idx], label=name)
    ax.set_xlabel(table.columns[0])
    ax.legend(fontsize=8)
    fig.savefig(path, format="svg")
    plt.close(fig)


def _add_state_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--family", choices=FAMILIES, default="ghz")
    parser.add_argument("--n", type=int, required=True, help="register width")
    parser.add_argument("--gamma", type=complex, default=0j, help="macro family parameter")
    parser.add_argument("--phi", type=float, default=math.pi, help="phase-family angle")
    parser.add_argument("--dephase", type=float, default=0.0, help="apply phase noise d")
    parser.add_argument("--werner-d", type=float, default=0.0, help="Werner mixing weight")


def _add_io_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output", "-o", help="CSV destination (default stdout)")
    parser.add_argument("--json", dest="json_path", help="JSON summary destination")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latticeprobe",
        description="Pairwise beam-splitter entanglement detection toolkit",
    )
    parser.add_argument("--config", help="JSON file with defaults mirroring the flags")
    parser.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("LATTICEPROBE_THREADS", "1")),
        help="worker cap for parallel sections (env LATTICEPROBE_THREADS)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("purities", help="average purities and inequality verdict")
    _add_state_options(p)
    p.add_argument("--subsets", action="store_true", help="append per-mask purities (n <= 10)")
    _add_io_options(p)

    p = sub.add_parser("pj", help="singles-count distribution P(j)")
    _add_state_options(p)
    _add_io_options(p)

    p = sub.add_parser("physics", help="beam-splitter and loss-stage operating point")
    p.add_argument("--J", type=float, required=True)
    p.add_argument("--delta-J", type=float, default=0.0)
    p.add_argument("--U", type=float, default=0.0)
    p.add_argument("--tau-d", type=float, required=True)
    p.add_argument("--tau-s", type=float, required=True)

    p = sub.add_parser("simulate", help="finite-N Monte Carlo with correction")
    _add_state_options(p)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--N", dest="n_runs", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("explicit", "least-squares"), default="explicit")
    _add_io_options(p)

    p = sub.add_parser("correct", help="correct an observed atom-count CSV")
    p.add_argument("--input", dest="input_path", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--method", choices=("explicit", "least-squares"), default="explicit")
    _add_io_options(p)

    p = sub.add_parser("variance", help="per-k estimator variances for a state")
    _add_state_options(p)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--mode", choices=variance.MODES, default="combined")
    p.add_argument("--method", choices=("explicit", "least-squares"), default="explicit")
    _add_io_options(p)

    p = sub.add_parser("worstcase", help="maximize V_k over the purity box")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--mode", choices=variance.MODES, default="bs")
    p.add_argument("--method", choices=("explicit", "least-squares"), default="explicit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--unconstrained",
        action="store_true",
        help="drop the P(j) >= 0 feasibility constraint",
    )
    _add_io_options(p)

    p = sub.add_parser("figure", help="emit a reference figure's data series")
    p.add_argument("figure_index", type=int, metavar="INDEX", help="figure number 1..8")
    p.add_argument("--out", dest="out_dir", default=".")
    p.add_argument("--which", choices=("both", "worst", "cluster"), default="both")
    p.add_argument("--n", type=int, default=0, help="override the default register size")
    p.add_argument("--svg", action="store_true", help="also render simple SVG charts")
    return parser


_COMMANDS = {
    "purities": cmd_purities,
    "pj": cmd_pj,
    "physics": cmd_physics,
    "simulate": cmd_simulate,
    "correct": cmd_correct,
    "variance": cmd_variance,
    "worstcase": cmd_worstcase,
    "figure": cmd_figure,
}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if args.config:
        try:
            defaults = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        for key, val in defaults.items():
            if not hasattr(cfg, key):
                raise ConfigError(f"unknown config key {key!r}")
            setattr(cfg, key, val)
    for key, val in vars(args).items():
        if key in ("config",):
            continue
        if hasattr(cfg, key) and val is not None:
            setattr(cfg, key, val)
    if args.command == "physics":
        try:
            cfg.physical = PhysicalParams(
                J=args.J, delta_J=args.delta_J, U=args.U, tau_d=args.tau_d, tau_s=args.tau_s
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if args.command == "figure" and args.n:
        cfg.overrides["n"] = args.n
    if isinstance(cfg.gamma, str):
        cfg.gamma = complex(cfg.gamma)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return _COMMANDS[args.command](cfg)
    except correction.SingularCorrectionError as exc:
        print(f"latticeprobe: singular corrector: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (ConfigError, ValueError) as exc:
        print(f"latticeprobe: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
