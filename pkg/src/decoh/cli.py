"""Experiment runner: every subsystem as a reproducible command.

Configuration is a flat ``key = value`` text file (a TOML-compatible subset:
``#`` comments, blank lines, optional quotes around strings); command-line
flags override file values. All randomness flows from the single config seed;
replicated runs derive per-replica seeds as seed XOR replica_index.

Exit codes: 0 success, 1 numerical failure, 2 configuration error. No file is
written before the full configuration validates.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .classical import euler_comparison, integrate_trajectory
from .core import PhaseSpacePoint, PhysicalConstants, PotentialSpec, SpatialGrid, hamiltonian_value
from .decoherence import (
    bracket_expansion,
    commutation_function,
    hamilton_rate_extraction,
    most_likely_destination,
    transition_amplitudes,
)
from .errors import (
    ConfigurationError,
    DegenerateFitError,
    InsufficientSamplesError,
    NumericalError,
    StabilityError,
)
from .output import ensure_writable_dir, write_csv, write_summary
from .schrodinger import ehrenfest_residuals, init_gaussian_packet, propagate_with_records, superposition_demo
from .stochastic import ThermostatParams, sample_canonical, stochastic_step

COMMANDS = (
    "ehrenfest",
    "classical",
    "stochastic",
    "bracket",
    "rates",
    "transitions",
    "commutation",
    "superposition",
)

# key -> (type, default, help); None default means "required unless defaulted per command"
GLOBAL_SCHEMA = {
    "command": (str, None, "experiment to run"),
    "potential": (str, "harmonic", "free|harmonic|quartic|double_well|cosine"),
    "k": (float, 1.0, "harmonic spring constant"),
    "a": (float, 1.0, "quartic / double-well quartic coefficient"),
    "b": (float, 1.0, "double-well quadratic coefficient"),
    "amplitude": (float, 1.0, "cosine amplitude"),
    "wavenumber": (float, 0.19634954084936207, "cosine wavenumber (2*pi/L * integer)"),
    "hbar": (float, 1.0, "Planck constant over 2*pi"),
    "mass": (float, 1.0, "particle mass"),
    "kB": (float, 1.0, "Boltzmann constant"),
    "seed": (int, 0, "master seed; replica i uses seed XOR i"),
    "output_dir": (str, None, "output directory (falls back to $DECOH_OUTPUT_DIR)"),
}

COMMAND_SCHEMA = {
    "ehrenfest": {
        "box_length": (float, 32.0, "periodic box length"),
        "n_points": (int, 1024, "grid points (power of two)"),
        "q0": (float, 2.0, "packet center"),
        "p0": (float, 0.0, "packet momentum"),
        "width": (float, 1.0, "packet position std"),
        "tau": (float, 1e-3, "propagation step"),
        "n_steps": (int, 6000, "number of steps"),
        "record_stride": (int, 10, "steps between records"),
    },
    "classical": {
        "q0": (float, 1.0, "initial position"),
        "p0": (float, 0.0, "initial momentum"),
        "tau": (float, 1e-3, "integration step"),
        "n_steps": (int, 10000, "number of steps"),
        "record_stride": (int, 10, "steps between records"),
        "compare_euler": (int, 1, "1: also report the Euler drift ratio"),
    },
    "stochastic": {
        "q0": (float, 0.0, "initial position"),
        "p0": (float, 0.0, "initial momentum"),
        "sigma2": (float, 0.02, "per-step random-force variance"),
        "tau": (float, 0.01, "step size (must be positive)"),
        "temperature": (float, 1.0, "reservoir temperature"),
        "n_steps": (int, 20000, "total steps"),
        "burn_in": (int, 2000, "discarded steps"),
        "stride": (int, 10, "steps between retained samples"),
    },
    "bracket": {
        "x_q": (float, 1.0, "phase-space position"),
        "x_p": (float, 1.0, "phase-space momentum"),
        "tau_max": (float, 1e-2, "largest step of the halving sequence"),
        "n_tau": (int, 5, "length of the halving sequence"),
    },
    "rates": {
        "x_q": (float, 2.0, "phase-space position"),
        "x_p": (float, 1.0, "phase-space momentum"),
        "tau_max": (float, 2.5e-4, "largest step of the halving sequence"),
        "n_tau": (int, 5, "length of the halving sequence"),
    },
    "transitions": {
        "box_length": (float, 32.0, "periodic box length"),
        "n_points": (int, 64, "grid points (power of two)"),
        "mode": (int, 3, "source momentum mode"),
        "tau": (float, 1e-3, "propagation interval"),
    },
    "commutation": {
        "box_length": (float, 32.0, "periodic box length"),
        "n_points": (int, 64, "grid points (<= 256)"),
        "mode": (int, 4, "momentum mode"),
        "q_index": (int, 32, "grid index of the evaluation point"),
        "beta_max": (float, 0.16, "largest inverse temperature"),
        "n_beta": (int, 5, "length of the beta-halving sequence"),
    },
    "superposition": {
        "box_length": (float, 32.0, "periodic box length"),
        "n_points": (int, 256, "grid points (power of two)"),
        "mode_a": (int, 20, "first momentum mode"),
        "mode_b": (int, None, "second momentum mode (omit for a single-state run)"),
        "horizon": (float, 6.283185307179586, "evolution horizon"),
        "tau": (float, 2e-3, "propagation step"),
        "record_stride": (int, 25, "steps between records"),
    },
}


@dataclass
class ExperimentConfig:
    command: str
    potential: PotentialSpec
    constants: PhysicalConstants
    seed: int
    output_dir: str
    options: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.options[key]


def split_seed(seed: int, replica_index: int) -> int:
    """Documented per-replica seed derivation."""
    return seed ^ replica_index


def _coerce(key, raw, typ):
    if isinstance(raw, typ):
        return raw
    text = str(raw).strip().strip('"').strip("'")
    if typ is str:
        return text
    if typ is int:
        try:
            return int(text)
        except ValueError:
            try:
                f = float(text)
            except ValueError:
                raise ConfigurationError(f"key {key!r}: expected int, got {text!r}")
            if f.is_integer():
                return int(f)
            raise ConfigurationError(f"key {key!r}: expected int, got {text!r}")
    try:
        return float(text)
    except ValueError:
        raise ConfigurationError(f"key {key!r}: expected float, got {text!r}")


def read_config_file(path):
    """Flat key = value lines; later duplicates win with a warning."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = body.partition("=")
            key = key.strip()
            value = value.strip()
            if key in values:
                print(f"warning: duplicate key {key!r}; last occurrence wins", file=sys.stderr)
            values[key] = value
    return values


def _build_potential(values) -> PotentialSpec:
    kind = values["potential"]
    if kind == "free":
        return PotentialSpec.free()
    if kind == "harmonic":
        return PotentialSpec.harmonic(values["k"])
    if kind == "quartic":
        return PotentialSpec.quartic(values["a"])
    if kind == "double_well":
        return PotentialSpec.double_well(values["a"], values["b"])
    if kind == "cosine":
        return PotentialSpec.cosine(values["amplitude"], values["wavenumber"])
    raise ConfigurationError(f"key 'potential': unknown kind {kind!r}")


def parse_config(command: str, file_values: dict, flag_values: dict) -> ExperimentConfig:
    """Merge file values and flag overrides against the command's schema."""
    if command not in COMMANDS:
        raise ConfigurationError(f"unknown command {command!r}")
    schema = dict(GLOBAL_SCHEMA)
    schema.update(COMMAND_SCHEMA[command])

    merged = {}
    for source in (file_values, flag_values):
        for key, raw in source.items():
            if key not in schema:
                raise ConfigurationError(f"unknown key {key!r}")
            merged[key] = raw

    if "command" in merged:
        declared = _coerce("command", merged.pop("command"), str)
        if declared != command:
            raise ConfigurationError(f"config declares command {declared!r}, invoked as {command!r}")

    values = {}
    for key, (typ, default, _help) in schema.items():
        if key == "command":
            continue
        if key in merged:
            values[key] = _coerce(key, merged[key], typ)
        else:
            values[key] = default

    if values["output_dir"] is None:
        values["output_dir"] = os.environ.get("DECOH_OUTPUT_DIR")
    if not values["output_dir"]:
        raise ConfigurationError("key 'output_dir' is required (or set DECOH_OUTPUT_DIR)")

    constants = PhysicalConstants(hbar=values["hbar"], mass=values["mass"], kB=values["kB"])
    potential = _build_potential(values)

    # command-specific invariants, checked before any computation
    if command == "stochastic":
        if values["tau"] <= 0:
            raise ConfigurationError("key 'tau': stochastic runs require tau > 0")
        ThermostatParams(values["sigma2"], values["tau"], values["temperature"]).drag_per_step(constants)
        if values["burn_in"] >= values["n_steps"]:
            raise ConfigurationError("key 'burn_in': must be smaller than n_steps")
    if command in ("ehrenfest", "transitions", "commutation", "superposition"):
        SpatialGrid(values["box_length"], values["n_points"], constants.hbar)
    if command in ("bracket", "rates") and values["n_tau"] < 5:
        raise ConfigurationError("key 'n_tau': need at least 5 halving values")
    if command in ("ehrenfest", "classical") and values["n_steps"] % values["record_stride"] != 0:
        raise ConfigurationError("key 'record_stride': must divide n_steps")
    if command == "ehrenfest":
        grid = SpatialGrid(values["box_length"], values["n_points"], constants.hbar)
        if not (4 * grid.spacing <= values["width"] <= values["box_length"] / 8):
            raise ConfigurationError("key 'width': outside [4*spacing, box_length/8]")
    if command in ("transitions", "commutation"):
        half = values["n_points"] // 2
        if not (-half <= values["mode"] < half):
            raise ConfigurationError(f"key 'mode': outside [-{half}, {half})")
    if command == "commutation":
        if values["n_points"] > 256:
            raise ConfigurationError("key 'n_points': commutation requires n_points <= 256")
        if not (0 <= values["q_index"] < values["n_points"]):
            raise ConfigurationError("key 'q_index': outside the grid")
    if command == "superposition":
        half = values["n_points"] // 2
        for key in ("mode_a", "mode_b"):
            if values[key] is not None and not (-half <= values[key] < half):
                raise ConfigurationError(f"key {key!r}: outside [-{half}, {half})")
        if values["mode_b"] is not None and values["mode_a"] == values["mode_b"]:
            raise ConfigurationError("key 'mode_b': must differ from mode_a")
        if values["horizon"] <= 0:
            raise ConfigurationError("key 'horizon': must be positive")

    plumbing = ("hbar", "mass", "kB", "seed", "output_dir", "potential", "k", "a", "b", "amplitude", "wavenumber")
    options = {k: v for k, v in values.items() if k not in plumbing}
    return ExperimentConfig(
        command=command,
        potential=potential,
        constants=constants,
        seed=values["seed"],
        output_dir=values["output_dir"],
        options=options,
    )


def _run_ehrenfest(cfg: ExperimentConfig):
    grid = SpatialGrid(cfg["box_length"], cfg["n_points"], cfg.constants.hbar)
    psi = init_gaussian_packet(grid, cfg["q0"], cfg["p0"], cfg["width"])
    _, records = propagate_with_records(
        psi, cfg.potential, cfg.constants, cfg["tau"], cfg["n_steps"], cfg["record_stride"]
    )
    _, r_q, r_p = ehrenfest_residuals(records, cfg.potential, cfg.constants)
    rows = []
    for i, r in enumerate(records):
        interior = 1 <= i <= len(records) - 2
        rows.append(
            (
                r.time,
                r.q_mean,
                r.p_mean,
                r.energy_mean,
                r.q_var,
                r.p_var,
                r_q[i - 1] if interior else None,
                r_p[i - 1] if interior else None,
            )
        )
    header = ["time", "q_mean", "p_mean", "energy", "q_var", "p_var", "r_q", "r_p"]
    results = [("max_r_q", float(np.max(np.abs(r_q)))), ("max_r_p", float(np.max(np.abs(r_p))))]
    return header, rows, results


def _run_classical(cfg: ExperimentConfig):
    x0 = PhaseSpacePoint([cfg["q0"]], [cfg["p0"]])
    traj = integrate_trajectory(x0, cfg.potential, cfg.constants, cfg["tau"], cfg["n_steps"], cfg["record_stride"])
    d = traj.q.shape[1]
    header = ["time"] + [f"q{i}" for i in range(d)] + [f"p{i}" for i in range(d)] + ["energy"]
    rows = [
        tuple([traj.times[i]] + list(traj.q[i]) + list(traj.p[i]) + [traj.energies[i]])
        for i in range(len(traj.times))
    ]
    drift = float(np.max(np.abs(traj.energies - traj.energies[0]) / max(abs(traj.energies[0]), 1e-300)))
    results = [("energy_drift_rel", drift)]
    if cfg["compare_euler"]:
        rep = euler_comparison(x0, cfg.potential, cfg.constants, cfg["tau"], cfg["n_steps"])
        results += [("euler_verlet_drift_ratio", rep.ratio), ("euler_monotone", rep.euler_monotone)]
    return header, rows, results


def _run_stochastic(cfg: ExperimentConfig):
    params = ThermostatParams(cfg["sigma2"], cfg["tau"], cfg["temperature"])
    seed = split_seed(cfg.seed, 0)
    stats = sample_canonical(
        cfg.potential,
        cfg.constants,
        params,
        cfg["n_steps"],
        cfg["burn_in"],
        cfg["stride"],
        seed,
        x0=PhaseSpacePoint([cfg["q0"]], [cfg["p0"]]),
    )
    # re-run the identical chain to emit the trajectory rows
    rng = np.random.default_rng(seed)
    x = PhaseSpacePoint([cfg["q0"]], [cfg["p0"]])
    rows = []
    for i in range(1, cfg["n_steps"] + 1):
        x = stochastic_step(x, params, cfg.constants, cfg.potential, rng)
        if i > cfg["burn_in"] and (i - cfg["burn_in"]) % cfg["stride"] == 0:
            rows.append((i, x.q[0], x.p[0], hamiltonian_value(cfg.constants, cfg.potential, x)))
    header = ["step", "q0", "p0", "energy"]
    results = [
        ("p2_moment", stats.p_second_moment),
        ("q2_moment", stats.q_second_moment),
        ("ks_stat", stats.ks_statistic),
        ("n", stats.n_samples),
        ("ks_n", stats.ks_n),
        ("ks_variable", stats.ks_variable),
    ]
    return header, rows, results


def _tau_list(cfg):
    return [cfg["tau_max"] * 0.5**i for i in range(cfg["n_tau"])]


def _run_bracket(cfg: ExperimentConfig):
    x = PhaseSpacePoint([cfg["x_q"]], [cfg["x_p"]])
    taus = _tau_list(cfg)
    header = ["tau", "abs_bracket_minus_one", "rule"]
    rows = []
    results = []
    for rule in ("hamilton", "frozen", "anti"):
        report = bracket_expansion(cfg.potential, cfg.constants, x, rule, taus)
        for t, e in zip(report.tau_values, report.bracket_errors):
            rows.append((float(t), float(e), rule))
        results.append((f"fitted_slope_{rule}", report.fitted_slope))
    return header, rows, results


def _run_rates(cfg: ExperimentConfig):
    x = PhaseSpacePoint([cfg["x_q"]], [cfg["x_p"]])
    res = hamilton_rate_extraction(cfg.potential, cfg.constants, x, _tau_list(cfg))
    header = ["tau", "alpha", "gamma"]
    rows = [(t, a, g) for t, a, g in zip(_tau_list(cfg), res.alpha_series, res.gamma_series)]
    results = [
        ("alpha", res.alpha),
        ("gamma", res.gamma),
        ("q_dot", float(res.q_dot[0])),
        ("p_dot", float(res.p_dot[0])),
        ("converged", res.converged),
    ]
    if not res.converged:
        raise NumericalError(
            "rate extrapolation did not converge: "
            f"alpha={res.alpha!r} gamma={res.gamma!r}"
        )
    return header, rows, results


def _run_transitions(cfg: ExperimentConfig):
    grid = SpatialGrid(cfg["box_length"], cfg["n_points"], cfg.constants.hbar)
    table = transition_amplitudes(grid, cfg.potential, cfg.constants, cfg["mode"], cfg["tau"])
    header = ["n_prime", "re", "im", "prob"]
    rows = [
        (int(m), a.real, a.imag, float(abs(a) ** 2))
        for m, a in zip(table.modes, table.amplitudes)
    ]
    results = [
        ("source_mode", table.source_mode),
        ("most_likely", most_likely_destination(table)),
        ("prob_sum", float(np.sum(np.abs(table.amplitudes) ** 2))),
    ]
    return header, rows, results


def _run_commutation(cfg: ExperimentConfig):
    grid = SpatialGrid(cfg["box_length"], cfg["n_points"], cfg.constants.hbar)
    betas = [cfg["beta_max"] * 0.5**i for i in range(cfg["n_beta"])]
    header = ["beta", "omega_re", "omega_im", "abs_omega_minus_one"]
    rows = []
    deviations = []
    for beta in betas:
        w = commutation_function(grid, cfg.potential, cfg.constants, beta, cfg["mode"], cfg["q_index"])
        deviations.append(abs(w - 1.0))
        rows.append((beta, w.real, w.imag, abs(w - 1.0)))
    monotone = all(deviations[i] > deviations[i + 1] for i in range(len(deviations) - 1))
    results = [
        ("monotone_decreasing", monotone),
        ("final_abs_omega_minus_one", deviations[-1]),
    ]
    return header, rows, results


def _run_superposition(cfg: ExperimentConfig):
    grid = SpatialGrid(cfg["box_length"], cfg["n_points"], cfg.constants.hbar)
    rep = superposition_demo(
        grid,
        cfg.potential,
        cfg.constants,
        cfg["mode_a"],
        cfg["mode_b"],
        cfg["horizon"],
        cfg["tau"],
        cfg["record_stride"],
    )
    header = ["time", "q_mean", "p_mean", "branch_a_q", "branch_a_p", "branch_b_q", "branch_b_p"]
    two = len(rep.branch_q) == 2
    rows = []
    for i in range(len(rep.times)):
        rows.append(
            (
                rep.times[i],
                rep.q_mean[i],
                rep.p_mean[i],
                rep.branch_q[0][i],
                rep.branch_p[0][i],
                rep.branch_q[1][i] if two else None,
                rep.branch_p[1][i] if two else None,
            )
        )
    results = [
        ("non_classical", rep.non_classical),
        ("min_max_deviation", rep.min_max_deviation),
        ("threshold", rep.threshold),
    ]
    return header, rows, results


RUNNERS = {
    "ehrenfest": _run_ehrenfest,
    "classical": _run_classical,
    "stochastic": _run_stochastic,
    "bracket": _run_bracket,
    "rates": _run_rates,
    "transitions": _run_transitions,
    "commutation": _run_commutation,
    "superposition": _run_superposition,
}


def run_experiment(cfg: ExperimentConfig) -> int:
    """Execute a validated config; write <command>.csv and summary.txt."""
    if not ensure_writable_dir(cfg.output_dir):
        print(f"error: output_dir {cfg.output_dir!r} is not writable", file=sys.stderr)
        return 2
    started = time.perf_counter()
    base = [
        ("command", cfg.command),
        ("seed", cfg.seed),
        ("version", f"decoh-{__version__}"),
        ("potential", cfg.potential.kind),
    ]
    base += sorted((f"potential_{k}", v) for k, v in cfg.potential.params.items())
    base += [
        ("hbar", cfg.constants.hbar),
        ("mass", cfg.constants.mass),
        ("kB", cfg.constants.kB),
    ]
    base += sorted((k, v) for k, v in cfg.options.items() if v is not None)
    summary_path = os.path.join(cfg.output_dir, "summary.txt")
    try:
        header, rows, results = RUNNERS[cfg.command](cfg)
    except ConfigurationError as err:
        # late validation failures count as config errors; nothing written
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (NumericalError, StabilityError, DegenerateFitError, InsufficientSamplesError) as err:
        wall = time.perf_counter() - started
        write_summary(
            summary_path,
            base + [("error", str(err)), ("wall_time_s", wall), ("exit_intent", 1)],
        )
        print(f"error: {err}", file=sys.stderr)
        return 1
    write_csv(os.path.join(cfg.output_dir, f"{cfg.command}.csv"), header, rows)
    wall = time.perf_counter() - started
    write_summary(summary_path, base + results + [("wall_time_s", wall), ("exit_intent", 0)])
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="decoh",
        description="Quantum-classical correspondence laboratory experiment runner.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        schema = dict(GLOBAL_SCHEMA)
        schema.update(COMMAND_SCHEMA[command])
        p = sub.add_parser(command, help=f"run the {command} experiment")
        p.add_argument("--config", help="flat key = value config file")
        for key, (typ, default, help_text) in schema.items():
            if key == "command":
                continue
            shown = "required" if default is None and key == "output_dir" else f"default: {default}"
            p.add_argument(f"--{key}", dest=key, default=None, metavar=typ.__name__.upper(),
                           help=f"{help_text} ({shown})")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    flag_values = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "config") and v is not None
    }
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = parse_config(args.command, file_values, flag_values)
    except (ConfigurationError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())
