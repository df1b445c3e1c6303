"""Scenario files, the worked-example catalog, and the command line front end.

Scenario files are INI text with sections [potential], [run], [solver],
[oracle], [output].  Unknown keys are errors so that typos in physics
parameters cannot pass silently.  All floating-point output is written
with 17 significant digits and repeated runs produce identical files.

Subcommands:

    solve <scenario>      run the master-equation solver, write the CSV
    oracle <scenario>     run the split-step oracle only, write its CSV
    compare <scenario>    solver plus oracle with per-sample deviations
    pathint <scenario>    forward-flow saddle path and fluctuation factor
    example <id> [--emit-scenario]   show (or emit as INI) a catalog entry

Exit codes: 0 when no sample failed root finding, 2 when any sample has
status no_root, 1 on configuration or I/O errors.  The environment
variable QCTRAJ_OUTPUT_DIR overrides the directory of output paths.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import os
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, QCTrajError, UnknownExample
from .master import (
    MasterResidualSpec,
    SampleStatus,
    SolverSettings,
    Trajectory,
    Variant,
    continue_trajectory,
)
from .model import PolynomialPotential
from .oracle import AverageSeries, SpatialGrid, init_gaussian, propagate_series
from .pathint import critical_path_free, flow_from_potential, prefactor_recursion

TRAJECTORY_HEADER = "T,lambda,omega_eff,residual,status"


@dataclass(frozen=True)
class OracleSettings:
    enabled: bool = False
    hbar: float = 1e-3
    eta: float = 0.1
    half_width: float = 8.0
    points: int = 4096
    dt: float = 1e-4
    absorb: bool = False


@dataclass(frozen=True)
class Scenario:
    """Everything one run needs: potential, variant, grid, solver, oracle."""

    potential: PolynomialPotential
    variant: Variant
    t_min: float
    t_max: float
    steps: int
    seed_lambda: float = 0.0
    x0: float = 0.0
    solver: SolverSettings = field(default_factory=SolverSettings)
    oracle: OracleSettings = field(default_factory=OracleSettings)
    output_path: str = "trajectory.csv"

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ConfigError("run.steps: must be >= 1")
        if self.t_min <= 0:
            raise ConfigError("run.t_min: must be positive")
        if self.steps > 1 and self.t_max <= self.t_min:
            raise ConfigError("run.t_max: must exceed t_min")

    def t_grid(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([self.t_min])
        return np.linspace(self.t_min, self.t_max, self.steps)


@dataclass
class RunReport:
    trajectory: Trajectory
    oracle_series: AverageSeries | None = None
    oracle_avg: np.ndarray | None = None  # variant-matched real comparison series
    deviations: np.ndarray | None = None

    def status_counts(self) -> dict[str, int]:
        return self.trajectory.status_counts()

    def exit_code(self) -> int:
        counts = self.status_counts()
        return 2 if counts.get(SampleStatus.NO_ROOT.value, 0) else 0


# ---------------------------------------------------------------------------
# scenario file format

_FLOAT_KEYS = {
    "potential": {
        "mass",
        "omega",
        "linear_bias",
        "drive_amp",
        "drive_freq",
        "coeff_3",
        "coeff_4",
        "coeff_5",
        "coeff_6",
        "coeff_7",
        "coeff_8",
    },
    "run": {"t_min", "t_max", "seed_lambda", "x0"},
    "solver": {"bracket_half_width", "tolerance"},
    "oracle": {"hbar", "eta", "half_width", "dt"},
}
_INT_KEYS = {
    "run": {"steps"},
    "solver": {"max_iterations", "scan_levels", "scan_subdivisions"},
    "oracle": {"points"},
}
_STR_KEYS = {"run": {"variant"}, "output": {"path"}}
_BOOL_KEYS = {"oracle": {"enabled", "absorb"}}


def _known_keys(section: str) -> set[str]:
    keys: set[str] = set()
    for table in (_FLOAT_KEYS, _INT_KEYS, _STR_KEYS, _BOOL_KEYS):
        keys |= table.get(section, set())
    return keys


def parse_scenario(text: str) -> Scenario:
    """Scenario from INI text.  Unknown sections or keys raise ConfigError."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario file: {exc}") from exc

    known_sections = {"potential", "run", "solver", "oracle", "output"}
    for section in cp.sections():
        if section not in known_sections:
            raise ConfigError(f"{section}: unknown section")
        for key in cp[section]:
            if key not in _known_keys(section):
                raise ConfigError(f"{section}.{key}: unknown key")

    def get(section: str, key: str, required: bool = False, default=None):
        if not cp.has_section(section) or key not in cp[section]:
            if required:
                raise ConfigError(f"{section}.{key}: missing required key")
            return default
        raw = cp[section][key]
        try:
            if key in _FLOAT_KEYS.get(section, set()):
                return float(raw)
            if key in _INT_KEYS.get(section, set()):
                return int(raw)
            if key in _BOOL_KEYS.get(section, set()):
                if raw.lower() in ("true", "1", "yes"):
                    return True
                if raw.lower() in ("false", "0", "no"):
                    return False
                raise ValueError(f"not a boolean: {raw}")
            return raw
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}: {exc}") from exc

    coeffs = {}
    for deg in range(3, 9):
        val = get("potential", f"coeff_{deg}")
        if val is not None and val != 0.0:
            coeffs[deg] = val
    try:
        pot = PolynomialPotential(
            mass=get("potential", "mass", required=True),
            harmonic_freq=get("potential", "omega", required=True),
            coeffs=coeffs,
            linear_bias=get("potential", "linear_bias", default=0.0),
            drive_amp=get("potential", "drive_amp", default=0.0),
            drive_freq=get("potential", "drive_freq", default=0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"potential: {exc}") from exc

    variant_name = get("run", "variant", required=True)
    try:
        variant = Variant(variant_name)
    except ValueError as exc:
        raise ConfigError(f"run.variant: unknown variant {variant_name!r}") from exc

    solver = SolverSettings(
        bracket_half_width=get("solver", "bracket_half_width", default=64.0),
        tolerance=get("solver", "tolerance", default=1e-10),
        max_iterations=get("solver", "max_iterations", default=200),
        scan_levels=get("solver", "scan_levels", default=14),
        scan_subdivisions=get("solver", "scan_subdivisions", default=8),
    )
    oracle = OracleSettings(
        enabled=get("oracle", "enabled", default=False),
        hbar=get("oracle", "hbar", default=1e-3),
        eta=get("oracle", "eta", default=0.1),
        half_width=get("oracle", "half_width", default=8.0),
        points=get("oracle", "points", default=4096),
        dt=get("oracle", "dt", default=1e-4),
        absorb=get("oracle", "absorb", default=False),
    )
    try:
        return Scenario(
            potential=pot,
            variant=variant,
            t_min=get("run", "t_min", required=True),
            t_max=get("run", "t_max", required=True),
            steps=get("run", "steps", required=True),
            seed_lambda=get("run", "seed_lambda", default=0.0),
            x0=get("run", "x0", default=0.0),
            solver=solver,
            oracle=oracle,
            output_path=get("output", "path", default="trajectory.csv"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return parse_scenario(handle.read())
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def scenario_text(sc: Scenario) -> str:
    """Render a scenario as INI text; parse_scenario inverts this exactly."""
    pot = sc.potential
    lines = [
        "[potential]",
        f"mass = {_fmt(pot.mass)}",
        f"omega = {_fmt(pot.harmonic_freq)}",
    ]
    for deg in sorted(pot.coeffs):
        lines.append(f"coeff_{deg} = {_fmt(pot.coeffs[deg])}")
    lines += [
        f"linear_bias = {_fmt(pot.linear_bias)}",
        f"drive_amp = {_fmt(pot.drive_amp)}",
        f"drive_freq = {_fmt(pot.drive_freq)}",
        "",
        "[run]",
        f"variant = {sc.variant.value}",
        f"t_min = {_fmt(sc.t_min)}",
        f"t_max = {_fmt(sc.t_max)}",
        f"steps = {sc.steps}",
        f"seed_lambda = {_fmt(sc.seed_lambda)}",
        f"x0 = {_fmt(sc.x0)}",
        "",
        "[solver]",
        f"bracket_half_width = {_fmt(sc.solver.bracket_half_width)}",
        f"tolerance = {_fmt(sc.solver.tolerance)}",
        f"max_iterations = {sc.solver.max_iterations}",
        f"scan_levels = {sc.solver.scan_levels}",
        f"scan_subdivisions = {sc.solver.scan_subdivisions}",
        "",
        "[oracle]",
        f"enabled = {'true' if sc.oracle.enabled else 'false'}",
        f"hbar = {_fmt(sc.oracle.hbar)}",
        f"eta = {_fmt(sc.oracle.eta)}",
        f"half_width = {_fmt(sc.oracle.half_width)}",
        f"points = {sc.oracle.points}",
        f"dt = {_fmt(sc.oracle.dt)}",
        f"absorb = {'true' if sc.oracle.absorb else 'false'}",
        "",
        "[output]",
        f"path = {sc.output_path}",
        "",
    ]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# worked-example catalog

_CATALOG: dict[str, dict] = {
    # driven harmonic oscillator, amplitude averages
    "hosc-1.1": dict(m=1, om=10, w=3, b=1, A=0),
    "hosc-1.2": dict(m=1, om=10, w=3, b=1, A=10),
    "hosc-1.3": dict(m=1, om=20, w=5, b=1, A=10),
    # cubic anharmonic oscillator, amplitude averages
    "cubic-2.1": dict(m=10, om=10, w=30, a3=-200, b=1, A=1),
    "cubic-2.2": dict(m=10, om=10, w=30, a3=-200, b=1, A=10),
    "cubic-2.3": dict(m=10, om=10, w=40, a3=-200, b=1, A=10),
    "cubic-2.4": dict(m=10, om=20, w=40, a3=-200, b=1, A=10),
    "cubic-2.5": dict(m=10, om=25, w=40, a3=-200, b=1, A=10),
    # double-well quartic (cubic coefficient b, quartic coefficient -a)
    "dwell-2.1": dict(m=10, om=20, w=10, a3=10, a4=20, A=10),
    "dwell-2.2": dict(m=100, om=20, w=10, a3=50, a4=20, A=10),
    "dwell-2.3": dict(m=100, om=20, w=10, a3=50, a4=-20, A=100),
    # cubic oscillator, density averages
    "dens-2.5.1": dict(m=1, om=0, w=9, b=10, A=0, density=True),  # no quantum jumps
    "dens-2.5.2": dict(m=1, om=0, w=9, a3=3, b=10, A=0, density=True),
    "dens-2.5.3": dict(m=1, om=3, w=9, a3=3, b=10, A=1, density=True),
    "dens-2.5.4": dict(m=1, om=3, w=15, a3=3, b=10, A=1, density=True),
    "dens-2.5.5": dict(m=1, om=3, w=10, a3=3, b=10, A=3, density=True),
    "dens-2.5.6": dict(m=1, om=12, w=9, a3=1, b=15, A=2, density=True),
}


def example_ids() -> list[str]:
    return list(_CATALOG)


def example(example_id: str) -> Scenario:
    """Scenario for one of the worked-example parameter sets.

    Time grids and solver settings are chosen so every catalog entry runs
    its admissible horizon range; figure labels in the source material are
    reused across sections, so ids here are canonical
    (family-section.index).
    """
    try:
        entry = _CATALOG[example_id]
    except KeyError as exc:
        raise UnknownExample(
            f"unknown example id {example_id!r}; known: {', '.join(_CATALOG)}"
        ) from exc

    coeffs = {}
    if entry.get("a3"):
        coeffs[3] = float(entry["a3"])
    if entry.get("a4"):
        coeffs[4] = float(entry["a4"])
    pot = PolynomialPotential(
        mass=float(entry["m"]),
        harmonic_freq=float(entry["w"]),
        coeffs=coeffs,
        linear_bias=float(entry.get("b", 0)),
        drive_amp=float(entry["A"]),
        drive_freq=float(entry["om"]),
    )
    family = example_id.split("-")[0]
    if family == "cubic":
        t_min, t_max, steps = 0.01, 0.3, 100
    elif family == "dens":
        t_min, t_max, steps = 0.02, 3.0, 100
    else:
        t_min, t_max, steps = 0.01, 1.0, 100
    return Scenario(
        potential=pot,
        variant=Variant.DENSITY if entry.get("density") else Variant.AMPLITUDE,
        t_min=t_min,
        t_max=t_max,
        steps=steps,
        output_path=f"{example_id}.csv",
    )


# ---------------------------------------------------------------------------
# running and reporting

def run(scenario: Scenario, with_oracle: bool | None = None) -> RunReport:
    """Solve the scenario trajectory; optionally track the quantum oracle.

    with_oracle=None defers to the scenario's oracle.enabled flag.
    """
    spec = MasterResidualSpec(
        variant=scenario.variant,
        pot=scenario.potential,
        x0=scenario.x0 if scenario.variant is not Variant.AMPLITUDE else 0.0,
        solver=scenario.solver,
    )
    t_grid = scenario.t_grid()
    trajectory = continue_trajectory(spec, t_grid, scenario.seed_lambda)
    report = RunReport(trajectory=trajectory)

    enabled = scenario.oracle.enabled if with_oracle is None else with_oracle
    if enabled:
        series = run_oracle(scenario)
        deviations = np.empty(len(t_grid))
        oracle_avg = np.empty(len(t_grid))
        for i, sample in enumerate(trajectory.samples):
            if scenario.variant is Variant.AMPLITUDE:
                deviations[i] = abs(sample.lam - series.amp_avg[i])
                oracle_avg[i] = series.amp_avg[i].real
            else:
                deviations[i] = abs(sample.lam - series.dens_avg[i])
                oracle_avg[i] = series.dens_avg[i]
        report.oracle_series = series
        report.oracle_avg = oracle_avg
        report.deviations = deviations
    return report


def run_oracle(scenario: Scenario) -> AverageSeries:
    """Split-step propagation of the scenario's initial packet, sampled on
    the scenario time grid."""
    o = scenario.oracle
    grid = SpatialGrid(half_width=o.half_width, points=o.points)
    state = init_gaussian(
        scenario.x0, o.eta, o.hbar, grid, mass=scenario.potential.mass
    )
    return propagate_series(
        state, scenario.potential, o.dt, scenario.t_grid(), absorb=o.absorb
    )


def _output_path(path: str) -> str:
    override = os.environ.get("QCTRAJ_OUTPUT_DIR")
    if override:
        return os.path.join(override, os.path.basename(path))
    return path


def write_trajectory_csv(report: RunReport, path: str) -> str:
    """Trajectory CSV: T,lambda,omega_eff,residual,status and, when the
    oracle ran, ,oracle_avg,deviation appended."""
    path = _output_path(path)
    with_oracle = report.oracle_avg is not None
    lines = [TRAJECTORY_HEADER + (",oracle_avg,deviation" if with_oracle else "")]
    for i, s in enumerate(report.trajectory.samples):
        row = (
            f"{s.T:.17g},{s.lam:.17g},{s.omega_eff:.17g},"
            f"{s.residual:.17g},{s.status.value}"
        )
        if with_oracle:
            row += f",{report.oracle_avg[i]:.17g},{report.deviations[i]:.17g}"
        lines.append(row)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")
    return path


def write_oracle_csv(series: AverageSeries, path: str) -> str:
    path = _output_path(path)
    lines = ["T,amp_re,amp_im,dens,amp_flagged"]
    for i, t in enumerate(series.times):
        lines.append(
            f"{t:.17g},{series.amp_avg[i].real:.17g},{series.amp_avg[i].imag:.17g},"
            f"{series.dens_avg[i]:.17g},{int(series.amp_flagged[i])}"
        )
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")
    return path


def write_pathint_csv(scenario: Scenario, path: str) -> str:
    """Forward-flow saddle path of F = -V' + drive with its fluctuation
    factor: columns t,x,Q."""
    path = _output_path(path)
    field_ = flow_from_potential(scenario.potential)
    n_steps = max(2, scenario.steps)
    flow = critical_path_free(field_, scenario.x0, 0.0, scenario.t_max, n_steps)
    q = prefactor_recursion(field_, flow).q
    lines = ["t,x,Q"]
    lines.append(f"{flow.times[0]:.17g},{flow.nodes[0]:.17g},0")
    for i in range(1, n_steps + 1):
        lines.append(f"{flow.times[i]:.17g},{flow.nodes[i]:.17g},{q[i - 1]:.17g}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------------------
# entry point

def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="qctraj",
        description="quasiclassical trajectories of driven polynomial oscillators",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "oracle", "compare", "pathint"):
        p = sub.add_parser(name)
        p.add_argument("scenario", help="scenario INI file")
    p_ex = sub.add_parser("example")
    p_ex.add_argument("id", help="catalog id, e.g. cubic-2.1; 'list' to enumerate")
    p_ex.add_argument(
        "--emit-scenario",
        action="store_true",
        help="print the full scenario INI instead of a summary",
    )
    args = parser.parse_args(argv)

    try:
        if args.command == "example":
            if args.id == "list":
                print("\n".join(example_ids()))
                return 0
            sc = example(args.id)
            if args.emit_scenario:
                sys.stdout.write(scenario_text(sc))
            else:
                pot = sc.potential
                print(
                    f"{args.id}: variant={sc.variant.value} m={pot.mass:g} "
                    f"omega={pot.harmonic_freq:g} coeffs={pot.coeffs} "
                    f"b={pot.linear_bias:g} A={pot.drive_amp:g} "
                    f"Omega={pot.drive_freq:g} T=[{sc.t_min:g},{sc.t_max:g}]"
                    f"x{sc.steps}"
                )
            return 0

        scenario = load_scenario(args.scenario)
        if args.command == "solve":
            report = run(scenario, with_oracle=False)
            out = write_trajectory_csv(report, scenario.output_path)
            print(f"wrote {out}: {report.status_counts()}")
            return report.exit_code()
        if args.command == "oracle":
            series = run_oracle(scenario)
            out = write_oracle_csv(series, scenario.output_path)
            print(f"wrote {out}: {len(series.times)} samples")
            return 0
        if args.command == "compare":
            report = run(scenario, with_oracle=True)
            out = write_trajectory_csv(report, scenario.output_path)
            worst = float(np.max(report.deviations))
            print(f"wrote {out}: {report.status_counts()} max deviation {worst:.3e}")
            return report.exit_code()
        if args.command == "pathint":
            out = write_pathint_csv(scenario, scenario.output_path)
            print(f"wrote {out}")
            return 0
        raise AssertionError(f"unhandled command {args.command}")
    except (ConfigError, UnknownExample) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    except QCTrajError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
