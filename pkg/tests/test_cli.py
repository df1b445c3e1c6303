import math

import numpy as np
import pytest

from qctraj.cli import (
    OracleSettings,
    Scenario,
    example,
    example_ids,
    load_scenario,
    main,
    parse_scenario,
    run,
    scenario_text,
    write_trajectory_csv,
)
from qctraj.errors import ConfigError, UnknownExample
from qctraj.master import SampleStatus, Variant
from qctraj.model import PolynomialPotential


def harmonic_scenario(**kwargs):
    defaults = dict(
        potential=PolynomialPotential(mass=1.0, harmonic_freq=3.0, linear_bias=1.0),
        variant=Variant.AMPLITUDE,
        t_min=0.05,
        t_max=0.4,
        steps=8,
        output_path="out.csv",
    )
    defaults.update(kwargs)
    return Scenario(**defaults)


class TestScenarioFormat:
    def test_round_trip_identity(self):
        sc = example("dens-2.5.3")
        assert parse_scenario(scenario_text(sc)) == sc

    def test_round_trip_with_odd_floats(self):
        sc = harmonic_scenario(
            potential=PolynomialPotential(
                mass=0.1 + 0.2, harmonic_freq=math.pi, coeffs={3: 1e-17, 5: -2.5},
                linear_bias=1 / 3, drive_amp=0.1, drive_freq=7.0,
            ),
            oracle=OracleSettings(enabled=True, hbar=1e-3 / 3),
        )
        assert parse_scenario(scenario_text(sc)) == sc

    def test_unknown_key_rejected(self):
        sc = example("hosc-1.1")
        text = scenario_text(sc).replace("mass =", "masss =")
        with pytest.raises(ConfigError, match="masss"):
            parse_scenario(text)

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError, match="extras"):
            parse_scenario(scenario_text(example("hosc-1.1")) + "\n[extras]\nfoo = 1\n")

    def test_missing_required_key(self):
        text = scenario_text(example("hosc-1.1")).replace("t_min = ", "; t_min = ")
        with pytest.raises(ConfigError, match="t_min"):
            parse_scenario(text)

    def test_empty_grid_rejected(self):
        with pytest.raises(ConfigError, match="steps"):
            harmonic_scenario(steps=0)

    def test_nonpositive_t_min_rejected(self):
        with pytest.raises(ConfigError, match="t_min"):
            harmonic_scenario(t_min=0.0)


class TestCatalog:
    def test_ids_complete(self):
        ids = example_ids()
        assert len(ids) == 17
        assert {"hosc-1.1", "cubic-2.1", "dwell-2.1", "dens-2.5.1"} <= set(ids)

    def test_hosc_11_parameters(self):
        pot = example("hosc-1.1").potential
        assert (pot.mass, pot.drive_freq, pot.harmonic_freq) == (1.0, 10.0, 3.0)
        assert (pot.linear_bias, pot.drive_amp) == (1.0, 0.0)
        assert pot.coeffs == {}

    def test_dwell_21_parameters(self):
        # double well written as +b x^3 - a x^4 with a = -20, b = 10
        pot = example("dwell-2.1").potential
        assert (pot.mass, pot.drive_freq, pot.harmonic_freq) == (10.0, 20.0, 10.0)
        assert pot.coeffs == {3: 10.0, 4: 20.0}
        assert pot.drive_amp == 10.0

    def test_dens_251_parameters(self):
        sc = example("dens-2.5.1")
        pot = sc.potential
        assert sc.variant is Variant.DENSITY  # no quantum jumps case
        assert (pot.mass, pot.drive_freq, pot.harmonic_freq) == (1.0, 0.0, 9.0)
        assert (pot.linear_bias, pot.drive_amp) == (10.0, 0.0)
        assert pot.coeffs == {}

    def test_unknown_id(self):
        with pytest.raises(UnknownExample):
            example("nope-9.9")


class TestRunAndCsv:
    def test_csv_schema(self, tmp_path):
        sc = harmonic_scenario(output_path=str(tmp_path / "t.csv"))
        report = run(sc, with_oracle=False)
        path = write_trajectory_csv(report, sc.output_path)
        lines = open(path).read().splitlines()
        assert lines[0] == "T,lambda,omega_eff,residual,status"
        assert len(lines) == 1 + sc.steps
        fields = lines[1].split(",")
        assert len(fields) == 5
        assert fields[4] in {s.value for s in SampleStatus}

    def test_csv_oracle_columns(self, tmp_path):
        sc = harmonic_scenario(
            potential=PolynomialPotential(mass=0.05, harmonic_freq=1.0, linear_bias=0.05),
            variant=Variant.DENSITY,
            x0=0.5,
            t_min=0.1,
            t_max=0.5,
            steps=3,
            oracle=OracleSettings(
                enabled=True, hbar=1e-2, eta=0.2, half_width=10.0, points=1024, dt=1e-3
            ),
            output_path=str(tmp_path / "o.csv"),
        )
        report = run(sc)
        path = write_trajectory_csv(report, sc.output_path)
        lines = open(path).read().splitlines()
        assert lines[0] == "T,lambda,omega_eff,residual,status,oracle_avg,deviation"
        assert len(lines[1].split(",")) == 7
        assert float(np.max(report.deviations)) < 0.05

    def test_repeated_runs_identical(self, tmp_path):
        sc = harmonic_scenario(output_path=str(tmp_path / "a.csv"))
        p1 = write_trajectory_csv(run(sc, with_oracle=False), str(tmp_path / "a.csv"))
        p2 = write_trajectory_csv(run(sc, with_oracle=False), str(tmp_path / "b.csv"))
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_output_dir_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("QCTRAJ_OUTPUT_DIR", str(tmp_path))
        sc = harmonic_scenario(output_path="sub/name.csv")
        path = write_trajectory_csv(run(sc, with_oracle=False), sc.output_path)
        assert path == str(tmp_path / "name.csv")


class TestMain:
    def test_example_list(self, capsys):
        assert main(["example", "list"]) == 0
        out = capsys.readouterr().out
        assert "cubic-2.5" in out

    def test_example_summary_and_emit(self, capsys):
        assert main(["example", "dwell-2.2"]) == 0
        assert "variant=amplitude" in capsys.readouterr().out
        assert main(["example", "dwell-2.2", "--emit-scenario"]) == 0
        text = capsys.readouterr().out
        assert parse_scenario(text) == example("dwell-2.2")

    def test_example_unknown_exits_1(self, capsys):
        assert main(["example", "zzz"]) == 1
        assert "unknown example" in capsys.readouterr().err

    def test_solve_roundtrip(self, tmp_path, capsys):
        sc = harmonic_scenario(output_path=str(tmp_path / "run.csv"))
        ini = tmp_path / "scenario.ini"
        ini.write_text(scenario_text(sc))
        assert main(["solve", str(ini)]) == 0
        assert (tmp_path / "run.csv").exists()

    def test_solve_missing_file_exits_1(self, capsys):
        assert main(["solve", "/nonexistent/file.ini"]) == 1

    def test_solve_bad_config_exits_1(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[potential]\nmass = 1.0\n")
        assert main(["solve", str(bad)]) == 1

    def test_exit_code_two_on_no_root(self, tmp_path):
        # a potential whose amplitude residual is bounded away from zero on
        # a window: V = x^2/2 with huge bias and a tiny scan window
        from qctraj.master import SolverSettings

        sc = harmonic_scenario(
            potential=PolynomialPotential(mass=1.0, harmonic_freq=1.0, linear_bias=50.0),
            t_min=1.0,
            t_max=1.0,
            steps=1,
            solver=SolverSettings(bracket_half_width=1e-3),
            output_path=str(tmp_path / "nr.csv"),
        )
        ini = tmp_path / "s.ini"
        ini.write_text(scenario_text(sc))
        assert main(["solve", str(ini)]) == 2

    def test_pathint_subcommand(self, tmp_path):
        sc = harmonic_scenario(output_path=str(tmp_path / "p.csv"))
        ini = tmp_path / "s.ini"
        ini.write_text(scenario_text(sc))
        assert main(["pathint", str(ini)]) == 0
        lines = (tmp_path / "p.csv").read_text().splitlines()
        assert lines[0] == "t,x,Q"
        assert len(lines) == 2 + sc.steps

    def test_oracle_subcommand(self, tmp_path):
        sc = harmonic_scenario(
            potential=PolynomialPotential(mass=0.05, harmonic_freq=1.0),
            variant=Variant.DENSITY,
            x0=0.3,
            steps=3,
            t_min=0.1,
            t_max=0.3,
            oracle=OracleSettings(
                enabled=True, hbar=1e-2, eta=0.2, half_width=10.0, points=1024, dt=1e-3
            ),
            output_path=str(tmp_path / "orc.csv"),
        )
        ini = tmp_path / "s.ini"
        ini.write_text(scenario_text(sc))
        assert main(["oracle", str(ini)]) == 0
        lines = (tmp_path / "orc.csv").read_text().splitlines()
        assert lines[0] == "T,amp_re,amp_im,dens,amp_flagged"

    def test_compare_subcommand(self, tmp_path, capsys):
        sc = harmonic_scenario(
            potential=PolynomialPotential(mass=0.05, harmonic_freq=1.0, linear_bias=0.05),
            variant=Variant.DENSITY,
            x0=0.5,
            steps=3,
            t_min=0.1,
            t_max=0.5,
            oracle=OracleSettings(
                enabled=False, hbar=1e-2, eta=0.2, half_width=10.0, points=1024, dt=1e-3
            ),
            output_path=str(tmp_path / "cmp.csv"),
        )
        ini = tmp_path / "s.ini"
        ini.write_text(scenario_text(sc))
        # compare forces the oracle on even when the block says disabled
        assert main(["compare", str(ini)]) == 0
        header = (tmp_path / "cmp.csv").read_text().splitlines()[0]
        assert header.endswith(",oracle_avg,deviation")
