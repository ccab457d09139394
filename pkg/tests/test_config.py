import textwrap
from pathlib import Path

import pytest

from src.config import (
    CalibrationSection,
    DomainSection,
    OperatorSection,
    SolverSettings,
    load_config,
    load_suite,
    operator_from_config,
    parse_override,
)
from src.errors import ConfigError
from src.pipelines.domain_hole import hole_from_params

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = """\
[operator]
kind = "fucik"
a = 0.5
b = 1.5

[domain]
extents = [[0.0, 3.141592653589793]]
n = 50

[experiment]
kind = "eigen"
seed = 4
expect_lambda_plus = -0.5
"""


def write(tmp_path, text, name="config.toml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text), encoding="utf-8")
    return path


class TestLoadConfig:
    def test_minimal(self, tmp_path):
        config = load_config(write(tmp_path, MINIMAL))
        assert config.operator.kind == "fucik"
        assert config.domain.n == (50,)
        assert config.seed == 4
        assert config.experiment.param("expect_lambda_plus") == -0.5
        assert config.solver == SolverSettings()
        assert config.calibration == CalibrationSection()

    @pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.toml") if "suite" not in p.name
                                            or p.name == "full_suite.toml"))
    def test_shipped_configs_parse(self, name):
        assert load_config(CONFIGS / name).digest()

    def test_unknown_kind_reports_line(self, tmp_path):
        path = write(tmp_path, MINIMAL.replace('kind = "eigen"', 'kind = "magic"'))
        with pytest.raises(ConfigError) as info:
            load_config(path)
        assert info.value.section == "experiment"
        assert info.value.field == "kind"
        assert info.value.line == 11
        assert "(line 11)" in str(info.value)

    def test_unknown_field(self, tmp_path):
        path = write(tmp_path, MINIMAL + "\n[solver]\ntoll = 1e-8\n")
        with pytest.raises(ConfigError) as info:
            load_config(path)
        assert info.value.field == "toll"
        assert info.value.line == 16

    def test_missing_section(self, tmp_path):
        path = write(tmp_path, MINIMAL.split("[domain]")[0] + "[experiment]\nkind = \"eigen\"\n")
        with pytest.raises(ConfigError) as info:
            load_config(path)
        assert info.value.section == "domain"

    def test_toml_syntax_error(self, tmp_path):
        path = write(tmp_path, MINIMAL + "broken = = 1\n")
        with pytest.raises(ConfigError) as info:
            load_config(path)
        assert info.value.line == 14

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.toml")

    def test_overrides(self, tmp_path):
        config = load_config(write(tmp_path, MINIMAL), ["solver.tol=1e-9", "experiment.label=probe"])
        assert config.solver.tol == 1e-9
        assert config.experiment.param("label") == "probe"

    def test_digest_tracks_content(self, tmp_path):
        path = write(tmp_path, MINIMAL)
        assert load_config(path).digest() == load_config(path).digest()
        assert load_config(path).digest() != load_config(path, ["experiment.seed=5"]).digest()

    def test_calibration_file(self, tmp_path):
        (tmp_path / "cal.json").write_text('{"c_cal": 0.5, "t0_cal": 3.0}', encoding="utf-8")
        path = write(tmp_path, MINIMAL + f'\n[calibration]\nfile = "{(tmp_path / "cal.json").as_posix()}"\n')
        config = load_config(path)
        assert config.calibration.c_cal == 0.5 and config.calibration.t0_cal == 3.0

    def test_calibration_file_from_command_line(self, tmp_path):
        target = tmp_path / "measured" / "calibration.json"
        target.parent.mkdir()
        target.write_text('{"c_cal": 0.25, "t0_cal": 2.0, "safety": 2.0}', encoding="utf-8")
        config = load_config(CONFIGS / "full_suite.toml", [f"calibration.file={target.as_posix()}"])
        assert config.calibration.c_cal == 0.25 and config.calibration.t0_cal == 2.0
        assert "domain_hole" in config.experiment.kinds


class TestSections:
    def test_parse_override(self):
        assert parse_override("solver.n_starts=16") == (("solver", "n_starts"), 16)
        assert parse_override("experiment.h=sin(x)") == (("experiment", "h"), "sin(x)")
        with pytest.raises(ConfigError):
            parse_override("solver")
        with pytest.raises(ConfigError):
            parse_override("tol=1")

    @pytest.mark.parametrize("kwargs, field", [
        ({"n_starts": 4}, "n_starts"),
        ({"damping": 0.0}, "damping"),
        ({"tol": -1.0}, "tol"),
        ({"norm_p": 0.5}, "norm_p"),
        ({"blowup_factor": 1.0}, "blowup_factor"),
    ])
    def test_solver_validation(self, kwargs, field):
        with pytest.raises(ConfigError) as info:
            SolverSettings(**kwargs)
        assert info.value.field == field

    def test_eigen_options(self):
        options = SolverSettings(eigen_tol=1e-9, eigen_cap=50, ratio_floor=1e-6, howard_cap=20).eigen_options()
        assert options == {"tol": 1e-9, "cap": 50, "ratio_floor": 1e-6, "howard_cap": 20}

    def test_operator_validation(self):
        with pytest.raises(ConfigError):
            OperatorSection(kind="nonlinear")
        with pytest.raises(ConfigError):
            OperatorSection(kind="plateau", dim=2)
        with pytest.raises(ConfigError):
            OperatorSection(kind="custom")
        with pytest.raises(ConfigError):
            OperatorSection(kind="plateau", slope="steep")

    def test_domain_validation(self):
        assert DomainSection(extents=[[0, 1], [0, 2]], n=10).n == (10, 10)
        with pytest.raises(ConfigError):
            DomainSection(extents=[[0, 1]], n=[10, 10])
        with pytest.raises(ConfigError):
            DomainSection(holes=[{"kind": "ring"}])

    def test_operator_from_config(self):
        op = operator_from_config(OperatorSection(kind="fucik", a=0.5, b=1.5, name="fk"))
        assert op.name == "fk" and op.delta == 1.5
        with pytest.raises(ConfigError):
            operator_from_config(OperatorSection(kind="fucik", a=2.0, b=1.0))
        with pytest.raises(ConfigError):
            operator_from_config(OperatorSection(kind="plateau"))


class TestHoleParams:
    def test_fraction(self):
        hole = hole_from_params({"hole_fraction": 0.25}, ((0.0, 1.0), (0.0, 1.0)))
        assert hole.lower == pytest.approx((0.25, 0.25))
        assert hole.upper == pytest.approx((0.75, 0.75))

    def test_table(self):
        hole = hole_from_params({"hole": {"kind": "disk", "center": [0.5, 0.5], "radius": 0.1}},
                                ((0.0, 1.0), (0.0, 1.0)))
        assert hole.kind == "disk"

    def test_errors(self):
        with pytest.raises(ConfigError):
            hole_from_params({"hole_fraction": 1.5}, ((0.0, 1.0),))
        with pytest.raises(ConfigError):
            hole_from_params({"hole": {"lower": [1.0], "upper": [0.0]}}, ((0.0, 1.0),))
        assert hole_from_params({}, ((0.0, 1.0),)) is None


class TestLoadSuite:
    def test_shipped_suite(self):
        suite = load_suite(CONFIGS / "calibration_suite.toml")
        assert len(suite.problems) == 3
        assert suite.safety > 0.0

    def test_empty_suite(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            load_suite(write(tmp_path, "[calibration]\nsafety = 2.0\n", "suite.toml"))
        assert info.value.section == "problem"

    def test_problem_needs_domain(self, tmp_path):
        text = '[[problem]]\nlabel = "p"\n[problem.operator]\nkind = "fucik"\n'
        with pytest.raises(ConfigError) as info:
            load_suite(write(tmp_path, text, "suite.toml"))
        assert info.value.field == "domain"
        assert info.value.line == 1
