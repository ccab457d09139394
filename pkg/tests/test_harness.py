import json

import pandas as pd
import pytest

from src.config import Config
from src.errors import UpstreamOutputError
from src.main import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, main
from src.reporting.manifest import MANIFEST_NAME, RunManifest, sha256_file
from src.reporting.plotdata import emit_plotdata

PUCCI = """\
[operator]
kind = "pucci"
lambda_min = 1.0
lambda_max = 2.0

[domain]
extents = [[0.0, 3.141592653589793]]
n = 50

[experiment]
kind = "eigen"
seed = 1
expect_plus = 1.0
expect_minus = 2.0
"""

EMPTY_CENSUS = """\
[operator]
kind = "fucik"
a = 0.5
b = 1.5

[domain]
extents = [[0.0, 3.141592653589793]]
n = 50

[experiment]
kind = "census"
seed = 2
t_values = [-0.5]
expect_counts = [0]
"""

SUITE = """\
[[problem]]
label = "fucik_h0"
offsets = [0.5]
[problem.operator]
kind = "fucik"
a = 0.5
b = 1.5
[problem.domain]
extents = [[0.0, 3.141592653589793]]
n = 50
"""


@pytest.fixture
def lab(tmp_path, monkeypatch):
    """Routes runs and reports into tmp_path."""
    monkeypatch.setenv("HJBLAB_OUT", str(tmp_path / "runs"))
    monkeypatch.setattr(Config, "REPORT_DIR", str(tmp_path / "reports"))
    return tmp_path


def write_config(lab, text, name="config.toml"):
    path = lab / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def run_dirs(lab):
    return sorted(p for p in (lab / "runs").iterdir() if p.is_dir())


class TestRun:
    def test_eigen_run_passes(self, lab):
        assert main(["run", write_config(lab, PUCCI)]) == EXIT_PASS
        (run_dir,) = run_dirs(lab)
        assert run_dir.name.startswith("run_")

        manifest = RunManifest.load(run_dir)
        record = manifest.experiment("eigen")
        assert record.status == "passed"
        assert record.invariants["expect_plus"] and record.invariants["expect_minus"]
        assert set(record.files) == {"eigen/eigen_profiles.csv", "eigen/summary.json"}
        for relative, digest in record.files.items():
            assert sha256_file(run_dir / relative) == digest

        summary = json.loads((run_dir / "eigen" / "summary.json").read_text(encoding="utf-8"))
        assert summary["lambda_plus"] == pytest.approx(1.0, abs=1e-3)
        assert (run_dir / "run.log").exists()
        assert (lab / "reports" / f"{run_dir.name}_report.html").exists()

    def test_runs_are_deterministic(self, lab):
        config = write_config(lab, PUCCI)
        assert main(["run", config]) == EXIT_PASS
        assert main(["run", config]) == EXIT_PASS
        first, second = (RunManifest.load(d) for d in run_dirs(lab))
        assert first.checksums == second.checksums
        assert first.config_digest == second.config_digest

    def test_failed_invariant_exit_code(self, lab):
        code = main(["run", write_config(lab, PUCCI), "--set", "experiment.expect_plus=5.0"])
        assert code == EXIT_FAIL
        (run_dir,) = run_dirs(lab)
        record = RunManifest.load(run_dir).experiment("eigen")
        assert record.status == "failed"
        assert not record.invariants["expect_plus"]

    def test_bad_config_exit_code(self, lab):
        assert main(["run", write_config(lab, PUCCI.replace('"eigen"', '"nothing"'))]) == EXIT_CONFIG
        assert main(["run", str(lab / "absent.toml")]) == EXIT_CONFIG

    def test_missing_experiment_in_manifest(self, lab):
        main(["run", write_config(lab, PUCCI)])
        with pytest.raises(UpstreamOutputError):
            RunManifest.load(run_dirs(lab)[0]).experiment("census")


class TestPlotdata:
    def test_eigen_run_has_no_profiles(self, lab):
        main(["run", write_config(lab, PUCCI)])
        manifest = run_dirs(lab)[0] / MANIFEST_NAME
        with pytest.raises(UpstreamOutputError):
            emit_plotdata(manifest)
        assert main(["plotdata", str(manifest)]) == EXIT_FAIL

    def test_missing_manifest(self, lab):
        with pytest.raises(UpstreamOutputError):
            emit_plotdata(lab / "nowhere" / MANIFEST_NAME)

    @pytest.mark.slow
    def test_empty_census(self, lab):
        assert main(["run", write_config(lab, EMPTY_CENSUS)]) == EXIT_PASS
        run_dir = run_dirs(lab)[0]
        (out,) = emit_plotdata(run_dir / MANIFEST_NAME, lab / "plots")
        assert out.name == "census_profiles.csv"
        assert list(pd.read_csv(out).columns) == ["x"]

    @pytest.mark.slow
    def test_tampered_output(self, lab):
        main(["run", write_config(lab, EMPTY_CENSUS)])
        run_dir = run_dirs(lab)[0]
        (run_dir / "census" / "census_solutions.csv").write_text("t,cluster,x,u\n0,0,0,0\n", encoding="utf-8")
        with pytest.raises(UpstreamOutputError):
            emit_plotdata(run_dir)


@pytest.mark.slow
class TestCalibrate:
    def test_writes_constants(self, lab):
        out = lab / "cal.json"
        assert main(["calibrate", write_config(lab, SUITE, "suite.toml"), "--output", str(out)]) == EXIT_PASS
        stored = json.loads(out.read_text(encoding="utf-8"))
        assert stored["t0_cal"] == 1.0
        assert stored["c_cal"] > 0.0
