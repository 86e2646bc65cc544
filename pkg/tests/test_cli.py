import json
import shutil
import subprocess
import sys

from causalcap.certificates import case_dir
from causalcap.cli import EXIT_CHECK, EXIT_INPUT, EXIT_OK, main
from causalcap.experiments import read_csv
from causalcap.sdp.sdpa import read_sdpa, solve_sdpa_cvxopt


class TestCertify:
    def test_pass(self, capsys):
        assert main(["certify", "ad01"]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["ok"]
        assert report["discovered_order"] == ["X1", "Y1", "X2", "Y2"]

    def test_check_failure(self, tmp_path, capsys):
        dst = tmp_path / "bad"
        shutil.copytree(case_dir("ad01"), dst)
        doc = json.loads((dst / "manifest.json").read_text())
        doc["m"] = 3
        (dst / "manifest.json").write_text(json.dumps(doc))
        assert main(["certify", str(dst)]) == EXIT_CHECK
        err = capsys.readouterr().err
        assert "FAIL checksums" in err
        assert "E*J>=3" in err

    def test_missing_case(self, tmp_path, capsys):
        assert main(["certify", str(tmp_path / "none")]) == EXIT_INPUT
        assert "error" in capsys.readouterr().err

    def test_module_entry_point(self, tmp_path):
        out = tmp_path / "r.json"
        proc = subprocess.run([sys.executable, "-m", "causalcap", "certify", "ad01", "--out", str(out)],
                              capture_output=True, text=True)
        assert proc.returncode == EXIT_OK
        assert json.loads(out.read_text())["ok"]


class TestInputErrors:
    def test_usage(self, capsys):
        assert main([]) == EXIT_INPUT
        assert main(["nonsense"]) == EXIT_INPUT

    def test_bad_class(self, capsys):
        assert main(["sweep", "--classes", "Freest", "--steps", "1"]) == EXIT_INPUT

    def test_bad_numbers(self, capsys):
        assert main(["sweep", "--eps", "zero", "--steps", "1"]) == EXIT_INPUT
        assert main(["sweep", "--steps", "0"]) == EXIT_INPUT
        assert main(["sweep", "--eta-start", "0.7", "--steps", "1", "--classes", "Free"]) == EXIT_INPUT

    def test_threshold_arity(self, capsys):
        assert main(["threshold", "--classes", "Free"]) == EXIT_INPUT
        assert main(["threshold", "--eps", "0,0.02"]) == EXIT_INPUT

    def test_trials(self, capsys):
        assert main(["trials", "pauli", "--n", "0"]) == EXIT_INPUT
        assert main(["trials", "teleport"]) == EXIT_INPUT

    def test_export(self, tmp_path, capsys):
        assert main(["export-sdpa", "--dual", "--classes", "FreePar"]) == EXIT_INPUT
        assert main(["export-sdpa", "--dual", "--eps", "0.02"]) == EXIT_INPUT
        assert main(["export-sdpa", "--channels", str(tmp_path / "missing.json")]) == EXIT_INPUT


class TestRuns:
    def test_sweep_csv(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        code = main(["sweep", "--eta-start", "0.1", "--steps", "1", "--classes", "FreePar,FreeFix(2,1),Free",
                     "--eps", "0", "--out", str(out)])
        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "eta,class,eps,m_star,capacity_bits,status,solve_ms"
        assert [r.cls for r in read_csv(out)] == ["FreePar", "FreeFix(2,1)", "Free"]

    def test_export_and_solve(self, tmp_path, capsys):
        spec = tmp_path / "ch.json"
        spec.write_text(json.dumps([{"kind": "ad", "eta": 0.1}, {"kind": "ad", "eta": 0.1}]))
        out = tmp_path / "p.dat-s"
        assert main(["export-sdpa", "--channels", str(spec), "--classes", "FreePar", "--eps", "0.02",
                     "--out", str(out)]) == EXIT_OK
        data = read_sdpa(out.read_text())
        status, obj, _ = solve_sdpa_cvxopt(data)
        assert status == "optimal"
        assert abs(data.model_objective(obj) - 5.02534823) < 1e-5

    def test_dual_export(self, capsys):
        assert main(["export-sdpa", "--dual", "--classes", "FreeDef"]) == EXIT_OK
        assert capsys.readouterr().out.startswith('"dual_freedef2: exported')
