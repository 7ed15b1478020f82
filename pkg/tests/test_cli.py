import json
import math


from oscq.cli import main


def run(args):
    return main(args)


class TestAlgebraCommands:
    def test_bracket(self, capsys):
        assert run(["bracket", "--f", "q^3", "--g", "p^3"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["result"] == "9 * q1^2 * p1^2"

    def test_moyal(self, capsys):
        assert run(["moyal", "--f", "q^3", "--g", "p^3"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["result"] == "-3/2 * hbar^2 + 9 * q1^2 * p1^2"

    def test_classify(self, capsys):
        assert run(["classify", "--f", "q^2 p^2"]) == 0
        assert json.loads(capsys.readouterr().out)["tag"] == "GENERAL"

    def test_quantize(self, capsys):
        assert run(["quantize", "--f", "1"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["operator"] == "(1, 0)"
        assert out["ordering"] == "weyl-symmetric"

    def test_dirac_defect_zero(self, capsys):
        assert run(["dirac-defect", "--f", "q^2", "--g", "p^2"]) == 0
        assert json.loads(capsys.readouterr().out)["is_zero"] is True

    def test_gvh(self, tmp_path, capsys):
        out = tmp_path / "gvh.json"
        assert run(["gvh", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["difference_symbol"] == "-1/3 * hbar^2"
        assert payload["matches_moyal_oracle"] is True
        meta = json.loads((tmp_path / "gvh.json.meta.json").read_text())
        assert meta["command"] == "gvh"

    def test_verify_conditions(self, capsys):
        assert run(["verify-conditions", "--basis", "1; q; p"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["testable_pass"] is True
        names = [c["name"] for c in payload["conditions"]]
        assert "irreducibility" in names
        statuses = {c["name"]: c["status"] for c in payload["conditions"]}
        assert statuses["irreducibility"] == "assumed"

    def test_verify_conditions_cubic_fails(self, capsys):
        assert run(["verify-conditions", "--basis", "1; q; p; q^3; p^3"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["testable_pass"] is False


class TestDynamicsCommands:
    def test_simulate_writes_csv_and_sidecar(self, tmp_path, capsys):
        out = tmp_path / "traj.csv"
        code = run(["simulate", "--system", "H2", "--c", "1", "--q0", "2",
                    "--t-end", "3.0", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,q1,p1,H"
        meta = json.loads((tmp_path / "traj.csv.meta.json").read_text())
        assert meta["config"]["system"] == "H2"

    def test_period_prints_two_pi(self, capsys):
        assert run(["period", "--system", "H2", "--c", "1", "--q0", "2",
                    "--p0", "0"]) == 0
        captured = capsys.readouterr().out
        assert "period = 6.28318" in captured

    def test_period_h4(self, capsys):
        assert run(["period", "--system", "H4", "--c", "1",
                    "--q0", str(math.pi / 3), "--p0", "0"]) == 0
        payload = json.loads(capsys.readouterr().out.split("\n", 1)[1])
        assert abs(payload["period"] - 2 * math.pi) < 1e-6

    def test_newton_check(self, capsys):
        assert run(["newton-check", "--c", "1", "--q0", "2"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["max_residual"] <= 1e-8

    def test_c_scaling(self, capsys):
        assert run(["c-scaling", "--c1", "1", "--c2", "2", "--q0", "2"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["max_q_deviation"] <= 1e-7

    def test_simulate_domain_exit_is_exit_3(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        code = run(["simulate", "--system", "H4", "--c", "1",
                    "--q0", str(math.pi / 3), "--out", str(out)])
        assert code == 3


class TestMatrixManybodyCommands:
    def test_matrix_default_harmonic(self, tmp_path, capsys):
        out = tmp_path / "matrix.csv"
        assert run(["matrix", "--n", "2", "--t-end", str(2 * math.pi),
                    "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("t,U_1_1")

    def test_matrix_blowup_exit_3(self, tmp_path, capsys):
        config = tmp_path / "blow.json"
        config.write_text(json.dumps({
            "n": 1, "b": 1.0, "t_end": 10.0,
            "a": [[0.0]], "u0": [[2.0]], "v0": [[0.0]],
        }))
        out = tmp_path / "blow.csv"
        assert run(["matrix", "--config", str(config), "--out", str(out)]) == 3

    def test_manybody_random_state(self, tmp_path, capsys):
        out = tmp_path / "mb.csv"
        assert run(["manybody", "--n", "2", "--t-end", "2.0", "--seed", "7",
                    "--out", str(out)]) == 0
        header = out.read_text().splitlines()[0]
        assert header.split(",")[1] == "r_1_1_x"

    def test_rotation_check(self, capsys):
        assert run(["rotation-check", "--n", "2", "--rotations", "20",
                    "--seed", "3"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["max_relative_deviation"] <= 1e-10


class TestSpectrumCommands:
    def test_spectrum_harmonic(self, capsys):
        assert run(["spectrum", "--system", "harmonic", "--grid", "512",
                    "--x-lo", "-10", "--x-hi", "10", "--k", "3"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert abs(payload["eigenvalues"][0] - 0.5) < 1e-3
        assert payload["notes"]["boundary"] == "dirichlet-truncated"

    def test_spectrum_dump_operator(self, tmp_path, capsys):
        dump = tmp_path / "op.txt"
        assert run(["spectrum", "--system", "harmonic", "--grid", "128",
                    "--x-lo", "-8", "--x-hi", "8",
                    "--dump-operator", str(dump)]) == 0
        assert dump.read_text().splitlines()[0].startswith("#")

    def test_e0_scan_csv(self, tmp_path, capsys):
        out = tmp_path / "scan.csv"
        assert run(["e0-scan", "--system", "H2", "--c-values", "1,2",
                    "--grid", "256", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "c,E0,E0_error,grid,interval_lo,interval_hi,hbar"
        assert len(lines) == 3


class TestCliContract:
    def test_unknown_config_key_exit_2(self, tmp_path, capsys):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"f": "q", "g": "p", "bogus": 1}))
        assert run(["bracket", "--config", str(config)]) == 2

    def test_missing_required_exit_2(self, capsys):
        assert run(["bracket", "--f", "q"]) == 2

    def test_invalid_poly_exit_2(self, capsys):
        assert run(["bracket", "--f", "x&y", "--g", "p"]) == 2

    def test_missing_out_for_csv_exit_2(self, capsys):
        assert run(["simulate", "--system", "H2", "--q0", "2"]) == 2

    def test_selftest(self, capsys):
        assert run(["selftest"]) == 0
        out = capsys.readouterr().out
        assert "ok   - gvh contradiction is -(1/3) hbar^2 I" in out

    def test_determinism_byte_identical(self, tmp_path, capsys):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        args = ["e0-scan", "--system", "harmonic", "--c-values", "1",
                "--grid", "128", "--x-lo", "-8", "--x-hi", "8"]
        assert run(args + ["--out", str(out1)]) == 0
        assert run(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_config_echo_reruns_identically(self, tmp_path, capsys):
        out1 = tmp_path / "a.csv"
        assert run(["simulate", "--system", "H2", "--q0", "2", "--t-end", "2.0",
                    "--out", str(out1)]) == 0
        meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
        config = tmp_path / "echo.json"
        echoed = dict(meta["config"])
        config.write_text(json.dumps(echoed))
        out2 = tmp_path / "b.csv"
        assert run(["simulate", "--config", str(config), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_plot_writes_png(self, tmp_path, capsys):
        out = tmp_path / "traj.csv"
        assert run(["simulate", "--system", "harmonic", "--q0", "1",
                    "--t-end", "6.0", "--out", str(out), "--plot"]) == 0
        png = tmp_path / "traj.png"
        assert png.exists() and png.stat().st_size > 1000

    def test_plot_e0_scan(self, tmp_path, capsys):
        out = tmp_path / "scan.csv"
        assert run(["e0-scan", "--system", "H2", "--c-values", "1,2",
                    "--grid", "128", "--out", str(out), "--plot"]) == 0
        assert (tmp_path / "scan.png").exists()

    def test_threads_env_fallback(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("OSCQ_THREADS", "2")
        out = tmp_path / "scan.csv"
        assert run(["e0-scan", "--system", "H2", "--c-values", "1,2",
                    "--grid", "128", "--out", str(out)]) == 0
