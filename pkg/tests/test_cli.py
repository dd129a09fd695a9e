"""Command-line front end, driven through ``main(argv)``."""
import csv
import json

import numpy as np
import pytest

from bordered_gue import __version__
from bordered_gue.cli import fmt, main, parse_args, parse_grid
from bordered_gue.errors import InvalidParameter


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


class TestHelpers:
    def test_grid_forms(self):
        np.testing.assert_allclose(parse_grid("-4:4:81"), np.linspace(-4, 4, 81))
        np.testing.assert_allclose(parse_grid("1,2.5"), [1.0, 2.5])
        np.testing.assert_allclose(parse_grid("0.3"), [0.3])
        np.testing.assert_allclose(parse_grid([1, 2]), [1.0, 2.0])

    @pytest.mark.parametrize("bad", ["a:b:c", "1:2", "1:2:0", "x"])
    def test_bad_grid(self, bad):
        with pytest.raises(InvalidParameter):
            parse_grid(bad)

    def test_fmt_round_trips(self):
        v = 0.1 + 0.2
        assert float(fmt(v)) == v and fmt(np.int64(3)) == "3" and fmt(True) == "true"

    def test_negative_values_stay_values(self):
        args = parse_args(["kernel", "--grid", "-4:4:81", "--mu", "-0.5"])
        assert args.grid == "-4:4:81" and args.mu == -0.5


class TestSample:
    def test_shape_and_sidecar(self, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["sample", "--n", "10", "--draws", "1000", "--seed", "3", "--out", str(out)]) == 0
        rows = read_csv(out)
        assert rows[0] == [f"lambda_{j}" for j in range(1, 12)]
        assert len(rows) == 1001 and all(len(r) == 11 for r in rows)
        meta = json.loads((tmp_path / "s.csv.json").read_text())
        assert meta["version"] == __version__ and meta["seed"] == 3 and meta["params"]["n"] == 10
        assert meta["wall_time_s"] >= 0

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            main(["sample", "--n", "5", "--draws", "50", "--seed", "9", "--out", str(p)])
        assert a.read_bytes() == b.read_bytes()

    def test_crlf_and_full_precision(self, tmp_path):
        out = tmp_path / "s.csv"
        main(["sample", "--n", "2", "--draws", "3", "--out", str(out)])
        raw = out.read_bytes()
        assert raw.count(b"\r\n") == 4
        val = raw.split(b"\r\n")[1].split(b",")[0].decode()
        assert float(fmt(float(val))) == float(val)

    def test_zero_sigma(self, tmp_path, capsys):
        assert main(["sample", "--sigma", "0", "--out", str(tmp_path / "x.csv")]) == 2
        assert "sigma must be > 0" in capsys.readouterr().err


class TestKernel:
    def test_matrix_and_diagonal(self, tmp_path):
        out = tmp_path / "k.csv"
        assert main(["kernel", "--path", "mu0", "--n", "6", "--sigma2", "1.5",
                     "--grid", "-4:4:81", "--out", str(out)]) == 0
        m = np.array(read_csv(out), float)
        assert m.shape == (81, 81)
        diag = read_csv(tmp_path / "k_diag.csv")
        assert diag[0] == ["x", "density"] and len(diag) == 82
        np.testing.assert_allclose(np.array(diag[1:], float)[:, 1], np.diag(m), rtol=1e-12)

    def test_trapezoid_trace(self, tmp_path):
        # the grid must cover the spectrum; [-4, 4] loses about 0.06 of the mass here
        out = tmp_path / "k.csv"
        main(["kernel", "--path", "mu0", "--n", "6", "--sigma2", "1.5", "--grid", "-6:6:121", "--out", str(out)])
        meta = json.loads((tmp_path / "k.csv.json").read_text())
        assert meta["trace_trapezoid"] == pytest.approx(7.0, abs=1e-3)

    def test_divergent(self, tmp_path):
        assert main(["kernel", "--sigma2", "2.5", "--out", str(tmp_path / "k.csv")]) == 3

    def test_unsupported(self, tmp_path):
        assert main(["kernel", "--sigma2", "1", "--mu", "0.4", "--out", str(tmp_path / "k.csv")]) == 3

    def test_bad_grid(self, tmp_path):
        assert main(["kernel", "--grid", "1:2", "--out", str(tmp_path / "k.csv")]) == 2

    def test_json_format(self, tmp_path):
        out = tmp_path / "k.json"
        assert main(["kernel", "--n", "3", "--grid", "-1:1:3", "--format", "json", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert len(doc["data"]["matrix"]["rows"]) == 3 and doc["command"] == "kernel"


class TestConfig:
    def test_config_defaults_and_precedence(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"n": 4, "draws": 7, "mu": 0.5}))
        args = parse_args(["sample", "--config", str(cfg), "--draws", "9"])
        assert (args.n, args.draws, args.mu) == (4, 9, 0.5)

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        assert main(["sample", "--config", str(cfg)]) == 2
        assert "bogus" in capsys.readouterr().err

    def test_unreadable(self, tmp_path):
        assert main(["sample", "--config", str(tmp_path / "missing.json")]) == 2


class TestPhaseAndEdge:
    def test_phase(self, tmp_path):
        out = tmp_path / "p.csv"
        assert main(["phase", "--c", "0:3:4", "--sigma2", "0.5,1", "--n", "30", "--draws", "20",
                     "--out", str(out)]) == 0
        rows = read_csv(out)
        assert len(rows) == 1 + 8 and rows[0][:3] == ["c", "sigma2", "phase"]
        bnd = read_csv(tmp_path / "p_boundary.csv")
        assert [float(r[2]) for r in bnd[1:]] == [1.5, 1.0]

    def test_edge(self, tmp_path):
        out = tmp_path / "e.csv"
        assert main(["edge", "--path", "sigma1", "--s", "0.5", "--n", "40", "--draws", "200",
                     "--cdf-grid", "-5:3:9", "--ns", "20,40", "--out", str(out)]) == 0
        rows = read_csv(out)
        assert rows[0] == ["X", "cdf_reference", "cdf_empirical"] and len(rows) == 10
        conv = read_csv(tmp_path / "e_convergence.csv")
        assert [int(r[0]) for r in conv[1:]] == [20, 40]
        meta = json.loads((tmp_path / "e.csv.json").read_text())
        assert "ks" in meta["stats"]


class TestVerify:
    def test_selected_criteria(self, tmp_path, capsys):
        out = tmp_path / "v.json"
        assert main(["verify", "--quick", "--only", "3,6", "--out", str(out)]) == 0
        text = capsys.readouterr().out
        assert "criterion  3 PASS" in text and "2/2 criteria passed" in text
        doc = json.loads(out.read_text())
        assert doc["passed"] and [c["number"] for c in doc["criteria"]] == [3, 6]

    def test_bad_number(self):
        assert main(["verify", "--only", "12"]) == 2
