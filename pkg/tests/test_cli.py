import subprocess
import sys

import numpy as np
import pytest

from funcsurvey.cli import load_config, main, parse_config_text
from funcsurvey.designs import DesignKind
from funcsurvey.population import load_population


def write(path, text):
    path.write_text(text)
    return str(path)


@pytest.fixture
def pop_file(tmp_path):
    cfg = write(tmp_path / "pop.cfg", "N = 60\nr = 5\neta = 0.4\nseed = 3\nbeta_kind = t\n")
    out = str(tmp_path / "pop.csv")
    assert main(["gen-pop", "--config", cfg, "--out", out]) == 0
    return out


def body(path):
    """Non-metadata lines of a CSV output."""
    return [l for l in open(path).read().splitlines() if l and not l.startswith("#")]


class TestConfig:
    def test_defaults_and_alias(self):
        cfg, out = parse_config_text("N=50\nseed=2\n# comment\n\nr = 7\nout_dir = res\n")
        assert (cfg.N, cfg.n, cfg.master_seed, cfg.grid.r) == (50, 5, 2, 7)
        assert str(out) == "res"

    def test_lists(self):
        cfg, _ = parse_config_text("N=50\nn=5\nseed=1\ndesigns = srswor, rhc\nestimators=GREG\n"
                                   "pairs = GREG:SRSWOR, GREG:RHC\neta_sweep = default\n")
        assert cfg.designs == (DesignKind.SRSWOR, DesignKind.RHC)
        assert len(cfg.eta_sweep) == 11

    @pytest.mark.parametrize("text", ["N=50\nseed=1\nbogus=3\n", "N=50\n", "N=50\nseed=1\nN=60\n",
                                      "N=10\nn=10\nseed=1\n", "N=ten\nseed=1\n", "N 50\nseed=1\n",
                                      "N=50\nseed=1\npairs=RHC:SRSWOR\n"])
    def test_rejected(self, text):
        with pytest.raises(ValueError):
            parse_config_text(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValueError):
            load_config(tmp_path / "nope.cfg")


class TestGenPop:
    def test_minimal(self, tmp_path):
        cfg = write(tmp_path / "c.cfg", "N=10\nr=4\neta=0\nseed=1\n")
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        assert main(["gen-pop", "--config", cfg, "--out", a]) == 0
        assert main(["gen-pop", "--config", cfg, "--out", b]) == 0
        assert len(body(a)) == 11
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_large_roundtrip(self, tmp_path):
        from funcsurvey.sim import SimConfig, gen_population

        cfg = write(tmp_path / "c.cfg", "N=1000\nr=100\nseed=5\n")
        out = str(tmp_path / "p.csv")
        assert main(["gen-pop", "--config", cfg, "--out", out]) == 0
        pop = load_population(out)
        ref = gen_population(SimConfig(N=1000, n=100, master_seed=5))
        assert np.array_equal(pop.Y, ref.Y) and np.array_equal(pop.X, ref.X)


class TestEstimate:
    def test_census_ht(self, pop_file, tmp_path):
        out = str(tmp_path / "e.csv")
        assert main(["estimate", "--pop", pop_file, "--design", "SRSWOR", "--n", "60",
                     "--estimator", "HT", "--seed", "1", "--out", out]) == 0
        rows = body(out)
        assert rows[0] == "t,value"
        vals = np.array([float(r.split(",")[1]) for r in rows[1:]])
        np.testing.assert_allclose(vals, load_population(pop_file).Y.mean(axis=0), rtol=1e-14)

    def test_greg_rhc_echo_weights(self, pop_file, tmp_path, capsys):
        out = str(tmp_path / "e.csv")
        assert main(["estimate", "--pop", pop_file, "--design", "rhc", "--n", "8", "--estimator", "GREG",
                     "--seed", "2", "--out", out, "--echo-weights"]) == 0
        err = capsys.readouterr().err
        assert "kind=rhc" in err
        assert len([l for l in err.splitlines() if l and l[0].isdigit()]) == 8

    def test_with_variance(self, pop_file, tmp_path):
        out, kern = str(tmp_path / "e.csv"), str(tmp_path / "k.csv")
        assert main(["estimate", "--pop", pop_file, "--design", "SRSWOR", "--n", "10", "--estimator", "HT",
                     "--seed", "3", "--with-variance", "--out", out, "--kernel-out", kern]) == 0
        K = np.loadtxt(kern, delimiter=",", comments="#")
        assert K.shape == (5, 5)
        np.testing.assert_array_equal(K, K.T)
        trace_line = [l for l in open(out) if "trace=" in l][0]
        trace = float(trace_line.split("trace=")[1].split()[0])
        assert trace == pytest.approx(0.2 * np.trace(K), rel=1e-12)

    def test_deterministic(self, pop_file, tmp_path):
        args = ["estimate", "--pop", pop_file, "--design", "RaoSampford", "--n", "6", "--estimator", "GREG",
                "--seed", "11", "--out"]
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        assert main(args + [a]) == 0 and main(args + [b]) == 0
        assert open(a).read() == open(b).read()

    def test_illegal_pair(self, pop_file, capsys):
        code = main(["estimate", "--pop", pop_file, "--design", "RHC", "--n", "5", "--estimator", "HT",
                     "--seed", "1"])
        assert code == 3
        assert capsys.readouterr().err.startswith("error:")

    def test_seed_required(self, pop_file, capsys):
        assert main(["estimate", "--pop", pop_file, "--design", "SRSWOR", "--n", "5", "--estimator", "HT"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_bad_population(self, tmp_path, capsys):
        bad = write(tmp_path / "bad.csv", "# grid T=1 r=1\nid,x,z1,y1\na,0,1,1\n")
        assert main(["estimate", "--pop", bad, "--design", "SRSWOR", "--n", "1", "--estimator", "HT",
                     "--seed", "1"]) == 3
        assert "size must be positive (row 1)" in capsys.readouterr().err


class TestSimulate:
    def cfg(self, tmp_path, extra=""):
        return write(tmp_path / "s.cfg", f"N=80\nn=8\nI=2\nr=5\nseed=1\nout_dir={tmp_path / 'out'}\n" + extra)

    def test_smoke(self, tmp_path):
        assert main(["simulate", "--config", self.cfg(tmp_path)]) == 0
        assert (tmp_path / "out" / "mse.csv").exists() and (tmp_path / "out" / "re.csv").exists()

    def test_sweep(self, tmp_path):
        assert main(["simulate", "--config", self.cfg(tmp_path, "eta_sweep=default\n")]) == 0
        rows = body(tmp_path / "out" / "sweep.csv")
        assert len({r.split(",")[0] for r in rows[1:]}) == 11

    def test_threads_identical(self, tmp_path):
        cfg = self.cfg(tmp_path, "eta_sweep=0,0.5\n")
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", cfg, "--threads", "1", "--out-dir", str(a)]) == 0
        assert main(["simulate", "--config", cfg, "--threads", "3", "--out-dir", str(b)]) == 0
        for name in ("sweep.csv", "sweep_mse.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_unknown_key(self, tmp_path, capsys):
        assert main(["simulate", "--config", self.cfg(tmp_path, "colour=blue\n")]) == 2
        assert capsys.readouterr().err.startswith("error:")


class TestEta:
    def test_slope(self, pop_file, tmp_path):
        out = str(tmp_path / "eta.csv")
        assert main(["eta", "--pop", pop_file, "--n", "30", "--seed", "4", "--method", "slope", "--out", out]) == 0
        text = open(out).read()
        assert "theta_hat,eta_hat" in text and "log_trace,log_x" in text

    def test_bp_stdout(self, pop_file, capsys):
        assert main(["eta", "--pop", pop_file, "--n", "40", "--seed", "4", "--method", "bp"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[1] == "eta,p_value" and len(out) == 13

    def test_invalid_method(self, pop_file, capsys):
        assert main(["eta", "--pop", pop_file, "--n", "30", "--seed", "4", "--method", "lasso"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_bp_homoscedastic(self, tmp_path):
        cfg = write(tmp_path / "c.cfg", "N=3000\nr=20\neta=0\nseed=8\n")
        pop = str(tmp_path / "p.csv")
        main(["gen-pop", "--config", cfg, "--out", pop])
        hits = []
        for seed in range(10):
            out = tmp_path / f"e{seed}.csv"
            assert main(["eta", "--pop", pop, "--n", "300", "--seed", str(seed), "--method", "bp",
                         "--out", str(out)]) == 0
            hits.append(float(out.read_text().splitlines()[0].split("eta_hat=")[1]) <= 0.5)
        assert np.mean(hits) >= 0.8


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path / "c.cfg", "N=10\nr=3\nseed=1\n")
    res = subprocess.run([sys.executable, "-m", "funcsurvey", "gen-pop", "--config", cfg, "--out",
                          str(tmp_path / "p.csv")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    res = subprocess.run([sys.executable, "-m", "funcsurvey", "frobnicate"], capture_output=True, text=True)
    assert res.returncode == 2 and res.stderr.startswith("error:")
