import numpy as np
import pytest

from rascodes.cli import build_config, load_config, main, parse_channel
from rascodes.channel import Kind
from rascodes.simulate import ConfigError

CONFIG = """
[uncoded]
mode = channel
k = 32
n_k = 32
m = 0
generator_mode = identity
channel = bsc
point_unit = param
points = 0.05, 0.1
max_frames = 20
data_blocks_per_frame = 2

[src]
mode = source
k = 32
n_k = 16
m = 3
points = 0.02
max_frames = 4
window_blocks = 6
"""


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


class TestCalculators:
    def test_limits(self, capsys):
        rc, out, _ = run(capsys, "limits", "--rate", "0.5,1", "--theta", "0.15", "--grid-db", "0.1")
        assert rc == 0
        assert "Eb/N0 = -0.5522 dB" in out and "Eb/N0 = 0.7375 dB" in out

    def test_limits_infeasible_and_source(self, capsys):
        _, out, _ = run(capsys, "limits", "--rate", "2", "--theta", "0.5")
        assert "infeasible" in out
        _, out, _ = run(capsys, "limits", "--rate", "0.5", "--source")
        assert "0.110028" in out

    def test_pmi(self, capsys):
        rc, out, _ = run(capsys, "pmi", "--channel", "biawgn-snr:0", "--points", "3")
        rows = out.strip().split("\n")
        assert rc == 0 and rows[0] == "p,I0,I1,I" and len(rows) == 4
        assert rows[2].startswith("0.5,0.48594")

    def test_exponent(self, capsys):
        _, out, _ = run(capsys, "exponent", "--channel", "noiseless", "--p", "0.5", "--rate", "0.25")
        assert out.strip().split("\n")[1].startswith("0.5,0.25,0.75")

    def test_rho(self, capsys):
        _, out, _ = run(capsys, "rho", "--k", "3", "--weights", "1,0,2")
        assert out.startswith("rho = 0.5") and "T=2" in out

    def test_bounds(self, capsys):
        import json
        _, out, _ = run(capsys, "bounds", "--kind", "conv", "--k", "1", "--n", "4", "--m", "100",
                        "--channel", "bsc:0.02")
        rep = json.loads(out)
        assert set(rep["terms"]) == {"tau_sum_term", "low_weight_term"}

    def test_bad_channel(self, capsys):
        with pytest.raises(SystemExit):
            main(["pmi", "--channel", "bsc:0.9"])

    @pytest.mark.parametrize("spec,kind", [("bsc:0.1", Kind.BSC), ("bec:0.2", Kind.BEC),
                                           ("biawgn:1", Kind.BIAWGN), ("erased", Kind.TOTALLY_ERASED)])
    def test_parse_channel(self, spec, kind):
        assert parse_channel(spec).kind is kind


class TestFiles:
    def test_conv_roundtrip(self, tmp_path, capsys):
        g, u, x, d = (tmp_path / n for n in ("g.txt", "u.txt", "x.txt", "d.txt"))
        assert main(["generate", "--k", "8", "--n-k", "16", "--m", "2", "--seed", "4", "-o", str(g)]) == 0
        rng = np.random.default_rng(0)
        frames = ["".join(map(str, rng.integers(0, 2, 40))) for _ in range(3)]
        u.write_text("\n".join(frames) + "\n")
        assert main(["encode", "--generator", str(g), "-i", str(u), "-o", str(x)]) == 0
        coded = x.read_text().split()
        assert all(len(c) == (5 + 2) * 16 for c in coded)
        assert main(["decode", "--generator", str(g), "-i", str(x), "-o", str(d)]) == 0
        assert d.read_text().split() == frames

    def test_block_source_decode(self, tmp_path):
        g, u, x, p, d = (tmp_path / n for n in ("g.txt", "u.txt", "x.txt", "p.txt", "d.txt"))
        main(["generate", "--kind", "block", "--k", "2", "--n-k", "3", "--m", "1", "--seed", "3", "-o", str(g)])
        u.write_text("0000\n")
        main(["encode", "--generator", str(g), "-i", str(u), "-o", str(x)])
        assert x.read_text().strip() == "0" * 10
        p.write_text(x.read_text().strip()[4:] + "\n")
        main(["decode", "--generator", str(g), "-i", str(p), "-o", str(d), "--parity-only",
              "--theta", "0.1", "--decoder", "map"])
        assert d.read_text().strip() == "0000"

    def test_weights(self, tmp_path, capsys):
        f = tmp_path / "u.txt"
        f.write_text("100110\n")
        _, out, _ = run(capsys, "weights", "-i", str(f), "--k", "3")
        assert out.strip() == "1 2"

    def test_bad_bits_reported(self, tmp_path, capsys):
        g, u = tmp_path / "g.txt", tmp_path / "u.txt"
        main(["generate", "--k", "2", "--n-k", "2", "--m", "1", "-o", str(g)])
        u.write_text("10x1\n")
        rc, _, err = run(capsys, "encode", "--generator", str(g), "-i", str(u))
        assert rc == 2 and "error" in err


class TestSimulateCommand:
    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "sim.ini"
        cfg.write_text(CONFIG)
        rc, out, _ = run(capsys, "simulate", "--config", str(cfg))
        lines = out.strip().split("\n")
        assert rc == 0 and len(lines) == 4
        assert lines[1].startswith("uncoded,channel,32,32,0,")
        assert lines[3].startswith("src,source,32,16,3,0.02")

    def test_override_and_section(self, tmp_path, capsys):
        cfg = tmp_path / "sim.ini"
        cfg.write_text(CONFIG)
        out_file = tmp_path / "out.csv"
        main(["simulate", "--config", str(cfg), "--section", "uncoded", "--max-frames", "5",
              "--points", "0.2", "-o", str(out_file)])
        rows = out_file.read_text().strip().split("\n")
        assert len(rows) == 2 and ",5," in rows[1]

    def test_same_seed_same_bytes(self, tmp_path):
        cfg = tmp_path / "sim.ini"
        cfg.write_text(CONFIG)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["simulate", "--config", str(cfg), "-o", str(a)])
        main(["simulate", "--config", str(cfg), "-o", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "sim.ini"
        cfg.write_text(CONFIG + "bogus = 3\n")
        rc, _, err = run(capsys, "simulate", "--config", str(cfg))
        assert rc == 2 and "unknown key 'bogus'" in err

    def test_build_config_types(self):
        cfg = build_config({"mode": "jscc", "theta": "0.15", "n_k": "256", "points": "2.24",
                            "time_invariant": "no", "convergence_scope": "window"})
        assert cfg.n_k == 256 and cfg.points == (2.24,) and not cfg.time_invariant
        assert cfg.decoder.convergence_scope == "window"
        with pytest.raises(ConfigError):
            build_config({"time_invariant": "maybe", "points": "1"})

    def test_missing_section(self, tmp_path):
        cfg = tmp_path / "sim.ini"
        cfg.write_text(CONFIG)
        with pytest.raises(ConfigError):
            load_config(str(cfg), sections=["nope"])
