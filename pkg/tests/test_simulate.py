import math
import warnings
from dataclasses import replace

import pytest

from rascodes.codec import DecoderConfig
from rascodes.simulate import (
    CSV_COLUMNS,
    ConfigError,
    SimConfig,
    ga_bound_point,
    paired_genie_comparison,
    run_point,
    run_sweep,
    to_csv,
)

SMALL = SimConfig(mode="channel", k=32, n_k=64, m=2, points=(1.0,), max_frames=20,
                  data_blocks_per_frame=6, master_seed=7)
UNCODED = SimConfig(mode="channel", k=64, n_k=64, m=0, generator_mode="identity", channel="bsc",
                    point_unit="param", points=(0.1,), max_frames=150, max_frame_errors=10**6,
                    data_blocks_per_frame=4)


class TestValidation:
    @pytest.mark.parametrize("change", [
        dict(theta=0.3),  # channel mode needs a uniform source
        dict(points=()),
        dict(mode="source", channel="biawgn", points=(0.05,), point_unit="theta"),
        dict(mode="source", channel="noiseless", points=(0.05,), point_unit="ebn0_db"),
        dict(max_frames=0),
        dict(channel="bsc"),  # BSC points are parameters, not dB
        dict(decode_kind="viterbi"),
        dict(decoder=DecoderConfig(window_blocks=2)),
    ])
    def test_rejected_before_trials(self, change):
        with pytest.raises((ConfigError, ValueError)):
            run_point(replace(SMALL, **change), 1.0)

    def test_ga_needs_genie_kind(self):
        with pytest.raises(ConfigError):
            ga_bound_point(SMALL, 1.0)


class TestRunPoint:
    def test_noiseless_is_error_free(self):
        cfg = replace(SMALL, channel="noiseless", point_unit="param", points=(0.0,))
        r = run_point(cfg, 0.0)
        assert (r.ber, r.fer, r.trials) == (0.0, 0.0, 20)

    def test_uncoded_bsc(self):
        r = run_point(UNCODED, 0.1)
        n = r.bits_per_frame * r.trials
        assert abs(r.ber - 0.1) < 3 * math.sqrt(0.09 / n)

    def test_accounting(self):
        r = run_point(SMALL, 1.0)
        assert r.bits_per_frame == 32 * 6
        assert r.ber == r.bit_errors / (32 * 6 * r.trials)
        assert 0.0 <= r.ber <= 1.0 and 0.0 <= r.fer <= 1.0

    def test_stops_on_frame_errors(self):
        cfg = replace(SMALL, max_frame_errors=3, max_frames=1000)
        r = run_point(cfg, -4.0)
        assert r.frame_errors == 3 and r.stopped_by == "max_frame_errors"
        assert r.trials == 3  # every frame fails far below threshold

    def test_stops_on_max_frames(self):
        r = run_point(SMALL, 6.0)
        assert r.trials == 20 and r.stopped_by == "max_frames"

    def test_deterministic(self):
        assert run_point(SMALL, 0.5).row() == run_point(SMALL, 0.5).row()

    def test_seed_matters(self):
        a = run_point(replace(SMALL, max_frames=5), -1.0)
        b = run_point(replace(SMALL, max_frames=5, master_seed=8), -1.0)
        assert a.bit_errors != b.bit_errors

    def test_worker_count_does_not_change_results(self):
        cfg = replace(SMALL, points=(0.0, 1.0), max_frame_errors=4, max_frames=30)
        assert to_csv(run_sweep(cfg)) == to_csv(run_sweep(replace(cfg, workers=2)))

    def test_hard_decision_channel(self):
        soft = run_point(replace(SMALL, max_frames=10), 1.0)
        hard = run_point(replace(SMALL, channel="biawgn-hard", max_frames=10), 1.0)
        assert hard.snr_db == soft.snr_db
        assert hard.bit_errors >= soft.bit_errors

    def test_block_decode_kind(self):
        r = run_point(replace(SMALL, decode_kind="block", max_frames=5), 3.0)
        assert r.trials == 5 and r.bit_errors == 0

    def test_jscc_snr_conversion(self):
        cfg = replace(SMALL, mode="jscc", theta=0.15, n_k=32, max_frames=1)
        r = run_point(cfg, 2.24)
        assert r.snr_db == pytest.approx(2.24 + 10 * math.log10(2 * 0.6098403047), abs=1e-9)


class TestSweep:
    def test_csv_layout(self):
        cfg = replace(SMALL, points=(0.0, 1.0, 2.0), max_frames=3)
        text = to_csv(run_sweep(cfg))
        lines = text.strip().split("\n")
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 4

    def test_failed_point_marked(self):
        cfg = replace(UNCODED, points=(0.05, 0.7, 0.1), max_frames=3)
        rows = run_sweep(cfg)
        assert [r.stopped_by for r in rows] == ["max_frames", "error", "max_frames"]
        assert rows[1].error

    def test_source_trend(self):
        cfg = SimConfig(mode="source", k=64, n_k=32, m=4, channel="noiseless", point_unit="theta",
                        points=(0.04, 0.14), max_frames=20, data_blocks_per_frame=8)
        low, high = run_sweep(cfg)
        assert low.ber < high.ber

    def test_monotone_warning(self):
        cfg = replace(SMALL, points=(3.0, -3.0), max_frames=3)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            run_sweep(cfg)  # ordered by SNR, so no warning


class TestGenie:
    def test_noiseless(self):
        cfg = replace(SMALL, decode_kind="genie", channel="noiseless", point_unit="param", points=(0.0,))
        r = ga_bound_point(cfg, 0.0)
        assert r.ber == 0.0 and r.bits_per_frame == 32

    def test_m0_matches_block_decoding(self):
        cfg = replace(SMALL, m=0, n_k=32, max_frames=40)
        p = paired_genie_comparison(cfg, -1.0)
        assert p.genie_target_errors == p.window_target_errors > 0
        assert p.diff_mean == 0.0 and p.diff_std == 0.0

    def test_paired_window_matches_run_point(self):
        cfg = replace(SMALL, max_frame_errors=2, max_frames=15)
        p = paired_genie_comparison(cfg, 0.0)
        assert p.window.row() == run_point(cfg, 0.0).row()
        assert p.frames == 15 and p.genie.trials == 15

    def test_ordering(self):
        p = paired_genie_comparison(replace(SMALL, max_frames=40), 0.5)
        assert p.genie.ber <= p.window.ber or p.ordering_holds()
        assert p.ordering_holds()
