"""Monte Carlo BER/FER harness for terminated Conv-RaS frames.

Frame f of sweep point p draws all of its randomness (message, channel noise,
genie target) from ``np.random.default_rng([master_seed, p, f])``, so results
do not depend on how frames are scheduled across workers.
"""

from __future__ import annotations

import csv
import io
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import special

from .channel import ChannelModel, ebn0_db_from_snr_db, llr, transmit
from .codec import (
    DecoderConfig,
    bp_decode_sliding_window,
    bp_decode_stream,
    conv_encode_bits,
    genie_aided_decode,
)
from .ensemble import ConvRaSGenerator, sample_conv_ras
from .infocalc import entropy

MODES = ("source", "channel", "jscc")
DECODE_KINDS = ("sliding_window", "block", "genie")
CHANNELS = ("biawgn", "biawgn-hard", "bsc", "bec", "noiseless")
POINT_UNITS = ("ebn0_db", "snr_db", "param", "theta")
CSV_COLUMNS = ("experiment", "mode", "k", "n_minus_k", "m", "theta", "snr_db", "ebn0_db",
               "trials", "bit_errors", "frame_errors", "ber", "fer", "stopped_by", "seed")


class ConfigError(ValueError):
    """Inconsistent simulation configuration."""


@dataclass(frozen=True)
class SimConfig:
    """One sweep.

    ``points`` are Eb/N0 or SNR in dB, a raw channel parameter (BSC crossover,
    BEC erasure probability), or source probabilities ``theta`` in source
    mode, according to ``point_unit``.
    """

    mode: str = "channel"
    k: int = 256
    n_k: int = 512
    m: int = 8
    theta: float = 0.5
    channel: str = "biawgn"
    points: tuple[float, ...] = ()
    point_unit: str = "ebn0_db"
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    max_frames: int = 10**6
    max_frame_errors: int = 100
    master_seed: int = 0
    data_blocks_per_frame: int = 32
    decode_kind: str = "sliding_window"
    generator_mode: str = "regular"
    generator_seed: int | None = None  # None -> master_seed
    time_invariant: bool = True
    experiment: str = "sim"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.decode_kind not in DECODE_KINDS:
            raise ConfigError(f"decode_kind must be one of {DECODE_KINDS}")
        if self.channel not in CHANNELS:
            raise ConfigError(f"channel must be one of {CHANNELS}")
        if self.point_unit not in POINT_UNITS:
            raise ConfigError(f"point_unit must be one of {POINT_UNITS}")
        if min(self.k, self.n_k) < 1 or self.m < 0:
            raise ConfigError("need k, n_k >= 1 and m >= 0")
        if self.max_frames < 1 or self.max_frame_errors < 1:
            raise ConfigError("max_frames and max_frame_errors must be >= 1")
        if self.data_blocks_per_frame < 1:
            raise ConfigError("data_blocks_per_frame must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.points:
            raise ConfigError("empty sweep")
        if self.mode == "channel" and self.theta != 0.5:
            raise ConfigError("channel mode transmits a uniform source (theta = 1/2)")
        if self.mode == "source":
            if self.channel != "noiseless":
                raise ConfigError("source mode sends the parity over a noiseless channel")
            if self.point_unit != "theta":
                raise ConfigError("source mode sweeps theta (point_unit = theta)")
            if any(not 0.0 < p < 1.0 for p in self.points):
                raise ConfigError("source probabilities must lie in (0, 1)")
        else:
            if self.point_unit == "theta":
                raise ConfigError("theta sweeps are for source mode")
            if not 0.0 < self.theta < 1.0:
                raise ConfigError("theta must lie in (0, 1)")
            awgn = self.channel.startswith("biawgn")
            if awgn and self.point_unit not in ("ebn0_db", "snr_db"):
                raise ConfigError("BI-AWGN points are given in dB")
            if not awgn and self.channel != "noiseless" and self.point_unit != "param":
                raise ConfigError(f"{self.channel} points are raw channel parameters")
        self.decoder.window_for(self.m)

    @property
    def rate(self) -> float:
        """Information symbols per channel use (``k/(n-k)``)."""
        return self.k / self.n_k

    @property
    def bits_per_frame(self) -> int:
        return self.k * self.data_blocks_per_frame

    def sample_generator(self) -> ConvRaSGenerator:
        seed = self.master_seed if self.generator_seed is None else self.generator_seed
        return sample_conv_ras(self.k, self.n_k, self.m, seed, self.time_invariant, self.generator_mode)


@dataclass(frozen=True)
class SimResult:
    experiment: str
    mode: str
    k: int
    n_k: int
    m: int
    theta: float
    snr_db: float | None
    ebn0_db: float | None
    point: float
    trials: int
    bit_errors: int
    frame_errors: int
    bits_per_frame: int
    stopped_by: str
    seed: int
    wall_time: float = 0.0
    error: str | None = None

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.bits_per_frame * self.trials) if self.trials else math.nan

    @property
    def fer(self) -> float:
        return self.frame_errors / self.trials if self.trials else math.nan

    def ber_sigma(self) -> float:
        """Binomial standard error of the BER estimate (bits treated as independent)."""
        n = self.bits_per_frame * self.trials
        p = self.ber
        return math.sqrt(max(p * (1 - p), 0.0) / n) if n else math.nan

    def row(self) -> dict:
        def num(x):
            return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))

        return {
            "experiment": self.experiment, "mode": self.mode, "k": self.k, "n_minus_k": self.n_k,
            "m": self.m, "theta": repr(float(self.theta)), "snr_db": num(self.snr_db),
            "ebn0_db": num(self.ebn0_db), "trials": self.trials, "bit_errors": self.bit_errors,
            "frame_errors": self.frame_errors, "ber": num(self.ber), "fer": num(self.fer),
            "stopped_by": self.stopped_by, "seed": self.seed,
        }


# --------------------------------------------------------------------------
# Point setup


@dataclass(frozen=True)
class _Point:
    index: int
    value: float
    theta: float
    channel: ChannelModel
    snr_db: float | None
    ebn0_db: float | None
    hard: bool = False  # quantise BI-AWGN outputs and decode with BSC LLRs


def _q(x: float) -> float:
    return 0.5 * special.erfc(x / math.sqrt(2.0))


def _resolve_point(cfg: SimConfig, index: int, value: float) -> _Point:
    if cfg.mode == "source":
        return _Point(index, value, value, ChannelModel.noiseless(), None, None)
    H = entropy(cfg.theta)
    if cfg.channel == "noiseless":
        return _Point(index, value, cfg.theta, ChannelModel.noiseless(), None, None)
    if cfg.channel.startswith("biawgn"):
        scale = 10 * math.log10(2 * cfg.rate * H)
        snr = value + scale if cfg.point_unit == "ebn0_db" else value
        ch = ChannelModel.biawgn_snr_db(snr)
        return _Point(index, value, cfg.theta, ch, snr, ebn0_db_from_snr_db(snr, cfg.rate, H),
                      hard=cfg.channel == "biawgn-hard")
    ch = ChannelModel.bsc(value) if cfg.channel == "bsc" else ChannelModel.bec(value)
    return _Point(index, value, cfg.theta, ch, None, None)


def _frame_llrs(pt: _Point, x: np.ndarray, rng: np.random.Generator, cap: float) -> np.ndarray:
    obs = transmit(x, pt.channel, rng)
    if pt.hard:
        eps = _q(1.0 / pt.channel.sigma)
        bsc = ChannelModel.bsc(eps)
        return llr(bsc, (obs.values < 0).astype(np.uint8), cap=cap)
    return llr(pt.channel, obs, cap=cap)


@dataclass
class _Frame:
    u: np.ndarray  # data bits (flat)
    lp: np.ndarray  # coded-stream LLRs
    target: int


def _draw_frame(cfg: SimConfig, gen: ConvRaSGenerator, pt: _Point, f: int) -> _Frame:
    rng = np.random.default_rng([cfg.master_seed, pt.index, f])
    M, k, m = cfg.data_blocks_per_frame, cfg.k, cfg.m
    u = (rng.random(M * k) < pt.theta).astype(np.uint8)
    x = conv_encode_bits(gen, np.concatenate([u, np.zeros(m * k, dtype=np.uint8)]))
    lp = _frame_llrs(pt, x, rng, cfg.decoder.llr_cap)
    target = int(rng.integers(M))
    return _Frame(u, lp, target)


def _decode_all(cfg, gen, pt, fr: _Frame) -> np.ndarray:
    if cfg.decode_kind == "block":
        res = bp_decode_stream(gen, pt.theta, fr.lp, cfg.decoder)
    else:
        res = bp_decode_sliding_window(gen, pt.theta, fr.lp, cfg.decoder)
    return np.concatenate([r.bits() for r in res])


def _decode_genie(cfg, gen, pt, fr: _Frame) -> np.ndarray:
    full = np.concatenate([fr.u, np.zeros(cfg.m * cfg.k, dtype=np.uint8)])
    blocks = full.reshape(-1, cfg.k)
    return genie_aided_decode(gen, pt.theta, fr.lp, blocks, fr.target, cfg.decoder).bits()


def _frame_errors(cfg, gen, pt, f: int) -> int:
    fr = _draw_frame(cfg, gen, pt, f)
    if cfg.decode_kind == "genie":
        k = cfg.k
        ref = fr.u[fr.target * k:(fr.target + 1) * k]
        return int(np.count_nonzero(_decode_genie(cfg, gen, pt, fr) != ref))
    return int(np.count_nonzero(_decode_all(cfg, gen, pt, fr) != fr.u))


# --------------------------------------------------------------------------
# Worker pool plumbing

_WORKER: dict = {}


def _init_worker(cfg: SimConfig):
    _WORKER["cfg"] = cfg
    _WORKER["gen"] = cfg.sample_generator()


def _work(args) -> list[int]:
    index, value, lo, hi = args
    cfg, gen = _WORKER["cfg"], _WORKER["gen"]
    pt = _resolve_point(cfg, index, value)
    return [_frame_errors(cfg, gen, pt, f) for f in range(lo, hi)]


def _error_counts(cfg: SimConfig, gen, pt: _Point, pool) -> Iterable[int]:
    """Per-frame bit-error counts in frame order (lazily, in batches)."""
    if pool is None:
        for f in range(cfg.max_frames):
            yield _frame_errors(cfg, gen, pt, f)
        return
    batch = 8
    f = 0
    while f < cfg.max_frames:
        jobs = []
        for _ in range(cfg.workers):
            lo, hi = f, min(f + batch, cfg.max_frames)
            if lo >= hi:
                break
            jobs.append((pt.index, pt.value, lo, hi))
            f = hi
        for chunk in pool.map(_work, jobs):
            yield from chunk


def _bits_counted(cfg: SimConfig) -> int:
    return cfg.k if cfg.decode_kind == "genie" else cfg.bits_per_frame


def _result(cfg, pt, trials, bit_errors, frame_errors, stopped_by, wall, error=None) -> SimResult:
    return SimResult(cfg.experiment, cfg.mode, cfg.k, cfg.n_k, cfg.m, pt.theta, pt.snr_db, pt.ebn0_db,
                     pt.value, trials, bit_errors, frame_errors, _bits_counted(cfg), stopped_by,
                     cfg.master_seed, wall, error)


def _run(cfg: SimConfig, gen, pt: _Point, pool=None) -> SimResult:
    t0 = time.perf_counter()
    trials = bits = frames = 0
    stopped_by = "max_frames"
    for e in _error_counts(cfg, gen, pt, pool):
        trials += 1
        bits += e
        frames += e > 0
        if frames >= cfg.max_frame_errors:
            stopped_by = "max_frame_errors"
            break
        if trials >= cfg.max_frames:
            break
    return _result(cfg, pt, trials, bits, frames, stopped_by, time.perf_counter() - t0)


def _pool_for(cfg: SimConfig):
    if cfg.workers <= 1:
        return None
    return ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(cfg,))


def run_point(cfg: SimConfig, point: float, point_index: int = 0,
              gen: ConvRaSGenerator | None = None) -> SimResult:
    """Simulate one sweep value until the stopping rule fires."""
    cfg.validate()
    gen = gen or cfg.sample_generator()
    pt = _resolve_point(cfg, point_index, point)
    pool = _pool_for(cfg)
    try:
        return _run(cfg, gen, pt, pool)
    finally:
        if pool is not None:
            pool.shutdown()


def ga_bound_point(cfg: SimConfig, point: float, point_index: int = 0,
                   gen: ConvRaSGenerator | None = None) -> SimResult:
    """Genie-aided BER: one uniformly chosen target block per frame, all other
    blocks revealed.  Bits counted per frame = k."""
    if cfg.decode_kind != "genie":
        raise ConfigError("ga_bound_point needs decode_kind = genie")
    return run_point(cfg, point, point_index, gen)


def run_sweep(cfg: SimConfig) -> list[SimResult]:
    """Run every sweep point in order; a failing point yields an error row."""
    cfg.validate()
    gen = cfg.sample_generator()
    out = []
    pool = _pool_for(cfg)
    try:
        for i, v in enumerate(cfg.points):
            try:
                pt = _resolve_point(cfg, i, v)
                out.append(_run(cfg, gen, pt, pool))
            except Exception as exc:  # noqa: BLE001 - keep the sweep going
                pt = _Point(i, v, cfg.theta, ChannelModel.noiseless(), None, None)
                out.append(_result(cfg, pt, 0, 0, 0, "error", 0.0, f"{type(exc).__name__}: {exc}"))
    finally:
        if pool is not None:
            pool.shutdown()
    if cfg.point_unit in ("ebn0_db", "snr_db"):
        # soft check: BER should not grow with SNR
        bers = [r.ber for r in sorted(out, key=lambda r: r.point) if r.stopped_by != "error"]
        if any(b2 > b1 for b1, b2 in zip(bers, bers[1:])):
            warnings.warn("BER is not monotone in SNR over the sweep", stacklevel=2)
    return out


def to_csv(results: Sequence[SimResult]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in results:
        w.writerow(r.row())
    return buf.getvalue()


# --------------------------------------------------------------------------
# Paired genie vs. sliding-window comparison


@dataclass(frozen=True)
class PairedComparison:
    """Sliding-window and genie decoding of the same frames.

    ``window`` obeys the usual stopping rule (it is exactly what
    ``run_point`` returns, its wall time covering frame generation and
    window decoding only); the pairing itself always covers ``frames``
    frames.  Differences are genie minus window bit errors on the genie's
    target block.
    """

    window: SimResult
    genie: SimResult
    frames: int
    window_target_errors: int
    genie_target_errors: int
    diff_mean: float
    diff_std: float

    @property
    def diff_sigma(self) -> float:
        """Standard error of the mean per-frame difference."""
        return self.diff_std / math.sqrt(self.frames)

    def ordering_holds(self, n_sigma: float = 3.0) -> bool:
        return self.diff_mean <= n_sigma * self.diff_sigma


def paired_genie_comparison(cfg: SimConfig, point: float, point_index: int = 0,
                            frames: int | None = None,
                            gen: ConvRaSGenerator | None = None) -> PairedComparison:
    cfg = replace(cfg, decode_kind="sliding_window")
    cfg.validate()
    gen = gen or cfg.sample_generator()
    frames = cfg.max_frames if frames is None else frames
    pt = _resolve_point(cfg, point_index, point)
    k = cfg.k
    sw = [0, 0, 0]  # trials, bits, frames under the stopping rule
    sw_stop = None
    sw_time = ga_time = 0.0
    ga_bits = ga_frames = sw_tgt = 0
    diffs = np.zeros(frames)
    for f in range(frames):
        t0 = time.perf_counter()
        fr = _draw_frame(cfg, gen, pt, f)
        est = _decode_all(cfg, gen, pt, fr)
        t1 = time.perf_counter()
        e = int(np.count_nonzero(est != fr.u))
        if sw_stop is None:
            sw_time += t1 - t0
            sw[0] += 1
            sw[1] += e
            sw[2] += e > 0
            if sw[2] >= cfg.max_frame_errors:
                sw_stop = "max_frame_errors"
            elif sw[0] >= cfg.max_frames:
                sw_stop = "max_frames"
        sl = slice(fr.target * k, (fr.target + 1) * k)
        g = int(np.count_nonzero(_decode_genie(cfg, gen, pt, fr) != fr.u[sl]))
        ga_time += time.perf_counter() - t1
        w = int(np.count_nonzero(est[sl] != fr.u[sl]))
        ga_bits += g
        ga_frames += g > 0
        sw_tgt += w
        diffs[f] = g - w
    window = _result(cfg, pt, sw[0], sw[1], sw[2], sw_stop or "max_frames", sw_time)
    gcfg = replace(cfg, decode_kind="genie")
    genie = _result(gcfg, pt, frames, ga_bits, ga_frames, "max_frames", ga_time)
    std = float(diffs.std(ddof=1)) if frames > 1 else 0.0
    return PairedComparison(window, genie, frames, sw_tgt, ga_bits, float(diffs.mean()), std)
