"""Command-line front end: ``rascodes <subcommand> ...``."""

from __future__ import annotations

import argparse
import configparser
import json
import sys

import numpy as np

from . import codec, infocalc
from .bits import BitVector, weight_profile
from .channel import ChannelModel, Kind, llr
from .ensemble import BlockRaSGenerator, dumps_generator, loads_generator, sample_block_ras, sample_conv_ras
from .simulate import ConfigError, SimConfig, run_sweep, to_csv

# --------------------------------------------------------------------------
# Channel and bit-file helpers


def parse_channel(spec: str) -> ChannelModel:
    """``bsc:EPS``, ``bec:ETA``, ``biawgn:SIGMA``, ``biawgn-snr:DB``, ``noiseless``, ``erased``."""
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    if name == "noiseless":
        return ChannelModel.noiseless()
    if name in ("erased", "totally-erased"):
        return ChannelModel.totally_erased()
    if not arg:
        raise argparse.ArgumentTypeError(f"channel {spec!r} needs a parameter")
    x = float(arg)
    if name == "bsc":
        return ChannelModel.bsc(x)
    if name == "bec":
        return ChannelModel.bec(x)
    if name == "biawgn":
        return ChannelModel.biawgn(x)
    if name == "biawgn-snr":
        return ChannelModel.biawgn_snr_db(x)
    raise argparse.ArgumentTypeError(f"unknown channel {spec!r}")


def _channel_arg(spec: str) -> ChannelModel:
    try:
        return parse_channel(spec)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def read_bit_lines(path: str) -> list[np.ndarray]:
    with open(path) as fh:
        return [BitVector.from_string(ln).to_array() for ln in fh if ln.strip()]


def write_bit_lines(path: str | None, frames) -> None:
    text = "".join("".join("1" if b else "0" for b in f) + "\n" for f in frames)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _read_observations(path: str, ch: ChannelModel) -> list[np.ndarray]:
    """Hard outputs as '0'/'1' lines ('e' marks a BEC erasure), or real
    BI-AWGN outputs as whitespace-separated numbers."""
    out = []
    with open(path) as fh:
        for ln in fh:
            if not ln.strip():
                continue
            if ch.kind is Kind.BIAWGN:
                out.append(np.array(_floats(ln)))
            else:
                s = ln.strip()
                out.append(np.array([2 if c == "e" else int(c) for c in s], dtype=np.uint8))
    return out


# --------------------------------------------------------------------------
# Calculator subcommands


def cmd_limits(a) -> None:
    for R in a.rate:
        if a.source:
            print(f"source R={R:g}: theta* = {infocalc.source_limit(R):.6f}")
            continue
        try:
            lim = infocalc.shannon_limit(R, a.theta, grid_db=a.grid_db)
        except infocalc.InfeasibleError as exc:
            print(f"R={R:g} theta={a.theta:g}: infeasible ({exc})")
            continue
        print(f"R={R:g} theta={a.theta:g}: SNR = {lim.snr_db:.4f} dB, Eb/N0 = {lim.ebn0_db:.4f} dB")


def cmd_pmi(a) -> None:
    print("p,I0,I1,I")
    for p in np.linspace(0.0, 1.0, a.points):
        r = infocalc.partial_mutual_info(a.channel, float(p))
        print(f"{p:.6g},{r.I0:.10g},{r.I1:.10g},{r.I:.10g}")


def cmd_exponent(a) -> None:
    print("p,R,E,gamma")
    for p in a.p:
        for R in a.rate:
            r = infocalc.partial_error_exponent(a.channel, p, R)
            print(f"{p:.6g},{R:.6g},{r.E:.10g},{r.gamma_star:.6g}")


def cmd_rho(a) -> None:
    prof = [int(w) for w in _floats(a.weights)]
    r = infocalc.rho(prof, a.k)
    T = sum(1 for w in prof if w)
    line = f"rho = {r:.15g}"
    if T:
        lo, hi, _ = infocalc.rho_bounds(a.k, T)
        line += f"  (bounds [{lo:.6g}, {hi:.6g}], T={T})"
    print(line)


def cmd_bounds(a) -> None:
    fn = infocalc.theorem1_fer_bound if a.kind == "block" else infocalc.conv_first_error_bound
    rep = fn(a.k, a.n, a.m, a.channel, a.entropy, a.delta)
    out = {"terms": rep.terms, "log2_terms": rep.log2_terms, "params": rep.params,
           "symbolic": list(rep.symbolic), "vacuous": rep.vacuous}
    print(json.dumps(out, indent=2, default=float))


# --------------------------------------------------------------------------
# Encode / decode on files


def cmd_generate(a) -> None:
    if a.kind == "block":
        gen = sample_block_ras(a.k, a.n_k, a.m, a.seed)
    else:
        gen = sample_conv_ras(a.k, a.n_k, a.m, a.seed, not a.time_varying, a.mode)
    text = dumps_generator(gen)
    if a.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(a.output, "w") as fh:
            fh.write(text)


def _load_gen(path: str):
    with open(path) as fh:
        return loads_generator(fh.read())


def cmd_encode(a) -> None:
    gen = _load_gen(a.generator)
    frames = []
    for u in read_bit_lines(a.input):
        if isinstance(gen, BlockRaSGenerator):
            frames.append(codec.encode_block(gen, u).to_array())
        else:
            blocks = u.reshape(-1, gen.k) if u.size % gen.k == 0 else [u]
            enc = codec.terminate(gen, blocks) if a.terminate else codec.encode_conv_stream(gen, blocks)
            frames.append(np.concatenate([b.to_array() for b in enc]) if enc else np.zeros(0, np.uint8))
    write_bit_lines(a.output, frames)


def cmd_decode(a) -> None:
    gen = _load_gen(a.generator)
    cfg = codec.DecoderConfig(a.max_iterations, a.threshold, a.window, a.llr_cap)
    frames = []
    for obs in _read_observations(a.input, a.channel):
        if isinstance(gen, BlockRaSGenerator):
            K = gen.K
            if a.parity_only:
                ls = np.zeros(K)
                lp = llr(a.channel, obs, cap=cfg.llr_cap)
            else:
                ls = llr(a.channel, obs[:K], cap=cfg.llr_cap)
                lp = llr(a.channel, obs[K:], cap=cfg.llr_cap)
            if a.decoder == "map":
                res = codec.map_decode_exhaustive(gen, a.theta, ls, lp)
            else:
                res = codec.bp_decode_block(gen, a.theta, ls, lp, cfg)
            frames.append(res.bits())
        else:
            lp = llr(a.channel, obs, cap=cfg.llr_cap)
            if a.decoder == "stream":
                res = codec.bp_decode_stream(gen, a.theta, lp, cfg, terminated=a.terminate)
            else:
                res = codec.bp_decode_sliding_window(gen, a.theta, lp, cfg, terminated=a.terminate)
            frames.append(np.concatenate([r.bits() for r in res]) if res else np.zeros(0, np.uint8))
    write_bit_lines(a.output, frames)


def cmd_weights(a) -> None:
    for u in read_bit_lines(a.input):
        print(" ".join(str(w) for w in weight_profile(u, a.k).weights))


# --------------------------------------------------------------------------
# Simulation config

_DECODER_KEYS = {"max_iterations": int, "convergence_threshold": float, "window_blocks": int,
                 "llr_cap": float, "convergence_scope": str}
_SIM_KEYS = {"mode": str, "k": int, "n_k": int, "m": int, "theta": float, "channel": str,
             "points": _floats, "point_unit": str, "max_frames": int, "max_frame_errors": int,
             "master_seed": int, "data_blocks_per_frame": int, "decode_kind": str,
             "generator_mode": str, "generator_seed": int, "time_invariant": None,
             "experiment": str, "workers": int}
CONFIG_KEYS = {**_SIM_KEYS, **_DECODER_KEYS}


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _convert(key: str, raw: str):
    if key not in CONFIG_KEYS:
        raise ConfigError(f"unknown key {key!r}")
    conv = CONFIG_KEYS[key] or _parse_bool
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def build_config(values: dict, experiment: str = "sim") -> SimConfig:
    """SimConfig from string-valued keys (config file entries and overrides)."""
    vals = {k: _convert(k, v) for k, v in values.items()}
    dec = {k: vals.pop(k) for k in list(vals) if k in _DECODER_KEYS}
    vals.setdefault("experiment", experiment)
    if "n_k" not in vals and vals.get("mode") in ("source", "jscc"):
        raise ConfigError("n_k must be given for source and jscc sweeps")
    if vals.get("mode") == "source":
        vals.setdefault("channel", "noiseless")
        vals.setdefault("point_unit", "theta")
    cfg = SimConfig(decoder=codec.DecoderConfig(**dec), **vals)
    cfg.validate()
    return cfg


def load_config(path: str, overrides: dict | None = None, sections=None) -> list[SimConfig]:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    with open(path) as fh:
        cp.read_file(fh)
    names = sections or cp.sections()
    if not names:
        raise ConfigError("config file has no sections")
    out = []
    for name in names:
        if not cp.has_section(name):
            raise ConfigError(f"no section {name!r}")
        vals = dict(cp.items(name))
        vals.update(overrides or {})
        out.append(build_config(vals, experiment=name))
    return out


def cmd_simulate(a) -> None:
    overrides = {k: getattr(a, k) for k in CONFIG_KEYS if getattr(a, k) is not None}
    if a.config:
        cfgs = load_config(a.config, overrides, a.section or None)
    else:
        cfgs = [build_config(overrides)]
    text = ""
    for i, cfg in enumerate(cfgs):
        csv_text = to_csv(run_sweep(cfg))
        text += csv_text if i == 0 else csv_text.split("\n", 1)[1]
    if a.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(a.output, "w") as fh:
            fh.write(text)


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rascodes", description="RaS / Conv-RaS code toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("limits", help="Shannon / source-coding limits")
    s.add_argument("--rate", type=_floats, default=[0.5], help="rates, comma separated")
    s.add_argument("--theta", type=float, default=0.5)
    s.add_argument("--grid-db", type=float, default=None, help="report the first SNR on this dB grid")
    s.add_argument("--source", action="store_true", help="tabulate source_limit(R) instead")
    s.set_defaults(func=cmd_limits)

    s = sub.add_parser("pmi", help="partial mutual information sweep over p")
    s.add_argument("--channel", type=_channel_arg, required=True)
    s.add_argument("--points", type=int, default=11)
    s.set_defaults(func=cmd_pmi)

    s = sub.add_parser("exponent", help="partial error exponent E(p, R)")
    s.add_argument("--channel", type=_channel_arg, required=True)
    s.add_argument("--p", type=_floats, default=[0.5])
    s.add_argument("--rate", type=_floats, default=[0.1])
    s.set_defaults(func=cmd_exponent)

    s = sub.add_parser("rho", help="parity success probability of a weight profile")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--weights", required=True, help="e.g. 1,0,2")
    s.set_defaults(func=cmd_rho)

    s = sub.add_parser("bounds", help="FER / first-error-event bound terms")
    s.add_argument("--kind", choices=("block", "conv"), default="block")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--channel", type=_channel_arg, required=True)
    s.add_argument("--entropy", type=float, default=1.0, help="H(U|V) (block) or H(U) (conv)")
    s.add_argument("--delta", type=float, default=0.01)
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("generate", help="sample a generator file")
    s.add_argument("--kind", choices=("block", "conv"), default="conv")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--n-k", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", default="regular", help="conv generator mode: regular, iid, identity")
    s.add_argument("--time-varying", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("encode", help="encode bit-file frames")
    s.add_argument("--generator", required=True)
    s.add_argument("-i", "--input", required=True)
    s.add_argument("-o", "--output")
    s.add_argument("--no-terminate", dest="terminate", action="store_false",
                   help="conv: do not append the m zero tail blocks")
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("decode", help="decode received frames")
    s.add_argument("--generator", required=True)
    s.add_argument("-i", "--input", required=True)
    s.add_argument("-o", "--output")
    s.add_argument("--channel", type=_channel_arg, default=ChannelModel.noiseless())
    s.add_argument("--theta", type=float, default=0.5)
    s.add_argument("--decoder", choices=("bp", "map", "window", "stream"), default=None)
    s.add_argument("--parity-only", action="store_true",
                   help="block code: input holds the parity bits only (systematic part erased)")
    s.add_argument("--no-terminate", dest="terminate", action="store_false")
    s.add_argument("--max-iterations", type=int, default=50)
    s.add_argument("--threshold", type=float, default=1e-3)
    s.add_argument("--window", type=int, default=None)
    s.add_argument("--llr-cap", type=float, default=30.0)
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("weights", help="weight profiles of bit-file frames")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("--k", type=int, required=True)
    s.set_defaults(func=cmd_weights)

    s = sub.add_parser("simulate", help="Monte Carlo sweep to CSV")
    s.add_argument("--config", help="key = value file, one section per sweep")
    s.add_argument("--section", action="append", help="run only these sections")
    s.add_argument("-o", "--output")
    for key in CONFIG_KEYS:
        s.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                       help="override" if key != "points" else "override, comma separated")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        a.func(a)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
