"""Command-line experiments: rate sweeps, orthant-count tables and constellation dumps."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .channel import ChannelConfigError, ChannelModelConfig, channel_from_json, gen_channel, gen_mmwave
from .closed_form import (
    ConvexOptBoundInputs,
    SingularChannelError,
    aqnm_rate,
    channel_inversion_rate,
    convexopt_lower_bound,
    finite_snr_upper_bound,
    qpsk_low_snr_rate,
    unquantized_waterfilling_capacity,
)
from .constellation_design import design_constellation, designed_ba_rate, simo_grid_capacity
from .infinite_snr import k_func, simo_inf_capacity
from .quantized_dmc import mutual_information, transition_matrix

log = logging.getLogger("onebit_mimo")

STRATEGIES = (
    "upper_bound",
    "channel_inversion",
    "convex_opt",
    "convex_opt_ba",
    "aqnm",
    "qpsk_low_snr",
    "unquantized_wf",
    "convex_opt_lower_bound",
)
DESIGN_STRATEGIES = {"convex_opt", "convex_opt_ba", "convex_opt_lower_bound"}
CSV_HEADER = ("snr_db", "strategy", "mean_rate_bits", "stderr_bits", "trials", "seed")
SKIPPED = "skipped"
K_TABLE_MAX = 64

SNR_HELP = (
    "SNR is the total transmit power Pt with unit-variance CN(0, I) noise; "
    "dB values are 10*log10(Pt)."
)

_MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
    """Invalid sweep configuration; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_seed(seed: int, trial: int) -> int:
    """Per-trial channel seed, independent of how trials are scheduled."""
    return splitmix64((seed ^ trial) & _MASK64)


def parse_snr_range(text: str) -> list[float]:
    """``"a:b:step"`` (inclusive of ``b``), ``"a,b,c"`` or a single value, in dB."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected a:b:step, got {text!r}")
        a, b, step = (float(p) for p in parts)
        if step <= 0 or b < a:
            raise ValueError(f"need step > 0 and b >= a in {text!r}")
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        return [a + i * step for i in range(n)]
    return [float(p) for p in text.split(",") if p.strip()]


@dataclass
class SweepConfig:
    channel: ChannelModelConfig = field(default_factory=ChannelModelConfig)
    snr_db: list = field(default_factory=lambda: [0.0])
    strategies: list = field(default_factory=lambda: list(STRATEGIES))
    trials: int = 1
    seed: int = 0
    workers: int = 1

    def validate(self) -> None:
        try:
            self.channel.validate()
        except ChannelConfigError as err:
            raise ConfigError(f"channel.{err.field}", str(err).split(": ", 1)[1]) from None
        if not self.snr_db:
            raise ConfigError("snr_db", "empty SNR grid")
        for i, v in enumerate(self.snr_db):
            if not math.isfinite(v):
                raise ConfigError(f"snr_db[{i}]", f"not finite: {v}")
        for i, s in enumerate(self.strategies):
            if s not in STRATEGIES:
                raise ConfigError(f"strategies[{i}]", f"unknown strategy {s!r}; choose from {', '.join(STRATEGIES)}")
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")


def _channel_from_dict(doc: dict, path: str = "channel") -> ChannelModelConfig:
    known = {f.name for f in fields(ChannelModelConfig)}
    kwargs = {}
    for key, value in doc.items():
        if key not in known:
            raise ConfigError(f"{path}.{key}", "unknown field")
        kwargs[key] = value
    if "matrix" in kwargs and kwargs["matrix"] is not None:
        m = kwargs["matrix"]
        try:
            kwargs["matrix"] = channel_from_json(m) if isinstance(m, dict) else np.asarray(m, dtype=complex)
        except (KeyError, ValueError, TypeError) as err:
            raise ConfigError(f"{path}.matrix", str(err)) from None
    if kwargs.get("kind") == "fixed" and kwargs.get("matrix") is not None:
        kwargs.setdefault("nr", kwargs["matrix"].shape[0])
        kwargs.setdefault("nt", kwargs["matrix"].shape[1])
    for key in ("nr", "nt", "seed", "L", "yt", "zt", "yr", "zr"):
        if key in kwargs and kwargs[key] is not None and not isinstance(kwargs[key], int):
            raise ConfigError(f"{path}.{key}", f"expected an integer, got {kwargs[key]!r}")
    return ChannelModelConfig(**kwargs)


def sweep_config_from_dict(doc: dict) -> SweepConfig:
    """Build and validate a ``SweepConfig`` from decoded JSON."""
    known = {f.name for f in fields(SweepConfig)}
    for key in doc:
        if key not in known:
            raise ConfigError(key, "unknown field")
    cfg = SweepConfig()
    if "channel" in doc:
        if not isinstance(doc["channel"], dict):
            raise ConfigError("channel", "expected an object")
        cfg.channel = _channel_from_dict(doc["channel"])
    if "snr_db" in doc:
        snr = doc["snr_db"]
        try:
            cfg.snr_db = parse_snr_range(snr) if isinstance(snr, str) else [float(v) for v in snr]
        except (TypeError, ValueError) as err:
            raise ConfigError("snr_db", str(err)) from None
    if "strategies" in doc:
        cfg.strategies = list(doc["strategies"])
    for key in ("trials", "seed", "workers"):
        if key in doc:
            if not isinstance(doc[key], int):
                raise ConfigError(key, f"expected an integer, got {doc[key]!r}")
            setattr(cfg, key, doc[key])
    cfg.validate()
    return cfg


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    strategy: str
    mean_rate_bits: Optional[float]
    stderr_bits: Optional[float]
    trials: int
    seed: int

    @property
    def skipped(self) -> bool:
        return self.mean_rate_bits is None


def _trial_channel(config: SweepConfig, trial: int) -> np.ndarray:
    ch = config.channel
    if ch.kind == "fixed":
        return gen_channel(ch)
    return gen_channel(ChannelModelConfig(**{**ch.__dict__, "seed": trial_seed(config.seed, trial)}))


def evaluate_trial(config: SweepConfig, trial: int) -> list[list[Optional[float]]]:
    """Rates for one channel draw: ``out[snr_index][strategy_index]``, ``None`` if not applicable."""
    H = _trial_channel(config, trial)
    nr = H.shape[0]
    design = design_constellation(H, 1.0) if DESIGN_STRATEGIES & set(config.strategies) else None
    out = []
    for db in config.snr_db:
        Pt = 10.0 ** (db / 10.0)
        row = []
        for name in config.strategies:
            row.append(_strategy_rate(name, H, Pt, design, nr))
        out.append(row)
    return out


def _strategy_rate(name, H, Pt, design, nr) -> Optional[float]:
    if name == "upper_bound":
        return finite_snr_upper_bound(H, Pt)
    if name == "channel_inversion":
        try:
            return channel_inversion_rate(H, Pt)
        except SingularChannelError:
            return None
    if name == "aqnm":
        return aqnm_rate(H, Pt)
    if name == "qpsk_low_snr":
        return qpsk_low_snr_rate(H, Pt)
    if name == "unquantized_wf":
        return unquantized_waterfilling_capacity(H, Pt)
    if design is None or design.M == 0:
        return None
    scaled = design.scaled(Pt)
    if name == "convex_opt":
        T = transition_matrix(H, scaled.constellation)
        return mutual_information(T, scaled.constellation.probs)
    if name == "convex_opt_ba":
        return designed_ba_rate(H, scaled).capacity_bits
    if name == "convex_opt_lower_bound":
        return convexopt_lower_bound(ConvexOptBoundInputs(scaled.M, scaled.d_min, nr))
    raise ValueError(f"unknown strategy {name!r}")


def _evaluate_star(args):
    return evaluate_trial(*args)


def run_sweep(config: SweepConfig) -> list[SweepRow]:
    """Average every strategy over ``config.trials`` channel draws.

    Trial ``t`` always uses the channel seeded by ``trial_seed(seed, t)`` and
    results are aggregated in trial order, so the output does not depend on
    ``workers``.  Strategies that do not apply to some draw (channel inversion
    on a rank-deficient channel) average over the remaining draws, and are
    reported as skipped when no draw applies.
    """
    config.validate()
    jobs = [(config, t) for t in range(config.trials)]
    if config.workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_trial = list(pool.map(_evaluate_star, jobs))
    else:
        per_trial = [_evaluate_star(j) for j in jobs]

    rows = []
    for i, db in enumerate(config.snr_db):
        for j, name in enumerate(config.strategies):
            vals = [r[i][j] for r in per_trial if r[i][j] is not None]
            if len(vals) < config.trials:
                log.info("%s not applicable on %d of %d trials at %g dB", name, config.trials - len(vals), config.trials, db)
            if not vals:
                rows.append(SweepRow(db, name, None, None, 0, config.seed))
                continue
            mean = math.fsum(vals) / len(vals)
            if len(vals) > 1:
                var = math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
                stderr = math.sqrt(var / len(vals))
            else:
                stderr = 0.0
            rows.append(SweepRow(db, name, mean, stderr, len(vals), config.seed))
    return rows


def rows_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        mean = SKIPPED if r.skipped else repr(r.mean_rate_bits)
        err = SKIPPED if r.skipped else repr(r.stderr_bits)
        writer.writerow([repr(r.snr_db), r.strategy, mean, err, r.trials, r.seed])
    return buf.getvalue()


def emit_k_table(max_nr: int, max_nt: int) -> str:
    """CSV of exact ``K(Nr, Nt)`` and ``log2 K`` for ``1 <= Nr <= max_nr``, ``1 <= Nt <= max_nt``."""
    if not (1 <= max_nr <= K_TABLE_MAX and 1 <= max_nt <= K_TABLE_MAX):
        raise ValueError(f"table bounds must lie in [1, {K_TABLE_MAX}]")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["nr", "nt", "K", "log2_K"])
    for nr in range(1, max_nr + 1):
        for nt in range(1, max_nt + 1):
            k = k_func(nr, nt)
            writer.writerow([nr, nt, k, repr(math.log2(k))])
    return buf.getvalue()


def dump_constellation(H, Pt: float) -> str:
    """JSON of the max-margin design for channel ``H`` at power ``Pt``."""
    return design_constellation(H, Pt).to_json()


def simo_infinite_table(max_nr: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["nr", "capacity_bits", "p0", "log2_4nr", "log2_4nr_plus_1"])
    for nr in range(1, max_nr + 1):
        cap, p0 = simo_inf_capacity(nr)
        writer.writerow([nr, repr(cap), repr(p0), repr(math.log2(4 * nr)), repr(math.log2(4 * nr + 1))])
    return buf.getvalue()


def parse_complex_list(text: str) -> np.ndarray:
    """Comma-separated complex entries: ``1-2j`` or polar ``mag@degrees``."""
    out = []
    for item in text.split(","):
        item = item.strip().replace(" ", "")
        if "@" in item:
            mag, deg = item.split("@")
            out.append(float(mag) * np.exp(1j * math.radians(float(deg))))
        else:
            out.append(complex(item))
    return np.array(out, dtype=complex)


def mmwave_rows(config: ChannelModelConfig, snr_db: list, trials: int, seed: int) -> str:
    """Designed-constellation rates of mmWave draws, one CSV row per trial and SNR."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["snr_db", "trial", "L", "M", "uniform_mi_bits", "ba_mi_bits", "log2_K_bits"])
    target = math.log2(k_func(config.nr, config.L))
    for t in range(trials):
        H, _ = gen_mmwave(ChannelModelConfig(**{**config.__dict__, "seed": trial_seed(seed, t)}))
        design = design_constellation(H, 1.0)
        for db in snr_db:
            scaled = design.scaled(10.0 ** (db / 10.0))
            T = transition_matrix(H, scaled.constellation)
            uni = mutual_information(T, scaled.constellation.probs)
            ba = designed_ba_rate(H, scaled).capacity_bits
            writer.writerow([repr(db), t, config.L, design.M, repr(uni), repr(ba), repr(target)])
    return buf.getvalue()


def _write(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    return doc


def _channel_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("channel")
    g.add_argument("--kind", choices=["fixed", "iid_gaussian", "mmwave"], default=None)
    g.add_argument("--nr", type=int, default=None, help="receive antennas")
    g.add_argument("--nt", type=int, default=None, help="transmit antennas")
    g.add_argument("--paths", dest="L", type=int, default=None, help="mmWave path count L")
    for dim in ("yr", "zr", "yt", "zt"):
        g.add_argument(f"--{dim}", type=int, default=None, help=f"planar array dimension {dim}")
    g.add_argument("--channel-json", default=None, help='file with {"nr","nt","re","im"}; implies --kind fixed')


def _channel_doc(args, base: dict) -> dict:
    doc = dict(base)
    if args.channel_json:
        with open(args.channel_json, encoding="utf-8") as fh:
            doc["matrix"] = json.load(fh)
        doc["kind"] = "fixed"
    for key in ("kind", "nr", "nt", "L", "yr", "zr", "yt", "zt"):
        value = getattr(args, key, None)
        if value is not None:
            doc[key] = value
    return doc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onebit-mimo",
        description="Capacity and constellation experiments for MIMO links with one-bit receivers. " + SNR_HELP,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log skipped strategies and progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, snr_default):
        p.add_argument("--config", default=None, help="JSON config file; flags override its entries")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--snr-db", default=None, help=f"a:b:step, a,b,c or one value [{snr_default}]. {SNR_HELP}")
        p.add_argument("--workers", type=int, default=None, help="parallel trial workers; results do not depend on it")

    p = sub.add_parser("sweep", help="average rate of each strategy versus SNR", description=SNR_HELP)
    common(p, "-10:40:5")
    _channel_flags(p)
    p.add_argument("--strategies", default=None, help=f"comma list from {', '.join(STRATEGIES)}")

    p = sub.add_parser("ktable", help="exact K(Nr, Nt) table")
    p.add_argument("--max-nr", type=int, default=8)
    p.add_argument("--max-nt", type=int, default=8)
    p.add_argument("--out", default=None)

    p = sub.add_parser("constellation", help="max-margin constellation as JSON", description=SNR_HELP)
    common(p, "20")
    _channel_flags(p)

    p = sub.add_parser("simo-capacity", help="SIMO grid capacity and support as JSON", description=SNR_HELP)
    common(p, "10")
    p.add_argument("--h", default=None, help="channel entries, e.g. '1@22.5,1@-22.5' (mag@deg) or '1,1-1.7j'")
    p.add_argument("--grid-n", type=int, default=64)
    p.add_argument("--infinite", type=int, metavar="MAX_NR", default=None,
                   help="instead print the noiseless SIMO capacity for Nr = 1..MAX_NR as CSV")

    p = sub.add_parser("mmwave", help="designed-constellation rates on mmWave channels", description=SNR_HELP)
    common(p, "80")
    _channel_flags(p)
    return parser


def _cmd_sweep(args) -> str:
    doc = _load_config(args.config)
    doc["channel"] = _channel_doc(args, doc.get("channel", {}))
    if args.snr_db is not None:
        doc["snr_db"] = args.snr_db
    doc.setdefault("snr_db", "-10:40:5")
    if args.strategies is not None:
        doc["strategies"] = [s.strip() for s in args.strategies.split(",") if s.strip()]
    for key in ("seed", "trials", "workers"):
        if getattr(args, key) is not None:
            doc[key] = getattr(args, key)
    return rows_to_csv(run_sweep(sweep_config_from_dict(doc)))


def _single_channel(args, doc) -> np.ndarray:
    ch_doc = _channel_doc(args, doc.get("channel", {}))
    if args.seed is not None:
        ch_doc["seed"] = args.seed
    cfg = _channel_from_dict(ch_doc)
    try:
        return gen_channel(cfg)
    except ChannelConfigError as err:
        raise ConfigError(f"channel.{err.field}", str(err).split(": ", 1)[1]) from None


def _single_snr(args, doc, default: str) -> float:
    values = parse_snr_range(args.snr_db if args.snr_db is not None else str(doc.get("snr_db", default)))
    if len(values) != 1:
        raise ConfigError("snr_db", "this command takes a single SNR value")
    return 10.0 ** (values[0] / 10.0)


def _cmd_constellation(args) -> str:
    doc = _load_config(args.config)
    return dump_constellation(_single_channel(args, doc), _single_snr(args, doc, "20"))


def _cmd_simo(args) -> str:
    if args.infinite is not None:
        return simo_infinite_table(args.infinite)
    doc = _load_config(args.config)
    h_text = args.h if args.h is not None else doc.get("h")
    if h_text is None:
        raise ConfigError("h", "SIMO channel entries are required (--h)")
    h = parse_complex_list(h_text) if isinstance(h_text, str) else np.asarray(h_text, dtype=complex)
    res = simo_grid_capacity(h, _single_snr(args, doc, "10"), grid_n=args.grid_n)
    return res.to_json()


def _cmd_mmwave(args) -> str:
    doc = _load_config(args.config)
    ch_doc = _channel_doc(args, doc.get("channel", {}))
    ch_doc["kind"] = "mmwave"
    cfg = _channel_from_dict(ch_doc)
    try:
        cfg.validate()
    except ChannelConfigError as err:
        raise ConfigError(f"channel.{err.field}", str(err).split(": ", 1)[1]) from None
    snr = parse_snr_range(args.snr_db if args.snr_db is not None else str(doc.get("snr_db", "80")))
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    trials = args.trials if args.trials is not None else int(doc.get("trials", 1))
    return mmwave_rows(cfg, snr, trials, seed)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handlers = {
        "sweep": _cmd_sweep,
        "ktable": lambda a: emit_k_table(a.max_nr, a.max_nt),
        "constellation": _cmd_constellation,
        "simo-capacity": _cmd_simo,
        "mmwave": _cmd_mmwave,
    }
    try:
        text = handlers[args.command](args)
    except (ConfigError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    _write(text, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
