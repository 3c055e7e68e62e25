"""Command-line entry point.

Exit codes: 0 on success, 1 for bad configuration, 2 for failures while
running (numerical trouble, decode failures in a round trip).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import yaml

from . import experiments as ex
from .core import ShapingError
from .metrics import report_csv

log = logging.getLogger("pashaping")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class ConfigError(Exception):
    pass


def parse_grid(text: str) -> tuple[float, ...]:
    """``"8,10,12"`` or an inclusive range ``"8:20:2"``."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(round((hi - lo) / step)) + 1
            return tuple(round(lo + i * step, 10) for i in range(n))
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"cannot parse grid {text!r}") from None


def _grid_arg(text):
    try:
        return parse_grid(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e))


def _add_common(p, *, channel: str | None = None):
    p.add_argument("--config", type=Path, help="YAML file with experiment fields; flags override it")
    p.add_argument("--scheme", choices=ex.SCHEMES)
    p.add_argument("--m", type=int)
    p.add_argument("--blocklength", type=int)
    p.add_argument("--shaping-rate", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--symbols", type=int, help="2D symbols per sweep point")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", type=Path, help="CSV destination (default stdout)")
    if channel == "awgn":
        p.add_argument("--snr-grid", type=_grid_arg)
    if channel == "fiber":
        p.add_argument("--power-grid", type=_grid_arg)
        p.add_argument("--spans", type=int)
        p.add_argument("--step-km", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pashaping", description="Amplitude shaping experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate-loss-sweep", help="ESS and CCDM rate loss against blocklength")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--shaping-rate", type=float, default=1.85)
    p.add_argument("--blocklength", type=_grid_arg, default=parse_grid("100:1600:100"))
    p.add_argument("--out", type=Path)

    p = sub.add_parser("trellis-demo", help="print the path counts of a small trellis")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--blocklength", type=int, default=4)
    p.add_argument("--emax", type=int, default=60)

    p = sub.add_parser("awgn-sweep", help="AIR and effective SNR over an SNR grid")
    _add_common(p, channel="awgn")

    p = sub.add_parser("fiber-sweep", help="AIR and effective SNR over launch powers")
    _add_common(p, channel="fiber")

    p = sub.add_parser("roundtrip", help="shape/deshape random words")
    p.add_argument("--scheme", choices=("ess", "ccdm"), default="ess")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--blocklength", type=int, default=200)
    p.add_argument("--shaping-rate", type=float, default=1.85)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--corrupt", action="store_true", help="perturb one amplitude per block")
    return ap


_FLAG_FIELDS = {
    "scheme": "scheme",
    "m": "m",
    "blocklength": "blocklength",
    "shaping_rate": "shaping_rate",
    "gamma": "gamma",
    "seed": "seed",
    "symbols": "symbols",
    "workers": "workers",
    "snr_grid": "snr_grid",
    "power_grid": "power_grid",
    "spans": "spans",
    "step_km": "step_km",
}


def load_config(args, channel: str) -> ex.ExperimentConfig:
    fields = {}
    if args.config is not None:
        try:
            data = yaml.safe_load(args.config.read_text()) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"cannot read {args.config}: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        known = {f.name for f in dataclasses.fields(ex.ExperimentConfig)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        fields.update(data)
    for attr, name in _FLAG_FIELDS.items():
        v = getattr(args, attr, None)
        if v is not None:
            fields[name] = v
    fields["channel"] = channel
    for g in ("snr_grid", "power_grid"):
        if isinstance(fields.get(g), str):
            fields[g] = parse_grid(fields[g])
    try:
        return ex.ExperimentConfig(**fields)
    except (TypeError, ShapingError, ValueError) as e:
        raise ConfigError(str(e)) from None


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def _run(args) -> int:
    cmd = args.command
    if cmd == "trellis-demo":
        m = args.m
        try:
            print(ex.trellis_table(m, args.blocklength, args.emax))
        except ShapingError as e:
            raise ConfigError(str(e)) from None
        return EXIT_OK
    if cmd == "rate-loss-sweep":
        try:
            rows = ex.rate_loss_sweep(args.m, args.shaping_rate, [int(n) for n in args.blocklength])
        except ShapingError as e:
            raise ConfigError(str(e)) from None
        _emit(report_csv(rows), args.out)
        return EXIT_OK
    if cmd in ("awgn-sweep", "fiber-sweep"):
        cfg = load_config(args, "awgn" if cmd == "awgn-sweep" else "fiber")
        log.info("config %s: %s", cfg.digest(), cfg)
        try:
            ex.make_shaper(cfg.scheme, cfg.m, cfg.blocklength, cfg.shaping_rate)
        except ShapingError as e:
            raise ConfigError(str(e)) from None
        _emit(report_csv(ex.run_sweep(cfg)), args.out)
        return EXIT_OK
    if cmd == "roundtrip":
        try:
            ex.make_shaper(args.scheme, args.m, args.blocklength, args.shaping_rate)
        except ShapingError as e:
            raise ConfigError(str(e)) from None
        s = ex.roundtrip(args.scheme, args.m, args.blocklength, args.trials, args.seed, args.shaping_rate, args.corrupt)
        print(
            f"{s.scheme} N={s.N} k={s.k}: {s.passed}/{s.trials} passed, "
            f"{s.wrong_payload} wrong payload, {s.decode_failures} decode failures"
        )
        if args.corrupt:
            return EXIT_OK
        return EXIT_OK if s.ok else EXIT_RUNTIME
    raise ConfigError(f"unknown command {cmd}")  # pragma: no cover


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _run(args)
    except ConfigError as e:
        log.error("configuration error: %s", e)
        return EXIT_CONFIG
    except Exception as e:  # anything past validation is a runtime failure
        log.error("%s: %s", type(e).__name__, e)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
