"""Command-line front end.

Subcommands: ``capacity``, ``optimize-delay``, ``design-code``, ``simulate``
and ``dump-constellation``. Every artifact embeds the resolved configuration,
its hash and the package version; files are written to a temporary name and
renamed into place.

Exit status: 0 on success, 2 for an invalid configuration, 1 when a run fails.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import capacity as cap
from . import delay_opt, designs, transceiver
from .channel import NoiseModel, ebn0_to_esn0_db
from .constellation import Constellation, DelayScheme, by_name
from .de_opt import DeConfig, DesignPoint, optimize_assignment, optimize_lambda
from .ldpc_construct import (
    ChannelAssignment,
    _atomic_write,
    classify_report,
    constrained_peg,
    load_code,
    standard_degrees,
    write_alist,
    write_sidecar,
)
from .pexit import CapacityProfile, pexit_threshold

log = logging.getLogger("dbicm")


class ConfigError(ValueError):
    """Raised for anything wrong with the requested configuration."""


@dataclass
class ExperimentConfig:
    """Resolved settings of one run; what every artifact records."""

    command: str
    modulation: str
    seed: int = 0
    rate: float | None = None
    scheme: list[int] | None = None
    snr_db: list[float] | None = None
    samples: int | None = None
    output: str | None = None
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def stamp(self) -> dict:
        return {"version": __version__, "config_hash": self.digest, "config": self.to_dict()}


# ---------------------------------------------------------------- parsing helpers


def parse_grid(text: str) -> list[float]:
    """``"0:2:12"`` (start:step:stop, inclusive) or ``"0,4,8"``."""
    try:
        if ":" in text:
            a, step, b = (float(t) for t in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError("need step > 0 and stop >= start")
            n = int(np.floor((b - a) / step + 1e-9)) + 1
            return [round(a + k * step, 10) for k in range(n)]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"malformed grid {text!r}: {exc}") from None


def parse_window(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(t) for t in text.split(","))
    except ValueError:
        raise ConfigError(f"malformed window {text!r}; expected LO,HI") from None
    if hi <= lo:
        raise ConfigError("window upper edge must exceed the lower edge")
    return lo, hi


def _modulation(name: str) -> Constellation:
    try:
        return by_name(name)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _scheme(text: str | None, m: int) -> DelayScheme:
    if text is None:
        return DelayScheme.zeros(m)
    try:
        s = DelayScheme.parse(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if s.m != m:
        raise ConfigError(f"scheme {s} has {s.m} positions, modulation carries {m} bits")
    return s


def _rate(x: float) -> float:
    if not 0.0 < x < 1.0:
        raise ConfigError(f"rate {x} must lie in (0, 1)")
    return float(x)


def _positive(name: str, x):
    if x is not None and x <= 0:
        raise ConfigError(f"{name} must be positive")
    return x


# ---------------------------------------------------------------- writers


def csv_text(cfg: ExperimentConfig, header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# dbicm {__version__} config_hash={cfg.digest}\n")
    buf.write("# config=" + json.dumps(cfg.to_dict(), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.10g}" if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def json_text(cfg: ExperimentConfig, payload: dict) -> str:
    return json.dumps(dict(cfg.stamp(), **payload), indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, DelayScheme):
        return list(x.delays)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _emit(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        _atomic_write(path, text)


# ---------------------------------------------------------------- subcommands


def cmd_capacity(args) -> int:
    c = _modulation(args.modulation)
    scheme = _scheme(args.scheme, c.m)
    grid = parse_grid(args.snr)
    _positive("samples", args.samples)
    cfg = ExperimentConfig("capacity", c.name, args.seed, scheme=list(scheme.delays), snr_db=grid,
                           samples=args.samples, output=args.out, params={"reference": args.reference})
    rep = cap.capacity_report(c, scheme, grid, args.samples, args.seed)
    rows = [(s, b, v, e) for s, b, v, e in rep.rows()]
    if args.reference:
        for s in grid:
            nm = NoiseModel.from_esn0_db(s)
            for label, est in (("bicm", cap.bicm_capacity(c, nm, args.samples, args.seed)),
                               ("cm", cap.cm_capacity(c, nm, args.samples, args.seed))):
                rows.append((float(s), label, float(est.value), float(est.stderr)))
    _emit(args.out, csv_text(cfg, ["esn0_db", "bit", "capacity", "stderr"], rows))
    return 0


def cmd_optimize_delay(args) -> int:
    c = _modulation(args.modulation)
    rate = _rate(args.rate)
    window = parse_window(args.window)
    _positive("samples", args.samples)
    if args.t_max < 1:
        raise ConfigError("t-max must be at least 1")
    if args.estimator not in ("mc", "quadrature"):
        raise ConfigError(f"unknown estimator {args.estimator!r}")
    cfg = ExperimentConfig("optimize-delay", c.name, args.seed, rate=rate, samples=args.samples,
                           output=args.out,
                           params={"t_max": args.t_max, "window": list(window), "estimator": args.estimator})
    if args.exhaustive or c.kind != "QAM":
        res = delay_opt.exhaustive_search(c, rate, args.t_max, window, args.samples, args.seed)
    else:
        res = delay_opt.optimize_delay(c, rate, args.t_max, window, args.samples, args.seed, args.estimator)
    _emit(args.out, json_text(cfg, {"result": res.to_dict()}))
    return 0


def _design_profile(c, scheme, rate, window, samples, seed, step=0.25) -> tuple[CapacityProfile, object]:
    lo = float(ebn0_to_esn0_db(window[0], rate, c.m))
    hi = float(ebn0_to_esn0_db(window[1], rate, c.m))
    grid = np.arange(np.floor(lo / step) * step, hi + step, step)
    rep = cap.capacity_report(c, scheme, grid, samples, seed)
    return CapacityProfile.from_report(rep), rep


def cmd_design_code(args) -> int:
    c = _modulation(args.modulation)
    rate = _rate(args.rate)
    scheme = _scheme(args.scheme, c.m)
    window = parse_window(args.window)
    for name in ("n", "n_proto", "samples"):
        _positive(name.replace("_", "-"), getattr(args, name))
    if args.n % c.m or args.n_proto % c.m:
        raise ConfigError(f"code lengths must be multiples of {c.m}")
    d_c = args.check_degree or designs.CHECK_DEGREE.get(rate)
    if d_c is None:
        raise ConfigError(f"no default check degree for rate {rate}; pass --check-degree")
    if args.published:
        try:
            pub = designs.lookup(c.name, rate, scheme.t_max > 0)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        if pub.scheme != scheme:
            raise ConfigError(f"the reference design uses scheme {pub.scheme}")
        d_c = pub.check_degree
    try:
        de_lam = DeConfig(args.population, args.generations_lambda, args.F, args.CR, args.seed)
        de_p = DeConfig(args.population, args.generations_assign, args.F, args.CR, args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    os.makedirs(args.out_dir, exist_ok=True)
    cfg = ExperimentConfig(
        "design-code", c.name, args.seed, rate=rate, scheme=list(scheme.delays), samples=args.samples,
        output=args.out_dir,
        params={"N": args.n, "n_proto": args.n_proto, "check_degree": d_c, "V": args.V,
                "window": list(window), "F": args.F, "CR": args.CR, "population": args.population,
                "generations_lambda": args.generations_lambda,
                "generations_assign": args.generations_assign, "published": args.published},
    )
    profile, rep = _design_profile(c, scheme, rate, window, args.samples, args.seed)
    point = DesignPoint(profile, rate, window, args.n_proto)
    history = {}
    if args.published:
        a = pub.assignment()
        types = pub.types
    else:
        mid = float(ebn0_to_esn0_db(0.5 * (window[0] + window[1]), rate, c.m))
        g = int(np.argmin(np.abs(rep.snr_db - mid)))
        types = classify_report(rep, float(rep.snr_db[g]))
        log.info("bit-channel types %s", types.type_map)
        s1 = optimize_lambda(de_lam, point, d_c, args.V)
        s2 = optimize_assignment(de_p, s1.best, types, point, d_c)
        a = ChannelAssignment(s2.best, types, standard_degrees(args.V), d_c)
        history = {"lambda": s1.history, "assignment": s2.history}
    proto = constrained_peg(a, args.n_proto, rate, args.seed)
    thr_proto = pexit_threshold(proto, profile, window, rate=rate).threshold_db
    code = constrained_peg(a, args.n, rate, args.seed)
    thr = pexit_threshold(code, profile, window, rate=rate).threshold_db
    out = args.out_dir
    write_alist(code, os.path.join(out, "code.alist"))
    write_sidecar(code, os.path.join(out, "code.json"), a,
                  extra={"modulation": c.name, "scheme": list(scheme.delays), "rate": rate})
    rows = [(f"type{i}", *map(float, a.P[i])) for i in range(a.P.shape[0])]
    rows.append(("lambda", *map(float, a.lam)))
    _emit(os.path.join(out, "assignment.csv"),
          csv_text(cfg, ["row"] + [f"deg{d}" for d in a.degrees], rows))
    summary = {
        "lambda": a.lam, "P": a.P, "type_map": list(types.type_map),
        "threshold_db_proto": thr_proto, "threshold_db": thr, "history": history,
    }
    _emit(os.path.join(out, "design.json"), json_text(cfg, summary))
    print(f"threshold {thr:.4f} dB (N={args.n}), {thr_proto:.4f} dB (N={args.n_proto})")
    return 0


def cmd_simulate(args) -> int:
    if not os.path.exists(args.code):
        raise ConfigError(f"no such code file {args.code}")
    meta = {}
    if args.assign:
        if not os.path.exists(args.assign):
            raise ConfigError(f"no such sidecar {args.assign}")
        with open(args.assign) as fh:
            meta = json.load(fh)
    c = _modulation(args.modulation or meta.get("modulation", "16qam"))
    scheme_text = args.scheme
    if scheme_text is None and meta.get("scheme") is not None:
        scheme_text = ",".join(map(str, meta["scheme"]))
    scheme = _scheme(scheme_text, c.m)
    grid = parse_grid(args.ebn0)
    for name in ("frames", "slots", "max_iter"):
        _positive(name.replace("_", "-"), getattr(args, name))
    code = load_code(args.code, args.assign)
    if code.n % c.m:
        raise ConfigError(f"code length {code.n} is not a multiple of {c.m}")
    cfg = ExperimentConfig(
        "simulate", c.name, args.seed, scheme=list(scheme.delays), snr_db=grid, output=args.out,
        params={"code": os.path.basename(args.code), "n": code.n, "frames": args.frames,
                "slots": args.slots, "min_bit_errors": args.min_errors, "max_frames": args.max_frames,
                "max_iter": args.max_iter},
    )
    pipe = transceiver.FramePipeline(code, c, scheme, args.slots, args.max_iter)

    def progress(p):
        log.info("Eb/N0 %.2f dB: %d frames, %d bit errors", p.ebn0_db, p.frames, p.tally.bit_errors)

    res = transceiver.simulate(pipe, grid, args.frames, args.seed, args.min_errors, args.max_frames,
                               args.checkpoint, meta={"config_hash": cfg.digest}, progress=progress)
    header = ["ebn0_db", "ber", "fer", "frames", "bit_errors", "codeword_errors", "info_bits", "codewords"]
    rows = [[r.row()[k] for k in header] for r in res]
    _emit(args.out, csv_text(cfg, header, rows))
    return 0


def cmd_dump_constellation(args) -> int:
    c = _modulation(args.modulation)
    cfg = ExperimentConfig("dump-constellation", c.name, 0, output=args.out)
    rows = [(k, c.label(k), float(p.real), float(p.imag)) for k, p in enumerate(c.points)]
    _emit(args.out, csv_text(cfg, ["index", "label", "re", "im"], rows))
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dbicm", description="Delayed BICM capacity, code design and simulation.")
    p.add_argument("--version", action="version", version=f"dbicm {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--config", help="JSON file whose keys provide defaults for the subcommand flags")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("capacity", help="per-bit capacities of a delay scheme over an Es/N0 grid")
    s.add_argument("--modulation", default="16qam")
    s.add_argument("--scheme", help="delays such as 0,1,0,1 (default: all zero)")
    s.add_argument("--snr", default="0:2:12", help="Es/N0 grid in dB")
    s.add_argument("--samples", type=int, default=cap.DEFAULT_SAMPLES)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--reference", action="store_true", help="append BICM and CM totals")
    s.add_argument("--out")
    s.set_defaults(func=cmd_capacity)

    s = sub.add_parser("optimize-delay", help="search the delay scheme needing the least Es/N0 for a rate")
    s.add_argument("--modulation", default="16qam")
    s.add_argument("--rate", type=float, required=True)
    s.add_argument("--t-max", type=int, default=1)
    s.add_argument("--window", default="-10,30", help="Es/N0 search window LO,HI in dB")
    s.add_argument("--samples", type=int, default=delay_opt.SEARCH_SAMPLES)
    s.add_argument("--estimator", default="mc", help="mc or quadrature")
    s.add_argument("--exhaustive", action="store_true", help="search full-length schemes directly")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_optimize_delay)

    s = sub.add_parser("design-code", help="optimise and build an LDPC code for a scheme")
    s.add_argument("--modulation", default="16qam")
    s.add_argument("--rate", type=float, required=True)
    s.add_argument("--scheme")
    s.add_argument("--check-degree", type=int)
    s.add_argument("--V", type=int, default=10, help="largest VN degree")
    s.add_argument("--n", type=int, default=12000, help="final code length")
    s.add_argument("--n-proto", type=int, default=1200, help="length used while optimising")
    s.add_argument("--window", default="-1,8", help="Eb/N0 threshold window LO,HI in dB")
    s.add_argument("--samples", type=int, default=50_000, help="Monte-Carlo samples per capacity point")
    s.add_argument("--population", type=int)
    s.add_argument("--generations-lambda", type=int, default=10)
    s.add_argument("--generations-assign", type=int, default=10)
    s.add_argument("--F", type=float, default=0.5)
    s.add_argument("--CR", type=float, default=0.5)
    s.add_argument("--published", action="store_true", help="skip the search and build the reference design")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_design_code)

    s = sub.add_parser("simulate", help="BER/FER sweep of a code over the delayed pipeline")
    s.add_argument("--code", required=True, help="alist file")
    s.add_argument("--assign", help="JSON sidecar written by design-code")
    s.add_argument("--modulation")
    s.add_argument("--scheme")
    s.add_argument("--ebn0", default="0.5:0.1:2.0")
    s.add_argument("--frames", type=int, default=200)
    s.add_argument("--slots", type=int, default=10, help="codewords per frame")
    s.add_argument("--min-errors", type=int, default=0)
    s.add_argument("--max-frames", type=int)
    s.add_argument("--max-iter", type=int, default=transceiver.MAX_ITER)
    s.add_argument("--checkpoint", help="resumable tally file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("dump-constellation", help="points and labels of a modulation")
    s.add_argument("--modulation", default="16qam")
    s.add_argument("--out")
    s.set_defaults(func=cmd_dump_constellation)
    return p


def _apply_config_file(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            conf = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(conf, dict):
        raise ConfigError("config file must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = set(k.replace("-", "_") for k in conf) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    sub.set_defaults(**{k.replace("-", "_"): v for k, v in conf.items()})
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
    except ConfigError as exc:
        print(f"dbicm: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"dbicm: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report any failure as a runtime error
        log.debug("run failed", exc_info=True)
        print(f"dbicm: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
