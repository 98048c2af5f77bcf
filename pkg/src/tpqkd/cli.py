"""Command-line entry point: ``tpqkd {bounds,simulate,g2scan,sweep}``.

Exit codes: 0 ok, 2 validation error, 3 infeasible problem or unsupported
dimension, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from .keyrate import RATEPOINT_COLUMNS, ratepoints_csv
from .pipeline import ConfigError, ExperimentConfig, run_point, run_sweep
from .protocol import hom_scan
from .secbound import CapabilityError, Status, ef_bound

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("tpqkd")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    overrides = {}
    if getattr(args, "dim", None) is not None:
        overrides["dim"] = args.dim
    if getattr(args, "loss_db", None) is not None:
        overrides["loss_db"] = args.loss_db
    sweep = dict(cfg.sweep)
    if overrides:
        cfg = cfg.with_params(**overrides)
        cfg.sweep = {k: v for k, v in sweep.items() if k not in overrides}
    changes = {}
    if getattr(args, "frames", None) is not None:
        changes["frames"] = args.frames
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "estimator", None) is not None:
        changes["estimator"] = args.estimator
    if getattr(args, "out", None) is not None:
        changes["output_dir"] = args.out
    if changes:
        cfg = ExperimentConfig(**{**cfg.__dict__, **changes})
    return cfg


def _fmt(v, fmt=".3f"):
    return "--------" if v is None else format(v, fmt)


def summary_table(rows: list[dict]) -> str:
    """Plain-text table whose columns follow the experimental-parameters table layout."""
    header = ["Loss(dB)", "pT:pF", "d", "mu1", "mu2", "mu3", "e_T,mu1", "e_T,mu2", "e_F", "e_F^U", "r_theory(Mbps)", "r_sdp(Mbps)"]
    body = []
    for r in rows:
        body.append(
            [
                _fmt(r["loss_db"], ".1f"),
                f"{r['p_time']:.2f}:{1 - r['p_time']:.2f}",
                str(r["dim"]),
                _fmt(r["mu1"]),
                _fmt(r["mu2"]),
                _fmt(r["mu3"]),
                _fmt(r["e_t_mu1"]),
                _fmt(r["e_t_mu2"]),
                _fmt(r["e_f"]),
                _fmt(r["ef_upper"]),
                _fmt(r["r_theory"], ".3f"),
                _fmt(r["r_sdp"], ".3f"),
            ]
        )
    widths = [max(len(c) for c in col) for col in zip(header, *body)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(line, widths)) for line in [header, *body]]
    return "\n".join(lines)


def summary_row(cfg: ExperimentConfig, res) -> dict:
    pcfg = cfg.with_params(**res.params)
    it = pcfg.transmitter.intensities
    rates = {p.curve: p for p in res.rates}
    sec = res.security
    return {
        "loss_db": pcfg.channel.loss_db,
        "p_time": pcfg.transmitter.p_time,
        "dim": pcfg.transmitter.dim,
        "mu1": it.mu1,
        "mu2": it.mu2,
        "mu3": it.mu3,
        "e_t_mu1": res.observables.e_t["mu1"],
        "e_t_mu2": res.observables.e_t["mu2"],
        "e_f": res.bounds.ef,
        "ef_upper": sec.ef_upper if sec is not None and sec.status is Status.OPTIMAL else None,
        "r_theory": rates["theory"].r_bps / 1e6,
        "r_sdp": rates["sdp"].r_bps / 1e6 if "sdp" in rates else None,
    }


# ------------------------------------------------------------------ commands


def cmd_bounds(args) -> int:
    try:
        res = ef_bound(args.d, args.et, args.ef, args.policy, tol=args.tol)
    except CapabilityError as exc:
        raise CliError(f"{exc} (no bound available, as for the d=16 entries)", EXIT_INFEASIBLE) from exc
    print(res.to_json())
    return EXIT_OK if res.status is Status.OPTIMAL else EXIT_INFEASIBLE


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    res = run_point(cfg)
    out = Path(cfg.output_dir)
    payload = {
        "yields": res.bounds.to_dict(),
        "security": res.security.to_dict() if res.security is not None else None,
        "e_t": res.e_t,
        "r_t": res.r_t,
    }
    if "csv" in cfg.formats:
        _write(out / "tallies.csv", res.tallies.to_csv())
        _write(out / "rates.csv", ratepoints_csv(res.rates))
    if "json" in cfg.formats:
        _write(out / "tallies.json", res.tallies.to_json())
        _write(out / "bounds.json", json.dumps(payload, indent=2, sort_keys=True))
        _write(out / "rates.json", json.dumps([p.to_dict() for p in res.rates], indent=2))
    print(summary_table([summary_row(cfg, res)]))
    return EXIT_OK


def cmd_g2scan(args) -> int:
    cfg = _load_config(args)
    g = cfg.g2scan
    points = hom_scan(
        g.overlaps,
        mu=g.mu,
        frames=g.frames,
        seed=cfg.seed,
        ch=cfg.channel,
        estimator=g.estimator,
        bin_width=cfg.transmitter.bin_width,
        delays=g.delays,
    )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["delay_ps", "overlap", "g2", "stderr"])
    for xi, p in zip(g.overlaps, points):
        w.writerow([repr(p.delay), repr(float(xi)), repr(p.g2), repr(p.stderr)])
    _write(Path(cfg.output_dir) / "g2scan.csv", buf.getvalue())
    best = max(range(len(points)), key=lambda k: g.overlaps[k])
    g0 = points[best]
    print(f"g2(0) = {g0.g2:.4f} +/- {g0.stderr:.4f}   visibility V = {1 - g0.g2:.4f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    results = run_sweep(cfg, workers=args.workers)
    # swept fields already present in a RatePoint (dim, loss_db, p_time) are not repeated
    names = [n for n in cfg.sweep if n not in RATEPOINT_COLUMNS]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=names + RATEPOINT_COLUMNS, lineterminator="\r\n")
    w.writeheader()
    for res in results:
        for p in res.rates:
            row = {**{n: res.params[n] for n in names}, **p.to_dict()}
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    _write(Path(cfg.output_dir) / "sweep.csv", buf.getvalue())
    print(summary_table([summary_row(cfg, r) for r in results]))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tpqkd", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="SDP upper bound on the phase error rate")
    b.add_argument("--d", type=int, required=True)
    b.add_argument("--ef", type=float, required=True, help="phase-basis QBER")
    b.add_argument("--et", type=float, default=None, help="time-basis QBER (default: symmetric, equal to --ef)")
    b.add_argument("--policy", choices=["one", "all"], default="one")
    b.add_argument("--tol", type=float, default=1e-8)
    b.set_defaults(func=cmd_bounds)

    def with_config(sp):
        sp.add_argument("config", help="TOML experiment config")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--frames", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--estimator", choices=["sampled", "expected"])
        sp.add_argument("--dim", type=int)
        sp.add_argument("--loss-db", type=float, dest="loss_db")
        return sp

    with_config(sub.add_parser("simulate", help="run one pipeline point")).set_defaults(func=cmd_simulate)
    with_config(sub.add_parser("g2scan", help="HOM g2 vs. overlap scan")).set_defaults(func=cmd_g2scan)
    sw = with_config(sub.add_parser("sweep", help="key rate over a parameter grid"))
    sw.add_argument("--workers", type=int, default=None)
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
