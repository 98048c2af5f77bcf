"""Recompute the e_F^U column of the experimental-parameters table.

Each (d, e_F) row is bounded with the one-monitoring-state SDP under the
symmetric-error assumption, and again with the measured time-basis QBER of
the mu1 intensity for comparison. With ``--simulate`` the bundled 4 dB
0.50:0.50 config is also run end to end.

    python scripts/reproduce_table1.py [--simulate] [--frames N]
"""

import argparse
import time
from pathlib import Path

from tpqkd.cli import summary_row, summary_table
from tpqkd.pipeline import ExperimentConfig, run_sweep
from tpqkd.secbound import CapabilityError, ef_bound

# (loss dB, pT:pF, d, e_T mu1, e_F, reference e_F^U or None)
ROWS = [
    (4, "0.90:0.10", 2, 0.010, 0.015, 0.015),
    (4, "0.90:0.10", 4, 0.005, 0.027, 0.130),
    (4, "0.90:0.10", 8, 0.014, 0.021, 0.171),
    (4, "0.90:0.10", 16, 0.016, 0.030, None),
    (4, "0.50:0.50", 2, 0.013, 0.058, 0.058),
    (4, "0.50:0.50", 4, 0.022, 0.042, 0.205),
    (4, "0.50:0.50", 8, 0.022, 0.041, 0.328),
    (4, "0.50:0.50", 16, 0.018, 0.035, None),
    (8, "0.50:0.50", 2, 0.017, 0.041, 0.041),
    (8, "0.50:0.50", 4, 0.013, 0.037, 0.181),
    (8, "0.50:0.50", 8, 0.010, 0.038, 0.299),
    (8, "0.50:0.50", 16, 0.018, 0.034, None),
]


def fmt(v):
    return "--------" if v is None else f"{v:.3f}"


def sdp_table():
    print(f"{'loss':>4} {'pT:pF':>9} {'d':>3} {'e_F':>6} {'reference':>9} {'symmetric':>9} {'measured e_T':>12} {'time':>6}")
    for loss, split, d, et, ef, pub in ROWS:
        t0 = time.perf_counter()
        try:
            sym = ef_bound(d, None, ef).ef_upper
            mea = ef_bound(d, et, ef).ef_upper
        except CapabilityError:
            sym = mea = None
        dt = time.perf_counter() - t0
        print(f"{loss:>4} {split:>9} {d:>3} {ef:>6.3f} {fmt(pub):>9} {fmt(sym):>9} {fmt(mea):>12} {dt:>5.2f}s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--simulate", action="store_true", help="also run configs/table1_4db.toml")
    ap.add_argument("--frames", type=int, default=None)
    args = ap.parse_args()
    sdp_table()
    if args.simulate:
        cfg = ExperimentConfig.load(Path(__file__).resolve().parents[1] / "configs" / "table1_4db.toml")
        if args.frames:
            cfg = ExperimentConfig(**{**cfg.__dict__, "frames": args.frames})
        print()
        print(summary_table([summary_row(cfg, r) for r in run_sweep(cfg)]))


if __name__ == "__main__":
    main()
