"""Key rate versus dimension for the two 4 dB profiles.

Writes one sweep CSV per profile to ``out/`` and prints the theoretical
(e_F^U = e_F) and SDP-bounded curves side by side, plus the d=8 / d=2 ratio
of the SDP curve.

    python scripts/rate_vs_dimension.py [--frames N] [--workers K]
"""

import argparse
import csv
from pathlib import Path

from tpqkd.keyrate import RATEPOINT_COLUMNS
from tpqkd.pipeline import ExperimentConfig, run_sweep

ROOT = Path(__file__).resolve().parents[1]
PROFILES = ["profile_4db_5050_noisy", "profile_4db_9010_lowloss"]


def run(name, frames, workers, out_dir):
    cfg = ExperimentConfig.load(ROOT / "configs" / f"{name}.toml")
    if frames:
        cfg = ExperimentConfig(**{**cfg.__dict__, "frames": frames})
    results = run_sweep(cfg, workers=workers)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / f"{name}.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RATEPOINT_COLUMNS, lineterminator="\r\n")
        w.writeheader()
        for res in results:
            for p in res.rates:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in p.to_dict().items()})
    rates = {(p.curve, p.dim): p.r_bps / 1e6 for res in results for p in res.rates}
    print(f"\n{name}  ({cfg.frames:.0e} frames, {cfg.estimator})")
    print(f"{'d':>4} {'theory Mbps':>12} {'SDP Mbps':>10}")
    for d in cfg.sweep["dim"]:
        sdp = rates.get(("sdp", d))
        print(f"{d:>4} {rates[('theory', d)]:>12.3f} {'--------' if sdp is None else f'{sdp:.3f}':>10}")
    if ("sdp", 8) in rates and rates[("sdp", 2)] > 0:
        print(f"SDP r(8)/r(2) = {rates[('sdp', 8)] / rates[('sdp', 2)]:.3f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=None, help="override the 10^7 default for a quick look")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=str(ROOT / "out"))
    args = ap.parse_args()
    for name in PROFILES:
        run(name, args.frames, args.workers, Path(args.out))


if __name__ == "__main__":
    main()
