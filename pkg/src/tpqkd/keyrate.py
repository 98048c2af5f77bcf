"""Asymptotic secret key rate for d-dimensional time-phase QKD."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, asdict, fields

import numpy as np

ENTROPY_VARIANTS = ("printed", "standard")


def entropy_d(x: float, d: int, variant: str = "printed") -> float:
    """``H(x) = -x log2(x/k) - (1-x) log2(1-x)`` with ``k = d`` ("printed") or ``d-1`` ("standard").

    >>> entropy_d(0.5, 2)
    1.5
    >>> entropy_d(0.0, 8)
    0.0
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    if d < 2:
        raise ValueError("d must be >= 2")
    if variant not in ENTROPY_VARIANTS:
        raise ValueError(f"variant must be one of {ENTROPY_VARIANTS}")
    k = d if variant == "printed" else d - 1
    h = 0.0
    if x > 0:
        h -= x * (np.log2(x) - np.log2(k))  # x / k underflows for subnormal x
    if x < 1:
        h -= (1 - x) * np.log2(1 - x)
    return float(h)


@dataclass
class RatePoint:
    dim: int
    loss_db: float
    p_time: float
    r_per_frame: float
    r_bps: float
    e_t: float
    e_f: float
    ef_upper: float
    r_t1: float
    r_t: float
    delta_ec: float
    negative: bool = False
    curve: str = "sdp"

    def to_dict(self) -> dict:
        return asdict(self)


RATEPOINT_COLUMNS = [f.name for f in fields(RatePoint)]


def secret_key_rate(
    dim: int,
    r_t1: float,
    r_t: float,
    e_t: float,
    e_f: float,
    ef_upper: float,
    rep_rate: float,
    loss_db: float = float("nan"),
    p_time: float = float("nan"),
    curve: str = "sdp",
    variant: str = "printed",
) -> RatePoint:
    """``r = R_T1 [log2 d - H(e_F^U)] - R_T H(e_T)`` per frame, floored at zero."""
    for name, v in (("r_t1", r_t1), ("r_t", r_t), ("e_t", e_t), ("ef_upper", ef_upper)):
        if v is None or np.isnan(v):
            raise ValueError(f"missing input {name}")
    r_t1, r_t, e_t, e_f, ef_upper = (float(v) for v in (r_t1, r_t, e_t, e_f, ef_upper))
    delta_ec = r_t * entropy_d(e_t, dim, variant)
    r = r_t1 * (np.log2(dim) - entropy_d(ef_upper, dim, variant)) - delta_ec
    negative = bool(r < 0)
    r = max(float(r), 0.0)
    return RatePoint(
        dim=dim,
        loss_db=float(loss_db),
        p_time=float(p_time),
        r_per_frame=r,
        r_bps=r * float(rep_rate),
        e_t=e_t,
        e_f=e_f,
        ef_upper=ef_upper,
        r_t1=r_t1,
        r_t=r_t,
        delta_ec=delta_ec,
        negative=negative,
        curve=curve,
    )


def ratepoints_csv(points: list[RatePoint]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=RATEPOINT_COLUMNS, lineterminator="\r\n")
    w.writeheader()
    for p in points:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in p.to_dict().items()})
    return buf.getvalue()
