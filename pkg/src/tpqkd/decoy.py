"""Decoy-state estimators: single-photon yields, gains and the phase-basis QBER.

All rates are per-frame conditional probabilities for a given intensity
label. Measured rates are unwrapped with ``exp(+mu)``; Poisson weights in the
single-photon gain use ``mu exp(-mu)``. The lowest intensity label serves as
the vacuum column of the coincidence table; it is an exact vacuum only when
its mean photon number is 0.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, asdict
from itertools import product

import numpy as np

from .protocol import TallyCounts
from .source import LABELS, DecoyIntensities

VACUUM = "mu3"
SIGNAL_LABELS = ("mu1", "mu2")
DENOMINATOR_FLOOR = 1e-6


class EstimatorUndefined(ValueError):
    pass


@dataclass
class DecoyObservables:
    intensities: DecoyIntensities
    r_t: dict[str, float]
    coinc: dict[tuple[str, str], float]
    r_fa: dict[str, float]
    r_fb: dict[str, float]
    y00: float
    e_t: dict[str, float] = field(default_factory=dict)
    vacuum_proxy: bool = False

    def __post_init__(self):
        vals = [*self.r_t.values(), *self.coinc.values(), *self.r_fa.values(), *self.r_fb.values(), self.y00]
        if any(not 0 <= v <= 1 for v in vals):
            raise ValueError("observables must be probabilities in [0, 1]")

    def mu(self, label: str) -> float:
        return 0.0 if label == VACUUM and not self.vacuum_proxy else self.intensities[label]

    @classmethod
    def from_tallies(cls, t: TallyCounts, intensities: DecoyIntensities) -> "DecoyObservables":
        def ratio(a, b):
            return a / b if b > 0 else 0.0

        r_t = {la: ratio(t.time(la).clicked, t.time(la).sent) for la in LABELS}
        e_t = {la: ratio(t.time(la).errors, t.time(la).clicked) for la in LABELS}
        coinc = {(la, lb): ratio(t.phase(la, lb).coincidences, t.phase(la, lb).sent) for la, lb in product(LABELS, LABELS)}
        r_fa = {la: ratio(t.phase(la, VACUUM).clicked, t.phase(la, VACUUM).sent) for la in LABELS}
        r_fb = {lb: ratio(t.phase(VACUUM, lb).clicked, t.phase(VACUUM, lb).sent) for lb in LABELS}
        return cls(
            intensities=intensities,
            r_t=r_t,
            coinc=coinc,
            r_fa=r_fa,
            r_fb=r_fb,
            y00=coinc[(VACUUM, VACUUM)],
            e_t=e_t,
            vacuum_proxy=intensities.mu3 > 0,
        )


@dataclass
class YieldBounds:
    y11_upper: float
    y_t0: float
    y_t1_lower: float
    y_fa1_lower: float
    y_fb1_lower: float
    ef: float
    r_t1: float
    ef_valid: bool = True
    clamped: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _clamp(value: float, name: str, log: list[str] | None = None) -> float:
    value = float(value)
    if 0.0 <= value <= 1.0:
        return value
    clipped = min(max(value, 0.0), 1.0)
    # slightly negative values from subtracting nearly equal rates are routine
    if value > 1.0 or value < -1e-12:
        msg = f"{name}={value:.6g} clamped to {clipped}"
        if log is not None:
            log.append(msg)
        if value > 1.0:
            warnings.warn(msg, RuntimeWarning, stacklevel=3)
    return clipped


def y11_upper_value(c_ij, c_i0, c_0j, y00, mu_i, mu_j) -> float:
    if mu_i <= 0 or mu_j <= 0:
        raise ValueError("intensities must be positive")
    num = c_ij * np.exp(mu_i + mu_j) - (c_i0 * np.exp(mu_i) + c_0j * np.exp(mu_j)) + y00
    return float(num / (mu_i * mu_j))


def y11_upper(obs: DecoyObservables, label_i: str, label_j: str, log=None) -> float:
    """Upper bound on the coincidence yield when both sides emit exactly one photon."""
    v = y11_upper_value(
        obs.coinc[(label_i, label_j)],
        obs.coinc[(label_i, VACUUM)],
        obs.coinc[(VACUUM, label_j)],
        obs.y00,
        obs.mu(label_i),
        obs.mu(label_j),
    )
    return _clamp(v, f"Y11[{label_i},{label_j}]", log)


def y11_upper_min(obs: DecoyObservables, log=None) -> float:
    """Tightest bound over the signal/decoy label pairs."""
    return min(y11_upper(obs, a, b, log) for a, b in product(SIGNAL_LABELS, SIGNAL_LABELS))


def zero_photon_yield(r2, r3, mu2, mu3) -> float:
    if mu2 == mu3:
        raise ValueError("mu2 and mu3 must differ")
    if mu2 < mu3:
        raise ValueError("need mu2 > mu3")
    return float(max(0.0, (mu2 * r3 * np.exp(mu3) - mu3 * r2 * np.exp(mu2)) / (mu2 - mu3)))


def one_photon_yield_lower(r1, r2, r3, mu1, mu2, mu3, y0) -> float:
    """Three-intensity lower bound on the single-photon yield (valid for mu1 > mu2 + mu3)."""
    if not mu1 > mu2 + mu3:
        raise ValueError(f"need mu1 > mu2 + mu3, got {mu1}, {mu2}, {mu3}")
    pre = mu1 / (mu1 * mu2 - mu1 * mu3 - mu2**2 + mu3**2)
    tail = (mu2**2 - mu3**2) / mu1**2 * (r1 * np.exp(mu1) - y0)
    return float(pre * (r2 * np.exp(mu2) - r3 * np.exp(mu3) - tail))


def _mus(obs: DecoyObservables):
    return obs.mu("mu1"), obs.mu("mu2"), obs.mu("mu3")


def y_t0(obs: DecoyObservables) -> float:
    mu1, mu2, mu3 = _mus(obs)
    return zero_photon_yield(obs.r_t["mu2"], obs.r_t["mu3"], mu2, mu3)


def y_t1_lower(obs: DecoyObservables, log=None) -> float:
    mu1, mu2, mu3 = _mus(obs)
    y0 = y_t0(obs)
    v = one_photon_yield_lower(obs.r_t["mu1"], obs.r_t["mu2"], obs.r_t["mu3"], mu1, mu2, mu3, y0)
    return _clamp(v, "Y_T1", log)


def y_f1_lower(obs: DecoyObservables, side: str, log=None) -> float:
    """Single-arm single-photon yield of Alice's ("A") or Bob's ("B") f0 source.

    Uses the click-in-either-detector rate with the opposite input at vacuum.
    """
    if side not in ("A", "B"):
        raise ValueError("side must be 'A' or 'B'")
    r = obs.r_fa if side == "A" else obs.r_fb
    mu1, mu2, mu3 = _mus(obs)
    y0 = zero_photon_yield(r["mu2"], r["mu3"], mu2, mu3)
    v = one_photon_yield_lower(r["mu1"], r["mu2"], r["mu3"], mu1, mu2, mu3, y0)
    return _clamp(v, f"Y_F{side}1", log)


def single_photon_gain(y_t1: float, intensities: DecoyIntensities, p_time: float = 1.0) -> float:
    """Joint probability that a frame is a time-basis single-photon emission that clicks."""
    mu, p = intensities.values, intensities.probabilities
    return float(p_time * np.sum(p * mu * np.exp(-mu)) * y_t1)


def phase_qber(y11u: float, y_fa1: float, y_fb1: float, log=None) -> tuple[float, bool]:
    """``e_F <= Y11^U / (Y_FA1^L Y_FB1^L)``; returns (value, valid)."""
    denom = y_fa1 * y_fb1
    if denom <= 0:
        raise EstimatorUndefined("single-arm yields vanish; phase QBER undefined")
    return _clamp(y11u / denom, "e_F", log), bool(denom >= DENOMINATOR_FLOOR)


def estimate(obs: DecoyObservables, p_time: float = 1.0) -> YieldBounds:
    log: list[str] = []
    y11 = y11_upper_min(obs, log)
    yt0 = y_t0(obs)
    yt1 = y_t1_lower(obs, log)
    yfa = y_f1_lower(obs, "A", log)
    yfb = y_f1_lower(obs, "B", log)
    ef, valid = phase_qber(y11, yfa, yfb, log)
    return YieldBounds(
        y11_upper=y11,
        y_t0=yt0,
        y_t1_lower=yt1,
        y_fa1_lower=yfa,
        y_fb1_lower=yfb,
        ef=ef,
        r_t1=single_photon_gain(yt1, obs.intensities, p_time),
        ef_valid=valid,
        clamped=log,
    )
