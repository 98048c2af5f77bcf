"""Monte Carlo execution of the time-phase protocol with a quantum-controlled phase measurement.

Bob's receiver splits the incoming light passively: a fraction goes to the
time-basis detector, the rest interferes with his local f0 wavepacket on a
50/50 beamsplitter watched by detectors D0 and D1. Coherent states split
into independent coherent states, so every frame reaches all three detectors;
tallies keep only the sifted combinations.

Two estimators share the same physics:

``sampled``
    click events are drawn and passed through a non-paralyzable dead-time
    filter; tallies are integer counts.
``expected``
    per-frame click probabilities given the sampled bases, intensities and
    phases are accumulated (conditional Monte Carlo); dead time enters as a
    mean-field live fraction per chunk. Tallies are expected counts.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, asdict, fields

import numpy as np

from .hilbert import Basis
from .optics import CoherentWavepacket, G2Point, click_means_arrays, g2_estimate
from .source import LABELS, Emission, TransmitterConfig, draw_emissions, draw_lo, make_rng

ESTIMATORS = ("sampled", "expected")
TALLY_FIELDS = ("sent", "clicked", "errors", "coincidences", "singles_d0", "singles_d1")


@dataclass(frozen=True)
class ChannelModel:
    loss_db: float = 4.0
    phase_noise_sigma: float = 0.0
    detector_efficiency: float = 0.8
    dark_rate: float = 100.0
    dead_time: float = 30e-9
    saturation_knee: float = 1.5e6
    saturation_slope: float = 1.2e-8
    saturation_floor: float = 0.2
    crosstalk_db: float = 20.0
    bob_time_fraction: float = 0.5
    lo_transmittance: float | None = None
    hom_overlap: float = 1.0

    def __post_init__(self):
        if not 0 <= self.detector_efficiency <= 1:
            raise ValueError("detector_efficiency must lie in [0, 1]")
        if self.loss_db < 0:
            raise ValueError("loss_db must be >= 0")
        for name in ("dark_rate", "dead_time", "saturation_knee", "saturation_slope", "phase_noise_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0 <= self.bob_time_fraction <= 1:
            raise ValueError("bob_time_fraction must lie in [0, 1]")
        if not 0 <= self.hom_overlap <= 1:
            raise ValueError("hom_overlap must lie in [0, 1]")

    @property
    def transmittance(self) -> float:
        return 10 ** (-self.loss_db / 10)

    @property
    def crosstalk(self) -> float:
        return 0.0 if np.isinf(self.crosstalk_db) else 10 ** (-self.crosstalk_db / 10)

    @property
    def lo_gain(self) -> float:
        """Transmittance applied to Bob's f0 source; defaults to matching Alice's phase arm."""
        if self.lo_transmittance is not None:
            return self.lo_transmittance
        return self.transmittance * (1 - self.bob_time_fraction)

    def rolloff(self, rate: float) -> float:
        """Efficiency multiplier: 1 up to the knee, then linear decay to the floor."""
        if rate <= self.saturation_knee:
            return 1.0
        return max(self.saturation_floor, 1.0 - self.saturation_slope * (rate - self.saturation_knee))


@dataclass
class DetectorState:
    """Time (in bins) of the last registered click."""

    last_click: float = -np.inf


# ---------------------------------------------------------------- tallies


@dataclass
class Cell:
    sent: float = 0
    clicked: float = 0
    errors: float = 0
    coincidences: float = 0
    singles_d0: float = 0
    singles_d1: float = 0


def _cell_keys():
    keys = [("time", la, "-") for la in LABELS]
    keys += [("phase", la, lb) for la in LABELS for lb in LABELS]
    return keys


CELL_KEYS = _cell_keys()
_CELL_INDEX = {k: i for i, k in enumerate(CELL_KEYS)}


@dataclass
class TallyCounts:
    cells: dict[tuple[str, str, str], Cell] = field(default_factory=lambda: {k: Cell() for k in CELL_KEYS})
    frames: int = 0
    estimator: str = "sampled"
    seed: int | None = None

    def __getitem__(self, key) -> Cell:
        return self.cells[key]

    def time(self, label: str) -> Cell:
        return self.cells[("time", label, "-")]

    def phase(self, la: str, lb: str) -> Cell:
        return self.cells[("phase", la, lb)]

    def add_arrays(self, arr: np.ndarray) -> None:
        """Add a (n_cells, 6) array ordered as CELL_KEYS x TALLY_FIELDS."""
        for k, row in zip(CELL_KEYS, arr):
            c = self.cells[k]
            for name, v in zip(TALLY_FIELDS, row):
                setattr(c, name, getattr(c, name) + v)

    def merge(self, other: "TallyCounts") -> "TallyCounts":
        out = TallyCounts(frames=self.frames + other.frames, estimator=self.estimator, seed=self.seed)
        for k in CELL_KEYS:
            a, b = self.cells[k], other.cells[k]
            out.cells[k] = Cell(**{n: getattr(a, n) + getattr(b, n) for n in TALLY_FIELDS})
        return out

    def check(self, tol: float = 1e-9) -> None:
        for k, c in self.cells.items():
            if c.clicked > c.sent + tol or c.errors > c.clicked + tol:
                raise AssertionError(f"counter invariant violated in cell {k}: {c}")
            if c.coincidences > min(c.singles_d0, c.singles_d1) + tol:
                raise AssertionError(f"coincidence invariant violated in cell {k}: {c}")

    def _value(self, v):
        return int(round(v)) if self.estimator == "sampled" else float(v)

    def rows(self) -> list[dict]:
        out = []
        for (basis, la, lb), c in self.cells.items():
            row = {"basis": basis, "mu_a": la, "mu_b": lb}
            row.update({n: self._value(getattr(c, n)) for n in TALLY_FIELDS})
            out.append(row)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["basis", "mu_a", "mu_b", *TALLY_FIELDS], lineterminator="\r\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"frames": self.frames, "estimator": self.estimator, "seed": self.seed, "cells": self.rows()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "TallyCounts":
        t = cls(frames=int(data["frames"]), estimator=data.get("estimator", "sampled"), seed=data.get("seed"))
        for row in data["cells"]:
            t.cells[(row["basis"], row["mu_a"], row["mu_b"])] = Cell(**{n: float(row[n]) for n in TALLY_FIELDS})
        return t

    @classmethod
    def from_csv(cls, text: str, frames: int | None = None, estimator: str = "sampled") -> "TallyCounts":
        rows = list(csv.DictReader(io.StringIO(text)))
        t = cls(estimator=estimator)
        for row in rows:
            t.cells[(row["basis"], row["mu_a"], row["mu_b"])] = Cell(**{n: float(row[n]) for n in TALLY_FIELDS})
        t.frames = frames if frames is not None else int(sum(c.sent for c in t.cells.values()))
        return t


# ---------------------------------------------------------------- physics


def crosstalk_mix(n: np.ndarray, eps: float) -> np.ndarray:
    """Each bin leaks a fraction ``eps`` of its light into each neighbouring bin of the frame.

    Stands in for timing jitter and finite modulator extinction together.
    """
    if eps == 0:
        return n
    out = n.copy()
    out[..., 1:] += eps * n[..., :-1]
    out[..., :-1] += eps * n[..., 1:]
    out[..., 1:-1] -= 2 * eps * n[..., 1:-1]
    out[..., 0] -= eps * n[..., 0]
    out[..., -1] -= eps * n[..., -1]
    return out


def candidate_probabilities(n: np.ndarray, efficiency: float, dark_prob: float) -> np.ndarray:
    """Per-bin click probability of a live threshold detector."""
    return 1.0 - np.exp(-efficiency * n) * (1.0 - dark_prob)


def dead_time_filter(times: np.ndarray, dead_bins: float, state: DetectorState) -> np.ndarray:
    """Non-paralyzable dead time over time-ordered candidate clicks (units of bins)."""
    keep = np.zeros(times.size, dtype=bool)
    last = state.last_click
    for k, t in enumerate(times.tolist()):
        if t - last >= dead_bins:
            keep[k] = True
            last = t
    state.last_click = last
    return keep


def transmit_through_channel(e: Emission, ch: ChannelModel, rng: np.random.Generator) -> CoherentWavepacket:
    """Loss plus independent Gaussian phase perturbation per bin."""
    wp = e.wavepacket
    amps = wp.bin_amplitudes * np.sqrt(ch.transmittance)
    if ch.phase_noise_sigma > 0:
        amps = amps * np.exp(1j * rng.normal(0.0, ch.phase_noise_sigma, size=wp.dim))
    return CoherentWavepacket(amps, wp.global_phase)


def _first_true(mask: np.ndarray) -> np.ndarray:
    """Index of the first True per row, -1 where none."""
    idx = mask.argmax(axis=-1)
    return np.where(mask.any(axis=-1), idx, -1)


def detect_time_basis(
    wp: CoherentWavepacket,
    ch: ChannelModel,
    detector_state: DetectorState,
    rng: np.random.Generator,
    frame_index: int = 0,
    bin_width: float = 400e-12,
    incident_rate: float = 0.0,
) -> list[int]:
    """Registered click bins for one frame arriving at Bob's receiver."""
    n = ch.bob_time_fraction * np.abs(wp.bin_amplitudes) ** 2
    n = crosstalk_mix(n, ch.crosstalk)
    eff = ch.detector_efficiency * ch.rolloff(incident_rate)
    q = candidate_probabilities(n, eff, ch.dark_rate * bin_width)
    bins = np.flatnonzero(rng.random(wp.dim) < q)
    times = frame_index * wp.dim + bins
    keep = dead_time_filter(times.astype(float), ch.dead_time / bin_width, detector_state)
    return bins[keep].tolist()


def detect_phase_basis(
    alice_wp: CoherentWavepacket,
    bob_wp: CoherentWavepacket,
    ch: ChannelModel,
    rng: np.random.Generator,
    states: tuple[DetectorState, DetectorState] | None = None,
    frame_index: int = 0,
    bin_width: float = 400e-12,
    incident_rates: tuple[float, float] = (0.0, 0.0),
) -> tuple[list[int], list[int], bool]:
    """Interfere Alice's (already transmitted) wavepacket with Bob's f0 wavepacket.

    ``bob_wp`` is taken as it arrives at the beamsplitter; Alice's light is
    scaled by the phase-arm fraction of Bob's basis splitter.
    """
    if alice_wp.dim != bob_wp.dim:
        raise ValueError(f"dimension mismatch: {alice_wp.dim} vs {bob_wp.dim}")
    if states is None:
        states = (DetectorState(), DetectorState())
    a = alice_wp.field() * np.sqrt(1 - ch.bob_time_fraction)
    b = bob_wp.field()
    n0, n1 = click_means_arrays(a, b, ch.hom_overlap)
    dark = ch.dark_rate * bin_width
    out = []
    for n, st, rate in zip((n0, n1), states, incident_rates):
        q = candidate_probabilities(n, ch.detector_efficiency * ch.rolloff(rate), dark)
        bins = np.flatnonzero(rng.random(alice_wp.dim) < q)
        keep = dead_time_filter((frame_index * alice_wp.dim + bins).astype(float), ch.dead_time / bin_width, st)
        out.append(bins[keep].tolist())
    return out[0], out[1], bool(out[0] and out[1])


def nominal_rates(cfg: TransmitterConfig, ch: ChannelModel) -> dict[str, float]:
    """Expected click rates (cps) at nominal efficiency, before dead time; drives the roll-off."""
    eta = ch.detector_efficiency
    mu_a = cfg.intensities.mean()
    mu_b = float(np.mean(cfg.intensities.values))
    dark = ch.dark_rate
    time_photons = ch.bob_time_fraction * ch.transmittance * mu_a
    port_photons = ((1 - ch.bob_time_fraction) * ch.transmittance * mu_a + ch.lo_gain * mu_b) / 2
    return {
        "time": cfg.rep_rate * eta * time_photons + dark,
        "d0": cfg.rep_rate * eta * port_photons + dark,
        "d1": cfg.rep_rate * eta * port_photons + dark,
    }


# ---------------------------------------------------------------- sessions


@dataclass
class _SessionState:
    time: DetectorState = field(default_factory=DetectorState)
    d0: DetectorState = field(default_factory=DetectorState)
    d1: DetectorState = field(default_factory=DetectorState)


def _chunk(cfg, ch, n, offset, rng, estimator, effs, det_state, phase_override=None):
    d = cfg.dim
    A = draw_emissions(cfg, n, rng)
    B = draw_lo(cfg, n, rng)
    alice = A.amplitudes(d) * np.sqrt(ch.transmittance)
    if phase_override is not None:
        alice = alice * np.exp(1j * np.asarray(phase_override))[None, :]
    if ch.phase_noise_sigma > 0:
        alice = alice * np.exp(1j * rng.normal(0.0, ch.phase_noise_sigma, size=(n, d)))
    alice = alice * np.exp(1j * A.phase)[:, None]
    lo = B.amplitudes(d) * np.sqrt(ch.lo_gain) * np.exp(1j * B.phase)[:, None]

    n_time = crosstalk_mix(ch.bob_time_fraction * np.abs(alice) ** 2, ch.crosstalk)
    n0, n1 = click_means_arrays(alice * np.sqrt(1 - ch.bob_time_fraction), lo, ch.hom_overlap)
    dark = ch.dark_rate * cfg.bin_width
    q_t = candidate_probabilities(n_time, effs["time"], dark)
    q_0 = candidate_probabilities(n0, effs["d0"], dark)
    q_1 = candidate_probabilities(n1, effs["d1"], dark)

    if estimator == "sampled":
        dead_bins = ch.dead_time / cfg.bin_width

        def registered(q, st):
            mask = rng.random(q.shape) < q
            f, b = np.nonzero(mask)
            keep = dead_time_filter(((offset + f) * d + b).astype(float), dead_bins, st)
            out = np.zeros_like(mask)
            out[f[keep], b[keep]] = True
            return out

        reg_t = registered(q_t, det_state.time)
        first = _first_true(reg_t)
        p_click_t = (first >= 0).astype(float)
        p_err_t = ((first >= 0) & (first != A.state)).astype(float)
        c0 = registered(q_0, det_state.d0).any(axis=1).astype(float)
        c1 = registered(q_1, det_state.d1).any(axis=1).astype(float)
        p_coinc = c0 * c1
    else:
        live = {}
        for key, q in (("time", q_t), ("d0", q_0), ("d1", q_1)):
            p_frame = 1.0 - np.prod(1.0 - q, axis=1)
            rate = p_frame.mean() * cfg.rep_rate
            live[key] = 1.0 / (1.0 + rate * ch.dead_time)
        surv = np.cumprod(1.0 - q_t, axis=1)
        before = np.concatenate([np.ones((n, 1)), surv[:, :-1]], axis=1)
        p_first = before * q_t * live["time"]
        p_click_t = p_first.sum(axis=1)
        p_err_t = p_click_t - p_first[np.arange(n), A.state]
        c0 = live["d0"] * (1.0 - np.prod(1.0 - q_0, axis=1))
        c1 = live["d1"] * (1.0 - np.prod(1.0 - q_1, axis=1))
        p_coinc = c0 * c1

    clicked = np.where(A.time_basis, p_click_t, c0 + c1 - p_coinc)
    errors = np.where(A.time_basis, p_err_t, 0.0)
    coinc = np.where(A.time_basis, 0.0, p_coinc)
    s0 = np.where(A.time_basis, 0.0, c0)
    s1 = np.where(A.time_basis, 0.0, c1)
    cell = np.where(A.time_basis, A.label, 3 + 3 * A.label + B.label)
    nc = len(CELL_KEYS)
    cols = [np.ones(n), clicked, errors, coinc, s0, s1]
    return np.stack([np.bincount(cell, weights=c, minlength=nc) for c in cols], axis=1)


def efficiencies(cfg: TransmitterConfig, ch: ChannelModel) -> dict[str, float]:
    rates = nominal_rates(cfg, ch)
    return {k: ch.detector_efficiency * ch.rolloff(r) for k, r in rates.items()}


def run_session(
    cfg: TransmitterConfig,
    ch: ChannelModel,
    frames: int,
    seed: int = 0,
    estimator: str = "sampled",
    chunk_frames: int | None = None,
    phase_override=None,
) -> TallyCounts:
    """Simulate ``frames`` wavepackets and tally every (basis, mu_A, mu_B) cell.

    Chunks draw from independent child streams of ``seed`` and are processed in
    order, so detector dead-time state carries across chunk boundaries exactly.
    ``phase_override`` imposes fixed per-bin perturbation phases on Alice's light.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}")
    if frames < 0:
        raise ValueError("frames must be >= 0")
    tallies = TallyCounts(estimator=estimator, seed=seed)
    if frames == 0:
        return tallies
    if chunk_frames is None:
        chunk_frames = max(1024, (1 << 19) // cfg.dim)
    effs = efficiencies(cfg, ch)
    n_chunks = -(-frames // chunk_frames)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    det_state = _SessionState()
    total = np.zeros((len(CELL_KEYS), len(TALLY_FIELDS)))
    for k, child in enumerate(children):
        n = min(chunk_frames, frames - k * chunk_frames)
        total += _chunk(cfg, ch, n, k * chunk_frames, make_rng(child), estimator, effs, det_state, phase_override)
    tallies.add_arrays(total)
    tallies.frames = frames
    return tallies


def hom_scan(
    overlaps,
    mu: float = 0.016,
    frames: int = 1_000_000,
    seed: int = 0,
    ch: ChannelModel | None = None,
    estimator: str = "expected",
    bin_width: float = 400e-12,
    delays=None,
) -> list[G2Point]:
    """g2 of two independent single-peak PRWCS wavepackets vs. mode overlap.

    In ``expected`` mode the per-frame click probabilities given the random
    relative phase are averaged and the error bar is the delta-method standard
    error of the ratio over frames.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}")
    ch = ch or ChannelModel(loss_db=0.0, dark_rate=0.0, dead_time=0.0)
    eta = ch.detector_efficiency
    dark = ch.dark_rate * bin_width
    amp = np.sqrt(mu * ch.transmittance)
    delays = list(delays) if delays is not None else [0.0] * len(overlaps)
    if len(delays) != len(overlaps):
        raise ValueError("delays and overlaps differ in length")
    children = np.random.SeedSequence(seed).spawn(len(overlaps))
    points = []
    for xi, delay, child in zip(overlaps, delays, children):
        rng = make_rng(child)
        sums = np.zeros(3)
        moments = np.zeros((3, 3))
        done = 0
        while done < frames:
            n = min(1 << 20, frames - done)
            a = amp * np.exp(1j * rng.uniform(0, 2 * np.pi, n))
            b = amp * np.exp(1j * rng.uniform(0, 2 * np.pi, n))
            n0, n1 = click_means_arrays(a, b, xi)
            q0 = candidate_probabilities(n0, eta, dark)
            q1 = candidate_probabilities(n1, eta, dark)
            if estimator == "sampled":
                q0 = (rng.random(n) < q0).astype(float)
                q1 = (rng.random(n) < q1).astype(float)
            v = np.stack([q0 * q1, q0, q1])
            sums += v.sum(axis=1)
            moments += v @ v.T
            done += n
        cc, s0, s1 = sums
        if estimator == "sampled":
            points.append(g2_estimate(cc, s0, s1, frames, delay=delay))
            continue
        pt = g2_estimate(cc, s0, s1, frames, delay=delay)
        mean = sums / frames
        cov = moments / frames - np.outer(mean, mean)
        grad = np.array([1 / mean[0], -1 / mean[1], -1 / mean[2]])
        rel_var = max(float(grad @ cov @ grad), 0.0) / frames
        points.append(G2Point(delay=float(delay), g2=pt.g2, stderr=float(pt.g2 * np.sqrt(rel_var))))
    return points


def config_fields(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}
