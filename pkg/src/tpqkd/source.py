"""Alice's transmitter and Bob's local f0 source (phase-randomized weak coherent states)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hilbert import Basis
from .optics import CoherentWavepacket

LABELS = ("mu1", "mu2", "mu3")


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator so (seed, stream) pairs replay bit-exactly."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


@dataclass(frozen=True)
class DecoyIntensities:
    mu1: float
    mu2: float
    mu3: float
    p_mu1: float = 1 / 3
    p_mu2: float = 1 / 3
    p_mu3: float = 1 / 3

    def __post_init__(self):
        if self.mu3 < 0:
            raise ValueError("mu3 must be >= 0")
        if not self.mu2 + self.mu3 < self.mu1:
            raise ValueError(f"need mu2 + mu3 < mu1, got {self.mu2} + {self.mu3} >= {self.mu1}")
        if not self.mu2 > self.mu3:
            raise ValueError("need mu2 > mu3")
        probs = self.probabilities
        if np.any(probs < 0) or abs(probs.sum() - 1) > 1e-12:
            raise ValueError(f"intensity probabilities must sum to 1, got {probs.sum()!r}")

    @property
    def values(self) -> np.ndarray:
        return np.array([self.mu1, self.mu2, self.mu3])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([self.p_mu1, self.p_mu2, self.p_mu3])

    def mean(self) -> float:
        return float(self.values @ self.probabilities)

    def __getitem__(self, label: str) -> float:
        return float(self.values[LABELS.index(label)])


@dataclass(frozen=True)
class TransmitterConfig:
    dim: int
    intensities: DecoyIntensities
    p_time: float = 0.5
    bin_width: float = 400e-12

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if not 0 <= self.p_time <= 1:
            raise ValueError("p_time must lie in [0, 1]")
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")

    @property
    def p_phase(self) -> float:
        return 1.0 - self.p_time

    @property
    def rep_rate(self) -> float:
        """Wavepackets per second; contiguous frames of ``dim`` bins (2.5e9/d at 400 ps)."""
        return 1.0 / (self.dim * self.bin_width)


@dataclass(frozen=True)
class Emission:
    frame_index: int
    basis: Basis
    state_index: int
    intensity_label: str
    wavepacket: CoherentWavepacket = field(repr=False)


@dataclass
class EmissionBatch:
    """Column-oriented emissions for vectorized simulation."""

    time_basis: np.ndarray  # bool
    state: np.ndarray  # int, 0 for phase basis
    label: np.ndarray  # int index into LABELS
    mu: np.ndarray
    phase: np.ndarray

    def __len__(self):
        return self.mu.size

    def amplitudes(self, d: int) -> np.ndarray:
        """(n, d) complex amplitudes without the global phase."""
        n = len(self)
        amps = np.empty((n, d), dtype=complex)
        amps[:] = np.sqrt(self.mu / d)[:, None]
        t = np.flatnonzero(self.time_basis)
        amps[t] = 0
        amps[t, self.state[t]] = np.sqrt(self.mu[t])
        return amps


def draw_emissions(cfg: TransmitterConfig, n: int, rng: np.random.Generator) -> EmissionBatch:
    time_basis = rng.random(n) < cfg.p_time
    state = rng.integers(0, cfg.dim, size=n)
    state[~time_basis] = 0
    label = rng.choice(3, size=n, p=cfg.intensities.probabilities)
    mu = cfg.intensities.values[label]
    phase = rng.uniform(0, 2 * np.pi, size=n)
    return EmissionBatch(time_basis, state, label, mu, phase)


def draw_lo(cfg: TransmitterConfig, n: int, rng: np.random.Generator, label=None) -> EmissionBatch:
    """Bob's f0 wavepackets; intensity labels drawn uniformly unless fixed."""
    if label is None:
        lab = rng.integers(0, 3, size=n)
    else:
        lab = np.full(n, LABELS.index(label) if isinstance(label, str) else int(label))
    mu = cfg.intensities.values[lab]
    phase = rng.uniform(0, 2 * np.pi, size=n)
    return EmissionBatch(np.zeros(n, bool), np.zeros(n, int), lab, mu, phase)


def _single(batch: EmissionBatch, d: int, frame_index: int) -> Emission:
    amps = batch.amplitudes(d)[0]
    basis = Basis.TIME if batch.time_basis[0] else Basis.PHASE
    return Emission(
        frame_index=frame_index,
        basis=basis,
        state_index=int(batch.state[0]),
        intensity_label=LABELS[int(batch.label[0])],
        wavepacket=CoherentWavepacket(amps, float(batch.phase[0])),
    )


def draw_emission(cfg: TransmitterConfig, rng: np.random.Generator, frame_index: int = 0) -> Emission:
    return _single(draw_emissions(cfg, 1, rng), cfg.dim, frame_index)


def bob_lo_emission(cfg: TransmitterConfig, intensity_label, rng: np.random.Generator, frame_index: int = 0) -> Emission:
    return _single(draw_lo(cfg, 1, rng, intensity_label), cfg.dim, frame_index)
