"""Two-photon interference at Bob's 50/50 beamsplitter.

Input ports a (Alice) and b (Bob's local f0 state), output ports c and d,
each carrying d temporal modes. The beamsplitter maps
``a_i^+ -> (c_i^+ + d_i^+)/sqrt2`` and ``b_i^+ -> (c_i^+ - d_i^+)/sqrt2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class PerturbedPhaseState:
    """``|f_0>`` with a global phase and per-bin perturbation phases."""

    local_phases: np.ndarray = field(repr=False)
    global_phase: float = 0.0

    def __post_init__(self):
        lam = np.mod(np.asarray(self.local_phases, dtype=float).ravel(), TWO_PI)
        if lam.size < 2:
            raise ValueError("need at least two temporal bins")
        lam.setflags(write=False)
        object.__setattr__(self, "local_phases", lam)

    @property
    def dim(self) -> int:
        return self.local_phases.size

    def amplitudes(self) -> np.ndarray:
        return np.exp(1j * (self.global_phase + self.local_phases)) / np.sqrt(self.dim)


@dataclass(frozen=True)
class CoherentWavepacket:
    """Coherent-state amplitudes per temporal bin; ``sum |a_i|^2`` is the mean photon number."""

    bin_amplitudes: np.ndarray = field(repr=False)
    global_phase: float = 0.0

    def __post_init__(self):
        a = np.array(self.bin_amplitudes, dtype=complex).ravel()
        a.setflags(write=False)
        object.__setattr__(self, "bin_amplitudes", a)

    @property
    def dim(self) -> int:
        return self.bin_amplitudes.size

    @property
    def mean_photons(self) -> float:
        return float(np.sum(np.abs(self.bin_amplitudes) ** 2))

    def field(self) -> np.ndarray:
        """Amplitudes including the global phase."""
        return self.bin_amplitudes * np.exp(1j * self.global_phase)


@dataclass(frozen=True)
class G2Point:
    delay: float
    g2: float
    stderr: float


class EstimatorUndefined(ValueError):
    pass


def coincidence_probability(alice: PerturbedPhaseState, bob_ideal_dim: int) -> float:
    """Probability of one photon in each output port for single-photon inputs.

    Alice carries the perturbed phase state, Bob an ideal ``|f_0>``; the result
    is ``sum_{i != j} |e^{i lam_i} - e^{i lam_j}|^2 / (2d)^2``.
    """
    if alice.dim != bob_ideal_dim:
        raise ValueError(f"dimension mismatch: {alice.dim} vs {bob_ideal_dim}")
    d = alice.dim
    u = np.exp(1j * alice.local_phases)
    diff = np.abs(u[:, None] - u[None, :]) ** 2
    return float(diff.sum() / (2 * d) ** 2)


def _check_normalized(v: np.ndarray, name: str) -> None:
    if abs(np.vdot(v, v).real - 1) > 1e-10:
        raise ValueError(f"{name} amplitudes are not normalized")


def bs_transform_two_photon(alice_amps, bob_amps) -> dict[tuple[str, int, str, int], complex]:
    """Fock-basis amplitudes of the two-photon output state.

    Keys are ``(port, bin, port, bin)`` in canonical order (c before d, then
    by bin), so each key is one normalized Fock state; doubly occupied modes
    carry the bosonic ``sqrt 2``.
    """
    a = np.asarray(alice_amps, dtype=complex).ravel()
    b = np.asarray(bob_amps, dtype=complex).ravel()
    if a.size != b.size:
        raise ValueError("dimension mismatch")
    _check_normalized(a, "alice")
    _check_normalized(b, "bob")
    d = a.size
    s = 1 / np.sqrt(2)
    # output-mode vectors: index k<d is c_k, k>=d is d_k
    u = np.concatenate([a * s, a * s])
    w = np.concatenate([b * s, -b * s])
    out = {}
    modes = [("c", k) for k in range(d)] + [("d", k) for k in range(d)]
    for p in range(2 * d):
        out[modes[p] + modes[p]] = np.sqrt(2) * u[p] * w[p]
        for q in range(p + 1, 2 * d):
            out[modes[p] + modes[q]] = u[p] * w[q] + u[q] * w[p]
    return out


def coincidence_from_amplitudes(amps: dict) -> float:
    return float(sum(abs(v) ** 2 for k, v in amps.items() if k[0] != k[2]))


def coherent_click_means(
    alice: CoherentWavepacket,
    bob: CoherentWavepacket,
    relative_phase: float,
    overlap: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Mean photon numbers per bin at output ports c (D0) and d (D1).

    ``overlap`` scales the interference cross term; 1 is perfect mode matching,
    0 is fully distinguishable (e.g. delayed) wavepackets.
    """
    if alice.dim != bob.dim:
        raise ValueError(f"dimension mismatch: {alice.dim} vs {bob.dim}")
    a = alice.field()
    b = bob.field() * np.exp(1j * relative_phase)
    return click_means_arrays(a, b, overlap)


def click_means_arrays(a: np.ndarray, b: np.ndarray, overlap: float = 1.0):
    """Vectorized core of :func:`coherent_click_means`; broadcasts over leading axes."""
    base = (np.abs(a) ** 2 + np.abs(b) ** 2) / 2
    cross = overlap * np.real(a * np.conj(b))
    return base + cross, base - cross


def g2_estimate(coincidences, singles_d0, singles_d1, frames, delay: float = 0.0) -> G2Point:
    """``g2 = P(C) / (P(S1) P(S2))`` with first-order binomial error propagation.

    Counts may be non-integer expected counts from a conditional-expectation run.
    """
    if frames <= 0:
        raise ValueError("frames must be positive")
    if singles_d0 > frames or singles_d1 > frames:
        raise ValueError("singles exceed frames")
    if singles_d0 <= 0 or singles_d1 <= 0:
        raise EstimatorUndefined("g2 undefined with zero singles")
    pc, p0, p1 = coincidences / frames, singles_d0 / frames, singles_d1 / frames
    g2 = pc / (p0 * p1)
    rel2 = 0.0
    if coincidences > 0:
        rel2 += (1 - pc) / coincidences
    rel2 += (1 - p0) / singles_d0 + (1 - p1) / singles_d1
    return G2Point(delay=float(delay), g2=float(g2), stderr=float(g2 * np.sqrt(rel2)))
