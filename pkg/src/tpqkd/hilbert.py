"""Finite-dimensional state algebra for d-dimensional time-bin / phase encoding.

Bipartite operators act on C^d (Alice) tensor C^d (Bob) with row-major
ordering: basis element (i, j) sits at index ``i * d + j``.

Bob's phase-basis measurement is taken in the complex-conjugate basis
``{|f_n>*}`` so that the maximally entangled state ``sum_i |t_i t_i>/sqrt(d)``
is perfectly correlated in *both* bases. For d = 2 the phase states are real
and the distinction vanishes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-9


class Basis(str, enum.Enum):
    TIME = "time"
    PHASE = "phase"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class KetVector:
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.size < 2:
            raise ValueError(f"KetVector needs dim >= 2, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"KetVector not normalized: <v|v> = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def inner(self, other: "KetVector") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def conj(self) -> "KetVector":
        return KetVector(self.amplitudes.conj())


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian operator; ``is_state`` additionally enforces unit trace and PSD."""

    matrix: np.ndarray = field(repr=False)
    is_state: bool = False

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        if not np.allclose(m, m.conj().T, atol=HERMITIAN_TOL, rtol=0):
            raise ValueError("operator is not Hermitian")
        if self.is_state:
            tr = np.trace(m).real
            if abs(tr - 1.0) > HERMITIAN_TOL:
                raise ValueError(f"state trace {tr!r} != 1")
            lam = np.linalg.eigvalsh(m).min()
            if lam < -PSD_TOL:
                raise ValueError(f"state not positive semidefinite (min eig {lam:.3e})")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def expectation(self, op: "DensityOperator | Projector") -> float:
        return float(np.real(np.trace(op.matrix @ self.matrix)))


@dataclass(frozen=True)
class Projector:
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"projector must be square, got shape {m.shape}")
        if not np.allclose(m, m.conj().T, atol=HERMITIAN_TOL, rtol=0):
            raise ValueError("projector is not Hermitian")
        if not np.allclose(m @ m, m, atol=HERMITIAN_TOL, rtol=0):
            raise ValueError("projector is not idempotent")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))


def _check_index(d: int, k: int) -> None:
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if not 0 <= k < d:
        raise ValueError(f"index {k} out of range for d={d}")


def time_state(d: int, m: int) -> KetVector:
    _check_index(d, m)
    v = np.zeros(d, dtype=complex)
    v[m] = 1.0
    return KetVector(v)


def phase_amplitudes(d: int, n: int) -> np.ndarray:
    m = np.arange(d)
    return np.exp(2j * np.pi * n * m / d) / np.sqrt(d)


def phase_state(d: int, n: int) -> KetVector:
    """``|f_n> = d^{-1/2} sum_m exp(2 pi i n m / d) |t_m>``."""
    _check_index(d, n)
    return KetVector(phase_amplitudes(d, n))


def basis_states(d: int, basis: Basis) -> list[KetVector]:
    make = time_state if Basis(basis) is Basis.TIME else phase_state
    return [make(d, k) for k in range(d)]


def projector(v: KetVector) -> Projector:
    if not isinstance(v, KetVector):
        v = KetVector(v)
    a = v.amplitudes
    return Projector(np.outer(a, a.conj()))


def bob_projector(v: KetVector) -> Projector:
    """Projector onto ``|v>*``, Bob's side of the correlated measurement."""
    return projector(v.conj())


def kron(a, b):
    """Kronecker product preserving the operator type of ``a``."""
    m = np.kron(a.matrix, b.matrix)
    if isinstance(a, Projector) and isinstance(b, Projector):
        return Projector(m)
    return DensityOperator(m, is_state=getattr(a, "is_state", False) and getattr(b, "is_state", False))


def correlation_projectors(d: int, basis: Basis) -> list[list[Projector]]:
    """``P[i][j] = Pi_{x_i} (x) Pi^B_{x_j}`` on the d^2 space."""
    states = basis_states(d, basis)
    alice = [projector(s) for s in states]
    bob = [bob_projector(s) for s in states]
    return [[kron(alice[i], bob[j]) for j in range(d)] for i in range(d)]


def error_operator(d: int, basis: Basis) -> Projector:
    """``E_X = sum_{i != j} Pi_{x_i} (x) Pi^B_{x_j}``; trace d(d-1)."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    P = correlation_projectors(d, basis)
    m = sum(P[i][j].matrix for i in range(d) for j in range(d) if i != j)
    return Projector(m)


def max_entangled(d: int) -> DensityOperator:
    v = np.zeros(d * d, dtype=complex)
    v[[i * d + i for i in range(d)]] = 1 / np.sqrt(d)
    return DensityOperator(np.outer(v, v.conj()), is_state=True)
