"""Phase-error-rate bound from a small complex-Hermitian SDP.

Maximize ``Tr[E_F rho]`` over density operators rho on C^d (x) C^d subject to
the observed statistics:

* ``Tr rho = 1`` and ``Tr[E_T rho] = e_T``;
* time-basis correlations ``Tr[(Pi_{t_i} (x) Pi_{t_j}) rho] = p_ij``;
* phase-basis correlations for the monitored phase states ``f_n`` (row n);
* cross-basis statistics for the monitored states, ``Tr[(Pi_{f_n} (x) Pi_{t_j}) rho]``
  and ``Tr[(Pi_{t_j} (x) Pi_{f_n}) rho]``, which equal ``1/d^2`` for an ideal,
  calibrated device (mutually unbiased bases).

The solver is a dense primal-dual path-following method (HKM direction,
Mehrotra predictor-corrector) on the real symmetric embedding
``H -> [[Re H, -Im H], [Im H, Re H]]``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .hilbert import Basis, correlation_projectors, error_operator, basis_states, projector, bob_projector, kron

SUPPORTED_DIMS = (2, 4, 8)


class CapabilityError(ValueError):
    """Raised for problem sizes the dense solver refuses to attempt."""


class Policy(str, enum.Enum):
    ONE_STATE = "one"
    ALL_STATES = "all"


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max-iterations"


@dataclass
class Constraint:
    label: str
    operator: np.ndarray = field(repr=False)
    target: float


@dataclass
class SdpProblem:
    dim: int
    objective: np.ndarray = field(repr=False)
    constraints: list[Constraint]
    d: int = 0

    def to_dict(self) -> dict:
        def enc(m):
            return {"re": np.real(m).tolist(), "im": np.imag(m).tolist()}

        return {
            "d": self.d,
            "dim": self.dim,
            "objective": enc(self.objective),
            "constraints": [
                {"label": c.label, "target": c.target, "operator": enc(c.operator)}
                for c in self.constraints
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SdpProblem":
        def dec(m):
            return np.asarray(m["re"]) + 1j * np.asarray(m["im"])

        return cls(
            dim=data["dim"],
            d=data["d"],
            objective=dec(data["objective"]),
            constraints=[
                Constraint(c["label"], dec(c["operator"]), float(c["target"]))
                for c in data["constraints"]
            ],
        )


@dataclass
class SecurityBound:
    ef_upper: float
    status: Status
    duality_gap: float
    iterations: int
    primal_value: float = float("nan")
    rho: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "ef_upper": self.ef_upper,
            "status": Status(self.status).value,
            "duality_gap": self.duality_gap,
            "iterations": self.iterations,
            "primal_value": self.primal_value,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def uniform_targets(d: int, err: float) -> np.ndarray:
    """Ideal calibration: correct outcomes share ``1-err``, errors share ``err``."""
    p = np.full((d, d), err / (d * (d - 1)))
    np.fill_diagonal(p, (1 - err) / d)
    return p


def build_problem(
    d: int,
    e_t: float,
    e_f: float,
    policy: Policy | str = Policy.ONE_STATE,
    p_time: np.ndarray | None = None,
    p_phase: np.ndarray | None = None,
) -> SdpProblem:
    """Assemble the constraint set; measured ``p_time`` / ``p_phase`` override the ideal targets."""
    if d not in SUPPORTED_DIMS:
        raise CapabilityError(
            f"d={d} unsupported: dense SDP limited to d in {SUPPORTED_DIMS}"
        )
    for name, v in (("e_t", e_t), ("e_f", e_f)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name}={v} outside [0, 1]")
    policy = Policy(policy)
    rows = [0] if policy is Policy.ONE_STATE else list(range(d))
    p_time = uniform_targets(d, e_t) if p_time is None else np.asarray(p_time, float)
    p_phase = uniform_targets(d, e_f) if p_phase is None else np.asarray(p_phase, float)

    D = d * d
    cons = [
        Constraint("trace", np.eye(D, dtype=complex), 1.0),
        Constraint("E_T", error_operator(d, Basis.TIME).matrix, float(e_t)),
    ]
    PT = correlation_projectors(d, Basis.TIME)
    for i in range(d):
        for j in range(d):
            cons.append(Constraint(f"T[{i},{j}]", PT[i][j].matrix, float(p_time[i, j])))
    PF = correlation_projectors(d, Basis.PHASE)
    for n in rows:
        for j in range(d):
            cons.append(Constraint(f"F[{n},{j}]", PF[n][j].matrix, float(p_phase[n, j])))

    t_states = basis_states(d, Basis.TIME)
    f_states = basis_states(d, Basis.PHASE)
    for n in rows:
        fa, fb = projector(f_states[n]), bob_projector(f_states[n])
        for j in range(d):
            cons.append(Constraint(f"FT[{n},{j}]", kron(fa, projector(t_states[j])).matrix, 1.0 / D))
            cons.append(Constraint(f"TF[{j},{n}]", kron(projector(t_states[j]), fb).matrix, 1.0 / D))

    return SdpProblem(dim=D, d=d, objective=error_operator(d, Basis.PHASE).matrix, constraints=cons)


def _hvec(m: np.ndarray) -> np.ndarray:
    v = np.ravel(m)
    return np.concatenate([v.real, v.imag])


def deduplicate(problem: SdpProblem, tol: float = 1e-9) -> tuple[list[Constraint], bool]:
    """Drop linearly dependent constraints; report whether the dropped targets are consistent."""
    A = np.array([_hvec(c.operator) for c in problem.constraints])
    b = np.array([c.target for c in problem.constraints])
    _, R, piv = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > tol * max(diag[0], 1.0)))
    keep = np.sort(piv[:rank])
    coef, *_ = np.linalg.lstsq(A[keep].T, A.T, rcond=None)
    consistent = bool(np.allclose(coef.T @ b[keep], b, atol=1e-8, rtol=0))
    return [problem.constraints[k] for k in keep], consistent


def embed(h: np.ndarray) -> np.ndarray:
    """Real symmetric embedding of a Hermitian matrix; ``<embed(A), embed(B)> = 2 Re Tr(AB)``."""
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def unembed(x: np.ndarray) -> np.ndarray:
    n = x.shape[0] // 2
    re = (x[:n, :n] + x[n:, n:]) / 2
    im = (x[n:, :n] - x[:n, n:]) / 2
    return re + 1j * im


def _max_step(x: np.ndarray, dx: np.ndarray, frac: float) -> float:
    L = np.linalg.cholesky(x)
    Li = scipy.linalg.solve_triangular(L, np.eye(len(x)), lower=True)
    lam = np.linalg.eigvalsh(Li @ dx @ Li.T).min()
    return 1.0 if lam >= 0 else min(1.0, -frac / lam)


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2


def solve_real_sdp(C, A, b, tol=1e-8, max_iter=200):
    """min <C,X> s.t. <A_i,X> = b_i, X psd (real symmetric, dense).

    Returns ``(X, y, Z, status, iterations, pobj, dobj)``.
    """
    m, n, _ = A.shape
    Af = A.reshape(m, n * n)
    X = np.eye(n)
    Z = np.eye(n)
    y = np.zeros(m)
    bnorm = 1 + np.linalg.norm(b)
    cnorm = 1 + np.linalg.norm(C)
    status = Status.MAX_ITERATIONS

    def op(K):
        return Af @ K.ravel()

    def adj(v):
        return (v @ Af).reshape(n, n)

    it = 0
    for it in range(1, max_iter + 1):
        rp = b - op(X)
        Rd = C - Z - adj(y)
        pobj, dobj = float(np.vdot(C, X)), float(b @ y)
        gap = abs(pobj - dobj)
        pinf = np.linalg.norm(rp) / bnorm
        dinf = np.linalg.norm(Rd) / cnorm
        if pinf < tol and dinf < tol and gap < tol * (1 + abs(pobj) + abs(dobj)):
            status = Status.OPTIMAL
            break
        if np.linalg.norm(y) > 1e10 or np.trace(X) > 1e10:
            status = Status.INFEASIBLE
            break
        mu = float(np.vdot(X, Z)) / n
        Lz = np.linalg.cholesky(Z)
        Zi = scipy.linalg.cho_solve((Lz, True), np.eye(n))
        G = np.matmul(np.matmul(X, A), Zi)
        M = Af @ G.reshape(m, n * n).T
        M = (M + M.T) / 2
        try:
            fac = scipy.linalg.cho_factor(M)
            msolve = lambda r: scipy.linalg.cho_solve(fac, r)  # noqa: E731
        except np.linalg.LinAlgError:
            msolve = lambda r: np.linalg.lstsq(M, r, rcond=None)[0]  # noqa: E731

        XRdZi = X @ Rd @ Zi

        def direction(sigma_mu, corr):
            cz = corr @ Zi if corr is not None else 0.0
            rhs = rp - op(sigma_mu * Zi - X - XRdZi - cz)
            dy = msolve(rhs)
            dZ = Rd - adj(dy)
            dX = sigma_mu * Zi - X - X @ dZ @ Zi - cz
            return _sym(dX), dy, _sym(dZ)

        dXa, dya, dZa = direction(0.0, None)
        ap = _max_step(X, dXa, 1.0)
        ad = _max_step(Z, dZa, 1.0)
        mu_aff = float(np.vdot(X + ap * dXa, Z + ad * dZa)) / n
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        dX, dy, dZ = direction(sigma * mu, dXa @ dZa)
        frac = 0.98
        ap = _max_step(X, dX, frac)
        ad = _max_step(Z, dZ, frac)
        X = _sym(X + ap * dX)
        y = y + ad * dy
        Z = _sym(Z + ad * dZ)
    pobj, dobj = float(np.vdot(C, X)), float(b @ y)
    return X, y, Z, status, it, pobj, dobj


def solve(problem: SdpProblem, tol: float = 1e-8, max_iter: int = 200) -> SecurityBound:
    cons, consistent = deduplicate(problem)
    if not consistent:
        return SecurityBound(float("nan"), Status.INFEASIBLE, float("nan"), 0)
    A = np.array([embed(c.operator) for c in cons])
    b = 2.0 * np.array([c.target for c in cons])
    C = -embed(problem.objective)
    X, y, Z, status, it, pobj, dobj = solve_real_sdp(C, A, b, tol=tol, max_iter=max_iter)
    # maximization value: primal -pobj/2, dual (certified upper bound) -dobj/2
    primal, upper = -pobj / 2, -dobj / 2
    gap = abs(upper - primal)
    if status is Status.OPTIMAL:
        upper = min(max(upper, 0.0), 1.0)
    return SecurityBound(
        ef_upper=upper,
        status=status,
        duality_gap=gap,
        iterations=it,
        primal_value=primal,
        rho=unembed(X),
    )


def ef_bound(
    d: int,
    e_t: float | None,
    e_f: float,
    policy: Policy | str = Policy.ONE_STATE,
    tol: float = 1e-8,
    shortcut: bool = True,
) -> SecurityBound:
    """Upper bound on the phase error rate given observed QBERs.

    ``e_t=None`` applies the symmetric-error assumption ``e_t = e_f``. With all
    phase states monitored at d = 2 the bound equals ``e_f`` and the solver is
    skipped unless ``shortcut`` is False.
    """
    if e_t is None:
        e_t = e_f
    policy = Policy(policy)
    problem = build_problem(d, e_t, e_f, policy)
    if shortcut and policy is Policy.ALL_STATES and d == 2:
        return SecurityBound(float(e_f), Status.OPTIMAL, 0.0, 0, float(e_f))
    return solve(problem, tol=tol)
