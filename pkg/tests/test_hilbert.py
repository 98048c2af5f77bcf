import numpy as np
import pytest
from hypothesis import given, strategies as st

from tpqkd.hilbert import (
    Basis,
    DensityOperator,
    KetVector,
    Projector,
    basis_states,
    bob_projector,
    correlation_projectors,
    error_operator,
    kron,
    max_entangled,
    phase_state,
    projector,
    time_state,
)

dims = st.sampled_from([2, 3, 4, 8, 16])


@given(dims)
def test_bases_orthonormal(d):
    for basis in Basis:
        V = np.array([s.amplitudes for s in basis_states(d, basis)])
        np.testing.assert_allclose(V.conj() @ V.T, np.eye(d), atol=1e-12)


@given(dims, st.data())
def test_mutually_unbiased(d, data):
    m = data.draw(st.integers(0, d - 1))
    n = data.draw(st.integers(0, d - 1))
    assert abs(time_state(d, m).inner(phase_state(d, n))) ** 2 == pytest.approx(1 / d, abs=1e-12)


def test_phase_state_two_dim_values():
    # |f_0> = (|t0> + |t1>)/sqrt2, |f_1> = (|t0> - |t1>)/sqrt2
    np.testing.assert_allclose(phase_state(2, 0).amplitudes, [2**-0.5, 2**-0.5])
    np.testing.assert_allclose(phase_state(2, 1).amplitudes, [2**-0.5, -(2**-0.5)], atol=1e-15)


@given(dims, st.floats(0, 2 * np.pi))
def test_projector_global_phase_invariant(d, theta):
    v = phase_state(d, 1)
    w = KetVector(v.amplitudes * np.exp(1j * theta))
    np.testing.assert_allclose(projector(v).matrix, projector(w).matrix, atol=1e-12)


def test_ket_rejects_unnormalized_and_scalar():
    with pytest.raises(ValueError):
        KetVector(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        KetVector(np.array([1.0]))


def test_index_out_of_range():
    with pytest.raises(ValueError):
        time_state(4, 4)
    with pytest.raises(ValueError):
        phase_state(1, 0)


def test_operator_validation():
    with pytest.raises(ValueError):
        Projector(np.array([[1, 1], [0, 0]], dtype=complex))
    with pytest.raises(ValueError):
        Projector(0.5 * np.eye(2))
    with pytest.raises(ValueError):
        DensityOperator(np.diag([0.5, 0.6]), is_state=True)
    with pytest.raises(ValueError):
        DensityOperator(np.diag([1.5, -0.5]), is_state=True)
    DensityOperator(np.diag([1.5, -0.5]))  # fine as an observable


def test_arrays_are_frozen():
    v = time_state(2, 0)
    with pytest.raises(ValueError):
        v.amplitudes[0] = 0


@given(dims)
def test_correlation_projectors_resolve_identity(d):
    for basis in Basis:
        P = correlation_projectors(d, basis)
        total = sum(P[i][j].matrix for i in range(d) for j in range(d))
        np.testing.assert_allclose(total, np.eye(d * d), atol=1e-10)


@given(st.sampled_from([2, 4, 8]))
def test_error_operator_trace(d):
    for basis in Basis:
        E = error_operator(d, basis)
        assert E.rank == d * (d - 1)


@given(st.sampled_from([2, 3, 4, 8]))
def test_max_entangled_is_error_free_in_both_bases(d):
    # requires Bob's conjugated phase projectors for d > 2
    rho = max_entangled(d)
    assert rho.expectation(error_operator(d, Basis.TIME)) == pytest.approx(0, abs=1e-12)
    assert rho.expectation(error_operator(d, Basis.PHASE)) == pytest.approx(0, abs=1e-12)


def test_bob_projector_conjugates():
    v = phase_state(4, 1)
    np.testing.assert_allclose(bob_projector(v).matrix, projector(v).matrix.conj())


def test_kron_types():
    p = kron(projector(time_state(2, 0)), projector(time_state(2, 1)))
    assert isinstance(p, Projector) and p.dim == 4
    assert p.matrix[1, 1] == 1  # |t0 t1> sits at index 0*2 + 1
    rho = DensityOperator(np.eye(2) / 2, is_state=True)
    r2 = kron(rho, rho)
    assert isinstance(r2, DensityOperator) and r2.is_state
