import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from _oracles import brute_force_coincidence
from tpqkd.optics import (
    CoherentWavepacket,
    EstimatorUndefined,
    PerturbedPhaseState,
    bs_transform_two_photon,
    coherent_click_means,
    coincidence_from_amplitudes,
    coincidence_probability,
    g2_estimate,
)


@pytest.mark.parametrize("d", [2, 4, 8, 16])
def test_ideal_state_has_no_coincidences(d):
    assert coincidence_probability(PerturbedPhaseState(np.zeros(d)), d) == 0.0


def test_known_value_d2_pi():
    # orthogonal single photons: half the pairs exit through different ports
    assert coincidence_probability(PerturbedPhaseState(np.array([0.0, np.pi])), 2) == pytest.approx(0.5)


def test_matches_brute_force_propagation():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(2000):
        d = int(rng.choice([2, 3, 4, 8]))
        s = PerturbedPhaseState(rng.uniform(0, 2 * np.pi, d), global_phase=rng.uniform(0, 2 * np.pi))
        f0 = np.ones(d) / np.sqrt(d)
        worst = max(worst, abs(coincidence_probability(s, d) - brute_force_coincidence(s.amplitudes(), f0)))
    assert worst < 1e-10


@given(st.integers(2, 8), st.data())
def test_overlap_formula(d, data):
    # HOM with partially distinguishable photons: P_c = (1 - |<f0|psi>|^2) / 2
    lam = np.array(data.draw(st.lists(st.floats(-10, 10), min_size=d, max_size=d)))
    s = PerturbedPhaseState(lam)
    overlap = abs(np.sum(s.amplitudes()) / np.sqrt(d)) ** 2
    assert coincidence_probability(s, d) == pytest.approx((1 - overlap) / 2, abs=1e-12)


@given(st.integers(2, 8), st.floats(0, 2 * np.pi), st.data())
def test_global_phase_invariance(d, shift, data):
    lam = np.array(data.draw(st.lists(st.floats(0, 2 * np.pi), min_size=d, max_size=d)))
    a = coincidence_probability(PerturbedPhaseState(lam), d)
    b = coincidence_probability(PerturbedPhaseState(lam + shift), d)
    assert a == pytest.approx(b, abs=1e-12)


@given(st.integers(2, 6), st.data())
def test_beamsplitter_unitary(d, data):
    def unit(xs):
        v = np.array(xs[:d]) + 1j * np.array(xs[d:])
        return v / np.linalg.norm(v)

    vec = st.lists(st.floats(-1, 1), min_size=2 * d, max_size=2 * d).filter(lambda x: np.linalg.norm(x) > 0.1)
    a, b = unit(data.draw(vec)), unit(data.draw(vec))
    amps = bs_transform_two_photon(a, b)
    assert sum(abs(v) ** 2 for v in amps.values()) == pytest.approx(1.0, abs=1e-12)
    assert coincidence_from_amplitudes(amps) == pytest.approx(brute_force_coincidence(a, b), abs=1e-12)


def test_unnormalized_input_rejected():
    with pytest.raises(ValueError):
        bs_transform_two_photon(np.ones(2), np.ones(2) / np.sqrt(2))
    with pytest.raises(ValueError):
        coincidence_probability(PerturbedPhaseState(np.zeros(4)), 8)


def test_phase_noise_mean_matches_quadrature():
    # E|e^{i l_i} - e^{i l_j}|^2 = 2 - 2 E cos(l_i - l_j), l_i - l_j ~ N(0, 2 sigma^2)
    d, sigma = 4, 0.3
    var = 2 * sigma**2
    ecos, _ = integrate.quad(lambda x: np.cos(x) * np.exp(-(x**2) / (2 * var)) / np.sqrt(2 * np.pi * var), -20, 20)
    expected = d * (d - 1) * (2 - 2 * ecos) / (2 * d) ** 2
    rng = np.random.default_rng(5)
    vals = [coincidence_probability(PerturbedPhaseState(rng.normal(0, sigma, d)), d) for _ in range(20000)]
    sem = np.std(vals) / np.sqrt(len(vals))
    assert abs(np.mean(vals) - expected) < 4 * sem


@given(st.integers(2, 8), st.floats(0, 2 * np.pi), st.floats(0, 1), st.data())
def test_click_means_conserve_energy(d, phi, xi, data):
    ra = np.array(data.draw(st.lists(st.floats(0, 1), min_size=d, max_size=d)))
    rb = np.array(data.draw(st.lists(st.floats(0, 1), min_size=d, max_size=d)))
    a = CoherentWavepacket(ra * np.exp(1j * np.arange(d)))
    b = CoherentWavepacket(rb)
    n0, n1 = coherent_click_means(a, b, phi, overlap=xi)
    assert np.sum(n0 + n1) == pytest.approx(a.mean_photons + b.mean_photons, abs=1e-12)
    assert np.all(n0 >= -1e-12) and np.all(n1 >= -1e-12)


def test_click_means_interference():
    a = CoherentWavepacket(np.array([0.3, 0.0]))
    n0, n1 = coherent_click_means(a, a, 0.0)
    np.testing.assert_allclose(n0, [0.18, 0.0])  # |a + a|^2 / 2
    np.testing.assert_allclose(n1, [0.0, 0.0], atol=1e-15)
    n0, n1 = coherent_click_means(a, a, 0.0, overlap=0.0)
    np.testing.assert_allclose(n0, n1)


def test_wavepacket_basics():
    wp = CoherentWavepacket(np.array([0.1, 0.2j]), global_phase=np.pi)
    assert wp.mean_photons == pytest.approx(0.05)
    np.testing.assert_allclose(wp.field(), [-0.1, -0.2j], atol=1e-15)


def test_g2_estimate_values_and_errors():
    p = g2_estimate(coincidences=25, singles_d0=1000, singles_d1=500, frames=10000)
    assert p.g2 == pytest.approx(0.0025 / (0.1 * 0.05))
    assert p.stderr > 0
    with pytest.raises(EstimatorUndefined):
        g2_estimate(0, 0, 10, 100)
    with pytest.raises(ValueError):
        g2_estimate(0, 200, 10, 100)
