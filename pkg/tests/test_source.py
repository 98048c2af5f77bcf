import numpy as np
import pytest
from hypothesis import given, strategies as st

from tpqkd.hilbert import Basis
from tpqkd.source import (
    DecoyIntensities,
    TransmitterConfig,
    bob_lo_emission,
    draw_emission,
    draw_emissions,
    draw_lo,
    make_rng,
)

MU = DecoyIntensities(0.156, 0.059, 0.007)


def test_intensity_validation():
    with pytest.raises(ValueError):
        DecoyIntensities(0.1, 0.08, 0.03)  # mu2 + mu3 >= mu1
    with pytest.raises(ValueError):
        DecoyIntensities(0.5, 0.01, 0.02)  # mu2 <= mu3
    with pytest.raises(ValueError):
        DecoyIntensities(0.5, 0.1, -0.01)
    with pytest.raises(ValueError):
        DecoyIntensities(0.5, 0.1, 0.0, 0.5, 0.5, 0.5)


def test_intensity_accessors():
    assert MU["mu2"] == 0.059
    assert MU.mean() == pytest.approx((0.156 + 0.059 + 0.007) / 3)


def test_rep_rate():
    cfg = TransmitterConfig(4, MU)
    assert cfg.rep_rate == pytest.approx(2.5e9 / 4)
    assert cfg.p_phase == pytest.approx(0.5)
    with pytest.raises(ValueError):
        TransmitterConfig(1, MU)


@given(st.sampled_from([2, 4, 8]), st.floats(0.05, 0.95))
def test_batch_statistics(d, pt):
    cfg = TransmitterConfig(d, MU, p_time=pt)
    b = draw_emissions(cfg, 20000, make_rng(1))
    frac = b.time_basis.mean()
    assert abs(frac - pt) < 5 * np.sqrt(pt * (1 - pt) / 20000)
    assert np.all(b.state[~b.time_basis] == 0)
    amps = b.amplitudes(d)
    np.testing.assert_allclose(np.sum(np.abs(amps) ** 2, axis=1), b.mu)
    # time states occupy one bin; phase f0 states are flat
    t = np.flatnonzero(b.time_basis)
    assert np.all(np.count_nonzero(amps[t], axis=1) <= 1)
    f = np.flatnonzero(~b.time_basis)
    np.testing.assert_allclose(np.abs(amps[f]) ** 2, np.repeat(b.mu[f, None] / d, d, axis=1))


def test_seeded_streams_replay():
    cfg = TransmitterConfig(4, MU)
    a = draw_emissions(cfg, 100, make_rng(7))
    b = draw_emissions(cfg, 100, make_rng(7))
    np.testing.assert_array_equal(a.phase, b.phase)
    c = draw_emissions(cfg, 100, make_rng(8))
    assert not np.array_equal(a.phase, c.phase)


def test_global_phase_uniform():
    b = draw_lo(TransmitterConfig(2, MU), 50000, make_rng(3))
    # first circular moment of a uniform phase vanishes
    assert abs(np.mean(np.exp(1j * b.phase))) < 0.02


def test_single_emission_objects():
    cfg = TransmitterConfig(8, MU, p_time=1.0)
    e = draw_emission(cfg, make_rng(0), frame_index=5)
    assert e.basis is Basis.TIME and e.frame_index == 5
    assert e.wavepacket.mean_photons == pytest.approx(MU[e.intensity_label])
    lo = bob_lo_emission(cfg, "mu3", make_rng(0))
    assert lo.basis is Basis.PHASE and lo.intensity_label == "mu3"
    assert lo.wavepacket.mean_photons == pytest.approx(0.007)
