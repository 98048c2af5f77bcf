import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from tpqkd.keyrate import RATEPOINT_COLUMNS, entropy_d, ratepoints_csv, secret_key_rate

dims = st.sampled_from([2, 3, 4, 8, 16, 32])


def entropy_oracle(x, k):
    mpmath.mp.dps = 40
    x = mpmath.mpf(x)
    h = mpmath.mpf(0)
    if x > 0:
        h -= x * mpmath.log(x / k, 2)
    if x < 1:
        h -= (1 - x) * mpmath.log(1 - x, 2)
    return float(h)


@given(st.floats(0, 1), dims)
def test_entropy_matches_high_precision(x, d):
    assert entropy_d(x, d) == pytest.approx(entropy_oracle(x, d), abs=1e-12)
    assert entropy_d(x, d, "standard") == pytest.approx(entropy_oracle(x, d - 1), abs=1e-12)


@given(dims)
def test_entropy_edges(d):
    assert entropy_d(0.0, d) == 0.0
    assert entropy_d(1.0, d) == pytest.approx(np.log2(d), abs=1e-12)
    assert abs(entropy_d(1 - 1e-13, d) - np.log2(d)) < 1e-9
    assert 0 <= entropy_d(5e-324, d) < 1e-300  # subnormal input stays finite


def test_binary_entropy_reduction():
    # the standard variant at d = 2 is the binary entropy
    assert entropy_d(0.11, 2, "standard") == pytest.approx(
        -0.11 * np.log2(0.11) - 0.89 * np.log2(0.89), abs=1e-14
    )


def test_entropy_validation():
    with pytest.raises(ValueError):
        entropy_d(-0.1, 4)
    with pytest.raises(ValueError):
        entropy_d(0.1, 1)
    with pytest.raises(ValueError):
        entropy_d(0.1, 4, "other")


BASE = dict(dim=4, r_t1=2e-3, r_t=3e-3, e_t=0.015, e_f=0.03, ef_upper=0.03, rep_rate=6.25e8)


def test_rate_formula():
    p = secret_key_rate(**BASE)
    expected = 2e-3 * (2 - entropy_d(0.03, 4)) - 3e-3 * entropy_d(0.015, 4)
    assert p.r_per_frame == pytest.approx(expected)
    assert p.r_bps == pytest.approx(expected * 6.25e8)
    assert p.delta_ec == pytest.approx(3e-3 * entropy_d(0.015, 4))
    assert not p.negative


@given(st.floats(0, 0.4), st.floats(0, 0.4))
def test_rate_decreases_with_errors(e1, e2):
    lo, hi = sorted((e1, e2))
    assert secret_key_rate(**{**BASE, "ef_upper": hi}).r_per_frame <= secret_key_rate(**{**BASE, "ef_upper": lo}).r_per_frame
    assert secret_key_rate(**{**BASE, "e_t": hi}).r_per_frame <= secret_key_rate(**{**BASE, "e_t": lo}).r_per_frame


@given(st.floats(1e-5, 1e-2), st.floats(1e-5, 1e-2))
def test_rate_increases_with_single_photon_gain(a, b):
    lo, hi = sorted((a, b))
    assert secret_key_rate(**{**BASE, "r_t1": lo}).r_per_frame <= secret_key_rate(**{**BASE, "r_t1": hi}).r_per_frame


def test_negative_rate_floored_and_flagged():
    p = secret_key_rate(**{**BASE, "ef_upper": 0.6})
    assert p.r_per_frame == 0.0 and p.negative


def test_missing_input():
    with pytest.raises(ValueError):
        secret_key_rate(**{**BASE, "ef_upper": float("nan")})


def test_csv_layout():
    text = ratepoints_csv([secret_key_rate(**BASE), secret_key_rate(**BASE, curve="theory")])
    lines = text.split("\r\n")
    assert lines[0].split(",") == RATEPOINT_COLUMNS
    assert len([ln for ln in lines if ln]) == 3
    assert "np." not in text
