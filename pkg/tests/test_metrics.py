import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmno.errors import ContractError
from pmno.metrics import DEFAULT_TAU, ErrorCurve, rmse_curve, valid_time


def ref_stack(seed=0, n=5):
    return np.random.default_rng(seed).standard_normal((n, 8, 8, 2)) + 0.1


class TestRmseCurve:
    def test_identical(self):
        r = ref_stack()
        assert np.array_equal(rmse_curve(r, r).values, np.zeros(5))

    def test_scaled(self):
        r = ref_stack()
        assert np.allclose(rmse_curve(1.1 * r, r).values, 0.1, rtol=0, atol=1e-14)

    def test_zero_prediction(self):
        r = ref_stack()
        assert np.allclose(rmse_curve(np.zeros_like(r), r).values, 1.0, rtol=0, atol=1e-15)

    def test_layout_mismatch(self):
        with pytest.raises(ContractError):
            rmse_curve(np.zeros((5, 8, 8, 1)), ref_stack())

    def test_zero_reference(self):
        r = ref_stack()
        r[2] = 0.0
        with pytest.raises(ContractError):
            rmse_curve(np.ones_like(r), r)

    def test_channels_pooled(self):
        r = np.ones((1, 2, 2, 2))
        p = r.copy()
        p[..., 1] = 0.0
        assert rmse_curve(p, r).values[0] == pytest.approx(np.sqrt(0.5), abs=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-5, 5), st.integers(0, 1000))
    def test_scale_covariance(self, c, seed):
        r = ref_stack(seed)
        p = r + np.random.default_rng(seed + 1).standard_normal(r.shape)
        base = rmse_curve(p, r).values
        scaled = rmse_curve(r + c * (p - r), r).values
        assert np.allclose(scaled, abs(c) * base, rtol=1e-12, atol=1e-14)


class TestValidTime:
    def test_default_tau(self):
        assert DEFAULT_TAU == 0.1

    def test_never(self):
        assert valid_time(ErrorCurve(np.arange(6.0), np.full(6, 0.01))) is None

    def test_first_crossing(self):
        curve = ErrorCurve(np.arange(5.0), np.array([0.05, 0.09, 0.12, 0.2, 0.3]))
        assert valid_time(curve) == 2.0

    def test_immediate(self):
        curve = ErrorCurve(np.array([0.5, 1.5]), np.array([0.1, 0.01]))
        assert valid_time(curve) == 0.5

    def test_bad_tau(self):
        with pytest.raises(ContractError):
            valid_time(ErrorCurve([0.0], [0.0]), 0.0)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.floats(1e-3, 1), st.floats(1e-3, 1))
    def test_monotone_in_tau(self, values, t1, t2):
        lo, hi = sorted((t1, t2))
        curve = ErrorCurve(np.arange(len(values)) * 0.02, np.array(values))
        a, b = valid_time(curve, lo), valid_time(curve, hi)
        if a is None:
            assert b is None
        elif b is not None:
            assert b >= a


class TestErrorCurve:
    def test_negative_values(self):
        with pytest.raises(ContractError):
            ErrorCurve([0.0, 1.0], [0.1, -0.1])

    def test_times_increase(self):
        with pytest.raises(ContractError):
            ErrorCurve([0.0, 0.0], [0.1, 0.1])
