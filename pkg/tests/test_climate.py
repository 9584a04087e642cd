import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gravdengue.climate import (
    REFERENCE_FITS,
    CoverageWarning,
    TemperatureSeries,
    fit_sinusoid,
    load_climate,
    pct_variation,
    synthetic_series,
    write_climate,
)
from gravdengue.errors import DataFormatError, DomainError, IllConditionedError, InsufficientDataError

DAYS = np.arange(365)


def test_exact_recovery():
    f = fit_sinusoid(synthetic_series(70, 5, DAYS))
    assert f.t0 == pytest.approx(70, abs=1e-9)
    assert f.eps == pytest.approx(5, abs=1e-9)
    assert f.residual_sse < 1e-9


def test_flat_series():
    f = fit_sinusoid(TemperatureSeries(DAYS, np.full(365, 74.4)))
    assert f.t0 == pytest.approx(74.4)
    assert f.eps == pytest.approx(0, abs=1e-9)
    assert f.pct_variation == pytest.approx(0, abs=1e-9)


def test_negative_coefficient_kept_signed():
    f = fit_sinusoid(synthetic_series(60, -3, DAYS))
    assert f.coefficient == pytest.approx(-3)
    assert f.eps == pytest.approx(3)
    assert f(91.25) == pytest.approx(57)


def test_pct_variation_examples():
    assert pct_variation(63.5454, 3.5680) == pytest.approx(5.61, abs=0.005)
    assert pct_variation(65.3771, 4.5169) == pytest.approx(6.91, abs=0.005)
    assert pct_variation(74.3880, 0.1353) == pytest.approx(0.18, abs=0.005)
    assert pct_variation(50, 0) == 0
    with pytest.raises(DomainError):
        pct_variation(0, 1)
    with pytest.raises(DomainError):
        pct_variation(-5, 1)


def test_degenerate_sampling():
    # every sample falls on a zero of the sine basis
    s = TemperatureSeries(np.array([0.0, 365.0, 730.0]), np.array([60.0, 61.0, 59.0]))
    with pytest.raises(IllConditionedError), pytest.warns(CoverageWarning):
        fit_sinusoid(s)


def test_insufficient_data():
    with pytest.raises(InsufficientDataError):
        fit_sinusoid(TemperatureSeries(np.array([0.0, 200.0]), np.array([1.0, 2.0])))
    with pytest.raises(InsufficientDataError):
        fit_sinusoid(synthetic_series(70, 5, np.arange(100)))


def test_coverage_warning():
    with pytest.warns(CoverageWarning):
        fit_sinusoid(synthetic_series(70, 5, np.arange(0, 365, 3)))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fit_sinusoid(synthetic_series(70, 5, DAYS))


def test_series_validation():
    with pytest.raises(DomainError):
        TemperatureSeries(np.array([0.0, 0.0, 1.0]), np.array([1.0, 2.0, 3.0]))
    with pytest.raises(DomainError):
        TemperatureSeries(np.array([0.0, 1.0]), np.array([1.0, np.nan]))


def test_noisy_refits_unbiased():
    rng = np.random.default_rng(5)
    t0s = [fit_sinusoid(synthetic_series(65.3771, 4.5169, DAYS, noise=1.0, rng=rng)).t0 for _ in range(100)]
    assert abs(np.mean(t0s) - 65.3771) < 0.1


@settings(max_examples=40, deadline=None)
@given(t0=st.floats(30, 90), eps=st.floats(-10, 10), shift=st.floats(-20, 20))
def test_property_shift_covariance(t0, eps, shift):
    rng = np.random.default_rng(0)
    s = synthetic_series(t0, eps, DAYS, noise=0.5, rng=rng)
    a = fit_sinusoid(s)
    b = fit_sinusoid(TemperatureSeries(s.days, s.tmin + shift))
    assert b.t0 == pytest.approx(a.t0 + shift, abs=1e-9)
    assert b.coefficient == pytest.approx(a.coefficient, abs=1e-9)


def test_reference_fits_recovered_noise_free():
    for label, (t0, eps) in REFERENCE_FITS.items():
        f = fit_sinusoid(synthetic_series(t0, eps, np.arange(7 * 365), label=label))
        assert f.t0 == pytest.approx(t0, abs=1e-9)
        assert f.eps == pytest.approx(eps, abs=1e-9)


def test_climate_csv_round_trip(tmp_path):
    series = {"x": synthetic_series(70, 5, np.arange(0, 400, 1.0), noise=1, label="x"),
              "y": synthetic_series(60, 2, np.arange(3, 380, 1.0), noise=1, label="y")}
    path = tmp_path / "climate.csv"
    write_climate(path, series, 2002)
    back = load_climate(path)
    assert set(back) == {"x", "y"}
    for k in series:
        assert np.array_equal(back[k].days, series[k].days)
        assert np.array_equal(back[k].tmin, series[k].tmin)


def test_climate_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("date,patch_id,tmin_f\n2002-01-01,a,60\n2002-13-01,a,61\n")
    with pytest.raises(DataFormatError, match="line 3"):
        load_climate(p)
    p.write_text("day,patch,t\n")
    with pytest.raises(DataFormatError, match="line 1"):
        load_climate(p)
