import numpy as np
import pytest

from ringjsa import specfit
from ringjsa.errors import (
    EnvelopeError,
    InsufficientDataError,
    ParameterError,
    SpectrumParseError,
    WindowError,
)
from ringjsa.io import dwim_file
from ringjsa.specfit import (
    PowerSeries,
    Spectrum,
    dip_windows,
    find_dips,
    fit_envelope,
    fit_lorentzian_dip,
    fit_power_law,
    fit_spectrum,
    parse_power_series,
    parse_spectrum,
    synthesize_spectrum,
)

from .conftest import assert_log, write_csv

#: resonances of the 15 µm ring between 1525 and 1580 nm
COMB = (1532.4, 1542.2, 1552.0, 1561.9, 1571.9)


def _dip(extinction=0.0, q=40800, noise=0.0, seed=None):
    lam = np.arange(1551.6, 1552.4, 0.002)
    return synthesize_spectrum(lam, [(1552.0, q, extinction)], noise=noise, seed=seed)


def _broadband(bell=None, extinction=0.0, noise=0.0):
    lam = np.arange(1525.0, 1580.0, 0.002)
    dips = [(lambda0, 40800, extinction) for lambda0 in COMB]
    return synthesize_spectrum(lam, dips, bell=bell, noise=noise, seed=1)


def test_parse_spectrum(tmp_path):
    lam = 1550 + np.arange(1000) * 0.002
    fpath = write_csv(
        tmp_path / "spec.csv", lam, np.ones(1000), header="wavelength,transmission"
    )
    spec = parse_spectrum(fpath)
    assert spec.wavelength.size == 1000
    assert spec.resolution == pytest.approx(2.0)


def test_parse_spectrum_comments(tmp_path):
    fpath = tmp_path / "spec.csv"
    rows = [f"{1550 + k * 0.01:.3f} {0.5:.2f}" for k in range(20)]
    fpath.write_text("# swept laser\n" + "\n".join(rows) + "\n# end\n")
    assert parse_spectrum(fpath).wavelength.size == 20


@pytest.mark.parametrize(
    "edit, match",
    [
        (lambda lines: lines[:10], r"\(<16 rows\)"),
        (lambda lines: lines[:5] + [lines[3]] + lines[6:], "line 6"),
        (lambda lines: lines[:7] + ["1550.070,-0.1"] + lines[8:], "line 8"),
        (lambda lines: lines[:2] + ["1550.5,abc"] + lines[3:], "line 3"),
        (lambda lines: lines[:4] + ["1550.5,0.1,3"] + lines[5:], "line 5"),
    ],
)
def test_parse_spectrum_invalid(tmp_path, edit, match):
    lines = [f"{1550 + k * 0.01:.3f},0.9" for k in range(40)]
    fpath = tmp_path / "bad.csv"
    fpath.write_text("\n".join(edit(lines)) + "\n")
    with pytest.raises(SpectrumParseError, match=match):
        parse_spectrum(fpath)


def test_spectrum_invalid():
    with pytest.raises(ParameterError, match="increasing"):
        Spectrum([1.0, 1.0, 2.0], [1.0, 1.0, 1.0])
    with pytest.raises(ParameterError, match="≥ 0"):
        Spectrum([1.0, 2.0], [1.0, -1.0])


@pytest.mark.parametrize("extinction", [0.0, 0.1, 0.3])
def test_fit_dip_noiseless(extinction):
    spec = _dip(extinction)
    fit = fit_lorentzian_dip(spec, (1551.6, 1552.4))
    assert fit.q == pytest.approx(40800, rel=5e-3)
    assert fit.lambda0 == pytest.approx(1552.0, abs=1e-4)
    assert fit.extinction == pytest.approx(extinction, abs=0.01)
    assert fit.fwhm == pytest.approx(1552.0 / 40800, rel=5e-3)
    assert fit.residual_rms < 1e-6
    assert fit.method == "covariance"


@pytest.mark.parametrize("extinction", [0.0, 0.1, 0.3])
@pytest.mark.parametrize("q", [1e4, 4e4, 1e5])
def test_fit_dip_q_recovery(q, extinction):
    fit = fit_lorentzian_dip(_dip(extinction, q=q), (1551.6, 1552.4))
    assert fit.q == pytest.approx(q, rel=5e-3)
    assert np.isfinite(fit.q_err)


def test_fit_dip_noiseless_errors():
    fit = fit_lorentzian_dip(_dip(0.1), (1551.6, 1552.4))
    assert np.isfinite(fit.q_err) and fit.q_err >= 0
    assert np.isfinite(fit.lambda0_err) and np.isfinite(fit.extinction_err)


def test_fit_dip_singular_covariance(caplog, monkeypatch):
    def singular(lam, trans, p0):
        popt, _ = specfit_fit(lam, trans, p0)
        return popt, np.full((3, 3), np.inf)

    specfit_fit = specfit._fit_dip
    monkeypatch.setattr(specfit, "_fit_dip", singular)
    fit = fit_lorentzian_dip(_dip(0.1, noise=0.005, seed=2), (1551.6, 1552.4))
    assert_log(caplog, "covariance not estimated", "WARNING")
    assert np.isfinite(fit.q_err) and 0 < fit.q_err < 0.05 * fit.q
    assert np.isfinite(fit.lambda0_err) and fit.lambda0_err > 0

    exact = fit_lorentzian_dip(_dip(0.1), (1551.6, 1552.4))
    assert exact.q == pytest.approx(40800, rel=5e-3)
    assert np.isfinite(exact.q_err)


def test_fit_dip_noise():
    qs = [
        fit_lorentzian_dip(_dip(0.1, noise=0.01, seed=s), (1551.6, 1552.4)).q
        for s in range(100)
    ]
    rms = np.sqrt(np.mean((np.asarray(qs) / 40800 - 1) ** 2))
    assert rms <= 0.05


def test_fit_dip_bootstrap():
    spec = _dip(0.1, noise=0.01, seed=3)
    fit = fit_lorentzian_dip(spec, (1551.6, 1552.4), bootstrap=50, seed=0)
    assert fit.method.startswith("bootstrap(")
    assert 0 < fit.q_err < 0.1 * fit.q
    again = fit_lorentzian_dip(spec, (1551.6, 1552.4), bootstrap=50, seed=0)
    assert again.q_err == fit.q_err


@pytest.mark.parametrize(
    "intrinsic_q, expected", [(None, "indeterminate"), (200000, "over")]
)
def test_fit_dip_regime(intrinsic_q, expected):
    fit = fit_lorentzian_dip(_dip(0.3), (1551.6, 1552.4), intrinsic_q=intrinsic_q)
    assert fit.regime == expected


def test_fit_dip_windows():
    lam = np.arange(1551.6, 1552.4, 0.002)
    two = synthesize_spectrum(lam, [(1551.8, 40800, 0.0), (1552.2, 40800, 0.0)])
    with pytest.raises(WindowError, match="2 dips"):
        fit_lorentzian_dip(two, (1551.6, 1552.4))
    flat = synthesize_spectrum(lam, [])
    with pytest.raises(WindowError, match="no dip"):
        fit_lorentzian_dip(flat, (1551.6, 1552.4))
    with pytest.raises(WindowError, match="points"):
        fit_lorentzian_dip(_dip(), (1551.999, 1552.001))


def test_find_dips_and_windows():
    spec = _broadband()
    dips = find_dips(spec)
    assert len(dips) == len(COMB)
    assert np.allclose(spec.wavelength[dips], COMB, atol=0.01)
    windows = dip_windows(spec, dips)
    for (lo, hi), lambda0 in zip(windows, COMB):
        assert lo < lambda0 < hi
        assert hi - lo == pytest.approx(0.76, abs=0.1)


def test_envelope_flat():
    envelope, flat = fit_envelope(_broadband())
    assert envelope(1547.0) == pytest.approx(1, abs=1e-3)
    assert np.all(flat.transmission <= 1.5)


def test_envelope_bell():
    spec = _broadband(bell=(1550.0, 15.0, 0.3))
    envelope, flat = fit_envelope(spec)
    assert envelope.center == pytest.approx(1550.0, abs=0.5)
    assert envelope(1550.0) == pytest.approx(0.3, rel=1e-2)
    assert flat.transmission[np.searchsorted(flat.wavelength, 1547.0)] == pytest.approx(
        1, abs=1e-2
    )
    assert envelope.to_dict()["center"] == envelope.center


def test_envelope_too_few_dips():
    lam = np.arange(1545.0, 1560.0, 0.002)
    spec = synthesize_spectrum(lam, [(1552.0, 40800, 0.0)])
    with pytest.raises(EnvelopeError, match="manual baseline"):
        fit_envelope(spec)


def test_fit_spectrum():
    spec = _broadband(bell=(1550.0, 15.0, 0.3), extinction=0.1)
    envelope, fits = fit_spectrum(spec)
    assert len(fits) == len(COMB)
    for fit, lambda0 in zip(fits, COMB):
        assert fit.lambda0 == pytest.approx(lambda0, abs=1e-3)
        assert fit.q == pytest.approx(40800, rel=0.01)
        assert fit.extinction == pytest.approx(0.1, abs=0.02)
        assert fit.to_dict()["window"][0] < fit.lambda0


@pytest.fixture
def drive():
    return np.linspace(1, 10, 10)


def test_power_law_quadratic(drive):
    fit = fit_power_law(PowerSeries(drive, 3 * drive**2))
    assert fit.exponent == pytest.approx(2, abs=1e-9)
    assert fit.prefactor == pytest.approx(3, rel=1e-9)
    assert fit.threshold is None
    assert fit.retained == 10


def test_power_law_saturation(drive):
    response = drive**2
    response[-2:] *= 0.6
    fit = fit_power_law(PowerSeries(drive, response))
    assert fit.exponent == pytest.approx(2, abs=1e-6)
    assert fit.threshold == 8
    assert fit.retained == 8
    assert fit.to_dict()["saturation_index"] == 8


def test_power_law_isolated_low_point():
    drive = np.arange(1.0, 10.0)
    response = drive**2
    response[5] *= 0.6
    fit = fit_power_law(PowerSeries(drive, response))
    assert fit.threshold is None
    assert fit.retained == 9


def test_power_law_drop_limit(drive):
    response = drive**2
    response[-5:] *= 0.3
    fit = fit_power_law(PowerSeries(drive, response))
    assert fit.retained >= drive.size - drive.size // 3


def test_power_law_scale_invariance(drive):
    response = drive**2.1 * (1 + 0.01 * np.sin(drive))
    ref = fit_power_law(PowerSeries(drive, response)).exponent
    assert fit_power_law(PowerSeries(7 * drive, response)).exponent == pytest.approx(
        ref, abs=1e-9
    )
    assert fit_power_law(PowerSeries(drive, 3 * response)).exponent == pytest.approx(
        ref, abs=1e-9
    )


def test_power_law_linear(caplog, drive):
    fit = fit_power_law(PowerSeries(drive, 5 * drive))
    assert fit.exponent == pytest.approx(1, abs=1e-9)
    assert_log(caplog, "not quadratic", "WARNING")


def test_power_law_unsorted(drive):
    order = np.random.default_rng(0).permutation(drive.size)
    fit = fit_power_law(PowerSeries(drive[order], (drive**2)[order]))
    assert fit.exponent == pytest.approx(2, abs=1e-9)


def test_power_law_insufficient():
    with pytest.raises(InsufficientDataError, match="need at least 4"):
        fit_power_law(PowerSeries([1.0, 2.0, 3.0], [1.0, 4.0, 9.0]))
    with pytest.raises(ParameterError, match="positive"):
        PowerSeries([0.0, 1.0, 2.0, 3.0], [1.0, 1.0, 4.0, 9.0])
    with pytest.raises(ParameterError, match="mode"):
        PowerSeries([1.0, 2.0], [1.0, 4.0], mode="quasi-cw")


def test_parse_power_series(caplog, tmp_path, drive):
    fpath = write_csv(tmp_path / "rates.csv", drive, drive**2)
    series = parse_power_series(fpath)
    assert series.mode == "pulsed"
    assert_log(caplog, "assuming pulsed", "WARNING")

    dwim_file(tmp_path / "rates.json", {"mode": "cw"})
    assert parse_power_series(fpath).mode == "cw"

    short = write_csv(tmp_path / "short.csv", drive[:3], drive[:3] ** 2)
    with pytest.raises(InsufficientDataError):
        parse_power_series(short)
