"""Fits to measured transmission spectra and generation-rate scaling

- :func:`parse_spectrum` reads a two-column wavelength/transmission CSV.
- :func:`fit_envelope` removes the bell shaped grating-coupler response.
- :func:`fit_lorentzian_dip` fits one resonance: centre, Q, extinction.
- :func:`fit_power_law` fits the pair-rate exponent, excluding the
  saturated high-power points.

"""

from dataclasses import dataclass, field
from logging import getLogger
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import find_peaks, peak_widths

from ringjsa._types import _band_t, _path_t
from ringjsa.errors import (
    EnvelopeError,
    InsufficientDataError,
    ParameterError,
    SpectrumParseError,
    WindowError,
)
from ringjsa.io import read_sidecar, read_table
from ringjsa.resonator import coupling_regime

logger = getLogger(__name__)

MIN_ROWS = 16
MIN_POINTS = 4
MODES = ("pulsed", "cw")


@dataclass(frozen=True)
class Spectrum:
    """Transmission against wavelength

    Attributes
    ----------
    wavelength : numpy.ndarray
        nm, strictly increasing

    transmission : numpy.ndarray
        Linear power transmission, ≥ 0

    resolution : float
        Median wavelength step (pm)

    """

    wavelength: np.ndarray
    transmission: np.ndarray
    resolution: float = 0.0

    def __post_init__(self):
        lam = np.asarray(self.wavelength, dtype=float)
        trans = np.asarray(self.transmission, dtype=float)
        if lam.shape != trans.shape or lam.ndim != 1:
            raise ParameterError("wavelength and transmission lengths differ")
        if lam.size < 2 or np.any(np.diff(lam) <= 0):
            raise ParameterError("wavelengths must be strictly increasing")
        if np.any(trans < 0) or not np.all(np.isfinite(trans)):
            raise ParameterError("transmission must be finite and ≥ 0")
        object.__setattr__(self, "wavelength", lam)
        object.__setattr__(self, "transmission", trans)
        if not self.resolution:
            object.__setattr__(self, "resolution", float(np.median(np.diff(lam))) * 1e3)


@dataclass(frozen=True)
class FitResult:
    """Lorentzian dip fit, uncertainties are 1σ"""

    lambda0: float
    lambda0_err: float
    q: float
    q_err: float
    extinction: float
    extinction_err: float
    fwhm: float
    regime: str
    residual_rms: float
    window: _band_t = (0.0, 0.0)
    method: str = "covariance"

    def to_dict(self) -> Dict:
        fields = dict(self.__dict__)
        fields["window"] = list(self.window)
        return fields


@dataclass(frozen=True)
class PowerSeries:
    """Generation rate against pump drive, sorted by drive"""

    drive: np.ndarray
    response: np.ndarray
    mode: str = "pulsed"

    def __post_init__(self):
        drive = np.asarray(self.drive, dtype=float)
        response = np.asarray(self.response, dtype=float)
        if drive.shape != response.shape or drive.ndim != 1:
            raise ParameterError("drive and response lengths differ")
        if np.any(drive <= 0) or np.any(response <= 0):
            raise ParameterError("drive and response must be positive")
        if self.mode not in MODES:
            raise ParameterError(f"mode={self.mode}: not one of {MODES}")
        order = np.argsort(drive, kind="stable")
        object.__setattr__(self, "drive", drive[order])
        object.__setattr__(self, "response", response[order])


@dataclass(frozen=True)
class PowerLawFit:
    """``response ∝ drive^exponent`` on the retained low-drive points

    ``threshold`` is the index (in drive order) of the first excluded
    point, ``None`` when every point was kept.

    """

    exponent: float
    exponent_err: float
    prefactor: float
    threshold: Optional[int]
    retained: int
    residuals: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    def to_dict(self) -> Dict:
        return {
            "exponent": self.exponent,
            "exponent_err": self.exponent_err,
            "prefactor": self.prefactor,
            "saturation_index": self.threshold,
            "retained": self.retained,
        }


def parse_spectrum(fpath: _path_t) -> Spectrum:
    """Read a two-column (wavelength nm, linear transmission) CSV

    Lines starting with ``#`` are comments; an optional header is skipped.

    Raises
    ------
    SpectrumParseError
        Fewer than 16 rows, non-numeric or NaN entries, negative
        transmission, or wavelengths out of order; the message names the
        offending line

    """
    table, linenos = read_table(fpath, ("wavelength", "transmission"))
    if len(table) < MIN_ROWS:
        raise SpectrumParseError(f"{fpath}: {len(table)} rows (<{MIN_ROWS} rows)")
    lam = table["wavelength"].to_numpy()
    trans = table["transmission"].to_numpy()
    steps = np.diff(lam)
    if np.any(steps <= 0):
        i = int(np.argmax(steps <= 0)) + 1
        raise SpectrumParseError(
            f"wavelength {lam[i]} not above {lam[i - 1]}: rows out of order", linenos[i]
        )
    if np.any(trans < 0):
        i = int(np.argmax(trans < 0))
        raise SpectrumParseError(f"negative transmission {trans[i]}", linenos[i])
    return Spectrum(lam, trans)


def synthesize_spectrum(
    wavelength,
    dips: Sequence[Tuple[float, float, float]],
    bell: Optional[Tuple[float, float, float]] = None,
    noise: float = 0.0,
    seed: Optional[int] = None,
) -> Spectrum:
    """Bell shaped envelope times Lorentzian dips, with optional noise

    Parameters
    ----------
    wavelength : numpy.ndarray
        nm

    dips : Sequence[Tuple[float, float, float]]
        ``(lambda0, q, extinction)`` of each resonance

    bell : Optional[Tuple[float, float, float]]
        ``(center nm, rms width nm, peak)`` of a Gaussian envelope; flat and
        unity when omitted

    noise : float
        rms of additive Gaussian noise, relative to the local envelope

    seed : Optional[int]
        Random seed for the noise

    """
    lam = np.asarray(wavelength, dtype=float)
    trans = np.ones_like(lam)
    for lambda0, q, ext in dips:
        x = 2 * (lam - lambda0) * q / lambda0
        trans *= 1 - (1 - ext) / (1 + x**2)
    envelope = np.ones_like(lam)
    if bell is not None:
        center, width, peak = bell
        envelope = peak * np.exp(-((lam - center) ** 2) / (2 * width**2))
    if noise:
        trans = trans + np.random.default_rng(seed).normal(0, noise, lam.shape)
    return Spectrum(lam, np.clip(trans * envelope, 0, None))


@dataclass(frozen=True)
class Envelope:
    """Gaussian bell ``exp(c₀ + c₁x + c₂x²)``, ``x = (λ - offset)/scale``"""

    coefficients: np.ndarray
    offset: float
    scale: float
    iterations: int = 0

    def __call__(self, lambda_nm) -> np.ndarray:
        x = (np.asarray(lambda_nm) - self.offset) / self.scale
        return np.exp(np.polynomial.polynomial.polyval(x, self.coefficients))

    @property
    def center(self) -> float:
        """Bell centre (nm); infinite for a flat or concave-up envelope"""
        _, c1, c2 = self.coefficients
        if c2 >= 0:
            return float("inf") if c1 >= 0 else float("-inf")
        return float(self.offset - self.scale * c1 / (2 * c2))

    def to_dict(self) -> Dict:
        return {
            "coefficients": self.coefficients.tolist(),
            "offset": self.offset,
            "scale": self.scale,
            "center": self.center,
            "iterations": self.iterations,
        }


def find_dips(
    spec: Spectrum, prominence: float = 0.2, depth: Optional[float] = None
) -> np.ndarray:
    """Indices of resonance dips

    Dips are peaks of ``1 - T/max(T)`` with the given prominence; ``depth``
    further requires ``1 - T/max(T) ≥ depth``.

    """
    inverted = 1 - spec.transmission / spec.transmission.max()
    peaks, _ = find_peaks(inverted, prominence=prominence, height=depth)
    return peaks


def dip_windows(spec: Spectrum, dips: np.ndarray, width_factor: float = 10.0):
    """Fit window around each dip

    ``±width_factor`` dip widths (at least 8 samples), not reaching beyond
    the midpoints to the neighbouring dips.

    """
    inverted = 1 - spec.transmission / spec.transmission.max()
    widths = peak_widths(inverted, dips, rel_height=0.5)[0]
    lam = spec.wavelength
    windows = []
    for k, (i, w) in enumerate(zip(dips, widths)):
        half = max(width_factor * w, 8) * spec.resolution * 1e-3
        lo, hi = lam[i] - half, lam[i] + half
        if k > 0:
            lo = max(lo, (lam[dips[k - 1]] + lam[i]) / 2)
        if k < len(dips) - 1:
            hi = min(hi, (lam[dips[k + 1]] + lam[i]) / 2)
        windows.append((float(lo), float(hi)))
    return windows


def fit_envelope(
    spec: Spectrum,
    *,
    clip: float = 2.0,
    max_iter: int = 20,
    min_dips: int = 3,
    floor: float = 1e-4,
) -> Tuple[Envelope, Spectrum]:
    """Fit the grating coupler envelope and flatten the spectrum

    A Gaussian (a parabola in log transmission) is fitted to the upper
    envelope; points more than ``clip`` standard deviations (at least
    ``floor``) below the fit are excluded and the fit repeated until the
    excluded set settles or ``max_iter`` is reached.

    Returns
    -------
    Tuple[Envelope, Spectrum]
        Envelope, and transmission/envelope clipped to [0, 1.5]

    Raises
    ------
    EnvelopeError
        Fewer than ``min_dips`` dips, or a fit that does not converge

    """
    dips = find_dips(spec)
    if len(dips) < min_dips:
        raise EnvelopeError(
            f"{len(dips)} resonance dips found, need {min_dips} to fit the "
            "envelope; provide a manual baseline"
        )
    lam, trans = spec.wavelength, spec.transmission
    offset, scale = float(lam.mean()), float(np.ptp(lam) / 2)
    x = (lam - offset) / scale
    positive = trans > 0
    logt = np.log(np.where(positive, trans, 1.0))
    mask = positive.copy()
    coeffs = np.zeros(3)
    for iteration in range(1, max_iter + 1):
        if mask.sum() < 3:
            break
        coeffs = np.polynomial.polynomial.polyfit(x[mask], logt[mask], 2)
        resid = logt - np.polynomial.polynomial.polyval(x, coeffs)
        sigma = resid[mask].std()
        new_mask = positive & (resid > -max(clip * sigma, floor))
        if np.array_equal(new_mask, mask):
            break
        mask = new_mask
    else:
        logger.warning(f"envelope clipping not converged in {max_iter} iterations")
    if not np.all(np.isfinite(coeffs)) or mask.sum() < 0.5 * lam.size:
        raise EnvelopeError(
            "envelope fit did not converge (too few points left after "
            "clipping); provide a manual baseline"
        )
    envelope = Envelope(coeffs, offset, scale, iteration)
    flat = np.clip(trans / envelope(lam), 0, 1.5)
    logger.info(f"envelope centre {envelope.center:.2f} nm, {iteration} iterations")
    return envelope, Spectrum(lam, flat, spec.resolution)


def _dip_model(lam, lambda0, width, extinction):
    return 1 - (1 - extinction) / (1 + (2 * (lam - lambda0) / width) ** 2)


def _initial_guess(lam: np.ndarray, trans: np.ndarray, imin: int):
    floor = max(float(trans[imin]), 0.0)
    level = (1 + floor) / 2
    left, right = imin, imin
    while left > 0 and trans[left - 1] < level:
        left -= 1
    while right < lam.size - 1 and trans[right + 1] < level:
        right += 1
    step = float(np.median(np.diff(lam)))
    width = max(float(lam[right] - lam[left]), step)
    return [float(lam[imin]), width, floor]


def _fit_dip(lam, trans, p0):
    popt, pcov = curve_fit(_dip_model, lam, trans, p0=p0, method="lm", maxfev=5000)
    return popt, pcov


def _jacobian_covariance(x, popt, resid) -> np.ndarray:
    """``s² (JᵀJ)⁺`` from a forward-difference Jacobian, zero for a perfect fit"""
    npar = len(popt)
    ssr = float(np.sum(resid**2))
    if ssr == 0.0:
        return np.zeros((npar, npar))
    base = _dip_model(x, *popt)
    jac = np.empty((x.size, npar))
    for i, p in enumerate(popt):
        step = 1e-8 * max(abs(p), 1e-12)
        shifted = np.array(popt, dtype=float)
        shifted[i] += step
        jac[:, i] = (_dip_model(x, *shifted) - base) / step
    s2 = ssr / max(x.size - npar, 1)
    return s2 * np.linalg.pinv(jac.T @ jac)


def _q_uncertainty(popt, pcov) -> float:
    lambda0, width = popt
    q = lambda0 / width
    rel = (
        pcov[0, 0] / lambda0**2
        + pcov[1, 1] / width**2
        - 2 * pcov[0, 1] / (lambda0 * width)
    )
    return float(abs(q) * np.sqrt(max(rel, 0.0)))


def fit_lorentzian_dip(
    spec: Spectrum,
    window: _band_t,
    *,
    intrinsic_q: Optional[float] = None,
    bootstrap: int = 0,
    seed: Optional[int] = None,
) -> FitResult:
    """Fit a single Lorentzian dip in a wavelength window

    ``T(λ) = 1 - (1 - E)/(1 + (2(λ - λ₀)/Δλ)²)`` is fitted with
    Levenberg-Marquardt, starting from the minimum (λ₀), the half-depth
    width (Δλ) and the floor (E); ``Q = λ₀/Δλ``.

    Parameters
    ----------
    spec : Spectrum
        Flattened spectrum (see :func:`fit_envelope`)

    window : Tuple[float, float]
        Wavelength interval (nm) with exactly one dip below 0.8

    intrinsic_q : Optional[float]
        Known intrinsic Q, separates under from over coupling

    bootstrap : int (default: 0)
        Number of residual bootstrap resamples; when non-zero the
        uncertainties are the bootstrap standard deviations

    seed : Optional[int]
        Random seed for the bootstrap

    Raises
    ------
    WindowError
        No dip, more than one dip, too few points, or no convergence

    """
    mask = (spec.wavelength >= window[0]) & (spec.wavelength <= window[1])
    lam, trans = spec.wavelength[mask], spec.transmission[mask]
    if lam.size < 8:
        raise WindowError(f"window {window}: {lam.size} points, need at least 8")
    dips, _ = find_peaks(1 - trans, height=0.2, prominence=0.2)
    if len(dips) == 0:
        raise WindowError(f"window {window}: no dip below 0.8")
    if len(dips) > 1:
        raise WindowError(f"window {window}: {len(dips)} dips, expected one")
    origin = float(lam[dips[0]])
    x = lam - origin
    p0 = _initial_guess(x, trans, int(dips[0]))
    try:
        popt, pcov = _fit_dip(x, trans, p0)
    except RuntimeError as err:
        raise WindowError(f"window {window}: fit did not converge ({err})") from None
    popt[1] = abs(popt[1])
    model = _dip_model(x, *popt)
    resid = trans - model
    method = "covariance"
    if bootstrap:
        rng = np.random.default_rng(seed)
        samples = []
        for _ in range(bootstrap):
            fake = model + rng.choice(resid, resid.size, replace=True)
            try:
                samples.append(_fit_dip(x, fake, popt)[0])
            except RuntimeError:
                continue
        if len(samples) < 2:
            raise WindowError(f"window {window}: bootstrap fits did not converge")
        draws = np.asarray(samples)
        draws[:, 1] = np.abs(draws[:, 1])
        errs = draws.std(axis=0, ddof=1)
        q_err = float(((draws[:, 0] + origin) / draws[:, 1]).std(ddof=1))
        method = f"bootstrap({len(samples)})"
    else:
        if not np.all(np.isfinite(pcov)):
            logger.warning(
                f"window {window}: covariance not estimated, using the residual "
                "scaled Jacobian"
            )
            pcov = _jacobian_covariance(x, popt, resid)
        errs = np.sqrt(np.abs(np.diag(pcov)))
        q_err = _q_uncertainty((popt[0] + origin, popt[1]), pcov)
    shift, width, extinction = map(float, popt)
    lambda0 = origin + shift
    q = lambda0 / width
    regime = coupling_regime(max(extinction, 0.0), q, intrinsic_q)
    return FitResult(
        lambda0=lambda0,
        lambda0_err=float(errs[0]),
        q=q,
        q_err=q_err,
        extinction=extinction,
        extinction_err=float(errs[2]),
        fwhm=width,
        regime=regime,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        window=(float(window[0]), float(window[1])),
        method=method,
    )


def fit_spectrum(spec: Spectrum, **kwargs) -> Tuple[Envelope, List[FitResult]]:
    """Envelope and every dip of a raw transmission spectrum

    Keyword arguments are passed on to :func:`fit_lorentzian_dip`.

    """
    envelope, flat = fit_envelope(spec)
    dips = find_dips(flat, depth=0.2)
    if len(dips) == 0:
        raise WindowError("no resonance dips in the flattened spectrum")
    results = [
        fit_lorentzian_dip(flat, window, **kwargs)
        for window in dip_windows(flat, dips)
    ]
    return envelope, results


def parse_power_series(fpath: _path_t) -> PowerSeries:
    """Read a drive/response CSV, ``mode`` comes from the JSON sidecar"""
    table, _ = read_table(fpath, ("drive", "response"))
    meta = read_sidecar(fpath)
    mode = meta.get("mode")
    if mode is None:
        logger.warning(f"{fpath}: no 'mode' in sidecar, assuming pulsed")
        mode = "pulsed"
    drive = table["drive"].to_numpy()
    response = table["response"].to_numpy()
    if len(drive) < MIN_POINTS:
        raise InsufficientDataError(f"{fpath}: {len(drive)} points, need {MIN_POINTS}")
    return PowerSeries(drive, response, mode)


def _loglog_fit(x: np.ndarray, y: np.ndarray):
    coeffs, cov = np.polyfit(x, y, 1, cov=True)
    resid = y - np.polyval(coeffs, x)
    dof = max(x.size - 2, 1)
    return coeffs, cov, resid, float(np.sqrt(np.sum(resid**2) / dof))


def fit_power_law(
    series: PowerSeries, nsigma: float = 3.0, min_sigma: float = 0.01
) -> PowerLawFit:
    """Power law exponent with exclusion of the saturated tail

    The fit is done on log-log axes.  Starting from all points, the top
    ``m`` drives (``m = 1 .. ⌊n/3⌋``) are compared with the fit to the
    drives below them; when every one of them lies further than
    ``nsigma × max(σ, min_sigma)`` from that fit (σ the residual rms in
    natural log units of the lower fit) the block is dropped and the
    search repeats on what is left.  At most ``⌊n/3⌋`` points are dropped
    and at least four are kept.

    Raises
    ------
    InsufficientDataError
        Fewer than four points

    """
    n = series.drive.size
    if n < MIN_POINTS:
        raise InsufficientDataError(f"{n} points, need at least {MIN_POINTS}")
    x, y = np.log(series.drive), np.log(series.response)
    keep, budget = n, n // 3
    dropped = True
    while dropped and budget > 0:
        dropped = False
        for m in range(1, budget + 1):
            if keep - m < MIN_POINTS:
                break
            coeffs, _, _, sigma = _loglog_fit(x[: keep - m], y[: keep - m])
            r = y[keep - m : keep] - np.polyval(coeffs, x[keep - m : keep])
            if np.all(np.abs(r) > nsigma * max(sigma, min_sigma)):
                keep -= m
                budget -= m
                dropped = True
                break
    threshold = keep if keep < n else None
    coeffs, cov, resid, _ = _loglog_fit(x[:keep], y[:keep])
    exponent = float(coeffs[0])
    err = float(np.sqrt(max(cov[0, 0], 0.0)))
    if threshold is not None:
        drive = series.drive[threshold]
        logger.info(f"saturation from point {threshold}, drive {drive:.4g}")
    if abs(exponent - 2) > 3 * err + 0.1:
        logger.warning(
            f"exponent {exponent:.3f} ± {err:.3f}: not quadratic, pair generation "
            "is not the dominant process"
        )
    return PowerLawFit(exponent, err, float(np.exp(coeffs[1])), threshold, keep, resid)
