"""Pump and seed spectral envelopes

Envelopes are sampled on angular frequency offsets (rad/ps) from a centre
wavelength.  Constructors return amplitudes normalised so that
``∫|α(ω)|² dω = 1`` with the trapezoid rule on their own grid.

"""

from dataclasses import dataclass, field, replace
from logging import getLogger
from typing import Dict, Optional

import numpy as np
from scipy.integrate import trapezoid

from ringjsa.errors import (
    CoverageError,
    EmptySpectrumError,
    ParameterError,
    ResolutionError,
)
from ringjsa.helpers import check_finite, fwhm, omega, omega_to_pm, pm_to_omega
from ringjsa.helpers import strictly_increasing

logger = getLogger(__name__)

KINDS = ("pulsed-gaussian", "cw-line")
LINESHAPES = ("lorentzian", "gaussian")
#: how a cw coherence time sets the line widths, see :attr:`PumpSpec.bandwidth`
LINE_CONVENTIONS = ("angular", "field")
NORMS = ("unit-integral", "unnormalized")
_LN2 = np.log(2)


@dataclass(frozen=True)
class SpectralAmplitude:
    """Complex spectral amplitude on a grid of angular frequency offsets

    Attributes
    ----------
    center : float
        Centre wavelength (nm), the origin of ``offsets``

    offsets : numpy.ndarray
        Angular frequency offsets (rad/ps), strictly increasing

    amplitude : numpy.ndarray
        Complex amplitude at each offset

    norm : str
        "unit-integral" or "unnormalized"

    line : str
        Origin of the envelope: "pulsed", "cw", or "custom"; a "cw" line has
        to stay resolved on its grid

    """

    center: float
    offsets: np.ndarray
    amplitude: np.ndarray
    norm: str = "unnormalized"
    line: str = "custom"
    meta: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=float)
        amplitude = np.asarray(self.amplitude, dtype=complex)
        if offsets.ndim != 1 or offsets.shape != amplitude.shape:
            raise ParameterError("offsets and amplitude must be 1-D of equal length")
        if not strictly_increasing(offsets):
            raise ParameterError("frequency offsets must be strictly increasing")
        if self.norm not in NORMS:
            raise ParameterError(f"norm={self.norm}: not one of {NORMS}")
        offsets.flags.writeable = False
        amplitude.flags.writeable = False
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "amplitude", amplitude)

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    @property
    def step(self) -> float:
        return float(np.min(np.diff(self.offsets)))

    def integral(self) -> float:
        """``∫|α|² dω`` on the sample grid"""
        return float(trapezoid(self.power, self.offsets))

    def normalized(self) -> "SpectralAmplitude":
        total = self.integral()
        if not total > 0:
            raise EmptySpectrumError("spectrum has no content to normalise")
        return replace(
            self, amplitude=self.amplitude / np.sqrt(total), norm="unit-integral"
        )

    def __call__(self, offsets) -> np.ndarray:
        """Linear interpolation of the complex amplitude, zero off the grid"""
        kw = {"left": 0.0, "right": 0.0}
        re = np.interp(offsets, self.offsets, self.amplitude.real, **kw)
        im = np.interp(offsets, self.offsets, self.amplitude.imag, **kw)
        return re + 1j * im


@dataclass(frozen=True)
class PumpSpec:
    """Pump laser description

    A pulsed pump is given by its power-spectrum FWHM, a cw pump by its
    coherence time.  Pulse duration, energy, repetition rate and cw power
    are metadata for the normalised amplitude, they are only used by the
    power scaling analysis.

    Attributes
    ----------
    kind : str
        "pulsed-gaussian" or "cw-line"

    lambda_p : float
        Centre wavelength (nm)

    spectral_fwhm : Optional[float]
        Power spectrum FWHM (pm), pulsed only

    coherence_time : Optional[float]
        Coherence time (µs), cw only

    pulse_energy, rep_rate, pulse_duration : Optional[float]
        pJ, MHz and ps (pulsed)

    power : Optional[float]
        Average power (µW, cw)

    lineshape : str
        cw line shape, "lorentzian" (default) or "gaussian"

    chirp : float
        Quadratic spectral phase coefficient (ps²), ``exp(i chirp ν²/2)``

    line_convention : str
        cw only, "angular" (default) or "field"; see :attr:`bandwidth`

    """

    kind: str
    lambda_p: float
    spectral_fwhm: Optional[float] = None
    coherence_time: Optional[float] = None
    pulse_energy: Optional[float] = None
    rep_rate: Optional[float] = None
    pulse_duration: Optional[float] = None
    power: Optional[float] = None
    lineshape: str = "lorentzian"
    chirp: float = 0.0
    line_convention: str = "angular"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"kind={self.kind}: not one of {KINDS}")
        if self.lineshape not in LINESHAPES:
            raise ParameterError(f"lineshape={self.lineshape}: not one of {LINESHAPES}")
        if self.line_convention not in LINE_CONVENTIONS:
            raise ParameterError(
                f"line_convention={self.line_convention}: not one of {LINE_CONVENTIONS}"
            )
        width = "spectral_fwhm" if self.kind == "pulsed-gaussian" else "coherence_time"
        other = "coherence_time" if width == "spectral_fwhm" else "spectral_fwhm"
        if getattr(self, width) is None or getattr(self, other) is not None:
            raise ParameterError(f"{self.kind} pump: set {width} and not {other}")
        check_finite(lambda_p=self.lambda_p, chirp=self.chirp)
        for name in (
            "lambda_p",
            width,
            "pulse_energy",
            "rep_rate",
            "pulse_duration",
            "power",
        ):
            value = getattr(self, name)
            if value is not None and not (np.isfinite(value) and value > 0):
                raise ParameterError(f"{name}={value}: must be finite and > 0")

    @property
    def is_cw(self) -> bool:
        return self.kind == "cw-line"

    @property
    def _pair_factor(self) -> float:
        # FWHM of |α * α|² over FWHM of |α|²
        if self.is_cw and self.lineshape == "lorentzian":
            return 2.0
        return float(np.sqrt(2))

    @property
    def bandwidth(self) -> float:
        """Angular FWHM of the pump power spectrum ``|α|²`` (rad/ps)

        A cw coherence time ``τ_c`` is quoted with the line width
        ``1/(π τ_c)``.  With ``line_convention = "field"`` that is the laser
        line, ``Δν = 1/(π τ_c)`` or ``Δω = 2/τ_c``, and the two-photon line
        ``|α * α|²`` is twice as broad.  With "angular" the figure is the
        angular FWHM of the two-photon line itself (:attr:`pair_bandwidth`)
        and the laser line is narrower by the self-convolution factor.

        """
        if not self.is_cw:
            return float(pm_to_omega(self.spectral_fwhm, self.lambda_p))
        tau = self.coherence_time * 1e6  # type: ignore[operator]
        if self.line_convention == "field":
            return 2 / tau
        return 1 / (np.pi * tau) / self._pair_factor

    @property
    def pair_bandwidth(self) -> float:
        """Angular FWHM of the two-photon line ``|α * α|²`` (rad/ps)

        2× :attr:`bandwidth` for a Lorentzian cw line, √2× for Gaussian
        envelopes.

        """
        return self.bandwidth * self._pair_factor

    def to_dict(self) -> Dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def _gaussian(nu, width: float):
    # amplitude whose power spectrum has FWHM ``width``
    return np.exp(-2 * _LN2 * (np.asarray(nu) / width) ** 2)


def _chirped(amplitude, nu, chirp: float):
    if chirp == 0:
        return amplitude.astype(complex)
    return amplitude * np.exp(0.5j * chirp * np.asarray(nu) ** 2)


def gaussian_pulse_spectrum(spec: PumpSpec, grid) -> SpectralAmplitude:
    """Gaussian pulse envelope with the requested power-spectrum FWHM

    Parameters
    ----------
    spec : PumpSpec
        A "pulsed-gaussian" pump

    grid : numpy.ndarray
        Angular frequency offsets (rad/ps), must span at least ±3 FWHM

    Returns
    -------
    SpectralAmplitude
        Unit-integral amplitude, real and positive unless chirped

    Raises
    ------
    CoverageError
        If the grid is too narrow for the normalisation to hold

    """
    if spec.kind != "pulsed-gaussian":
        raise ParameterError(f"{spec.kind}: not a pulsed pump")
    grid = np.asarray(grid, dtype=float)
    width = spec.bandwidth
    if grid[0] > -3 * width or grid[-1] < 3 * width:
        raise CoverageError(
            f"grid [{grid[0]:.4g}, {grid[-1]:.4g}] rad/ps does not cover "
            f"±3 FWHM = ±{3 * width:.4g} rad/ps"
        )
    amp = _chirped(_gaussian(grid, width), grid, spec.chirp)
    meta = {"pump": spec.to_dict()}
    alpha = SpectralAmplitude(spec.lambda_p, grid, amp, line="pulsed", meta=meta)
    return alpha.normalized()


def cw_line_spectrum(spec: PumpSpec, grid, min_samples: int = 8) -> SpectralAmplitude:
    """Finite coherence cw line

    The Lorentzian amplitude ``(γ/2)/(iν + γ/2)``, ``γ`` the power FWHM
    :attr:`PumpSpec.bandwidth`, has an exponential field correlation.  With
    the "field" convention ``γ = 2/τ_c`` (``Δν = 1/(π τ_c)``, 318 kHz at
    1 µs).  The Gaussian line (``lineshape = "gaussian"``) has the same power
    FWHM.

    Parameters
    ----------
    spec : PumpSpec
        A "cw-line" pump

    grid : numpy.ndarray
        Angular frequency offsets (rad/ps)

    min_samples : int (default: 8)
        Samples required inside one line FWHM

    Raises
    ------
    ResolutionError
        When the grid does not resolve the line; narrow lines on resonance
        scale grids need :func:`ringjsa.schmidt.purity_banded_cw`

    """
    if not spec.is_cw:
        raise ParameterError(f"{spec.kind}: not a cw pump")
    grid = np.asarray(grid, dtype=float)
    width = spec.bandwidth
    inside = int(np.count_nonzero(np.abs(grid) <= width / 2))
    if inside < min_samples:
        raise ResolutionError(
            f"cw line (FWHM {width:.3g} rad/ps) has {inside} < {min_samples} "
            "samples per linewidth; use the two-scale path "
            "(ringjsa.schmidt.purity_banded_cw)"
        )
    if spec.lineshape == "gaussian":
        amp = _gaussian(grid, width)
    else:
        amp = (width / 2) / (1j * grid + width / 2)
    amp = _chirped(amp, grid, spec.chirp)
    meta = {"pump": spec.to_dict()}
    alpha = SpectralAmplitude(spec.lambda_p, grid, amp, line="cw", meta=meta)
    return alpha.normalized()


def pump_grid(spec: PumpSpec, points: int = 256, span: float = 4.0) -> np.ndarray:
    """Symmetric offset grid of ``±span`` pump FWHM with an odd point count"""
    if points < 16:
        raise ParameterError(f"points={points}: need at least 16")
    points += 1 - points % 2
    width = spec.bandwidth
    return np.linspace(-span * width, span * width, points)


@dataclass(frozen=True)
class BandPass:
    """Band-pass filter: centre (nm), power FWHM (pm), and shape"""

    center: float
    fwhm: float
    shape: str = "gaussian"

    def __post_init__(self):
        check_finite(center=self.center, fwhm=self.fwhm)
        if self.fwhm <= 0:
            raise ParameterError(f"fwhm={self.fwhm}: must be > 0")
        if self.shape not in ("gaussian", "super-gaussian-4"):
            raise ParameterError(f"shape={self.shape}: unknown filter shape")

    def response(self, offsets, lambda_c: float) -> np.ndarray:
        """Amplitude response on offsets (rad/ps) from ``lambda_c``"""
        x = np.asarray(offsets) - (float(omega(self.center)) - float(omega(lambda_c)))
        u = 2 * x / float(pm_to_omega(self.fwhm, self.center))
        order = 2 if self.shape == "gaussian" else 4
        return np.exp(-0.5 * _LN2 * np.abs(u) ** order)


def apply_bandpass(alpha: SpectralAmplitude, bpf: BandPass) -> SpectralAmplitude:
    """Filter a spectral amplitude and renormalise it

    Raises
    ------
    EmptySpectrumError
        If the filter and the spectrum do not overlap

    """
    filtered = replace(
        alpha, amplitude=alpha.amplitude * bpf.response(alpha.offsets, alpha.center)
    )
    before = alpha.integral()
    if not filtered.integral() > 1e-12 * before:
        raise EmptySpectrumError(
            f"band-pass at {bpf.center} nm does not overlap the spectrum"
        )
    return filtered.normalized()


def spectral_fwhm(alpha: SpectralAmplitude) -> float:
    """Measured power-spectrum FWHM (rad/ps)"""
    return fwhm(alpha.offsets, alpha.power)


def spectral_centroid(alpha: SpectralAmplitude) -> float:
    """Power weighted mean offset (rad/ps)"""
    return float(
        trapezoid(alpha.offsets * alpha.power, alpha.offsets) / alpha.integral()
    )


def time_bandwidth_product(spec: PumpSpec) -> float:
    """``Δν Δt`` of a pulsed pump from its nominal duration

    The transform limit of a Gaussian pulse is ``2 ln2/π ≈ 0.441``; smaller
    values mean the quoted duration and bandwidth are not mutually
    consistent.

    """
    if spec.pulse_duration is None:
        raise ParameterError("pulse_duration not set")
    return spec.bandwidth / (2 * np.pi) * spec.pulse_duration


def transform_limited_duration(spec: PumpSpec) -> float:
    """Duration (ps FWHM) of a transform limited Gaussian pulse"""
    return 2 * _LN2 / np.pi / (spec.bandwidth / (2 * np.pi))


def bandwidth_pm(spec: PumpSpec) -> float:
    return float(omega_to_pm(spec.bandwidth, spec.lambda_p))
