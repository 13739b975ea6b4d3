"""Ring resonances: comb, lineshape, linewidth and transmission

A resonance is described by its centre wavelength and loaded quality factor;
the angular linewidth (FWHM) is ``Γ = ω₀/Q`` and the photon dwell time is
``τ = 1/Γ``.  All lineshapes share the single pole Lorentzian amplitude
``L(ω) = (Γ/2) / (i(ω - ω₀) + Γ/2)``.

"""

from dataclasses import dataclass, replace
from logging import getLogger
from typing import Dict, Optional

import numpy as np

from ringjsa._types import _band_t
from ringjsa.errors import ParameterError
from ringjsa.helpers import C_UM_PS, check_finite, omega, wavelength

logger = getLogger(__name__)

REGIMES = ("under", "critical", "over")
ROLES = ("signal", "pump", "idler")
BAND_LIMITS = (1400.0, 1700.0)  # nm


@dataclass(frozen=True)
class DispersionParams:
    """Waveguide dispersion around a reference wavelength

    Attributes
    ----------
    n_eff : float
        Effective index at ``lambda_ref``

    v_g : float
        Group velocity (µm/ps)

    gvd : float
        Group velocity dispersion figure as quoted for the device, kept
        together with ``gvd_unit``; it is *not* converted to ``beta2``

    gvd_unit : str
        Unit string of ``gvd``, carried verbatim

    lambda_ref : float
        Reference wavelength (nm), a resonance of the comb

    beta2 : float
        Second order dispersion (ps²/µm) used by the comb solver

    """

    n_eff: float
    v_g: float
    lambda_ref: float = 1552.0
    gvd: float = 0.0
    gvd_unit: str = "um^2/ps"
    beta2: float = 0.0

    def __post_init__(self):
        check_finite(
            n_eff=self.n_eff,
            v_g=self.v_g,
            lambda_ref=self.lambda_ref,
            gvd=self.gvd,
            beta2=self.beta2,
        )
        if self.n_eff <= 1:
            raise ParameterError(f"n_eff={self.n_eff}: must be > 1")
        if not 0 < self.v_g < C_UM_PS:
            raise ParameterError(f"v_g={self.v_g}: must be in (0, c) µm/ps")
        if self.lambda_ref <= 0:
            raise ParameterError(f"lambda_ref={self.lambda_ref}: must be > 0")

    @property
    def n_g(self) -> float:
        return C_UM_PS / self.v_g


@dataclass(frozen=True)
class RingGeometry:
    """Ring radius (µm), coupling regime, and linewidth broadening factor"""

    radius: float
    coupling: str = "critical"
    linewidth_broadening: float = 1.0

    def __post_init__(self):
        check_finite(radius=self.radius, broadening=self.linewidth_broadening)
        if self.radius <= 0:
            raise ParameterError(f"radius={self.radius}: must be > 0")
        if self.coupling not in REGIMES:
            raise ParameterError(f"coupling={self.coupling}: not one of {REGIMES}")
        if not 1 <= self.linewidth_broadening <= 2:
            raise ParameterError(
                f"linewidth_broadening={self.linewidth_broadening}: not in [1, 2]"
            )


@dataclass(frozen=True)
class Resonance:
    """One ring mode

    Attributes
    ----------
    lambda0 : float
        Centre wavelength (nm)

    q : float
        Loaded quality factor

    extinction : float
        On-resonance power transmission, 0 at critical coupling

    role : str
        One of "signal", "pump", "idler"

    """

    lambda0: float
    q: float
    extinction: float = 0.0
    role: str = "pump"

    def __post_init__(self):
        check_finite(lambda0=self.lambda0, q=self.q, extinction=self.extinction)
        if self.lambda0 <= 0:
            raise ParameterError(f"lambda0={self.lambda0}: must be > 0")
        if self.q <= 0:
            raise ParameterError(f"q={self.q}: must be > 0")
        if not 0 <= self.extinction <= 1:
            raise ParameterError(f"extinction={self.extinction}: not in [0, 1]")
        if self.role not in ROLES:
            raise ParameterError(f"role={self.role}: not one of {ROLES}")

    @property
    def fwhm(self) -> float:
        """Linewidth in nm"""
        return self.lambda0 / self.q

    @property
    def omega0(self) -> float:
        return float(omega(self.lambda0))

    @property
    def gamma(self) -> float:
        """Angular linewidth (rad/ps)"""
        return self.omega0 / self.q

    def broadened(self, factor: float) -> "Resonance":
        """Same resonance with its linewidth multiplied by ``factor``"""
        if factor == 1:
            return self
        return replace(self, q=self.q / factor)

    def to_dict(self) -> Dict:
        return {
            "lambda0": self.lambda0,
            "q": self.q,
            "extinction": self.extinction,
            "role": self.role,
        }


def pole(omega0: float, gamma: float, w):
    """Single pole amplitude ``(Γ/2)/(i(ω-ω₀) + Γ/2)`` on angular frequencies"""
    return (gamma / 2) / (1j * (np.asarray(w) - omega0) + gamma / 2)


def lorentzian_amplitude(res: Resonance, lambda_nm, broadening: float = 1.0):
    """Complex Lorentzian field amplitude of a resonance

    Parameters
    ----------
    res : Resonance

    lambda_nm : Union[float, numpy.ndarray]
        Wavelength(s) in nm

    broadening : float (default: 1.0)
        Linewidth broadening factor, see :class:`RingGeometry`

    Returns
    -------
    Union[complex, numpy.ndarray]
        Unit modulus on resonance, ``|L|² = 1/2`` at ``±Γ/2``

    """
    res = res.broadened(broadening)
    return pole(res.omega0, res.gamma, omega(lambda_nm))


def dwell_time(res: Resonance) -> float:
    """Photon dwell time ``τ = 1/Γ = Qλ₀/(2πc)`` in ps"""
    return 1 / res.gamma


def transmission(res: Resonance, lambda_nm):
    """All-pass power transmission around a resonance

    A Lorentzian dip of depth ``1 - extinction`` and FWHM ``λ₀/Q``:
    ``T = 1 - (1 - E)/(1 + (2(λ - λ₀)/Δλ)²)``

    """
    x = 2 * (np.asarray(lambda_nm, dtype=float) - res.lambda0) / res.fwhm
    return 1 - (1 - res.extinction) / (1 + x**2)


def group_index(disp: DispersionParams) -> float:
    return disp.n_g


def fsr(
    disp: DispersionParams, geom: RingGeometry, lambda_nm: Optional[float] = None
) -> float:
    """Free spectral range in nm, ``λ²/(n_g 2πR)``"""
    lam = disp.lambda_ref if lambda_nm is None else lambda_nm
    return lam**2 / (disp.n_g * 2 * np.pi * geom.radius * 1e3)


def finesse(disp: DispersionParams, geom: RingGeometry, res: Resonance) -> float:
    """Ring finesse, FSR over linewidth at the resonance"""
    return fsr(disp, geom, res.lambda0) / res.fwhm


def mode_order(disp: DispersionParams, geom: RingGeometry) -> int:
    """Azimuthal order of the reference resonance, ``n_eff L/λ`` rounded"""
    return int(round(disp.n_eff * 2 * np.pi * geom.radius * 1e3 / disp.lambda_ref))


def _comb_offset(j, disp: DispersionParams, radius: float, beta2: float):
    # solves Δ/v_g + (β₂/2)Δ² = j/R for the root continuous with β₂ → 0
    c0 = np.asarray(j, dtype=float) / radius
    disc = 1 / disp.v_g**2 + 2 * beta2 * c0
    if np.any(disc < 0):
        raise ParameterError(f"beta2={beta2}: no resonance solution within the band")
    return 2 * c0 / (1 / disp.v_g + np.sqrt(disc))


def resonance_comb(
    disp: DispersionParams,
    geom: RingGeometry,
    band: _band_t,
    beta2: Optional[float] = None,
) -> np.ndarray:
    """Resonance wavelengths of the ring inside a band

    The propagation constant is expanded to second order around the
    reference wavelength, ``k(ω) = k_ref + Δ/v_g + (β₂/2)Δ²`` with
    ``Δ = ω - ω_ref``; the reference wavelength is taken to be a resonance,
    and neighbours satisfy ``(k(ω) - k_ref) R = j`` for integer ``j``.

    Parameters
    ----------
    disp : DispersionParams

    geom : RingGeometry

    band : Tuple[float, float]
        Wavelength interval (nm), inside [1400, 1700] nm

    beta2 : Optional[float]
        Override ``disp.beta2`` (ps²/µm)

    Returns
    -------
    numpy.ndarray
        Resonance wavelengths (nm), ascending; empty when none fall in band

    """
    lo, hi = band
    check_finite(band_lo=lo, band_hi=hi)
    if lo < BAND_LIMITS[0] or hi > BAND_LIMITS[1]:
        raise ParameterError(f"band={band}: outside {BAND_LIMITS} nm")
    if hi <= lo:
        return np.empty(0)
    beta2 = disp.beta2 if beta2 is None else beta2
    check_finite(beta2=beta2)
    w_ref = float(omega(disp.lambda_ref))
    d_lo, d_hi = float(omega(hi)) - w_ref, float(omega(lo)) - w_ref
    phase = lambda d: geom.radius * (d / disp.v_g + beta2 * d**2 / 2)  # noqa: E731
    j = np.arange(np.floor(phase(d_lo)) - 1, np.ceil(phase(d_hi)) + 2)
    w = w_ref + _comb_offset(j, disp, geom.radius, beta2)
    lam = wavelength(w)
    return np.sort(lam[(lam >= lo) & (lam <= hi)])


def comb_triplet(
    disp: DispersionParams, geom: RingGeometry, q: float, extinction: float = 0.0
) -> Dict[str, Resonance]:
    """Pump at the reference resonance, signal and idler on its neighbours

    The signal is the red neighbour, the idler the blue one.

    """
    span = 1.5 * fsr(disp, geom)
    lam = resonance_comb(disp, geom, (disp.lambda_ref - span, disp.lambda_ref + span))
    ipump = int(np.argmin(np.abs(lam - disp.lambda_ref)))
    if ipump == 0 or ipump == len(lam) - 1:
        raise ParameterError("reference resonance has no neighbours in band")
    return {
        role: Resonance(float(lam[ipump + k]), q, extinction, role)
        for role, k in (("idler", -1), ("pump", 0), ("signal", 1))
    }


def energy_mismatch(signal: Resonance, pump: Resonance, idler: Resonance) -> float:
    """Energy mismatch ``2ω_P - ω_S - ω_I`` of a triplet (rad/ps)"""
    return 2 * pump.omega0 - signal.omega0 - idler.omega0


def dispersion_mismatch(
    disp: DispersionParams, geom: RingGeometry, beta2: Optional[float] = None
) -> float:
    """Energy mismatch of the comb triplet around the reference resonance

    ``beta2`` (ps²/µm) overrides the dispersion parameter; with ``beta2 = 0``
    the comb is equidistant in frequency and the mismatch vanishes.

    """
    span = 1.5 * fsr(disp, geom)
    band = (disp.lambda_ref - span, disp.lambda_ref + span)
    lam = resonance_comb(disp, geom, band, beta2=beta2)
    w = omega(lam)
    ipump = int(np.argmin(np.abs(lam - disp.lambda_ref)))
    return float(2 * w[ipump] - w[ipump - 1] - w[ipump + 1])


def intrinsic_q(lambda_nm: float, loss_db_cm: float, n_g: float) -> float:
    """Intrinsic quality factor from propagation loss

    ``Q_i = 2π n_g / (λ α)`` with the power attenuation ``α`` in 1/m.

    """
    check_finite(loss_db_cm=loss_db_cm)
    if loss_db_cm <= 0:
        raise ParameterError(f"loss_db_cm={loss_db_cm}: must be > 0")
    alpha = loss_db_cm * 100 * np.log(10) / 10
    return float(2 * np.pi * n_g / (lambda_nm * 1e-9 * alpha))


def coupling_regime(
    extinction: float,
    q_loaded: Optional[float] = None,
    q_intrinsic: Optional[float] = None,
) -> str:
    """Coupling regime from the dip depth, and intrinsic Q when known

    - on-resonance transmission below 0.05: "critical"
    - with an intrinsic Q: "over" if the loaded Q is below half of it,
      "under" otherwise
    - without: "indeterminate", the power transmission of an all-pass ring
      is the same in the two regimes

    """
    if extinction < 0.05:
        return "critical"
    if q_intrinsic is not None and q_loaded is not None:
        return "over" if q_loaded < q_intrinsic / 2 else "under"
    return "indeterminate"
