"""Joint spectral amplitude of photon pairs from a resonance triplet

For spontaneous four-wave mixing in a ring, the pair amplitude is

    φ(ω_s, ω_i) = N L_s(ω_s) L_i(ω_i) C(ω_s + ω_i)

    C(Ω) = ∫ α(ω) α(Ω - ω) L_p(ω) L_p(Ω - ω) dω

with the pump envelope α, the resonance amplitudes L (see
:mod:`ringjsa.resonator`), and ``N`` normalising to
``Σ|φ|² Δω_s Δω_i = 1``.  Matrices are laid out with signal along rows and
idler along columns, both axes ascending in wavelength.

"""

from dataclasses import dataclass, field, replace
from logging import getLogger
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid
import xarray as xr

from ringjsa._types import _path_t
from ringjsa.errors import NumericError, ParameterError, ResolutionError
from ringjsa.helpers import measure_weights, omega, parallel_map, strictly_increasing
from ringjsa.io import read_matrix, read_sidecar, write_matrix, write_sidecar
from ringjsa.pump import SpectralAmplitude
from ringjsa.resonator import Resonance, energy_mismatch, pole

logger = getLogger(__name__)

_AXES = ("signal_nm", "idler_nm")


@dataclass(frozen=True)
class Triplet:
    """Signal, pump and idler resonances

    The pump sits between signal and idler; which of the two is on the red
    side is free, but it has to be consistent.

    """

    signal: Resonance
    pump: Resonance
    idler: Resonance

    def __post_init__(self):
        s, p, i = self.signal.lambda0, self.pump.lambda0, self.idler.lambda0
        if not (s > p > i or s < p < i):
            raise ParameterError(
                f"pump ({p} nm) must lie between signal ({s}) and idler ({i})"
            )

    @property
    def mismatch(self) -> float:
        """``2ω_P - ω_S - ω_I`` in rad/ps"""
        return energy_mismatch(self.signal, self.pump, self.idler)

    def broadened(self, factor: float) -> "Triplet":
        return Triplet(*(r.broadened(factor) for r in self))

    def __iter__(self):
        return iter((self.signal, self.pump, self.idler))

    def to_dict(self) -> Dict:
        return {r.role: r.to_dict() for r in self}

    @classmethod
    def from_dict(cls, conf: Dict) -> "Triplet":
        return cls(
            *(
                Resonance(**{**conf[role], "role": role})
                for role in ("signal", "pump", "idler")
            )
        )


@dataclass(frozen=True)
class JSAMatrix:
    """Complex pair amplitude on a signal × idler wavelength grid

    Attributes
    ----------
    signal, idler : numpy.ndarray
        Wavelength axes (nm), strictly increasing

    amplitude : numpy.ndarray
        Complex matrix, shape ``(len(signal), len(idler))``

    norm : str
        "unit-integral" or "unnormalized"

    meta : Dict
        Provenance: triplet, pump, flags

    """

    signal: np.ndarray
    idler: np.ndarray
    amplitude: np.ndarray
    norm: str = "unnormalized"
    meta: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        signal = np.asarray(self.signal, dtype=float)
        idler = np.asarray(self.idler, dtype=float)
        amplitude = np.asarray(self.amplitude, dtype=complex)
        if not (strictly_increasing(signal) and strictly_increasing(idler)):
            raise ParameterError("JSA axes must be strictly increasing")
        if amplitude.shape != (signal.size, idler.size):
            raise ParameterError(
                f"amplitude shape {amplitude.shape} != ({signal.size}, {idler.size})"
            )
        arrays = {"signal": signal, "idler": idler, "amplitude": amplitude}
        for name, arr in arrays.items():
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def signal_weights(self) -> np.ndarray:
        return measure_weights(self.signal)

    @property
    def idler_weights(self) -> np.ndarray:
        return measure_weights(self.idler)

    def integral(self) -> float:
        """``Σ|φ|² Δω_s Δω_i``"""
        density = np.abs(self.amplitude) ** 2
        return float(self.signal_weights @ density @ self.idler_weights)

    def normalized(self) -> "JSAMatrix":
        total = self.integral()
        if not (np.isfinite(total) and total > 0):
            raise NumericError("cannot normalise a vanishing or non-finite JSA")
        amplitude = self.amplitude / np.sqrt(total)
        return replace(self, amplitude=amplitude, norm="unit-integral")

    def to_dataarray(self, name: str = "amplitude") -> xr.DataArray:
        return xr.DataArray(
            self.amplitude,
            coords={"signal": self.signal, "idler": self.idler},
            dims=("signal", "idler"),
            name=name,
            attrs={"norm": self.norm},
        )


def build_grid(
    triplet: Triplet, span_linewidths: float = 5.0, n: int = 512
) -> Tuple[np.ndarray, np.ndarray]:
    """Signal and idler wavelength axes around the resonance centres

    Parameters
    ----------
    triplet : Triplet

    span_linewidths : float (default: 5)
        Half span of each axis in units of the resonance linewidth, ≥ 3

    n : int (default: 512)
        Points per axis, a power of two ≥ 64

    Returns
    -------
    Tuple[numpy.ndarray, numpy.ndarray]
        Signal and idler axes (nm)

    """
    if not span_linewidths >= 3:
        raise ParameterError(f"span_linewidths={span_linewidths}: must be ≥ 3")
    if n < 64 or n & (n - 1):
        raise ParameterError(f"n={n}: must be a power of two ≥ 64")

    def axis(res: Resonance) -> np.ndarray:
        half = span_linewidths * res.fwhm
        return np.linspace(res.lambda0 - half, res.lambda0 + half, n)

    return axis(triplet.signal), axis(triplet.idler)


def _resolved(alpha: SpectralAmplitude, min_samples: int = 8) -> bool:
    power = alpha.power
    return np.count_nonzero(power >= power.max() / 2) >= min_samples


def pump_convolution(
    alpha: SpectralAmplitude,
    sigma: np.ndarray,
    pump: Optional[Resonance] = None,
) -> np.ndarray:
    """Ring-filtered pump self-convolution ``C`` at two-photon offsets

    Parameters
    ----------
    alpha : SpectralAmplitude

    sigma : numpy.ndarray
        Two-photon offsets ``Ω - 2ω_c`` (rad/ps), ``ω_c`` the pump centre

    pump : Optional[Resonance]
        Pump resonance; without it the pump is not resonantly enhanced

    Returns
    -------
    numpy.ndarray
        ``C(σ) = ∫ f(ν) f(σ - ν) dν`` with ``f = α L_p``, trapezoid rule on
        the pump grid; ``f(σ - ν)`` is linearly interpolated

    """
    nu = alpha.offsets
    f = alpha.amplitude
    if pump is not None:
        f = f * pole(pump.omega0 - float(omega(alpha.center)), pump.gamma, nu)
    shifted = np.subtract.outer(np.asarray(sigma, dtype=float), nu)
    kw = {"left": 0.0, "right": 0.0}
    interp = np.interp(shifted, nu, f.real, **kw) + 1j * np.interp(
        shifted, nu, f.imag, **kw
    )
    return trapezoid(interp * f, nu, axis=-1)


def compute_jsa(
    pump_alpha: SpectralAmplitude,
    triplet: Triplet,
    grid: Tuple[np.ndarray, np.ndarray],
    *,
    pump_enhancement: bool = True,
    workers: Optional[int] = None,
) -> JSAMatrix:
    """Joint spectral amplitude of the triplet for a pump envelope

    Rows (signal wavelengths) are evaluated independently on a thread pool.

    Parameters
    ----------
    pump_alpha : SpectralAmplitude
        Pump envelope, resolved on its own grid

    triplet : Triplet

    grid : Tuple[numpy.ndarray, numpy.ndarray]
        Signal and idler axes (nm), see :func:`build_grid`

    pump_enhancement : bool (default: True)
        Include the pump resonance factors ``L_p`` in the convolution

    workers : Optional[int]
        Thread count, default ``$RINGJSA_THREADS`` or the CPU count

    Returns
    -------
    JSAMatrix
        Unit-integral amplitude

    Raises
    ------
    ResolutionError
        A cw pump line that is not resolved on the pump grid

    """
    if pump_alpha.line == "cw" and not _resolved(pump_alpha):
        raise ResolutionError(
            "cw pump line not resolved on the pump grid; the Schmidt number of "
            "a narrow cw line comes from ringjsa.schmidt.purity_banded_cw"
        )
    mismatch = triplet.mismatch
    if abs(mismatch) > triplet.pump.gamma / 2:
        logger.warning(
            f"triplet energy mismatch {mismatch:.3g} rad/ps exceeds half the "
            "pump linewidth, pair generation is strongly suppressed"
        )
    signal, idler = map(np.asarray, grid)
    w_s, w_i = omega(signal), omega(idler)
    l_s = pole(triplet.signal.omega0, triplet.signal.gamma, w_s)
    l_i = pole(triplet.idler.omega0, triplet.idler.gamma, w_i)
    w_c2 = 2 * float(omega(pump_alpha.center))
    pump = triplet.pump if pump_enhancement else None

    def row(k: int) -> np.ndarray:
        conv = pump_convolution(pump_alpha, w_s[k] + w_i - w_c2, pump)
        return l_s[k] * l_i * conv

    amp = np.vstack(parallel_map(row, range(signal.size), workers))
    meta = {
        "triplet": triplet.to_dict(),
        "pump": pump_alpha.meta.get("pump", {"center": pump_alpha.center}),
        "pump_enhancement": pump_enhancement,
        "mismatch_rad_ps": mismatch,
    }
    jsa = JSAMatrix(signal, idler, amp, meta=meta)
    if not np.all(np.isfinite(amp)):
        raise NumericError("non-finite JSA entries")
    return jsa.normalized()


def narrow_line_jsa(
    triplet: Triplet, grid: Tuple[np.ndarray, np.ndarray], lambda_p: float
) -> JSAMatrix:
    """JSA of a pump line much narrower than the grid step

    The two-photon line is a delta at ``ω_s + ω_i = 2ω_p``: every row puts
    its energy on the idler cells next to ``2ω_p - ω_s``, shared linearly
    between the two neighbouring nodes, so that the row integral of the
    density is ``|L_s|² |L_i|²`` at the conjugate frequency.  The pump
    resonance factor is constant over such a line and drops out.

    Only good for densities and what is measured from them; the Schmidt
    decomposition of this matrix says nothing about the real state.

    """
    signal, idler = map(np.asarray, grid)
    w_s, w_i = omega(signal), omega(idler)
    l_s = pole(triplet.signal.omega0, triplet.signal.gamma, w_s)
    l_i = pole(triplet.idler.omega0, triplet.idler.gamma, w_i)
    step = np.abs(np.gradient(w_i))
    target = 2 * float(omega(lambda_p)) - w_s
    hat = np.clip(1 - np.abs(w_i[None, :] - target[:, None]) / step[None, :], 0, None)
    if not hat.any():
        raise NumericError(f"2ω_p - ω_s misses the idler axis for λ_p={lambda_p} nm")
    amp = l_s[:, None] * l_i[None, :] * np.sqrt(hat / step[None, :])
    meta = {
        "triplet": triplet.to_dict(),
        "pump": {"center": lambda_p, "line": "delta"},
        "pump_enhancement": False,
        "mismatch_rad_ps": triplet.mismatch,
    }
    return JSAMatrix(signal, idler, amp, meta=meta).normalized()


def jsd(jsa: JSAMatrix) -> xr.DataArray:
    """Joint spectral density ``|φ|²`` on the JSA axes"""
    return xr.DataArray(
        np.abs(jsa.amplitude) ** 2,
        coords={"signal": jsa.signal, "idler": jsa.idler},
        dims=("signal", "idler"),
        name="jsd",
        attrs={"norm": jsa.norm},
    )


def marginals(density: xr.DataArray) -> Tuple[xr.DataArray, xr.DataArray]:
    """Signal and idler spectra of a normalised JSD

    Each marginal is the JSD integrated over the other photon's angular
    frequency, so it integrates to one over its own.

    """
    ws = measure_weights(density["signal"].values)
    wi = measure_weights(density["idler"].values)
    signal = (density * xr.DataArray(wi, dims="idler")).sum("idler")
    idler = (density * xr.DataArray(ws, dims="signal")).sum("signal")
    return signal.rename("signal_spectrum"), idler.rename("idler_spectrum")


def energy_spread(jsa: JSAMatrix) -> Tuple[float, float]:
    """Mean and rms of ``ω_s + ω_i`` weighted by the JSD (rad/ps)"""
    dens = np.abs(jsa.amplitude) ** 2 * np.outer(jsa.signal_weights, jsa.idler_weights)
    total = np.add.outer(omega(jsa.signal), omega(jsa.idler))
    norm = dens.sum()
    mean = float((dens * total).sum() / norm)
    rms = float(np.sqrt((dens * (total - mean) ** 2).sum() / norm))
    return mean, rms


def heralded_purity(jsa: JSAMatrix) -> float:
    """Purity of the heralded photon, ``1/K``"""
    from ringjsa.schmidt import schmidt_decompose

    return schmidt_decompose(jsa, modes=False).purity


def save_jsa(jsa: JSAMatrix, fpath: _path_t, meta: Optional[Dict] = None):
    """Write the JSA as a CSV matrix with a JSON sidecar"""
    fpath = write_matrix(fpath, jsa.signal, jsa.idler, jsa.amplitude, _AXES)
    write_sidecar(fpath, {**jsa.meta, **(meta or {}), "norm": jsa.norm})
    return fpath


def load_jsa(fpath: _path_t) -> JSAMatrix:
    """Read a JSA written by :func:`save_jsa`"""
    names, signal, idler, amp = read_matrix(fpath)
    if names != _AXES:
        raise ParameterError(f"{fpath}: axes {names}, expected {_AXES}")
    meta = read_sidecar(fpath)
    norm = meta.pop("norm", "unnormalized")
    return JSAMatrix(signal, idler, amp, norm=norm, meta=meta)
