"""Schmidt decomposition and purity of photon pair states

- :func:`schmidt_decompose`: SVD of a sampled JSA, gives the Schmidt
  coefficients, modes and the Schmidt number ``K = 1/Σλ²``.
- :func:`purity_banded_cw`: cw pumping, where the pump line is orders of
  magnitude narrower than the resonances and a dense grid is out of reach;
  the reduced density matrix is banded and its purity is integrated
  directly.
- :func:`k_bound`: phase-blind estimate of ``K`` from a measured joint
  spectral density.

"""

from dataclasses import dataclass, field
from logging import getLogger
from typing import Dict, Optional

import numpy as np
from scipy.integrate import trapezoid
import xarray as xr

from ringjsa._types import _path_t
from ringjsa.errors import DataError, NumericError, ParameterError, RegimeError
from ringjsa.helpers import measure_weights, omega, parallel_map
from ringjsa.io import dwim_file
from ringjsa.jsa import JSAMatrix, Triplet
from ringjsa.pump import PumpSpec
from ringjsa.resonator import pole

logger = getLogger(__name__)

@dataclass(frozen=True)
class SchmidtSpectrum:
    """Schmidt coefficients, number and (optionally) modes

    Attributes
    ----------
    coefficients : numpy.ndarray
        Eigenvalues ``λ_n``, descending, summing to one; empty when ``K``
        was obtained from the purity alone

    k : float
        Schmidt number

    signal_modes, idler_modes : Optional[numpy.ndarray]
        Mode functions as columns, orthonormal under the grid measure

    """

    coefficients: np.ndarray
    k: float
    signal_modes: Optional[np.ndarray] = None
    idler_modes: Optional[np.ndarray] = None
    meta: Dict = field(default_factory=dict, compare=False)

    @property
    def purity(self) -> float:
        return 1 / self.k

    def to_dict(self, tol: float = 1e-6) -> Dict:
        """Serialisable form, coefficients kept up to a cumulative ``1 - tol``"""
        coeffs = self.coefficients
        if coeffs.size:
            keep = int(np.searchsorted(np.cumsum(coeffs), 1 - tol)) + 1
            coeffs = coeffs[:keep]
        return {
            "K": self.k,
            "purity": self.purity,
            "coefficients": coeffs.tolist(),
            **self.meta,
        }


def _svd_coefficients(matrix: np.ndarray, modes: bool = False):
    norm = np.linalg.norm(matrix)
    if not norm > 0:
        raise NumericError("cannot decompose an all-zero matrix")
    if modes:
        u, s, vh = np.linalg.svd(matrix / norm, full_matrices=False)
        return s**2, u, vh
    s = np.linalg.svd(matrix / norm, compute_uv=False)
    return s**2, None, None


def schmidt_decompose(jsa: JSAMatrix, modes: bool = True) -> SchmidtSpectrum:
    """Schmidt decomposition of a sampled JSA

    The amplitude matrix is scaled by ``√(Δω_s Δω_i)`` so the singular
    values are those of the continuous state; a global scale (or phase) of
    the amplitude does not change the result.

    Parameters
    ----------
    jsa : JSAMatrix

    modes : bool (default: True)
        Also return the Schmidt modes

    Returns
    -------
    SchmidtSpectrum

    Raises
    ------
    NumericError
        Non-finite entries, or an all-zero amplitude

    """
    amp = np.asarray(jsa.amplitude)
    if not np.all(np.isfinite(amp)):
        raise NumericError("JSA has non-finite entries")
    rs, ri = np.sqrt(jsa.signal_weights), np.sqrt(jsa.idler_weights)
    coeffs, u, vh = _svd_coefficients(amp * np.outer(rs, ri), modes)
    kwargs = {"meta": {"method": "svd", "shape": list(amp.shape)}}
    if modes:
        kwargs["signal_modes"] = u / rs[:, None]
        kwargs["idler_modes"] = vh.T / ri[:, None]
    spectrum = SchmidtSpectrum(coeffs, float(1 / np.sum(coeffs**2)), **kwargs)
    logger.debug(f"Schmidt number K={spectrum.k:.6g} from {amp.shape} grid")
    return spectrum


def k_bound(density, rtol: float = 1e-12) -> float:
    """Phase-blind Schmidt number estimate from a joint spectral density

    The Schmidt number of ``√JSD``: with the spectral phase unknown, the
    amplitude is taken real and non-negative.

    Parameters
    ----------
    density : Union[xarray.DataArray, MeasuredJSD, numpy.ndarray]
        Non-negative matrix; a labelled array or a :class:`MeasuredJSD`
        contributes the angular frequency measure of its wavelength axes,
        a bare matrix is taken on a uniform grid

    rtol : float (default: 1e-12)
        Negative entries down to ``-rtol × max`` are clamped to zero

    Raises
    ------
    DataError
        More negative entries, or a matrix without positive entries

    """
    weights = None
    if isinstance(density, xr.DataArray):
        rows, cols = (density[d].values for d in density.dims)
        weights = measure_weights(rows), measure_weights(cols)
        matrix = density.values
    elif hasattr(density, "counts"):
        weights = measure_weights(density.seed), measure_weights(density.idler)
        matrix = density.counts
    else:
        matrix = np.asarray(density)
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or not np.all(np.isfinite(matrix)):
        raise DataError("joint spectral density must be a finite matrix")
    peak = matrix.max()
    if not peak > 0:
        raise DataError("joint spectral density has no positive entry")
    if matrix.min() < -rtol * peak:
        raise DataError(f"negative density {matrix.min():.3g} (peak {peak:.3g})")
    amp = np.sqrt(np.clip(matrix, 0, None))
    if weights is not None:
        amp = amp * np.outer(np.sqrt(weights[0]), np.sqrt(weights[1]))
    coeffs, _, _ = _svd_coefficients(amp)
    return float(1 / np.sum(coeffs**2))


def _line(cw: PumpSpec, width: float):
    if cw.lineshape == "gaussian":
        return lambda u: np.exp(-2 * np.log(2) * (u / width) ** 2)
    return lambda u: pole(0.0, width, u)


def purity_banded_cw(
    triplet: Triplet,
    cw: PumpSpec,
    *,
    outer_nodes: int = 1024,
    inner_nodes: int = 129,
    outer_span: float = 5.0,
    inner_span: float = 8.0,
    workers: Optional[int] = None,
) -> float:
    """Schmidt number for a narrow cw pump line from the heralded purity

    With ``x`` and ``y`` the signal and idler offsets from their resonances,
    the pair amplitude is ``L_s(x) L_i(y) g(x + y + Δ)``, ``g`` the
    two-photon pump line ``α * α`` that :func:`ringjsa.jsa.compute_jsa`
    samples (power FWHM :attr:`~ringjsa.pump.PumpSpec.pair_bandwidth`), and
    ``Δ = ω_s0 + ω_i0 - 2ω_p`` the offset of the resonance pair from twice
    the pump frequency.  The reduced signal state

        ρ(x, x + δ) = L_s(x) L_s*(x + δ) ∫ |L_i(u - x - Δ)|² g(u) g*(u + δ) du

    only extends a few line widths off its diagonal, so ``P = Tr ρ²`` is
    integrated over ``x`` at resonance scale and over ``δ`` (and ``u``) at
    pump line scale; ``K = 1/P``.

    Parameters
    ----------
    triplet : Triplet

    cw : PumpSpec
        A "cw-line" pump

    outer_nodes : int (default: 1024)
        Nodes over ``±outer_span`` signal linewidths, at least 1024

    inner_nodes : int (default: 129)
        Nodes over ``±inner_span`` pump line widths, at least 128, made odd

    workers : Optional[int]
        Threads for the outer integral

    Returns
    -------
    float
        Schmidt number ``K``

    Raises
    ------
    RegimeError
        If the pump line is not narrower than 1/100 of the resonances

    """
    if not cw.is_cw:
        raise ParameterError(f"{cw.kind}: not a cw pump")
    width = cw.pair_bandwidth
    gamma_s, gamma_i = triplet.signal.gamma, triplet.idler.gamma
    if width > min(gamma_s, gamma_i) / 100:
        raise RegimeError(
            f"pump line ({width:.3g} rad/ps) is not narrower than 1/100 of the "
            "resonance linewidth; sample the JSA and use schmidt_decompose"
        )
    if outer_nodes < 1024 or inner_nodes < 128:
        raise ParameterError("need ≥ 1024 outer and ≥ 128 inner nodes")
    inner_nodes += 1 - inner_nodes % 2  # δ = 0 on the grid
    x = np.linspace(-outer_span * gamma_s, outer_span * gamma_s, outer_nodes)
    delta = np.linspace(-inner_span * width, inner_span * width, inner_nodes)
    u = delta.copy()
    g = _line(cw, width)
    kernel = g(u)[None, :] * np.conj(g(u[None, :] + delta[:, None]))  # (δ, u)
    kernel *= np.gradient(u)[None, :]
    pump_omega = float(omega(cw.lambda_p))
    offset = triplet.signal.omega0 + triplet.idler.omega0 - 2 * pump_omega
    l_s = lambda w: pole(0.0, gamma_s, w)  # noqa: E731
    idler_power = lambda w: np.abs(pole(0.0, gamma_i, w)) ** 2  # noqa: E731
    zero = inner_nodes // 2

    def block(xs: np.ndarray):
        # A(x, δ) = Σ_u kernel(δ, u) |L_i(u - x - Δ)|²
        a = kernel @ idler_power(u[:, None] - xs[None, :] - offset)  # (δ, x)
        ps = np.abs(l_s(xs)) ** 2
        ps_shift = np.abs(l_s(xs[None, :] + delta[:, None])) ** 2
        rho2 = trapezoid(ps[None, :] * ps_shift * np.abs(a) ** 2, delta, axis=0)
        diag = ps * a[zero].real
        return rho2, diag

    chunks = np.array_split(x, min(16, outer_nodes // 64))
    parts = parallel_map(block, chunks, workers)
    rho2 = np.concatenate([p[0] for p in parts])
    diag = np.concatenate([p[1] for p in parts])
    purity = trapezoid(rho2, x) / trapezoid(diag, x) ** 2
    if not (np.isfinite(purity) and purity > 0):
        raise NumericError(f"purity={purity}: quadrature failed")
    k = float(1 / purity)
    logger.info(f"cw Schmidt number K={k:.6g} (two-photon line {width:.3g} rad/ps)")
    return k


def analytic_cw_k(triplet: Triplet, cw: PumpSpec) -> float:
    """Leading order cw Schmidt number ``2Γ/(5w)``

    Valid for a Lorentzian two-photon line of angular FWHM ``w`` much narrower
    than equal signal and idler linewidths ``Γ``, and no energy mismatch.

    """
    width = cw.pair_bandwidth
    gamma = 2 / (1 / triplet.signal.gamma + 1 / triplet.idler.gamma)
    return 2 * gamma / (5 * width)


def save_schmidt(
    spectrum: SchmidtSpectrum, fpath: _path_t, meta: Optional[Dict] = None
):
    """Write the Schmidt number and leading coefficients as JSON"""
    dwim_file(fpath, {**spectrum.to_dict(), **(meta or {})})
    return fpath


def schmidt_from_purity(k: float, **meta) -> SchmidtSpectrum:
    """Spectrum carrying only a Schmidt number (no coefficients or modes)"""
    return SchmidtSpectrum(np.empty(0), k, meta={"method": "banded-purity", **meta})
