"""Collection of helper functions

Unit conversions between wavelength and angular frequency, a few array
checks, and the thread pool used for row/seed parallel work.

Units used throughout the package: wavelengths in nm, spectral widths given
by the user in pm, angular frequencies in rad/ps, lengths in µm, times in ps.

"""

from concurrent.futures import ThreadPoolExecutor
from logging import getLogger
import os
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

import numpy as np
from scipy import constants

from ringjsa.errors import ParameterError

logger = getLogger(__name__)

C_NM_PS = constants.c * 1e-3  # 299792.458 nm/ps
C_UM_PS = constants.c * 1e-6  # 299.792458 µm/ps

_in_t = TypeVar("_in_t")
_out_t = TypeVar("_out_t")


def omega(lambda_nm):
    """Angular frequency (rad/ps) of a vacuum wavelength (nm)"""
    return 2 * np.pi * C_NM_PS / np.asarray(lambda_nm, dtype=float)


def wavelength(omega_rad_ps):
    """Vacuum wavelength (nm) of an angular frequency (rad/ps)"""
    return 2 * np.pi * C_NM_PS / np.asarray(omega_rad_ps, dtype=float)


def pm_to_omega(width_pm, lambda_nm):
    """Convert a spectral width at ``lambda_nm`` from pm to rad/ps

    First order: Δω = 2πcΔλ/λ².

    """
    return 2 * np.pi * C_NM_PS * (np.asarray(width_pm) * 1e-3) / lambda_nm**2


def omega_to_pm(width_rad_ps, lambda_nm):
    """Inverse of :func:`pm_to_omega`"""
    return np.asarray(width_rad_ps) * lambda_nm**2 / (2 * np.pi * C_NM_PS) * 1e3


def check_finite(**params: float):
    """Raise :class:`ParameterError` naming the first non-finite parameter"""
    for name, value in params.items():
        if value is None or not np.all(np.isfinite(value)):
            raise ParameterError(f"{name}={value}: must be finite")


def strictly_increasing(arr: Sequence[float]) -> bool:
    return bool(np.all(np.diff(arr) > 0))


def measure_weights(axis_nm) -> np.ndarray:
    """Per-point angular frequency measure of a wavelength axis

    The weights are ``|dω|`` estimated with central differences (one sided at
    the ends); sums weighted by them approximate integrals over ω.

    """
    axis = np.asarray(axis_nm, dtype=float)
    if axis.size < 2:
        raise ParameterError("axis needs at least two points")
    return np.abs(np.gradient(omega(axis)))


def fwhm(x, y) -> float:
    """Full width at half maximum of a single peaked, sampled curve

    Crossings are located by linear interpolation between samples; returns
    ``nan`` when the curve does not fall below half its maximum on both
    sides.

    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    ipk = int(np.argmax(y))
    half = y[ipk] / 2
    below = np.flatnonzero(y[:ipk] < half)
    above = np.flatnonzero(y[ipk:] < half)
    if below.size == 0 or above.size == 0:
        return float("nan")
    i, j = below[-1], ipk + above[0]
    left = np.interp(half, [y[i], y[i + 1]], [x[i], x[i + 1]])
    right = np.interp(half, [y[j], y[j - 1]], [x[j], x[j - 1]])
    return float(right - left)


def max_workers() -> int:
    """Thread cap: ``$RINGJSA_THREADS`` or the number of CPUs"""
    env = os.environ.get("RINGJSA_THREADS", "")
    try:
        nthreads = int(env) if env else (os.cpu_count() or 1)
    except ValueError:
        logger.warning(f"RINGJSA_THREADS={env}: not an integer, ignored")
        nthreads = os.cpu_count() or 1
    return max(1, nthreads)


def parallel_map(
    fn: Callable[[_in_t], _out_t],
    items: Iterable[_in_t],
    workers: Optional[int] = None,
) -> List[_out_t]:
    """Map ``fn`` over ``items`` on a thread pool, results in input order

    With a single worker the map runs in the calling thread.

    """
    items = list(items)
    workers = max_workers() if workers is None else max(1, workers)
    if workers == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
